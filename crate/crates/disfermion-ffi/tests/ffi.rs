// SPDX-License-Identifier: MIT OR Apache-2.0

use std::ffi::{CStr, CString};
use std::ptr;

use disfermion_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(dsf_last_error()) }.to_string_lossy().into_owned()
}

fn domain(text: &str) -> *mut DsfDomain {
    let s = CString::new(text).unwrap();
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { dsf_domain_parse(s.as_ptr(), &mut d) }, DsfStatus::Ok);
    d
}

fn graph(d: *const DsfDomain) -> *mut DsfGraph {
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { dsf_graph_induce(d, &mut g) }, DsfStatus::Ok, "{}", last_error());
    g
}

#[test]
fn counts_with_sink() {
    unsafe {
        let mut d = ptr::null_mut();
        assert_eq!(dsf_domain_rect(0, 0, 2, 2, &mut d), DsfStatus::Ok);
        assert_eq!(dsf_domain_set_sink(d, 0, 0), DsfStatus::Ok);
        let mut len = 0;
        assert_eq!(dsf_domain_len(d, &mut len), DsfStatus::Ok);
        assert_eq!(len, 9);
        let g = graph(d);
        let (mut w, mut b, mut e) = (0, 0, 0);
        assert_eq!(dsf_graph_size(g, &mut w, &mut b, &mut e), DsfStatus::Ok);
        assert_eq!((w, b, e), (4, 4, 10));
        let mut n = 0;
        assert_eq!(dsf_graph_count_covers(g, &mut n), DsfStatus::Ok);
        assert_eq!(n, 4);
        assert_eq!(last_error(), "");
        dsf_graph_free(g);
        dsf_domain_free(d);
    }
}

#[test]
fn two_point_and_edges() {
    unsafe {
        let d = domain("rect(0,0,1,1)");
        let g = graph(d);
        let (mut re, mut im) = (f64::NAN, f64::NAN);
        assert_eq!(dsf_graph_two_point(g, 1, 0, 0, 0, &mut re, &mut im), DsfStatus::Ok);
        assert!((re + 0.5).abs() < 1e-14 && im.abs() < 1e-14);
        // Swapped roles: (0,0) is not white.
        assert_eq!(dsf_graph_two_point(g, 0, 0, 1, 0, &mut re, &mut im), DsfStatus::InvalidArgument);
        assert!(!last_error().is_empty());
        let mut p = 0.0;
        assert_eq!(dsf_graph_edge_probability(g, 0, 0, 1, 0, &mut p), DsfStatus::Ok);
        assert!((p - 0.5).abs() < 1e-14);
        assert_eq!(dsf_graph_edge_probability(g, 0, 0, 1, 1, &mut p), DsfStatus::InvalidArgument);
        dsf_graph_free(g);
        dsf_domain_free(d);
    }
}

#[test]
fn error_codes() {
    unsafe {
        let mut d = ptr::null_mut();
        let bad = CString::new("rect(0,0").unwrap();
        assert_eq!(dsf_domain_parse(bad.as_ptr(), &mut d), DsfStatus::ParseError);
        assert!(d.is_null());
        assert_eq!(dsf_domain_parse(ptr::null(), &mut d), DsfStatus::NullPointer);
        assert_eq!(dsf_domain_rect(2, 0, 0, 0, &mut d), DsfStatus::InvalidArgument);
        assert_eq!(dsf_graph_induce(ptr::null(), &mut ptr::null_mut()), DsfStatus::NullPointer);

        let odd = domain("rect(0,0,2,0)");
        let mut g = ptr::null_mut();
        assert_eq!(dsf_graph_induce(odd, &mut g), DsfStatus::NotDimerable);
        dsf_domain_free(odd);

        // 8×8 board: 12988816 covers fits; 16×16 does not fit in 64 bits.
        let big = domain("rect(0,0,15,15)");
        let g = graph(big);
        let mut n = 0;
        assert_eq!(dsf_graph_count_covers(g, &mut n), DsfStatus::Overflow);
        dsf_graph_free(g);
        dsf_domain_free(big);

        let small = domain("rect(0,0,7,7)");
        let g = graph(small);
        assert_eq!(dsf_graph_count_covers(g, &mut n), DsfStatus::Ok);
        assert_eq!(n, 12_988_816);
        assert_eq!(dsf_graph_count_covers(g, ptr::null_mut()), DsfStatus::NullPointer);
        dsf_graph_free(g);
        dsf_domain_free(small);

        // Freeing null is a no-op.
        dsf_domain_free(ptr::null_mut());
        dsf_graph_free(ptr::null_mut());
        dsf_family_free(ptr::null_mut());
    }
}

#[test]
fn monomial_family() {
    unsafe {
        let mut f = ptr::null_mut();
        assert_eq!(dsf_family_build(0, 4, &mut f), DsfStatus::OutOfRange);
        assert_eq!(dsf_family_build(8, 3, &mut f), DsfStatus::Ok, "{}", last_error());
        let (mut re, mut im) = (0.0, 0.0);
        // z^[0] = 1 and z^[1] = z/4 on blacks.
        assert_eq!(dsf_family_value(f, 0, 2, 0, &mut re, &mut im), DsfStatus::Ok);
        assert!((re - 1.0).abs() < 1e-12 && im.abs() < 1e-12);
        assert_eq!(dsf_family_value(f, 1, 1, 1, &mut re, &mut im), DsfStatus::Ok);
        assert!((re - 0.25).abs() < 1e-12 && (im - 0.25).abs() < 1e-12);
        assert_eq!(dsf_family_value(f, 1, 100, 0, &mut re, &mut im), DsfStatus::OutOfRange);
        assert_eq!(dsf_family_value(f, 9, 0, 0, &mut re, &mut im), DsfStatus::OutOfRange);
        let mut r = 0;
        assert_eq!(dsf_family_null_radius(f, 2, &mut r), DsfStatus::Ok);
        assert!(r >= 0);
        dsf_family_free(f);

        let missing = CString::new("/nonexistent/family.bin").unwrap();
        assert_eq!(dsf_family_load(missing.as_ptr(), &mut f), DsfStatus::InvalidArgument);
    }
}

#[test]
fn version_and_header() {
    let v = unsafe { CStr::from_ptr(dsf_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/disfermion.h")).unwrap();
    for name in ["DSF_STATUS_NOT_DIMERABLE", "typedef struct DsfGraph DsfGraph", "dsf_graph_count_covers", "dsf_family_value", "dsf_last_error"] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

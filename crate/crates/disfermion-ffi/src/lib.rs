// SPDX-License-Identifier: MIT OR Apache-2.0

//! C ABI over the core library.
//!
//! Objects are opaque heap handles created by `dsf_*_new`-style functions
//! and released with the matching `dsf_*_free`. Every fallible call returns a
//! [`DsfStatus`]; on failure a message is available from [`dsf_last_error`]
//! on the same thread. Panics are caught and reported as `INTERNAL`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use disfermion::correlators::FloatCoupling;
use disfermion::dimers::{DimerError, DimerGraph};
use disfermion::lattice::{pt, Domain, LatticeError};
use disfermion::monomials::{FamilySpec, MonomialError, MonomialFamily};
use num_traits::ToPrimitive;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DsfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NotDimerable = 3,
    OutOfRange = 4,
    ParseError = 5,
    Overflow = 6,
    Internal = 7,
}

/// A finite domain of Z², optionally with a sink.
pub struct DsfDomain(Domain);

/// The induced dimer graph of a domain, with a lazily factored Kasteleyn matrix.
pub struct DsfGraph {
    graph: DimerGraph,
    coupling: Option<FloatCoupling>,
}

/// A family of discrete monomials.
pub struct DsfMonomialFamily(MonomialFamily);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let s = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = s);
}

struct Fail(DsfStatus, String);

impl From<LatticeError> for Fail {
    fn from(e: LatticeError) -> Self {
        let code = match e {
            LatticeError::Parse(_) => DsfStatus::ParseError,
            _ => DsfStatus::InvalidArgument,
        };
        Fail(code, e.to_string())
    }
}

impl From<DimerError> for Fail {
    fn from(e: DimerError) -> Self {
        let code = match e {
            DimerError::Unbalanced { .. } | DimerError::NoCover => DsfStatus::NotDimerable,
            DimerError::TooLarge { .. } => DsfStatus::OutOfRange,
            DimerError::Lattice(l) => return l.into(),
            _ => DsfStatus::InvalidArgument,
        };
        Fail(code, e.to_string())
    }
}

impl From<MonomialError> for Fail {
    fn from(e: MonomialError) -> Self {
        let code = match e {
            MonomialError::OutOfRange { .. } => DsfStatus::OutOfRange,
            MonomialError::Format(_) => DsfStatus::ParseError,
            _ => DsfStatus::InvalidArgument,
        };
        Fail(code, e.to_string())
    }
}

fn fail<T>(code: DsfStatus, msg: impl Into<String>) -> Result<T, Fail> {
    Err(Fail(code, msg.into()))
}

/// Runs `f`, mapping errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> DsfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            DsfStatus::Ok
        }
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            DsfStatus::Internal
        }
    }
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, Fail> {
    p.as_ref().map_or_else(|| fail(DsfStatus::NullPointer, "null handle"), Ok)
}

unsafe fn write<T>(out: *mut T, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return fail(DsfStatus::NullPointer, "null output pointer");
    }
    out.write(v);
    Ok(())
}

unsafe fn c_str<'a>(s: *const c_char) -> Result<&'a str, Fail> {
    if s.is_null() {
        return fail(DsfStatus::NullPointer, "null string");
    }
    CStr::from_ptr(s).to_str().map_or_else(|_| fail(DsfStatus::ParseError, "string is not UTF-8"), Ok)
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn dsf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dsf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// ---------------------------------------------------------------------------
// Domains

/// The rectangle [x0, x1] × [y0, y1].
///
/// # Safety
/// `out` must be null or valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn dsf_domain_rect(x0: i64, y0: i64, x1: i64, y1: i64, out: *mut *mut DsfDomain) -> DsfStatus {
    guard(|| {
        if x1 < x0 || y1 < y0 {
            return fail(DsfStatus::InvalidArgument, "empty rectangle");
        }
        if (x1 - x0).saturating_add(1).saturating_mul((y1 - y0).saturating_add(1)) > 1 << 24 {
            return fail(DsfStatus::OutOfRange, "rectangle too large");
        }
        write(out, Box::into_raw(Box::new(DsfDomain(Domain::rect(x0, y0, x1, y1)))))
    })
}

/// A domain from `rect(x0,y0,x1,y1)` or a JSON domain description.
///
/// # Safety
/// `text` must be null or a NUL-terminated string; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn dsf_domain_parse(text: *const c_char, out: *mut *mut DsfDomain) -> DsfStatus {
    guard(|| {
        let d = Domain::parse(c_str(text)?)?;
        write(out, Box::into_raw(Box::new(DsfDomain(d))))
    })
}

/// Removes the vertex (x, y) as the sink, replacing any previous sink.
///
/// # Safety
/// `d` must be null or a live domain handle.
#[no_mangle]
pub unsafe extern "C" fn dsf_domain_set_sink(d: *mut DsfDomain, x: i64, y: i64) -> DsfStatus {
    guard(|| {
        let d = d.as_mut().map_or_else(|| fail(DsfStatus::NullPointer, "null handle"), Ok)?;
        d.0 = d.0.clone().without_sink().with_sink(pt(x, y))?;
        Ok(())
    })
}

/// Number of vertices, the sink included.
///
/// # Safety
/// `d` null or live; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn dsf_domain_len(d: *const DsfDomain, out: *mut usize) -> DsfStatus {
    guard(|| write(out, deref(d)?.0.len()))
}

/// # Safety
/// `d` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dsf_domain_free(d: *mut DsfDomain) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

// ---------------------------------------------------------------------------
// Graphs

/// The induced dimer graph; fails with `NOT_DIMERABLE` when colours are
/// unbalanced.
///
/// # Safety
/// `d` null or live; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn dsf_graph_induce(d: *const DsfDomain, out: *mut *mut DsfGraph) -> DsfStatus {
    guard(|| {
        let g = DimerGraph::induce(&deref(d)?.0)?;
        write(out, Box::into_raw(Box::new(DsfGraph { graph: g, coupling: None })))
    })
}

/// Numbers of whites, blacks and edges.
///
/// # Safety
/// `g` null or live; outputs null or writable.
#[no_mangle]
pub unsafe extern "C" fn dsf_graph_size(g: *const DsfGraph, whites: *mut usize, blacks: *mut usize, edges: *mut usize) -> DsfStatus {
    guard(|| {
        let g = &deref(g)?.graph;
        write(whites, g.n_whites())?;
        write(blacks, g.n_blacks())?;
        write(edges, g.n_edges())
    })
}

/// Number of dimer covers, |det K|; `OVERFLOW` beyond 2⁶⁴ − 1.
///
/// # Safety
/// `g` null or live; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn dsf_graph_count_covers(g: *const DsfGraph, out: *mut u64) -> DsfStatus {
    guard(|| {
        let n = deref(g)?.graph.count_covers();
        match n.to_u64() {
            Some(v) => write(out, v),
            None => fail(DsfStatus::Overflow, format!("{n} covers do not fit in 64 bits")),
        }
    })
}

fn coupling(g: &mut DsfGraph) -> Result<&FloatCoupling, Fail> {
    if g.coupling.is_none() {
        g.coupling = Some(FloatCoupling::new(&g.graph)?);
    }
    Ok(g.coupling.as_ref().expect("just set"))
}

/// E[η(w)ξ(b)] = conj K⁻¹(w, b) in double precision.
///
/// # Safety
/// `g` null or live; outputs null or writable.
#[no_mangle]
pub unsafe extern "C" fn dsf_graph_two_point(g: *mut DsfGraph, wx: i64, wy: i64, bx: i64, by: i64, re: *mut f64, im: *mut f64) -> DsfStatus {
    guard(|| {
        let g = g.as_mut().map_or_else(|| fail(DsfStatus::NullPointer, "null handle"), Ok)?;
        let (w, b) = (pt(wx, wy), pt(bx, by));
        let Some(v) = coupling(g)?.two_point(w, b) else {
            return fail(DsfStatus::InvalidArgument, format!("{w} must be a white and {b} a black of the graph"));
        };
        write(re, v.re)?;
        write(im, v.im)
    })
}

/// Probability that the edge between two adjacent vertices is covered.
///
/// # Safety
/// `g` null or live; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn dsf_graph_edge_probability(g: *mut DsfGraph, ax: i64, ay: i64, bx: i64, by: i64, out: *mut f64) -> DsfStatus {
    guard(|| {
        let g = g.as_mut().map_or_else(|| fail(DsfStatus::NullPointer, "null handle"), Ok)?;
        let e = g.graph.edge_of(pt(ax, ay), pt(bx, by))?;
        let p = coupling(g)?.edge_probability(e);
        write(out, p)
    })
}

/// # Safety
/// `g` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dsf_graph_free(g: *mut DsfGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

// ---------------------------------------------------------------------------
// Monomial families

/// Builds z^[n] for |n| ≤ n_max on the ball of radius r_max.
///
/// # Safety
/// `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn dsf_family_build(r_max: i64, n_max: i32, out: *mut *mut DsfMonomialFamily) -> DsfStatus {
    guard(|| {
        if !(1..=256).contains(&r_max) || !(1..=64).contains(&n_max) {
            return fail(DsfStatus::OutOfRange, "need 1 <= r_max <= 256 and 1 <= n_max <= 64");
        }
        let f = MonomialFamily::build(FamilySpec { r_max, n_max })?;
        write(out, Box::into_raw(Box::new(DsfMonomialFamily(f))))
    })
}

/// Loads a family saved by the CLI or the library.
///
/// # Safety
/// `path` null or NUL-terminated; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn dsf_family_load(path: *const c_char, out: *mut *mut DsfMonomialFamily) -> DsfStatus {
    guard(|| {
        let f = MonomialFamily::load(Path::new(c_str(path)?))?;
        write(out, Box::into_raw(Box::new(DsfMonomialFamily(f))))
    })
}

/// z^[n](x, y) in double precision.
///
/// # Safety
/// `f` null or live; outputs null or writable.
#[no_mangle]
pub unsafe extern "C" fn dsf_family_value(f: *const DsfMonomialFamily, n: i32, x: i64, y: i64, re: *mut f64, im: *mut f64) -> DsfStatus {
    guard(|| {
        let v = deref(f)?.0.get_f64(n, pt(x, y))?;
        write(re, v.re)?;
        write(im, v.im)
    })
}

/// Null radius r₀(n) for n ≥ 0 (−1 when z^[n](0) ≠ 0).
///
/// # Safety
/// `f` null or live; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn dsf_family_null_radius(f: *const DsfMonomialFamily, n: i32, out: *mut i64) -> DsfStatus {
    guard(|| match deref(f)?.0.null_radius(n) {
        Some(r) => write(out, r),
        None => fail(DsfStatus::OutOfRange, format!("no null radius for n = {n}")),
    })
}

/// # Safety
/// `f` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dsf_family_free(f: *mut DsfMonomialFamily) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

// SPDX-License-Identifier: MIT OR Apache-2.0

use std::sync::{Arc, OnceLock};

use disfermion::correlators::CouplingTable;
use disfermion::dimers::DimerGraph;
use disfermion::exact::{qi, QI};
use disfermion::fields::{fixture_fields, LocalField, ProbeSuite};
use disfermion::grassmann::FermionAction;
use disfermion::greens::potential_kernel;
use disfermion::lattice::{pt, Color, Domain, DualContour, LatticePoint};
use disfermion::monomials::{FamilySpec, MonomialFamily};
use disfermion::C64;
use num_traits::Zero;
use proptest::prelude::*;

fn three_sink() -> DimerGraph {
    DimerGraph::induce(&Domain::rect(0, 0, 2, 2).with_sink(pt(0, 0)).unwrap()).unwrap()
}

fn four() -> DimerGraph {
    DimerGraph::induce(&Domain::rect(0, 0, 3, 3)).unwrap()
}

fn family() -> Arc<MonomialFamily> {
    static F: OnceLock<Arc<MonomialFamily>> = OnceLock::new();
    Arc::clone(F.get_or_init(|| Arc::new(MonomialFamily::build(FamilySpec { r_max: 24, n_max: 8 }).unwrap())))
}

fn small_point() -> impl Strategy<Value = LatticePoint> {
    (-3i64..=3, -3i64..=3).prop_map(|(x, y)| pt(x, y))
}

/// Two or three distinct (white, black) pairs of `g`, by index.
fn pairs_of(g: &DimerGraph) -> impl Strategy<Value = Vec<(LatticePoint, LatticePoint)>> {
    let ws = g.whites().to_vec();
    let bs = g.blacks().to_vec();
    let n = ws.len();
    (2usize..=3.min(n))
        .prop_flat_map(move |k| (Just(k), Just(ws.clone()), Just(bs.clone()), prop::sample::subsequence((0..n).collect::<Vec<_>>(), k), prop::sample::subsequence((0..n).collect::<Vec<_>>(), k).prop_shuffle()))
        .prop_map(|(_, ws, bs, wi, bi)| wi.into_iter().zip(bi).map(|(a, b)| (ws[a], bs[b])).collect())
}

fn field_expr() -> impl Strategy<Value = String> {
    // Generators must sit on the colour they are defined on.
    let factor = (0usize..3, -2i64..=2, -2i64..=2).prop_map(|(g, x, y)| {
        let white = (x + y).rem_euclid(2) == 1;
        let name = match (g, white) {
            (0, _) => "phi",
            (1, true) => "eta",
            (2, true) => "chip",
            (_, true) => "chim",
            (_, false) => "xi",
        };
        format!("{name}({x},{y})")
    });
    let mono = prop::collection::vec(factor, 1..=2).prop_map(|v| {
        let v = if v.len() % 2 == 1 { [v.clone(), v[..1].to_vec()].concat() } else { v };
        v.join("*")
    });
    let coeff = prop_oneof![Just("1".to_string()), Just("-2".to_string()), Just("i".to_string()), Just("3/4".to_string())];
    prop::collection::vec((coeff, mono), 1..=3).prop_map(|ts| ts.into_iter().map(|(c, m)| format!("{c}*{m}")).collect::<Vec<_>>().join(" + "))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn point_roundtrip(x in -1000i64..1000, y in -1000i64..1000) {
        let p = pt(x, y);
        prop_assert_eq!(LatticePoint::parse(&p.to_string()).unwrap(), p);
    }

    #[test]
    fn colours_under_translation(p in small_point()) {
        // Even translations keep the colour; (1,1) swaps the black classes.
        prop_assert_eq!(pt(p.x + 2, p.y).color(), p.color());
        let swapped = match p.color() {
            Color::White => Color::White,
            Color::EvenBlack => Color::OddBlack,
            Color::OddBlack => Color::EvenBlack,
        };
        prop_assert_eq!(pt(p.x + 1, p.y + 1).color(), swapped);
        prop_assert_eq!(pt(p.x + 1, p.y).is_white(), !p.is_white());
    }

    #[test]
    fn wick_is_antisymmetric_in_blacks(pairs in pairs_of(&three_sink())) {
        let t = CouplingTable::exact(&three_sink()).unwrap();
        let mut swapped = pairs.clone();
        let (b0, b1) = (swapped[0].1, swapped[1].1);
        swapped[0].1 = b1;
        swapped[1].1 = b0;
        prop_assert_eq!(t.multipoint(&pairs), -t.multipoint(&swapped));
    }

    #[test]
    fn berezin_matches_wick(pairs in pairs_of(&four())) {
        let g = four();
        let a = FermionAction::new(&g).unwrap();
        let t = CouplingTable::exact(&g).unwrap();
        prop_assert_eq!(a.pair_correlator(&pairs).unwrap(), t.multipoint(&pairs));
    }

    #[test]
    fn field_display_roundtrip(expr in field_expr()) {
        let f = LocalField::parse(&expr).unwrap();
        let again = LocalField::parse(&f.to_string()).unwrap();
        prop_assert_eq!(&again, &f);
        prop_assert!(f.sub(&again).is_zero());
    }

    #[test]
    fn kernel_symmetries(x in -8i64..=8, y in -8i64..=8) {
        let z = pt(x, y);
        let g = potential_kernel(z);
        prop_assert_eq!(&potential_kernel(z.rot90()), &g);
        prop_assert_eq!(&potential_kernel(z.conj()), &g);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn monomial_pairing(n in -4i32..=4, m in -4i32..=4, h in 6i64..=10) {
        let fam = family();
        let (v, scale) = fam.pairing_f64(&DualContour::rect(h, h), n, m).unwrap();
        let target = if n + m + 1 == 0 { C64::new(0.0, 2.0 * std::f64::consts::PI) } else { C64::zero() };
        prop_assert!((v - target).norm() <= 1e-10 * scale.max(1.0), "{} vs {}", v, target);
    }

    #[test]
    fn monomial_scaling_covariance(k in 0i32..=5, p in small_point()) {
        // z^[k](i·z) = i^k z^[k](z) on the black sublattice.
        let fam = family();
        prop_assume!(p.is_black());
        let a = fam.get_f64(k, p.rot90()).unwrap();
        let b = fam.get_f64(k, p).unwrap() * C64::new(0.0, 1.0).powi(k);
        prop_assert!((a - b).norm() < 1e-9, "{} vs {}", a, b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn nullity_is_scale_invariant(idx in 0usize..5, re in -3i64..=3, im in 1i64..=3) {
        let (_, f) = fixture_fields().swap_remove(idx);
        let suite = ProbeSuite::quick(f.support_radius() + 4).unwrap();
        let a = suite.null_report(&f.to_field(), 1e-9);
        let scaled = f.scale(&qi(re, im));
        let b = suite.null_report(&scaled.to_field(), 1e-9);
        prop_assert_eq!(a.verdict, b.verdict);
        let zero = f.sub(&f);
        prop_assert!(suite.null_report(&zero.to_field(), 1e-9).is_null());
        prop_assert_eq!(f.scale(&QI::zero()), LocalField::zero());
    }
}

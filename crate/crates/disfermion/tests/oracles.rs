// SPDX-License-Identifier: MIT OR Apache-2.0

// Independent oracles, written without the library's algorithms, against
// which library values are checked and then frozen.

use std::collections::{BTreeSet, HashMap};
use std::f64::consts::PI;

use disfermion::dimers::DimerGraph;
use disfermion::greens::potential_kernel;
use disfermion::lattice::{pt, Domain, LatticePoint};
use num_bigint::BigInt;
use proptest::prelude::*;

/// Perfect matchings of the induced Z² graph on `pts`: match the lowest
/// vertex (y, x order) to its right or upper neighbour, memoised on the set
/// of vertices still free.
fn matchings(pts: &[LatticePoint]) -> u64 {
    let order: Vec<LatticePoint> = {
        let s: BTreeSet<(i64, i64)> = pts.iter().map(|p| (p.y, p.x)).collect();
        s.into_iter().map(|(y, x)| pt(x, y)).collect()
    };
    assert!(order.len() <= 64);
    let idx: HashMap<LatticePoint, usize> = order.iter().enumerate().map(|(i, p)| (*p, i)).collect();
    fn go(free: u64, order: &[LatticePoint], idx: &HashMap<LatticePoint, usize>, memo: &mut HashMap<u64, u64>) -> u64 {
        if free == 0 {
            return 1;
        }
        if let Some(v) = memo.get(&free) {
            return *v;
        }
        let i = free.trailing_zeros() as usize;
        let p = order[i];
        let mut total = 0;
        for q in [pt(p.x + 1, p.y), pt(p.x, p.y + 1)] {
            if let Some(&j) = idx.get(&q) {
                if free >> j & 1 == 1 {
                    total += go(free & !(1 << i) & !(1 << j), order, idx, memo);
                }
            }
        }
        memo.insert(free, total);
        total
    }
    let full = if order.len() == 64 { u64::MAX } else { (1u64 << order.len()) - 1 };
    go(full, &order, &idx, &mut HashMap::new())
}

fn covers(d: &Domain) -> BigInt {
    DimerGraph::induce_unchecked(d).count_covers()
}

#[test]
fn frozen_cover_counts() {
    // Values from the independent matcher, frozen.
    let cases: [(Domain, u64); 6] = [
        (Domain::rect(0, 0, 3, 3), 36),
        (Domain::rect(0, 0, 5, 5), 6728),
        (Domain::rect(0, 0, 7, 7), 12_988_816),
        (Domain::rect(0, 0, 2, 2).with_sink(pt(0, 0)).unwrap(), 4),
        (Domain::rect(0, 0, 4, 4).with_sink(pt(0, 0)).unwrap(), 192),
        (Domain::rect(0, 0, 9, 1), 89),
    ];
    for (d, n) in cases {
        let active: Vec<LatticePoint> = d.active_vertices().collect();
        assert_eq!(matchings(&active), n);
        assert_eq!(covers(&d), BigInt::from(n));
    }
}

/// Rows y = 0..k, each an interval overlapping the previous one, so the
/// region is connected and has no holes.
fn region() -> impl Strategy<Value = Vec<LatticePoint>> {
    prop::collection::vec((0i64..5, 0i64..5), 1..6).prop_map(|rows| {
        let mut pts = Vec::new();
        let mut prev: Option<(i64, i64)> = None;
        for (y, (a, len)) in rows.into_iter().enumerate() {
            let (mut lo, mut hi) = (a, a + len);
            if let Some((pl, ph)) = prev {
                if hi < pl {
                    hi = pl;
                }
                if lo > ph {
                    lo = ph;
                }
            }
            for x in lo..=hi {
                pts.push(pt(x, y as i64));
            }
            prev = Some((lo, hi));
        }
        pts
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn determinant_counts_matchings(pts in region()) {
        let d = Domain::new(pts.iter().copied(), None).unwrap();
        prop_assert_eq!(covers(&d), BigInt::from(matchings(&pts)));
    }

    #[test]
    fn determinant_counts_matchings_shifted(pts in region(), dx in -3i64..3, dy in -3i64..3) {
        // Translating by an odd vector swaps colours; the count must not care.
        let moved: Vec<LatticePoint> = pts.iter().map(|p| pt(p.x + dx, p.y + dy)).collect();
        let d = Domain::new(moved.iter().copied(), None).unwrap();
        prop_assert_eq!(covers(&d), BigInt::from(matchings(&pts)));
    }
}

/// a(x, y) = (1/π) ∫_{−π}^{π} (1 − cos(xθ) e^{−|y|t}) / sinh t dθ with
/// cosh t = 2 − cos θ (the θ₂ integral of the Fourier representation done
/// in closed form); the classical potential kernel, a(1, 0) = 1.
fn kernel_quadrature(x: i64, y: i64) -> f64 {
    let n = 200_000;
    let h = 2.0 * PI / n as f64;
    let mut s = 0.0;
    for k in 0..n {
        let th = -PI + (k as f64 + 0.5) * h;
        let t = (2.0 - th.cos()).acosh();
        s += (1.0 - (x as f64 * th).cos() * (-(y.abs() as f64) * t).exp()) / t.sinh();
    }
    s * h / PI
}

#[test]
fn potential_kernel_against_quadrature() {
    for (x, y) in [(1, 0), (1, 1), (2, 0), (2, 1), (3, 2), (0, 5), (4, -3)] {
        let exact = potential_kernel(pt(x, y)).to_f64();
        let a = kernel_quadrature(x, y);
        assert!((exact + a / 4.0).abs() < 1e-6, "z = ({x},{y}): {exact} vs {}", -a / 4.0);
    }
}

// SPDX-License-Identifier: MIT OR Apache-2.0

//! Green's functions on the two black sublattices and the full-plane kernel.
//!
//! A temperleyan domain V with sink ŝ splits its blacks into the even graph
//! G_• (Dirichlet at ŝ) and the odd graph G_★ (Dirichlet on the odd points
//! just outside V). Both are joined at step 2 through a white of V. The
//! two-point function of the dimer graph V ∖ {ŝ} is a discrete derivative of
//! these Green's functions; as V grows it converges to the same derivative of
//! the full-plane kernel G, which lives here as exact values in ℚ + ℚ/π.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::correlators::{CouplingTable, FloatCoupling};
use crate::dimers::{DimerError, DimerGraph};
use crate::exact::{q, q_frac, q_to_f64, qi_from_q, PiPoly, QPi, C64, Q, QI};
use crate::lattice::{pt, Color, Domain, LatticeError, LatticePoint, STEPS};
use crate::linalg::{bareiss_det, solve_exact, BandedLu, LinalgError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GreenError {
    #[error("the domain has no sink")]
    NoSink,
    #[error("{0:?} is not a vertex of the graph")]
    NotInGraph(LatticePoint),
    #[error("{0:?} is not a white vertex of the domain")]
    NotWhite(LatticePoint),
    #[error("{0:?} is not black")]
    NotBlack(LatticePoint),
    #[error("{0:?} is adjacent to the sink")]
    AdjacentToSink(LatticePoint),
    #[error("black neighbour {0:?} of the white lies outside the domain")]
    MissingNeighbour(LatticePoint),
    #[error("{point:?} is outside the cached radius {radius}")]
    OutOfRange { point: LatticePoint, radius: i64 },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Dimer(#[from] DimerError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Sublattice {
    Even,
    Odd,
}

impl Sublattice {
    pub fn of(p: LatticePoint) -> Option<Self> {
        match p.color() {
            Color::EvenBlack => Some(Sublattice::Even),
            Color::OddBlack => Some(Sublattice::Odd),
            Color::White => None,
        }
    }
}

/// The four black neighbours of a white w, as (b₁, b₂, b₁*, b₂*).
///
/// b₁ − b₂ = 2s for the even step s, and b₁* − b₂* = −i(b₁ − b₂).
pub fn white_neighbours(w: LatticePoint) -> (LatticePoint, LatticePoint, LatticePoint, LatticePoint) {
    let s = if (w + STEPS[0]).color() == Color::EvenBlack { STEPS[0] } else { STEPS[1] };
    let is = s.rot90();
    (w + s, w - s, w - is, w + is)
}

/// G_• or G_★: interior vertices, a Dirichlet set and step-2 edges.
#[derive(Clone, Debug)]
pub struct SublatticeGraph {
    kind: Sublattice,
    interior: Vec<LatticePoint>,
    boundary: Vec<LatticePoint>,
    index: HashMap<LatticePoint, usize>,
    adj: Vec<Vec<LatticePoint>>,
}

impl SublatticeGraph {
    /// G_• on the even blacks of V, Dirichlet at the sink.
    pub fn even(d: &Domain) -> Result<Self, GreenError> {
        let sink = d.sink().ok_or(GreenError::NoSink)?;
        let interior: Vec<_> = d
            .vertices()
            .iter()
            .copied()
            .filter(|p| p.color() == Color::EvenBlack && *p != sink)
            .collect();
        Ok(Self::assemble(d, Sublattice::Even, interior, vec![sink]))
    }

    /// G_★ on the odd blacks of V, Dirichlet on ∂V_★.
    pub fn odd(d: &Domain) -> Self {
        let interior: Vec<_> = d.vertices().iter().copied().filter(|p| p.color() == Color::OddBlack).collect();
        let mut boundary: Vec<_> = d
            .vertices()
            .iter()
            .flat_map(|p| p.neighbors())
            .filter(|p| p.color() == Color::OddBlack && !d.contains(*p))
            .collect();
        boundary.sort_by_key(|p| (p.y, p.x));
        boundary.dedup();
        Self::assemble(d, Sublattice::Odd, interior, boundary)
    }

    fn assemble(d: &Domain, kind: Sublattice, interior: Vec<LatticePoint>, boundary: Vec<LatticePoint>) -> Self {
        let index: HashMap<_, _> = interior.iter().enumerate().map(|(i, p)| (*p, i)).collect();
        let on_graph = |p: LatticePoint| index.contains_key(&p) || boundary.contains(&p);
        // Two blacks are joined when the white between them belongs to V.
        let adj = interior
            .iter()
            .map(|&v| {
                STEPS
                    .iter()
                    .filter(|&&s| d.contains(v + s) && on_graph(v + s + s))
                    .map(|&s| v + s + s)
                    .collect()
            })
            .collect();
        Self { kind, interior, boundary, index, adj }
    }

    pub fn kind(&self) -> Sublattice {
        self.kind
    }

    pub fn interior(&self) -> &[LatticePoint] {
        &self.interior
    }

    pub fn boundary(&self) -> &[LatticePoint] {
        &self.boundary
    }

    pub fn is_interior(&self, p: LatticePoint) -> bool {
        self.index.contains_key(&p)
    }

    pub fn contains(&self, p: LatticePoint) -> bool {
        self.is_interior(p) || self.boundary.contains(&p)
    }

    /// Graph neighbours of an interior vertex.
    pub fn neighbours(&self, v: LatticePoint) -> Option<&[LatticePoint]> {
        self.index.get(&v).map(|&i| self.adj[i].as_slice())
    }

    pub fn n_edges(&self) -> usize {
        // Interior–interior edges are seen twice, interior–boundary once.
        let twice: usize = self.adj.iter().flatten().filter(|p| self.is_interior(**p)).count();
        let once: usize = self.adj.iter().flatten().filter(|p| !self.is_interior(**p)).count();
        twice / 2 + once
    }

    /// Δf(v) = Σ_{u ∼ v} (f(u) − f(v)).
    pub fn laplacian<T, F>(&self, f: F, v: LatticePoint) -> Option<T>
    where
        T: Clone + Zero + std::ops::Sub<Output = T>,
        F: Fn(LatticePoint) -> T,
    {
        let fv = f(v);
        Some(self.neighbours(v)?.iter().fold(T::zero(), |acc, &u| acc + (f(u) - fv.clone())))
    }

    /// −Δ restricted to the interior, as (row, col, value) triplets.
    fn minus_laplacian(&self) -> Vec<(usize, usize, i64)> {
        let mut trip = Vec::new();
        for (i, nb) in self.adj.iter().enumerate() {
            trip.push((i, i, nb.len() as i64));
            for p in nb {
                if let Some(&j) = self.index.get(p) {
                    trip.push((i, j, -1));
                }
            }
        }
        trip
    }

    /// Exact Green's functions with Δf = −δ_{b₀} inside and f = 0 on the boundary.
    pub fn green_exact(&self, sources: &[LatticePoint]) -> Result<Vec<GreenFunction<Q>>, GreenError> {
        let n = self.interior.len();
        let mut a = vec![vec![QI::zero(); n]; n];
        for (i, j, v) in self.minus_laplacian() {
            a[i][j] += qi_from_q(q(v));
        }
        let mut rhs = Vec::new();
        for s in sources {
            let i = *self.index.get(s).ok_or(GreenError::NotInGraph(*s))?;
            let mut e = vec![QI::zero(); n];
            e[i] = QI::one();
            rhs.push(e);
        }
        let cols = solve_exact(&a, &rhs)?;
        Ok(sources
            .iter()
            .zip(cols)
            .map(|(s, col)| self.package(*s, col.into_iter().map(|z| z.re).collect()))
            .collect())
    }

    /// Float Green's functions from one banded factorisation.
    pub fn green_float(&self, sources: &[LatticePoint]) -> Result<Vec<GreenFunction<f64>>, GreenError> {
        let n = self.interior.len();
        let trip = self.minus_laplacian().into_iter().map(|(i, j, v)| (i, j, C64::new(v as f64, 0.0)));
        let lu = BandedLu::factor(n, trip)?;
        sources
            .iter()
            .map(|s| {
                let i = *self.index.get(s).ok_or(GreenError::NotInGraph(*s))?;
                let mut e = vec![C64::zero(); n];
                e[i] = C64::one();
                lu.solve_in_place(&mut e);
                Ok(self.package(*s, e.into_iter().map(|z| z.re).collect()))
            })
            .collect()
    }

    fn package<T: Zero + Clone>(&self, source: LatticePoint, col: Vec<T>) -> GreenFunction<T> {
        let mut values: HashMap<_, _> = self.interior.iter().copied().zip(col).collect();
        for b in &self.boundary {
            values.insert(*b, T::zero());
        }
        GreenFunction { source, values }
    }

    /// det(−Δ) on the interior: rooted spanning trees (matrix–tree theorem).
    pub fn spanning_tree_count(&self) -> BigInt {
        let n = self.interior.len();
        let mut m = vec![vec![BigInt::zero(); n]; n];
        for (i, j, v) in self.minus_laplacian() {
            m[i][j] += BigInt::from(v);
        }
        bareiss_det(m)
    }
}

/// A Green's function f = G(b₀, ·) on interior ∪ boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct GreenFunction<T> {
    pub source: LatticePoint,
    pub values: HashMap<LatticePoint, T>,
}

impl<T: Clone + Zero> GreenFunction<T> {
    pub fn get(&self, p: LatticePoint) -> Option<T> {
        self.values.get(&p).cloned()
    }

    /// The zero function, used for sources on a Dirichlet boundary.
    pub fn vanishing(source: LatticePoint) -> Self {
        Self { source, values: HashMap::new() }
    }

    /// Value, with zero off the graph.
    pub fn at(&self, p: LatticePoint) -> T {
        self.get(p).unwrap_or_else(T::zero)
    }
}

/// Outcome of an exact identity checked over a set of points.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IdentityReport {
    pub checked: usize,
    pub violations: Vec<IdentityViolation>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdentityViolation {
    pub at: LatticePoint,
    pub lhs: PiPoly,
    pub rhs: PiPoly,
}

impl IdentityReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }

    fn record(&mut self, at: LatticePoint, lhs: PiPoly, rhs: PiPoly) {
        self.checked += 1;
        if lhs != rhs {
            self.violations.push(IdentityViolation { at, lhs, rhs });
        }
    }
}

fn gaussian(p: LatticePoint) -> QI {
    QI::new(q(p.x), q(p.y))
}

/// Green's functions of both sublattices sourced at the neighbours of w.
struct NeighbourGreens {
    b: (LatticePoint, LatticePoint),
    bs: (LatticePoint, LatticePoint),
    even: (GreenFunction<Q>, GreenFunction<Q>),
    odd: (GreenFunction<Q>, GreenFunction<Q>),
    g_even: SublatticeGraph,
    g_odd: SublatticeGraph,
}

impl NeighbourGreens {
    fn new(d: &Domain, w: LatticePoint) -> Result<Self, GreenError> {
        if !w.is_white() || !d.contains(w) {
            return Err(GreenError::NotWhite(w));
        }
        let sink = d.sink().ok_or(GreenError::NoSink)?;
        if w.neighbors().contains(&sink) {
            return Err(GreenError::AdjacentToSink(w));
        }
        let (b1, b2, s1, s2) = white_neighbours(w);
        for b in [b1, b2] {
            if !d.contains(b) {
                return Err(GreenError::MissingNeighbour(b));
            }
        }
        let g_even = SublatticeGraph::even(d)?;
        let g_odd = SublatticeGraph::odd(d);
        let mut ev = g_even.green_exact(&[b1, b2])?;
        let odd_one = |s: LatticePoint| -> Result<GreenFunction<Q>, GreenError> {
            if g_odd.is_interior(s) {
                Ok(g_odd.green_exact(&[s])?.remove(0))
            } else {
                Ok(GreenFunction::vanishing(s))
            }
        };
        let odd = (odd_one(s1)?, odd_one(s2)?);
        let e2 = ev.pop().expect("two sources");
        let e1 = ev.pop().expect("two sources");
        Ok(Self { b: (b1, b2), bs: (s1, s2), even: (e1, e2), odd, g_even, g_odd })
    }

    fn f_even(&self, p: LatticePoint) -> Q {
        self.even.0.at(p) - self.even.1.at(p)
    }

    fn f_odd(&self, p: LatticePoint) -> Q {
        self.odd.0.at(p) - self.odd.1.at(p)
    }
}

/// ½E[η(w)ξ(z)] = (G(b₁,z) − G(b₂,z))/(b₁ − b₂) on both sublattices, exactly.
pub fn check_two_point_green(d: &Domain, w: LatticePoint) -> Result<IdentityReport, GreenError> {
    d.check_temperleyan()?;
    let ng = NeighbourGreens::new(d, w)?;
    let g = DimerGraph::induce(d)?;
    let table = CouplingTable::exact(&g)?;
    let half = qi_from_q(q_frac(1, 2));
    let mut report = IdentityReport::default();
    let inv_even = QI::one() / gaussian(ng.b.0 - ng.b.1);
    let inv_odd = QI::one() / gaussian(ng.bs.0 - ng.bs.1);
    for &z in ng.g_even.interior() {
        let lhs = table.two_point(w, z).ok_or(GreenError::NotInGraph(z))? * &half;
        report.record(z, PiPoly::constant(lhs), PiPoly::constant(qi_from_q(ng.f_even(z)) * &inv_even));
    }
    for &z in ng.g_odd.interior() {
        let lhs = table.two_point(w, z).ok_or(GreenError::NotInGraph(z))? * &half;
        report.record(z, PiPoly::constant(lhs), PiPoly::constant(qi_from_q(ng.f_odd(z)) * &inv_odd));
    }
    Ok(report)
}

/// f_•(b₊) − f_•(b₋) = f_★(b*_L) − f_★(b*_R) at every white w̃ ≠ w of V,
/// L and R being the odd neighbours left and right of the step b₋ → b₊.
///
/// This is ∂̄E = 0 at w̃ rewritten through the Green identity; with
/// b₁* − b₂* = −i(b₁ − b₂) the left neighbour carries the plus sign.
/// Whites with an even neighbour outside V have no b₊/b₋ pair and are skipped.
pub fn check_harmonic_conjugacy(d: &Domain, w: LatticePoint) -> Result<IdentityReport, GreenError> {
    let ng = NeighbourGreens::new(d, w)?;
    let mut report = IdentityReport::default();
    for &wt in d.vertices().iter().filter(|p| p.is_white() && **p != w) {
        let (bp, bm, r, l) = white_neighbours(wt);
        if !d.contains(bp) || !d.contains(bm) {
            continue;
        }
        let lhs = ng.f_even(bp) - ng.f_even(bm);
        let rhs = ng.f_odd(l) - ng.f_odd(r);
        report.record(wt, PiPoly::constant(qi_from_q(lhs)), PiPoly::constant(qi_from_q(rhs)));
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Full plane

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// C in G(z) = −(1/2π) log|z| + C + O(|z|⁻²), unit-lattice coordinates.
pub fn green_constant() -> f64 {
    -(EULER_GAMMA + 1.5 * std::f64::consts::LN_2) / (2.0 * std::f64::consts::PI)
}

/// Full-plane Green's function of Z² on the square |x|, |y| ≤ radius.
///
/// G = −a/4 for the potential kernel a, so ΔG = −δ₀ and G(0) = 0. Values
/// come from the diagonal formula a(n,n) = (4/π)Σ_{k≤n} 1/(2k−1) and
/// harmonic continuation column by column (McCrea–Whipple).
#[derive(Clone, Debug)]
pub struct PotentialKernel {
    radius: i64,
    // octant[x][y] = G(x, y) for 0 ≤ y ≤ x ≤ radius
    octant: Vec<Vec<QPi>>,
    floats: Vec<Vec<f64>>,
}

impl PotentialKernel {
    pub fn new(radius: i64) -> Self {
        let r = radius.max(1) as usize;
        let four_over_pi = |s: &Q| QPi::new(Q::zero(), s * q(4));
        let mut a: Vec<Vec<QPi>> = vec![vec![QPi::zero()], vec![QPi::new(q(1), Q::zero()), four_over_pi(&q(1))]];
        let mut diag = q(1);
        for x in 1..r {
            let prev = &a[x - 1];
            let cur = &a[x];
            let at = |y: i64| -> &QPi { &cur[y.unsigned_abs() as usize] };
            let mut next = Vec::with_capacity(x + 2);
            for y in 0..x {
                // harmonic at (x, y)
                let yi = y as i64;
                let four = cur[y].scale(&q(4));
                let v = &(&(&four - &prev[y]) - at(yi + 1)) - at(yi - 1);
                next.push(v);
            }
            // harmonic at (x, x) with the reflection a(x, x+1) = a(x+1, x)
            next.push(&cur[x].scale(&q(2)) - &cur[x - 1]);
            diag += q_frac(1, 2 * (x as i64 + 1) - 1);
            next.push(four_over_pi(&diag));
            a.push(next);
        }
        let quarter = q_frac(-1, 4);
        let octant: Vec<Vec<QPi>> = a.into_iter().map(|col| col.iter().map(|v| v.scale(&quarter)).collect()).collect();
        let floats = octant.iter().map(|col| col.iter().map(qpi_to_f64).collect()).collect();
        Self { radius: r as i64, octant, floats }
    }

    pub fn radius(&self) -> i64 {
        self.radius
    }

    fn slot(&self, z: LatticePoint) -> Option<(usize, usize)> {
        let (a, b) = (z.x.abs(), z.y.abs());
        let (x, y) = if a >= b { (a, b) } else { (b, a) };
        (x <= self.radius).then_some((x as usize, y as usize))
    }

    /// Exact G(z), or None beyond the radius.
    pub fn get(&self, z: LatticePoint) -> Option<&QPi> {
        self.slot(z).map(|(x, y)| &self.octant[x][y])
    }

    pub fn get_f64(&self, z: LatticePoint) -> Option<f64> {
        self.slot(z).map(|(x, y)| self.floats[x][y])
    }

    /// Points z with ΔG(z) ≠ −δ₀ inside |x|, |y| < radius (expected empty).
    pub fn laplacian_defects(&self) -> Vec<LatticePoint> {
        let r = self.radius - 1;
        let mut bad = Vec::new();
        for x in -r..=r {
            for y in -r..=r {
                let z = pt(x, y);
                let centre = self.get(z).expect("in range");
                let mut s = centre.scale(&q(-4));
                for d in STEPS {
                    s = &s + self.get(z + d).expect("in range");
                }
                let want = if z == LatticePoint::ORIGIN { QPi::new(q(-1), Q::zero()) } else { QPi::zero() };
                if s != want {
                    bad.push(z);
                }
            }
        }
        bad
    }

    /// Fit K on the inner half of the range, then return the worst ratio
    /// |r(z)|·|z|²/K over the outer half, where r = G + log|z|/2π − C.
    pub fn asymptotic_fit(&self, r_min: f64) -> (f64, f64) {
        let c = green_constant();
        let mut k_inner: f64 = 0.0;
        let mut k_outer: f64 = 0.0;
        let half = self.radius as f64 / 2.0;
        for x in 0..=self.radius {
            for y in 0..=x {
                let m = ((x * x + y * y) as f64).sqrt();
                if m < r_min {
                    continue;
                }
                let g = self.floats[x as usize][y as usize];
                let resid = (g + m.ln() / (2.0 * std::f64::consts::PI) - c).abs() * m * m;
                if m <= half {
                    k_inner = k_inner.max(resid);
                } else {
                    k_outer = k_outer.max(resid);
                }
            }
        }
        (k_inner, k_outer / k_inner)
    }
}

fn qpi_to_f64(v: &QPi) -> f64 {
    if v.inv_pi.is_zero() {
        return q_to_f64(&v.rational);
    }
    v.to_f64()
}

static KERNEL: RwLock<Option<Arc<PotentialKernel>>> = RwLock::new(None);

/// Shared kernel covering at least `radius`; grown by doubling when needed.
pub fn shared_kernel(radius: i64) -> Arc<PotentialKernel> {
    if let Some(k) = KERNEL.read().unwrap_or_else(|e| e.into_inner()).as_ref() {
        if k.radius() >= radius {
            return Arc::clone(k);
        }
    }
    let mut slot = KERNEL.write().unwrap_or_else(|e| e.into_inner());
    if let Some(k) = slot.as_ref() {
        if k.radius() >= radius {
            return Arc::clone(k);
        }
    }
    let have = slot.as_ref().map_or(0, |k| k.radius());
    let k = Arc::new(PotentialKernel::new(radius.max(2 * have).max(16)));
    *slot = Some(Arc::clone(&k));
    k
}

/// G(z) on the unit lattice as an exact a + b/π.
pub fn potential_kernel(z: LatticePoint) -> QPi {
    let r = z.x.abs().max(z.y.abs());
    shared_kernel(r).get(z).expect("kernel grown to cover z").clone()
}

/// Full-plane G between two blacks of the same sublattice (difference in 2Z²).
pub fn sublattice_green(diff: LatticePoint) -> Result<QPi, GreenError> {
    if diff.x.rem_euclid(2) != 0 || diff.y.rem_euclid(2) != 0 {
        return Err(GreenError::NotBlack(diff));
    }
    Ok(potential_kernel(pt(diff.x / 2, diff.y / 2)))
}

/// Float version of [`sublattice_green`].
pub fn sublattice_green_f64(diff: LatticePoint) -> Result<f64, GreenError> {
    if diff.x.rem_euclid(2) != 0 || diff.y.rem_euclid(2) != 0 {
        return Err(GreenError::NotBlack(diff));
    }
    let z = pt(diff.x / 2, diff.y / 2);
    Ok(shared_kernel(z.x.abs().max(z.y.abs())).get_f64(z).expect("covered"))
}

/// (G(z − w₁) − G(z − w₂))/(w₁ − w₂), with w₁, w₂ the neighbours of w
/// on the sublattice of z.
pub fn limit_two_point(w: LatticePoint, z: LatticePoint) -> Result<PiPoly, GreenError> {
    if !w.is_white() {
        return Err(GreenError::NotWhite(w));
    }
    let (b1, b2, s1, s2) = white_neighbours(w);
    let (w1, w2) = match Sublattice::of(z).ok_or(GreenError::NotBlack(z))? {
        Sublattice::Even => (b1, b2),
        Sublattice::Odd => (s1, s2),
    };
    let diff = &sublattice_green(z - w1)? - &sublattice_green(z - w2)?;
    Ok(diff.to_pipoly().scale(&(QI::one() / gaussian(w1 - w2))))
}

/// The Cauchy–Riemann relation for F_•, F_★ built from G, at every white
/// w̃ ≠ w with ‖w̃ − w‖ < r. Exact in ℚ + ℚ/π.
pub fn check_full_plane_conjugacy(w: LatticePoint, r: i64) -> Result<IdentityReport, GreenError> {
    if !w.is_white() {
        return Err(GreenError::NotWhite(w));
    }
    let (b1, b2, s1, s2) = white_neighbours(w);
    let f_even = |b: LatticePoint| -> Result<QPi, GreenError> { Ok(&sublattice_green(b1 - b)? - &sublattice_green(b2 - b)?) };
    let f_odd = |b: LatticePoint| -> Result<QPi, GreenError> { Ok(&sublattice_green(s1 - b)? - &sublattice_green(s2 - b)?) };
    let mut report = IdentityReport::default();
    for wt in crate::lattice::manhattan_ball(w, r) {
        if !wt.is_white() || wt == w {
            continue;
        }
        let (bp, bm, rr, ll) = white_neighbours(wt);
        let lhs = &f_even(bp)? - &f_even(bm)?;
        let rhs = &f_odd(ll)? - &f_odd(rr)?;
        report.record(wt, lhs.to_pipoly(), rhs.to_pipoly());
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Thermodynamic limit

/// Growing temperleyan squares [−2n, 2n]² with the sink at a fixed corner.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SquareSequence {
    pub n_min: usize,
    pub n_max: usize,
    /// Signs of the sink corner, (−1, −1) being the most negative one.
    pub corner: (i64, i64),
}

impl Default for SquareSequence {
    fn default() -> Self {
        Self { n_min: 1, n_max: 20, corner: (-1, -1) }
    }
}

impl SquareSequence {
    pub fn domain(&self, n: usize) -> Domain {
        let h = 2 * n as i64;
        Domain::centered_square(h)
            .with_sink(pt(self.corner.0.signum() * h, self.corner.1.signum() * h))
            .expect("corners of even squares are valid sinks")
    }

    pub fn ns(&self) -> std::ops::RangeInclusive<usize> {
        self.n_min..=self.n_max
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub side: i64,
    pub re_fin: f64,
    pub im_fin: f64,
    pub re_lim: f64,
    pub im_lim: f64,
    pub abs_err: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdgeRow {
    pub n: usize,
    pub side: i64,
    pub probability: f64,
    pub abs_err: f64,
}

/// Per-n tables for several (w, z) pairs and one edge, sharing each solve.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub pairs: Vec<(LatticePoint, LatticePoint)>,
    pub tables: Vec<Vec<ConvergenceRow>>,
    pub edge: (LatticePoint, LatticePoint),
    pub edge_rows: Vec<EdgeRow>,
}

/// Run the sequence; n where a point is missing or w touches the sink is skipped.
pub fn convergence_report(
    seq: &SquareSequence,
    pairs: &[(LatticePoint, LatticePoint)],
    edge: (LatticePoint, LatticePoint),
) -> Result<ConvergenceReport, GreenError> {
    let limits: Vec<C64> = pairs
        .iter()
        .map(|&(w, z)| limit_two_point(w, z).map(|v| v.to_c64()))
        .collect::<Result<_, _>>()?;
    let ns: Vec<usize> = seq.ns().collect();
    let per_n: Vec<Result<(Vec<Option<ConvergenceRow>>, Option<EdgeRow>), GreenError>> = ns
        .par_iter()
        .map(|&n| {
            let d = seq.domain(n);
            let side = 4 * n as i64 + 1;
            let sink = d.sink().expect("sequence domains carry a sink");
            let g = DimerGraph::induce(&d)?;
            let fc = FloatCoupling::new(&g)?;
            let mut rows = Vec::new();
            for (&(w, z), lim) in pairs.iter().zip(&limits) {
                let row = match fc.two_point(w, z) {
                    Some(e) if !w.neighbors().contains(&sink) => {
                        let fin = e * 0.5;
                        Some(ConvergenceRow {
                            n,
                            side,
                            re_fin: fin.re,
                            im_fin: fin.im,
                            re_lim: lim.re,
                            im_lim: lim.im,
                            abs_err: (fin - lim).norm(),
                        })
                    }
                    _ => None,
                };
                rows.push(row);
            }
            let edge_row = g.edge_of(edge.0, edge.1).ok().map(|e| {
                let p = fc.edge_probability(e);
                EdgeRow { n, side, probability: p, abs_err: (p - 0.25).abs() }
            });
            Ok((rows, edge_row))
        })
        .collect();
    let mut tables = vec![Vec::new(); pairs.len()];
    let mut edge_rows = Vec::new();
    for r in per_n {
        let (rows, e) = r?;
        for (t, row) in tables.iter_mut().zip(rows) {
            t.extend(row);
        }
        edge_rows.extend(e);
    }
    Ok(ConvergenceReport { pairs: pairs.to_vec(), tables, edge, edge_rows })
}

/// Single-pair convenience wrapper.
pub fn convergence_table(seq: &SquareSequence, w: LatticePoint, z: LatticePoint) -> Result<Vec<ConvergenceRow>, GreenError> {
    let edge = (pt(0, 0), pt(1, 0));
    Ok(convergence_report(seq, &[(w, z)], edge)?.tables.remove(0))
}

/// True when errors strictly decrease for every n > burn_in.
pub fn decreasing_beyond(rows: &[ConvergenceRow], burn_in: usize) -> bool {
    let tail: Vec<f64> = rows.iter().filter(|r| r.n >= burn_in).map(|r| r.abs_err).collect();
    tail.windows(2).all(|w| w[1] < w[0])
}

/// Spanning trees of G_• rooted at the sink; equals the dimer count of V ∖ {ŝ}.
pub fn temperley_tree_count(d: &Domain) -> Result<BigInt, GreenError> {
    Ok(SublatticeGraph::even(d)?.spanning_tree_count().abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three() -> Domain {
        Domain::rect(0, 0, 2, 2).with_sink(pt(0, 0)).unwrap()
    }

    #[test]
    fn even_green_on_four_cycle() {
        let g = SublatticeGraph::even(&three()).unwrap();
        assert_eq!(g.n_edges(), 4);
        let f = g.green_exact(&[pt(2, 2)]).unwrap().remove(0);
        assert_eq!(f.at(pt(2, 2)), q(1));
        assert_eq!(f.at(pt(2, 0)), q_frac(1, 2));
        assert_eq!(f.at(pt(0, 2)), q_frac(1, 2));
        assert_eq!(f.at(pt(0, 0)), q(0));
        let fl = g.green_float(&[pt(2, 2)]).unwrap().remove(0);
        assert!((fl.at(pt(2, 0)) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn odd_green_single_vertex() {
        let g = SublatticeGraph::odd(&three());
        assert_eq!(g.interior(), &[pt(1, 1)]);
        assert_eq!(g.boundary().len(), 4);
        let f = g.green_exact(&[pt(1, 1)]).unwrap().remove(0);
        assert_eq!(f.at(pt(1, 1)), q_frac(1, 4));
        assert_eq!(g.laplacian(|p| f.at(p), pt(1, 1)), Some(q(-1)));
    }

    #[test]
    fn two_vertex_path() {
        // b₀ joined to the sink only: unit resistance.
        let d = Domain::rect(0, 0, 2, 0).with_sink(pt(0, 0)).unwrap();
        let g = SublatticeGraph::even(&d).unwrap();
        assert_eq!(g.green_exact(&[pt(2, 0)]).unwrap()[0].at(pt(2, 0)), q(1));
    }

    #[test]
    fn two_point_identity_small() {
        let rep = check_two_point_green(&three(), pt(2, 1)).unwrap();
        assert_eq!(rep.checked, 4);
        assert!(rep.holds(), "{:?}", rep.violations);
        assert_eq!(check_two_point_green(&three(), pt(1, 0)).unwrap_err(), GreenError::AdjacentToSink(pt(1, 0)));
        let h = check_harmonic_conjugacy(&three(), pt(2, 1)).unwrap();
        assert!(h.holds(), "{:?}", h.violations);
    }

    #[test]
    fn kernel_values() {
        let k = PotentialKernel::new(8);
        assert_eq!(k.get(pt(0, 0)), Some(&QPi::zero()));
        for z in [pt(1, 0), pt(0, -1), pt(-1, 0)] {
            assert_eq!(k.get(z).unwrap(), &QPi::new(q_frac(-1, 4), Q::zero()));
        }
        assert_eq!(k.get(pt(1, 1)).unwrap(), &QPi::new(Q::zero(), q(-1)));
        assert_eq!(k.get(pt(-2, 0)).unwrap(), &QPi::new(q(-1), q(2)));
        assert!(k.laplacian_defects().is_empty());
        assert!(k.get(pt(9, 0)).is_none());
    }

    #[test]
    fn limit_at_coincident_point() {
        // z = w₁: (G(0) − G(w₁ − w₂))/(w₁ − w₂) = (1/4)/2.
        let w = pt(1, 0);
        let v = limit_two_point(w, pt(2, 0)).unwrap();
        assert_eq!(v, PiPoly::constant(QI::new(q_frac(1, 8), Q::zero())));
    }

    #[test]
    fn larger_fixtures() {
        let d = Domain::rect(0, 0, 4, 4).with_sink(pt(0, 0)).unwrap();
        for w in [pt(2, 1), pt(3, 2), pt(1, 4)] {
            let rep = check_two_point_green(&d, w).unwrap();
            assert_eq!(rep.checked, 8 + 4);
            assert!(rep.holds(), "w = {w:?}: {:?}", rep.violations);
            assert!(check_harmonic_conjugacy(&d, w).unwrap().holds());
        }
        let g = DimerGraph::induce(&d).unwrap();
        assert_eq!(temperley_tree_count(&d).unwrap(), g.count_covers());
    }

    #[test]
    fn full_plane_conjugacy_and_asymptotics() {
        let rep = check_full_plane_conjugacy(pt(1, 0), 8).unwrap();
        assert!(rep.checked > 20);
        assert!(rep.holds(), "{:?}", rep.violations);
        let k = PotentialKernel::new(24);
        let (kfit, ratio) = k.asymptotic_fit(3.0);
        assert!(kfit > 0.0 && kfit < 0.1, "{kfit}");
        assert!(ratio <= 1.1, "{ratio}");
    }

    #[test]
    fn short_sequence() {
        let seq = SquareSequence { n_min: 1, n_max: 4, corner: (-1, -1) };
        let rep = convergence_report(&seq, &[(pt(1, 0), pt(2, 0)), (pt(1, 0), pt(1, 1))], (pt(0, 0), pt(1, 0))).unwrap();
        assert_eq!(rep.tables[0].len(), 4);
        assert!(rep.tables[0][3].abs_err < rep.tables[0][0].abs_err);
        assert!(rep.edge_rows[3].abs_err < 0.1);
    }
}

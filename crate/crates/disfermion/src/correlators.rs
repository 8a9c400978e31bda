// SPDX-License-Identifier: MIT OR Apache-2.0

//! Correlations through the inverse Kasteleyn matrix.
//!
//! `E[η(w)ξ(b)] = conj K⁻¹(w, b)`, and many-pair expectations are Wick
//! determinants of two-point values.
//!
//! Sign convention for the graph derivatives: at a white w,
//! `∂̄^K f(w) = Σ_b conj K(b,w) f(b)`; at a black b,
//! `∂̄^K f(b) = −Σ_w conj K(b,w) f(w)` (and the same for `∂^K` with `K`).
//! With this choice both agree with the uniform lattice operator
//! `∂̄f(z) = Σ_d d·f(z+d)` on Z², and the holomorphicity identities read
//! `∂̄_w E[η(w₀)ξ(·)] = δ_{w,w₀}` and `∂̄_b E[η(·)ξ(b₀)] = −δ_{b,b₀}`.

use num_traits::{One, Zero};

use crate::dimers::{DimerError, DimerGraph};
use crate::exact::{GaussianScale, C64, Q, QI};
use crate::lattice::{LatticePoint, STEPS};
use crate::linalg::{det_c64, det_exact, inverse_exact, BandedLu};

/// Uniform `∂f(z) = Σ_d conj(d) f(z+d)`; `None` if a neighbour is undefined.
pub fn dee<T, F>(f: F, z: LatticePoint) -> Option<T>
where
    T: GaussianScale + Zero,
    F: Fn(LatticePoint) -> Option<T>,
{
    let mut acc = T::zero();
    for d in STEPS {
        acc = acc + f(z + d)?.scale_gauss(d.x, -d.y);
    }
    Some(acc)
}

/// Uniform `∂̄f(z) = Σ_d d f(z+d)`.
pub fn deebar<T, F>(f: F, z: LatticePoint) -> Option<T>
where
    T: GaussianScale + Zero,
    F: Fn(LatticePoint) -> Option<T>,
{
    let mut acc = T::zero();
    for d in STEPS {
        acc = acc + f(z + d)?.scale_gauss(d.x, d.y);
    }
    Some(acc)
}

/// Exact inverse Kasteleyn matrix of a dimerable graph.
#[derive(Clone, Debug)]
pub struct CouplingTable {
    graph: DimerGraph,
    /// K⁻¹(w, b), rows = whites.
    inverse: Vec<Vec<QI>>,
}

/// A vertex at which a holomorphicity identity failed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HoloViolation {
    pub at: LatticePoint,
    pub expected: QI,
    pub got: QI,
}

impl CouplingTable {
    pub fn exact(g: &DimerGraph) -> Result<Self, DimerError> {
        if !g.is_balanced() {
            return Err(DimerError::Unbalanced { whites: g.n_whites(), blacks: g.n_blacks() });
        }
        let inverse = inverse_exact(&g.kasteleyn_exact()).map_err(|_| DimerError::NoCover)?;
        Ok(Self { graph: g.clone(), inverse })
    }

    pub fn graph(&self) -> &DimerGraph {
        &self.graph
    }

    pub fn k_inv(&self, wi: usize, bi: usize) -> &QI {
        &self.inverse[wi][bi]
    }

    /// `E[η(w)ξ(b)] = conj K⁻¹(w,b)` by index.
    pub fn two_point_idx(&self, wi: usize, bi: usize) -> QI {
        self.inverse[wi][bi].conj()
    }

    /// `E[η(w)ξ(b)]`; `None` unless w is a white and b a black of the graph.
    pub fn two_point(&self, w: LatticePoint, b: LatticePoint) -> Option<QI> {
        Some(self.two_point_idx(self.graph.white_index(w)?, self.graph.black_index(b)?))
    }

    /// Wick determinant `det[E η(wᵢ)ξ(bⱼ)]`. Vertices outside the graph give 0.
    pub fn multipoint(&self, pairs: &[(LatticePoint, LatticePoint)]) -> QI {
        let mut m = Vec::with_capacity(pairs.len());
        for (w, _) in pairs {
            let mut row = Vec::with_capacity(pairs.len());
            for (_, b) in pairs {
                match self.two_point(*w, *b) {
                    Some(v) => row.push(v),
                    None => return QI::zero(),
                }
            }
            m.push(row);
        }
        det_exact(m)
    }

    /// `P[e ∈ ω] = K(b,w)·K⁻¹(w,b)`.
    pub fn edge_probability(&self, e: usize) -> Q {
        let (bi, wi) = self.graph.edges()[e];
        (self.graph.k_exact(bi, wi) * &self.inverse[wi][bi]).re
    }

    /// `∂̄^K` at a white of a black-indexed function.
    pub fn deebar_at_white(&self, wi: usize, f: &[QI]) -> QI {
        self.graph
            .white_neighbors(wi)
            .iter()
            .map(|&(bi, _)| self.graph.k_exact(bi, wi).conj() * &f[bi])
            .fold(QI::zero(), |a, b| a + b)
    }

    /// `∂̄^K` at a black of a white-indexed function (note the minus sign).
    pub fn deebar_at_black(&self, bi: usize, f: &[QI]) -> QI {
        -self
            .graph
            .black_neighbors(bi)
            .iter()
            .map(|&(wi, _)| self.graph.k_exact(bi, wi).conj() * &f[wi])
            .fold(QI::zero(), |a, b| a + b)
    }

    /// `∂^K` at a white of a black-indexed function.
    pub fn dee_at_white(&self, wi: usize, f: &[QI]) -> QI {
        self.graph
            .white_neighbors(wi)
            .iter()
            .map(|&(bi, _)| self.graph.k_exact(bi, wi) * &f[bi])
            .fold(QI::zero(), |a, b| a + b)
    }

    /// `∂^K` at a black of a white-indexed function.
    pub fn dee_at_black(&self, bi: usize, f: &[QI]) -> QI {
        -self
            .graph
            .black_neighbors(bi)
            .iter()
            .map(|&(wi, _)| self.graph.k_exact(bi, wi) * &f[wi])
            .fold(QI::zero(), |a, b| a + b)
    }

    /// Check `∂̄_w E[η(w₀)ξ(·)] = δ_{w,w₀}` at every white.
    pub fn verify_white_identity(&self, w0: usize) -> Result<(), HoloViolation> {
        let f: Vec<QI> = (0..self.graph.n_blacks()).map(|bi| self.two_point_idx(w0, bi)).collect();
        for wi in 0..self.graph.n_whites() {
            let got = self.deebar_at_white(wi, &f);
            let expected = if wi == w0 { QI::one() } else { QI::zero() };
            if got != expected {
                return Err(HoloViolation { at: self.graph.whites()[wi], expected, got });
            }
        }
        Ok(())
    }

    /// Check `∂̄_b E[η(·)ξ(b₀)] = −δ_{b,b₀}` at every black.
    pub fn verify_black_identity(&self, b0: usize) -> Result<(), HoloViolation> {
        let f: Vec<QI> = (0..self.graph.n_whites()).map(|wi| self.two_point_idx(wi, b0)).collect();
        for bi in 0..self.graph.n_blacks() {
            let got = self.deebar_at_black(bi, &f);
            let expected = if bi == b0 { -QI::one() } else { QI::zero() };
            if got != expected {
                return Err(HoloViolation { at: self.graph.blacks()[bi], expected, got });
            }
        }
        Ok(())
    }

    /// Both identities at every base point.
    pub fn verify_holomorphicity(&self) -> Result<(), HoloViolation> {
        for w0 in 0..self.graph.n_whites() {
            self.verify_white_identity(w0)?;
        }
        for b0 in 0..self.graph.n_blacks() {
            self.verify_black_identity(b0)?;
        }
        Ok(())
    }
}

/// Float couplings from banded LU factorisations of K and Kᵀ.
#[derive(Clone, Debug)]
pub struct FloatCoupling {
    graph: DimerGraph,
    lu: BandedLu,
    lu_t: BandedLu,
}

impl FloatCoupling {
    pub fn new(g: &DimerGraph) -> Result<Self, DimerError> {
        if !g.is_balanced() {
            return Err(DimerError::Unbalanced { whites: g.n_whites(), blacks: g.n_blacks() });
        }
        let n = g.n_whites();
        let lu = BandedLu::factor(n, g.kasteleyn_triplets()).map_err(|_| DimerError::NoCover)?;
        let lu_t = BandedLu::factor(n, g.kasteleyn_triplets().map(|(b, w, v)| (w, b, v)))
            .map_err(|_| DimerError::NoCover)?;
        Ok(Self { graph: g.clone(), lu, lu_t })
    }

    pub fn graph(&self) -> &DimerGraph {
        &self.graph
    }

    /// K⁻¹(·, b) over whites.
    pub fn k_inv_column(&self, bi: usize) -> Vec<C64> {
        let mut e = vec![C64::zero(); self.graph.n_blacks()];
        e[bi] = C64::one();
        self.lu.solve_in_place(&mut e);
        e
    }

    /// K⁻¹(w, ·) over blacks.
    pub fn k_inv_row(&self, wi: usize) -> Vec<C64> {
        let mut e = vec![C64::zero(); self.graph.n_whites()];
        e[wi] = C64::one();
        self.lu_t.solve_in_place(&mut e);
        e
    }

    /// Solve K x = rhs (rhs over blacks, x over whites).
    pub fn solve(&self, rhs: &mut [C64]) {
        self.lu.solve_in_place(rhs)
    }

    /// Solve Kᵀ y = rhs (rhs over whites, y over blacks).
    pub fn solve_transpose(&self, rhs: &mut [C64]) {
        self.lu_t.solve_in_place(rhs)
    }

    pub fn two_point(&self, w: LatticePoint, b: LatticePoint) -> Option<C64> {
        let wi = self.graph.white_index(w)?;
        let bi = self.graph.black_index(b)?;
        Some(self.k_inv_column(bi)[wi].conj())
    }

    pub fn multipoint(&self, pairs: &[(LatticePoint, LatticePoint)]) -> C64 {
        let mut cols = Vec::new();
        for (_, b) in pairs {
            match self.graph.black_index(*b) {
                Some(bi) => cols.push(self.k_inv_column(bi)),
                None => return C64::zero(),
            }
        }
        let mut m = Vec::new();
        for (w, _) in pairs {
            let Some(wi) = self.graph.white_index(*w) else { return C64::zero() };
            m.push(cols.iter().map(|c| c[wi].conj()).collect());
        }
        det_c64(m)
    }

    pub fn edge_probability(&self, e: usize) -> f64 {
        let (bi, wi) = self.graph.edges()[e];
        (self.graph.k_c64(bi, wi) * self.k_inv_column(bi)[wi]).re
    }

    /// Largest deviation from the white delta identity at base point w₀.
    pub fn white_identity_residual(&self, w0: usize) -> f64 {
        let row = self.k_inv_row(w0);
        (0..self.graph.n_whites())
            .map(|wi| {
                let s: C64 = self
                    .graph
                    .white_neighbors(wi)
                    .iter()
                    .map(|&(bi, _)| self.graph.k_c64(bi, wi).conj() * row[bi].conj())
                    .sum();
                let target = if wi == w0 { C64::one() } else { C64::zero() };
                (s - target).norm()
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{q_frac, qi};
    use crate::lattice::{pt, Domain};

    fn square2() -> CouplingTable {
        CouplingTable::exact(&DimerGraph::induce(&Domain::rect(0, 0, 1, 1)).unwrap()).unwrap()
    }

    fn half(re: i64, im: i64) -> QI {
        QI::new(q_frac(re, 2), q_frac(im, 2))
    }

    #[test]
    fn two_point_values() {
        let t = square2();
        assert_eq!(t.two_point(pt(1, 0), pt(0, 0)).unwrap(), half(-1, 0));
        assert_eq!(t.two_point(pt(1, 0), pt(1, 1)).unwrap(), half(0, -1));
        assert!(t.two_point(pt(0, 0), pt(1, 0)).is_none());
        let single = CouplingTable::exact(&DimerGraph::from_points([pt(0, 0), pt(0, 1)])).unwrap();
        // K⁻¹(w,b) = 1/K(b,w) = −i, so E[η(w)ξ(b)] = conj K⁻¹ = i = K(b,w).
        assert_eq!(single.two_point(pt(0, 1), pt(0, 0)).unwrap(), qi(0, 1));
    }

    #[test]
    fn multipoint_rules() {
        let t = square2();
        assert_eq!(t.multipoint(&[]), qi(1, 0));
        let b = pt(0, 0);
        assert_eq!(t.multipoint(&[(pt(1, 0), b), (pt(0, 1), b)]), QI::zero());
        let a = t.multipoint(&[(pt(1, 0), pt(0, 0)), (pt(0, 1), pt(1, 1))]);
        let s = t.multipoint(&[(pt(1, 0), pt(1, 1)), (pt(0, 1), pt(0, 0))]);
        assert_eq!(a, -s);
    }

    #[test]
    fn holomorphicity_small() {
        let t = square2();
        let f: Vec<QI> = (0..2).map(|bi| t.two_point_idx(0, bi)).collect();
        assert_eq!(t.deebar_at_white(0, &f), qi(1, 0));
        assert_eq!(t.deebar_at_white(1, &f), qi(0, 0));
        t.verify_holomorphicity().unwrap();
        let d = Domain::rect(0, 0, 2, 2).with_sink(pt(0, 0)).unwrap();
        CouplingTable::exact(&DimerGraph::induce(&d).unwrap()).unwrap().verify_holomorphicity().unwrap();
    }

    #[test]
    fn uniform_operators() {
        let one = |_: LatticePoint| Some(C64::one());
        let id = |p: LatticePoint| Some(p.to_c64());
        let z = pt(3, -2);
        assert_eq!(dee(one, z).unwrap(), C64::zero());
        assert_eq!(deebar(id, z).unwrap(), C64::zero());
        assert_eq!(dee(id, z).unwrap(), C64::new(4.0, 0.0));
    }

    #[test]
    fn float_agrees_with_exact() {
        let d = Domain::rect(0, 0, 4, 4).with_sink(pt(0, 0)).unwrap();
        let g = DimerGraph::induce(&d).unwrap();
        let t = CouplingTable::exact(&g).unwrap();
        let f = FloatCoupling::new(&g).unwrap();
        for (wi, w) in g.whites().iter().enumerate() {
            for (bi, b) in g.blacks().iter().enumerate() {
                let a = crate::exact::qi_to_c64(&t.two_point_idx(wi, bi));
                assert!((a - f.two_point(*w, *b).unwrap()).norm() < 1e-12);
            }
            assert!(f.white_identity_residual(wi) < 1e-12);
        }
        for e in 0..g.n_edges() {
            let p = crate::exact::q_to_f64(&t.edge_probability(e));
            assert!((p - f.edge_probability(e)).abs() < 1e-12);
        }
    }
}

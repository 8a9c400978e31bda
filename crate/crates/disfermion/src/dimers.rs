// SPDX-License-Identifier: MIT OR Apache-2.0

//! Induced bipartite graphs, Kasteleyn matrices and dimer covers.
//!
//! On Z² the Kasteleyn weight of an edge is `K(b, w) = conj(b − w)`, a unit
//! Gaussian integer. Kasteleyn's theorem gives |Dim(G)| = |det K|.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::correlators::CouplingTable;
use crate::exact::{qi, C64, Q, QI};
use crate::lattice::{Domain, LatticeError, LatticePoint};
use crate::linalg::bareiss_det;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DimerError {
    #[error("graph is not dimerable: {whites} whites, {blacks} blacks")]
    Unbalanced { whites: usize, blacks: usize },
    #[error("enumeration refused: {whites} whites exceeds cap {cap}")]
    TooLarge { whites: usize, cap: usize },
    #[error("{0:?} -- {1:?} is not an edge")]
    NotAnEdge(LatticePoint, LatticePoint),
    #[error("graph has no dimer cover")]
    NoCover,
    #[error("Kasteleyn condition fails around the face at {0:?}")]
    KasteleynViolation(LatticePoint),
    #[error("oracle mismatch: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Default cap on the number of whites for brute-force enumeration.
pub const ENUMERATION_CAP: usize = 16;

/// Finite induced bipartite subgraph of Z² with its Kasteleyn weights.
#[derive(Clone, Debug)]
pub struct DimerGraph {
    whites: Vec<LatticePoint>,
    blacks: Vec<LatticePoint>,
    white_index: HashMap<LatticePoint, usize>,
    black_index: HashMap<LatticePoint, usize>,
    /// (black, white) index pairs, sorted.
    edges: Vec<(usize, usize)>,
    /// K(b, w) per edge, as a Gaussian integer (x + iy).
    weights: Vec<LatticePoint>,
    edge_index: HashMap<(usize, usize), usize>,
    white_adj: Vec<Vec<(usize, usize)>>,
    black_adj: Vec<Vec<(usize, usize)>>,
}

impl DimerGraph {
    /// Induce the graph on V ∖ {sink}; fails if it cannot be dimerable.
    pub fn induce(d: &Domain) -> Result<Self, DimerError> {
        let g = Self::induce_unchecked(d);
        if g.whites.len() != g.blacks.len() {
            return Err(DimerError::Unbalanced { whites: g.whites.len(), blacks: g.blacks.len() });
        }
        Ok(g)
    }

    /// Induce without the balance check, for inspection.
    pub fn induce_unchecked(d: &Domain) -> Self {
        Self::from_points(d.active_vertices())
    }

    /// Induced graph on an arbitrary point set.
    pub fn from_points(points: impl IntoIterator<Item = LatticePoint>) -> Self {
        let mut pts: Vec<LatticePoint> = points.into_iter().collect();
        pts.sort_by_key(|p| (p.y, p.x));
        pts.dedup();
        let (blacks, whites): (Vec<_>, Vec<_>) = pts.into_iter().partition(|p| p.is_black());
        let white_index: HashMap<_, _> = whites.iter().enumerate().map(|(i, p)| (*p, i)).collect();
        let black_index: HashMap<_, _> = blacks.iter().enumerate().map(|(i, p)| (*p, i)).collect();
        let mut edges = Vec::new();
        for (bi, b) in blacks.iter().enumerate() {
            let mut nb: Vec<usize> = b.neighbors().iter().filter_map(|n| white_index.get(n).copied()).collect();
            nb.sort_unstable();
            edges.extend(nb.into_iter().map(|wi| (bi, wi)));
        }
        let weights = edges.iter().map(|&(bi, wi)| (blacks[bi] - whites[wi]).conj()).collect();
        let mut g = Self {
            white_adj: vec![Vec::new(); whites.len()],
            black_adj: vec![Vec::new(); blacks.len()],
            whites,
            blacks,
            white_index,
            black_index,
            edges,
            weights,
            edge_index: HashMap::new(),
        };
        for (e, &(bi, wi)) in g.edges.iter().enumerate() {
            g.edge_index.insert((bi, wi), e);
            g.white_adj[wi].push((bi, e));
            g.black_adj[bi].push((wi, e));
        }
        g
    }

    /// Copy with the weight of one edge negated (for negative tests).
    pub fn with_flipped_weight(&self, edge: usize) -> Self {
        let mut g = self.clone();
        g.weights[edge] = -g.weights[edge];
        g
    }

    pub fn whites(&self) -> &[LatticePoint] {
        &self.whites
    }

    pub fn blacks(&self) -> &[LatticePoint] {
        &self.blacks
    }

    pub fn n_whites(&self) -> usize {
        self.whites.len()
    }

    pub fn n_blacks(&self) -> usize {
        self.blacks.len()
    }

    pub fn is_balanced(&self) -> bool {
        self.whites.len() == self.blacks.len()
    }

    pub fn white_index(&self, p: LatticePoint) -> Option<usize> {
        self.white_index.get(&p).copied()
    }

    pub fn black_index(&self, p: LatticePoint) -> Option<usize> {
        self.black_index.get(&p).copied()
    }

    pub fn contains(&self, p: LatticePoint) -> bool {
        self.white_index.contains_key(&p) || self.black_index.contains_key(&p)
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_between(&self, bi: usize, wi: usize) -> Option<usize> {
        self.edge_index.get(&(bi, wi)).copied()
    }

    /// Edge index for a pair of points in either order.
    pub fn edge_of(&self, a: LatticePoint, b: LatticePoint) -> Result<usize, DimerError> {
        let (w, bl) = if a.is_white() { (a, b) } else { (b, a) };
        self.white_index(w)
            .zip(self.black_index(bl))
            .and_then(|(wi, bi)| self.edge_between(bi, wi))
            .ok_or(DimerError::NotAnEdge(a, b))
    }

    /// (black, edge) pairs adjacent to a white.
    pub fn white_neighbors(&self, wi: usize) -> &[(usize, usize)] {
        &self.white_adj[wi]
    }

    /// (white, edge) pairs adjacent to a black.
    pub fn black_neighbors(&self, bi: usize) -> &[(usize, usize)] {
        &self.black_adj[bi]
    }

    /// K(b, w) as a Gaussian integer; zero off the edge set.
    pub fn k_unit(&self, bi: usize, wi: usize) -> LatticePoint {
        self.edge_between(bi, wi).map(|e| self.weights[e]).unwrap_or_default()
    }

    pub fn edge_weight(&self, e: usize) -> LatticePoint {
        self.weights[e]
    }

    pub fn k_exact(&self, bi: usize, wi: usize) -> QI {
        let u = self.k_unit(bi, wi);
        qi(u.x, u.y)
    }

    pub fn k_c64(&self, bi: usize, wi: usize) -> C64 {
        self.k_unit(bi, wi).to_c64()
    }

    /// Dense exact Kasteleyn matrix, rows = blacks, columns = whites.
    pub fn kasteleyn_exact(&self) -> Vec<Vec<QI>> {
        (0..self.blacks.len())
            .map(|bi| (0..self.whites.len()).map(|wi| self.k_exact(bi, wi)).collect())
            .collect()
    }

    /// Nonzero entries (black, white, K) for sparse float solvers.
    pub fn kasteleyn_triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        self.edges.iter().zip(&self.weights).map(|(&(bi, wi), u)| (bi, wi, u.to_c64()))
    }

    /// Check the alternating product around every unit face.
    ///
    /// For a square face b₁ w₁ b₂ w₂ the product K(b₁,w₁)·conj K(b₂,w₁)·
    /// K(b₂,w₂)·conj K(b₁,w₂) must equal (−1)^{2+1} = −1.
    pub fn verify_kasteleyn(&self) -> Result<(), DimerError> {
        for (bi, &b) in self.blacks.iter().enumerate() {
            // Each face has two black corners; visit it from the lower-left-most one.
            for d in [LatticePoint::new(1, 1), LatticePoint::new(-1, 1)] {
                let b2 = b + d;
                let Some(b2i) = self.black_index(b2) else { continue };
                let w1 = b + LatticePoint::new(d.x, 0);
                let w2 = b + LatticePoint::new(0, d.y);
                let (Some(w1i), Some(w2i)) = (self.white_index(w1), self.white_index(w2)) else {
                    continue;
                };
                let g = |p: LatticePoint| Complex::new(p.x, p.y);
                let prod = g(self.k_unit(bi, w1i))
                    * g(self.k_unit(b2i, w1i)).conj()
                    * g(self.k_unit(b2i, w2i))
                    * g(self.k_unit(bi, w2i)).conj();
                if prod != Complex::new(-1, 0) {
                    let corner = LatticePoint::new(b.x.min(b2.x), b.y);
                    return Err(DimerError::KasteleynViolation(corner));
                }
            }
        }
        Ok(())
    }

    /// Exact det K over the Gaussian integers.
    pub fn det_exact(&self) -> Option<Complex<BigInt>> {
        if !self.is_balanced() {
            return None;
        }
        let m: Vec<Vec<Complex<BigInt>>> = (0..self.blacks.len())
            .map(|bi| {
                (0..self.whites.len())
                    .map(|wi| {
                        let u = self.k_unit(bi, wi);
                        Complex::new(BigInt::from(u.x), BigInt::from(u.y))
                    })
                    .collect()
            })
            .collect();
        Some(bareiss_det(m))
    }

    /// |det K| = number of dimer covers.
    pub fn count_covers(&self) -> BigInt {
        match self.det_exact() {
            None => BigInt::zero(),
            Some(d) => (&d.re * &d.re + &d.im * &d.im).sqrt(),
        }
    }

    /// All perfect matchings, lowest unmatched white first.
    pub fn enumerate_covers(&self, cap: usize) -> Result<Vec<DimerCover>, DimerError> {
        if self.whites.len() > cap {
            return Err(DimerError::TooLarge { whites: self.whites.len(), cap });
        }
        if !self.is_balanced() {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        let mut matching = vec![usize::MAX; self.whites.len()];
        let mut used = vec![false; self.blacks.len()];
        self.match_from(0, &mut matching, &mut used, &mut out);
        Ok(out)
    }

    fn match_from(&self, wi: usize, m: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<DimerCover>) {
        if wi == self.whites.len() {
            out.push(DimerCover { matching: m.clone() });
            return;
        }
        for &(bi, _) in &self.white_adj[wi] {
            if !used[bi] {
                used[bi] = true;
                m[wi] = bi;
                self.match_from(wi + 1, m, used, out);
                used[bi] = false;
            }
        }
    }

    /// Edge-set bitmask of a cover (graphs with at most 128 edges).
    pub fn cover_mask(&self, c: &DimerCover) -> u128 {
        assert!(self.edges.len() <= 128, "bitmask covers at most 128 edges");
        c.matching
            .iter()
            .enumerate()
            .map(|(wi, &bi)| 1u128 << self.edge_index[&(bi, wi)])
            .fold(0, |a, b| a | b)
    }

    /// P[e ∈ ω] by enumeration.
    pub fn edge_probability_enumerated(&self, e: usize) -> Result<Q, DimerError> {
        let covers = self.enumerate_covers(ENUMERATION_CAP)?;
        if covers.is_empty() {
            return Err(DimerError::NoCover);
        }
        let (bi, wi) = self.edges[e];
        let hits = covers.iter().filter(|c| c.matching[wi] == bi).count();
        Ok(BigRational::new(BigInt::from(hits), BigInt::from(covers.len())))
    }

    /// P[e ∈ ω] from K(b,w)·K⁻¹(w,b), cross-checked by enumeration on small graphs.
    pub fn edge_open_probability(&self, e: usize) -> Result<Q, DimerError> {
        let table = CouplingTable::exact(self)?;
        let p = table.edge_probability(e);
        if self.whites.len() <= ENUMERATION_CAP {
            let q = self.edge_probability_enumerated(e)?;
            if q != p {
                return Err(DimerError::Mismatch(format!("edge {e}: determinant {p} vs enumeration {q}")));
            }
        }
        Ok(p)
    }
}

/// Perfect matching as a map white index → black index.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DimerCover {
    pub matching: Vec<usize>,
}

/// An ordered pair (ω, ω̄) of covers, by index into an enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DoubleDimerCover {
    pub first: usize,
    pub second: usize,
}

/// Rational helper: is the value a nonnegative integer?
pub fn is_natural(q: &Q) -> bool {
    q.is_integer() && !q.is_negative()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::q_frac;
    use crate::lattice::pt;

    fn square2() -> DimerGraph {
        DimerGraph::induce(&Domain::rect(0, 0, 1, 1)).unwrap()
    }

    #[test]
    fn two_by_two_kasteleyn() {
        let g = square2();
        assert_eq!(g.blacks(), &[pt(0, 0), pt(1, 1)]);
        assert_eq!(g.whites(), &[pt(1, 0), pt(0, 1)]);
        assert_eq!(g.kasteleyn_exact(), vec![vec![qi(-1, 0), qi(0, 1)], vec![qi(0, -1), qi(1, 0)]]);
        assert!(g.verify_kasteleyn().is_ok());
        assert_eq!(g.count_covers(), BigInt::from(2));
        assert_eq!(g.enumerate_covers(16).unwrap().len(), 2);
    }

    #[test]
    fn flipped_entry_breaks_condition() {
        let g = square2().with_flipped_weight(0);
        assert!(matches!(g.verify_kasteleyn(), Err(DimerError::KasteleynViolation(_))));
    }

    #[test]
    fn temperleyan_three() {
        let d = Domain::rect(0, 0, 2, 2).with_sink(pt(0, 0)).unwrap();
        let g = DimerGraph::induce(&d).unwrap();
        assert_eq!((g.n_whites(), g.n_blacks(), g.n_edges()), (4, 4, 10));
        assert_eq!(g.count_covers(), BigInt::from(4));
        let e = g.edge_of(pt(1, 1), pt(1, 0)).unwrap();
        assert_eq!(g.edge_open_probability(e).unwrap(), q_frac(1, 4));
    }

    #[test]
    fn strips_and_trivia() {
        let g = DimerGraph::induce(&Domain::rect(0, 0, 7, 1)).unwrap();
        assert_eq!(g.count_covers(), BigInt::from(34));
        let empty = DimerGraph::from_points([]);
        assert_eq!(empty.count_covers(), BigInt::from(1));
        let single = DimerGraph::from_points([pt(0, 0), pt(1, 0)]);
        assert_eq!(single.enumerate_covers(16).unwrap().len(), 1);
        assert_eq!(single.edge_open_probability(0).unwrap(), q_frac(1, 1));
        assert!(single.verify_kasteleyn().is_ok());
        let unbalanced = DimerGraph::from_points([pt(0, 0), pt(1, 0), pt(2, 0)]);
        assert!(unbalanced.enumerate_covers(16).unwrap().is_empty());
        assert!(matches!(
            DimerGraph::induce(&Domain::rect(0, 0, 2, 0)),
            Err(DimerError::Unbalanced { whites: 1, blacks: 2 })
        ));
    }

    #[test]
    fn square_edge_probabilities() {
        let g = square2();
        for e in 0..g.n_edges() {
            assert_eq!(g.edge_open_probability(e).unwrap(), q_frac(1, 2));
        }
    }
}

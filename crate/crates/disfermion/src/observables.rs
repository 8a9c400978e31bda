// SPDX-License-Identifier: MIT OR Apache-2.0

//! Fermion pair observables from adapted odd simple paths.
//!
//! This is the brute-force ground truth: for a double-dimer cover (ω, ω̄),
//! `η(w₁)ξ(b₁)⋯η(wₙ)ξ(bₙ) = Σ_σ sgn σ Π_i Σ_λ f(λ) 1_λ` where λ runs over
//! odd simple paths wᵢ ⇝ b_{σ(i)} whose odd edges lie in ω ∩ ω̄.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::dimers::{DimerError, DimerGraph, DoubleDimerCover, ENUMERATION_CAP};
use crate::exact::{qi, Q, QI};
use crate::lattice::{pt, LatticePoint};
use crate::linalg::det_exact;

/// Default cap on the number of enumerated paths.
pub const PATH_CAP: usize = 1_000_000;
/// Default cap on the number of whites for observable tables.
pub const OBSERVABLE_CAP: usize = 14;

/// Odd simple path from a white to a black, as edge indices e₁, …, eₙ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OddPath {
    pub vertices: Vec<LatticePoint>,
    pub edges: Vec<usize>,
}

impl OddPath {
    /// ℓ(λ) = |Even(λ)|.
    pub fn ell(&self) -> usize {
        self.edges.len() / 2
    }

    /// Odd(λ) as an edge bitmask.
    pub fn odd_mask(&self) -> u128 {
        self.edges.iter().step_by(2).fold(0, |m, e| m | (1u128 << e))
    }
}

/// K(b, w) of an edge as an exact scalar.
fn k_of(g: &DimerGraph, e: usize) -> QI {
    let u = g.edge_weight(e);
    qi(u.x, u.y)
}

/// f(λ) = (−1)^ℓ Π_{odd} K(e) Π_{even} conj K(e).
pub fn path_factor(g: &DimerGraph, p: &OddPath) -> QI {
    let mut f = if p.ell() % 2 == 1 { -QI::one() } else { QI::one() };
    for (i, &e) in p.edges.iter().enumerate() {
        let k = k_of(g, e);
        f *= if i % 2 == 0 { k } else { k.conj() };
    }
    f
}

/// Every odd simple path w ⇝ b, in deterministic DFS order.
pub fn enumerate_paths(g: &DimerGraph, w: LatticePoint, b: LatticePoint) -> Result<Vec<OddPath>, DimerError> {
    let (Some(wi), Some(bi)) = (g.white_index(w), g.black_index(b)) else {
        return Ok(Vec::new());
    };
    let mut out = Vec::new();
    let mut seen_w = vec![false; g.n_whites()];
    let mut seen_b = vec![false; g.n_blacks()];
    let mut edges = Vec::new();
    let mut verts = vec![w];
    seen_w[wi] = true;
    fn from_white(
        g: &DimerGraph,
        wi: usize,
        target: usize,
        sw: &mut Vec<bool>,
        sb: &mut Vec<bool>,
        edges: &mut Vec<usize>,
        verts: &mut Vec<LatticePoint>,
        out: &mut Vec<OddPath>,
    ) -> Result<(), DimerError> {
        for &(bi, e) in g.white_neighbors(wi) {
            if sb[bi] {
                continue;
            }
            edges.push(e);
            verts.push(g.blacks()[bi]);
            if bi == target {
                if out.len() >= PATH_CAP {
                    return Err(DimerError::TooLarge { whites: g.n_whites(), cap: PATH_CAP });
                }
                out.push(OddPath { vertices: verts.clone(), edges: edges.clone() });
            } else {
                sb[bi] = true;
                for &(wj, e2) in g.black_neighbors(bi) {
                    if sw[wj] {
                        continue;
                    }
                    sw[wj] = true;
                    edges.push(e2);
                    verts.push(g.whites()[wj]);
                    from_white(g, wj, target, sw, sb, edges, verts, out)?;
                    edges.pop();
                    verts.pop();
                    sw[wj] = false;
                }
                sb[bi] = false;
            }
            edges.pop();
            verts.pop();
        }
        Ok(())
    }
    from_white(g, wi, bi, &mut seen_w, &mut seen_b, &mut edges, &mut verts, &mut out)?;
    Ok(out)
}

/// A random variable on Dim²(G), stored sparsely.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Observable {
    pub n_covers: usize,
    pub table: HashMap<DoubleDimerCover, QI>,
}

impl Observable {
    /// Uniform expectation over the n_covers² double covers.
    pub fn expectation(&self) -> QI {
        let sum = self.table.values().fold(QI::zero(), |a, b| a + b);
        let n2 = BigInt::from(self.n_covers) * BigInt::from(self.n_covers);
        sum / QI::new(Q::from_integer(n2), Q::zero())
    }

    pub fn value(&self, c: DoubleDimerCover) -> QI {
        self.table.get(&c).cloned().unwrap_or_else(QI::zero)
    }
}

/// Enumerated covers plus the per-mask path sums they need.
#[derive(Clone, Debug)]
pub struct PathOracle {
    graph: DimerGraph,
    masks: Vec<u128>,
    /// Distinct a ∧ b over ordered cover pairs, with multiplicities.
    meets: Vec<(u128, usize)>,
}

impl PathOracle {
    pub fn new(g: &DimerGraph) -> Result<Self, DimerError> {
        if g.n_whites() > OBSERVABLE_CAP {
            return Err(DimerError::TooLarge { whites: g.n_whites(), cap: OBSERVABLE_CAP });
        }
        let covers = g.enumerate_covers(ENUMERATION_CAP)?;
        if covers.is_empty() {
            return Err(DimerError::NoCover);
        }
        let masks: Vec<u128> = covers.iter().map(|c| g.cover_mask(c)).collect();
        let mut meets: HashMap<u128, usize> = HashMap::new();
        for a in &masks {
            for b in &masks {
                *meets.entry(a & b).or_default() += 1;
            }
        }
        let mut meets: Vec<_> = meets.into_iter().collect();
        meets.sort_unstable();
        Ok(Self { graph: g.clone(), masks, meets })
    }

    pub fn graph(&self) -> &DimerGraph {
        &self.graph
    }

    pub fn n_covers(&self) -> usize {
        self.masks.len()
    }

    /// Sum of f(λ) over paths from white `wi` to each black, adapted to `m`.
    ///
    /// Odd steps leave a white along its unique edge in m; even steps are free.
    fn adapted_sums(&self, wi: usize, m: u128) -> Vec<QI> {
        let g = &self.graph;
        let mut sums = vec![LatticePoint::default(); g.n_blacks()];
        let mut sw = vec![false; g.n_whites()];
        let mut sb = vec![false; g.n_blacks()];
        fn walk(
            g: &DimerGraph,
            m: u128,
            wi: usize,
            f: LatticePoint,
            sw: &mut Vec<bool>,
            sb: &mut Vec<bool>,
            sums: &mut Vec<LatticePoint>,
        ) {
            sw[wi] = true;
            if let Some(&(bi, e)) = g.white_neighbors(wi).iter().find(|(_, e)| m >> e & 1 == 1) {
                if !sb[bi] {
                    let f = f.mul(g.edge_weight(e));
                    sums[bi] = sums[bi] + f;
                    sb[bi] = true;
                    for &(wj, e2) in g.black_neighbors(bi) {
                        if !sw[wj] {
                            // Each even step contributes −conj K.
                            walk(g, m, wj, -f.mul(g.edge_weight(e2).conj()), sw, sb, sums);
                        }
                    }
                    sb[bi] = false;
                }
            }
            sw[wi] = false;
        }
        walk(g, m, wi, pt(1, 0), &mut sw, &mut sb, &mut sums);
        sums.into_iter().map(|z| qi(z.x, z.y)).collect()
    }

    fn resolve(&self, pairs: &[(LatticePoint, LatticePoint)]) -> Option<(Vec<usize>, Vec<usize>)> {
        let mut ws = Vec::new();
        let mut bs = Vec::new();
        for (w, b) in pairs {
            ws.push(self.graph.white_index(*w)?);
            bs.push(self.graph.black_index(*b)?);
        }
        Some((ws, bs))
    }

    fn tabulate(&self, value: impl Fn(u128) -> QI) -> Observable {
        let mut cache: HashMap<u128, QI> = HashMap::new();
        let mut table = HashMap::new();
        for (i, a) in self.masks.iter().enumerate() {
            for (j, b) in self.masks.iter().enumerate() {
                let m = a & b;
                let v = cache.entry(m).or_insert_with(|| value(m)).clone();
                if !v.is_zero() {
                    table.insert(DoubleDimerCover { first: i, second: j }, v);
                }
            }
        }
        Observable { n_covers: self.masks.len(), table }
    }

    /// η(w₁)ξ(b₁)⋯ as a table over Dim²(G), straight from the definition.
    ///
    /// With two or more pairs this generally differs from
    /// [`observable_disjoint`](Self::observable_disjoint): path systems in which
    /// one path runs through another pair's white have no tail-swap partner.
    pub fn observable(&self, pairs: &[(LatticePoint, LatticePoint)]) -> Observable {
        let Some((ws, bs)) = self.resolve(pairs) else {
            return Observable { n_covers: self.masks.len(), table: HashMap::new() };
        };
        self.tabulate(|m| {
            let rows: Vec<Vec<QI>> = ws
                .iter()
                .map(|&wi| {
                    let s = self.adapted_sums(wi, m);
                    bs.iter().map(|&bi| s[bi].clone()).collect()
                })
                .collect();
            det_exact(rows)
        })
    }

    /// Sum over mutually disjoint path systems only.
    ///
    /// This is the form whose expectation matches Wick's formula and the
    /// Berezin integral.
    pub fn observable_disjoint(&self, pairs: &[(LatticePoint, LatticePoint)]) -> Observable {
        let Some((ws, bs)) = self.resolve(pairs) else {
            return Observable { n_covers: self.masks.len(), table: HashMap::new() };
        };
        self.tabulate(|m| self.disjoint_sum(m, &ws, &bs))
    }

    /// E of [`observable_disjoint`](Self::observable_disjoint) without
    /// tabulating: one path sum per distinct adapted-edge set.
    pub fn expectation_disjoint(&self, pairs: &[(LatticePoint, LatticePoint)]) -> QI {
        let Some((ws, bs)) = self.resolve(pairs) else {
            return QI::zero();
        };
        let mut sum = QI::zero();
        for &(m, mult) in &self.meets {
            let v = self.disjoint_sum(m, &ws, &bs);
            if !v.is_zero() {
                sum += v * QI::new(Q::from_integer(BigInt::from(mult)), Q::zero());
            }
        }
        let n = BigInt::from(self.masks.len());
        sum / QI::new(Q::from_integer(&n * &n), Q::zero())
    }

    fn disjoint_sum(&self, m: u128, ws: &[usize], bs: &[usize]) -> QI {
        struct State<'a> {
            g: &'a DimerGraph,
            m: u128,
            ws: &'a [usize],
            bs: &'a [usize],
            sw: Vec<bool>,
            sb: Vec<bool>,
            sigma: Vec<usize>,
            used: Vec<bool>,
            total: LatticePoint,
        }
        fn perm_sign(s: &[usize]) -> bool {
            let mut odd = false;
            for i in 0..s.len() {
                for j in i + 1..s.len() {
                    odd ^= s[i] > s[j];
                }
            }
            odd
        }
        // Start path number i, or close the system when all are placed.
        fn start(st: &mut State, i: usize, f: LatticePoint) {
            if i == st.ws.len() {
                let t = if perm_sign(&st.sigma) { -f } else { f };
                st.total = st.total + t;
                return;
            }
            let wi = st.ws[i];
            if st.sw[wi] {
                return;
            }
            walk(st, i, wi, f);
        }
        fn walk(st: &mut State, i: usize, wi: usize, f: LatticePoint) {
            st.sw[wi] = true;
            let g = st.g;
            if let Some(&(bi, e)) = g.white_neighbors(wi).iter().find(|(_, e)| st.m >> e & 1 == 1) {
                if !st.sb[bi] {
                    let f = f.mul(g.edge_weight(e));
                    st.sb[bi] = true;
                    for j in 0..st.bs.len() {
                        if st.bs[j] == bi && !st.used[j] {
                            st.used[j] = true;
                            st.sigma.push(j);
                            start(st, i + 1, f);
                            st.sigma.pop();
                            st.used[j] = false;
                        }
                    }
                    for &(wj, e2) in g.black_neighbors(bi) {
                        if !st.sw[wj] {
                            walk(st, i, wj, -f.mul(g.edge_weight(e2).conj()));
                        }
                    }
                    st.sb[bi] = false;
                }
            }
            st.sw[wi] = false;
        }
        let mut st = State {
            g: &self.graph,
            m,
            ws,
            bs,
            sw: vec![false; self.graph.n_whites()],
            sb: vec![false; self.graph.n_blacks()],
            sigma: Vec::new(),
            used: vec![false; bs.len()],
            total: LatticePoint::default(),
        };
        start(&mut st, 0, pt(1, 0));
        qi(st.total.x, st.total.y)
    }

    /// P[e₁, …, e_k ∈ ω] by enumeration.
    pub fn all_open_probability(&self, edges: &[usize]) -> Q {
        let want = edges.iter().fold(0u128, |m, e| m | (1u128 << e));
        let hits = self.masks.iter().filter(|m| *m & want == want).count();
        Q::new(BigInt::from(hits), BigInt::from(self.masks.len()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::q_frac;
    use crate::lattice::Domain;

    fn square2() -> DimerGraph {
        DimerGraph::induce(&Domain::rect(0, 0, 1, 1)).unwrap()
    }

    #[test]
    fn paths_on_square() {
        let g = square2();
        let paths = enumerate_paths(&g, pt(1, 0), pt(0, 0)).unwrap();
        assert_eq!(paths.len(), 2);
        assert_eq!(paths[0].edges.len(), 1);
        assert_eq!(paths[1].edges.len(), 3);
        for p in &paths {
            assert_eq!(path_factor(&g, p), qi(-1, 0));
        }
        let far = DimerGraph::from_points([pt(0, 0), pt(1, 0), pt(4, 0), pt(5, 0)]);
        assert!(enumerate_paths(&far, pt(1, 0), pt(4, 0)).unwrap().is_empty());
    }

    #[test]
    fn one_pair_expectation() {
        let o = PathOracle::new(&square2()).unwrap();
        let v = o.observable(&[(pt(1, 0), pt(0, 0))]);
        assert_eq!(v.expectation(), QI::new(q_frac(-1, 2), Q::zero()));
        assert_eq!(o.observable(&[]).expectation(), qi(1, 0));
        let rep = o.observable(&[(pt(1, 0), pt(0, 0)), (pt(1, 0), pt(1, 1))]);
        assert!(rep.table.is_empty());
    }

    #[test]
    fn disjoint_on_temperleyan() {
        let d = Domain::rect(0, 0, 2, 2).with_sink(pt(0, 0)).unwrap();
        let g = DimerGraph::induce(&d).unwrap();
        let o = PathOracle::new(&g).unwrap();
        let shared = [(pt(1, 0), pt(1, 1)), (pt(2, 1), pt(1, 1))];
        assert!(o.observable_disjoint(&shared).table.is_empty());
        // Single pairs: both forms coincide cover by cover.
        for &w in g.whites() {
            for &b in g.blacks() {
                assert_eq!(o.observable(&[(w, b)]), o.observable_disjoint(&[(w, b)]));
            }
        }
        // Two pairs: the unrestricted sum keeps uncancelled crossings.
        let pairs = [(pt(1, 0), pt(2, 0)), (pt(0, 1), pt(1, 1))];
        assert_eq!(o.observable_disjoint(&pairs).expectation(), QI::new(q_frac(1, 4), Q::zero()));
        assert_eq!(o.observable(&pairs).expectation(), QI::new(q_frac(5, 8), Q::zero()));
        assert_eq!(o.expectation_disjoint(&pairs), QI::new(q_frac(1, 4), Q::zero()));
    }
}

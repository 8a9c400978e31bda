// SPDX-License-Identifier: MIT OR Apache-2.0

//! Exterior algebra over at most 128 generators, Berezin integration and the
//! discretised fermion action of a dimer graph.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::dimers::DimerGraph;
use crate::exact::{q, QI};
use crate::lattice::LatticePoint;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GrassmannError {
    #[error("generator sets differ ({0} vs {1} generators)")]
    Mismatch(usize, usize),
    #[error("too many generators ({0}, limit 128)")]
    TooMany(usize),
    #[error("exponential needs a vanishing constant term")]
    ConstantTerm,
    #[error("order is not a bijection onto 1..={0}")]
    BadOrder(usize),
    #[error("unknown generator {0}")]
    UnknownGenerator(String),
    #[error("partition function vanishes")]
    ZeroPartition,
}

/// Sign of moving the monomial `b` past the monomial `a` into sorted order,
/// i.e. the parity of pairs (i ∈ a, j ∈ b) with i > j.
fn merge_sign(a: u128, b: u128) -> bool {
    let mut odd = false;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        rest &= rest - 1;
        let above = if j >= 127 { 0 } else { a >> (j + 1) };
        odd ^= above.count_ones() % 2 == 1;
    }
    odd
}

/// Sparse element Σ c_S g_S where g_S is the ascending product over S.
#[derive(Clone, PartialEq, Eq)]
pub struct GrassmannElement {
    n: usize,
    terms: BTreeMap<u128, QI>,
}

impl fmt::Debug for GrassmannElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.terms.iter().map(|(m, c)| format!("({}+{}i)·{m:#b}", c.re, c.im)).collect();
        write!(f, "[{}] {}", self.n, parts.join(" + "))
    }
}

impl GrassmannElement {
    pub fn zero(n: usize) -> Self {
        assert!(n <= 128, "at most 128 generators");
        Self { n, terms: BTreeMap::new() }
    }

    pub fn scalar(n: usize, c: QI) -> Self {
        let mut e = Self::zero(n);
        e.add_term(0, c);
        e
    }

    pub fn one(n: usize) -> Self {
        Self::scalar(n, QI::one())
    }

    /// The single generator with index `i`.
    pub fn generator(n: usize, i: usize) -> Self {
        assert!(i < n);
        let mut e = Self::zero(n);
        e.add_term(1u128 << i, QI::one());
        e
    }

    /// Ordered product of generators, e.g. `[1, 0]` gives g₁g₀ = −g₀g₁.
    pub fn monomial(n: usize, gens: &[usize]) -> Self {
        gens.iter().fold(Self::one(n), |acc, &g| acc.mul(&Self::generator(n, g)).expect("same set"))
    }

    pub fn n_generators(&self) -> usize {
        self.n
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, mask: u128) -> QI {
        self.terms.get(&mask).cloned().unwrap_or_else(QI::zero)
    }

    pub fn constant_term(&self) -> QI {
        self.coeff(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (u128, &QI)> {
        self.terms.iter().map(|(m, c)| (*m, c))
    }

    fn add_term(&mut self, mask: u128, c: QI) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry(mask).or_insert_with(QI::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&mask);
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, GrassmannError> {
        if self.n != other.n {
            return Err(GrassmannError::Mismatch(self.n, other.n));
        }
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(*m, c.clone());
        }
        Ok(out)
    }

    pub fn scale(&self, s: &QI) -> Self {
        let mut out = Self::zero(self.n);
        for (m, c) in &self.terms {
            out.add_term(*m, c * s);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Result<Self, GrassmannError> {
        self.mul_filtered(other, |_| true)
    }

    /// Product keeping only result monomials accepted by `keep`.
    pub fn mul_filtered(&self, other: &Self, keep: impl Fn(u128) -> bool) -> Result<Self, GrassmannError> {
        if self.n != other.n {
            return Err(GrassmannError::Mismatch(self.n, other.n));
        }
        let mut out = Self::zero(self.n);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                if a & b != 0 || !keep(a | b) {
                    continue;
                }
                let c = ca * cb;
                out.add_term(a | b, if merge_sign(*a, *b) { -c } else { c });
            }
        }
        Ok(out)
    }

    /// Power series exp(v), which terminates by nilpotency.
    pub fn exp(&self) -> Result<Self, GrassmannError> {
        if !self.constant_term().is_zero() {
            return Err(GrassmannError::ConstantTerm);
        }
        let mut out = Self::one(self.n);
        let mut power = Self::one(self.n);
        let mut k = 0i64;
        loop {
            k += 1;
            power = power.mul(self)?.scale(&QI::new(q(1) / q(k), q(0)));
            if power.is_zero() {
                return Ok(out);
            }
            out = out.add(&power)?;
        }
    }

    /// Berezin integral with respect to `order`, where `order[g]` ∈ 1..=n is
    /// the position of generator g in the top monomial.
    pub fn berezin(&self, order: &[usize]) -> Result<QI, GrassmannError> {
        let sign = order_sign(self.n, order)?;
        let top = if self.n == 128 { u128::MAX } else { (1u128 << self.n) - 1 };
        let c = self.coeff(top);
        Ok(if sign { -c } else { c })
    }
}

/// Parity of the permutation listing generators in `order` sequence.
pub fn order_sign(n: usize, order: &[usize]) -> Result<bool, GrassmannError> {
    if order.len() != n {
        return Err(GrassmannError::BadOrder(n));
    }
    let mut seq = vec![usize::MAX; n];
    for (g, &pos) in order.iter().enumerate() {
        if pos == 0 || pos > n || seq[pos - 1] != usize::MAX {
            return Err(GrassmannError::BadOrder(n));
        }
        seq[pos - 1] = g;
    }
    let mut odd = false;
    for i in 0..n {
        for j in i + 1..n {
            odd ^= seq[i] > seq[j];
        }
    }
    Ok(odd)
}

/// Fermion fields of the action.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Gen {
    Eta(LatticePoint),
    EtaBar(LatticePoint),
    Xi(LatticePoint),
    XiBar(LatticePoint),
}

impl Gen {
    /// Parse `eta:1,0`, `etabar:…`, `xi:…`, `xibar:…`.
    pub fn parse(s: &str) -> Result<Self, GrassmannError> {
        let (kind, at) = s.split_once(':').ok_or_else(|| GrassmannError::UnknownGenerator(s.into()))?;
        let p = LatticePoint::parse(at).map_err(|_| GrassmannError::UnknownGenerator(s.into()))?;
        Ok(match kind.trim() {
            "eta" => Gen::Eta(p),
            "etabar" => Gen::EtaBar(p),
            "xi" => Gen::Xi(p),
            "xibar" => Gen::XiBar(p),
            _ => return Err(GrassmannError::UnknownGenerator(s.into())),
        })
    }
}

/// S = Σ_w η(w)∂̄^Kξ(w) + η̄(w)∂^Kξ̄(w) on a dimer graph.
///
/// Generator indices follow the integration order directly: with ς the
/// position of a vertex in the graph's (y, x) order, ξ(b) ↦ 2ς(b), ξ̄(b) ↦
/// 2ς(b)−1, η(w) ↦ 2ς(w)−1, η̄(w) ↦ 2ς(w) (1-based).
#[derive(Clone, Debug)]
pub struct FermionAction {
    graph: DimerGraph,
    /// ς(white) and ς(black), 1-based.
    white_pos: Vec<usize>,
    black_pos: Vec<usize>,
    n: usize,
}

impl FermionAction {
    pub fn new(g: &DimerGraph) -> Result<Self, GrassmannError> {
        let mut all: Vec<(LatticePoint, bool, usize)> = g
            .whites()
            .iter()
            .enumerate()
            .map(|(i, p)| (*p, true, i))
            .chain(g.blacks().iter().enumerate().map(|(i, p)| (*p, false, i)))
            .collect();
        all.sort_by_key(|(p, _, _)| (p.y, p.x));
        let n = 2 * all.len();
        if n > 128 {
            return Err(GrassmannError::TooMany(n));
        }
        let mut white_pos = vec![0; g.n_whites()];
        let mut black_pos = vec![0; g.n_blacks()];
        for (pos, (_, white, i)) in all.iter().enumerate() {
            if *white {
                white_pos[*i] = pos + 1;
            } else {
                black_pos[*i] = pos + 1;
            }
        }
        Ok(Self { graph: g.clone(), white_pos, black_pos, n })
    }

    pub fn n_generators(&self) -> usize {
        self.n
    }

    /// Zero-based generator index.
    pub fn index(&self, g: Gen) -> Result<usize, GrassmannError> {
        let unknown = || GrassmannError::UnknownGenerator(format!("{g:?}"));
        Ok(match g {
            Gen::Eta(w) => 2 * self.white_pos[self.graph.white_index(w).ok_or_else(unknown)?] - 2,
            Gen::EtaBar(w) => 2 * self.white_pos[self.graph.white_index(w).ok_or_else(unknown)?] - 1,
            Gen::Xi(b) => 2 * self.black_pos[self.graph.black_index(b).ok_or_else(unknown)?] - 1,
            Gen::XiBar(b) => 2 * self.black_pos[self.graph.black_index(b).ok_or_else(unknown)?] - 2,
        })
    }

    /// Identity order: generator i sits at position i+1.
    pub fn order(&self) -> Vec<usize> {
        (1..=self.n).collect()
    }

    fn eta(&self, wi: usize) -> usize {
        2 * self.white_pos[wi] - 2
    }

    fn etabar(&self, wi: usize) -> usize {
        2 * self.white_pos[wi] - 1
    }

    fn xi(&self, bi: usize) -> usize {
        2 * self.black_pos[bi] - 1
    }

    fn xibar(&self, bi: usize) -> usize {
        2 * self.black_pos[bi] - 2
    }

    /// The action as an explicit element.
    pub fn element(&self) -> GrassmannElement {
        let n = self.n;
        let mut s = GrassmannElement::zero(n);
        for &(bi, wi) in self.graph.edges() {
            let k = self.graph.k_exact(bi, wi);
            let a = GrassmannElement::monomial(n, &[self.eta(wi), self.xi(bi)]).scale(&k.conj());
            let b = GrassmannElement::monomial(n, &[self.etabar(wi), self.xibar(bi)]).scale(&k);
            s = s.add(&a).and_then(|x| x.add(&b)).expect("same set");
        }
        s
    }

    /// ∫ X e^S via the factorisation e^S = Π_w (1 + η(w)X_w)(1 + η̄(w)Y_w),
    /// pruning terms that can no longer reach the top monomial.
    pub fn integrate_with(&self, insertion: &GrassmannElement) -> QI {
        let n = self.n;
        let mut acc = insertion.clone();
        // Bits that must already be present once their unique factor is processed.
        let mut required: u128 = 0;
        for sector in [false, true] {
            for wi in 0..self.graph.n_whites() {
                let (head, factor) = if sector {
                    let mut y = GrassmannElement::zero(n);
                    for &(bi, _) in self.graph.white_neighbors(wi) {
                        let m = GrassmannElement::monomial(n, &[self.etabar(wi), self.xibar(bi)]);
                        y = y.add(&m.scale(&self.graph.k_exact(bi, wi))).expect("same set");
                    }
                    (self.etabar(wi), y)
                } else {
                    let mut x = GrassmannElement::zero(n);
                    for &(bi, _) in self.graph.white_neighbors(wi) {
                        let m = GrassmannElement::monomial(n, &[self.eta(wi), self.xi(bi)]);
                        x = x.add(&m.scale(&self.graph.k_exact(bi, wi).conj())).expect("same set");
                    }
                    (self.eta(wi), x)
                };
                let factor = GrassmannElement::one(n).add(&factor).expect("same set");
                required |= 1u128 << head;
                let req = required;
                acc = acc.mul_filtered(&factor, |m| m & req == req).expect("same set");
                if acc.is_zero() {
                    return QI::zero();
                }
            }
        }
        acc.berezin(&self.order()).expect("identity order")
    }

    /// Z = ∫ e^S.
    pub fn partition_function(&self) -> QI {
        self.integrate_with(&GrassmannElement::one(self.n))
    }

    /// ⟨g₁ ⋯ g_k⟩ = Z⁻¹ ∫ g₁ ⋯ g_k e^S.
    pub fn correlator(&self, insertions: &[Gen]) -> Result<QI, GrassmannError> {
        let idx: Vec<usize> = insertions.iter().map(|g| self.index(*g)).collect::<Result<_, _>>()?;
        let z = self.partition_function();
        if z.is_zero() {
            return Err(GrassmannError::ZeroPartition);
        }
        let x = GrassmannElement::monomial(self.n, &idx);
        Ok(self.integrate_with(&x) / z)
    }

    /// ⟨η(w₁)ξ(b₁)⋯η(wₙ)ξ(bₙ)⟩.
    pub fn pair_correlator(&self, pairs: &[(LatticePoint, LatticePoint)]) -> Result<QI, GrassmannError> {
        let gens: Vec<Gen> = pairs.iter().flat_map(|(w, b)| [Gen::Eta(*w), Gen::Xi(*b)]).collect();
        self.correlator(&gens)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{q_frac, qi};
    use crate::lattice::{pt, Domain};

    fn el(n: usize, g: &[usize]) -> GrassmannElement {
        GrassmannElement::monomial(n, g)
    }

    #[test]
    fn antisymmetry() {
        let xy = el(2, &[0, 1]);
        let yx = el(2, &[1, 0]);
        assert_eq!(yx, xy.scale(&qi(-1, 0)));
        assert!(el(2, &[0, 0]).is_zero());
        let one_xy = GrassmannElement::one(2).add(&xy).unwrap();
        let sq = one_xy.mul(&one_xy).unwrap();
        assert_eq!(sq, GrassmannElement::one(2).add(&xy.scale(&qi(2, 0))).unwrap());
        assert!(GrassmannElement::zero(2).mul(&GrassmannElement::one(3)).is_err());
    }

    #[test]
    fn exponentials() {
        let a = qi(3, -1);
        let v = el(2, &[0, 1]).scale(&a);
        assert_eq!(v.exp().unwrap(), GrassmannElement::one(2).add(&v).unwrap());
        assert_eq!(GrassmannElement::zero(4).exp().unwrap(), GrassmannElement::one(4));
        let s = el(4, &[0, 1]).add(&el(4, &[2, 3])).unwrap();
        let want = GrassmannElement::one(4).add(&s).unwrap().add(&el(4, &[0, 1, 2, 3])).unwrap();
        assert_eq!(s.exp().unwrap(), want);
        assert!(GrassmannElement::one(2).exp().is_err());
        assert_eq!(v.exp().unwrap().berezin(&[1, 2]).unwrap(), a);
    }

    #[test]
    fn berezin_orders() {
        let xy = el(2, &[0, 1]);
        assert_eq!(xy.berezin(&[1, 2]).unwrap(), qi(1, 0));
        assert_eq!(xy.berezin(&[2, 1]).unwrap(), qi(-1, 0));
        assert_eq!(GrassmannElement::one(2).berezin(&[1, 2]).unwrap(), qi(0, 0));
        assert!(xy.berezin(&[1, 1]).is_err());
    }

    #[test]
    fn partition_functions() {
        let g = DimerGraph::induce(&Domain::rect(0, 0, 1, 1)).unwrap();
        let a = FermionAction::new(&g).unwrap();
        assert_eq!(a.partition_function(), qi(4, 0));
        // Direct exponential agrees with the factorised product.
        let direct = a.element().exp().unwrap().berezin(&a.order()).unwrap();
        assert_eq!(direct, qi(4, 0));
        let single = FermionAction::new(&DimerGraph::from_points([pt(0, 0), pt(1, 0)])).unwrap();
        assert_eq!(single.partition_function(), qi(1, 0));
        let d = Domain::rect(0, 0, 2, 2).with_sink(pt(0, 0)).unwrap();
        let t = FermionAction::new(&DimerGraph::induce(&d).unwrap()).unwrap();
        assert_eq!(t.partition_function(), qi(16, 0));
    }

    #[test]
    fn correlators_small() {
        let g = DimerGraph::induce(&Domain::rect(0, 0, 1, 1)).unwrap();
        let a = FermionAction::new(&g).unwrap();
        assert_eq!(a.correlator(&[]).unwrap(), qi(1, 0));
        let v = a.pair_correlator(&[(pt(1, 0), pt(0, 0))]).unwrap();
        assert_eq!(v, QI::new(q_frac(-1, 2), q_frac(0, 1)));
        let rep = a.pair_correlator(&[(pt(1, 0), pt(0, 0)), (pt(1, 0), pt(1, 1))]).unwrap();
        assert!(rep.is_zero());
        assert_eq!(Gen::parse("eta:1,0").unwrap(), Gen::Eta(pt(1, 0)));
        assert!(Gen::parse("zeta:1,0").is_err());
    }
}

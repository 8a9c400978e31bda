// SPDX-License-Identifier: MIT OR Apache-2.0

//! Normal-ordered fermion modes, the Sugawara modes L_n and checks of the
//! Virasoro relations on local fields.
//!
//! Operators are kept symbolic as sums of words in [`Factor`]s and applied
//! lazily to one field at a time. Each factor is expanded against the field
//! it acts on: the contour pair is fitted to the field's support and the
//! Sugawara sum is cut where the inner monomial vanishes along γ.

use std::collections::HashMap;
use std::fmt;

use num_complex::Complex;
use serde::Serialize;

use crate::exact::C64;
use crate::fields::{
    mode, Chi, ContourPair, Field, FieldError, LocalField, ModeContext, ModeOp, NullReport, ProbeSuite, ProbeValue,
    DEFAULT_TOL,
};

/// Central charge asserted by the commutation relations.
pub const CENTRAL_CHARGE: f64 = -2.0;
/// Extra Sugawara terms kept past the truncation index.
pub const WINDOW_MARGIN: i32 = 2;

/// :χ⁺_m χ⁻_n:_k as (sign, ordered pair): χ⁺_m χ⁻_n if n − m ≥ k, else
/// −χ⁻_n χ⁺_m.
pub fn normal_ordered(m: i32, n: i32, k: i32) -> (f64, ModeOp) {
    if n - m >= k {
        (1.0, ModeOp::new(mode(Chi::Plus, m), mode(Chi::Minus, n)))
    } else {
        (-1.0, ModeOp::new(mode(Chi::Minus, n), mode(Chi::Plus, m)))
    }
}

/// Coefficient of each term of a Sugawara-type sum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Weight {
    One,
    /// The summation index k.
    K,
}

/// One letter of an operator word.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Factor {
    /// Σ_k w(k) :χ⁺_{total−k} χ⁻_k:_cut; L_n is total n, cut 0, weight 1.
    Sugawara { total: i32, cut: i32, weight: Weight },
    /// :χ⁺_plus χ⁻_minus:_cut.
    Ordered { plus: i32, minus: i32, cut: i32 },
    /// A bare ordered mode pair.
    Pair(ModeOp),
}

impl Factor {
    pub fn l(n: i32) -> Self {
        Factor::Sugawara { total: n, cut: 0, weight: Weight::One }
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Factor::Sugawara { total, cut: 0, weight: Weight::One } => write!(f, "L_{total}"),
            Factor::Sugawara { total, cut, weight } => {
                let w = if *weight == Weight::K { "k·" } else { "" };
                write!(f, "Σ{w}:χ+_{{{total}-k}}χ-_k:_{cut}")
            }
            Factor::Ordered { plus, minus, cut } => write!(f, ":χ+_{plus}χ-_{minus}:_{cut}"),
            Factor::Pair(op) => write!(f, "{}{}", op.outer, op.inner),
        }
    }
}

/// Linear combination of words; each word is applied right to left and the
/// empty word is the identity.
#[derive(Clone, Debug, Default)]
pub struct Operator {
    terms: Vec<(f64, Vec<Factor>)>,
}

impl Operator {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn identity(c: f64) -> Self {
        Self { terms: vec![(c, Vec::new())] }
    }

    pub fn factor(f: Factor) -> Self {
        Self { terms: vec![(1.0, vec![f])] }
    }

    pub fn l(n: i32) -> Self {
        Self::factor(Factor::l(n))
    }

    pub fn terms(&self) -> &[(f64, Vec<Factor>)] {
        &self.terms
    }

    /// self ∘ o.
    pub fn then(&self, o: &Self) -> Self {
        let mut terms = Vec::new();
        for (a, wa) in &self.terms {
            for (b, wb) in &o.terms {
                terms.push((a * b, wa.iter().chain(wb).copied().collect()));
            }
        }
        Self { terms }
    }

    pub fn plus(mut self, o: &Self) -> Self {
        self.terms.extend(o.terms.iter().cloned());
        self
    }

    pub fn minus(self, o: &Self) -> Self {
        self.plus(&o.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { terms: self.terms.iter().map(|(c, w)| (c * s, w.clone())).collect() }
    }

    pub fn commutator(a: &Self, b: &Self) -> Self {
        a.then(b).minus(&b.then(a))
    }
}

fn delta(n: i32) -> f64 {
    if n == 0 {
        1.0
    } else {
        0.0
    }
}

fn even(n: i32) -> f64 {
    if n % 2 == 0 {
        1.0
    } else {
        0.0
    }
}

/// [L_n, L_m] − (n−m)L_{n+m} − (c/12)(n³−n)δ_{n+m} id.
pub fn virasoro_defect(n: i32, m: i32, c: f64) -> Operator {
    let nf = n as f64;
    Operator::commutator(&Operator::l(n), &Operator::l(m))
        .minus(&Operator::l(n + m).scale((n - m) as f64))
        .minus(&Operator::identity(c / 12.0 * (nf * nf * nf - nf) * delta(n + m)))
}

/// [L_n, :χ⁺_l χ⁻_k:_m] + k :χ⁺_l χ⁻_{n+k}:_{−(l+k)} + l :χ⁺_{n+l} χ⁻_k:_{l+k}.
pub fn comm_1step_defect(n: i32, m: i32, l: i32, k: i32) -> Operator {
    let o = Operator::factor(Factor::Ordered { plus: l, minus: k, cut: m });
    Operator::commutator(&Operator::l(n), &o)
        .plus(&Operator::factor(Factor::Ordered { plus: l, minus: n + k, cut: -(l + k) }).scale(k as f64))
        .plus(&Operator::factor(Factor::Ordered { plus: n + l, minus: k, cut: l + k }).scale(l as f64))
}

/// Σ_k :χ⁺_{n+m−k} χ⁻_k:_m − L_{n+m} + δ_{n+m}(|m|/2·1_even(|m|)Θ(−m) + Σ_{0<k<|m|/2} k) id,
/// for m ≠ 0.
pub fn trick1_defect(n: i32, m: i32) -> Operator {
    assert!(m != 0, "trick1 needs m ≠ 0");
    let a = m.abs();
    let tail: i32 = (1..).take_while(|k| 2 * k < a).sum();
    let theta_neg = if m < 0 { 1.0 } else { 0.0 };
    let scalar = a as f64 / 2.0 * even(a) * theta_neg + tail as f64;
    Operator::factor(Factor::Sugawara { total: n + m, cut: m, weight: Weight::One })
        .minus(&Operator::l(n + m))
        .plus(&Operator::identity(delta(n + m) * scalar))
}

/// Σ_k k(:χ⁺_{n+m−k}χ⁻_k:_m − :χ⁺_{n+m−k}χ⁻_k:_{−m}) + ((m³−m)/12 + (m/4)1_even(|m|))δ_{n+m} id,
/// for m ≠ 0.
pub fn trick2_defect(n: i32, m: i32) -> Operator {
    assert!(m != 0, "trick2 needs m ≠ 0");
    let mf = m as f64;
    let scalar = (mf * mf * mf - mf) / 12.0 + mf / 4.0 * even(m.abs());
    Operator::factor(Factor::Sugawara { total: n + m, cut: m, weight: Weight::K })
        .minus(&Operator::factor(Factor::Sugawara { total: n + m, cut: -m, weight: Weight::K }))
        .plus(&Operator::identity(delta(n + m) * scalar))
}

/// :χ⁺_m χ⁻_n:_k − :χ⁺_m χ⁻_n:_l − [k ≤ n−m < l]{χ⁺_m, χ⁻_n}, for k < l,
/// with the anticommutator replaced by its value n δ_{n+m}.
pub fn reorder_defect(k: i32, l: i32, m: i32, n: i32) -> Operator {
    assert!(k < l, "cuts must satisfy k < l");
    let inside = k <= n - m && n - m < l;
    let scalar = if inside { n as f64 * delta(n + m) } else { 0.0 };
    Operator::factor(Factor::Ordered { plus: m, minus: n, cut: k })
        .minus(&Operator::factor(Factor::Ordered { plus: m, minus: n, cut: l }))
        .minus(&Operator::identity(scalar))
}

/// Same identity with the bare anticommutator of modes on the right.
pub fn reorder_operator_defect(k: i32, l: i32, m: i32, n: i32) -> Operator {
    assert!(k < l, "cuts must satisfy k < l");
    let inside = k <= n - m && n - m < l;
    let mut op = Operator::factor(Factor::Ordered { plus: m, minus: n, cut: k })
        .minus(&Operator::factor(Factor::Ordered { plus: m, minus: n, cut: l }));
    if inside {
        let (p, q) = (mode(Chi::Plus, m), mode(Chi::Minus, n));
        op = op
            .minus(&Operator::factor(Factor::Pair(ModeOp::new(p, q))))
            .minus(&Operator::factor(Factor::Pair(ModeOp::new(q, p))));
    }
    op
}

/// Sugawara terms kept for L_n-type sums on one field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Window {
    pub k_min: i32,
    pub k_max: i32,
    /// Truncation index: terms with inner index ≥ N vanish on γ.
    pub truncation: i32,
    pub contours: ContourPair,
}

/// Smallest N with z^[N] vanishing along the diamond of radius `r`.
pub fn truncation_index(ctx: &ModeContext, r: i64) -> Result<i32, FieldError> {
    let fam = ctx.family();
    let hi = *fam.n_range().end();
    (0..=hi)
        .find(|n| fam.null_radius(*n).is_some_and(|r0| r0 >= r + 1))
        .ok_or_else(|| FieldError::Contour(format!("no monomial in the family vanishes out to radius {r}")))
}

/// N for F: the tightest contour around supp F (a radius-1 diamond for a
/// constant) must lie in B♯(0; r₀(N) − 1).
pub fn truncation_bound(ctx: &ModeContext, f: &LocalField) -> Result<i32, FieldError> {
    truncation_index(ctx, (f.support_radius() + 1).max(1))
}

fn ceil_half(x: i32) -> i32 {
    x.div_euclid(2) + x.rem_euclid(2)
}

/// Applies operators to fields with contours fitted per factor.
pub struct Engine<'a> {
    ctx: &'a ModeContext,
    margin: i32,
    slack: i64,
}

impl<'a> Engine<'a> {
    pub fn new(ctx: &'a ModeContext) -> Self {
        Self { ctx, margin: WINDOW_MARGIN, slack: 0 }
    }

    /// Extra Sugawara terms kept beyond the truncation index.
    pub fn with_margin(mut self, margin: i32) -> Self {
        self.margin = margin;
        self
    }

    /// Pushes every inner contour out by `slack`.
    pub fn with_slack(mut self, slack: i64) -> Self {
        self.slack = slack;
        self
    }

    pub fn context(&self) -> &ModeContext {
        self.ctx
    }

    fn rs(&self, k: i32) -> Result<i64, FieldError> {
        self.ctx
            .family()
            .singular_radius(k)
            .ok_or_else(|| FieldError::Contour(format!("monomial index {k} outside the family")))
    }

    /// Ordered pairs (with coefficients) and contours for `factor` acting on
    /// a field of the given support radius.
    pub fn expand(&self, factor: Factor, support: i64) -> Result<(Vec<(f64, ModeOp)>, ContourPair, Option<Window>), FieldError> {
        let base = (support + 2).max(1) + self.slack;
        match factor {
            Factor::Sugawara { total, cut, weight } => {
                let split = ceil_half(total + cut);
                let min_inner = split.min(total - split + 1);
                let inner = base.max(self.rs(min_inner)?);
                let n = truncation_index(self.ctx, inner)?;
                let lo = (total - n + 1).min(split) - self.margin;
                let hi = (n - 1).max(split - 1) + self.margin;
                let top = *self.ctx.family().n_range().end();
                let mut terms = Vec::new();
                let mut outer = inner + 2;
                for k in lo..=hi {
                    let (sign, op) = normal_ordered(total - k, k, cut);
                    // Past the family the null radius keeps growing, so these
                    // margin terms vanish like the ones just above N.
                    if op.inner.k > n - 1 + self.margin || op.inner.k > top {
                        continue;
                    }
                    let w = match weight {
                        Weight::One => 1.0,
                        Weight::K => k as f64,
                    };
                    if w == 0.0 {
                        continue;
                    }
                    if op.inner.k < n {
                        outer = outer.max(self.rs(op.outer.k)?);
                    }
                    terms.push((sign * w, op));
                }
                let c = ContourPair { inner, outer };
                Ok((terms, c, Some(Window { k_min: lo, k_max: hi, truncation: n, contours: c })))
            }
            Factor::Ordered { plus, minus, cut } => {
                let (sign, op) = normal_ordered(plus, minus, cut);
                let c = self.pair_contours(op, base)?;
                Ok((vec![(sign, op)], c, None))
            }
            Factor::Pair(op) => {
                let c = self.pair_contours(op, base)?;
                Ok((vec![(1.0, op)], c, None))
            }
        }
    }

    fn pair_contours(&self, op: ModeOp, base: i64) -> Result<ContourPair, FieldError> {
        let inner = base.max(self.rs(op.inner.k)?);
        let outer = (inner + 2).max(self.rs(op.outer.k)?);
        Ok(ContourPair { inner, outer })
    }

    /// Window used by L_n on a field of the given support radius.
    pub fn window(&self, n: i32, support: i64) -> Result<Window, FieldError> {
        Ok(self.expand(Factor::l(n), support)?.2.expect("Sugawara factor"))
    }

    pub fn apply_factor(&self, factor: Factor, f: &Field) -> Result<Field, FieldError> {
        let (terms, c, _) = self.expand(factor, f.support_radius())?;
        let mut out = Field::zero();
        for (w, op) in terms {
            let g = self.ctx.apply(op, f, c)?;
            out = out.add_scaled(&g, C64::new(w, 0.0));
        }
        Ok(out)
    }

    /// Applies every operator to `f`, sharing common right factors.
    pub fn apply_many(&self, ops: &[&Operator], f: &Field) -> Result<Vec<Field>, FieldError> {
        let mut memo: HashMap<Vec<Factor>, Field> = HashMap::new();
        memo.insert(Vec::new(), f.clone());
        let mut out = Vec::with_capacity(ops.len());
        for op in ops {
            let mut acc = Field::zero();
            for (c, word) in &op.terms {
                if *c == 0.0 {
                    continue;
                }
                // Applied order: rightmost letter first.
                let applied: Vec<Factor> = word.iter().rev().copied().collect();
                for j in 1..=applied.len() {
                    if memo.contains_key(&applied[..j]) {
                        continue;
                    }
                    let prev = &memo[&applied[..j - 1]];
                    let next = self.apply_factor(applied[j - 1], prev)?;
                    memo.insert(applied[..j].to_vec(), next);
                }
                acc = acc.add_scaled(&memo[&applied[..]], C64::new(*c, 0.0));
            }
            out.push(acc);
        }
        Ok(out)
    }

    pub fn apply(&self, op: &Operator, f: &Field) -> Result<Field, FieldError> {
        Ok(self.apply_many(&[op], f)?.pop().expect("one operator"))
    }
}

/// Verdict for one named operator identity on one field.
#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub name: String,
    pub terms: usize,
    pub null: NullReport,
}

impl IdentityReport {
    pub fn is_null(&self) -> bool {
        self.null.is_null()
    }
}

/// Probe suite sized for a batch of residual fields.
fn suite_for(fields: &[&Field], quick: bool) -> Result<ProbeSuite, FieldError> {
    let r = fields.iter().map(|f| f.support_radius()).max().unwrap_or(0) + 4;
    if quick {
        ProbeSuite::quick(r)
    } else {
        ProbeSuite::new(r)
    }
}

/// Applies each identity's operator to F and runs all verdicts on one suite.
pub fn check_identities(
    engine: &Engine<'_>,
    f: &LocalField,
    identities: &[(String, Operator)],
    tol: f64,
    quick: bool,
) -> Result<Vec<IdentityReport>, FieldError> {
    let field = f.to_field();
    let ops: Vec<&Operator> = identities.iter().map(|(_, o)| o).collect();
    let images = engine.apply_many(&ops, &field)?;
    let refs: Vec<&Field> = images.iter().collect();
    let suite = suite_for(&refs, quick)?;
    let reports = suite.null_reports(&refs, tol);
    Ok(identities
        .iter()
        .zip(images.iter().zip(reports))
        .map(|((name, _), (img, null))| IdentityReport { name: name.clone(), terms: img.n_terms(), null })
        .collect())
}

/// One Virasoro relation on one field.
pub fn commutator_check(engine: &Engine<'_>, n: i32, m: i32, f: &LocalField, tol: f64) -> Result<IdentityReport, FieldError> {
    let id = (format!("[L_{n}, L_{m}]"), virasoro_defect(n, m, CENTRAL_CHARGE));
    Ok(check_identities(engine, f, &[id], tol, false)?.pop().expect("one identity"))
}

/// All relations with |n|, |m| ≤ `max`.
pub fn virasoro_identities(max: i32) -> Vec<(String, Operator)> {
    let mut v = Vec::new();
    for n in -max..=max {
        for m in -max..=max {
            v.push((format!("[L_{n}, L_{m}]"), virasoro_defect(n, m, CENTRAL_CHARGE)));
        }
    }
    v
}

/// The four auxiliary identities on the grid |n|, |m|, |k|, |l| ≤ `max`.
pub fn auxiliary_identities(max: i32) -> Vec<(String, Operator)> {
    let r = -max..=max;
    let mut v = Vec::new();
    for n in r.clone() {
        for m in r.clone() {
            for l in r.clone() {
                for k in r.clone() {
                    v.push((format!("comm-1step n={n} m={m} l={l} k={k}"), comm_1step_defect(n, m, l, k)));
                }
            }
            if m != 0 {
                v.push((format!("trick1 n={n} m={m}"), trick1_defect(n, m)));
                v.push((format!("trick2 n={n} m={m}"), trick2_defect(n, m)));
            }
        }
    }
    for k in r.clone() {
        for l in r.clone().filter(|l| *l > k) {
            for m in r.clone() {
                for n in r.clone() {
                    v.push((format!("reorder k={k} l={l} m={m} n={n}"), reorder_defect(k, l, m, n)));
                }
            }
        }
    }
    v
}

/// Least-squares central charge from the δ_{n+m} terms.
#[derive(Clone, Debug, Serialize)]
pub struct CentralChargeFit {
    pub c: f64,
    pub imag: f64,
    /// max over probes of |Y − (c/12)A| / max(|Y|, |A|).
    pub fit_residual: f64,
    pub ns: Vec<i32>,
    pub probes: usize,
}

/// Regresses Y_n = E[([L_n, L_{−n}] − 2n L_0)F] on A_n = (n³−n)/12 · E[F]
/// over all probes of the default suite.
pub fn central_charge(engine: &Engine<'_>, f: &LocalField, ns: &[i32], quick: bool) -> Result<CentralChargeFit, FieldError> {
    let field = f.to_field();
    let ops: Vec<Operator> = ns
        .iter()
        .map(|&n| Operator::commutator(&Operator::l(n), &Operator::l(-n)).minus(&Operator::l(0).scale(2.0 * n as f64)))
        .collect();
    let refs: Vec<&Operator> = ops.iter().collect();
    let images = engine.apply_many(&refs, &field)?;
    let mut all: Vec<&Field> = images.iter().collect();
    all.push(&field);
    let suite = suite_for(&all, quick)?;
    let (_, vals) = suite.values(&all);
    let base: &Vec<ProbeValue> = vals.last().expect("field itself");
    let (mut num, mut den) = (C64::new(0.0, 0.0), 0.0);
    for (i, &n) in ns.iter().enumerate() {
        let nf = n as f64;
        let s = (nf * nf * nf - nf) / 12.0;
        for (y, a) in vals[i].iter().zip(base) {
            let av = a.value * s;
            num += av.conj() * y.value;
            den += av.norm_sqr();
        }
    }
    let c: Complex<f64> = if den > 0.0 { num / den } else { C64::new(f64::NAN, 0.0) };
    let mut fit_residual: f64 = 0.0;
    for (i, &n) in ns.iter().enumerate() {
        let nf = n as f64;
        let s = (nf * nf * nf - nf) / 12.0;
        for (y, a) in vals[i].iter().zip(base) {
            let av = a.value * s;
            let scale = y.value.norm().max(av.norm());
            if scale > 1e-12 {
                fit_residual = fit_residual.max((y.value - av * c).norm() / scale);
            }
        }
    }
    Ok(CentralChargeFit { c: c.re, imag: c.im, fit_residual, ns: ns.to_vec(), probes: base.len() })
}

/// L_n(F) with margin Δ and with Δ + `extra`, differenced.
pub fn window_stability(ctx: &ModeContext, n: i32, f: &LocalField, extra: i32, tol: f64) -> Result<IdentityReport, FieldError> {
    let field = f.to_field();
    let a = Engine::new(ctx).apply(&Operator::l(n), &field)?;
    let b = Engine::new(ctx).with_margin(WINDOW_MARGIN + extra).apply(&Operator::l(n), &field)?;
    let d = a.add_scaled(&b, C64::new(-1.0, 0.0));
    let suite = suite_for(&[&d], false)?;
    Ok(IdentityReport { name: format!("window L_{n} +{extra}"), terms: d.n_terms(), null: suite.null_report(&d, tol) })
}

/// [L_n, L_m] + [L_m, L_n] with the two commutators on different contours.
pub fn antisymmetry_check(ctx: &ModeContext, n: i32, m: i32, f: &LocalField, tol: f64) -> Result<IdentityReport, FieldError> {
    let field = f.to_field();
    let a = Engine::new(ctx).apply(&Operator::commutator(&Operator::l(n), &Operator::l(m)), &field)?;
    let b = Engine::new(ctx).with_slack(1).apply(&Operator::commutator(&Operator::l(m), &Operator::l(n)), &field)?;
    let d = a.add(&b);
    let suite = suite_for(&[&d], false)?;
    Ok(IdentityReport { name: format!("[L_{n}, L_{m}] + [L_{m}, L_{n}]"), terms: d.n_terms(), null: suite.null_report(&d, tol) })
}

/// Default tolerance re-exported for callers of this module.
pub const TOL: f64 = DEFAULT_TOL;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monomials::{FamilySpec, MonomialFamily};
    use std::sync::Arc;

    fn ctx() -> ModeContext {
        ModeContext::new(Arc::new(MonomialFamily::build(FamilySpec { r_max: 28, n_max: 16 }).unwrap()))
    }

    #[test]
    fn ordering_rule() {
        assert_eq!(normal_ordered(1, 2, 0).0, 1.0);
        assert_eq!(normal_ordered(2, 1, 0).0, -1.0);
        let (s, op) = normal_ordered(-1, -1, 0);
        assert_eq!((s, op.outer.chi, op.inner.chi), (1.0, Chi::Plus, Chi::Minus));
        assert_eq!(ceil_half(-3), -1);
        assert_eq!(ceil_half(3), 2);
    }

    #[test]
    fn scalars() {
        // trick2 at m = 2 carries −1, trick1 at m = 1 carries nothing.
        let t2 = trick2_defect(-2, 2);
        assert_eq!(t2.terms().last().unwrap(), &(1.0, Vec::new()));
        let t1 = trick1_defect(-1, 1);
        assert_eq!(t1.terms().last().unwrap(), &(0.0, Vec::new()));
        let v = virasoro_defect(2, -2, CENTRAL_CHARGE);
        assert_eq!(v.terms().last().unwrap(), &(1.0, Vec::new()));
    }

    #[test]
    fn truncation() {
        let c = ctx();
        let one = LocalField::one();
        let n1 = truncation_bound(&c, &one).unwrap();
        let r0 = |n| c.family().null_radius(n).unwrap();
        assert!(r0(n1) >= 2 && (n1 == 0 || r0(n1 - 1) < 2));
        let small = LocalField::parse("eta(1,0)*xi(0,0)").unwrap();
        let big = LocalField::parse("eta(5,0)*xi(0,0)").unwrap();
        assert!(truncation_bound(&c, &small).unwrap() <= truncation_bound(&c, &big).unwrap());
        // z^[N] vanishes along the tightest contour, so every χ^α_m χ^β_N kills F.
        let n = truncation_bound(&c, &small).unwrap();
        for chi in [Chi::Plus, Chi::Minus] {
            assert!(c.smear(mode(chi, n), small.support_radius() + 1).unwrap().points().is_empty());
        }
        let e = Engine::new(&c);
        let f = small.to_field();
        let w = e.window(0, f.support_radius()).unwrap();
        let far = Operator::factor(Factor::Pair(ModeOp::new(mode(Chi::Plus, -1), mode(Chi::Minus, w.truncation))));
        assert_eq!(e.apply(&far, &f).unwrap().n_terms(), 0);
    }

    #[test]
    fn small_relations() {
        let c = ctx();
        let e = Engine::new(&c);
        let f = LocalField::parse("eta(1,0)*xi(0,0)").unwrap();
        let ids = vec![
            ("[L1,L-1]".to_string(), virasoro_defect(1, -1, CENTRAL_CHARGE)),
            ("[L0,L1]".to_string(), virasoro_defect(0, 1, CENTRAL_CHARGE)),
            ("trick2".to_string(), trick2_defect(-1, 1)),
        ];
        for r in check_identities(&e, &f, &ids, DEFAULT_TOL, true).unwrap() {
            assert!(r.is_null(), "{} {:?}", r.name, r.null);
        }
        // A wrong central charge is detected.
        let wrong = vec![("c=0".to_string(), virasoro_defect(2, -2, 0.0))];
        let r = check_identities(&e, &LocalField::one(), &wrong, DEFAULT_TOL, true).unwrap();
        assert!(!r[0].is_null());
    }
}

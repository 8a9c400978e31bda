// SPDX-License-Identifier: MIT OR Apache-2.0

//! Local fields, their evaluation on finite domains, probe-based nullity and
//! the fermion current modes.
//!
//! A local field is a polynomial in the pair generators φ̂(z)φ̂(w). Its
//! evaluation at z on a graph is antisymmetric and multilinear in the
//! individual φ̂ slots, so the expectation of a product of slots is the
//! Pfaffian of the pairwise two-point forms: ⟨φ̂(w)φ̂(b)⟩ = E[η(w)ξ(b)] for an
//! absolute white w and black b, its negative in the other order, and zero
//! between equal colours. That is the same as sorting the slots into
//! (white, black, …) order with the sorting sign and taking the Wick
//! determinant. Mode images are kept in factored form: each mode contributes
//! one pair of "smeared" slots (linear combinations of φ̂ along a contour),
//! so evaluation never expands the contour double sums.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use num_complex::Complex;
use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::correlators::{CouplingTable, FloatCoupling};
use crate::dimers::{DimerError, DimerGraph};
use crate::exact::{q, qi, qi_to_c64, C64, Q, QI};
use crate::lattice::{pt, Domain, DualContour, LatticeError, LatticePoint, STEPS};
use crate::linalg::{pfaffian_c64, pfaffian_in_place};
use rayon::prelude::*;
use crate::monomials::{shared_family, FamilySpec, MonomialError, MonomialFamily};

/// Family coverage used by mode computations: two stages of Virasoro modes
/// with |n| ≤ 4 around fields of radius ≤ 3 stay inside it.
pub const FIELD_FAMILY: FamilySpec = FamilySpec { r_max: 44, n_max: 22 };
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("contour constraint violated: {0}")]
    Contour(String),
    #[error(transparent)]
    Monomial(#[from] MonomialError),
    #[error(transparent)]
    Dimer(#[from] DimerError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Ordered pairs (z, w) standing for φ̂(z)φ̂(w), kept sorted.
pub type PairMonomial = Vec<(LatticePoint, LatticePoint)>;

/// Element of F_loc with Gaussian-rational coefficients. Pair generators
/// commute, so monomials are stored with their pairs sorted; the order inside
/// a pair is part of the generator.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct LocalField {
    terms: BTreeMap<PairMonomial, QI>,
}

impl LocalField {
    pub fn zero() -> Self {
        Self::default()
    }

    /// The unit field (empty monomial).
    pub fn one() -> Self {
        Self::from_terms([(qi(1, 0), Vec::new())])
    }

    /// φ̂(a)φ̂(b).
    pub fn pair(a: LatticePoint, b: LatticePoint) -> Self {
        Self::from_terms([(qi(1, 0), vec![(a, b)])])
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (QI, PairMonomial)>) -> Self {
        let mut out = Self::zero();
        for (c, mut m) in terms {
            m.sort();
            out.add_term(m, c);
        }
        out
    }

    fn add_term(&mut self, m: PairMonomial, c: QI) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry(m.clone()).or_insert_with(QI::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PairMonomial, &QI)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(&qi(-1, 0)))
    }

    pub fn scale(&self, s: &QI) -> Self {
        Self::from_terms(self.terms.iter().map(|(m, c)| (c * s, m.clone())))
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut out = Self::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &o.terms {
                let mut m: PairMonomial = m1.iter().chain(m2).copied().collect();
                m.sort();
                out.add_term(m, c1 * c2);
            }
        }
        out
    }

    /// Sorted distinct vertices of supp♯F.
    pub fn support(&self) -> Vec<LatticePoint> {
        let mut v: Vec<_> = self.terms.keys().flat_map(|m| m.iter().flat_map(|(a, b)| [*a, *b])).collect();
        v.sort();
        v.dedup();
        v
    }

    /// max ‖z‖ over the support, −1 for a constant field.
    pub fn support_radius(&self) -> i64 {
        self.support().iter().map(|p| p.norm()).max().unwrap_or(-1)
    }

    pub fn to_field(&self) -> Field {
        Field {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| FieldTerm {
                    coeff: qi_to_c64(c),
                    pairs: m.iter().map(|(a, b)| (Gen::Point(*a), Gen::Point(*b))).collect(),
                })
                .collect(),
        }
    }

    /// Parse the literal syntax, e.g. `eta(1,0)*xi(0,0) + 2*eta(1,0)*eta(-1,0)`.
    ///
    /// Generators: `phi`, `eta` (white), `xi` (black), `chim` (= eta),
    /// `chip` (= ∂ξ̂ at a white), `dbxi` (= ∂̄ξ̂ at a white). Coefficients are
    /// integers, decimals, fractions and `i`; products keep their order.
    pub fn parse(s: &str) -> Result<Self, FieldError> {
        let mut p = Parser { s: s.as_bytes(), pos: 0 };
        let lin = p.expr()?;
        p.skip_ws();
        if p.pos != p.s.len() {
            return Err(p.err("unexpected trailing input"));
        }
        let mut out = Self::zero();
        for (c, pts) in lin {
            if pts.len() % 2 == 1 {
                return Err(FieldError::Parse { pos: s.len(), msg: "a monomial has an odd number of generators".into() });
            }
            let mut m: PairMonomial = pts.chunks(2).map(|w| (w[0], w[1])).collect();
            m.sort();
            out.add_term(m, c);
        }
        Ok(out)
    }
}

fn fmt_q(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

impl fmt::Display for LocalField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            let coeff = match (c.re.is_zero(), c.im.is_zero()) {
                (_, true) => format!("({})", fmt_q(&c.re)),
                (true, false) => format!("({}*i)", fmt_q(&c.im)),
                _ => format!("({} + {}*i)", fmt_q(&c.re), fmt_q(&c.im)),
            };
            write!(f, "{coeff}")?;
            for (a, b) in m {
                write!(f, "*phi({},{})*phi({},{})", a.x, a.y, b.x, b.y)?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for LocalField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LocalField[{self}]")
    }
}

/// Ordered products of φ̂ with coefficients, the parser's working type.
type Lin = Vec<(QI, Vec<LatticePoint>)>;

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> FieldError {
        FieldError::Parse { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), FieldError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected '{}'", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Lin, FieldError> {
        let mut sign = qi(1, 0);
        if let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            if c == b'-' {
                sign = qi(-1, 0);
            }
        }
        let mut acc = scale_lin(self.term()?, &sign);
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let t = self.term()?;
            acc.extend(if c == b'-' { scale_lin(t, &qi(-1, 0)) } else { t });
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Lin, FieldError> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let f = self.factor()?;
                    acc = mul_lin(&acc, &f);
                }
                Some(b'/') => {
                    self.pos += 1;
                    let f = self.factor()?;
                    let [(c, pts)] = f.as_slice() else { return Err(self.err("can only divide by a number")) };
                    if !pts.is_empty() || c.is_zero() {
                        return Err(self.err("can only divide by a nonzero number"));
                    }
                    let inv = {
                        let den = &c.re * &c.re + &c.im * &c.im;
                        Complex::new(&c.re / &den, -&c.im / &den)
                    };
                    acc = scale_lin(acc, &inv);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn int(&mut self) -> Result<i64, FieldError> {
        self.skip_ws();
        let start = self.pos;
        if matches!(self.s.get(self.pos), Some(b'-' | b'+')) {
            self.pos += 1;
        }
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.s[start..self.pos])
            .ok()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| self.err("expected an integer"))
    }

    fn factor(&mut self) -> Result<Lin, FieldError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(b'-') => {
                self.pos += 1;
                Ok(scale_lin(self.factor()?, &qi(-1, 0)))
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self.pos < self.s.len() && (self.s[self.pos].is_ascii_digit() || self.s[self.pos] == b'.') {
                    self.pos += 1;
                }
                let text = std::str::from_utf8(&self.s[start..self.pos]).expect("ascii");
                let v = parse_decimal(text).ok_or_else(|| self.err("bad number"))?;
                Ok(vec![(Complex::new(v, Q::zero()), Vec::new())])
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.s.len() && self.s[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.s[start..self.pos]).expect("ascii").to_string();
                if name == "i" {
                    return Ok(vec![(qi(0, 1), Vec::new())]);
                }
                self.expect(b'(')?;
                let x = self.int()?;
                self.expect(b',')?;
                let y = self.int()?;
                self.expect(b')')?;
                let p = pt(x, y);
                let need = |ok: bool, what: &str| if ok { Ok(()) } else { Err(FieldError::Parse { pos: start, msg: format!("{name}{p:?}: {what}") }) };
                match name.as_str() {
                    "phi" => Ok(vec![(qi(1, 0), vec![p])]),
                    "eta" | "chim" => {
                        need(p.is_white(), "needs a white vertex")?;
                        Ok(vec![(qi(1, 0), vec![p])])
                    }
                    "xi" => {
                        need(p.is_black(), "needs a black vertex")?;
                        Ok(vec![(qi(1, 0), vec![p])])
                    }
                    "chip" => {
                        need(p.is_white(), "needs a white vertex")?;
                        Ok(STEPS.iter().map(|d| (qi(d.x, -d.y), vec![p + *d])).collect())
                    }
                    "dbxi" => {
                        need(p.is_white(), "needs a white vertex")?;
                        Ok(STEPS.iter().map(|d| (qi(d.x, d.y), vec![p + *d])).collect())
                    }
                    _ => Err(FieldError::Parse { pos: start, msg: format!("unknown generator '{name}'") }),
                }
            }
            _ => Err(self.err("expected a number, a generator or '('")),
        }
    }
}

fn parse_decimal(t: &str) -> Option<Q> {
    let (int, frac) = t.split_once('.').unwrap_or((t, ""));
    if int.is_empty() && frac.is_empty() || frac.contains('.') {
        return None;
    }
    let digits = format!("{int}{frac}");
    let n: num_bigint::BigInt = digits.parse().ok()?;
    Some(Q::new(n, num_bigint::BigInt::from(10u32).pow(frac.len() as u32)))
}

fn scale_lin(l: Lin, s: &QI) -> Lin {
    l.into_iter().map(|(c, p)| (c * s, p)).collect()
}

fn mul_lin(a: &Lin, b: &Lin) -> Lin {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for (c1, p1) in a {
        for (c2, p2) in b {
            out.push((c1 * c2, p1.iter().chain(p2).copied().collect()));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Factored fields

static NEXT_SMEAR: AtomicU64 = AtomicU64::new(0);

/// A fixed linear combination Σ c_p φ̂(p) of generators.
#[derive(Clone, Debug)]
pub struct Smear {
    id: u64,
    points: Vec<(LatticePoint, C64)>,
    l1: f64,
}

impl Smear {
    pub fn new(points: impl IntoIterator<Item = (LatticePoint, C64)>) -> Self {
        let mut m: BTreeMap<LatticePoint, C64> = BTreeMap::new();
        for (p, c) in points {
            *m.entry(p).or_insert_with(C64::zero) += c;
        }
        let points: Vec<_> = m.into_iter().filter(|(_, c)| *c != C64::zero()).collect();
        let l1 = points.iter().map(|(_, c)| c.norm()).sum();
        Self { id: NEXT_SMEAR.fetch_add(1, Ordering::Relaxed), points, l1 }
    }

    pub fn points(&self) -> &[(LatticePoint, C64)] {
        &self.points
    }

    pub fn radius(&self) -> i64 {
        self.points.iter().map(|(p, _)| p.norm()).max().unwrap_or(-1)
    }
}

/// One φ̂ slot: a single generator or a smeared combination.
#[derive(Clone, Debug)]
pub enum Gen {
    Point(LatticePoint),
    Smear(Arc<Smear>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum GenKey {
    Point(LatticePoint),
    Smear(u64),
}

impl Gen {
    fn key(&self) -> GenKey {
        match self {
            Gen::Point(p) => GenKey::Point(*p),
            Gen::Smear(s) => GenKey::Smear(s.id),
        }
    }

    pub fn radius(&self) -> i64 {
        match self {
            Gen::Point(p) => p.norm(),
            Gen::Smear(s) => s.radius(),
        }
    }

    pub fn l1(&self) -> f64 {
        match self {
            Gen::Point(_) => 1.0,
            Gen::Smear(s) => s.l1,
        }
    }

    fn for_each_point(&self, mut f: impl FnMut(LatticePoint, C64)) {
        match self {
            Gen::Point(p) => f(*p, C64::one()),
            Gen::Smear(s) => s.points.iter().for_each(|(p, c)| f(*p, *c)),
        }
    }
}

#[derive(Clone, Debug)]
pub struct FieldTerm {
    pub coeff: C64,
    pub pairs: Vec<(Gen, Gen)>,
}

/// A local field in factored form (sum of products of slot pairs).
#[derive(Clone, Debug, Default)]
pub struct Field {
    terms: Vec<FieldTerm>,
}

impl From<&LocalField> for Field {
    fn from(f: &LocalField) -> Self {
        f.to_field()
    }
}

impl Field {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn terms(&self) -> &[FieldTerm] {
        &self.terms
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn push(&mut self, t: FieldTerm) {
        if t.coeff != C64::zero() {
            self.terms.push(t);
        }
    }

    pub fn add(mut self, o: &Field) -> Self {
        self.terms.extend(o.terms.iter().cloned());
        self
    }

    pub fn add_scaled(mut self, o: &Field, s: C64) -> Self {
        if s != C64::zero() {
            self.terms.extend(o.terms.iter().map(|t| FieldTerm { coeff: t.coeff * s, pairs: t.pairs.clone() }));
        }
        self
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::zero().add_scaled(self, s)
    }

    /// max ‖z‖ over all slots, −1 for a constant field.
    pub fn support_radius(&self) -> i64 {
        self.terms.iter().flat_map(|t| t.pairs.iter().flat_map(|(a, b)| [a.radius(), b.radius()])).max().unwrap_or(-1)
    }

    /// Multiply out every smear into point monomials (for small cases).
    pub fn expand(&self) -> Vec<(C64, Vec<LatticePoint>)> {
        let mut out = Vec::new();
        for t in &self.terms {
            let mut acc: Vec<(C64, Vec<LatticePoint>)> = vec![(t.coeff, Vec::new())];
            for g in t.pairs.iter().flat_map(|(a, b)| [a, b]) {
                let mut next = Vec::new();
                for (c, pts) in &acc {
                    g.for_each_point(|p, w| {
                        let mut v = pts.clone();
                        v.push(p);
                        next.push((c * w, v));
                    });
                }
                acc = next;
            }
            out.extend(acc);
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Evaluation

/// Sign of the permutation sorting a colour sequence into (w, b, w, b, …)
/// with whites and blacks each kept in order of appearance; `None` when the
/// colour counts differ.
pub fn sorting_sign(is_white: &[bool]) -> Option<i64> {
    let whites: Vec<usize> = (0..is_white.len()).filter(|&i| is_white[i]).collect();
    let blacks: Vec<usize> = (0..is_white.len()).filter(|&i| !is_white[i]).collect();
    if whites.len() != blacks.len() {
        return None;
    }
    let target: Vec<usize> = whites.iter().zip(&blacks).flat_map(|(w, b)| [*w, *b]).collect();
    let mut seen = vec![false; target.len()];
    let mut sign = 1;
    for i in 0..target.len() {
        if seen[i] {
            continue;
        }
        let mut j = i;
        let mut len = 0;
        while !seen[j] {
            seen[j] = true;
            j = target[j];
            len += 1;
        }
        if len % 2 == 0 {
            sign = -sign;
        }
    }
    Some(sign)
}

/// Exact E[ev_z(F)] straight from the definition: per monomial, translate
/// by z, drop it if a vertex leaves the graph (the sink counts as outside) or
/// the colours are unbalanced, else sorting sign × Wick determinant.
pub fn evaluate_exact(f: &LocalField, z: LatticePoint, table: &CouplingTable) -> QI {
    let g = table.graph();
    let mut total = QI::zero();
    'mono: for (m, c) in f.terms() {
        let pts: Vec<LatticePoint> = m.iter().flat_map(|(a, b)| [*a + z, *b + z]).collect();
        for p in &pts {
            if !g.contains(*p) {
                continue 'mono;
            }
        }
        let colours: Vec<bool> = pts.iter().map(|p| p.is_white()).collect();
        let Some(sign) = sorting_sign(&colours) else { continue };
        let whites = pts.iter().filter(|p| p.is_white()).copied();
        let blacks = pts.iter().filter(|p| p.is_black()).copied();
        let pairs: Vec<_> = whites.zip(blacks).collect();
        total += table.multipoint(&pairs) * c * q(sign);
    }
    total
}

/// A dimerable probe domain with its factored coupling.
pub struct ProbeDomain {
    pub domain: Domain,
    graph: DimerGraph,
    coupling: FloatCoupling,
}

impl ProbeDomain {
    pub fn new(domain: Domain) -> Result<Self, FieldError> {
        let graph = DimerGraph::induce(&domain)?;
        let coupling = FloatCoupling::new(&graph)?;
        Ok(Self { domain, graph, coupling })
    }

    pub fn graph(&self) -> &DimerGraph {
        &self.graph
    }

    /// Evaluation slot at z; caches solves per generator.
    pub fn slot(&self, z: LatticePoint) -> Slot<'_> {
        Slot { pd: self, z, gens: HashMap::new(), forms: HashMap::new() }
    }
}

struct GenData {
    /// (white index, coefficient) of the absolute-white part.
    whites: Vec<(usize, C64)>,
    /// (T·v)(w) over all whites for the black part v, T = conj K⁻¹.
    tv: Option<Vec<C64>>,
}

/// Per-(domain, z) cache of generator data and two-point forms.
pub struct Slot<'a> {
    pd: &'a ProbeDomain,
    z: LatticePoint,
    gens: HashMap<GenKey, Arc<GenData>>,
    forms: HashMap<(GenKey, GenKey), C64>,
}

impl Slot<'_> {
    pub fn z(&self) -> LatticePoint {
        self.z
    }

    fn data(&mut self, g: &Gen) -> Arc<GenData> {
        if let Some(d) = self.gens.get(&g.key()) {
            return Arc::clone(d);
        }
        let graph = &self.pd.graph;
        let mut whites = Vec::new();
        let mut v = vec![C64::zero(); graph.n_blacks()];
        let mut any_black = false;
        let z = self.z;
        g.for_each_point(|p, c| {
            let a = p + z;
            if let Some(wi) = graph.white_index(a) {
                whites.push((wi, c));
            } else if let Some(bi) = graph.black_index(a) {
                v[bi] += c.conj();
                any_black = true;
            }
        });
        let tv = any_black.then(|| {
            self.pd.coupling.solve(&mut v);
            v.iter_mut().for_each(|x| *x = x.conj());
            v
        });
        let d = Arc::new(GenData { whites, tv });
        self.gens.insert(g.key(), Arc::clone(&d));
        d
    }

    /// ⟨s t⟩: the evaluation of the ordered slot pair s·t.
    fn form(&mut self, s: &Gen, t: &Gen) -> C64 {
        let (ks, kt) = (s.key(), t.key());
        if ks == kt {
            return C64::zero();
        }
        let (key, flip) = if ks < kt { ((ks, kt), false) } else { ((kt, ks), true) };
        let v = match self.forms.get(&key) {
            Some(v) => *v,
            None => {
                let (a, b) = if flip { (t, s) } else { (s, t) };
                let (da, db) = (self.data(a), self.data(b));
                let mut v = C64::zero();
                if let Some(tv) = &db.tv {
                    v += da.whites.iter().map(|(i, c)| c * tv[*i]).sum::<C64>();
                }
                if let Some(tv) = &da.tv {
                    v -= db.whites.iter().map(|(i, c)| c * tv[*i]).sum::<C64>();
                }
                self.forms.insert(key, v);
                v
            }
        };
        if flip {
            -v
        } else {
            v
        }
    }

    /// E[ev_z(slots)] for an ordered slot sequence.
    pub fn expect_slots(&mut self, slots: &[&Gen]) -> C64 {
        let n = slots.len();
        if n % 2 == 1 {
            return C64::zero();
        }
        if n == 0 {
            return C64::one();
        }
        let mut a = vec![vec![C64::zero(); n]; n];
        for i in 0..n {
            for j in i + 1..n {
                a[i][j] = self.form(slots[i], slots[j]);
            }
        }
        if n == 2 {
            return a[0][1];
        }
        pfaffian_c64(a)
    }

    /// E[ev_z(F·φ̂(x₁)…φ̂(x_k))] with its cancellation scales.
    pub fn probe(&mut self, f: &Field, insertions: &[Gen]) -> ProbeValue {
        let mut out = ProbeValue { value: C64::zero(), scale: 0.0, bound: 0.0 };
        for t in &f.terms {
            let slots: Vec<&Gen> = t.pairs.iter().flat_map(|(a, b)| [a, b]).chain(insertions.iter()).collect();
            let v = t.coeff * self.expect_slots(&slots);
            out.value += v;
            out.scale += v.norm();
            out.bound += t.coeff.norm() * slots.iter().map(|g| g.l1()).product::<f64>();
        }
        out
    }

    pub fn expect(&mut self, f: &Field) -> C64 {
        self.probe(f, &[]).value
    }
}

/// Fields compiled against one generator table, for batched probing.
struct Compiled {
    gens: Vec<Gen>,
    /// Per field: (coefficient, slot indices, bound factor).
    fields: Vec<Vec<(C64, Vec<u32>, f64)>>,
}

impl Compiled {
    fn new(fields: &[&Field]) -> Self {
        let mut index: HashMap<GenKey, u32> = HashMap::new();
        let mut gens = Vec::new();
        let mut id = |g: &Gen| -> u32 {
            *index.entry(g.key()).or_insert_with(|| {
                gens.push(g.clone());
                (gens.len() - 1) as u32
            })
        };
        let fields = fields
            .iter()
            .map(|f| {
                f.terms
                    .iter()
                    .map(|t| {
                        let slots: Vec<u32> = t.pairs.iter().flat_map(|(a, b)| [id(a), id(b)]).collect();
                        let bound = t.coeff.norm() * t.pairs.iter().map(|(a, b)| a.l1() * b.l1()).product::<f64>();
                        (t.coeff, slots, bound)
                    })
                    .collect()
            })
            .collect();
        Self { gens, fields }
    }

    /// Probe values at (pd, z) for every insertion set: out[set][field].
    fn evaluate(&self, pd: &ProbeDomain, z: LatticePoint, insertions: &[Vec<LatticePoint>]) -> Vec<Vec<ProbeValue>> {
        let mut slot = pd.slot(z);
        let mut gens = self.gens.clone();
        let first_ins = gens.len();
        let mut ins_idx = Vec::new();
        for set in insertions {
            ins_idx.push((gens.len()..gens.len() + set.len()).map(|i| i as u32).collect::<Vec<_>>());
            gens.extend(set.iter().map(|p| Gen::Point(*p)));
        }
        let data: Vec<Arc<GenData>> = gens.iter().map(|g| slot.data(g)).collect();
        let g = gens.len();
        // Only pairs that can co-occur are needed; insertion sets never meet.
        let mut forms = vec![C64::zero(); g * g];
        let form = |a: &GenData, b: &GenData| {
            let mut v = C64::zero();
            if let Some(tv) = &b.tv {
                v += a.whites.iter().map(|(i, c)| c * tv[*i]).sum::<C64>();
            }
            if let Some(tv) = &a.tv {
                v -= b.whites.iter().map(|(i, c)| c * tv[*i]).sum::<C64>();
            }
            v
        };
        for i in 0..g {
            for j in i + 1..g {
                if i >= first_ins && j >= first_ins && !ins_idx.iter().any(|s| s.contains(&(i as u32)) && s.contains(&(j as u32))) {
                    continue;
                }
                let v = if gens[i].key() == gens[j].key() { C64::zero() } else { form(&data[i], &data[j]) };
                forms[i * g + j] = v;
                forms[j * g + i] = -v;
            }
        }
        let mut buf = Vec::new();
        let mut idx = Vec::new();
        ins_idx
            .iter()
            .map(|ins| {
                self.fields
                    .iter()
                    .map(|terms| {
                        let mut out = ProbeValue { value: C64::zero(), scale: 0.0, bound: 0.0 };
                        for (c, slots, bound) in terms {
                            idx.clear();
                            idx.extend(slots.iter().chain(ins).map(|&i| i as usize));
                            let n = idx.len();
                            let e = if n % 2 == 1 {
                                C64::zero()
                            } else if n == 0 {
                                C64::one()
                            } else if n == 2 {
                                forms[idx[0] * g + idx[1]]
                            } else {
                                buf.clear();
                                buf.resize(n * n, C64::zero());
                                for a in 0..n {
                                    for b in a + 1..n {
                                        buf[a * n + b] = forms[idx[a] * g + idx[b]];
                                    }
                                }
                                pfaffian_in_place(n, &mut buf)
                            };
                            let v = c * e;
                            out.value += v;
                            out.scale += v.norm();
                            out.bound += bound;
                        }
                        out
                    })
                    .collect()
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Probes and nullity

/// One probe evaluation. `scale` = Σ_t |c_t E_t| measures the cancellation
/// between terms, `bound` = Σ_t |c_t| Π ‖slot‖₁ the size of the inputs the
/// rounding error is proportional to.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ProbeValue {
    pub value: C64,
    pub scale: f64,
    pub bound: f64,
}

/// Values below `NOISE_FLOOR · bound` are rounding noise.
pub const NOISE_FLOOR: f64 = 1e-6;

impl ProbeValue {
    /// |value| / max(scale, NOISE_FLOOR · bound), 0 when both vanish.
    pub fn residual(&self) -> f64 {
        let den = self.scale.max(NOISE_FLOOR * self.bound);
        if den > 0.0 {
            self.value.norm() / den
        } else {
            0.0
        }
    }
}

/// Insertion patterns placed just outside the exclusion radius.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum InsertionKind {
    /// White–black pair in one of four directions.
    Pair(u8),
    WhiteWhite,
    BlackBlack,
    TwoPairs,
}

const INSERTIONS: [InsertionKind; 7] = [
    InsertionKind::Pair(0),
    InsertionKind::Pair(1),
    InsertionKind::Pair(2),
    InsertionKind::Pair(3),
    InsertionKind::WhiteWhite,
    InsertionKind::BlackBlack,
    InsertionKind::TwoPairs,
];

/// A point with ‖p‖ > R in direction `dir` whose translate by z has the
/// requested colour (white, or any black).
fn insertion_point(r: i64, dir: u8, z: LatticePoint, white: bool, lateral: i64) -> LatticePoint {
    let u = STEPS[dir as usize];
    let perp = u.rot90();
    let base = pt(u.x * (r + 1) + perp.x * lateral, u.y * (r + 1) + perp.y * lateral);
    let mut p = base;
    if (p + z).is_white() != white {
        p = p + u;
    }
    p
}

fn insertion_set(kind: InsertionKind, r: i64, z: LatticePoint) -> Vec<LatticePoint> {
    match kind {
        InsertionKind::Pair(d) => vec![insertion_point(r, d, z, true, 0), insertion_point(r, d, z, false, 2)],
        InsertionKind::WhiteWhite => vec![insertion_point(r, 0, z, true, 1), insertion_point(r, 1, z, true, -1)],
        InsertionKind::BlackBlack => vec![insertion_point(r, 2, z, false, 1), insertion_point(r, 3, z, false, -1)],
        InsertionKind::TwoPairs => vec![
            insertion_point(r, 0, z, true, -2),
            insertion_point(r, 1, z, false, 2),
            insertion_point(r, 2, z, true, -2),
            insertion_point(r, 3, z, false, 2),
        ],
    }
}

/// One probe (G, z, z₁…z_k) of the suite.
#[derive(Clone, Debug, Serialize)]
pub struct ProbeLabel {
    pub half_side: i64,
    pub z: LatticePoint,
    pub kind: InsertionKind,
    pub insertions: Vec<LatticePoint>,
}

/// Squares with corner sinks, evaluation points of every parity class and
/// insertions outside B♯(0; R).
pub struct ProbeSuite {
    radius: i64,
    domains: Vec<(i64, ProbeDomain)>,
    points: Vec<LatticePoint>,
}

impl ProbeSuite {
    /// Default sizes: half-sides R+6, R+10, R+14.
    pub fn new(radius: i64) -> Result<Self, FieldError> {
        Self::with_sizes(radius, &[6, 10, 14])
    }

    /// One small square only; for quick checks.
    pub fn quick(radius: i64) -> Result<Self, FieldError> {
        Self::with_sizes(radius, &[6])
    }

    pub fn with_sizes(radius: i64, margins: &[i64]) -> Result<Self, FieldError> {
        let radius = radius.max(1);
        let mut domains = Vec::new();
        for m in margins {
            let d = Domain::temperleyan_square(radius + m);
            let h = d.bounding_box().map_or(0, |(_, hi)| hi.x);
            domains.push((h, ProbeDomain::new(d)?));
        }
        Ok(Self { radius, domains, points: vec![pt(0, 0), pt(1, 1), pt(1, 0), pt(0, 1)] })
    }

    pub fn radius(&self) -> i64 {
        self.radius
    }

    pub fn n_probes(&self) -> usize {
        self.domains.len() * self.points.len() * INSERTIONS.len()
    }

    /// Probe values for every field: result[f][probe] = (value, scale).
    pub fn values(&self, fields: &[&Field]) -> (Vec<ProbeLabel>, Vec<Vec<ProbeValue>>) {
        let compiled = Compiled::new(fields);
        let jobs: Vec<(i64, &ProbeDomain, LatticePoint)> =
            self.domains.iter().flat_map(|(h, pd)| self.points.iter().map(move |z| (*h, pd, *z))).collect();
        let per_slot: Vec<(Vec<ProbeLabel>, Vec<Vec<ProbeValue>>)> = jobs
            .par_iter()
            .map(|(h, pd, z)| {
                let sets: Vec<Vec<LatticePoint>> = INSERTIONS.iter().map(|k| insertion_set(*k, self.radius, *z)).collect();
                let labels = INSERTIONS
                    .iter()
                    .zip(&sets)
                    .map(|(kind, ins)| ProbeLabel { half_side: *h, z: *z, kind: *kind, insertions: ins.clone() })
                    .collect();
                (labels, compiled.evaluate(pd, *z, &sets))
            })
            .collect();
        let mut labels = Vec::new();
        let mut out = vec![Vec::new(); fields.len()];
        for (l, vals) in per_slot {
            labels.extend(l);
            for per_set in vals {
                for (k, v) in per_set.into_iter().enumerate() {
                    out[k].push(v);
                }
            }
        }
        (labels, out)
    }

    pub fn null_reports(&self, fields: &[&Field], tol: f64) -> Vec<NullReport> {
        let (labels, vals) = self.values(fields);
        vals.iter().map(|v| NullReport::from_values(&labels, v, tol, self.radius)).collect()
    }

    pub fn null_report(&self, f: &Field, tol: f64) -> NullReport {
        self.null_reports(&[f], tol).pop().expect("one field")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "NULL-CONSISTENT")]
    NullConsistent,
    #[serde(rename = "WITNESSED-NONNULL")]
    WitnessedNonNull,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::NullConsistent => "NULL-CONSISTENT",
            Verdict::WitnessedNonNull => "WITNESSED-NONNULL",
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    pub probe: ProbeLabel,
    pub value: (f64, f64),
    pub scale: f64,
}

/// Outcome of a probe battery. The residual of a probe is |Σ c_t E_t| over
/// Σ |c_t E_t|, i.e. relative to the size of the terms that cancel.
#[derive(Clone, Debug, Serialize)]
pub struct NullReport {
    pub verdict: Verdict,
    pub radius: i64,
    pub probes: usize,
    pub max_residual: f64,
    pub tol: f64,
    pub witness: Option<Witness>,
}

impl NullReport {
    fn from_values(labels: &[ProbeLabel], vals: &[ProbeValue], tol: f64, radius: i64) -> Self {
        let mut max_res: f64 = 0.0;
        let mut witness: Option<(f64, usize)> = None;
        for (i, v) in vals.iter().enumerate() {
            let res = v.residual();
            max_res = max_res.max(res);
            if res > tol && witness.map_or(true, |(r, _)| res > r) {
                witness = Some((res, i));
            }
        }
        Self {
            verdict: if witness.is_some() { Verdict::WitnessedNonNull } else { Verdict::NullConsistent },
            radius,
            probes: vals.len(),
            max_residual: max_res,
            tol,
            witness: witness.map(|(_, i)| Witness { probe: labels[i].clone(), value: (vals[i].value.re, vals[i].value.im), scale: vals[i].scale }),
        }
    }

    pub fn is_null(&self) -> bool {
        self.verdict == Verdict::NullConsistent
    }
}

/// Nullity verdict on the default suite with exclusion radius
/// max(hint, ‖supp F‖ + 4).
pub fn is_null(f: &Field, hint: Option<i64>, tol: f64) -> Result<NullReport, FieldError> {
    let r = hint.unwrap_or(0).max(f.support_radius() + 4);
    Ok(ProbeSuite::new(r)?.null_report(f, tol))
}

// ---------------------------------------------------------------------------
// Modes

/// χ⁺ = ∂ξ̂, χ⁻ = η̂.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Chi {
    Plus,
    Minus,
}

impl Chi {
    pub fn symbol(self) -> &'static str {
        match self {
            Chi::Plus => "+",
            Chi::Minus => "-",
        }
    }
}

/// d^{αβ}: antisymmetric with d^{−+} = 1.
pub fn d_form(a: Chi, b: Chi) -> i64 {
    match (a, b) {
        (Chi::Minus, Chi::Plus) => 1,
        (Chi::Plus, Chi::Minus) => -1,
        _ => 0,
    }
}

/// χ^α_k: a single mode label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Mode {
    pub chi: Chi,
    pub k: i32,
}

pub const fn mode(chi: Chi, k: i32) -> Mode {
    Mode { chi, k }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "χ{}_{}", self.chi.symbol(), self.k)
    }
}

/// (χ^α_m χ^β_n)_{γ,γ⁺}: `outer` integrates over γ⁺, `inner` over γ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct ModeOp {
    pub outer: Mode,
    pub inner: Mode,
}

impl ModeOp {
    pub fn new(outer: Mode, inner: Mode) -> Self {
        Self { outer, inner }
    }
}

/// Inner and outer contours, as Manhattan diamonds ∂B♯(0; r).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ContourPair {
    pub inner: i64,
    pub outer: i64,
}

/// Monomial family plus a cache of mode smears.
pub struct ModeContext {
    fam: Arc<MonomialFamily>,
    smears: Mutex<HashMap<(Chi, i32, i64), Arc<Smear>>>,
    diamonds: Mutex<HashMap<i64, Arc<DualContour>>>,
}

impl ModeContext {
    pub fn new(fam: Arc<MonomialFamily>) -> Self {
        Self { fam, smears: Mutex::new(HashMap::new()), diamonds: Mutex::new(HashMap::new()) }
    }

    /// Context over the process-wide [`FIELD_FAMILY`].
    pub fn shared() -> Result<Self, FieldError> {
        Ok(Self::new(shared_family(FIELD_FAMILY)?))
    }

    pub fn family(&self) -> &MonomialFamily {
        &self.fam
    }

    fn diamond(&self, r: i64) -> Arc<DualContour> {
        let mut g = self.diamonds.lock().unwrap_or_else(|e| e.into_inner());
        Arc::clone(g.entry(r).or_insert_with(|| Arc::new(DualContour::diamond(r))))
    }

    /// ∮_{∂B♯(0;r)} z^[k]_• χ̂^α(z_○) dz as a smear.
    pub fn smear(&self, m: Mode, r: i64) -> Result<Arc<Smear>, FieldError> {
        let key = (m.chi, m.k, r);
        if let Some(s) = self.smears.lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
            return Ok(Arc::clone(s));
        }
        let gamma = self.diamond(r);
        let mut pts = Vec::new();
        for e in gamma.edges() {
            let c = self.fam.get_f64(m.k, e.black)? * C64::new(e.step.x as f64, e.step.y as f64);
            if c == C64::zero() {
                continue;
            }
            match m.chi {
                Chi::Minus => pts.push((e.white, c)),
                Chi::Plus => pts.extend(STEPS.iter().map(|d| (e.white + *d, c * C64::new(d.x as f64, -d.y as f64)))),
            }
        }
        let s = Arc::new(Smear::new(pts));
        self.smears.lock().unwrap_or_else(|e| e.into_inner()).insert(key, Arc::clone(&s));
        Ok(s)
    }

    /// Tightest diamonds with supp F at distance > 1 inside γ, the singular
    /// balls of the inner indices inside γ, γ⁺ two steps outside γ and the
    /// singular balls of the outer indices inside γ⁺.
    pub fn contours(&self, support_radius: i64, inner: &[i32], outer: &[i32]) -> Result<ContourPair, FieldError> {
        let rs = |k: &i32| self.fam.singular_radius(*k).ok_or(MonomialError::OutOfRange { n: *k, z: pt(0, 0) });
        let mut r_in = (support_radius + 2).max(1);
        for k in inner {
            r_in = r_in.max(rs(k)?);
        }
        let mut r_out = r_in + 2;
        for k in outer {
            r_out = r_out.max(rs(k)?);
        }
        Ok(ContourPair { inner: r_in, outer: r_out })
    }

    fn rs(&self, k: i32) -> Result<i64, FieldError> {
        Ok(self.fam.singular_radius(k).ok_or(MonomialError::OutOfRange { n: k, z: pt(0, 0) })?)
    }

    /// (χ^α_m χ^β_n)_{γ,γ⁺}(F) on the given contours. A term whose inner
    /// monomial vanishes along γ is zero for every γ⁺, so the outer
    /// constraints are only enforced when the inner smear is nonzero.
    pub fn apply(&self, op: ModeOp, f: &Field, c: ContourPair) -> Result<Field, FieldError> {
        let support = f.support_radius();
        if c.inner < support + 2 {
            return Err(FieldError::Contour(format!("inner radius {} does not clear the support radius {support}", c.inner)));
        }
        if c.inner < self.rs(op.inner.k)? {
            return Err(FieldError::Contour(format!("inner radius {} inside r_sing({})", c.inner, op.inner.k)));
        }
        let si = self.smear(op.inner, c.inner)?;
        let mut out = Field::zero();
        if si.points.is_empty() {
            return Ok(out);
        }
        if c.outer < c.inner + 2 {
            return Err(FieldError::Contour(format!("outer radius {} too close to inner {}", c.outer, c.inner)));
        }
        if c.outer < self.rs(op.outer.k)? {
            return Err(FieldError::Contour(format!("outer radius {} inside r_sing({})", c.outer, op.outer.k)));
        }
        let so = self.smear(op.outer, c.outer)?;
        if so.points.is_empty() {
            return Ok(out);
        }
        let k = C64::new(1.0 / (2.0 * std::f64::consts::PI), 0.0);
        for t in &f.terms {
            let mut pairs = Vec::with_capacity(t.pairs.len() + 1);
            pairs.push((Gen::Smear(Arc::clone(&so)), Gen::Smear(Arc::clone(&si))));
            pairs.extend(t.pairs.iter().cloned());
            out.push(FieldTerm { coeff: t.coeff * k, pairs });
        }
        Ok(out)
    }

    /// [`ModeContext::apply`] with automatically chosen contours.
    pub fn apply_auto(&self, op: ModeOp, f: &Field) -> Result<Field, FieldError> {
        let c = self.contours(f.support_radius(), &[op.inner.k], &[op.outer.k])?;
        self.apply(op, f, c)
    }

    /// {a, b}(F) − n δ_{n+m} d^{αβ} F with a = χ^α_n, b = χ^β_m, both
    /// orderings on the same contours.
    pub fn anticommutator_defect(&self, a: Mode, b: Mode, f: &Field, c: ContourPair) -> Result<Field, FieldError> {
        let ab = self.apply(ModeOp::new(a, b), f, c)?;
        let ba = self.apply(ModeOp::new(b, a), f, c)?;
        let coeff = if a.k + b.k == 0 { a.k as i64 * d_form(a.chi, b.chi) } else { 0 };
        Ok(ab.add(&ba).add_scaled(f, C64::new(-coeff as f64, 0.0)))
    }

    /// χ^γ_k {a, b} χ^δ_l (F) − n δ_{n+m} d^{αβ} χ^γ_k χ^δ_l (F).
    pub fn sandwiched_defect(&self, left: Mode, a: Mode, b: Mode, right: Mode, f: &Field) -> Result<Field, FieldError> {
        let ks = [a.k, b.k, right.k];
        let c1 = self.contours(f.support_radius(), &ks, &[a.k, b.k, left.k])?;
        let g_b = self.apply(ModeOp::new(b, right), f, c1)?;
        let g_a = self.apply(ModeOp::new(a, right), f, c1)?;
        let direct = self.apply(ModeOp::new(left, right), f, c1)?;
        let s2 = g_b.support_radius().max(g_a.support_radius()).max(c1.outer + 1);
        let c2 = self.contours(s2, &[a.k, b.k], &[left.k])?;
        let lhs = self.apply(ModeOp::new(left, a), &g_b, c2)?.add(&self.apply(ModeOp::new(left, b), &g_a, c2)?);
        let coeff = if a.k + b.k == 0 { a.k as i64 * d_form(a.chi, b.chi) } else { 0 };
        Ok(lhs.add_scaled(&direct, C64::new(-coeff as f64, 0.0)))
    }
}

/// Report of one anticommutation identity.
#[derive(Clone, Debug, Serialize)]
pub struct AnticommutatorReport {
    pub a: Mode,
    pub b: Mode,
    pub expected: i64,
    pub contours: ContourPair,
    pub null: NullReport,
}

/// {χ^α_n, χ^β_m}(F) − n δ_{n+m} d^{αβ} F on the default suite.
pub fn anticommutator_check(ctx: &ModeContext, a: Mode, b: Mode, f: &LocalField, tol: f64) -> Result<AnticommutatorReport, FieldError> {
    let field = f.to_field();
    let c = ctx.contours(field.support_radius(), &[a.k, b.k], &[a.k, b.k])?;
    let defect = ctx.anticommutator_defect(a, b, &field, c)?;
    let suite = ProbeSuite::new(defect.support_radius().max(field.support_radius()) + 4)?;
    let expected = if a.k + b.k == 0 { a.k as i64 * d_form(a.chi, b.chi) } else { 0 };
    Ok(AnticommutatorReport { a, b, expected, contours: c, null: suite.null_report(&defect, tol) })
}

/// Every {χ^α_n, χ^β_m} defect with |n|, |m| ≤ `max` on one probe suite.
pub fn anticommutator_battery(ctx: &ModeContext, f: &LocalField, max: i32, tol: f64) -> Result<Vec<AnticommutatorReport>, FieldError> {
    let field = f.to_field();
    let mut cases = Vec::new();
    let mut defects = Vec::new();
    for a_chi in [Chi::Minus, Chi::Plus] {
        for b_chi in [Chi::Minus, Chi::Plus] {
            for n in -max..=max {
                for m in -max..=max {
                    let (a, b) = (mode(a_chi, n), mode(b_chi, m));
                    let c = ctx.contours(field.support_radius(), &[n, m], &[n, m])?;
                    defects.push(ctx.anticommutator_defect(a, b, &field, c)?);
                    cases.push((a, b, c));
                }
            }
        }
    }
    let refs: Vec<&Field> = defects.iter().collect();
    let r = refs.iter().map(|d| d.support_radius()).max().unwrap_or(0).max(field.support_radius()) + 4;
    let reports = ProbeSuite::new(r)?.null_reports(&refs, tol);
    Ok(cases
        .into_iter()
        .zip(reports)
        .map(|((a, b, contours), null)| {
            let expected = if a.k + b.k == 0 { a.k as i64 * d_form(a.chi, b.chi) } else { 0 };
            AnticommutatorReport { a, b, expected, contours, null }
        })
        .collect())
}

/// Fixture fields used by the mode and Virasoro batteries.
pub fn fixture_fields() -> Vec<(&'static str, LocalField)> {
    let src = [
        ("unit", "1"),
        ("eta-xi", "eta(1,0)*xi(0,0)"),
        ("chim-chip", "chim(0,1)*chip(1,0)"),
        ("two-pair", "eta(1,0)*xi(0,0)*eta(0,-1)*xi(1,-1)"),
        ("unbalanced", "eta(1,0)*eta(-1,0) + i*xi(0,0)*xi(1,1)"),
    ];
    src.iter().map(|(n, s)| (*n, LocalField::parse(s).expect("fixture parses"))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::q_frac;
    use crate::monomials::MonomialFamily;

    fn table(d: &Domain) -> CouplingTable {
        CouplingTable::exact(&DimerGraph::induce(d).unwrap()).unwrap()
    }

    #[test]
    fn parse_and_canonical() {
        let f = LocalField::parse("eta(1,0)*xi(0,0) + 2*eta(1,0)*eta(-1,0)").unwrap();
        assert_eq!(f.len(), 2);
        let g = LocalField::parse("2*eta(1,0)*eta(-1,0) + eta(1,0)*xi(0,0)").unwrap();
        assert_eq!(f, g);
        // Pairs commute, so reordering pairs is syntactic equality ...
        let a = LocalField::parse("eta(1,0)*xi(0,0)*eta(0,1)*xi(1,1)").unwrap();
        let b = LocalField::parse("eta(0,1)*xi(1,1)*eta(1,0)*xi(0,0)").unwrap();
        assert_eq!(a, b);
        // ... but swapping inside a pair is a different generator.
        let c = LocalField::parse("xi(0,0)*eta(1,0)").unwrap();
        assert_ne!(c, LocalField::parse("eta(1,0)*xi(0,0)").unwrap());
        assert_eq!(LocalField::parse("(1/2 + i)*phi(0,0)*phi(1,0)").unwrap().terms().next().unwrap().1, &QI::new(q_frac(1, 2), q(1)));
        assert_eq!(LocalField::parse("0.25*phi(0,0)*phi(1,0)").unwrap().terms().next().unwrap().1, &QI::new(q_frac(1, 4), q(0)));
        assert_eq!(LocalField::parse("chip(1,0)*eta(1,0)").unwrap().len(), 4);
        assert!(LocalField::parse("eta(0,0)*xi(0,0)").is_err());
        assert!(LocalField::parse("eta(1,0)").is_err());
        assert!(LocalField::parse("eta(1,0)*").is_err());
        let round = LocalField::parse(&f.to_string()).unwrap();
        assert_eq!(round, f);
    }

    #[test]
    fn evaluation_examples() {
        let t = table(&Domain::rect(0, 0, 1, 1));
        let f = LocalField::pair(pt(1, 0), pt(0, 0));
        assert_eq!(evaluate_exact(&f, pt(0, 0), &t), QI::new(q_frac(-1, 2), q(0)));
        let g = LocalField::pair(pt(0, 0), pt(1, 0));
        assert_eq!(evaluate_exact(&g, pt(0, 0), &t), QI::new(q_frac(1, 2), q(0)));
        let unbalanced = LocalField::parse("eta(1,0)*eta(0,1)*eta(1,2)*xi(0,0)").unwrap();
        assert!(evaluate_exact(&unbalanced, pt(0, 0), &t).is_zero());
        let repeated = LocalField::parse("eta(1,0)*xi(0,0)*eta(1,0)*xi(1,1)").unwrap();
        assert!(evaluate_exact(&repeated, pt(0, 0), &t).is_zero());
        // Leaving the domain gives zero.
        assert!(evaluate_exact(&f, pt(5, 0), &t).is_zero());
    }

    #[test]
    fn pfaffian_matches_definition() {
        let d = Domain::temperleyan_square(2);
        let t = table(&d);
        let pd = ProbeDomain::new(d).unwrap();
        let fields = [
            "eta(1,0)*xi(0,0)",
            "xi(0,0)*eta(1,0)",
            "eta(1,0)*xi(0,0)*eta(0,-1)*xi(1,1)",
            "phi(0,0)*phi(1,1)*phi(1,0)*phi(0,1)",
            "eta(1,0)*eta(-1,0)*xi(0,0)*xi(1,1) + 3*phi(0,1)*phi(-1,1)",
            "chip(1,0)*eta(-1,0)",
        ];
        for s in fields {
            let f = LocalField::parse(s).unwrap();
            for z in [pt(0, 0), pt(1, 0), pt(0, 1), pt(1, 1), pt(-1, -1)] {
                let exact = qi_to_c64(&evaluate_exact(&f, z, &t));
                let float = pd.slot(z).expect(&f.to_field());
                assert!((exact - float).norm() < 1e-12, "{s} at {z:?}: {exact} vs {float}");
            }
        }
    }

    #[test]
    fn sorting_signs() {
        assert_eq!(sorting_sign(&[true, false]), Some(1));
        assert_eq!(sorting_sign(&[false, true]), Some(-1));
        assert_eq!(sorting_sign(&[true, true, false, false]), Some(-1));
        assert_eq!(sorting_sign(&[true, true, false]), None);
    }

    #[test]
    fn nullity_examples() {
        let suite = ProbeSuite::quick(6).unwrap();
        let anti = LocalField::parse("eta(1,0)*xi(0,0) + xi(0,0)*eta(1,0)").unwrap();
        assert!(suite.null_report(&anti.to_field(), DEFAULT_TOL).is_null());
        let off = LocalField::parse("eta(1,0)*dbxi(-1,0)").unwrap();
        assert!(suite.null_report(&off.to_field(), DEFAULT_TOL).is_null());
        let on = LocalField::parse("eta(1,0)*dbxi(1,0)").unwrap();
        assert!(!suite.null_report(&on.to_field(), DEFAULT_TOL).is_null());
        let f1 = LocalField::parse("eta(-1,0)*dbxi(1,0)").unwrap();
        let f2 = LocalField::parse("eta(1,0)*dbxi(-1,0)").unwrap();
        assert!(suite.null_report(&f1.to_field(), DEFAULT_TOL).is_null());
        assert!(!suite.null_report(&f1.mul(&f2).to_field(), DEFAULT_TOL).is_null());
    }

    fn small_ctx() -> ModeContext {
        ModeContext::new(Arc::new(MonomialFamily::build(FamilySpec { r_max: 24, n_max: 8 }).unwrap()))
    }

    #[test]
    fn anticommutation_and_controls() {
        let ctx = small_ctx();
        let f = LocalField::parse("eta(1,0)*xi(0,0)").unwrap();
        let cases = [
            (mode(Chi::Minus, 1), mode(Chi::Plus, -1)),
            (mode(Chi::Minus, 2), mode(Chi::Plus, -1)),
            (mode(Chi::Minus, 0), mode(Chi::Plus, 0)),
            (mode(Chi::Plus, 2), mode(Chi::Minus, -2)),
        ];
        for (a, b) in cases {
            let r = anticommutator_check(&ctx, a, b, &f, DEFAULT_TOL).unwrap();
            assert!(r.null.is_null(), "{a} {b}: {:?}", r.null);
        }
        // Dropping the constant leaves a visibly non-null field.
        let field = f.to_field();
        let c = ctx.contours(field.support_radius(), &[1, -1], &[1, -1]).unwrap();
        let a = ctx.apply(ModeOp::new(mode(Chi::Minus, 1), mode(Chi::Plus, -1)), &field, c).unwrap();
        let b = ctx.apply(ModeOp::new(mode(Chi::Plus, -1), mode(Chi::Minus, 1)), &field, c).unwrap();
        let bare = a.add(&b);
        assert!(!ProbeSuite::quick(bare.support_radius() + 4).unwrap().null_report(&bare, DEFAULT_TOL).is_null());
    }

    #[test]
    fn contour_choice_and_null_inputs() {
        let ctx = small_ctx();
        let f = LocalField::parse("chim(0,1)*chip(1,0)").unwrap().to_field();
        let op = ModeOp::new(mode(Chi::Plus, 1), mode(Chi::Minus, -2));
        let c1 = ctx.contours(f.support_radius(), &[-2], &[1]).unwrap();
        let c2 = ContourPair { inner: c1.inner + 2, outer: c1.outer + 3 };
        let d = ctx.apply(op, &f, c1).unwrap().add_scaled(&ctx.apply(op, &f, c2).unwrap(), C64::new(-1.0, 0.0));
        assert!(ProbeSuite::quick(d.support_radius() + 4).unwrap().null_report(&d, DEFAULT_TOL).is_null());
        // Null in, null out.
        let null = LocalField::parse("eta(1,0)*dbxi(-1,0)").unwrap().to_field();
        let img = ctx.apply_auto(op, &null).unwrap();
        assert!(ProbeSuite::quick(img.support_radius() + 4).unwrap().null_report(&img, DEFAULT_TOL).is_null());
        // Tight contours violating the clearance are rejected.
        assert!(ctx.apply(op, &f, ContourPair { inner: 2, outer: 6 }).is_err());
    }
}

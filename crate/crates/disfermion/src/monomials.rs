// SPDX-License-Identifier: MIT OR Apache-2.0

//! Discrete Laurent monomials z^[n] and the dual-contour calculus.
//!
//! Normalisation: ∂z^[n] = n·z^[n−1] exactly ([`DERIVATIVE_NORMALIZATION`]).
//! The pairing ∮ z^[n]_• z^[−n−1]_○ dz = 2πi then forces z^[1] = z/4, since
//! the uniform ∂ of the identity function is 4.
//!
//! Positive powers are integrated coset by coset from z^[n−1]: on each of the
//! four cosets of 2Z² the pair (∂̄f = 0, ∂f = g) fixes f(m+s) − f(m−s) =
//! s·g(m)/2, and rotational covariance fixes the four additive constants.
//! z^[−1] is the derivative ∂Φ of a potential Φ that convolves the distributed
//! delta with the sublattice kernel G(Z/2); lower powers follow from
//! z^[m−1] = ∂z^[m]/m, losing one unit of radius per step.

use std::collections::{HashMap, VecDeque};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use num_bigint::{BigInt, Sign};
use num_complex::Complex;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::correlators::{dee, deebar};
use crate::exact::{q, q_frac, qi, qi_from_q, GaussianScale, PiPoly, C64, Q, QI};
use crate::greens::{shared_kernel, sublattice_green, GreenError};
use crate::lattice::{pt, DualContour, LatticePoint, STEPS};

/// The constant c in ∂z^[n] = c·n·z^[n−1]. Fixed by the pairing normalisation.
pub const DERIVATIVE_NORMALIZATION: i64 = 1;
pub const DEFAULT_R_MAX: i64 = 64;
pub const DEFAULT_N_MAX: i32 = 18;
const FORMAT_MAGIC: &[u8; 8] = b"DSFMONO\x01";

#[derive(Debug, Error)]
pub enum MonomialError {
    #[error("z^[{n}] is not cached at {z:?}")]
    OutOfRange { n: i32, z: LatticePoint },
    #[error("no value at {0:?}")]
    Undefined(LatticePoint),
    #[error("inconsistent system for z^[{n}] at {at:?}: {what}")]
    Inconsistent { n: i32, at: LatticePoint, what: &'static str },
    #[error("function is not discrete holomorphic at {0:?}")]
    NotHolomorphic(LatticePoint),
    #[error(transparent)]
    Green(#[from] GreenError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("bad family file: {0}")]
    Format(String),
}

/// Build parameters: tables on ‖z‖ ≤ r_max for −n_max ≤ n ≤ n_max.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub r_max: i64,
    pub n_max: i32,
}

impl Default for FamilySpec {
    fn default() -> Self {
        Self { r_max: DEFAULT_R_MAX, n_max: DEFAULT_N_MAX }
    }
}

#[derive(Clone, Debug)]
struct Ball {
    points: Vec<LatticePoint>,
    index: HashMap<LatticePoint, usize>,
}

impl Ball {
    fn new(r: i64) -> Self {
        let points = crate::lattice::manhattan_ball(pt(0, 0), r + 1);
        let index = points.iter().enumerate().map(|(i, p)| (*p, i)).collect();
        Self { points, index }
    }
}

/// Radii and bookkeeping written next to every family.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyManifest {
    pub format: u32,
    pub spec: FamilySpec,
    pub derivative_normalization: i64,
    /// (n, r₀(n)) for n ≥ 0; −1 when z^[n](0) ≠ 0.
    pub null_radius: Vec<(i32, i64)>,
    /// (n, r_sing(n)).
    pub singular_radius: Vec<(i32, i64)>,
    /// (n, largest radius with a valid value).
    pub valid_radius: Vec<(i32, i64)>,
    pub sha256: String,
}

/// z^[n] on a Manhattan ball, exact and float.
#[derive(Clone, Debug)]
pub struct MonomialFamily {
    spec: FamilySpec,
    ball: Ball,
    exact: Vec<Vec<PiPoly>>,
    float: Vec<Vec<C64>>,
    valid: Vec<i64>,
    null_radius: Vec<i64>,
    singular_radius: Vec<i64>,
}

fn i_pow(n: i32) -> (i64, i64) {
    match n.rem_euclid(4) {
        0 => (1, 0),
        1 => (0, 1),
        2 => (-1, 0),
        _ => (0, -1),
    }
}

fn qi_inv(z: &QI) -> QI {
    let den = &z.re * &z.re + &z.im * &z.im;
    Complex::new(&z.re / &den, -&z.im / &den)
}

/// Four cosets of 2Z² with their base points.
const COSET_BASES: [LatticePoint; 4] = [pt(0, 0), pt(1, 1), pt(1, 0), pt(0, 1)];

fn coset_of(p: LatticePoint) -> usize {
    match (p.x.rem_euclid(2), p.y.rem_euclid(2)) {
        (0, 0) => 0,
        (1, 1) => 1,
        (1, 0) => 2,
        _ => 3,
    }
}

/// Weight h(p)/π of the distributed source of z^[−1].
fn source_weight(p: LatticePoint) -> Option<Q> {
    match p.norm() {
        0 => Some(q(1)),
        1 => Some(q_frac(1, 2)),
        2 if p.x.abs() == 1 => Some(q_frac(1, 4)),
        _ => None,
    }
}

const SOURCES: [LatticePoint; 9] = [
    pt(0, 0),
    pt(1, 0),
    pt(-1, 0),
    pt(0, 1),
    pt(0, -1),
    pt(1, 1),
    pt(-1, 1),
    pt(1, -1),
    pt(-1, -1),
];

/// 2π·(½δ₀ + ¼Σ_{‖w‖=1}δ_w + ⅛Σ_{±1±i}δ_w), the prescribed ∂̄z^[−1].
pub fn distributed_delta(z: LatticePoint) -> PiPoly {
    match source_weight(z) {
        Some(c) => PiPoly::monomial(1, qi_from_q(c)),
        None => PiPoly::zero(),
    }
}

impl MonomialFamily {
    /// Build the family, checking every defining relation on the way.
    pub fn build(spec: FamilySpec) -> Result<Self, MonomialError> {
        Self::build_with_order(spec, &STEPS)
    }

    /// Same as [`MonomialFamily::build`] with the integration sweep visiting
    /// neighbours in the given order (uniqueness smoke test).
    pub fn build_with_order(spec: FamilySpec, order: &[LatticePoint; 4]) -> Result<Self, MonomialError> {
        assert!(spec.r_max >= 4 && spec.n_max >= 1);
        let ball = Ball::new(spec.r_max);
        let n_tables = (2 * spec.n_max + 1) as usize;
        let mut fam = Self {
            spec,
            exact: vec![Vec::new(); n_tables],
            float: vec![Vec::new(); n_tables],
            valid: vec![-1; n_tables],
            null_radius: vec![-1; n_tables],
            singular_radius: vec![0; n_tables],
            ball,
        };
        let zero_slot = fam.slot(0);
        fam.exact[zero_slot] = vec![PiPoly::one(); fam.ball.points.len()];
        fam.valid[zero_slot] = spec.r_max;
        for n in 1..=spec.n_max {
            let t = fam.build_positive(n, order)?;
            let s = fam.slot(n);
            fam.exact[s] = t;
            fam.valid[s] = spec.r_max;
        }
        fam.build_negative()?;
        fam.float = fam.exact.iter().map(|t| t.iter().map(PiPoly::to_c64).collect()).collect();
        fam.scan_radii();
        fam.check_covariance()?;
        Ok(fam)
    }

    fn slot(&self, n: i32) -> usize {
        (n + self.spec.n_max) as usize
    }

    pub fn spec(&self) -> FamilySpec {
        self.spec
    }

    pub fn n_range(&self) -> std::ops::RangeInclusive<i32> {
        -self.spec.n_max..=self.spec.n_max
    }

    pub fn contains_index(&self, n: i32) -> bool {
        n.abs() <= self.spec.n_max
    }

    /// Largest radius on which z^[n] is known (−1 if n is not built).
    pub fn valid_radius(&self, n: i32) -> i64 {
        if self.contains_index(n) {
            self.valid[self.slot(n)]
        } else {
            -1
        }
    }

    /// r₀(n): largest r with z^[n] = 0 on ‖z‖ ≤ r; −1 if z^[n](0) ≠ 0.
    pub fn null_radius(&self, n: i32) -> Option<i64> {
        (n >= 0 && self.contains_index(n)).then(|| self.null_radius[self.slot(n)])
    }

    /// r_sing(n): ∂̄z^[n] = 0 wherever ‖z‖ ≥ r_sing(n).
    pub fn singular_radius(&self, n: i32) -> Option<i64> {
        self.contains_index(n).then(|| self.singular_radius[self.slot(n)])
    }

    fn idx(&self, n: i32, z: LatticePoint) -> Option<usize> {
        if !self.contains_index(n) || z.norm() > self.valid[self.slot(n)] {
            return None;
        }
        self.ball.index.get(&z).copied()
    }

    pub fn value(&self, n: i32, z: LatticePoint) -> Option<&PiPoly> {
        self.idx(n, z).map(|i| &self.exact[self.slot(n)][i])
    }

    pub fn value_f64(&self, n: i32, z: LatticePoint) -> Option<C64> {
        self.idx(n, z).map(|i| self.float[self.slot(n)][i])
    }

    pub fn get(&self, n: i32, z: LatticePoint) -> Result<&PiPoly, MonomialError> {
        self.value(n, z).ok_or(MonomialError::OutOfRange { n, z })
    }

    pub fn get_f64(&self, n: i32, z: LatticePoint) -> Result<C64, MonomialError> {
        self.value_f64(n, z).ok_or(MonomialError::OutOfRange { n, z })
    }

    fn build_positive(&self, n: i32, order: &[LatticePoint; 4]) -> Result<Vec<PiPoly>, MonomialError> {
        let prev = &self.exact[self.slot(n - 1)];
        let r = self.spec.r_max;
        let len = self.ball.points.len();
        let scale = q(n as i64 * DERIVATIVE_NORMALIZATION);
        let g = |p: LatticePoint| prev[self.ball.index[&p]].scale(&qi_from_q(scale.clone()));
        let half = q_frac(1, 2);
        let mut f: Vec<Option<PiPoly>> = vec![None; len];
        for base in COSET_BASES {
            let bi = self.ball.index[&base];
            f[bi] = Some(PiPoly::zero());
            let mut queue = VecDeque::from([base]);
            while let Some(p) = queue.pop_front() {
                let fp = f[self.ball.index[&p]].clone().expect("visited");
                for &s in order {
                    let nq = p + s + s;
                    if nq.norm() > r {
                        continue;
                    }
                    let qi_ = self.ball.index[&nq];
                    if f[qi_].is_some() {
                        continue;
                    }
                    // f(m+s) − f(m−s) = s·g(m)/2 with m = p + s.
                    let step = g(p + s).scale_gauss(s.x, s.y).scale(&qi_from_q(half.clone()));
                    f[qi_] = Some(&fp + &step);
                    queue.push_back(nq);
                }
            }
        }
        let mut f: Vec<PiPoly> = f.into_iter().map(|v| v.expect("every coset point reached")).collect();
        let at = |f: &Vec<PiPoly>, p: LatticePoint| f[self.ball.index[&p]].clone();

        let (ix, iy) = i_pow(n);
        let i_n = qi(ix, iy);
        let c_o = if n % 4 != 0 {
            -at(&f, pt(-1, 1)).scale(&qi_inv(&(qi(1, 0) - &i_n)))
        } else {
            if !at(&f, pt(-1, 1)).is_zero() {
                return Err(MonomialError::Inconsistent { n, at: pt(-1, 1), what: "odd coset constant" });
            }
            PiPoly::zero()
        };
        let c_a = if n % 2 != 0 {
            -at(&f, pt(-1, 0)).scale(&qi_from_q(q_frac(1, 2)))
        } else {
            if !at(&f, pt(-1, 0)).is_zero() {
                return Err(MonomialError::Inconsistent { n, at: pt(-1, 0), what: "white coset constant" });
            }
            PiPoly::zero()
        };
        let c_b = c_a.scale(&i_n);
        let consts = [PiPoly::zero(), c_o, c_a, c_b];
        for (i, p) in self.ball.points.iter().enumerate() {
            let c = &consts[coset_of(*p)];
            if !c.is_zero() {
                f[i] = &f[i] + c;
            }
        }

        // ∂̄f = 0 and ∂f = g wherever the stencil fits.
        let get = |p: LatticePoint| (p.norm() <= r).then(|| f[self.ball.index[&p]].clone());
        for p in &self.ball.points {
            if p.norm() > r - 1 {
                continue;
            }
            if !deebar(get, *p).expect("inside").is_zero() {
                return Err(MonomialError::Inconsistent { n, at: *p, what: "∂̄ does not vanish" });
            }
            if dee(get, *p).expect("inside") != g(*p) {
                return Err(MonomialError::Inconsistent { n, at: *p, what: "∂ is not n·z^[n−1]" });
            }
        }
        Ok(f)
    }

    fn build_negative(&mut self) -> Result<(), MonomialError> {
        let r = self.spec.r_max;
        shared_kernel(r / 2 + 4);
        // Φ(y) = −Σ_{p ≡ y mod 2} h(p)·G(y − p); only needed on ‖y‖ ≤ r + 1.
        let phi_ball = Ball::new(r + 1);
        let mut phi = Vec::with_capacity(phi_ball.points.len());
        for y in &phi_ball.points {
            let mut acc = PiPoly::zero();
            for p in SOURCES {
                if coset_of(p) != coset_of(*y) {
                    continue;
                }
                let c = source_weight(p).expect("source");
                let gv = sublattice_green(*y - p)?;
                acc -= &PiPoly::monomial(1, qi_from_q(&c * &gv.rational));
                acc -= &PiPoly::monomial(0, qi_from_q(&c * &gv.inv_pi));
            }
            phi.push(acc);
        }
        let phi_at = |p: LatticePoint| phi_ball.index.get(&p).map(|&i| phi[i].clone());
        let minus_one: Vec<PiPoly> = self
            .ball
            .points
            .iter()
            .map(|p| dee(phi_at, *p).expect("Φ covers the ball"))
            .collect();
        let s = self.slot(-1);
        self.exact[s] = minus_one;
        self.valid[s] = r;
        {
            let t = &self.exact[s];
            let get = |p: LatticePoint| (p.norm() <= r).then(|| t[self.ball.index[&p]].clone());
            for p in &self.ball.points {
                if p.norm() <= r - 1 && deebar(get, *p).expect("inside") != distributed_delta(*p) {
                    return Err(MonomialError::Inconsistent { n: -1, at: *p, what: "∂̄z^[−1] is not the distributed delta" });
                }
            }
        }
        for m in (-self.spec.n_max + 1..=-1).rev() {
            let src = self.slot(m);
            let v = self.valid[src];
            let inv = qi_from_q(Q::one() / q(m as i64 * DERIVATIVE_NORMALIZATION));
            let table = &self.exact[src];
            let get = |p: LatticePoint| (p.norm() <= v).then(|| table[self.ball.index[&p]].clone());
            let next: Vec<PiPoly> = self
                .ball
                .points
                .iter()
                .map(|p| {
                    if p.norm() <= v - 1 {
                        dee(get, *p).expect("inside").scale(&inv)
                    } else {
                        PiPoly::zero()
                    }
                })
                .collect();
            let dst = self.slot(m - 1);
            self.exact[dst] = next;
            self.valid[dst] = v - 1;
        }
        Ok(())
    }

    fn scan_radii(&mut self) {
        for n in self.n_range() {
            let s = self.slot(n);
            let v = self.valid[s];
            let t = &self.exact[s];
            if n >= 0 {
                let first_nonzero =
                    self.ball.points.iter().enumerate().filter(|(i, p)| p.norm() <= v && !t[*i].is_zero()).map(|(_, p)| p.norm()).min();
                self.null_radius[s] = first_nonzero.map_or(v, |m| m - 1);
                self.singular_radius[s] = 0;
            } else {
                let get = |p: LatticePoint| (p.norm() <= v).then(|| t[self.ball.index[&p]].clone());
                let worst = self
                    .ball
                    .points
                    .iter()
                    .filter(|p| p.norm() <= v - 1)
                    .filter(|p| !deebar(get, **p).expect("inside").is_zero())
                    .map(|p| p.norm())
                    .max();
                self.singular_radius[s] = worst.map_or(0, |m| m + 1);
            }
        }
    }

    fn check_covariance(&self) -> Result<(), MonomialError> {
        for n in self.n_range() {
            let (ix, iy) = i_pow(n);
            let s = self.slot(n);
            for (i, p) in self.ball.points.iter().enumerate() {
                if p.norm() > self.valid[s] {
                    continue;
                }
                let rotated = &self.exact[s][self.ball.index[&p.rot90()]];
                if *rotated != self.exact[s][i].scale_gauss(ix, iy) {
                    return Err(MonomialError::Inconsistent { n, at: *p, what: "rotational covariance" });
                }
            }
        }
        Ok(())
    }

    /// Radii and checksum of the tables.
    pub fn manifest(&self) -> FamilyManifest {
        let ns: Vec<i32> = self.n_range().collect();
        FamilyManifest {
            format: FORMAT_MAGIC[7] as u32,
            spec: self.spec,
            derivative_normalization: DERIVATIVE_NORMALIZATION,
            null_radius: ns.iter().filter(|n| **n >= 0).map(|&n| (n, self.null_radius[self.slot(n)])).collect(),
            singular_radius: ns.iter().map(|&n| (n, self.singular_radius[self.slot(n)])).collect(),
            valid_radius: ns.iter().map(|&n| (n, self.valid[self.slot(n)])).collect(),
            sha256: hex_digest(&self.payload()),
        }
    }

    fn payload(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for n in self.n_range() {
            let s = self.slot(n);
            for (i, p) in self.ball.points.iter().enumerate() {
                if p.norm() > self.valid[s] {
                    continue;
                }
                let v = &self.exact[s][i];
                let terms: Vec<_> = v.terms().collect();
                out.extend_from_slice(&(terms.len() as u32).to_le_bytes());
                for (k, c) in terms {
                    out.extend_from_slice(&k.to_le_bytes());
                    for x in [c.re.numer(), c.re.denom(), c.im.numer(), c.im.denom()] {
                        write_bigint(&mut out, x);
                    }
                }
            }
        }
        out
    }

    /// Versioned binary file: magic, manifest JSON length + bytes, payload.
    pub fn save(&self, path: &Path) -> Result<FamilyManifest, MonomialError> {
        let manifest = self.manifest();
        let json = serde_json::to_vec(&manifest).map_err(|e| MonomialError::Format(e.to_string()))?;
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(FORMAT_MAGIC)?;
        f.write_all(&(json.len() as u64).to_le_bytes())?;
        f.write_all(&json)?;
        f.write_all(&self.payload())?;
        f.flush()?;
        Ok(manifest)
    }

    /// Load a saved family; the checksum and the covariance are re-verified.
    pub fn load(path: &Path) -> Result<Self, MonomialError> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        let bad = |s: &str| MonomialError::Format(s.to_string());
        if bytes.len() < 16 || &bytes[..8] != FORMAT_MAGIC {
            return Err(bad("wrong magic or version"));
        }
        let jlen = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
        let json = bytes.get(16..16 + jlen).ok_or_else(|| bad("truncated manifest"))?;
        let manifest: FamilyManifest = serde_json::from_slice(json).map_err(|e| MonomialError::Format(e.to_string()))?;
        let payload = &bytes[16 + jlen..];
        if hex_digest(payload) != manifest.sha256 {
            return Err(bad("checksum mismatch"));
        }
        let spec = manifest.spec;
        let ball = Ball::new(spec.r_max);
        let mut cur = Cursor { buf: payload, pos: 0 };
        let n_tables = (2 * spec.n_max + 1) as usize;
        let mut exact = vec![Vec::new(); n_tables];
        let mut valid = vec![-1; n_tables];
        for (k, &(n, v)) in manifest.valid_radius.iter().enumerate() {
            if n != k as i32 - spec.n_max {
                return Err(bad("valid radii out of order"));
            }
            valid[k] = v;
            let mut t = Vec::with_capacity(ball.points.len());
            for p in &ball.points {
                if p.norm() > v {
                    t.push(PiPoly::zero());
                    continue;
                }
                let nt = cur.u32()?;
                let mut val = PiPoly::zero();
                for _ in 0..nt {
                    let kpow = cur.i32()?;
                    let re = Q::new(cur.bigint()?, cur.bigint()?);
                    let im = Q::new(cur.bigint()?, cur.bigint()?);
                    val = val + PiPoly::monomial(kpow, Complex::new(re, im));
                }
                t.push(val);
            }
            exact[k] = t;
        }
        if cur.pos != payload.len() {
            return Err(bad("trailing bytes"));
        }
        let mut fam = Self {
            spec,
            float: exact.iter().map(|t| t.iter().map(PiPoly::to_c64).collect()).collect(),
            exact,
            valid,
            null_radius: vec![-1; n_tables],
            singular_radius: vec![0; n_tables],
            ball,
        };
        fam.scan_radii();
        fam.check_covariance()?;
        if fam.manifest() != manifest {
            return Err(bad("radii disagree with the manifest"));
        }
        Ok(fam)
    }

    /// Pairing ∮_γ z^[n]_• z^[m]_○ dz, exact.
    pub fn pairing_exact(&self, gamma: &DualContour, n: i32, m: i32) -> Result<PiPoly, MonomialError> {
        contour_integral(gamma, |w| self.value(m, w).cloned(), |b| self.value(n, b).cloned())
    }

    /// Pairing in floats, with the sum of |terms| as the scale of rounding.
    pub fn pairing_f64(&self, gamma: &DualContour, n: i32, m: i32) -> Result<(C64, f64), MonomialError> {
        let mut acc = C64::zero();
        let mut scale = 0.0;
        for e in gamma.edges() {
            let t = self.get_f64(m, e.white)? * self.get_f64(n, e.black)?;
            acc += t.scale_gauss(e.step.x, e.step.y);
            scale += t.norm();
        }
        Ok((acc, scale))
    }
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], MonomialError> {
        let s = self.buf.get(self.pos..self.pos + n).ok_or_else(|| MonomialError::Format("truncated payload".into()))?;
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, MonomialError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn i32(&mut self) -> Result<i32, MonomialError> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn bigint(&mut self) -> Result<BigInt, MonomialError> {
        let sign = self.take(1)?[0];
        let len = self.u32()? as usize;
        let mag = self.take(len)?;
        let sign = match sign {
            0 => Sign::NoSign,
            1 => Sign::Plus,
            2 => Sign::Minus,
            _ => return Err(MonomialError::Format("bad sign byte".into())),
        };
        Ok(BigInt::from_bytes_le(sign, mag))
    }
}

fn write_bigint(out: &mut Vec<u8>, x: &BigInt) {
    let (sign, mag) = x.to_bytes_le();
    out.push(match sign {
        Sign::NoSign => 0,
        Sign::Plus => 1,
        Sign::Minus => 2,
    });
    out.extend_from_slice(&(mag.len() as u32).to_le_bytes());
    out.extend_from_slice(&mag);
}

fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

static SHARED: Mutex<Option<Arc<MonomialFamily>>> = Mutex::new(None);

fn cache_path(spec: FamilySpec) -> Option<PathBuf> {
    let dir = std::env::var_os("DISFERMION_CACHE")?;
    Some(PathBuf::from(dir).join(format!("monomials-r{}-n{}.bin", spec.r_max, spec.n_max)))
}

/// Process-wide family with at least the requested coverage. Reads and
/// writes `$DISFERMION_CACHE` when that variable is set.
pub fn shared_family(spec: FamilySpec) -> Result<Arc<MonomialFamily>, MonomialError> {
    let mut slot = SHARED.lock().unwrap_or_else(|e| e.into_inner());
    if let Some(f) = slot.as_ref() {
        if f.spec.r_max >= spec.r_max && f.spec.n_max >= spec.n_max {
            return Ok(Arc::clone(f));
        }
    }
    let want = match slot.as_ref() {
        Some(f) => FamilySpec { r_max: f.spec.r_max.max(spec.r_max), n_max: f.spec.n_max.max(spec.n_max) },
        None => spec,
    };
    let path = cache_path(want);
    let fam = match path.as_deref().map(MonomialFamily::load) {
        Some(Ok(f)) => f,
        _ => {
            let f = MonomialFamily::build(want)?;
            if let Some(p) = &path {
                if let Some(dir) = p.parent() {
                    let _ = std::fs::create_dir_all(dir);
                }
                // A cache that cannot be written is not an error.
                let _ = f.save(p);
            }
            f
        }
    };
    let fam = Arc::new(fam);
    *slot = Some(Arc::clone(&fam));
    Ok(fam)
}

/// Scalars that can be summed along a contour.
pub trait ContourScalar: Clone + Zero + GaussianScale {
    fn times(&self, o: &Self) -> Self;
}

impl ContourScalar for C64 {
    fn times(&self, o: &Self) -> Self {
        self * o
    }
}

impl ContourScalar for PiPoly {
    fn times(&self, o: &Self) -> Self {
        self * o
    }
}

/// ∮_γ f(z_○) g(z_•) dz = Σ_k (p_k − p_{k−1}) f(w_k) g(b_k).
pub fn contour_integral<T, F, G>(gamma: &DualContour, f: F, g: G) -> Result<T, MonomialError>
where
    T: ContourScalar,
    F: Fn(LatticePoint) -> Option<T>,
    G: Fn(LatticePoint) -> Option<T>,
{
    let mut acc = T::zero();
    for e in gamma.edges() {
        let fw = f(e.white).ok_or(MonomialError::Undefined(e.white))?;
        let gb = g(e.black).ok_or(MonomialError::Undefined(e.black))?;
        acc = acc + fw.times(&gb).scale_gauss(e.step.x, e.step.y);
    }
    Ok(acc)
}

/// Both sides of the discrete Stokes formula
/// ∮ f_○ g_• dz = i Σ_{int •} ∂̄f·g + i Σ_{int ○} f·∂̄g.
pub fn stokes_sides<T, F, G>(gamma: &DualContour, f: F, g: G) -> Result<(T, T), MonomialError>
where
    T: ContourScalar,
    F: Fn(LatticePoint) -> Option<T> + Copy,
    G: Fn(LatticePoint) -> Option<T> + Copy,
{
    let lhs = contour_integral(gamma, f, g)?;
    let mut rhs = T::zero();
    for p in gamma.interior_points() {
        let term = if p.is_black() {
            deebar(f, p).ok_or(MonomialError::Undefined(p))?.times(&g(p).ok_or(MonomialError::Undefined(p))?)
        } else {
            f(p).ok_or(MonomialError::Undefined(p))?.times(&deebar(g, p).ok_or(MonomialError::Undefined(p))?)
        };
        rhs = rhs + term;
    }
    Ok((lhs, rhs.scale_gauss(0, 1)))
}

/// Both sides of ∮ ∂f(z_•) g(z_○) dz = −∮ f(z_○) ∂g(z_•) dz, after checking
/// that f and g are discrete holomorphic at every vertex straddling γ.
pub fn integrate_by_parts_sides<T, F, G>(gamma: &DualContour, f: F, g: G) -> Result<(T, T), MonomialError>
where
    T: ContourScalar,
    F: Fn(LatticePoint) -> Option<T> + Copy,
    G: Fn(LatticePoint) -> Option<T> + Copy,
{
    let edges = gamma.edges();
    for e in &edges {
        for p in [e.white, e.black] {
            for h in [&f as &dyn Fn(LatticePoint) -> Option<T>, &g] {
                let d = deebar(h, p).ok_or(MonomialError::Undefined(p))?;
                if !is_negligible(&d) {
                    return Err(MonomialError::NotHolomorphic(p));
                }
            }
        }
    }
    let df = |b: LatticePoint| dee(f, b);
    let dg = |b: LatticePoint| dee(g, b);
    let lhs = contour_integral(gamma, g, df)?;
    let rhs = contour_integral(gamma, f, dg)?;
    Ok((lhs, rhs.scale_gauss(-1, 0)))
}

fn is_negligible<T: Zero>(x: &T) -> bool {
    x.is_zero()
}

/// Whether [`integrate_by_parts_sides`] balances within `tol` (0 = exact).
pub fn integrate_by_parts_check_f64<F, G>(gamma: &DualContour, f: F, g: G, tol: f64) -> Result<bool, MonomialError>
where
    F: Fn(LatticePoint) -> Option<C64> + Copy,
    G: Fn(LatticePoint) -> Option<C64> + Copy,
{
    // Float inputs are rounded, so holomorphicity is tested with the tolerance.
    let edges = gamma.edges();
    for e in &edges {
        for p in [e.white, e.black] {
            for h in [&f as &dyn Fn(LatticePoint) -> Option<C64>, &g] {
                let d = deebar(h, p).ok_or(MonomialError::Undefined(p))?;
                let scale = STEPS.iter().filter_map(|s| h(p + *s)).map(|v| v.norm()).sum::<f64>().max(1.0);
                if d.norm() > tol * scale {
                    return Err(MonomialError::NotHolomorphic(p));
                }
            }
        }
    }
    let lhs: C64 = contour_integral(gamma, g, |b| dee(f, b))?;
    let rhs: C64 = contour_integral(gamma, f, |b| dee(g, b))?;
    Ok((lhs + rhs).norm() <= tol * (lhs.norm() + rhs.norm()).max(1.0))
}

/// One entry of the pairing matrix.
#[derive(Clone, Debug, Serialize)]
pub struct PairingEntry {
    pub contour: usize,
    pub n: i32,
    pub m: i32,
    pub exact_ok: Option<bool>,
    /// |∮ − 2πiδ| / max(1, Σ|terms|).
    pub float_residual: f64,
}

/// Property report of a family.
#[derive(Clone, Debug, Serialize)]
pub struct PropertyReport {
    pub n_max: i32,
    pub contours: Vec<String>,
    pub z0_is_one: bool,
    pub covariance: bool,
    pub holomorphic_outside_singular_radius: bool,
    pub distributed_delta: bool,
    pub derivative_relation: bool,
    pub null_radius_strictly_increasing: bool,
    pub decay: bool,
    pub pairing: Vec<PairingEntry>,
    pub max_pairing_residual: f64,
    pub pairing_exact: bool,
}

impl PropertyReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.z0_is_one
            && self.covariance
            && self.holomorphic_outside_singular_radius
            && self.distributed_delta
            && self.derivative_relation
            && self.null_radius_strictly_increasing
            && self.decay
            && self.pairing_exact
            && self.max_pairing_residual < tol
    }
}

/// Three nested contours used by the pairing checks: two squares and the
/// diamond of radius `r_outer`. All straddling vertices stay within the
/// valid radius of z^[−n−1].
pub fn pairing_contours(fam: &MonomialFamily, n: i32, r_outer: i64) -> Vec<(String, DualContour)> {
    let r_sing = (-n..=n).filter_map(|k| fam.singular_radius(k)).max().unwrap_or(0);
    let h_in = r_sing.max(2) + 1;
    let h_mid = (h_in + r_outer / 2) / 2 + 1;
    vec![
        (format!("square h={h_in}"), DualContour::rect(h_in, h_in)),
        (format!("square h={h_mid}"), DualContour::rect(h_mid, h_mid)),
        (format!("diamond r={r_outer}"), DualContour::diamond(r_outer)),
    ]
}

/// Properties 1–7 for |n| ≤ `n` on [`pairing_contours`] up to `r_outer`.
pub fn verify_family(fam: &MonomialFamily, n: i32, r_outer: i64, exact: bool) -> Result<PropertyReport, MonomialError> {
    assert!(n < fam.spec.n_max);
    let pts: Vec<LatticePoint> = fam.ball.points.clone();
    let z0_is_one = pts.iter().all(|p| fam.value(0, *p).is_some_and(|v| *v == PiPoly::one()));
    let covariance = fam.check_covariance().is_ok();

    let mut holo = true;
    let mut derivative = true;
    let mut delta = true;
    for k in -n..=n {
        let v = fam.valid_radius(k);
        let rs = fam.singular_radius(k).expect("built");
        let get = |p: LatticePoint| fam.value(k, p).cloned();
        for p in pts.iter().filter(|p| p.norm() <= v - 1) {
            let db = deebar(get, *p).expect("inside");
            if k == -1 {
                delta &= db == distributed_delta(*p);
            } else if (k >= 0 || p.norm() >= rs) && !db.is_zero() {
                holo = false;
            }
            if fam.valid_radius(k - 1) >= p.norm() {
                let d = dee(get, *p).expect("inside");
                let rhs = fam.get(k - 1, *p)?.scale(&qi(k as i64 * DERIVATIVE_NORMALIZATION, 0));
                derivative &= d == rhs;
            }
        }
    }
    let r0: Vec<i64> = (0..=n).map(|k| fam.null_radius(k).expect("built")).collect();
    let increasing = r0.windows(2).all(|w| w[1] > w[0]);
    // |z^[−1]| along the positive axis decreases.
    let far = fam.valid_radius(-1);
    let decay = (4..far).all(|r| fam.get_f64(-1, pt(r + 1, 0)).map(|v| v.norm()).unwrap_or(0.0) < fam.get_f64(-1, pt(r, 0)).map(|v| v.norm()).unwrap_or(0.0));

    let contours = pairing_contours(fam, n, r_outer);
    let mut pairing = Vec::new();
    let mut max_res: f64 = 0.0;
    let mut all_exact = true;
    let two_pi_i = PiPoly::monomial(1, qi(0, 2));
    for (ci, (_, gamma)) in contours.iter().enumerate() {
        for a in -n..=n {
            for b in -n..=n {
                let expect_one = a + b + 1 == 0;
                let (val, scale) = fam.pairing_f64(gamma, a, b)?;
                let target = if expect_one { C64::new(0.0, 2.0 * std::f64::consts::PI) } else { C64::zero() };
                let res = (val - target).norm() / scale.max(1.0);
                max_res = max_res.max(res);
                let exact_ok = if exact {
                    let v = fam.pairing_exact(gamma, a, b)?;
                    let ok = if expect_one { v == two_pi_i } else { v.is_zero() };
                    all_exact &= ok;
                    Some(ok)
                } else {
                    None
                };
                pairing.push(PairingEntry { contour: ci, n: a, m: b, exact_ok, float_residual: res });
            }
        }
    }
    Ok(PropertyReport {
        n_max: n,
        contours: contours.into_iter().map(|(s, _)| s).collect(),
        z0_is_one,
        covariance,
        holomorphic_outside_singular_radius: holo,
        distributed_delta: delta,
        derivative_relation: derivative,
        null_radius_strictly_increasing: increasing,
        decay,
        pairing,
        max_pairing_residual: max_res,
        pairing_exact: all_exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> MonomialFamily {
        MonomialFamily::build(FamilySpec { r_max: 20, n_max: 6 }).unwrap()
    }

    #[test]
    fn low_powers() {
        let f = small();
        for p in crate::lattice::manhattan_ball(pt(0, 0), 10) {
            assert_eq!(*f.get(1, p).unwrap(), PiPoly::constant(Complex::new(q_frac(p.x, 4), q_frac(p.y, 4))));
        }
        // z^[2] = z²/16 on blacks; the white cosets are shifted so that z^[2](1) = 0.
        for p in [pt(2, 0), pt(1, 1), pt(3, -1), pt(0, 4)] {
            let z2 = p.mul(p);
            assert_eq!(*f.get(2, p).unwrap(), PiPoly::constant(Complex::new(q_frac(z2.x, 16), q_frac(z2.y, 16))));
        }
        assert!(f.get(2, pt(1, 0)).unwrap().is_zero());
        assert!(f.get(2, pt(0, 1)).unwrap().is_zero());
        let v = f.get(2, pt(3, 0)).unwrap();
        assert_eq!(*v, PiPoly::constant(qi_from_q(q_frac(9 - 1, 16))));
    }

    #[test]
    fn radii() {
        let f = small();
        for n in 1..=6 {
            assert_eq!(f.null_radius(n), Some(n as i64 - 1), "r0({n})");
            assert_eq!(f.singular_radius(n), Some(0));
        }
        assert_eq!(f.null_radius(0), Some(-1));
        assert_eq!(f.singular_radius(-1), Some(3));
        for k in 1..=5 {
            assert_eq!(f.valid_radius(-k), 20 - (k as i64 - 1));
        }
    }

    #[test]
    fn pairing_small() {
        let f = small();
        let gamma = DualContour::rect(5, 5);
        assert_eq!(f.pairing_exact(&gamma, 0, -1).unwrap(), PiPoly::monomial(1, qi(0, 2)));
        assert_eq!(f.pairing_exact(&gamma, -1, 0).unwrap(), PiPoly::monomial(1, qi(0, 2)));
        assert_eq!(f.pairing_exact(&gamma, 1, -2).unwrap(), PiPoly::monomial(1, qi(0, 2)));
        assert!(f.pairing_exact(&gamma, 1, -1).unwrap().is_zero());
        assert!(f.pairing_exact(&gamma, 2, 3).unwrap().is_zero());
        let one: C64 = contour_integral(&gamma, |_| Some(C64::new(1.0, 0.0)), |_| Some(C64::new(1.0, 0.0))).unwrap();
        assert_eq!(one, C64::zero());
    }

    #[test]
    fn stokes_on_test_functions() {
        let f = |p: LatticePoint| Some(C64::new((p.x * p.x - 3 * p.y) as f64, (p.x * p.y) as f64 * 0.5));
        let g = |p: LatticePoint| Some(C64::new((p.y - 2) as f64, ((p.x + p.y) % 5) as f64));
        for gamma in [DualContour::rect(3, 2), DualContour::diamond(4)] {
            let (l, r) = stokes_sides(&gamma, f, g).unwrap();
            assert!((l - r).norm() < 1e-9, "{l} vs {r}");
        }
    }

    #[test]
    fn parts_and_preconditions() {
        let f = small();
        let gamma = DualContour::rect(6, 6);
        let z1 = |p: LatticePoint| f.value(1, p).cloned();
        let (l, r) = integrate_by_parts_sides(&gamma, z1, z1).unwrap();
        assert!(l.is_zero() && r.is_zero());
        let z2 = |p: LatticePoint| f.value(2, p).cloned();
        let zm3 = |p: LatticePoint| f.value(-3, p).cloned();
        let (l, r) = integrate_by_parts_sides(&gamma, z2, zm3).unwrap();
        assert_eq!(l, r);
        let tight = DualContour::rect(2, 2);
        assert!(matches!(integrate_by_parts_sides(&tight, z2, zm3), Err(MonomialError::NotHolomorphic(_))));
    }

    #[test]
    fn order_independence_and_roundtrip() {
        let spec = FamilySpec { r_max: 12, n_max: 4 };
        let a = MonomialFamily::build(spec).unwrap();
        let mut order = STEPS;
        order.reverse();
        let b = MonomialFamily::build_with_order(spec, &order).unwrap();
        assert_eq!(a.exact, b.exact);
        let dir = std::env::temp_dir().join(format!("dsf-mono-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("f.bin");
        let m = a.save(&path).unwrap();
        let c = MonomialFamily::load(&path).unwrap();
        assert_eq!(c.manifest(), m);
        assert_eq!(c.exact, a.exact);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn verify_small() {
        let f = small();
        let rep = verify_family(&f, 3, 14, true).unwrap();
        assert!(rep.passed(1e-10), "{rep:?}");
    }
}

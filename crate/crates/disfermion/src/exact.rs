// SPDX-License-Identifier: MIT OR Apache-2.0

//! Exact scalar rings shared by the exact backends.
//!
//! * [`Q`] rationals and [`QI`] Gaussian rationals.
//! * [`PiPoly`]: finite Laurent polynomials in π with Gaussian-rational
//!   coefficients. The potential kernel lives in ℚ + ℚ/π, negative discrete
//!   monomials in ℚ(i) + ℚ(i)π, and their products stay in this ring.
//!
//! Float projection of a [`PiPoly`] is done against a rational approximation
//! of π whose precision adapts to the size of the coefficients, because the
//! coefficients of far-away lattice values cancel to many digits.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::Mutex;

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Q = BigRational;
pub type QI = Complex<BigRational>;
pub type C64 = Complex<f64>;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_frac(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(re: i64, im: i64) -> QI {
    QI::new(q(re), q(im))
}

pub fn qi_from_q(re: Q) -> QI {
    QI::new(re, Q::zero())
}

pub fn q_to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

pub fn qi_to_c64(z: &QI) -> C64 {
    C64::new(q_to_f64(&z.re), q_to_f64(&z.im))
}

/// Exact rational image of a finite double (dyadic, so exact).
pub fn q_from_f64(x: f64) -> Option<Q> {
    Q::from_float(x)
}

pub fn qi_from_c64(z: C64) -> Option<QI> {
    Some(QI::new(q_from_f64(z.re)?, q_from_f64(z.im)?))
}

/// Approximate bit size of a rational: log2 |num| − log2 |den| (rounded up).
fn magnitude_bits(x: &Q) -> i64 {
    if x.is_zero() {
        return i64::MIN / 4;
    }
    x.numer().bits() as i64 - x.denom().bits() as i64 + 1
}

static PI_CACHE: Mutex<Option<(u64, Q)>> = Mutex::new(None);

/// π as a rational with absolute error below 2^-bits (Machin's formula).
pub fn pi_rational(bits: u64) -> Q {
    let mut guard = PI_CACHE.lock().unwrap_or_else(|e| e.into_inner());
    if let Some((have, val)) = guard.as_ref() {
        if *have >= bits {
            return val.clone();
        }
    }
    let work = bits + 32;
    let scale = BigInt::one() << work;
    let atan_inv = |x: i64| -> BigInt {
        let x = BigInt::from(x);
        let x2 = &x * &x;
        let mut term = &scale / &x;
        let mut sum = BigInt::zero();
        let mut k: i64 = 0;
        while !term.is_zero() {
            let t = &term / BigInt::from(2 * k + 1);
            if k % 2 == 0 {
                sum += t;
            } else {
                sum -= t;
            }
            term /= &x2;
            k += 1;
        }
        sum
    };
    let pi_scaled = atan_inv(5) * 16 - atan_inv(239) * 4;
    let val = Q::new(pi_scaled, scale);
    *guard = Some((bits, val.clone()));
    val
}

/// Finite Laurent polynomial Σ c_k π^k with Gaussian-rational coefficients.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct PiPoly {
    terms: BTreeMap<i32, QI>,
}

impl fmt::Debug for PiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({} + {}i)·π^{}", c.re, c.im, k)?;
        }
        Ok(())
    }
}

impl PiPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(qi(1, 0))
    }

    pub fn constant(c: QI) -> Self {
        Self::monomial(0, c)
    }

    /// c·π^k
    pub fn monomial(k: i32, c: QI) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(k, c);
        }
        Self { terms }
    }

    /// a + b/π with rational a, b.
    pub fn from_rational_pair(a: Q, b: Q) -> Self {
        Self::monomial(0, qi_from_q(a)) + Self::monomial(-1, qi_from_q(b))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, k: i32) -> QI {
        self.terms.get(&k).cloned().unwrap_or_else(QI::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (i32, &QI)> {
        self.terms.iter().map(|(k, c)| (*k, c))
    }

    /// True when the value is a Gaussian rational (no π dependence).
    pub fn is_pi_free(&self) -> bool {
        self.terms.keys().all(|&k| k == 0)
    }

    pub fn scale(&self, s: &QI) -> Self {
        if s.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(k, c)| (*k, c * s)).collect(),
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            terms: self.terms.iter().map(|(k, c)| (*k, c.conj())).collect(),
        }
    }

    fn add_term(&mut self, k: i32, c: QI) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(k).or_insert_with(QI::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&k);
        }
    }

    /// Float value with the π approximation sized to the coefficients.
    pub fn to_c64(&self) -> C64 {
        if self.terms.is_empty() {
            return C64::new(0.0, 0.0);
        }
        if self.is_pi_free() {
            return qi_to_c64(&self.coeff(0));
        }
        let mut mag = 0i64;
        let mut kmax = 0i64;
        for (k, c) in &self.terms {
            mag = mag.max(magnitude_bits(&c.re)).max(magnitude_bits(&c.im));
            kmax = kmax.max((*k as i64).abs());
        }
        let bits = (mag.max(0) as u64) + 96 + 4 * kmax as u64;
        let pi = pi_rational(bits);
        let inv_pi = pi.recip();
        let mut re = Q::zero();
        let mut im = Q::zero();
        for (k, c) in &self.terms {
            let base = if *k >= 0 { &pi } else { &inv_pi };
            let mut p = Q::one();
            for _ in 0..k.unsigned_abs() {
                p *= base;
            }
            re += &c.re * &p;
            im += &c.im * &p;
        }
        C64::new(q_to_f64(&re), q_to_f64(&im))
    }
}

impl Zero for PiPoly {
    fn zero() -> Self {
        Self::default()
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

impl Add for PiPoly {
    type Output = PiPoly;
    fn add(mut self, rhs: PiPoly) -> PiPoly {
        for (k, c) in rhs.terms {
            self.add_term(k, c);
        }
        self
    }
}

impl<'a> Add<&'a PiPoly> for &'a PiPoly {
    type Output = PiPoly;
    fn add(self, rhs: &PiPoly) -> PiPoly {
        self.clone() + rhs.clone()
    }
}

impl AddAssign<&PiPoly> for PiPoly {
    fn add_assign(&mut self, rhs: &PiPoly) {
        for (k, c) in &rhs.terms {
            self.add_term(*k, c.clone());
        }
    }
}

impl SubAssign<&PiPoly> for PiPoly {
    fn sub_assign(&mut self, rhs: &PiPoly) {
        for (k, c) in &rhs.terms {
            self.add_term(*k, -c.clone());
        }
    }
}

impl Neg for PiPoly {
    type Output = PiPoly;
    fn neg(self) -> PiPoly {
        Self {
            terms: self.terms.into_iter().map(|(k, c)| (k, -c)).collect(),
        }
    }
}

impl Sub for PiPoly {
    type Output = PiPoly;
    fn sub(self, rhs: PiPoly) -> PiPoly {
        self + (-rhs)
    }
}

impl<'a> Sub<&'a PiPoly> for &'a PiPoly {
    type Output = PiPoly;
    fn sub(self, rhs: &PiPoly) -> PiPoly {
        self.clone() - rhs.clone()
    }
}

impl<'a> Mul<&'a PiPoly> for &'a PiPoly {
    type Output = PiPoly;
    fn mul(self, rhs: &PiPoly) -> PiPoly {
        let mut out = PiPoly::zero();
        for (a, ca) in &self.terms {
            for (b, cb) in &rhs.terms {
                out.add_term(a + b, ca * cb);
            }
        }
        out
    }
}

impl Mul for PiPoly {
    type Output = PiPoly;
    fn mul(self, rhs: PiPoly) -> PiPoly {
        &self * &rhs
    }
}

/// Exact real pair a + b/π, the ring of the full-plane potential kernel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QPi {
    pub rational: Q,
    pub inv_pi: Q,
}

impl QPi {
    pub fn new(rational: Q, inv_pi: Q) -> Self {
        Self { rational, inv_pi }
    }

    pub fn zero() -> Self {
        Self::new(Q::zero(), Q::zero())
    }

    pub fn scale(&self, s: &Q) -> Self {
        Self::new(&self.rational * s, &self.inv_pi * s)
    }

    pub fn to_pipoly(&self) -> PiPoly {
        PiPoly::from_rational_pair(self.rational.clone(), self.inv_pi.clone())
    }

    pub fn to_f64(&self) -> f64 {
        self.to_pipoly().to_c64().re
    }
}

impl Add for &QPi {
    type Output = QPi;
    fn add(self, rhs: &QPi) -> QPi {
        QPi::new(&self.rational + &rhs.rational, &self.inv_pi + &rhs.inv_pi)
    }
}

impl Sub for &QPi {
    type Output = QPi;
    fn sub(self, rhs: &QPi) -> QPi {
        QPi::new(&self.rational - &rhs.rational, &self.inv_pi - &rhs.inv_pi)
    }
}

impl Neg for QPi {
    type Output = QPi;
    fn neg(self) -> QPi {
        QPi::new(-self.rational, -self.inv_pi)
    }
}

/// |a| of a Gaussian rational when it is real or purely imaginary.
pub fn qi_abs_if_axis(z: &QI) -> Option<Q> {
    if z.im.is_zero() {
        Some(z.re.abs())
    } else if z.re.is_zero() {
        Some(z.im.abs())
    } else {
        None
    }
}

/// Multiplication by a Gaussian unit (or any small Gaussian integer) given
/// as a lattice vector.
pub trait GaussianScale: Sized {
    fn scale_gauss(&self, x: i64, y: i64) -> Self;
}

impl GaussianScale for C64 {
    fn scale_gauss(&self, x: i64, y: i64) -> Self {
        self * C64::new(x as f64, y as f64)
    }
}

impl GaussianScale for QI {
    fn scale_gauss(&self, x: i64, y: i64) -> Self {
        // Units only permute and negate parts; skip the big multiplications.
        match (x, y) {
            (1, 0) => self.clone(),
            (-1, 0) => -self.clone(),
            (0, 1) => Complex::new(-self.im.clone(), self.re.clone()),
            (0, -1) => Complex::new(self.im.clone(), -self.re.clone()),
            _ => self * qi(x, y),
        }
    }
}

impl GaussianScale for PiPoly {
    fn scale_gauss(&self, x: i64, y: i64) -> Self {
        if x == 0 && y == 0 {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(k, c)| (*k, c.scale_gauss(x, y))).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pi_digits() {
        let p = pi_rational(200);
        let v = q_to_f64(&p);
        assert!((v - std::f64::consts::PI).abs() < 1e-15);
        let diff = &p - q_frac(314159265358979, 100000000000000);
        assert!(q_to_f64(&diff) > 0.0 && q_to_f64(&diff) < 1e-14);
    }

    #[test]
    fn cancellation_is_resolved() {
        // (p/q)·π − p'/q' where p/q·π ≈ p'/q' to ~40 digits.
        let big = BigInt::from(10).pow(40);
        let approx = pi_rational(300) * Q::from_integer(big.clone());
        let near = Q::from_integer(approx.to_integer());
        let x = PiPoly::monomial(1, qi_from_q(Q::from_integer(big))) - PiPoly::constant(qi_from_q(near.clone()));
        let exact_frac = q_to_f64(&(approx - near));
        let got = x.to_c64().re;
        assert!((got - exact_frac).abs() < 1e-12, "{got} vs {exact_frac}");
    }

    #[test]
    fn ring_ops() {
        let a = PiPoly::from_rational_pair(q(1), q(2));
        let b = PiPoly::monomial(1, qi(0, 1));
        let prod = &a * &b;
        assert_eq!(prod.coeff(1), qi(0, 1));
        assert_eq!(prod.coeff(0), qi(0, 2));
        assert!((&a - &a).is_zero());
        let v = a.to_c64().re;
        assert!((v - (1.0 + 2.0 / std::f64::consts::PI)).abs() < 1e-15);
    }
}

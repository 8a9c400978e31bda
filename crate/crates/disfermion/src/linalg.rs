// SPDX-License-Identifier: MIT OR Apache-2.0

//! Dense exact elimination, a Pfaffian and a banded complex LU.

use std::ops::{Div, Mul, Neg, Sub};

use num_traits::{One, Zero};
use thiserror::Error;

use crate::exact::{C64, QI};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("matrix is singular")]
    Singular,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Fraction-free (Bareiss) determinant over an integral domain.
///
/// Every division performed is exact, so this works for `BigInt` and for
/// Gaussian integers alike.
pub fn bareiss_det<T>(mut m: Vec<Vec<T>>) -> T
where
    T: Clone + Zero + One + PartialEq + Sub<Output = T> + Mul<Output = T> + Div<Output = T> + Neg<Output = T>,
{
    let n = m.len();
    if n == 0 {
        return T::one();
    }
    let mut sign_flip = false;
    let mut prev = T::one();
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            let Some(p) = (k + 1..n).find(|&r| !m[r][k].is_zero()) else {
                return T::zero();
            };
            m.swap(k, p);
            sign_flip = !sign_flip;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = m[i][j].clone() * m[k][k].clone() - m[i][k].clone() * m[k][j].clone();
                m[i][j] = v / prev.clone();
            }
            m[i][k] = T::zero();
        }
        prev = m[k][k].clone();
    }
    let d = m[n - 1][n - 1].clone();
    if sign_flip {
        -d
    } else {
        d
    }
}

/// Solve A X = B over ℚ(i) by Gauss–Jordan; `rhs` holds the columns of B.
pub fn solve_exact(a: &[Vec<QI>], rhs: &[Vec<QI>]) -> Result<Vec<Vec<QI>>, LinalgError> {
    let n = a.len();
    if a.iter().any(|r| r.len() != n) || rhs.iter().any(|c| c.len() != n) {
        return Err(LinalgError::Dimension("expected a square system".into()));
    }
    let k = rhs.len();
    // Augmented rows [A | B].
    let mut m: Vec<Vec<QI>> = (0..n)
        .map(|i| {
            let mut row = a[i].clone();
            row.extend(rhs.iter().map(|c| c[i].clone()));
            row
        })
        .collect();
    for col in 0..n {
        let p = (col..n).find(|&r| !m[r][col].is_zero()).ok_or(LinalgError::Singular)?;
        m.swap(col, p);
        let inv = QI::one() / m[col][col].clone();
        let pivot_row: Vec<QI> = m[col].iter().map(|v| v * &inv).collect();
        let nz: Vec<usize> = (col..n + k).filter(|&j| !pivot_row[j].is_zero()).collect();
        m[col] = pivot_row;
        for r in 0..n {
            if r == col || m[r][col].is_zero() {
                continue;
            }
            let f = m[r][col].clone();
            for &j in &nz {
                let d = &f * &m[col][j];
                m[r][j] -= d;
            }
        }
    }
    Ok((0..k).map(|c| (0..n).map(|r| m[r][n + c].clone()).collect()).collect())
}

/// Exact inverse, returned row-major.
pub fn inverse_exact(a: &[Vec<QI>]) -> Result<Vec<Vec<QI>>, LinalgError> {
    let n = a.len();
    let eye: Vec<Vec<QI>> = (0..n)
        .map(|c| (0..n).map(|r| if r == c { QI::one() } else { QI::zero() }).collect())
        .collect();
    let cols = solve_exact(a, &eye)?;
    Ok((0..n).map(|r| (0..n).map(|c| cols[c][r].clone()).collect()).collect())
}

/// Exact determinant over ℚ(i) by Gaussian elimination.
pub fn det_exact(mut m: Vec<Vec<QI>>) -> QI {
    let n = m.len();
    let mut det = QI::one();
    for k in 0..n {
        let Some(p) = (k..n).find(|&r| !m[r][k].is_zero()) else {
            return QI::zero();
        };
        if p != k {
            m.swap(p, k);
            det = -det;
        }
        det *= m[k][k].clone();
        let inv = QI::one() / m[k][k].clone();
        for i in k + 1..n {
            if m[i][k].is_zero() {
                continue;
            }
            let f = &m[i][k] * &inv;
            for j in k..n {
                let v = &f * &m[k][j];
                m[i][j] -= v;
            }
        }
    }
    det
}

/// Float determinant by partial-pivoted elimination (small matrices only).
pub fn det_c64(mut m: Vec<Vec<C64>>) -> C64 {
    let n = m.len();
    let mut det = C64::new(1.0, 0.0);
    for k in 0..n {
        let p = (k..n)
            .max_by(|&a, &b| m[a][k].norm().total_cmp(&m[b][k].norm()))
            .expect("nonempty range");
        if m[p][k].norm() == 0.0 {
            return C64::new(0.0, 0.0);
        }
        if p != k {
            m.swap(p, k);
            det = -det;
        }
        det *= m[k][k];
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            for j in k..n {
                let v = m[k][j];
                m[i][j] -= f * v;
            }
        }
    }
    det
}

/// Pfaffian of a skew-symmetric matrix (only the upper triangle is read),
/// by pivoted elimination of 2×2 blocks: Pf(A) = a·Pf(C + (s rᵀ − r sᵀ)/a)
/// with a = A₀₁, r = A₀,₂.., s = A₁,₂.. after moving the largest pivot to A₀₁.
pub fn pfaffian_c64(a: Vec<Vec<C64>>) -> C64 {
    let n = a.len();
    let mut flat = vec![C64::zero(); n * n];
    for i in 0..n {
        for j in i + 1..n {
            flat[i * n + j] = a[i][j];
        }
    }
    pfaffian_in_place(n, &mut flat)
}

/// Pfaffian of the n×n row-major matrix whose strict upper triangle is
/// given; the buffer is destroyed.
pub fn pfaffian_in_place(n: usize, a: &mut [C64]) -> C64 {
    if n % 2 == 1 {
        return C64::zero();
    }
    for i in 0..n {
        a[i * n + i] = C64::zero();
        for j in 0..i {
            a[i * n + j] = -a[j * n + i];
        }
    }
    let mut pf = C64::one();
    let mut k = 0;
    while k < n {
        let p = (k + 1..n).max_by(|&x, &y| a[k * n + x].norm_sqr().total_cmp(&a[k * n + y].norm_sqr())).expect("k+1 < n");
        if p != k + 1 {
            for c in 0..n {
                a.swap((k + 1) * n + c, p * n + c);
            }
            for r in 0..n {
                a.swap(r * n + k + 1, r * n + p);
            }
            pf = -pf;
        }
        let piv = a[k * n + k + 1];
        if piv == C64::zero() {
            return C64::zero();
        }
        pf *= piv;
        let inv = piv.inv();
        for i in k + 2..n {
            let (ri, si) = (a[k * n + i] * inv, a[(k + 1) * n + i] * inv);
            for j in i + 1..n {
                let v = si * a[k * n + j] - ri * a[(k + 1) * n + j];
                a[i * n + j] += v;
                a[j * n + i] = -a[i * n + j];
            }
        }
        k += 2;
    }
    pf
}

/// LU factorisation with partial pivoting of a banded complex matrix.
///
/// Row r stores columns [r − kl, r + kl + ku]; fill-in from pivoting stays
/// inside that window.
#[derive(Clone, Debug)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    w: usize,
    data: Vec<C64>,
    piv: Vec<usize>,
}

impl BandedLu {
    /// Factor from (row, col, value) triplets; duplicates are summed.
    pub fn factor(
        n: usize,
        triplets: impl IntoIterator<Item = (usize, usize, C64)>,
    ) -> Result<Self, LinalgError> {
        let trip: Vec<_> = triplets.into_iter().collect();
        let mut kl = 0;
        let mut ku = 0;
        for &(r, c, _) in &trip {
            if r >= n || c >= n {
                return Err(LinalgError::Dimension(format!("entry ({r},{c}) outside {n}×{n}")));
            }
            if r > c {
                kl = kl.max(r - c);
            } else {
                ku = ku.max(c - r);
            }
        }
        let w = 2 * kl + ku + 1;
        let mut lu = Self { n, kl, ku, w, data: vec![C64::new(0.0, 0.0); n * w], piv: vec![0; n] };
        for (r, c, v) in trip {
            let i = lu.idx(r, c);
            lu.data[i] += v;
        }
        lu.eliminate()?;
        Ok(lu)
    }

    #[inline]
    fn idx(&self, r: usize, c: usize) -> usize {
        r * self.w + (c + self.kl - r)
    }

    fn eliminate(&mut self) -> Result<(), LinalgError> {
        let n = self.n;
        let scale = self.data.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1.0);
        for i in 0..n {
            let last_row = (i + self.kl).min(n - 1);
            let last_col = (i + self.kl + self.ku).min(n - 1);
            let mut p = i;
            let mut best = self.data[self.idx(i, i)].norm();
            for r in i + 1..=last_row {
                let v = self.data[self.idx(r, i)].norm();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best <= scale * 1e-300 {
                return Err(LinalgError::Singular);
            }
            self.piv[i] = p;
            if p != i {
                for c in i..=last_col {
                    let (a, b) = (self.idx(i, c), self.idx(p, c));
                    self.data.swap(a, b);
                }
            }
            let d = self.data[self.idx(i, i)];
            for r in i + 1..=last_row {
                let ri = self.idx(r, i);
                if self.data[ri] == C64::new(0.0, 0.0) {
                    continue;
                }
                let l = self.data[ri] / d;
                self.data[ri] = l;
                let (ib, rb) = (self.idx(i, i), self.idx(r, i));
                for off in 1..=(last_col - i) {
                    let u = self.data[ib + off];
                    self.data[rb + off] -= l * u;
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solve A x = b in place.
    pub fn solve_in_place(&self, b: &mut [C64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        for i in 0..n {
            let p = self.piv[i];
            if p != i {
                b.swap(i, p);
            }
            let bi = b[i];
            if bi == C64::new(0.0, 0.0) {
                continue;
            }
            for r in i + 1..=(i + self.kl).min(n - 1) {
                b[r] -= self.data[self.idx(r, i)] * bi;
            }
        }
        for i in (0..n).rev() {
            let base = self.idx(i, i);
            let mut acc = b[i];
            for off in 1..=((self.kl + self.ku).min(n - 1 - i)) {
                acc -= self.data[base + off] * b[i + off];
            }
            b[i] = acc / self.data[base];
        }
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::qi;
    use num_bigint::BigInt;
    use num_complex::Complex;

    #[test]
    fn bareiss_integer() {
        let m = vec![
            vec![BigInt::from(2), BigInt::from(-1), BigInt::from(0)],
            vec![BigInt::from(-1), BigInt::from(2), BigInt::from(-1)],
            vec![BigInt::from(0), BigInt::from(-1), BigInt::from(2)],
        ];
        assert_eq!(bareiss_det(m), BigInt::from(4));
    }

    #[test]
    fn bareiss_gaussian_with_pivot() {
        let c = |a: i64, b: i64| Complex::new(BigInt::from(a), BigInt::from(b));
        // [[0, i], [-i, 1]] has det = 0·1 − i·(−i) = −1.
        let m = vec![vec![c(0, 0), c(0, 1)], vec![c(0, -1), c(1, 0)]];
        assert_eq!(bareiss_det(m), c(-1, 0));
        let k = vec![vec![c(-1, 0), c(0, 1)], vec![c(0, -1), c(1, 0)]];
        assert_eq!(bareiss_det(k), c(-2, 0));
    }

    #[test]
    fn exact_inverse_roundtrip() {
        let a = vec![vec![qi(-1, 0), qi(0, 1)], vec![qi(0, -1), qi(1, 0)]];
        let inv = inverse_exact(&a).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let s: QI = (0..2).map(|k| &a[i][k] * &inv[k][j]).fold(QI::zero(), |x, y| x + y);
                assert_eq!(s, if i == j { qi(1, 0) } else { qi(0, 0) });
            }
        }
        assert_eq!(inverse_exact(&[vec![qi(0, 0)]]), Err(LinalgError::Singular));
    }

    #[test]
    fn pfaffian_small() {
        let c = |x: f64| C64::new(x, 0.0);
        let m = |v: [[f64; 4]; 4]| v.iter().map(|r| r.iter().map(|x| c(*x)).collect()).collect::<Vec<_>>();
        // a01 a23 − a02 a13 + a03 a12 = 2·7 − 3·6 + 5·4 = 16
        let a = m([[0., 2., 3., 5.], [0., 0., 4., 6.], [0., 0., 0., 7.], [0., 0., 0., 0.]]);
        assert!((pfaffian_c64(a) - c(16.0)).norm() < 1e-12);
        // Zero leading entry forces a pivot: 0·7 − 3·6 + 5·4 = 2
        let b = m([[0., 0., 3., 5.], [0., 0., 4., 6.], [0., 0., 0., 7.], [0., 0., 0., 0.]]);
        assert!((pfaffian_c64(b) - c(2.0)).norm() < 1e-12);
        // Pf² = det on a random 6×6.
        let mut r = vec![vec![C64::zero(); 6]; 6];
        for i in 0..6 {
            for j in i + 1..6 {
                r[i][j] = C64::new(((i * 7 + j * 3) % 5) as f64 - 2.0, ((i + 2 * j) % 3) as f64);
                r[j][i] = -r[i][j];
            }
        }
        let pf = pfaffian_c64(r.clone());
        assert!((pf * pf - det_c64(r)).norm() < 1e-9);
    }

    #[test]
    fn banded_matches_dense() {
        // Tridiagonal-plus system needing pivots (zero diagonal).
        let n = 40;
        let mut trip = Vec::new();
        for i in 0..n {
            if i + 1 < n {
                trip.push((i, i + 1, C64::new(1.0, 0.5)));
                trip.push((i + 1, i, C64::new(-0.5, 1.0)));
            }
            if i + 3 < n {
                trip.push((i + 3, i, C64::new(0.25, 0.0)));
            }
            trip.push((i, i, C64::new(if i % 3 == 0 { 0.0 } else { 0.1 }, 0.0)));
        }
        let lu = BandedLu::factor(n, trip.clone()).unwrap();
        let b: Vec<C64> = (0..n).map(|i| C64::new(i as f64, 1.0)).collect();
        let x = lu.solve(&b);
        let mut ax = vec![C64::new(0.0, 0.0); n];
        for (r, c, v) in trip {
            ax[r] += v * x[c];
        }
        for i in 0..n {
            assert!((ax[i] - b[i]).norm() < 1e-10, "row {i}");
        }
    }
}

//! Small dense matrices over an exact or floating scalar field.
//!
//! The unipotent normal form needs kernels, complements and inverses that are
//! decided exactly when the input allows it, so the elimination routines here
//! are written once over [`Field`] and instantiated for `f64` and
//! [`BigRational`].

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt::Debug;

pub trait Field: Clone + Debug + PartialEq + Send + Sync {
    fn zero() -> Self;
    fn one() -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    /// `|self| <= tol`; exact fields ignore `tol`.
    fn negligible(&self, tol: f64) -> bool;
    fn magnitude(&self) -> f64;
    fn to_f64(&self) -> f64;
    /// Exact conversion for rationals (every finite double is a dyadic rational).
    fn from_f64(x: f64) -> Self;
    fn from_ratio(p: i64, q: i64) -> Self;
}

impl Field for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn negligible(&self, tol: f64) -> bool {
        self.abs() <= tol
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn from_ratio(p: i64, q: i64) -> Self {
        p as f64 / q as f64
    }
}

impl Field for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn negligible(&self, _tol: f64) -> bool {
        self.is_zero()
    }
    fn magnitude(&self) -> f64 {
        ToPrimitive::to_f64(&self.abs()).unwrap_or(f64::INFINITY)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite double")
    }
    fn from_ratio(p: i64, q: i64) -> Self {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }
}

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<T> {
    pub rows: usize,
    pub cols: usize,
    data: Vec<T>,
}

impl<T: Field> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, T::one());
        }
        m
    }

    /// The form matrix of ω(u, v) = uᵀΩv = Σ u_x·v_y − u_y·v_x in dimension 2k.
    pub fn omega(k: usize) -> Self {
        let mut m = Self::zeros(2 * k, 2 * k);
        for i in 0..k {
            m.set(i, k + i, T::one());
            m.set(k + i, i, T::one().neg());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn from_dmatrix(m: &DMatrix<f64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| T::from_f64(m[(i, j)]))
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).to_f64())
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.cols, o.rows, "shape mismatch in product");
        let mut out = Self::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.negligible(0.0) {
                    continue;
                }
                for j in 0..o.cols {
                    let b = o.get(k, j);
                    if b.negligible(0.0) {
                        continue;
                    }
                    let v = out.get(i, j).add(&a.mul(b));
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self.get(i, j).add(o.get(i, j)))
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self.get(i, j).sub(o.get(i, j)))
    }

    pub fn scale(&self, s: &T) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self.get(i, j).mul(s))
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn column(&self, j: usize) -> Self {
        Self::from_fn(self.rows, 1, |i, _| self.get(i, j).clone())
    }

    pub fn select_columns(&self, idx: &[usize]) -> Self {
        Self::from_fn(self.rows, idx.len(), |i, j| self.get(i, idx[j]).clone())
    }

    pub fn hstack(parts: &[&Self]) -> Self {
        let rows = parts.iter().map(|p| p.rows).find(|_| true).unwrap_or(0);
        let cols = parts.iter().map(|p| p.cols).sum();
        let mut out = Self::zeros(rows, cols);
        let mut off = 0;
        for p in parts {
            assert_eq!(p.rows, rows);
            for i in 0..rows {
                for j in 0..p.cols {
                    out.set(i, off + j, p.get(i, j).clone());
                }
            }
            off += p.cols;
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.magnitude()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.data.iter().all(|v| v.negligible(tol))
    }

    /// Reduced row echelon form; returns the pivot columns.
    pub fn rref(&mut self, tol: f64) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let (best, mag) = (r..self.rows)
                .map(|i| (i, self.get(i, c).magnitude()))
                .fold((r, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if self.get(best, c).negligible(tol) || mag < 0.0 {
                continue;
            }
            self.swap_rows(r, best);
            let p = self.get(r, c).clone();
            for j in 0..self.cols {
                let v = self.get(r, j).div(&p);
                self.set(r, j, v);
            }
            for i in 0..self.rows {
                if i == r {
                    continue;
                }
                let f = self.get(i, c).clone();
                if f.negligible(0.0) {
                    continue;
                }
                for j in 0..self.cols {
                    let v = self.get(i, j).sub(&f.mul(self.get(r, j)));
                    self.set(i, j, v);
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn rank(&self, tol: f64) -> usize {
        self.clone().rref(tol).len()
    }

    /// Basis of the right null space as columns.
    pub fn nullspace(&self, tol: f64) -> Self {
        let mut r = self.clone();
        let pivots = r.rref(tol);
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut out = Self::zeros(self.cols, free.len());
        for (k, &f) in free.iter().enumerate() {
            out.set(f, k, T::one());
            for (row, &pc) in pivots.iter().enumerate() {
                out.set(pc, k, r.get(row, f).neg());
            }
        }
        out
    }

    pub fn inverse(&self, tol: f64) -> Option<Self> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut aug = Self::hstack(&[self, &Self::identity(n)]);
        let pivots = aug.rref(tol);
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return None;
        }
        Some(Self::from_fn(n, n, |i, j| aug.get(i, n + j).clone()))
    }
}

/// ω(u, v) for column vectors given as single-column matrices, in dimension 2k.
pub fn omega_pair<T: Field>(u: &Mat<T>, v: &Mat<T>) -> T {
    let k = u.rows / 2;
    let mut s = T::zero();
    for i in 0..k {
        s = s.add(&u.get(i, 0).mul(v.get(k + i, 0)));
        s = s.sub(&u.get(k + i, 0).mul(v.get(i, 0)));
    }
    s
}

/// Gram matrix G_ij = ω(a_i, b_j) of two column families.
pub fn omega_gram<T: Field>(a: &Mat<T>, b: &Mat<T>) -> Mat<T> {
    let k = a.rows / 2;
    a.transpose().mul(&Mat::omega(k)).mul(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: i64, d: i64) -> BigRational {
        BigRational::from_ratio(p, d)
    }

    #[test]
    fn nullspace_is_exact_over_rationals() {
        let m = Mat::from_fn(2, 3, |i, j| q((i + 2 * j) as i64, 3));
        let ns = m.nullspace(0.0);
        assert_eq!(ns.cols, 1);
        assert!(m.mul(&ns).is_zero(0.0));
    }

    #[test]
    fn inverse_roundtrip() {
        let m: Mat<BigRational> = Mat::from_fn(3, 3, |i, j| q(((i * 3 + j) % 4) as i64 + (i == j) as i64 * 5, 2));
        let inv = m.inverse(0.0).unwrap();
        assert_eq!(m.mul(&inv), Mat::identity(3));
        let singular: Mat<f64> = Mat::from_fn(2, 2, |_, _| 1.0);
        assert!(singular.inverse(1e-12).is_none());
    }

    #[test]
    fn omega_is_standard() {
        let o: Mat<f64> = Mat::omega(2);
        let e1 = Mat::from_fn(4, 1, |i, _| (i == 0) as i32 as f64);
        let f1 = Mat::from_fn(4, 1, |i, _| (i == 2) as i32 as f64);
        assert_eq!(omega_pair(&e1, &f1), 1.0);
        assert_eq!(*o.get(2, 0), -1.0);
    }

    #[test]
    fn from_f64_is_exact() {
        let x = 0.1f64;
        let r = BigRational::from_f64(x);
        assert_eq!(Field::to_f64(&r), x);
    }
}

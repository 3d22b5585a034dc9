//! Random symplectic and unipotent matrices for tests and examples.
//!
//! Unipotents are `G·U·G⁻¹` where `U = diag(A, A^{-T})·[[I, B], [0, I]]` lies in
//! the Borel subgroup (A unit upper triangular, B symmetric) and `G` is a product
//! of symplectic shears. Every factor is a product of `exp(tE)` with `E` a strictly
//! upper-triangular Hamiltonian matrix satisfying `E² = 0`. Entries are small
//! dyadic rationals so the product is exact both as rationals and as doubles.

use super::field::{Field, Mat};
use super::squeeze::symplectic_inverse;
use nalgebra::DMatrix;
use num_rational::BigRational;
use rand::Rng;

pub struct UnipotentSample {
    pub exact: Mat<BigRational>,
    pub matrix: DMatrix<f64>,
}

fn dyadic<R: Rng>(rng: &mut R, max: i64, denom: i64) -> BigRational {
    BigRational::from_ratio(rng.random_range(-max..=max), denom)
}

fn block_diag_a(a: &Mat<BigRational>) -> Mat<BigRational> {
    let n = a.rows;
    let ait = a.inverse(0.0).expect("unit triangular").transpose();
    Mat::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
        (true, true) => a.get(i, j).clone(),
        (false, false) => ait.get(i - n, j - n).clone(),
        _ => Field::zero(),
    })
}

fn shear(s: &Mat<BigRational>, upper: bool) -> Mat<BigRational> {
    let n = s.rows;
    let mut m = Mat::identity(2 * n);
    for i in 0..n {
        for j in 0..n {
            if upper {
                m.set(i, n + j, s.get(i, j).clone());
            } else {
                m.set(n + i, j, s.get(i, j).clone());
            }
        }
    }
    m
}

fn symmetric<R: Rng>(rng: &mut R, n: usize, max: i64, denom: i64) -> Mat<BigRational> {
    let mut s = Mat::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = dyadic(rng, max, denom);
            s.set(i, j, v.clone());
            s.set(j, i, v);
        }
    }
    s
}

fn unit_triangular<R: Rng>(rng: &mut R, n: usize, upper: bool, max: i64, denom: i64) -> Mat<BigRational> {
    let mut a = Mat::identity(n);
    for i in 0..n {
        for j in 0..n {
            if (upper && j > i) || (!upper && j < i) {
                a.set(i, j, dyadic(rng, max, denom));
            }
        }
    }
    a
}

/// Random exact symplectic matrix built from shears and unit-triangular blocks.
pub fn random_exact_symplectic<R: Rng>(rng: &mut R, n: usize) -> Mat<BigRational> {
    let s1 = symmetric(rng, n, 4, 8);
    let s2 = symmetric(rng, n, 4, 8);
    let a = unit_triangular(rng, n, false, 4, 4);
    shear(&s1, false).mul(&shear(&s2, true)).mul(&block_diag_a(&a))
}

/// Random unipotent symplectic matrix, exact in both representations.
///
/// About one draw in five zeroes `B` or `A` so that kernels containing
/// symplectic planes are exercised too.
pub fn random_unipotent<R: Rng>(rng: &mut R, n: usize) -> UnipotentSample {
    loop {
        let mode = rng.random_range(0..10);
        let a = if mode == 0 { Mat::identity(n) } else { unit_triangular(rng, n, true, 4, 4) };
        let b = if mode == 1 { Mat::zeros(n, n) } else { symmetric(rng, n, 4, 4) };
        let mut b = b;
        if mode == 2 && n > 1 {
            // rank-one B keeps part of the kernel symplectic
            for i in 0..n {
                for j in 0..n {
                    if i > 0 || j > 0 {
                        b.set(i, j, Field::zero());
                    }
                }
            }
        }
        let u = block_diag_a(&a).mul(&shear(&b, true));
        let g = random_exact_symplectic(rng, n);
        let exact = g.mul(&u).mul(&symplectic_inverse(&g));
        let matrix = exact.to_dmatrix();
        let back = Mat::<BigRational>::from_dmatrix(&matrix);
        if back == exact && matrix.amax() <= 64.0 {
            return UnipotentSample { exact, matrix };
        }
    }
}

/// Random symplectic matrix `exp(JQ_1)·shear·exp(JQ_2)` with `‖Q_i‖ ≲ scale`.
pub fn random_symplectic<R: Rng>(rng: &mut R, n: usize, scale: f64) -> DMatrix<f64> {
    let j = super::j_matrix(n);
    let mut q = || {
        let a = DMatrix::from_fn(2 * n, 2 * n, |_, _| rng.random_range(-1.0..1.0) * scale);
        (&a + a.transpose()) * 0.5
    };
    let e1 = (&j * q()).exp();
    let e2 = (&j * q()).exp();
    e1 * e2
}

/// Random symmetric matrix with entries uniform in `[-scale, scale]`.
pub fn random_symmetric<R: Rng>(rng: &mut R, dim: usize, scale: f64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0) * scale);
    (&a + a.transpose()) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::{is_symplectic, is_unipotent};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn samples_are_exactly_unipotent_and_symplectic() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=3 {
            for _ in 0..5 {
                let u = random_unipotent(&mut rng, n);
                let om = Mat::<BigRational>::omega(n);
                assert_eq!(u.exact.transpose().mul(&om).mul(&u.exact), om);
                let nm = u.exact.sub(&Mat::identity(2 * n));
                let mut p = nm.clone();
                for _ in 1..2 * n {
                    p = p.mul(&nm);
                }
                assert!(p.is_zero(0.0));
                assert!(is_symplectic(&u.matrix, 1e-9).unwrap());
                assert!(is_unipotent(&u.matrix, 1e-6).unwrap());
            }
        }
    }

    #[test]
    fn random_symplectic_is_symplectic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_symplectic(&mut rng, 3, 0.5);
        assert!(is_symplectic(&m, 1e-10).unwrap());
    }
}

//! Quadratic generating functions of linear symplectic maps.
//!
//! For `Φ` near `I`, write `P(Φ)(x, y) = (Φ_x(x, y), y)`. The relation
//! `Φ − I = X_Q·P(Φ)` determines the linear Hamiltonian field `X_Q = JQ`, and
//! `Φ̃_t = I + t·X_Q·P(Φ̃_t)` interpolates between `I` and `Φ`. Both are read in
//! a basis adapted to a Lagrangian splitting, `L` as the x-directions.

use super::{block, from_blocks};
use crate::error::{Error, Result};
use crate::index::SymplecticPath;
use crate::symplectic::{omega_matrix, sp_inverse, LagrangianSplitting};
use nalgebra::DMatrix;

#[derive(Clone, Debug)]
pub struct LinearGf {
    /// Hessian of the quadratic form in standard coordinates.
    pub q: DMatrix<f64>,
    /// The same form in the adapted basis of the splitting.
    pub q_adapted: DMatrix<f64>,
    /// `X_Q` in the adapted basis.
    pub x_q: DMatrix<f64>,
    /// Adapted symplectic basis.
    pub basis: DMatrix<f64>,
}

impl LinearGf {
    /// `Q(v) = ½ω(v, X_Q v)` in standard coordinates.
    pub fn form(&self, v: &nalgebra::DVector<f64>) -> f64 {
        0.5 * v.dot(&(&self.q * v))
    }
}

fn p_matrix(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows() / 2;
    from_blocks(&block(m, 0, 0), &block(m, 0, 1), &DMatrix::zeros(n, n), &DMatrix::identity(n, n))
}

/// Solves `Φ − I = X_Q P(Φ)` in the basis adapted to `split`.
pub fn linear_gf(phi: &DMatrix<f64>, split: &LagrangianSplitting) -> Result<LinearGf> {
    let n = split.dim_n();
    if phi.nrows() != 2 * n || phi.ncols() != 2 * n {
        return Err(Error::Dimension("map and splitting dimensions differ".into()));
    }
    let s = split.adapted_basis();
    let s_inv = sp_inverse(&s);
    let hat = &s_inv * phi * &s;
    let p = p_matrix(&hat);
    let det = p.determinant();
    if det.abs() < 1e-12 {
        return Err(Error::Degenerate { min_distance: det.abs() });
    }
    let p_inv = p.try_inverse().ok_or(Error::Degenerate { min_distance: 0.0 })?;
    let id = DMatrix::<f64>::identity(2 * n, 2 * n);
    let x_q = (&hat - &id) * p_inv;
    let q_hat = omega_matrix(n) * &x_q;
    let asym = (&q_hat - q_hat.transpose()).amax();
    if asym > 1e-6 * q_hat.amax().max(1.0) {
        return Err(Error::NonSymplectic { residual: asym });
    }
    let q_hat = (&q_hat + q_hat.transpose()) * 0.5;
    let q = s_inv.transpose() * &q_hat * &s_inv;
    Ok(LinearGf { q: (&q + q.transpose()) * 0.5, q_adapted: q_hat, x_q, basis: s })
}

/// `Φ̃_t` at the given times, in standard coordinates.
///
/// The relation is affine in the upper blocks of `Φ̃_t`, so it is solved in closed
/// form: with `X = X_Q`, `Φ̃_11 = (I − tX_11)⁻¹`, `Φ̃_12 = Φ̃_11·tX_12`,
/// `Φ̃_21 = tX_21Φ̃_11` and `Φ̃_22 = I + t(X_21Φ̃_12 + X_22)`.
pub fn linear_interpolated_flow(phi: &DMatrix<f64>, split: &LagrangianSplitting, times: &[f64]) -> Result<SymplecticPath> {
    let g = linear_gf(phi, split)?;
    let n = split.dim_n();
    let x = &g.x_q;
    let (x11, x12, x21, x22) = (block(x, 0, 0), block(x, 0, 1), block(x, 1, 0), block(x, 1, 1));
    let id = DMatrix::<f64>::identity(n, n);
    let s_inv = sp_inverse(&g.basis);
    let mut samples = Vec::with_capacity(times.len());
    for &t in times {
        let a = (&id - &x11 * t)
            .try_inverse()
            .ok_or_else(|| Error::Solvability(format!("I − tX_11 is singular at t = {t}")))?;
        let b = &a * &x12 * t;
        let c = &x21 * &a * t;
        let d = &id + (&x21 * &b + &x22) * t;
        let m = from_blocks(&a, &b, &c, &d);
        samples.push((t, &g.basis * m * &s_inv));
    }
    SymplecticPath::new(samples, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::{random::random_unipotent, symplectic_residual};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shear_form() {
        let eps = 0.1;
        let phi = DMatrix::from_row_slice(2, 2, &[1.0, eps, 0.0, 1.0]);
        let g = linear_gf(&phi, &LagrangianSplitting::standard(1)).unwrap();
        assert!((g.q - DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, -eps])).amax() < 1e-15);
        let times: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
        let path = linear_interpolated_flow(&phi, &LagrangianSplitting::standard(1), &times).unwrap();
        for (t, m) in &path.samples {
            assert!((m - DMatrix::from_row_slice(2, 2, &[1.0, t * eps, 0.0, 1.0])).amax() < 1e-15);
        }
    }

    #[test]
    fn identity_gives_zero_and_constant_path() {
        let g = linear_gf(&DMatrix::identity(4, 4), &LagrangianSplitting::standard(2)).unwrap();
        assert_eq!(g.q.amax(), 0.0);
        let p = linear_interpolated_flow(&DMatrix::identity(4, 4), &LagrangianSplitting::standard(2), &[0.0, 0.5, 1.0]).unwrap();
        assert!(p.samples.iter().all(|(_, m)| *m == DMatrix::identity(4, 4)));
    }

    #[test]
    fn interpolation_ends_at_map_and_stays_symplectic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=3 {
            let u = random_unipotent(&mut rng, n);
            let sq = crate::symplectic::squeeze_unipotent(&crate::symplectic::SymplecticMatrix::new_unchecked(u.matrix.clone()), 0.05)
                .unwrap();
            let ex = sq.exact.as_ref().expect("generator output is exactly unipotent");
            let conj = ex.psi.mul(&ex.phi).mul(&crate::symplectic::squeeze::symplectic_inverse(&ex.psi));
            let near = conj.to_dmatrix();
            let times: Vec<f64> = (0..=20).map(|k| k as f64 / 20.0).collect();
            let path = linear_interpolated_flow(&near, &sq.split, &times).unwrap();
            assert!((path.end() - &near).amax() < 1e-10);
            // the conjugated input is itself only symplectic up to rounding
            let base = symplectic_residual(&near).unwrap();
            assert!(path.samples.iter().all(|(_, m)| symplectic_residual(m).unwrap() <= 10.0 * base + 1e-12));
        }
    }
}

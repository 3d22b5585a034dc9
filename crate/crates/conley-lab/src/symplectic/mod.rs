//! Symplectic linear algebra.
//!
//! Convention: ω = Σ dx_i ∧ dy_i on coordinates `(x_1..x_n, y_1..y_n)`, so
//! ω(u, v) = uᵀΩv with Ω = [[0, I], [−I, 0]]. Hamiltonian vector fields are
//! `X_H = J∇H` with `J = [[0, −I], [I, 0]] = Ωᵀ`, i.e. `ẋ = −∂H/∂y`, `ẏ = ∂H/∂x`.
//! For `H = ½|z|²` the flow turns `(1, 0)` into `(0, 1)` after time π/2.

pub mod field;
pub mod random;
pub mod squeeze;

use crate::error::{Error, Result};
use field::{Field, Mat};
use nalgebra::{Complex, DMatrix, DVector};
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

pub const TOL_SYMP: f64 = 1e-9;

/// `J = [[0, −I], [I, 0]]`, the matrix with `X_H = J∇H`.
pub fn j_matrix(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = -1.0;
        j[(n + i, i)] = 1.0;
    }
    j
}

/// `Ω = Jᵀ`, the Gram matrix of ω.
pub fn omega_matrix(n: usize) -> DMatrix<f64> {
    j_matrix(n).transpose()
}

pub fn omega(u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    let n = u.len() / 2;
    (0..n).map(|i| u[i] * v[n + i] - u[n + i] * v[i]).sum()
}

fn check_even_square(m: &DMatrix<f64>) -> Result<usize> {
    if m.nrows() != m.ncols() || m.nrows() % 2 == 1 || m.nrows() == 0 {
        return Err(Error::Dimension(format!(
            "expected a nonempty square matrix of even size, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows() / 2)
}

/// `‖MᵀJM − J‖_max`.
pub fn symplectic_residual(m: &DMatrix<f64>) -> Result<f64> {
    let n = check_even_square(m)?;
    let j = j_matrix(n);
    Ok((m.transpose() * &j * m - j).amax())
}

pub fn is_symplectic(m: &DMatrix<f64>, tol: f64) -> Result<bool> {
    Ok(symplectic_residual(m)? <= tol)
}

/// Symplectic inverse `M⁻¹ = −J MᵀJ`.
pub fn sp_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    let j = j_matrix(m.nrows() / 2);
    -(&j * m.transpose() * &j)
}

pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    if a.iter().any(|v| !v.is_finite()) {
        return f64::NAN;
    }
    a.singular_values().iter().copied().fold(0.0, f64::max)
}

/// A matrix checked to be symplectic when constructed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SymplecticMatrix {
    m: DMatrix<f64>,
}

impl SymplecticMatrix {
    pub fn new(m: DMatrix<f64>, tol: f64) -> Result<Self> {
        let residual = symplectic_residual(&m)?;
        if residual > tol {
            return Err(Error::NonSymplectic { residual });
        }
        let det = m.determinant();
        if (det - 1.0).abs() > tol.max(1e-12) * m.amax().max(1.0).powi(m.nrows() as i32) {
            return Err(Error::NonSymplectic { residual: (det - 1.0).abs() });
        }
        Ok(SymplecticMatrix { m })
    }

    /// Wraps without checking; for matrices symplectic by construction up to rounding.
    pub fn new_unchecked(m: DMatrix<f64>) -> Self {
        SymplecticMatrix { m }
    }

    pub fn identity(n: usize) -> Self {
        SymplecticMatrix { m: DMatrix::identity(2 * n, 2 * n) }
    }

    pub fn dim_n(&self) -> usize {
        self.m.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn inverse(&self) -> Self {
        SymplecticMatrix { m: sp_inverse(&self.m) }
    }

    pub fn residual(&self) -> f64 {
        symplectic_residual(&self.m).unwrap_or(f64::INFINITY)
    }
}

impl std::ops::Deref for SymplecticMatrix {
    type Target = DMatrix<f64>;
    fn deref(&self) -> &DMatrix<f64> {
        &self.m
    }
}

impl TryFrom<Vec<Vec<f64>>> for SymplecticMatrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        SymplecticMatrix::new(matrix_from_rows(&rows)?, TOL_SYMP)
    }
}

impl From<SymplecticMatrix> for Vec<Vec<f64>> {
    fn from(s: SymplecticMatrix) -> Self {
        matrix_to_rows(&s.m)
    }
}

pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, |x| x.len());
    if rows.iter().any(|x| x.len() != c) {
        return Err(Error::Dimension("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

/// Ordered symplectic basis `(e_1..e_n, f_1..f_n)` attached to a base point.
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticFrame {
    columns: DMatrix<f64>,
    inverse: DMatrix<f64>,
    pub base_point: DVector<f64>,
}

#[derive(Serialize, Deserialize)]
struct FrameRepr {
    x_group: Vec<Vec<f64>>,
    y_group: Vec<Vec<f64>>,
    base_point: Vec<f64>,
}

impl SymplecticFrame {
    pub fn new(columns: DMatrix<f64>, base_point: DVector<f64>, tol: f64) -> Result<Self> {
        let n = check_even_square(&columns)?;
        if base_point.len() != 2 * n {
            return Err(Error::Dimension("base point dimension".into()));
        }
        // ω(e_i, f_j) = δ_ij and the other pairings vanish ⇔ CᵀΩC = Ω
        let om = omega_matrix(n);
        let res = (columns.transpose() * &om * &columns - &om).amax();
        if res > tol {
            return Err(Error::InvalidFrame(format!("frame is not symplectic (residual {res:.3e})")));
        }
        let inverse = sp_inverse(&columns);
        Ok(SymplecticFrame { columns, inverse, base_point })
    }

    pub fn standard(n: usize) -> Self {
        SymplecticFrame {
            columns: DMatrix::identity(2 * n, 2 * n),
            inverse: DMatrix::identity(2 * n, 2 * n),
            base_point: DVector::zeros(2 * n),
        }
    }

    pub fn at(mut self, base_point: DVector<f64>) -> Self {
        self.base_point = base_point;
        self
    }

    pub fn dim_n(&self) -> usize {
        self.columns.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.columns
    }

    pub fn inverse_matrix(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    pub fn x_group(&self) -> DMatrix<f64> {
        self.columns.columns(0, self.dim_n()).into_owned()
    }

    pub fn y_group(&self) -> DMatrix<f64> {
        let n = self.dim_n();
        self.columns.columns(n, n).into_owned()
    }

    /// Frame coordinates of a phase point.
    pub fn to_frame(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.inverse * (z - &self.base_point)
    }

    pub fn from_frame(&self, w: &DVector<f64>) -> DVector<f64> {
        &self.base_point + &self.columns * w
    }

    /// `C⁻¹AC`.
    pub fn operator_in_frame(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        &self.inverse * a * &self.columns
    }

    pub fn to_json(&self) -> serde_json::Value {
        let n = self.dim_n();
        let col = |j: usize| (0..2 * n).map(|i| self.columns[(i, j)]).collect::<Vec<_>>();
        serde_json::to_value(FrameRepr {
            x_group: (0..n).map(col).collect(),
            y_group: (n..2 * n).map(col).collect(),
            base_point: self.base_point.iter().copied().collect(),
        })
        .expect("frame serializes")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let r: FrameRepr = serde_json::from_value(v.clone()).map_err(|e| Error::Validation(e.to_string()))?;
        let n = r.x_group.len();
        if r.y_group.len() != n || r.base_point.len() != 2 * n {
            return Err(Error::Dimension("frame groups must have n vectors of length 2n".into()));
        }
        let cols: Vec<&Vec<f64>> = r.x_group.iter().chain(r.y_group.iter()).collect();
        if cols.iter().any(|c| c.len() != 2 * n) {
            return Err(Error::Dimension("frame vector length".into()));
        }
        let m = DMatrix::from_fn(2 * n, 2 * n, |i, j| cols[j][i]);
        SymplecticFrame::new(m, DVector::from_vec(r.base_point), TOL_SYMP)
    }
}

/// Pair of transverse Lagrangian subspaces, each given by a basis (2n × n).
#[derive(Clone, Debug, PartialEq)]
pub struct LagrangianSplitting {
    pub l: DMatrix<f64>,
    pub l_prime: DMatrix<f64>,
}

impl LagrangianSplitting {
    pub fn new(l: DMatrix<f64>, l_prime: DMatrix<f64>, tol: f64) -> Result<Self> {
        let n = l.ncols();
        if l.nrows() != 2 * n || l_prime.nrows() != 2 * n || l_prime.ncols() != n {
            return Err(Error::Dimension("splitting bases must be 2n x n".into()));
        }
        let om = omega_matrix(n);
        let scale = |b: &DMatrix<f64>| b.amax().max(1.0).powi(2);
        if (l.transpose() * &om * &l).amax() > tol * scale(&l) {
            return Err(Error::Precondition("L is not isotropic".into()));
        }
        if (l_prime.transpose() * &om * &l_prime).amax() > tol * scale(&l_prime) {
            return Err(Error::Precondition("L' is not isotropic".into()));
        }
        let pairing = l.transpose() * &om * &l_prime;
        if pairing.clone().try_inverse().is_none() || pairing.determinant().abs() < 1e-14 {
            return Err(Error::Precondition("L and L' are not transverse".into()));
        }
        Ok(LagrangianSplitting { l, l_prime })
    }

    /// The coordinate splitting `span(x) ⊕ span(y)`.
    pub fn standard(n: usize) -> Self {
        let id = DMatrix::<f64>::identity(2 * n, 2 * n);
        LagrangianSplitting { l: id.columns(0, n).into_owned(), l_prime: id.columns(n, n).into_owned() }
    }

    pub fn dim_n(&self) -> usize {
        self.l.ncols()
    }

    /// Symplectic basis `[e | f]` with `e` an orthonormal basis of `L` and `f ⊂ L'`
    /// its ω-dual.
    pub fn adapted_basis(&self) -> DMatrix<f64> {
        let n = self.dim_n();
        let e = self.l.clone().qr().q().columns(0, n).into_owned();
        let om = omega_matrix(n);
        let pairing = e.transpose() * &om * &self.l_prime;
        let f = &self.l_prime * pairing.try_inverse().expect("transverse splitting");
        let mut s = DMatrix::zeros(2 * n, 2 * n);
        s.columns_mut(0, n).copy_from(&e);
        s.columns_mut(n, n).copy_from(&f);
        s
    }
}

/// Dimension of the span of `cols` inside the span of `target` (numerically).
fn contained_in(v: &DMatrix<f64>, target: &DMatrix<f64>, tol: f64) -> bool {
    let q = target.clone().qr().q().columns(0, target.ncols()).into_owned();
    let resid = v - &q * (q.transpose() * v);
    resid.amax() <= tol * v.amax().max(1.0)
}

/// Operator norm of `A` in the basis `C`, i.e. `‖C⁻¹AC‖₂`; vectors use `‖C⁻¹v‖`.
pub fn norm_in_basis(a: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<f64> {
    let inv = c
        .clone()
        .try_inverse()
        .filter(|i| i.iter().all(|x| x.is_finite()))
        .ok_or_else(|| Error::InvalidFrame("singular frame matrix".into()))?;
    if a.nrows() != c.nrows() {
        return Err(Error::Dimension("operator and frame dimensions differ".into()));
    }
    if a.ncols() == 1 {
        return Ok((inv * a).norm());
    }
    Ok(spectral_norm(&(&inv * a * c)))
}

/// Operator (or vector) norm measured in the coordinates of `frame`.
pub fn frame_norm(a: &DMatrix<f64>, frame: &SymplecticFrame) -> Result<f64> {
    if a.nrows() != frame.matrix().nrows() {
        return Err(Error::Dimension("operator and frame dimensions differ".into()));
    }
    if a.ncols() == 1 {
        return Ok((frame.inverse_matrix() * a).norm());
    }
    Ok(spectral_norm(&frame.operator_in_frame(a)))
}

pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<Complex<f64>> {
    m.complex_eigenvalues().iter().copied().collect()
}

/// Unipotence test: every eigenvalue within `tol` of 1. Because a Jordan chain of
/// length `k` perturbed by rounding splits its eigenvalue by about `eps^{1/k}`,
/// the test also accepts matrices whose `(M − I)^{2n}` is below `tol` relative to
/// `‖M − I‖^{2n}`.
pub fn is_unipotent(m: &DMatrix<f64>, tol: f64) -> Result<bool> {
    let n = check_even_square(m)?;
    if eigenvalues(m).iter().all(|l| (l - Complex::new(1.0, 0.0)).norm() <= tol) {
        return Ok(true);
    }
    let nm = m - DMatrix::identity(2 * n, 2 * n);
    let scale = spectral_norm(&nm).max(1.0).powi(2 * n as i32);
    let mut p = nm.clone();
    for _ in 1..(2 * n) {
        p = &p * &nm;
    }
    Ok(spectral_norm(&p) <= tol * scale)
}

/// Exact-arithmetic certificate produced when the input is exactly unipotent.
#[derive(Clone, Debug)]
pub struct ExactSqueeze {
    pub phi: Mat<BigRational>,
    pub s: Mat<BigRational>,
    pub psi: Mat<BigRational>,
    pub lambda: BigRational,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactChecks {
    pub psi_symplectic: bool,
    pub conjugate_symplectic: bool,
    pub psi_preserves_l: bool,
    pub psi_preserves_l_prime: bool,
    pub phi_preserves_l: bool,
    /// `‖ΨΦΨ⁻¹ − I‖₂` of the exact residual matrix.
    pub residual: f64,
}

impl ExactSqueeze {
    pub fn verify(&self) -> ExactChecks {
        let k = self.phi.rows / 2;
        let om = Mat::<BigRational>::omega(k);
        let sym = |m: &Mat<BigRational>| m.transpose().mul(&om).mul(m) == om;
        let psi_inv = squeeze::symplectic_inverse(&self.psi);
        let conj = self.psi.mul(&self.phi).mul(&psi_inv);
        let s_inv = squeeze::symplectic_inverse(&self.s);
        let psi_hat = s_inv.mul(&self.psi).mul(&self.s);
        let phi_hat = s_inv.mul(&self.phi).mul(&self.s);
        let block_zero = |m: &Mat<BigRational>, r0: usize, c0: usize| {
            (0..k).all(|i| (0..k).all(|j| m.get(r0 + i, c0 + j).negligible(0.0)))
        };
        ExactChecks {
            psi_symplectic: sym(&self.psi),
            conjugate_symplectic: sym(&conj),
            psi_preserves_l: block_zero(&psi_hat, k, 0),
            psi_preserves_l_prime: block_zero(&psi_hat, 0, k),
            phi_preserves_l: block_zero(&phi_hat, k, 0),
            residual: spectral_norm(&conj.sub(&Mat::identity(2 * k)).to_dmatrix()),
        }
    }
}

/// Result of squeezing a unipotent map.
#[derive(Clone, Debug)]
pub struct Squeeze {
    pub psi: SymplecticMatrix,
    pub split: LagrangianSplitting,
    pub lambda: f64,
    /// `‖ΨΦΨ⁻¹ − I‖₂` in the standard frame (from the exact certificate when present).
    pub residual: f64,
    /// Frame `C = SΨ̂⁻¹` whose coordinates see the squeezed map `C⁻¹ΦC = Ψ̂Φ̂Ψ̂⁻¹`.
    pub frame: SymplecticFrame,
    pub exact: Option<ExactSqueeze>,
}

enum Plan {
    Exact { phi: Mat<BigRational>, basis: squeeze::AdaptedBasis<BigRational>, hat_minus_i: Mat<BigRational> },
    Numeric { basis: squeeze::AdaptedBasis<f64> },
}

/// Precomputed adapted basis for a unipotent map; squeezes for any σ.
pub struct SqueezePlan {
    n: usize,
    plan: Plan,
    s: DMatrix<f64>,
    s_inv: DMatrix<f64>,
    hat_minus_i: DMatrix<f64>,
}

fn exactly_nilpotent(nm: &Mat<BigRational>) -> bool {
    let mut p = nm.clone();
    for _ in 1..nm.rows {
        p = p.mul(nm);
        if p.is_zero(0.0) {
            return true;
        }
    }
    p.is_zero(0.0)
}

const UNIPOTENT_TOL: f64 = 1e-6;

impl SqueezePlan {
    pub fn new(phi: &DMatrix<f64>) -> Result<Self> {
        let n = check_even_square(phi)?;
        let exact_phi = Mat::<BigRational>::from_dmatrix(phi);
        let nm = exact_phi.sub(&Mat::identity(2 * n));
        if exactly_nilpotent(&nm) {
            let basis = squeeze::adapted_basis(&exact_phi, 0.0, 0)?;
            let s_inv = squeeze::symplectic_inverse(&basis.s);
            let hat_minus_i = s_inv.mul(&nm).mul(&basis.s);
            let s = basis.s.to_dmatrix();
            let hat = hat_minus_i.to_dmatrix();
            return Ok(SqueezePlan {
                n,
                s_inv: s_inv.to_dmatrix(),
                s,
                hat_minus_i: hat,
                plan: Plan::Exact { phi: exact_phi, basis, hat_minus_i },
            });
        }
        if !is_unipotent(phi, UNIPOTENT_TOL)? {
            return Err(Error::Precondition("squeeze requires a unipotent map".into()));
        }
        // entries of Φ − I below the unipotence tolerance count as zero
        let tol = UNIPOTENT_TOL * phi.amax().max(1.0);
        let fphi = Mat::<f64>::from_dmatrix(phi);
        let basis = squeeze::adapted_basis(&fphi, tol, 0)?;
        let s = basis.s.to_dmatrix();
        let s_inv = sp_inverse(&s);
        let hat = &s_inv * (phi - DMatrix::identity(2 * n, 2 * n)) * &s;
        Ok(SqueezePlan {
            n,
            s_inv,
            s,
            hat_minus_i: hat.clone(),
            plan: Plan::Numeric { basis },
        })
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.plan, Plan::Exact { .. })
    }

    pub fn adapted_basis(&self) -> &DMatrix<f64> {
        &self.s
    }

    fn levels(&self) -> &[usize] {
        match &self.plan {
            Plan::Exact { basis, .. } => &basis.levels,
            Plan::Numeric { basis, .. } => &basis.levels,
        }
    }

    fn residual_f64(&self, lambda: f64) -> f64 {
        let d = squeeze::scaling_diagonal(self.levels(), &lambda);
        let x = DMatrix::from_fn(2 * self.n, 2 * self.n, |i, j| self.hat_minus_i[(i, j)] * d[i] / d[j]);
        spectral_norm(&(&self.s * x * &self.s_inv))
    }

    pub fn squeeze(&self, sigma: f64) -> Result<Squeeze> {
        if !(sigma > 0.0) {
            return Err(Error::Precondition("sigma must be positive".into()));
        }
        let n = self.n;
        // largest power of two that works keeps Ψ as tame as possible
        let mut lambda = 1.0;
        let mut best = f64::INFINITY;
        let mut tries = 0;
        loop {
            let base = self.residual_f64(lambda);
            best = best.min(base);
            if base > 100.0 * best {
                // rounding in a non-exact Φ dominates from here on
                return Err(Error::Resolution(format!("squeeze stalls at residual {best:.2e} above σ = {sigma:.1e}")));
            }
            if base < sigma {
                match &self.plan {
                    Plan::Numeric { basis, .. } => {
                        let d = squeeze::scaling_diagonal(&basis.levels, &lambda);
                        let dm = DMatrix::from_diagonal(&DVector::from_vec(d.clone()));
                        let dinv = DMatrix::from_diagonal(&DVector::from_vec(d.iter().map(|x| 1.0 / x).collect()));
                        let psi = &self.s * &dm * &self.s_inv;
                        let frame = SymplecticFrame {
                            columns: &self.s * &dinv,
                            inverse: &dm * &self.s_inv,
                            base_point: DVector::zeros(2 * n),
                        };
                        return Ok(Squeeze {
                            psi: SymplecticMatrix::new_unchecked(psi),
                            split: self.split(),
                            lambda,
                            residual: base,
                            frame,
                            exact: None,
                        });
                    }
                    Plan::Exact { phi, basis, hat_minus_i } => {
                        let lam = BigRational::from_f64(lambda);
                        let d = squeeze::scaling_diagonal(&basis.levels, &lam);
                        let x = squeeze::conjugate_diagonal(hat_minus_i, &d);
                        let s_inv = squeeze::symplectic_inverse(&basis.s);
                        let resid = spectral_norm(&basis.s.mul(&x).mul(&s_inv).to_dmatrix());
                        if resid < sigma {
                            let dm = Mat::from_fn(2 * n, 2 * n, |i, j| if i == j { d[i].clone() } else { Field::zero() });
                            let psi = basis.s.mul(&dm).mul(&s_inv);
                            let dinv: Vec<f64> = d.iter().map(|v| 1.0 / Field::to_f64(v)).collect();
                            let dv: Vec<f64> = d.iter().map(Field::to_f64).collect();
                            let columns = DMatrix::from_fn(2 * n, 2 * n, |i, j| self.s[(i, j)] * dinv[j]);
                            let inverse = DMatrix::from_fn(2 * n, 2 * n, |i, j| dv[i] * self.s_inv[(i, j)]);
                            return Ok(Squeeze {
                                psi: SymplecticMatrix::new_unchecked(psi.to_dmatrix()),
                                split: self.split(),
                                lambda,
                                residual: resid,
                                frame: SymplecticFrame { columns, inverse, base_point: DVector::zeros(2 * n) },
                                exact: Some(ExactSqueeze { phi: phi.clone(), s: basis.s.clone(), psi, lambda: lam }),
                            });
                        }
                    }
                }
            }
            lambda *= 0.5;
            tries += 1;
            if tries > 200 {
                return Err(Error::Internal("scaling search did not reach sigma".into()));
            }
        }
    }

    fn split(&self) -> LagrangianSplitting {
        let n = self.n;
        LagrangianSplitting { l: self.s.columns(0, n).into_owned(), l_prime: self.s.columns(n, n).into_owned() }
    }
}

/// Conjugates a unipotent `Φ` by a symplectic `Ψ` so that `‖ΨΦΨ⁻¹ − I‖ < σ`,
/// with `Ψ` preserving a Lagrangian splitting `L ⊕ L'` and `Φ(L) = L`.
pub fn squeeze_unipotent(phi: &SymplecticMatrix, sigma: f64) -> Result<Squeeze> {
    SqueezePlan::new(phi.matrix())?.squeeze(sigma)
}

/// Numerical check that a squeeze output preserves its splitting.
pub fn splitting_defect(sq: &Squeeze, phi: &DMatrix<f64>) -> f64 {
    let tol = 1e-10;
    let mut worst: f64 = 0.0;
    for (m, basis) in [(sq.psi.matrix(), &sq.split.l), (sq.psi.matrix(), &sq.split.l_prime), (phi, &sq.split.l)] {
        let img = m * basis;
        if !contained_in(&img, basis, tol) {
            let q = basis.clone().qr().q().columns(0, basis.ncols()).into_owned();
            let r = &img - &q * (q.transpose() * &img);
            worst = worst.max(r.amax() / img.amax().max(1.0));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn m2(a: f64, b: f64, c: f64, d: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[a, b, c, d])
    }

    #[test]
    fn membership_examples() {
        assert!(is_symplectic(&DMatrix::identity(4, 4), 1e-12).unwrap());
        assert!(is_symplectic(&m2(1.0, 1.0, 0.0, 1.0), 1e-12).unwrap());
        assert!(!is_symplectic(&m2(2.0, 0.0, 0.0, 2.0), 1e-12).unwrap());
        assert!(matches!(is_symplectic(&DMatrix::identity(3, 3), 1e-12), Err(Error::Dimension(_))));
    }

    #[test]
    fn flow_of_half_norm_squared_is_counterclockwise() {
        let x = j_matrix(1) * DVector::from_vec(vec![1.0, 0.0]);
        assert_eq!(x, DVector::from_vec(vec![0.0, 1.0]));
    }

    #[test]
    fn frame_norm_examples() {
        let nil = m2(0.0, 1.0, 0.0, 0.0);
        let s = 1e-3;
        assert!((norm_in_basis(&nil, &m2(1.0, 0.0, 0.0, s)).unwrap() - s).abs() < 1e-15);
        let fr = SymplecticFrame::new(m2(s.sqrt().recip(), 0.0, 0.0, s.sqrt()), DVector::zeros(2), 1e-9).unwrap();
        assert!((frame_norm(&nil, &fr).unwrap() - s).abs() < 1e-15);
        assert!((frame_norm(&DMatrix::identity(2, 2), &fr).unwrap() - 1.0).abs() < 1e-12);
        let d = m2(2.0, 0.0, 0.0, 0.5);
        assert!((frame_norm(&d, &SymplecticFrame::standard(1)).unwrap() - 2.0).abs() < 1e-14);
        assert!(matches!(norm_in_basis(&d, &m2(1.0, 1.0, 1.0, 1.0)), Err(Error::InvalidFrame(_))));
    }

    #[test]
    fn unipotence_examples() {
        assert!(is_unipotent(&DMatrix::identity(2, 2), 1e-9).unwrap());
        assert!(is_unipotent(&m2(1.0, 1.0, 0.0, 1.0), 1e-9).unwrap());
        let (c, s) = (0.1f64.cos(), 0.1f64.sin());
        assert!(!is_unipotent(&m2(c, -s, s, c), 1e-6).unwrap());
    }

    #[test]
    fn squeeze_identity_and_shear() {
        let sq = squeeze_unipotent(&SymplecticMatrix::identity(1), 1e-6).unwrap();
        assert_eq!(sq.residual, 0.0);
        assert_eq!(sq.psi.matrix(), &DMatrix::identity(2, 2));

        let shear = SymplecticMatrix::new(m2(1.0, 1.0, 0.0, 1.0), 1e-12).unwrap();
        let sq = squeeze_unipotent(&shear, 1e-3).unwrap();
        let conj = sq.psi.matrix() * shear.matrix() * sq.psi.inverse().matrix();
        assert!(sq.lambda * sq.lambda <= 1e-3);
        assert!((conj[(0, 1)] - sq.lambda * sq.lambda).abs() < 1e-15);
        assert!(sq.residual < 1e-3);
        let checks = sq.exact.as_ref().unwrap().verify();
        assert!(checks.psi_symplectic && checks.psi_preserves_l && checks.phi_preserves_l);
    }

    #[test]
    fn squeeze_four_dimensional_chain() {
        // Jordan chain of length 3 compatible with ω plus a companion vector.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let u = random::random_unipotent(&mut rng, 2);
            let sq = squeeze_unipotent(&SymplecticMatrix::new_unchecked(u.matrix.clone()), 1e-4).unwrap();
            let c = sq.exact.as_ref().unwrap().verify();
            assert!(c.psi_symplectic && c.conjugate_symplectic);
            assert!(c.psi_preserves_l && c.psi_preserves_l_prime && c.phi_preserves_l);
            assert!(c.residual < 1e-4);
        }
    }

    #[test]
    fn numeric_path_handles_rounded_inputs() {
        let (c, s) = (0.3f64.cos(), 0.3f64.sin());
        let g = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let phi = &g * m2(1.0, 0.7, 0.0, 1.0) * g.transpose();
        let plan = SqueezePlan::new(&phi).unwrap();
        let sq = plan.squeeze(1e-2).unwrap();
        assert!(sq.residual < 1e-2);
        assert!(splitting_defect(&sq, &phi) < 1e-8);
        assert!(sq.psi.residual() < 1e-9);
    }

    #[test]
    fn non_unipotent_rejected() {
        let (c, s) = (0.1f64.cos(), 0.1f64.sin());
        let rot = SymplecticMatrix::new(m2(c, -s, s, c), 1e-12).unwrap();
        assert!(matches!(squeeze_unipotent(&rot, 1e-3), Err(Error::Precondition(_))));
    }

    #[test]
    fn frame_json_roundtrip() {
        let fr = SymplecticFrame::standard(2).at(DVector::from_vec(vec![0.1, 0.2, 0.3, 0.4]));
        let back = SymplecticFrame::from_json(&fr.to_json()).unwrap();
        assert_eq!(fr, back);
    }
}

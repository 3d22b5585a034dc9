//! Maslov index of symplectic loops and Conley–Zehnder index of paths.
//!
//! The Conley–Zehnder index is computed from the rotation function `ρ`, which
//! assigns to a symplectic matrix the product of its Krein-positive elliptic
//! eigenvalues and a sign `(−1)^{m/2}` for `m` negative real eigenvalues. Along
//! a path from `I` its unwound argument plus an endpoint correction gives an
//! integer `μ`; the index reported here is `−μ`, so that a nondegenerate maximum
//! with small Hessian has index `n`.

use crate::error::{Error, Result};
use crate::symplectic::{omega_matrix, symplectic_residual, TOL_SYMP};
use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Eigenvalues closer than this to 1 make an endpoint degenerate.
pub const DEGENERACY_TOL: f64 = 1e-8;
const CLUSTER_TOL: f64 = 1e-6;
const CIRCLE_TOL: f64 = 1e-7;
const MAX_JUMP: f64 = PI / 2.0;

#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticPath {
    pub samples: Vec<(f64, DMatrix<f64>)>,
    pub is_loop: bool,
    pub period: f64,
}

impl SymplecticPath {
    pub fn new(samples: Vec<(f64, DMatrix<f64>)>, is_loop: bool) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Precondition("a path needs at least two samples".into()));
        }
        let d = samples[0].1.nrows();
        if d % 2 == 1 || samples.iter().any(|(_, m)| m.nrows() != d || m.ncols() != d) {
            return Err(Error::Dimension("path samples must be 2n x 2n".into()));
        }
        if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::Precondition("sample times must increase".into()));
        }
        let period = samples.last().unwrap().0 - samples[0].0;
        let path = SymplecticPath { samples, is_loop, period };
        if is_loop && !path.closes(TOL_SYMP) {
            return Err(Error::Precondition("loop does not close".into()));
        }
        Ok(path)
    }

    /// Uniform samples of `f` on `[t0, t1]`.
    pub fn from_fn(t0: f64, t1: f64, count: usize, is_loop: bool, f: impl Fn(f64) -> DMatrix<f64>) -> Result<Self> {
        let count = count.max(2);
        let samples = (0..count)
            .map(|k| {
                let t = t0 + (t1 - t0) * k as f64 / (count - 1) as f64;
                (t, f(t))
            })
            .collect();
        Self::new(samples, is_loop)
    }

    /// `t ↦ exp(tX)` on `[0, t1]`, sampled densely enough for unwinding.
    pub fn exp_path(x: &DMatrix<f64>, t1: f64) -> Result<Self> {
        let rate = x.complex_eigenvalues().iter().map(|l| l.norm()).fold(0.0, f64::max);
        let count = 65 + (128.0 * rate * t1.abs() / (2.0 * PI)).ceil() as usize;
        Self::from_fn(0.0, t1, count, false, |t| (x * t).exp())
    }

    pub fn dim_n(&self) -> usize {
        self.samples[0].1.nrows() / 2
    }

    /// JSON array of `[t, rows]` pairs with matrices row-major.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.samples
                .iter()
                .map(|(t, m)| serde_json::json!([t, crate::symplectic::matrix_to_rows(m)]))
                .collect(),
        )
    }

    pub fn from_json(v: &serde_json::Value, is_loop: bool) -> Result<Self> {
        let pairs: Vec<(f64, Vec<Vec<f64>>)> =
            serde_json::from_value(v.clone()).map_err(|e| Error::Validation(e.to_string()))?;
        let samples = pairs
            .into_iter()
            .map(|(t, rows)| Ok((t, crate::symplectic::matrix_from_rows(&rows)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(samples, is_loop)
    }

    pub fn start(&self) -> &DMatrix<f64> {
        &self.samples[0].1
    }

    pub fn end(&self) -> &DMatrix<f64> {
        &self.samples.last().unwrap().1
    }

    pub fn closes(&self, tol: f64) -> bool {
        (self.end() - self.start()).amax() <= tol * self.start().amax().max(1.0)
    }

    pub fn max_symplectic_residual(&self) -> f64 {
        self.samples.iter().map(|(_, m)| symplectic_residual(m).unwrap_or(f64::INFINITY)).fold(0.0, f64::max)
    }

    /// Loop concatenation: `self` followed by `other`, times shifted.
    pub fn concat(&self, other: &SymplecticPath) -> Result<Self> {
        if (other.start() - self.end()).amax() > TOL_SYMP * self.end().amax().max(1.0) {
            return Err(Error::Precondition("paths do not join".into()));
        }
        let shift = self.samples.last().unwrap().0 - other.samples[0].0;
        let mut samples = self.samples.clone();
        samples.extend(other.samples.iter().skip(1).map(|(t, m)| (t + shift, m.clone())));
        Self::new(samples, self.is_loop && other.is_loop)
    }

    /// Time reversal `t ↦ γ(−t)` (re-timed to increase).
    pub fn reversed(&self) -> Self {
        let t_end = self.samples.last().unwrap().0;
        let t0 = self.samples[0].0;
        let samples = self.samples.iter().rev().map(|(t, m)| (t0 + t_end - t, m.clone())).collect();
        SymplecticPath { samples, is_loop: self.is_loop, period: self.period }
    }

    /// Pointwise product `ψ(t)Φ(t)` with a loop sampled at the same times.
    pub fn left_multiply(&self, psi: &SymplecticPath) -> Result<Self> {
        if psi.samples.len() != self.samples.len()
            || psi.samples.iter().zip(&self.samples).any(|(a, b)| (a.0 - b.0).abs() > 1e-12 * (1.0 + b.0.abs()))
        {
            return Err(Error::Precondition("loop and path must share sample times".into()));
        }
        let samples = psi.samples.iter().zip(&self.samples).map(|((t, a), (_, b))| (*t, a * b)).collect();
        Self::new(samples, false)
    }

    /// The `T`-fold path `Ψ(t + kτ) = Ψ(t)Ψ(τ)^k` of a one-period path.
    pub fn iterate(&self, times: usize) -> Self {
        let times = times.max(1);
        let tau = self.period;
        let end = self.end().clone();
        let mut power = DMatrix::identity(end.nrows(), end.ncols());
        let mut samples = self.samples.clone();
        for k in 1..times {
            power = &end * &power;
            for (t, m) in self.samples.iter().skip(1) {
                samples.push((t + k as f64 * tau, m * &power));
            }
        }
        SymplecticPath { samples, is_loop: self.is_loop, period: tau * times as f64 }
    }
}

/// Principal logarithm of a matrix with `‖A − I‖_F < 1`, by repeated square roots
/// and the Mercator series.
fn log_near_identity(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let d = a.nrows();
    let id = DMatrix::<f64>::identity(d, d);
    if (a - &id).norm() >= 1.0 {
        return None;
    }
    let mut y = a.clone();
    let mut roots = 0;
    while (&y - &id).norm() > 0.05 && roots < 12 {
        // Denman–Beavers
        let mut z = id.clone();
        for _ in 0..30 {
            let yi = y.clone().try_inverse()?;
            let zi = z.clone().try_inverse()?;
            let yn = (&y + zi) * 0.5;
            let zn = (&z + yi) * 0.5;
            let done = (&yn - &y).norm() < 1e-15 * yn.norm();
            y = yn;
            z = zn;
            if done {
                break;
            }
        }
        roots += 1;
    }
    let e = &y - &id;
    let mut term = e.clone();
    let mut sum = e.clone();
    for k in 2..40 {
        term = &term * &e;
        let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
        sum += &term * (sign / k as f64);
    }
    Some(sum * 2f64.powi(roots))
}

impl SymplecticPath {
    /// Inserts `factor − 1` samples between neighbours along `exp(s·log(M_{k+1}M_k⁻¹))·M_k`.
    ///
    /// Only valid when neighbouring samples are close, so it refuses steps with
    /// `‖M_{k+1}M_k⁻¹ − I‖_F ≥ 1`.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        let factor = factor.max(1);
        let mut samples = vec![self.samples[0].clone()];
        for w in self.samples.windows(2) {
            let ((t0, m0), (t1, m1)) = (&w[0], &w[1]);
            let inv = m0.clone().try_inverse().ok_or_else(|| Error::Resolution("singular path sample".into()))?;
            let x = log_near_identity(&(m1 * &inv)).ok_or_else(|| Error::Resolution("samples too far apart to refine".into()))?;
            for k in 1..factor {
                let s = k as f64 / factor as f64;
                samples.push((t0 + s * (t1 - t0), (&x * s).exp() * m0));
            }
            samples.push((*t1, m1.clone()));
        }
        Ok(SymplecticPath { samples, is_loop: self.is_loop, period: self.period })
    }
}

fn polar_unitary_det(m: &DMatrix<f64>) -> Complex<f64> {
    let n = m.nrows() / 2;
    let svd = m.clone().svd(true, true);
    let u = svd.u.unwrap() * svd.v_t.unwrap();
    let c = DMatrix::from_fn(n, n, |i, j| Complex::new(u[(i, j)], u[(n + i, j)]));
    c.determinant()
}

fn unwrap_total(values: &[Complex<f64>]) -> Result<f64> {
    let mut total = 0.0;
    for w in values.windows(2) {
        let d = (w[1] / w[0]).arg();
        if d.abs() > MAX_JUMP {
            return Err(Error::Resolution(format!(
                "angle jump {d:.3} exceeds pi/2 between samples; refine the sampling"
            )));
        }
        total += d;
    }
    Ok(total)
}

/// Winding number of `det_C` of the unitary polar factor along a loop.
pub fn maslov_loop(path: &SymplecticPath) -> Result<i64> {
    if !path.is_loop {
        return Err(Error::Precondition("maslov_loop needs a closed loop".into()));
    }
    let dets: Vec<Complex<f64>> = path.samples.iter().map(|(_, m)| polar_unitary_det(m)).collect();
    let total = unwrap_total(&dets)?;
    let w = total / (2.0 * PI);
    if (w - w.round()).abs() > 1e-6 {
        return Err(Error::Resolution(format!("non-integral winding {w}")));
    }
    Ok(w.round() as i64)
}

/// An elliptic eigenvalue cluster `e^{iθ}`, θ ∈ (0, π), with Krein signature (p, q).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EllipticCluster {
    pub theta: f64,
    pub positive: usize,
    pub negative: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RotationData {
    pub rho: Complex<f64>,
    pub elliptic: Vec<EllipticCluster>,
    pub negative_real: usize,
    pub min_distance_to_one: f64,
}

fn complexify(m: &DMatrix<f64>) -> DMatrix<Complex<f64>> {
    m.map(|x| Complex::new(x, 0.0))
}

/// Basis (columns) of the generalized eigenspace of `m` at `lambda` of dimension `mult`.
fn generalized_eigenspace(m: &DMatrix<f64>, lambda: Complex<f64>, mult: usize) -> DMatrix<Complex<f64>> {
    let d = m.nrows();
    let a = complexify(m) - DMatrix::from_diagonal_element(d, d, lambda);
    let mut p = a.clone();
    for _ in 1..mult {
        p = &p * &a;
    }
    let svd = p.svd(false, true);
    let vt = svd.v_t.unwrap();
    let sv = svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[i].partial_cmp(&sv[j]).unwrap());
    let mut basis = DMatrix::zeros(d, mult);
    for (c, &idx) in order.iter().take(mult).enumerate() {
        for r in 0..d {
            basis[(r, c)] = vt[(idx, r)].conj();
        }
    }
    basis
}

/// Rotation function data of a symplectic matrix.
pub fn rotation_data(m: &DMatrix<f64>) -> RotationData {
    let d = m.nrows();
    let eig: Vec<Complex<f64>> = m.complex_eigenvalues().iter().copied().collect();
    let min_distance_to_one = eig.iter().map(|l| (l - Complex::new(1.0, 0.0)).norm()).fold(f64::INFINITY, f64::min);
    let mut negative_real = 0;
    let mut upper: Vec<Complex<f64>> = Vec::new();
    for l in &eig {
        if l.im.abs() <= 1e-12 * l.norm().max(1.0) {
            if l.re < 0.0 {
                negative_real += 1;
            }
        } else if l.im > 0.0 {
            upper.push(*l);
        }
    }
    upper.sort_by(|a, b| a.arg().partial_cmp(&b.arg()).unwrap());
    let mut clusters: Vec<Vec<Complex<f64>>> = Vec::new();
    for l in upper {
        match clusters.last_mut() {
            Some(c) if (c.last().unwrap() - l).norm() < CLUSTER_TOL => c.push(l),
            _ => clusters.push(vec![l]),
        }
    }
    // eigenvalues near a Jordan block lose about √(eps·‖M‖²)
    let circle_tol = CIRCLE_TOL.max(10.0 * f64::EPSILON.sqrt() * m.norm());
    let om = complexify(&omega_matrix(d / 2));
    let mut rho = if (negative_real / 2) % 2 == 1 { Complex::new(-1.0, 0.0) } else { Complex::new(1.0, 0.0) };
    let mut elliptic = Vec::new();
    for c in clusters {
        let center = c.iter().sum::<Complex<f64>>() / c.len() as f64;
        if (center.norm() - 1.0).abs() > circle_tol {
            continue;
        }
        let theta = center.arg();
        let v = generalized_eigenspace(m, center, c.len());
        let h = (v.adjoint() * &om * &v) * Complex::new(0.0, 1.0);
        let herm = (&h + h.adjoint()) * Complex::new(0.5, 0.0);
        let ev = herm.symmetric_eigenvalues();
        let positive = ev.iter().filter(|x| **x > 0.0).count();
        let negative = c.len() - positive;
        rho *= Complex::from_polar(1.0, (positive as f64 - negative as f64) * theta);
        elliptic.push(EllipticCluster { theta, positive, negative });
    }
    RotationData { rho, elliptic, negative_real, min_distance_to_one }
}

/// Conley–Zehnder index of a nondegenerate path starting at the identity.
///
/// Paths too coarse for the rotation function are refined geodesically and retried.
pub fn cz_index(path: &SymplecticPath) -> Result<i64> {
    let mut r = cz_index_sampled(path);
    for factor in [8, 64] {
        match r {
            Err(Error::Resolution(_)) => match path.refined(factor) {
                Ok(p) => r = cz_index_sampled(&p),
                Err(_) => return r,
            },
            _ => return r,
        }
    }
    r
}

fn cz_index_sampled(path: &SymplecticPath) -> Result<i64> {
    let d = path.start().nrows();
    let id = DMatrix::<f64>::identity(d, d);
    if (path.start() - &id).amax() > TOL_SYMP * 10.0 {
        return Err(Error::Precondition("path must start at the identity".into()));
    }
    let data: Vec<RotationData> = path.samples.iter().map(|(_, m)| rotation_data(m)).collect();
    let end = data.last().unwrap();
    if end.min_distance_to_one <= DEGENERACY_TOL {
        return Err(Error::Degenerate { min_distance: end.min_distance_to_one });
    }
    let rhos: Vec<Complex<f64>> = data.iter().map(|r| r.rho).collect();
    let delta = unwrap_total(&rhos)?;
    let correction: f64 = end
        .elliptic
        .iter()
        .map(|c| c.positive as f64 * (1.0 - c.theta / PI) + c.negative as f64 * (c.theta / PI - 1.0))
        .sum();
    let mu = delta / PI + correction;
    if (mu - mu.round()).abs() > 1e-6 {
        return Err(Error::Resolution(format!("non-integral index {mu}")));
    }
    Ok(-(mu.round() as i64))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IterateIndex {
    Index { value: i64 },
    Degenerate { min_distance: f64 },
    Unresolved,
}

impl IterateIndex {
    pub fn value(&self) -> Option<i64> {
        match self {
            IterateIndex::Index { value } => Some(*value),
            _ => None,
        }
    }
}

/// Per-iterate indices of a one-period path for `T = 1..=max_t`.
pub fn iteration_profile(path: &SymplecticPath, max_t: usize) -> Vec<(usize, IterateIndex)> {
    (1..=max_t)
        .map(|t| {
            let r = match cz_index(&path.iterate(t)) {
                Ok(v) => IterateIndex::Index { value: v },
                Err(Error::Degenerate { min_distance }) => IterateIndex::Degenerate { min_distance },
                Err(_) => IterateIndex::Unresolved,
            };
            (t, r)
        })
        .collect()
}

/// Signature (#positive − #negative eigenvalues) of a symmetric matrix.
pub fn signature(q: &DMatrix<f64>) -> i64 {
    let ev = q.clone().symmetric_eigenvalues();
    let scale = ev.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1e-300);
    ev.iter()
        .map(|x| {
            if *x > 1e-12 * scale {
                1
            } else if *x < -1e-12 * scale {
                -1
            } else {
                0
            }
        })
        .sum()
}

/// Planar rotation by `theta` counterclockwise.
pub fn rotation(theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

/// `diag(R(θ), I_{2n−2})` laid out in `(x, y)` coordinates.
pub fn block_rotation(n: usize, theta: f64) -> DMatrix<f64> {
    let mut m = DMatrix::identity(2 * n, 2 * n);
    let (s, c) = theta.sin_cos();
    m[(0, 0)] = c;
    m[(0, n)] = -s;
    m[(n, 0)] = s;
    m[(n, n)] = c;
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::j_matrix;

    fn rotation_loop(n: usize, k: i64) -> SymplecticPath {
        let count = 64 * k.unsigned_abs() as usize + 2;
        SymplecticPath::from_fn(0.0, 1.0, count, true, |t| block_rotation(n, 2.0 * PI * k as f64 * t)).unwrap()
    }

    #[test]
    fn maslov_examples() {
        let constant = SymplecticPath::from_fn(0.0, 1.0, 5, true, |_| DMatrix::identity(2, 2)).unwrap();
        assert_eq!(maslov_loop(&constant).unwrap(), 0);
        assert_eq!(maslov_loop(&rotation_loop(1, 1)).unwrap(), 1);
        for k in -3..=3 {
            assert_eq!(maslov_loop(&rotation_loop(2, k)).unwrap(), k);
        }
    }

    #[test]
    fn maslov_rejects_coarse_and_open_paths() {
        let coarse = SymplecticPath::from_fn(0.0, 1.0, 4, true, |t| rotation(2.0 * PI * t)).unwrap();
        assert!(matches!(maslov_loop(&coarse), Err(Error::Resolution(_))));
        let open = SymplecticPath::from_fn(0.0, 1.0, 10, false, |t| rotation(t)).unwrap();
        assert!(matches!(maslov_loop(&open), Err(Error::Precondition(_))));
    }

    #[test]
    fn normalization_small_negative_hessian() {
        let eps = 0.05;
        let q = DMatrix::from_diagonal_element(2, 2, -eps);
        let path = SymplecticPath::exp_path(&(j_matrix(1) * q), 1.0).unwrap();
        assert_eq!(cz_index(&path).unwrap(), 1);
    }

    #[test]
    fn hyperbolic_path_has_index_zero() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let path = SymplecticPath::exp_path(&x, 1.0).unwrap();
        assert_eq!(cz_index(&path).unwrap(), 0);
    }

    #[test]
    fn clockwise_rotation_closed_form() {
        for &theta in &[0.3, 2.0, 7.0, 13.5, 20.0] {
            let path = SymplecticPath::from_fn(0.0, 1.0, 400, false, |t| rotation(-theta * t)).unwrap();
            let expected = 2 * (theta / (2.0 * PI)).floor() as i64 + 1;
            assert_eq!(cz_index(&path).unwrap(), expected, "theta {theta}");
        }
    }

    #[test]
    fn degenerate_endpoint_reported() {
        let path = SymplecticPath::from_fn(0.0, 1.0, 10, false, |_| DMatrix::identity(2, 2)).unwrap();
        assert!(matches!(cz_index(&path), Err(Error::Degenerate { .. })));
    }

    #[test]
    fn iterate_profile_of_identity_is_degenerate() {
        let path = SymplecticPath::from_fn(0.0, 1.0, 10, false, |_| DMatrix::identity(4, 4)).unwrap();
        assert!(iteration_profile(&path, 3).iter().all(|(_, r)| matches!(r, IterateIndex::Degenerate { .. })));
    }

    #[test]
    fn iterate_matches_direct_path() {
        let alpha = 0.9;
        let one = SymplecticPath::from_fn(0.0, 1.0, 64, false, |t| rotation(-alpha * t)).unwrap();
        let it = one.iterate(5);
        let direct = rotation(-alpha * 5.0);
        assert!((it.end() - direct).amax() < 1e-12);
        assert_eq!(cz_index(&it).unwrap(), 2 * (5.0 * alpha / (2.0 * PI)).floor() as i64 + 1);
    }

    #[test]
    fn signature_counts() {
        let q = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -2.0, -3.0, 0.5]));
        assert_eq!(signature(&q), 0);
        assert_eq!(signature(&(-q.abs())), -4);
    }

    fn random_q(rng: &mut impl rand::Rng, n: usize) -> DMatrix<f64> {
        let a = DMatrix::from_fn(2 * n, 2 * n, |_, _| rng.random_range(-1.0..1.0));
        let q = a.qr().q();
        let ev = nalgebra::DVector::from_fn(2 * n, |_, _| {
            let v: f64 = rng.random_range(0.05..(2.0 * PI - 0.05));
            if rng.random_bool(0.5) { v } else { -v }
        });
        &q * DMatrix::from_diagonal(&ev) * q.transpose()
    }

    #[test]
    fn half_signature_formula() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for n in 1..=3 {
            for _ in 0..20 {
                let q = random_q(&mut rng, n);
                let path = SymplecticPath::exp_path(&(j_matrix(n) * &q), 1.0).unwrap();
                assert_eq!(cz_index(&path).unwrap(), -signature(&q) / 2);
            }
        }
    }

    #[test]
    fn loop_shift() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for n in 1..=2 {
            let q = random_q(&mut rng, n);
            let x = j_matrix(n) * &q;
            for k in [-2i64, 1, 2] {
                let count = 600;
                let path = SymplecticPath::from_fn(0.0, 1.0, count, false, |t| (&x * t).exp()).unwrap();
                let lp = SymplecticPath::from_fn(0.0, 1.0, count, true, |t| block_rotation(n, 2.0 * PI * k as f64 * t)).unwrap();
                let shifted = path.left_multiply(&lp).unwrap();
                assert_eq!(cz_index(&shifted).unwrap(), cz_index(&path).unwrap() - 2 * maslov_loop(&lp).unwrap());
            }
        }
    }
}

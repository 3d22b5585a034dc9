//! Checks connecting Hamiltonians built from generating functions to local
//! Morse homology: the relative-autonomy bound for `K` against `F`, and the
//! frame-by-frame table for degenerate maxima.

use super::{lm2_maximum_test, ScalarField};
use crate::error::{Error, Result};
use crate::flow::{time_map, Integrator};
use crate::genfun::{
    generating_function, linear_gf, linear_interpolated_flow, FlowMap, GfOptions, KHamiltonian, LambdaProfile,
};
use crate::hamiltonian::{Hamiltonian, HamiltonianField};
use crate::symplectic::{is_unipotent, j_matrix, spectral_norm, LagrangianSplitting, SqueezePlan, SymplecticFrame};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RelativeAutonomyCertificate {
    /// Larger of the two ratios below.
    pub epsilon_measured: f64,
    /// `sup ‖X_{K_t} − X_F‖ / ‖X_F‖`.
    pub field_ratio: f64,
    /// `sup ‖∂_t X_{K_t}‖ / ‖X_F‖`.
    pub drift_ratio: f64,
    /// `(max_t ‖d²(K_t)_p‖, ‖d²F_p‖)`.
    pub hessian_norms: (f64, f64),
    pub period: f64,
    /// `T(ε/(1 − ε) + max_t ‖d²(K_t)_p‖ + ‖d²F_p‖)`, or `T‖d²F_p‖` when `K`
    /// agrees with `F` on every probe.
    pub lhs_of_bound: f64,
    /// `"autonomous"` for the second case, `"relative"` otherwise.
    pub bound: String,
    pub passes: bool,
    /// The identification of local groups certified when the bound holds.
    pub conclusion: Option<String>,
}

/// Points of the `per_dim^{2n}` lattice on the cube of half-width `r` about `p`, without `p`.
fn cube_probes(p: &DVector<f64>, r: f64, per_dim: usize) -> Vec<DVector<f64>> {
    let d = p.len();
    let total = per_dim.pow(d as u32);
    let mut out = Vec::with_capacity(total);
    for flat in 0..total {
        let mut rem = flat;
        let mut z = p.clone();
        let mut offset = false;
        for c in 0..d {
            let i = rem % per_dim;
            rem /= per_dim;
            let u = if per_dim == 1 { 0.0 } else { 2.0 * i as f64 / (per_dim - 1) as f64 - 1.0 };
            offset |= u != 0.0;
            z[c] += r * u;
        }
        if offset {
            out.push(z);
        }
    }
    out
}

/// Measures how far `K` is from the autonomous `F` near `p`, and evaluates the
/// bound under which the `T`-th iterate of `K` has the local groups of `F`.
pub fn relative_autonomy_check(
    f: &dyn Hamiltonian,
    k: &HamiltonianField,
    p: &DVector<f64>,
    period: f64,
    box_radius: f64,
    t_samples: usize,
) -> Result<RelativeAutonomyCertificate> {
    let n = k.dim_n();
    if f.dim_n() != n || p.len() != 2 * n {
        return Err(Error::Dimension("reference field, K and point must share a dimension".into()));
    }
    let per_dim = match n {
        1 => 9,
        2 => 5,
        _ => 3,
    };
    let probes = cube_probes(p, box_radius, per_dim);
    let ts: Vec<f64> = (0..t_samples.max(1)).map(|i| i as f64 / t_samples.max(1) as f64 * k.period).collect();
    let dt = 1e-4 * k.period;
    let mut field_ratio: f64 = 0.0;
    let mut drift_ratio: f64 = 0.0;
    for z in &probes {
        let xf = f.gradient(0.0, z).norm();
        if !(xf > 0.0) {
            return Err(Error::Isolation { detail: format!("X_F vanishes at {:?}", z.as_slice()), s: None });
        }
        for &t in &ts {
            let gk = k.grad(t, z);
            let gf = f.gradient(t, z);
            field_ratio = field_ratio.max((&gk - &gf).norm() / xf);
            let ddt = (k.grad(t + dt, z) - k.grad(t - dt, z)) / (2.0 * dt);
            drift_ratio = drift_ratio.max(ddt.norm() / xf);
        }
    }
    let eps = field_ratio.max(drift_ratio);
    let hk = ts.iter().map(|&t| spectral_norm(&k.hess(t, p))).fold(0.0, f64::max);
    let hf = spectral_norm(&f.hessian(0.0, p));
    // K ≡ F is the autonomous case, whose bound carries a single Hessian
    let autonomous = eps == 0.0;
    let lhs = if autonomous {
        period * hf
    } else if eps < 1.0 {
        period * (eps / (1.0 - eps) + hk + hf)
    } else {
        f64::INFINITY
    };
    let passes = eps < 1.0 && lhs < 2.0 * PI;
    Ok(RelativeAutonomyCertificate {
        epsilon_measured: eps,
        field_ratio,
        drift_ratio,
        hessian_norms: (hk, hf),
        period,
        lhs_of_bound: lhs,
        bound: if autonomous { "autonomous" } else { "relative" }.into(),
        passes,
        conclusion: passes.then(|| format!("HF^loc_*(K^({period}), p) = HM^loc_{{*+{n}}}(F, p)")),
    })
}

#[derive(Clone, Debug)]
pub struct SdmOptions {
    /// Squeeze targets used when no frames are supplied.
    pub sigmas: Vec<f64>,
    /// Initial half-width of the generating-function cube in frame coordinates.
    pub radius: f64,
    pub t_samples: usize,
    /// Grid points per axis for the maximum test of each `K_t`.
    pub grid: usize,
    pub flow_step: f64,
    pub unipotent_tol: f64,
    pub chebyshev_degree: usize,
    /// Probe lattice of each generating function; `None` uses the dimension default.
    pub gf_per_dim: Option<usize>,
}

impl Default for SdmOptions {
    fn default() -> Self {
        SdmOptions {
            sigmas: vec![1e-1, 1e-2, 1e-3],
            radius: 0.1,
            t_samples: 16,
            grid: 33,
            flow_step: 0.01,
            unipotent_tol: 1e-6,
            chebyshev_degree: 10,
            gf_per_dim: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SdmRow {
    pub i: usize,
    /// `max_t ‖d²(K_t)_p‖` in frame coordinates.
    pub hessian_norm: f64,
    pub k1_pass: bool,
    /// Largest deviation of the linearized `K`-flow from the first frame's.
    pub k3_residual: f64,
    /// Half-width of the cube the generating function was built on.
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SdmReport {
    pub unipotent: bool,
    pub rows: Vec<SdmRow>,
    /// Whether `hessian_norm` decreases along the table.
    pub monotone: bool,
}

struct Slice<'a> {
    k: &'a KHamiltonian,
    t: f64,
}

impl ScalarField for Slice<'_> {
    fn dim(&self) -> usize {
        2 * self.k.dim_n()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.k.value(self.t, &DVector::from_column_slice(x))
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.k.gradient(self.t, &DVector::from_column_slice(x)).iter().copied().collect()
    }
}

/// `d(φ_K^t)_p` in standard coordinates, from the linear data of the frame:
/// `φ_K^t = φ_F^{t−λ(t)} ∘ φ_{K̃}^{λ(t)}` with both factors linear at `p`.
fn linear_k_path(dphi: &DMatrix<f64>, frame: &SymplecticFrame, profile: &LambdaProfile, times: &[f64]) -> Result<Vec<DMatrix<f64>>> {
    let n = frame.dim_n();
    let local = frame.operator_in_frame(dphi);
    let split = LagrangianSplitting::standard(n);
    let q = linear_gf(&local, &split)?.q;
    let jq = j_matrix(n) * q;
    let lambdas: Vec<f64> = times.iter().map(|&t| profile.value(t)).collect();
    let interp = linear_interpolated_flow(&local, &split, &lambdas)?;
    Ok(times
        .iter()
        .zip(&interp.samples)
        .map(|(&t, (l, m))| frame.matrix() * (&jq * (t - l)).exp() * m * frame.inverse_matrix())
        .collect())
}

/// Builds `K^i` from the time-one map of `h` in each frame and tabulates the
/// strict-maximum test, the Hessian at `p` and the linear agreement across frames.
pub fn sdm_certificate(h: &HamiltonianField, p: &DVector<f64>, attempts: &[SymplecticFrame], opts: &SdmOptions) -> Result<SdmReport> {
    let n = h.dim_n();
    let (end, dphi) = time_map(h, p, 0.0, h.period, opts.flow_step, Integrator::Yoshida6)?;
    if (&end - p).amax() > 1e-8 {
        return Err(Error::Precondition(format!("p is not a fixed point of the time-one map (drift {:.3e})", (&end - p).amax())));
    }
    if !is_unipotent(&dphi, opts.unipotent_tol)? {
        return Ok(SdmReport { unipotent: false, rows: Vec::new(), monotone: false });
    }
    let frames: Vec<SymplecticFrame> = if attempts.is_empty() {
        let plan = SqueezePlan::new(&dphi)?;
        opts.sigmas.iter().map(|&s| plan.squeeze(s).map(|sq| sq.frame.at(p.clone()))).collect::<Result<_>>()?
    } else {
        attempts.to_vec()
    };
    let profile = LambdaProfile::default();
    let phi = Arc::new(FlowMap { field: h.clone(), t0: 0.0, t1: h.period, step: opts.flow_step, integrator: Integrator::Yoshida6 });
    let ts: Vec<f64> = (0..opts.t_samples).map(|i| i as f64 / opts.t_samples as f64).collect();
    let check_times = [0.25, 0.5, 0.75, 1.0];
    let mut rows = Vec::new();
    let mut reference: Option<Vec<DMatrix<f64>>> = None;
    let mut gf_opts = GfOptions::for_dim(n);
    if let Some(k) = opts.gf_per_dim {
        gf_opts.per_dim = k;
    }
    for (i, frame) in frames.iter().enumerate() {
        let mut r = opts.radius;
        let f = loop {
            match generating_function(phi.clone(), frame, r, &gf_opts) {
                Ok((f, _)) => break f,
                Err(Error::Solvability(_)) if r > 1e-4 * opts.radius => r *= 0.5,
                Err(e) => return Err(e),
            }
        };
        let k = KHamiltonian::new(f.tabulate(opts.chebyshev_degree), profile);
        let origin = DVector::zeros(2 * n);
        let hessian_norm = ts.iter().map(|&t| spectral_norm(&k.hessian(t, &origin))).fold(0.0, f64::max);
        let k1_pass = ts.iter().all(|&t| {
            let slice = Slice { k: &k, t };
            matches!(lm2_maximum_test(&slice, &vec![0.0; 2 * n], 0.5 * r, Some(opts.grid)), Ok(true))
        });
        let path = linear_k_path(&dphi, frame, &profile, &check_times)?;
        let k3_residual = match &reference {
            None => 0.0,
            Some(r0) => r0
                .iter()
                .zip(&path)
                .map(|(a, b)| (a - b).amax() / a.amax().max(1.0))
                .fold(0.0, f64::max),
        };
        if reference.is_none() {
            reference = Some(path);
        }
        rows.push(SdmRow { i: i + 1, hessian_norm, k1_pass, k3_residual, radius: r });
    }
    let monotone = rows.windows(2).all(|w| w[1].hessian_norm <= w[0].hessian_norm * (1.0 + 1e-9) + 1e-9);
    Ok(SdmReport { unipotent: true, rows, monotone })
}

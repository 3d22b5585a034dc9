//! Symplectic time stepping of Hamiltonian flows and their linearization.
//!
//! The base scheme is the implicit midpoint rule. Its discrete Jacobian is the
//! Cayley transform `(I − hA/2)⁻¹(I + hA/2)` of `A = J·Hess H` at the midpoint,
//! which is symplectic to rounding, so the monodromy is propagated exactly for
//! the discrete map. Yoshida compositions raise the order to 4 or 6.

use crate::error::{Error, Result};
use crate::hamiltonian::{Hamiltonian, HamiltonianField, PhaseSpace};
use crate::index::SymplecticPath;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    #[default]
    Midpoint,
    Yoshida4,
    Yoshida6,
}

impl Integrator {
    /// Substep weights of the symmetric composition.
    fn weights(self) -> Vec<f64> {
        match self {
            Integrator::Midpoint => vec![1.0],
            Integrator::Yoshida4 => {
                let c = 2f64.powf(1.0 / 3.0);
                let w1 = 1.0 / (2.0 - c);
                let w0 = -c / (2.0 - c);
                vec![w1, w0, w1]
            }
            Integrator::Yoshida6 => {
                let w1 = -1.177_679_984_178_87;
                let w2 = 0.235_573_213_359_357;
                let w3 = 0.784_513_610_477_560;
                let w0 = 1.0 - 2.0 * (w1 + w2 + w3);
                vec![w3, w2, w1, w0, w1, w2, w3]
            }
        }
    }

    pub fn order(self) -> u32 {
        match self {
            Integrator::Midpoint => 2,
            Integrator::Yoshida4 => 4,
            Integrator::Yoshida6 => 6,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FlowOptions {
    pub integrator: Integrator,
    /// Relative Newton tolerance of the implicit solve.
    pub newton_tol: f64,
    pub max_newton: usize,
    pub monodromy: bool,
    /// Record trajectory and monodromy every k steps; 0 keeps only the endpoints.
    pub record_every: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions { integrator: Integrator::Midpoint, newton_tol: 1e-12, max_newton: 20, monodromy: true, record_every: 1 }
    }
}

impl FlowOptions {
    pub fn with(integrator: Integrator) -> Self {
        FlowOptions { integrator, ..Default::default() }
    }

    pub fn endpoints_only(mut self) -> Self {
        self.record_every = 0;
        self
    }

    pub fn without_monodromy(mut self) -> Self {
        self.monodromy = false;
        self
    }
}

#[derive(Clone, Debug)]
pub struct FlowResult {
    /// On the torus, reduced to `[0, 1)^{2n}`.
    pub end_point: DVector<f64>,
    /// End point in the universal cover.
    pub end_lift: DVector<f64>,
    pub end_monodromy: DMatrix<f64>,
    /// Recorded `(t, z)` in the universal cover.
    pub trajectory: Vec<(f64, DVector<f64>)>,
    pub monodromy: Option<SymplecticPath>,
    pub steps: usize,
    /// `max |H(z(t)) − H(z0)|` over recorded points, autonomous fields only.
    pub energy_drift: Option<f64>,
}

pub fn step_count(t0: f64, t1: f64, step: f64) -> Result<usize> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::Precondition("step must be positive".into()));
    }
    Ok(((t1 - t0).abs() / step).round().max(1.0) as usize)
}

/// Implicit midpoint step from `z` at time `t` over `h`; returns the new point and,
/// if requested, the step Jacobian.
pub fn midpoint_step(
    h_field: &HamiltonianField,
    z: &DVector<f64>,
    t: f64,
    h: f64,
    opts: &FlowOptions,
    jacobian: bool,
) -> Result<(DVector<f64>, Option<DMatrix<f64>>)> {
    let d = z.len();
    let tm = t + 0.5 * h;
    let x0 = h_field.vector_field(tm, z);
    if !x0.iter().all(|v| v.is_finite()) {
        return Err(Error::Solvability(format!("vector field not finite at t = {tm}")));
    }
    let mut w = z + &x0 * h;
    let id = DMatrix::<f64>::identity(d, d);
    let mut residual = f64::INFINITY;
    // fixed-point sweeps are cheaper than Newton when h·‖DX‖ is small
    let mut last = f64::INFINITY;
    for _ in 0..opts.max_newton {
        let next = z + h_field.vector_field(tm, &((z + &w) * 0.5)) * h;
        let delta = (&next - &w).amax();
        w = next;
        if !delta.is_finite() || delta > 0.25 * last {
            break;
        }
        last = delta;
        if delta <= opts.newton_tol * (1.0 + w.amax()) {
            let jac = if jacobian { Some(cayley(h_field, z, &w, tm, h, t)?) } else { None };
            return Ok((w, jac));
        }
    }
    if !w.iter().all(|v| v.is_finite()) {
        w = z + &x0 * h;
    }
    for it in 0..opts.max_newton {
        let m = (z + &w) * 0.5;
        let g = &w - z - h_field.vector_field(tm, &m) * h;
        let a = h_field.vector_field_jacobian(tm, &m);
        let dg = &id - &a * (0.5 * h);
        let delta = dg.clone().lu().solve(&g).ok_or(Error::Stiffness { t, iterations: it, residual })?;
        w -= &delta;
        residual = delta.amax();
        if !residual.is_finite() {
            break;
        }
        if residual <= opts.newton_tol * (1.0 + w.amax()) {
            let jac = if jacobian { Some(cayley(h_field, z, &w, tm, h, t)?) } else { None };
            return Ok((w, jac));
        }
    }
    Err(Error::Stiffness { t, iterations: opts.max_newton, residual })
}

/// Jacobian `(I − hA/2)⁻¹(I + hA/2)` of the midpoint step `z ↦ w`.
fn cayley(h_field: &HamiltonianField, z: &DVector<f64>, w: &DVector<f64>, tm: f64, h: f64, t: f64) -> Result<DMatrix<f64>> {
    let d = z.len();
    let id = DMatrix::<f64>::identity(d, d);
    let a = h_field.vector_field_jacobian(tm, &((z + w) * 0.5)) * (0.5 * h);
    (&id - &a).lu().solve(&(&id + &a)).ok_or(Error::Stiffness { t, iterations: 0, residual: f64::NAN })
}

/// `φ^{t1}_{t0}(z0)` with step close to `step` (the count is rounded so it fits exactly).
pub fn flow(h: &HamiltonianField, z0: &DVector<f64>, t0: f64, t1: f64, step: f64) -> Result<FlowResult> {
    flow_with(h, z0, t0, t1, step, &FlowOptions::default())
}

pub fn flow_with(
    h: &HamiltonianField,
    z0: &DVector<f64>,
    t0: f64,
    t1: f64,
    step: f64,
    opts: &FlowOptions,
) -> Result<FlowResult> {
    let d = 2 * h.dim_n();
    if z0.len() != d {
        return Err(Error::Dimension(format!("phase point has length {}, expected {d}", z0.len())));
    }
    let steps = step_count(t0, t1, step)?;
    let dt = (t1 - t0) / steps as f64;
    let weights = opts.integrator.weights();
    let mut z = z0.clone();
    let mut m = DMatrix::<f64>::identity(d, d);
    let mut t = t0;
    let mut traj = vec![(t0, z.clone())];
    let mut mono = vec![(t0, m.clone())];
    let autonomous = h.is_autonomous();
    let e0 = if autonomous { h.eval(t0, z0) } else { 0.0 };
    let mut drift: f64 = 0.0;
    for k in 0..steps {
        let mut tt = t;
        for &w in &weights {
            let hh = w * dt;
            let (zn, jac) = midpoint_step(h, &z, tt, hh, opts, opts.monodromy)?;
            z = zn;
            if let Some(j) = jac {
                m = j * &m;
            }
            tt += hh;
        }
        t = t0 + (k + 1) as f64 * dt;
        let record = k + 1 == steps || (opts.record_every > 0 && (k + 1) % opts.record_every == 0);
        if record {
            if autonomous {
                drift = drift.max((h.eval(t, &z) - e0).abs());
            }
            traj.push((t, z.clone()));
            if opts.monodromy {
                mono.push((t, m.clone()));
            }
        }
    }
    let end_point = match h.phase_space {
        PhaseSpace::Euclidean => z.clone(),
        PhaseSpace::Torus => reduce_torus(&z),
    };
    let monodromy = if opts.monodromy && t1 > t0 { Some(SymplecticPath::new(mono, false)?) } else { None };
    Ok(FlowResult {
        end_point,
        end_lift: z,
        end_monodromy: m,
        trajectory: traj,
        monodromy,
        steps,
        energy_drift: autonomous.then_some(drift),
    })
}

/// End point (universal cover) and Jacobian of the time map, without recording.
pub fn time_map(
    h: &HamiltonianField,
    z0: &DVector<f64>,
    t0: f64,
    t1: f64,
    step: f64,
    integrator: Integrator,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let opts = FlowOptions { integrator, record_every: 0, ..Default::default() };
    let r = flow_with(h, z0, t0, t1, step, &opts)?;
    Ok((r.end_lift, r.end_monodromy))
}

/// End point only.
pub fn time_map_point(
    h: &HamiltonianField,
    z0: &DVector<f64>,
    t0: f64,
    t1: f64,
    step: f64,
    integrator: Integrator,
) -> Result<DVector<f64>> {
    let opts = FlowOptions { integrator, record_every: 0, monodromy: false, ..Default::default() };
    Ok(flow_with(h, z0, t0, t1, step, &opts)?.end_lift)
}

pub fn reduce_torus(z: &DVector<f64>) -> DVector<f64> {
    z.map(|v| v.rem_euclid(1.0))
}

/// Difference `a − b` lifted to the representative nearest zero.
pub fn torus_difference(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    (a - b).map(|v| v - v.round())
}

/// Trajectory as CSV rows `t, z..., H`.
pub fn trajectory_csv(h: &HamiltonianField, r: &FlowResult) -> String {
    let d = 2 * h.dim_n();
    let n = h.dim_n();
    let mut out = String::from("t");
    for i in 1..=n {
        out.push_str(&format!(",x{i}"));
    }
    for i in 1..=n {
        out.push_str(&format!(",y{i}"));
    }
    out.push_str(",H\n");
    for (t, z) in &r.trajectory {
        out.push_str(&format!("{t:.16e}"));
        for i in 0..d {
            out.push_str(&format!(",{:.16e}", z[i]));
        }
        out.push_str(&format!(",{:.16e}\n", h.eval(*t, z)));
    }
    out
}

/// `(K#H)_t = K_t + H_t ∘ (φ_K^t)⁻¹`, whose flow is `φ_K^t ∘ φ_H^t`.
///
/// `(φ_K^t)⁻¹` is evaluated by flowing `K` backward from `t` to 0.
pub struct Composed {
    k: HamiltonianField,
    h: HamiltonianField,
    step: f64,
    integrator: Integrator,
}

impl Composed {
    /// Inverse flow `(φ_K^t)⁻¹(z)` and its Jacobian.
    fn pullback(&self, t: f64, z: &DVector<f64>, jacobian: bool) -> (DVector<f64>, Option<DMatrix<f64>>) {
        if t == 0.0 {
            let d = z.len();
            return (z.clone(), jacobian.then(|| DMatrix::identity(d, d)));
        }
        let opts = FlowOptions { integrator: self.integrator, record_every: 0, monodromy: jacobian, ..Default::default() };
        let steps = ((t.abs() / self.step).ceil().max(1.0)) as usize;
        match flow_with(&self.k, z, t, 0.0, t.abs() / steps as f64, &opts) {
            Ok(r) => (r.end_lift, jacobian.then_some(r.end_monodromy)),
            Err(_) => (z.map(|_| f64::NAN), None),
        }
    }
}

impl Hamiltonian for Composed {
    fn dim_n(&self) -> usize {
        self.k.dim_n()
    }
    fn value(&self, t: f64, z: &DVector<f64>) -> f64 {
        let (w, _) = self.pullback(t, z, false);
        self.k.eval(t, z) + self.h.eval(t, &w)
    }
    fn gradient(&self, t: f64, z: &DVector<f64>) -> DVector<f64> {
        let (w, dpsi) = self.pullback(t, z, true);
        match dpsi {
            Some(dpsi) => self.k.grad(t, z) + dpsi.transpose() * self.h.grad(t, &w),
            None => z.map(|_| f64::NAN),
        }
    }
    fn is_autonomous(&self) -> bool {
        false
    }
}

/// `K#H` with inner flows integrated at `step`.
pub fn compose(k: &HamiltonianField, h: &HamiltonianField, step: f64, integrator: Integrator) -> Result<HamiltonianField> {
    if (k.period - h.period).abs() > 1e-12 * k.period.max(1.0) {
        return Err(Error::Precondition(format!("periods differ: {} vs {}", k.period, h.period)));
    }
    if k.dim_n() != h.dim_n() || k.phase_space != h.phase_space {
        return Err(Error::Dimension("composed fields live on different spaces".into()));
    }
    let name = format!("{}#{}", k.name, h.name);
    let c = Composed { k: k.clone(), h: h.clone(), step, integrator };
    Ok(HamiltonianField::new(std::sync::Arc::new(c), k.period, k.phase_space, name))
}

//! The action functional `A_H(γ) = ∮ y dx + ∫ H_t(γ(t)) dt`.
//!
//! With `ẋ = −∂H/∂y` a clockwise circle of radius `r` has `∮ y dx = πr²`, which
//! is the negative symplectic area of its disc. For a loop in `R^{2n}` the area
//! term does not depend on the filling; on the torus the loop must lift to a
//! closed loop in the cover.

use crate::error::{Error, Result};
use crate::flow::{flow_with, FlowOptions, Integrator};
use crate::hamiltonian::{HamiltonianField, PhaseSpace};
use nalgebra::DVector;

/// Samples `(t, z)` of a loop, given in the universal cover on the torus. The
/// last sample may repeat the first.
#[derive(Clone, Debug)]
pub struct SampledLoop {
    pub samples: Vec<(f64, DVector<f64>)>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Filling {
    /// Cone from the centroid in a chart of `R^{2n}`.
    Cone,
    /// Claimed lattice winding of the lifted loop; must vanish.
    TorusWinding(Vec<i64>),
}

impl SampledLoop {
    pub fn new(samples: Vec<(f64, DVector<f64>)>) -> Result<Self> {
        if samples.len() < 3 {
            return Err(Error::Precondition("a loop needs at least three samples".into()));
        }
        Ok(SampledLoop { samples })
    }

    /// Drops a repeated closing sample, returning the period.
    fn open_points(&self) -> (Vec<&DVector<f64>>, f64) {
        let first = &self.samples[0];
        let last = self.samples.last().unwrap();
        let period = last.0 - first.0;
        let closed = (&last.1 - &first.1).amax() < 1e-9 * (1.0 + first.1.amax());
        let pts: Vec<&DVector<f64>> = if closed {
            self.samples[..self.samples.len() - 1].iter().map(|s| &s.1).collect()
        } else {
            self.samples.iter().map(|s| &s.1).collect()
        };
        (pts, period)
    }

    /// Lattice displacement `γ(end) − γ(start)` rounded to integers.
    pub fn winding(&self) -> Vec<i64> {
        let d = &self.samples.last().unwrap().1 - &self.samples[0].1;
        d.iter().map(|v| v.round() as i64).collect()
    }
}

/// `Σ_i ∮ y_i dx_i` for the closed polygon through the points.
pub fn area_term(points: &[&DVector<f64>]) -> f64 {
    let n = points[0].len() / 2;
    let k = points.len();
    let mut s = 0.0;
    for a in 0..k {
        let p = points[a];
        let q = points[(a + 1) % k];
        for i in 0..n {
            s += 0.5 * (p[n + i] + q[n + i]) * (q[i] - p[i]);
        }
    }
    s
}

fn check_filling(h: &HamiltonianField, gamma: &SampledLoop, filling: &Filling) -> Result<()> {
    match (h.phase_space, filling) {
        (PhaseSpace::Euclidean, Filling::Cone) => {
            let w = gamma.winding();
            if w.iter().any(|&v| v != 0) {
                return Err(Error::Precondition("loop does not close".into()));
            }
            Ok(())
        }
        (PhaseSpace::Euclidean, Filling::TorusWinding(_)) => {
            Err(Error::Precondition("torus winding certificate given for a Euclidean field".into()))
        }
        (PhaseSpace::Torus, Filling::Cone) => Err(Error::Contractibility("torus loops need a winding certificate".into())),
        (PhaseSpace::Torus, Filling::TorusWinding(claimed)) => {
            let w = gamma.winding();
            if &w != claimed {
                return Err(Error::Contractibility(format!("claimed winding {claimed:?}, measured {w:?}")));
            }
            if w.iter().any(|&v| v != 0) {
                return Err(Error::Contractibility(format!("loop winds {w:?} around the torus")));
            }
            Ok(())
        }
    }
}

/// `A_H(γ)` for a sampled loop: polygon area term plus trapezoid time integral.
pub fn action(h: &HamiltonianField, gamma: &SampledLoop, filling: &Filling) -> Result<f64> {
    check_filling(h, gamma, filling)?;
    let (pts, _) = gamma.open_points();
    let area = area_term(&pts);
    let s = &gamma.samples;
    let mut integral = 0.0;
    for w in s.windows(2) {
        integral += 0.5 * (w[1].0 - w[0].0) * (h.eval(w[0].0, &w[0].1) + h.eval(w[1].0, &w[1].1));
    }
    Ok(area + integral)
}

/// Action of the `T`-periodic orbit through `z0`, with `∮ y dx = ∫ y·ẋ dt` and
/// `ẋ` taken from the vector field, integrated by the periodic trapezoid rule.
pub fn orbit_action(
    h: &HamiltonianField,
    z0: &DVector<f64>,
    period: f64,
    step: f64,
    integrator: Integrator,
) -> Result<f64> {
    let opts = FlowOptions { integrator, record_every: 1, monodromy: false, ..Default::default() };
    let r = flow_with(h, z0, 0.0, period, step, &opts)?;
    if h.phase_space == PhaseSpace::Torus {
        let d = &r.end_lift - z0;
        if d.iter().any(|v| v.round() != 0.0) {
            return Err(Error::Contractibility(format!("orbit winds {:?} around the torus", d.map(|v| v.round()))));
        }
    }
    Ok(trajectory_action(h, &r.trajectory))
}

/// Periodic trapezoid of `y·ẋ + H` over recorded samples whose last point closes the loop.
pub fn trajectory_action(h: &HamiltonianField, traj: &[(f64, DVector<f64>)]) -> f64 {
    let n = h.dim_n();
    let k = traj.len() - 1;
    let dt = (traj[k].0 - traj[0].0) / k as f64;
    let mut s = 0.0;
    for (t, z) in &traj[..k] {
        let g = h.grad(*t, z);
        let ydx: f64 = (0..n).map(|i| z[n + i] * (-g[n + i])).sum();
        s += ydx + h.eval(*t, z);
    }
    s * dt
}

/// `A(G) = ∫_0^T G_t(p) dt` at a fixed point, by the periodic trapezoid rule.
pub fn fixed_point_action(h: &HamiltonianField, p: &DVector<f64>, samples: usize) -> f64 {
    let k = samples.max(8);
    let dt = h.period / k as f64;
    (0..k).map(|i| h.eval(i as f64 * dt, p)).sum::<f64>() * dt
}

/// `∫_0^T ∫_{T^{2n}} G_t ω^n dt` for the unit-volume torus on a `grid^{2n}` lattice.
pub fn torus_mean_action(h: &HamiltonianField, grid: usize, t_samples: usize) -> Result<f64> {
    if h.phase_space != PhaseSpace::Torus {
        return Err(Error::Precondition("mean action needs a torus field".into()));
    }
    let d = 2 * h.dim_n();
    let total = grid.pow(d as u32);
    let mut acc = 0.0;
    let mut z = DVector::zeros(d);
    for idx in 0..total {
        let mut r = idx;
        for c in 0..d {
            z[c] = (r % grid) as f64 / grid as f64;
            r /= grid;
        }
        acc += fixed_point_action(h, &z, t_samples);
    }
    Ok(acc / total as f64)
}

/// Sorted values with `|a − b| ≤ 1e-9·max(1, |a|)` merged.
pub fn action_spectrum(values: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out: Vec<f64> = Vec::new();
    for x in v {
        match out.last() {
            Some(&last) if (x - last).abs() <= 1e-9 * last.abs().max(1.0) => {}
            _ => out.push(x),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{ExprHamiltonian, Zero};
    use std::f64::consts::PI;

    fn circle(r: f64, k: usize, ccw: bool) -> SampledLoop {
        let s = if ccw { 1.0 } else { -1.0 };
        SampledLoop::new(
            (0..=k)
                .map(|i| {
                    let a = 2.0 * PI * i as f64 / k as f64;
                    (i as f64 / k as f64, DVector::from_vec(vec![r * a.cos(), s * r * a.sin()]))
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn ccw_circle_has_negative_action() {
        let h = HamiltonianField::euclidean(Zero(1), 1.0, "zero");
        let a = action(&h, &circle(0.7, 4000, true), &Filling::Cone).unwrap();
        assert!((a + PI * 0.49).abs() < 1e-5);
    }

    #[test]
    fn constant_loop() {
        let h = HamiltonianField::euclidean(ExprHamiltonian::parse("2.5 + x", 1).unwrap(), 3.0, "c");
        let p = DVector::from_vec(vec![0.0, 1.0]);
        let lp = SampledLoop::new((0..=10).map(|i| (0.3 * i as f64, p.clone())).collect()).unwrap();
        assert!((action(&h, &lp, &Filling::Cone).unwrap() - 7.5).abs() < 1e-12);
        assert!((fixed_point_action(&h, &p, 16) - 7.5).abs() < 1e-12);
    }

    #[test]
    fn radial_orbit() {
        // F(ρ) = −aρ: clockwise circles of angular speed a
        let a = 2.0 * PI;
        let h = HamiltonianField::euclidean(ExprHamiltonian::parse("-pi*(x^2+y^2)", 1).unwrap(), 1.0, "lin");
        let r = 0.3;
        let z0 = DVector::from_vec(vec![r, 0.0]);
        let act = orbit_action(&h, &z0, 1.0, 1e-3, Integrator::Yoshida6).unwrap();
        let expected = -a * r * r / 2.0 + PI * r * r;
        assert!((act - expected).abs() < 1e-9, "{act} vs {expected}");
    }

    #[test]
    fn torus_winding_rejected() {
        let h = HamiltonianField::new(
            std::sync::Arc::new(Zero(1)),
            1.0,
            PhaseSpace::Torus,
            "zero",
        );
        let lp = SampledLoop::new(
            (0..=10).map(|i| (i as f64 / 10.0, DVector::from_vec(vec![i as f64 / 10.0, 0.2]))).collect(),
        )
        .unwrap();
        assert!(matches!(action(&h, &lp, &Filling::TorusWinding(vec![1, 0])), Err(Error::Contractibility(_))));
        assert!(matches!(action(&h, &lp, &Filling::TorusWinding(vec![0, 0])), Err(Error::Contractibility(_))));
    }

    #[test]
    fn spectrum_dedup() {
        assert_eq!(action_spectrum(&[2.0, 1.0 + 1e-12, 1.0]), vec![1.0, 2.0]);
    }
}

//! The one-periodic Hamiltonian `K` whose time-one map is generated by `F`.
//!
//! `F_t = tF` generates a path `φ^t` from the identity to `φ`. Its Hamiltonian
//! has the closed form `K̃_t(z) = F(κ^t(z))`, where `κ^t(x̄, ȳ) = (x̄, y)` with
//! `ȳ − y = t∂₁F(x̄, y)`. Reparametrizing by a profile `λ` that is flat at both
//! ends gives
//!
//! ```text
//! K_t(z) = (1 − λ′(t))F(z) + λ′(t)K̃_{λ(t)}(φ_F^{λ(t)−t}(z))
//! ```
//!
//! which equals `F` near `t = 0, 1` and has the flow `φ_F^{t−λ}φ_{K̃}^{λ}`.

use super::{block, split, GeneratingFunction, GfHamiltonian};
use crate::error::{Error, Result};
use crate::flow::{flow_with, FlowOptions, Integrator};
use crate::hamiltonian::{Framed, Hamiltonian, HamiltonianField, PhaseSpace};
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

/// `λ = S∘S` on `[a, 1 − a]` with `S(u) = 3u² − 2u³`; zero below, one above.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LambdaProfile {
    pub margin: f64,
}

impl Default for LambdaProfile {
    fn default() -> Self {
        LambdaProfile { margin: 0.1 }
    }
}

fn smoothstep(u: f64) -> f64 {
    u * u * (3.0 - 2.0 * u)
}

fn smoothstep_d(u: f64) -> f64 {
    6.0 * u * (1.0 - u)
}

impl LambdaProfile {
    fn u(&self, t: f64) -> f64 {
        ((t - self.margin) / (1.0 - 2.0 * self.margin)).clamp(0.0, 1.0)
    }

    pub fn value(&self, t: f64) -> f64 {
        smoothstep(smoothstep(self.u(t)))
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let u = self.u(t);
        if u <= 0.0 || u >= 1.0 {
            return 0.0;
        }
        smoothstep_d(smoothstep(u)) * smoothstep_d(u) / (1.0 - 2.0 * self.margin)
    }
}

/// `K` in frame coordinates.
#[derive(Clone)]
pub struct KHamiltonian {
    pub f: GeneratingFunction,
    pub profile: LambdaProfile,
    f_field: HamiltonianField,
    /// Step for the inner flow `φ_F^{λ−t}`.
    pub inner_step: f64,
}

impl KHamiltonian {
    pub fn new(f: GeneratingFunction, profile: LambdaProfile) -> Self {
        let f_field = HamiltonianField::new(Arc::new(GfHamiltonian(f.clone())), 1.0, PhaseSpace::Euclidean, "F");
        KHamiltonian { f, profile, f_field, inner_step: 0.1 }
    }

    /// `κ^t(z)` and `M = I + t·∂₁₂F` at `κ^t(z)`, with `∂F` and `d²F` there.
    fn kappa(&self, t: f64, z: &DVector<f64>) -> Option<(DVector<f64>, DMatrix<f64>, DVector<f64>, DMatrix<f64>)> {
        let n = self.f.dim_n();
        let (xb, yb) = split(z);
        let id = DMatrix::<f64>::identity(n, n);
        let mut y = yb.clone();
        for _ in 0..40 {
            let w = super::join(&xb, &y);
            let (g, h) = self.f.grad_hess(&w)?;
            let r = &y - &yb + g.rows(0, n) * t;
            let m = &id + block(&h, 0, 1) * t;
            let dy = m.clone().lu().solve(&r)?;
            y -= &dy;
            if dy.amax() <= 1e-15 * (1.0 + y.amax()) {
                let w = super::join(&xb, &y);
                let (g, h) = self.f.grad_hess(&w)?;
                let m = &id + block(&h, 0, 1) * t;
                return Some((w, m, g, h));
            }
        }
        None
    }

    /// `K̃_t` and its gradient.
    pub fn k_tilde(&self, t: f64, z: &DVector<f64>) -> Option<(f64, DVector<f64>)> {
        let n = self.f.dim_n();
        let (w, m, g, h) = self.kappa(t, z)?;
        let mt = m.transpose().lu();
        let v = mt.solve(&g.rows(n, n).into_owned())?;
        let gx = g.rows(0, n) - block(&h, 0, 0) * &v * t;
        Some((self.f.value(&w), super::join(&gx, &v)))
    }

    /// `φ_F^{s}(z)` with Jacobian.
    fn f_flow(&self, s: f64, z: &DVector<f64>, jacobian: bool) -> Option<(DVector<f64>, Option<DMatrix<f64>>)> {
        if s == 0.0 {
            let d = z.len();
            return Some((z.clone(), jacobian.then(|| DMatrix::identity(d, d))));
        }
        // a fixed step count keeps K smooth in t
        let steps = (0.3 / self.inner_step).ceil().max(1.0);
        let opts = FlowOptions { integrator: Integrator::Yoshida6, record_every: 0, monodromy: jacobian, ..Default::default() };
        let r = flow_with(&self.f_field, z, 0.0, s, s.abs() / steps, &opts).ok()?;
        Some((r.end_lift, jacobian.then_some(r.end_monodromy)))
    }
}

impl Hamiltonian for KHamiltonian {
    fn dim_n(&self) -> usize {
        self.f.dim_n()
    }

    fn value(&self, t: f64, z: &DVector<f64>) -> f64 {
        let t = t.rem_euclid(1.0);
        let dl = self.profile.derivative(t);
        let fz = self.f.value(z);
        if dl == 0.0 {
            return fz;
        }
        let l = self.profile.value(t);
        let Some((w, _)) = self.f_flow(l - t, z, false) else { return f64::NAN };
        match self.k_tilde(l, &w) {
            Some((v, _)) => (1.0 - dl) * fz + dl * v,
            None => f64::NAN,
        }
    }

    fn gradient(&self, t: f64, z: &DVector<f64>) -> DVector<f64> {
        let nan = || z.map(|_| f64::NAN);
        let t = t.rem_euclid(1.0);
        let dl = self.profile.derivative(t);
        let Some(gf) = self.f.gradient(z) else { return nan() };
        if dl == 0.0 {
            return gf;
        }
        let l = self.profile.value(t);
        let Some((w, Some(dphi))) = self.f_flow(l - t, z, true) else { return nan() };
        match self.k_tilde(l, &w) {
            Some((_, gk)) => gf * (1.0 - dl) + dphi.transpose() * gk * dl,
            None => nan(),
        }
    }

    fn is_autonomous(&self) -> bool {
        false
    }
}

/// Monitored estimates for `K`.
#[derive(Clone, Debug, PartialEq)]
pub struct KReport {
    /// Largest `|K_t(p)|` over the time samples.
    pub max_value_at_p: f64,
    /// Largest `‖∇K_t(p)‖`.
    pub max_gradient_at_p: f64,
    /// `max_t ‖d²(K_t)_p‖`.
    pub max_hessian_at_p: f64,
    /// `‖d²F_p‖`.
    pub hessian_f: f64,
    /// `max_t ‖d²(K_t)_p‖ / ‖d²F_p‖`.
    pub hessian_ratio: f64,
    /// Largest `|K_t − F|` over probes at times where `λ′ = 0`.
    pub endpoint_defect: f64,
    pub domain_radius: f64,
}

/// `K` as a one-periodic field in the original coordinates, after checking that
/// every evaluation on the ball of `domain_radius` (frame coordinates) stays in
/// the domain of `F`.
pub fn hamiltonian_from_gf(
    f: &GeneratingFunction,
    profile: LambdaProfile,
    domain_radius: f64,
    t_samples: usize,
) -> Result<(HamiltonianField, KReport)> {
    let k = KHamiltonian::new(f.clone(), profile);
    let n = f.dim_n();
    let ts: Vec<f64> = (0..t_samples.max(2)).map(|i| i as f64 / t_samples.max(2) as f64).collect();
    let probes = probe_shell(n, domain_radius);
    let fits = |r: f64| {
        probes.iter().all(|u| {
            let z = u * (r / domain_radius);
            ts.iter().all(|&t| k.gradient(t, &z).iter().all(|v| v.is_finite()))
        })
    };
    if !fits(domain_radius) {
        let mut r = domain_radius;
        while r > 1e-6 * domain_radius && !fits(r) {
            r *= 0.8;
        }
        return Err(Error::ShrinkRadius { suggested: r });
    }
    let origin = DVector::zeros(2 * n);
    let hf = crate::symplectic::spectral_norm(&f.hessian_at_p());
    let mut max_v: f64 = 0.0;
    let mut max_g: f64 = 0.0;
    let mut max_h: f64 = 0.0;
    for &t in &ts {
        max_v = max_v.max(k.value(t, &origin).abs());
        max_g = max_g.max(k.gradient(t, &origin).norm());
        max_h = max_h.max(crate::symplectic::spectral_norm(&k.hessian(t, &origin)));
    }
    let mut endpoint: f64 = 0.0;
    for t in [0.0, 0.05, 0.95, 0.99] {
        for u in &probes {
            endpoint = endpoint.max((k.value(t, u) - f.value(u)).abs());
        }
    }
    let report = KReport {
        max_value_at_p: max_v,
        max_gradient_at_p: max_g,
        max_hessian_at_p: max_h,
        hessian_f: hf,
        hessian_ratio: if hf > 0.0 { max_h / hf } else { 0.0 },
        endpoint_defect: endpoint,
        domain_radius,
    };
    let frame = f.frame.clone();
    let field = HamiltonianField::new(Arc::new(Framed { inner: Arc::new(k), frame }), 1.0, PhaseSpace::Euclidean, "K");
    Ok((field, report))
}

/// `±r e_i` and the diagonal corners scaled to radius `r`.
fn probe_shell(n: usize, r: f64) -> Vec<DVector<f64>> {
    let d = 2 * n;
    let mut out = Vec::new();
    for i in 0..d {
        for s in [-1.0, 1.0] {
            let mut v = DVector::zeros(d);
            v[i] = s * r;
            out.push(v);
        }
    }
    for mask in 0..(1usize << d) {
        let v = DVector::from_fn(d, |i, _| if mask >> i & 1 == 1 { r } else { -r } / (d as f64).sqrt());
        out.push(v);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::time_map_point;
    use crate::genfun::{map_of, probe_points, NearIdentityMap};
    use crate::hamiltonian::{ExprHamiltonian, Zero};
    use crate::symplectic::SymplecticFrame;

    fn analytic(src: &str, r: f64) -> GeneratingFunction {
        GeneratingFunction::analytic(Arc::new(ExprHamiltonian::parse(src, 1).unwrap()), SymplecticFrame::standard(1), r)
    }

    #[test]
    fn profile_is_flat_at_ends() {
        let p = LambdaProfile::default();
        assert_eq!(p.value(0.05), 0.0);
        assert_eq!(p.value(0.95), 1.0);
        assert_eq!(p.derivative(0.02), 0.0);
        let h = 1e-6;
        for t in [0.2, 0.5, 0.77] {
            let fd = (p.value(t + h) - p.value(t - h)) / (2.0 * h);
            assert!((fd - p.derivative(t)).abs() < 1e-6);
        }
    }

    #[test]
    fn k_tilde_gradient_matches_finite_differences() {
        let f = analytic("0.05*x^2*y + 0.03*y^3 - 0.02*x^3 + 0.04*x*y", 0.5);
        let k = KHamiltonian::new(f, LambdaProfile::default());
        let z = DVector::from_vec(vec![0.1, -0.2]);
        let (_, g) = k.k_tilde(0.7, &z).unwrap();
        let fd = crate::hamiltonian::fd_gradient(|w| k.k_tilde(0.7, w).unwrap().0, &z);
        assert!((g - fd).amax() < 1e-9);
        let gk = k.gradient(0.4, &z);
        let fdk = crate::hamiltonian::fd_gradient(|w| k.value(0.4, w), &z);
        assert!((gk - fdk).amax() < 1e-8);
    }

    #[test]
    fn zero_function_gives_zero_hamiltonian() {
        let f = GeneratingFunction::analytic(Arc::new(Zero(1)), SymplecticFrame::standard(1), 0.5);
        let (k, rep) = hamiltonian_from_gf(&f, LambdaProfile::default(), 0.3, 16).unwrap();
        assert_eq!(k.eval(0.4, &DVector::from_vec(vec![0.1, 0.1])), 0.0);
        assert_eq!(rep.max_hessian_at_p, 0.0);
    }

    #[test]
    fn time_one_map_of_k_is_the_generated_map() {
        let f = analytic("0.06*x^2*y - 0.04*y^3 + 0.03*x^3 - 0.05*y^2", 0.5);
        let (k, rep) = hamiltonian_from_gf(&f, LambdaProfile::default(), 0.25, 16).unwrap();
        assert!(rep.max_value_at_p < 1e-15 && rep.endpoint_defect == 0.0);
        let phi = map_of(&f);
        for z in probe_points(1, 0.25, 5) {
            let end = time_map_point(&k, &z, 0.0, 1.0, 0.05, Integrator::Yoshida6).unwrap();
            assert!((end - phi.apply(&z)).amax() < 1e-8);
        }
    }

    #[test]
    fn shear_is_reproduced() {
        let f = analytic("-0.5*0.05*y^2", 1.0);
        let (k, _) = hamiltonian_from_gf(&f, LambdaProfile::default(), 0.5, 16).unwrap();
        let z = DVector::from_vec(vec![0.2, 0.3]);
        let end = time_map_point(&k, &z, 0.0, 1.0, 0.05, Integrator::Yoshida6).unwrap();
        assert!((end - DVector::from_vec(vec![0.2 + 0.05 * 0.3, 0.3])).amax() < 1e-7);
    }

    #[test]
    fn too_large_domain_asks_to_shrink() {
        let f = analytic("0.05*x^2*y", 0.1);
        let r = hamiltonian_from_gf(&f, LambdaProfile::default(), 0.2, 8);
        assert!(matches!(r, Err(Error::ShrinkRadius { suggested }) if suggested < 0.1));
    }
}

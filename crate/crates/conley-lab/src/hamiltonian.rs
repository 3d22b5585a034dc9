//! Time-periodic Hamiltonians on `R^{2n}` and `T^{2n}`.

use crate::error::{Error, Result};
use crate::expr::Function;
use crate::symplectic::j_matrix;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseSpace {
    Euclidean,
    /// `R^{2n}/Z^{2n}`.
    Torus,
}

/// A smooth function `H(t, z)`; implementors supply at least value and gradient.
pub trait Hamiltonian: Send + Sync {
    fn dim_n(&self) -> usize;
    fn value(&self, t: f64, z: &DVector<f64>) -> f64;
    fn gradient(&self, t: f64, z: &DVector<f64>) -> DVector<f64>;

    fn hessian(&self, t: f64, z: &DVector<f64>) -> DMatrix<f64> {
        fd_hessian(|w| self.gradient(t, w), z)
    }

    fn is_autonomous(&self) -> bool {
        false
    }
}

/// Central-difference Hessian from a gradient, symmetrized.
pub fn fd_hessian(grad: impl Fn(&DVector<f64>) -> DVector<f64>, z: &DVector<f64>) -> DMatrix<f64> {
    let d = z.len();
    let mut h = DMatrix::zeros(d, d);
    for j in 0..d {
        let step = 1e-5 * (1.0 + z[j].abs());
        let mut a = z.clone();
        let mut b = z.clone();
        a[j] += step;
        b[j] -= step;
        let col = (grad(&a) - grad(&b)) / (2.0 * step);
        h.set_column(j, &col);
    }
    (&h + h.transpose()) * 0.5
}

/// Central-difference gradient of a scalar function.
pub fn fd_gradient(f: impl Fn(&DVector<f64>) -> f64, z: &DVector<f64>) -> DVector<f64> {
    let d = z.len();
    DVector::from_fn(d, |j, _| {
        let step = 1e-6 * (1.0 + z[j].abs());
        let mut a = z.clone();
        let mut b = z.clone();
        a[j] += step;
        b[j] -= step;
        (f(&a) - f(&b)) / (2.0 * step)
    })
}

/// A Hamiltonian with its period and phase space.
#[derive(Clone)]
pub struct HamiltonianField {
    inner: Arc<dyn Hamiltonian>,
    pub period: f64,
    pub phase_space: PhaseSpace,
    pub name: String,
}

impl fmt::Debug for HamiltonianField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HamiltonianField")
            .field("name", &self.name)
            .field("n", &self.dim_n())
            .field("period", &self.period)
            .field("phase_space", &self.phase_space)
            .finish()
    }
}

impl HamiltonianField {
    pub fn new(inner: Arc<dyn Hamiltonian>, period: f64, phase_space: PhaseSpace, name: impl Into<String>) -> Self {
        HamiltonianField { inner, period, phase_space, name: name.into() }
    }

    pub fn euclidean(h: impl Hamiltonian + 'static, period: f64, name: &str) -> Self {
        Self::new(Arc::new(h), period, PhaseSpace::Euclidean, name)
    }

    pub fn inner(&self) -> &Arc<dyn Hamiltonian> {
        &self.inner
    }

    pub fn dim_n(&self) -> usize {
        self.inner.dim_n()
    }

    pub fn is_autonomous(&self) -> bool {
        self.inner.is_autonomous()
    }

    pub fn eval(&self, t: f64, z: &DVector<f64>) -> f64 {
        self.inner.value(t, z)
    }

    pub fn grad(&self, t: f64, z: &DVector<f64>) -> DVector<f64> {
        self.inner.gradient(t, z)
    }

    pub fn hess(&self, t: f64, z: &DVector<f64>) -> DMatrix<f64> {
        self.inner.hessian(t, z)
    }

    /// `X_H = J∇H`.
    pub fn vector_field(&self, t: f64, z: &DVector<f64>) -> DVector<f64> {
        apply_j(&self.grad(t, z))
    }

    /// `DX_H = J·Hess H`.
    pub fn vector_field_jacobian(&self, t: f64, z: &DVector<f64>) -> DMatrix<f64> {
        j_matrix(self.dim_n()) * self.hess(t, z)
    }

    /// The same function viewed with period `T·period`.
    pub fn iterate(&self, times: usize) -> Self {
        let mut h = self.clone();
        h.period *= times.max(1) as f64;
        if times > 1 {
            h.name = format!("{}^({})", self.name, times);
        }
        h
    }

    /// Max |H(t + period, z) − H(t, z)| over the given probes.
    pub fn periodicity_defect(&self, probes: &[(f64, DVector<f64>)]) -> f64 {
        probes
            .iter()
            .map(|(t, z)| (self.eval(t + self.period, z) - self.eval(*t, z)).abs())
            .fold(0.0, f64::max)
    }

    /// Max relative disagreement of grad/hess with finite differences of eval.
    pub fn derivative_defect(&self, probes: &[(f64, DVector<f64>)]) -> f64 {
        let mut worst: f64 = 0.0;
        for (t, z) in probes {
            let g = self.grad(*t, z);
            let g_fd = fd_gradient(|w| self.eval(*t, w), z);
            worst = worst.max((&g - &g_fd).amax() / g.amax().max(1.0));
            let h = self.hess(*t, z);
            let h_fd = fd_hessian(|w| self.grad(*t, w), z);
            worst = worst.max((&h - &h_fd).amax() / h.amax().max(1.0));
        }
        worst
    }
}

/// `Jv` for `J = [[0, −I], [I, 0]]`.
pub fn apply_j(v: &DVector<f64>) -> DVector<f64> {
    let n = v.len() / 2;
    DVector::from_fn(2 * n, |i, _| if i < n { -v[n + i] } else { v[i - n] })
}

/// `H = ½zᵀQz + c`.
#[derive(Clone, Debug)]
pub struct Quadratic {
    pub q: DMatrix<f64>,
    pub c: f64,
}

impl Quadratic {
    pub fn new(q: DMatrix<f64>) -> Result<Self> {
        if q.nrows() != q.ncols() || q.nrows() % 2 == 1 {
            return Err(Error::Dimension("quadratic form must be 2n x 2n".into()));
        }
        if (&q - q.transpose()).amax() > 1e-12 * q.amax().max(1.0) {
            return Err(Error::Precondition("quadratic form must be symmetric".into()));
        }
        Ok(Quadratic { q, c: 0.0 })
    }
}

impl Hamiltonian for Quadratic {
    fn dim_n(&self) -> usize {
        self.q.nrows() / 2
    }
    fn value(&self, _t: f64, z: &DVector<f64>) -> f64 {
        0.5 * z.dot(&(&self.q * z)) + self.c
    }
    fn gradient(&self, _t: f64, z: &DVector<f64>) -> DVector<f64> {
        &self.q * z
    }
    fn hessian(&self, _t: f64, _z: &DVector<f64>) -> DMatrix<f64> {
        self.q.clone()
    }
    fn is_autonomous(&self) -> bool {
        true
    }
}

/// `H ≡ 0`.
#[derive(Clone, Copy, Debug)]
pub struct Zero(pub usize);

impl Hamiltonian for Zero {
    fn dim_n(&self) -> usize {
        self.0
    }
    fn value(&self, _t: f64, _z: &DVector<f64>) -> f64 {
        0.0
    }
    fn gradient(&self, _t: f64, z: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(z.len())
    }
    fn hessian(&self, _t: f64, z: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::zeros(z.len(), z.len())
    }
    fn is_autonomous(&self) -> bool {
        true
    }
}

/// Hamiltonian given by an expression in `x1..xn, y1..yn, t`.
#[derive(Clone, Debug)]
pub struct ExprHamiltonian {
    n: usize,
    f: Function,
    autonomous: bool,
}

impl ExprHamiltonian {
    /// For `n = 1` the names `x` and `y` are accepted as aliases.
    pub fn parse(src: &str, n: usize) -> Result<Self> {
        let mut vars: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
        vars.extend((1..=n).map(|i| format!("y{i}")));
        vars.push("t".into());
        let aliases: Vec<(&str, usize)> = if n == 1 { vec![("x", 0), ("y", 1)] } else { vec![] };
        let f = Function::new(src, &vars, &aliases)?;
        let autonomous = !f.depends_on(2 * n);
        Ok(ExprHamiltonian { n, f, autonomous })
    }

    fn args(&self, t: f64, z: &DVector<f64>) -> Vec<f64> {
        let mut v: Vec<f64> = z.iter().copied().collect();
        v.push(t);
        v
    }

    pub fn source(&self) -> &str {
        &self.f.source
    }
}

impl Hamiltonian for ExprHamiltonian {
    fn dim_n(&self) -> usize {
        self.n
    }
    fn value(&self, t: f64, z: &DVector<f64>) -> f64 {
        self.f.eval(&self.args(t, z))
    }
    fn gradient(&self, t: f64, z: &DVector<f64>) -> DVector<f64> {
        let a = self.args(t, z);
        DVector::from_fn(2 * self.n, |i, _| self.f.partial(i, &a))
    }
    fn hessian(&self, t: f64, z: &DVector<f64>) -> DMatrix<f64> {
        let a = self.args(t, z);
        DMatrix::from_fn(2 * self.n, 2 * self.n, |i, j| self.f.second(i, j, &a))
    }
    fn is_autonomous(&self) -> bool {
        self.autonomous
    }
}

type ValueFn = dyn Fn(f64, &DVector<f64>) -> f64 + Send + Sync;
type GradFn = dyn Fn(f64, &DVector<f64>) -> DVector<f64> + Send + Sync;
type HessFn = dyn Fn(f64, &DVector<f64>) -> DMatrix<f64> + Send + Sync;

/// Hamiltonian from closures; missing derivatives fall back to finite differences.
#[derive(Clone)]
pub struct FnHamiltonian {
    n: usize,
    value: Arc<ValueFn>,
    grad: Option<Arc<GradFn>>,
    hess: Option<Arc<HessFn>>,
    autonomous: bool,
}

impl FnHamiltonian {
    pub fn new(n: usize, autonomous: bool, value: impl Fn(f64, &DVector<f64>) -> f64 + Send + Sync + 'static) -> Self {
        FnHamiltonian { n, value: Arc::new(value), grad: None, hess: None, autonomous }
    }

    pub fn with_gradient(mut self, g: impl Fn(f64, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static) -> Self {
        self.grad = Some(Arc::new(g));
        self
    }

    pub fn with_hessian(mut self, h: impl Fn(f64, &DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        self.hess = Some(Arc::new(h));
        self
    }
}

impl Hamiltonian for FnHamiltonian {
    fn dim_n(&self) -> usize {
        self.n
    }
    fn value(&self, t: f64, z: &DVector<f64>) -> f64 {
        (self.value)(t, z)
    }
    fn gradient(&self, t: f64, z: &DVector<f64>) -> DVector<f64> {
        match &self.grad {
            Some(g) => g(t, z),
            None => fd_gradient(|w| (self.value)(t, w), z),
        }
    }
    fn hessian(&self, t: f64, z: &DVector<f64>) -> DMatrix<f64> {
        match &self.hess {
            Some(h) => h(t, z),
            None => fd_hessian(|w| self.gradient(t, w), z),
        }
    }
    fn is_autonomous(&self) -> bool {
        self.autonomous
    }
}

/// `a·H_1 + b·H_2`.
#[derive(Clone)]
pub struct Combination {
    pub terms: Vec<(f64, Arc<dyn Hamiltonian>)>,
}

impl Hamiltonian for Combination {
    fn dim_n(&self) -> usize {
        self.terms[0].1.dim_n()
    }
    fn value(&self, t: f64, z: &DVector<f64>) -> f64 {
        self.terms.iter().map(|(a, h)| a * h.value(t, z)).sum()
    }
    fn gradient(&self, t: f64, z: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(z.len());
        for (a, h) in &self.terms {
            g += h.gradient(t, z) * *a;
        }
        g
    }
    fn hessian(&self, t: f64, z: &DVector<f64>) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(z.len(), z.len());
        for (a, h) in &self.terms {
            m += h.hessian(t, z) * *a;
        }
        m
    }
    fn is_autonomous(&self) -> bool {
        self.terms.iter().all(|(_, h)| h.is_autonomous())
    }
}

/// A Hamiltonian given in frame coordinates `w`, evaluated at `z = p + Cw`.
#[derive(Clone)]
pub struct Framed {
    pub inner: Arc<dyn Hamiltonian>,
    pub frame: crate::symplectic::SymplecticFrame,
}

impl Hamiltonian for Framed {
    fn dim_n(&self) -> usize {
        self.inner.dim_n()
    }
    fn value(&self, t: f64, z: &DVector<f64>) -> f64 {
        self.inner.value(t, &self.frame.to_frame(z))
    }
    fn gradient(&self, t: f64, z: &DVector<f64>) -> DVector<f64> {
        self.frame.inverse_matrix().transpose() * self.inner.gradient(t, &self.frame.to_frame(z))
    }
    fn hessian(&self, t: f64, z: &DVector<f64>) -> DMatrix<f64> {
        let ci = self.frame.inverse_matrix();
        ci.transpose() * self.inner.hessian(t, &self.frame.to_frame(z)) * ci
    }
    fn is_autonomous(&self) -> bool {
        self.inner.is_autonomous()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expression_field_derivatives() {
        let h = ExprHamiltonian::parse("0.5*y^2 + cos(2*pi*x)/(4*pi^2) + 0.1*sin(2*pi*t)*x", 1).unwrap();
        assert!(!h.is_autonomous());
        let f = HamiltonianField::new(Arc::new(h), 1.0, PhaseSpace::Torus, "forced");
        let probes: Vec<(f64, DVector<f64>)> =
            (0..5).map(|k| (0.1 * k as f64, DVector::from_vec(vec![0.13 * k as f64, -0.2 + 0.1 * k as f64]))).collect();
        assert!(f.derivative_defect(&probes) < 1e-5);
        assert!(f.periodicity_defect(&probes) < 1e-12);
    }

    #[test]
    fn vector_field_convention() {
        let h = HamiltonianField::euclidean(ExprHamiltonian::parse("y", 1).unwrap(), 1.0, "translation");
        let x = h.vector_field(0.0, &DVector::from_vec(vec![0.3, 0.4]));
        assert_eq!(x, DVector::from_vec(vec![-1.0, 0.0]));
    }

    #[test]
    fn iterate_scales_period() {
        let h = HamiltonianField::euclidean(Zero(1), 1.0, "zero");
        assert_eq!(h.iterate(1).period, 1.0);
        assert_eq!(h.iterate(4).period, 4.0);
    }

    #[test]
    fn fn_hamiltonian_fallbacks() {
        let h = FnHamiltonian::new(1, true, |_, z| z[0].powi(3) + z[0] * z[1]);
        let z = DVector::from_vec(vec![0.5, 2.0]);
        let g = h.gradient(0.0, &z);
        assert!((g[0] - (0.75 + 2.0)).abs() < 1e-8 && (g[1] - 0.5).abs() < 1e-8);
        let m = h.hessian(0.0, &z);
        assert!((m[(0, 0)] - 3.0).abs() < 1e-4 && (m[(0, 1)] - 1.0).abs() < 1e-4);
    }
}

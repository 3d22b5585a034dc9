//! Generating functions of near-identity symplectic maps.
//!
//! In mixed coordinates `(x̄, y)` a map `(x, y) ↦ (x̄, ȳ)` close to the identity
//! is encoded by a function `F` with
//!
//! ```text
//! x̄ − x = −∂₂F(x̄, y)
//! ȳ − y =  ∂₁F(x̄, y)
//! ```
//!
//! Everything here works in frame coordinates `w = C⁻¹(z − p)` centred at a
//! fixed point `p`. For small `F` the map is close to the time-one flow of `F`.

pub mod chebyshev;
pub mod linear;
pub mod periodic;

use crate::error::{Error, Result};
use crate::expr::Function;
use crate::flow::{time_map, Integrator};
use crate::hamiltonian::{Hamiltonian, HamiltonianField};
use crate::symplectic::{spectral_norm, SymplecticFrame};
use chebyshev::ChebyshevTable;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use std::sync::Arc;

pub use linear::{linear_gf, linear_interpolated_flow, LinearGf};
pub use periodic::{hamiltonian_from_gf, KHamiltonian, KReport, LambdaProfile};

/// Solvability threshold on `‖φ − id‖_{C¹}`.
pub const C1_THRESHOLD: f64 = 0.2;
const CLOSEDNESS_TOL: f64 = 1e-6;

/// A symplectic map near the identity, with its Jacobian.
pub trait NearIdentityMap: Send + Sync {
    fn dim_n(&self) -> usize;
    fn apply(&self, z: &DVector<f64>) -> DVector<f64>;

    fn apply_with_jacobian(&self, z: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let d = z.len();
        let mut jac = DMatrix::zeros(d, d);
        for j in 0..d {
            let h = 1e-6 * (1.0 + z[j].abs());
            let mut a = z.clone();
            let mut b = z.clone();
            a[j] += h;
            b[j] -= h;
            jac.set_column(j, &((self.apply(&a) - self.apply(&b)) / (2.0 * h)));
        }
        (self.apply(z), jac)
    }
}

fn split(z: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
    let n = z.len() / 2;
    (z.rows(0, n).into_owned(), z.rows(n, n).into_owned())
}

fn join(x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
    let n = x.len();
    DVector::from_fn(2 * n, |i, _| if i < n { x[i] } else { y[i - n] })
}

fn block(m: &DMatrix<f64>, r: usize, c: usize) -> DMatrix<f64> {
    let n = m.nrows() / 2;
    m.view((r * n, c * n), (n, n)).into_owned()
}

fn from_blocks(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, d: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(a);
    m.view_mut((0, n), (n, n)).copy_from(b);
    m.view_mut((n, 0), (n, n)).copy_from(c);
    m.view_mut((n, n), (n, n)).copy_from(d);
    m
}

/// `z ↦ Mz`.
#[derive(Clone, Debug)]
pub struct LinearMap(pub DMatrix<f64>);

impl NearIdentityMap for LinearMap {
    fn dim_n(&self) -> usize {
        self.0.nrows() / 2
    }
    fn apply(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.0 * z
    }
    fn apply_with_jacobian(&self, z: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        (&self.0 * z, self.0.clone())
    }
}

/// Time map `φ_{t0}^{t1}` of a Hamiltonian field.
#[derive(Clone, Debug)]
pub struct FlowMap {
    pub field: HamiltonianField,
    pub t0: f64,
    pub t1: f64,
    pub step: f64,
    pub integrator: Integrator,
}

impl NearIdentityMap for FlowMap {
    fn dim_n(&self) -> usize {
        self.field.dim_n()
    }
    fn apply(&self, z: &DVector<f64>) -> DVector<f64> {
        self.apply_with_jacobian(z).0
    }
    fn apply_with_jacobian(&self, z: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        match time_map(&self.field, z, self.t0, self.t1, self.step, self.integrator) {
            Ok(r) => r,
            Err(_) => (z.map(|_| f64::NAN), DMatrix::from_element(z.len(), z.len(), f64::NAN)),
        }
    }
}

/// `(x, y) ↦ (x, y + ∇V(x))` for a potential in the variables `x1..xn`.
#[derive(Clone, Debug)]
pub struct VerticalShear {
    pub potential: Function,
    pub n: usize,
}

/// `(x, y) ↦ (x − ∇W(y), y)` for a potential in the variables `y1..yn`.
#[derive(Clone, Debug)]
pub struct HorizontalShear {
    pub potential: Function,
    pub n: usize,
}

fn potential(src: &str, prefix: char, n: usize) -> Result<Function> {
    let vars: Vec<String> = (1..=n).map(|i| format!("{prefix}{i}")).collect();
    let alias = prefix.to_string();
    let aliases: Vec<(&str, usize)> = if n == 1 { vec![(alias.as_str(), 0)] } else { vec![] };
    Function::new(src, &vars, &aliases)
}

fn grad_hess_of(f: &Function, v: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let a: Vec<f64> = v.iter().copied().collect();
    let n = v.len();
    (DVector::from_fn(n, |i, _| f.partial(i, &a)), DMatrix::from_fn(n, n, |i, j| f.second(i, j, &a)))
}

impl VerticalShear {
    pub fn parse(src: &str, n: usize) -> Result<Self> {
        Ok(VerticalShear { potential: potential(src, 'x', n)?, n })
    }
}

impl HorizontalShear {
    pub fn parse(src: &str, n: usize) -> Result<Self> {
        Ok(HorizontalShear { potential: potential(src, 'y', n)?, n })
    }
}

impl NearIdentityMap for VerticalShear {
    fn dim_n(&self) -> usize {
        self.n
    }
    fn apply(&self, z: &DVector<f64>) -> DVector<f64> {
        self.apply_with_jacobian(z).0
    }
    fn apply_with_jacobian(&self, z: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let (x, y) = split(z);
        let (g, h) = grad_hess_of(&self.potential, &x);
        let id = DMatrix::identity(self.n, self.n);
        (join(&x, &(y + g)), from_blocks(&id, &DMatrix::zeros(self.n, self.n), &h, &id))
    }
}

impl NearIdentityMap for HorizontalShear {
    fn dim_n(&self) -> usize {
        self.n
    }
    fn apply(&self, z: &DVector<f64>) -> DVector<f64> {
        self.apply_with_jacobian(z).0
    }
    fn apply_with_jacobian(&self, z: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let (x, y) = split(z);
        let (g, h) = grad_hess_of(&self.potential, &y);
        let id = DMatrix::identity(self.n, self.n);
        (join(&(x - g), &y), from_blocks(&id, &(-h), &DMatrix::zeros(self.n, self.n), &id))
    }
}

/// Maps applied left to right.
#[derive(Clone)]
pub struct Composition(pub Vec<Arc<dyn NearIdentityMap>>);

impl NearIdentityMap for Composition {
    fn dim_n(&self) -> usize {
        self.0[0].dim_n()
    }
    fn apply(&self, z: &DVector<f64>) -> DVector<f64> {
        self.0.iter().fold(z.clone(), |acc, m| m.apply(&acc))
    }
    fn apply_with_jacobian(&self, z: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let d = z.len();
        let mut p = z.clone();
        let mut j = DMatrix::identity(d, d);
        for m in &self.0 {
            let (q, jm) = m.apply_with_jacobian(&p);
            j = jm * j;
            p = q;
        }
        (p, j)
    }
}

/// `w ↦ C⁻¹(φ(p + Cw) − p)`.
#[derive(Clone)]
pub struct FramedMap {
    pub inner: Arc<dyn NearIdentityMap>,
    pub frame: SymplecticFrame,
}

impl NearIdentityMap for FramedMap {
    fn dim_n(&self) -> usize {
        self.inner.dim_n()
    }
    fn apply(&self, w: &DVector<f64>) -> DVector<f64> {
        self.frame.to_frame(&self.inner.apply(&self.frame.from_frame(w)))
    }
    fn apply_with_jacobian(&self, w: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let (z, j) = self.inner.apply_with_jacobian(&self.frame.from_frame(w));
        (self.frame.to_frame(&z), self.frame.operator_in_frame(&j))
    }
}

#[derive(Clone)]
enum GfKind {
    Analytic { h: Arc<dyn Hamiltonian>, offset: f64 },
    /// Local map in frame coordinates.
    Implicit(Arc<dyn NearIdentityMap>),
    /// Chebyshev interpolant of the gradient.
    Tabulated(Arc<ChebyshevTable>),
}

/// `F` on the cube `|w|_∞ ≤ radius` in the coordinates of `frame`, with `F(0) = 0`.
#[derive(Clone)]
pub struct GeneratingFunction {
    n: usize,
    pub radius: f64,
    pub frame: SymplecticFrame,
    kind: GfKind,
}

impl std::fmt::Debug for GeneratingFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match self.kind {
            GfKind::Analytic { .. } => "analytic",
            GfKind::Implicit(_) => "implicit",
            GfKind::Tabulated(_) => "tabulated",
        };
        f.debug_struct("GeneratingFunction").field("n", &self.n).field("radius", &self.radius).field("kind", &kind).finish()
    }
}

const SIMPSON_INTERVALS: usize = 64;

impl GeneratingFunction {
    /// `F` given directly as an autonomous function of `w`; shifted so `F(0) = 0`.
    pub fn analytic(h: Arc<dyn Hamiltonian>, frame: SymplecticFrame, radius: f64) -> Self {
        let n = h.dim_n();
        let offset = h.value(0.0, &DVector::zeros(2 * n));
        GeneratingFunction { n, radius, frame, kind: GfKind::Analytic { h, offset } }
    }

    pub fn dim_n(&self) -> usize {
        self.n
    }

    pub fn contains(&self, w: &DVector<f64>) -> bool {
        w.amax() <= self.radius * (1.0 + 1e-12)
    }

    pub fn is_tabulated(&self) -> bool {
        matches!(self.kind, GfKind::Tabulated(_))
    }

    pub fn gradient(&self, w: &DVector<f64>) -> Option<DVector<f64>> {
        if !self.contains(w) {
            return None;
        }
        match &self.kind {
            GfKind::Analytic { h, .. } => Some(h.gradient(0.0, w)),
            GfKind::Implicit(map) => implicit_solve(map.as_ref(), w).map(|s| s.gradient(w)),
            GfKind::Tabulated(t) => Some(DVector::from_vec(t.eval(w, 0).0)),
        }
    }

    pub fn grad_hess(&self, w: &DVector<f64>) -> Option<(DVector<f64>, DMatrix<f64>)> {
        if !self.contains(w) {
            return None;
        }
        match &self.kind {
            GfKind::Analytic { h, .. } => Some((h.gradient(0.0, w), h.hessian(0.0, w))),
            GfKind::Implicit(map) => implicit_solve(map.as_ref(), w).map(|s| (s.gradient(w), s.hessian())),
            GfKind::Tabulated(t) => {
                let (v, g, _) = t.eval(w, 1);
                let d = 2 * self.n;
                let m = DMatrix::from_fn(d, d, |i, j| g[i][j]);
                Some((DVector::from_vec(v), (&m + m.transpose()) * 0.5))
            }
        }
    }

    pub fn hessian(&self, w: &DVector<f64>) -> Option<DMatrix<f64>> {
        self.grad_hess(w).map(|x| x.1)
    }

    /// `F(w)`; radial Simpson integration of `dF` unless `F` is analytic.
    pub fn value(&self, w: &DVector<f64>) -> f64 {
        if !self.contains(w) {
            return f64::NAN;
        }
        if let GfKind::Analytic { h, offset } = &self.kind {
            return h.value(0.0, w) - offset;
        }
        if let GfKind::Tabulated(t) = &self.kind {
            // along a ray the interpolant is a polynomial of degree ≤ degree·D
            let m = t.degree * t.dim / 2 + 1;
            return chebyshev::gauss_legendre_unit(m).iter().map(|&(s, c)| c * DVector::from_vec(t.eval(&(w * s), 0).0).dot(w)).sum();
        }
        let k = SIMPSON_INTERVALS;
        let mut s = 0.0;
        for i in 0..=k {
            let c = if i == 0 || i == k { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            let u = w * (i as f64 / k as f64);
            match self.gradient(&u) {
                Some(g) => s += c * g.dot(w),
                None => return f64::NAN,
            }
        }
        s / (3.0 * k as f64)
    }

    pub fn hessian_at_p(&self) -> DMatrix<f64> {
        self.hessian(&DVector::zeros(2 * self.n)).expect("origin lies in the domain")
    }

    /// Chebyshev interpolant of `dF` of the given degree per coordinate.
    pub fn tabulate(&self, degree: usize) -> Self {
        let d = 2 * self.n;
        let me = self.clone();
        let table = ChebyshevTable::build(d, degree, self.radius, d, move |w| {
            me.gradient(w).map(|g| g.iter().copied().collect()).unwrap_or_else(|| vec![f64::NAN; d])
        });
        GeneratingFunction { n: self.n, radius: self.radius, frame: self.frame.clone(), kind: GfKind::Tabulated(Arc::new(table)) }
    }

    /// Grid samples `(w, F, dF)` with the frame, as JSON.
    pub fn to_json(&self, per_dim: usize) -> serde_json::Value {
        let pts = probe_points(self.n, self.radius, per_dim);
        let rows: Vec<serde_json::Value> = pts
            .iter()
            .map(|w| {
                let g = self.gradient(w).unwrap_or_else(|| w.map(|_| f64::NAN));
                serde_json::json!({
                    "w": w.iter().copied().collect::<Vec<_>>(),
                    "F": self.value(w),
                    "dF": g.iter().copied().collect::<Vec<_>>(),
                })
            })
            .collect();
        serde_json::json!({ "frame": self.frame.to_json(), "radius": self.radius, "samples": rows })
    }
}

struct ImplicitSolution {
    x: DVector<f64>,
    image: DVector<f64>,
    jac: DMatrix<f64>,
}

impl ImplicitSolution {
    /// `(ȳ − y, x − x̄)` at `u = (x̄, y)`.
    fn gradient(&self, u: &DVector<f64>) -> DVector<f64> {
        let (xb, y) = split(u);
        let (_, yb) = split(&self.image);
        join(&(yb - y), &(&self.x - xb))
    }

    fn hessian(&self) -> DMatrix<f64> {
        let n = self.x.len();
        let a = block(&self.jac, 0, 0);
        let b = block(&self.jac, 0, 1);
        let c = block(&self.jac, 1, 0);
        let d = block(&self.jac, 1, 1);
        let id = DMatrix::identity(n, n);
        let ai = a.try_inverse().unwrap_or_else(|| DMatrix::from_element(n, n, f64::NAN));
        let cai = &c * &ai;
        let m = from_blocks(&cai, &(d - &id - &cai * &b), &(&ai - &id), &(-(&ai * &b)));
        (&m + m.transpose()) * 0.5
    }
}

/// Solves `φ_x(x, y) = x̄` for `x` by Newton from `x = x̄`.
fn implicit_solve(map: &dyn NearIdentityMap, u: &DVector<f64>) -> Option<ImplicitSolution> {
    let (xb, y) = split(u);
    let n = xb.len();
    let mut x = xb.clone();
    for _ in 0..40 {
        let (image, jac) = map.apply_with_jacobian(&join(&x, &y));
        let r = image.rows(0, n) - &xb;
        if !r.iter().all(|v| v.is_finite()) {
            return None;
        }
        let a = block(&jac, 0, 0);
        let dx = a.lu().solve(&r)?;
        x -= &dx;
        if dx.amax() <= 1e-15 * (1.0 + x.amax()) || r.amax() <= 1e-16 * (1.0 + xb.amax()) {
            let (image, jac) = map.apply_with_jacobian(&join(&x, &y));
            return Some(ImplicitSolution { x, image, jac });
        }
    }
    None
}

/// Lattice points with `per_dim` points per axis inside the ball `|w| ≤ radius`.
pub fn probe_points(n: usize, radius: f64, per_dim: usize) -> Vec<DVector<f64>> {
    let d = 2 * n;
    let k = per_dim.max(2);
    let total = k.pow(d as u32);
    (0..total)
        .filter_map(|flat| {
            let mut r = flat;
            let w = DVector::from_fn(d, |_, _| {
                let i = r % k;
                r /= k;
                -radius + 2.0 * radius * i as f64 / (k - 1) as f64
            });
            (w.norm() <= radius * (1.0 + 1e-12)).then_some(w)
        })
        .collect()
}

/// Default lattice resolution: 33 per axis in dimension 2, coarser above.
pub fn default_per_dim(n: usize) -> usize {
    match n {
        1 => 17,
        2 => 9,
        _ => 5,
    }
}

/// `max(sup‖φ − id‖, sup‖dφ − I‖)` on the probe lattice.
pub fn c1_distance(map: &dyn NearIdentityMap, radius: f64, per_dim: usize) -> f64 {
    let n = map.dim_n();
    let id = DMatrix::<f64>::identity(2 * n, 2 * n);
    probe_points(n, radius, per_dim)
        .par_iter()
        .map(|w| {
            let (z, j) = map.apply_with_jacobian(w);
            let d = (z - w).norm().max(spectral_norm(&(j - &id)));
            if d.is_finite() {
                d
            } else {
                f64::INFINITY
            }
        })
        .reduce(|| 0.0, f64::max)
}

#[derive(Clone, Debug)]
pub struct GfOptions {
    pub per_dim: usize,
    pub threshold: f64,
}

impl GfOptions {
    pub fn for_dim(n: usize) -> Self {
        GfOptions { per_dim: default_per_dim(n), threshold: C1_THRESHOLD }
    }
}

#[derive(Clone, Debug)]
pub struct GfReport {
    pub c1_distance: f64,
    /// Worst `|∮ dF|` over audit triangles, relative to `sup|dF|·perimeter`.
    pub closedness_residual: f64,
    /// `sup(‖dF‖, ‖d²F‖)` on the probes.
    pub c2_norm: f64,
    /// Measured constant in `‖F‖_{C²} ≤ C·‖φ − id‖_{C¹}`.
    pub c2_over_c1: f64,
    pub hessian_at_p: DMatrix<f64>,
    pub probes: usize,
}

/// Generating function of `phi` in the coordinates of `frame` on the cube of `radius`.
pub fn generating_function(
    phi: Arc<dyn NearIdentityMap>,
    frame: &SymplecticFrame,
    radius: f64,
    opts: &GfOptions,
) -> Result<(GeneratingFunction, GfReport)> {
    let n = phi.dim_n();
    if frame.dim_n() != n {
        return Err(Error::Dimension("frame and map dimensions differ".into()));
    }
    let local: Arc<dyn NearIdentityMap> = Arc::new(FramedMap { inner: phi, frame: frame.clone() });
    let origin = DVector::zeros(2 * n);
    let drift = local.apply(&origin).norm();
    if !(drift <= 1e-9) {
        return Err(Error::Precondition(format!("base point is not fixed (|φ(p) − p| = {drift:.3e})")));
    }
    // the cube |w|_∞ ≤ r is probed through its inscribed ball and corners
    let c1 = c1_distance(local.as_ref(), radius * (2.0 * n as f64).sqrt(), opts.per_dim);
    if !(c1 < opts.threshold) {
        return Err(Error::Solvability(format!("‖φ − id‖_C1 = {c1:.3e} is above the threshold {}", opts.threshold)));
    }
    let f = GeneratingFunction { n, radius, frame: frame.clone(), kind: GfKind::Implicit(local) };
    let probes = probe_points(n, radius, opts.per_dim);
    let stats: Option<Vec<(f64, f64)>> = probes
        .par_iter()
        .map(|w| f.grad_hess(w).map(|(g, h)| (g.norm(), spectral_norm(&h))))
        .collect();
    let stats = stats.ok_or_else(|| Error::Solvability("implicit solve failed on the probe grid".into()))?;
    let gmax = stats.iter().map(|s| s.0).fold(0.0, f64::max);
    let c2 = stats.iter().map(|s| s.0.max(s.1)).fold(0.0, f64::max);
    let closed = closedness_audit(&f, gmax);
    if closed > CLOSEDNESS_TOL {
        return Err(Error::NonSymplectic { residual: closed });
    }
    let report = GfReport {
        c1_distance: c1,
        closedness_residual: closed,
        c2_norm: c2,
        c2_over_c1: if c1 > 0.0 { c2 / c1 } else { 0.0 },
        hessian_at_p: f.hessian_at_p(),
        probes: probes.len(),
    };
    Ok((f, report))
}

/// Circulation of `dF` around triangles `(0, u, v)` spread over the domain.
fn closedness_audit(f: &GeneratingFunction, gmax: f64) -> f64 {
    let d = 2 * f.n;
    let r = 0.7 * f.radius;
    let mut worst: f64 = 0.0;
    for a in 0..d {
        for b in 0..d {
            if a == b {
                continue;
            }
            let mut u = DVector::zeros(d);
            let mut v = DVector::zeros(d);
            u[a] = r;
            u[(a + 1) % d] += 0.3 * r;
            v[b] = r;
            v[(b + 2) % d] -= 0.2 * r;
            let tri = [DVector::zeros(d), u, v];
            let mut circ = 0.0;
            let mut perim = 0.0;
            for k in 0..3 {
                let p = &tri[k];
                let q = &tri[(k + 1) % 3];
                let e = q - p;
                perim += e.norm();
                let m = 16;
                for i in 0..=m {
                    let c = if i == 0 || i == m { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                    let pt = p + &e * (i as f64 / m as f64);
                    circ += c * f.gradient(&pt).map(|g| g.dot(&e)).unwrap_or(f64::NAN) / (3.0 * m as f64);
                }
            }
            let scale = gmax.max(1e-300) * perim;
            worst = worst.max(if gmax == 0.0 { circ.abs() } else { circ.abs() / scale });
        }
    }
    worst
}

/// The map generated by `F`: `x̄` from `x̄ = x − ∂₂F(x̄, y)` by Newton, then
/// `ȳ = y + ∂₁F(x̄, y)`. Acts in frame coordinates.
#[derive(Clone, Debug)]
pub struct LocalGfMap {
    pub f: GeneratingFunction,
}

impl NearIdentityMap for LocalGfMap {
    fn dim_n(&self) -> usize {
        self.f.n
    }
    fn apply(&self, w: &DVector<f64>) -> DVector<f64> {
        self.apply_with_jacobian(w).0
    }
    fn apply_with_jacobian(&self, w: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.f.n;
        let nan = || (w.map(|_| f64::NAN), DMatrix::from_element(2 * n, 2 * n, f64::NAN));
        let (x, y) = split(w);
        let mut xb = x.clone();
        let id = DMatrix::<f64>::identity(n, n);
        for _ in 0..40 {
            let Some((g, h)) = self.f.grad_hess(&join(&xb, &y)) else { return nan() };
            let r = &xb - &x + g.rows(n, n);
            let jac = &id + block(&h, 1, 0);
            let Some(dx) = jac.lu().solve(&r) else { return nan() };
            xb -= &dx;
            if dx.amax() <= 1e-15 * (1.0 + xb.amax()) {
                let Some((g, h)) = self.f.grad_hess(&join(&xb, &y)) else { return nan() };
                let yb = &y + g.rows(0, n);
                let (f11, f12, f21, f22) = (block(&h, 0, 0), block(&h, 0, 1), block(&h, 1, 0), block(&h, 1, 1));
                let Some(inv) = (&id + &f21).try_inverse() else { return nan() };
                let dxb_dx = inv.clone();
                let dxb_dy = -(&inv * &f22);
                let dyb_dx = &f11 * &dxb_dx;
                let dyb_dy = &id + &f11 * &dxb_dy + &f12;
                return (join(&xb, &yb), from_blocks(&dxb_dx, &dxb_dy, &dyb_dx, &dyb_dy));
            }
        }
        nan()
    }
}

/// The map generated by `F` in the original coordinates.
pub fn map_of(f: &GeneratingFunction) -> GfMap {
    GfMap { local: LocalGfMap { f: f.clone() } }
}

#[derive(Clone, Debug)]
pub struct GfMap {
    pub local: LocalGfMap,
}

impl NearIdentityMap for GfMap {
    fn dim_n(&self) -> usize {
        self.local.f.n
    }
    fn apply(&self, z: &DVector<f64>) -> DVector<f64> {
        let fr = &self.local.f.frame;
        fr.from_frame(&self.local.apply(&fr.to_frame(z)))
    }
    fn apply_with_jacobian(&self, z: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let fr = &self.local.f.frame;
        let (w, j) = self.local.apply_with_jacobian(&fr.to_frame(z));
        (fr.from_frame(&w), fr.matrix() * j * fr.inverse_matrix())
    }
}

/// `F` as an autonomous Hamiltonian in frame coordinates; `NaN` outside the domain.
#[derive(Clone, Debug)]
pub struct GfHamiltonian(pub GeneratingFunction);

impl Hamiltonian for GfHamiltonian {
    fn dim_n(&self) -> usize {
        self.0.n
    }
    fn value(&self, _t: f64, w: &DVector<f64>) -> f64 {
        self.0.value(w)
    }
    fn gradient(&self, _t: f64, w: &DVector<f64>) -> DVector<f64> {
        self.0.gradient(w).unwrap_or_else(|| w.map(|_| f64::NAN))
    }
    fn hessian(&self, _t: f64, w: &DVector<f64>) -> DMatrix<f64> {
        self.0.hessian(w).unwrap_or_else(|| DMatrix::from_element(w.len(), w.len(), f64::NAN))
    }
    fn is_autonomous(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{ExprHamiltonian, Quadratic};
    use crate::symplectic::j_matrix;

    fn std1() -> SymplecticFrame {
        SymplecticFrame::standard(1)
    }

    #[test]
    fn identity_has_zero_function() {
        let (f, rep) =
            generating_function(Arc::new(LinearMap(DMatrix::identity(2, 2))), &std1(), 0.5, &GfOptions::for_dim(1)).unwrap();
        let w = DVector::from_vec(vec![0.2, -0.3]);
        assert_eq!(f.value(&w), 0.0);
        assert_eq!(rep.c1_distance, 0.0);
    }

    #[test]
    fn shear_generating_function() {
        let eps = 0.05;
        let m = DMatrix::from_row_slice(2, 2, &[1.0, eps, 0.0, 1.0]);
        let (f, _) = generating_function(Arc::new(LinearMap(m)), &std1(), 0.5, &GfOptions::for_dim(1)).unwrap();
        for w in probe_points(1, 0.5, 7) {
            assert!((f.value(&w) + 0.5 * eps * w[1] * w[1]).abs() < 1e-14);
        }
    }

    #[test]
    fn quadratic_flow_hessian_matches_linear_relation() {
        let q = DMatrix::from_row_slice(2, 2, &[0.05, 0.02, 0.02, -0.03]);
        let h = HamiltonianField::euclidean(Quadratic::new(q.clone()).unwrap(), 1.0, "q");
        let phi = FlowMap { field: h, t0: 0.0, t1: 1.0, step: 0.05, integrator: Integrator::Yoshida6 };
        let (f, rep) = generating_function(Arc::new(phi), &std1(), 0.3, &GfOptions { per_dim: 5, threshold: 0.2 }).unwrap();
        let dphi = (j_matrix(1) * q).exp();
        let lin = linear_gf(&dphi, &crate::symplectic::LagrangianSplitting::standard(1)).unwrap();
        assert!((f.hessian_at_p() - &lin.q).amax() < 1e-8);
        assert!(rep.closedness_residual < 1e-8);
    }

    #[test]
    fn round_trip_through_map_of() {
        let src = "0.02*x^3 - 0.03*x*y^2 + 0.05*y^3 + 0.04*x*y";
        let f0 = GeneratingFunction::analytic(Arc::new(ExprHamiltonian::parse(src, 1).unwrap()), std1(), 0.6);
        let phi = Arc::new(map_of(&f0));
        let (f, _) = generating_function(phi.clone(), &std1(), 0.4, &GfOptions { per_dim: 9, threshold: 0.2 }).unwrap();
        for w in probe_points(1, 0.4, 9) {
            assert!((f.value(&w) - f0.value(&w)).abs() < 1e-10);
            let back = map_of(&f).apply(&w);
            assert!((back - phi.apply(&w)).amax() < 1e-12);
        }
        let tab = f.tabulate(14);
        for w in probe_points(1, 0.4, 5) {
            assert!((tab.value(&w) - f0.value(&w)).abs() < 1e-10);
        }
    }

    #[test]
    fn far_map_is_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        let r = generating_function(Arc::new(LinearMap(m)), &std1(), 0.5, &GfOptions::for_dim(1));
        assert!(matches!(r, Err(Error::Solvability(_))));
    }

    #[test]
    fn non_symplectic_map_is_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.05, 0.0, 0.0, 1.05]);
        let r = generating_function(Arc::new(LinearMap(m)), &std1(), 0.5, &GfOptions::for_dim(1));
        assert!(matches!(r, Err(Error::NonSymplectic { .. })), "{r:?}");
    }
}

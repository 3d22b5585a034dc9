//! Local Morse homology of isolated critical points over Z2.
//!
//! The critical groups are read off as `H_*({f ≤ c} ∩ B, {f ≤ c − ε} ∩ B)` with
//! `c = f(p)` on a cubical grid over the box `B`, computed at two resolutions and
//! two values of `ε` and accepted only when all four agree.

pub mod certificate;
pub mod cubical;

pub use certificate::{relative_autonomy_check, sdm_certificate, RelativeAutonomyCertificate, SdmOptions, SdmReport, SdmRow};
pub use cubical::{relative_betti, Grid};

use crate::error::{Error, Result};
use crate::expr::Function;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

/// Largest supported dimension.
pub const MAX_DIM: usize = 4;

/// A scalar field on `R^m`.
pub trait ScalarField: Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        (0..x.len())
            .map(|i| {
                let h = 1e-6 * x[i].abs().max(1.0);
                y[i] = x[i] + h;
                let a = self.value(&y);
                y[i] = x[i] - h;
                let b = self.value(&y);
                y[i] = x[i];
                (a - b) / (2.0 * h)
            })
            .collect()
    }
}

/// A field given by an expression in `x1..xm` (also `x, y, z, w` for `m ≤ 4`).
#[derive(Clone, Debug)]
pub struct ExprField {
    pub f: Function,
    m: usize,
}

impl ExprField {
    pub fn parse(src: &str, m: usize) -> Result<Self> {
        let vars: Vec<String> = (1..=m).map(|i| format!("x{i}")).collect();
        let names = ["x", "y", "z", "w"];
        let aliases: Vec<(&str, usize)> = if m <= 4 { names[..m].iter().enumerate().map(|(i, n)| (*n, i)).collect() } else { Vec::new() };
        Ok(ExprField { f: Function::new(src, &vars, &aliases)?, m })
    }
}

impl ScalarField for ExprField {
    fn dim(&self) -> usize {
        self.m
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.f.eval(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.f.grad(x)
    }
}

/// A field from a closure.
pub struct FnField<F: Fn(&[f64]) -> f64 + Sync> {
    pub dim: usize,
    pub f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> ScalarField for FnField<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalHomologySignature {
    /// Z2 ranks in degrees `0..=m`.
    pub betti: Vec<usize>,
    pub box_radius: f64,
    pub epsilon: f64,
    /// Points per axis of the fine grid.
    pub grid: usize,
}

impl LocalHomologySignature {
    pub fn euler_characteristic(&self) -> i64 {
        self.betti.iter().enumerate().map(|(k, &b)| if k % 2 == 0 { b as i64 } else { -(b as i64) }).sum()
    }

    pub fn top_degree(&self) -> usize {
        self.betti[self.betti.len() - 1]
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("signature serializes")
    }
}

/// Default points per axis: 129 up to the plane, then 65 and 17.
pub fn default_grid(m: usize) -> usize {
    match m {
        0..=2 => 129,
        3 => 65,
        _ => 17,
    }
}

/// Rounds up to the form `4k + 1`, so the half-resolution grid keeps `p` as its centre vertex.
fn normalize_grid(n: usize) -> usize {
    let n = n.max(9);
    n + (4 - (n - 1) % 4) % 4
}

fn sample_box(f: &dyn ScalarField, p: &[f64], r: f64, n: usize) -> Grid {
    let m = p.len();
    let shape = vec![n; m];
    let mut g = Grid::new(shape, vec![0.0; n.pow(m as u32)]);
    for flat in 0..g.values.len() {
        let x = vertex(p, r, n, &g.multi_index(flat));
        g.values[flat] = f.value(&x);
    }
    g
}

fn vertex(p: &[f64], r: f64, n: usize, idx: &[usize]) -> Vec<f64> {
    idx.iter().zip(p).map(|(&i, &c)| c + r * (2.0 * i as f64 / (n - 1) as f64 - 1.0)).collect()
}

/// `ε = ¼(c − max_{∂B} f)` when `p` beats the whole boundary, otherwise an
/// eighth of the median boundary oscillation `|f − c|`.
pub fn select_epsilon(grid: &Grid, c: f64) -> Option<f64> {
    let mut boundary: Vec<f64> = (0..grid.values.len())
        .filter(|&flat| grid.on_boundary(&grid.multi_index(flat)))
        .map(|flat| grid.values[flat])
        .collect();
    let max = boundary.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max < c {
        return Some(0.25 * (c - max));
    }
    for v in boundary.iter_mut() {
        *v = (*v - c).abs();
    }
    boundary.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let med = boundary[boundary.len() / 2];
    (med > 0.0).then_some(0.125 * med)
}

/// Betti vectors on the fine and half grids at `ε` and `ε/2`; all four must agree.
fn voted_betti(fine: &Grid, c: f64, eps: f64) -> Result<Vec<usize>> {
    let coarse = fine.subsample(2);
    let runs = [
        relative_betti(fine, c, c - eps),
        relative_betti(fine, c, c - 0.5 * eps),
        relative_betti(&coarse, c, c - eps),
        relative_betti(&coarse, c, c - 0.5 * eps),
    ];
    if runs.iter().any(|b| *b != runs[0]) {
        return Err(Error::Resolution(format!("unstable signature across grids and epsilons: {runs:?}")));
    }
    Ok(runs[0].clone())
}

fn fd_jacobian(f: &dyn ScalarField, x: &[f64], h: f64) -> DMatrix<f64> {
    let m = x.len();
    let mut j = DMatrix::zeros(m, m);
    let mut y = x.to_vec();
    for b in 0..m {
        y[b] = x[b] + h;
        let gp = f.gradient(&y);
        y[b] = x[b] - h;
        let gm = f.gradient(&y);
        y[b] = x[b];
        for a in 0..m {
            j[(a, b)] = (gp[a] - gm[a]) / (2.0 * h);
        }
    }
    (&j + j.transpose()) * 0.5
}

/// A critical point of `f` in the box other than `p`, found by a sign-change sweep
/// over grid cells followed by Newton refinement.
pub fn other_critical_point(f: &dyn ScalarField, p: &[f64], r: f64, n: usize) -> Option<Vec<f64>> {
    let m = p.len();
    let h = 2.0 * r / (n - 1) as f64;
    let shape = vec![n; m];
    let g = Grid::new(shape, vec![0.0; n.pow(m as u32)]);
    let grads: Vec<Vec<f64>> = (0..g.values.len()).map(|flat| f.gradient(&vertex(p, r, n, &g.multi_index(flat)))).collect();
    let scale = grads.iter().map(|v| v.iter().fold(0.0f64, |a, b| a.max(b.abs()))).fold(0.0, f64::max);
    if scale == 0.0 {
        return Some(vertex(p, r, n, &vec![0; m]));
    }
    let centre = (n - 1) / 2;
    let near_p = |idx: &[usize]| idx.iter().all(|&i| i.abs_diff(centre) <= 1);
    for flat in 0..g.values.len() {
        let idx = g.multi_index(flat);
        if !near_p(&idx) && grads[flat].iter().all(|v| v.abs() <= 1e-13 * scale) {
            return Some(vertex(p, r, n, &idx));
        }
    }
    let strides = g.strides();
    let corners = 1usize << m;
    for flat in 0..g.values.len() {
        let idx = g.multi_index(flat);
        if idx.iter().any(|&i| i + 1 >= n) {
            continue;
        }
        let verts: Vec<usize> = (0..corners).map(|c| flat + (0..m).filter(|a| c >> a & 1 == 1).map(|a| strides[a]).sum::<usize>()).collect();
        if verts.iter().all(|&v| near_p(&g.multi_index(v))) {
            continue;
        }
        let straddles = (0..m).all(|a| {
            let lo = verts.iter().map(|&v| grads[v][a]).fold(f64::INFINITY, f64::min);
            let hi = verts.iter().map(|&v| grads[v][a]).fold(f64::NEG_INFINITY, f64::max);
            lo <= 0.0 && hi >= 0.0
        });
        if !straddles {
            continue;
        }
        let lo = vertex(p, r, n, &idx);
        let mut x: Vec<f64> = lo.iter().map(|v| v + 0.5 * h).collect();
        for _ in 0..60 {
            let gx = f.gradient(&x);
            if gx.iter().all(|v| v.abs() <= 1e-10 * scale) {
                let inside = (0..m).all(|a| x[a] >= lo[a] - h && x[a] <= lo[a] + 2.0 * h);
                let away = (0..m).any(|a| (x[a] - p[a]).abs() > 1.5 * h);
                if inside && away {
                    return Some(x);
                }
                break;
            }
            let jac = fd_jacobian(f, &x, 1e-4 * h);
            let Some(step) = jac.lu().solve(&DVector::from_vec(gx)) else { break };
            for a in 0..m {
                x[a] -= step[a];
            }
            if x.iter().any(|v| !v.is_finite()) {
                break;
            }
        }
    }
    None
}

fn check_input(f: &dyn ScalarField, p: &[f64], r: f64) -> Result<()> {
    let m = f.dim();
    if m == 0 || m > MAX_DIM {
        return Err(Error::Precondition(format!("dimension {m} is outside 1..={MAX_DIM}")));
    }
    if p.len() != m {
        return Err(Error::Dimension("point and field dimensions differ".into()));
    }
    if !(r > 0.0) {
        return Err(Error::Precondition("box radius must be positive".into()));
    }
    Ok(())
}

/// Z2 critical groups of `f` at `p` on the box of half-width `box_radius`.
pub fn local_morse_homology(f: &dyn ScalarField, p: &[f64], box_radius: f64, grid: Option<usize>) -> Result<LocalHomologySignature> {
    check_input(f, p, box_radius)?;
    let n = normalize_grid(grid.unwrap_or_else(|| default_grid(p.len())));
    if let Some(q) = other_critical_point(f, p, box_radius, n) {
        return Err(Error::Isolation { detail: format!("second critical point near {q:?}"), s: None });
    }
    let fine = sample_box(f, p, box_radius, n);
    signature_of(&fine, f.value(p), box_radius, n)
}

fn signature_of(fine: &Grid, c: f64, box_radius: f64, n: usize) -> Result<LocalHomologySignature> {
    let eps = select_epsilon(fine, c).ok_or_else(|| Error::Isolation { detail: "field is constant on the box boundary".into(), s: None })?;
    let betti = voted_betti(fine, c, eps)?;
    Ok(LocalHomologySignature { betti, box_radius, epsilon: eps, grid: n })
}

/// Whether `p` is a local maximum, read from the top-degree group and cross-checked
/// against the direct comparison `f(q) < f(p)` on the punctured grid.
pub fn lm2_maximum_test(f: &dyn ScalarField, p: &[f64], box_radius: f64, grid: Option<usize>) -> Result<bool> {
    let sig = local_morse_homology(f, p, box_radius, grid)?;
    let homological = sig.top_degree() > 0;
    let n = sig.grid;
    let g = sample_box(f, p, box_radius, n);
    let c = f.value(p);
    let centre = g.index_of(&vec![(n - 1) / 2; p.len()]);
    let direct = g.values.iter().enumerate().all(|(i, &v)| i == centre || v < c);
    if homological != direct {
        return Err(Error::Resolution(format!(
            "top-degree group {} disagrees with the grid maximum test ({direct})",
            sig.top_degree()
        )));
    }
    Ok(homological)
}

/// Whether the signature stays constant along a family sampled at `s_grid`.
pub fn lm1_homotopy_check(
    family: &dyn Fn(f64) -> Box<dyn ScalarField>,
    p: &[f64],
    box_radius: f64,
    s_grid: &[f64],
    grid: Option<usize>,
) -> Result<bool> {
    let mut first: Option<Vec<usize>> = None;
    let mut constant = true;
    for &s in s_grid {
        let f = family(s);
        let sig = local_morse_homology(f.as_ref(), p, box_radius, grid).map_err(|e| match e {
            Error::Isolation { detail, .. } => Error::Isolation { detail: format!("at s = {s}: {detail}"), s: Some(s) },
            other => other,
        })?;
        match &first {
            None => first = Some(sig.betti),
            Some(b) => constant &= *b == sig.betti,
        }
    }
    Ok(constant)
}

/// A field sampled on a grid file.
///
/// Text format: a `dims` line with the points per axis, a `spacing` line, an
/// `origin` line, then the row-major payload (last axis fastest).
#[derive(Clone, Debug, PartialEq)]
pub struct SampledField {
    pub spacing: Vec<f64>,
    pub origin: Vec<f64>,
    /// Samples with axis 0 fastest.
    pub grid: Grid,
}

impl SampledField {
    pub fn parse(text: &str) -> Result<Self> {
        let mut dims: Option<Vec<usize>> = None;
        let mut spacing: Option<Vec<f64>> = None;
        let mut origin: Option<Vec<f64>> = None;
        let mut payload: Vec<f64> = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let mut words = line.split_whitespace();
            let head = words.next().unwrap();
            let nums = |w: std::str::SplitWhitespace| -> Result<Vec<f64>> {
                w.map(|s| s.parse::<f64>().map_err(|_| Error::Validation(format!("bad number '{s}' in grid header")))).collect()
            };
            match head {
                "dims" => dims = Some(nums(words)?.iter().map(|&v| v as usize).collect()),
                "spacing" => spacing = Some(nums(words)?),
                "origin" => origin = Some(nums(words)?),
                _ => {
                    for w in line.split_whitespace() {
                        payload.push(w.parse().map_err(|_| Error::Validation(format!("bad sample '{w}'")))?);
                    }
                }
            }
        }
        let (Some(dims), Some(spacing), Some(origin)) = (dims, spacing, origin) else {
            return Err(Error::Validation("grid file needs dims, spacing and origin lines".into()));
        };
        if spacing.len() != dims.len() || origin.len() != dims.len() {
            return Err(Error::Validation("grid header lengths differ".into()));
        }
        if payload.len() != dims.iter().product::<usize>() {
            return Err(Error::Validation(format!("expected {} samples, found {}", dims.iter().product::<usize>(), payload.len())));
        }
        // row-major input: reverse the axis order of the flat index
        let g = Grid::new(dims.clone(), vec![0.0; payload.len()]);
        let mut values = vec![0.0; payload.len()];
        for (flat, v) in values.iter_mut().enumerate() {
            let idx = g.multi_index(flat);
            let row_major = idx.iter().zip(&dims).fold(0, |acc, (&i, &n)| acc * n + i);
            *v = payload[row_major];
        }
        Ok(SampledField { spacing, origin, grid: Grid::new(dims, values) })
    }

    /// Local homology at the grid vertex nearest `p`, on the largest cubical
    /// sub-box centred there that fits the file.
    pub fn local_morse_homology(&self, p: &[f64]) -> Result<LocalHomologySignature> {
        let m = self.grid.dim();
        if p.len() != m || m > MAX_DIM {
            return Err(Error::Dimension("point and grid dimensions differ".into()));
        }
        let centre: Vec<usize> = (0..m).map(|a| ((p[a] - self.origin[a]) / self.spacing[a]).round().max(0.0) as usize).collect();
        let half = (0..m).map(|a| centre[a].min(self.grid.shape[a].saturating_sub(centre[a] + 1))).min().unwrap_or(0);
        let half = half - half % 2;
        if half < 4 {
            return Err(Error::Resolution("point is too close to the edge of the grid".into()));
        }
        let n = 2 * half + 1;
        let sub = Grid::new(vec![n; m], vec![0.0; n.pow(m as u32)]);
        let values: Vec<f64> = (0..sub.values.len())
            .map(|flat| {
                let idx: Vec<usize> = sub.multi_index(flat).iter().zip(&centre).map(|(&i, &c)| c + i - half).collect();
                self.grid.values[self.grid.index_of(&idx)]
            })
            .collect();
        let sub = Grid::new(vec![n; m], values);
        let c = self.grid.values[self.grid.index_of(&centre)];
        let radius = half as f64 * self.spacing.iter().copied().fold(f64::INFINITY, f64::min);
        signature_of(&sub, c, radius, n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(src: &str, m: usize) -> Vec<usize> {
        let f = ExprField::parse(src, m).unwrap();
        local_morse_homology(&f, &vec![0.0; m], 0.5, None).unwrap().betti
    }

    #[test]
    fn nondegenerate_points_in_the_plane() {
        assert_eq!(sig("x^2 + y^2", 2), vec![1, 0, 0]);
        assert_eq!(sig("x^2 - y^2", 2), vec![0, 1, 0]);
        assert_eq!(sig("-x^2 - y^2", 2), vec![0, 0, 1]);
    }

    #[test]
    fn monkey_saddle() {
        assert_eq!(sig("x^3 - 3*x*y^2", 2), vec![0, 2, 0]);
    }

    #[test]
    fn one_dimensional_cases() {
        assert_eq!(sig("x^3", 1), vec![0, 0]);
        assert_eq!(sig("-x^4", 1), vec![0, 1]);
    }

    #[test]
    fn degenerate_maximum_detected() {
        let f = ExprField::parse("-x^4 - y^4", 2).unwrap();
        assert!(lm2_maximum_test(&f, &[0.0, 0.0], 0.5, None).unwrap());
        let g = ExprField::parse("x^2 - y^2", 2).unwrap();
        assert!(!lm2_maximum_test(&g, &[0.0, 0.0], 0.5, None).unwrap());
    }

    #[test]
    fn second_critical_point_is_an_isolation_error() {
        let f = ExprField::parse("(x^2 - 0.04)^2 + y^2", 2).unwrap();
        assert!(matches!(local_morse_homology(&f, &[0.2, 0.0], 0.5, Some(65)), Err(Error::Isolation { .. })));
    }

    #[test]
    fn family_losing_isolation_reports_s() {
        let fam = |s: f64| -> Box<dyn ScalarField> { Box::new(FnField { dim: 1, f: move |x: &[f64]| s * x[0] * x[0] + (1.0 - s) * x[0].powi(3) }) };
        let r = lm1_homotopy_check(&fam, &[0.0], 0.5, &[0.0, 0.1, 0.5, 1.0], Some(129));
        assert!(matches!(r, Err(Error::Isolation { s: Some(s), .. }) if s == 0.1), "{r:?}");
        let fam2 = |s: f64| -> Box<dyn ScalarField> {
            Box::new(FnField { dim: 2, f: move |x: &[f64]| -(1.0 + s) * (x[0] * x[0] + x[1] * x[1]) })
        };
        assert!(lm1_homotopy_check(&fam2, &[0.0, 0.0], 0.5, &[0.0, 0.5, 1.0], Some(33)).unwrap());
    }

    #[test]
    fn grid_file_round_trip() {
        let mut text = String::from("dims 21 21\nspacing 0.05 0.05\norigin -0.5 -0.5\n");
        for i in 0..21 {
            let row: Vec<String> = (0..21)
                .map(|j| {
                    let (x, y) = (-0.5 + 0.05 * i as f64, -0.5 + 0.05 * j as f64);
                    format!("{}", x * x - y * y)
                })
                .collect();
            text.push_str(&row.join(" "));
            text.push('\n');
        }
        let f = SampledField::parse(&text).unwrap();
        assert_eq!(f.local_morse_homology(&[0.0, 0.0]).unwrap().betti, vec![0, 1, 0]);
    }
}

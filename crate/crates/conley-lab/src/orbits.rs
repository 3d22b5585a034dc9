//! Periodic points of time-one maps: Newton search, Floquet data and the
//! degeneracy taxonomy.

use crate::action::trajectory_action;
use crate::error::{Error, Result};
use crate::flow::{flow_with, time_map, torus_difference, FlowOptions, Integrator};
use crate::hamiltonian::{HamiltonianField, PhaseSpace};
use crate::index::cz_index;
use crate::output::{fmt17, Table};
use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Where Newton iterations start.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SeedSpec {
    /// `per_dim` points per axis on the box `[lo, hi]`, endpoints included.
    Lattice { lo: Vec<f64>, hi: Vec<f64>, per_dim: usize },
    /// `per_dim` points per axis on `[0, 1)^{2n}`.
    Torus { per_dim: usize },
    /// `count` points on the segment from `from` to `to`.
    Ray { from: Vec<f64>, to: Vec<f64>, count: usize },
    Points { points: Vec<Vec<f64>> },
    /// `count` uniform points in the box, drawn from a ChaCha8 stream.
    Random { lo: Vec<f64>, hi: Vec<f64>, count: usize, seed: Option<u64> },
}

impl SeedSpec {
    pub fn torus_default() -> Self {
        SeedSpec::Torus { per_dim: 64 }
    }

    pub fn points(&self, d: usize) -> Result<Vec<DVector<f64>>> {
        let lattice = |per: usize, at: &dyn Fn(usize, usize) -> f64| -> Vec<DVector<f64>> {
            let total = per.pow(d as u32);
            (0..total)
                .map(|flat| {
                    let mut rem = flat;
                    DVector::from_fn(d, |c, _| {
                        let i = rem % per;
                        rem /= per;
                        at(c, i)
                    })
                })
                .collect()
        };
        match self {
            SeedSpec::Lattice { lo, hi, per_dim } => {
                if lo.len() != d || hi.len() != d {
                    return Err(Error::Dimension("seed box dimension".into()));
                }
                let per = (*per_dim).max(1);
                Ok(lattice(per, &|c, i| if per == 1 { 0.5 * (lo[c] + hi[c]) } else { lo[c] + (hi[c] - lo[c]) * i as f64 / (per - 1) as f64 }))
            }
            SeedSpec::Torus { per_dim } => {
                let per = (*per_dim).max(1);
                Ok(lattice(per, &|_, i| i as f64 / per as f64))
            }
            SeedSpec::Ray { from, to, count } => {
                if from.len() != d || to.len() != d {
                    return Err(Error::Dimension("seed ray dimension".into()));
                }
                let k = (*count).max(1);
                Ok((0..k)
                    .map(|i| {
                        let s = if k == 1 { 0.5 } else { i as f64 / (k - 1) as f64 };
                        DVector::from_fn(d, |c, _| from[c] + s * (to[c] - from[c]))
                    })
                    .collect())
            }
            SeedSpec::Random { lo, hi, count, seed } => {
                if lo.len() != d || hi.len() != d {
                    return Err(Error::Dimension("seed box dimension".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(0));
                Ok((0..*count).map(|_| DVector::from_fn(d, |c, _| rng.random_range(lo[c]..=hi[c]))).collect())
            }
            SeedSpec::Points { points } => {
                if points.iter().any(|p| p.len() != d) {
                    return Err(Error::Dimension("seed point dimension".into()));
                }
                Ok(points.iter().map(|p| DVector::from_column_slice(p)).collect())
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct OrbitOptions {
    pub newton_tol: f64,
    pub max_iter: usize,
    pub step: f64,
    pub integrator: Integrator,
    /// Distance to 1 (and to roots of unity) below which a multiplier counts as equal.
    pub multiplier_tol: f64,
    /// Cap on the length of one Newton step.
    pub max_step: Option<f64>,
}

impl Default for OrbitOptions {
    fn default() -> Self {
        OrbitOptions { newton_tol: 1e-10, max_iter: 40, step: 0.01, integrator: Integrator::Yoshida6, multiplier_tol: 1e-6, max_step: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Degeneracy {
    Nondegenerate,
    WeaklyNondegenerate,
    StronglyDegenerate,
}

impl Degeneracy {
    pub fn as_str(self) -> &'static str {
        match self {
            Degeneracy::Nondegenerate => "nondegenerate",
            Degeneracy::WeaklyNondegenerate => "weakly-nondegenerate",
            Degeneracy::StronglyDegenerate => "strongly-degenerate",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrbitRecord {
    pub point: Vec<f64>,
    pub period: usize,
    /// `None` for orbits that wind around the torus.
    pub action: Option<f64>,
    /// `[re, im]` pairs.
    pub multipliers: Vec<[f64; 2]>,
    /// `None` when the orbit is degenerate.
    pub cz: Option<i64>,
    pub degeneracy: Degeneracy,
    pub is_simple: bool,
    pub root_degrees: Vec<u32>,
    /// `‖φ^T(z) − z‖` at the reported point.
    pub residual: f64,
    /// Lattice displacement of the lifted orbit on the torus.
    pub winding: Vec<i64>,
    /// Radius `|z|`, useful for rotationally symmetric fields.
    pub radius: f64,
    #[serde(skip)]
    pub monodromy: DMatrix<f64>,
}

impl OrbitRecord {
    pub fn multipliers_complex(&self) -> Vec<Complex<f64>> {
        self.multipliers.iter().map(|m| Complex::new(m[0], m[1])).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrbitSearch {
    pub records: Vec<OrbitRecord>,
    pub seeds: usize,
    pub converged: usize,
    pub failed: usize,
    /// Seeds that were fixed before any Newton step.
    pub already_fixed: usize,
}

/// Continued-fraction convergents `p/q` of `x ≥ 0` with `q ≤ max_q`.
pub fn convergents(x: f64, max_q: u64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    let (mut p0, mut q0, mut p1, mut q1) = (0u64, 1u64, 1u64, 0u64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a > 1e15 {
            break;
        }
        let a = a as u64;
        let p = a * p1 + p0;
        let q = a * q1 + q0;
        if q > max_q {
            break;
        }
        out.push((p, q));
        let frac = r - a as f64;
        if frac < 1e-15 {
            break;
        }
        r = 1.0 / frac;
        (p0, q0, p1, q1) = (p1, q1, p, q);
    }
    out
}

/// Taxonomy of a multiplier set, with the degrees `d ≥ 2` of the roots of unity among them.
pub fn classify_degeneracy(multipliers: &[Complex<f64>], tol: f64) -> (Degeneracy, Vec<u32>) {
    let one = Complex::new(1.0, 0.0);
    let near_one = multipliers.iter().filter(|l| (*l - one).norm() < tol).count();
    let class = if near_one == 0 {
        Degeneracy::Nondegenerate
    } else if near_one == multipliers.len() {
        Degeneracy::StronglyDegenerate
    } else {
        Degeneracy::WeaklyNondegenerate
    };
    let mut degrees = Vec::new();
    for l in multipliers {
        if (l - one).norm() < tol || (l.norm() - 1.0).abs() >= tol {
            continue;
        }
        let x = l.arg().abs() / (2.0 * PI);
        if let Some(&(_, q)) = convergents(x, 64)
            .iter()
            .find(|&&(p, q)| (Complex::from_polar(1.0, 2.0 * PI * p as f64 / q as f64 * l.arg().signum()) - l).norm() < tol)
        {
            if q >= 2 {
                degrees.push(q as u32);
            }
        }
    }
    degrees.sort_unstable();
    degrees.dedup();
    (class, degrees)
}

/// Multipliers of a monodromy matrix with the cluster at 1 snapped to 1 whenever
/// `M − I` is numerically singular.
///
/// A Jordan block at 1 perturbed by `e` splits its eigenvalues by about `√e`, so raw
/// eigenvalues of e.g. a rotating ring's monodromy are not within `tol` of 1.
pub fn monodromy_multipliers(m: &DMatrix<f64>, tol: f64) -> Vec<Complex<f64>> {
    let mut mults: Vec<Complex<f64>> = m.complex_eigenvalues().iter().copied().collect();
    let d = m.nrows();
    let sigma_min = (m - DMatrix::<f64>::identity(d, d)).singular_values().min();
    if sigma_min < tol * m.norm().max(1.0) {
        let one = Complex::new(1.0, 0.0);
        let cluster = tol.sqrt();
        for l in mults.iter_mut() {
            if (*l - one).norm() < cluster {
                *l = one;
            }
        }
    }
    mults
}

fn displacement(h: &HamiltonianField, end: &DVector<f64>, z: &DVector<f64>) -> DVector<f64> {
    match h.phase_space {
        PhaseSpace::Euclidean => end - z,
        PhaseSpace::Torus => torus_difference(end, z),
    }
}

fn pseudo_solve(j: &DMatrix<f64>, g: &DVector<f64>) -> Option<DVector<f64>> {
    let svd = j.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if !(smax > 0.0) {
        return None;
    }
    svd.solve(g, 1e-10 * smax).ok()
}

/// Row `X_H(z)ᵀ` scaled to the size of the monodromy, for autonomous fields away from rest points.
fn autonomous_row(h: &HamiltonianField, z: &DVector<f64>) -> Option<DVector<f64>> {
    if !h.is_autonomous() {
        return None;
    }
    let x = h.vector_field(0.0, z);
    let len = x.norm();
    (len > 1e-8).then(|| x / len)
}

struct Root {
    z: DVector<f64>,
    residual: f64,
    at_start: bool,
    /// Length of the last accepted step, a bound on the distance to the true root.
    step: f64,
}

fn newton(h: &HamiltonianField, z0: &DVector<f64>, time: f64, opts: &OrbitOptions) -> Option<Root> {
    let eval = |z: &DVector<f64>| -> Option<(DVector<f64>, DMatrix<f64>)> {
        let (end, m) = time_map(h, z, 0.0, time, opts.step, opts.integrator).ok()?;
        let g = displacement(h, &end, z);
        g.iter().all(|v| v.is_finite()).then_some((g, m))
    };
    let mut z = z0.clone();
    let (mut g, mut m) = eval(&z)?;
    let d = z.len();
    let id = DMatrix::<f64>::identity(d, d);
    let scale = |z: &DVector<f64>| opts.newton_tol * z.amax().max(1.0);
    if g.norm() < scale(&z) {
        return Some(Root { residual: g.norm(), z, at_start: true, step: 0.0 });
    }
    for _ in 0..opts.max_iter {
        // autonomous fields: phase condition ⟨X_H(z), dz⟩ = 0 removes the drift along the orbit
        let jm = &m - &id;
        let mut dz = match autonomous_row(h, &z) {
            Some(row) => {
                let aug = DMatrix::from_fn(d + 1, d, |i, j| if i < d { jm[(i, j)] } else { row[j] });
                let rhs = DVector::from_fn(d + 1, |i, _| if i < d { g[i] } else { 0.0 });
                pseudo_solve(&aug, &rhs)?
            }
            None => pseudo_solve(&jm, &g)?,
        };
        if let Some(cap) = opts.max_step {
            let len = dz.norm();
            if len > cap {
                dz *= cap / len;
            }
        }
        let r0 = g.norm();
        let mut alpha = 1.0;
        let mut accepted = false;
        let mut last = 0.0;
        for _ in 0..8 {
            let trial = &z - &dz * alpha;
            if let Some((gt, mt)) = eval(&trial) {
                if gt.norm() < r0 {
                    z = trial;
                    g = gt;
                    m = mt;
                    last = alpha * dz.norm();
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            return None;
        }
        if g.norm() < scale(&z) {
            return Some(Root { residual: g.norm(), z, at_start: false, step: last });
        }
        if z.amax() > 1e6 {
            return None;
        }
    }
    None
}

struct Orbit {
    record: OrbitRecord,
    trajectory: Vec<DVector<f64>>,
    max_gap: f64,
    step: f64,
}

impl Orbit {
    /// Distance from `q` to the orbit, refined between recorded samples.
    fn distance(&self, h: &HamiltonianField, q: &DVector<f64>, dt: f64, opts: &OrbitOptions) -> f64 {
        let diff = |a: &DVector<f64>| displacement(h, q, a).norm();
        let (k, best) = self
            .trajectory
            .iter()
            .enumerate()
            .map(|(k, p)| (k, diff(p)))
            .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        if best > self.max_gap {
            return best;
        }
        let base = &self.trajectory[k];
        let t_base = k as f64 * dt;
        let at = |s: f64| -> f64 {
            if s == 0.0 {
                return diff(base);
            }
            let o = FlowOptions { integrator: opts.integrator, record_every: 0, monodromy: false, ..Default::default() };
            match flow_with(h, base, t_base, t_base + s, s.abs(), &o) {
                Ok(r) => diff(&r.end_lift),
                Err(_) => f64::INFINITY,
            }
        };
        // golden-section search on [−dt, dt]
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (-dt, dt);
        let mut c = b - g * (b - a);
        let mut e = a + g * (b - a);
        let (mut fc, mut fe) = (at(c), at(e));
        for _ in 0..50 {
            if fc < fe {
                b = e;
                e = c;
                fe = fc;
                c = b - g * (b - a);
                fc = at(c);
            } else {
                a = c;
                c = e;
                fc = fe;
                e = a + g * (b - a);
                fe = at(e);
            }
            if (b - a).abs() < 1e-14 {
                break;
            }
        }
        best.min(fc).min(fe)
    }
}

fn build_record(h: &HamiltonianField, z: &DVector<f64>, period: usize, residual: f64, opts: &OrbitOptions) -> Result<Orbit> {
    let time = period as f64 * h.period;
    let fo = FlowOptions { integrator: opts.integrator, record_every: 1, monodromy: true, ..Default::default() };
    let r = flow_with(h, z, 0.0, time, opts.step, &fo)?;
    let m = r.end_monodromy.clone();
    let mults = monodromy_multipliers(&m, opts.multiplier_tol);
    let (degeneracy, root_degrees) = classify_degeneracy(&mults, opts.multiplier_tol);
    let cz = if degeneracy == Degeneracy::Nondegenerate { r.monodromy.as_ref().and_then(|p| cz_index(p).ok()) } else { None };
    let winding: Vec<i64> = match h.phase_space {
        PhaseSpace::Euclidean => vec![0; z.len()],
        PhaseSpace::Torus => (&r.end_lift - z).iter().map(|v| v.round() as i64).collect(),
    };
    let action = winding.iter().all(|&w| w == 0).then(|| trajectory_action(h, &r.trajectory));
    let is_simple = (1..period).filter(|d| period % d == 0).all(|d| {
        match time_map(h, z, 0.0, d as f64 * h.period, opts.step, opts.integrator) {
            Ok((end, _)) => displacement(h, &end, z).norm() > 1e-6 * z.amax().max(1.0),
            Err(_) => true,
        }
    });
    let record = OrbitRecord {
        point: z.iter().copied().collect(),
        period,
        action,
        multipliers: mults.iter().map(|c| [c.re, c.im]).collect(),
        cz,
        degeneracy,
        is_simple,
        root_degrees,
        residual,
        winding,
        radius: z.norm(),
        monodromy: m,
    };
    let trajectory: Vec<DVector<f64>> = r.trajectory.into_iter().map(|(_, p)| p).collect();
    let max_gap = trajectory.windows(2).map(|w| displacement(h, &w[1], &w[0]).norm()).fold(0.0, f64::max);
    Ok(Orbit { record, trajectory, max_gap, step: 0.0 })
}

/// Fixed points of `φ^T = φ_H^{T·period}` found by damped Newton from every seed,
/// merged into distinct orbits.
pub fn find_periodic_points(h: &HamiltonianField, period: usize, seeds: &SeedSpec, opts: &OrbitOptions) -> Result<OrbitSearch> {
    if period == 0 {
        return Err(Error::Precondition("period must be positive".into()));
    }
    let d = 2 * h.dim_n();
    let seeds = seeds.points(d)?;
    let time = period as f64 * h.period;
    let roots: Vec<Option<Root>> = seeds.par_iter().map(|s| newton(h, s, time, opts)).collect();
    let failed = roots.iter().filter(|r| r.is_none()).count();
    let already_fixed = roots.iter().flatten().filter(|r| r.at_start).count();
    let mut found: Vec<Root> = roots.into_iter().flatten().collect();
    if h.phase_space == PhaseSpace::Torus {
        for r in found.iter_mut() {
            r.z = r.z.map(|v| {
                let w = v.rem_euclid(1.0);
                if 1.0 - w < 1e-12 { 0.0 } else { w }
            });
        }
    }
    let converged = found.len();
    found.sort_by(|a, b| {
        a.residual
            .partial_cmp(&b.residual)
            .unwrap()
            .then_with(|| a.z.iter().zip(b.z.iter()).map(|(x, y)| x.partial_cmp(y).unwrap()).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal))
    });
    let steps = crate::flow::step_count(0.0, time, opts.step)?;
    let dt = time / steps as f64;
    let radius = 10.0 * opts.newton_tol;
    let mut orbits: Vec<Orbit> = Vec::new();
    for root in found {
        let scale = root.z.amax().max(1.0);
        // degenerate roots converge slowly, so their last step widens the merge radius
        if orbits.iter().any(|o| o.distance(h, &root.z, dt, opts) < radius * scale + 10.0 * (o.step + root.step)) {
            continue;
        }
        let mut orbit = build_record(h, &root.z, period, root.residual, opts)?;
        orbit.step = root.step;
        orbits.push(orbit);
    }
    let mut records: Vec<OrbitRecord> = orbits.into_iter().map(|o| o.record).collect();
    records.sort_by(|a, b| a.point.iter().zip(&b.point).map(|(x, y)| x.partial_cmp(y).unwrap()).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
    Ok(OrbitSearch { records, seeds: seeds.len(), converged, failed, already_fixed })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeriodRow {
    pub period: usize,
    pub simple: usize,
    pub total: usize,
    pub actions: Vec<f64>,
    /// Divisible by `τ·d` for a simple orbit of period `τ` with a root of unity of degree `d`.
    pub excluded_by_root_degree: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeriodReport {
    pub rows: Vec<PeriodRow>,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub searches: Vec<OrbitSearch>,
}

/// Simple-orbit counts and actions for `T = 1..=t_max`.
pub fn simple_period_report(h: &HamiltonianField, t_max: usize, seeds: &SeedSpec, opts: &OrbitOptions) -> Result<PeriodReport> {
    if t_max == 0 || t_max > 12 {
        return Err(Error::Precondition(format!("T_max = {t_max} is outside 1..=12")));
    }
    let mut warnings = Vec::new();
    let d = 2 * h.dim_n();
    let seed_count = seeds.points(d)?.len();
    let heuristic = 8usize.pow(d as u32);
    if seed_count < heuristic {
        warnings.push(format!("{seed_count} seeds is below the density heuristic 8^{d} = {heuristic}"));
    }
    let mut searches = Vec::new();
    let mut rows = Vec::new();
    let mut degrees: Vec<usize> = Vec::new();
    for t in 1..=t_max {
        let s = find_periodic_points(h, t, seeds, opts)?;
        if s.already_fixed * 2 > s.seeds {
            return Err(Error::Isolation { detail: format!("most seeds are already {t}-periodic; periodic points are not isolated"), s: None });
        }
        let simple: Vec<&OrbitRecord> = s.records.iter().filter(|r| r.is_simple).collect();
        let mut actions: Vec<f64> = simple.iter().filter_map(|r| r.action).collect();
        actions.sort_by(|a, b| a.partial_cmp(b).unwrap());
        rows.push(PeriodRow {
            period: t,
            simple: simple.len(),
            total: s.records.len(),
            actions,
            excluded_by_root_degree: degrees.iter().any(|&m| t % m == 0),
        });
        for r in &simple {
            degrees.extend(r.root_degrees.iter().map(|&q| q as usize * t));
        }
        searches.push(s);
    }
    Ok(PeriodReport { rows, warnings, searches })
}

/// One row per orbit.
pub fn orbit_table(records: &[OrbitRecord], n: usize) -> Table {
    let mut header: Vec<String> = vec!["period".into()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    header.extend((1..=n).map(|i| format!("y{i}")));
    header.extend(["action", "multipliers", "cz", "class", "simple", "degrees"].map(String::from));
    let mut t = Table::new(header);
    for r in records {
        let mut row = vec![r.period.to_string()];
        row.extend(r.point.iter().map(|&v| fmt17(v)));
        row.push(r.action.map(fmt17).unwrap_or_default());
        row.push(r.multipliers.iter().map(|m| format!("{}{}i", fmt17(m[0]), sign17(m[1]))).collect::<Vec<_>>().join(";"));
        row.push(r.cz.map(|c| c.to_string()).unwrap_or_else(|| "degenerate".into()));
        row.push(r.degeneracy.as_str().into());
        row.push(r.is_simple.to_string());
        row.push(r.root_degrees.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(";"));
        t.push(row);
    }
    t
}

fn sign17(x: f64) -> String {
    if x >= 0.0 || x.is_nan() {
        format!("+{}", fmt17(x))
    } else {
        fmt17(x)
    }
}

/// Simple-period table.
pub fn period_table(report: &PeriodReport) -> Table {
    let mut t = Table::new(["period", "simple", "total", "excluded", "actions"]);
    for r in &report.rows {
        t.push(vec![
            r.period.to_string(),
            r.simple.to_string(),
            r.total.to_string(),
            r.excluded_by_root_degree.to_string(),
            r.actions.iter().map(|&a| fmt17(a)).collect::<Vec<_>>().join(";"),
        ]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::ExprHamiltonian;
    use std::sync::Arc;

    #[test]
    fn taxonomy_examples() {
        let c = |re: f64, im: f64| Complex::new(re, im);
        assert_eq!(classify_degeneracy(&[c(1.0, 0.0), c(1.0, 0.0)], 1e-6), (Degeneracy::StronglyDegenerate, vec![]));
        let w = Complex::from_polar(1.0, 2.0 * PI / 3.0);
        assert_eq!(classify_degeneracy(&[w, w.conj()], 1e-6), (Degeneracy::Nondegenerate, vec![3]));
        let one = c(1.0, 0.0);
        let m1 = c(-1.0, 0.0);
        assert_eq!(classify_degeneracy(&[one, one, m1, m1], 1e-6), (Degeneracy::WeaklyNondegenerate, vec![2]));
        let irr = Complex::from_polar(1.0, 2.0 * PI * 2f64.sqrt() / 10.0);
        assert_eq!(classify_degeneracy(&[irr, irr.conj()], 1e-9).1, Vec::<u32>::new());
    }

    #[test]
    fn harmonic_oscillator_fixed_point() {
        let h = HamiltonianField::euclidean(ExprHamiltonian::parse("0.5*(x^2 + y^2)", 1).unwrap(), 1.0, "osc");
        let seeds = SeedSpec::Lattice { lo: vec![-0.5, -0.5], hi: vec![0.5, 0.5], per_dim: 5 };
        let s = find_periodic_points(&h, 1, &seeds, &OrbitOptions::default()).unwrap();
        assert_eq!(s.records.len(), 1);
        let r = &s.records[0];
        assert!(r.point.iter().all(|v| v.abs() < 1e-9));
        let m = r.multipliers_complex();
        assert!(m.iter().all(|l| (l.norm() - 1.0).abs() < 1e-9 && (l.arg().abs() - 1.0).abs() < 1e-9));
        // a minimum with small Hessian has index −n in this normalization
        assert_eq!(r.cz, Some(-1));
        assert_eq!(r.action, Some(0.0));
    }

    #[test]
    fn periodized_pendulum_on_torus() {
        let src = "(cos(2*pi*x) - cos(2*pi*y)) / (4*pi^2)";
        let h = HamiltonianField::new(Arc::new(ExprHamiltonian::parse(src, 1).unwrap()), 1.0, PhaseSpace::Torus, "pendulum");
        let s = find_periodic_points(&h, 1, &SeedSpec::Torus { per_dim: 8 }, &OrbitOptions { step: 0.02, ..Default::default() }).unwrap();
        assert_eq!(s.records.len(), 4, "{:#?}", s.records.iter().map(|r| &r.point).collect::<Vec<_>>());
        let saddle = s.records.iter().find(|r| r.point.iter().all(|v| v.abs() < 1e-8)).unwrap();
        let m = saddle.multipliers_complex();
        assert!(m.iter().all(|l| l.im.abs() < 1e-9));
        assert!(m.iter().any(|l| (l.re - 1f64.exp()).abs() < 1e-8));
        assert_eq!(saddle.degeneracy, Degeneracy::Nondegenerate);
    }

    #[test]
    fn zero_hamiltonian_is_refused() {
        let h = HamiltonianField::euclidean(crate::hamiltonian::Zero(1), 1.0, "zero");
        let seeds = SeedSpec::Lattice { lo: vec![-1.0, -1.0], hi: vec![1.0, 1.0], per_dim: 3 };
        let r = simple_period_report(&h, 2, &seeds, &OrbitOptions::default());
        assert!(matches!(r, Err(Error::Isolation { .. })));
    }

    #[test]
    fn cf_convergents() {
        assert_eq!(convergents(0.375, 64).last(), Some(&(3, 8)));
        assert_eq!(convergents(PI - 3.0, 200)[1], (1, 7));
    }
}

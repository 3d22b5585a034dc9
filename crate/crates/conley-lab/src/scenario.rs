//! Batch scenarios: one TOML document per run, strict schema, deterministic CSV output.

use crate::census::{build_profile, census, cross_validate, validate_window, BumpParams, CrossOptions};
use crate::error::{Error, Result};
use crate::flow::{flow_with, FlowOptions, Integrator};
use crate::genfun::{generating_function, probe_points, FlowMap, GfOptions};
use crate::hamiltonian::{ExprHamiltonian, HamiltonianField, PhaseSpace};
use crate::homology::{lm2_maximum_test, local_morse_homology, sdm_certificate, ExprField, SampledField, SdmOptions};
use crate::index::{iteration_profile, IterateIndex};
use crate::orbits::{find_periodic_points, orbit_table, period_table, simple_period_report, Degeneracy, OrbitOptions, OrbitRecord, SeedSpec};
use crate::output::{fmt17, Table};
use crate::symplectic::{matrix_from_rows, splitting_defect, symplectic_residual, SqueezePlan, SymplecticFrame};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

pub const TASKS: [&str; 7] = ["index", "normal-form", "genfun", "orbits", "local-homology", "census", "conley-scan"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Index,
    NormalForm,
    Genfun,
    Orbits,
    LocalHomology,
    Census,
    ConleyScan,
}

impl Task {
    pub fn parse(name: &str) -> Option<Task> {
        Some(match name {
            "index" => Task::Index,
            "normal-form" => Task::NormalForm,
            "genfun" => Task::Genfun,
            "orbits" => Task::Orbits,
            "local-homology" => Task::LocalHomology,
            "census" => Task::Census,
            "conley-scan" => Task::ConleyScan,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PhaseSpaceName {
    #[default]
    Euclidean,
    Torus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianSpec {
    pub builtin: Option<String>,
    pub expression: Option<String>,
    #[serde(default = "one")]
    pub n: usize,
    pub phase_space: Option<PhaseSpaceName>,
    #[serde(default = "one_f")]
    pub period: f64,
    /// Strength parameter of a built-in.
    pub scale: Option<f64>,
    /// Profile of the `bump` built-in.
    pub bump: Option<BumpParams>,
}

fn one() -> usize {
    1
}

fn one_f() -> f64 {
    1.0
}

pub const BUILTINS: [&str; 7] = ["harmonic", "elliptic", "hyperbolic", "flat-max", "pendulum-torus", "forced-pendulum", "bump"];

impl HamiltonianSpec {
    pub fn build(&self) -> Result<HamiltonianField> {
        let n = self.n;
        if n == 0 {
            return Err(Error::Validation("hamiltonian.n must be positive".into()));
        }
        if !(self.period > 0.0) {
            return Err(Error::Validation("hamiltonian.period must be positive".into()));
        }
        let (src, space, name) = match (&self.builtin, &self.expression) {
            (Some(_), Some(_)) | (None, None) => {
                return Err(Error::Validation("hamiltonian: give exactly one of `builtin` and `expression`".into()));
            }
            (None, Some(e)) => (e.clone(), self.phase_space.unwrap_or_default(), "expression".to_string()),
            (Some(b), None) => {
                let a = self.scale;
                let sum = |f: &dyn Fn(usize) -> String| (1..=n).map(f).collect::<Vec<_>>().join(" + ");
                let src = match b.as_str() {
                    "harmonic" => format!("{} * ({})", a.unwrap_or(1.0), sum(&|i| format!("0.5*(x{i}^2 + y{i}^2)"))),
                    "elliptic" => {
                        let a = a.unwrap_or(0.1);
                        sum(&|i| format!("{} * 0.5*(x{i}^2 + y{i}^2)", -a * ((i + 1) as f64).sqrt()))
                    }
                    "hyperbolic" => format!("{} * ({})", a.unwrap_or(0.5), sum(&|i| format!("x{i}*y{i}"))),
                    "flat-max" => format!("-({})^2", sum(&|i| format!("x{i}^2 + y{i}^2"))),
                    "pendulum-torus" | "forced-pendulum" => {
                        if n != 1 {
                            return Err(Error::Validation(format!("hamiltonian.builtin `{b}` needs n = 1")));
                        }
                        let base = "(cos(2*pi*x1) - cos(2*pi*y1))";
                        if b == "forced-pendulum" {
                            format!("({base} + {} * cos(2*pi*t) * sin(2*pi*(x1 + y1))) / (4*pi^2)", a.unwrap_or(0.1))
                        } else {
                            format!("{base} / (4*pi^2)")
                        }
                    }
                    "bump" => {
                        let params = self.bump.as_ref().ok_or_else(|| Error::Validation("hamiltonian.bump is required by the `bump` built-in".into()))?;
                        let mut h = build_profile(params)?.hamiltonian(n);
                        h.period = self.period;
                        return Ok(h);
                    }
                    other => return Err(Error::Validation(format!("hamiltonian.builtin: unknown built-in `{other}` (known: {})", BUILTINS.join(", ")))),
                };
                let space = match b.as_str() {
                    "pendulum-torus" | "forced-pendulum" => PhaseSpaceName::Torus,
                    _ => self.phase_space.unwrap_or_default(),
                };
                (src, space, b.clone())
            }
        };
        let ps = match space {
            PhaseSpaceName::Euclidean => PhaseSpace::Euclidean,
            PhaseSpaceName::Torus => PhaseSpace::Torus,
        };
        Ok(HamiltonianField::new(Arc::new(ExprHamiltonian::parse(&src, n)?), self.period, ps, name))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexParams {
    pub point: Option<Vec<f64>>,
    #[serde(default = "ten")]
    pub max_t: usize,
    #[serde(default = "step_default")]
    pub step: f64,
}

fn ten() -> usize {
    10
}

fn step_default() -> f64 {
    0.01
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalFormParams {
    pub matrix: Vec<Vec<f64>>,
    #[serde(default = "sigmas_default")]
    pub sigmas: Vec<f64>,
}

fn sigmas_default() -> Vec<f64> {
    vec![1e-1, 1e-2, 1e-3]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenfunParams {
    pub point: Option<Vec<f64>>,
    pub radius: f64,
    #[serde(default = "step_default")]
    pub step: f64,
    pub per_dim: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitParams {
    pub period: usize,
    pub seeds: SeedSpec,
    #[serde(default = "newton_tol_default")]
    pub newton_tol: f64,
    #[serde(default = "step_default")]
    pub step: f64,
    #[serde(default = "integrator_default")]
    pub integrator: Integrator,
}

fn newton_tol_default() -> f64 {
    1e-10
}

fn integrator_default() -> Integrator {
    Integrator::Yoshida6
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalHomologyParams {
    /// Expression in `x1..xm` (or `x, y, z, w`).
    pub function: Option<String>,
    pub dim: Option<usize>,
    /// Sampled field file, relative to the scenario file.
    pub sampled: Option<String>,
    pub point: Vec<f64>,
    pub radius: Option<f64>,
    pub grid: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CensusParams {
    pub profile: BumpParams,
    pub periods: Vec<f64>,
    #[serde(default = "one")]
    pub n: usize,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    #[serde(default)]
    pub cross_validate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanParams {
    pub t_max: usize,
    pub seeds: SeedSpec,
    #[serde(default = "step_default")]
    pub step: f64,
    #[serde(default = "integrator_default")]
    pub integrator: Integrator,
    #[serde(default = "newton_tol_default")]
    pub newton_tol: f64,
    #[serde(default = "yes")]
    pub sdm: bool,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub task: Task,
    #[serde(default)]
    pub seed: u64,
    pub output: Option<String>,
    pub hamiltonian: Option<HamiltonianSpec>,
    pub index: Option<IndexParams>,
    pub normal_form: Option<NormalFormParams>,
    pub genfun: Option<GenfunParams>,
    pub orbits: Option<OrbitParams>,
    pub local_homology: Option<LocalHomologyParams>,
    pub census: Option<CensusParams>,
    pub conley_scan: Option<ScanParams>,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Validation(e.to_string().trim_end().to_string()))?;
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        let blocks = [
            (Task::Index, self.index.is_some(), "index"),
            (Task::NormalForm, self.normal_form.is_some(), "normal_form"),
            (Task::Genfun, self.genfun.is_some(), "genfun"),
            (Task::Orbits, self.orbits.is_some(), "orbits"),
            (Task::LocalHomology, self.local_homology.is_some(), "local_homology"),
            (Task::Census, self.census.is_some(), "census"),
            (Task::ConleyScan, self.conley_scan.is_some(), "conley_scan"),
        ];
        for (task, present, key) in blocks {
            if task == self.task && !present {
                return Err(Error::Validation(format!("missing parameter block [{key}] for task")));
            }
            if task != self.task && present {
                return Err(Error::Validation(format!("parameter block [{key}] does not belong to this task")));
            }
        }
        let needs_h = matches!(self.task, Task::Index | Task::Genfun | Task::Orbits | Task::ConleyScan);
        if needs_h && self.hamiltonian.is_none() {
            return Err(Error::Validation("missing [hamiltonian] block".into()));
        }
        if let Some(h) = &self.hamiltonian {
            if let Some(b) = &h.builtin {
                if !BUILTINS.contains(&b.as_str()) {
                    return Err(Error::Validation(format!("hamiltonian.builtin: unknown built-in `{b}` (known: {})", BUILTINS.join(", "))));
                }
            }
        }
        Ok(())
    }

    /// Injects the scenario seed into random seed specs that do not fix their own.
    fn seeded(&self, spec: &SeedSpec) -> SeedSpec {
        match spec {
            SeedSpec::Random { lo, hi, count, seed: None } => SeedSpec::Random { lo: lo.clone(), hi: hi.clone(), count: *count, seed: Some(self.seed) },
            other => other.clone(),
        }
    }
}

/// Files produced by a task, in write order.
#[derive(Default)]
pub struct Artifacts {
    pub files: Vec<(String, String)>,
    pub summary: serde_json::Value,
}

impl Artifacts {
    fn csv(&mut self, name: &str, t: &Table) -> Result<()> {
        self.files.push((name.into(), t.to_csv()?));
        Ok(())
    }

    fn json(&mut self, name: &str, v: &serde_json::Value) -> Result<()> {
        let text = serde_json::to_string_pretty(v).map_err(|e| Error::Internal(e.to_string()))?;
        self.files.push((name.into(), text + "\n"));
        Ok(())
    }
}

fn point_or_origin(p: &Option<Vec<f64>>, d: usize) -> Result<DVector<f64>> {
    match p {
        Some(v) if v.len() != d => Err(Error::Validation(format!("point has length {}, expected {d}", v.len()))),
        Some(v) => Ok(DVector::from_column_slice(v)),
        None => Ok(DVector::zeros(d)),
    }
}

fn index_rows(profile: &[(usize, IterateIndex)]) -> Table {
    let mut t = Table::new(["T", "cz", "status"]);
    for (k, r) in profile {
        let (v, s) = match r {
            IterateIndex::Index { value } => (value.to_string(), "ok".to_string()),
            IterateIndex::Degenerate { min_distance } => (String::new(), format!("degenerate {}", fmt17(*min_distance))),
            IterateIndex::Unresolved => (String::new(), "unresolved".into()),
        };
        t.push(vec![k.to_string(), v, s]);
    }
    t
}

fn run_index(s: &Scenario, out: &mut Artifacts) -> Result<()> {
    let p = s.index.as_ref().unwrap();
    let h = s.hamiltonian.as_ref().unwrap().build()?;
    let z = point_or_origin(&p.point, 2 * h.dim_n())?;
    let fo = FlowOptions { integrator: Integrator::Yoshida6, ..Default::default() };
    let r = flow_with(&h, &z, 0.0, h.period, p.step, &fo)?;
    let closure = (&r.end_lift - &z).norm();
    let path = r.monodromy.ok_or_else(|| Error::Internal("no monodromy path".into()))?;
    let prof = iteration_profile(&path, p.max_t);
    out.csv("index_vs_T.csv", &index_rows(&prof))?;
    out.summary = json!({ "closure_defect": closure, "max_t": p.max_t });
    Ok(())
}

fn run_normal_form(s: &Scenario, out: &mut Artifacts) -> Result<()> {
    let p = s.normal_form.as_ref().unwrap();
    let phi = matrix_from_rows(&p.matrix)?;
    let plan = SqueezePlan::new(&phi)?;
    let mut t = Table::new(["sigma", "lambda", "residual", "symplectic_residual", "splitting_defect"]);
    let mut frames = Vec::new();
    for &sigma in &p.sigmas {
        let sq = plan.squeeze(sigma)?;
        t.push(vec![fmt17(sigma), fmt17(sq.lambda), fmt17(sq.residual), fmt17(sq.psi.residual()), fmt17(splitting_defect(&sq, &phi))]);
        frames.push(json!({ "sigma": sigma, "frame": sq.frame.to_json() }));
    }
    out.csv("normal_form.csv", &t)?;
    out.json("frames.json", &json!(frames))?;
    out.summary = json!({ "exact": plan.is_exact(), "input_symplectic_residual": symplectic_residual(&phi)? });
    Ok(())
}

fn run_genfun(s: &Scenario, out: &mut Artifacts) -> Result<()> {
    let p = s.genfun.as_ref().unwrap();
    let h = s.hamiltonian.as_ref().unwrap().build()?;
    let n = h.dim_n();
    let z = point_or_origin(&p.point, 2 * n)?;
    let map = FlowMap { field: h.clone(), t0: 0.0, t1: h.period, step: p.step, integrator: Integrator::Yoshida6 };
    let frame = SymplecticFrame::standard(n).at(z);
    let mut opts = GfOptions::for_dim(n);
    if let Some(k) = p.per_dim {
        opts.per_dim = k;
    }
    let (gf, report) = generating_function(Arc::new(map), &frame, p.radius, &opts)?;
    let mut header: Vec<String> = (1..=n).map(|i| format!("X{i}")).chain((1..=n).map(|i| format!("y{i}"))).collect();
    header.push("F".into());
    let mut t = Table::new(header);
    for w in probe_points(n, p.radius, opts.per_dim) {
        let mut row: Vec<String> = w.iter().map(|&v| fmt17(v)).collect();
        row.push(fmt17(gf.value(&w)));
        t.push(row);
    }
    out.csv("genfun.csv", &t)?;
    out.summary = json!({
        "c1_distance": report.c1_distance,
        "closedness_residual": report.closedness_residual,
        "c2_norm": report.c2_norm,
        "c2_over_c1": report.c2_over_c1,
        "probes": report.probes,
        "hessian_at_p": crate::symplectic::matrix_to_rows(&report.hessian_at_p),
    });
    Ok(())
}

fn run_orbits(s: &Scenario, out: &mut Artifacts) -> Result<()> {
    let p = s.orbits.as_ref().unwrap();
    let h = s.hamiltonian.as_ref().unwrap().build()?;
    let opts = OrbitOptions { newton_tol: p.newton_tol, step: p.step, integrator: p.integrator, ..Default::default() };
    let search = find_periodic_points(&h, p.period, &s.seeded(&p.seeds), &opts)?;
    out.csv("orbits.csv", &orbit_table(&search.records, h.dim_n()))?;
    out.json("orbits.json", &serde_json::to_value(&search).map_err(|e| Error::Internal(e.to_string()))?)?;
    out.summary = json!({ "orbits": search.records.len(), "seeds": search.seeds, "converged": search.converged, "failed": search.failed });
    Ok(())
}

fn run_local_homology(s: &Scenario, base: &Path, out: &mut Artifacts) -> Result<()> {
    let p = s.local_homology.as_ref().unwrap();
    let (sig, lm2) = match (&p.function, &p.sampled) {
        (Some(f), None) => {
            let m = p.dim.unwrap_or(p.point.len());
            if m != p.point.len() {
                return Err(Error::Validation("local_homology.point length differs from dim".into()));
            }
            let field = ExprField::parse(f, m)?;
            let r = p.radius.ok_or_else(|| Error::Validation("local_homology.radius is required with `function`".into()))?;
            let sig = local_morse_homology(&field, &p.point, r, p.grid)?;
            let lm2 = lm2_maximum_test(&field, &p.point, r, p.grid)?;
            (sig, Some(lm2))
        }
        (None, Some(file)) => {
            let path = base.join(file);
            let text = std::fs::read_to_string(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            (SampledField::parse(&text)?.local_morse_homology(&p.point)?, None)
        }
        _ => return Err(Error::Validation("local_homology: give exactly one of `function` and `sampled`".into())),
    };
    let mut t = Table::new(["degree", "betti"]);
    for (k, b) in sig.betti.iter().enumerate() {
        t.push(vec![k.to_string(), b.to_string()]);
    }
    out.csv("local_homology.csv", &t)?;
    out.summary = json!({ "signature": sig.to_json(), "euler_characteristic": sig.euler_characteristic(), "strict_maximum": lm2 });
    Ok(())
}

fn run_census(s: &Scenario, out: &mut Artifacts) -> Result<()> {
    let p = s.census.as_ref().unwrap();
    let profile = build_profile(&p.profile)?;
    let mut all = Table::new(["T", "family", "l", "radius", "rho", "action", "cz_lo", "cz_hi"]);
    let mut plot = Table::new(["T", "family", "l", "action"]);
    let mut windows = Vec::new();
    let mut warnings = Vec::new();
    let mut checks = Vec::new();
    for &t in &p.periods {
        let c = census(&profile, t, p.n)?;
        let table = c.to_table();
        for row in &table.rows {
            let mut r = vec![fmt17(t)];
            r.extend(row.iter().cloned());
            all.push(r);
            plot.push(vec![fmt17(t), row[0].clone(), row[1].clone(), row[4].clone()]);
        }
        warnings.extend(c.warnings.iter().map(|w| format!("T = {t}: {w}")));
        if let (Some(e), Some(d)) = (p.epsilon, p.delta) {
            windows.push(json!({ "T": t, "window": validate_window(&profile, t, e, d) }));
        }
        if p.cross_validate {
            if p.n != 1 || t.fract() != 0.0 {
                return Err(Error::Validation("census.cross_validate needs n = 1 and integer periods".into()));
            }
            let x = cross_validate(&profile, t as usize, &CrossOptions::default())?;
            checks.push(serde_json::to_value(&x).map_err(|e| Error::Internal(e.to_string()))?);
        }
    }
    out.csv("census.csv", &all)?;
    out.csv("actions_vs_T.csv", &plot)?;
    out.json("profile.json", &serde_json::to_value(&p.profile).map_err(|e| Error::Internal(e.to_string()))?)?;
    if !checks.is_empty() {
        out.json("cross_validation.json", &json!(checks))?;
    }
    let failed = checks.iter().any(|c| c["passes"] == json!(false));
    out.summary = json!({ "slope_mid": profile.slope_mid, "warnings": warnings, "windows": windows, "cross_validation_failed": failed });
    if failed {
        return Err(Error::Validation("census and numerical orbits disagree; see cross_validation.json".into()));
    }
    Ok(())
}

fn run_conley_scan(s: &Scenario, out: &mut Artifacts) -> Result<()> {
    let p = s.conley_scan.as_ref().unwrap();
    let h = s.hamiltonian.as_ref().unwrap().build()?;
    let n = h.dim_n();
    let opts = OrbitOptions { newton_tol: p.newton_tol, step: p.step, integrator: p.integrator, ..Default::default() };
    let report = simple_period_report(&h, p.t_max, &s.seeded(&p.seeds), &opts)?;
    out.csv("simple_periods.csv", &period_table(&report))?;
    let all: Vec<OrbitRecord> = report.searches.iter().flat_map(|s| s.records.iter().cloned()).collect();
    out.csv("orbits.csv", &orbit_table(&all, n))?;
    let mut taxonomy = Table::new(["T", "nondegenerate", "weakly_nondegenerate", "strongly_degenerate"]);
    let mut index_plot = Table::new(["T", "point", "cz"]);
    for (k, search) in report.searches.iter().enumerate() {
        let count = |d: Degeneracy| search.records.iter().filter(|r| r.degeneracy == d).count().to_string();
        taxonomy.push(vec![(k + 1).to_string(), count(Degeneracy::Nondegenerate), count(Degeneracy::WeaklyNondegenerate), count(Degeneracy::StronglyDegenerate)]);
        for r in &search.records {
            if let Some(c) = r.cz {
                index_plot.push(vec![(k + 1).to_string(), r.point.iter().map(|v| fmt17(*v)).collect::<Vec<_>>().join(";"), c.to_string()]);
            }
        }
    }
    out.csv("taxonomy.csv", &taxonomy)?;
    out.csv("index_vs_T.csv", &index_plot)?;
    // iterates of one-periodic orbits: A(γ^(T)) = T·A(γ)
    let mut scaling = Table::new(["T", "point", "action_1", "action_T", "deviation"]);
    let mut worst: f64 = 0.0;
    if let Some(first) = report.searches.first() {
        for base in first.records.iter().filter(|r| r.action.is_some()) {
            for (k, search) in report.searches.iter().enumerate().skip(1) {
                let t = k + 1;
                let near = search.records.iter().find(|r| {
                    let d = DVector::from_column_slice(&r.point) - DVector::from_column_slice(&base.point);
                    let d = if h.phase_space == PhaseSpace::Torus { d.map(|v| v - v.round()) } else { d };
                    d.norm() < 1e-6
                });
                if let Some(r) = near.and_then(|r| r.action.map(|a| (r, a))) {
                    let a1 = base.action.unwrap();
                    let dev = (r.1 - t as f64 * a1).abs();
                    worst = worst.max(dev);
                    scaling.push(vec![t.to_string(), base.point.iter().map(|v| fmt17(*v)).collect::<Vec<_>>().join(";"), fmt17(a1), fmt17(r.1), fmt17(dev)]);
                }
            }
        }
    }
    out.csv("action_scaling.csv", &scaling)?;
    let mut sdm = serde_json::Value::Null;
    if p.sdm {
        if let Some(fixed) = report.searches.first().and_then(|s| s.records.iter().find(|r| r.degeneracy == Degeneracy::StronglyDegenerate)) {
            let z = DVector::from_column_slice(&fixed.point);
            let cert = sdm_certificate(&h, &z, &[], &SdmOptions { flow_step: p.step, gf_per_dim: Some(9), grid: 17, t_samples: 8, ..Default::default() })?;
            let mut t = Table::new(["i", "radius", "hessian_norm", "k1_pass", "k3_residual"]);
            for row in &cert.rows {
                t.push(vec![row.i.to_string(), fmt17(row.radius), fmt17(row.hessian_norm), row.k1_pass.to_string(), fmt17(row.k3_residual)]);
            }
            out.csv("sdm.csv", &t)?;
            sdm = json!({ "point": fixed.point, "unipotent": cert.unipotent, "monotone": cert.monotone });
        }
    }
    out.summary = json!({
        "rows": report.rows,
        "warnings": report.warnings,
        "action_scaling_max_deviation": worst,
        "sdm": sdm,
    });
    let summary = out.summary.clone();
    out.json("summary.json", &summary)?;
    Ok(())
}

/// Runs the scenario's task and returns its artifacts; errors carry whatever was produced.
pub fn execute(s: &Scenario, base: &Path) -> (Artifacts, Result<()>) {
    let mut out = Artifacts::default();
    let r = match s.task {
        Task::Index => run_index(s, &mut out),
        Task::NormalForm => run_normal_form(s, &mut out),
        Task::Genfun => run_genfun(s, &mut out),
        Task::Orbits => run_orbits(s, &mut out),
        Task::LocalHomology => run_local_homology(s, base, &mut out),
        Task::Census => run_census(s, &mut out),
        Task::ConleyScan => run_conley_scan(s, &mut out),
    };
    (out, r)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub files: Vec<String>,
    pub error: Option<Error>,
}

/// Parses, runs and writes a scenario; the manifest lists every file with its hash.
pub fn run_file(path: &Path, out_override: Option<&Path>, seed_override: Option<u64>, expect_task: Option<Task>) -> Result<RunOutcome> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut s = Scenario::parse(&text)?;
    if let Some(t) = expect_task {
        if t != s.task {
            return Err(Error::Validation(format!("task: command line asks for {t:?} but the scenario declares {:?}", s.task)));
        }
    }
    if let Some(seed) = seed_override {
        s.seed = seed;
    }
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let out_dir = match (out_override, &s.output) {
        (Some(o), _) => o.to_path_buf(),
        (None, Some(o)) => base.join(o),
        (None, None) => PathBuf::from("out").join(&s.name),
    };
    let start = Instant::now();
    let (artifacts, result) = execute(&s, &base);
    let elapsed = start.elapsed().as_secs_f64();
    std::fs::create_dir_all(&out_dir).map_err(|e| Error::Io(format!("{}: {e}", out_dir.display())))?;
    let mut listed = Vec::new();
    let write = |name: &str, body: &[u8]| std::fs::write(out_dir.join(name), body).map_err(|e| Error::Io(format!("{name}: {e}")));
    for (name, body) in &artifacts.files {
        write(name, body.as_bytes())?;
        listed.push(json!({ "path": name, "sha256": sha256_hex(body.as_bytes()), "bytes": body.len() }));
    }
    let status = match &result {
        Ok(()) => json!({ "ok": true }),
        Err(e) => json!({ "ok": false, "error": e.to_string(), "exit_code": e.exit_code() }),
    };
    if let Err(e) = &result {
        let marker = format!("{e}\n");
        write("FAILED", marker.as_bytes())?;
        listed.push(json!({ "path": "FAILED", "sha256": sha256_hex(marker.as_bytes()), "bytes": marker.len() }));
    }
    let manifest = json!({
        "scenario": { "file": path.display().to_string(), "sha256": sha256_hex(text.as_bytes()), "text": text, "parsed": s },
        "seed": s.seed,
        "versions": { "conley-lab": env!("CARGO_PKG_VERSION") },
        "threads": rayon::current_num_threads(),
        "timings": { "task_seconds": elapsed },
        "status": status,
        "summary": artifacts.summary,
        "files": listed,
    });
    write("manifest.json", (serde_json::to_string_pretty(&manifest).map_err(|e| Error::Internal(e.to_string()))? + "\n").as_bytes())?;
    Ok(RunOutcome { out_dir, files: artifacts.files.into_iter().map(|f| f.0).collect(), error: result.err() })
}

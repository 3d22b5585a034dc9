//! Radial bump profiles `F(ρ)`, `ρ = |z|²/2`, and the analytic census of their
//! `T`-periodic orbits.
//!
//! A profile is a chain of segments on which `F′ = α + β·S(u)` with the smoothstep
//! `S(u) = 3u² − 2u³`, so `F` is piecewise quartic, `C²`, and monotone on each piece.

use crate::error::{Error, Result};
use crate::hamiltonian::{Hamiltonian, HamiltonianField};
use crate::orbits::{convergents, find_periodic_points, OrbitOptions, SeedSpec};
use crate::output::{fmt17, Table};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

fn smooth(u: f64) -> f64 {
    u * u * (3.0 - 2.0 * u)
}

fn smooth_integral(u: f64) -> f64 {
    u * u * u * (1.0 - 0.5 * u)
}

fn smooth_derivative(u: f64) -> f64 {
    6.0 * u * (1.0 - u)
}

/// The outer shell of a two-shell profile: plateau `floor` on `[r, R]`, then an
/// increasing convex / constant / concave climb to `max_value` at `R_+`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OuterShell {
    pub big_r: f64,
    pub big_r_prime: f64,
    pub big_r_double_prime: f64,
    pub big_r_plus: f64,
    pub max_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpParams {
    pub r_minus: f64,
    pub r_prime: f64,
    pub r_double_prime: f64,
    pub r: f64,
    /// Peak value `C = F(0)`.
    pub c: f64,
    /// Value outside `B_r`; the plateau `a` of a two-shell profile.
    pub floor: f64,
    /// `F′(r_−²/2)`; zero gives a flat top on `B_{r_−}`.
    #[serde(default)]
    pub inner_slope: f64,
    #[serde(default)]
    pub outer: Option<OuterShell>,
}

impl BumpParams {
    fn rho(r: f64) -> f64 {
        0.5 * r * r
    }

    fn inner_drop_weights(&self) -> (f64, f64) {
        let (rm, rp, rpp, r) = (Self::rho(self.r_minus), Self::rho(self.r_prime), Self::rho(self.r_double_prime), Self::rho(self.r));
        let (dc, dm, dv) = (rp - rm, rpp - rp, r - rpp);
        (0.75 * rm + 0.5 * dc, 0.5 * dc + dm + 0.5 * dv)
    }

    /// The middle slope implied by `C − floor`.
    pub fn slope_mid(&self) -> f64 {
        let (w_in, w_mid) = self.inner_drop_weights();
        -(self.c - self.floor + self.inner_slope * w_in) / w_mid
    }

    /// Chooses `C` so that the middle slope equals `slope`.
    pub fn with_slope(mut self, slope: f64) -> Self {
        let (w_in, w_mid) = self.inner_drop_weights();
        self.c = self.floor - slope * w_mid - self.inner_slope * w_in;
        self
    }

    /// Chooses `max_value` so that the outer middle slope equals `slope`.
    pub fn with_outer_slope(mut self, slope: f64) -> Self {
        let floor = self.floor;
        if let Some(o) = self.outer.as_mut() {
            let (a, b, c, d) = (Self::rho(o.big_r), Self::rho(o.big_r_prime), Self::rho(o.big_r_double_prime), Self::rho(o.big_r_plus));
            o.max_value = floor + slope * (0.5 * (b - a) + (c - b) + 0.5 * (d - c));
        }
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    InnerSpheres,
    OuterSpheres,
    PlateauTrivial,
    ThirdGroup,
    FourthGroup,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::InnerSpheres => "inner_spheres",
            Family::OuterSpheres => "outer_spheres",
            Family::PlateauTrivial => "plateau_trivial",
            Family::ThirdGroup => "third_group",
            Family::FourthGroup => "fourth_group",
        }
    }
}

/// `F′ = α + β·S((ρ − ρ0)/width)` on `[ρ0, ρ0 + width]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Segment {
    pub rho0: f64,
    pub width: f64,
    pub alpha: f64,
    pub beta: f64,
    pub value0: f64,
    /// Family of the nontrivial orbits this segment carries.
    pub family: Option<Family>,
}

impl Segment {
    fn u(&self, rho: f64) -> f64 {
        if self.width.is_infinite() {
            0.0
        } else {
            ((rho - self.rho0) / self.width).clamp(0.0, 1.0)
        }
    }

    fn value(&self, rho: f64) -> f64 {
        if self.width.is_infinite() {
            return self.value0 + self.alpha * (rho - self.rho0);
        }
        let u = self.u(rho);
        self.value0 + self.width * (self.alpha * u + self.beta * smooth_integral(u))
    }

    fn slope(&self, rho: f64) -> f64 {
        self.alpha + self.beta * smooth(self.u(rho))
    }

    fn curvature(&self, rho: f64) -> f64 {
        if self.width.is_infinite() {
            0.0
        } else {
            self.beta * smooth_derivative(self.u(rho)) / self.width
        }
    }

    fn end(&self) -> f64 {
        self.rho0 + self.width
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BumpProfile {
    pub params: BumpParams,
    pub slope_mid: f64,
    pub outer_slope: Option<f64>,
    pub segments: Vec<Segment>,
    /// Worst violation of `C²` continuity and the endpoint values, ideally zero.
    pub residual: f64,
}

/// Builds the `C²` profile, refusing shapes that break a defining property.
pub fn build_profile(params: &BumpParams) -> Result<BumpProfile> {
    let p = params;
    let finite = [p.r_minus, p.r_prime, p.r_double_prime, p.r, p.c, p.floor, p.inner_slope].iter().all(|v| v.is_finite());
    if !finite {
        return Err(Error::Validation("profile parameters must be finite".into()));
    }
    if !(0.0 < p.r_minus && p.r_minus < p.r_prime && p.r_prime < p.r_double_prime && p.r_double_prime < p.r) {
        return Err(Error::Validation("radii must satisfy 0 < r_minus < r_prime < r_double_prime < r".into()));
    }
    if p.c < p.floor {
        return Err(Error::Validation("peak value C must not be below the floor".into()));
    }
    let rho = BumpParams::rho;
    let (rm, rp, rpp, rr) = (rho(p.r_minus), rho(p.r_prime), rho(p.r_double_prime), rho(p.r));
    let s_in = p.inner_slope;
    if s_in > 0.0 {
        return Err(Error::Infeasible("F must be decreasing: inner_slope must be ≤ 0".into()));
    }
    if s_in.abs() >= PI {
        return Err(Error::Infeasible("|F′| < π on the inner ball is violated by inner_slope".into()));
    }
    let mut segments = Vec::new();
    if p.c == p.floor && s_in == 0.0 {
        segments.push(Segment { rho0: 0.0, width: f64::INFINITY, alpha: 0.0, beta: 0.0, value0: p.c, family: None });
        return Ok(BumpProfile { params: p.clone(), slope_mid: 0.0, outer_slope: None, segments, residual: 0.0 });
    }
    let s = p.slope_mid();
    if !(s < s_in) {
        return Err(Error::Infeasible(format!(
            "F concave on [r_minus²/2, r_prime²/2] needs a middle slope below inner_slope; drop C − floor = {} gives slope {s}",
            p.c - p.floor
        )));
    }
    let push = |segs: &mut Vec<Segment>, rho0: f64, width: f64, alpha: f64, beta: f64, family: Option<Family>| {
        let value0 = segs.last().map(|s: &Segment| s.value(s.end())).unwrap_or(p.c);
        segs.push(Segment { rho0, width, alpha, beta, value0, family });
    };
    push(&mut segments, 0.0, rm, 0.5 * s_in, 0.5 * s_in, Some(Family::InnerSpheres));
    push(&mut segments, rm, rp - rm, s_in, s - s_in, Some(Family::InnerSpheres));
    push(&mut segments, rp, rpp - rp, s, 0.0, None);
    push(&mut segments, rpp, rr - rpp, s, -s, Some(Family::OuterSpheres));
    let mut outer_slope = None;
    let mut target_end = p.floor;
    if let Some(o) = &p.outer {
        if !(p.r < o.big_r && o.big_r < o.big_r_prime && o.big_r_prime < o.big_r_double_prime && o.big_r_double_prime < o.big_r_plus) {
            return Err(Error::Validation("outer radii must satisfy r < R < R' < R'' < R_plus".into()));
        }
        if !(o.max_value > p.c) {
            return Err(Error::Validation("max_value must exceed C".into()));
        }
        let (a, b, c, d) = (rho(o.big_r), rho(o.big_r_prime), rho(o.big_r_double_prime), rho(o.big_r_plus));
        let s2 = (o.max_value - p.floor) / (0.5 * (b - a) + (c - b) + 0.5 * (d - c));
        push(&mut segments, rr, a - rr, 0.0, 0.0, None);
        push(&mut segments, a, b - a, 0.0, s2, Some(Family::ThirdGroup));
        push(&mut segments, b, c - b, s2, 0.0, None);
        push(&mut segments, c, d - c, s2, -s2, Some(Family::FourthGroup));
        outer_slope = Some(s2);
        target_end = o.max_value;
    }
    let last = segments.last().unwrap();
    let end = last.end();
    push(&mut segments, end, f64::INFINITY, 0.0, 0.0, None);
    let mut residual = (segments.last().unwrap().value0 - target_end).abs();
    for w in segments.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let e = a.end();
        residual = residual.max((a.slope(e) - b.slope(e)).abs()).max((a.curvature(e) - b.curvature(e)).abs());
    }
    Ok(BumpProfile { params: p.clone(), slope_mid: s, outer_slope, segments, residual })
}

impl BumpProfile {
    fn segment(&self, rho: f64) -> &Segment {
        let k = self.segments.partition_point(|s| s.rho0 <= rho);
        &self.segments[k.saturating_sub(1)]
    }

    pub fn value(&self, rho: f64) -> f64 {
        self.segment(rho).value(rho)
    }

    /// `dF/dρ`.
    pub fn slope(&self, rho: f64) -> f64 {
        self.segment(rho).slope(rho)
    }

    pub fn curvature(&self, rho: f64) -> f64 {
        self.segment(rho).curvature(rho)
    }

    pub fn max_abs_slope(&self) -> f64 {
        self.segments.iter().map(|s| s.alpha.abs().max((s.alpha + s.beta).abs())).fold(0.0, f64::max)
    }

    pub fn max_abs_curvature(&self) -> f64 {
        self.segments.iter().filter(|s| s.width.is_finite()).map(|s| 1.5 * s.beta.abs() / s.width).fold(0.0, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.params.floor.min(self.params.c)
    }

    /// Whether `x/π` has a continued-fraction convergent with denominator ≤ 64 within `tol`.
    pub fn slope_is_rational_over_pi(slope: f64, tol: f64) -> bool {
        let x = slope.abs() / PI;
        convergents(x, 64).iter().any(|&(p, q)| (x - p as f64 / q as f64).abs() < tol)
    }

    /// The profile as a Hamiltonian on `R^{2n}`.
    pub fn hamiltonian(&self, n: usize) -> HamiltonianField {
        HamiltonianField::euclidean(RadialHamiltonian { profile: self.clone(), n }, 1.0, "bump")
    }
}

/// `H(z) = F(|z|²/2)`.
#[derive(Clone, Debug)]
pub struct RadialHamiltonian {
    pub profile: BumpProfile,
    pub n: usize,
}

impl Hamiltonian for RadialHamiltonian {
    fn dim_n(&self) -> usize {
        self.n
    }

    fn value(&self, _t: f64, z: &DVector<f64>) -> f64 {
        self.profile.value(0.5 * z.norm_squared())
    }

    fn gradient(&self, _t: f64, z: &DVector<f64>) -> DVector<f64> {
        z * self.profile.slope(0.5 * z.norm_squared())
    }

    fn hessian(&self, _t: f64, z: &DVector<f64>) -> DMatrix<f64> {
        let rho = 0.5 * z.norm_squared();
        let d = z.len();
        DMatrix::identity(d, d) * self.profile.slope(rho) + z * z.transpose() * self.profile.curvature(rho)
    }

    fn is_autonomous(&self) -> bool {
        true
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    /// Single bump with zero floor.
    Supported,
    /// Single bump shifted by a nonzero floor.
    Shifted,
    /// Two-shell profile with plateau `a` and outer value `max_value`.
    TwoShell,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindowCheck {
    pub kind: WindowKind,
    pub ok: bool,
    pub violations: Vec<String>,
}

/// The action-window constraints on `(T, ε, δ)` for the profile's shape.
pub fn validate_window(profile: &BumpProfile, t: f64, epsilon: f64, delta: f64) -> WindowCheck {
    let p = &profile.params;
    let area = PI * p.r * p.r;
    let inner_area = PI * p.r_minus * p.r_minus;
    let mut violations = Vec::new();
    let mut need = |ok: bool, what: &str| {
        if !ok {
            violations.push(what.to_string());
        }
    };
    let kind = match (&p.outer, p.floor == 0.0) {
        (Some(_), _) => WindowKind::TwoShell,
        (None, true) => WindowKind::Supported,
        (None, false) => WindowKind::Shifted,
    };
    match kind {
        WindowKind::Supported | WindowKind::Shifted => {
            need(epsilon > delta, "ε > δ");
            need(delta > 0.0, "δ > 0");
            need(epsilon > area, "ε > πr²");
            if kind == WindowKind::Supported {
                need(t * p.c - delta > 2.0 * area, "T·C − δ > 2πr²");
            } else {
                need(t * p.c - delta > t * profile.min_value() + 2.0 * area, "T·C − δ > T·min F + 2πr²");
            }
            need(delta < inner_area, "δ < πr_−²");
        }
        WindowKind::TwoShell => {
            let a = p.floor;
            let max_value = p.outer.as_ref().map(|o| o.max_value).unwrap_or(a);
            need(epsilon > 0.0, "ε > 0");
            need(delta > 0.0, "δ > 0");
            need(t * (p.c - a) > 2.0 * area + delta, "T·(c − a) > 2πr² + δ");
            need(delta < inner_area, "δ < πr_−²");
            need(delta < p.c - a, "δ < c − a");
            need(max_value > p.c + epsilon, "max H_+ > c + ε");
        }
    }
    WindowCheck { kind, ok: violations.is_empty(), violations }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CensusEntry {
    pub family: Family,
    /// Number of turns; the rotation sense is fixed by the family.
    pub l: i64,
    pub radius: f64,
    pub rho: f64,
    pub action: f64,
    pub cz_range: Option<(i64, i64)>,
    /// Root at a segment endpoint.
    pub tangency: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Census {
    pub period: f64,
    pub n: usize,
    pub entries: Vec<CensusEntry>,
    pub warnings: Vec<String>,
}

impl Census {
    pub fn spheres(&self) -> impl Iterator<Item = &CensusEntry> {
        self.entries.iter().filter(|e| e.family != Family::PlateauTrivial)
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["family", "l", "radius", "rho", "action", "cz_lo", "cz_hi"]);
        for e in &self.entries {
            let (lo, hi) = e.cz_range.map(|(a, b)| (a.to_string(), b.to_string())).unwrap_or_default();
            t.push(vec![e.family.as_str().into(), e.l.to_string(), fmt17(e.radius), fmt17(e.rho), fmt17(e.action), lo, hi]);
        }
        t
    }
}

fn cz_range(family: Family, l: i64, n: i64) -> Option<(i64, i64)> {
    match family {
        Family::InnerSpheres => Some(((2 * l - 1) * n + 1, (2 * l + 1) * n)),
        Family::OuterSpheres => Some(((2 * l - 1) * n, (2 * l + 1) * n - 1)),
        Family::FourthGroup => Some((-(2 * l + 1) * n + 1, -(2 * l - 1) * n)),
        Family::ThirdGroup | Family::PlateauTrivial => None,
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if b - a <= 1e-12 * m.abs().max(1.0) * 1e-3 {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Every `T`-periodic orbit family of the profile on `R^{2n}`: spheres where
/// `T·F′(ρ) = −2πl`, plus the constant orbits.
pub fn census(profile: &BumpProfile, t: f64, n: usize) -> Result<Census> {
    if !(t > 0.0) {
        return Err(Error::Precondition("period must be positive".into()));
    }
    let ni = n as i64;
    let p = &profile.params;
    let mut entries = Vec::new();
    let mut warnings = Vec::new();
    let tol = 1e-12;
    for seg in &profile.segments {
        if seg.width.is_infinite() {
            continue;
        }
        let (lo, hi) = {
            let (a, b) = (seg.alpha, seg.alpha + seg.beta);
            (a.min(b), a.max(b))
        };
        if seg.beta == 0.0 {
            let turns = -t * seg.alpha / (2.0 * PI);
            if seg.alpha != 0.0 && (turns - turns.round()).abs() < 1e-9 {
                warnings.push(format!("constant-slope band at ρ ∈ [{}, {}] is resonant: T·F′/2π = {turns}", seg.rho0, seg.end()));
            }
            continue;
        }
        let Some(family) = seg.family else { continue };
        // targets F′ = −2πl/T inside [lo, hi]
        let l_from = (-t * hi / (2.0 * PI) - 1e-9).ceil() as i64;
        let l_to = (-t * lo / (2.0 * PI) + 1e-9).floor() as i64;
        for l in l_from..=l_to {
            if l == 0 {
                continue;
            }
            let target = -2.0 * PI * l as f64 / t;
            let g = |rho: f64| seg.slope(rho) - target;
            let at_end = (seg.alpha - target).abs() < tol || (seg.alpha + seg.beta - target).abs() < tol;
            let rho = bisect(g, seg.rho0, seg.end());
            if at_end {
                warnings.push(format!("tangency: l = {l} root at a segment endpoint ρ = {rho}"));
            }
            let radius = (2.0 * rho).sqrt();
            // l counts clockwise turns when F′ < 0
            let action = t * seg.value(rho) + l as f64 * PI * radius * radius;
            let (family, l_abs) = (family, l.abs());
            entries.push(CensusEntry { family, l: l_abs, radius, rho, action, cz_range: cz_range(family, l_abs, ni), tangency: at_end });
        }
    }
    // constant orbits
    let s0 = profile.slope(0.0);
    if s0 == 0.0 {
        entries.push(CensusEntry { family: Family::PlateauTrivial, l: 0, radius: p.r_minus, rho: 0.5 * p.r_minus * p.r_minus, action: t * p.c, cz_range: None, tangency: false });
    } else {
        let turns = t * s0.abs() / (2.0 * PI);
        let k = turns.floor() as i64;
        let cz = ((turns - turns.round()).abs() > 1e-9).then_some(((2 * k + 1) * ni, (2 * k + 1) * ni));
        entries.push(CensusEntry { family: Family::PlateauTrivial, l: 0, radius: 0.0, rho: 0.0, action: t * p.c, cz_range: cz, tangency: false });
    }
    if p.c != p.floor || p.outer.is_some() {
        entries.push(CensusEntry { family: Family::PlateauTrivial, l: 0, radius: p.r, rho: 0.5 * p.r * p.r, action: t * p.floor, cz_range: None, tangency: false });
    }
    if let Some(o) = &p.outer {
        entries.push(CensusEntry { family: Family::PlateauTrivial, l: 0, radius: o.big_r_plus, rho: 0.5 * o.big_r_plus * o.big_r_plus, action: t * o.max_value, cz_range: None, tangency: false });
    }
    entries.sort_by(|a, b| a.rho.partial_cmp(&b.rho).unwrap().then(a.l.cmp(&b.l)));
    if profile.slope_mid != 0.0 && BumpProfile::slope_is_rational_over_pi(profile.slope_mid, 1e-9) {
        warnings.push(format!("slope_mid/π = {} is rational with denominator ≤ 64", profile.slope_mid / PI));
    }
    Ok(Census { period: t, n, entries, warnings })
}

/// One detected ring matched (or not) against the census.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RingMatch {
    pub census_radius: Option<f64>,
    pub census_action: Option<f64>,
    pub numeric_radius: Option<f64>,
    pub numeric_action: Option<f64>,
    pub l: i64,
    pub family: Option<Family>,
    /// Indices of the two orbits the ring splits into, from rotating the monodromy path by `±η`.
    pub split_indices: Option<(i64, i64)>,
    pub index_in_range: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossValidation {
    pub period: f64,
    pub seeds: usize,
    pub matched: Vec<RingMatch>,
    pub unmatched_census: Vec<CensusEntry>,
    pub unmatched_numeric: Vec<(f64, Option<f64>)>,
    pub max_radius_error: f64,
    pub max_action_error: f64,
    pub passes: bool,
}

#[derive(Clone, Debug)]
pub struct CrossOptions {
    pub radius_tol: f64,
    pub action_tol: f64,
    /// Seeds per expected ring spacing.
    pub seeds_per_spacing: f64,
    pub max_seeds: usize,
    /// Rotation-angle budget per step.
    pub phase_per_step: f64,
    pub max_newton: usize,
    /// Compute the split indices of each matched ring.
    pub check_index: bool,
}

impl Default for CrossOptions {
    fn default() -> Self {
        CrossOptions { radius_tol: 1e-6, action_tol: 1e-8, seeds_per_spacing: 4.0, max_seeds: 2000, phase_per_step: 0.03, max_newton: 12, check_index: true }
    }
}

/// Indices of the orbits obtained by nudging the ring's monodromy path to `exp(±ηtJ)·Φ(t)`.
fn split_indices(path: &crate::index::SymplecticPath) -> Option<(i64, i64)> {
    let d = path.dim_n() * 2;
    let eta = 1e-4;
    let j = {
        let n = d / 2;
        let mut j = DMatrix::<f64>::zeros(d, d);
        for i in 0..n {
            j[(i, n + i)] = -1.0;
            j[(n + i, i)] = 1.0;
        }
        j
    };
    let t_end = path.samples.last()?.0;
    let nudge = |sign: f64| -> Option<i64> {
        let samples = path
            .samples
            .iter()
            .map(|(t, m)| {
                let r = (&j * (sign * eta * t / t_end)).exp();
                (*t, r * m)
            })
            .collect();
        let p = crate::index::SymplecticPath::new(samples, false).ok()?;
        crate::index::cz_index(&p).ok()
    };
    let (a, b) = (nudge(1.0)?, nudge(-1.0)?);
    Some((a.min(b), a.max(b)))
}

/// Runs the orbit search on the profile in `R²` with ray seeds across `[r_−, r]`
/// and matches rings to census entries of the two inner-bump families.
pub fn cross_validate(profile: &BumpProfile, t: usize, opts: &CrossOptions) -> Result<CrossValidation> {
    let p = &profile.params;
    let cen = census(profile, t as f64, 1)?;
    let expected: Vec<CensusEntry> = cen
        .spheres()
        .filter(|e| matches!(e.family, Family::InnerSpheres | Family::OuterSpheres) && e.radius > p.r_minus && e.radius < p.r)
        .cloned()
        .collect();
    let tf = t as f64;
    let rho_lo = 0.5 * p.r_minus * p.r_minus;
    let rho_hi = 0.5 * p.r * p.r;
    let seeds = if profile.max_abs_slope() * tf < 2.0 * PI {
        16
    } else {
        let spacing = 2.0 * PI / (tf * profile.max_abs_curvature().max(1e-12));
        (((rho_hi - rho_lo) / spacing * opts.seeds_per_spacing).ceil() as usize + 2).clamp(16, opts.max_seeds)
    };
    let seed_spec = SeedSpec::Ray { from: vec![p.r_minus, 0.0], to: vec![p.r, 0.0], count: seeds + 2 };
    let seed_points = {
        // drop the two endpoints, which sit on constant orbits
        let mut pts = seed_spec.points(2)?;
        pts.remove(0);
        pts.pop();
        SeedSpec::Points { points: pts.iter().map(|v| v.iter().copied().collect()).collect() }
    };
    let step = (opts.phase_per_step / profile.max_abs_slope().max(1e-9)).min(0.02);
    let ring_gap = 2.0 * PI / (tf * profile.max_abs_curvature().max(1e-12)) / p.r;
    // seeds inside a ring's basin converge in a handful of steps; the rest are not worth chasing
    let oo = OrbitOptions { step, max_step: Some(0.5 * ring_gap), max_iter: opts.max_newton, ..OrbitOptions::default() };
    let h = profile.hamiltonian(1);
    let search = find_periodic_points(&h, t, &seed_points, &oo)?;
    // constant orbits have F′ = 0, everything else is a ring
    let mut rings: Vec<(f64, Option<f64>, Option<(i64, i64)>)> = Vec::new();
    for r in &search.records {
        let rho = 0.5 * r.radius * r.radius;
        if profile.slope(rho).abs() < 1e-9 || r.radius <= p.r_minus || r.radius >= p.r {
            continue;
        }
        let split = if !opts.check_index {
            None
        } else {
            let fo = crate::flow::FlowOptions { integrator: oo.integrator, record_every: 1, monodromy: true, ..Default::default() };
            let z = DVector::from_column_slice(&r.point);
            crate::flow::flow_with(&h, &z, 0.0, tf, oo.step, &fo).ok().and_then(|f| f.monodromy.as_ref().and_then(split_indices))
        };
        rings.push((r.radius, r.action, split));
    }
    let mut used = vec![false; rings.len()];
    let mut matched = Vec::new();
    let mut unmatched_census = Vec::new();
    let (mut max_r, mut max_a) = (0.0f64, 0.0f64);
    for e in &expected {
        let best = rings
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .min_by(|a, b| (a.1 .0 - e.radius).abs().partial_cmp(&(b.1 .0 - e.radius).abs()).unwrap());
        match best {
            Some((i, ring)) if (ring.0 - e.radius).abs() < opts.radius_tol && ring.1.is_some_and(|a| (a - e.action).abs() < opts.action_tol) => {
                used[i] = true;
                max_r = max_r.max((ring.0 - e.radius).abs());
                max_a = max_a.max((ring.1.unwrap() - e.action).abs());
                let index_in_range = match (ring.2, e.cz_range) {
                    (Some((a, b)), Some((lo, hi))) => Some(a >= lo && b <= hi),
                    _ => None,
                };
                matched.push(RingMatch {
                    census_radius: Some(e.radius),
                    census_action: Some(e.action),
                    numeric_radius: Some(ring.0),
                    numeric_action: ring.1,
                    l: e.l,
                    family: Some(e.family),
                    split_indices: ring.2,
                    index_in_range,
                });
            }
            Some((_, ring)) => {
                max_r = max_r.max((ring.0 - e.radius).abs());
                if let Some(a) = ring.1 {
                    max_a = max_a.max((a - e.action).abs());
                }
                unmatched_census.push(e.clone());
            }
            None => unmatched_census.push(e.clone()),
        }
    }
    let unmatched_numeric: Vec<(f64, Option<f64>)> = rings.iter().zip(&used).filter(|(_, u)| !**u).map(|(r, _)| (r.0, r.1)).collect();
    let passes = unmatched_census.is_empty() && unmatched_numeric.is_empty();
    Ok(CrossValidation { period: tf, seeds, matched, unmatched_census, unmatched_numeric, max_radius_error: max_r, max_action_error: max_a, passes })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn single_bump() -> BumpParams {
        BumpParams { r_minus: 0.2, r_prime: 0.3, r_double_prime: 0.4, r: 0.5, c: 1.0, floor: 0.0, inner_slope: -0.2, outer: None }
    }

    #[test]
    fn profile_is_c2_and_monotone() {
        let prof = build_profile(&single_bump()).unwrap();
        assert!(prof.residual < 1e-12, "{}", prof.residual);
        assert!((prof.value(0.0) - 1.0).abs() < 1e-15);
        assert!(prof.value(0.2).abs() < 1e-12);
        let mut last = f64::INFINITY;
        for k in 0..=400 {
            let rho = 0.15 * k as f64 / 400.0;
            let v = prof.value(rho);
            assert!(v <= last + 1e-15);
            last = v;
        }
        // concave, constant, convex
        assert!(prof.curvature(0.5 * 0.25 * 0.25) < 0.0);
        assert_eq!(prof.curvature(0.5 * 0.35 * 0.35), 0.0);
        assert!(prof.curvature(0.5 * 0.45 * 0.45) > 0.0);
    }

    #[test]
    fn slope_round_trip_and_infeasibility() {
        let b = single_bump().with_slope(-7.0);
        assert!((b.slope_mid() + 7.0).abs() < 1e-12);
        let mut bad = single_bump();
        bad.inner_slope = -4.0;
        assert!(matches!(build_profile(&bad), Err(Error::Infeasible(_))));
        let mut shallow = single_bump();
        shallow.c = 0.01;
        assert!(matches!(build_profile(&shallow), Err(Error::Infeasible(_))));
    }

    #[test]
    fn flat_profile_has_no_spheres() {
        let mut b = single_bump();
        b.c = 0.0;
        b.inner_slope = 0.0;
        let prof = build_profile(&b).unwrap();
        let c = census(&prof, 20.0, 1).unwrap();
        assert_eq!(c.spheres().count(), 0);
    }

    #[test]
    fn root_counts_follow_slope_ranges() {
        let prof = build_profile(&single_bump()).unwrap();
        for t in [5.0, 10.0, 20.0] {
            let c = census(&prof, t, 1).unwrap();
            let s = prof.slope_mid.abs();
            let inner = ((t * s / (2.0 * PI)).floor() - (t * 0.2 / (2.0 * PI)).floor()) as usize;
            let outer = (t * s / (2.0 * PI)).floor() as usize;
            assert_eq!(c.entries.iter().filter(|e| e.family == Family::InnerSpheres && e.rho > 0.02).count(), inner);
            assert_eq!(c.entries.iter().filter(|e| e.family == Family::OuterSpheres).count(), outer);
            for e in c.spheres() {
                assert!((t * prof.slope(e.rho) + 2.0 * PI * e.l as f64).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn two_shell_has_four_groups() {
        let mut b = single_bump();
        b.floor = 0.2;
        b.c = 1.2;
        b.outer = Some(OuterShell { big_r: 0.6, big_r_prime: 0.7, big_r_double_prime: 0.8, big_r_plus: 0.9, max_value: 2.0 });
        let prof = build_profile(&b).unwrap();
        assert!(prof.residual < 1e-12);
        let c = census(&prof, 20.0, 1).unwrap();
        for f in [Family::InnerSpheres, Family::OuterSpheres, Family::ThirdGroup, Family::FourthGroup] {
            assert!(c.entries.iter().any(|e| e.family == f), "{f:?}");
        }
        // outward climbing shells rotate the other way: action T·a − πR²l
        let third = c.entries.iter().find(|e| e.family == Family::ThirdGroup).unwrap();
        assert!((third.action - (20.0 * prof.value(third.rho) - PI * third.radius.powi(2) * third.l as f64)).abs() < 1e-12);
    }

    #[test]
    fn window_boundaries() {
        let prof = build_profile(&single_bump()).unwrap();
        let area = PI * 0.25;
        assert!(validate_window(&prof, 5.0, area * 1.1, 0.05).ok);
        assert!(!validate_window(&prof, 5.0, area, 0.05).ok);
        let inner = PI * 0.04;
        let w = validate_window(&prof, 5.0, area * 1.1, inner);
        assert_eq!(w.violations, vec!["δ < πr_−²".to_string()]);
    }

    #[test]
    fn irrational_surrogate() {
        assert!(BumpProfile::slope_is_rational_over_pi(PI * 3.0 / 7.0, 1e-9));
        assert!(!BumpProfile::slope_is_rational_over_pi(PI * 2f64.sqrt(), 1e-9));
    }
}

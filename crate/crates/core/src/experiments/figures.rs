//! One function per reproduced figure or table. Every spec deserializes
//! with defaults, so an empty override object reproduces the reference
//! parameters.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::linalg::SymMat2;
use crate::noise::{noise_breakdown, DynamicsCoefficients, PhysicalParams, Rates, UnitSystem};
use crate::propagate::{lyapunov_asymptote, riccati_asymptote, SegmentFlow};
use crate::protocol::{classify, dense_trace, squeeze_rates, CycleKind, SqueezeClass};
use crate::tolerances::ROOT_BISECTION;

use super::dataset::Dataset;
use super::setup::Setup;
use super::{bisect, linear_grid, log_grid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZetaDepth {
    /// Protocol fixed point (saddle xx for a divergent unconditional map).
    #[default]
    Converged,
    /// A single cycle from the `ω2` steady state.
    OneCycle,
}

impl ZetaDepth {
    fn label(self) -> &'static str {
        match self {
            ZetaDepth::Converged => "converged",
            ZetaDepth::OneCycle => "one_cycle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureId {
    Fig2,
    Fig3a,
    Fig3b,
    Fig3c,
    Fig4a,
    Fig4b,
    Scenario,
}

impl FigureId {
    pub const ALL: [FigureId; 7] = [
        FigureId::Fig2,
        FigureId::Fig3a,
        FigureId::Fig3b,
        FigureId::Fig3c,
        FigureId::Fig4a,
        FigureId::Fig4b,
        FigureId::Scenario,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FigureId::Fig2 => "fig2",
            FigureId::Fig3a => "fig3a",
            FigureId::Fig3b => "fig3b",
            FigureId::Fig3c => "fig3c",
            FigureId::Fig4a => "fig4a",
            FigureId::Fig4b => "fig4b",
            FigureId::Scenario => "scenario",
        }
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FigureId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| {
                Error::invalid(
                    "figure",
                    format!("unknown figure `{s}` (expected one of fig2, fig3a, fig3b, fig3c, fig4a, fig4b, scenario)"),
                )
            })
    }
}

fn merge(base: &mut Value, overrides: &Value) {
    match (base, overrides) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, o) => *b = o.clone(),
    }
}

/// Default spec of `T` with `overrides` merged in; unknown keys are errors.
pub fn spec_with<T>(overrides: &Value) -> Result<T>
where
    T: Default + Serialize + for<'de> Deserialize<'de>,
{
    let mut base = serde_json::to_value(T::default()).map_err(|e| Error::invalid("spec", e.to_string()))?;
    if !overrides.is_null() {
        merge(&mut base, overrides);
    }
    serde_json::from_value(base).map_err(|e| Error::invalid("spec", e.to_string()))
}

/// Build the dataset of `id` from its default spec plus `overrides`.
pub fn run_figure(id: FigureId, overrides: &Value, seed: Option<u64>) -> Result<Dataset> {
    match id {
        FigureId::Fig2 => fig2(&spec_with(overrides)?, seed),
        FigureId::Fig3a => fig3a(&spec_with(overrides)?, seed),
        FigureId::Fig3b => fig3b(&spec_with(overrides)?, seed),
        FigureId::Fig3c => fig3c(&spec_with(overrides)?, seed),
        FigureId::Fig4a => fig4a(&spec_with(overrides)?, seed),
        FigureId::Fig4b => fig4b(&spec_with(overrides)?, seed),
        FigureId::Scenario => scenario_table(&spec_with(overrides)?, seed),
    }
}

fn to_params<T: Serialize>(spec: &T) -> Result<Value> {
    serde_json::to_value(spec).map_err(|e| Error::invalid("spec", e.to_string()))
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite and > 0, got {v}")))
    }
}

fn short(v: f64) -> String {
    format!("{v}")
}

// ---------------------------------------------------------------- Fig. 2

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig2Spec {
    /// `ω1 = ω2 / 2`.
    pub omega2: f64,
    pub mass: f64,
    pub a2: f64,
    pub d1: f64,
    pub d2: f64,
    /// Backaction of the measured series.
    pub b: f64,
    pub a1_min: f64,
    pub a1_max: f64,
    pub points: usize,
}

impl Default for Fig2Spec {
    fn default() -> Self {
        Fig2Spec {
            omega2: 1.5 * PI,
            mass: 1.0,
            a2: 1.0,
            d1: 2.0,
            d2: 2.0,
            b: 2.0,
            a1_min: 0.05,
            a1_max: 1.0,
            points: 191,
        }
    }
}

impl Fig2Spec {
    fn setup(&self, a1: f64, b: f64) -> Result<Setup> {
        let mut base = DynamicsCoefficients::natural(a1, self.a2, self.d1, self.d2, b, 1.0);
        base.mass = self.mass;
        Setup::natural(base, 0.5 * self.omega2, self.omega2)
    }
}

/// Squeezing rates and asymptotic momentum variances against `a1`, with
/// the root of the momentum rate.
pub fn fig2(spec: &Fig2Spec, seed: Option<u64>) -> Result<Dataset> {
    if !(spec.a1_min < spec.a1_max) || spec.points < 2 {
        return Err(Error::invalid("a1_min", "need a1_min < a1_max and points >= 2"));
    }
    let grid = linear_grid(spec.a1_min, spec.a1_max, spec.points);
    let rows: Vec<[f64; 9]> = grid
        .par_iter()
        .map(|&a1| {
            let s = spec.setup(a1, spec.b)?;
            let sr = squeeze_rates(&s.c1, &s.c2, &s.schedule(1)?, &s.x_omega2()?)?;
            Ok([
                sr.sr_pp_leading,
                sr.sr_pp,
                sr.sr_xx,
                sr.sr_xp,
                s.observe("spectral_radius")?,
                s.protocol_pp(CycleKind::Langevin)?,
                s.protocol_pp(s.measured_kind())?,
                s.protocol_xx(CycleKind::Langevin)?,
                s.protocol_xx(s.measured_kind())?,
            ])
        })
        .collect::<Result<_>>()?;

    let mut ds = Dataset::new("fig2", "squeezing rates and asymptotic momentum variance against a1", to_params(spec)?, seed);
    ds.push("a1", grid);
    let names = [
        "sr_pp",
        "sr_pp_full",
        "sr_xx",
        "sr_xp",
        "spectral_radius",
        "asymptotic_pp_langevin",
        "asymptotic_pp_riccati",
        "asymptotic_xx_langevin",
        "asymptotic_xx_riccati",
    ];
    for (j, name) in names.iter().enumerate() {
        ds.push(name, rows.iter().map(|r| r[j]).collect());
    }

    let leading = |a1: f64| -> f64 {
        spec.setup(a1, 0.0)
            .and_then(|s| squeeze_rates(&s.c1, &s.c2, &s.schedule(1)?, &s.x_omega2()?))
            .map_or(f64::NAN, |r| r.sr_pp_leading)
    };
    let full = |a1: f64| -> f64 {
        spec.setup(a1, 0.0)
            .and_then(|s| squeeze_rates(&s.c1, &s.c2, &s.schedule(1)?, &s.x_omega2()?))
            .map_or(f64::NAN, |r| r.sr_pp)
    };
    let radius = |a1: f64| -> f64 {
        spec.setup(a1, 0.0)
            .and_then(|s| s.observe("spectral_radius"))
            .map_or(f64::NAN, |r| r - 1.0)
    };
    let root = bisect(spec.a1_min, spec.a1_max, ROOT_BISECTION, leading);
    ds.summarize_number("threshold_a1", root.unwrap_or(f64::NAN));
    ds.summarize_number(
        "threshold_a1_full",
        bisect(spec.a1_min, spec.a1_max, ROOT_BISECTION, full).unwrap_or(f64::NAN),
    );
    ds.summarize_number(
        "threshold_a1_spectral",
        bisect(spec.a1_min, spec.a1_max, ROOT_BISECTION, radius).unwrap_or(f64::NAN),
    );
    ds.summarize("threshold_bracketed", root.is_some());
    ds.note("sr_pp is the leading form f + ln(Ω2²/Ω1²); sr_pp_full uses the ω2 steady state as reference");
    ds.note("threshold_a1 is the root of sr_pp bisected to 1e-4");
    ds.note("asymptotic_pp_langevin is inf where the unconditional cycle map has spectral radius >= 1");
    Ok(ds)
}

// ---------------------------------------------------------------- Fig. 3a

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig3Spec {
    pub a: f64,
    pub d: f64,
    pub b_values: Vec<f64>,
    /// Frequency of the ground-state reference line.
    pub omega2: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    pub points_per_decade: usize,
}

impl Default for Fig3Spec {
    fn default() -> Self {
        Fig3Spec {
            a: 1.0,
            d: 0.5,
            b_values: vec![0.0, 1.0, 3.0, 5.0],
            omega2: 1.5 * PI,
            omega_min: 0.5,
            omega_max: 50.0,
            points_per_decade: 200,
        }
    }
}

/// Steady-state position variance against the trap frequency, without the
/// protocol, for each backaction strength.
pub fn fig3a(spec: &Fig3Spec, seed: Option<u64>) -> Result<Dataset> {
    positive("omega_min", spec.omega_min)?;
    if !(spec.omega_min < spec.omega_max) {
        return Err(Error::invalid("omega_max", "must exceed omega_min"));
    }
    let grid = log_grid(spec.omega_min.log10(), spec.omega_max.log10(), spec.points_per_decade.max(1));
    let base = DynamicsCoefficients::natural(spec.a, spec.a, spec.d, spec.d, 0.0, 1.0);
    let rows: Vec<Vec<f64>> = grid
        .par_iter()
        .map(|&w| {
            spec.b_values
                .iter()
                .map(|&b| {
                    let (a, d, bm) = base.at_omega(w).with_b(b).matrices();
                    if b == 0.0 {
                        lyapunov_asymptote(&a, &d).map(|x| x.xx)
                    } else {
                        riccati_asymptote(&a, &d, &bm).map(|x| x.xx)
                    }
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let sigma_g = 1.0 / (2.0 * spec.omega2);
    let x_inf = spec.d / (4.0 * spec.a);
    let mut ds = Dataset::new("fig3a", "steady-state position variance against trap frequency", to_params(spec)?, seed);
    let n = grid.len();
    ds.push("omega", grid.clone());
    for (j, b) in spec.b_values.iter().enumerate() {
        let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        let min = col.iter().copied().fold(f64::INFINITY, f64::min);
        ds.summarize_number(&format!("min_xx_b{}", short(*b)), min);
        let below = grid.iter().zip(&col).find(|(_, x)| **x < sigma_g).map(|(w, _)| *w);
        ds.summarize_number(
            &format!("omega_below_ground_b{}", short(*b)),
            below.unwrap_or(f64::NAN),
        );
        ds.push(&format!("xx_b{}", short(*b)), col);
    }
    ds.push("sigma_g", vec![sigma_g; n]);
    ds.push("x_inf", vec![x_inf; n]);
    ds.summarize_number("sigma_g", sigma_g);
    ds.summarize_number("x_inf", x_inf);
    ds.note("b = 0 is the unconditional steady state; b > 0 the stabilizing Riccati root");
    ds.note("omega_below_ground_b* is the first grid frequency with xx < sigma_g (null if none)");
    Ok(ds)
}

// ---------------------------------------------------------------- Fig. 3b

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig3bSpec {
    pub a: f64,
    pub d: f64,
    pub b: f64,
    pub omega1: f64,
    pub omega2: f64,
    /// Initial `(xx, xp, pp)`.
    pub initial: [f64; 3],
    pub equilibration_time: f64,
    pub equilibration_samples: usize,
    pub cycles: usize,
    pub samples_per_segment: usize,
}

impl Default for Fig3bSpec {
    fn default() -> Self {
        Fig3bSpec {
            a: 1.0,
            d: 0.5,
            b: 3.0,
            omega1: 0.75 * PI,
            omega2: 1.5 * PI,
            initial: [0.5, 0.0, 0.5],
            equilibration_time: 4.0,
            equilibration_samples: 200,
            cycles: 10,
            samples_per_segment: 25,
        }
    }
}

impl Fig3bSpec {
    pub fn setup(&self, b: f64) -> Result<Setup> {
        let base = DynamicsCoefficients::natural(self.a, self.a, self.d, self.d, b, 1.0);
        Setup::natural(base, self.omega1, self.omega2)
    }
}

/// Sampling of an equilibration-then-protocol run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSpec {
    pub initial: SymMat2,
    pub equilibration_time: f64,
    pub equilibration_samples: usize,
    pub cycles: usize,
    pub samples_per_segment: usize,
}

/// Equilibration at `ω2` followed by `cycles` protocol cycles, with `kind`
/// selecting unconditional or measured dynamics in both stages.
pub fn protocol_trace(s: &Setup, kind: CycleKind, spec: &TraceSpec) -> Result<Vec<(f64, SymMat2)>> {
    if !spec.initial.is_physical(s.hbar(), 0.0) {
        return Err(Error::invalid("initial", "violates the uncertainty relation"));
    }
    if !(spec.equilibration_time >= 0.0) || spec.equilibration_samples == 0 {
        return Err(Error::invalid("equilibration_time", "need time >= 0 and samples >= 1"));
    }
    let (a, d, b) = s.c2.matrices();
    let b = match kind {
        CycleKind::Langevin => crate::linalg::Mat2::ZERO,
        CycleKind::Riccati => b,
    };
    let dt = spec.equilibration_time / spec.equilibration_samples as f64;
    let flow = SegmentFlow::new(&a, &d, &b, dt)?;
    let mut out = Vec::with_capacity(spec.equilibration_samples + 1);
    let mut sigma = spec.initial;
    out.push((0.0, sigma));
    for k in 1..=spec.equilibration_samples {
        sigma = flow.apply(&sigma)?;
        out.push((k as f64 * dt, sigma));
    }
    if spec.cycles > 0 {
        let sched = s.schedule(spec.cycles)?;
        let trace = dense_trace(&s.c1, &s.c2, &sched, kind, &sigma, spec.cycles, spec.samples_per_segment)?;
        out.extend(
            trace
                .into_iter()
                .skip(1)
                .map(|(t, x)| (t + spec.equilibration_time, x)),
        );
    }
    Ok(out)
}

/// Fig. 3b run of one kind.
pub fn fig3b_trace(spec: &Fig3bSpec, kind: CycleKind) -> Result<Vec<(f64, SymMat2)>> {
    let b = match kind {
        CycleKind::Langevin => 0.0,
        CycleKind::Riccati => spec.b,
    };
    let [xx, xp, pp] = spec.initial;
    let trace = TraceSpec {
        initial: SymMat2::new(xx, xp, pp),
        equilibration_time: spec.equilibration_time,
        equilibration_samples: spec.equilibration_samples,
        cycles: spec.cycles,
        samples_per_segment: spec.samples_per_segment,
    };
    protocol_trace(&spec.setup(b)?, kind, &trace)
}

fn class_code(c: SqueezeClass) -> f64 {
    match c {
        SqueezeClass::Squeezed => 0.0,
        SqueezeClass::Squashed => 1.0,
        SqueezeClass::NotSqueezed => 2.0,
    }
}

fn class_name(c: SqueezeClass) -> &'static str {
    match c {
        SqueezeClass::Squeezed => "squeezed",
        SqueezeClass::Squashed => "squashed",
        SqueezeClass::NotSqueezed => "not_squeezed",
    }
}

/// Position variance along the protocol, unconditional and measured.
pub fn fig3b(spec: &Fig3bSpec, seed: Option<u64>) -> Result<Dataset> {
    let lang = fig3b_trace(spec, CycleKind::Langevin)?;
    let meas = fig3b_trace(spec, CycleKind::Riccati)?;
    let sl = spec.setup(0.0)?;
    let sr = spec.setup(spec.b)?;
    let sigma_g = sl.sigma_g();
    let xl = sl.protocol_xx(CycleKind::Langevin)?;
    let xr = sr.protocol_xx(sr.measured_kind())?;
    let x2 = sl.x_omega2()?.xx;

    let mut ds = Dataset::new("fig3b", "position variance during equilibration and protocol", to_params(spec)?, seed);
    let n = lang.len();
    ds.push("time", lang.iter().map(|p| p.0).collect());
    ds.push("xx_langevin", lang.iter().map(|p| p.1.xx).collect());
    ds.push("pp_langevin", lang.iter().map(|p| p.1.pp).collect());
    ds.push("xx_riccati", meas.iter().map(|p| p.1.xx).collect());
    ds.push("pp_riccati", meas.iter().map(|p| p.1.pp).collect());
    ds.push("sigma_g", vec![sigma_g; n]);
    ds.summarize_number("sigma_g", sigma_g);
    ds.summarize_number("x_omega2_xx", x2);
    ds.summarize_number("asymptote_xx_langevin", xl);
    ds.summarize_number("asymptote_xx_riccati", xr);
    ds.summarize("ordering_holds", xr < xl && xl < sigma_g);
    let z0 = sl.ratio(x2);
    ds.summarize("class_langevin", class_name(classify(sl.ratio(xl), z0)));
    ds.summarize("class_riccati", class_name(classify(sr.ratio(xr), z0)));
    ds.note("each series equilibrates under its own dynamics at omega2 before the protocol starts");
    ds.note("asymptotes are protocol fixed points; classes compare zeta with 1 and with the omega2 steady state");
    Ok(ds)
}

// ---------------------------------------------------------------- Fig. 3c

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig3cSpec {
    pub a_min: f64,
    pub a_max: f64,
    pub a_points: usize,
    pub d_min: f64,
    pub d_max: f64,
    pub d_points: usize,
    pub b_values: Vec<f64>,
    pub omega1: f64,
    pub omega2: f64,
}

impl Default for Fig3cSpec {
    fn default() -> Self {
        Fig3cSpec {
            a_min: 0.05,
            a_max: 2.0,
            a_points: 40,
            d_min: 0.02,
            d_max: 1.0,
            d_points: 50,
            b_values: vec![0.0, 3.0, 5.0],
            omega1: 0.75 * PI,
            omega2: 1.5 * PI,
        }
    }
}

/// Smallest `a` from which the slice stays squeezed (ratio < 1), linearly
/// interpolated at the last crossing; `a[0]` when squeezed throughout and
/// `NaN` when not squeezed at the largest `a`.
fn border(a: &[f64], ratio: &[f64]) -> f64 {
    let n = a.len();
    if !(ratio[n - 1] < 1.0) {
        return f64::NAN;
    }
    match (1..n).rev().find(|&k| !(ratio[k - 1] < 1.0)) {
        None => a[0],
        Some(k) if ratio[k - 1].is_finite() => {
            let (r0, r1) = (ratio[k - 1] - 1.0, ratio[k] - 1.0);
            a[k - 1] + (a[k] - a[k - 1]) * r0 / (r0 - r1)
        }
        Some(k) => a[k],
    }
}

/// Ratio of the squeezed to the ground-state position variance over a
/// damping/noise grid. Rows are ordered with `a` varying fastest.
pub fn fig3c(spec: &Fig3cSpec, seed: Option<u64>) -> Result<Dataset> {
    positive("a_min", spec.a_min)?;
    positive("d_min", spec.d_min)?;
    let a_grid = linear_grid(spec.a_min, spec.a_max, spec.a_points);
    let d_grid = linear_grid(spec.d_min, spec.d_max, spec.d_points);
    let points: Vec<(f64, f64)> = d_grid
        .iter()
        .flat_map(|&d| a_grid.iter().map(move |&a| (a, d)))
        .collect();
    let rows: Vec<Vec<f64>> = points
        .par_iter()
        .map(|&(a, d)| {
            spec.b_values
                .iter()
                .map(|&b| {
                    let base = DynamicsCoefficients::natural(a, a, d, d, b, 1.0);
                    let s = Setup::natural(base, spec.omega1, spec.omega2)?;
                    Ok(s.protocol_xx(s.measured_kind())? / s.sigma_g())
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut ds = Dataset::new("fig3c", "squeezed to ground-state position variance ratio over (a, d)", to_params(spec)?, seed);
    ds.push("a", points.iter().map(|p| p.0).collect());
    ds.push("d", points.iter().map(|p| p.1).collect());
    for (j, b) in spec.b_values.iter().enumerate() {
        let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        let border: Vec<Value> = d_grid
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let slice = &col[i * a_grid.len()..(i + 1) * a_grid.len()];
                let a_star = border(&a_grid, slice);
                json!([d, if a_star.is_finite() { json!(a_star) } else { Value::Null }])
            })
            .collect();
        ds.summarize(&format!("border_b{}", short(*b)), border);
        ds.push(&format!("ratio_b{}", short(*b)), col);
    }
    ds.note("border_b* lists [d, a*]: squeezed (ratio < 1) for all a >= a* on the d-slice; null when not squeezed at a_max");
    ds.note("b = 0 uses the unconditional map; its xx fixed point exists even where pp diverges");
    Ok(ds)
}

// ---------------------------------------------------------------- Fig. 4

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig4Spec {
    pub physical: PhysicalParams,
    pub q_min: f64,
    pub q_max: f64,
    pub points_per_decade: usize,
    pub recoils: Vec<f64>,
    pub efficiencies: Vec<f64>,
    pub depth: ZetaDepth,
    /// Slope `|d log ζ / d log Q|` below which ζ counts as flat.
    pub plateau_slope: f64,
}

impl Default for Fig4Spec {
    fn default() -> Self {
        Fig4Spec {
            physical: PhysicalParams::default(),
            q_min: 1e4,
            q_max: 1e12,
            points_per_decade: 200,
            recoils: vec![1e26, 1e23],
            efficiencies: vec![0.0, 0.3],
            depth: ZetaDepth::Converged,
            plateau_slope: 0.05,
        }
    }
}

impl Fig4Spec {
    fn grid(&self) -> Result<Vec<f64>> {
        positive("q_min", self.q_min)?;
        if !(self.q_min < self.q_max) {
            return Err(Error::invalid("q_max", "must exceed q_min"));
        }
        self.physical.validate()?;
        Ok(log_grid(self.q_min.log10(), self.q_max.log10(), self.points_per_decade.max(1)))
    }

    /// Trap frequency in cycles per second, used for `Q` and the breakdown.
    pub fn f2(&self) -> f64 {
        self.physical.omega2 / (2.0 * PI)
    }

    fn n_bar(&self) -> f64 {
        self.physical.occupation_at(self.physical.omega2)
    }

    fn breakdown(&self, q: f64, recoil: f64) -> crate::noise::NoiseBreakdown {
        let rates = Rates::from_quality_factor(q, self.physical.omega2, recoil);
        noise_breakdown(
            UnitSystem::Si,
            self.physical.mass,
            self.physical.chamber_temperature,
            self.f2(),
            self.n_bar(),
            &rates,
        )
    }

    /// `Q` at which recoil and collisional momentum noise are equal.
    pub fn crossover_q(&self, recoil: f64) -> f64 {
        let b = self.breakdown(1.0, recoil);
        b.d2_gamma / b.d2_recoil
    }

    pub fn setup(&self, q: f64, recoil: f64, efficiency: f64) -> Result<Setup> {
        let p = PhysicalParams {
            efficiency,
            ..self.physical.clone()
        };
        Setup::si(&p, &Rates::from_quality_factor(q, p.omega2, recoil))
    }
}

fn tag(recoil: f64, eta: f64) -> String {
    format!("Lambda{recoil:e}_eta{eta}")
}

fn breakdown_columns(ds: &mut Dataset, spec: &Fig4Spec, grid: &[f64]) {
    ds.push("Q", grid.to_vec());
    ds.push("gamma", grid.iter().map(|&q| spec.f2() / q).collect());
    ds.push("d2_gamma", grid.iter().map(|&q| spec.breakdown(q, 0.0).d2_gamma).collect());
    ds.push("d2_lambda", grid.iter().map(|&q| spec.breakdown(q, 0.0).d2_lambda).collect());
    for &r in &spec.recoils {
        ds.push(&format!("d2_Lambda_{r:e}"), vec![spec.breakdown(1.0, r).d2_recoil; grid.len()]);
    }
    for &r in &spec.recoils {
        ds.summarize_number(&format!("crossover_q_Lambda{r:e}"), spec.crossover_q(r));
    }
    ds.note("Q = f2 / gamma with f2 = omega2 / 2pi and lambda = gamma; breakdown columns evaluated at f2");
}

/// Momentum-noise contributions against the quality factor.
pub fn fig4a(spec: &Fig4Spec, seed: Option<u64>) -> Result<Dataset> {
    let grid = spec.grid()?;
    let mut ds = Dataset::new("fig4a", "momentum diffusion contributions against quality factor", to_params(spec)?, seed);
    breakdown_columns(&mut ds, spec, &grid);
    Ok(ds)
}

/// Smallest grid `Q` after which `|d log ζ / d log Q|` stays below `slope`.
fn plateau_onset(q: &[f64], zeta: &[f64], slope: f64) -> f64 {
    let mut onset = f64::NAN;
    for k in (1..q.len()).rev() {
        let s = (zeta[k].ln() - zeta[k - 1].ln()) / (q[k].ln() - q[k - 1].ln());
        if s.abs() < slope {
            onset = q[k - 1];
        } else {
            break;
        }
    }
    onset
}

/// Squeezing ratio against the quality factor for every recoil/efficiency pair.
pub fn fig4b(spec: &Fig4Spec, seed: Option<u64>) -> Result<Dataset> {
    let grid = spec.grid()?;
    let combos: Vec<(f64, f64)> = spec
        .efficiencies
        .iter()
        .flat_map(|&e| spec.recoils.iter().map(move |&r| (r, e)))
        .collect();
    let rows: Vec<(Vec<f64>, Vec<f64>)> = grid
        .par_iter()
        .map(|&q| {
            let zeta0 = spec
                .recoils
                .iter()
                .map(|&r| spec.setup(q, r, 0.0)?.zeta_initial())
                .collect::<Result<Vec<_>>>()?;
            let zeta = combos
                .iter()
                .map(|&(r, e)| {
                    let s = spec.setup(q, r, e)?;
                    s.zeta(s.measured_kind(), spec.depth)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((zeta0, zeta))
        })
        .collect::<Result<_>>()?;

    let mut ds = Dataset::new("fig4b", "squeezing ratio against quality factor", to_params(spec)?, seed);
    breakdown_columns(&mut ds, spec, &grid);
    for (i, r) in spec.recoils.iter().enumerate() {
        ds.push(&format!("zeta0_Lambda{r:e}"), rows.iter().map(|x| x.0[i]).collect());
    }
    for (j, &(r, e)) in combos.iter().enumerate() {
        let zeta: Vec<f64> = rows.iter().map(|x| x.1[j]).collect();
        let i = spec.recoils.iter().position(|x| *x == r).expect("recoil from list");
        let classes: Vec<f64> = rows
            .iter()
            .zip(&zeta)
            .map(|(x, z)| class_code(classify(*z, x.0[i])))
            .collect();
        let t = tag(r, e);
        ds.summarize_number(&format!("zeta_{t}_at_q_max"), *zeta.last().expect("non-empty grid"));
        ds.summarize_number(&format!("plateau_onset_{t}"), plateau_onset(&grid, &zeta, spec.plateau_slope));
        ds.push(&format!("zeta_{t}"), zeta);
        ds.push(&format!("class_{t}"), classes);
    }
    ds.summarize("depth", spec.depth.label());
    match spec.depth {
        ZetaDepth::Converged => ds.note("zeta at the protocol fixed point; for eta = 0 the xx entry of the saddle fixed point"),
        ZetaDepth::OneCycle => ds.note("zeta after one protocol cycle from the omega2 steady state of the same dynamics"),
    }
    ds.note("class codes: 0 squeezed (zeta < 1), 1 squashed (zeta < zeta0), 2 neither");
    ds.note("plateau onset: smallest Q beyond which |dln zeta / dln Q| < plateau_slope");
    Ok(ds)
}

// ---------------------------------------------------------------- scenario

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSpec {
    pub physical: PhysicalParams,
    /// `γ = λ` [1/s].
    pub gamma: f64,
    pub best_recoil: f64,
    pub worst_recoil: f64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec {
            physical: PhysicalParams::default(),
            gamma: 1e-6,
            best_recoil: 1e23,
            worst_recoil: 1e26,
        }
    }
}

/// Initial variance, ground-state variance and initial ratio for the best
/// (row 0) and worst (row 1) recoil scenario.
pub fn scenario_table(spec: &ScenarioSpec, seed: Option<u64>) -> Result<Dataset> {
    positive("gamma", spec.gamma)?;
    const NM2: f64 = 1e-18;
    let mut rows = Vec::new();
    for recoil in [spec.best_recoil, spec.worst_recoil] {
        let rates = Rates {
            gamma: spec.gamma,
            lambda: spec.gamma,
            recoil,
        };
        let s = Setup::si(&spec.physical, &rates)?;
        let x = s.x_omega2()?.xx;
        rows.push([recoil, x / NM2, s.sigma_g() / NM2, s.ratio(x)]);
    }
    let mut ds = Dataset::new("scenario", "best and worst recoil scenarios", to_params(spec)?, seed);
    let names = ["recoil", "x_omega2_xx_nm2", "sigma_g_nm2", "zeta0"];
    for (j, name) in names.iter().enumerate() {
        ds.push(name, rows.iter().map(|r| r[j]).collect());
    }
    ds.summarize_number("best_x_omega2_xx_nm2", rows[0][1]);
    ds.summarize_number("sigma_g_nm2", rows[0][2]);
    ds.summarize_number("best_zeta0", rows[0][3]);
    ds.summarize_number("worst_zeta0", rows[1][3]);
    ds.note("row 0: best scenario, row 1: worst scenario");
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn num(ds: &Dataset, key: &str) -> f64 {
        ds.metadata.summary[key].as_f64().unwrap_or(f64::NAN)
    }

    #[test]
    fn figure_ids_round_trip() {
        for id in FigureId::ALL {
            assert_eq!(id.as_str().parse::<FigureId>().unwrap(), id);
        }
        assert!("fig5".parse::<FigureId>().is_err());
    }

    #[test]
    fn overrides_merge_and_reject_unknown_keys() {
        let s: Fig4Spec = spec_with(&json!({"physical": {"mass": 2e-18}, "q_min": 1e6})).unwrap();
        assert_eq!(s.physical.mass, 2e-18);
        assert_eq!(s.physical.radius, PhysicalParams::default().radius);
        assert_eq!(s.q_min, 1e6);
        let e = spec_with::<Fig2Spec>(&json!({"a3": 1.0})).unwrap_err();
        assert!(e.to_string().contains("a3"));
    }

    #[test]
    fn fig2_threshold_and_measured_column() {
        let ds = fig2(&Fig2Spec::default(), None).unwrap();
        let root = num(&ds, "threshold_a1");
        assert!((root - 0.39).abs() < 0.01, "{root}");
        assert!((num(&ds, "threshold_a1_spectral") - root).abs() < 2e-4);
        assert!(ds.column("asymptotic_pp_riccati").unwrap().iter().all(|v| v.is_finite()));
        let a1 = ds.column("a1").unwrap();
        let pl = ds.column("asymptotic_pp_langevin").unwrap();
        for (a, p) in a1.iter().zip(pl) {
            if (a - root).abs() > 1e-3 {
                assert_eq!(p.is_finite(), *a > root, "{a}");
            }
        }
    }

    #[test]
    fn fig3a_reference_lines() {
        let ds = fig3a(&Fig3Spec::default(), None).unwrap();
        let x_inf = num(&ds, "x_inf");
        assert_eq!(x_inf, 0.125);
        assert!((num(&ds, "sigma_g") - 1.0 / (3.0 * PI)).abs() < 1e-15);
        let b0 = ds.column("xx_b0").unwrap();
        assert!(b0.windows(2).all(|w| w[1] <= w[0]));
        assert!(b0.iter().all(|x| *x > x_inf));
        let b5 = ds.column("xx_b5").unwrap();
        assert!(b5.iter().zip(b0).all(|(m, u)| m < u));
    }

    #[test]
    fn fig3b_ordering_and_zero_cycles() {
        let ds = fig3b(&Fig3bSpec::default(), None).unwrap();
        assert_eq!(ds.metadata.summary["ordering_holds"], json!(true));
        let t = ds.column("time").unwrap();
        assert!(t.windows(2).all(|w| w[1] > w[0]));
        let spec = Fig3bSpec {
            cycles: 0,
            ..Fig3bSpec::default()
        };
        let ds0 = fig3b(&spec, None).unwrap();
        assert_eq!(ds0.rows(), spec.equilibration_samples + 1);
    }

    #[test]
    fn fig3c_border_moves_with_backaction() {
        let spec = Fig3cSpec {
            a_points: 12,
            d_points: 6,
            ..Fig3cSpec::default()
        };
        let ds = fig3c(&spec, None).unwrap();
        let r0 = ds.column("ratio_b0").unwrap();
        let r5 = ds.column("ratio_b5").unwrap();
        assert!(r5.iter().zip(r0).all(|(m, u)| m <= u));
        let slices = |key: &str| -> Vec<f64> {
            ds.metadata.summary[key]
                .as_array()
                .unwrap()
                .iter()
                .map(|p| p[1].as_f64().unwrap_or(f64::INFINITY))
                .collect()
        };
        let (b0, b5) = (slices("border_b0"), slices("border_b5"));
        assert!(b5.iter().zip(&b0).all(|(m, u)| m <= u), "{b5:?} {b0:?}");
        assert!(b0.iter().any(|v| v.is_finite()) && b0.iter().any(|v| v.is_infinite()));
    }

    #[test]
    fn border_interpolates() {
        let a = [0.0, 1.0, 2.0];
        assert!((border(&a, &[2.0, 1.5, 0.5]) - 1.5).abs() < 1e-15);
        assert!(border(&a, &[2.0, 2.0, 2.0]).is_nan());
        assert!(border(&a, &[0.5, 2.0, 0.5]) > 1.0);
        assert_eq!(border(&a, &[0.5, 0.4, 0.3]), 0.0);
        assert!(border(&a, &[0.5, 0.4, 1.3]).is_nan());
    }

    #[test]
    fn plateau_detection() {
        let q = [1.0, 10.0, 100.0, 1000.0];
        let z = [100.0, 10.0, 9.9, 9.9];
        assert_eq!(plateau_onset(&q, &z, 0.05), 10.0);
    }

    #[test]
    fn scenario_numbers() {
        let ds = scenario_table(&ScenarioSpec::default(), None).unwrap();
        assert!((num(&ds, "sigma_g_nm2") / 8.4e-5 - 1.0).abs() < 0.02);
        assert!((num(&ds, "best_x_omega2_xx_nm2") / 3.1e3 - 1.0).abs() < 0.1);
        assert!(num(&ds, "worst_zeta0") > num(&ds, "best_zeta0"));
    }

    #[test]
    fn fig4_small_grid() {
        let spec = Fig4Spec {
            q_min: 1e11,
            q_max: 1e12,
            points_per_decade: 2,
            ..Fig4Spec::default()
        };
        let ds = fig4b(&spec, Some(7)).unwrap();
        assert_eq!(ds.rows(), 3);
        let z = num(&ds, "zeta_Lambda1e26_eta0_at_q_max");
        assert!((z - 0.58).abs() < 0.03, "{z}");
        let q = num(&ds, "crossover_q_Lambda1e26");
        assert!(q > 1e8 / 3.0 && q < 3e8, "{q}");
        for c in ds.columns.iter().filter(|c| c.name.starts_with("zeta")) {
            assert!(c.values.iter().all(|v| *v > 0.0));
        }
        let a = fig4a(&spec, None).unwrap();
        assert_eq!(a.column("d2_gamma"), ds.column("d2_gamma"));
    }
}

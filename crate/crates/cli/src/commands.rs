use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context as _, Result};
use clap::{Args, ValueEnum};
use levisqueeze::experiments::{
    protocol_trace, run_figure, sweep, Dataset, FigureId, OutputFormat, Setup, SweepSpec, TraceSpec,
};
use levisqueeze::noise::{noise_breakdown, DynamicsCoefficients, UnitSystem};
use levisqueeze::propagate::stochastic::{run_ensemble, EnsembleSpec};
use levisqueeze::propagate::{lyapunov_propagate, GaussianState, SegmentFlow};
use levisqueeze::protocol::{CycleKind, ProtocolAsymptote};
use levisqueeze::Mat2;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::{DivergentError, UsageError};

/// Resolved global options.
pub struct Context {
    pub config: RunConfig,
    pub mode: UnitSystem,
    pub seed: Option<u64>,
    pub format: OutputFormat,
    pub out: PathBuf,
}

impl Context {
    fn setup(&self) -> Result<Setup> {
        self.config.setup(self.mode)
    }

    fn emit(&self, ds: &Dataset) -> Result<()> {
        let paths = ds
            .write(&self.out, self.format)
            .with_context(|| format!("writing {} to {}", ds.id, self.out.display()))?;
        for p in paths {
            println!("wrote {}", p.display());
        }
        Ok(())
    }

    fn parameters(&self, extra: Value) -> Value {
        json!({
            "mode": self.mode,
            "config": self.config,
            "command": extra,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    /// Measured dynamics when the backaction is nonzero.
    Auto,
    Langevin,
    Riccati,
}

impl KindArg {
    fn resolve(self, setup: &Setup) -> CycleKind {
        match self {
            KindArg::Auto => setup.measured_kind(),
            KindArg::Langevin => CycleKind::Langevin,
            KindArg::Riccati => CycleKind::Riccati,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SegmentArg {
    Low,
    High,
}

// ------------------------------------------------------------------ coeffs

#[derive(Debug, Args)]
pub struct CoeffsArgs {
    /// Print machine-readable JSON instead of the table.
    #[arg(long)]
    pub json: bool,
}

fn row(name: &str, c: &DynamicsCoefficients) -> String {
    format!(
        "{name:<6} {:>13.6e} {:>13.6e} {:>13.6e} {:>13.6e} {:>13.6e} {:>13.6e}",
        c.omega, c.a1, c.a2, c.d1, c.d2, c.b
    )
}

pub fn coeffs(ctx: &Context, args: &CoeffsArgs) -> Result<()> {
    let s = ctx.setup()?;
    let breakdowns = match ctx.mode {
        UnitSystem::Natural => None,
        UnitSystem::Si => {
            let p = ctx.config.physical();
            let rates = ctx.config.rates(&p);
            let n_bar = p.occupation_at(p.omega2);
            let at = |w: f64| noise_breakdown(UnitSystem::Si, p.mass, p.chamber_temperature, w, n_bar, &rates);
            let f2 = p.omega2 / (2.0 * std::f64::consts::PI);
            Some((rates, at(p.omega2), at(f2)))
        }
    };
    if args.json {
        let mut out = json!({
            "mode": ctx.mode,
            "low": s.c1,
            "high": s.c2,
            "sigma_g": s.sigma_g(),
        });
        if let Some((rates, angular, cycles)) = &breakdowns {
            out["rates"] = json!(rates);
            out["breakdown"] = json!(angular);
            out["breakdown_f2"] = json!(cycles);
        }
        println!("{}", serde_json::to_string_pretty(&out)?);
        return Ok(());
    }
    println!("mode: {}", serde_json::to_value(ctx.mode)?.as_str().unwrap_or("?"));
    println!(
        "{:<6} {:>13} {:>13} {:>13} {:>13} {:>13} {:>13}",
        "", "omega", "a1", "a2", "d1", "d2", "b"
    );
    println!("{}", row("low", &s.c1));
    println!("{}", row("high", &s.c2));
    println!("ground-state variance at omega2: {:.6e}", s.sigma_g());
    if let Some((rates, angular, cycles)) = breakdowns {
        println!(
            "rates: gamma={:.4e} lambda={:.4e} recoil={:.4e}",
            rates.gamma, rates.lambda, rates.recoil
        );
        println!("d2 components      {:>13} {:>13} {:>13} {:>13}", "d2_gamma", "d2_lambda", "d2_lambda/2n", "d2_Lambda");
        for (label, b) in [("omega2 [rad/s]", angular), ("f2 [1/s]", cycles)] {
            println!(
                "  {label:<16} {:>13.4e} {:>13.4e} {:>13.4e} {:>13.4e}",
                b.d2_gamma, b.d2_lambda, b.d2_lambda_half, b.d2_recoil
            );
        }
    }
    Ok(())
}

// --------------------------------------------------------------- propagate

#[derive(Debug, Args)]
pub struct PropagateArgs {
    /// Total propagation time.
    #[arg(long, default_value_t = 1.0)]
    pub time: f64,
    /// Number of equally spaced output samples.
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    /// Trap frequency held during the propagation.
    #[arg(long, value_enum, default_value_t = SegmentArg::High)]
    pub segment: SegmentArg,
    #[arg(long, value_enum, default_value_t = KindArg::Auto)]
    pub kind: KindArg,
    /// Also simulate this many conditional-mean trajectories.
    #[arg(long, default_value_t = 0)]
    pub trajectories: usize,
    /// Euler–Maruyama step for the trajectories.
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
}

pub fn propagate(ctx: &Context, args: &PropagateArgs) -> Result<()> {
    if !(args.time > 0.0 && args.time.is_finite()) || args.samples == 0 {
        bail!(UsageError("--time must be > 0 and --samples >= 1".into()));
    }
    let s = ctx.setup()?;
    let c = match args.segment {
        SegmentArg::Low => s.c1,
        SegmentArg::High => s.c2,
    };
    let kind = args.kind.resolve(&s);
    let (a, d, b) = c.matrices();
    let b = if kind == CycleKind::Langevin { Mat2::ZERO } else { b };
    let sigma0 = ctx.config.initial(&s);
    let dt = args.time / args.samples as f64;
    let flow = SegmentFlow::new(&a, &d, &b, dt)?;
    let mut path = vec![sigma0];
    for k in 0..args.samples {
        path.push(flow.apply(&path[k])?);
    }

    let mut ds = Dataset::new(
        "propagate",
        "covariance at fixed trap frequency",
        ctx.parameters(json!({
            "time": args.time,
            "samples": args.samples,
            "segment": format!("{:?}", args.segment).to_lowercase(),
            "kind": kind,
        })),
        ctx.seed,
    );
    ds.push("time", (0..=args.samples).map(|k| k as f64 * dt).collect());
    ds.push("xx", path.iter().map(|x| x.xx).collect());
    ds.push("xp", path.iter().map(|x| x.xp).collect());
    ds.push("pp", path.iter().map(|x| x.pp).collect());
    let last = path[args.samples];
    ds.summarize_number("final_xx", last.xx);
    ds.summarize_number("final_xp", last.xp);
    ds.summarize_number("final_pp", last.pp);
    println!(
        "t={:.6e}: xx={:.6e} xp={:.6e} pp={:.6e}",
        args.time, last.xx, last.xp, last.pp
    );

    if args.trajectories > 0 {
        let steps = (args.time / args.dt).round().max(1.0) as usize;
        let spec = EnsembleSpec {
            trajectories: args.trajectories,
            steps,
            dt: args.time / steps as f64,
            seed: ctx.seed.unwrap_or(0),
            initial: GaussianState::centered(sigma0),
        };
        let e = run_ensemble(&spec, &a, &d, &b)?;
        let unconditional = lyapunov_propagate(&sigma0, &a, &d, spec.steps as f64 * spec.dt);
        let total = e.total();
        println!(
            "ensemble of {}: spread xx={:.6e}, conditional xx={:.6e}, total xx={:.6e}, unconditional xx={:.6e}",
            e.trajectories, e.mean_spread.xx, e.conditional.xx, total.xx, unconditional.xx
        );
        ds.summarize_number("ensemble_total_xx", total.xx);
        ds.summarize_number("ensemble_total_pp", total.pp);
        ds.summarize_number("unconditional_xx", unconditional.xx);
        ds.summarize_number("unconditional_pp", unconditional.pp);
    }
    ctx.emit(&ds)
}

// ---------------------------------------------------------------- protocol

#[derive(Debug, Args)]
pub struct ProtocolArgs {
    /// Protocol cycles after equilibration (overrides the config).
    #[arg(long)]
    pub cycles: Option<usize>,
    #[arg(long, value_enum, default_value_t = KindArg::Auto)]
    pub kind: KindArg,
}

pub fn protocol(ctx: &Context, args: &ProtocolArgs) -> Result<()> {
    let s = ctx.setup()?;
    let kind = args.kind.resolve(&s);
    let cfg = &ctx.config;
    let spec = TraceSpec {
        initial: cfg.initial(&s),
        equilibration_time: cfg.initial.equilibration_time,
        equilibration_samples: cfg.initial.equilibration_samples,
        cycles: args.cycles.unwrap_or(cfg.protocol.cycles),
        samples_per_segment: cfg.protocol.samples_per_segment,
    };
    let trace = protocol_trace(&s, kind, &spec)?;
    let mut ds = Dataset::new(
        "protocol",
        "equilibration at omega2 followed by the squeezing protocol",
        ctx.parameters(json!({ "kind": kind, "trace": spec })),
        ctx.seed,
    );
    ds.push("time", trace.iter().map(|p| p.0).collect());
    ds.push("xx", trace.iter().map(|p| p.1.xx).collect());
    ds.push("xp", trace.iter().map(|p| p.1.xp).collect());
    ds.push("pp", trace.iter().map(|p| p.1.pp).collect());
    let (t_end, last) = *trace.last().expect("trace holds the initial state");
    ds.summarize_number("sigma_g", s.sigma_g());
    ds.summarize_number("final_xx", last.xx);
    println!(
        "t={t_end:.6e}: xx={:.6e} pp={:.6e} (sigma_g={:.6e}, zeta={:.6e})",
        last.xx,
        last.pp,
        s.sigma_g(),
        s.ratio(last.xx)
    );

    let asymptote = s.asymptote(kind)?;
    match asymptote {
        ProtocolAsymptote::Converged { state, .. } => {
            ds.summarize_number("asymptote_xx", state.xx);
            ds.summarize_number("asymptote_pp", state.pp);
            ds.summarize("divergent", false);
            println!(
                "asymptote: xx={:.6e} pp={:.6e} zeta={:.6e}",
                state.xx,
                state.pp,
                s.ratio(state.xx)
            );
            ctx.emit(&ds)
        }
        ProtocolAsymptote::Divergent { spectral_radius, .. } => {
            ds.summarize("divergent", true);
            ds.summarize_number("spectral_radius", spectral_radius);
            ctx.emit(&ds)?;
            Err(DivergentError(format!(
                "protocol asymptote diverges (cycle-map spectral radius {spectral_radius:.6})"
            ))
            .into())
        }
    }
}

// ------------------------------------------------------------------ figure

#[derive(Debug, Args)]
pub struct FigureArgs {
    /// fig2, fig3a, fig3b, fig3c, fig4a, fig4b or scenario.
    pub id: String,
    /// Override a spec entry, e.g. `--set points=51` or `--set physical.mass=2e-18`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

/// `a.b=v` pairs to a nested JSON object; values are JSON when they parse.
pub fn overrides(pairs: &[String]) -> Result<Value> {
    let mut root = json!({});
    for pair in pairs {
        let Some((key, raw)) = pair.split_once('=') else {
            bail!(UsageError(format!("override `{pair}` is not KEY=VALUE")));
        };
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let mut slot = &mut root;
        let parts: Vec<&str> = key.split('.').collect();
        for (i, part) in parts.iter().enumerate() {
            if part.is_empty() {
                bail!(UsageError(format!("override key `{key}` has an empty segment")));
            }
            let obj = slot
                .as_object_mut()
                .ok_or_else(|| UsageError(format!("override key `{key}` conflicts with another override")))?;
            if i + 1 == parts.len() {
                obj.insert(part.to_string(), value.clone());
                break;
            }
            slot = obj.entry(part.to_string()).or_insert_with(|| json!({}));
        }
    }
    Ok(root)
}

fn number(ds: &Dataset, key: &str) -> f64 {
    ds.metadata.summary.get(key).and_then(Value::as_f64).unwrap_or(f64::NAN)
}

fn summary_line(id: FigureId, ds: &Dataset) -> String {
    match id {
        FigureId::Fig2 => format!(
            "a1*={:.4} (bisection tolerance 1e-4; spectral-radius boundary {:.4})",
            number(ds, "threshold_a1"),
            number(ds, "threshold_a1_spectral")
        ),
        FigureId::Fig3a => format!(
            "sigma_g={:.4} x_inf={:.4}",
            number(ds, "sigma_g"),
            number(ds, "x_inf")
        ),
        FigureId::Fig3b => format!(
            "xx asymptotes: riccati={:.4} langevin={:.4} sigma_g={:.4} ordering_holds={}",
            number(ds, "asymptote_xx_riccati"),
            number(ds, "asymptote_xx_langevin"),
            number(ds, "sigma_g"),
            ds.metadata.summary["ordering_holds"]
        ),
        FigureId::Fig3c => {
            let borders: Vec<String> = ds
                .metadata
                .summary
                .iter()
                .filter(|(k, _)| k.starts_with("border_"))
                .map(|(k, v)| {
                    let n = v.as_array().map_or(0, |a| a.iter().filter(|p| !p[1].is_null()).count());
                    format!("{k}: {n} slices")
                })
                .collect();
            borders.join(", ")
        }
        FigureId::Fig4a | FigureId::Fig4b => {
            let mut parts: Vec<String> = ds
                .metadata
                .summary
                .iter()
                .filter(|(k, _)| k.starts_with("crossover_q_"))
                .map(|(k, v)| format!("{k}={:.3e}", v.as_f64().unwrap_or(f64::NAN)))
                .collect();
            if id == FigureId::Fig4b {
                let q = ds.column("Q").and_then(|c| c.last().copied()).unwrap_or(f64::NAN);
                for (k, v) in &ds.metadata.summary {
                    if let Some(tag) = k.strip_prefix("zeta_").and_then(|t| t.strip_suffix("_at_q_max")) {
                        parts.push(format!("zeta(Q={q:.0e}, {tag})={:.4}", v.as_f64().unwrap_or(f64::NAN)));
                    }
                }
            }
            parts.join(", ")
        }
        FigureId::Scenario => format!(
            "sigma_g={:.3e} nm2, best X_xx={:.4e} nm2, zeta0 best={:.3e} worst={:.3e}",
            number(ds, "sigma_g_nm2"),
            number(ds, "best_x_omega2_xx_nm2"),
            number(ds, "best_zeta0"),
            number(ds, "worst_zeta0")
        ),
    }
}

pub fn figure(ctx: &Context, args: &FigureArgs) -> Result<()> {
    let id: FigureId = args.id.parse().map_err(|e: levisqueeze::Error| UsageError(e.to_string()))?;
    let ds = run_figure(id, &overrides(&args.set)?, ctx.seed)?;
    ctx.emit(&ds)?;
    println!("{id}: {}", summary_line(id, &ds));
    Ok(())
}

// ------------------------------------------------------------------- sweep

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Sweep spec file (TOML or JSON); the flags below are ignored when given.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub variable: Option<String>,
    /// Explicit grid, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub grid: Vec<f64>,
    /// `LO,HI,N`: N equally spaced values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub linspace: Vec<f64>,
    /// `LO,HI,N`: N logarithmically spaced values.
    #[arg(long, value_delimiter = ',')]
    pub logspace: Vec<f64>,
    /// Observables, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub output: Vec<String>,
    /// Fixed parameter `NAME=VALUE`.
    #[arg(long = "fix", value_name = "NAME=VALUE")]
    pub fix: Vec<String>,
}

fn spaced(v: &[f64], log: bool) -> Result<Vec<f64>> {
    let &[lo, hi, n] = v else {
        bail!(UsageError("grid spacing takes exactly LO,HI,N".into()));
    };
    if !(n >= 2.0 && n.fract() == 0.0) {
        bail!(UsageError("grid size N must be an integer >= 2".into()));
    }
    let n = n as usize;
    if log {
        if !(lo > 0.0 && hi > 0.0) {
            bail!(UsageError("--logspace bounds must be > 0".into()));
        }
        let (l, h) = (lo.log10(), hi.log10());
        Ok((0..n).map(|k| 10f64.powf(l + (h - l) * k as f64 / (n - 1) as f64)).collect())
    } else {
        Ok(levisqueeze::experiments::linear_grid(lo, hi, n))
    }
}

fn sweep_spec(ctx: &Context, args: &SweepArgs) -> Result<SweepSpec> {
    if let Some(path) = &args.spec {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read sweep spec {}: {e}", path.display())))?;
        let mut spec: SweepSpec = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        } else {
            toml::from_str(&text).map_err(|e| e.to_string())
        }
        .map_err(|e| UsageError(format!("invalid sweep spec {}: {e}", path.display())))?;
        spec.mode = ctx.mode;
        return Ok(spec);
    }
    let variable = args
        .variable
        .clone()
        .ok_or_else(|| UsageError("sweep needs --spec or --variable".into()))?;
    let grid = match (args.grid.is_empty(), args.linspace.is_empty(), args.logspace.is_empty()) {
        (false, true, true) => args.grid.clone(),
        (true, false, true) => spaced(&args.linspace, false)?,
        (true, true, false) => spaced(&args.logspace, true)?,
        _ => bail!(UsageError("give exactly one of --grid, --linspace, --logspace".into())),
    };
    let mut fixed = BTreeMap::new();
    for pair in &args.fix {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| UsageError(format!("--fix `{pair}` is not NAME=VALUE")))?;
        let v: f64 = v
            .parse()
            .map_err(|_| UsageError(format!("--fix `{k}`: `{v}` is not a number")))?;
        fixed.insert(k.to_string(), v);
    }
    Ok(SweepSpec {
        variable,
        grid,
        fixed,
        mode: ctx.mode,
        outputs: args.output.clone(),
    })
}

pub fn run_sweep(ctx: &Context, args: &SweepArgs) -> Result<()> {
    let spec = sweep_spec(ctx, args)?;
    let ds = sweep(&spec, ctx.seed)?;
    ctx.emit(&ds)?;
    println!("sweep over {} ({} points): {}", spec.variable, ds.rows(), spec.outputs.join(", "));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_overrides() {
        let v = overrides(&[
            "physical.mass=2e-18".into(),
            "physical.radius=4e-8".into(),
            "depth=one_cycle".into(),
            "recoils=[1e25]".into(),
        ])
        .unwrap();
        assert_eq!(v["physical"]["mass"], json!(2e-18));
        assert_eq!(v["physical"]["radius"], json!(4e-8));
        assert_eq!(v["depth"], json!("one_cycle"));
        assert_eq!(v["recoils"], json!([1e25]));
        assert!(overrides(&["novalue".into()]).is_err());
        assert!(overrides(&["a..b=1".into()]).is_err());
    }

    #[test]
    fn spacing() {
        assert_eq!(spaced(&[1.0, 100.0, 3.0], true).unwrap(), vec![1.0, 10.0, 100.0]);
        assert_eq!(spaced(&[0.0, 1.0, 3.0], false).unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(spaced(&[0.0, 1.0, 2.5], false).is_err());
        assert!(spaced(&[0.0, 1.0, 3.0], true).is_err());
        assert!(spaced(&[0.0, 1.0], false).is_err());
    }
}

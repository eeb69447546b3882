//! Conditional-mean trajectories under continuous measurement.
//!
//! The covariance is deterministic and follows the Riccati flow exactly;
//! only the mean needs an SDE scheme. Euler–Maruyama:
//!
//! `r_{k+1} = r_k + A r_k dt + σ_k B dW_k`,  `dW_k ~ N(0, dt·I₂)`.
//!
//! The innovation gain `σB` makes `E[d r d rᵀ] = σ BBᵀ σ dt`, exactly the
//! variance the Riccati term removes from `σ`, so the spread of the means
//! plus the conditional covariance reproduces the unmeasured (Lyapunov)
//! covariance.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Mat2, SymMat2};
use crate::propagate::{GaussianState, SegmentFlow};

/// Euler–Maruyama update of the mean with the covariance at the start of
/// the step.
pub fn mean_update(mean: [f64; 2], cov: &SymMat2, a: &Mat2, b: &Mat2, dw: [f64; 2], dt: f64) -> [f64; 2] {
    let drift = *a * mean;
    let kick = (cov.to_mat2() * *b) * dw;
    [
        mean[0] + drift[0] * dt + kick[0],
        mean[1] + drift[1] * dt + kick[1],
    ]
}

/// One stochastic step: mean by Euler–Maruyama, covariance by the exact
/// Riccati flow over `dt`.
pub fn conditional_mean_step(
    state: &GaussianState,
    a: &Mat2,
    d: &SymMat2,
    b: &Mat2,
    dw: [f64; 2],
    dt: f64,
) -> Result<GaussianState> {
    if !(dt > 0.0) {
        return Err(Error::invalid("dt", "must be > 0"));
    }
    let cov = SegmentFlow::new(a, d, b, dt)?.apply(&state.cov)?;
    Ok(GaussianState::new(
        mean_update(state.mean, &state.cov, a, b, dw, dt),
        cov,
        state.time + dt,
    ))
}

/// Covariances at `k·dt`, `k = 0..=steps`.
pub fn covariance_path(
    sigma0: &SymMat2,
    a: &Mat2,
    d: &SymMat2,
    b: &Mat2,
    dt: f64,
    steps: usize,
) -> Result<Vec<SymMat2>> {
    let flow = SegmentFlow::new(a, d, b, dt)?;
    let mut path = Vec::with_capacity(steps + 1);
    path.push(*sigma0);
    for k in 0..steps {
        let next = flow.apply(&path[k])?;
        path.push(next);
    }
    Ok(path)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub trajectories: usize,
    pub steps: usize,
    pub dt: f64,
    pub seed: u64,
    pub initial: GaussianState,
}

/// Independent stream for trajectory `index` of a run seeded with `seed`.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn normal_pair(rng: &mut ChaCha8Rng, sqrt_dt: f64) -> [f64; 2] {
    let z0: f64 = StandardNormal.sample(rng);
    let z1: f64 = StandardNormal.sample(rng);
    [z0 * sqrt_dt, z1 * sqrt_dt]
}

/// Full trajectory `index`, states at every step.
pub fn simulate_trajectory(
    spec: &EnsembleSpec,
    a: &Mat2,
    b: &Mat2,
    path: &[SymMat2],
    index: u64,
) -> Vec<GaussianState> {
    let mut rng = trajectory_rng(spec.seed, index);
    let sqrt_dt = spec.dt.sqrt();
    let mut out = Vec::with_capacity(spec.steps + 1);
    let mut mean = spec.initial.mean;
    out.push(GaussianState::new(mean, path[0], spec.initial.time));
    for k in 0..spec.steps {
        let dw = normal_pair(&mut rng, sqrt_dt);
        mean = mean_update(mean, &path[k], a, b, dw, spec.dt);
        out.push(GaussianState::new(
            mean,
            path[k + 1],
            spec.initial.time + (k + 1) as f64 * spec.dt,
        ));
    }
    out
}

fn final_mean(spec: &EnsembleSpec, a: &Mat2, b: &Mat2, path: &[SymMat2], index: u64) -> [f64; 2] {
    let mut rng = trajectory_rng(spec.seed, index);
    let sqrt_dt = spec.dt.sqrt();
    let mut mean = spec.initial.mean;
    for cov in &path[..spec.steps] {
        let dw = normal_pair(&mut rng, sqrt_dt);
        mean = mean_update(mean, cov, a, b, dw, spec.dt);
    }
    mean
}

/// Statistics of an ensemble at its final time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub trajectories: usize,
    pub time: f64,
    /// Ensemble average of the conditional means.
    pub mean: [f64; 2],
    /// Sample covariance of the conditional means.
    pub mean_spread: SymMat2,
    /// Conditional covariance (identical for every trajectory).
    pub conditional: SymMat2,
}

impl EnsembleSummary {
    /// Spread of the means plus conditional covariance.
    pub fn total(&self) -> SymMat2 {
        self.mean_spread + self.conditional
    }
}

/// Runs the ensemble in parallel; the result depends only on the spec.
pub fn run_ensemble(spec: &EnsembleSpec, a: &Mat2, d: &SymMat2, b: &Mat2) -> Result<EnsembleSummary> {
    if spec.trajectories < 2 {
        return Err(Error::invalid("trajectories", "need at least 2"));
    }
    if !(spec.dt > 0.0) {
        return Err(Error::invalid("dt", "must be > 0"));
    }
    let path = covariance_path(&spec.initial.cov, a, d, b, spec.dt, spec.steps)?;
    let finals: Vec<[f64; 2]> = (0..spec.trajectories as u64)
        .into_par_iter()
        .map(|i| final_mean(spec, a, b, &path, i))
        .collect();
    let n = finals.len() as f64;
    let mx = finals.iter().map(|m| m[0]).sum::<f64>() / n;
    let mp = finals.iter().map(|m| m[1]).sum::<f64>() / n;
    let (mut sxx, mut sxp, mut spp) = (0.0, 0.0, 0.0);
    for m in &finals {
        let (dx, dp) = (m[0] - mx, m[1] - mp);
        sxx += dx * dx;
        sxp += dx * dp;
        spp += dp * dp;
    }
    let k = 1.0 / (n - 1.0);
    Ok(EnsembleSummary {
        trajectories: spec.trajectories,
        time: spec.initial.time + spec.steps as f64 * spec.dt,
        mean: [mx, mp],
        mean_spread: SymMat2::new(sxx * k, sxp * k, spp * k),
        conditional: path[spec.steps],
    })
}

/// CSV dump with header `time,mean_x,mean_p,sxx,sxp,spp,seed`.
pub fn write_trajectory_csv<W: Write>(out: W, states: &[GaussianState], seed: u64) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::invalid("output", e.to_string());
    w.write_record(["time", "mean_x", "mean_p", "sxx", "sxp", "spp", "seed"])
        .map_err(io)?;
    for s in states {
        w.write_record([
            format!("{:.12e}", s.time),
            format!("{:.12e}", s.mean[0]),
            format!("{:.12e}", s.mean[1]),
            format!("{:.12e}", s.cov.xx),
            format!("{:.12e}", s.cov.xp),
            format!("{:.12e}", s.cov.pp),
            seed.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::invalid("output", e.to_string()))?;
    Ok(())
}

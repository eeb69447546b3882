//! Machine-readable datasets reproducing the figures and tables, plus a
//! generic one-parameter sweep.

mod dataset;
pub mod figures;
mod setup;
mod sweep;

pub use dataset::{Column, Dataset, Metadata, OutputFormat};
pub use figures::{
    fig2, fig3a, fig3b, fig3b_trace, fig3c, fig4a, fig4b, protocol_trace, run_figure, scenario_table,
    spec_with, Fig2Spec, Fig3Spec, Fig3bSpec, Fig3cSpec, Fig4Spec, FigureId, ScenarioSpec, TraceSpec,
    ZetaDepth,
};
pub use setup::{Setup, OBSERVABLES};
pub use sweep::{sweep, SweepSpec};

/// Version string recorded in every dataset.
pub const TOOL_VERSION: &str = concat!("levisqueeze ", env!("CARGO_PKG_VERSION"));

/// `10^x` grid from `10^lo` to `10^hi` with `per_decade` intervals per decade.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let n = ((hi - lo) * per_decade as f64).round().max(1.0) as usize;
    (0..=n)
        .map(|k| 10f64.powf(lo + (hi - lo) * k as f64 / n as f64))
        .collect()
}

/// `points` equally spaced values from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![lo];
    }
    (0..points)
        .map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64)
        .collect()
}

/// Bisection for a sign change of `f` on `[lo, hi]` down to width `tol`.
pub fn bisect(mut lo: f64, mut hi: f64, tol: f64, f: impl Fn(f64) -> f64) -> Option<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if !(flo.is_finite() && fhi.is_finite()) || flo.signum() == fhi.signum() {
        return None;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        let g = log_grid(4.0, 12.0, 200);
        assert_eq!(g.len(), 1601);
        assert_eq!(g[0], 1e4);
        assert!((g[1600] / 1e12 - 1.0).abs() < 1e-15);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(linear_grid(0.0, 1.0, 5), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn bisection() {
        let r = bisect(0.0, 2.0, 1e-6, |x| x * x - 2.0).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-6);
        assert!(bisect(0.0, 1.0, 1e-6, |x| x + 1.0).is_none());
    }
}

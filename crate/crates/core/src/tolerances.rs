//! Numerical tolerances used across the crate. Every threshold lives here.

/// Below this |q·t²| the matrix exponential uses its series branch.
pub const EXP_DEGENERATE_CUTOFF: f64 = 1e-12;

/// Relative determinant threshold for 2×2 inversion, measured against
/// `|m11·m22| + |m12·m21|`.
pub const SINGULARITY_REL: f64 = 1e-14;

/// Residual bound for continuous Lyapunov solves, relative to ‖D‖.
pub const LYAPUNOV_RESIDUAL: f64 = 1e-10;

/// Residual bound for the algebraic Riccati solve, relative to ‖D‖.
pub const CARE_RESIDUAL: f64 = 1e-9;

/// Residual bound for the discrete (Stein) solve.
pub const STEIN_RESIDUAL: f64 = 1e-10;

/// Maximum Newton–Kleinman refinement sweeps after the subspace solve.
pub const CARE_NEWTON_REFINE_STEPS: usize = 6;

/// Maximum Newton–Kleinman iterations when used as the primary route.
pub const CARE_NEWTON_MAX_ITER: usize = 200;

/// Accuracy guard for the RK4 oracle: dt times the drift rate scale.
pub const RK4_MAX_RATE_STEP: f64 = 0.1;

/// Fraction of the fastest timescale used for the default RK4 step.
pub const RK4_DEFAULT_STEP_FRACTION: f64 = 1.0 / 2000.0;

/// Relative convergence threshold for the Riccati protocol fixed point.
pub const PROTOCOL_FIXED_POINT_REL: f64 = 1e-12;

/// Iteration cap for the Riccati protocol fixed point.
pub const PROTOCOL_MAX_CYCLES: usize = 100_000;

/// Heisenberg bound slack: det σ ≥ (ħ/2)² (1 − slack).
pub const PHYSICALITY_SLACK: f64 = 1e-9;

/// Mass/radius/density consistency for physical parameters.
pub const MASS_DENSITY_REL: f64 = 0.01;

/// Bisection tolerance for threshold roots.
pub const ROOT_BISECTION: f64 = 1e-4;

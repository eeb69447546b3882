//! Fixed-step RK4 integration of `σ̇ = Aσ + σAᵀ + D − σGσ` on `(xx, xp, pp)`.
//!
//! Deliberately naive: no closed forms, no algebraic solves. It is the
//! reference every closed-form propagator is checked against.

use crate::error::{Error, Result};
use crate::linalg::{riccati_rhs, Mat2, SymMat2};
use crate::tolerances::{RK4_DEFAULT_STEP_FRACTION, RK4_MAX_RATE_STEP};

/// RK4 from `sigma0` to time `t` with steps no longer than `dt`.
pub fn ode_oracle(
    sigma0: &SymMat2,
    a: &Mat2,
    d: &SymMat2,
    g: &SymMat2,
    t: f64,
    dt: f64,
) -> Result<SymMat2> {
    ode_oracle_steps(sigma0, a, d, g, t, dt).map(|(s, _)| s)
}

/// As [`ode_oracle`], also returning the number of steps taken.
pub fn ode_oracle_steps(
    sigma0: &SymMat2,
    a: &Mat2,
    d: &SymMat2,
    g: &SymMat2,
    t: f64,
    dt: f64,
) -> Result<(SymMat2, usize)> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("dt", "must be finite and > 0"));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid("t", "must be finite and >= 0"));
    }
    let guard = dt * a.rate_scale();
    if guard > RK4_MAX_RATE_STEP {
        return Err(Error::StepTooLarge(guard));
    }
    if t == 0.0 {
        return Ok((*sigma0, 0));
    }
    let n = (t / dt).ceil().max(1.0) as usize;
    let h = t / n as f64;
    let f = |s: &SymMat2| riccati_rhs(a, s, d, g);
    let mut s = *sigma0;
    for _ in 0..n {
        let k1 = f(&s);
        let k2 = f(&(s + k1.scale(h / 2.0)));
        let k3 = f(&(s + k2.scale(h / 2.0)));
        let k4 = f(&(s + k3.scale(h)));
        s = s + (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(h / 6.0);
    }
    if !s.is_finite() {
        return Err(Error::NonFinite("ode oracle"));
    }
    Ok((s, n))
}

/// `dt = fraction · min(2π / rate(A), 1 / rate(σG))`, resolving both the
/// oscillation and the measurement contraction around the state `sigma`.
pub fn default_step(a: &Mat2, g: &SymMat2, sigma: &SymMat2) -> f64 {
    let osc = a.rate_scale();
    let meas = (sigma.to_mat2() * g.to_mat2()).rate_scale();
    let mut scale = f64::INFINITY;
    if osc > 0.0 {
        scale = scale.min(2.0 * std::f64::consts::PI / osc);
    }
    if meas > 0.0 {
        scale = scale.min(1.0 / meas);
    }
    if scale.is_finite() {
        RK4_DEFAULT_STEP_FRACTION * scale
    } else {
        1.0
    }
}

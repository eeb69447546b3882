//! Time evolution of the covariance matrix.
//!
//! Langevin (unmeasured) dynamics `σ̇ = Aσ + σAᵀ + D` and Riccati
//! (measured) dynamics `σ̇ = Aσ + σAᵀ + D − σ BBᵀ σ` are propagated in closed
//! form; [`oracle`] holds the independent RK4 integrator used to check them.

pub mod oracle;
pub mod stochastic;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    gram_of, relative_riccati_residual, solve_care_gram, solve_lyapunov, solve_x2_gram, CareRoot,
    Mat2, SymMat2,
};

pub use oracle::{default_step, ode_oracle, ode_oracle_steps};

/// Mean vector, covariance and time stamp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianState {
    /// `(⟨x⟩, ⟨p⟩)`.
    pub mean: [f64; 2],
    pub cov: SymMat2,
    pub time: f64,
}

impl GaussianState {
    pub fn new(mean: [f64; 2], cov: SymMat2, time: f64) -> Self {
        GaussianState { mean, cov, time }
    }

    pub fn centered(cov: SymMat2) -> Self {
        GaussianState::new([0.0, 0.0], cov, 0.0)
    }

    pub fn is_physical(&self, hbar: f64, slack: f64) -> bool {
        self.cov.is_physical(hbar, slack)
    }
}

/// How a propagation was carried out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `t = 0`.
    Identity,
    /// `e^{tA}(σ0 − X)e^{tAᵀ} + X`.
    LyapunovClosedForm,
    /// `D = 0`: pure congruence `e^{tA} σ0 e^{tAᵀ}`.
    Congruence,
    /// Non-Hurwitz drift with diffusion: RK4.
    Oracle,
    /// Riccati flow through the stabilizing root and its Gramian.
    RiccatiClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Relative residual of the algebraic solve behind the closed form,
    /// zero when none was needed.
    pub residual: f64,
    pub branch: Branch,
    /// RK4 steps taken (zero for closed forms).
    pub step_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationResult {
    pub state: GaussianState,
    pub diagnostics: Diagnostics,
}

/// Affine covariance map `σ ↦ F σ Fᵀ + G`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineFlow {
    pub f: Mat2,
    pub g: SymMat2,
}

impl AffineFlow {
    pub const IDENTITY: AffineFlow = AffineFlow {
        f: Mat2::IDENTITY,
        g: SymMat2::ZERO,
    };

    /// Langevin flow over time `t`. The affine part is the covariance reached
    /// from `σ0 = 0`, which makes the map exact on every branch.
    pub fn lyapunov(a: &Mat2, d: &SymMat2, t: f64) -> Self {
        AffineFlow {
            f: a.exp(t),
            g: lyapunov_propagate(&SymMat2::ZERO, a, d, t),
        }
    }

    pub fn apply(&self, sigma: &SymMat2) -> SymMat2 {
        sigma.congruence(&self.f) + self.g
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn after(&self, first: &AffineFlow) -> AffineFlow {
        AffineFlow {
            f: self.f * first.f,
            g: first.g.congruence(&self.f) + self.g,
        }
    }
}

/// Precomputed Riccati flow over a fixed time `t`.
///
/// With the stabilizing root `X1`, `𝒜 = A − X1 BBᵀ`, the Gramian-type
/// solution `X2` of `𝒜ᵀX2 + X2𝒜 − BBᵀ = 0`, `E = e^{t𝒜}` and
/// `W = EᵀX2E − X2`, the flow is
///
/// `σ_t = X1 + E Y0 (I + W Y0)⁻¹ Eᵀ`,  `Y0 = σ0 − X1`,
///
/// the rearrangement of `(σ_t − X1)⁻¹ − X2 = e^{−t𝒜ᵀ}((σ0 − X1)⁻¹ − X2)e^{−t𝒜}`
/// that needs no inverse of `σ0 − X1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiccatiFlow {
    pub x1: SymMat2,
    pub e: Mat2,
    pub w: SymMat2,
    pub t: f64,
    pub residual: f64,
}

impl RiccatiFlow {
    pub fn new(a: &Mat2, d: &SymMat2, g: &SymMat2, t: f64) -> Result<Self> {
        let care = solve_care_gram(a, d, g, CareRoot::Stabilizing)?;
        let x2 = solve_x2_gram(&care.closed_loop, g)?;
        let e = care.closed_loop.exp(t);
        let w = x2.congruence(&e.transpose()) - x2;
        Ok(RiccatiFlow {
            x1: care.x,
            e,
            w,
            t,
            residual: care.residual,
        })
    }

    pub fn apply(&self, sigma: &SymMat2) -> Result<SymMat2> {
        let y0 = *sigma - self.x1;
        if y0.is_zero() {
            return Ok(self.x1);
        }
        let m = Mat2::IDENTITY + self.w.to_mat2() * y0.to_mat2();
        let m_inv = m
            .inverse()
            .map_err(|_| Error::SingularDeltaInversion { time: self.t })?;
        let k = SymMat2::symmetric_part(&(y0.to_mat2() * m_inv));
        let out = k.congruence(&self.e) + self.x1;
        if !out.is_finite() {
            return Err(Error::NonFinite("riccati flow"));
        }
        Ok(out)
    }
}

/// One segment of piecewise-constant dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SegmentFlow {
    Affine(AffineFlow),
    Riccati(RiccatiFlow),
}

impl SegmentFlow {
    /// Riccati flow when `BBᵀ ≠ 0`, affine Langevin flow otherwise.
    pub fn new(a: &Mat2, d: &SymMat2, b: &Mat2, t: f64) -> Result<Self> {
        let g = gram_of(b);
        if g.is_zero() {
            Ok(SegmentFlow::Affine(AffineFlow::lyapunov(a, d, t)))
        } else {
            Ok(SegmentFlow::Riccati(RiccatiFlow::new(a, d, &g, t)?))
        }
    }

    pub fn apply(&self, sigma: &SymMat2) -> Result<SymMat2> {
        match self {
            SegmentFlow::Affine(f) => Ok(f.apply(sigma)),
            SegmentFlow::Riccati(f) => f.apply(sigma),
        }
    }
}

/// `σ_t` under `σ̇ = Aσ + σAᵀ + D`.
pub fn lyapunov_propagate(sigma0: &SymMat2, a: &Mat2, d: &SymMat2, t: f64) -> SymMat2 {
    lyapunov_propagate_detailed(sigma0, a, d, t).state.cov
}

pub fn lyapunov_propagate_detailed(
    sigma0: &SymMat2,
    a: &Mat2,
    d: &SymMat2,
    t: f64,
) -> PropagationResult {
    let done = |cov, branch, residual, step_count| PropagationResult {
        state: GaussianState::new([0.0, 0.0], cov, t),
        diagnostics: Diagnostics {
            residual,
            branch,
            step_count,
        },
    };
    if t == 0.0 {
        return done(*sigma0, Branch::Identity, 0.0, 0);
    }
    let e = a.exp(t);
    if d.is_zero() {
        return done(sigma0.congruence(&e), Branch::Congruence, 0.0, 0);
    }
    if let Ok(x) = solve_lyapunov(a, d) {
        let residual = relative_riccati_residual(a, &x, d, &SymMat2::ZERO);
        return done((*sigma0 - x).congruence(&e) + x, Branch::LyapunovClosedForm, residual, 0);
    }
    let dt = default_step(a, &SymMat2::ZERO, sigma0);
    let (cov, steps) = ode_oracle_steps(sigma0, a, d, &SymMat2::ZERO, t, dt)
        .expect("default step satisfies the oracle guard");
    done(cov, Branch::Oracle, 0.0, steps)
}

/// Stationary state of the Langevin dynamics.
pub fn lyapunov_asymptote(a: &Mat2, d: &SymMat2) -> Result<SymMat2> {
    solve_lyapunov(a, d)
}

/// `σ_t` under `σ̇ = Aσ + σAᵀ + D − σ BBᵀ σ`.
pub fn riccati_propagate(
    sigma0: &SymMat2,
    a: &Mat2,
    d: &SymMat2,
    b: &Mat2,
    t: f64,
) -> Result<SymMat2> {
    riccati_propagate_detailed(sigma0, a, d, b, t).map(|r| r.state.cov)
}

pub fn riccati_propagate_detailed(
    sigma0: &SymMat2,
    a: &Mat2,
    d: &SymMat2,
    b: &Mat2,
    t: f64,
) -> Result<PropagationResult> {
    let g = gram_of(b);
    if g.is_zero() {
        return Ok(lyapunov_propagate_detailed(sigma0, a, d, t));
    }
    if t == 0.0 {
        return Ok(lyapunov_propagate_detailed(sigma0, a, d, 0.0));
    }
    let flow = RiccatiFlow::new(a, d, &g, t)?;
    Ok(PropagationResult {
        state: GaussianState::new([0.0, 0.0], flow.apply(sigma0)?, t),
        diagnostics: Diagnostics {
            residual: flow.residual,
            branch: Branch::RiccatiClosedForm,
            step_count: 0,
        },
    })
}

/// Long-time limit of the Riccati dynamics: the stabilizing root `X1`.
///
/// `X1 + X2⁻¹` is the other (anti-stabilizing) root, a stationary point that
/// repels every nearby state.
pub fn riccati_asymptote(a: &Mat2, d: &SymMat2, b: &Mat2) -> Result<SymMat2> {
    let g = gram_of(b);
    if g.is_zero() {
        return lyapunov_asymptote(a, d);
    }
    Ok(solve_care_gram(a, d, &g, CareRoot::Stabilizing)?.x)
}

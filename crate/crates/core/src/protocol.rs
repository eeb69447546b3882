//! Two-frequency squeezing protocol.
//!
//! One cycle holds the trap at `ω1` for `t1 = π/(2Ω1)` and then at `ω2` for
//! `t2 = π/(2Ω2)`, where `Ωi = sqrt(ωi² − (a1 − a2)²/4)` is the damped
//! oscillation frequency. Each hold is a quarter period, so a cycle swaps
//! position and momentum twice and multiplies the position variance by
//! roughly `(ω1/ω2)²`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{solve_discrete_sylvester, solve_stein, Mat2, SymMat2};
use crate::noise::DynamicsCoefficients;
use crate::propagate::{riccati_asymptote, AffineFlow, SegmentFlow};
use crate::tolerances::{PROTOCOL_FIXED_POINT_REL, PROTOCOL_MAX_CYCLES};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSchedule {
    pub omega1: f64,
    pub omega2: f64,
    /// Damped frequencies `Ω1`, `Ω2`.
    pub big_omega1: f64,
    pub big_omega2: f64,
    pub t1: f64,
    pub t2: f64,
    pub cycles: usize,
}

impl ProtocolSchedule {
    /// Duration of one cycle, `τ = t1 + t2`.
    pub fn period(&self) -> f64 {
        self.t1 + self.t2
    }
}

fn damped_frequency(c: &DynamicsCoefficients) -> Result<f64> {
    let half_gap = 0.5 * (c.a1 - c.a2).abs();
    if !(c.omega > half_gap) {
        return Err(Error::Overdamped {
            omega: c.omega,
            half_gap,
        });
    }
    // (ω − h)(ω + h) keeps full precision when h ≪ ω
    Ok(((c.omega - half_gap) * (c.omega + half_gap)).sqrt())
}

/// Schedule from the coefficients at `ω1` (`c1`) and `ω2` (`c2`).
pub fn build_schedule(
    c1: &DynamicsCoefficients,
    c2: &DynamicsCoefficients,
    cycles: usize,
) -> Result<ProtocolSchedule> {
    if !(c1.omega < c2.omega) {
        return Err(Error::invalid(
            "omega1",
            format!("must be below omega2 ({} >= {})", c1.omega, c2.omega),
        ));
    }
    let big_omega1 = damped_frequency(c1)?;
    let big_omega2 = damped_frequency(c2)?;
    Ok(ProtocolSchedule {
        omega1: c1.omega,
        omega2: c2.omega,
        big_omega1,
        big_omega2,
        t1: PI / (2.0 * big_omega1),
        t2: PI / (2.0 * big_omega2),
        cycles,
    })
}

/// Noise-free cycle: `σ ↦ SσSᵀ` with `S = −diag(ω1/ω2, ω2/ω1)`.
pub fn unitary_cycle(sigma0: &SymMat2, omega1: f64, omega2: f64) -> SymMat2 {
    let r = omega1 / omega2;
    sigma0.congruence(&Mat2::diag(-r, -1.0 / r))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CycleKind {
    Langevin,
    Riccati,
}

/// Covariance map over one protocol cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CycleMap {
    /// Exact affine map `σ ↦ FσFᵀ + G`.
    Langevin { f: Mat2, g: SymMat2 },
    /// Two Riccati segments applied in order.
    Riccati {
        first: SegmentFlow,
        second: SegmentFlow,
    },
}

impl CycleMap {
    pub fn kind(&self) -> CycleKind {
        match self {
            CycleMap::Langevin { .. } => CycleKind::Langevin,
            CycleMap::Riccati { .. } => CycleKind::Riccati,
        }
    }

    pub fn apply(&self, sigma: &SymMat2) -> Result<SymMat2> {
        match self {
            CycleMap::Langevin { f, g } => Ok(sigma.congruence(f) + *g),
            CycleMap::Riccati { first, second } => second.apply(&first.apply(sigma)?),
        }
    }

    /// Boundary states `σ_0, σ_τ, …, σ_{nτ}`.
    pub fn iterate(&self, sigma0: &SymMat2, cycles: usize) -> Result<Vec<SymMat2>> {
        let mut out = Vec::with_capacity(cycles + 1);
        out.push(*sigma0);
        for k in 0..cycles {
            let next = self.apply(&out[k])?;
            out.push(next);
        }
        Ok(out)
    }
}

/// Cycle map for the given kind. The Langevin kind ignores `b`.
pub fn cycle_map(
    c1: &DynamicsCoefficients,
    c2: &DynamicsCoefficients,
    sched: &ProtocolSchedule,
    kind: CycleKind,
) -> Result<CycleMap> {
    match kind {
        CycleKind::Langevin => {
            let s1 = AffineFlow::lyapunov(&c1.drift(), &c1.diffusion(), sched.t1);
            let s2 = AffineFlow::lyapunov(&c2.drift(), &c2.diffusion(), sched.t2);
            let both = s2.after(&s1);
            Ok(CycleMap::Langevin {
                f: both.f,
                g: both.g,
            })
        }
        CycleKind::Riccati => {
            let (a1, d1, b1) = c1.matrices();
            let (a2, d2, b2) = c2.matrices();
            Ok(CycleMap::Riccati {
                first: SegmentFlow::new(&a1, &d1, &b1, sched.t1)?,
                second: SegmentFlow::new(&a2, &d2, &b2, sched.t2)?,
            })
        }
    }
}

/// Long-run outcome of repeating the protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ProtocolAsymptote {
    Converged {
        state: SymMat2,
        /// Cycles iterated to reach it (zero for the closed form).
        cycles: usize,
    },
    /// The affine map expands some direction: `ρ(F) ≥ 1`.
    Divergent {
        spectral_radius: f64,
        /// Fixed point of the affine map, a saddle. Its `xx` entry is the
        /// plateau the position variance settles on whenever the
        /// contracting direction carries the position.
        saddle: Option<SymMat2>,
    },
}

impl ProtocolAsymptote {
    pub fn state(&self) -> Option<SymMat2> {
        match self {
            ProtocolAsymptote::Converged { state, .. } => Some(*state),
            ProtocolAsymptote::Divergent { .. } => None,
        }
    }

    pub fn is_divergent(&self) -> bool {
        matches!(self, ProtocolAsymptote::Divergent { .. })
    }
}

/// Asymptotic state of the protocol.
///
/// Langevin maps are solved in closed form through `σ* − FσFᵀ = G`. Riccati
/// maps are iterated from `start` until the relative change drops below
/// the fixed-point tolerance.
pub fn protocol_asymptote(map: &CycleMap, start: &SymMat2) -> Result<ProtocolAsymptote> {
    match map {
        CycleMap::Langevin { f, g } => match solve_discrete_sylvester(f, g) {
            Ok(state) => Ok(ProtocolAsymptote::Converged { state, cycles: 0 }),
            Err(Error::SpectralRadiusGEOne(rho)) => Ok(ProtocolAsymptote::Divergent {
                spectral_radius: rho,
                saddle: solve_stein(f, g).ok(),
            }),
            Err(e) => Err(e),
        },
        CycleMap::Riccati { .. } => {
            let mut s = *start;
            let mut change = f64::INFINITY;
            for n in 1..=PROTOCOL_MAX_CYCLES {
                let next = map.apply(&s)?;
                if !next.is_finite() {
                    return Ok(ProtocolAsymptote::Divergent {
                        spectral_radius: f64::INFINITY,
                        saddle: None,
                    });
                }
                change = next.rel_diff(&s);
                s = next;
                if change <= PROTOCOL_FIXED_POINT_REL {
                    return Ok(ProtocolAsymptote::Converged { state: s, cycles: n });
                }
            }
            Err(Error::NonConverged {
                cycles: PROTOCOL_MAX_CYCLES,
                last_change: change,
            })
        }
    }
}

/// Starting point of the Riccati fixed-point iteration: the measured
/// steady state at `ω2`.
pub fn riccati_start(c2: &DynamicsCoefficients) -> Result<SymMat2> {
    let (a, d, b) = c2.matrices();
    riccati_asymptote(&a, &d, &b)
}

/// Sign convention for the damping term `f` of the squeezing rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FSign {
    /// `f = −π(a1 + a2)(Ω1 + Ω2) / (2Ω1Ω2)`.
    #[default]
    Negative,
    Positive,
}

impl FSign {
    fn factor(self) -> f64 {
        match self {
            FSign::Negative => -1.0,
            FSign::Positive => 1.0,
        }
    }
}

/// Per-cycle logarithmic growth factors, `σ_{n+1} = e^{sr} σ_n + χ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezeRates {
    pub sr_xx: f64,
    pub sr_pp: f64,
    /// `f + ln(Ω2²/Ω1²)`: the small-`Δa` momentum rate.
    pub sr_pp_leading: f64,
    pub sr_xp: f64,
    pub f: f64,
    pub delta_a: f64,
    /// Sign of `f` whose `sr_xx` agrees with the noise-free cycle map.
    pub matching_sign: FSign,
}

/// Squeezing rates with `f` of the requested sign, using the ratios of
/// `sigma_ref` where the momentum and cross rates need them.
pub fn squeeze_rates_with_sign(
    c1: &DynamicsCoefficients,
    c2: &DynamicsCoefficients,
    sched: &ProtocolSchedule,
    sigma_ref: &SymMat2,
    sign: FSign,
) -> Result<SqueezeRates> {
    let o1 = damped_frequency(c1)?;
    let o2 = damped_frequency(c2)?;
    let (a1, a2) = (c2.a1, c2.a2);
    let m = c2.mass;
    let da = a2 - a1;
    let magnitude = PI * (a1 + a2) * (o1 + o2) / (2.0 * o1 * o2);
    let f = sign.factor() * magnitude;
    let (q1, q2) = (o1 * o1, o2 * o2);
    let gap = q2 - q1;
    let sr_xx = f + (q1 / q2).ln();
    let sr_pp_leading = f + (q2 / q1).ln();
    let pp_arg = q2 / q1
        + da * m * gap / q1 * (sigma_ref.xp / sigma_ref.pp)
        + da * da * m * m * gap * gap / (4.0 * q1 * q2) * (sigma_ref.xx / sigma_ref.pp);
    let xp_arg = if da == 0.0 {
        1.0
    } else {
        1.0 + da * m * gap / (2.0 * q2) * (sigma_ref.xx / sigma_ref.xp)
    };

    // brute force: the xx factor of the noise-free cycle map
    let sched_free = ProtocolSchedule {
        big_omega1: o1,
        big_omega2: o2,
        ..*sched
    };
    let f_map = c2.drift().exp(sched_free.t2) * c1.drift().exp(sched_free.t1);
    let brute = (f_map.m11 * f_map.m11).ln();
    let other = -f + (q1 / q2).ln();
    let own_matches = (sr_xx - brute).abs() <= (other - brute).abs();
    let matching_sign = match (sign, own_matches) {
        (FSign::Negative, true) | (FSign::Positive, false) => FSign::Negative,
        _ => FSign::Positive,
    };
    Ok(SqueezeRates {
        sr_xx,
        sr_pp: f + pp_arg.ln(),
        sr_pp_leading,
        sr_xp: f + xp_arg.ln(),
        f,
        delta_a: da,
        matching_sign,
    })
}

/// Squeezing rates with the negative-sign damping term.
pub fn squeeze_rates(
    c1: &DynamicsCoefficients,
    c2: &DynamicsCoefficients,
    sched: &ProtocolSchedule,
    sigma_ref: &SymMat2,
) -> Result<SqueezeRates> {
    squeeze_rates_with_sign(c1, c2, sched, sigma_ref, FSign::Negative)
}

/// `ζ = sqrt(σ_xx / σ^g_xx)` with `σ^g_xx = ħ/(2mω_ref)`.
pub fn squeezing_ratio(sigma: &SymMat2, omega_ref: f64, mass: f64, hbar: f64) -> f64 {
    (sigma.xx / (hbar / (2.0 * mass * omega_ref))).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SqueezeClass {
    /// Below the ground-state variance.
    Squeezed,
    /// Reduced below the pre-protocol variance but not below the ground state.
    Squashed,
    NotSqueezed,
}

/// Classify `ζ` against the ground state and the pre-protocol ratio
/// `ζ0 = sqrt(X^{ω2}_xx / σ^g_xx)`.
pub fn classify(zeta: f64, zeta_initial: f64) -> SqueezeClass {
    if zeta < 1.0 {
        SqueezeClass::Squeezed
    } else if zeta < zeta_initial {
        SqueezeClass::Squashed
    } else {
        SqueezeClass::NotSqueezed
    }
}

/// Covariance sampled `samples` times per segment over `cycles` cycles,
/// starting from `sigma0` at time zero.
pub fn dense_trace(
    c1: &DynamicsCoefficients,
    c2: &DynamicsCoefficients,
    sched: &ProtocolSchedule,
    kind: CycleKind,
    sigma0: &SymMat2,
    cycles: usize,
    samples: usize,
) -> Result<Vec<(f64, SymMat2)>> {
    let samples = samples.max(1);
    let flow = |c: &DynamicsCoefficients, t: f64| -> Result<SegmentFlow> {
        let (a, d, b) = c.matrices();
        let b = match kind {
            CycleKind::Langevin => Mat2::ZERO,
            CycleKind::Riccati => b,
        };
        SegmentFlow::new(&a, &d, &b, t)
    };
    let f1 = flow(c1, sched.t1 / samples as f64)?;
    let f2 = flow(c2, sched.t2 / samples as f64)?;
    let mut out = Vec::with_capacity(2 * samples * cycles + 1);
    let mut s = *sigma0;
    let mut t = 0.0;
    out.push((t, s));
    for n in 0..cycles {
        for k in 1..=samples {
            s = f1.apply(&s)?;
            out.push((n as f64 * sched.period() + sched.t1 * k as f64 / samples as f64, s));
        }
        for k in 1..=samples {
            s = f2.apply(&s)?;
            t = n as f64 * sched.period() + sched.t1 + sched.t2 * k as f64 / samples as f64;
            out.push((t, s));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{relative_stein_residual, solve_lyapunov};
    use crate::propagate::{lyapunov_propagate, ode_oracle, riccati_propagate};
    use approx::assert_relative_eq;

    const W2: f64 = 1.5 * PI;

    fn fig2(a1: f64, b: f64) -> (DynamicsCoefficients, DynamicsCoefficients) {
        let c2 = DynamicsCoefficients::natural(a1, 1.0, 2.0, 2.0, b, W2);
        (c2.at_omega(W2 / 2.0), c2)
    }

    fn fig3(b: f64) -> (DynamicsCoefficients, DynamicsCoefficients) {
        let c2 = DynamicsCoefficients::natural(1.0, 1.0, 0.5, 0.5, b, W2);
        (c2.at_omega(W2 / 2.0), c2)
    }

    #[test]
    fn closed_system_schedule() {
        let (c1, c2) = fig3(0.0);
        let s = build_schedule(&c1, &c2, 3).unwrap();
        assert_eq!(s.big_omega1, c1.omega);
        assert_relative_eq!(s.t1, 2.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(s.t2, 1.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(s.period(), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn overdamped_boundary() {
        let c2 = DynamicsCoefficients::natural(0.0, 4.0, 0.0, 0.0, 0.0, 3.0);
        let c1 = c2.at_omega(2.0);
        assert!(matches!(build_schedule(&c1, &c2, 1), Err(Error::Overdamped { .. })));
        let c1 = c2.at_omega(2.5);
        assert!(build_schedule(&c1, &c2, 1).is_ok());
    }

    #[test]
    fn unitary_cycle_law() {
        let s = unitary_cycle(&SymMat2::diag(1.0, 1.0), 1.0, 2.0);
        assert_eq!(s, SymMat2::diag(0.25, 4.0));
        let s0 = SymMat2::new(1.3, 0.2, 0.7);
        let same = unitary_cycle(&s0, 2.0, 2.0);
        assert_eq!(same, s0);
        let mut s = s0;
        for _ in 0..5 {
            s = unitary_cycle(&s, 1.0, 3.0);
        }
        assert_relative_eq!(s.xx / s0.xx, (1.0f64 / 3.0).powi(10), max_relative = 1e-13);
    }

    #[test]
    fn noise_free_map_is_the_unitary_cycle() {
        let c2 = DynamicsCoefficients::natural(0.0, 0.0, 0.0, 0.0, 0.0, 2.0);
        let c1 = c2.at_omega(1.0);
        let sched = build_schedule(&c1, &c2, 1).unwrap();
        let CycleMap::Langevin { f, g } = cycle_map(&c1, &c2, &sched, CycleKind::Langevin).unwrap() else {
            unreachable!()
        };
        assert!((f - Mat2::diag(-0.5, -2.0)).max_abs() < 1e-15);
        assert_eq!(g, SymMat2::ZERO);
        let s0 = SymMat2::new(1.0, 0.1, 2.0);
        let map = cycle_map(&c1, &c2, &sched, CycleKind::Langevin).unwrap();
        let s1 = map.apply(&s0).unwrap();
        assert_relative_eq!(s1.xx / s0.xx, 0.25, max_relative = 1e-10);
        let a = protocol_asymptote(&map, &s0).unwrap();
        assert!(a.is_divergent());
    }

    #[test]
    fn langevin_map_matches_piecewise_propagation_and_oracle() {
        let (c1, c2) = fig2(0.6, 0.0);
        let sched = build_schedule(&c1, &c2, 1).unwrap();
        let map = cycle_map(&c1, &c2, &sched, CycleKind::Langevin).unwrap();
        let x2 = solve_lyapunov(&c2.drift(), &c2.diffusion()).unwrap();
        let mut s = x2;
        let mut piecewise = x2;
        for _ in 0..4 {
            s = map.apply(&s).unwrap();
            piecewise = lyapunov_propagate(&piecewise, &c1.drift(), &c1.diffusion(), sched.t1);
            piecewise = lyapunov_propagate(&piecewise, &c2.drift(), &c2.diffusion(), sched.t2);
            assert!(s.rel_diff(&piecewise) < 1e-12);
        }
        let z = SymMat2::ZERO;
        let o = ode_oracle(&x2, &c1.drift(), &c1.diffusion(), &z, sched.t1, 1e-4).unwrap();
        let o = ode_oracle(&o, &c2.drift(), &c2.diffusion(), &z, sched.t2, 1e-4).unwrap();
        assert!(map.apply(&x2).unwrap().rel_diff(&o) < 1e-7);
    }

    #[test]
    fn riccati_map_without_backaction_equals_langevin() {
        let (c1, c2) = fig3(0.0);
        let sched = build_schedule(&c1, &c2, 1).unwrap();
        let l = cycle_map(&c1, &c2, &sched, CycleKind::Langevin).unwrap();
        let r = cycle_map(&c1, &c2, &sched, CycleKind::Riccati).unwrap();
        let s0 = SymMat2::new(0.3, 0.05, 2.0);
        assert!(l.apply(&s0).unwrap().rel_diff(&r.apply(&s0).unwrap()) < 1e-10);
    }

    #[test]
    fn riccati_map_matches_segment_propagation() {
        let (c1, c2) = fig3(3.0);
        let sched = build_schedule(&c1, &c2, 1).unwrap();
        let map = cycle_map(&c1, &c2, &sched, CycleKind::Riccati).unwrap();
        let s0 = SymMat2::new(0.2, 0.0, 1.5);
        let (a1, d1, b1) = c1.matrices();
        let (a2, d2, b2) = c2.matrices();
        let p = riccati_propagate(&s0, &a1, &d1, &b1, sched.t1).unwrap();
        let p = riccati_propagate(&p, &a2, &d2, &b2, sched.t2).unwrap();
        assert!(map.apply(&s0).unwrap().rel_diff(&p) < 1e-12);
    }

    #[test]
    fn fig2_divergence_dichotomy() {
        for (a1, diverges) in [(0.2, true), (0.6, false)] {
            let (c1, c2) = fig2(a1, 2.0);
            let sched = build_schedule(&c1, &c2, 1).unwrap();
            let l = cycle_map(&c1, &c2, &sched, CycleKind::Langevin).unwrap();
            let la = protocol_asymptote(&l, &SymMat2::ZERO).unwrap();
            assert_eq!(la.is_divergent(), diverges, "a1 = {a1}");
            let r = cycle_map(&c1, &c2, &sched, CycleKind::Riccati).unwrap();
            let ra = protocol_asymptote(&r, &riccati_start(&c2).unwrap()).unwrap();
            let state = ra.state().expect("measured protocol converges");
            assert!(state.is_finite() && state.pp > 0.0);
            let again = r.apply(&state).unwrap();
            assert!(again.rel_diff(&state) < 1e-10);
        }
    }

    #[test]
    fn langevin_asymptote_solves_the_alpha_equation() {
        let (c1, c2) = fig2(0.6, 0.0);
        let sched = build_schedule(&c1, &c2, 1).unwrap();
        let map = cycle_map(&c1, &c2, &sched, CycleKind::Langevin).unwrap();
        let CycleMap::Langevin { f, g } = map else { unreachable!() };
        let sigma = protocol_asymptote(&map, &SymMat2::ZERO).unwrap().state().unwrap();
        assert!(relative_stein_residual(&f, &sigma, &g) < 1e-12);
        // α = X_1 − σ* with ΔX = X_1 − X_2 and E2 = e^{t2 A2}
        let x1 = solve_lyapunov(&c1.drift(), &c1.diffusion()).unwrap();
        let x2 = solve_lyapunov(&c2.drift(), &c2.diffusion()).unwrap();
        let e2 = c2.drift().exp(sched.t2);
        let dx = x1 - x2;
        let alpha = x1 - sigma;
        let rhs = dx - dx.congruence(&e2);
        assert!(relative_stein_residual(&f, &alpha, &rhs) < 1e-10);
        let mut it = x2;
        for _ in 0..10_000 {
            it = map.apply(&it).unwrap();
        }
        assert!(it.rel_diff(&sigma) < 1e-10);
    }

    #[test]
    fn decoupled_position_plateau_is_the_saddle() {
        // a1 = a2 = 0.5 < ln4/2: momentum diverges, position settles
        let c2 = DynamicsCoefficients::natural(0.5, 0.5, 0.5, 0.5, 0.0, W2);
        let c1 = c2.at_omega(W2 / 2.0);
        let sched = build_schedule(&c1, &c2, 1).unwrap();
        let map = cycle_map(&c1, &c2, &sched, CycleKind::Langevin).unwrap();
        let ProtocolAsymptote::Divergent { spectral_radius, saddle } =
            protocol_asymptote(&map, &SymMat2::ZERO).unwrap()
        else {
            panic!("expected divergence")
        };
        assert!(spectral_radius > 1.0);
        let saddle = saddle.unwrap();
        let mut s = solve_lyapunov(&c2.drift(), &c2.diffusion()).unwrap();
        for _ in 0..60 {
            s = map.apply(&s).unwrap();
        }
        assert!(s.pp > 1e6);
        assert_relative_eq!(s.xx, saddle.xx, max_relative = 1e-10);
    }

    #[test]
    fn fig2_rates() {
        let (c1, c2) = fig2(1.0, 0.0);
        let sched = build_schedule(&c1, &c2, 1).unwrap();
        let x2 = solve_lyapunov(&c2.drift(), &c2.diffusion()).unwrap();
        let r = squeeze_rates(&c1, &c2, &sched, &x2).unwrap();
        let (o1, o2) = (W2 / 2.0, W2);
        let expect = -PI * 2.0 * (o1 + o2) / (2.0 * o1 * o2) + (o2 * o2 / (o1 * o1)).ln();
        assert_relative_eq!(r.sr_pp, expect, max_relative = 1e-14);
        assert_eq!(r.sr_pp, r.sr_pp_leading);
        assert_eq!(r.matching_sign, FSign::Negative);
        let pos = squeeze_rates_with_sign(&c1, &c2, &sched, &x2, FSign::Positive).unwrap();
        assert_eq!(pos.matching_sign, FSign::Negative);
        assert!(pos.f > 0.0);
    }

    #[test]
    fn rates_match_noise_free_map() {
        for a1 in [0.1, 0.39, 0.8] {
            let (c1, c2) = fig2(a1, 0.0);
            let sched = build_schedule(&c1, &c2, 1).unwrap();
            let x2 = solve_lyapunov(&c2.drift(), &c2.diffusion()).unwrap();
            let r = squeeze_rates(&c1, &c2, &sched, &x2).unwrap();
            let f = c2.drift().exp(sched.t2) * c1.drift().exp(sched.t1);
            let next = x2.congruence(&f);
            assert!((r.sr_xx - (next.xx / x2.xx).ln()).abs() < 1e-10);
            assert!((r.sr_pp - (next.pp / x2.pp).ln()).abs() < 1e-10);
            assert!((r.sr_xp - (next.xp / x2.xp).ln()).abs() < 1e-10);
        }
    }

    #[test]
    fn ratio_and_classification() {
        assert_relative_eq!(squeezing_ratio(&SymMat2::diag(0.5, 0.5), 1.0, 1.0, 1.0), 1.0);
        assert_eq!(classify(0.5, 3.0), SqueezeClass::Squeezed);
        assert_eq!(classify(1.0, 3.0), SqueezeClass::Squashed);
        assert_eq!(classify(3.0, 3.0), SqueezeClass::NotSqueezed);
    }

    #[test]
    fn dense_trace_hits_the_boundaries() {
        let (c1, c2) = fig3(0.0);
        let sched = build_schedule(&c1, &c2, 2).unwrap();
        let map = cycle_map(&c1, &c2, &sched, CycleKind::Langevin).unwrap();
        let s0 = SymMat2::diag(0.3, 2.0);
        let trace = dense_trace(&c1, &c2, &sched, CycleKind::Langevin, &s0, 2, 8).unwrap();
        assert_eq!(trace.len(), 33);
        let b = map.iterate(&s0, 2).unwrap();
        assert!(trace[16].1.rel_diff(&b[1]) < 1e-12);
        assert!((trace[32].0 - 2.0).abs() < 1e-12);
        assert!(trace[32].1.rel_diff(&b[2]) < 1e-12);
    }
}

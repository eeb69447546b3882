use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::linalg::SymMat2;
use crate::noise::{
    coefficients, ground_state_variance, DynamicsCoefficients, PhysicalParams, Rates, UnitSystem,
};
use crate::propagate::lyapunov_asymptote;
use crate::protocol::{
    build_schedule, cycle_map, protocol_asymptote, riccati_start, squeeze_rates, squeezing_ratio,
    CycleKind, CycleMap, ProtocolAsymptote, ProtocolSchedule,
};

use super::figures::ZetaDepth;

/// Observable names accepted by [`Setup::observe`].
pub const OBSERVABLES: &[&str] = &[
    "a1",
    "a2",
    "d1",
    "d2",
    "b",
    "sigma_g",
    "x_inf",
    "x_omega2_xx",
    "x_omega2_pp",
    "riccati_omega2_xx",
    "spectral_radius",
    "langevin_xx",
    "langevin_pp",
    "riccati_xx",
    "riccati_pp",
    "zeta_initial",
    "zeta_langevin",
    "zeta_riccati",
    "zeta_one_cycle_langevin",
    "zeta_one_cycle_riccati",
    "sr_xx",
    "sr_pp",
    "sr_pp_leading",
    "sr_xp",
];

/// Keys understood in natural mode besides the coefficient names.
const NATURAL_KEYS: &[&str] = &[
    "a", "d", "a1", "a2", "d1", "d2", "b", "omega1", "omega2", "mass",
];

/// Keys understood in SI mode besides the [`PhysicalParams`] field names.
const RATE_KEYS: &[&str] = &[
    "quality_factor",
    "gamma",
    "lambda",
    "recoil",
    "mean_occupation",
];

/// Coefficients of both protocol segments plus the unit system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Setup {
    pub units: UnitSystem,
    pub c1: DynamicsCoefficients,
    pub c2: DynamicsCoefficients,
}

impl Setup {
    /// Natural units; both segments share damping, noise and backaction.
    pub fn natural(base: DynamicsCoefficients, omega1: f64, omega2: f64) -> Result<Self> {
        let c1 = base.at_omega(omega1);
        let c2 = base.at_omega(omega2);
        c1.validate()?;
        c2.validate()?;
        Ok(Setup {
            units: UnitSystem::Natural,
            c1,
            c2,
        })
    }

    pub fn si(p: &PhysicalParams, rates: &Rates) -> Result<Self> {
        p.validate()?;
        Ok(Setup {
            units: UnitSystem::Si,
            c1: coefficients(p, p.omega1, rates)?,
            c2: coefficients(p, p.omega2, rates)?,
        })
    }

    /// Build from `name → value` pairs on top of the defaults of `mode`:
    /// the Fig. 3 parameters in natural mode, the reference particle in SI.
    pub fn from_values(mode: UnitSystem, values: &BTreeMap<String, f64>) -> Result<Self> {
        match mode {
            UnitSystem::Natural => {
                for key in values.keys() {
                    if !NATURAL_KEYS.contains(&key.as_str()) {
                        return Err(Error::invalid(key, "unknown natural-mode parameter"));
                    }
                }
                let get = |k: &str| values.get(k).copied();
                let a = get("a").unwrap_or(1.0);
                let d = get("d").unwrap_or(0.5);
                let mut base = DynamicsCoefficients::natural(
                    get("a1").unwrap_or(a),
                    get("a2").unwrap_or(a),
                    get("d1").unwrap_or(d),
                    get("d2").unwrap_or(d),
                    get("b").unwrap_or(0.0),
                    1.0,
                );
                base.mass = get("mass").unwrap_or(1.0);
                Setup::natural(
                    base,
                    get("omega1").unwrap_or(0.75 * PI),
                    get("omega2").unwrap_or(1.5 * PI),
                )
            }
            UnitSystem::Si => {
                let mut json = serde_json::to_value(PhysicalParams::default())
                    .map_err(|e| Error::invalid("parameters", e.to_string()))?;
                let fields = json.as_object_mut().expect("struct serializes to an object");
                for (key, v) in values {
                    if RATE_KEYS.contains(&key.as_str()) {
                        continue;
                    }
                    if !fields.contains_key(key) {
                        return Err(Error::invalid(key, "unknown SI-mode parameter"));
                    }
                    fields.insert(key.clone(), Value::from(*v));
                }
                if let Some(n) = values.get("mean_occupation") {
                    fields.insert("mean_occupation_override".into(), Value::from(*n));
                }
                let p: PhysicalParams = serde_json::from_value(json)
                    .map_err(|e| Error::invalid("parameters", e.to_string()))?;
                let mut rates = Rates::estimate(&p);
                if let Some(q) = values.get("quality_factor") {
                    rates = Rates::from_quality_factor(*q, p.omega2, rates.recoil);
                }
                if let Some(g) = values.get("gamma") {
                    rates.gamma = *g;
                }
                if let Some(l) = values.get("lambda") {
                    rates.lambda = *l;
                }
                if let Some(r) = values.get("recoil") {
                    rates.recoil = *r;
                }
                Setup::si(&p, &rates)
            }
        }
    }

    pub fn hbar(&self) -> f64 {
        self.units.hbar()
    }

    /// Ground-state position variance at the high frequency.
    pub fn sigma_g(&self) -> f64 {
        ground_state_variance(self.hbar(), self.c2.mass, self.c2.omega)
    }

    /// Measured kind when the backaction is on, unconditional otherwise.
    pub fn measured_kind(&self) -> CycleKind {
        if self.c2.b > 0.0 && self.c1.b > 0.0 {
            CycleKind::Riccati
        } else {
            CycleKind::Langevin
        }
    }

    pub fn schedule(&self, cycles: usize) -> Result<ProtocolSchedule> {
        build_schedule(&self.c1, &self.c2, cycles)
    }

    pub fn map(&self, kind: CycleKind) -> Result<CycleMap> {
        cycle_map(&self.c1, &self.c2, &self.schedule(1)?, kind)
    }

    /// Unconditional steady state at `ω2`.
    pub fn x_omega2(&self) -> Result<SymMat2> {
        lyapunov_asymptote(&self.c2.drift(), &self.c2.diffusion())
    }

    /// Steady state at `ω2` for the given kind: Lyapunov or stabilizing CARE root.
    pub fn start(&self, kind: CycleKind) -> Result<SymMat2> {
        match kind {
            CycleKind::Langevin => self.x_omega2(),
            CycleKind::Riccati => riccati_start(&self.c2),
        }
    }

    /// Protocol fixed point; the unconditional map needs no starting state,
    /// so undamped setups report divergence rather than a missing steady state.
    pub fn asymptote(&self, kind: CycleKind) -> Result<ProtocolAsymptote> {
        let start = match kind {
            CycleKind::Langevin => SymMat2::ZERO,
            CycleKind::Riccati => self.start(kind)?,
        };
        protocol_asymptote(&self.map(kind)?, &start)
    }

    /// Asymptotic position variance. For a divergent map the xx entry of
    /// the saddle fixed point is used: the cycle map has `F12 = 0`, so xx
    /// evolves on its own and settles even when pp runs away.
    pub fn protocol_xx(&self, kind: CycleKind) -> Result<f64> {
        Ok(match self.asymptote(kind)? {
            ProtocolAsymptote::Converged { state, .. } => state.xx,
            ProtocolAsymptote::Divergent {
                saddle: Some(s), ..
            } if s.xx.is_finite() && s.xx > 0.0 => s.xx,
            ProtocolAsymptote::Divergent { .. } => f64::INFINITY,
        })
    }

    /// Asymptotic momentum variance, `∞` when divergent.
    pub fn protocol_pp(&self, kind: CycleKind) -> Result<f64> {
        Ok(self
            .asymptote(kind)?
            .state()
            .map_or(f64::INFINITY, |s| s.pp))
    }

    pub fn ratio(&self, xx: f64) -> f64 {
        squeezing_ratio(
            &SymMat2::new(xx, 0.0, 0.0),
            self.c2.omega,
            self.c2.mass,
            self.hbar(),
        )
    }

    /// Squeezing ratio `sqrt(σ_xx / σ^g_xx)` at the requested depth.
    pub fn zeta(&self, kind: CycleKind, depth: ZetaDepth) -> Result<f64> {
        let xx = match depth {
            ZetaDepth::Converged => self.protocol_xx(kind)?,
            ZetaDepth::OneCycle => self.map(kind)?.apply(&self.start(kind)?)?.xx,
        };
        Ok(self.ratio(xx))
    }

    pub fn zeta_initial(&self) -> Result<f64> {
        Ok(self.ratio(self.x_omega2()?.xx))
    }

    pub fn observe(&self, name: &str) -> Result<f64> {
        use CycleKind::Langevin;
        let sr = || -> Result<_> {
            squeeze_rates(&self.c1, &self.c2, &self.schedule(1)?, &self.x_omega2()?)
        };
        Ok(match name {
            "a1" => self.c2.a1,
            "a2" => self.c2.a2,
            "d1" => self.c2.d1,
            "d2" => self.c2.d2,
            "b" => self.c2.b,
            "sigma_g" => self.sigma_g(),
            "x_inf" => self.c2.d1 / (2.0 * (self.c2.a1 + self.c2.a2)),
            "x_omega2_xx" => self.x_omega2()?.xx,
            "x_omega2_pp" => self.x_omega2()?.pp,
            "riccati_omega2_xx" => self.start(self.measured_kind())?.xx,
            "spectral_radius" => match self.map(Langevin)? {
                CycleMap::Langevin { f, .. } => f.spectral_radius(),
                CycleMap::Riccati { .. } => unreachable!(),
            },
            "langevin_xx" => self.protocol_xx(Langevin)?,
            "langevin_pp" => self.protocol_pp(Langevin)?,
            "riccati_xx" => self.protocol_xx(self.measured_kind())?,
            "riccati_pp" => self.protocol_pp(self.measured_kind())?,
            "zeta_initial" => self.zeta_initial()?,
            "zeta_langevin" => self.zeta(Langevin, ZetaDepth::Converged)?,
            "zeta_riccati" => self.zeta(self.measured_kind(), ZetaDepth::Converged)?,
            "zeta_one_cycle_langevin" => self.zeta(Langevin, ZetaDepth::OneCycle)?,
            "zeta_one_cycle_riccati" => self.zeta(self.measured_kind(), ZetaDepth::OneCycle)?,
            "sr_xx" => sr()?.sr_xx,
            "sr_pp" => sr()?.sr_pp,
            "sr_pp_leading" => sr()?.sr_pp_leading,
            "sr_xp" => sr()?.sr_xp,
            other => return Err(Error::invalid(other, "unknown observable")),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn values(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn natural_defaults_are_fig3() {
        let s = Setup::from_values(UnitSystem::Natural, &BTreeMap::new()).unwrap();
        assert_eq!(s.c2.a1, 1.0);
        assert_eq!(s.c2.d2, 0.5);
        assert_eq!(s.c1.omega, 0.75 * PI);
        assert!((s.sigma_g() - 1.0 / (3.0 * PI)).abs() < 1e-15);
        assert_eq!(s.measured_kind(), CycleKind::Langevin);
    }

    #[test]
    fn unknown_keys_are_named() {
        let e = Setup::from_values(UnitSystem::Natural, &values(&[("zeta", 1.0)])).unwrap_err();
        assert!(e.to_string().contains("zeta"));
        let e = Setup::from_values(UnitSystem::Si, &values(&[("a1", 1.0)])).unwrap_err();
        assert!(e.to_string().contains("a1"));
    }

    #[test]
    fn every_observable_evaluates() {
        let s = Setup::from_values(UnitSystem::Natural, &values(&[("b", 3.0)])).unwrap();
        for name in OBSERVABLES {
            let v = s.observe(name).unwrap();
            assert!(!v.is_nan(), "{name}");
        }
        assert!(s.observe("nope").is_err());
    }

    #[test]
    fn fig3b_ordering() {
        let s = Setup::from_values(UnitSystem::Natural, &values(&[("b", 3.0)])).unwrap();
        let r = s.observe("riccati_xx").unwrap();
        let l = s.observe("langevin_xx").unwrap();
        assert!(r < l && l < s.sigma_g(), "{r} {l}");
    }

    #[test]
    fn si_quality_factor_sets_both_rates() {
        let s = Setup::from_values(
            UnitSystem::Si,
            &values(&[("quality_factor", 1e12), ("recoil", 1e26), ("efficiency", 0.0)]),
        )
        .unwrap();
        let gamma = 1e5 / 1e12;
        assert!((s.c2.a1 - gamma / 2.0).abs() < 1e-12 * gamma);
        assert!((s.c2.a2 - 1.5 * gamma).abs() < 1e-12 * gamma);
        assert_eq!(s.c2.b, 0.0);
        let z = s.zeta(CycleKind::Langevin, ZetaDepth::Converged).unwrap();
        assert!((z - 0.58).abs() < 0.03, "{z}");
    }
}

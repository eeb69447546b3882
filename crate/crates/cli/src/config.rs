//! Run configuration files (TOML, or JSON by extension).

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use levisqueeze::experiments::{OutputFormat, Setup};
use levisqueeze::noise::{ground_state_variance, DynamicsCoefficients, PhysicalParams, Rates, UnitSystem};
use levisqueeze::SymMat2;
use serde::{Deserialize, Serialize};

use crate::UsageError;

/// Raw natural-unit coefficients shared by both trap frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NaturalCoefficients {
    pub a1: f64,
    pub a2: f64,
    pub d1: f64,
    pub d2: f64,
    pub mass: f64,
}

impl Default for NaturalCoefficients {
    fn default() -> Self {
        NaturalCoefficients {
            a1: 1.0,
            a2: 1.0,
            d1: 0.5,
            d2: 0.5,
            mass: 1.0,
        }
    }
}

/// Environmental rates in SI mode; unset entries are estimated from the
/// physical parameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateConfig {
    pub quality_factor: Option<f64>,
    pub gamma: Option<f64>,
    pub lambda: Option<f64>,
    pub recoil: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolConfig {
    pub omega1: Option<f64>,
    pub omega2: Option<f64>,
    pub cycles: usize,
    pub samples_per_segment: usize,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            omega1: None,
            omega2: None,
            cycles: 10,
            samples_per_segment: 25,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementConfig {
    /// Detection efficiency (SI mode).
    pub efficiency: Option<f64>,
    /// Backaction strength `b`, overriding the derived value.
    pub backaction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialConfig {
    pub xx: Option<f64>,
    pub xp: Option<f64>,
    pub pp: Option<f64>,
    pub equilibration_time: f64,
    pub equilibration_samples: usize,
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig {
            xx: None,
            xp: None,
            pp: None,
            equilibration_time: 4.0,
            equilibration_samples: 200,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub format: Option<OutputFormat>,
    pub path: Option<PathBuf>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub mode: Option<UnitSystem>,
    pub coefficients: Option<NaturalCoefficients>,
    pub physical: Option<PhysicalParams>,
    pub rates: Option<RateConfig>,
    pub protocol: ProtocolConfig,
    pub measurement: MeasurementConfig,
    pub initial: InitialConfig,
    pub output: OutputConfig,
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        let parsed = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        } else {
            toml::from_str(&text).map_err(|e| e.to_string())
        };
        parsed.map_err(|e| usage(format!("invalid config {}: {e}", path.display())))
    }

    /// Mode from the flag, the file, or the sections present (natural by default).
    pub fn resolve_mode(&self, flag: Option<UnitSystem>) -> Result<UnitSystem> {
        let mode = flag.or(self.mode).unwrap_or(if self.physical.is_some() || self.rates.is_some() {
            UnitSystem::Si
        } else {
            UnitSystem::Natural
        });
        match mode {
            UnitSystem::Natural if self.physical.is_some() => {
                Err(usage("`physical` is only valid in si mode (natural mode uses `coefficients`)"))
            }
            UnitSystem::Natural if self.rates.is_some() => {
                Err(usage("`rates` is only valid in si mode (natural mode uses `coefficients`)"))
            }
            UnitSystem::Si if self.coefficients.is_some() => {
                Err(usage("`coefficients` is only valid in natural mode (si mode uses `physical`)"))
            }
            UnitSystem::Natural if self.measurement.efficiency.is_some() => Err(usage(
                "`measurement.efficiency` is only valid in si mode (natural mode uses `measurement.backaction`)",
            )),
            m => Ok(m),
        }
    }

    pub fn physical(&self) -> PhysicalParams {
        let mut p = self.physical.clone().unwrap_or_default();
        if let Some(e) = self.measurement.efficiency {
            p.efficiency = e;
        }
        if let Some(w) = self.protocol.omega1 {
            p.omega1 = w;
        }
        if let Some(w) = self.protocol.omega2 {
            p.omega2 = w;
        }
        p
    }

    pub fn rates(&self, p: &PhysicalParams) -> Rates {
        let mut rates = Rates::estimate(p);
        let Some(r) = &self.rates else {
            return rates;
        };
        if let Some(q) = r.quality_factor {
            rates = Rates::from_quality_factor(q, p.omega2, rates.recoil);
        }
        if let Some(g) = r.gamma {
            rates.gamma = g;
        }
        if let Some(l) = r.lambda {
            rates.lambda = l;
        }
        if let Some(x) = r.recoil {
            rates.recoil = x;
        }
        rates
    }

    pub fn setup(&self, mode: UnitSystem) -> Result<Setup> {
        let setup = match mode {
            UnitSystem::Natural => {
                let c = self.coefficients.clone().unwrap_or_default();
                let b = self.measurement.backaction.unwrap_or(0.0);
                let mut base = DynamicsCoefficients::natural(c.a1, c.a2, c.d1, c.d2, b, 1.0);
                base.mass = c.mass;
                Setup::natural(
                    base,
                    self.protocol.omega1.unwrap_or(0.75 * PI),
                    self.protocol.omega2.unwrap_or(1.5 * PI),
                )
            }
            UnitSystem::Si => {
                let p = self.physical();
                let mut s = Setup::si(&p, &self.rates(&p))?;
                if let Some(b) = self.measurement.backaction {
                    s.c1.b = b;
                    s.c2.b = b;
                    s.c2.validate()?;
                }
                Ok(s)
            }
        };
        setup.context("building the model from the configuration")
    }

    /// Configured initial covariance; defaults to the ground state at `ω2`
    /// in SI mode and to `diag(0.5, 0.5)` in natural mode.
    pub fn initial(&self, setup: &Setup) -> SymMat2 {
        let (xx, pp) = match setup.units {
            UnitSystem::Natural => (0.5, 0.5),
            UnitSystem::Si => {
                let g = ground_state_variance(setup.hbar(), setup.c2.mass, setup.c2.omega);
                let h = setup.hbar();
                (g, h * h / (4.0 * g))
            }
        };
        SymMat2::new(
            self.initial.xx.unwrap_or(xx),
            self.initial.xp.unwrap_or(0.0),
            self.initial.pp.unwrap_or(pp),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_sections() {
        let cfg: RunConfig = toml::from_str(
            r#"
            mode = "natural"
            [coefficients]
            a1 = 0.2
            [measurement]
            backaction = 2.0
            [protocol]
            cycles = 3
            "#,
        )
        .unwrap();
        let mode = cfg.resolve_mode(None).unwrap();
        let s = cfg.setup(mode).unwrap();
        assert_eq!(s.c2.a1, 0.2);
        assert_eq!(s.c2.a2, 1.0);
        assert_eq!(s.c1.b, 2.0);
        assert_eq!(cfg.protocol.cycles, 3);
    }

    #[test]
    fn unknown_keys_are_rejected_by_name() {
        let e = toml::from_str::<RunConfig>("[coefficients]\na3 = 1.0\n").unwrap_err();
        assert!(e.to_string().contains("a3"));
    }

    #[test]
    fn one_parameter_source_per_mode() {
        let cfg = RunConfig {
            physical: Some(PhysicalParams::default()),
            ..RunConfig::default()
        };
        assert_eq!(cfg.resolve_mode(None).unwrap(), UnitSystem::Si);
        assert!(cfg.resolve_mode(Some(UnitSystem::Natural)).is_err());
        let cfg = RunConfig {
            coefficients: Some(NaturalCoefficients::default()),
            ..RunConfig::default()
        };
        assert!(cfg.resolve_mode(Some(UnitSystem::Si)).is_err());
    }

    #[test]
    fn si_initial_state_is_minimum_uncertainty() {
        let cfg = RunConfig::default();
        let s = cfg.setup(UnitSystem::Si).unwrap();
        let x = cfg.initial(&s);
        let h = s.hbar();
        assert!((x.det() / (h * h / 4.0) - 1.0).abs() < 1e-12);
    }
}

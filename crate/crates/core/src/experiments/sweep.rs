use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::UnitSystem;

use super::dataset::Dataset;
use super::setup::{Setup, OBSERVABLES};

/// One-parameter sweep: `variable` over `grid`, everything else from
/// `fixed` or the mode defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub variable: String,
    pub grid: Vec<f64>,
    #[serde(default)]
    pub fixed: BTreeMap<String, f64>,
    #[serde(default)]
    pub mode: UnitSystem,
    pub outputs: Vec<String>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::invalid("grid", "must not be empty"));
        }
        if self.grid.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("grid", "values must be finite"));
        }
        let up = self.grid.windows(2).all(|w| w[1] > w[0]);
        let down = self.grid.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return Err(Error::invalid("grid", "must be strictly monotone"));
        }
        if self.fixed.contains_key(&self.variable) {
            return Err(Error::invalid(
                "fixed",
                format!("`{}` is the swept variable", self.variable),
            ));
        }
        if self.outputs.is_empty() {
            return Err(Error::invalid("outputs", "need at least one observable"));
        }
        for o in &self.outputs {
            if !OBSERVABLES.contains(&o.as_str()) {
                return Err(Error::invalid("outputs", format!("unknown observable `{o}`")));
            }
        }
        Ok(())
    }
}

/// Evaluate every output at every grid point, in parallel, in grid order.
pub fn sweep(spec: &SweepSpec, seed: Option<u64>) -> Result<Dataset> {
    spec.validate()?;
    let rows: Vec<Vec<f64>> = spec
        .grid
        .par_iter()
        .map(|&x| {
            let mut values = spec.fixed.clone();
            values.insert(spec.variable.clone(), x);
            let setup = Setup::from_values(spec.mode, &values)?;
            spec.outputs.iter().map(|o| setup.observe(o)).collect()
        })
        .collect::<Result<_>>()?;

    let params = serde_json::to_value(spec).map_err(|e| Error::invalid("sweep", e.to_string()))?;
    let mut ds = Dataset::new(
        &format!("sweep_{}", spec.variable),
        "one-parameter sweep",
        params,
        seed,
    );
    ds.push(&spec.variable, spec.grid.clone());
    for (j, name) in spec.outputs.iter().enumerate() {
        ds.push(name, rows.iter().map(|r| r[j]).collect());
    }
    ds.note("divergent asymptotes are reported as inf");
    Ok(ds)
}

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

use super::TOOL_VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub figure: String,
    pub description: String,
    /// The full spec the dataset was produced from.
    pub parameters: Value,
    pub seed: Option<u64>,
    pub tool_version: String,
    /// Key numbers (thresholds, ratios) for quick reporting.
    pub summary: BTreeMap<String, Value>,
    pub notes: Vec<String>,
}

/// Named, equal-length real columns plus metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub id: String,
    pub columns: Vec<Column>,
    pub metadata: Metadata,
}

fn number_or_null(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

fn csv_number(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:.12e}")
    }
}

impl Dataset {
    pub fn new(id: &str, description: &str, parameters: Value, seed: Option<u64>) -> Self {
        Dataset {
            id: id.into(),
            columns: Vec::new(),
            metadata: Metadata {
                figure: id.into(),
                description: description.into(),
                parameters,
                seed,
                tool_version: TOOL_VERSION.into(),
                summary: BTreeMap::new(),
                notes: Vec::new(),
            },
        }
    }

    /// Append a column; panics on a length mismatch, which is a programming error.
    pub fn push(&mut self, name: &str, values: Vec<f64>) {
        if let Some(first) = self.columns.first() {
            assert_eq!(first.values.len(), values.len(), "column `{name}` length");
        }
        self.columns.push(Column {
            name: name.into(),
            values,
        });
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.values.as_slice())
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, |c| c.values.len())
    }

    pub fn summarize(&mut self, key: &str, value: impl Into<Value>) {
        self.metadata.summary.insert(key.into(), value.into());
    }

    /// Finite numbers as-is, non-finite ones as `null`.
    pub fn summarize_number(&mut self, key: &str, value: f64) {
        self.metadata.summary.insert(key.into(), number_or_null(value));
    }

    pub fn note(&mut self, text: &str) {
        self.metadata.notes.push(text.into());
    }

    /// SHA-256 of the figure id, spec and seed: identical inputs share a name.
    pub fn spec_hash(&self) -> String {
        let canonical = json!({
            "id": self.id,
            "parameters": self.metadata.parameters,
            "seed": self.metadata.seed,
            "tool_version": self.metadata.tool_version,
        });
        let digest = Sha256::digest(canonical.to_string().as_bytes());
        hex::encode(digest)[..16].to_string()
    }

    pub fn file_stem(&self) -> String {
        format!("{}_{}", self.id, self.spec_hash())
    }

    /// RFC 4180 CSV, header row, 13 significant digits, `inf` for divergence.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::invalid("output", e.to_string());
        w.write_record(self.columns.iter().map(|c| c.name.as_str()))
            .map_err(io)?;
        for i in 0..self.rows() {
            w.write_record(self.columns.iter().map(|c| csv_number(c.values[i])))
                .map_err(io)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::invalid("output", e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::invalid("output", e.to_string()))
    }

    /// Column-oriented JSON with metadata; non-finite values become `null`.
    pub fn to_json(&self) -> Value {
        let columns: Vec<Value> = self
            .columns
            .iter()
            .map(|c| {
                json!({
                    "name": c.name,
                    "values": c.values.iter().map(|v| number_or_null(*v)).collect::<Vec<_>>(),
                })
            })
            .collect();
        json!({
            "id": self.id,
            "metadata": self.metadata,
            "columns": columns,
        })
    }

    /// Write `<id>_<hash>.csv` plus a `.meta.json` sidecar, or a single
    /// `<id>_<hash>.json`. Returns the paths written.
    pub fn write(&self, dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
        let io = |e: std::io::Error| Error::invalid("output", e.to_string());
        fs::create_dir_all(dir).map_err(io)?;
        let stem = self.file_stem();
        match format {
            OutputFormat::Csv => {
                let data = dir.join(format!("{stem}.csv"));
                fs::write(&data, self.to_csv()?).map_err(io)?;
                let meta = dir.join(format!("{stem}.meta.json"));
                let text = serde_json::to_string_pretty(&self.metadata)
                    .map_err(|e| Error::invalid("output", e.to_string()))?;
                fs::write(&meta, text + "\n").map_err(io)?;
                Ok(vec![data, meta])
            }
            OutputFormat::Json => {
                let data = dir.join(format!("{stem}.json"));
                let text = serde_json::to_string_pretty(&self.to_json())
                    .map_err(|e| Error::invalid("output", e.to_string()))?;
                fs::write(&data, text + "\n").map_err(io)?;
                Ok(vec![data])
            }
        }
    }
}

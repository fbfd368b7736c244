//! Scenario files: the JSON schema driving a run, with validation that points
//! at the offending field.

use crate::error::{Error, Result};
use crate::pressure::Potential;
use crate::systems::{Symbol, SystemSpec};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Enumerate,
    Pressures,
    Compare,
    Hypotheses,
    InvariantSuite,
}

/// Serializable potential description; `table` keys are comma-separated symbol
/// strings ("0,1").
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    PhiU,
    PhiNOverN { n: usize },
    LocallyConstant {
        depth: usize,
        table: BTreeMap<String, f64>,
        #[serde(default)]
        label: Option<String>,
    },
}

impl PotentialSpec {
    pub fn build(&self, field: &str) -> Result<Potential> {
        match self {
            PotentialSpec::PhiU => Ok(Potential::PhiU),
            PotentialSpec::PhiNOverN { n } => {
                if *n == 0 {
                    return Err(Error::ConfigSchema {
                        field: format!("{field}.n"),
                        detail: "n must be at least 1".into(),
                    });
                }
                Ok(Potential::PhiNOverN { n: *n })
            }
            PotentialSpec::LocallyConstant { depth, table, label } => {
                if *depth == 0 {
                    return Err(Error::ConfigSchema {
                        field: format!("{field}.depth"),
                        detail: "depth must be at least 1".into(),
                    });
                }
                let mut parsed: BTreeMap<Vec<Symbol>, f64> = BTreeMap::new();
                for (key, &v) in table {
                    let word = parse_word(key).map_err(|detail| Error::ConfigSchema {
                        field: format!("{field}.table.{key}"),
                        detail,
                    })?;
                    if word.len() != *depth {
                        return Err(Error::ConfigSchema {
                            field: format!("{field}.table.{key}"),
                            detail: format!("word length {} differs from depth {depth}", word.len()),
                        });
                    }
                    if !v.is_finite() {
                        return Err(Error::ConfigSchema {
                            field: format!("{field}.table.{key}"),
                            detail: "table values must be finite".into(),
                        });
                    }
                    parsed.insert(word, v);
                }
                let label = label
                    .clone()
                    .unwrap_or_else(|| format!("table_depth_{depth}"));
                Ok(Potential::LocallyConstant { depth: *depth, table: parsed, label })
            }
        }
    }
}

fn parse_word(key: &str) -> std::result::Result<Vec<Symbol>, String> {
    key.split(',')
        .map(|part| {
            part.trim()
                .parse::<Symbol>()
                .map_err(|_| format!("'{part}' is not a symbol index"))
        })
        .collect()
}

/// A sub-shift restriction to run alongside the full system in comparisons.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SubsystemSpec {
    pub symbols: Vec<Symbol>,
    pub transition: Vec<Vec<u8>>,
    #[serde(default)]
    pub label: Option<String>,
}

fn default_n_range() -> Vec<usize> {
    (1..=8).collect()
}

fn default_alpha_grid() -> Vec<f64> {
    vec![0.8, 0.4, 0.1]
}

fn default_c_grid() -> Vec<f64> {
    vec![0.9, 0.5, 0.1]
}

fn default_depths() -> Vec<usize> {
    vec![1, 2]
}

fn default_k_powers() -> Vec<usize> {
    vec![1, 2, 4, 8]
}

fn default_samples() -> usize {
    2000
}

fn default_max_period() -> usize {
    6
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: u32,
    #[serde(default)]
    pub label: Option<String>,
    pub system: SystemSpec,
    pub experiments: Vec<Experiment>,
    /// n values for orbit sums (periods / iterate counts).
    #[serde(default = "default_n_range")]
    pub n_range: Vec<usize>,
    /// Strictly decreasing expansion-rate grid for the filtration limit.
    #[serde(default = "default_alpha_grid")]
    pub alpha_grid: Vec<f64>,
    /// Strictly decreasing constant grid for the filtration limit.
    #[serde(default = "default_c_grid")]
    pub c_grid: Vec<f64>,
    /// Cylinder depths for transfer-operator estimates.
    #[serde(default = "default_depths")]
    pub depths: Vec<usize>,
    /// n values indexing the singular-value potential sequence.
    #[serde(default = "default_k_powers")]
    pub k_powers: Vec<usize>,
    #[serde(default)]
    pub potentials: Vec<PotentialSpec>,
    /// Sub-shift restrictions included in the variational comparison.
    #[serde(default)]
    pub subsystems: Vec<SubsystemSpec>,
    /// Sample count for measure integrals and exponents.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Orbit-period horizon for hypothesis checks.
    #[serde(default = "default_max_period")]
    pub max_period: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<String>,
}

impl Scenario {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let scenario: Scenario = serde_json::from_str(&text).map_err(|e| Error::ConfigSchema {
            field: "(root)".into(),
            detail: e.to_string(),
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::ConfigSchema {
                field: "schema".into(),
                detail: format!("expected schema {SCHEMA_VERSION}, got {}", self.schema),
            });
        }
        if self.experiments.is_empty() {
            return Err(Error::ConfigSchema {
                field: "experiments".into(),
                detail: "at least one experiment is required".into(),
            });
        }
        if self.n_range.is_empty() || self.n_range.contains(&0) {
            return Err(Error::ConfigSchema {
                field: "n_range".into(),
                detail: "must be nonempty with entries >= 1".into(),
            });
        }
        if self.n_range.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::ConfigSchema {
                field: "n_range".into(),
                detail: "must be strictly increasing".into(),
            });
        }
        for (name, grid) in [("alpha_grid", &self.alpha_grid), ("c_grid", &self.c_grid)] {
            if grid.is_empty() || grid.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                return Err(Error::ConfigSchema {
                    field: name.into(),
                    detail: "must be nonempty with positive finite entries".into(),
                });
            }
            if grid.windows(2).any(|w| w[1] >= w[0]) {
                return Err(Error::ConfigSchema {
                    field: name.into(),
                    detail: "must be strictly decreasing".into(),
                });
            }
        }
        if self.c_grid.iter().any(|&c| c > 1.0) {
            return Err(Error::ConfigSchema {
                field: "c_grid".into(),
                detail: "entries must lie in (0, 1]".into(),
            });
        }
        if self.depths.is_empty() || self.depths.contains(&0) {
            return Err(Error::ConfigSchema {
                field: "depths".into(),
                detail: "must be nonempty with entries >= 1".into(),
            });
        }
        if self.k_powers.is_empty() || self.k_powers.contains(&0) {
            return Err(Error::ConfigSchema {
                field: "k_powers".into(),
                detail: "must be nonempty with entries >= 1".into(),
            });
        }
        if self.samples < 100 {
            return Err(Error::ConfigSchema {
                field: "samples".into(),
                detail: "must be at least 100".into(),
            });
        }
        if self.max_period == 0 {
            return Err(Error::ConfigSchema {
                field: "max_period".into(),
                detail: "must be at least 1".into(),
            });
        }
        for (i, p) in self.potentials.iter().enumerate() {
            p.build(&format!("potentials[{i}]"))?;
        }
        for (i, s) in self.subsystems.iter().enumerate() {
            let m = s.transition.len();
            if m == 0 || m != s.symbols.len() || s.transition.iter().any(|r| r.len() != m) {
                return Err(Error::ConfigSchema {
                    field: format!("subsystems[{i}]"),
                    detail: "transition must be square and match the symbol list".into(),
                });
            }
        }
        Ok(())
    }

    /// Built potentials; phi_u is always included first.
    pub fn build_potentials(&self) -> Result<Vec<Potential>> {
        let mut out = vec![Potential::PhiU];
        for (i, p) in self.potentials.iter().enumerate() {
            let built = p.build(&format!("potentials[{i}]"))?;
            if built != Potential::PhiU {
                out.push(built);
            }
        }
        Ok(out)
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| match &self.system {
            SystemSpec::Cat => "cat".into(),
            SystemSpec::Toral { .. } => "toral".into(),
            SystemSpec::Horseshoe { s, .. } => format!("horseshoe_{s}"),
            SystemSpec::Sft { .. } => "sft".into(),
            SystemSpec::Henon { .. } => "henon".into(),
            SystemSpec::Power { k, .. } => format!("power_{k}"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_json() -> serde_json::Value {
        serde_json::json!({
            "schema": 1,
            "system": {"kind": "cat"},
            "experiments": ["pressures"],
        })
    }

    fn parse(v: serde_json::Value) -> Result<Scenario> {
        let s: Scenario = serde_json::from_value(v).map_err(|e| Error::ConfigSchema {
            field: "(root)".into(),
            detail: e.to_string(),
        })?;
        s.validate()?;
        Ok(s)
    }

    #[test]
    fn minimal_scenario_with_defaults() {
        let s = parse(base_json()).unwrap();
        assert_eq!(s.n_range, (1..=8).collect::<Vec<_>>());
        assert_eq!(s.alpha_grid, vec![0.8, 0.4, 0.1]);
        assert_eq!(s.label(), "cat");
    }

    #[test]
    fn wrong_schema_version() {
        let mut v = base_json();
        v["schema"] = serde_json::json!(2);
        let err = parse(v).unwrap_err();
        match err {
            Error::ConfigSchema { field, .. } => assert_eq!(field, "schema"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn unknown_field_rejected() {
        let mut v = base_json();
        v["bogus"] = serde_json::json!(1);
        assert!(parse(v).is_err());
    }

    #[test]
    fn non_decreasing_grid_rejected() {
        let mut v = base_json();
        v["alpha_grid"] = serde_json::json!([0.1, 0.4]);
        match parse(v).unwrap_err() {
            Error::ConfigSchema { field, .. } => assert_eq!(field, "alpha_grid"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn locally_constant_word_parsing() {
        let mut v = base_json();
        v["potentials"] = serde_json::json!([
            {"kind": "locally_constant", "depth": 2, "table": {"0,1": -0.5, "1,0": 0.25}}
        ]);
        let s = parse(v).unwrap();
        let pots = s.build_potentials().unwrap();
        assert_eq!(pots.len(), 2);
        match &pots[1] {
            Potential::LocallyConstant { table, .. } => {
                assert_eq!(table.get(&vec![0u16, 1]), Some(&-0.5));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn locally_constant_depth_mismatch() {
        let mut v = base_json();
        v["potentials"] = serde_json::json!([
            {"kind": "locally_constant", "depth": 2, "table": {"0": -0.5}}
        ]);
        match parse(v).unwrap_err() {
            Error::ConfigSchema { field, .. } => {
                assert!(field.starts_with("potentials[0].table"), "{field}");
            }
            other => panic!("{other}"),
        }
    }
}

//! Declarative experiment configuration.

use std::path::{Path, PathBuf};

use codesign::accel::{Dataflow, ValidityRule, HW_GRID};
use codesign::SpaceKind;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub space: SpaceConfig,
    pub hardware: HardwareConfig,
    pub proxy: ProxySelector,
    pub k: usize,
    /// Near-optimal enlargement of the optimal set; off when absent.
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub constraints: Vec<ConstraintSpec>,
    /// Try every accelerator as the proxy in `codesign`.
    #[serde(default)]
    pub all_proxies: bool,
    #[serde(default)]
    pub mixed: Option<MixedConfig>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    pub kind: SpaceKind,
    pub seed: u64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardwareConfig {
    pub seed: u64,
    pub count_per_dataflow: usize,
    pub dataflows: Vec<Dataflow>,
    /// Overrides the space's calibrated support rule.
    #[serde(default)]
    pub validity: Option<ValidityRule>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ProxySelector {
    Index(usize),
    Random { seed: u64 },
}

/// A (L, E, H) triple. Budgets are either absolute or a point of the proxy's
/// constraint grid; a missing resource budget means unlimited.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum ConstraintSpec {
    Explicit {
        latency_budget: u64,
        energy_budget: f64,
        #[serde(default)]
        resource_budget: Option<f64>,
    },
    GridPoint {
        grid_point: usize,
        #[serde(default)]
        resource_budget: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixedConfig {
    pub enabled: bool,
    pub plan_count: usize,
    pub plan_seed: u64,
    /// Plan-axis SRCC matrices are written only up to this many plans; the
    /// CDFs are always written.
    #[serde(default = "default_matrix_limit")]
    pub matrix_limit: usize,
}

fn default_matrix_limit() -> usize {
    500
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, Vec<String>> {
        let text = std::fs::read_to_string(path).map_err(|e| vec![format!("cannot read {}: {e}", path.display())])?;
        let config: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| vec![format!("cannot parse {}: {e}", path.display())])?;
        config.validate()?;
        Ok(config)
    }

    /// Every violation at once, so a config can be fixed in one pass.
    pub fn validate(&self) -> Result<(), Vec<String>> {
        let mut problems = Vec::new();
        if self.space.count == 0 {
            problems.push("space.count must be at least 1".to_string());
        } else if self.space.count as u128 > self.space.kind.cardinality() {
            problems.push(format!(
                "space.count {} exceeds the {:?} space cardinality {}",
                self.space.count,
                self.space.kind,
                self.space.kind.cardinality()
            ));
        }
        let hw = &self.hardware;
        if hw.count_per_dataflow == 0 || hw.count_per_dataflow > HW_GRID {
            problems
                .push(format!("hardware.count_per_dataflow must be in 1..={HW_GRID}, got {}", hw.count_per_dataflow));
        }
        if hw.dataflows.is_empty() {
            problems.push("hardware.dataflows must not be empty".to_string());
        }
        let mut seen = hw.dataflows.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != hw.dataflows.len() {
            problems.push("hardware.dataflows lists a dataflow twice".to_string());
        }
        if let Some(rule) = &hw.validity {
            if let Err(e) = rule.validate() {
                problems.push(format!("hardware.validity: {e}"));
            }
        }
        if self.k == 0 {
            problems.push("k must be at least 1".to_string());
        }
        if let Some(eps) = self.epsilon {
            if !(eps.is_finite() && eps >= 0.0) {
                problems.push(format!("epsilon must be finite and non-negative, got {eps}"));
            }
        }
        for (i, c) in self.constraints.iter().enumerate() {
            let resource = match *c {
                ConstraintSpec::Explicit { latency_budget, energy_budget, resource_budget } => {
                    if latency_budget == 0 {
                        problems.push(format!("constraints[{i}].latency_budget must be positive"));
                    }
                    if !(energy_budget.is_finite() && energy_budget > 0.0) {
                        problems.push(format!("constraints[{i}].energy_budget must be positive and finite"));
                    }
                    resource_budget
                }
                ConstraintSpec::GridPoint { grid_point, resource_budget } => {
                    if grid_point >= self.k {
                        problems.push(format!(
                            "constraints[{i}].grid_point {grid_point} is outside a {}-point grid",
                            self.k
                        ));
                    }
                    resource_budget
                }
            };
            if resource.is_some_and(|h| !(h.is_finite() && h > 0.0)) {
                problems.push(format!("constraints[{i}].resource_budget must be positive and finite"));
            }
        }
        if let Some(m) = &self.mixed {
            if m.enabled && m.plan_count == 0 {
                problems.push("mixed.plan_count must be at least 1".to_string());
            }
        }
        if self.output_dir.as_os_str().is_empty() {
            problems.push("output_dir must not be empty".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(problems)
        }
    }

    pub fn validity_rule(&self) -> ValidityRule {
        self.hardware.validity.unwrap_or_else(|| ValidityRule::for_space(self.space.kind))
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("configs always serialize");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// Hash of only the fields that determine the performance table.
    pub fn table_fingerprint(&self) -> String {
        let key = serde_json::json!({
            "space": self.space,
            "hardware": {
                "seed": self.hardware.seed,
                "count_per_dataflow": self.hardware.count_per_dataflow,
                "dataflows": self.hardware.dataflows,
                "validity": self.validity_rule(),
            },
        });
        hex::encode(Sha256::digest(key.to_string().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentConfig {
        serde_json::from_str(
            r#"{
                "space": {"kind": "cell", "seed": 1, "count": 10},
                "hardware": {"seed": 1, "count_per_dataflow": 4, "dataflows": ["KC-P", "X-P"]},
                "proxy": {"index": 0},
                "k": 5,
                "constraints": [{"grid_point": 2}, {"latency_budget": 100, "energy_budget": 5.0, "resource_budget": 90.0}]
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn parses_both_constraint_forms() {
        let c = sample();
        assert!(c.validate().is_ok());
        assert_eq!(c.constraints[0], ConstraintSpec::GridPoint { grid_point: 2, resource_budget: None });
        assert!(matches!(c.constraints[1], ConstraintSpec::Explicit { latency_budget: 100, .. }));
        assert_eq!(c.output_dir, PathBuf::from("results"));
    }

    #[test]
    fn lists_every_violation() {
        let mut c = sample();
        c.k = 0;
        c.space.count = 0;
        c.hardware.dataflows = vec![Dataflow::XP, Dataflow::XP];
        c.epsilon = Some(-1.0);
        let problems = c.validate().unwrap_err();
        assert_eq!(problems.len(), 5, "{problems:?}");
    }

    #[test]
    fn hashes_track_content() {
        let a = sample();
        let mut b = sample();
        assert_eq!(a.hash(), b.hash());
        b.k = 6;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.table_fingerprint(), b.table_fingerprint());
        b.hardware.seed = 2;
        assert_ne!(a.table_fingerprint(), b.table_fingerprint());
    }
}

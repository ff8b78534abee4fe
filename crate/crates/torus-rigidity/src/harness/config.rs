//! Experiment configuration: JSON on disk, validated before execution,
//! byte-identical serialize -> parse -> serialize round trips.

use crate::error::{Error, Result};
use crate::zoo::FunctionSpec;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    TheoremVerify,
    Scaling,
    Lemma4Verify,
    MorreyVerify,
    BoundsTable,
    Osc,
    Battery,
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ExperimentKind::TheoremVerify => "theorem-verify",
            ExperimentKind::Scaling => "scaling",
            ExperimentKind::Lemma4Verify => "lemma4-verify",
            ExperimentKind::MorreyVerify => "morrey-verify",
            ExperimentKind::BoundsTable => "bounds-table",
            ExperimentKind::Osc => "osc",
            ExperimentKind::Battery => "battery",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

fn default_trials() -> u64 {
    100
}
fn default_samples() -> u64 {
    10_000
}
fn default_seed() -> u64 {
    42
}
fn default_grid_m() -> usize {
    32
}

/// Everything one experiment run needs. Unknown keys are rejected so stale
/// configs fail loudly instead of silently running something else.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// function records, see `FunctionSpec::to_record`
    #[serde(default)]
    pub functions: Vec<String>,
    #[serde(default)]
    pub n_values: Vec<u64>,
    #[serde(default)]
    pub k_values: Vec<u64>,
    #[serde(default)]
    pub eps: Vec<f64>,
    #[serde(default)]
    pub alpha: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "default_samples")]
    pub samples: u64,
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    #[serde(default = "default_grid_m")]
    pub grid_m: usize,
    #[serde(default)]
    pub out: Option<String>,
    #[serde(default)]
    pub format: OutputFormat,
    /// battery only: perturb the coordinate threshold by 10% to prove the
    /// battery detects a broken formula
    #[serde(default)]
    pub inject_delta_bug: bool,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        Self {
            experiment,
            functions: Vec::new(),
            n_values: Vec::new(),
            k_values: Vec::new(),
            eps: Vec::new(),
            alpha: Vec::new(),
            trials: default_trials(),
            samples: default_samples(),
            master_seed: default_seed(),
            grid_m: default_grid_m(),
            out: None,
            format: OutputFormat::default(),
            inject_delta_bug: false,
        }
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(json).map_err(|e| Error::Config(format!("bad config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Parsed function specs; validates every record.
    pub fn parsed_functions(&self) -> Result<Vec<FunctionSpec>> {
        self.functions
            .iter()
            .map(|r| FunctionSpec::from_record(r))
            .collect()
    }

    /// Check the fields the target experiment requires.
    pub fn validate(&self) -> Result<()> {
        let fail = |what: &str| {
            Err(Error::Config(format!(
                "experiment '{}' requires {what}",
                self.experiment
            )))
        };
        if self.trials == 0 {
            return fail("trials >= 1");
        }
        if self.samples == 0 {
            return fail("samples >= 1");
        }
        if self.grid_m < 2 {
            return fail("grid_m >= 2");
        }
        for record in &self.functions {
            FunctionSpec::from_record(record)?;
        }
        for &e in &self.eps {
            if !(e > 0.0 && e <= 1.0) {
                return fail("eps values in (0, 1]");
            }
        }
        for &a in &self.alpha {
            if !(a > 0.0 && a <= 1.0) {
                return fail("alpha values in (0, 1]");
            }
        }
        match self.experiment {
            ExperimentKind::TheoremVerify => {
                if self.functions.is_empty() {
                    return fail("at least one function");
                }
                if self.n_values.is_empty() || self.k_values.is_empty() || self.eps.is_empty() {
                    return fail("n_values, k_values and eps");
                }
                if self.k_values.iter().any(|&k| k == 0 || k > 4) {
                    return fail("k_values within 1..=4 (oscillation budget)");
                }
            }
            ExperimentKind::Scaling => {
                if self.functions.is_empty() {
                    return fail("at least one function");
                }
                if self.n_values.is_empty() || self.k_values.is_empty() || self.eps.is_empty() {
                    return fail("n_values, k_values and eps");
                }
                if self.k_values.iter().any(|&k| k == 0 || k > 4) {
                    return fail("k_values within 1..=4 (oscillation budget)");
                }
            }
            ExperimentKind::Lemma4Verify => {
                if self.n_values.is_empty() || self.k_values.is_empty() {
                    return fail("n_values and k_values");
                }
                if self.alpha.is_empty() {
                    return fail("alpha");
                }
            }
            ExperimentKind::MorreyVerify => {
                if self.functions.is_empty() {
                    return fail("at least one function");
                }
                if self.k_values.is_empty() || self.alpha.is_empty() {
                    return fail("k_values and alpha");
                }
            }
            ExperimentKind::BoundsTable => {
                if self.n_values.is_empty() || self.eps.is_empty() || self.alpha.is_empty() {
                    return fail("n_values, eps and alpha");
                }
            }
            ExperimentKind::Osc => {
                if self.functions.is_empty() {
                    return fail("exactly one function");
                }
                if self.k_values.is_empty() {
                    return fail("k_values (subtorus dimension)");
                }
            }
            ExperimentKind::Battery => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_config() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(ExperimentKind::TheoremVerify);
        cfg.functions = vec!["family=dist-to-point n=16 center=0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0"
            .to_string()];
        cfg.n_values = vec![16, 64];
        cfg.k_values = vec![1];
        cfg.eps = vec![0.2];
        cfg.trials = 50;
        cfg
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let cfg = sample_config();
        let once = cfg.to_json();
        let parsed = ExperimentConfig::from_json(&once).unwrap();
        assert_eq!(parsed, cfg);
        assert_eq!(parsed.to_json(), once);
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut v: serde_json::Value = serde_json::from_str(&sample_config().to_json()).unwrap();
        v.as_object_mut()
            .unwrap()
            .insert("surprise".into(), serde_json::json!(1));
        let text = serde_json::to_string(&v).unwrap();
        assert!(matches!(
            ExperimentConfig::from_json(&text),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn validation_catches_missing_fields() {
        let mut cfg = sample_config();
        cfg.eps.clear();
        assert!(cfg.validate().is_err());

        let mut cfg = sample_config();
        cfg.k_values = vec![5];
        assert!(cfg.validate().is_err());

        let mut cfg = sample_config();
        cfg.functions = vec!["family=martian n=2".into()];
        assert!(cfg.validate().is_err());

        let mut cfg = sample_config();
        cfg.trials = 0;
        assert!(cfg.validate().is_err());
    }
}

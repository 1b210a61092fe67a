//! Experiment configuration: profiles, TOML ingestion and validation.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::combining::CombinerKind;
use crate::error::{Error, Result};
use crate::performance::{DistributedForm, PrelogForm};
use crate::powercontrol::DEFAULT_EPSILON;
use crate::scenario::NetworkConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PowerPolicy {
    /// Every user transmits with `eta = 1`.
    Full,
    /// Max-min fair power coefficients from bisection.
    Maxmin,
}

impl PowerPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            PowerPolicy::Full => "full",
            PowerPolicy::Maxmin => "maxmin",
        }
    }
}

impl fmt::Display for PowerPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PowerPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(PowerPolicy::Full),
            "maxmin" => Ok(PowerPolicy::Maxmin),
            other => Err(Error::Parameter(format!("unknown power policy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    /// Full-size reference deployment (M = 256, K = 10).
    Reference,
    /// Small deployment for quick runs and CI.
    Desk,
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reference" | "paper" => Ok(Profile::Reference),
            "desk" => Ok(Profile::Desk),
            other => Err(Error::Parameter(format!("unknown profile `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub network: NetworkConfig,
    /// Independent random placements.
    pub n_setups: usize,
    /// Channel realizations per setup.
    pub n_blocks: usize,
    /// Realizations averaged into the distributed moments of each setup.
    pub moment_blocks: usize,
    pub combiners: Vec<CombinerKind>,
    pub power_policies: Vec<PowerPolicy>,
    /// Bisection tolerance (linear SINR).
    pub epsilon: f64,
    pub prelog_form: PrelogForm,
    pub distributed_form: DistributedForm,
    /// Centralized RZF regularization; defaults to the noise power.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rzf_alpha: Option<f64>,
    pub output_dir: PathBuf,
    pub master_seed: u64,
}

impl ExperimentConfig {
    pub fn profile(profile: Profile) -> Self {
        match profile {
            Profile::Reference => Self {
                network: NetworkConfig::default(),
                n_setups: 100,
                n_blocks: 100,
                moment_blocks: 500,
                combiners: CombinerKind::ALL.to_vec(),
                power_policies: vec![PowerPolicy::Full, PowerPolicy::Maxmin],
                epsilon: DEFAULT_EPSILON,
                prelog_form: PrelogForm::AsPrinted,
                distributed_form: DistributedForm::AsPrinted,
                rzf_alpha: None,
                output_dir: PathBuf::from("out/reference"),
                master_seed: 2024,
            },
            Profile::Desk => Self {
                network: NetworkConfig {
                    aps: 16,
                    antennas_per_ap: 2,
                    users: 6,
                    // same AP density as the full deployment
                    radius_m: 500.0,
                    tau_p: 3,
                    tau_u: 197,
                    ..NetworkConfig::default()
                },
                n_setups: 50,
                n_blocks: 100,
                output_dir: PathBuf::from("out/desk"),
                ..Self::profile(Profile::Reference)
            },
        }
    }

    /// Parses a TOML document whose keys override `base`. Unknown keys are errors.
    pub fn from_toml_str(text: &str, base: &ExperimentConfig) -> std::result::Result<Self, String> {
        let overrides: toml::Table = toml::from_str(text).map_err(|e| e.to_string())?;
        let mut merged = toml::Table::try_from(base).map_err(|e| e.to_string())?;
        merge_tables(&mut merged, overrides);
        let cfg: ExperimentConfig = toml::Value::Table(merged)
            .try_into()
            .map_err(|e: toml::de::Error| e.to_string())?;
        Ok(cfg)
    }

    pub fn load(path: &Path, base: &ExperimentConfig) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg = Self::from_toml_str(&text, base).map_err(|message| Error::Parse {
            path: path.to_path_buf(),
            message,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config is always representable as TOML")
    }

    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        if self.n_setups == 0 {
            return Err(Error::config("n_setups", "must be >= 1"));
        }
        if self.n_blocks == 0 {
            return Err(Error::config("n_blocks", "must be >= 1"));
        }
        if self.moment_blocks == 0 {
            return Err(Error::config("moment_blocks", "must be >= 1"));
        }
        if self.combiners.is_empty() {
            return Err(Error::config("combiners", "must not be empty"));
        }
        if self.power_policies.is_empty() {
            return Err(Error::config("power_policies", "must not be empty"));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::config("epsilon", "must be > 0"));
        }
        if let Some(alpha) = self.rzf_alpha {
            if !(alpha > 0.0 && alpha.is_finite()) {
                return Err(Error::config("rzf_alpha", "must be > 0"));
            }
        }
        if self.prelog_form == PrelogForm::AsPrinted && self.network.tau_p >= self.network.tau_u {
            return Err(Error::config(
                "prelog_form",
                "as-printed prelog needs tau_p < tau_u",
            ));
        }
        Ok(())
    }
}

fn merge_tables(base: &mut toml::Table, overrides: toml::Table) {
    for (key, value) in overrides {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(dst)), toml::Value::Table(src)) => merge_tables(dst, src),
            (_, value) => {
                base.insert(key, value);
            }
        }
    }
}

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::auctions::TentativePolicy;
use crate::demand::{OracleKind, PriceVector};
use crate::exec::Execution;
use crate::price_learning::{Parity, PsiRange, TreeParams};
use crate::valuations::{Family, Valuation};
use crate::verifier::{InstanceClass, OPT_MAX_ASSIGNMENTS};

pub const MAX_TRIALS: usize = 1_000_000;

/// On-disk instance: `m` items, one valuation descriptor per bidder and
/// optional per-item prices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub m: usize,
    pub bidders: Vec<Family>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prices: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub m: usize,
    pub valuations: Vec<Valuation>,
    pub prices: Option<PriceVector>,
}

impl InstanceFile {
    pub fn into_instance(self) -> Result<Instance, ExperimentError> {
        if self.bidders.is_empty() {
            return Err(ExperimentError::Invalid(
                "bidders: need at least one bidder".into(),
            ));
        }
        let valuations = self
            .bidders
            .into_iter()
            .enumerate()
            .map(|(bidder, f)| {
                Valuation::new(self.m, f)
                    .map_err(|source| ExperimentError::Bidder { bidder, source })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let prices = match self.prices {
            None => None,
            Some(p) if p.len() != self.m => {
                return Err(ExperimentError::Invalid(format!(
                    "prices: expected {} entries, found {}",
                    self.m,
                    p.len()
                )))
            }
            Some(p) => Some(
                PriceVector::new(p)
                    .map_err(|e| ExperimentError::Invalid(format!("prices: {e}")))?,
            ),
        };
        Ok(Instance {
            m: self.m,
            valuations,
            prices,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MechanismKind {
    /// One fixed-price auction in a seeded random order.
    FixedPrice,
    PriceLearning,
    Generalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    #[serde(default = "default_alpha")]
    pub alpha: usize,
    #[serde(default = "default_beta")]
    pub beta: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// Defaults to the oracle's guaranteed `d`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
}

fn default_alpha() -> usize {
    2
}

fn default_beta() -> usize {
    2
}

impl Default for ParamsConfig {
    fn default() -> Self {
        ParamsConfig {
            alpha: default_alpha(),
            beta: default_beta(),
            gamma: None,
            d: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub class: InstanceClass,
    pub n: usize,
    pub m: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceSource {
    /// Path to an instance file, relative to the config file.
    File(PathBuf),
    Generator(GeneratorSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mechanism: MechanismKind,
    pub oracle: OracleKind,
    #[serde(default)]
    pub params: ParamsConfig,
    pub trials: usize,
    pub seed: u64,
    pub instance: InstanceSource,
    #[serde(default)]
    pub tentative: TentativePolicy,
    /// Price range for `price_learning`; defaults to the span of the
    /// nonzero supporting prices of each trial's optimum.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<PsiRange>,
    /// Range used by `generalized` when the statistics group is empty or
    /// has zero welfare; defaults to `[1, 16 m^3]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback_psi: Option<PsiRange>,
    #[serde(default)]
    pub execution: Execution,
}

impl ExperimentConfig {
    /// Number of items and bidders of every trial instance.
    pub fn shape(&self, file: Option<&Instance>) -> (usize, usize) {
        match (&self.instance, file) {
            (InstanceSource::Generator(g), _) => (g.m, g.n),
            (InstanceSource::File(_), Some(inst)) => (inst.m, inst.valuations.len()),
            (InstanceSource::File(_), None) => (0, 0),
        }
    }

    pub fn discount(&self, m: usize) -> Result<f64, ExperimentError> {
        let d = match self.params.d {
            Some(d) => d,
            None => {
                self.oracle
                    .guarantee(m)
                    .ok_or_else(|| {
                        ExperimentError::Invalid(format!(
                            "params.d: required for oracle {} (no known guarantee)",
                            self.oracle
                        ))
                    })?
                    .1
            }
        };
        if !(d > 0.0 && d <= 1.0) {
            return Err(ExperimentError::Invalid(format!(
                "params.d = {d} outside (0, 1]"
            )));
        }
        Ok(d)
    }

    pub fn fallback(&self, m: usize) -> PsiRange {
        self.fallback_psi
            .unwrap_or_else(|| PsiRange::explicit(1.0, 16.0 * (m as f64).powi(3)))
    }

    /// Checks every limit that does not depend on the trial's randomness.
    pub fn validate(&self, file: Option<&Instance>) -> Result<(), ExperimentError> {
        if self.trials > MAX_TRIALS {
            return Err(ExperimentError::Invalid(format!(
                "trials = {} exceeds {MAX_TRIALS}",
                self.trials
            )));
        }
        let (m, n) = self.shape(file);
        if let InstanceSource::Generator(g) = &self.instance {
            if g.n == 0 {
                return Err(ExperimentError::Invalid(
                    "instance.generator.n must be at least 1".into(),
                ));
            }
            crate::valuations::check_universe(g.m)
                .map_err(|e| ExperimentError::Invalid(format!("instance.generator.m: {e}")))?;
        }
        let fits = (n as u64)
            .checked_pow(m as u32)
            .is_some_and(|t| t <= OPT_MAX_ASSIGNMENTS);
        if !fits {
            return Err(ExperimentError::Invalid(format!(
                "{n} bidders over {m} items exceeds the brute-force cap of {OPT_MAX_ASSIGNMENTS} assignments"
            )));
        }
        self.discount(m)?;
        let tree = |psi: PsiRange| {
            TreeParams::new(
                self.params.alpha,
                self.params.beta,
                self.params.gamma,
                psi.psi_min,
                psi.psi_max,
                Parity::Even,
            )
            .map(|_| ())
            .map_err(|e| ExperimentError::Invalid(format!("params: {e}")))
        };
        match self.mechanism {
            MechanismKind::FixedPrice => Ok(()),
            MechanismKind::Generalized => {
                let ratio = 16.0 * (m as f64).powi(3);
                tree(PsiRange::explicit(1.0, ratio))?;
                tree(self.fallback(m))
            }
            MechanismKind::PriceLearning => match self.psi {
                Some(psi) => tree(psi),
                // The range is only known per trial; check the shape alone.
                None => tree(PsiRange::explicit(1.0, 1.0)),
            },
        }
    }
}

fn parse_json<T: DeserializeOwned>(what: &str, text: &str) -> Result<T, ExperimentError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let parsed: Result<T, _> = serde_path_to_error::deserialize(de);
    parsed.map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let message = if path.is_empty() || path == "." || path == "?" {
            inner.to_string()
        } else {
            format!("field `{path}`: {inner}")
        };
        ExperimentError::Parse {
            what: what.to_string(),
            message,
        }
    })
}

pub fn parse_instance(text: &str) -> Result<Instance, ExperimentError> {
    parse_json::<InstanceFile>("instance", text)?.into_instance()
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ExperimentError> {
    parse_json("config", text)
}

fn read(path: &Path) -> Result<String, ExperimentError> {
    std::fs::read_to_string(path).map_err(|e| ExperimentError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn load_instance(path: &Path) -> Result<Instance, ExperimentError> {
    parse_json::<InstanceFile>(&path.display().to_string(), &read(path)?)?.into_instance()
}

/// Reads a config and, for file-backed instances, the instance it names.
pub fn load_config(path: &Path) -> Result<(ExperimentConfig, Option<Instance>), ExperimentError> {
    let config: ExperimentConfig = parse_json(&path.display().to_string(), &read(path)?)?;
    let instance = match &config.instance {
        InstanceSource::File(rel) => {
            let base = path.parent().unwrap_or(Path::new("."));
            Some(load_instance(&base.join(rel))?)
        }
        InstanceSource::Generator(_) => None,
    };
    Ok((config, instance))
}

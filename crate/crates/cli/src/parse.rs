//! The `family:key=val,...` distribution mini-language for flags, and the
//! JSON experiment-file schema for sweeps.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;
use tradevol_core::eval::{RegretMode, RunConfig};
use tradevol_core::protocol::FeedbackKind;
use tradevol_core::{BrokerSpec, DistributionSpec};

use crate::CliError;

/// `key=val` pairs after the family name, consumed one known key at a time
/// so duplicates and leftovers both surface as errors.
struct KvArgs<'a> {
    family: &'a str,
    pairs: Vec<(&'a str, &'a str)>,
}

impl<'a> KvArgs<'a> {
    fn parse(family: &'a str, rest: Option<&'a str>) -> Result<Self, CliError> {
        let mut pairs = Vec::new();
        if let Some(rest) = rest {
            for item in rest.split(',') {
                let (key, value) = item.split_once('=').ok_or_else(|| {
                    CliError::Config(format!(
                        "distribution parameter {item:?} is not of the form key=val"
                    ))
                })?;
                pairs.push((key.trim(), value.trim()));
            }
        }
        Ok(KvArgs { family, pairs })
    }

    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, CliError> {
        let mut found = None;
        let mut rest = Vec::with_capacity(self.pairs.len());
        for (k, v) in self.pairs.drain(..) {
            if k == key {
                if found.is_some() {
                    return Err(CliError::Config(format!(
                        "duplicate parameter {key:?} for {}",
                        self.family
                    )));
                }
                let parsed = v.parse::<T>().map_err(|_| {
                    CliError::Config(format!("cannot parse {key}={v:?} for {}", self.family))
                })?;
                found = Some(parsed);
            } else {
                rest.push((k, v));
            }
        }
        self.pairs = rest;
        Ok(found)
    }

    fn require<T: FromStr>(&mut self, key: &str) -> Result<T, CliError> {
        self.take(key)?.ok_or_else(|| {
            CliError::Config(format!("{} requires {key}=<value>", self.family))
        })
    }

    fn finish(self) -> Result<(), CliError> {
        if let Some((key, _)) = self.pairs.first() {
            return Err(CliError::Config(format!(
                "unknown parameter {key:?} for {}",
                self.family
            )));
        }
        Ok(())
    }
}

/// Parses `uniform`, `piecewise_linear_lb:eps=..`, `four_atom:eps=..`, or
/// `interval_uniform:n=..[,k=..]` (k defaults to the middle cell 2^(n-1)).
/// The mixture family carries lists, so it is experiment-file-only.
pub fn parse_dist(text: &str) -> Result<DistributionSpec, CliError> {
    let (family, rest) = match text.split_once(':') {
        Some((family, rest)) => (family, Some(rest)),
        None => (text, None),
    };
    let mut kv = KvArgs::parse(family, rest)?;
    let spec = match family {
        "uniform" => DistributionSpec::uniform(),
        "piecewise_linear_lb" => DistributionSpec::piecewise_linear_lb(kv.require("eps")?)?,
        "four_atom" => DistributionSpec::four_atom(kv.require("eps")?)?,
        "interval_uniform" => {
            let n: u32 = kv.require("n")?;
            let k = match kv.take("k")? {
                Some(k) => k,
                None if (1..=60).contains(&n) => 1u64 << (n - 1),
                None => {
                    return Err(CliError::Config(format!(
                        "interval_uniform needs n in [1, 60], got {n}"
                    )))
                }
            };
            DistributionSpec::interval_uniform(k, n)?
        }
        "mixture" => {
            return Err(CliError::Config(
                "the mixture family takes lists; specify it in a sweep experiment file".into(),
            ))
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown distribution family {other:?}; expected uniform, \
                 piecewise_linear_lb, four_atom, or interval_uniform"
            )))
        }
    };
    kv.finish()?;
    Ok(spec)
}

fn default_replications() -> u64 {
    1
}

/// One sweep, fully specified: `{"distribution": {"family": ...},
/// "broker": {"algo": ..., "params": {...}}, "horizons": [...],
/// "replications": R, "seed": S, "feedback": "full"|"two_bit",
/// "regret_mode": "pseudo"|"realized", "output": "path.csv"}`.
/// Feedback and regret mode are optional; so are replications (1) and
/// seed (0).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub distribution: DistributionSpec,
    pub broker: BrokerSpec,
    pub horizons: Vec<u64>,
    #[serde(default = "default_replications")]
    pub replications: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub feedback: Option<FeedbackKind>,
    #[serde(default)]
    pub regret_mode: Option<RegretMode>,
    pub output: PathBuf,
}

impl ExperimentFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// The base config; the sweep rewrites `horizon` per entry in `horizons`.
    pub fn to_run_config(&self) -> RunConfig {
        let placeholder = self.horizons.first().copied().unwrap_or(1);
        let mut cfg =
            RunConfig::new(self.distribution.clone(), self.broker.clone(), placeholder);
        cfg.replications = self.replications;
        cfg.base_seed = self.seed;
        if let Some(feedback) = self.feedback {
            cfg.feedback = feedback;
        }
        if let Some(mode) = self.regret_mode {
            cfg.regret_mode = mode;
        }
        cfg
    }
}

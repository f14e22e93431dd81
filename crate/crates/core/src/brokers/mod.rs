//! Price-posting brokers.
//!
//! All brokers speak the same propose/observe interface so the harness can
//! drive any of them:
//!
//! - [`FemBroker`]: follow the empirical median; needs full feedback.
//!   Regret on continuous distributions grows logarithmically.
//! - [`MbsBroker`]: confidence-bounded binary search over dyadic prices;
//!   needs only the two threshold bits. Regret polylogarithmic when the cdf
//!   is Lipschitz.
//! - [`FePsiBroker`]: follow the maximizer of an empirical trade-probability
//!   objective; handles arbitrary (atomic) distributions at square-root
//!   regret.
//! - [`GridUcbBroker`]: UCB1 over a uniform price grid, a bandit baseline.
//! - [`FixedBroker`]: posts one price forever, the no-learning baseline.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::{Feedback, FeedbackKind, Price};

mod fem;
pub(crate) mod fepsi;
mod fixed;
mod grid_ucb;
mod mbs;

pub use fem::FemBroker;
pub use fepsi::{FePsiBroker, PsiVariant};
pub use fixed::FixedBroker;
pub use grid_ucb::GridUcbBroker;
pub use mbs::{EpochDecision, EpochRecord, MbsBroker};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BrokerError {
    #[error("broker requires {expected} feedback, got {got}")]
    WrongFeedback { expected: FeedbackKind, got: FeedbackKind },
    #[error("inconsistent broker state: {0}")]
    State(String),
    #[error("invalid broker parameter: {0}")]
    Parameter(String),
}

/// Feedback a broker can consume. `Any` accepts both kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeedbackRequirement {
    Full,
    TwoBit,
    Any,
}

impl FeedbackRequirement {
    pub fn accepts(self, kind: FeedbackKind) -> bool {
        match self {
            FeedbackRequirement::Full => kind == FeedbackKind::Full,
            FeedbackRequirement::TwoBit => kind == FeedbackKind::TwoBit,
            FeedbackRequirement::Any => true,
        }
    }

    /// The kind a harness should default to.
    pub fn default_kind(self) -> FeedbackKind {
        match self {
            FeedbackRequirement::TwoBit => FeedbackKind::TwoBit,
            _ => FeedbackKind::Full,
        }
    }
}

/// A price-posting learner. The harness calls `propose`, then `observe`,
/// exactly once each per round, with rounds numbered from 1.
pub trait Broker: Send {
    fn name(&self) -> &'static str;
    fn required_feedback(&self) -> FeedbackRequirement;
    /// Deterministic given the internal state accumulated through round `t - 1`.
    fn propose(&mut self, t: u64) -> Result<Price, BrokerError>;
    fn observe(&mut self, t: u64, price: Price, feedback: &Feedback) -> Result<(), BrokerError>;
    /// Back to the initial state; `seed` reseeds any owned randomness.
    fn reset(&mut self, seed: u64);
}

/// Broker construction recipe, serializable as `{"algo": ..., "params": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrokerSpec {
    pub algo: Algo,
    #[serde(default)]
    pub params: BrokerParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algo {
    Fem,
    Mbs,
    Fepsi,
    GridUcb,
    Fixed,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Fem => "fem",
            Algo::Mbs => "mbs",
            Algo::Fepsi => "fepsi",
            Algo::GridUcb => "grid_ucb",
            Algo::Fixed => "fixed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BrokerParams {
    /// MBS failure probability; defaults to `2 / T^3`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// MBS bit-collection budget; defaults to the run horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u64>,
    /// Fixed broker's price.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Grid size for the UCB baseline; defaults to `ceil(T^(2/3))`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u64>,
    /// Empirical objective for fepsi; defaults to `surrogate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<PsiVariant>,
}

impl BrokerSpec {
    pub fn new(algo: Algo) -> Self {
        BrokerSpec { algo, params: BrokerParams::default() }
    }

    pub fn fixed(p: f64) -> Self {
        BrokerSpec {
            algo: Algo::Fixed,
            params: BrokerParams { p: Some(p), ..Default::default() },
        }
    }

    pub fn required_feedback(&self) -> FeedbackRequirement {
        match self.algo {
            Algo::Fem | Algo::Fepsi => FeedbackRequirement::Full,
            Algo::Mbs | Algo::GridUcb => FeedbackRequirement::TwoBit,
            Algo::Fixed => FeedbackRequirement::Any,
        }
    }

    /// Instantiates the broker for a run of `horizon` rounds, filling
    /// horizon-dependent defaults.
    pub fn build(&self, horizon: u64) -> Result<Box<dyn Broker>, BrokerError> {
        if horizon < 1 {
            return Err(BrokerError::Parameter("horizon must be at least 1".into()));
        }
        let p = &self.params;
        Ok(match self.algo {
            Algo::Fem => Box::new(FemBroker::new()),
            Algo::Mbs => {
                let delta = p.delta.unwrap_or(2.0 / (horizon as f64).powi(3));
                let budget = p.horizon.unwrap_or(horizon);
                Box::new(MbsBroker::new(delta, budget)?)
            }
            Algo::Fepsi => Box::new(FePsiBroker::new(p.variant.unwrap_or_default())),
            Algo::GridUcb => {
                let k = p.k.unwrap_or_else(|| default_grid_size(horizon));
                Box::new(GridUcbBroker::new(k)?)
            }
            Algo::Fixed => {
                let price = p
                    .p
                    .ok_or_else(|| BrokerError::Parameter("fixed broker needs p".into()))?;
                let price = Price::new(price)
                    .map_err(|e| BrokerError::Parameter(e.to_string()))?;
                Box::new(FixedBroker::new(price))
            }
        })
    }
}

/// Smallest integer `k` with `k^3 >= horizon^2`, i.e. `ceil(horizon^(2/3))`,
/// computed exactly to dodge `powf` rounding at perfect cubes.
pub fn default_grid_size(horizon: u64) -> u64 {
    let target = (horizon as u128).pow(2);
    let mut k = (horizon as f64).powf(2.0 / 3.0).floor().max(1.0) as u64;
    while k > 1 && ((k - 1) as u128).pow(3) >= target {
        k -= 1;
    }
    while (k as u128).pow(3) < target {
        k += 1;
    }
    k
}

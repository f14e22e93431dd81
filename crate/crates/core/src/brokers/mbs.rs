//! Median binary search broker.
//!
//! Works from threshold bits alone. The price walks the dyadic tree: epoch
//! `tau` posts a fixed price `Q_tau` and pools the bits `I{{v <= Q_tau}}`,
//! whose mean estimates `F(Q_tau)`. Once a Hoeffding interval of level
//! `delta` separates that mean from 1/2 the epoch ends and the price steps
//! `2^-(tau+1)` toward the median:
//!
//! ```text
//! move right  if  y/s + sqrt(ln(2/delta) / (2s)) < 1/2
//! move left   if  y/s - sqrt(ln(2/delta) / (2s)) > 1/2
//! ```
//!
//! Bits are collected for at most `budget` rounds; afterwards the current
//! price is posted unchanged. The dyadic step underflows to zero around
//! epoch 1074, freezing the price at the deepest representable level, which
//! is the intended limit behavior.

use crate::protocol::{Feedback, FeedbackKind, Price};

use super::{Broker, BrokerError, FeedbackRequirement};

/// What one observed bit pair did to the current epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpochDecision {
    Continue,
    MovedRight,
    MovedLeft,
}

/// A completed epoch: the price it posted and the bits it consumed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub price: f64,
    /// Number of bits pooled (two per round).
    pub bits: u64,
    /// Number of 1-bits among them.
    pub ones: u64,
    pub decision: EpochDecision,
}

pub struct MbsBroker {
    delta: f64,
    budget: u64,
    q: f64,
    tau: u32,
    bits: u64,
    ones: u64,
    rounds_used: u64,
    epochs: Vec<EpochRecord>,
}

impl MbsBroker {
    pub fn new(delta: f64, budget: u64) -> Result<Self, BrokerError> {
        if !(delta.is_finite() && 0.0 < delta && delta < 1.0) {
            return Err(BrokerError::Parameter(format!(
                "delta {delta} outside (0, 1)"
            )));
        }
        if budget < 1 {
            return Err(BrokerError::Parameter("budget must be at least 1".into()));
        }
        Ok(MbsBroker {
            delta,
            budget,
            q: 0.5,
            tau: 1,
            bits: 0,
            ones: 0,
            rounds_used: 0,
            epochs: Vec::new(),
        })
    }

    pub fn price(&self) -> f64 {
        self.q
    }

    /// Current epoch index, 1-based.
    pub fn epoch(&self) -> u32 {
        self.tau
    }

    pub fn completed_epochs(&self) -> &[EpochRecord] {
        &self.epochs
    }

    /// Pools one bit pair and applies the epoch test.
    pub fn step(&mut self, b1: bool, b2: bool) -> EpochDecision {
        self.bits += 2;
        self.ones += u64::from(b1) + u64::from(b2);
        let mean = self.ones as f64 / self.bits as f64;
        let radius = ((2.0 / self.delta).ln() / (2.0 * self.bits as f64)).sqrt();
        let decision = if mean + radius < 0.5 {
            EpochDecision::MovedRight
        } else if mean - radius > 0.5 {
            EpochDecision::MovedLeft
        } else {
            EpochDecision::Continue
        };
        if decision != EpochDecision::Continue {
            self.epochs.push(EpochRecord {
                price: self.q,
                bits: self.bits,
                ones: self.ones,
                decision,
            });
            let step = 2.0f64.powi(-(self.tau as i32 + 1));
            match decision {
                EpochDecision::MovedRight => self.q += step,
                EpochDecision::MovedLeft => self.q -= step,
                EpochDecision::Continue => unreachable!(),
            }
            self.tau += 1;
            self.bits = 0;
            self.ones = 0;
        }
        decision
    }
}

impl Broker for MbsBroker {
    fn name(&self) -> &'static str {
        "mbs"
    }

    fn required_feedback(&self) -> FeedbackRequirement {
        FeedbackRequirement::TwoBit
    }

    fn propose(&mut self, _t: u64) -> Result<Price, BrokerError> {
        Ok(Price::from_valid(self.q))
    }

    fn observe(&mut self, _t: u64, _price: Price, feedback: &Feedback) -> Result<(), BrokerError> {
        let Feedback::TwoBit { b1, b2 } = feedback else {
            return Err(BrokerError::WrongFeedback {
                expected: FeedbackKind::TwoBit,
                got: FeedbackKind::Full,
            });
        };
        if self.rounds_used >= self.budget {
            return Ok(());
        }
        self.rounds_used += 1;
        self.step(*b1, *b2);
        Ok(())
    }

    fn reset(&mut self, _seed: u64) {
        self.q = 0.5;
        self.tau = 1;
        self.bits = 0;
        self.ones = 0;
        self.rounds_used = 0;
        self.epochs.clear();
    }
}

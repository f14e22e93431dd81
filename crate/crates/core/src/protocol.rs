//! Round mechanics for the posted-price trading protocol.
//!
//! Each round the platform draws two independent valuations from a common
//! distribution on `[0, 1]`, the broker posts a price, and a trade executes
//! iff the price lands in the closed interval spanned by the two valuations.
//! The broker is paid per executed trade and learns either both valuations
//! (full feedback) or one threshold bit per trader (2-bit feedback).

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("value {0} outside [0, 1]")]
    OutOfRange(f64),
}

/// A posted price, guaranteed finite and inside `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Price(f64);

impl Price {
    pub const HALF: Price = Price(0.5);

    pub fn new(value: f64) -> Result<Self, ProtocolError> {
        if value.is_finite() && (0.0..=1.0).contains(&value) {
            Ok(Price(value))
        } else {
            Err(ProtocolError::OutOfRange(value))
        }
    }

    /// For prices produced by arithmetic that stays in `[0, 1]` by construction.
    pub(crate) fn from_valid(value: f64) -> Self {
        debug_assert!((0.0..=1.0).contains(&value), "price {value} out of range");
        Price(value)
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Price {
    type Error = ProtocolError;
    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Price::new(value)
    }
}

impl From<Price> for f64 {
    fn from(p: Price) -> f64 {
        p.0
    }
}

/// One round's pair of independent trader valuations, both in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValuationPair {
    pub v1: f64,
    pub v2: f64,
}

impl ValuationPair {
    pub fn new(v1: f64, v2: f64) -> Result<Self, ProtocolError> {
        for v in [v1, v2] {
            if !(v.is_finite() && (0.0..=1.0).contains(&v)) {
                return Err(ProtocolError::OutOfRange(v));
            }
        }
        Ok(ValuationPair { v1, v2 })
    }

    /// 1 iff a trade executes at `price`: `min(v1, v2) <= price <= max(v1, v2)`.
    pub fn trades_at(&self, price: Price) -> u8 {
        let p = price.get();
        u8::from(self.v1.min(self.v2) <= p && p <= self.v1.max(self.v2))
    }
}

/// Trade indicator: 1 iff `p` lies in the closed interval `[min(v1, v2), max(v1, v2)]`.
///
/// All three arguments must lie in `[0, 1]`.
pub fn trade_indicator(p: f64, v1: f64, v2: f64) -> Result<u8, ProtocolError> {
    let price = Price::new(p)?;
    Ok(ValuationPair::new(v1, v2)?.trades_at(price))
}

/// What a broker observes after a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackKind {
    Full,
    TwoBit,
}

impl std::fmt::Display for FeedbackKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FeedbackKind::Full => write!(f, "full"),
            FeedbackKind::TwoBit => write!(f, "two_bit"),
        }
    }
}

/// Post-round feedback. In the 2-bit model `b1 = I{{v1 <= p}}`, `b2 = I{{v2 <= p}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feedback {
    Full { v1: f64, v2: f64 },
    TwoBit { b1: bool, b2: bool },
}

impl Feedback {
    pub fn kind(&self) -> FeedbackKind {
        match self {
            Feedback::Full { .. } => FeedbackKind::Full,
            Feedback::TwoBit { .. } => FeedbackKind::TwoBit,
        }
    }
}

/// Builds the feedback a broker receives for posting `price` against `pair`.
pub fn make_feedback(kind: FeedbackKind, price: Price, pair: ValuationPair) -> Feedback {
    match kind {
        FeedbackKind::Full => Feedback::Full {
            v1: pair.v1,
            v2: pair.v2,
        },
        FeedbackKind::TwoBit => Feedback::TwoBit {
            b1: pair.v1 <= price.get(),
            b2: pair.v2 <= price.get(),
        },
    }
}

/// Bandit-style reward reconstruction from the two threshold bits.
///
/// `b1 != b2` means the price separated the valuations, so a trade executed.
/// Exact whenever no valuation equals the price (almost surely for atomless
/// distributions); a valuation sitting exactly on the price flips the left
/// inequality from strict to weak and the reconstruction can undercount.
pub fn reconstruct_bandit_reward(b1: bool, b2: bool) -> u8 {
    u8::from(b1 != b2)
}

/// Everything produced by one protocol round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome {
    pub t: u64,
    pub price: Price,
    pub valuations: ValuationPair,
    pub reward: u8,
    pub feedback: Feedback,
}

impl RoundOutcome {
    /// `reward` and `feedback` are derived, never supplied, so they always
    /// agree with `price` and `valuations`.
    pub fn new(t: u64, price: Price, valuations: ValuationPair, kind: FeedbackKind) -> Self {
        RoundOutcome {
            t,
            price,
            valuations,
            reward: valuations.trades_at(price),
            feedback: make_feedback(kind, price, valuations),
        }
    }
}

//! Simulation library for repeated brokerage: a broker posts a price each
//! round, two independent traders with private valuations either trade or
//! don't, and the broker learns from full or two-bit feedback.
//!
//! The crate provides:
//!
//! - [`protocol`]: rounds, prices, trade indicators, feedback construction;
//! - [`dist`]: the analytic valuation families (cdfs, quantiles, expected
//!   reward curves, exact best prices);
//! - [`brokers`]: the learning and baseline pricing algorithms;
//! - [`eval`]: the seeded regret harness, bound checks, growth fits, CSV;
//! - [`game`]: the segment-halving search game two-bit brokers reduce to;
//! - [`stats`]: small numeric helpers (pairwise sums, KS distances).

pub mod brokers;
pub mod dist;
pub mod eval;
pub mod game;
pub mod protocol;
pub mod stats;

/// The crate-wide RNG: a small, fast, reproducible counter-based generator.
/// Every simulation seeds one of these from a `u64`.
pub type SimRng = rand_chacha::ChaCha8Rng;

pub use brokers::{Algo, Broker, BrokerError, BrokerParams, BrokerSpec, FeedbackRequirement};
pub use dist::{DistError, DistributionSpec};
pub use eval::{
    fit_growth, run_once, run_replicated, run_sweep, BoundKind, EvalError, GrowthFit,
    GrowthModel, RegretCurve, RegretMode, RunConfig, RunRecord,
};
pub use game::{play_game, GameError, GameOutcome, SegmentStrategy, SurrogateGame};
pub use protocol::{
    make_feedback, trade_indicator, Feedback, FeedbackKind, Price, ProtocolError, RoundOutcome,
    ValuationPair,
};

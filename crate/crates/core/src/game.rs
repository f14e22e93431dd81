//! Discrete search game between a cell-guessing player and a segment-halving
//! adversary, plus adapters that let a two-bit broker play it.
//!
//! The instance space is `{1, ..., 2^n}`. Each round the player names a cell;
//! the adversary answers a single bit, `I{play <= k*}`, while keeping the set
//! of instances consistent with all answers so far as large as possible:
//!
//! ```text
//! play outside [a, b]      segment unchanged, bit = I{play <= b}, loss 1/2
//! play in [a, b], a < b    bit 1 and [play+1, b]   if 2*play < a + b
//!                          bit 0 and [a, play-1]   otherwise;       loss 1/2
//! play == a == b           the player has found k*: game over, no loss
//! ```
//!
//! Halving keeps at least `2^(n-t) - 1` instances alive after `t` rounds, so
//! no strategy can win before round `n` and every strategy pays at least
//! `(n-1)/2` in total loss.

use serde::Serialize;

use crate::brokers::{Broker, BrokerError};
use crate::protocol::{Feedback, FeedbackKind, Price};
use crate::SimRng;
use rand::{Rng, SeedableRng};

#[derive(Debug, thiserror::Error)]
pub enum GameError {
    #[error("play {play} lies outside [1, {max}]")]
    OutsideRange { play: u64, max: u64 },
    #[error("the game is already over")]
    GameOver,
    #[error("invalid game parameter: {0}")]
    Parameter(String),
    #[error("strategy state: {0}")]
    State(String),
    #[error(transparent)]
    Broker(#[from] BrokerError),
}

/// Depths up to this keep `2^n` and the doubling in the halving rule exact
/// in both u64 and f64 arithmetic.
pub const MAX_DEPTH: u32 = 30;

fn check_depth(n: u32) -> Result<(), GameError> {
    if !(1..=MAX_DEPTH).contains(&n) {
        return Err(GameError::Parameter(format!(
            "depth must lie in [1, {MAX_DEPTH}], got {n}"
        )));
    }
    Ok(())
}

/// The adversary's side of the game: the consistent segment and the running
/// loss tally.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurrogateGame {
    n: u32,
    lo: u64,
    hi: u64,
    rounds: u64,
    loss_rounds: u64,
    winner: Option<u64>,
}

impl SurrogateGame {
    pub fn new(n: u32) -> Result<Self, GameError> {
        check_depth(n)?;
        Ok(SurrogateGame { n, lo: 1, hi: 1u64 << n, rounds: 0, loss_rounds: 0, winner: None })
    }

    pub fn depth(&self) -> u32 {
        self.n
    }

    pub fn instance_count(&self) -> u64 {
        1u64 << self.n
    }

    /// Inclusive `[a, b]` of instances consistent with every answer so far.
    pub fn segment(&self) -> (u64, u64) {
        (self.lo, self.hi)
    }

    pub fn segment_len(&self) -> u64 {
        self.hi - self.lo + 1
    }

    pub fn rounds_played(&self) -> u64 {
        self.rounds
    }

    /// Rounds in which the player failed to name the surviving instance.
    pub fn loss_rounds(&self) -> u64 {
        self.loss_rounds
    }

    pub fn total_loss(&self) -> f64 {
        self.loss_rounds as f64 * 0.5
    }

    pub fn is_over(&self) -> bool {
        self.winner.is_some()
    }

    /// The instance the adversary committed to when the game ended.
    pub fn committed_instance(&self) -> Option<u64> {
        self.winner
    }

    /// Guaranteed segment size after `t` rounds of any play sequence
    /// (0 once `t` reaches the depth: the segment may then be pinned).
    pub fn min_segment_len(n: u32, t: u64) -> u64 {
        if t >= u64::from(n) {
            0
        } else {
            (1u64 << (u64::from(n) - t)) - 1
        }
    }

    /// Answers one play with `(bit, game_over)` per the halving rule.
    pub fn respond(&mut self, play: u64) -> Result<(bool, bool), GameError> {
        if self.is_over() {
            return Err(GameError::GameOver);
        }
        if play < 1 || play > self.instance_count() {
            return Err(GameError::OutsideRange { play, max: self.instance_count() });
        }
        self.rounds += 1;
        if play < self.lo || play > self.hi {
            self.loss_rounds += 1;
            return Ok((play <= self.hi, false));
        }
        if self.lo == self.hi {
            self.winner = Some(self.lo);
            return Ok((true, true));
        }
        // Exact comparison of play against the midpoint (a + b) / 2.
        if 2 * play < self.lo + self.hi {
            self.lo = play + 1;
            self.loss_rounds += 1;
            Ok((true, false))
        } else {
            self.hi = play - 1;
            self.loss_rounds += 1;
            Ok((false, false))
        }
    }
}

/// Cell index of a price: `k` iff the price lies in
/// `[(k-1) / 2^n, k / 2^n)`, with the last cell closed at 1.
pub fn price_to_cell(price: Price, n: u32) -> u64 {
    debug_assert!((1..=MAX_DEPTH).contains(&n));
    let cells = 1u64 << n;
    let idx = (price.get() * cells as f64).floor() as u64 + 1;
    idx.min(cells)
}

/// A player: proposes a cell, then learns the adversary's bit.
pub trait SegmentStrategy {
    fn name(&self) -> &str;
    fn next_play(&mut self, t: u64) -> Result<u64, GameError>;
    fn observe_bit(&mut self, t: u64, play: u64, bit: bool) -> Result<(), GameError>;
}

/// Deterministic binary search: plays the floor-midpoint of its belief
/// interval and trusts the bit literally (`bit = I{play <= k*}` keeps
/// `k* > play` after a 1 from the halving adversary, `k* < play` after a 0).
pub struct BisectStrategy {
    lo: u64,
    hi: u64,
}

impl BisectStrategy {
    pub fn new(n: u32) -> Result<Self, GameError> {
        check_depth(n)?;
        Ok(BisectStrategy { lo: 1, hi: 1u64 << n })
    }
}

impl SegmentStrategy for BisectStrategy {
    fn name(&self) -> &str {
        "bisect"
    }

    fn next_play(&mut self, _t: u64) -> Result<u64, GameError> {
        if self.lo > self.hi {
            return Err(GameError::State("bisection belief emptied".into()));
        }
        Ok(self.lo + (self.hi - self.lo) / 2)
    }

    fn observe_bit(&mut self, _t: u64, play: u64, bit: bool) -> Result<(), GameError> {
        if bit {
            self.lo = play + 1;
        } else {
            self.hi = play - 1;
        }
        Ok(())
    }
}

/// Uniformly random cell each round; ignores feedback.
pub struct RandomStrategy {
    cells: u64,
    rng: SimRng,
}

impl RandomStrategy {
    pub fn new(n: u32, seed: u64) -> Result<Self, GameError> {
        check_depth(n)?;
        Ok(RandomStrategy { cells: 1u64 << n, rng: SimRng::seed_from_u64(seed) })
    }
}

impl SegmentStrategy for RandomStrategy {
    fn name(&self) -> &str {
        "random"
    }

    fn next_play(&mut self, _t: u64) -> Result<u64, GameError> {
        Ok(self.rng.gen_range(1..=self.cells))
    }

    fn observe_bit(&mut self, _t: u64, _play: u64, _bit: bool) -> Result<(), GameError> {
        Ok(())
    }
}

/// Runs a two-bit broker as a player: prices map to cells, and the
/// adversary's single bit is duplicated into the `(b1, b2)` pair the broker
/// expects. Both traders "sitting on the same side" of the price is exactly
/// the no-trade feedback the reduction prescribes.
pub struct BrokerStrategy {
    broker: Box<dyn Broker>,
    n: u32,
    pending: Option<Price>,
}

impl BrokerStrategy {
    pub fn new(broker: Box<dyn Broker>, n: u32) -> Result<Self, GameError> {
        check_depth(n)?;
        if !broker.required_feedback().accepts(FeedbackKind::TwoBit) {
            return Err(GameError::Parameter(format!(
                "{} cannot consume two-bit feedback",
                broker.name()
            )));
        }
        Ok(BrokerStrategy { broker, n, pending: None })
    }
}

impl SegmentStrategy for BrokerStrategy {
    fn name(&self) -> &str {
        self.broker.name()
    }

    fn next_play(&mut self, t: u64) -> Result<u64, GameError> {
        let price = self.broker.propose(t)?;
        self.pending = Some(price);
        Ok(price_to_cell(price, self.n))
    }

    fn observe_bit(&mut self, t: u64, _play: u64, bit: bool) -> Result<(), GameError> {
        let price = self
            .pending
            .take()
            .ok_or_else(|| GameError::State("observe_bit before next_play".into()))?;
        self.broker
            .observe(t, price, &Feedback::TwoBit { b1: bit, b2: bit })?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GameRound {
    pub t: u64,
    pub play: u64,
    pub bit: bool,
    /// Consistent segment after this round's response.
    pub segment: (u64, u64),
    pub cumulative_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameOutcome {
    pub n: u32,
    pub strategy: String,
    /// Rounds the player paid for; the winning round, if any, is free.
    pub rounds_survived: u64,
    pub total_loss: f64,
    pub won: bool,
    /// The adversary's committed instance when the player won.
    pub instance: Option<u64>,
    pub history: Vec<GameRound>,
}

impl GameOutcome {
    /// Segment left standing when play stopped.
    pub fn final_segment(&self) -> (u64, u64) {
        self.history
            .last()
            .map(|round| round.segment)
            .unwrap_or((1, 1u64 << self.n))
    }
}

/// Plays `strategy` against the halving adversary for at most `horizon`
/// rounds (fewer if the strategy pins the instance first).
pub fn play_game(
    strategy: &mut dyn SegmentStrategy,
    n: u32,
    horizon: u64,
) -> Result<GameOutcome, GameError> {
    let mut game = SurrogateGame::new(n)?;
    let mut history = Vec::new();
    for t in 1..=horizon {
        let play = strategy.next_play(t)?;
        let (bit, over) = game.respond(play)?;
        history.push(GameRound {
            t,
            play,
            bit,
            segment: game.segment(),
            cumulative_loss: game.total_loss(),
        });
        if over {
            break;
        }
        debug_assert!(game.segment_len() >= SurrogateGame::min_segment_len(n, t));
        strategy.observe_bit(t, play, bit)?;
    }
    Ok(GameOutcome {
        n,
        strategy: strategy.name().to_owned(),
        rounds_survived: game.loss_rounds(),
        total_loss: game.total_loss(),
        won: game.is_over(),
        instance: game.committed_instance(),
        history,
    })
}

/// Checks every answered bit against every instance still standing at the
/// end. Monotonicity of `I{play <= k}` in `k` means checking the two
/// endpoints of the final segment covers the whole of it.
pub fn replay_consistent(outcome: &GameOutcome) -> bool {
    let (a, b) = match outcome.instance {
        Some(k) => (k, k),
        None => outcome.final_segment(),
    };
    outcome
        .history
        .iter()
        .all(|round| (round.play <= a) == round.bit && (round.play <= b) == round.bit)
}

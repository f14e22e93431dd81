//! UCB1 over a uniform price grid, the bandit baseline.
//!
//! Arm `i` (1-based) posts `(2i - 1) / 2K`, the midpoints of a `K`-cell
//! partition of `[0, 1]`. The per-round reward is reconstructed from the two
//! threshold bits as `I{{b1 != b2}}`. Arms are played once each in order,
//! then by highest `mean + sqrt(2 ln t / pulls)`, lowest index on ties.

use crate::protocol::{reconstruct_bandit_reward, Feedback, FeedbackKind, Price};

use super::{Broker, BrokerError, FeedbackRequirement};

pub struct GridUcbBroker {
    pulls: Vec<u64>,
    wins: Vec<u64>,
    /// Arm chosen by the last `propose`, consumed by `observe`.
    pending: Option<usize>,
}

impl GridUcbBroker {
    pub fn new(k: u64) -> Result<Self, BrokerError> {
        if k < 1 {
            return Err(BrokerError::Parameter("grid size must be at least 1".into()));
        }
        if k > 1 << 30 {
            return Err(BrokerError::Parameter(format!("grid size {k} too large")));
        }
        Ok(GridUcbBroker {
            pulls: vec![0; k as usize],
            wins: vec![0; k as usize],
            pending: None,
        })
    }

    pub fn grid_size(&self) -> usize {
        self.pulls.len()
    }

    pub fn arm_price(&self, index: usize) -> Price {
        debug_assert!(index < self.grid_size());
        Price::from_valid((2 * index + 1) as f64 / (2 * self.grid_size()) as f64)
    }

    /// Arm the policy picks at round `t`: forced exploration in index order
    /// until every arm has one pull, then the UCB1 rule.
    pub fn choose(&self, t: u64) -> usize {
        if let Some(unplayed) = self.pulls.iter().position(|c| *c == 0) {
            return unplayed;
        }
        let ln_t = (t as f64).ln();
        let mut best = 0;
        let mut best_index = f64::NEG_INFINITY;
        for i in 0..self.grid_size() {
            let n = self.pulls[i] as f64;
            let idx = self.wins[i] as f64 / n + (2.0 * ln_t / n).sqrt();
            if idx > best_index {
                best_index = idx;
                best = i;
            }
        }
        best
    }
}

impl Broker for GridUcbBroker {
    fn name(&self) -> &'static str {
        "grid_ucb"
    }

    fn required_feedback(&self) -> FeedbackRequirement {
        FeedbackRequirement::TwoBit
    }

    fn propose(&mut self, t: u64) -> Result<Price, BrokerError> {
        if self.pending.is_some() {
            return Err(BrokerError::State(
                "propose called again before observe".into(),
            ));
        }
        let arm = self.choose(t);
        self.pending = Some(arm);
        Ok(self.arm_price(arm))
    }

    fn observe(&mut self, _t: u64, _price: Price, feedback: &Feedback) -> Result<(), BrokerError> {
        let Feedback::TwoBit { b1, b2 } = feedback else {
            return Err(BrokerError::WrongFeedback {
                expected: FeedbackKind::TwoBit,
                got: FeedbackKind::Full,
            });
        };
        let arm = self.pending.take().ok_or_else(|| {
            BrokerError::State("observe without a pending proposal".into())
        })?;
        self.pulls[arm] += 1;
        self.wins[arm] += u64::from(reconstruct_bandit_reward(*b1, *b2));
        Ok(())
    }

    fn reset(&mut self, _seed: u64) {
        self.pulls.iter_mut().for_each(|c| *c = 0);
        self.wins.iter_mut().for_each(|c| *c = 0);
        self.pending = None;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn observe_bits(b: &mut GridUcbBroker, t: u64, price: Price, trade: bool) {
        let fb = Feedback::TwoBit { b1: trade, b2: false };
        b.observe(t, price, &fb).unwrap();
    }

    #[test]
    fn grid_prices_are_cell_midpoints() {
        let b = GridUcbBroker::new(4).unwrap();
        assert_eq!(b.arm_price(0).get(), 0.125);
        assert_eq!(b.arm_price(2).get(), 0.625);
    }

    #[test]
    fn forced_exploration_in_order() {
        let mut b = GridUcbBroker::new(4).unwrap();
        for (t, want) in [(1, 0.125), (2, 0.375), (3, 0.625), (4, 0.875)] {
            let p = b.propose(t).unwrap();
            assert_eq!(p.get(), want);
            observe_bits(&mut b, t, p, false);
        }
    }

    #[test]
    fn ucb_rule_after_exploration() {
        // K=2, rewards (1, 0) after one pull each: at t=3 arm 1 has index
        // 1 + sqrt(2 ln 3), arm 2 sqrt(2 ln 3); arm 1 wins.
        let mut b = GridUcbBroker::new(2).unwrap();
        let p = b.propose(1).unwrap();
        observe_bits(&mut b, 1, p, true);
        let p = b.propose(2).unwrap();
        observe_bits(&mut b, 2, p, false);
        assert_eq!(b.propose(3).unwrap().get(), 0.25);
    }

    #[test]
    fn tie_breaks_to_lowest_index() {
        let mut b = GridUcbBroker::new(3).unwrap();
        for t in 1..=3 {
            let p = b.propose(t).unwrap();
            observe_bits(&mut b, t, p, false);
        }
        // All arms identical: pick arm 1.
        assert_eq!(b.propose(4).unwrap().get(), 1.0 / 6.0);
    }

    #[test]
    fn call_order_violations_are_state_errors() {
        let mut b = GridUcbBroker::new(2).unwrap();
        let p = b.propose(1).unwrap();
        assert!(matches!(b.propose(1), Err(BrokerError::State(_))));
        let fb = Feedback::TwoBit { b1: false, b2: false };
        b.observe(1, p, &fb).unwrap();
        assert!(matches!(b.observe(2, p, &fb), Err(BrokerError::State(_))));
    }

    #[test]
    fn rejects_full_feedback() {
        let mut b = GridUcbBroker::new(2).unwrap();
        let p = b.propose(1).unwrap();
        let fb = Feedback::Full { v1: 0.2, v2: 0.8 };
        assert!(matches!(
            b.observe(1, p, &fb),
            Err(BrokerError::WrongFeedback { .. })
        ));
    }

    proptest! {
        #[test]
        fn proposals_stay_on_grid(k in 1u64..12, trades in prop::collection::vec(prop::bool::ANY, 40)) {
            let mut b = GridUcbBroker::new(k).unwrap();
            for (i, trade) in trades.iter().enumerate() {
                let t = i as u64 + 1;
                let p = b.propose(t).unwrap();
                let on_grid = (0..k as usize).any(|i| b.arm_price(i) == p);
                prop_assert!(on_grid, "price {} off the {}-cell grid", p.get(), k);
                observe_bits(&mut b, t, p, *trade);
            }
        }
    }
}

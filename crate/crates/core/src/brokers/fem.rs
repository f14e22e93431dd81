//! Follow-the-empirical-median broker.
//!
//! Opens at 1/2; from round 2 on posts the midpoint of the two middle order
//! statistics of all valuations seen so far. With `2(t-1)` observations those
//! are the `(t-1)`-th and `t`-th smallest, so the posted price is an empirical
//! median.

use std::cmp::Ordering;
use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::protocol::{Feedback, FeedbackKind, Price};

use super::{Broker, BrokerError, FeedbackRequirement};

/// `f64` in `[0, 1]` with total order, for heap storage.
#[derive(Clone, Copy, PartialEq)]
struct Ord64(f64);

impl Eq for Ord64 {}

impl PartialOrd for Ord64 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ord64 {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// The observed sample as an ordered multiset, split into halves so the two
/// middle order statistics are the heap tops: `lower` is a max-heap of the
/// smallest half, `upper` a min-heap of the largest.
#[derive(Default)]
pub struct FemBroker {
    lower: BinaryHeap<Ord64>,
    upper: BinaryHeap<Reverse<Ord64>>,
}

impl FemBroker {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts one round's valuations, keeping `|lower| == |upper|` and
    /// `max(lower) <= min(upper)`.
    pub fn insert_pair(&mut self, v1: f64, v2: f64) {
        let (a, b) = if v1 <= v2 { (v1, v2) } else { (v2, v1) };
        self.lower.push(Ord64(a));
        self.upper.push(Reverse(Ord64(b)));
        let misordered = match (self.lower.peek(), self.upper.peek()) {
            (Some(lo), Some(Reverse(hi))) => lo > hi,
            _ => false,
        };
        if misordered {
            let lo = self.lower.pop().unwrap();
            let Reverse(hi) = self.upper.pop().unwrap();
            self.lower.push(hi);
            self.upper.push(Reverse(lo));
        }
    }

    pub fn sample_len(&self) -> usize {
        self.lower.len() + self.upper.len()
    }

    /// The full sample in ascending order (diagnostics and tests).
    pub fn sorted_sample(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .lower
            .iter()
            .chain(self.upper.iter().map(|Reverse(v)| v))
            .map(|v| v.0)
            .collect();
        out.sort_by(f64::total_cmp);
        out
    }

    fn middle_pair(&self) -> Option<(f64, f64)> {
        match (self.lower.peek(), self.upper.peek()) {
            (Some(lo), Some(Reverse(hi))) => Some((lo.0, hi.0)),
            _ => None,
        }
    }
}

impl Broker for FemBroker {
    fn name(&self) -> &'static str {
        "fem"
    }

    fn required_feedback(&self) -> FeedbackRequirement {
        FeedbackRequirement::Full
    }

    fn propose(&mut self, t: u64) -> Result<Price, BrokerError> {
        if t == 0 {
            return Err(BrokerError::State("rounds are numbered from 1".into()));
        }
        let expected = 2 * (t - 1) as usize;
        if self.sample_len() != expected {
            return Err(BrokerError::State(format!(
                "round {t} expects {expected} observed valuations, have {}",
                self.sample_len()
            )));
        }
        if t == 1 {
            return Ok(Price::HALF);
        }
        let (lo, hi) = self.middle_pair().expect("nonempty past round 1");
        Ok(Price::from_valid(0.5 * (lo + hi)))
    }

    fn observe(&mut self, _t: u64, _price: Price, feedback: &Feedback) -> Result<(), BrokerError> {
        match feedback {
            Feedback::Full { v1, v2 } => {
                self.insert_pair(*v1, *v2);
                Ok(())
            }
            Feedback::TwoBit { .. } => Err(BrokerError::WrongFeedback {
                expected: FeedbackKind::Full,
                got: FeedbackKind::TwoBit,
            }),
        }
    }

    fn reset(&mut self, _seed: u64) {
        self.lower.clear();
        self.upper.clear();
    }
}

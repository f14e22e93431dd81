//! Follow-the-empirical-maximizer broker for arbitrary distributions.
//!
//! Keeps the multiset of observed valuations and posts the price maximizing
//! an empirical trade-probability objective over the candidate grid
//! `{0, 1} + observed values + midpoints of consecutive distinct values`.
//! A maximizer of either objective over all of `[0, 1]` always lies on that
//! grid because the empirical cdf only changes at sample points.
//!
//! Two objectives are supported. With `B(p)`, `A(p)` the empirical fractions
//! strictly below / exactly at `p`, and `F = B + A`:
//!
//! ```text
//! surrogate: 2 F (1 - F) + F A
//! exact:     1 - B^2 - (1 - F)^2
//! ```
//!
//! `exact` is the plug-in estimate of the true trade probability; `surrogate`
//! drops the below-mass cross term `B A` at atoms. Ties break toward the
//! smallest candidate.

use serde::{Deserialize, Serialize};

use crate::protocol::{Feedback, FeedbackKind, Price};

use super::{Broker, BrokerError, FeedbackRequirement};

/// Which empirical objective the broker maximizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiVariant {
    #[default]
    Surrogate,
    Exact,
}

impl PsiVariant {
    pub fn name(self) -> &'static str {
        match self {
            PsiVariant::Surrogate => "surrogate",
            PsiVariant::Exact => "exact",
        }
    }

    /// Objective value from counts: `below`/`at` out of `total` observations.
    pub(crate) fn objective(self, total: u64, below: u64, at: u64) -> f64 {
        let n = total as f64;
        let b = below as f64 / n;
        let a = at as f64 / n;
        let f = (below + at) as f64 / n;
        match self {
            PsiVariant::Surrogate => 2.0 * f * (1.0 - f) + f * a,
            PsiVariant::Exact => 1.0 - b * b - (1.0 - f) * (1.0 - f),
        }
    }
}

/// Visits the candidate grid in ascending order. `visit(p, below, at)` gets
/// the candidate price and the counts strictly below / exactly at it.
/// Endpoints may repeat a sample value; revisiting the same price is harmless.
pub(crate) fn visit_candidates(
    values: &[(f64, u64)],
    total: u64,
    mut visit: impl FnMut(f64, u64, u64),
) {
    let at_zero = values.first().map_or(0, |&(v, c)| if v == 0.0 { c } else { 0 });
    visit(0.0, 0, at_zero);
    let mut below = 0u64;
    for (j, &(v, c)) in values.iter().enumerate() {
        visit(v, below, c);
        below += c;
        if let Some(&(next, _)) = values.get(j + 1) {
            visit(0.5 * (v + next), below, 0);
        }
    }
    let at_one = values.last().map_or(0, |&(v, c)| if v == 1.0 { c } else { 0 });
    visit(1.0, total - at_one, at_one);
}

pub struct FePsiBroker {
    variant: PsiVariant,
    /// Sorted distinct values with multiplicities.
    values: Vec<(f64, u64)>,
    total: u64,
}

impl FePsiBroker {
    pub fn new(variant: PsiVariant) -> Self {
        FePsiBroker { variant, values: Vec::new(), total: 0 }
    }

    /// Builds the state a broker would hold after observing `sample`.
    pub fn from_sample(variant: PsiVariant, sample: &[f64]) -> Self {
        let mut sorted = sample.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut values: Vec<(f64, u64)> = Vec::new();
        for v in sorted {
            match values.last_mut() {
                Some((last, c)) if *last == v => *c += 1,
                _ => values.push((v, 1)),
            }
        }
        FePsiBroker { variant, values, total: sample.len() as u64 }
    }

    pub fn variant(&self) -> PsiVariant {
        self.variant
    }

    pub fn sample_len(&self) -> u64 {
        self.total
    }

    fn insert(&mut self, v: f64) {
        let idx = self.values.partition_point(|(x, _)| *x < v);
        match self.values.get_mut(idx) {
            Some((x, c)) if *x == v => *c += 1,
            _ => self.values.insert(idx, (v, 1)),
        }
        self.total += 1;
    }

    /// Maximizer of the empirical objective with its value; smallest price on
    /// ties. Requires a nonempty sample.
    pub fn argmax(&self) -> (f64, f64) {
        assert!(self.total > 0, "argmax over empty sample");
        let mut best_p = 0.0;
        let mut best_v = f64::NEG_INFINITY;
        visit_candidates(&self.values, self.total, |p, below, at| {
            let v = self.variant.objective(self.total, below, at);
            if v > best_v {
                best_v = v;
                best_p = p;
            }
        });
        (best_p, best_v)
    }
}

impl Broker for FePsiBroker {
    fn name(&self) -> &'static str {
        "fepsi"
    }

    fn required_feedback(&self) -> FeedbackRequirement {
        FeedbackRequirement::Full
    }

    fn propose(&mut self, t: u64) -> Result<Price, BrokerError> {
        if t == 0 {
            return Err(BrokerError::State("rounds are numbered from 1".into()));
        }
        if self.total != 2 * (t - 1) {
            return Err(BrokerError::State(format!(
                "round {t} expects {} observed valuations, have {}",
                2 * (t - 1),
                self.total
            )));
        }
        if t == 1 {
            return Ok(Price::HALF);
        }
        Ok(Price::from_valid(self.argmax().0))
    }

    fn observe(&mut self, _t: u64, _price: Price, feedback: &Feedback) -> Result<(), BrokerError> {
        match feedback {
            Feedback::Full { v1, v2 } => {
                self.insert(*v1);
                self.insert(*v2);
                Ok(())
            }
            Feedback::TwoBit { .. } => Err(BrokerError::WrongFeedback {
                expected: FeedbackKind::Full,
                got: FeedbackKind::TwoBit,
            }),
        }
    }

    fn reset(&mut self, _seed: u64) {
        self.values.clear();
        self.total = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn opening_price_is_half() {
        let mut b = FePsiBroker::new(PsiVariant::Surrogate);
        assert_eq!(b.propose(1).unwrap(), Price::HALF);
    }

    #[test]
    fn surrogate_argmax_two_points() {
        // Sample {0.2, 0.8}: objective at 0.2 is 2(1/2)(1/2) + (1/2)(1/2) = 0.75,
        // beating 0 (0), 0.5 (0.5), 0.8 (0.5), 1 (0).
        let b = FePsiBroker::from_sample(PsiVariant::Surrogate, &[0.2, 0.8]);
        let (p, v) = b.argmax();
        assert_eq!(p, 0.2);
        assert_eq!(v, 0.75);
    }

    #[test]
    fn exact_variant_breaks_tie_toward_smallest() {
        // Under the exact objective 0.2 and 0.8 both score 0.75.
        let b = FePsiBroker::from_sample(PsiVariant::Exact, &[0.2, 0.8]);
        let (p, v) = b.argmax();
        assert_eq!(p, 0.2);
        assert_eq!(v, 0.75);
    }

    #[test]
    fn propose_uses_observed_pairs() {
        let mut b = FePsiBroker::new(PsiVariant::Surrogate);
        let fb = Feedback::Full { v1: 0.8, v2: 0.2 };
        b.observe(1, Price::HALF, &fb).unwrap();
        assert_eq!(b.propose(2).unwrap().get(), 0.2);
    }

    #[test]
    fn repeated_values_compress() {
        let b = FePsiBroker::from_sample(PsiVariant::Surrogate, &[0.5, 0.5, 0.5, 0.2]);
        assert_eq!(b.values, vec![(0.2, 1), (0.5, 3)]);
        assert_eq!(b.total, 4);
    }

    #[test]
    fn sample_size_mismatch_is_state_error() {
        let mut b = FePsiBroker::from_sample(PsiVariant::Surrogate, &[0.2, 0.8]);
        assert!(matches!(b.propose(5), Err(BrokerError::State(_))));
    }

    #[test]
    fn rejects_two_bit_feedback() {
        let mut b = FePsiBroker::new(PsiVariant::Exact);
        let fb = Feedback::TwoBit { b1: false, b2: false };
        assert!(matches!(
            b.observe(1, Price::HALF, &fb),
            Err(BrokerError::WrongFeedback { .. })
        ));
    }

    #[test]
    fn candidate_grid_contents() {
        let b = FePsiBroker::from_sample(PsiVariant::Surrogate, &[0.2, 0.8]);
        let mut cands = Vec::new();
        visit_candidates(&b.values, b.total, |p, _, _| cands.push(p));
        assert_eq!(cands, vec![0.0, 0.2, 0.5, 0.8, 1.0]);
    }

    proptest! {
        #[test]
        fn argmax_beats_dense_grid(
            sample in prop::collection::vec(0.0..=1.0f64, 2..30),
            variant in prop_oneof![Just(PsiVariant::Surrogate), Just(PsiVariant::Exact)],
        ) {
            // Oracle: brute-force the objective over a fine grid plus the
            // sample points via direct counting.
            let b = FePsiBroker::from_sample(variant, &sample);
            let objective_at = |p: f64| {
                let below = sample.iter().filter(|v| **v < p).count() as u64;
                let at = sample.iter().filter(|v| **v == p).count() as u64;
                variant.objective(sample.len() as u64, below, at)
            };
            let (p_star, v_star) = b.argmax();
            prop_assert!((v_star - objective_at(p_star)).abs() < 1e-12);
            for i in 0..=200 {
                let p = i as f64 / 200.0;
                prop_assert!(objective_at(p) <= v_star + 1e-12);
            }
            for &p in &sample {
                prop_assert!(objective_at(p) <= v_star + 1e-12);
            }
        }
    }
}

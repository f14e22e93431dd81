//! The no-learning baseline: one price, forever, any feedback accepted.

use crate::protocol::{Feedback, Price};

use super::{Broker, BrokerError, FeedbackRequirement};

pub struct FixedBroker {
    price: Price,
}

impl FixedBroker {
    pub fn new(price: Price) -> Self {
        FixedBroker { price }
    }
}

impl Broker for FixedBroker {
    fn name(&self) -> &'static str {
        "fixed"
    }

    fn required_feedback(&self) -> FeedbackRequirement {
        FeedbackRequirement::Any
    }

    fn propose(&mut self, _t: u64) -> Result<Price, BrokerError> {
        Ok(self.price)
    }

    fn observe(&mut self, _t: u64, _price: Price, _feedback: &Feedback) -> Result<(), BrokerError> {
        Ok(())
    }

    fn reset(&mut self, _seed: u64) {}
}

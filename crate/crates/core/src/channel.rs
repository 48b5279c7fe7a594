//! Feedback channel impairments: fixed latency and seeded random loss.
//!
//! Loss draws come from ChaCha8 seeded with `rand_core`'s `seed_from_u64`
//! expansion; one uniform `f64` (53-bit) is drawn per message sent, lost or
//! not, so the loss pattern depends only on the seed and the message count.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::power_chain::FeedbackMessage;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelModel {
    pub latency_steps: u32,
    pub loss_probability: f64,
    pub rng_seed: u64,
}

impl Default for ChannelModel {
    fn default() -> Self {
        Self {
            latency_steps: 0,
            loss_probability: 0.0,
            rng_seed: 0,
        }
    }
}

impl ChannelModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.loss_probability >= 0.0 && self.loss_probability < 1.0) {
            return Err(ModelError::invalid(
                "channel.loss_probability",
                format!("must lie in [0, 1), got {}", self.loss_probability),
            ));
        }
        Ok(())
    }

    pub fn is_transparent(&self) -> bool {
        self.latency_steps == 0 && self.loss_probability == 0.0
    }
}

/// Fate of a message handed to the channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Delivery {
    /// Delivered at this step index.
    At(u64),
    Lost,
}

/// A running channel instance.
#[derive(Debug, Clone)]
pub struct Channel {
    model: ChannelModel,
    rng: ChaCha8Rng,
    in_flight: VecDeque<(u64, FeedbackMessage)>,
}

impl Channel {
    pub fn new(model: ChannelModel) -> Self {
        Self {
            model,
            rng: ChaCha8Rng::seed_from_u64(model.rng_seed),
            in_flight: VecDeque::new(),
        }
    }

    pub fn model(&self) -> &ChannelModel {
        &self.model
    }

    /// Schedules `msg`, sent at `step_index`, for delivery or drops it.
    pub fn apply_channel(&mut self, msg: FeedbackMessage, step_index: u64) -> Delivery {
        let draw: f64 = self.rng.gen();
        if draw < self.model.loss_probability {
            return Delivery::Lost;
        }
        let due = step_index + u64::from(self.model.latency_steps);
        self.in_flight.push_back((due, msg));
        Delivery::At(due)
    }

    /// Removes and returns every message due at or before `step_index`, in send order.
    pub fn deliver_due(&mut self, step_index: u64) -> Vec<FeedbackMessage> {
        let mut out = Vec::new();
        while let Some(&(due, msg)) = self.in_flight.front() {
            if due > step_index {
                break;
            }
            self.in_flight.pop_front();
            out.push(msg);
        }
        out
    }

    pub fn in_flight(&self) -> usize {
        self.in_flight.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn msg(seq: u64) -> FeedbackMessage {
        FeedbackMessage {
            sequence: seq,
            desired_power_density_w_per_cm2: seq as f64,
            desired_laser_power_w: seq as f64,
            timestamp_s: seq as f64,
        }
    }

    #[test]
    fn transparent_channel_delivers_same_step() {
        let mut ch = Channel::new(ChannelModel::default());
        assert_eq!(ch.apply_channel(msg(1), 5), Delivery::At(5));
        assert_eq!(ch.deliver_due(5), vec![msg(1)]);
        assert_eq!(ch.in_flight(), 0);
    }

    #[test]
    fn latency_delays_by_fixed_steps() {
        let mut ch = Channel::new(ChannelModel { latency_steps: 3, ..ChannelModel::default() });
        assert_eq!(ch.apply_channel(msg(1), 10), Delivery::At(13));
        assert!(ch.deliver_due(12).is_empty());
        assert_eq!(ch.deliver_due(13), vec![msg(1)]);
    }

    #[test]
    fn loss_pattern_is_seeded() {
        let model = ChannelModel { loss_probability: 1.0 - 1e-3, rng_seed: 42, ..ChannelModel::default() };
        let pattern = |m: ChannelModel| {
            let mut ch = Channel::new(m);
            (0..2000).map(|i| ch.apply_channel(msg(i), i) == Delivery::Lost).collect::<Vec<_>>()
        };
        let a = pattern(model);
        assert_eq!(a, pattern(model));
        assert!(a.iter().filter(|lost| **lost).count() > 1900);
        let b = pattern(ChannelModel { loss_probability: 0.5, ..model });
        let c = pattern(ChannelModel { loss_probability: 0.5, rng_seed: 43, ..model });
        assert_ne!(b, c);
    }

    #[test]
    fn loss_probability_bounds() {
        assert!(ChannelModel { loss_probability: 1.0, ..ChannelModel::default() }.validate().is_err());
        assert!(ChannelModel { loss_probability: 1.5, ..ChannelModel::default() }.validate().is_err());
        assert!(ChannelModel { loss_probability: -0.1, ..ChannelModel::default() }.validate().is_err());
        assert!(ChannelModel { loss_probability: 0.99, ..ChannelModel::default() }.validate().is_ok());
    }
}

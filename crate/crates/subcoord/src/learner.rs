//! Per-agent exponential-weights bandit learner with delayed feedback.
//!
//! Each agent runs one learner over its own action set. Sampling records
//! the drawn action and its probability as an outstanding decision; once
//! the (delayed) reward for step `s` arrives, `feed` applies the
//! importance-weighted estimate
//!
//! ```text
//! r̂_{a,s} = 1 − 1(a_s = a) · (1 − r_s) / p_{a_s,s}
//! ```
//!
//! to every action and multiplies the weights by `exp(η · r̂)`. Weights are
//! kept in log space so long horizons cannot overflow; the resulting
//! distribution is identical to the raw multiplicative update. The
//! estimator is deliberately unclipped — negative values keep it unbiased.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Timestep;

/// A decision whose reward has not arrived yet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendingDecision {
    /// Index of the sampled action within the agent's action list.
    pub action: usize,
    /// Probability with which it was sampled.
    pub probability: f64,
}

/// Exponential-weights state for one agent.
///
/// Serializable for trace checkpoints; the RNG is owned by the caller and
/// intentionally not part of the state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LearnerState {
    num_actions: usize,
    delay: u32,
    horizon: usize,
    learning_rate: f64,
    log_weights: Vec<f64>,
    /// Outstanding decisions keyed by timestep, fed in increasing order.
    pending: BTreeMap<Timestep, PendingDecision>,
    steps_sampled: usize,
}

impl LearnerState {
    /// Fresh learner with uniform weights and the fixed learning rate
    /// `η = sqrt(ln k / ((k + d) · T))`. With a single action the rate is 0
    /// and the learner degenerates to always playing it.
    pub fn new(num_actions: usize, delay: u32, horizon: usize) -> Result<Self> {
        if num_actions == 0 {
            return Err(Error::Input("learner needs at least one action".into()));
        }
        if horizon == 0 {
            return Err(Error::Input("horizon must be at least 1".into()));
        }
        let k = num_actions as f64;
        let learning_rate = (k.ln() / ((k + f64::from(delay)) * horizon as f64)).sqrt();
        Ok(Self {
            num_actions,
            delay,
            horizon,
            learning_rate,
            log_weights: vec![0.0; num_actions],
            pending: BTreeMap::new(),
            steps_sampled: 0,
        })
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn delay(&self) -> u32 {
        self.delay
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    /// Timestep of the most recent sample (0 before the first).
    pub fn current_step(&self) -> Timestep {
        self.steps_sampled
    }

    /// Timesteps with outstanding (unfed) decisions, in increasing order.
    pub fn outstanding(&self) -> impl Iterator<Item = Timestep> + '_ {
        self.pending.keys().copied()
    }

    pub fn pending_decision(&self, s: Timestep) -> Option<PendingDecision> {
        self.pending.get(&s).copied()
    }

    /// Current sampling distribution `w_t / ‖w_t‖₁`, computed from the
    /// log-weights. Sums to 1 and has full support.
    pub fn distribution(&self) -> Vec<f64> {
        let max = self
            .log_weights
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let mut probs: Vec<f64> = self.log_weights.iter().map(|w| (w - max).exp()).collect();
        let sum: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= sum;
        }
        probs
    }

    /// Draw an action from the current distribution and record it as the
    /// decision for the next timestep.
    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> usize {
        let probs = self.distribution();
        let u: f64 = rng.random();
        let mut cdf = 0.0;
        let mut chosen = self.num_actions - 1;
        for (i, p) in probs.iter().enumerate() {
            cdf += p;
            if u < cdf {
                chosen = i;
                break;
            }
        }
        self.steps_sampled += 1;
        self.pending.insert(
            self.steps_sampled,
            PendingDecision {
                action: chosen,
                probability: probs[chosen],
            },
        );
        chosen
    }

    /// Apply the delayed reward (already normalized to `[0, 1]`) for the
    /// decision made at step `s`.
    pub fn feed(&mut self, s: Timestep, reward: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&reward) {
            return Err(Error::Input(format!(
                "reward {reward} outside [0, 1] at step {s}"
            )));
        }
        let decision = self.pending.remove(&s).ok_or_else(|| {
            Error::Protocol(format!(
                "no outstanding decision at step {s} (double feed or never sampled)"
            ))
        })?;
        let miss = (1.0 - reward) / decision.probability;
        for (a, w) in self.log_weights.iter_mut().enumerate() {
            let estimate = if a == decision.action {
                1.0 - miss
            } else {
                1.0
            };
            *w += self.learning_rate * estimate;
        }
        Ok(())
    }
}

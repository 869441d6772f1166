//! Masked next-hop routing policy.
//!
//! A small value network scores every feasible next hop of the current relay
//! from the concatenation of a five-feature state vector and five per-candidate
//! features. Infeasible links never reach the network: the action set is the
//! relay's outgoing edges in the snapshot graph (already range- and
//! busy-filtered) minus already-visited nodes.

mod agent;
mod features;
mod network;
mod policy_file;
mod train;

use serde::{Deserialize, Serialize};

pub use agent::{
    reward, run_episode, select_action, select_action_seeded, Episode, Outcome, RewardParams,
    Transition,
};
pub use features::{
    encode, feasible_actions, Candidate, CandidateFeatures, StateVector, CANDIDATE_DIM, STATE_DIM,
};
pub use network::{input_vector, q_scores, AdamState, ForwardScratch, PolicyParams, INPUT_DIM};
pub use policy_file::{PolicyFile, POLICY_FORMAT_VERSION, POLICY_MAGIC};
pub use train::{
    evaluate, evaluate_instances, train, EpisodeRecord, EvalMetrics, HeldOutSnapshot, LogRow,
    ReplayBuffer, TrainingEnv, TrainingLog,
};

/// Learning and exploration settings for the value policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RlHyperParams {
    /// Hidden-layer widths; input is fixed at 10 and output at 1.
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub discount: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Fraction of the episode budget over which epsilon decays.
    pub anneal_fraction: f64,
    pub replay_capacity: usize,
    pub batch_size: usize,
    /// Gradient updates between target-network syncs.
    pub target_sync: usize,
    pub episodes: usize,
    /// Environment steps per gradient update.
    pub train_every: usize,
    /// Transitions collected before the first update.
    pub warmup: usize,
    pub checkpoint_every: usize,
    pub heldout_snapshots: usize,
    pub t_norm_s: f64,
    pub terminal_reward: f64,
    pub grad_clip: f64,
}

impl Default for RlHyperParams {
    fn default() -> Self {
        Self {
            hidden: vec![64, 64],
            learning_rate: 1e-3,
            discount: 0.99,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            anneal_fraction: 0.5,
            replay_capacity: 100_000,
            batch_size: 64,
            target_sync: 1000,
            episodes: 50_000,
            train_every: 4,
            warmup: 1_000,
            checkpoint_every: 5_000,
            heldout_snapshots: 100,
            t_norm_s: 10e-3,
            terminal_reward: 10.0,
            grad_clip: 10.0,
        }
    }
}

impl RlHyperParams {
    pub fn validate(&self) -> crate::Result<()> {
        let bad = |m: &str| Err(crate::Error::InvalidParameter(m.to_string()));
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return bad("hidden layers must be non-empty with positive widths");
        }
        if !(self.learning_rate >= 0.0) || !(0.0..=1.0).contains(&self.discount) {
            return bad("learning_rate must be >= 0 and discount in [0, 1]");
        }
        if !(0.0 < self.epsilon_end
            && self.epsilon_end <= self.epsilon_start
            && self.epsilon_start <= 1.0)
        {
            return bad("epsilon schedule must satisfy 0 < end <= start <= 1");
        }
        if !(self.anneal_fraction > 0.0 && self.anneal_fraction <= 1.0) {
            return bad("anneal_fraction must lie in (0, 1]");
        }
        if self.replay_capacity == 0
            || self.batch_size == 0
            || self.target_sync == 0
            || self.train_every == 0
        {
            return bad(
                "replay_capacity, batch_size, target_sync and train_every must be positive",
            );
        }
        if self.checkpoint_every == 0 {
            return bad("checkpoint_every must be positive");
        }
        if !(self.t_norm_s > 0.0) {
            return bad("t_norm must be positive");
        }
        Ok(())
    }

    /// Geometric decay from `epsilon_start` to `epsilon_end` over the anneal window.
    pub fn epsilon_at(&self, episode: usize) -> f64 {
        let window = (self.episodes as f64 * self.anneal_fraction).max(1.0);
        let frac = (episode as f64 / window).min(1.0);
        self.epsilon_start * (self.epsilon_end / self.epsilon_start).powf(frac)
    }

    pub fn reward_params(&self) -> RewardParams {
        RewardParams {
            t_norm_s: self.t_norm_s,
            terminal: self.terminal_reward,
        }
    }
}

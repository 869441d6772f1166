use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::agent::{run_episode, Transition};
use super::network::{input_vector, AdamState, ForwardScratch, PolicyParams};
use super::RlHyperParams;
use crate::error::{Error, Result};
use crate::orbital::Gateway;
use crate::routing::{path_metrics, shortest_path, PathMetrics, RouteResult};
use crate::scenario::{Scenario, ScenarioInstance};
use crate::seed::{
    SeedStreams, STREAM_CONGESTION, STREAM_HELDOUT, STREAM_RL_EXPLORE, STREAM_RL_INIT,
    STREAM_SNAPSHOT,
};

/// Fixed-capacity ring buffer of transitions.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    items: Vec<Transition>,
    capacity: usize,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self {
            items: Vec::with_capacity(capacity.min(1 << 16)),
            capacity,
            next: 0,
        }
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }

    /// Uniform sample with replacement.
    pub fn sample<'a, R: Rng>(&'a self, rng: &mut R, n: usize) -> Vec<&'a Transition> {
        (0..n)
            .map(|_| &self.items[rng.random_range(0..self.items.len())])
            .collect()
    }
}

/// Where training and evaluation episodes come from.
#[derive(Debug, Clone)]
pub struct TrainingEnv {
    /// Base scenario; its gateway pair is the evaluation pair.
    pub scenario: Scenario,
    /// Pool that training pairs are drawn from (ordered, distinct).
    pub gateways: Vec<Gateway>,
    pub time_range_s: (f64, f64),
    pub streams: SeedStreams,
}

impl TrainingEnv {
    fn draw_time<R: Rng>(&self, rng: &mut R) -> f64 {
        let (lo, hi) = self.time_range_s;
        if hi > lo {
            rng.random_range(lo..=hi)
        } else {
            lo
        }
    }

    /// Training snapshot for episode `index`: random time and gateway pair.
    pub fn training_instance(&self, index: u64) -> Result<ScenarioInstance> {
        let mut rng = self.streams.rng(STREAM_SNAPSHOT, index);
        let time = self.draw_time(&mut rng);
        let scenario = if self.gateways.len() >= 2 {
            let n = self.gateways.len();
            let a = rng.random_range(0..n);
            let mut b = rng.random_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            self.scenario
                .with_gateways(self.gateways[a].clone(), self.gateways[b].clone())
        } else {
            self.scenario.clone()
        };
        scenario.instantiate(time, self.streams.derive(STREAM_CONGESTION, index))
    }

    /// Held-out snapshots of the base pair, disjoint from the training streams.
    pub fn heldout(&self, count: usize) -> Vec<HeldOutSnapshot> {
        (0..count)
            .into_par_iter()
            .map(|i| {
                let mut rng = self.streams.rng(STREAM_HELDOUT, i as u64);
                let time_s = self.draw_time(&mut rng);
                let congestion_seed: u64 = rng.random();
                HeldOutSnapshot::build(&self.scenario, i, time_s, congestion_seed)
            })
            .collect()
    }
}

/// One evaluation snapshot with its Dijkstra reference route.
#[derive(Debug, Clone)]
pub struct HeldOutSnapshot {
    pub index: usize,
    pub time_s: f64,
    pub instance: Option<ScenarioInstance>,
    pub oracle: Option<RouteResult>,
}

impl HeldOutSnapshot {
    pub fn build(scenario: &Scenario, index: usize, time_s: f64, congestion_seed: u64) -> Self {
        let instance = scenario.instantiate(time_s, congestion_seed).ok();
        let oracle = instance.as_ref().and_then(|inst| {
            shortest_path(&inst.graph, inst.source_sat(), inst.dest_sat())
                .ok()
                .filter(|r| r.reached)
        });
        Self {
            index,
            time_s,
            instance,
            oracle,
        }
    }
}

/// Result of one greedy rollout on a held-out snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub index: usize,
    pub time_s: f64,
    /// `None` when the snapshot has no route at all.
    pub oracle: Option<PathMetrics>,
    pub policy: Option<PathMetrics>,
    pub reached: bool,
    pub stretch: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub snapshots: usize,
    /// Snapshots where even the exact solver finds no route.
    pub structural_failures: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_stretch: Option<f64>,
    pub mean_hops: Option<f64>,
    pub mean_delay_ms: Option<f64>,
    pub median_delay_ms: Option<f64>,
    pub intra_hops: usize,
    pub inter_hops: usize,
    pub hop_histogram: BTreeMap<usize, usize>,
    pub records: Vec<EpisodeRecord>,
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

pub(crate) fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Greedy rollouts of `p` on prepared snapshots.
pub fn evaluate_instances(
    p: &PolicyParams,
    set: &[HeldOutSnapshot],
    routing_k_cap: usize,
    h_max: usize,
) -> EvalMetrics {
    let rewards = p.hyper.reward_params();
    let records: Vec<EpisodeRecord> = set
        .par_iter()
        .map(|h| {
            let oracle = h.oracle.as_ref().map(path_metrics);
            let (policy, reached, stretch) = match (&h.instance, &h.oracle) {
                (Some(inst), Some(best)) => {
                    // epsilon = 0 never touches the generator
                    let mut rng = SeedStreams::new(0).rng("greedy", 0);
                    let ep = run_episode(
                        &inst.graph,
                        p,
                        inst.source_sat(),
                        inst.dest_sat(),
                        0.0,
                        h_max,
                        routing_k_cap,
                        &rewards,
                        &mut rng,
                    )
                    .expect("endpoints belong to the graph");
                    let reached = ep.route.reached;
                    let stretch = reached.then(|| ep.route.total_cost_s / best.total_cost_s);
                    (Some(path_metrics(&ep.route)), reached, stretch)
                }
                _ => (None, false, None),
            };
            EpisodeRecord {
                index: h.index,
                time_s: h.time_s,
                oracle,
                policy,
                reached,
                stretch,
            }
        })
        .collect();

    let structural_failures = records.iter().filter(|r| r.oracle.is_none()).count();
    let ok: Vec<&EpisodeRecord> = records.iter().filter(|r| r.reached).collect();
    let feasible = records.len() - structural_failures;
    let metrics: Vec<PathMetrics> = ok.iter().filter_map(|r| r.policy).collect();
    let stretches: Vec<f64> = ok.iter().filter_map(|r| r.stretch).collect();
    let delays: Vec<f64> = metrics.iter().map(|m| m.delay_ms).collect();
    let hops: Vec<f64> = metrics.iter().map(|m| m.hops as f64).collect();
    let mut hop_histogram = BTreeMap::new();
    for m in &metrics {
        *hop_histogram.entry(m.hops).or_insert(0) += 1;
    }
    EvalMetrics {
        snapshots: records.len(),
        structural_failures,
        successes: ok.len(),
        success_rate: if feasible > 0 {
            ok.len() as f64 / feasible as f64
        } else {
            0.0
        },
        mean_stretch: mean(&stretches),
        mean_hops: mean(&hops),
        mean_delay_ms: mean(&delays),
        median_delay_ms: median(&delays),
        intra_hops: metrics.iter().map(|m| m.intra_count).sum(),
        inter_hops: metrics.iter().map(|m| m.inter_count).sum(),
        hop_histogram,
        records,
    }
}

/// Greedy evaluation on the environment's held-out snapshots.
pub fn evaluate(p: &PolicyParams, env: &TrainingEnv, snapshots: usize) -> EvalMetrics {
    let set = env.heldout(snapshots);
    evaluate_instances(
        p,
        &set,
        env.scenario.routing.k_cap,
        env.scenario.routing.h_max,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub episode: usize,
    pub epsilon: f64,
    pub success_rate: f64,
    pub mean_stretch: f64,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingLog {
    pub rows: Vec<LogRow>,
    pub skipped_episodes: usize,
    pub updates: usize,
}

impl TrainingLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("episode,epsilon,success_rate,mean_stretch,loss\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.episode, r.epsilon, r.success_rate, r.mean_stretch, r.loss
            ));
        }
        out
    }
}

struct Learner {
    online: PolicyParams,
    target: PolicyParams,
    adam: AdamState,
    grad: Vec<f64>,
    scratch: ForwardScratch,
    updates: usize,
}

impl Learner {
    fn double_q_target(&mut self, t: &Transition, discount: f64) -> f64 {
        if t.terminal || t.next_candidates.is_empty() {
            return t.reward;
        }
        let mut best = (0, f64::NEG_INFINITY);
        for (i, c) in t.next_candidates.iter().enumerate() {
            let q = self
                .online
                .forward_with(&input_vector(&t.next_state, c), &mut self.scratch);
            if q > best.1 {
                best = (i, q);
            }
        }
        let x = input_vector(&t.next_state, &t.next_candidates[best.0]);
        t.reward + discount * self.target.forward_with(&x, &mut self.scratch)
    }

    fn step(&mut self, batch: &[&Transition], hyper: &RlHyperParams) -> f64 {
        self.grad.iter_mut().for_each(|g| *g = 0.0);
        let scale = 1.0 / batch.len() as f64;
        let mut loss = 0.0;
        for t in batch {
            let y = self.double_q_target(t, hyper.discount);
            let q = self
                .online
                .forward_with(&input_vector(&t.state, t.chosen()), &mut self.scratch);
            let err = q - y;
            loss += 0.5 * err * err * scale;
            self.online
                .backward_into(&mut self.scratch, err * scale, &mut self.grad);
        }
        let norm = self.grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm > hyper.grad_clip {
            let k = hyper.grad_clip / norm;
            self.grad.iter_mut().for_each(|g| *g *= k);
        }
        self.adam
            .apply(&mut self.online.params, &self.grad, hyper.learning_rate);
        self.updates += 1;
        if self.updates.is_multiple_of(hyper.target_sync) {
            self.target.params.copy_from_slice(&self.online.params);
        }
        loss
    }
}

/// Double-estimator TD learning with experience replay.
///
/// Every episode draws a fresh snapshot time and gateway pair, rolls out
/// epsilon-greedy, and stores its transitions. One minibatch update runs every
/// `train_every` environment steps once `warmup` transitions are stored.
/// Checkpoints evaluate the greedy policy on a fixed held-out set.
pub fn train(env: &TrainingEnv, hyper: &RlHyperParams) -> Result<(PolicyParams, TrainingLog)> {
    hyper.validate()?;
    let routing = &env.scenario.routing;
    let rewards = hyper.reward_params();
    let mut explore = env.streams.rng(STREAM_RL_EXPLORE, 0);
    let online = PolicyParams::init(hyper, &mut env.streams.rng(STREAM_RL_INIT, 0));
    let n = online.num_params();
    let mut learner = Learner {
        target: online.clone(),
        online,
        adam: AdamState::new(n),
        grad: vec![0.0; n],
        scratch: ForwardScratch::default(),
        updates: 0,
    };
    let heldout = env.heldout(hyper.heldout_snapshots);
    let mut replay = ReplayBuffer::new(hyper.replay_capacity);
    let mut log = TrainingLog::default();
    let mut steps = 0usize;
    let mut loss_sum = 0.0;
    let mut loss_count = 0usize;

    for episode in 0..hyper.episodes {
        let epsilon = hyper.epsilon_at(episode);
        match env.training_instance(episode as u64) {
            Ok(inst) if inst.source_sat() != inst.dest_sat() => {
                let ep = run_episode(
                    &inst.graph,
                    &learner.online,
                    inst.source_sat(),
                    inst.dest_sat(),
                    epsilon,
                    routing.h_max,
                    routing.k_cap,
                    &rewards,
                    &mut explore,
                )?;
                for t in ep.transitions {
                    replay.push(t);
                    steps += 1;
                    if replay.len() >= hyper.warmup.max(hyper.batch_size)
                        && steps.is_multiple_of(hyper.train_every)
                    {
                        let batch = replay.sample(&mut explore, hyper.batch_size);
                        let loss = learner.step(&batch, hyper);
                        if !loss.is_finite() || !learner.online.is_finite() {
                            return Err(Error::TrainingDiverged { episode, loss });
                        }
                        loss_sum += loss;
                        loss_count += 1;
                    }
                }
            }
            _ => log.skipped_episodes += 1,
        }

        if (episode + 1).is_multiple_of(hyper.checkpoint_every) || episode + 1 == hyper.episodes {
            let m = evaluate_instances(&learner.online, &heldout, routing.k_cap, routing.h_max);
            log.rows.push(LogRow {
                episode: episode + 1,
                epsilon,
                success_rate: m.success_rate,
                mean_stretch: m.mean_stretch.unwrap_or(f64::NAN),
                loss: if loss_count > 0 {
                    loss_sum / loss_count as f64
                } else {
                    f64::NAN
                },
            });
            loss_sum = 0.0;
            loss_count = 0;
        }
    }
    log.updates = learner.updates;
    Ok((learner.online, log))
}

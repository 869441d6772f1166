use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{encode, Candidate, CandidateFeatures, StateVector};
use super::network::{input_vector, ForwardScratch, PolicyParams};
use crate::error::{Error, Result};
use crate::orbital::SatelliteId;
use crate::routing::RouteResult;
use crate::topology::SnapshotGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Step,
    Reached,
    /// No feasible action left, or the hop budget ran out.
    DeadEnd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardParams {
    pub t_norm_s: f64,
    pub terminal: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        Self {
            t_norm_s: 10e-3,
            terminal: 10.0,
        }
    }
}

/// `-cost / T_norm` per step, plus `+terminal` on arrival; a dead end pays
/// `-terminal` flat.
pub fn reward(params: &RewardParams, cost_s: f64, outcome: Outcome) -> f64 {
    let step = -cost_s / params.t_norm_s;
    match outcome {
        Outcome::Step => step,
        Outcome::Reached => params.terminal + step,
        Outcome::DeadEnd => -params.terminal,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: StateVector,
    pub candidates: Vec<CandidateFeatures>,
    pub action: usize,
    pub cost_s: f64,
    pub outcome: Outcome,
    pub reward: f64,
    pub next_state: StateVector,
    pub next_candidates: Vec<CandidateFeatures>,
    pub terminal: bool,
}

impl Transition {
    pub fn chosen(&self) -> &CandidateFeatures {
        &self.candidates[self.action]
    }
}

/// Epsilon-greedy choice: uniform with probability `epsilon`, otherwise the
/// highest score with ties to the lowest index.
pub fn select_action<R: Rng>(
    p: &PolicyParams,
    state: &StateVector,
    candidates: &[CandidateFeatures],
    epsilon: f64,
    rng: &mut R,
) -> Result<usize> {
    match candidates.len() {
        0 => return Err(Error::DeadEnd),
        1 => return Ok(0),
        _ => {}
    }
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        return Ok(rng.random_range(0..candidates.len()));
    }
    let mut scratch = ForwardScratch::default();
    let mut best = (0, f64::NEG_INFINITY);
    for (i, c) in candidates.iter().enumerate() {
        let q = p.forward_with(&input_vector(state, c), &mut scratch);
        if q > best.1 {
            best = (i, q);
        }
    }
    Ok(best.0)
}

pub fn select_action_seeded(
    p: &PolicyParams,
    state: &StateVector,
    candidates: &[CandidateFeatures],
    epsilon: f64,
    seed: u64,
) -> Result<usize> {
    select_action(
        p,
        state,
        candidates,
        epsilon,
        &mut ChaCha8Rng::seed_from_u64(seed),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub route: RouteResult,
    pub transitions: Vec<Transition>,
}

fn features(c: &[Candidate]) -> Vec<CandidateFeatures> {
    c.iter().map(|c| c.features).collect()
}

/// Walks the graph from `src` with revisit masking until `dest`, a dead end
/// or `h_max` hops.
#[allow(clippy::too_many_arguments)]
pub fn run_episode<R: Rng>(
    g: &SnapshotGraph,
    p: &PolicyParams,
    src: SatelliteId,
    dest: SatelliteId,
    epsilon: f64,
    h_max: usize,
    k_cap: usize,
    rewards: &RewardParams,
    rng: &mut R,
) -> Result<Episode> {
    if !g.contains(src) {
        return Err(Error::EndpointOutsideGraph(src));
    }
    if !g.contains(dest) {
        return Err(Error::EndpointOutsideGraph(dest));
    }
    if src == dest {
        return Ok(Episode {
            route: RouteResult::from_hops(src, dest, Vec::new(), true),
            transitions: Vec::new(),
        });
    }
    let d0 = match (g.position(src), g.position(dest)) {
        (Some(a), Some(b)) => a.distance(b),
        _ => 0.0,
    };

    let mut visited: BTreeSet<SatelliteId> = [src].into();
    let mut hops = Vec::new();
    let mut transitions = Vec::new();
    let (mut state, mut cands) = encode(g, src, dest, &visited, d0, k_cap);

    while !cands.is_empty() {
        let feats = features(&cands);
        let action = select_action(p, &state, &feats, epsilon, rng)?;
        let edge = cands[action].edge;
        hops.push(edge);
        visited.insert(edge.to);

        let (next_state, next_cands, outcome) = if edge.to == dest {
            (StateVector::default(), Vec::new(), Outcome::Reached)
        } else {
            let (ns, nc) = encode(g, edge.to, dest, &visited, d0, k_cap);
            if nc.is_empty() || hops.len() >= h_max {
                (StateVector::default(), Vec::new(), Outcome::DeadEnd)
            } else {
                (ns, nc, Outcome::Step)
            }
        };
        let terminal = outcome != Outcome::Step;
        transitions.push(Transition {
            state,
            candidates: feats,
            action,
            cost_s: edge.cost_s,
            outcome,
            reward: reward(rewards, edge.cost_s, outcome),
            next_state,
            next_candidates: features(&next_cands),
            terminal,
        });
        if terminal {
            break;
        }
        state = next_state;
        cands = next_cands;
    }

    let reached = hops.last().is_some_and(|e| e.to == dest);
    Ok(Episode {
        route: RouteResult::from_hops(src, dest, hops, reached),
        transitions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use crate::optics::{FeasibilityThresholds, LinkClass};
    use crate::rl::RlHyperParams;
    use crate::topology::{link_cost, Edge};

    fn id(k: usize) -> SatelliteId {
        SatelliteId::new(0, k)
    }

    fn line_graph(n: usize) -> SnapshotGraph {
        let nodes: Vec<_> = (0..n)
            .map(|i| (id(i), Vec3::new(i as f64 * 1e6, 0.0, 0.0)))
            .collect();
        let mut edges = Vec::new();
        for i in 0..n - 1 {
            for (a, b) in [(i, i + 1), (i + 1, i)] {
                edges.push(Edge {
                    from: id(a),
                    to: id(b),
                    length_m: 1e6,
                    link_class: LinkClass::IntraPlane,
                    cost_s: link_cost(1e6, 1e-3),
                });
            }
        }
        SnapshotGraph::from_edges(
            nodes,
            edges,
            id(0),
            id(n - 1),
            FeasibilityThresholds::from_ranges(2e6, 2e6),
            1e-3,
        )
    }

    #[test]
    fn rewards() {
        let r = RewardParams::default();
        assert!((reward(&r, 1e-3, Outcome::Step) + 0.1).abs() < 1e-12);
        assert!((reward(&r, 2e-3, Outcome::Reached) - 9.8).abs() < 1e-12);
        assert_eq!(reward(&r, 5e-3, Outcome::DeadEnd), -10.0);
    }

    #[test]
    fn greedy_and_single_choice() {
        let mut p = PolicyParams::zeros(&RlHyperParams::default());
        // output = w . h2 + b: make the improvement feature drive the score
        // through a first-layer unit wired straight to the output
        p.params[5] = 1.0; // unit 0 reads improvement_norm
        let out_off = 10 * 64 + 64 + 64 * 64 + 64;
        let l2 = 10 * 64 + 64;
        p.params[l2] = 1.0; // second layer unit 0 reads first layer unit 0
        p.params[out_off] = 1.0;
        let s = StateVector::default();
        let mk = |imp: f64| CandidateFeatures {
            improvement_norm: imp,
            ..Default::default()
        };
        let cands = [mk(0.1), mk(-0.2), mk(0.5), mk(0.3)];
        assert_eq!(select_action_seeded(&p, &s, &cands, 0.0, 1).unwrap(), 2);
        assert_eq!(
            select_action_seeded(&p, &s, &cands[..1], 1.0, 1).unwrap(),
            0
        );
        assert_eq!(
            select_action_seeded(&p, &s, &[], 0.5, 1),
            Err(Error::DeadEnd)
        );
    }

    #[test]
    fn uniform_exploration() {
        let p = PolicyParams::zeros(&RlHyperParams::default());
        let cands = [CandidateFeatures::default(); 4];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut counts = [0usize; 4];
        let n = 10_000;
        for _ in 0..n {
            counts[select_action(&p, &StateVector::default(), &cands, 1.0, &mut rng).unwrap()] += 1;
        }
        let expected = n as f64 / 4.0;
        let sd = (n as f64 * 0.25 * 0.75).sqrt();
        for c in counts {
            assert!((c as f64 - expected).abs() < 3.0 * sd, "{counts:?}");
        }
    }

    #[test]
    fn episode_edge_cases() {
        let g = line_graph(2);
        let p = PolicyParams::zeros(&RlHyperParams::default());
        let r = RewardParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let same = run_episode(&g, &p, id(0), id(0), 0.0, 32, 16, &r, &mut rng).unwrap();
        assert!(same.route.reached && same.route.hops.is_empty() && same.transitions.is_empty());

        let one = run_episode(&g, &p, id(0), id(1), 0.0, 32, 16, &r, &mut rng).unwrap();
        assert!(one.route.reached);
        assert_eq!(one.route.hop_count, 1);
        assert_eq!(one.transitions.len(), 1);
        let t = &one.transitions[0];
        assert!(t.terminal && t.outcome == Outcome::Reached && t.next_candidates.is_empty());
        assert_eq!(t.next_state, StateVector::default());
    }

    #[test]
    fn hop_budget_ends_the_episode() {
        let g = line_graph(10);
        let p = PolicyParams::zeros(&RlHyperParams::default());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let ep = run_episode(
            &g,
            &p,
            id(0),
            id(9),
            0.0,
            3,
            16,
            &RewardParams::default(),
            &mut rng,
        )
        .unwrap();
        assert!(!ep.route.reached);
        assert_eq!(ep.route.hop_count, 3);
        assert_eq!(ep.transitions.last().unwrap().outcome, Outcome::DeadEnd);
        assert_eq!(ep.transitions.last().unwrap().reward, -10.0);
    }
}

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::optics::LinkClass;
use crate::orbital::SatelliteId;
use crate::topology::{Edge, SnapshotGraph};

pub const STATE_DIM: usize = 5;
pub const CANDIDATE_DIM: usize = 5;

/// Relay-level features. Distances are normalized by the episode's initial
/// source-destination distance.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StateVector {
    pub dist_to_dest_norm: f64,
    /// Largest distance-to-destination reduction among feasible neighbours.
    pub best_improvement_norm: f64,
    /// Feasible action count over `k_cap`.
    pub feasible_degree_norm: f64,
    /// Share of in-range neighbours excluded because they are busy.
    pub busy_fraction: f64,
    /// 1 when some outgoing link leads to an already visited node.
    pub revisit_flag: f64,
}

impl StateVector {
    pub fn to_array(&self) -> [f64; STATE_DIM] {
        [
            self.dist_to_dest_norm,
            self.best_improvement_norm,
            self.feasible_degree_norm,
            self.busy_fraction,
            self.revisit_flag,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CandidateFeatures {
    /// Distance-to-destination reduction; negative for backward moves.
    pub improvement_norm: f64,
    /// Link length over the limit of its class.
    pub length_ratio: f64,
    /// 1 for intra-plane, 0 for inter-plane.
    pub class_flag: f64,
    pub neighbor_degree_norm: f64,
    /// Always 0 under hard revisit masking.
    pub already_visited_flag: f64,
}

impl CandidateFeatures {
    pub fn to_array(&self) -> [f64; CANDIDATE_DIM] {
        [
            self.improvement_norm,
            self.length_ratio,
            self.class_flag,
            self.neighbor_degree_norm,
            self.already_visited_flag,
        ]
    }
}

/// A feasible next hop and its features.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub edge: Edge,
    pub features: CandidateFeatures,
}

fn dist_to(g: &SnapshotGraph, from: SatelliteId, dest: SatelliteId) -> f64 {
    match (g.position(from), g.position(dest)) {
        (Some(a), Some(b)) => a.distance(b),
        _ => 0.0,
    }
}

/// Outgoing edges of `v` into unvisited nodes, in adjacency order. When more
/// than `k_cap` qualify, only the `k_cap` with the largest progress towards
/// `dest` are kept (ties keep the earlier edge).
pub fn feasible_actions(
    g: &SnapshotGraph,
    v: SatelliteId,
    dest: SatelliteId,
    visited: &BTreeSet<SatelliteId>,
    k_cap: usize,
) -> Vec<Edge> {
    let open: Vec<Edge> = g
        .edges_from(v)
        .iter()
        .filter(|e| !visited.contains(&e.to))
        .copied()
        .collect();
    if open.len() <= k_cap {
        return open;
    }
    let here = dist_to(g, v, dest);
    let mut ranked: Vec<(usize, f64)> = open
        .iter()
        .enumerate()
        .map(|(i, e)| (i, here - dist_to(g, e.to, dest)))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut keep: Vec<usize> = ranked[..k_cap].iter().map(|(i, _)| *i).collect();
    keep.sort_unstable();
    keep.into_iter().map(|i| open[i]).collect()
}

/// State and candidate features at relay `v`.
///
/// `initial_distance` is the source-destination distance of the episode;
/// a non-positive value disables normalization.
pub fn encode(
    g: &SnapshotGraph,
    v: SatelliteId,
    dest: SatelliteId,
    visited: &BTreeSet<SatelliteId>,
    initial_distance: f64,
    k_cap: usize,
) -> (StateVector, Vec<Candidate>) {
    let norm = if initial_distance > 0.0 {
        initial_distance
    } else {
        1.0
    };
    let here = dist_to(g, v, dest);
    let actions = feasible_actions(g, v, dest, visited, k_cap);

    let candidates: Vec<Candidate> = actions
        .into_iter()
        .map(|edge| {
            let limit = g.thresholds_used.limit(edge.link_class);
            Candidate {
                edge,
                features: CandidateFeatures {
                    improvement_norm: (here - dist_to(g, edge.to, dest)) / norm,
                    length_ratio: if limit > 0.0 {
                        edge.length_m / limit
                    } else {
                        0.0
                    },
                    class_flag: if edge.link_class == LinkClass::IntraPlane {
                        1.0
                    } else {
                        0.0
                    },
                    neighbor_degree_norm: g.out_degree(edge.to).min(k_cap) as f64 / k_cap as f64,
                    already_visited_flag: 0.0,
                },
            }
        })
        .collect();

    let best_improvement_norm = candidates
        .iter()
        .map(|c| c.features.improvement_norm)
        .fold(None, |acc: Option<f64>, x| {
            Some(acc.map_or(x, |a| a.max(x)))
        });
    let (masked, out) = match g.index_of(v) {
        Some(i) => (g.masked_by_busy[i], g.adjacency[i].len()),
        None => (0, 0),
    };
    let in_range = masked + out;
    let state = StateVector {
        dist_to_dest_norm: here / norm,
        best_improvement_norm: best_improvement_norm.unwrap_or(0.0),
        feasible_degree_norm: candidates.len() as f64 / k_cap as f64,
        busy_fraction: if in_range > 0 {
            masked as f64 / in_range as f64
        } else {
            0.0
        },
        revisit_flag: if g.edges_from(v).iter().any(|e| visited.contains(&e.to)) {
            1.0
        } else {
            0.0
        },
    };
    (state, candidates)
}

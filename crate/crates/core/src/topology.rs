//! Per-snapshot feasible-link graphs.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::optics::{FeasibilityThresholds, LinkClass};
use crate::orbital::{ConstellationSnapshot, SatelliteId};
use crate::SPEED_OF_LIGHT;

/// Directed ISL that passed every feasibility filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: SatelliteId,
    pub to: SatelliteId,
    pub length_m: f64,
    pub link_class: LinkClass,
    /// Propagation delay plus per-hop overhead, seconds.
    pub cost_s: f64,
}

impl Edge {
    pub fn propagation_delay_s(&self) -> f64 {
        self.length_m / SPEED_OF_LIGHT
    }
}

/// Busy (overloaded) relays for one snapshot.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CongestionState {
    pub busy: BTreeSet<SatelliteId>,
    pub p_busy: f64,
    /// Queue-occupancy limit. Queues are not simulated; kept so configs can
    /// name it.
    pub q_max: Option<f64>,
}

impl CongestionState {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn is_busy(&self, id: SatelliteId) -> bool {
        self.busy.contains(&id)
    }
}

pub fn classify_link(i: SatelliteId, j: SatelliteId) -> Result<LinkClass> {
    if i == j {
        return Err(Error::SelfLink(i));
    }
    Ok(if i.plane == j.plane {
        LinkClass::IntraPlane
    } else {
        LinkClass::InterPlane
    })
}

pub fn link_cost(length_m: f64, beta_s: f64) -> f64 {
    length_m / SPEED_OF_LIGHT + beta_s
}

/// Marks each unprotected satellite busy with probability `p_busy`.
pub fn sample_congestion(
    p_busy: f64,
    snapshot: &ConstellationSnapshot,
    protected: &BTreeSet<SatelliteId>,
    seed: u64,
) -> CongestionState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut busy = BTreeSet::new();
    if p_busy > 0.0 {
        for (id, _) in snapshot.iter() {
            if protected.contains(&id) {
                continue;
            }
            if rng.random::<f64>() < p_busy {
                busy.insert(id);
            }
        }
    }
    CongestionState {
        busy,
        p_busy,
        q_max: None,
    }
}

/// Satellites within `half_width_rad` of the great circle through the two
/// gateways, restricted to the arc between them (extended by `half_width_rad`
/// at both ends). `always_keep` ids are added unconditionally.
pub fn corridor_filter(
    snapshot: &ConstellationSnapshot,
    src_gw: Vec3,
    dst_gw: Vec3,
    half_width_rad: f64,
    always_keep: &[SatelliteId],
) -> Result<BTreeSet<SatelliteId>> {
    let a = src_gw.normalized().ok_or(Error::DegenerateCorridor)?;
    let b = dst_gw.normalized().ok_or(Error::DegenerateCorridor)?;
    let cross = a.cross(b);
    if cross.norm() < 1e-9 {
        return Err(Error::DegenerateCorridor);
    }
    let mut kept: BTreeSet<SatelliteId> = always_keep.iter().copied().collect();
    if half_width_rad >= std::f64::consts::FRAC_PI_2 {
        kept.extend(snapshot.iter().map(|(id, _)| id));
        return Ok(kept);
    }
    let n = cross.normalized().expect("checked non-zero");
    let toward_b = n.cross(a);
    let arc = a.dot(b).clamp(-1.0, 1.0).acos();
    for (id, pos) in snapshot.iter() {
        let Some(r) = pos.normalized() else { continue };
        let off_plane = r.dot(n).clamp(-1.0, 1.0).asin();
        if off_plane.abs() > half_width_rad {
            continue;
        }
        let along = r.dot(toward_b).atan2(r.dot(a));
        if along >= -half_width_rad && along <= arc + half_width_rad {
            kept.insert(id);
        }
    }
    Ok(kept)
}

/// Directed feasible-link graph at one snapshot time.
///
/// Nodes are kept sorted by id; `positions`, `adjacency` and `masked_by_busy`
/// are parallel to `nodes`. Busy nodes stay in the graph but no edge enters
/// them.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotGraph {
    pub time_s: f64,
    pub nodes: Vec<SatelliteId>,
    pub positions: Vec<Vec3>,
    pub adjacency: Vec<Vec<Edge>>,
    /// Per node: in-range neighbours excluded only because they are busy.
    pub masked_by_busy: Vec<usize>,
    pub busy: BTreeSet<SatelliteId>,
    pub source_sat: SatelliteId,
    pub dest_sat: SatelliteId,
    pub thresholds_used: FeasibilityThresholds,
    pub beta_s: f64,
}

impl SnapshotGraph {
    /// Graph from explicit edges (synthetic instances and tests). Edges are
    /// sorted into the usual deterministic adjacency order.
    pub fn from_edges(
        nodes: Vec<(SatelliteId, Vec3)>,
        edges: Vec<Edge>,
        source_sat: SatelliteId,
        dest_sat: SatelliteId,
        thresholds_used: FeasibilityThresholds,
        beta_s: f64,
    ) -> Self {
        let mut nodes = nodes;
        nodes.sort_by_key(|(id, _)| *id);
        nodes.dedup_by_key(|(id, _)| *id);
        let (ids, positions): (Vec<_>, Vec<_>) = nodes.into_iter().unzip();
        let mut adjacency = vec![Vec::new(); ids.len()];
        for e in edges {
            let i = ids
                .binary_search(&e.from)
                .expect("edge source must be a node");
            assert!(
                ids.binary_search(&e.to).is_ok(),
                "edge target must be a node"
            );
            adjacency[i].push(e);
        }
        for adj in &mut adjacency {
            adj.sort_by_key(|e| e.to);
        }
        let n = ids.len();
        Self {
            time_s: 0.0,
            nodes: ids,
            positions,
            adjacency,
            masked_by_busy: vec![0; n],
            busy: BTreeSet::new(),
            source_sat,
            dest_sat,
            thresholds_used,
            beta_s,
        }
    }

    pub fn index_of(&self, id: SatelliteId) -> Option<usize> {
        self.nodes.binary_search(&id).ok()
    }

    pub fn contains(&self, id: SatelliteId) -> bool {
        self.index_of(id).is_some()
    }

    pub fn edges_from(&self, id: SatelliteId) -> &[Edge] {
        self.index_of(id).map_or(&[], |i| &self.adjacency[i])
    }

    pub fn position(&self, id: SatelliteId) -> Option<Vec3> {
        self.index_of(id).map(|i| self.positions[i])
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.adjacency.iter().flatten()
    }

    pub fn out_degree(&self, id: SatelliteId) -> usize {
        self.edges_from(id).len()
    }

    pub fn is_busy(&self, id: SatelliteId) -> bool {
        self.busy.contains(&id)
    }
}

pub fn build_snapshot_graph(
    snapshot: &ConstellationSnapshot,
    thresholds: &FeasibilityThresholds,
    congestion: &CongestionState,
    corridor_nodes: &BTreeSet<SatelliteId>,
    endpoints: (SatelliteId, SatelliteId),
    beta_s: f64,
) -> SnapshotGraph {
    let nodes: Vec<SatelliteId> = corridor_nodes.iter().copied().collect();
    let positions: Vec<Vec3> = nodes.iter().map(|&id| snapshot.position(id)).collect();
    let mut adjacency = vec![Vec::new(); nodes.len()];
    let mut masked_by_busy = vec![0; nodes.len()];

    for (i, &from) in nodes.iter().enumerate() {
        for (j, &to) in nodes.iter().enumerate() {
            if i == j {
                continue;
            }
            let class = if from.plane == to.plane {
                LinkClass::IntraPlane
            } else {
                LinkClass::InterPlane
            };
            let length_m = positions[i].distance(positions[j]);
            if length_m > thresholds.limit(class) {
                continue;
            }
            if congestion.is_busy(to) {
                masked_by_busy[i] += 1;
                continue;
            }
            adjacency[i].push(Edge {
                from,
                to,
                length_m,
                link_class: class,
                cost_s: link_cost(length_m, beta_s),
            });
        }
    }

    let busy = congestion
        .busy
        .iter()
        .filter(|id| corridor_nodes.contains(id))
        .copied()
        .collect();
    SnapshotGraph {
        time_s: snapshot.time_s,
        nodes,
        positions,
        adjacency,
        masked_by_busy,
        busy,
        source_sat: endpoints.0,
        dest_sat: endpoints.1,
        thresholds_used: *thresholds,
        beta_s,
    }
}

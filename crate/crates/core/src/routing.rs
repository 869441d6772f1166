//! Exact per-snapshot routing: Dijkstra plus an exhaustive oracle.
//!
//! Both solvers order candidate paths by `(total cost, hop count, node
//! sequence)`, so on any graph they return the same path, not just the same
//! cost.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::LinkClass;
use crate::orbital::SatelliteId;
use crate::topology::{Edge, SnapshotGraph};

/// Node limit for [`brute_force_path`].
pub const BRUTE_FORCE_MAX_NODES: usize = 14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteResult {
    pub source: SatelliteId,
    pub destination: SatelliteId,
    pub hops: Vec<Edge>,
    pub total_cost_s: f64,
    pub total_length_m: f64,
    pub hop_count: usize,
    pub reached: bool,
}

/// One row of a route's per-hop breakdown.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopRecord {
    pub from: SatelliteId,
    pub to: SatelliteId,
    pub class: LinkClass,
    pub length_m: f64,
    pub tau_s: f64,
}

impl RouteResult {
    pub fn from_hops(
        source: SatelliteId,
        destination: SatelliteId,
        hops: Vec<Edge>,
        reached: bool,
    ) -> Self {
        let total_cost_s = hops.iter().fold(0.0, |acc, e| acc + e.cost_s);
        let total_length_m = hops.iter().fold(0.0, |acc, e| acc + e.length_m);
        Self {
            source,
            destination,
            hop_count: hops.len(),
            hops,
            total_cost_s,
            total_length_m,
            reached,
        }
    }

    pub fn unreached(source: SatelliteId, destination: SatelliteId) -> Self {
        Self::from_hops(source, destination, Vec::new(), false)
    }

    /// Visited satellites, starting at the source.
    pub fn node_sequence(&self) -> Vec<SatelliteId> {
        let mut seq = vec![self.source];
        seq.extend(self.hops.iter().map(|e| e.to));
        seq
    }

    pub fn breakdown(&self) -> Vec<HopRecord> {
        self.hops
            .iter()
            .map(|e| HopRecord {
                from: e.from,
                to: e.to,
                class: e.link_class,
                length_m: e.length_m,
                tau_s: e.propagation_delay_s(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PathMetrics {
    pub delay_ms: f64,
    pub hops: usize,
    pub intra_count: usize,
    pub inter_count: usize,
    pub length_km: f64,
}

pub fn path_metrics(route: &RouteResult) -> PathMetrics {
    let intra_count = route
        .hops
        .iter()
        .filter(|e| e.link_class == LinkClass::IntraPlane)
        .count();
    PathMetrics {
        delay_ms: route.total_cost_s * 1e3,
        hops: route.hop_count,
        intra_count,
        inter_count: route.hop_count - intra_count,
        length_km: route.total_length_m / 1e3,
    }
}

#[derive(Clone, Copy)]
struct Label {
    cost: f64,
    hops: usize,
    pred: Option<(usize, usize)>, // (node index, edge index within its adjacency)
}

fn node_path(labels: &[Option<Label>], mut at: usize) -> Vec<usize> {
    let mut rev = vec![at];
    while let Some((p, _)) = labels[at].and_then(|l| l.pred) {
        rev.push(p);
        at = p;
    }
    rev.reverse();
    rev
}

fn cmp_paths(g: &SnapshotGraph, a: &[usize], b: &[usize]) -> Ordering {
    a.iter()
        .map(|&i| g.nodes[i])
        .cmp(b.iter().map(|&i| g.nodes[i]))
}

#[derive(PartialEq)]
struct QueueKey(f64, usize, usize);

impl Eq for QueueKey {}

impl Ord for QueueKey {
    fn cmp(&self, o: &Self) -> Ordering {
        self.0
            .total_cmp(&o.0)
            .then(self.1.cmp(&o.1))
            .then(self.2.cmp(&o.2))
    }
}

impl PartialOrd for QueueKey {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Minimum-cost path from `s` to `d`. Edge costs must be positive.
pub fn shortest_path(g: &SnapshotGraph, s: SatelliteId, d: SatelliteId) -> Result<RouteResult> {
    let si = g.index_of(s).ok_or(Error::EndpointOutsideGraph(s))?;
    let di = g.index_of(d).ok_or(Error::EndpointOutsideGraph(d))?;
    if si == di {
        return Ok(RouteResult::from_hops(s, d, Vec::new(), true));
    }

    let mut labels: Vec<Option<Label>> = vec![None; g.nodes.len()];
    let mut settled = vec![false; g.nodes.len()];
    let mut heap = BinaryHeap::new();
    labels[si] = Some(Label {
        cost: 0.0,
        hops: 0,
        pred: None,
    });
    heap.push(Reverse(QueueKey(0.0, 0, si)));

    while let Some(Reverse(QueueKey(_, _, u))) = heap.pop() {
        if settled[u] {
            continue;
        }
        settled[u] = true;
        if u == di {
            break;
        }
        let here = labels[u].expect("queued nodes are labelled");
        for (k, e) in g.adjacency[u].iter().enumerate() {
            let v = g.index_of(e.to).expect("edge targets are nodes");
            if settled[v] {
                continue;
            }
            let cand = Label {
                cost: here.cost + e.cost_s,
                hops: here.hops + 1,
                pred: Some((u, k)),
            };
            let better = match labels[v] {
                None => true,
                Some(old) => match cand
                    .cost
                    .total_cmp(&old.cost)
                    .then(cand.hops.cmp(&old.hops))
                {
                    Ordering::Less => true,
                    Ordering::Greater => false,
                    Ordering::Equal => {
                        let old_pred = old.pred.expect("non-source labels have a predecessor").0;
                        cmp_paths(g, &node_path(&labels, u), &node_path(&labels, old_pred))
                            == Ordering::Less
                    }
                },
            };
            if better {
                labels[v] = Some(cand);
                heap.push(Reverse(QueueKey(cand.cost, cand.hops, v)));
            }
        }
    }

    if labels[di].is_none() {
        return Ok(RouteResult::unreached(s, d));
    }
    let mut hops = Vec::new();
    let mut at = di;
    while let Some((p, k)) = labels[at].and_then(|l| l.pred) {
        hops.push(g.adjacency[p][k]);
        at = p;
    }
    hops.reverse();
    Ok(RouteResult::from_hops(s, d, hops, true))
}

/// Exhaustive search over every simple path. Test oracle for [`shortest_path`].
pub fn brute_force_path(g: &SnapshotGraph, s: SatelliteId, d: SatelliteId) -> Result<RouteResult> {
    if g.nodes.len() > BRUTE_FORCE_MAX_NODES {
        return Err(Error::GraphTooLarge {
            nodes: g.nodes.len(),
            limit: BRUTE_FORCE_MAX_NODES,
        });
    }
    let si = g.index_of(s).ok_or(Error::EndpointOutsideGraph(s))?;
    let di = g.index_of(d).ok_or(Error::EndpointOutsideGraph(d))?;
    if si == di {
        return Ok(RouteResult::from_hops(s, d, Vec::new(), true));
    }

    struct Search<'a> {
        g: &'a SnapshotGraph,
        target: usize,
        on_path: Vec<bool>,
        stack: Vec<Edge>,
        best: Option<(f64, Vec<Edge>)>,
    }

    impl Search<'_> {
        fn visit(&mut self, u: usize) {
            if u == self.target {
                let cost = self.stack.iter().fold(0.0, |acc, e| acc + e.cost_s);
                let better = match &self.best {
                    None => true,
                    Some((bc, bp)) => {
                        cost.total_cmp(bc)
                            .then(self.stack.len().cmp(&bp.len()))
                            .then_with(|| {
                                self.stack.iter().map(|e| e.to).cmp(bp.iter().map(|e| e.to))
                            })
                            == Ordering::Less
                    }
                };
                if better {
                    self.best = Some((cost, self.stack.clone()));
                }
                return;
            }
            for k in 0..self.g.adjacency[u].len() {
                let e = self.g.adjacency[u][k];
                let v = self.g.index_of(e.to).expect("edge targets are nodes");
                if self.on_path[v] {
                    continue;
                }
                self.on_path[v] = true;
                self.stack.push(e);
                self.visit(v);
                self.stack.pop();
                self.on_path[v] = false;
            }
        }
    }

    let mut search = Search {
        g,
        target: di,
        on_path: vec![false; g.nodes.len()],
        stack: Vec::new(),
        best: None,
    };
    search.on_path[si] = true;
    search.visit(si);
    Ok(match search.best {
        Some((_, hops)) => RouteResult::from_hops(s, d, hops, true),
        None => RouteResult::unreached(s, d),
    })
}

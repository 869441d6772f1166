#![allow(dead_code)]

use orbroute_core::optics::FeasibilityThresholds;
use orbroute_core::topology::link_cost;
use orbroute_core::{Edge, LinkClass, SatelliteId, SnapshotGraph, Vec3, SPEED_OF_LIGHT};
use rand::Rng;

/// Random directed graph on `n` nodes (ids spread over two planes). Costs are
/// multiples of 1/1024 s so path sums are exact and ties are common.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize, density: f64) -> SnapshotGraph {
    let ids: Vec<SatelliteId> = (0..n).map(|i| SatelliteId::new(i % 2, i / 2)).collect();
    let beta = 1.0 / 1024.0;
    let mut edges = Vec::new();
    for &a in &ids {
        for &b in &ids {
            if a != b && rng.random::<f64>() < density {
                let units = rng.random_range(1..=4) as f64;
                let length_m = SPEED_OF_LIGHT * units / 1024.0;
                let link_class = if a.plane == b.plane {
                    LinkClass::IntraPlane
                } else {
                    LinkClass::InterPlane
                };
                edges.push(Edge {
                    from: a,
                    to: b,
                    length_m,
                    link_class,
                    cost_s: link_cost(length_m, beta),
                });
            }
        }
    }
    let nodes = ids.iter().map(|&id| (id, Vec3::ZERO)).collect();
    SnapshotGraph::from_edges(
        nodes,
        edges,
        ids[0],
        ids[n - 1],
        FeasibilityThresholds::from_ranges(1e12, 1e12),
        beta,
    )
}

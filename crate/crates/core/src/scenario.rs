//! Builds a routable snapshot graph for a gateway pair at a given time.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::FeasibilityThresholds;
use crate::orbital::{
    elevation_angle, gateway_position, propagate_constellation, serving_satellite,
    ConstellationConfig, ConstellationSnapshot, Gateway, SatelliteId,
};
use crate::routing::{path_metrics, PathMetrics, RouteResult};
use crate::topology::{
    build_snapshot_graph, corridor_filter, link_cost, sample_congestion, CongestionState,
    SnapshotGraph,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingParams {
    /// Per-hop forwarding overhead, seconds.
    pub beta_s: f64,
    pub elevation_mask_rad: f64,
    /// `None` disables the corridor filter.
    pub corridor_half_width_rad: Option<f64>,
    pub p_busy: f64,
    pub q_max: Option<f64>,
    /// Maximum number of candidate next hops offered to the policy.
    pub k_cap: usize,
    /// Hop budget per episode.
    pub h_max: usize,
}

impl Default for RoutingParams {
    fn default() -> Self {
        Self {
            beta_s: 1e-3,
            elevation_mask_rad: 10f64.to_radians(),
            corridor_half_width_rad: Some(15f64.to_radians()),
            p_busy: 0.05,
            q_max: None,
            k_cap: 16,
            h_max: 32,
        }
    }
}

impl RoutingParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if !(self.beta_s >= 0.0 && self.beta_s.is_finite()) {
            return bad("beta must be non-negative");
        }
        if !(0.0..std::f64::consts::FRAC_PI_2).contains(&self.elevation_mask_rad) {
            return bad("elevation mask must lie in [0, 90) degrees");
        }
        if let Some(w) = self.corridor_half_width_rad {
            if !(w > 0.0) {
                return bad("corridor half-width must be positive");
            }
        }
        if !(0.0..1.0).contains(&self.p_busy) {
            return bad("p_busy must lie in [0, 1)");
        }
        if self.k_cap == 0 || self.h_max == 0 {
            return bad("k_cap and h_max must be at least 1");
        }
        Ok(())
    }
}

/// Everything needed to route between two gateways, independent of time.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub constellation: ConstellationConfig,
    pub thresholds: FeasibilityThresholds,
    pub routing: RoutingParams,
    pub source: Gateway,
    pub destination: Gateway,
}

/// Ground-to-satellite link between a gateway and its serving satellite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccessLink {
    pub gateway: String,
    pub satellite: SatelliteId,
    pub length_m: f64,
    pub elevation_rad: f64,
    pub cost_s: f64,
}

/// Gateway-to-gateway route: uplink, ISL path, downlink.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndToEndRoute {
    pub uplink: AccessLink,
    pub isl: RouteResult,
    pub downlink: AccessLink,
}

impl EndToEndRoute {
    pub fn reached(&self) -> bool {
        self.isl.reached
    }

    pub fn total_cost_s(&self) -> f64 {
        self.uplink.cost_s + self.isl.total_cost_s + self.downlink.cost_s
    }

    /// Metrics counting both access links as hops; the intra/inter split
    /// covers the ISL hops only.
    pub fn metrics(&self) -> PathMetrics {
        let isl = path_metrics(&self.isl);
        PathMetrics {
            delay_ms: self.total_cost_s() * 1e3,
            hops: isl.hops + 2,
            intra_count: isl.intra_count,
            inter_count: isl.inter_count,
            length_km: (self.uplink.length_m + self.isl.total_length_m + self.downlink.length_m)
                / 1e3,
        }
    }
}

/// One sampled snapshot of a [`Scenario`].
#[derive(Debug, Clone)]
pub struct ScenarioInstance {
    pub snapshot: ConstellationSnapshot,
    pub congestion: CongestionState,
    pub corridor: BTreeSet<SatelliteId>,
    pub graph: SnapshotGraph,
    pub uplink: AccessLink,
    pub downlink: AccessLink,
}

impl ScenarioInstance {
    pub fn source_sat(&self) -> SatelliteId {
        self.graph.source_sat
    }

    pub fn dest_sat(&self) -> SatelliteId {
        self.graph.dest_sat
    }

    pub fn end_to_end(&self, isl: RouteResult) -> EndToEndRoute {
        EndToEndRoute {
            uplink: self.uplink.clone(),
            isl,
            downlink: self.downlink.clone(),
        }
    }
}

fn access_link(
    snapshot: &ConstellationSnapshot,
    gw: &Gateway,
    sat: SatelliteId,
    re: f64,
    beta_s: f64,
) -> AccessLink {
    let g = gateway_position(gw, re);
    let s = snapshot.position(sat);
    let length_m = g.distance(s);
    AccessLink {
        gateway: gw.name.clone(),
        satellite: sat,
        length_m,
        elevation_rad: elevation_angle(s, g).unwrap_or(0.0),
        cost_s: link_cost(length_m, beta_s),
    }
}

impl Scenario {
    pub fn with_gateways(&self, source: Gateway, destination: Gateway) -> Scenario {
        Scenario {
            source,
            destination,
            ..self.clone()
        }
    }

    /// Propagates to `time_s`, resolves serving satellites, draws busy nodes
    /// from `congestion_seed` and builds the feasible-link graph.
    pub fn instantiate(&self, time_s: f64, congestion_seed: u64) -> Result<ScenarioInstance> {
        let snapshot = propagate_constellation(&self.constellation, time_s);
        let re = self.constellation.earth_radius_m;
        let mask = self.routing.elevation_mask_rad;
        let src = serving_satellite(&snapshot, &self.source, re, mask)
            .ok_or_else(|| Error::NoServingSatellite(self.source.name.clone()))?;
        let dst = serving_satellite(&snapshot, &self.destination, re, mask)
            .ok_or_else(|| Error::NoServingSatellite(self.destination.name.clone()))?;

        let corridor = match self.routing.corridor_half_width_rad {
            Some(w) => corridor_filter(
                &snapshot,
                gateway_position(&self.source, re),
                gateway_position(&self.destination, re),
                w,
                &[src, dst],
            )?,
            None => snapshot.iter().map(|(id, _)| id).collect(),
        };
        let protected: BTreeSet<SatelliteId> = [src, dst].into();
        let mut congestion =
            sample_congestion(self.routing.p_busy, &snapshot, &protected, congestion_seed);
        congestion.q_max = self.routing.q_max;
        let graph = build_snapshot_graph(
            &snapshot,
            &self.thresholds,
            &congestion,
            &corridor,
            (src, dst),
            self.routing.beta_s,
        );
        let beta = self.routing.beta_s;
        let uplink = access_link(&snapshot, &self.source, src, re, beta);
        let downlink = access_link(&snapshot, &self.destination, dst, re, beta);
        Ok(ScenarioInstance {
            snapshot,
            congestion,
            corridor,
            graph,
            uplink,
            downlink,
        })
    }
}

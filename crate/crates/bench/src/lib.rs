//! Shared fixtures for the benchmarks.

use orbroute_core::optics::{compute_thresholds, OpticalParams, ThresholdMode};
use orbroute_core::{ConstellationConfig, Gateway, RoutingParams, Scenario};

/// Default constellation, optimized thresholds, Doha to London.
pub fn default_scenario() -> Scenario {
    Scenario {
        constellation: ConstellationConfig::starlink_like(),
        thresholds: compute_thresholds(&OpticalParams::default(), ThresholdMode::Optimized)
            .expect("feasible defaults"),
        routing: RoutingParams::default(),
        source: Gateway::doha(),
        destination: Gateway::london(),
    }
}

/// Same scenario without the corridor filter, for full-constellation graphs.
pub fn unfiltered_scenario() -> Scenario {
    let mut s = default_scenario();
    s.routing.corridor_half_width_rad = None;
    s
}

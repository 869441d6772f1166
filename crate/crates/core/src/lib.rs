//! Physics-constrained routing for optical LEO constellations.
//!
//! The crate is organised bottom-up:
//!
//! - [`orbital`]: circular-orbit propagation, gateway placement, elevation
//!   masks and serving-satellite selection.
//! - [`optics`]: Gaussian-beam link budget with pointing jitter and the
//!   offline solver for per-class maximum link ranges.
//! - [`topology`]: per-snapshot feasible-link graphs (range limits, busy
//!   nodes, great-circle corridor).
//! - [`routing`]: exact shortest-path solver plus a brute-force oracle.
//! - [`rl`]: masked next-hop value policy, training and evaluation.
//! - [`scenario`]: glue that turns a gateway pair and a snapshot time into a
//!   routable graph.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod optics;
pub mod orbital;
pub mod rl;
pub mod routing;
pub mod scenario;
pub mod seed;
pub mod topology;

pub use error::{Error, Result};
pub use geometry::Vec3;
pub use optics::{FeasibilityThresholds, LinkClass, OpticalParams, ThresholdMode};
pub use orbital::{ConstellationConfig, ConstellationSnapshot, Gateway, SatelliteId};
pub use routing::{PathMetrics, RouteResult};
pub use scenario::{AccessLink, EndToEndRoute, RoutingParams, Scenario, ScenarioInstance};
pub use seed::SeedStreams;
pub use topology::{CongestionState, Edge, SnapshotGraph};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

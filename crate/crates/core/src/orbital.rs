//! Circular-orbit constellation geometry and gateway visibility.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Earth gravitational parameter, m^3/s^2.
pub const EARTH_MU: f64 = 3.986_004_418e14;
/// Mean Earth radius, m.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// A shell of circular orbits: `num_planes` planes with `sats_per_plane`
/// evenly phased satellites each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstellationConfig {
    pub altitude_m: f64,
    pub earth_radius_m: f64,
    pub num_planes: usize,
    pub sats_per_plane: usize,
    pub inclination_rad: f64,
    /// RAAN offset between consecutive planes.
    pub raan_spacing_rad: f64,
    /// In-plane phase added per plane index (stagger between planes).
    pub phase_stagger_rad: f64,
    pub mu_m3s2: f64,
}

impl ConstellationConfig {
    /// 40 x 25 shell at 550 km, 53 degrees, RAAN spread over the full circle.
    pub fn starlink_like() -> Self {
        Self::walker(550_000.0, 40, 25, 53f64.to_radians())
    }

    /// Walker-delta layout: RAAN spread over 2 pi and a half-slot stagger
    /// between consecutive planes.
    pub fn walker(altitude_m: f64, planes: usize, per_plane: usize, inclination_rad: f64) -> Self {
        Self {
            altitude_m,
            earth_radius_m: EARTH_RADIUS_M,
            num_planes: planes,
            sats_per_plane: per_plane,
            inclination_rad,
            raan_spacing_rad: 2.0 * PI / planes.max(1) as f64,
            phase_stagger_rad: PI / per_plane.max(1) as f64,
            mu_m3s2: EARTH_MU,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.to_string()));
        if !(self.altitude_m > 0.0) {
            return bad("altitude must be positive");
        }
        if !(self.earth_radius_m > 0.0) {
            return bad("earth radius must be positive");
        }
        if self.num_planes == 0 || self.sats_per_plane == 0 {
            return bad("constellation needs at least one plane and one satellite per plane");
        }
        if !(0.0..=PI).contains(&self.inclination_rad) {
            return bad("inclination must lie in [0, pi]");
        }
        if !(self.mu_m3s2 > 0.0) {
            return bad("gravitational parameter must be positive");
        }
        Ok(())
    }

    pub fn orbital_radius(&self) -> f64 {
        self.earth_radius_m + self.altitude_m
    }

    /// Mean motion sqrt(mu / r^3), rad/s.
    pub fn angular_velocity(&self) -> f64 {
        let r = self.orbital_radius();
        (self.mu_m3s2 / (r * r * r)).sqrt()
    }

    pub fn period_s(&self) -> f64 {
        2.0 * PI / self.angular_velocity()
    }

    pub fn num_satellites(&self) -> usize {
        self.num_planes * self.sats_per_plane
    }

    pub fn raan(&self, plane: usize) -> f64 {
        plane as f64 * self.raan_spacing_rad
    }

    pub fn phase_offset(&self, id: SatelliteId) -> f64 {
        2.0 * PI * id.slot as f64 / self.sats_per_plane as f64
            + self.phase_stagger_rad * id.plane as f64
    }

    pub fn satellite_ids(&self) -> impl Iterator<Item = SatelliteId> + '_ {
        (0..self.num_planes)
            .flat_map(move |p| (0..self.sats_per_plane).map(move |k| SatelliteId::new(p, k)))
    }

    pub fn flat_index(&self, id: SatelliteId) -> usize {
        id.plane * self.sats_per_plane + id.slot
    }
}

/// `(plane, slot)` pair identifying one satellite. Ordered lexicographically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SatelliteId {
    pub plane: usize,
    pub slot: usize,
}

impl SatelliteId {
    pub const fn new(plane: usize, slot: usize) -> Self {
        Self { plane, slot }
    }
}

impl fmt::Display for SatelliteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{:02}S{:02}", self.plane, self.slot)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gateway {
    pub name: String,
    pub latitude_rad: f64,
    pub longitude_rad: f64,
}

impl Gateway {
    pub fn from_degrees(name: impl Into<String>, lat_deg: f64, lon_deg: f64) -> Self {
        Self {
            name: name.into(),
            latitude_rad: lat_deg.to_radians(),
            longitude_rad: lon_deg.to_radians(),
        }
    }

    pub fn doha() -> Self {
        Self::from_degrees("Doha", 25.2854, 51.5310)
    }

    pub fn london() -> Self {
        Self::from_degrees("London", 51.5074, -0.1278)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.latitude_rad.abs() <= PI / 2.0) || !(self.longitude_rad.abs() <= PI) {
            return Err(Error::InvalidParameter(format!(
                "gateway {}: latitude must be within +-90 deg and longitude within +-180 deg",
                self.name
            )));
        }
        Ok(())
    }
}

/// Satellite positions at one instant, indexed by flat satellite index.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstellationSnapshot {
    pub time_s: f64,
    pub num_planes: usize,
    pub sats_per_plane: usize,
    pub positions: Vec<Vec3>,
}

impl ConstellationSnapshot {
    pub fn position(&self, id: SatelliteId) -> Vec3 {
        self.positions[id.plane * self.sats_per_plane + id.slot]
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn id_at(&self, index: usize) -> SatelliteId {
        SatelliteId::new(index / self.sats_per_plane, index % self.sats_per_plane)
    }

    pub fn iter(&self) -> impl Iterator<Item = (SatelliteId, Vec3)> + '_ {
        self.positions
            .iter()
            .enumerate()
            .map(|(i, &p)| (self.id_at(i), p))
    }
}

/// Position of satellite `id` at time `t`:
/// `r * Rz(raan) * Rx(inc) * [cos(wt + phi), sin(wt + phi), 0]`.
pub fn satellite_position(cfg: &ConstellationConfig, id: SatelliteId, t: f64) -> Vec3 {
    let r = cfg.orbital_radius();
    let u = cfg.angular_velocity() * t + cfg.phase_offset(id);
    Vec3::new(r * u.cos(), r * u.sin(), 0.0)
        .rotate_x(cfg.inclination_rad)
        .rotate_z(cfg.raan(id.plane))
}

pub fn propagate_constellation(cfg: &ConstellationConfig, t: f64) -> ConstellationSnapshot {
    ConstellationSnapshot {
        time_s: t,
        num_planes: cfg.num_planes,
        sats_per_plane: cfg.sats_per_plane,
        positions: cfg
            .satellite_ids()
            .map(|id| satellite_position(cfg, id, t))
            .collect(),
    }
}

/// Gateway location on the spherical Earth (no Earth rotation).
pub fn gateway_position(gw: &Gateway, earth_radius_m: f64) -> Vec3 {
    let (slat, clat) = gw.latitude_rad.sin_cos();
    let (slon, clon) = gw.longitude_rad.sin_cos();
    Vec3::new(clat * clon, clat * slon, slat) * earth_radius_m
}

/// Elevation of `sat` as seen from `gw`, in [-pi/2, pi/2].
pub fn elevation_angle(sat: Vec3, gw: Vec3) -> Result<f64> {
    let los = sat - gw;
    let range = los.norm();
    if range == 0.0 {
        return Err(Error::CoincidentPoints);
    }
    let up = gw.normalized().ok_or(Error::CoincidentPoints)?;
    Ok((los.dot(up) / range).clamp(-1.0, 1.0).asin())
}

/// Nearest satellite that clears the elevation mask, ties to the smallest id.
pub fn serving_satellite(
    snapshot: &ConstellationSnapshot,
    gw: &Gateway,
    earth_radius_m: f64,
    eps_min: f64,
) -> Option<SatelliteId> {
    let g = gateway_position(gw, earth_radius_m);
    let mut best: Option<(f64, SatelliteId)> = None;
    for (id, pos) in snapshot.iter() {
        let Ok(el) = elevation_angle(pos, g) else {
            continue;
        };
        if el < eps_min {
            continue;
        }
        let d = pos.distance(g);
        // iteration order is lexicographic, so strict < keeps the smallest id on ties
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, id));
        }
    }
    best.map(|(_, id)| id)
}

//! Run configuration: one TOML file, every key optional.
//!
//! Angles are written in degrees (or microradians for jitter and
//! divergence), distances in km, and losses in dB. [`RunConfig`] converts them
//! to the SI domain types used by the core crate.

use std::path::Path;

use orbroute_core::optics::{db_to_linear, OpticalParams, ThresholdMode};
use orbroute_core::orbital::{ConstellationConfig, Gateway, EARTH_MU};
use orbroute_core::rl::RlHyperParams;
use orbroute_core::RoutingParams;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Syntax(String),
    #[error("invalid config: {field}: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConstellationSection {
    pub altitude_km: f64,
    pub earth_radius_km: f64,
    pub num_planes: usize,
    pub sats_per_plane: usize,
    pub inclination_deg: f64,
    /// Total RAAN spread; planes are spaced evenly across it.
    pub raan_spread_deg: f64,
    /// Phase stagger between consecutive planes; half a slot when unset.
    pub phase_stagger_deg: Option<f64>,
    pub mu_m3s2: f64,
}

impl Default for ConstellationSection {
    fn default() -> Self {
        Self {
            altitude_km: 550.0,
            earth_radius_km: 6371.0,
            num_planes: 40,
            sats_per_plane: 25,
            inclination_deg: 53.0,
            raan_spread_deg: 360.0,
            phase_stagger_deg: None,
            mu_m3s2: EARTH_MU,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    Optimized,
    OptimizedUnclamped,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OpticsSection {
    pub wavelength_nm: f64,
    pub tx_power_w: f64,
    pub eff_tx: f64,
    pub eff_rx: f64,
    pub aperture_radius_cm: f64,
    pub system_loss_db: f64,
    pub noise_bandwidth_w: f64,
    pub snr_threshold: f64,
    pub divergence_max_urad: f64,
    pub jitter_intra_urad: f64,
    pub jitter_inter_urad: f64,
    pub outage_threshold: f64,
    pub threshold_mode: ModeName,
    /// Divergence used when `threshold_mode = "fixed"`.
    pub fixed_divergence_urad: f64,
}

impl Default for OpticsSection {
    fn default() -> Self {
        Self {
            wavelength_nm: 1550.0,
            tx_power_w: 1.0,
            eff_tx: 0.5,
            eff_rx: 0.5,
            aperture_radius_cm: 5.0,
            system_loss_db: 10.0,
            noise_bandwidth_w: 1e-12,
            snr_threshold: 10.0,
            divergence_max_urad: 1000.0,
            jitter_intra_urad: 100.0,
            jitter_inter_urad: 200.0,
            outage_threshold: 1e-3,
            threshold_mode: ModeName::Optimized,
            fixed_divergence_urad: 1000.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RoutingSection {
    pub beta_ms: f64,
    pub elevation_mask_deg: f64,
    pub corridor: bool,
    pub corridor_half_width_deg: f64,
    pub p_busy: f64,
    /// Queue limit placeholder; busy nodes are drawn i.i.d. with `p_busy`.
    pub q_max: Option<f64>,
    pub k_cap: usize,
    pub h_max: usize,
}

impl Default for RoutingSection {
    fn default() -> Self {
        Self {
            beta_ms: 1.0,
            elevation_mask_deg: 10.0,
            corridor: true,
            corridor_half_width_deg: 15.0,
            p_busy: 0.05,
            q_max: None,
            k_cap: 16,
            h_max: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GatewaySection {
    pub name: String,
    pub lat_deg: f64,
    pub lon_deg: f64,
}

fn default_gateways() -> Vec<GatewaySection> {
    vec![
        GatewaySection {
            name: "Doha".into(),
            lat_deg: 25.2854,
            lon_deg: 51.5310,
        },
        GatewaySection {
            name: "London".into(),
            lat_deg: 51.5074,
            lon_deg: -0.1278,
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSection {
    pub source: String,
    pub destination: String,
    pub snapshots: usize,
    pub seed: u64,
    pub time_min_s: f64,
    pub time_max_s: f64,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self {
            source: "Doha".into(),
            destination: "London".into(),
            snapshots: 100,
            seed: 42,
            time_min_s: 0.0,
            time_max_s: 5400.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub jitter_inter_urad: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            jitter_inter_urad: vec![150.0, 200.0, 300.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub constellation: ConstellationSection,
    pub optics: OpticsSection,
    pub routing: RoutingSection,
    #[serde(default = "default_gateways")]
    pub gateways: Vec<GatewaySection>,
    pub scenario: ScenarioSection,
    pub rl: RlHyperParams,
    pub sweep: SweepSection,
    pub output: OutputSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            constellation: Default::default(),
            optics: Default::default(),
            routing: Default::default(),
            gateways: default_gateways(),
            scenario: Default::default(),
            rl: Default::default(),
            sweep: Default::default(),
            output: Default::default(),
        }
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.display().to_string(),
        source,
    })?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(
            field,
            format!("must be positive and finite, got {v}"),
        ))
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let c = &self.constellation;
        positive("constellation.altitude_km", c.altitude_km)?;
        positive("constellation.earth_radius_km", c.earth_radius_km)?;
        positive("constellation.mu_m3s2", c.mu_m3s2)?;
        if c.num_planes == 0 {
            return Err(invalid("constellation.num_planes", "must be at least 1"));
        }
        if c.sats_per_plane == 0 {
            return Err(invalid(
                "constellation.sats_per_plane",
                "must be at least 1",
            ));
        }
        if !(0.0..=180.0).contains(&c.inclination_deg) {
            return Err(invalid(
                "constellation.inclination_deg",
                "must lie in [0, 180]",
            ));
        }
        if !c.raan_spread_deg.is_finite() || c.phase_stagger_deg.is_some_and(|p| !p.is_finite()) {
            return Err(invalid("constellation", "angles must be finite"));
        }

        let o = &self.optics;
        for (name, v) in [
            ("optics.wavelength_nm", o.wavelength_nm),
            ("optics.tx_power_w", o.tx_power_w),
            ("optics.eff_tx", o.eff_tx),
            ("optics.eff_rx", o.eff_rx),
            ("optics.aperture_radius_cm", o.aperture_radius_cm),
            ("optics.noise_bandwidth_w", o.noise_bandwidth_w),
            ("optics.snr_threshold", o.snr_threshold),
            ("optics.divergence_max_urad", o.divergence_max_urad),
            ("optics.jitter_intra_urad", o.jitter_intra_urad),
            ("optics.jitter_inter_urad", o.jitter_inter_urad),
            ("optics.fixed_divergence_urad", o.fixed_divergence_urad),
        ] {
            positive(name, v)?;
        }
        if !(o.system_loss_db >= 0.0) {
            return Err(invalid("optics.system_loss_db", "must be >= 0 dB"));
        }
        if !(o.outage_threshold > 0.0 && o.outage_threshold < 1.0) {
            return Err(invalid("optics.outage_threshold", "must lie in (0, 1)"));
        }
        if o.jitter_inter_urad <= o.jitter_intra_urad {
            return Err(invalid(
                "optics.jitter_inter_urad",
                format!(
                    "inter-plane jitter ({}) must exceed intra-plane jitter ({}): inter-plane links track faster relative motion",
                    o.jitter_inter_urad, o.jitter_intra_urad
                ),
            ));
        }

        let r = &self.routing;
        if !(r.beta_ms >= 0.0 && r.beta_ms.is_finite()) {
            return Err(invalid("routing.beta_ms", "must be >= 0"));
        }
        if !(0.0..90.0).contains(&r.elevation_mask_deg) {
            return Err(invalid("routing.elevation_mask_deg", "must lie in [0, 90)"));
        }
        if r.corridor {
            positive("routing.corridor_half_width_deg", r.corridor_half_width_deg)?;
        }
        if !(0.0..1.0).contains(&r.p_busy) {
            return Err(invalid("routing.p_busy", "must lie in [0, 1)"));
        }
        if r.k_cap == 0 {
            return Err(invalid("routing.k_cap", "must be at least 1"));
        }
        if r.h_max == 0 {
            return Err(invalid("routing.h_max", "must be at least 1"));
        }

        for (i, g) in self.gateways.iter().enumerate() {
            if !(g.lat_deg.abs() <= 90.0) {
                return Err(invalid(
                    &format!("gateways[{i}].lat_deg"),
                    "must lie in [-90, 90]",
                ));
            }
            if !(g.lon_deg.abs() <= 180.0) {
                return Err(invalid(
                    &format!("gateways[{i}].lon_deg"),
                    "must lie in [-180, 180]",
                ));
            }
        }
        let s = &self.scenario;
        for (field, name) in [
            ("scenario.source", &s.source),
            ("scenario.destination", &s.destination),
        ] {
            if !self.gateways.iter().any(|g| &g.name == name) {
                return Err(invalid(field, format!("unknown gateway {name:?}")));
            }
        }
        if s.source == s.destination {
            return Err(invalid(
                "scenario.destination",
                "must differ from scenario.source",
            ));
        }
        if !(s.time_min_s >= 0.0 && s.time_max_s >= s.time_min_s) {
            return Err(invalid(
                "scenario.time_max_s",
                "snapshot window must satisfy 0 <= time_min_s <= time_max_s",
            ));
        }
        if s.snapshots == 0 {
            return Err(invalid("scenario.snapshots", "must be at least 1"));
        }
        for (i, &v) in self.sweep.jitter_inter_urad.iter().enumerate() {
            positive(&format!("sweep.jitter_inter_urad[{i}]"), v)?;
        }
        self.rl
            .validate()
            .map_err(|e| invalid("rl", e.to_string()))?;
        self.constellation_config()
            .validate()
            .map_err(|e| invalid("constellation", e.to_string()))?;
        self.optical_params()
            .validate()
            .map_err(|e| invalid("optics", e.to_string()))?;
        Ok(())
    }

    pub fn constellation_config(&self) -> ConstellationConfig {
        let c = &self.constellation;
        let mut cfg = ConstellationConfig::walker(
            c.altitude_km * 1e3,
            c.num_planes,
            c.sats_per_plane,
            c.inclination_deg.to_radians(),
        );
        cfg.earth_radius_m = c.earth_radius_km * 1e3;
        cfg.raan_spacing_rad = c.raan_spread_deg.to_radians() / c.num_planes as f64;
        if let Some(p) = c.phase_stagger_deg {
            cfg.phase_stagger_rad = p.to_radians();
        }
        cfg.mu_m3s2 = c.mu_m3s2;
        cfg
    }

    pub fn optical_params(&self) -> OpticalParams {
        let o = &self.optics;
        OpticalParams {
            wavelength_m: o.wavelength_nm / 1e9,
            tx_power_w: o.tx_power_w,
            eff_tx: o.eff_tx,
            eff_rx: o.eff_rx,
            aperture_radius_m: o.aperture_radius_cm / 100.0,
            system_loss_linear: db_to_linear(o.system_loss_db),
            noise_bandwidth_w: o.noise_bandwidth_w,
            snr_threshold_linear: o.snr_threshold,
            divergence_max_rad: o.divergence_max_urad / 1e6,
            jitter_intra_rad: o.jitter_intra_urad / 1e6,
            jitter_inter_rad: o.jitter_inter_urad / 1e6,
            outage_threshold: o.outage_threshold,
        }
    }

    pub fn threshold_mode(&self) -> ThresholdMode {
        match self.optics.threshold_mode {
            ModeName::Optimized => ThresholdMode::Optimized,
            ModeName::OptimizedUnclamped => ThresholdMode::OptimizedUnclamped,
            ModeName::Fixed => ThresholdMode::Fixed {
                divergence_rad: self.optics.fixed_divergence_urad / 1e6,
            },
        }
    }

    pub fn routing_params(&self) -> RoutingParams {
        let r = &self.routing;
        RoutingParams {
            beta_s: r.beta_ms * 1e-3,
            elevation_mask_rad: r.elevation_mask_deg.to_radians(),
            corridor_half_width_rad: r.corridor.then(|| r.corridor_half_width_deg.to_radians()),
            p_busy: r.p_busy,
            q_max: r.q_max,
            k_cap: r.k_cap,
            h_max: r.h_max,
        }
    }

    pub fn gateway_list(&self) -> Vec<Gateway> {
        self.gateways
            .iter()
            .map(|g| Gateway::from_degrees(g.name.clone(), g.lat_deg, g.lon_deg))
            .collect()
    }

    pub fn gateway(&self, name: &str) -> Option<Gateway> {
        self.gateway_list().into_iter().find(|g| g.name == name)
    }

    /// Canonical TOML rendering of the effective configuration.
    pub fn normalized(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn sha256(&self) -> [u8; 32] {
        Sha256::digest(self.normalized().as_bytes()).into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_table_defaults() {
        let cfg = parse_config_str("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        let c = cfg.constellation_config();
        assert_eq!((c.num_planes, c.sats_per_plane), (40, 25));
        assert_eq!(c.altitude_m, 550e3);
        assert_eq!(c.earth_radius_m, 6371e3);
        assert!((c.inclination_rad - 53f64.to_radians()).abs() < 1e-15);
        assert_eq!(cfg.optical_params(), OpticalParams::default());
        assert_eq!(cfg.routing_params(), RoutingParams::default());
        assert_eq!(
            (cfg.scenario.time_min_s, cfg.scenario.time_max_s),
            (0.0, 5400.0)
        );
    }

    #[test]
    fn inverted_jitter_is_rejected_with_field() {
        let err = parse_config_str("[optics]\njitter_inter_urad = 50\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("optics.jitter_inter_urad"), "{msg}");
        assert!(msg.contains("must exceed intra-plane"), "{msg}");
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = parse_config_str("foo = 1\n").unwrap_err();
        assert!(matches!(err, ConfigError::Syntax(_)));
        assert!(err.to_string().contains("foo"), "{err}");
        let err = parse_config_str("[routing]\nbeta = 2\n").unwrap_err();
        assert!(err.to_string().contains("beta"), "{err}");
    }

    #[test]
    fn malformed_syntax_and_missing_file() {
        assert!(matches!(
            parse_config_str("[optics\n"),
            Err(ConfigError::Syntax(_))
        ));
        assert!(matches!(
            parse_config(Path::new("/nonexistent/cfg.toml")),
            Err(ConfigError::Read { .. })
        ));
    }

    #[test]
    fn normalized_echo_round_trips() {
        let cfg = parse_config_str("[routing]\np_busy = 0.2\n[scenario]\nseed = 7\n").unwrap();
        let back = parse_config_str(&cfg.normalized()).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(cfg.sha256(), back.sha256());
    }

    #[test]
    fn unknown_gateway_in_scenario() {
        let err = parse_config_str("[scenario]\nsource = \"Paris\"\n").unwrap_err();
        assert!(err.to_string().contains("scenario.source"));
    }
}

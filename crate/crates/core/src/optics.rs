//! Gaussian-beam optical ISL budget under pointing jitter.
//!
//! The far-field beam radius is `w = theta_div * l`, so the aligned SNR falls
//! as `1/l^2` and the pointing loss `exp(-2 theta^2 / theta_div^2)` does not
//! depend on range. With a Rayleigh-distributed radial pointing error the
//! outage probability has the closed form `K^(-m)`, where `K` is the aligned
//! SNR margin and `m = theta_div^2 / (4 sigma^2)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpticalParams {
    /// Carried for completeness; the far-field model does not use it.
    pub wavelength_m: f64,
    pub tx_power_w: f64,
    pub eff_tx: f64,
    pub eff_rx: f64,
    pub aperture_radius_m: f64,
    /// Linear loss factor (>= 1) dividing the received power.
    pub system_loss_linear: f64,
    /// Noise power N0*B in watts.
    pub noise_bandwidth_w: f64,
    pub snr_threshold_linear: f64,
    pub divergence_max_rad: f64,
    pub jitter_intra_rad: f64,
    pub jitter_inter_rad: f64,
    pub outage_threshold: f64,
}

impl Default for OpticalParams {
    fn default() -> Self {
        Self {
            wavelength_m: 1550e-9,
            tx_power_w: 1.0,
            eff_tx: 0.5,
            eff_rx: 0.5,
            aperture_radius_m: 0.05,
            system_loss_linear: db_to_linear(10.0),
            noise_bandwidth_w: 1e-12,
            snr_threshold_linear: 10.0,
            divergence_max_rad: 1e-3,
            jitter_intra_rad: 100e-6,
            jitter_inter_rad: 200e-6,
            outage_threshold: 1e-3,
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

impl OpticalParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("wavelength_m", self.wavelength_m),
            ("tx_power_w", self.tx_power_w),
            ("eff_tx", self.eff_tx),
            ("eff_rx", self.eff_rx),
            ("aperture_radius_m", self.aperture_radius_m),
            ("system_loss_linear", self.system_loss_linear),
            ("noise_bandwidth_w", self.noise_bandwidth_w),
            ("snr_threshold_linear", self.snr_threshold_linear),
            ("divergence_max_rad", self.divergence_max_rad),
            ("jitter_intra_rad", self.jitter_intra_rad),
            ("jitter_inter_rad", self.jitter_inter_rad),
            ("outage_threshold", self.outage_threshold),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite"
                )));
            }
        }
        if self.system_loss_linear < 1.0 {
            return Err(Error::InvalidParameter(
                "system_loss_linear must be >= 1".into(),
            ));
        }
        if self.outage_threshold >= 1.0 {
            return Err(Error::InvalidParameter(
                "outage_threshold must lie in (0, 1)".into(),
            ));
        }
        if self.jitter_inter_rad <= self.jitter_intra_rad {
            return Err(Error::InvalidParameter(
                "jitter_inter_rad must exceed jitter_intra_rad (inter-plane links are less stable)"
                    .into(),
            ));
        }
        Ok(())
    }

    /// `C0 = P_t eta_t eta_r a_r^2 / (L_sys N0B)`, in rad^2 m^2: the aligned SNR
    /// is `C0 / (theta_div l)^2`.
    pub fn snr_constant(&self) -> f64 {
        self.tx_power_w * self.eff_tx * self.eff_rx * self.aperture_radius_m.powi(2)
            / (self.system_loss_linear * self.noise_bandwidth_w)
    }

    /// `sqrt(C0 / gamma_th)`: the range-divergence product at which the aligned
    /// SNR equals the threshold.
    pub fn aligned_range_product(&self) -> f64 {
        (self.snr_constant() / self.snr_threshold_linear).sqrt()
    }

    pub fn jitter(&self, class: LinkClass) -> f64 {
        match class {
            LinkClass::IntraPlane => self.jitter_intra_rad,
            LinkClass::InterPlane => self.jitter_inter_rad,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkClass {
    IntraPlane,
    InterPlane,
}

impl LinkClass {
    pub fn as_str(self) -> &'static str {
        match self {
            LinkClass::IntraPlane => "intra",
            LinkClass::InterPlane => "inter",
        }
    }
}

impl fmt::Display for LinkClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How the beam divergence is chosen when solving for a class range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ThresholdMode {
    /// Use this divergence for every class.
    Fixed { divergence_rad: f64 },
    /// Range-maximizing divergence, clamped to `divergence_max_rad`.
    Optimized,
    /// Range-maximizing divergence with no upper bound.
    OptimizedUnclamped,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityThresholds {
    pub l_max_intra_m: f64,
    pub l_max_inter_m: f64,
    pub divergence_intra_rad: f64,
    pub divergence_inter_rad: f64,
}

impl FeasibilityThresholds {
    /// Class limits without a physical derivation, for synthetic graphs.
    pub fn from_ranges(l_max_intra_m: f64, l_max_inter_m: f64) -> Self {
        Self {
            l_max_intra_m,
            l_max_inter_m,
            divergence_intra_rad: 0.0,
            divergence_inter_rad: 0.0,
        }
    }

    pub fn limit(&self, class: LinkClass) -> f64 {
        match class {
            LinkClass::IntraPlane => self.l_max_intra_m,
            LinkClass::InterPlane => self.l_max_inter_m,
        }
    }
}

/// Far-field beam radius.
pub fn beam_radius(theta_div: f64, l: f64) -> f64 {
    theta_div * l
}

pub fn received_power_aligned(p: &OpticalParams, theta_div: f64, l: f64) -> f64 {
    let w = beam_radius(theta_div, l);
    p.tx_power_w * p.eff_tx * p.eff_rx * (p.aperture_radius_m / w).powi(2) / p.system_loss_linear
}

/// `exp(-2 (l theta / w(l))^2)`.
pub fn pointing_loss(theta: f64, theta_div: f64, l: f64) -> f64 {
    let x = l * theta / beam_radius(theta_div, l);
    (-2.0 * x * x).exp()
}

pub fn snr(p: &OpticalParams, theta_div: f64, l: f64, theta: f64) -> f64 {
    received_power_aligned(p, theta_div, l) * pointing_loss(theta, theta_div, l)
        / p.noise_bandwidth_w
}

/// Probability that the instantaneous SNR drops below threshold when the
/// radial pointing error is Rayleigh with per-axis deviation `sigma_theta`.
pub fn outage_probability(p: &OpticalParams, sigma_theta: f64, theta_div: f64, l: f64) -> f64 {
    let margin = p.snr_constant() / (p.snr_threshold_linear * (theta_div * l).powi(2));
    if margin <= 1.0 {
        return 1.0;
    }
    if sigma_theta <= 0.0 {
        return 0.0;
    }
    let m = theta_div * theta_div / (4.0 * sigma_theta * sigma_theta);
    (-m * margin.ln()).exp()
}

/// Range at which the outage equals the target for a given divergence:
/// `L = (sqrt(C0/gamma_th) / theta_div) * P_th^(2 sigma^2 / theta_div^2)`.
pub fn range_for_divergence(p: &OpticalParams, sigma_theta: f64, theta_div: f64) -> f64 {
    let exponent = 2.0 * sigma_theta * sigma_theta / (theta_div * theta_div);
    p.aligned_range_product() / theta_div * p.outage_threshold.powf(exponent)
}

/// Divergence maximizing [`range_for_divergence`]: `sigma * sqrt(-4 ln P_th)`.
pub fn optimal_divergence(sigma_theta: f64, outage_threshold: f64) -> f64 {
    sigma_theta * (-4.0 * outage_threshold.ln()).sqrt()
}

/// Largest range whose outage stays at or below `outage_threshold`, and the
/// divergence that attains it.
pub fn max_feasible_range(
    p: &OpticalParams,
    sigma_theta: f64,
    mode: ThresholdMode,
) -> Result<(f64, f64)> {
    let theta_div = match mode {
        ThresholdMode::Fixed { divergence_rad } => divergence_rad,
        ThresholdMode::Optimized => {
            optimal_divergence(sigma_theta, p.outage_threshold).min(p.divergence_max_rad)
        }
        ThresholdMode::OptimizedUnclamped => optimal_divergence(sigma_theta, p.outage_threshold),
    };
    if !(theta_div > 0.0 && theta_div.is_finite()) {
        return Err(Error::Infeasible(format!(
            "divergence {theta_div} rad is not usable"
        )));
    }
    let l = range_for_divergence(p, sigma_theta, theta_div);
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::Infeasible(format!(
            "no positive range meets outage {} at sigma {sigma_theta} rad",
            p.outage_threshold
        )));
    }
    Ok((l, theta_div))
}

/// Bisection on the monotone outage curve. Used to cross-check the closed form
/// and for models without one.
pub fn bisect_max_range(
    p: &OpticalParams,
    sigma_theta: f64,
    theta_div: f64,
    tol_m: f64,
) -> Result<f64> {
    let mut hi = p.aligned_range_product() / theta_div;
    if !(hi > 0.0 && hi.is_finite()) {
        return Err(Error::Infeasible(
            "aligned SNR never clears the threshold".into(),
        ));
    }
    let mut lo = 0.0;
    if outage_probability(p, sigma_theta, theta_div, hi * 1e-9) > p.outage_threshold {
        return Err(Error::Infeasible(
            "outage target unreachable at any range".into(),
        ));
    }
    while hi - lo > tol_m {
        let mid = 0.5 * (lo + hi);
        if outage_probability(p, sigma_theta, theta_div, mid) <= p.outage_threshold {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

pub fn compute_thresholds(p: &OpticalParams, mode: ThresholdMode) -> Result<FeasibilityThresholds> {
    let (l_intra, d_intra) = max_feasible_range(p, p.jitter_intra_rad, mode)?;
    let (l_inter, d_inter) = max_feasible_range(p, p.jitter_inter_rad, mode)?;
    Ok(FeasibilityThresholds {
        l_max_intra_m: l_intra,
        l_max_inter_m: l_inter,
        divergence_intra_rad: d_intra,
        divergence_inter_rad: d_inter,
    })
}

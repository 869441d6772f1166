//! Closed-form outage against direct simulation of two-axis Gaussian jitter.

use orbroute_core::optics::{self, outage_probability, snr, OpticalParams, ThresholdMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Fraction of `n` jitter draws whose SNR falls below threshold.
fn simulated_outage(
    p: &OpticalParams,
    sigma: f64,
    theta_div: f64,
    l: f64,
    n: usize,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let axis = Normal::new(0.0, sigma).unwrap();
    let mut fails = 0usize;
    for _ in 0..n {
        let (x, y) = (axis.sample(&mut rng), axis.sample(&mut rng));
        if snr(p, theta_div, l, x.hypot(y)) < p.snr_threshold_linear {
            fails += 1;
        }
    }
    fails as f64 / n as f64
}

fn within_three_se(closed: f64, simulated: f64, n: usize) -> bool {
    let se = (closed * (1.0 - closed) / n as f64).sqrt();
    (closed - simulated).abs() <= 3.0 * se
}

#[test]
fn closed_form_matches_simulation_at_random_points() {
    let p = OpticalParams::default();
    let n = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for k in 0..10 {
        let sigma = rng.random_range(50e-6..300e-6);
        let theta_div = rng.random_range(2e-4..1e-3);
        let l = rng.random_range(0.3..0.99) * p.aligned_range_product() / theta_div;
        let closed = outage_probability(&p, sigma, theta_div, l);
        let sim = simulated_outage(&p, sigma, theta_div, l, n, 100 + k);
        assert!(
            within_three_se(closed, sim, n),
            "point {k}: closed {closed} simulated {sim}"
        );
    }
}

#[test]
fn intra_threshold_point_has_target_outage() {
    let p = OpticalParams::default();
    let n = 2_000_000;
    let closed = outage_probability(&p, 100e-6, 5.256e-4, 2_884e3);
    assert!((closed - 1e-3).abs() < 1e-5);
    let sim = simulated_outage(&p, 100e-6, 5.256e-4, 2_884e3, n, 7);
    assert!(
        within_three_se(closed, sim, n),
        "closed {closed} simulated {sim}"
    );
}

#[test]
fn optimized_ranges_survive_a_simulated_divergence_scan() {
    // For a handful of divergences, the range where the simulated outage hits
    // the target never beats the solver's optimum.
    let p = OpticalParams::default();
    for (sigma, mode_range) in [(100e-6, 2_884e3), (200e-6, 1_439e3)] {
        let (l_max, _) = optics::max_feasible_range(&p, sigma, ThresholdMode::Optimized).unwrap();
        assert!((l_max - mode_range).abs() < 1e3);
        for (i, theta) in [3e-4, 5e-4, 7e-4, 1e-3].into_iter().enumerate() {
            // 2% beyond the optimum, the simulated outage exceeds the target
            let sim = simulated_outage(&p, sigma, theta, l_max * 1.02, 400_000, 50 + i as u64);
            assert!(
                sim > p.outage_threshold,
                "sigma {sigma} theta {theta}: outage {sim}"
            );
        }
    }
}

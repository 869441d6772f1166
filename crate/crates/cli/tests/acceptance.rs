//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the report is always shown.
//! Exits non-zero when any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use orbroute_cli::commands::{
    cmd_eval, cmd_route, cmd_snapshot, cmd_sweep, cmd_thresholds, cmd_train, thresholds_for,
    training_env, RunOptions,
};
use orbroute_cli::RunConfig;
use orbroute_core::optics::{max_feasible_range, outage_probability, snr, OpticalParams};
use orbroute_core::rl::{run_episode, PolicyParams, RlHyperParams, INPUT_DIM};
use orbroute_core::routing::{brute_force_path, shortest_path};
use orbroute_core::topology::{classify_link, link_cost};
use orbroute_core::{
    Edge, FeasibilityThresholds, LinkClass, SatelliteId, SnapshotGraph, ThresholdMode, Vec3,
    SPEED_OF_LIGHT,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

struct Suite {
    scratch: tempfile::TempDir,
    failed: Vec<usize>,
}

impl Suite {
    fn dir(&self, name: &str) -> PathBuf {
        self.scratch.path().join(name)
    }

    fn run(&mut self, id: usize, name: &str, limit: Duration, f: impl FnOnce(&Suite) -> Verdict) {
        let start = Instant::now();
        let v = f(self);
        let elapsed = start.elapsed();
        let in_time = elapsed <= limit;
        let pass = v.pass && in_time;
        if !pass {
            self.failed.push(id);
        }
        let timing = if in_time {
            String::new()
        } else {
            " [over time limit]".to_string()
        };
        println!(
            "criterion {id:>2} {} {name}: {} ({:.1}s, limit {}s){timing}",
            if pass { "PASS" } else { "FAIL" },
            v.detail,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
}

fn opts(cfg: RunConfig, out: PathBuf) -> RunOptions {
    RunOptions::new(cfg, None, Some(out))
}

// 1 ------------------------------------------------------------------------

fn threshold_reproduction(s: &Suite) -> Verdict {
    let r = cmd_thresholds(&opts(RunConfig::default(), s.dir("c1"))).expect("thresholds");
    let intra_ok = (2800.0 * 0.95..=2900.0 * 1.05).contains(&r.intra.l_max_km);
    let inter_ok = (1400.0 * 0.95..=1450.0 * 1.05).contains(&r.inter.l_max_km);
    verdict(
        intra_ok && inter_ok,
        format!(
            "intra {:.1} km, inter {:.1} km",
            r.intra.l_max_km, r.inter.l_max_km
        ),
    )
}

// 2 ------------------------------------------------------------------------

fn outage_consistency(_: &Suite) -> Verdict {
    let p = OpticalParams::default();
    let n = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(0x07a6e);
    let points: Vec<(f64, f64, f64)> = (0..10)
        .map(|_| {
            let sigma = rng.random_range(60e-6..300e-6);
            let theta_div = rng.random_range(2.0..6.0) * sigma;
            let l = rng.random_range(0.3..0.99) * p.aligned_range_product() / theta_div;
            (sigma, theta_div, l)
        })
        .collect();
    let results: Vec<(f64, f64, f64)> = points
        .par_iter()
        .enumerate()
        .map(|(k, &(sigma, theta_div, l))| {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + k as u64);
            let axis = Normal::new(0.0, sigma).unwrap();
            let fails = (0..n)
                .filter(|_| {
                    let r = axis.sample(&mut rng).hypot(axis.sample(&mut rng));
                    snr(&p, theta_div, l, r) < p.snr_threshold_linear
                })
                .count();
            let closed = outage_probability(&p, sigma, theta_div, l);
            let sim = fails as f64 / n as f64;
            let se = (closed * (1.0 - closed) / n as f64).sqrt();
            (closed, sim, (closed - sim).abs() / se)
        })
        .collect();
    let worst = results.iter().map(|r| r.2).fold(0.0, f64::max);
    let range = results
        .iter()
        .fold((1.0f64, 0.0f64), |a, r| (a.0.min(r.0), a.1.max(r.0)));
    verdict(
        worst <= 3.0,
        format!(
            "10 points, 1e6 samples each, outage {:.2e}..{:.2e}, worst deviation {worst:.2} SE",
            range.0, range.1
        ),
    )
}

// 3 ------------------------------------------------------------------------

fn jitter_halving(_: &Suite) -> Verdict {
    let p = OpticalParams::default();
    let (l100, _) = max_feasible_range(&p, 100e-6, ThresholdMode::OptimizedUnclamped).unwrap();
    let (l200, _) = max_feasible_range(&p, 200e-6, ThresholdMode::OptimizedUnclamped).unwrap();
    let ratio = l200 / l100;
    verdict(
        (ratio - 0.5).abs() <= 1e-6,
        format!("L(200)/L(100) = {ratio:.12}"),
    )
}

// 4 ------------------------------------------------------------------------

fn doha_london(s: &Suite) -> Verdict {
    let mut cfg = RunConfig::default();
    cfg.routing.beta_ms = 1.0;
    cfg.routing.corridor = true;
    cfg.routing.corridor_half_width_deg = 15.0;
    cfg.routing.p_busy = 0.0;
    cfg.scenario.snapshots = 100;
    let r = match cmd_route(&opts(cfg, s.dir("c4"))) {
        Ok(r) => r.baseline,
        Err(e) => return verdict(false, e.to_string()),
    };
    let delay = r.median_delay_ms.unwrap_or(f64::NAN);
    let hops = r.median_hops.unwrap_or(f64::NAN);
    verdict(
        (26.0..=33.0).contains(&delay) && (6.0..=9.0).contains(&hops),
        format!(
            "median delay {delay:.2} ms, median hops {hops} (end-to-end incl. access links), {}/{} routed",
            r.successes, r.attempts
        ),
    )
}

// 5 ------------------------------------------------------------------------

/// Costs are multiples of 1/1024 s so sums are exact and ties frequent.
fn random_graph<R: Rng>(rng: &mut R, n: usize, density: f64) -> SnapshotGraph {
    let ids: Vec<SatelliteId> = (0..n).map(|i| SatelliteId::new(i % 3, i / 3)).collect();
    let beta = 1.0 / 1024.0;
    let mut edges = Vec::new();
    for &a in &ids {
        for &b in &ids {
            if a != b && rng.random::<f64>() < density {
                let length_m = SPEED_OF_LIGHT * rng.random_range(1..=3) as f64 / 1024.0;
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

fn oracle_equivalence(_: &Suite) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut mismatches = 0;
    let mut reached = 0;
    for _ in 0..1000 {
        let n = rng.random_range(2..=12);
        let density = rng.random_range(0.1..0.6);
        let g = random_graph(&mut rng, n, density);
        let fast = shortest_path(&g, g.source_sat, g.dest_sat).unwrap();
        let slow = brute_force_path(&g, g.source_sat, g.dest_sat).unwrap();
        reached += usize::from(slow.reached);
        let same = fast.reached == slow.reached
            && fast.total_cost_s == slow.total_cost_s
            && fast.node_sequence() == slow.node_sequence();
        mismatches += usize::from(!same);
    }
    verdict(
        mismatches == 0,
        format!("1000 graphs ({reached} connected), {mismatches} mismatches"),
    )
}

// 6 ------------------------------------------------------------------------

fn mask_soundness(_: &Suite) -> Verdict {
    let cfg = RunConfig::default();
    let (th, _) = thresholds_for(&cfg).unwrap();
    let env = training_env(&cfg, th);
    let hyper = RlHyperParams::default();
    let rewards = hyper.reward_params();
    let (k_cap, h_max) = (cfg.routing.k_cap, cfg.routing.h_max);
    // 100 snapshots x 100 episodes, three exploration rates, fresh random nets.
    let per: Vec<(usize, usize, usize, usize, usize)> = (0..100u64)
        .into_par_iter()
        .map(|i| {
            let Ok(inst) = env.training_instance(1_000_000 + i) else {
                return (0, 0, 0, 0, 0);
            };
            let mut rng = ChaCha8Rng::seed_from_u64(i);
            let nets: Vec<PolicyParams> = (0..4)
                .map(|_| PolicyParams::init(&hyper, &mut rng))
                .collect();
            let (mut episodes, mut range_bad, mut busy_bad, mut revisits, mut other_bad) =
                (0, 0, 0, 0, 0);
            for e in 0..100 {
                let eps = [0.0, 0.3, 1.0][e % 3];
                let ep = run_episode(
                    &inst.graph,
                    &nets[e % 4],
                    inst.source_sat(),
                    inst.dest_sat(),
                    eps,
                    h_max,
                    k_cap,
                    &rewards,
                    &mut rng,
                )
                .unwrap();
                episodes += 1;
                let mut seen = BTreeSet::from([inst.source_sat()]);
                let mut at = inst.source_sat();
                for hop in &ep.route.hops {
                    let class = classify_link(hop.from, hop.to).unwrap();
                    let actual = inst
                        .snapshot
                        .position(hop.from)
                        .distance(inst.snapshot.position(hop.to));
                    if actual > th.limit(class) {
                        range_bad += 1;
                    }
                    if inst.congestion.is_busy(hop.to) {
                        busy_bad += 1;
                    }
                    if !seen.insert(hop.to) {
                        revisits += 1;
                    }
                    if hop.from != at || class != hop.link_class || !inst.corridor.contains(&hop.to)
                    {
                        other_bad += 1;
                    }
                    at = hop.to;
                }
            }
            (episodes, range_bad, busy_bad, revisits, other_bad)
        })
        .collect();
    let sum = per.iter().fold((0, 0, 0, 0, 0), |a, r| {
        (a.0 + r.0, a.1 + r.1, a.2 + r.2, a.3 + r.3, a.4 + r.4)
    });
    verdict(
        sum.0 >= 10_000 && sum.1 == 0 && sum.2 == 0 && sum.3 == 0 && sum.4 == 0,
        format!(
            "{} episodes: {} range violations, {} busy entries, {} revisits, {} malformed hops",
            sum.0, sum.1, sum.2, sum.3, sum.4
        ),
    )
}

// 7 ------------------------------------------------------------------------

fn learning_efficacy(s: &Suite) -> Verdict {
    let cfg = RunConfig::default();
    let train_dir = s.dir("c7-train");
    if let Err(e) = cmd_train(&opts(cfg.clone(), train_dir.clone())) {
        return verdict(false, format!("training failed: {e}"));
    }
    let mut o = opts(cfg, s.dir("c7-eval"));
    o.policy = Some(train_dir.join("policy.bin"));
    let r = cmd_eval(&o).expect("eval");
    let t = &r.metrics;
    let u = r.untrained.as_ref().expect("untrained reference");
    let ts = t.mean_stretch.unwrap_or(f64::INFINITY);
    let us = u.mean_stretch.unwrap_or(f64::INFINITY);
    let ok = t.success_rate >= 0.90 && ts <= 1.3 && u.success_rate < t.success_rate && us > ts;
    verdict(
        ok,
        format!(
            "trained: success {:.3}, stretch {ts:.4}; untrained: success {:.3}, stretch {us:.4} ({} held-out snapshots)",
            t.success_rate, u.success_rate, r.snapshots
        ),
    )
}

// 8 ------------------------------------------------------------------------

fn jitter_trend(s: &Suite) -> Verdict {
    let cfg = RunConfig::default();
    let mut o = opts(cfg, s.dir("c8"));
    let policy = s.dir("c7-train").join("policy.bin");
    o.policy = policy.exists().then_some(policy);
    let rows = match cmd_sweep(&o) {
        Ok(r) => r,
        Err(e) => return verdict(false, e.to_string()),
    };
    let mut by_router: BTreeMap<&str, Vec<_>> = BTreeMap::new();
    for r in &rows {
        by_router.entry(r.router).or_default().push(r);
    }
    // The trend is gated on the exact router; policy rows are reported only.
    let mut details = Vec::new();
    let mut ok = false;
    for (router, rs) in &by_router {
        let hops: Vec<f64> = rs.iter().map(|r| r.mean_hops.unwrap_or(f64::NAN)).collect();
        let delay: Vec<f64> = rs
            .iter()
            .map(|r| r.mean_delay_ms.unwrap_or(f64::NAN))
            .collect();
        let fails = rs.last().map_or(0, |r| r.failures);
        let trend = hops.windows(2).all(|w| w[0] <= w[1])
            && delay.windows(2).all(|w| w[0] <= w[1])
            && fails > 0;
        if *router == "dijkstra" {
            ok = trend;
        }
        details.push(format!(
            "{router}{}: hops {:?}, delay {:?} ms, failures at max sigma {fails}, trend {}",
            if *router == "dijkstra" {
                ""
            } else {
                " (informational)"
            },
            hops.iter()
                .map(|h| (h * 100.0).round() / 100.0)
                .collect::<Vec<_>>(),
            delay
                .iter()
                .map(|d| (d * 100.0).round() / 100.0)
                .collect::<Vec<_>>(),
            if trend { "holds" } else { "broken" }
        ));
    }
    verdict(ok, details.join("; "))
}

// 9 ------------------------------------------------------------------------

fn gradient_check(_: &Suite) -> Verdict {
    let hyper = RlHyperParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let loss = |p: &PolicyParams, samples: &[([f64; INPUT_DIM], f64)]| -> f64 {
        samples
            .iter()
            .map(|(x, y)| 0.5 * (p.forward(x) - y).powi(2))
            .sum()
    };
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let p = PolicyParams::init(&hyper, &mut rng);
        let samples: Vec<([f64; INPUT_DIM], f64)> = (0..4)
            .map(|_| {
                let mut x = [0.0; INPUT_DIM];
                x.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
                (x, rng.random_range(-5.0..5.0))
            })
            .collect();
        let (_, analytic) = p.squared_error_gradient(&samples);
        let h = 1e-5;
        let mut q = p.clone();
        let numeric: Vec<f64> = (0..p.params.len())
            .map(|i| {
                let orig = q.params[i];
                q.params[i] = orig + h;
                let up = loss(&q, &samples);
                q.params[i] = orig - h;
                let down = loss(&q, &samples);
                q.params[i] = orig;
                (up - down) / (2.0 * h)
            })
            .collect();
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, b)| a - b).collect();
        worst = worst.max(norm(&diff) / norm(&analytic).max(norm(&numeric)));
    }
    verdict(
        worst <= 1e-4,
        format!("10 points, worst relative error {worst:.2e}"),
    )
}

// 10 -----------------------------------------------------------------------

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    for entry in fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        files.insert(
            p.file_name().unwrap().to_string_lossy().into_owned(),
            fs::read(&p).unwrap(),
        );
    }
    files
}

/// Runs `f` twice into the same directory and compares every artifact.
fn twice(dir: &Path, f: impl Fn() -> bool) -> Result<usize, String> {
    if !f() {
        return Err("first run failed".into());
    }
    let first = read_tree(dir);
    fs::remove_dir_all(dir).unwrap();
    if !f() {
        return Err("second run failed".into());
    }
    let second = read_tree(dir);
    if first.keys().ne(second.keys()) {
        return Err("different file sets".into());
    }
    for (name, bytes) in &first {
        if second[name] != *bytes {
            return Err(format!("{name} differs"));
        }
    }
    Ok(first.len())
}

fn determinism(s: &Suite) -> Verdict {
    let mut cfg = RunConfig::default();
    cfg.rl.episodes = 1500;
    cfg.rl.checkpoint_every = 500;
    cfg.rl.heldout_snapshots = 20;
    cfg.scenario.snapshots = 20;
    cfg.scenario.seed = 314;
    let policy = s.dir("c10-policy.bin");

    let mut report = Vec::new();
    let mut ok = true;
    let mut check = |name: &str, result: Result<usize, String>| match result {
        Ok(n) => report.push(format!("{name} ({n} files)")),
        Err(e) => {
            ok = false;
            report.push(format!("{name}: {e}"));
        }
    };
    let base = |sub: &str| opts(cfg.clone(), s.dir(&format!("c10-{sub}")));

    let o = base("train");
    check("train", twice(&o.out, || cmd_train(&o).is_ok()));
    fs::copy(o.out.join("policy.bin"), &policy).unwrap();

    let o = base("thresholds");
    check("thresholds", twice(&o.out, || cmd_thresholds(&o).is_ok()));
    let mut o = base("snapshot");
    o.snapshots = Some(3);
    check("snapshot", twice(&o.out, || cmd_snapshot(&o).is_ok()));
    let mut o = base("route");
    o.policy = Some(policy.clone());
    check("route", twice(&o.out, || cmd_route(&o).is_ok()));
    let mut o = base("eval");
    o.policy = Some(policy.clone());
    check("eval", twice(&o.out, || cmd_eval(&o).is_ok()));
    let mut o = base("sweep");
    o.policy = Some(policy.clone());
    check("sweep", twice(&o.out, || cmd_sweep(&o).is_ok()));

    verdict(ok, format!("byte-identical reruns: {}", report.join(", ")))
}

fn main() {
    let mut suite = Suite {
        scratch: tempfile::tempdir().expect("scratch dir"),
        failed: Vec::new(),
    };
    let secs = Duration::from_secs;
    suite.run(1, "threshold reproduction", secs(1), threshold_reproduction);
    suite.run(2, "outage model consistency", secs(30), outage_consistency);
    suite.run(3, "jitter halving", secs(1), jitter_halving);
    suite.run(4, "Doha-London latency", secs(120), doha_london);
    suite.run(5, "oracle equivalence", secs(60), oracle_equivalence);
    suite.run(6, "mask soundness", secs(300), mask_soundness);
    suite.run(7, "learning efficacy", secs(1800), learning_efficacy);
    suite.run(8, "jitter-trend reproduction", secs(600), jitter_trend);
    suite.run(9, "gradient check", secs(10), gradient_check);
    suite.run(10, "determinism", secs(600), determinism);
    if suite.failed.is_empty() {
        println!("acceptance: all 10 criteria passed");
    } else {
        println!("acceptance: failed criteria {:?}", suite.failed);
        std::process::exit(1);
    }
}

//! Subcommand implementations. Each returns a typed report and writes its
//! artifacts plus `manifest.json` and `config.toml` into the output directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use orbroute_core::optics::compute_thresholds;
use orbroute_core::rl::{
    evaluate_instances, run_episode, train, EvalMetrics, HeldOutSnapshot, PolicyFile, PolicyParams,
    TrainingEnv, TrainingLog,
};
use orbroute_core::routing::{path_metrics, shortest_path};
use orbroute_core::seed::{
    STREAM_CONGESTION, STREAM_HELDOUT, STREAM_RL_EXPLORE, STREAM_RL_INIT, STREAM_SNAPSHOT,
};
use orbroute_core::{
    optics, EndToEndRoute, FeasibilityThresholds, Gateway, LinkClass, PathMetrics, RouteResult,
    Scenario, ScenarioInstance, SeedStreams, ThresholdMode, Vec3,
};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{ConfigError, GatewaySection, RunConfig};
use crate::output::{opt, Csv, OutputDir};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("infeasible scenario: {0}")]
    Infeasible(String),
    #[error("training diverged at episode {episode} (loss {loss})")]
    Diverged { episode: usize, loss: f64 },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Diverged { .. } => 4,
            CliError::Io(_) | CliError::Other(_) => 1,
        }
    }
}

impl From<orbroute_core::Error> for CliError {
    fn from(e: orbroute_core::Error) -> Self {
        use orbroute_core::Error as E;
        match e {
            E::Infeasible(m) => CliError::Infeasible(m),
            E::NoServingSatellite(g) => {
                CliError::Infeasible(format!("no satellite above the elevation mask for {g}"))
            }
            E::TrainingDiverged { episode, loss } => CliError::Diverged { episode, loss },
            E::InvalidParameter(m) => CliError::Config(ConfigError::Invalid {
                field: "parameters".into(),
                message: m,
            }),
            other => CliError::Other(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Everything a subcommand needs. `config` already carries any `--seed`
/// override, so the manifest echo reproduces the run on its own.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub config: RunConfig,
    pub out: PathBuf,
    pub policy: Option<PathBuf>,
    pub snapshots: Option<usize>,
    pub baseline_only: bool,
}

impl RunOptions {
    pub fn new(mut config: RunConfig, seed: Option<u64>, out: Option<PathBuf>) -> Self {
        if let Some(s) = seed {
            config.scenario.seed = s;
        }
        let out = out.unwrap_or_else(|| PathBuf::from(&config.output.dir));
        config.output.dir = out.display().to_string();
        Self {
            config,
            out,
            policy: None,
            snapshots: None,
            baseline_only: false,
        }
    }

    fn streams(&self) -> SeedStreams {
        SeedStreams::new(self.config.scenario.seed)
    }
}

// ---------------------------------------------------------------- thresholds

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassThreshold {
    pub class: &'static str,
    pub jitter_urad: f64,
    pub divergence_urad: f64,
    pub l_max_km: f64,
    pub l_max_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub mode: ThresholdMode,
    pub outage_threshold: f64,
    pub snr_constant: f64,
    pub intra: ClassThreshold,
    pub inter: ClassThreshold,
}

pub fn thresholds_for(cfg: &RunConfig) -> CliResult<(FeasibilityThresholds, ThresholdReport)> {
    let p = cfg.optical_params();
    p.validate().map_err(|e| ConfigError::Invalid {
        field: "optics".into(),
        message: e.to_string(),
    })?;
    let mode = cfg.threshold_mode();
    let th = compute_thresholds(&p, mode)?;
    let class = |c: LinkClass, div: f64, l: f64| ClassThreshold {
        class: c.as_str(),
        jitter_urad: p.jitter(c) * 1e6,
        divergence_urad: div * 1e6,
        l_max_km: l / 1e3,
        l_max_m: l,
    };
    let report = ThresholdReport {
        mode,
        outage_threshold: p.outage_threshold,
        snr_constant: p.snr_constant(),
        intra: class(
            LinkClass::IntraPlane,
            th.divergence_intra_rad,
            th.l_max_intra_m,
        ),
        inter: class(
            LinkClass::InterPlane,
            th.divergence_inter_rad,
            th.l_max_inter_m,
        ),
    };
    Ok((th, report))
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'static str,
    seed: u64,
    streams: [&'static str; 5],
    snapshots: Option<usize>,
    config_sha256: String,
    thresholds: &'a ThresholdReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    policy: Option<PolicyRef>,
    effective_config: &'a RunConfig,
}

#[derive(Serialize)]
struct PolicyRef {
    path: String,
    sha256: String,
    config_hash: String,
}

fn write_manifest(
    out: &mut OutputDir,
    command: &str,
    opts: &RunOptions,
    snapshots: Option<usize>,
    thresholds: &ThresholdReport,
    policy: Option<PolicyRef>,
) -> CliResult<()> {
    let cfg = &opts.config;
    let m = Manifest {
        command,
        version: VERSION,
        seed: cfg.scenario.seed,
        streams: [
            STREAM_SNAPSHOT,
            STREAM_CONGESTION,
            STREAM_RL_INIT,
            STREAM_RL_EXPLORE,
            STREAM_HELDOUT,
        ],
        snapshots,
        config_sha256: hex::encode(cfg.sha256()),
        thresholds,
        policy,
        effective_config: cfg,
    };
    out.json("manifest.json", &m)?;
    out.text("config.toml", &cfg.normalized())?;
    Ok(())
}

/// Distances (km) tabulated in `outage_table.csv`.
pub const OUTAGE_TABLE_KM: std::ops::RangeInclusive<u32> = 1..=80;
const OUTAGE_TABLE_STEP_KM: f64 = 50.0;

pub fn cmd_thresholds(opts: &RunOptions) -> CliResult<ThresholdReport> {
    let (_, report) = thresholds_for(&opts.config)?;
    let p = opts.config.optical_params();
    let mut table = Csv::new(&[
        "class",
        "divergence_urad",
        "distance_km",
        "outage_probability",
    ]);
    for c in [&report.intra, &report.inter] {
        let class = if c.class == "intra" {
            LinkClass::IntraPlane
        } else {
            LinkClass::InterPlane
        };
        for k in OUTAGE_TABLE_KM {
            let km = k as f64 * OUTAGE_TABLE_STEP_KM;
            let pout =
                optics::outage_probability(&p, p.jitter(class), c.divergence_urad / 1e6, km * 1e3);
            table.row(&[
                c.class.to_string(),
                c.divergence_urad.to_string(),
                km.to_string(),
                format!("{pout:e}"),
            ]);
        }
    }
    let mut out = OutputDir::create(&opts.out)?;
    out.json("thresholds.json", &report)?;
    out.text("outage_table.csv", &table.finish())?;
    write_manifest(&mut out, "thresholds", opts, None, &report, None)?;
    Ok(report)
}

// ---------------------------------------------------------------- scenarios

pub fn gateway_of(cfg: &RunConfig, name: &str) -> Gateway {
    cfg.gateway(name)
        .expect("validated config names known gateways")
}

pub fn base_scenario(cfg: &RunConfig, thresholds: FeasibilityThresholds) -> Scenario {
    Scenario {
        constellation: cfg.constellation_config(),
        thresholds,
        routing: cfg.routing_params(),
        source: gateway_of(cfg, &cfg.scenario.source),
        destination: gateway_of(cfg, &cfg.scenario.destination),
    }
}

pub fn training_env(cfg: &RunConfig, thresholds: FeasibilityThresholds) -> TrainingEnv {
    TrainingEnv {
        scenario: base_scenario(cfg, thresholds),
        gateways: cfg.gateway_list(),
        time_range_s: (cfg.scenario.time_min_s, cfg.scenario.time_max_s),
        streams: SeedStreams::new(cfg.scenario.seed),
    }
}

/// Snapshot time and congestion seed for scenario snapshot `index`.
pub fn snapshot_draw(cfg: &RunConfig, streams: &SeedStreams, index: usize) -> (f64, u64) {
    let mut rng = streams.rng(STREAM_SNAPSHOT, index as u64);
    let (lo, hi) = (cfg.scenario.time_min_s, cfg.scenario.time_max_s);
    let t = if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    };
    (t, streams.derive(STREAM_CONGESTION, index as u64))
}

// ---------------------------------------------------------------- snapshot

#[derive(Debug, Clone, Serialize)]
struct NodeRecord {
    snapshot: usize,
    t: f64,
    id: usize,
    plane: usize,
    slot: usize,
    busy: bool,
    in_corridor: bool,
}

#[derive(Debug, Clone, Serialize)]
struct EdgeRecord {
    snapshot: usize,
    t: f64,
    from: usize,
    to: usize,
    length_m: f64,
    class: &'static str,
    cost_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphSummary {
    pub snapshot: usize,
    pub t: f64,
    pub status: String,
    pub source_sat: Option<String>,
    pub dest_sat: Option<String>,
    pub nodes: usize,
    pub corridor_nodes: usize,
    pub busy_nodes: usize,
    pub edges: usize,
    pub intra_edges: usize,
    pub inter_edges: usize,
}

pub fn cmd_snapshot(opts: &RunOptions) -> CliResult<Vec<GraphSummary>> {
    let cfg = &opts.config;
    let (th, report) = thresholds_for(cfg)?;
    let scenario = base_scenario(cfg, th);
    let streams = opts.streams();
    let n = opts.snapshots.unwrap_or(1);
    let constellation = &scenario.constellation;

    let built: Vec<(f64, orbroute_core::Result<ScenarioInstance>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (t, seed) = snapshot_draw(cfg, &streams, i);
            (t, scenario.instantiate(t, seed))
        })
        .collect();

    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let mut summaries = Vec::new();
    for (i, (t, inst)) in built.iter().enumerate() {
        let inst = match inst {
            Ok(inst) => inst,
            Err(e) => {
                summaries.push(GraphSummary {
                    snapshot: i,
                    t: *t,
                    status: e.to_string(),
                    source_sat: None,
                    dest_sat: None,
                    nodes: 0,
                    corridor_nodes: 0,
                    busy_nodes: 0,
                    edges: 0,
                    intra_edges: 0,
                    inter_edges: 0,
                });
                continue;
            }
        };
        for (id, _) in inst.snapshot.iter() {
            nodes.push(NodeRecord {
                snapshot: i,
                t: *t,
                id: constellation.flat_index(id),
                plane: id.plane,
                slot: id.slot,
                busy: inst.congestion.is_busy(id),
                in_corridor: inst.corridor.contains(&id),
            });
        }
        let mut intra = 0;
        for e in inst.graph.edges() {
            intra += usize::from(e.link_class == LinkClass::IntraPlane);
            edges.push(EdgeRecord {
                snapshot: i,
                t: *t,
                from: constellation.flat_index(e.from),
                to: constellation.flat_index(e.to),
                length_m: e.length_m,
                class: e.link_class.as_str(),
                cost_s: e.cost_s,
            });
        }
        summaries.push(GraphSummary {
            snapshot: i,
            t: *t,
            status: "ok".into(),
            source_sat: Some(inst.source_sat().to_string()),
            dest_sat: Some(inst.dest_sat().to_string()),
            nodes: inst.graph.nodes.len(),
            corridor_nodes: inst.corridor.len(),
            busy_nodes: inst.congestion.busy.len(),
            edges: inst.graph.edge_count(),
            intra_edges: intra,
            inter_edges: inst.graph.edge_count() - intra,
        });
    }

    let mut out = OutputDir::create(&opts.out)?;
    out.jsonl("nodes.jsonl", &nodes)?;
    out.jsonl("edges.jsonl", &edges)?;
    out.json("graphs.json", &summaries)?;
    write_manifest(&mut out, "snapshot", opts, Some(n), &report, None)?;
    if summaries.iter().all(|s| s.status != "ok") {
        return Err(CliError::Infeasible(summaries[0].status.clone()));
    }
    Ok(summaries)
}

// ---------------------------------------------------------------- route

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HopOut {
    pub from: String,
    pub to: String,
    pub class: &'static str,
    pub length_m: f64,
    pub tau_s: f64,
    pub cost_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RouteRecord {
    pub snapshot: usize,
    pub t: f64,
    pub router: &'static str,
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub hops: Vec<HopOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub totals: Option<PathMetrics>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct RouterStats {
    pub router: String,
    pub attempts: usize,
    pub successes: usize,
    pub failures: usize,
    pub failure_rate: f64,
    pub median_delay_ms: Option<f64>,
    pub mean_delay_ms: Option<f64>,
    pub min_delay_ms: Option<f64>,
    pub max_delay_ms: Option<f64>,
    pub median_hops: Option<f64>,
    pub mean_hops: Option<f64>,
    pub hop_histogram: BTreeMap<usize, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RouteSummary {
    pub snapshots: usize,
    pub source: String,
    pub destination: String,
    pub baseline: RouterStats,
    pub policy: Option<RouterStats>,
}

pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

fn stats(router: &str, records: &[&RouteRecord]) -> RouterStats {
    let ok: Vec<&PathMetrics> = records.iter().filter_map(|r| r.totals.as_ref()).collect();
    let delays: Vec<f64> = ok.iter().map(|m| m.delay_ms).collect();
    let hops: Vec<f64> = ok.iter().map(|m| m.hops as f64).collect();
    let mut hop_histogram = BTreeMap::new();
    for m in &ok {
        *hop_histogram.entry(m.hops).or_insert(0) += 1;
    }
    let attempts = records.len();
    RouterStats {
        router: router.to_string(),
        attempts,
        successes: ok.len(),
        failures: attempts - ok.len(),
        failure_rate: if attempts > 0 {
            (attempts - ok.len()) as f64 / attempts as f64
        } else {
            0.0
        },
        median_delay_ms: median(&delays),
        mean_delay_ms: mean(&delays),
        min_delay_ms: delays.iter().copied().reduce(f64::min),
        max_delay_ms: delays.iter().copied().reduce(f64::max),
        median_hops: median(&hops),
        mean_hops: mean(&hops),
        hop_histogram,
    }
}

fn end_to_end_hops(route: &EndToEndRoute) -> Vec<HopOut> {
    let access = |from: String, to: String, l: &orbroute_core::AccessLink| HopOut {
        from,
        to,
        class: "access",
        length_m: l.length_m,
        tau_s: l.length_m / orbroute_core::SPEED_OF_LIGHT,
        cost_s: l.cost_s,
    };
    let mut hops = vec![access(
        route.uplink.gateway.clone(),
        route.uplink.satellite.to_string(),
        &route.uplink,
    )];
    for e in &route.isl.hops {
        hops.push(HopOut {
            from: e.from.to_string(),
            to: e.to.to_string(),
            class: e.link_class.as_str(),
            length_m: e.length_m,
            tau_s: e.propagation_delay_s(),
            cost_s: e.cost_s,
        });
    }
    if route.reached() {
        hops.push(access(
            route.downlink.satellite.to_string(),
            route.downlink.gateway.clone(),
            &route.downlink,
        ));
    }
    hops
}

/// One row of the per-hop plot table.
#[derive(Debug, Clone, PartialEq)]
struct PlotPoint {
    kind: &'static str,
    name: String,
    lat_deg: f64,
    lon_deg: f64,
    alt_km: f64,
}

fn plot_points(
    route: &EndToEndRoute,
    inst: &ScenarioInstance,
    src: &GatewaySection,
    dst: &GatewaySection,
    re: f64,
) -> Vec<PlotPoint> {
    let gw = |g: &GatewaySection| PlotPoint {
        kind: "gateway",
        name: g.name.clone(),
        lat_deg: g.lat_deg,
        lon_deg: g.lon_deg,
        alt_km: 0.0,
    };
    let mut pts = vec![gw(src)];
    for id in route.isl.node_sequence() {
        let (lat_deg, lon_deg, alt_km) = geodetic(inst.snapshot.position(id), re);
        pts.push(PlotPoint {
            kind: "satellite",
            name: id.to_string(),
            lat_deg,
            lon_deg,
            alt_km,
        });
    }
    pts.push(gw(dst));
    pts
}

fn route_record(index: usize, t: f64, router: &'static str, route: &EndToEndRoute) -> RouteRecord {
    let reached = route.reached();
    RouteRecord {
        snapshot: index,
        t,
        router,
        status: if reached { "ok" } else { "no_feasible_route" },
        message: (!reached).then(|| format!("no feasible route at snapshot t={t} s")),
        hops: end_to_end_hops(route),
        totals: reached.then(|| route.metrics()),
    }
}

fn greedy_route(
    p: &PolicyParams,
    inst: &ScenarioInstance,
    k_cap: usize,
    h_max: usize,
) -> RouteResult {
    let mut rng = SeedStreams::new(0).rng("greedy", 0);
    let rewards = p.hyper.reward_params();
    run_episode(
        &inst.graph,
        p,
        inst.source_sat(),
        inst.dest_sat(),
        0.0,
        h_max,
        k_cap,
        &rewards,
        &mut rng,
    )
    .map(|ep| ep.route)
    .unwrap_or_else(|_| RouteResult::unreached(inst.source_sat(), inst.dest_sat()))
}

fn geodetic(p: Vec3, earth_radius_m: f64) -> (f64, f64, f64) {
    let (lat, lon) = p.lat_lon();
    (
        lat.to_degrees(),
        lon.to_degrees(),
        (p.norm() - earth_radius_m) / 1e3,
    )
}

fn gateway_config<'a>(cfg: &'a RunConfig, name: &str) -> &'a GatewaySection {
    cfg.gateways
        .iter()
        .find(|g| g.name == name)
        .expect("validated gateway")
}

pub fn load_policy(path: &Path) -> CliResult<(PolicyFile, [u8; 32])> {
    let bytes = std::fs::read(path)?;
    let file = PolicyFile::from_bytes(&bytes)
        .map_err(|e| CliError::Other(format!("{}: {e}", path.display())))?;
    Ok((file, Sha256::digest(&bytes).into()))
}

fn policy_ref(path: &Path, file: &PolicyFile, digest: &[u8; 32]) -> PolicyRef {
    PolicyRef {
        path: path.display().to_string(),
        sha256: hex::encode(digest),
        config_hash: hex::encode(file.config_hash),
    }
}

pub fn cmd_route(opts: &RunOptions) -> CliResult<RouteSummary> {
    let cfg = &opts.config;
    let (th, report) = thresholds_for(cfg)?;
    let scenario = base_scenario(cfg, th);
    let streams = opts.streams();
    let n = opts.snapshots.unwrap_or(cfg.scenario.snapshots);
    let policy = match (&opts.policy, opts.baseline_only) {
        (Some(path), false) => Some((path.clone(), load_policy(path)?)),
        _ => None,
    };
    let (k_cap, h_max) = (cfg.routing.k_cap, cfg.routing.h_max);

    let re = scenario.constellation.earth_radius_m;
    let src_cfg = gateway_config(cfg, &cfg.scenario.source);
    let dst_cfg = gateway_config(cfg, &cfg.scenario.destination);
    let per_snapshot: Vec<Vec<(RouteRecord, Vec<PlotPoint>)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (t, seed) = snapshot_draw(cfg, &streams, i);
            let inst = match scenario.instantiate(t, seed) {
                Ok(inst) => inst,
                Err(e) => {
                    let fail = |router| RouteRecord {
                        snapshot: i,
                        t,
                        router,
                        status: "no_serving_satellite",
                        message: Some(e.to_string()),
                        hops: Vec::new(),
                        totals: None,
                    };
                    let mut v = vec![(fail("dijkstra"), Vec::new())];
                    if policy.is_some() {
                        v.push((fail("policy"), Vec::new()));
                    }
                    return v;
                }
            };
            let with_plot = |router, isl| {
                let route = inst.end_to_end(isl);
                let pts = if route.reached() {
                    plot_points(&route, &inst, src_cfg, dst_cfg, re)
                } else {
                    Vec::new()
                };
                (route_record(i, t, router, &route), pts)
            };
            let best = shortest_path(&inst.graph, inst.source_sat(), inst.dest_sat())
                .expect("serving satellites belong to the graph");
            let mut v = vec![with_plot("dijkstra", best)];
            if let Some((_, (file, _))) = &policy {
                v.push(with_plot(
                    "policy",
                    greedy_route(&file.params, &inst, k_cap, h_max),
                ));
            }
            v
        })
        .collect();

    let mut plot = Csv::new(&[
        "snapshot", "router", "seq", "kind", "name", "lat_deg", "lon_deg", "alt_km",
    ]);
    let mut records = Vec::new();
    for (r, pts) in per_snapshot.into_iter().flatten() {
        for (seq, p) in pts.iter().enumerate() {
            plot.row(&[
                r.snapshot.to_string(),
                r.router.to_string(),
                seq.to_string(),
                p.kind.to_string(),
                p.name.clone(),
                p.lat_deg.to_string(),
                p.lon_deg.to_string(),
                p.alt_km.to_string(),
            ]);
        }
        records.push(r);
    }

    let baseline: Vec<&RouteRecord> = records.iter().filter(|r| r.router == "dijkstra").collect();
    let pol: Vec<&RouteRecord> = records.iter().filter(|r| r.router == "policy").collect();
    let summary = RouteSummary {
        snapshots: n,
        source: cfg.scenario.source.clone(),
        destination: cfg.scenario.destination.clone(),
        baseline: stats("dijkstra", &baseline),
        policy: policy.as_ref().map(|_| stats("policy", &pol)),
    };

    let mut out = OutputDir::create(&opts.out)?;
    out.jsonl("routes.jsonl", &records)?;
    out.json("route_summary.json", &summary)?;
    out.text("route_plot.csv", &plot.finish())?;
    let pref = policy
        .as_ref()
        .map(|(path, (file, digest))| policy_ref(path, file, digest));
    write_manifest(&mut out, "route", opts, Some(n), &report, pref)?;
    if summary.baseline.successes == 0 {
        let msg = baseline
            .first()
            .and_then(|r| r.message.clone())
            .unwrap_or_default();
        return Err(CliError::Infeasible(format!(
            "no snapshot has a feasible route ({msg})"
        )));
    }
    Ok(summary)
}

// ---------------------------------------------------------------- train / eval

/// Hash of every setting that influences training, embedded in policy files.
pub fn training_hash(cfg: &RunConfig) -> [u8; 32] {
    #[derive(Serialize)]
    struct Identity<'a> {
        constellation: &'a crate::config::ConstellationSection,
        optics: &'a crate::config::OpticsSection,
        routing: &'a crate::config::RoutingSection,
        gateways: &'a [GatewaySection],
        source: &'a str,
        destination: &'a str,
        time_min_s: f64,
        time_max_s: f64,
        seed: u64,
        rl: &'a orbroute_core::rl::RlHyperParams,
    }
    let id = Identity {
        constellation: &cfg.constellation,
        optics: &cfg.optics,
        routing: &cfg.routing,
        gateways: &cfg.gateways,
        source: &cfg.scenario.source,
        destination: &cfg.scenario.destination,
        time_min_s: cfg.scenario.time_min_s,
        time_max_s: cfg.scenario.time_max_s,
        seed: cfg.scenario.seed,
        rl: &cfg.rl,
    };
    Sha256::digest(serde_json::to_vec(&id).expect("identity serializes")).into()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub policy: PolicyParams,
    pub log: TrainingLog,
    pub policy_sha256: [u8; 32],
}

pub fn cmd_train(opts: &RunOptions) -> CliResult<TrainReport> {
    let cfg = &opts.config;
    let (th, report) = thresholds_for(cfg)?;
    let env = training_env(cfg, th);
    let mut out = OutputDir::create(&opts.out)?;
    let (params, log) = train(&env, &cfg.rl)?;
    let file = PolicyFile {
        config_hash: training_hash(cfg),
        params,
    };
    let bytes = file.to_bytes();
    let digest: [u8; 32] = Sha256::digest(&bytes).into();
    out.bytes("policy.bin", &bytes)?;
    out.text("training_log.csv", &log.to_csv())?;
    let pref = policy_ref(&out.path("policy.bin"), &file, &digest);
    write_manifest(
        &mut out,
        "train",
        opts,
        Some(cfg.rl.heldout_snapshots),
        &report,
        Some(pref),
    )?;
    Ok(TrainReport {
        policy: file.params,
        log,
        policy_sha256: digest,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineEval {
    pub successes: usize,
    pub structural_failures: usize,
    pub mean_hops: Option<f64>,
    pub mean_delay_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub policy: String,
    pub policy_config_match: Option<bool>,
    pub snapshots: usize,
    pub metrics: EvalMetrics,
    pub untrained: Option<EvalMetrics>,
    pub baseline: BaselineEval,
}

fn without_records(m: &EvalMetrics) -> EvalMetrics {
    EvalMetrics {
        records: Vec::new(),
        ..m.clone()
    }
}

fn baseline_eval(set: &[HeldOutSnapshot]) -> BaselineEval {
    let routes: Vec<PathMetrics> = set
        .iter()
        .filter_map(|h| h.oracle.as_ref().map(path_metrics))
        .collect();
    BaselineEval {
        successes: routes.len(),
        structural_failures: set.len() - routes.len(),
        mean_hops: mean(&routes.iter().map(|m| m.hops as f64).collect::<Vec<_>>()),
        mean_delay_ms: mean(&routes.iter().map(|m| m.delay_ms).collect::<Vec<_>>()),
    }
}

/// Greedy evaluation on held-out snapshots. Without `--policy` the zero
/// policy is evaluated; with one, the zero policy is reported alongside.
pub fn cmd_eval(opts: &RunOptions) -> CliResult<EvalReport> {
    let cfg = &opts.config;
    let (th, report) = thresholds_for(cfg)?;
    let env = training_env(cfg, th);
    let n = opts.snapshots.unwrap_or(cfg.rl.heldout_snapshots);
    let loaded = opts
        .policy
        .as_ref()
        .map(|p| load_policy(p).map(|f| (p.clone(), f)))
        .transpose()?;
    let set = env.heldout(n);
    let (k_cap, h_max) = (cfg.routing.k_cap, cfg.routing.h_max);
    let zeros = PolicyParams::zeros(&cfg.rl);
    let untrained = evaluate_instances(&zeros, &set, k_cap, h_max);
    let (label, config_match, metrics, untrained) = match &loaded {
        Some((path, (file, _))) => (
            path.display().to_string(),
            Some(file.config_hash == training_hash(cfg)),
            evaluate_instances(&file.params, &set, k_cap, h_max),
            Some(untrained),
        ),
        None => ("untrained".to_string(), None, untrained, None),
    };
    let result = EvalReport {
        policy: label,
        policy_config_match: config_match,
        snapshots: n,
        metrics: without_records(&metrics),
        untrained: untrained.as_ref().map(without_records),
        baseline: baseline_eval(&set),
    };
    let mut out = OutputDir::create(&opts.out)?;
    out.json("eval.json", &result)?;
    out.jsonl("eval_episodes.jsonl", &metrics.records)?;
    let pref = loaded
        .as_ref()
        .map(|(path, (file, digest))| policy_ref(path, file, digest));
    write_manifest(&mut out, "eval", opts, Some(n), &report, pref)?;
    Ok(EvalReport { metrics, ..result })
}

// ---------------------------------------------------------------- sweep

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub sigma_inter_urad: f64,
    pub l_max_inter_km: f64,
    pub router: &'static str,
    pub snapshots: usize,
    pub successes: usize,
    pub failures: usize,
    pub structural_failures: usize,
    pub success_rate: f64,
    pub mean_hops: Option<f64>,
    pub mean_delay_ms: Option<f64>,
    pub mean_inter_hops: Option<f64>,
}

fn sweep_row(
    sigma: f64,
    l_inter: f64,
    router: &'static str,
    set: &[HeldOutSnapshot],
    routes: &[Option<PathMetrics>],
) -> SweepRow {
    let ok: Vec<&PathMetrics> = routes.iter().flatten().collect();
    let structural = set.iter().filter(|h| h.oracle.is_none()).count();
    SweepRow {
        sigma_inter_urad: sigma,
        l_max_inter_km: l_inter / 1e3,
        router,
        snapshots: set.len(),
        successes: ok.len(),
        failures: set.len() - ok.len(),
        structural_failures: structural,
        success_rate: if set.is_empty() {
            0.0
        } else {
            ok.len() as f64 / set.len() as f64
        },
        mean_hops: mean(&ok.iter().map(|m| m.hops as f64).collect::<Vec<_>>()),
        mean_delay_ms: mean(&ok.iter().map(|m| m.delay_ms).collect::<Vec<_>>()),
        mean_inter_hops: mean(&ok.iter().map(|m| m.inter_count as f64).collect::<Vec<_>>()),
    }
}

fn access_extended(m: PathMetrics, inst: &ScenarioInstance) -> PathMetrics {
    PathMetrics {
        delay_ms: m.delay_ms + (inst.uplink.cost_s + inst.downlink.cost_s) * 1e3,
        hops: m.hops + 2,
        length_km: m.length_km + (inst.uplink.length_m + inst.downlink.length_m) / 1e3,
        ..m
    }
}

/// Inter-plane jitter sweep over the held-out snapshot set. Hop counts and
/// delays are end-to-end, including both access links.
pub fn cmd_sweep(opts: &RunOptions) -> CliResult<Vec<SweepRow>> {
    let cfg = &opts.config;
    let (_, base_report) = thresholds_for(cfg)?;
    let n = opts.snapshots.unwrap_or(cfg.scenario.snapshots);
    let loaded = match (&opts.policy, opts.baseline_only) {
        (Some(p), false) => Some((p.clone(), load_policy(p)?)),
        _ => None,
    };
    let mut rows = Vec::new();
    for (i, &sigma) in cfg.sweep.jitter_inter_urad.iter().enumerate() {
        let mut c = cfg.clone();
        c.optics.jitter_inter_urad = sigma;
        c.validate().map_err(|e| match e {
            ConfigError::Invalid { message, .. } => ConfigError::Invalid {
                field: format!("sweep.jitter_inter_urad[{i}]"),
                message,
            },
            other => other,
        })?;
        let (th, _) = thresholds_for(&c)?;
        let env = training_env(&c, th);
        let set = env.heldout(n);
        let baseline: Vec<Option<PathMetrics>> = set
            .iter()
            .map(|h| match (&h.instance, &h.oracle) {
                (Some(inst), Some(r)) => Some(inst.end_to_end(r.clone()).metrics()),
                _ => None,
            })
            .collect();
        rows.push(sweep_row(
            sigma,
            th.l_max_inter_m,
            "dijkstra",
            &set,
            &baseline,
        ));
        if let Some((_, (file, _))) = &loaded {
            let m = evaluate_instances(&file.params, &set, c.routing.k_cap, c.routing.h_max);
            let routes: Vec<Option<PathMetrics>> = m
                .records
                .iter()
                .zip(&set)
                .map(|(r, h)| match (r.reached, r.policy, &h.instance) {
                    (true, Some(pm), Some(inst)) => Some(access_extended(pm, inst)),
                    _ => None,
                })
                .collect();
            rows.push(sweep_row(sigma, th.l_max_inter_m, "policy", &set, &routes));
        }
    }
    let mut csv = Csv::new(&[
        "sigma_inter_urad",
        "l_max_inter_km",
        "router",
        "snapshots",
        "successes",
        "failures",
        "structural_failures",
        "success_rate",
        "mean_hops",
        "mean_delay_ms",
        "mean_inter_hops",
    ]);
    for r in &rows {
        csv.row(&[
            r.sigma_inter_urad.to_string(),
            r.l_max_inter_km.to_string(),
            r.router.to_string(),
            r.snapshots.to_string(),
            r.successes.to_string(),
            r.failures.to_string(),
            r.structural_failures.to_string(),
            r.success_rate.to_string(),
            opt(r.mean_hops),
            opt(r.mean_delay_ms),
            opt(r.mean_inter_hops),
        ]);
    }
    let mut out = OutputDir::create(&opts.out)?;
    out.text("sweep.csv", &csv.finish())?;
    let pref = loaded
        .as_ref()
        .map(|(path, (file, digest))| policy_ref(path, file, digest));
    write_manifest(&mut out, "sweep", opts, Some(n), &base_report, pref)?;
    Ok(rows)
}

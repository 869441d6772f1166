use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::{self, CliError, RunOptions};
use crate::config::{parse_config, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "orbroute",
    version,
    about = "LEO optical-ISL routing simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML configuration; all defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root seed, overriding `scenario.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory, overriding `output.dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Trained policy file for route, eval and sweep.
    #[arg(long, global = true)]
    pub policy: Option<PathBuf>,
    /// Number of snapshots to export, route or evaluate.
    #[arg(long, global = true)]
    pub snapshots: Option<usize>,
    /// Skip the policy even when `--policy` is given.
    #[arg(long, global = true)]
    pub baseline_only: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Feasible ISL ranges and outage-vs-distance table.
    Thresholds,
    /// Export snapshot graphs as JSON lines.
    Snapshot,
    /// Route the scenario gateway pair over seeded snapshots.
    Route,
    /// Train the value policy.
    Train,
    /// Evaluate a policy on held-out snapshots.
    Eval,
    /// Sweep inter-plane jitter.
    Sweep,
}

/// Runs one invocation and returns the human-readable summary.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    let config = match &cli.config {
        Some(p) => parse_config(p)?,
        None => RunConfig::default(),
    };
    let mut opts = RunOptions::new(config, cli.seed, cli.out.clone());
    opts.policy = cli.policy.clone();
    opts.snapshots = cli.snapshots;
    opts.baseline_only = cli.baseline_only;
    if cli.snapshots == Some(0) {
        return Err(crate::ConfigError::Invalid {
            field: "--snapshots".into(),
            message: "must be at least 1".into(),
        }
        .into());
    }

    let out = opts.out.display().to_string();
    let text = match cli.command {
        Command::Thresholds => {
            let r = commands::cmd_thresholds(&opts)?;
            format!(
                "intra: L_max = {:.1} km at divergence {:.1} urad\ninter: L_max = {:.1} km at divergence {:.1} urad",
                r.intra.l_max_km, r.intra.divergence_urad, r.inter.l_max_km, r.inter.divergence_urad
            )
        }
        Command::Snapshot => {
            let s = commands::cmd_snapshot(&opts)?;
            let ok = s.iter().filter(|g| g.status == "ok").count();
            let edges: usize = s.iter().map(|g| g.edges).sum();
            format!("{ok}/{} snapshots exported, {edges} edges", s.len())
        }
        Command::Route => {
            let s = commands::cmd_route(&opts)?;
            let mut text = router_line(&s.baseline);
            if let Some(p) = &s.policy {
                text.push('\n');
                text.push_str(&router_line(p));
            }
            text
        }
        Command::Train => {
            let r = commands::cmd_train(&opts)?;
            let last = r.log.rows.last();
            format!(
                "{} updates; final held-out success {:.3}, stretch {:.3}",
                r.log.updates,
                last.map_or(0.0, |l| l.success_rate),
                last.map_or(f64::NAN, |l| l.mean_stretch)
            )
        }
        Command::Eval => {
            let r = commands::cmd_eval(&opts)?;
            let m = &r.metrics;
            format!(
                "{}: success {:.3} over {} snapshots ({} structural failures), mean stretch {}",
                r.policy,
                m.success_rate,
                m.snapshots,
                m.structural_failures,
                m.mean_stretch.map_or("n/a".into(), |s| format!("{s:.4}"))
            )
        }
        Command::Sweep => {
            let rows = commands::cmd_sweep(&opts)?;
            rows.iter()
                .map(|r| {
                    format!(
                        "sigma {:>5} urad {:8}: success {:.2}, mean hops {}, mean delay {} ms",
                        r.sigma_inter_urad,
                        r.router,
                        r.success_rate,
                        r.mean_hops.map_or("n/a".into(), |h| format!("{h:.2}")),
                        r.mean_delay_ms.map_or("n/a".into(), |d| format!("{d:.2}"))
                    )
                })
                .collect::<Vec<_>>()
                .join("\n")
        }
    };
    Ok(format!("{text}\nartifacts written to {out}"))
}

fn router_line(s: &commands::RouterStats) -> String {
    format!(
        "{}: {}/{} routed, median delay {} ms, median hops {}",
        s.router,
        s.successes,
        s.attempts,
        s.median_delay_ms
            .map_or("n/a".into(), |d| format!("{d:.2}")),
        s.median_hops.map_or("n/a".into(), |h| format!("{h}"))
    )
}

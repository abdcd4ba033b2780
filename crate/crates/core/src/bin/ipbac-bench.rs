//! Policy-only vs full-pipeline comparison runner.

use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::Context;
use clap::{Parser, Subcommand};
use ipbac::bench::{
    generate_workload, measure_over_wire, render_report, run_comparison, write_outputs,
    WorkloadSpec,
};
use ipbac::decision::{review_threshold, Engine, EngineConfig, LabeledDecision};
use ipbac::service::{AppState, ServerHandle};

#[derive(Parser)]
#[command(
    version,
    about = "Replay a synthetic workload through policy-only and full decisions"
)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the workload, compare, and write grants.csv, latency.csv
    /// and report.txt.
    Run {
        /// Workload spec (JSON); omitted fields take their defaults.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Engine config (JSON); omitted fields take their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Also time every request through a local service over HTTP.
        #[arg(long)]
        over_wire: bool,
    },
    /// Suggest a threshold from operator-labeled decisions (one JSON object
    /// per line with `decision` and `correct`). Prints the review; nothing
    /// is applied.
    Review {
        #[arg(long)]
        log: PathBuf,
        /// Engine config supplying the current alpha and the minimum number
        /// of labeled fuzzy decisions.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Print the default workload spec and engine config.
    Defaults,
}

fn read_json<T: serde::de::DeserializeOwned + Default>(path: Option<&Path>) -> anyhow::Result<T> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
        }
        None => Ok(T::default()),
    }
}

fn main() -> anyhow::Result<()> {
    match Args::parse().command {
        Command::Defaults => {
            println!(
                "{}",
                serde_json::to_string_pretty(&WorkloadSpec::default())?
            );
            println!(
                "{}",
                serde_json::to_string_pretty(&EngineConfig::default())?
            );
        }
        Command::Review { log, config } => {
            let config: EngineConfig = read_json(config.as_deref())?;
            let text =
                fs::read_to_string(&log).with_context(|| format!("reading {}", log.display()))?;
            let labeled = text
                .lines()
                .enumerate()
                .filter(|(_, l)| !l.trim().is_empty())
                .map(|(i, l)| {
                    serde_json::from_str::<LabeledDecision>(l)
                        .with_context(|| format!("{} line {}", log.display(), i + 1))
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            let review = review_threshold(&labeled, config.alpha, config.review_min_labeled)?;
            println!("{}", serde_json::to_string_pretty(&review)?);
        }
        Command::Run {
            spec,
            config,
            out,
            over_wire,
        } => {
            let spec: WorkloadSpec = read_json(spec.as_deref())?;
            let config: EngineConfig = read_json(config.as_deref())?;
            let engine = Engine::new(config)?;
            let workload = generate_workload(&spec)?;
            let report = run_comparison(&workload, &engine)?;
            let wire = if over_wire {
                let state = AppState::in_memory(
                    engine.clone(),
                    workload.policies.clone(),
                    workload.chains.values().cloned(),
                );
                let server =
                    ServerHandle::spawn(Arc::new(state), SocketAddr::from(([127, 0, 0, 1], 0)))?;
                let series = measure_over_wire(&server.base_url(), &workload.requests)?;
                server.stop()?;
                Some(series)
            } else {
                None
            };
            write_outputs(&out, &spec, &report, wire.as_deref())?;
            print!("{}", render_report(&spec, &report, wire.as_deref()));
        }
    }
    Ok(())
}

//! Synthetic workloads and the policy-only vs full-pipeline comparison.

mod compare;
mod latency;
mod workload;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

pub use compare::{
    ipbac_grants, run_comparison, run_comparison_with, CheckpointCounts, ComparisonReport,
    RequestOutcome, DEFAULT_TIMING_PASSES,
};
pub use latency::{
    latency_at_chain_length, measure_over_wire, median, percentile, synthetic_chain,
    LatencySummary, WARMUP_REQUESTS,
};
pub use workload::{class_names, generate_workload, Workload, WorkloadSpec, ACTIONS};

use crate::decision::DecideError;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid workload spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Decide(#[from] DecideError),
    #[error("over-the-wire measurement failed: {0}")]
    Wire(String),
    #[error("replays of the same workload disagreed")]
    Nondeterministic,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Writes `grants.csv`, `latency.csv` and `report.txt` into `dir`.
/// `wire` is an optional over-the-wire latency series reported alongside.
pub fn write_outputs(
    dir: &Path,
    spec: &WorkloadSpec,
    report: &ComparisonReport,
    wire: Option<&[f64]>,
) -> Result<(), BenchError> {
    fs::create_dir_all(dir)?;

    let mut grants = csv::Writer::from_path(dir.join("grants.csv"))?;
    grants.write_record(["checkpoint", "rbac", "ipbac"])?;
    for c in &report.checkpoints {
        grants.write_record([
            c.requests.to_string(),
            c.rbac.to_string(),
            c.ipbac.to_string(),
        ])?;
    }
    grants.flush()?;

    let mut latency = csv::Writer::from_path(dir.join("latency.csv"))?;
    if let Some(wire) = wire {
        latency.write_record(["index", "micros", "wire_micros"])?;
        for (i, r) in report.requests.iter().enumerate() {
            let w = wire.get(i).map(|w| format!("{w:.3}")).unwrap_or_default();
            latency.write_record([i.to_string(), format!("{:.3}", r.micros), w])?;
        }
    } else {
        latency.write_record(["index", "micros"])?;
        for (i, r) in report.requests.iter().enumerate() {
            latency.write_record([i.to_string(), format!("{:.3}", r.micros)])?;
        }
    }
    latency.flush()?;

    fs::write(dir.join("report.txt"), render_report(spec, report, wire))?;
    Ok(())
}

pub fn render_report(
    spec: &WorkloadSpec,
    report: &ComparisonReport,
    wire: Option<&[f64]>,
) -> String {
    let mut s = String::new();
    let fuzzy_grants = report
        .requests
        .iter()
        .filter(|r| r.ipbac_granted && !r.rbac_granted)
        .count();
    let _ = writeln!(
        s,
        "workload seed {}: {} principals, {} seeded records, {} requests",
        spec.seed,
        spec.num_principals,
        report.seeded_records,
        report.requests.len()
    );
    let _ = writeln!(s, "alpha {}  theta {}", report.alpha, report.theta);
    let _ = writeln!(s);
    let _ = writeln!(s, "{:>10} {:>8} {:>8}", "requests", "rbac", "ipbac");
    for c in &report.checkpoints {
        let _ = writeln!(s, "{:>10} {:>8} {:>8}", c.requests, c.rbac, c.ipbac);
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "grants added by the fuzzy stage: {fuzzy_grants}");
    let superset = report
        .requests
        .iter()
        .all(|r| !r.rbac_granted || r.ipbac_granted);
    let _ = writeln!(
        s,
        "every policy grant also granted by the pipeline: {}",
        if superset { "yes" } else { "NO" }
    );
    let _ = writeln!(s);
    write_latency(
        &mut s,
        &format!("in-process (minimum of {} passes)", report.timing_passes),
        &report.latency,
    );
    write_latency(
        &mut s,
        "in-process (single pass)",
        &report.single_pass_latency,
    );
    if let Some(wire) = wire {
        write_latency(&mut s, "over-the-wire", &LatencySummary::from_series(wire));
    }
    s
}

fn write_latency(s: &mut String, label: &str, l: &LatencySummary) {
    let _ = writeln!(
        s,
        "{label} latency over {} requests: median {:.1} us, p99 {:.1} us, mean {:.1} us",
        l.count, l.median_us, l.p99_us, l.mean_us
    );
    let _ = writeln!(
        s,
        "{label} after the first {}: mean {:.1} us, coefficient of variation {:.3}",
        l.warmup, l.settled_mean_us, l.settled_cv
    );
}

//! Replays one synthetic workload twice, policy stage only and the full
//! pipeline, and tallies grants at each checkpoint. Optional arguments
//! override the seed and alpha.
//!
//! cargo run --release --example rbac_vs_ipbac [seed] [alpha]

use ipbac::bench::{generate_workload, run_comparison_with, WorkloadSpec};
use ipbac::decision::{Engine, EngineConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let mut spec = WorkloadSpec::default();
    if let Some(seed) = args.next() {
        spec.seed = seed.parse()?;
    }
    let mut config = EngineConfig::default();
    if let Some(alpha) = args.next() {
        config.alpha = alpha.parse()?;
    }

    let engine = Engine::new(config)?;
    let workload = generate_workload(&spec)?;
    let report = run_comparison_with(&workload, &engine, 1)?;

    println!(
        "seed {} alpha {} theta {}: {} principals, {} seeded records",
        spec.seed, report.alpha, report.theta, spec.num_principals, report.seeded_records
    );
    println!("{:>10} {:>6} {:>6}", "requests", "rbac", "ipbac");
    for c in &report.checkpoints {
        println!("{:>10} {:>6} {:>6}", c.requests, c.rbac, c.ipbac);
    }
    let superset = report
        .requests
        .iter()
        .all(|r| !r.rbac_granted || r.ipbac_granted);
    let fuzzy = report
        .requests
        .iter()
        .filter(|r| !r.rbac_granted && r.ipbac_granted)
        .count();
    println!(
        "ipbac grants every rbac grant: {superset}; {fuzzy} extra grants from the fuzzy stage"
    );

    let scores = report.observed_scores();
    if let (Some(lo), Some(hi)) = (scores.first(), scores.last()) {
        println!(
            "{} distinct scores between {lo:.4} and {hi:.4}",
            scores.len()
        );
    }
    Ok(())
}

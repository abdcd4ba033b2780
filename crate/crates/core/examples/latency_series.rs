//! Times fuzzy-path decisions (including the chain append) against chains of
//! growing length. Per-decision cost should not grow with history.
//!
//! cargo run --release --example latency_series

use ipbac::bench::{latency_at_chain_length, median, percentile};
use ipbac::decision::{Engine, EngineConfig};

const SAMPLES: usize = 2_000;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let engine = Engine::new(EngineConfig::default())?;
    println!("{:>8} {:>10} {:>10}", "records", "median us", "p99 us");
    for length in [0, 100, 1_000, 5_000, 15_000, 50_000] {
        let series = latency_at_chain_length(&engine, length, SAMPLES)?;
        println!(
            "{length:>8} {:>10.2} {:>10.2}",
            median(&series),
            percentile(&series, 0.99)
        );
    }
    Ok(())
}

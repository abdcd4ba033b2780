use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::latency::LatencySummary;
use super::workload::Workload;
use super::BenchError;
use crate::decision::{DecisionPath, Engine};
use crate::provenance::{PrincipalId, ProvenanceChain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckpointCounts {
    pub requests: usize,
    pub rbac: usize,
    pub ipbac: usize,
}

/// Per-request result of the two replays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestOutcome {
    pub rbac_granted: bool,
    pub ipbac_granted: bool,
    pub path: DecisionPath,
    pub ds: Option<f64>,
    /// Wall-clock time of the full decision (including the append) in the
    /// pipeline replay; the minimum over the timing passes.
    pub micros: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub alpha: f64,
    pub theta: f64,
    pub seeded_records: u64,
    pub checkpoints: Vec<CheckpointCounts>,
    pub requests: Vec<RequestOutcome>,
    /// Over the per-request minimum across all timing passes.
    pub latency: LatencySummary,
    /// Over the first timing pass alone.
    pub single_pass_latency: LatencySummary,
    pub timing_passes: usize,
}

impl ComparisonReport {
    /// Distinct scores the fuzzy stage produced, ascending.
    pub fn observed_scores(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.requests.iter().filter_map(|r| r.ds).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }
}

struct Replay {
    granted: Vec<bool>,
    paths: Vec<DecisionPath>,
    ds: Vec<Option<f64>>,
    micros: Vec<f64>,
}

fn replay(workload: &Workload, engine: &Engine, fuzzy: bool) -> Result<Replay, BenchError> {
    let mut chains: BTreeMap<PrincipalId, ProvenanceChain> = workload.chains.clone();
    let options = engine.config().chain_options();
    let n = workload.requests.len();
    let mut out = Replay {
        granted: Vec::with_capacity(n),
        paths: Vec::with_capacity(n),
        ds: Vec::with_capacity(n),
        micros: Vec::with_capacity(n),
    };
    for request in &workload.requests {
        let chain = chains
            .entry(request.principal.clone())
            .or_insert_with(|| ProvenanceChain::new(request.principal.clone(), options));
        let started = Instant::now();
        let decision = if fuzzy {
            engine.decide(request, &workload.policies, chain)?
        } else {
            engine.decide_rbac_only(request, &workload.policies, chain)?
        };
        out.micros.push(started.elapsed().as_secs_f64() * 1e6);
        out.granted.push(decision.is_granted());
        out.paths.push(decision.path);
        out.ds.push(decision.ds.map(|d| d.value()));
    }
    Ok(out)
}

/// Grant flags of the full pipeline over a fresh copy of the workload state.
pub fn ipbac_grants(workload: &Workload, engine: &Engine) -> Result<Vec<bool>, BenchError> {
    Ok(replay(workload, engine, true)?.granted)
}

/// Timing passes per comparison run.
pub const DEFAULT_TIMING_PASSES: usize = 5;

/// Replays the request stream through policy evaluation alone and through
/// the full pipeline, each over its own copy of the initial chains.
pub fn run_comparison(
    workload: &Workload,
    engine: &Engine,
) -> Result<ComparisonReport, BenchError> {
    run_comparison_with(workload, engine, DEFAULT_TIMING_PASSES)
}

/// As [`run_comparison`], replaying the pipeline `passes` times. Replays are
/// deterministic, so every pass does identical work per request; the
/// per-request minimum discards scheduler and page-fault interference.
pub fn run_comparison_with(
    workload: &Workload,
    engine: &Engine,
    passes: usize,
) -> Result<ComparisonReport, BenchError> {
    let passes = passes.max(1);
    let rbac = replay(workload, engine, false)?;
    let mut ipbac = replay(workload, engine, true)?;
    let single_pass_latency = LatencySummary::from_series(&ipbac.micros);
    for _ in 1..passes {
        let again = replay(workload, engine, true)?;
        if again.granted != ipbac.granted || again.ds != ipbac.ds {
            return Err(BenchError::Nondeterministic);
        }
        for (best, t) in ipbac.micros.iter_mut().zip(again.micros) {
            *best = best.min(t);
        }
    }
    let checkpoints = workload
        .spec
        .checkpoints
        .iter()
        .map(|&k| CheckpointCounts {
            requests: k,
            rbac: rbac.granted[..k].iter().filter(|g| **g).count(),
            ipbac: ipbac.granted[..k].iter().filter(|g| **g).count(),
        })
        .collect();
    let requests = (0..workload.requests.len())
        .map(|i| RequestOutcome {
            rbac_granted: rbac.granted[i],
            ipbac_granted: ipbac.granted[i],
            path: ipbac.paths[i],
            ds: ipbac.ds[i],
            micros: ipbac.micros[i],
        })
        .collect();
    Ok(ComparisonReport {
        alpha: engine.config().alpha,
        theta: engine.config().theta,
        seeded_records: workload.seeded_records,
        checkpoints,
        requests,
        latency: LatencySummary::from_series(&ipbac.micros),
        single_pass_latency,
        timing_passes: passes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{generate_workload, WorkloadSpec};
    use crate::decision::EngineConfig;

    #[test]
    fn no_out_of_role_requests_means_equal_counts() {
        let spec = WorkloadSpec {
            num_principals: 30,
            history_length: 10,
            out_of_role_fraction: 0.0,
            checkpoints: vec![10, 50, 100],
            ..WorkloadSpec::default()
        };
        let w = generate_workload(&spec).unwrap();
        let engine = Engine::new(EngineConfig::default()).unwrap();
        let report = run_comparison(&w, &engine).unwrap();
        for c in &report.checkpoints {
            assert_eq!(c.rbac, c.requests);
            assert_eq!(c.ipbac, c.rbac);
        }
        assert!(report.observed_scores().is_empty());
    }
}

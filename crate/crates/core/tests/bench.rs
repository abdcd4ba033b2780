use std::fs;
use std::process::Command;

use ipbac::bench::{generate_workload, ipbac_grants, run_comparison_with, WorkloadSpec};
use ipbac::decision::{Engine, EngineConfig};

const SWEEP_SEEDS: u64 = 50;
const ALPHA_SWEEP: [f64; 4] = [0.1, 0.2645, 0.5, 0.9];

#[test]
fn shipped_bench_files_are_the_defaults() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("bench");
    let spec: WorkloadSpec =
        serde_json::from_str(&fs::read_to_string(dir.join("spec.json")).unwrap()).unwrap();
    let config: EngineConfig =
        serde_json::from_str(&fs::read_to_string(dir.join("config.json")).unwrap()).unwrap();
    assert_eq!(spec, WorkloadSpec::default());
    assert_eq!(config, EngineConfig::default());
}

#[test]
fn same_spec_same_workload_and_grants() {
    let spec = WorkloadSpec::default();
    let a = generate_workload(&spec).unwrap();
    let b = generate_workload(&spec).unwrap();
    assert_eq!(a.requests, b.requests);
    assert_eq!(a.policies, b.policies);
    assert_eq!(a.seeded_records, b.seeded_records);
    for ((pa, ca), (pb, cb)) in a.chains.iter().zip(&b.chains) {
        assert_eq!(pa, pb);
        assert_eq!(ca.head_hash(), cb.head_hash());
    }

    let engine = Engine::new(EngineConfig::default()).unwrap();
    let ra = run_comparison_with(&a, &engine, 1).unwrap();
    let rb = run_comparison_with(&b, &engine, 1).unwrap();
    assert_eq!(ra.checkpoints, rb.checkpoints);
    let strip = |r: &ipbac::bench::ComparisonReport| -> Vec<_> {
        r.requests
            .iter()
            .map(|o| (o.rbac_granted, o.ipbac_granted, o.path, o.ds))
            .collect()
    };
    assert_eq!(strip(&ra), strip(&rb));
}

#[test]
fn different_seeds_differ() {
    let a = generate_workload(&WorkloadSpec::default()).unwrap();
    let b = generate_workload(&WorkloadSpec {
        seed: 1,
        ..WorkloadSpec::default()
    })
    .unwrap();
    assert_ne!(a.requests, b.requests);
}

#[test]
fn invalid_specs_are_rejected() {
    let bad = [
        WorkloadSpec {
            num_principals: 0,
            ..WorkloadSpec::default()
        },
        WorkloadSpec {
            checkpoints: vec![],
            ..WorkloadSpec::default()
        },
        WorkloadSpec {
            checkpoints: vec![50, 10],
            ..WorkloadSpec::default()
        },
        WorkloadSpec {
            role_density: 1.5,
            ..WorkloadSpec::default()
        },
    ];
    for spec in bad {
        assert!(generate_workload(&spec).is_err(), "{spec:?}");
    }
}

/// Superset, grant counts non-increasing in alpha, and a fuzzy-stage gain
/// by the last checkpoint on every seed; equal counts at the first two
/// checkpoints on most.
#[test]
fn superset_monotonicity_and_trend_hold_across_seeds() {
    let engine = Engine::new(EngineConfig::default()).unwrap();
    let sweep: Vec<Engine> = ALPHA_SWEEP
        .iter()
        .map(|&alpha| {
            Engine::new(EngineConfig {
                alpha,
                ..EngineConfig::default()
            })
            .unwrap()
        })
        .collect();
    let mut early_equal = 0;
    for seed in 0..SWEEP_SEEDS {
        let workload = generate_workload(&WorkloadSpec {
            seed,
            ..WorkloadSpec::default()
        })
        .unwrap();
        let report = run_comparison_with(&workload, &engine, 1).unwrap();
        for (i, r) in report.requests.iter().enumerate() {
            assert!(
                !r.rbac_granted || r.ipbac_granted,
                "seed {seed} request {i}"
            );
        }
        for c in &report.checkpoints {
            assert!(c.ipbac >= c.rbac, "seed {seed} {c:?}");
        }
        let last = report.checkpoints.last().unwrap();
        assert!(last.ipbac > last.rbac, "seed {seed} {last:?}");
        let counts: Vec<usize> = sweep
            .iter()
            .map(|e| {
                ipbac_grants(&workload, e)
                    .unwrap()
                    .iter()
                    .filter(|g| **g)
                    .count()
            })
            .collect();
        assert!(
            counts.windows(2).all(|w| w[0] >= w[1]),
            "seed {seed} {counts:?}"
        );
        if report.checkpoints[..2].iter().all(|c| c.ipbac == c.rbac) {
            early_equal += 1;
        }
    }
    println!("equal counts at the first two checkpoints on {early_equal} of {SWEEP_SEEDS} seeds");
    assert!(
        early_equal * 5 >= SWEEP_SEEDS * 4,
        "{early_equal} of {SWEEP_SEEDS}"
    );
}

#[test]
fn cli_writes_grants_latency_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let spec = WorkloadSpec {
        num_principals: 60,
        history_length: 10,
        checkpoints: vec![20, 40],
        ..WorkloadSpec::default()
    };
    let spec_path = dir.path().join("spec.json");
    fs::write(&spec_path, serde_json::to_string(&spec).unwrap()).unwrap();
    let config_path = dir.path().join("config.json");
    fs::write(&config_path, r#"{ "alpha": 0.3 }"#).unwrap();
    let out = dir.path().join("out");

    let output = Command::new(env!("CARGO_BIN_EXE_ipbac-bench"))
        .args(["run", "--over-wire", "--spec"])
        .arg(&spec_path)
        .arg("--config")
        .arg(&config_path)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );

    let grants = fs::read_to_string(out.join("grants.csv")).unwrap();
    let rows: Vec<&str> = grants.lines().collect();
    assert_eq!(rows[0], "checkpoint,rbac,ipbac");
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("20,") && rows[2].starts_with("40,"));

    let latency = fs::read_to_string(out.join("latency.csv")).unwrap();
    assert_eq!(latency.lines().next().unwrap(), "index,micros,wire_micros");
    assert_eq!(latency.lines().count(), 41);

    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.contains("0.3"), "{report}");
    assert_eq!(String::from_utf8_lossy(&output.stdout), report);

    let bad = Command::new(env!("CARGO_BIN_EXE_ipbac-bench"))
        .args(["run", "--config"])
        .arg(dir.path().join("missing.json"))
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(!bad.status.success());
}

#[test]
fn cli_review_reads_labeled_decisions() {
    use ipbac::decision::{DecisionPath, LabeledDecision};

    let engine = Engine::new(EngineConfig::default()).unwrap();
    let mut workload = generate_workload(&WorkloadSpec::default()).unwrap();
    let mut lines = Vec::new();
    for request in workload.requests.clone() {
        let chain = workload.chains.get_mut(&request.principal).unwrap();
        let decision = engine.decide(&request, &workload.policies, chain).unwrap();
        if decision.path == DecisionPath::Fuzzy {
            let correct = decision.is_granted() == (decision.ds.unwrap().value() > 0.45);
            lines.push(serde_json::to_string(&LabeledDecision { decision, correct }).unwrap());
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("labeled.jsonl");
    fs::write(&log, lines.join("\n")).unwrap();

    let output = Command::new(env!("CARGO_BIN_EXE_ipbac-bench"))
        .args(["review", "--log"])
        .arg(&log)
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let review: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    let suggested = review["suggested_alpha"].as_f64().unwrap();
    assert!(suggested > 0.4 && suggested < 0.5, "{review}");
    assert_eq!(review["suggested_accuracy"], 1.0);
    assert_eq!(review["labeled"].as_u64().unwrap() as usize, lines.len());

    fs::write(&log, lines[..10].join("\n")).unwrap();
    let output = Command::new(env!("CARGO_BIN_EXE_ipbac-bench"))
        .args(["review", "--log"])
        .arg(&log)
        .output()
        .unwrap();
    assert!(!output.status.success());
}

//! One check per acceptance criterion, run in sequence so that the latency
//! measurements do not compete with sibling tests for cores. Prints a
//! PASS/FAIL line per criterion and fails if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Child, Command, Stdio};
use std::time::{Duration, Instant};

use common::reference::{self, Ops};
use common::{pid, random_chain, request, ACTIONS, CLASSES};
use ipbac::bench::{
    generate_workload, ipbac_grants, latency_at_chain_length, median, run_comparison,
    ComparisonReport, Workload, WorkloadSpec,
};
use ipbac::decision::{AccessRequest, Engine, EngineConfig};
use ipbac::fuzzy::{
    compute_factors, defuzzify_centroid, infer, score_factors, FuzzyFactors, IncrementalAggregates,
    InferenceOperators, Memberships, RuleBase,
};
use ipbac::policy::{HistoryPredicate, Permission, PolicySet};
use ipbac::provenance::store::chain_file_path;
use ipbac::provenance::{verify_chain_file, ChainOptions, ChainStore, Outcome};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

// Tolerances and budgets.
const SUPERSET_TRIPLES: usize = 1_000;
const SUPERSET_BUDGET: Duration = Duration::from_secs(10);
const TREND_BUDGET: Duration = Duration::from_secs(60);
const TAMPER_TRIALS: usize = 1_000;
const TAMPER_BUDGET: Duration = Duration::from_secs(30);
const ORACLE_TRIPLES: usize = 1_000;
const ORACLE_TOLERANCE: f64 = 1e-9;
const FINE_GRID_INTERVALS: usize = 100_000;
const FINE_GRID_TOLERANCE: f64 = 1e-6;
const SWEEP_STEPS: usize = 20;
/// Slack for floating-point noise when comparing neighbouring scores.
const MONOTONE_SLACK: f64 = 1e-12;
const MAX_SETTLED_CV: f64 = 0.25;
const MAX_SCALING_RATIO: f64 = 2.0;
const SCALING_SAMPLES: usize = 2_000;
const AGGREGATE_CHAINS: usize = 200;
const AGGREGATE_MAX_LEN: usize = 1_000;
const FACTOR_TOLERANCE: f64 = 1e-12;

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

#[test]
fn acceptance() {
    let trend = trend_run();
    let results = [
        ("1 grant superset", grant_superset()),
        ("2 checkpoint trend", trend_verdict(&trend)),
        ("3 threshold monotonicity", threshold_monotonicity(&trend)),
        ("4 tamper detection", tamper_detection()),
        ("5 fuzzy oracle equivalence", oracle_equivalence()),
        ("6 monotone score", monotone_sweep()),
        ("7 latency stability", latency_stability(&trend)),
        ("8 aggregate consistency", aggregate_consistency()),
        ("9 service durability", service_durability()),
    ];
    // Written to the raw handle so the report shows without --nocapture.
    let mut out = std::io::stdout().lock();
    writeln!(out).unwrap();
    for (name, v) in &results {
        writeln!(
            out,
            "{} criterion {name}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        )
        .unwrap();
    }
    drop(out);
    let failed: Vec<_> = results
        .iter()
        .filter(|(_, v)| !v.pass)
        .map(|(n, _)| *n)
        .collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

// 1

fn random_policy(rng: &mut ChaCha8Rng, principals: &[&str]) -> PolicySet {
    let mut set = PolicySet::default();
    let roles = rng.random_range(0..5);
    for r in 0..roles {
        let name = format!("role{r}");
        let perms: Vec<_> = (0..rng.random_range(0..4))
            .map(|_| {
                let class = CLASSES[rng.random_range(0..CLASSES.len())];
                let resource = match rng.random_range(0..4) {
                    0 => "*".to_owned(),
                    1 => format!("{class}/*"),
                    _ => format!("{class}/{}", rng.random_range(0..5)),
                };
                Permission::new(resource, ACTIONS[rng.random_range(0..ACTIONS.len())]).unwrap()
            })
            .collect();
        set.add_role(name.clone(), perms);
        if rng.random_bool(0.3) {
            let predicate = if rng.random_bool(0.5) {
                HistoryPredicate::MinSuccessfulInteractions {
                    n: rng.random_range(0..5),
                    window_secs: rng.random_range(1..30) * 86_400,
                }
            } else {
                HistoryPredicate::NoOutcomeInWindow {
                    outcome: Outcome::Denied,
                    window_secs: rng.random_range(1..30) * 86_400,
                }
            };
            set.add_predicate(&name, predicate).unwrap();
        }
        for p in principals {
            if rng.random_bool(0.5) {
                set.assign(pid(p), name.clone()).unwrap();
            }
        }
    }
    set
}

fn grant_superset() -> Verdict {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut counterexamples = 0;
    let mut rbac_allows = 0;
    let mut fuzzy_grants = 0;
    for _ in 0..SUPERSET_TRIPLES {
        let policies = random_policy(&mut rng, &["p0", "p1"]);
        let who = if rng.random_bool(0.5) { "p0" } else { "p1" };
        let len = rng.random_range(0..80);
        let (chain, last) = random_chain(&mut rng, who, len);
        let class = CLASSES[rng.random_range(0..CLASSES.len())];
        let req = request(
            who,
            &format!("{class}/{}", rng.random_range(0..5)),
            ACTIONS[rng.random_range(0..ACTIONS.len())],
            last + rng.random_range(0..7 * 86_400_000),
        );
        let config = EngineConfig {
            alpha: rng.random_range(0.01..0.99),
            theta: rng.random_range(0.05..=1.0),
            ..EngineConfig::default()
        };
        let engine = Engine::new(config).unwrap();
        let rbac = engine
            .decide_rbac_only(&req, &policies, &mut chain.clone())
            .unwrap();
        let ipbac = engine.decide(&req, &policies, &mut chain.clone()).unwrap();
        if rbac.is_granted() {
            rbac_allows += 1;
            if !ipbac.is_granted() || !ipbac.permits(&req) {
                counterexamples += 1;
            }
        } else if ipbac.is_granted() {
            fuzzy_grants += 1;
        }
    }
    let elapsed = started.elapsed();
    verdict(
        counterexamples == 0 && elapsed < SUPERSET_BUDGET,
        format!(
            "{counterexamples} counterexamples over {SUPERSET_TRIPLES} triples \
             ({rbac_allows} policy allows, {fuzzy_grants} fuzzy grants) in {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

// 2, 3, 7

struct TrendRun {
    workload: Workload,
    report: ComparisonReport,
    elapsed: Duration,
}

fn trend_run() -> TrendRun {
    let started = Instant::now();
    let workload = generate_workload(&WorkloadSpec::default()).unwrap();
    let engine = Engine::new(EngineConfig::default()).unwrap();
    let report = run_comparison(&workload, &engine).unwrap();
    TrendRun {
        workload,
        report,
        elapsed: started.elapsed(),
    }
}

fn trend_verdict(run: &TrendRun) -> Verdict {
    let at = |k: usize| {
        run.report
            .checkpoints
            .iter()
            .find(|c| c.requests == k)
            .copied()
    };
    let (Some(c10), Some(c50), Some(c500)) = (at(10), at(50), at(500)) else {
        return verdict(false, "default workload lacks checkpoints 10, 50 and 500");
    };
    let alpha_theta = run.report.alpha == 0.2645 && run.report.theta == 1.0;
    let pass = alpha_theta
        && c10.ipbac == c10.rbac
        && c50.ipbac == c50.rbac
        && c500.ipbac > c500.rbac
        && run.elapsed < TREND_BUDGET;
    let counts: Vec<_> = run
        .report
        .checkpoints
        .iter()
        .map(|c| format!("{}: {}/{}", c.requests, c.rbac, c.ipbac))
        .collect();
    verdict(
        pass,
        format!(
            "rbac/ipbac at {} over {} seeded records, alpha {} theta {}, {:.2} s",
            counts.join(", "),
            run.report.seeded_records,
            run.report.alpha,
            run.report.theta,
            run.elapsed.as_secs_f64()
        ),
    )
}

fn threshold_monotonicity(run: &TrendRun) -> Verdict {
    let scores = run.report.observed_scores();
    let mut previous: Option<(f64, usize)> = None;
    let mut violations = 0;
    for &alpha in &scores {
        let config = EngineConfig {
            alpha,
            ..EngineConfig::default()
        };
        let engine = Engine::new(config).unwrap();
        let grants = ipbac_grants(&run.workload, &engine)
            .unwrap()
            .iter()
            .filter(|g| **g)
            .count();
        if let Some((_, before)) = previous {
            if grants > before {
                violations += 1;
            }
        }
        previous = Some((alpha, grants));
    }
    verdict(
        violations == 0 && !scores.is_empty(),
        format!(
            "{violations} violations over {} observed scores",
            scores.len()
        ),
    )
}

fn latency_stability(run: &TrendRun) -> Verdict {
    let cv = run.report.latency.settled_cv;
    let engine = Engine::new(EngineConfig::default()).unwrap();
    let short = median(&latency_at_chain_length(&engine, 100, SCALING_SAMPLES).unwrap());
    let long = median(&latency_at_chain_length(&engine, 15_000, SCALING_SAMPLES).unwrap());
    let ratio = long / short;
    verdict(
        cv < MAX_SETTLED_CV && ratio < MAX_SCALING_RATIO,
        format!(
            "settled CV {cv:.3} (single pass {:.3}); median {short:.2} us at 100 records, \
             {long:.2} us at 15000 (ratio {ratio:.2})",
            run.report.single_pass_latency.settled_cv
        ),
    )
}

// 4

fn tamper_detection() -> Verdict {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let store = ChainStore::open(dir.path(), ChainOptions::default()).unwrap();
    let principals: Vec<String> = (0..10).map(|i| format!("tamper-{i}")).collect();
    for p in &principals {
        let len = rng.random_range(1..60);
        let (chain, _) = random_chain(&mut rng, p, len);
        for r in chain.records() {
            store
                .append(ipbac::provenance::RecordInput {
                    principal: r.principal.clone(),
                    interaction: r.interaction.clone(),
                    resource: r.resource.clone(),
                    action: r.action.clone(),
                    outcome: r.outcome,
                    context_tags: r.context_tags.clone(),
                    recorded_at: r.recorded_at,
                })
                .unwrap();
        }
    }
    drop(store);
    let mut missed = 0;
    let mut late = 0;
    for _ in 0..TAMPER_TRIALS {
        let p = pid(&principals[rng.random_range(0..principals.len())]);
        let path = chain_file_path(dir.path(), &p);
        let original = fs::read(&path).unwrap();
        let offset = rng.random_range(0..original.len());
        let mut damaged = original.clone();
        damaged[offset] ^= 1 << rng.random_range(0..8);
        let mutated_index = original[..offset].iter().filter(|&&b| b == b'\n').count() as u64;
        fs::write(&path, &damaged).unwrap();
        let report = verify_chain_file(&path, &p).unwrap();
        fs::write(&path, &original).unwrap();
        if report.valid {
            missed += 1;
        } else if report.first_bad_index.is_none_or(|i| i > mutated_index) {
            late += 1;
        }
    }
    let elapsed = started.elapsed();
    verdict(
        missed == 0 && late == 0 && elapsed < TAMPER_BUDGET,
        format!(
            "{} of {TAMPER_TRIALS} single-bit flips detected, {late} located past the flip, {:.2} s",
            TAMPER_TRIALS - missed,
            elapsed.as_secs_f64()
        ),
    )
}

// 5

fn oracle_equivalence() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let default_rules = RuleBase::level_sum_default();
    let classic_rules = RuleBase::level_sum(InferenceOperators::classic());
    let (mut worst_ds, mut worst_grid) = (0.0f64, 0.0f64);
    for i in 0..ORACLE_TRIPLES {
        // Every tenth triple sits on a 0.05 grid, where membership kinks are.
        let mut draw = || {
            if i % 10 == 0 {
                rng.random_range(0..=20) as f64 / 20.0
            } else {
                rng.random_range(0.0..=1.0)
            }
        };
        let (r, c, e) = (draw(), draw(), draw());
        let factors = FuzzyFactors::new(r, c, e).unwrap();
        for (rules, ops) in [
            (&default_rules, Ops::ProductBoundedSum),
            (&classic_rules, Ops::MinMax),
        ] {
            let got = score_factors(&factors, rules).unwrap().value();
            worst_ds = worst_ds.max((got - reference::ds(r, c, e, ops)).abs());
        }
        let memberships = Memberships::fuzzify(&default_rules, &factors.named()).unwrap();
        let centroid = defuzzify_centroid(&infer(&memberships, &default_rules).unwrap())
            .unwrap()
            .value();
        let act = reference::activations(r, c, e, Ops::ProductBoundedSum);
        worst_grid =
            worst_grid.max((centroid - reference::centroid_grid(&act, FINE_GRID_INTERVALS)).abs());
    }
    verdict(
        worst_ds < ORACLE_TOLERANCE && worst_grid < FINE_GRID_TOLERANCE,
        format!(
            "max |ds - reference| {worst_ds:.2e} over {ORACLE_TRIPLES} triples and both operator \
             sets; max |centroid - 1e-5 grid| {worst_grid:.2e}"
        ),
    )
}

// 6

fn monotone_sweep() -> Verdict {
    let rules = RuleBase::level_sum_default();
    let n = SWEEP_STEPS + 1;
    let x = |i: usize| i as f64 / SWEEP_STEPS as f64;
    let mut grid = vec![0.0; n * n * n];
    let idx = |i: usize, j: usize, k: usize| (i * n + j) * n + k;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let f = FuzzyFactors::new(x(i), x(j), x(k)).unwrap();
                grid[idx(i, j, k)] = score_factors(&f, &rules).unwrap().value();
            }
        }
    }
    let mut violations = 0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let here = grid[idx(i, j, k)];
                let steps = [(i + 1, j, k), (i, j + 1, k), (i, j, k + 1)];
                for (a, b, c) in steps {
                    if a < n && b < n && c < n && grid[idx(a, b, c)] < here - MONOTONE_SLACK {
                        violations += 1;
                    }
                }
            }
        }
    }
    verdict(
        violations == 0,
        format!("{violations} violations over {} grid points", grid.len()),
    )
}

// 8

fn aggregate_consistency() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let params = EngineConfig::default().factor_params();
    let half_life_ms = params.half_life.as_millis() as f64;
    let mut mismatched = 0;
    let mut worst = 0.0f64;
    for c in 0..AGGREGATE_CHAINS {
        let len = rng.random_range(0..=AGGREGATE_MAX_LEN);
        let (chain, last) = random_chain(&mut rng, &format!("agg-{c}"), len);
        let scratch = IncrementalAggregates::from_records(params.half_life, chain.records());
        let agg = chain.aggregates();
        let mut class_successes = BTreeMap::new();
        for r in chain
            .records()
            .iter()
            .filter(|r| r.outcome == Outcome::Success)
        {
            *class_successes
                .entry(r.resource.split('/').next().unwrap().to_owned())
                .or_insert(0u64) += 1;
        }
        let successes = class_successes.values().sum::<u64>();
        if agg != &scratch
            || agg.total_interactions != len as u64
            || agg.successful_interactions != successes
            || agg.class_successes != class_successes
        {
            mismatched += 1;
        }

        // Factors against closed forms evaluated at the request time.
        let at = last + rng.random_range(0..30 * 86_400_000);
        let class = CLASSES[rng.random_range(0..CLASSES.len())];
        let req: AccessRequest = request(&format!("agg-{c}"), &format!("{class}/1"), "read", at);
        let got = compute_factors(agg, &req, &params);
        let (mut mass, mut total) = (0.0, 0.0);
        for r in chain
            .records()
            .iter()
            .filter(|r| r.outcome == Outcome::Success)
        {
            let w = (-((at - r.recorded_at.as_millis()) as f64) / half_life_ms).exp2();
            total += w;
            if r.resource.starts_with(&format!("{class}/")) {
                mass += w;
            }
        }
        let n = len as f64;
        let want = [
            (successes as f64 + 1.0) / (n + 2.0),
            mass / (total + 1.0),
            1.0 - (-n / params.kappa).exp(),
        ];
        let have = [
            got.reliability,
            got.contextual_relevance,
            got.historical_engagement,
        ];
        for (h, w) in have.iter().zip(want) {
            worst = worst.max((h - w).abs());
        }
    }
    verdict(
        mismatched == 0 && worst < FACTOR_TOLERANCE,
        format!(
            "{mismatched} of {AGGREGATE_CHAINS} chains with aggregate mismatches; \
             max factor deviation {worst:.2e}"
        ),
    )
}

// 9

struct Daemon(Child, String);

impl Daemon {
    fn start(config: &Path, data: &Path) -> Self {
        let mut child = Command::new(env!("CARGO_BIN_EXE_ipbacd"))
            .args(["--config", config.to_str().unwrap()])
            .args(["--data-dir", data.to_str().unwrap()])
            .args(["--listen", "127.0.0.1:0"])
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .unwrap();
        let mut line = String::new();
        BufReader::new(child.stdout.take().unwrap())
            .read_line(&mut line)
            .unwrap();
        let addr = line
            .trim()
            .strip_prefix("ipbacd listening on ")
            .expect("banner");
        Daemon(child, format!("http://{addr}"))
    }

    fn post(&self, client: &reqwest::blocking::Client, path: &str, body: &Value) -> Value {
        let resp = client
            .post(format!("{}{path}", self.1))
            .json(body)
            .send()
            .unwrap();
        assert!(resp.status().is_success(), "{path}: {}", resp.status());
        resp.json().unwrap()
    }

    fn kill(mut self) {
        self.0.kill().unwrap();
        self.0.wait().unwrap();
    }
}

fn service_durability() -> Verdict {
    let spec = WorkloadSpec {
        num_principals: 40,
        history_length: 10,
        checkpoints: vec![60, 120],
        ..WorkloadSpec::default()
    };
    let workload = generate_workload(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("policy.json"),
        serde_json::to_vec(&workload.policies).unwrap(),
    )
    .unwrap();
    let config = dir.path().join("ipbacd.json");
    fs::write(&config, r#"{"policy_path": "policy.json"}"#).unwrap();
    let client = reqwest::blocking::Client::new();

    let seed = |d: &Daemon| {
        for chain in workload.chains.values() {
            for r in chain.records() {
                d.post(
                    &client,
                    "/v1/interactions",
                    &serde_json::to_value(r).unwrap(),
                );
            }
        }
    };
    let decide = |d: &Daemon, r: &AccessRequest| {
        let mut body = d.post(&client, "/v1/decide", &serde_json::to_value(r).unwrap());
        let obj = body.as_object_mut().unwrap();
        obj.remove("seq");
        obj.remove("server_time");
        body
    };
    let (first, rest) = workload.requests.split_at(workload.requests.len() / 2);

    // Uninterrupted reference run.
    let reference_dir = dir.path().join("reference");
    let d = Daemon::start(&config, &reference_dir);
    seed(&d);
    for r in first {
        decide(&d, r);
    }
    let expected: Vec<Value> = rest.iter().map(|r| decide(&d, r)).collect();
    d.kill();

    // Killed after the first half, restarted for the second.
    let crash_dir = dir.path().join("crash");
    let d = Daemon::start(&config, &crash_dir);
    seed(&d);
    for r in first {
        decide(&d, r);
    }
    d.kill();
    let d = Daemon::start(&config, &crash_dir);
    let replayed: Vec<Value> = rest.iter().map(|r| decide(&d, r)).collect();
    d.kill();

    let differing = expected
        .iter()
        .zip(&replayed)
        .filter(|(a, b)| a != b)
        .count();
    let store = ChainStore::open(&crash_dir, ChainOptions::default()).unwrap();
    let principals = store.principals();
    let invalid = principals
        .iter()
        .filter(|p| {
            !verify_chain_file(&chain_file_path(&crash_dir, p), p)
                .unwrap()
                .valid
        })
        .count();
    let persisted = store.total_records();
    let expected_records = workload.seeded_records + workload.requests.len() as u64;
    verdict(
        differing == 0 && invalid == 0 && persisted == expected_records,
        format!(
            "{differing} of {} post-restart decisions differ from the uninterrupted run; \
             {invalid} of {} chains fail verification; {persisted} of {expected_records} records persisted",
            rest.len(),
            principals.len()
        ),
    )
}

//! Replays a synthetic workload, labels the fuzzy decisions as a stricter
//! reviewer would, and asks for a threshold suggestion. Nothing is applied.
//!
//! cargo run --example threshold_review [reviewer_cutoff]

use ipbac::bench::{generate_workload, WorkloadSpec};
use ipbac::decision::{review_threshold, DecisionPath, Engine, EngineConfig, LabeledDecision};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cutoff: f64 = match std::env::args().nth(1) {
        Some(a) => a.parse()?,
        None => 0.45,
    };
    let config = EngineConfig::default();
    let engine = Engine::new(config.clone())?;
    let mut workload = generate_workload(&WorkloadSpec::default())?;

    let mut log = Vec::new();
    for request in &workload.requests {
        let chain = workload
            .chains
            .get_mut(&request.principal)
            .expect("every requester has a chain");
        let decision = engine.decide(request, &workload.policies, chain)?;
        if decision.path != DecisionPath::Fuzzy {
            continue;
        }
        // The reviewer would have granted exactly the scores above the cutoff.
        let should_grant = decision.ds.is_some_and(|d| d.value() > cutoff);
        let correct = decision.is_granted() == should_grant;
        log.push(LabeledDecision { decision, correct });
    }

    let wrong = log.iter().filter(|l| !l.correct).count();
    println!(
        "{} fuzzy decisions labeled, {wrong} judged wrong by a reviewer cutting at {cutoff}",
        log.len()
    );

    let review = review_threshold(&log, config.alpha, config.review_min_labeled)?;
    println!("{review:#?}");
    Ok(())
}

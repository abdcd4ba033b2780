//! Runs full decisions (policy stage, then the fuzzy fallback) for one
//! principal and prints each trace. Every decision lands in the chain.
//!
//! cargo run --example decide_pipeline

use std::collections::BTreeSet;

use ipbac::decision::{AccessRequest, Engine, EngineConfig};
use ipbac::policy::{Permission, PolicySet};
use ipbac::provenance::{
    ChainOptions, Event, Interaction, Outcome, PrincipalId, ProvenanceChain, RecordInput, Timestamp,
};

const HOUR: i64 = 3_600_000;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let erin = PrincipalId::new("erin")?;
    let peer = PrincipalId::new("records-office")?;
    let engine = Engine::new(EngineConfig::default())?;

    let mut policies = PolicySet::default();
    policies.add_role("clerk", [Permission::new("report/*", "read")?]);
    policies.assign(erin.clone(), "clerk")?;

    // Two weeks of mostly successful work on reports.
    let t0 = 1_700_000_000_000i64;
    let mut chain = ProvenanceChain::new(erin.clone(), ChainOptions::default());
    for i in 0..40i64 {
        let at = Timestamp::from_millis(t0 + i * 8 * HOUR);
        chain.append_record(RecordInput {
            principal: erin.clone(),
            interaction: Interaction {
                event: Event {
                    event_id: format!("erin-{i}"),
                    kind: "edit".into(),
                    initiator: erin.clone(),
                    occurred_at: at,
                },
                participants: vec![erin.clone(), peer.clone()],
                messages: vec![],
            },
            resource: format!("report/{}", i % 5),
            action: "write".into(),
            outcome: if i % 7 == 3 {
                Outcome::Failure
            } else {
                Outcome::Success
            },
            context_tags: BTreeSet::new(),
            recorded_at: at,
        })?;
    }

    let now = t0 + 40 * 8 * HOUR;
    let requests = [
        ("report/2", "read"),
        ("report/2", "write"),
        ("incident/9", "write"),
        ("asset/1", "delete"),
    ];
    for (i, (resource, action)) in requests.into_iter().enumerate() {
        let request = AccessRequest {
            principal: erin.clone(),
            resource: resource.into(),
            action: action.into(),
            context_tags: BTreeSet::new(),
            requested_at: Timestamp::from_millis(now + i as i64 * 60_000),
        };
        let decision = engine.decide(&request, &policies, &mut chain)?;
        println!(
            "{action} {resource}: {:?} via {:?}, ds {}",
            decision.outcome,
            decision.path,
            decision
                .ds
                .map_or("-".into(), |d| format!("{:.4}", d.value())),
        );
        for step in &decision.trace {
            println!("    {step:?}");
        }
    }

    let strict = Engine::new(EngineConfig {
        alpha: 0.5,
        ..EngineConfig::default()
    })?;
    let request = AccessRequest {
        principal: erin.clone(),
        resource: "incident/9".into(),
        action: "write".into(),
        context_tags: BTreeSet::new(),
        requested_at: Timestamp::from_millis(now + 10 * 60_000),
    };
    let decision = strict.decide(&request, &policies, &mut chain)?;
    println!(
        "\nwith alpha 0.5, write incident/9: {:?}, ds {:.4}",
        decision.outcome,
        decision.ds.map_or(f64::NAN, |d| d.value())
    );

    println!(
        "\nchain now holds {} records; {:?}",
        chain.len(),
        chain.verify()
    );
    let head = chain.head().expect("decisions were recorded");
    println!(
        "last record: {} {} {:?} ({})",
        head.action, head.resource, head.outcome, head.interaction.event.event_id
    );
    Ok(())
}

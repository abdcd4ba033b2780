//! Builds a principal's hash chain, verifies it and queries its history.
//!
//! cargo run --example provenance_chain

use std::collections::BTreeSet;
use std::time::Duration;

use ipbac::provenance::{
    ChainOptions, Digest32, Event, HistoryFilter, Interaction, Message, Outcome, PrincipalId,
    ProvenanceChain, RecordInput, Timestamp,
};

fn interaction(
    alice: &PrincipalId,
    peer: &PrincipalId,
    event_id: &str,
    at: Timestamp,
) -> Interaction {
    Interaction {
        event: Event {
            event_id: event_id.into(),
            kind: "ticket-update".into(),
            initiator: alice.clone(),
            occurred_at: at,
        },
        participants: vec![alice.clone(), peer.clone()],
        messages: vec![Message {
            seq: 0,
            sender: alice.clone(),
            receiver: peer.clone(),
            payload_digest: Digest32::of(event_id.as_bytes()),
        }],
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let alice = PrincipalId::new("alice")?;
    let helpdesk = PrincipalId::new("helpdesk")?;
    let mut chain = ProvenanceChain::new(alice.clone(), ChainOptions::default());

    let start = Timestamp::from_millis(1_700_000_000_000);
    let steps = [
        ("ticket/17", "read", Outcome::Success),
        ("ticket/17", "write", Outcome::Success),
        ("incident/3", "read", Outcome::Denied),
        ("ticket/18", "write", Outcome::Failure),
        ("ticket/18", "write", Outcome::Success),
    ];
    for (i, (resource, action, outcome)) in steps.into_iter().enumerate() {
        let at = Timestamp::from_millis(start.as_millis() + i as i64 * 3_600_000);
        let record = chain.append_record(RecordInput {
            principal: alice.clone(),
            interaction: interaction(&alice, &helpdesk, &format!("evt-{i}"), at),
            resource: resource.into(),
            action: action.into(),
            outcome,
            context_tags: BTreeSet::new(),
            recorded_at: at,
        })?;
        println!(
            "#{i} {resource:<11} {action:<5} {:<8} prev {}..  hash {}..",
            format!("{outcome:?}"),
            &record.prev_hash.to_hex()[..12],
            &record.record_hash.to_hex()[..12]
        );
    }

    let report = chain.verify();
    println!("\nverified: {report:?}");

    let filter = HistoryFilter {
        resource: Some("ticket/18".into()),
        outcome: Some(Outcome::Success),
        since: None,
    };
    let hits = chain.query_history(&filter);
    println!("successful interactions on ticket/18: {}", hits.len());

    let agg = chain.aggregates();
    println!("aggregates: {agg:?}");

    let later = start.saturating_add(Duration::from_secs(86_400));
    let dup = chain.append_record(RecordInput {
        principal: alice.clone(),
        interaction: interaction(&alice, &helpdesk, "evt-1", later),
        resource: "ticket/19".into(),
        action: "read".into(),
        outcome: Outcome::Success,
        context_tags: BTreeSet::new(),
        recorded_at: later,
    });
    println!("re-using evt-1: {}", dup.unwrap_err());
    Ok(())
}

//! Loads a JSON policy document and evaluates requests against it,
//! including a history predicate.
//!
//! cargo run --example policy_check

use std::collections::BTreeSet;

use ipbac::decision::AccessRequest;
use ipbac::policy::{evaluate_rbac, PolicySet};
use ipbac::provenance::{
    ChainOptions, Event, Interaction, Outcome, PrincipalId, ProvenanceChain, RecordInput, Timestamp,
};

const POLICY: &str = r#"{
  "roles": {
    "analyst": [
      { "resource": "incident/*", "action": "read" },
      { "resource": "report/*", "action": "read" },
      { "resource": "report/*", "action": "write" }
    ],
    "responder": [
      { "resource": "incident/*", "action": "write" }
    ]
  },
  "assignments": {
    "carol": ["analyst", "responder"],
    "dave": ["analyst"]
  },
  "predicates": {
    "responder": [
      { "kind": "min_successful_interactions", "n": 3, "window_secs": 86400 }
    ]
  }
}"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let policies: PolicySet = serde_json::from_str(POLICY)?;
    let carol = PrincipalId::new("carol")?;
    let dave = PrincipalId::new("dave")?;
    let peer = PrincipalId::new("soc")?;
    let now = Timestamp::from_millis(1_700_000_000_000);

    let mut history = ProvenanceChain::new(carol.clone(), ChainOptions::default());
    let check = |history: &ProvenanceChain, who: &PrincipalId, resource: &str, action: &str| {
        let request = AccessRequest {
            principal: who.clone(),
            resource: resource.into(),
            action: action.into(),
            context_tags: BTreeSet::new(),
            requested_at: now,
        };
        let decision = evaluate_rbac(&policies, &request, history);
        println!("{who:<6} {action:<6} {resource:<12} -> {decision:?}");
    };

    let dave_history = ProvenanceChain::new(dave.clone(), ChainOptions::default());
    check(&dave_history, &dave, "report/q3", "write");
    check(&dave_history, &dave, "incident/42", "write");

    println!("\ncarol with an empty history:");
    check(&history, &carol, "incident/42", "write");

    for i in 0..3i64 {
        let at = Timestamp::from_millis(now.as_millis() - (3 - i) * 3_600_000);
        history.append_record(RecordInput {
            principal: carol.clone(),
            interaction: Interaction {
                event: Event {
                    event_id: format!("carol-{i}"),
                    kind: "triage".into(),
                    initiator: carol.clone(),
                    occurred_at: at,
                },
                participants: vec![carol.clone(), peer.clone()],
                messages: vec![],
            },
            resource: format!("incident/{}", 40 + i),
            action: "read".into(),
            outcome: Outcome::Success,
            context_tags: BTreeSet::new(),
            recorded_at: at,
        })?;
    }
    println!("\ncarol after three successful interactions in the last day:");
    check(&history, &carol, "incident/42", "write");

    println!("\npermissions of carol:");
    for p in policies.permissions_for(&carol) {
        println!("  {} {}", p.action, p.resource);
    }
    Ok(())
}

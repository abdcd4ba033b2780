//! Builders shared by the integration tests.
#![allow(dead_code)]

pub mod reference;

use std::collections::BTreeSet;

use ipbac::decision::AccessRequest;
use ipbac::provenance::{
    ChainOptions, Digest32, Event, Interaction, Message, Outcome, PrincipalId, ProvenanceChain,
    RecordInput, Timestamp,
};
use rand::Rng;

pub const T0: i64 = 1_700_000_000_000;
pub const CLASSES: [&str; 4] = ["incident", "report", "asset", "ticket"];
pub const ACTIONS: [&str; 4] = ["read", "write", "execute", "delete"];

pub fn pid(s: &str) -> PrincipalId {
    PrincipalId::new(s).unwrap()
}

pub fn input(
    principal: &str,
    event_id: &str,
    at: i64,
    resource: &str,
    action: &str,
    outcome: Outcome,
) -> RecordInput {
    let p = pid(principal);
    let peer = pid("svc");
    RecordInput {
        principal: p.clone(),
        interaction: Interaction {
            event: Event {
                event_id: event_id.into(),
                kind: "test".into(),
                initiator: p.clone(),
                occurred_at: Timestamp::from_millis(at),
            },
            participants: vec![p.clone(), peer.clone()],
            messages: vec![Message {
                seq: 0,
                sender: p,
                receiver: peer,
                payload_digest: Digest32::of(event_id.as_bytes()),
            }],
        },
        resource: resource.into(),
        action: action.into(),
        outcome,
        context_tags: BTreeSet::new(),
        recorded_at: Timestamp::from_millis(at),
    }
}

pub fn request(principal: &str, resource: &str, action: &str, at: i64) -> AccessRequest {
    AccessRequest {
        principal: pid(principal),
        resource: resource.into(),
        action: action.into(),
        context_tags: BTreeSet::new(),
        requested_at: Timestamp::from_millis(at),
    }
}

pub fn random_outcome(rng: &mut impl Rng) -> Outcome {
    match rng.random_range(0..10) {
        0..=5 => Outcome::Success,
        6..=7 => Outcome::Failure,
        _ => Outcome::Denied,
    }
}

/// `len` records spread over irregular gaps (zero gaps included) ending no
/// later than `T0 + len * 6h`. Returns the chain and its last timestamp.
pub fn random_chain(rng: &mut impl Rng, principal: &str, len: usize) -> (ProvenanceChain, i64) {
    let mut chain = ProvenanceChain::new(pid(principal), ChainOptions::default());
    let mut at = T0;
    for i in 0..len {
        at += match rng.random_range(0..4) {
            0 => 0,
            1 => rng.random_range(1..1_000),
            2 => rng.random_range(1_000..3_600_000),
            _ => rng.random_range(3_600_000..6 * 3_600_000),
        };
        let class = CLASSES[rng.random_range(0..CLASSES.len())];
        let resource = format!("{class}/{}", rng.random_range(0..20));
        let action = ACTIONS[rng.random_range(0..ACTIONS.len())];
        let outcome = random_outcome(rng);
        chain
            .append_record(input(
                principal,
                &format!("{principal}-{i}"),
                at,
                &resource,
                action,
                outcome,
            ))
            .unwrap();
    }
    (chain, at)
}

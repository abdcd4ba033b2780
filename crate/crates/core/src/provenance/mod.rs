//! Tamper-evident, append-only interaction history, one hash chain per
//! principal.

mod chain;
pub mod codec;
mod record;
pub mod store;

use thiserror::Error;

pub use chain::{verify_records, ChainOptions, HistoryFilter, ProvenanceChain, VerificationReport};
pub use codec::{deserialize_record, serialize_record, DecodeError};
pub(crate) use record::duration_millis;
pub use record::{
    Digest32, Event, Interaction, InvalidInteraction, InvalidPrincipal, Message, Outcome,
    PrincipalId, ProvenanceRecord, RecordInput, Timestamp, MAX_PRINCIPAL_LEN,
};
pub use store::{verify_chain_file, ChainAccess, ChainStore, ChainWriter};

#[derive(Debug, Error)]
pub enum ProvenanceError {
    #[error("record for {record} cannot be appended to the chain of {chain}")]
    PrincipalMismatch {
        chain: PrincipalId,
        record: PrincipalId,
    },
    #[error(
        "timestamp {attempted:?} is behind chain head {head:?} by more than the skew tolerance"
    )]
    ChronologyViolation {
        head: Timestamp,
        attempted: Timestamp,
    },
    #[error("event occurred at {occurred_at:?}, after the record time {recorded_at:?}")]
    EventInFuture {
        occurred_at: Timestamp,
        recorded_at: Timestamp,
    },
    #[error("event id {0:?} already recorded")]
    DuplicateEvent(String),
    #[error(transparent)]
    InvalidInteraction(#[from] InvalidInteraction),
    #[error("chain of {principal} is damaged at record {index}")]
    Corrupt { principal: PrincipalId, index: u64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[cfg(test)]
pub(crate) mod testing {
    use super::*;

    pub fn input(principal: &str, event: &str, at: i64, outcome: Outcome) -> RecordInput {
        let p = PrincipalId::new(principal).unwrap();
        let svc = PrincipalId::new("svc").unwrap();
        RecordInput {
            principal: p.clone(),
            interaction: Interaction {
                event: Event {
                    event_id: event.into(),
                    kind: "test".into(),
                    initiator: p.clone(),
                    occurred_at: Timestamp::from_millis(at),
                },
                participants: vec![p.clone(), svc.clone()],
                messages: vec![Message {
                    seq: 0,
                    sender: p,
                    receiver: svc,
                    payload_digest: Digest32::of(event.as_bytes()),
                }],
            },
            resource: "incident/1".into(),
            action: "read".into(),
            outcome,
            context_tags: Default::default(),
            recorded_at: Timestamp::from_millis(at),
        }
    }
}

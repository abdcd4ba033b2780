use std::collections::BTreeSet;
use std::fmt;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Maximum length of a principal identifier, in bytes.
pub const MAX_PRINCIPAL_LEN: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InvalidPrincipal {
    #[error("principal id must not be empty")]
    Empty,
    #[error("principal id is {0} bytes, limit is {MAX_PRINCIPAL_LEN}")]
    TooLong(usize),
}

/// Opaque identifier of a party that sent or received a message, or
/// initiated an action.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PrincipalId(String);

impl PrincipalId {
    pub fn new(id: impl Into<String>) -> Result<Self, InvalidPrincipal> {
        let id = id.into();
        if id.is_empty() {
            return Err(InvalidPrincipal::Empty);
        }
        if id.len() > MAX_PRINCIPAL_LEN {
            return Err(InvalidPrincipal::TooLong(id.len()));
        }
        Ok(Self(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for PrincipalId {
    type Error = InvalidPrincipal;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<PrincipalId> for String {
    fn from(value: PrincipalId) -> Self {
        value.0
    }
}

impl fmt::Display for PrincipalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// UTC instant with millisecond resolution, stored as milliseconds since the
/// Unix epoch.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Timestamp(i64);

impl Timestamp {
    pub const fn from_millis(ms: i64) -> Self {
        Self(ms)
    }

    pub fn now() -> Self {
        let since = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .unwrap_or_default();
        Self(since.as_millis() as i64)
    }

    pub const fn as_millis(self) -> i64 {
        self.0
    }

    pub fn saturating_add(self, d: Duration) -> Self {
        Self(self.0.saturating_add(duration_millis(d)))
    }

    pub fn saturating_sub(self, d: Duration) -> Self {
        Self(self.0.saturating_sub(duration_millis(d)))
    }

    /// Milliseconds from `earlier` to `self`; negative if `self` is earlier.
    pub fn millis_since(self, earlier: Timestamp) -> i64 {
        self.0.saturating_sub(earlier.0)
    }
}

pub(crate) fn duration_millis(d: Duration) -> i64 {
    i64::try_from(d.as_millis()).unwrap_or(i64::MAX)
}

/// A 32-byte SHA-256 digest. Serialized as lowercase hex in JSON.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Digest32(pub [u8; 32]);

impl Digest32 {
    pub const ZERO: Digest32 = Digest32([0u8; 32]);

    pub fn of(bytes: &[u8]) -> Self {
        use sha2::{Digest, Sha256};
        Self(Sha256::digest(bytes).into())
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    /// Parses exactly 64 lowercase hex characters.
    pub fn from_hex(s: &str) -> Option<Self> {
        if s.len() != 64 || !s.bytes().all(is_lower_hex) {
            return None;
        }
        let mut out = [0u8; 32];
        hex::decode_to_slice(s, &mut out).ok()?;
        Some(Self(out))
    }
}

pub(crate) fn is_lower_hex(b: u8) -> bool {
    b.is_ascii_digit() || (b'a'..=b'f').contains(&b)
}

impl fmt::Debug for Digest32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest32({})", self.to_hex())
    }
}

impl fmt::Display for Digest32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for Digest32 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Digest32 {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Digest32::from_hex(&s)
            .ok_or_else(|| serde::de::Error::custom("expected 64 lowercase hex characters"))
    }
}

/// A documented past execution of a protocol or service, initiated by a
/// principal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub event_id: String,
    /// Protocol or service name.
    pub kind: String,
    pub initiator: PrincipalId,
    pub occurred_at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub seq: u64,
    pub sender: PrincipalId,
    pub receiver: PrincipalId,
    /// Digest of the payload. Payloads themselves are never stored.
    pub payload_digest: Digest32,
}

/// Ordered exchange of messages between two or more principals for one event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interaction {
    pub event: Event,
    pub participants: Vec<PrincipalId>,
    pub messages: Vec<Message>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InvalidInteraction {
    #[error("an interaction needs at least two participants, got {0}")]
    TooFewParticipants(usize),
    #[error("message {seq}: {who} is not a participant")]
    NotAParticipant { seq: u64, who: PrincipalId },
    #[error("message at position {position} has seq {seq}")]
    SequenceGap { position: usize, seq: u64 },
    #[error("event id must not be empty")]
    EmptyEventId,
}

impl Interaction {
    pub fn validate(&self) -> Result<(), InvalidInteraction> {
        if self.event.event_id.is_empty() {
            return Err(InvalidInteraction::EmptyEventId);
        }
        if self.participants.len() < 2 {
            return Err(InvalidInteraction::TooFewParticipants(
                self.participants.len(),
            ));
        }
        for (position, msg) in self.messages.iter().enumerate() {
            if msg.seq != position as u64 {
                return Err(InvalidInteraction::SequenceGap {
                    position,
                    seq: msg.seq,
                });
            }
            for who in [&msg.sender, &msg.receiver] {
                if !self.participants.contains(who) {
                    return Err(InvalidInteraction::NotAParticipant {
                        seq: msg.seq,
                        who: who.clone(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// What happened to the interaction. `Denied` is reserved for requests the
/// engine refused; `Failure` means the interaction ran and failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    Failure,
    Denied,
}

impl Outcome {
    pub(crate) fn tag(self) -> u8 {
        match self {
            Outcome::Success => 0,
            Outcome::Failure => 1,
            Outcome::Denied => 2,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Outcome::Success),
            1 => Some(Outcome::Failure),
            2 => Some(Outcome::Denied),
            _ => None,
        }
    }
}

/// Everything a caller supplies when appending; hashes are filled in by the
/// chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordInput {
    pub principal: PrincipalId,
    pub interaction: Interaction,
    pub resource: String,
    pub action: String,
    pub outcome: Outcome,
    #[serde(default)]
    pub context_tags: BTreeSet<String>,
    pub recorded_at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenanceRecord {
    pub principal: PrincipalId,
    pub interaction: Interaction,
    pub resource: String,
    pub action: String,
    pub outcome: Outcome,
    pub context_tags: BTreeSet<String>,
    pub recorded_at: Timestamp,
    pub prev_hash: Digest32,
    pub record_hash: Digest32,
}

impl ProvenanceRecord {
    /// Completes `input` into a record linked to `prev_hash`.
    pub fn seal(input: RecordInput, prev_hash: Digest32) -> Self {
        let mut record = ProvenanceRecord {
            principal: input.principal,
            interaction: input.interaction,
            resource: input.resource,
            action: input.action,
            outcome: input.outcome,
            context_tags: input.context_tags,
            recorded_at: input.recorded_at,
            prev_hash,
            record_hash: Digest32::ZERO,
        };
        record.record_hash = record.compute_hash();
        record
    }

    pub fn compute_hash(&self) -> Digest32 {
        Digest32::of(&super::codec::serialize_record(self))
    }
}

//! Canonical byte encoding of provenance records.
//!
//! Fields are written in declaration order, `record_hash` excluded:
//!
//! ```text
//! principal            str
//! event_id, kind       str, str
//! initiator            str
//! occurred_at          i64
//! participants         u32 count, str*
//! messages             u32 count, (u64 seq, str sender, str receiver, [u8; 32] digest)*
//! resource, action     str, str
//! outcome              u8 (0 success, 1 failure, 2 denied)
//! context_tags         u32 count, str* (sorted bytewise)
//! recorded_at          i64
//! prev_hash            [u8; 32]
//! ```
//!
//! `str` is a u32 byte length followed by UTF-8 bytes. All integers are
//! big-endian; timestamps are milliseconds since the Unix epoch.

use std::collections::BTreeSet;

use thiserror::Error;

use super::record::{
    Digest32, Event, Interaction, Message, Outcome, PrincipalId, ProvenanceRecord, Timestamp,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("record truncated at byte {0}")]
    Truncated(usize),
    #[error("invalid utf-8 in string at byte {0}")]
    Utf8(usize),
    #[error("invalid principal id at byte {0}")]
    Principal(usize),
    #[error("unknown outcome tag {0}")]
    Outcome(u8),
    #[error("context tags not strictly sorted")]
    UnsortedTags,
    #[error("{0} trailing bytes after record")]
    Trailing(usize),
}

pub fn serialize_record(record: &ProvenanceRecord) -> Vec<u8> {
    let mut out = Vec::with_capacity(256);
    put_str(&mut out, record.principal.as_str());
    let ix = &record.interaction;
    put_str(&mut out, &ix.event.event_id);
    put_str(&mut out, &ix.event.kind);
    put_str(&mut out, ix.event.initiator.as_str());
    out.extend_from_slice(&ix.event.occurred_at.as_millis().to_be_bytes());
    put_len(&mut out, ix.participants.len());
    for p in &ix.participants {
        put_str(&mut out, p.as_str());
    }
    put_len(&mut out, ix.messages.len());
    for m in &ix.messages {
        out.extend_from_slice(&m.seq.to_be_bytes());
        put_str(&mut out, m.sender.as_str());
        put_str(&mut out, m.receiver.as_str());
        out.extend_from_slice(&m.payload_digest.0);
    }
    put_str(&mut out, &record.resource);
    put_str(&mut out, &record.action);
    out.push(record.outcome.tag());
    // BTreeSet<String> iterates in bytewise order already.
    put_len(&mut out, record.context_tags.len());
    for tag in &record.context_tags {
        put_str(&mut out, tag);
    }
    out.extend_from_slice(&record.recorded_at.as_millis().to_be_bytes());
    out.extend_from_slice(&record.prev_hash.0);
    out
}

/// Decodes bytes produced by [`serialize_record`]. The returned record
/// carries `record_hash` = SHA-256 of `bytes`.
pub fn deserialize_record(bytes: &[u8]) -> Result<ProvenanceRecord, DecodeError> {
    let mut r = Reader { bytes, pos: 0 };
    let principal = r.principal()?;
    let event = Event {
        event_id: r.string()?,
        kind: r.string()?,
        initiator: r.principal()?,
        occurred_at: Timestamp::from_millis(r.i64()?),
    };
    let n = r.u32()? as usize;
    let mut participants = Vec::with_capacity(n.min(64));
    for _ in 0..n {
        participants.push(r.principal()?);
    }
    let n = r.u32()? as usize;
    let mut messages = Vec::with_capacity(n.min(64));
    for _ in 0..n {
        messages.push(Message {
            seq: r.u64()?,
            sender: r.principal()?,
            receiver: r.principal()?,
            payload_digest: Digest32(r.array()?),
        });
    }
    let resource = r.string()?;
    let action = r.string()?;
    let tag = r.u8()?;
    let outcome = Outcome::from_tag(tag).ok_or(DecodeError::Outcome(tag))?;
    let n = r.u32()? as usize;
    let mut tags = Vec::with_capacity(n.min(64));
    for _ in 0..n {
        tags.push(r.string()?);
    }
    if tags.windows(2).any(|w| w[0] >= w[1]) {
        return Err(DecodeError::UnsortedTags);
    }
    let recorded_at = Timestamp::from_millis(r.i64()?);
    let prev_hash = Digest32(r.array()?);
    if r.pos != bytes.len() {
        return Err(DecodeError::Trailing(bytes.len() - r.pos));
    }
    Ok(ProvenanceRecord {
        principal,
        interaction: Interaction {
            event,
            participants,
            messages,
        },
        resource,
        action,
        outcome,
        context_tags: tags.into_iter().collect::<BTreeSet<_>>(),
        recorded_at,
        prev_hash,
        record_hash: Digest32::of(bytes),
    })
}

fn put_len(out: &mut Vec<u8>, n: usize) {
    let n = u32::try_from(n).expect("field longer than u32::MAX");
    out.extend_from_slice(&n.to_be_bytes());
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    put_len(out, s.len());
    out.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], DecodeError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or(DecodeError::Truncated(self.pos))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], DecodeError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u8(&mut self) -> Result<u8, DecodeError> {
        Ok(self.array::<1>()?[0])
    }

    fn u32(&mut self) -> Result<u32, DecodeError> {
        Ok(u32::from_be_bytes(self.array()?))
    }

    fn u64(&mut self) -> Result<u64, DecodeError> {
        Ok(u64::from_be_bytes(self.array()?))
    }

    fn i64(&mut self) -> Result<i64, DecodeError> {
        Ok(i64::from_be_bytes(self.array()?))
    }

    fn string(&mut self) -> Result<String, DecodeError> {
        let n = self.u32()? as usize;
        let at = self.pos;
        let raw = self.take(n)?;
        String::from_utf8(raw.to_vec()).map_err(|_| DecodeError::Utf8(at))
    }

    fn principal(&mut self) -> Result<PrincipalId, DecodeError> {
        let at = self.pos;
        PrincipalId::new(self.string()?).map_err(|_| DecodeError::Principal(at))
    }
}

use std::collections::BTreeSet;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::record::{Digest32, Outcome, PrincipalId, ProvenanceRecord, RecordInput, Timestamp};
use super::ProvenanceError;
use crate::fuzzy::IncrementalAggregates;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainOptions {
    /// How far a timestamp may run behind the chain head (or an event may run
    /// ahead of its record) before the append is refused.
    pub clock_skew: Duration,
    /// Decay half-life of the relevance aggregates.
    pub half_life: Duration,
}

impl Default for ChainOptions {
    fn default() -> Self {
        Self {
            clock_skew: Duration::from_secs(5),
            half_life: Duration::from_secs(30 * 24 * 3600),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub valid: bool,
    pub first_bad_index: Option<u64>,
}

impl VerificationReport {
    pub const VALID: VerificationReport = VerificationReport {
        valid: true,
        first_bad_index: None,
    };

    pub fn bad_at(index: usize) -> Self {
        Self {
            valid: false,
            first_bad_index: Some(index as u64),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryFilter {
    pub since: Option<Timestamp>,
    pub resource: Option<String>,
    pub outcome: Option<Outcome>,
}

impl HistoryFilter {
    pub fn matches(&self, r: &ProvenanceRecord) -> bool {
        self.since.is_none_or(|t| r.recorded_at >= t)
            && self.resource.as_ref().is_none_or(|res| &r.resource == res)
            && self.outcome.is_none_or(|o| r.outcome == o)
    }
}

/// Hash-linked, chronologically ordered interaction history of one principal.
#[derive(Debug)]
pub struct ProvenanceChain {
    principal: PrincipalId,
    records: Vec<ProvenanceRecord>,
    aggregates: IncrementalAggregates,
    event_ids: BTreeSet<String>,
    options: ChainOptions,
}

// Copies keep the original's spare capacity, so the first append to a
// snapshot does not reallocate the whole history.
impl Clone for ProvenanceChain {
    fn clone(&self) -> Self {
        let mut records = Vec::with_capacity(self.records.capacity());
        records.extend(self.records.iter().cloned());
        Self {
            principal: self.principal.clone(),
            records,
            aggregates: self.aggregates.clone(),
            event_ids: self.event_ids.clone(),
            options: self.options,
        }
    }
}

impl ProvenanceChain {
    pub fn new(principal: PrincipalId, options: ChainOptions) -> Self {
        Self {
            principal,
            records: Vec::new(),
            aggregates: IncrementalAggregates::new(options.half_life),
            event_ids: BTreeSet::new(),
            options,
        }
    }

    /// Rebuilds a chain from already-sealed records (e.g. read from disk)
    /// after checking them with [`verify_records`].
    pub fn from_records(
        principal: PrincipalId,
        records: Vec<ProvenanceRecord>,
        options: ChainOptions,
    ) -> Result<Self, (VerificationReport, Vec<ProvenanceRecord>)> {
        let report = verify_records(&records);
        if !report.valid || records.iter().any(|r| r.principal != principal) {
            let report = if report.valid {
                let i = records.iter().position(|r| r.principal != principal);
                VerificationReport::bad_at(i.unwrap_or(0))
            } else {
                report
            };
            return Err((report, records));
        }
        let aggregates = IncrementalAggregates::from_records(options.half_life, &records);
        let event_ids = records
            .iter()
            .map(|r| r.interaction.event.event_id.clone())
            .collect();
        Ok(Self {
            principal,
            records,
            aggregates,
            event_ids,
            options,
        })
    }

    pub fn principal(&self) -> &PrincipalId {
        &self.principal
    }

    pub fn records(&self) -> &[ProvenanceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn head(&self) -> Option<&ProvenanceRecord> {
        self.records.last()
    }

    pub fn head_hash(&self) -> Digest32 {
        self.head().map_or(Digest32::ZERO, |r| r.record_hash)
    }

    pub fn aggregates(&self) -> &IncrementalAggregates {
        &self.aggregates
    }

    pub fn options(&self) -> ChainOptions {
        self.options
    }

    pub fn contains_event(&self, event_id: &str) -> bool {
        self.event_ids.contains(event_id)
    }

    /// Switches the relevance half-life, recomputing the aggregates.
    pub fn set_half_life(&mut self, half_life: Duration) {
        if self.options.half_life != half_life {
            self.options.half_life = half_life;
            self.aggregates = IncrementalAggregates::from_records(half_life, &self.records);
        }
    }

    /// Checks `input` against the chain without modifying it and returns the
    /// record that appending it would produce.
    ///
    /// A timestamp that runs behind the head by no more than the clock-skew
    /// tolerance is raised to the head's timestamp.
    pub fn prepare(&self, mut input: RecordInput) -> Result<ProvenanceRecord, ProvenanceError> {
        if input.principal != self.principal {
            return Err(ProvenanceError::PrincipalMismatch {
                chain: self.principal.clone(),
                record: input.principal,
            });
        }
        input.interaction.validate()?;
        let skew = self.options.clock_skew;
        if let Some(head) = self.head() {
            if input.recorded_at < head.recorded_at {
                if input.recorded_at < head.recorded_at.saturating_sub(skew) {
                    return Err(ProvenanceError::ChronologyViolation {
                        head: head.recorded_at,
                        attempted: input.recorded_at,
                    });
                }
                input.recorded_at = head.recorded_at;
            }
        }
        let occurred = input.interaction.event.occurred_at;
        if occurred > input.recorded_at.saturating_add(skew) {
            return Err(ProvenanceError::EventInFuture {
                occurred_at: occurred,
                recorded_at: input.recorded_at,
            });
        }
        if self.contains_event(&input.interaction.event.event_id) {
            return Err(ProvenanceError::DuplicateEvent(
                input.interaction.event.event_id,
            ));
        }
        Ok(ProvenanceRecord::seal(input, self.head_hash()))
    }

    /// Pushes a record produced by [`prepare`](Self::prepare) on this chain
    /// with no append in between.
    pub(crate) fn commit(&mut self, record: ProvenanceRecord) {
        debug_assert_eq!(record.prev_hash, self.head_hash());
        self.aggregates.observe(&record);
        self.event_ids
            .insert(record.interaction.event.event_id.clone());
        self.records.push(record);
    }

    pub fn append_record(
        &mut self,
        input: RecordInput,
    ) -> Result<ProvenanceRecord, ProvenanceError> {
        let record = self.prepare(input)?;
        self.commit(record.clone());
        Ok(record)
    }

    pub fn verify(&self) -> VerificationReport {
        verify_records(&self.records)
    }

    pub fn query_history(&self, filter: &HistoryFilter) -> Vec<&ProvenanceRecord> {
        let start = match filter.since {
            Some(t) => self.records.partition_point(|r| r.recorded_at < t),
            None => 0,
        };
        self.records[start..]
            .iter()
            .filter(|r| filter.matches(r))
            .collect()
    }

    /// Number of records with `outcome` whose timestamp lies in
    /// `(at - window, at]`.
    pub fn count_in_window(&self, outcome: Outcome, at: Timestamp, window: Duration) -> usize {
        let from = at.saturating_sub(window);
        self.records
            .iter()
            .rev()
            .skip_while(|r| r.recorded_at > at)
            .take_while(|r| r.recorded_at > from)
            .filter(|r| r.outcome == outcome)
            .count()
    }
}

/// Checks hashes, links and timestamp order; reports the lowest bad index.
pub fn verify_records(records: &[ProvenanceRecord]) -> VerificationReport {
    let mut prev_hash = Digest32::ZERO;
    let mut prev_time: Option<Timestamp> = None;
    for (i, r) in records.iter().enumerate() {
        if r.prev_hash != prev_hash
            || r.record_hash != r.compute_hash()
            || prev_time.is_some_and(|t| r.recorded_at < t)
        {
            return VerificationReport::bad_at(i);
        }
        prev_hash = r.record_hash;
        prev_time = Some(r.recorded_at);
    }
    VerificationReport::VALID
}

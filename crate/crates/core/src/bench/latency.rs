use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::decision::{AccessRequest, Engine};
use crate::policy::PolicySet;
use crate::provenance::{
    ChainOptions, Digest32, Event, Interaction, Message, Outcome, PrincipalId, ProvenanceChain,
    RecordInput, Timestamp,
};

/// Requests before the latency series counts as settled.
pub const WARMUP_REQUESTS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencySummary {
    pub count: usize,
    pub median_us: f64,
    pub p99_us: f64,
    pub mean_us: f64,
    pub warmup: usize,
    /// Mean over requests after the warmup.
    pub settled_mean_us: f64,
    /// Coefficient of variation (population standard deviation over mean)
    /// after the warmup; NaN with no samples past it.
    pub settled_cv: f64,
}

impl LatencySummary {
    pub fn from_series(micros: &[f64]) -> Self {
        let settled = micros.get(WARMUP_REQUESTS..).unwrap_or(&[]);
        let (settled_mean_us, sd) = mean_sd(settled);
        Self {
            count: micros.len(),
            median_us: median(micros),
            p99_us: percentile(micros, 0.99),
            mean_us: mean_sd(micros).0,
            warmup: WARMUP_REQUESTS.min(micros.len()),
            settled_mean_us,
            settled_cv: sd / settled_mean_us,
        }
    }
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len().is_multiple_of(2) {
        (v[mid - 1] + v[mid]) / 2.0
    } else {
        v[mid]
    }
}

/// Nearest-rank percentile, `q` in `(0, 1]`.
pub fn percentile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = (q * v.len() as f64).ceil() as usize;
    v[rank.clamp(1, v.len()) - 1]
}

/// A chain of `length` mixed-outcome records ending at `end`.
pub fn synthetic_chain(principal: &PrincipalId, length: usize, end: Timestamp) -> ProvenanceChain {
    let mut chain = ProvenanceChain::new(principal.clone(), ChainOptions::default());
    let peer = PrincipalId::new("svc-synthetic").expect("valid id");
    let start = end.saturating_sub(Duration::from_secs(length as u64));
    for i in 0..length {
        let at = start.saturating_add(Duration::from_secs(i as u64));
        let outcome = match i % 5 {
            0 => Outcome::Failure,
            3 => Outcome::Denied,
            _ => Outcome::Success,
        };
        let input = RecordInput {
            principal: principal.clone(),
            interaction: Interaction {
                event: Event {
                    event_id: format!("synthetic:{principal}:{i}"),
                    kind: "interaction".into(),
                    initiator: principal.clone(),
                    occurred_at: at,
                },
                participants: vec![principal.clone(), peer.clone()],
                messages: vec![Message {
                    seq: 0,
                    sender: principal.clone(),
                    receiver: peer.clone(),
                    payload_digest: Digest32::of(&(i as u64).to_be_bytes()),
                }],
            },
            resource: format!("{}/{}", ["incident", "report", "asset"][i % 3], i % 17),
            action: "read".into(),
            outcome,
            context_tags: BTreeSet::new(),
            recorded_at: at,
        };
        chain
            .append_record(input)
            .expect("synthetic history is well-formed");
    }
    chain
}

/// Times `samples` consecutive fuzzy-path decisions for one principal whose
/// chain starts at `length` records.
pub fn latency_at_chain_length(
    engine: &Engine,
    length: usize,
    samples: usize,
) -> Result<Vec<f64>, BenchError> {
    let principal = PrincipalId::new("scaling-probe").expect("valid id");
    let end = Timestamp::from_millis(1_700_000_000_000);
    let mut chain = synthetic_chain(&principal, length, end);
    let policies = PolicySet::default();
    let mut out = Vec::with_capacity(samples);
    for i in 0..samples {
        let request = AccessRequest {
            principal: principal.clone(),
            resource: format!("incident/{}", i % 17),
            action: "write".into(),
            context_tags: BTreeSet::new(),
            requested_at: end.saturating_add(Duration::from_secs(i as u64 + 1)),
        };
        let started = Instant::now();
        engine.decide(&request, &policies, &mut chain)?;
        out.push(started.elapsed().as_secs_f64() * 1e6);
    }
    Ok(out)
}

/// Sends each request to a running service's decide endpoint in turn and
/// times the round trip.
pub fn measure_over_wire(
    base_url: &str,
    requests: &[AccessRequest],
) -> Result<Vec<f64>, BenchError> {
    let client = reqwest::blocking::Client::new();
    let url = format!("{}/v1/decide", base_url.trim_end_matches('/'));
    let mut out = Vec::with_capacity(requests.len());
    for request in requests {
        let started = Instant::now();
        let response = client
            .post(&url)
            .json(request)
            .send()
            .map_err(|e| BenchError::Wire(e.to_string()))?;
        if !response.status().is_success() {
            return Err(BenchError::Wire(format!("status {}", response.status())));
        }
        response
            .bytes()
            .map_err(|e| BenchError::Wire(e.to_string()))?;
        out.push(started.elapsed().as_secs_f64() * 1e6);
    }
    Ok(out)
}

use std::collections::{BTreeMap, BTreeSet};
use std::time::Duration;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::decision::{AccessRequest, DELETE, EXECUTE, READ, WRITE};
use crate::policy::{Permission, PolicySet};
use crate::provenance::{
    ChainOptions, Digest32, Event, Interaction, Message, Outcome, PrincipalId, ProvenanceChain,
    RecordInput, Timestamp,
};

pub const ACTIONS: [&str; 4] = [READ, WRITE, EXECUTE, DELETE];
const CLASS_NAMES: [&str; 8] = [
    "incident", "report", "asset", "ticket", "config", "audit", "billing", "network",
];
const HISTORY_SPAN: Duration = Duration::from_secs(90 * 24 * 3600);

/// Shape of a synthetic workload. Every principal gets one role per
/// resource class it belongs to; a role grants every action on its class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadSpec {
    pub seed: u64,
    pub num_principals: usize,
    pub num_resources: usize,
    pub num_classes: usize,
    /// Chance of each extra class role beyond the one every principal has.
    pub role_density: f64,
    /// Share of requests aimed at classes the requester holds no role for.
    pub out_of_role_fraction: f64,
    /// Records pre-seeded into every principal's chain.
    pub history_length: usize,
    /// Share of pre-seeded records that succeeded; the rest split between
    /// failures and denials.
    pub history_success_rate: f64,
    /// Share of pre-seeded records that touch a class outside the
    /// principal's roles.
    pub cross_class_fraction: f64,
    /// Zipf exponent of the requester distribution; 0 is uniform.
    pub requester_skew: f64,
    pub request_interval_secs: u64,
    /// Time of the first request; history precedes it.
    pub start: Timestamp,
    /// Request counts at which grants are tallied; the last is the stream
    /// length.
    pub checkpoints: Vec<usize>,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        Self {
            seed: 2645,
            num_principals: 750,
            num_resources: 120,
            num_classes: 6,
            role_density: 0.15,
            out_of_role_fraction: 0.5,
            history_length: 20,
            history_success_rate: 0.3,
            cross_class_fraction: 0.0,
            requester_skew: 1.0,
            request_interval_secs: 60,
            start: Timestamp::from_millis(1_700_000_000_000),
            checkpoints: vec![10, 50, 100, 200, 500],
        }
    }
}

impl WorkloadSpec {
    pub fn validate(&self) -> Result<(), BenchError> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        let fail = |m: &str| Err(BenchError::InvalidSpec(m.into()));
        if self.num_principals == 0 || self.num_resources == 0 || self.num_classes == 0 {
            return fail("principal, resource and class counts must be positive");
        }
        if self.num_resources < self.num_classes {
            return fail("need at least one resource per class");
        }
        for (name, v) in [
            ("role_density", self.role_density),
            ("out_of_role_fraction", self.out_of_role_fraction),
            ("history_success_rate", self.history_success_rate),
            ("cross_class_fraction", self.cross_class_fraction),
        ] {
            if !unit(v) {
                return Err(BenchError::InvalidSpec(format!("{name} must be in [0, 1]")));
            }
        }
        if !(self.requester_skew >= 0.0 && self.requester_skew.is_finite()) {
            return fail("requester_skew must be non-negative");
        }
        if self.checkpoints.is_empty() || self.checkpoints[0] == 0 {
            return fail("checkpoints must be non-empty and positive");
        }
        if self.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return fail("checkpoints must be strictly increasing");
        }
        if self.out_of_role_fraction > 0.0 && self.num_classes < 2 {
            return fail("out-of-role requests need at least two classes");
        }
        Ok(())
    }

    pub fn num_requests(&self) -> usize {
        self.checkpoints.last().copied().unwrap_or(0)
    }
}

/// Policies, request stream and initial chains generated from one spec.
#[derive(Debug, Clone)]
pub struct Workload {
    pub spec: WorkloadSpec,
    pub policies: PolicySet,
    pub requests: Vec<AccessRequest>,
    pub chains: BTreeMap<PrincipalId, ProvenanceChain>,
    /// Records across all pre-seeded chains.
    pub seeded_records: u64,
}

pub fn class_names(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| match CLASS_NAMES.get(i) {
            Some(name) => (*name).to_owned(),
            None => format!("class{i}"),
        })
        .collect()
}

fn role_name(class: &str) -> String {
    format!("{class}-team")
}

/// Deterministic in `spec` (including the seed).
pub fn generate_workload(spec: &WorkloadSpec) -> Result<Workload, BenchError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let classes = class_names(spec.num_classes);
    let resources: Vec<Vec<String>> = (0..spec.num_classes)
        .map(|c| {
            (c..spec.num_resources)
                .step_by(spec.num_classes)
                .map(|i| format!("{}/{i}", classes[c]))
                .collect()
        })
        .collect();

    let mut policies = PolicySet::default();
    for class in &classes {
        let perms = ACTIONS
            .iter()
            .map(|a| Permission::new(format!("{class}/*"), *a).expect("valid pattern"));
        policies.add_role(role_name(class), perms);
    }

    let principals: Vec<PrincipalId> = (0..spec.num_principals)
        .map(|i| PrincipalId::new(format!("user-{i:04}")).expect("valid id"))
        .collect();
    let mut memberships: Vec<BTreeSet<usize>> = Vec::with_capacity(principals.len());
    for p in &principals {
        let mut set = BTreeSet::from([rng.random_range(0..spec.num_classes)]);
        for c in 0..spec.num_classes {
            if rng.random_bool(spec.role_density) {
                set.insert(c);
            }
        }
        for &c in &set {
            policies
                .assign(p.clone(), role_name(&classes[c]))
                .expect("role exists");
        }
        memberships.push(set);
    }
    let outside = |set: &BTreeSet<usize>| -> Vec<usize> {
        (0..spec.num_classes).filter(|c| !set.contains(c)).collect()
    };

    let options = ChainOptions::default();
    let mut chains = BTreeMap::new();
    let history_start = spec.start.saturating_sub(HISTORY_SPAN);
    let slot = HISTORY_SPAN.as_millis() as i64 / spec.history_length.max(1) as i64;
    for (pi, p) in principals.iter().enumerate() {
        let mut chain = ProvenanceChain::new(p.clone(), options);
        let own: Vec<usize> = memberships[pi].iter().copied().collect();
        let other = outside(&memberships[pi]);
        for j in 0..spec.history_length {
            let class = if !other.is_empty() && rng.random_bool(spec.cross_class_fraction) {
                *other.choose(&mut rng).expect("non-empty")
            } else {
                *own.choose(&mut rng).expect("every principal has a role")
            };
            let resource = resources[class]
                .choose(&mut rng)
                .expect("non-empty")
                .clone();
            let action = *ACTIONS.choose(&mut rng).expect("non-empty");
            let outcome = if rng.random_bool(spec.history_success_rate) {
                Outcome::Success
            } else if rng.random_bool(0.5) {
                Outcome::Failure
            } else {
                Outcome::Denied
            };
            let at = Timestamp::from_millis(
                history_start.as_millis() + j as i64 * slot + rng.random_range(0..slot.max(1)),
            );
            let input = seeded_record(p, &classes[class], j, resource, action, outcome, at);
            chain
                .append_record(input)
                .expect("generated history is well-formed");
        }
        chains.insert(p.clone(), chain);
    }
    let seeded_records = chains.values().map(|c| c.len() as u64).sum();

    // Requester popularity is Zipf-distributed over a shuffled ranking.
    let mut ranking: Vec<usize> = (0..principals.len()).collect();
    ranking.shuffle(&mut rng);
    let weights: Vec<f64> = (1..=principals.len())
        .map(|rank| (rank as f64).powf(-spec.requester_skew))
        .collect();
    let popularity = WeightedIndex::new(&weights).expect("positive weights");

    let mut requests = Vec::with_capacity(spec.num_requests());
    for i in 0..spec.num_requests() {
        let out_of_role = rng.random_bool(spec.out_of_role_fraction);
        let (pi, class) = loop {
            let pi = ranking[popularity.sample(&mut rng)];
            let candidates: Vec<usize> = if out_of_role {
                outside(&memberships[pi])
            } else {
                memberships[pi].iter().copied().collect()
            };
            if let Some(&c) = candidates.choose(&mut rng) {
                break (pi, c);
            }
        };
        requests.push(AccessRequest {
            principal: principals[pi].clone(),
            resource: resources[class]
                .choose(&mut rng)
                .expect("non-empty")
                .clone(),
            action: (*ACTIONS.choose(&mut rng).expect("non-empty")).to_owned(),
            context_tags: BTreeSet::new(),
            requested_at: spec
                .start
                .saturating_add(Duration::from_secs(spec.request_interval_secs * i as u64)),
        });
    }

    Ok(Workload {
        spec: spec.clone(),
        policies,
        requests,
        chains,
        seeded_records,
    })
}

fn seeded_record(
    principal: &PrincipalId,
    class: &str,
    index: usize,
    resource: String,
    action: &str,
    outcome: Outcome,
    at: Timestamp,
) -> RecordInput {
    let peer = PrincipalId::new(format!("svc-{class}")).expect("valid id");
    RecordInput {
        principal: principal.clone(),
        interaction: Interaction {
            event: Event {
                event_id: format!("seed:{principal}:{index}"),
                kind: "interaction".into(),
                initiator: principal.clone(),
                occurred_at: at,
            },
            participants: vec![principal.clone(), peer.clone()],
            messages: vec![Message {
                seq: 0,
                sender: principal.clone(),
                receiver: peer,
                payload_digest: Digest32::of(format!("{principal}:{resource}:{index}").as_bytes()),
            }],
        },
        resource,
        action: action.to_owned(),
        outcome,
        context_tags: BTreeSet::new(),
        recorded_at: at,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> WorkloadSpec {
        WorkloadSpec {
            num_principals: 40,
            history_length: 5,
            ..WorkloadSpec::default()
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let a = generate_workload(&small()).unwrap();
        let b = generate_workload(&small()).unwrap();
        assert_eq!(
            serde_json::to_vec(&a.requests).unwrap(),
            serde_json::to_vec(&b.requests).unwrap()
        );
        let heads = |w: &Workload| w.chains.values().map(|c| c.head_hash()).collect::<Vec<_>>();
        assert_eq!(heads(&a), heads(&b));
        let c = generate_workload(&WorkloadSpec { seed: 1, ..small() }).unwrap();
        assert_ne!(a.requests, c.requests);
    }

    #[test]
    fn default_spec_seeds_fifteen_thousand_records() {
        let w = generate_workload(&WorkloadSpec::default()).unwrap();
        assert_eq!(w.seeded_records, 15_000);
        assert_eq!(w.requests.len(), 500);
    }

    #[test]
    fn rejects_bad_checkpoints() {
        let spec = WorkloadSpec {
            checkpoints: vec![10, 10],
            ..small()
        };
        assert!(generate_workload(&spec).is_err());
        let spec = WorkloadSpec {
            role_density: 1.5,
            ..small()
        };
        assert!(generate_workload(&spec).is_err());
    }
}

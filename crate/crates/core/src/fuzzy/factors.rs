use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::decision::AccessRequest;
use crate::provenance::{duration_millis, Outcome, ProvenanceRecord, Timestamp};

/// The class a resource belongs to for relevance scoring: its first path
/// segment (`incident/42` -> `incident`).
pub fn resource_class(resource: &str) -> &str {
    resource.split('/').next().unwrap_or(resource)
}

/// Running summary of a chain, updated on every append so that scoring a
/// request never walks the history.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IncrementalAggregates {
    half_life_ms: i64,
    pub total_interactions: u64,
    pub successful_interactions: u64,
    pub class_successes: BTreeMap<String, u64>,
    pub last_interaction_at: Option<Timestamp>,
    /// Success mass per resource class, exponentially decayed to
    /// `last_interaction_at`.
    pub decayed_mass: BTreeMap<String, f64>,
    pub decayed_total: f64,
}

impl IncrementalAggregates {
    pub fn new(half_life: Duration) -> Self {
        Self {
            half_life_ms: duration_millis(half_life).max(1),
            total_interactions: 0,
            successful_interactions: 0,
            class_successes: BTreeMap::new(),
            last_interaction_at: None,
            decayed_mass: BTreeMap::new(),
            decayed_total: 0.0,
        }
    }

    /// Recomputes from scratch.
    pub fn from_records<'a>(
        half_life: Duration,
        records: impl IntoIterator<Item = &'a ProvenanceRecord>,
    ) -> Self {
        let mut agg = Self::new(half_life);
        for r in records {
            agg.observe(r);
        }
        agg
    }

    pub fn half_life(&self) -> Duration {
        Duration::from_millis(self.half_life_ms as u64)
    }

    /// Folds one more record in. Records must arrive in chain order.
    pub fn observe(&mut self, record: &ProvenanceRecord) {
        let at = record.recorded_at;
        let decay = self.decay_factor(at);
        if decay != 1.0 {
            for mass in self.decayed_mass.values_mut() {
                *mass *= decay;
            }
            self.decayed_total *= decay;
        }
        self.last_interaction_at = Some(at);
        self.total_interactions += 1;
        // Denied and Failure count toward the total only.
        if record.outcome == Outcome::Success {
            self.successful_interactions += 1;
            let class = resource_class(&record.resource);
            *self.class_successes.entry(class.to_owned()).or_default() += 1;
            *self.decayed_mass.entry(class.to_owned()).or_default() += 1.0;
            self.decayed_total += 1.0;
        }
    }

    /// Multiplier that carries masses from `last_interaction_at` to `at`.
    /// Instants before the last interaction are scored as of that
    /// interaction.
    pub fn decay_factor(&self, at: Timestamp) -> f64 {
        match self.last_interaction_at {
            Some(last) => {
                let dt = at.millis_since(last).max(0);
                if dt == 0 {
                    1.0
                } else {
                    (-(dt as f64) / self.half_life_ms as f64).exp2()
                }
            }
            None => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorParams {
    /// Interaction count at which engagement reaches 1 - 1/e.
    pub kappa: f64,
    pub half_life: Duration,
}

impl Default for FactorParams {
    fn default() -> Self {
        Self {
            kappa: 50.0,
            half_life: Duration::from_secs(30 * 24 * 3600),
        }
    }
}

/// The three scoring inputs, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuzzyFactors {
    pub reliability: f64,
    pub contextual_relevance: f64,
    pub historical_engagement: f64,
}

impl FuzzyFactors {
    pub fn new(reliability: f64, relevance: f64, engagement: f64) -> Option<Self> {
        let ok = |v: f64| (0.0..=1.0).contains(&v);
        (ok(reliability) && ok(relevance) && ok(engagement)).then_some(Self {
            reliability,
            contextual_relevance: relevance,
            historical_engagement: engagement,
        })
    }

    /// Values keyed by the factor names used in rule files.
    pub fn named(&self) -> [(&'static str, f64); 3] {
        [
            (RELIABILITY, self.reliability),
            (RELEVANCE, self.contextual_relevance),
            (ENGAGEMENT, self.historical_engagement),
        ]
    }
}

pub const RELIABILITY: &str = "reliability";
pub const RELEVANCE: &str = "relevance";
pub const ENGAGEMENT: &str = "engagement";

/// Reliability is the Laplace-smoothed success ratio, relevance the share of
/// decayed success mass in the request's resource class (with one pseudo
/// unit in the denominator), engagement a saturating count.
pub fn compute_factors(
    aggregates: &IncrementalAggregates,
    request: &AccessRequest,
    params: &FactorParams,
) -> FuzzyFactors {
    let n = aggregates.total_interactions as f64;
    let s = aggregates.successful_interactions as f64;
    let reliability = (s + 1.0) / (n + 2.0);

    let decay = aggregates.decay_factor(request.requested_at);
    let class_mass = aggregates
        .decayed_mass
        .get(resource_class(&request.resource))
        .copied()
        .unwrap_or(0.0);
    let relevance = (class_mass * decay / (aggregates.decayed_total * decay + 1.0)).clamp(0.0, 1.0);

    let engagement = (1.0 - (-n / params.kappa).exp()).clamp(0.0, 1.0);

    FuzzyFactors {
        reliability,
        contextual_relevance: relevance,
        historical_engagement: engagement,
    }
}

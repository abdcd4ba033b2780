//! The two-stage decision pipeline: policy evaluation first, fuzzy trust
//! scoring as the fallback, every decision written back to the requester's
//! chain.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fuzzy::{compute_ds, DecisionScore, FactorParams, FuzzyError, RuleBase};
use crate::policy::{evaluate_rbac, Permission, PolicySet, RbacDecision};
use crate::provenance::{
    ChainAccess, ChainOptions, Digest32, Event, Interaction, Message, Outcome, PrincipalId,
    ProvenanceError, RecordInput, Timestamp,
};

/// Principal id the engine uses as the counterpart in decision records.
pub const ENGINE_PRINCIPAL: &str = "ipbac-pdp";
/// Event-id prefix reserved for decision records.
pub const DECISION_EVENT_PREFIX: &str = "decision:";

pub const READ: &str = "read";
pub const WRITE: &str = "write";
pub const EXECUTE: &str = "execute";
pub const DELETE: &str = "delete";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessRequest {
    pub principal: PrincipalId,
    pub resource: String,
    pub action: String,
    #[serde(default)]
    pub context_tags: BTreeSet<String>,
    pub requested_at: Timestamp,
}

impl AccessRequest {
    pub fn validate(&self) -> Result<(), DecideError> {
        if self.resource.is_empty() {
            return Err(DecideError::InvalidRequest("resource is empty".into()));
        }
        if self.action.is_empty() {
            return Err(DecideError::InvalidRequest("action is empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AccessOutcome {
    Full,
    Partial {
        level: f64,
        granted: BTreeSet<Permission>,
    },
    Deny,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionPath {
    NonFuzzy,
    Fuzzy,
}

/// Steps of the access validation process, in the order they ran.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum TraceStep {
    UserRequest,
    CheckInteractionLogs { records: u64 },
    CheckPolicies,
    EvaluateRole { decision: RbacDecision },
    FuzzyScore { ds: f64, alpha: f64 },
    FuzzyFailed { error: String },
    AllowAccess,
    PartialAccess { level: f64 },
    DenyAccess,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub outcome: AccessOutcome,
    /// Present whenever the fuzzy stage produced a score. A fuzzy-stage
    /// failure leaves it empty and denies.
    pub ds: Option<DecisionScore>,
    pub path: DecisionPath,
    pub trace: Vec<TraceStep>,
}

impl Decision {
    pub fn is_granted(&self) -> bool {
        !matches!(self.outcome, AccessOutcome::Deny)
    }

    /// Whether the requested action itself is allowed (a partial grant may
    /// cover only a subset of actions).
    pub fn permits(&self, request: &AccessRequest) -> bool {
        match &self.outcome {
            AccessOutcome::Full => true,
            AccessOutcome::Partial { granted, .. } => granted
                .iter()
                .any(|p| p.matches(&request.resource, &request.action)),
            AccessOutcome::Deny => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid configuration: {}", .0.iter().map(|e| format!("{}: {}", e.field, e.message)).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<FieldError>),
    #[error(transparent)]
    RuleBase(#[from] FuzzyError),
}

/// Every tunable of the engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    /// Decision-score threshold; a score strictly above it earns access.
    pub alpha: f64,
    /// Access level granted on fuzzy success; 1 means full access.
    pub theta: f64,
    pub kappa: f64,
    pub half_life_secs: u64,
    /// Rule file; the built-in level-sum table when absent.
    pub rule_base_path: Option<PathBuf>,
    pub clock_skew_ms: u64,
    /// Minimum labeled fuzzy decisions before a threshold review runs.
    pub review_min_labeled: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            alpha: 0.2645,
            theta: 1.0,
            kappa: 50.0,
            half_life_secs: 30 * 24 * 3600,
            rule_base_path: None,
            clock_skew_ms: 5_000,
            review_min_labeled: 100,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), Vec<FieldError>> {
        let mut errors = Vec::new();
        let mut check = |ok: bool, field: &str, message: &str| {
            if !ok {
                errors.push(FieldError {
                    field: field.into(),
                    message: message.into(),
                });
            }
        };
        check(
            (0.0..=1.0).contains(&self.alpha),
            "alpha",
            "must be in [0, 1]",
        );
        check(
            self.theta > 0.0 && self.theta <= 1.0,
            "theta",
            "must be in (0, 1]",
        );
        check(
            self.kappa > 0.0 && self.kappa.is_finite(),
            "kappa",
            "must be positive",
        );
        check(
            self.half_life_secs > 0,
            "half_life_secs",
            "must be positive",
        );
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }

    pub fn factor_params(&self) -> FactorParams {
        FactorParams {
            kappa: self.kappa,
            half_life: Duration::from_secs(self.half_life_secs),
        }
    }

    pub fn chain_options(&self) -> ChainOptions {
        ChainOptions {
            clock_skew: Duration::from_millis(self.clock_skew_ms),
            half_life: Duration::from_secs(self.half_life_secs),
        }
    }
}

#[derive(Debug, Error)]
pub enum DecideError {
    #[error("chain of {chain} cannot decide for {request}")]
    ChainMismatch {
        chain: PrincipalId,
        request: PrincipalId,
    },
    #[error("malformed request: {0}")]
    InvalidRequest(String),
    #[error("recording the decision failed: {0}")]
    Record(#[from] ProvenanceError),
    #[error("access level {0} outside (0, 1]")]
    InvalidLevel(f64),
    #[error("{found} labeled fuzzy decisions, need at least {required}")]
    InsufficientData { found: usize, required: usize },
}

/// A validated configuration together with its loaded rule base.
#[derive(Debug, Clone)]
pub struct Engine {
    config: EngineConfig,
    rules: Arc<RuleBase>,
}

impl Engine {
    pub fn new(config: EngineConfig) -> Result<Self, ConfigError> {
        config.validate().map_err(ConfigError::Invalid)?;
        let rules = match &config.rule_base_path {
            Some(path) => RuleBase::load(path)?,
            None => RuleBase::level_sum_default(),
        };
        Ok(Self {
            config,
            rules: Arc::new(rules),
        })
    }

    pub fn with_rules(config: EngineConfig, rules: RuleBase) -> Result<Self, ConfigError> {
        config.validate().map_err(ConfigError::Invalid)?;
        Ok(Self {
            config,
            rules: Arc::new(rules),
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn rules(&self) -> &RuleBase {
        &self.rules
    }

    /// Policy stage only; the decision is still recorded.
    pub fn decide_rbac_only(
        &self,
        request: &AccessRequest,
        policies: &PolicySet,
        chain: &mut impl ChainAccess,
    ) -> Result<Decision, DecideError> {
        self.run(request, policies, chain, false)
    }

    /// Policy stage, then on denial the fuzzy stage. The decision is
    /// appended to `chain` (as `Success` when the requested action is
    /// permitted, `Denied` otherwise) before it is returned.
    pub fn decide(
        &self,
        request: &AccessRequest,
        policies: &PolicySet,
        chain: &mut impl ChainAccess,
    ) -> Result<Decision, DecideError> {
        self.run(request, policies, chain, true)
    }

    fn run(
        &self,
        request: &AccessRequest,
        policies: &PolicySet,
        chain: &mut impl ChainAccess,
        fuzzy: bool,
    ) -> Result<Decision, DecideError> {
        if chain.chain().principal() != &request.principal {
            return Err(DecideError::ChainMismatch {
                chain: chain.chain().principal().clone(),
                request: request.principal.clone(),
            });
        }
        request.validate()?;
        chain.set_half_life(Duration::from_secs(self.config.half_life_secs));

        let decision = self.evaluate(request, policies, chain, fuzzy);
        let input = decision_record(request, &decision, chain);
        chain.append(input)?;
        Ok(decision)
    }

    /// The decision without recording it.
    pub fn evaluate(
        &self,
        request: &AccessRequest,
        policies: &PolicySet,
        chain: &impl ChainAccess,
        fuzzy: bool,
    ) -> Decision {
        let history = chain.chain();
        let mut trace = vec![
            TraceStep::UserRequest,
            TraceStep::CheckInteractionLogs {
                records: history.len() as u64,
            },
            TraceStep::CheckPolicies,
        ];
        let rbac = evaluate_rbac(policies, request, history);
        let allowed = rbac.is_allow();
        trace.push(TraceStep::EvaluateRole { decision: rbac });
        if allowed {
            trace.push(TraceStep::AllowAccess);
            return Decision {
                outcome: AccessOutcome::Full,
                ds: None,
                path: DecisionPath::NonFuzzy,
                trace,
            };
        }
        if !fuzzy {
            trace.push(TraceStep::DenyAccess);
            return Decision {
                outcome: AccessOutcome::Deny,
                ds: None,
                path: DecisionPath::NonFuzzy,
                trace,
            };
        }

        let params = self.config.factor_params();
        match compute_ds(history.aggregates(), request, &params, &self.rules) {
            Ok(ds) => {
                let alpha = self.config.alpha;
                trace.push(TraceStep::FuzzyScore {
                    ds: ds.value(),
                    alpha,
                });
                let outcome = if ds.value() > alpha {
                    self.grant(request, &mut trace)
                } else {
                    trace.push(TraceStep::DenyAccess);
                    AccessOutcome::Deny
                };
                Decision {
                    outcome,
                    ds: Some(ds),
                    path: DecisionPath::Fuzzy,
                    trace,
                }
            }
            Err(e) => {
                trace.push(TraceStep::FuzzyFailed {
                    error: e.to_string(),
                });
                trace.push(TraceStep::DenyAccess);
                Decision {
                    outcome: AccessOutcome::Deny,
                    ds: None,
                    path: DecisionPath::Fuzzy,
                    trace,
                }
            }
        }
    }

    fn grant(&self, request: &AccessRequest, trace: &mut Vec<TraceStep>) -> AccessOutcome {
        let theta = self.config.theta;
        if theta >= 1.0 {
            trace.push(TraceStep::AllowAccess);
            return AccessOutcome::Full;
        }
        match mask_permissions(request, theta) {
            Ok(granted) => {
                trace.push(TraceStep::PartialAccess { level: theta });
                AccessOutcome::Partial {
                    level: theta,
                    granted,
                }
            }
            Err(e) => {
                trace.push(TraceStep::FuzzyFailed {
                    error: e.to_string(),
                });
                trace.push(TraceStep::DenyAccess);
                AccessOutcome::Deny
            }
        }
    }
}

fn decision_record(
    request: &AccessRequest,
    decision: &Decision,
    chain: &impl ChainAccess,
) -> RecordInput {
    let history = chain.chain();
    let engine = PrincipalId::new(ENGINE_PRINCIPAL).expect("static id");
    let recorded_at = history.head().map_or(request.requested_at, |h| {
        h.recorded_at.max(request.requested_at)
    });
    let request_digest = Digest32::of(&serde_json::to_vec(request).expect("serializable"));
    let decision_digest = Digest32::of(&serde_json::to_vec(decision).expect("serializable"));
    RecordInput {
        principal: request.principal.clone(),
        interaction: Interaction {
            event: Event {
                event_id: format!(
                    "{DECISION_EVENT_PREFIX}{}:{}",
                    request.principal,
                    history.len()
                ),
                kind: "ipbac.decide".into(),
                initiator: request.principal.clone(),
                occurred_at: request.requested_at.min(recorded_at),
            },
            participants: vec![request.principal.clone(), engine.clone()],
            messages: vec![
                Message {
                    seq: 0,
                    sender: request.principal.clone(),
                    receiver: engine.clone(),
                    payload_digest: request_digest,
                },
                Message {
                    seq: 1,
                    sender: engine,
                    receiver: request.principal.clone(),
                    payload_digest: decision_digest,
                },
            ],
        },
        resource: request.resource.clone(),
        action: request.action.clone(),
        outcome: if decision.permits(request) {
            Outcome::Success
        } else {
            Outcome::Denied
        },
        context_tags: request.context_tags.clone(),
        recorded_at,
    }
}

/// Tiered subset of actions on the requested resource for access level
/// `theta`: (0, 1/3] read; (1/3, 2/3] read, write; (2/3, 1) read, write,
/// execute; 1 everything including delete.
pub fn mask_permissions(
    request: &AccessRequest,
    theta: f64,
) -> Result<BTreeSet<Permission>, DecideError> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(DecideError::InvalidLevel(theta));
    }
    let actions: &[&str] = if theta <= 1.0 / 3.0 {
        &[READ]
    } else if theta <= 2.0 / 3.0 {
        &[READ, WRITE]
    } else if theta < 1.0 {
        &[READ, WRITE, EXECUTE]
    } else {
        &[READ, WRITE, EXECUTE, DELETE]
    };
    actions
        .iter()
        .map(|a| {
            Permission::new(request.resource.clone(), *a)
                .map_err(|e| DecideError::InvalidRequest(e.to_string()))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDecision {
    pub decision: Decision,
    /// Operator's verdict on whether the decision was right.
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReview {
    pub suggested_alpha: f64,
    pub suggested_accuracy: f64,
    pub current_alpha: f64,
    pub current_accuracy: f64,
    pub labeled: usize,
}

/// Suggests the threshold that would have made the most labeled fuzzy
/// decisions right. Report only; nothing is applied.
///
/// Thresholds between two consecutive observed scores behave identically,
/// so each such interval is represented by its midpoint. The current
/// threshold is kept when nothing beats it.
pub fn review_threshold(
    log: &[LabeledDecision],
    current_alpha: f64,
    min_labeled: usize,
) -> Result<ThresholdReview, DecideError> {
    // (score, whether it should have been granted)
    let samples: Vec<(f64, bool)> = log
        .iter()
        .filter(|l| l.decision.path == DecisionPath::Fuzzy)
        .filter_map(|l| {
            let ds = l.decision.ds?.value();
            Some((ds, l.decision.is_granted() == l.correct))
        })
        .collect();
    if samples.len() < min_labeled {
        return Err(DecideError::InsufficientData {
            found: samples.len(),
            required: min_labeled,
        });
    }
    let accuracy = |alpha: f64| {
        samples
            .iter()
            .filter(|(ds, should)| (*ds > alpha) == *should)
            .count() as f64
            / samples.len() as f64
    };
    let mut scores: Vec<f64> = samples.iter().map(|s| s.0).collect();
    scores.sort_by(f64::total_cmp);
    scores.dedup();
    let mut candidates = Vec::with_capacity(scores.len() + 1);
    candidates.push(scores[0] / 2.0);
    for w in scores.windows(2) {
        candidates.push((w[0] + w[1]) / 2.0);
    }
    candidates.push((scores[scores.len() - 1] + 1.0) / 2.0);

    let current_accuracy = accuracy(current_alpha);
    let mut best = (current_alpha, current_accuracy);
    for c in candidates {
        let acc = accuracy(c);
        let closer = (c - current_alpha).abs() < (best.0 - current_alpha).abs();
        if acc > best.1 || (acc == best.1 && best.0 != current_alpha && closer) {
            best = (c, acc);
        }
    }
    Ok(ThresholdReview {
        suggested_alpha: best.0,
        suggested_accuracy: best.1,
        current_alpha,
        current_accuracy,
        labeled: samples.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuzzy::{score_factors, FuzzyFactors};
    use crate::provenance::ProvenanceChain;

    fn p(s: &str) -> PrincipalId {
        PrincipalId::new(s).unwrap()
    }

    fn req(resource: &str, action: &str) -> AccessRequest {
        AccessRequest {
            principal: p("alice"),
            resource: resource.into(),
            action: action.into(),
            context_tags: Default::default(),
            requested_at: Timestamp::from_millis(1_000),
        }
    }

    fn actions(set: &BTreeSet<Permission>) -> Vec<&str> {
        let mut v: Vec<&str> = set.iter().map(|p| p.action.as_str()).collect();
        v.sort();
        v
    }

    #[test]
    fn mask_tiers() {
        let r = req("incident/7", "delete");
        assert_eq!(actions(&mask_permissions(&r, 0.3).unwrap()), ["read"]);
        assert_eq!(
            actions(&mask_permissions(&r, 2.0 / 3.0).unwrap()),
            ["read", "write"]
        );
        assert_eq!(
            actions(&mask_permissions(&r, 0.9).unwrap()),
            ["execute", "read", "write"]
        );
        assert_eq!(
            actions(&mask_permissions(&r, 1.0).unwrap()),
            ["delete", "execute", "read", "write"]
        );
        assert!(mask_permissions(&r, 1.0)
            .unwrap()
            .iter()
            .all(|p| p.resource == "incident/7"));
        assert!(matches!(
            mask_permissions(&r, 0.0),
            Err(DecideError::InvalidLevel(_))
        ));
        assert!(mask_permissions(&r, 1.01).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(EngineConfig::default().validate().is_ok());
        let bad = EngineConfig {
            alpha: 1.5,
            theta: 0.0,
            ..EngineConfig::default()
        };
        let errs = bad.validate().unwrap_err();
        let fields: Vec<_> = errs.iter().map(|e| e.field.as_str()).collect();
        assert_eq!(fields, ["alpha", "theta"]);
    }

    #[test]
    fn rbac_allow_short_circuits() {
        let mut policies = PolicySet::default();
        policies.add_role("viewer", [Permission::new("incident/*", "read").unwrap()]);
        policies.assign(p("alice"), "viewer").unwrap();
        let engine = Engine::new(EngineConfig::default()).unwrap();
        let mut chain = ProvenanceChain::new(p("alice"), ChainOptions::default());
        let d = engine
            .decide(&req("incident/1", "read"), &policies, &mut chain)
            .unwrap();
        assert_eq!(d.outcome, AccessOutcome::Full);
        assert_eq!(d.path, DecisionPath::NonFuzzy);
        assert!(d.ds.is_none());
        assert_eq!(chain.len(), 1);
        assert_eq!(chain.records()[0].outcome, Outcome::Success);
    }

    #[test]
    fn chain_mismatch() {
        let engine = Engine::new(EngineConfig::default()).unwrap();
        let mut chain = ProvenanceChain::new(p("bob"), ChainOptions::default());
        assert!(matches!(
            engine.decide(
                &req("incident/1", "read"),
                &PolicySet::default(),
                &mut chain
            ),
            Err(DecideError::ChainMismatch { .. })
        ));
        assert!(chain.is_empty());
    }

    #[test]
    fn empty_history_falls_back_and_denies() {
        // Cold start scores about 1/6, below the default threshold.
        let engine = Engine::new(EngineConfig::default()).unwrap();
        let mut chain = ProvenanceChain::new(p("alice"), ChainOptions::default());
        let d = engine
            .decide(
                &req("incident/1", "read"),
                &PolicySet::default(),
                &mut chain,
            )
            .unwrap();
        assert_eq!(d.path, DecisionPath::Fuzzy);
        assert_eq!(d.outcome, AccessOutcome::Deny);
        let ds = d.ds.unwrap().value();
        let expected = score_factors(&FuzzyFactors::new(0.5, 0.0, 0.0).unwrap(), engine.rules())
            .unwrap()
            .value();
        assert_eq!(ds, expected);
        assert_eq!(chain.records()[0].outcome, Outcome::Denied);
        assert!(chain.verify().valid);
    }

    fn labeled(ds: f64, granted: bool, correct: bool) -> LabeledDecision {
        LabeledDecision {
            decision: Decision {
                outcome: if granted {
                    AccessOutcome::Full
                } else {
                    AccessOutcome::Deny
                },
                ds: DecisionScore::new(ds),
                path: DecisionPath::Fuzzy,
                trace: vec![],
            },
            correct,
        }
    }

    #[test]
    fn review_keeps_alpha_when_all_correct() {
        let alpha = 0.2645;
        let log: Vec<_> = (0..200)
            .map(|i| {
                let ds = i as f64 / 200.0;
                labeled(ds, ds > alpha, true)
            })
            .collect();
        let review = review_threshold(&log, alpha, 100).unwrap();
        assert_eq!(review.suggested_alpha, alpha);
        assert_eq!(review.current_accuracy, 1.0);
    }

    #[test]
    fn review_needs_enough_data() {
        let log: Vec<_> = (0..50)
            .map(|i| labeled(i as f64 / 50.0, true, true))
            .collect();
        assert!(matches!(
            review_threshold(&log, 0.2645, 100),
            Err(DecideError::InsufficientData {
                found: 50,
                required: 100
            })
        ));
    }
    #[test]
    fn review_finds_the_separating_gap() {
        // Grants above 0.4 were right, grants between alpha and 0.4 wrong.
        let alpha = 0.2645;
        let log: Vec<_> = (0..200)
            .map(|i| {
                let ds = 0.2 + 0.4 * i as f64 / 199.0;
                labeled(ds, ds > alpha, ds <= alpha || ds > 0.4)
            })
            .collect();
        let below = log
            .iter()
            .map(|l| l.decision.ds.unwrap().value())
            .filter(|d| *d <= 0.4)
            .fold(0.0, f64::max);
        let above = log
            .iter()
            .map(|l| l.decision.ds.unwrap().value())
            .filter(|d| *d > 0.4)
            .fold(1.0, f64::min);
        let review = review_threshold(&log, alpha, 100).unwrap();
        assert!(
            review.suggested_alpha >= below && review.suggested_alpha < above,
            "{review:?}"
        );
        assert_eq!(review.suggested_accuracy, 1.0);
        assert!(review.current_accuracy < 1.0);
    }

    #[test]
    fn score_equal_to_alpha_denies() {
        let policies = PolicySet::default();
        let probe = Engine::new(EngineConfig::default()).unwrap();
        let chain = ProvenanceChain::new(p("alice"), ChainOptions::default());
        let ds = probe
            .evaluate(&req("incident/1", "read"), &policies, &chain, true)
            .ds
            .unwrap()
            .value();

        let at = |alpha: f64| {
            let engine = Engine::new(EngineConfig {
                alpha,
                ..EngineConfig::default()
            })
            .unwrap();
            engine.evaluate(&req("incident/1", "read"), &policies, &chain, true)
        };
        let equal = at(ds);
        assert_eq!(equal.outcome, AccessOutcome::Deny);
        assert_eq!(equal.ds.unwrap().value(), ds);
        let below = at(ds - 1e-12);
        assert_eq!(below.outcome, AccessOutcome::Full);
        assert_eq!(below.path, DecisionPath::Fuzzy);
    }

    #[test]
    fn fuzzy_failure_denies_without_score() {
        // Zero-width output terms leave an empty aggregate.
        let text = RuleBase::level_sum_default()
            .to_text()
            .replace("term Deny-leaning 0 0 0.5", "term Deny-leaning 0.2 0.2 0.2")
            .replace("term Cautious 0 0.5 1", "term Cautious 0.5 0.5 0.5")
            .replace(
                "term Grant-leaning 0.5 1 1",
                "term Grant-leaning 0.8 0.8 0.8",
            );
        let rules = RuleBase::parse(&text).unwrap();
        let engine = Engine::with_rules(
            EngineConfig {
                alpha: 0.0,
                ..EngineConfig::default()
            },
            rules,
        )
        .unwrap();
        let mut chain = ProvenanceChain::new(p("alice"), ChainOptions::default());
        let d = engine
            .decide(
                &req("incident/1", "read"),
                &PolicySet::default(),
                &mut chain,
            )
            .unwrap();
        assert_eq!(d.outcome, AccessOutcome::Deny);
        assert_eq!(d.ds, None);
        assert!(d
            .trace
            .iter()
            .any(|s| matches!(s, TraceStep::FuzzyFailed { .. })));
        assert_eq!(chain.records()[0].outcome, Outcome::Denied);
    }
}

//! Trust scoring: factors from provenance aggregates, fuzzy inference over
//! a rule base, centroid defuzzification into a decision score.

mod factors;
mod inference;
mod membership;
mod rules;

use thiserror::Error;

pub use factors::{
    compute_factors, resource_class, FactorParams, FuzzyFactors, IncrementalAggregates, ENGAGEMENT,
    RELEVANCE, RELIABILITY,
};
pub use inference::{
    activations, defuzzify_centroid, infer, AggregateCurve, DecisionScore, Memberships,
};
pub use membership::{fuzzify, LinguisticVariable, MembershipFunction, Term};
pub use rules::{
    Accumulation, Conjunction, FuzzyRule, InferenceOperators, RuleBase, CAUTIOUS, DENY_LEANING,
    GRANT_LEANING, INPUT_TERMS,
};

use crate::decision::AccessRequest;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FuzzyError {
    #[error("{variable} = {value} is outside [0, 1]")]
    OutOfDomain { variable: String, value: f64 },
    #[error("invalid triangle ({a}, {b}, {c}): need a <= b <= c")]
    InvalidMembership { a: f64, b: f64, c: f64 },
    #[error("variable {0} has no terms")]
    NoTerms(String),
    #[error("variable {variable} declares term {term} twice")]
    DuplicateTerm { variable: String, term: String },
    #[error("variable {0} declared twice")]
    DuplicateVariable(String),
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("variable {variable} has no term {term}")]
    UnknownTerm { variable: String, term: String },
    #[error("no value supplied for input {0}")]
    MissingInput(String),
    #[error("rule must name every input exactly once: {0}")]
    MalformedRule(String),
    #[error("two rules share an antecedent: {0}")]
    DuplicateAntecedent(String),
    #[error("rules cover {found} of {expected} input combinations; missing e.g. `{missing}`")]
    IncompleteCoverage {
        expected: usize,
        found: usize,
        missing: String,
    },
    #[error("no rule fired")]
    UncoveredInput,
    #[error("aggregate output is identically zero")]
    EmptyAggregate,
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("rule file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("reading rule file: {0}")]
    Io(String),
}

/// Score for already-computed factors: fuzzify, infer, defuzzify.
pub fn score_factors(
    factors: &FuzzyFactors,
    rules: &RuleBase,
) -> Result<DecisionScore, FuzzyError> {
    let memberships = Memberships::fuzzify(rules, &factors.named())?;
    defuzzify_centroid(&infer(&memberships, rules)?)
}

pub fn compute_ds(
    aggregates: &IncrementalAggregates,
    request: &AccessRequest,
    params: &FactorParams,
    rules: &RuleBase,
) -> Result<DecisionScore, FuzzyError> {
    score_factors(&compute_factors(aggregates, request, params), rules)
}

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::membership::MembershipFunction;
use super::rules::{Accumulation, Conjunction, RuleBase};
use super::FuzzyError;

/// Degrees of every input term, input-major in a rule base's input order
/// and terms in declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct Memberships(pub(crate) Vec<f64>);

impl Memberships {
    /// Fuzzifies `values` (keyed by input variable name) against `rules`.
    pub fn fuzzify(rules: &RuleBase, values: &[(&str, f64)]) -> Result<Self, FuzzyError> {
        let mut degrees = Vec::with_capacity(rules.compiled().degree_count);
        for var in rules.inputs() {
            let value = values
                .iter()
                .find(|(n, _)| *n == var.name)
                .map(|(_, v)| *v)
                .ok_or_else(|| FuzzyError::MissingInput(var.name.clone()))?;
            if !(0.0..=1.0).contains(&value) {
                return Err(FuzzyError::OutOfDomain {
                    variable: var.name.clone(),
                    value,
                });
            }
            degrees.extend(var.terms.iter().map(|t| t.function.degree(value)));
        }
        Ok(Memberships(degrees))
    }

    /// Builds memberships from explicit degrees (variable -> term -> degree).
    /// Terms not mentioned get degree zero.
    pub fn from_degrees(
        rules: &RuleBase,
        degrees: &BTreeMap<String, BTreeMap<String, f64>>,
    ) -> Result<Self, FuzzyError> {
        let mut out = Vec::with_capacity(rules.compiled().degree_count);
        for var in rules.inputs() {
            let given = degrees
                .get(&var.name)
                .ok_or_else(|| FuzzyError::MissingInput(var.name.clone()))?;
            for term in given.keys() {
                if var.term_index(term).is_none() {
                    return Err(FuzzyError::UnknownTerm {
                        variable: var.name.clone(),
                        term: term.clone(),
                    });
                }
            }
            out.extend(
                var.terms
                    .iter()
                    .map(|t| given.get(&t.name).copied().unwrap_or(0.0)),
            );
        }
        Ok(Memberships(out))
    }

    pub fn degrees(&self) -> &[f64] {
        &self.0
    }
}

/// Non-negative piecewise-linear curve over `[0, 1]`, given by its
/// breakpoints in order. Two consecutive points may share an abscissa to
/// describe a jump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateCurve {
    points: Vec<(f64, f64)>,
}

impl AggregateCurve {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, FuzzyError> {
        if points.len() < 2 {
            return Err(FuzzyError::InvalidCurve("need at least two points".into()));
        }
        if points[0].0 != 0.0 || points[points.len() - 1].0 != 1.0 {
            return Err(FuzzyError::InvalidCurve("points must span [0, 1]".into()));
        }
        if points
            .iter()
            .any(|&(x, y)| !(x.is_finite() && y.is_finite() && y >= 0.0))
        {
            return Err(FuzzyError::InvalidCurve(
                "values must be finite and non-negative".into(),
            ));
        }
        if points.windows(2).any(|w| w[1].0 < w[0].0) {
            return Err(FuzzyError::InvalidCurve(
                "abscissae must not decrease".into(),
            ));
        }
        Ok(Self { points })
    }

    /// Uniform samples: `samples[i]` is the value at `i / (samples.len() - 1)`.
    pub fn sampled(samples: Vec<f64>) -> Result<Self, FuzzyError> {
        if samples.len() < 2 {
            return Err(FuzzyError::InvalidCurve("need at least two samples".into()));
        }
        let n = (samples.len() - 1) as f64;
        Self::new(
            samples
                .into_iter()
                .enumerate()
                .map(|(i, y)| (i as f64 / n, y))
                .collect(),
        )
    }

    pub fn from_fn(intervals: usize, f: impl Fn(f64) -> f64) -> Result<Self, FuzzyError> {
        Self::sampled(
            (0..=intervals)
                .map(|i| f(i as f64 / intervals as f64))
                .collect(),
        )
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Value at `x`; at a jump, the larger side.
    pub fn value_at(&self, x: f64) -> f64 {
        let mut best = 0.0f64;
        for w in self.points.windows(2) {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            if x0 <= x && x <= x1 {
                let y = if x1 == x0 {
                    y0.max(y1)
                } else {
                    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
                };
                best = best.max(y);
            }
        }
        best
    }

    /// Values on a uniform grid of `intervals` steps.
    pub fn sample(&self, intervals: usize) -> Vec<f64> {
        (0..=intervals)
            .map(|i| self.value_at(i as f64 / intervals as f64))
            .collect()
    }
}

/// Defuzzified score in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DecisionScore(f64);

impl DecisionScore {
    pub fn new(value: f64) -> Option<Self> {
        (0.0..=1.0).contains(&value).then_some(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Activation of each output term (rules sharing a consequent combined per
/// the rule base's accumulation operator).
pub fn activations(memberships: &Memberships, rules: &RuleBase) -> Vec<f64> {
    let ops = rules.operators();
    let compiled = rules.compiled();
    let degrees = &memberships.0;
    let mut act = vec![0.0f64; rules.output().terms.len()];
    let rows = compiled.slots.chunks_exact(compiled.arity.max(1));
    for (slots, &consequent) in rows.zip(&compiled.consequents) {
        let strength = match ops.conjunction {
            Conjunction::Min => slots.iter().fold(1.0, |s, &i| f64::min(s, degrees[i])),
            Conjunction::Product => slots.iter().fold(1.0, |s, &i| s * degrees[i]),
        };
        let slot = &mut act[consequent];
        *slot = match ops.accumulation {
            Accumulation::Max => slot.max(strength),
            Accumulation::BoundedSum => (*slot + strength).min(1.0),
        };
    }
    act
}

/// A triangle `(a, b, c)` clipped at `level`: zero outside `(a, c)`,
/// rising on `(a, lo)`, flat at `level` on `[lo, hi]`, falling on `(hi, c)`.
/// Lines are (slope, intercept).
#[derive(Debug, Clone, Copy)]
struct Clipped {
    a: f64,
    c: f64,
    lo: f64,
    hi: f64,
    level: f64,
    rise: (f64, f64),
    fall: (f64, f64),
}

impl Clipped {
    fn new(function: &MembershipFunction, level: f64) -> Self {
        let MembershipFunction::Triangular { a, b, c } = *function;
        let rise = if b > a {
            let s = 1.0 / (b - a);
            (s, -a * s)
        } else {
            (0.0, level)
        };
        let fall = if c > b {
            let s = 1.0 / (c - b);
            (-s, c * s)
        } else {
            (0.0, level)
        };
        Self {
            a,
            c,
            lo: a + level * (b - a),
            hi: c - level * (c - b),
            level,
            rise,
            fall,
        }
    }

    /// The line followed around `x`, which must not be a breakpoint.
    fn piece(&self, x: f64) -> (f64, f64) {
        if x <= self.a || x >= self.c {
            (0.0, 0.0)
        } else if x < self.lo {
            self.rise
        } else if x <= self.hi {
            (0.0, self.level)
        } else {
            self.fall
        }
    }
}

/// Clips each output term at its activation and takes the pointwise max.
/// The result is exact: every kink of the clipped terms and every crossing
/// between them is a breakpoint.
pub fn infer(memberships: &Memberships, rules: &RuleBase) -> Result<AggregateCurve, FuzzyError> {
    let act = activations(memberships, rules);
    if act.iter().all(|&a| a <= 0.0) {
        return Err(FuzzyError::UncoveredInput);
    }
    let clipped: Vec<Clipped> = rules
        .output()
        .terms
        .iter()
        .zip(&act)
        .filter(|(_, &level)| level > 0.0)
        .map(|(t, &level)| Clipped::new(&t.function, level))
        .collect();
    Ok(AggregateCurve {
        points: envelope(&clipped),
    })
}

fn top(lines: &[(f64, f64)], x: f64) -> (f64, f64) {
    let mut best = lines[0];
    let mut best_y = best.0 * x + best.1;
    for &l in &lines[1..] {
        let y = l.0 * x + l.1;
        if y > best_y {
            best = l;
            best_y = y;
        }
    }
    best
}

fn envelope(terms: &[Clipped]) -> Vec<(f64, f64)> {
    let mut xs = Vec::with_capacity(2 + 4 * terms.len());
    xs.extend([0.0, 1.0]);
    for t in terms {
        xs.extend([t.a, t.c, t.lo, t.hi]);
    }
    xs.retain(|x| (0.0..=1.0).contains(x));
    xs.sort_by(f64::total_cmp);
    xs.dedup();

    let mut points: Vec<(f64, f64)> = Vec::with_capacity(2 * xs.len() + 4);
    let mut push = |p: (f64, f64)| {
        if points.last() != Some(&p) {
            points.push(p);
        }
    };
    let mut lines = Vec::with_capacity(terms.len());
    let mut cuts = Vec::new();
    for w in xs.windows(2) {
        let (u, v) = (w[0], w[1]);
        let mid = 0.5 * (u + v);
        lines.clear();
        lines.extend(terms.iter().map(|t| t.piece(mid)));
        // The max of lines is convex, so a line on top at both ends is on
        // top throughout.
        let (lu, lv) = (top(&lines, u), top(&lines, v));
        if lu == lv {
            push((u, (lu.0 * u + lu.1).max(0.0)));
            push((v, (lu.0 * v + lu.1).max(0.0)));
            continue;
        }
        cuts.clear();
        cuts.extend([u, v]);
        for (i, &(s1, t1)) in lines.iter().enumerate() {
            for &(s2, t2) in &lines[i + 1..] {
                if s1 != s2 {
                    let x = (t2 - t1) / (s1 - s2);
                    if x > u && x < v {
                        cuts.push(x);
                    }
                }
            }
        }
        cuts.sort_by(f64::total_cmp);
        for c in cuts.windows(2) {
            let (p, q) = (c[0], c[1]);
            let (s, t) = top(&lines, 0.5 * (p + q));
            push((p, (s * p + t).max(0.0)));
            push((q, (s * q + t).max(0.0)));
        }
    }
    points
}

/// Centroid of the piecewise-linear curve, integrated exactly segment by
/// segment.
pub fn defuzzify_centroid(curve: &AggregateCurve) -> Result<DecisionScore, FuzzyError> {
    let mut area = 0.0;
    let mut moment = 0.0;
    for w in curve.points.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        let h = x1 - x0;
        area += (y0 + y1) * h / 2.0;
        moment += (x0 * (2.0 * y0 + y1) + x1 * (y0 + 2.0 * y1)) * h / 6.0;
    }
    if area <= 0.0 {
        return Err(FuzzyError::EmptyAggregate);
    }
    Ok(DecisionScore((moment / area).clamp(0.0, 1.0)))
}

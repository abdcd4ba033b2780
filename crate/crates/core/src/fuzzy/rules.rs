//! Rule bases and their text format.
//!
//! ```text
//! # comment
//! variable reliability
//!   term Low 0 0 0.5
//!   term Medium 0 0.5 1
//!   term High 0.5 1 1
//! ...
//! output decision
//!   term Deny-leaning 0 0 0.5
//!   ...
//! operators product bounded-sum
//! IF reliability IS High AND relevance IS Medium AND engagement IS Low THEN Cautious
//! ```
//!
//! The `operators` line is optional; `min max` selects the classic
//! min-conjunction / max-accumulation scheme.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::factors::{ENGAGEMENT, RELEVANCE, RELIABILITY};
use super::membership::{LinguisticVariable, MembershipFunction, Term};
use super::FuzzyError;

pub const DENY_LEANING: &str = "Deny-leaning";
pub const CAUTIOUS: &str = "Cautious";
pub const GRANT_LEANING: &str = "Grant-leaning";
pub const INPUT_TERMS: [&str; 3] = ["Low", "Medium", "High"];

/// How antecedent degrees are combined within a rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Conjunction {
    Min,
    Product,
}

/// How rules that share a consequent combine into that term's activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Accumulation {
    Max,
    BoundedSum,
}

/// Consequent terms are always clipped at their activation and aggregated
/// by pointwise max; these two knobs choose how activations are formed.
///
/// The default (product, bounded sum) keeps the score monotone in every
/// factor under the level-sum rule base. With Ruspini inputs the three
/// activations then sum to one. `classic()` (min, max) is not monotone:
/// two rules with the same consequent can trade weight and the max dips.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InferenceOperators {
    pub conjunction: Conjunction,
    pub accumulation: Accumulation,
}

impl Default for InferenceOperators {
    fn default() -> Self {
        Self {
            conjunction: Conjunction::Product,
            accumulation: Accumulation::BoundedSum,
        }
    }
}

impl InferenceOperators {
    pub fn classic() -> Self {
        Self {
            conjunction: Conjunction::Min,
            accumulation: Accumulation::Max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyRule {
    /// (variable, term) pairs joined by AND.
    pub antecedent: Vec<(String, String)>,
    pub consequent: String,
}

impl FuzzyRule {
    pub fn to_line(&self) -> String {
        let conds: Vec<String> = self
            .antecedent
            .iter()
            .map(|(v, t)| format!("{v} IS {t}"))
            .collect();
        format!("IF {} THEN {}", conds.join(" AND "), self.consequent)
    }
}

/// Rules in evaluation form. Rule `i` reads the membership degrees at
/// `slots[i * arity..(i + 1) * arity]` (positions in the flat, input-major
/// degree vector) and feeds output term `consequents[i]`.
#[derive(Debug, Clone)]
pub(crate) struct CompiledRules {
    pub arity: usize,
    pub slots: Vec<usize>,
    pub consequents: Vec<usize>,
    pub degree_count: usize,
}

/// A validated, complete rule base together with its variables.
#[derive(Debug, Clone)]
pub struct RuleBase {
    inputs: Vec<LinguisticVariable>,
    output: LinguisticVariable,
    rules: Vec<FuzzyRule>,
    operators: InferenceOperators,
    compiled: CompiledRules,
}

impl RuleBase {
    /// Every rule must name each input exactly once; together the rules must
    /// cover every combination of input terms exactly once.
    pub fn new(
        inputs: Vec<LinguisticVariable>,
        output: LinguisticVariable,
        rules: Vec<FuzzyRule>,
        operators: InferenceOperators,
    ) -> Result<Self, FuzzyError> {
        let mut names = HashSet::new();
        for v in &inputs {
            if !names.insert(v.name.as_str()) {
                return Err(FuzzyError::DuplicateVariable(v.name.clone()));
            }
        }
        let offsets: Vec<usize> = inputs
            .iter()
            .scan(0, |start, v| {
                let at = *start;
                *start += v.terms.len();
                Some(at)
            })
            .collect();
        let mut compiled = CompiledRules {
            arity: inputs.len(),
            slots: Vec::with_capacity(rules.len() * inputs.len()),
            consequents: Vec::with_capacity(rules.len()),
            degree_count: inputs.iter().map(|v| v.terms.len()).sum(),
        };
        let mut seen = HashSet::new();
        for rule in &rules {
            let mut terms = vec![usize::MAX; inputs.len()];
            for (var, term) in &rule.antecedent {
                let vi = inputs
                    .iter()
                    .position(|v| &v.name == var)
                    .ok_or_else(|| FuzzyError::UnknownVariable(var.clone()))?;
                let ti = inputs[vi]
                    .term_index(term)
                    .ok_or_else(|| FuzzyError::UnknownTerm {
                        variable: var.clone(),
                        term: term.clone(),
                    })?;
                if terms[vi] != usize::MAX {
                    return Err(FuzzyError::MalformedRule(rule.to_line()));
                }
                terms[vi] = ti;
            }
            if terms.contains(&usize::MAX) {
                return Err(FuzzyError::MalformedRule(rule.to_line()));
            }
            let consequent =
                output
                    .term_index(&rule.consequent)
                    .ok_or_else(|| FuzzyError::UnknownTerm {
                        variable: output.name.clone(),
                        term: rule.consequent.clone(),
                    })?;
            if seen.contains(&terms) {
                return Err(FuzzyError::DuplicateAntecedent(rule.to_line()));
            }
            compiled
                .slots
                .extend(terms.iter().zip(&offsets).map(|(t, o)| t + o));
            compiled.consequents.push(consequent);
            seen.insert(terms);
        }
        let combinations: usize = inputs.iter().map(|v| v.terms.len()).product();
        if seen.len() != combinations {
            let missing = first_missing(&inputs, &seen);
            return Err(FuzzyError::IncompleteCoverage {
                expected: combinations,
                found: seen.len(),
                missing,
            });
        }
        Ok(Self {
            inputs,
            output,
            rules,
            operators,
            compiled,
        })
    }

    /// Three-term inputs (reliability, relevance, engagement), three-term
    /// output, and 27 rules whose consequent depends on the level sum of the
    /// antecedent (Low = 0, Medium = 1, High = 2): <= 2 is Deny-leaning,
    /// 3..=4 Cautious, >= 5 Grant-leaning.
    pub fn level_sum_default() -> Self {
        Self::level_sum(InferenceOperators::default())
    }

    pub fn level_sum(operators: InferenceOperators) -> Self {
        let inputs: Vec<_> = [RELIABILITY, RELEVANCE, ENGAGEMENT]
            .iter()
            .map(|n| LinguisticVariable::three_term(*n, INPUT_TERMS))
            .collect();
        let output =
            LinguisticVariable::three_term("decision", [DENY_LEANING, CAUTIOUS, GRANT_LEANING]);
        let mut rules = Vec::with_capacity(27);
        for (r, rt) in INPUT_TERMS.iter().enumerate() {
            for (c, ct) in INPUT_TERMS.iter().enumerate() {
                for (e, et) in INPUT_TERMS.iter().enumerate() {
                    let consequent = match r + c + e {
                        0..=2 => DENY_LEANING,
                        3..=4 => CAUTIOUS,
                        _ => GRANT_LEANING,
                    };
                    rules.push(FuzzyRule {
                        antecedent: vec![
                            (RELIABILITY.into(), (*rt).into()),
                            (RELEVANCE.into(), (*ct).into()),
                            (ENGAGEMENT.into(), (*et).into()),
                        ],
                        consequent: consequent.into(),
                    });
                }
            }
        }
        Self::new(inputs, output, rules, operators).expect("level-sum table is complete")
    }

    pub fn inputs(&self) -> &[LinguisticVariable] {
        &self.inputs
    }

    pub fn output(&self) -> &LinguisticVariable {
        &self.output
    }

    pub fn rules(&self) -> &[FuzzyRule] {
        &self.rules
    }

    pub fn operators(&self) -> InferenceOperators {
        self.operators
    }

    pub(crate) fn compiled(&self) -> &CompiledRules {
        &self.compiled
    }

    pub fn load(path: &Path) -> Result<Self, FuzzyError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| FuzzyError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, FuzzyError> {
        enum Section {
            None,
            Input(usize),
            Output,
        }
        let mut inputs: Vec<(String, Vec<Term>)> = Vec::new();
        let mut output: Option<(String, Vec<Term>)> = None;
        let mut rules = Vec::new();
        let mut operators = InferenceOperators::default();
        let mut section = Section::None;

        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let err = |msg: &str| FuzzyError::Parse {
                line: line_no,
                message: msg.to_owned(),
            };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let words: Vec<&str> = line.split_whitespace().collect();
            match words[0] {
                "variable" => {
                    let [_, name] = words[..] else {
                        return Err(err("expected `variable <name>`"));
                    };
                    inputs.push((name.to_owned(), Vec::new()));
                    section = Section::Input(inputs.len() - 1);
                }
                "output" => {
                    let [_, name] = words[..] else {
                        return Err(err("expected `output <name>`"));
                    };
                    if output.is_some() {
                        return Err(err("output declared twice"));
                    }
                    output = Some((name.to_owned(), Vec::new()));
                    section = Section::Output;
                }
                "term" => {
                    let [_, name, a, b, c] = words[..] else {
                        return Err(err("expected `term <name> <a> <b> <c>`"));
                    };
                    let num = |s: &str| s.parse::<f64>().map_err(|_| err("bad number"));
                    let function = MembershipFunction::triangular(num(a)?, num(b)?, num(c)?)
                        .map_err(|e| err(&e.to_string()))?;
                    let term = Term {
                        name: name.to_owned(),
                        function,
                    };
                    match section {
                        Section::Input(i) => inputs[i].1.push(term),
                        Section::Output => output.as_mut().expect("in output").1.push(term),
                        Section::None => return Err(err("term outside a variable")),
                    }
                }
                "operators" => {
                    let [_, conj, acc] = words[..] else {
                        return Err(err("expected `operators <min|product> <max|bounded-sum>`"));
                    };
                    operators = InferenceOperators {
                        conjunction: match conj {
                            "min" => Conjunction::Min,
                            "product" => Conjunction::Product,
                            _ => return Err(err("unknown conjunction")),
                        },
                        accumulation: match acc {
                            "max" => Accumulation::Max,
                            "bounded-sum" => Accumulation::BoundedSum,
                            _ => return Err(err("unknown accumulation")),
                        },
                    };
                }
                "IF" => {
                    section = Section::None;
                    rules.push(parse_rule(&words).ok_or_else(|| {
                        err("expected `IF <var> IS <term> [AND ...] THEN <term>`")
                    })?);
                }
                other => return Err(err(&format!("unexpected `{other}`"))),
            }
        }
        let inputs = inputs
            .into_iter()
            .map(|(n, t)| LinguisticVariable::new(n, t))
            .collect::<Result<Vec<_>, _>>()?;
        let (out_name, out_terms) = output.ok_or(FuzzyError::Parse {
            line: 0,
            message: "no output variable".into(),
        })?;
        Self::new(
            inputs,
            LinguisticVariable::new(out_name, out_terms)?,
            rules,
            operators,
        )
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let write_var = |out: &mut String, kw: &str, v: &LinguisticVariable| {
            writeln!(out, "{kw} {}", v.name).unwrap();
            for t in &v.terms {
                let MembershipFunction::Triangular { a, b, c } = t.function;
                writeln!(out, "  term {} {a} {b} {c}", t.name).unwrap();
            }
        };
        for v in &self.inputs {
            write_var(&mut out, "variable", v);
        }
        write_var(&mut out, "output", &self.output);
        let conj = match self.operators.conjunction {
            Conjunction::Min => "min",
            Conjunction::Product => "product",
        };
        let acc = match self.operators.accumulation {
            Accumulation::Max => "max",
            Accumulation::BoundedSum => "bounded-sum",
        };
        writeln!(out, "operators {conj} {acc}").unwrap();
        for r in &self.rules {
            writeln!(out, "{}", r.to_line()).unwrap();
        }
        out
    }
}

fn parse_rule(words: &[&str]) -> Option<FuzzyRule> {
    let then = words.iter().position(|w| *w == "THEN")?;
    let [consequent] = words[then + 1..] else {
        return None;
    };
    let conds = &words[1..then];
    let mut antecedent = Vec::new();
    for chunk in conds.split(|w| *w == "AND") {
        let [var, "IS", term] = chunk else {
            return None;
        };
        antecedent.push(((*var).to_owned(), (*term).to_owned()));
    }
    (!antecedent.is_empty()).then(|| FuzzyRule {
        antecedent,
        consequent: consequent.to_owned(),
    })
}

fn first_missing(inputs: &[LinguisticVariable], seen: &HashSet<Vec<usize>>) -> String {
    let sizes: Vec<usize> = inputs.iter().map(|v| v.terms.len()).collect();
    let mut combo = vec![0usize; sizes.len()];
    loop {
        if !seen.contains(&combo) {
            return inputs
                .iter()
                .zip(&combo)
                .map(|(v, &t)| format!("{} IS {}", v.name, v.terms[t].name))
                .collect::<Vec<_>>()
                .join(" AND ");
        }
        let mut i = 0;
        loop {
            if i == sizes.len() {
                return String::new();
            }
            combo[i] += 1;
            if combo[i] < sizes[i] {
                break;
            }
            combo[i] = 0;
            i += 1;
        }
    }
}

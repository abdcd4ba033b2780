use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::FuzzyError;

/// Piecewise-linear membership function. Shoulders (`a == b` or `b == c`)
/// are allowed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum MembershipFunction {
    Triangular { a: f64, b: f64, c: f64 },
}

impl MembershipFunction {
    pub fn triangular(a: f64, b: f64, c: f64) -> Result<Self, FuzzyError> {
        if !(a.is_finite() && b.is_finite() && c.is_finite()) || a > b || b > c {
            return Err(FuzzyError::InvalidMembership { a, b, c });
        }
        Ok(MembershipFunction::Triangular { a, b, c })
    }

    pub fn degree(&self, x: f64) -> f64 {
        let MembershipFunction::Triangular { a, b, c } = *self;
        if x < a || x > c {
            0.0
        } else if x == b {
            1.0
        } else if x < b {
            ((x - a) / (b - a)).clamp(0.0, 1.0)
        } else {
            ((c - x) / (c - b)).clamp(0.0, 1.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub name: String,
    pub function: MembershipFunction,
}

/// A named quantity over `[0, 1]` with ordered linguistic terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinguisticVariable {
    pub name: String,
    pub terms: Vec<Term>,
}

impl LinguisticVariable {
    pub fn new(name: impl Into<String>, terms: Vec<Term>) -> Result<Self, FuzzyError> {
        let name = name.into();
        let mut seen = std::collections::HashSet::new();
        for t in &terms {
            if !seen.insert(t.name.as_str()) {
                return Err(FuzzyError::DuplicateTerm {
                    variable: name,
                    term: t.name.clone(),
                });
            }
        }
        if terms.is_empty() {
            return Err(FuzzyError::NoTerms(name));
        }
        Ok(Self { name, terms })
    }

    /// Low / Medium / High triangles peaking at 0, 0.5 and 1 (or the given
    /// names). Degrees sum to one everywhere on `[0, 1]`.
    pub fn three_term(name: impl Into<String>, names: [&str; 3]) -> Self {
        let tri = |a, b, c| MembershipFunction::triangular(a, b, c).expect("static shape");
        let shapes = [tri(0.0, 0.0, 0.5), tri(0.0, 0.5, 1.0), tri(0.5, 1.0, 1.0)];
        let terms = names
            .iter()
            .zip(shapes)
            .map(|(n, function)| Term {
                name: (*n).to_owned(),
                function,
            })
            .collect();
        Self::new(name, terms).expect("distinct names")
    }

    pub fn term_index(&self, term: &str) -> Option<usize> {
        self.terms.iter().position(|t| t.name == term)
    }

    /// Degrees in term order. `value` must lie in `[0, 1]`.
    pub fn degrees(&self, value: f64) -> Result<Vec<f64>, FuzzyError> {
        if !(0.0..=1.0).contains(&value) {
            return Err(FuzzyError::OutOfDomain {
                variable: self.name.clone(),
                value,
            });
        }
        Ok(self
            .terms
            .iter()
            .map(|t| t.function.degree(value))
            .collect())
    }
}

pub fn fuzzify(
    value: f64,
    variable: &LinguisticVariable,
) -> Result<BTreeMap<String, f64>, FuzzyError> {
    let degrees = variable.degrees(value)?;
    Ok(variable
        .terms
        .iter()
        .zip(degrees)
        .map(|(t, d)| (t.name.clone(), d))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_var() -> LinguisticVariable {
        LinguisticVariable::three_term("x", ["Low", "Medium", "High"])
    }

    #[test]
    fn peaks_and_midpoints() {
        let v = default_var();
        let at = |x| fuzzify(x, &v).unwrap();
        assert_eq!(at(0.0)["Low"], 1.0);
        assert_eq!(at(0.0)["Medium"], 0.0);
        assert_eq!(at(0.0)["High"], 0.0);
        assert_eq!(at(0.5)["Medium"], 1.0);
        assert_eq!(at(0.5)["Low"], 0.0);
        assert_eq!(at(0.5)["High"], 0.0);
        assert_eq!(at(0.25)["Low"], 0.5);
        assert_eq!(at(0.25)["Medium"], 0.5);
        assert_eq!(at(0.25)["High"], 0.0);
        assert_eq!(at(1.0)["High"], 1.0);
    }

    #[test]
    fn out_of_domain() {
        let v = default_var();
        assert!(matches!(
            fuzzify(1.0001, &v),
            Err(FuzzyError::OutOfDomain { .. })
        ));
        assert!(fuzzify(-0.1, &v).is_err());
        assert!(fuzzify(f64::NAN, &v).is_err());
    }

    #[test]
    fn partition_of_unity_on_fine_grid() {
        let v = default_var();
        for i in 0..=10_000 {
            let x = i as f64 / 10_000.0;
            let sum: f64 = v.degrees(x).unwrap().iter().sum();
            assert!((sum - 1.0).abs() < 1e-9, "x = {x}, sum = {sum}");
        }
    }

    #[test]
    fn invalid_shape_rejected() {
        assert!(MembershipFunction::triangular(0.5, 0.2, 1.0).is_err());
        assert!(MembershipFunction::triangular(0.0, 0.0, 0.0).is_ok());
    }
}

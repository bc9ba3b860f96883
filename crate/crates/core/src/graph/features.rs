//! MCQ-derived features: hand-mapped combinations of question responses.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::survey::{PointMatrix, Question, QuestionKind};

fn default_group_ratio() -> f64 {
    1.0
}

/// Boolean test over the option indices chosen for a feature's operands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicate {
    /// Some operand answer is one of these option indices.
    AnyIn(Vec<usize>),
    /// Every operand answer is one of these option indices.
    AllIn(Vec<usize>),
    /// All operands were answered with the same option index.
    AllEqual,
}

impl Predicate {
    fn eval(&self, values: &[f64]) -> bool {
        let is_in = |set: &[usize], v: f64| set.iter().any(|&o| o as f64 == v);
        match self {
            Predicate::AnyIn(set) => values.iter().any(|&v| is_in(set, v)),
            Predicate::AllIn(set) => values.iter().all(|&v| is_in(set, v)),
            Predicate::AllEqual => values.windows(2).all(|w| w[0] == w[1]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Formula {
    /// `(first − second) / group_ratio`.
    DifferenceOverRatio {
        #[serde(default = "default_group_ratio")]
        group_ratio: f64,
    },
    /// 1 when the predicate holds, else 0.
    Predicate { test: Predicate },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub operands: Vec<String>,
    pub formula: Formula,
}

impl FeatureSpec {
    pub fn difference(name: &str, first: &str, second: &str, group_ratio: f64) -> Self {
        Self {
            name: name.into(),
            operands: vec![first.into(), second.into()],
            formula: Formula::DifferenceOverRatio { group_ratio },
        }
    }

    pub fn predicate(name: &str, operands: &[&str], test: Predicate) -> Self {
        Self {
            name: name.into(),
            operands: operands.iter().map(|s| s.to_string()).collect(),
            formula: Formula::Predicate { test },
        }
    }

    /// One indicator feature per (MCQ question, option): `q3=1` is 1 when
    /// option 1 was chosen for `q3`.
    pub fn one_hot<'a, I>(questions: I) -> Vec<FeatureSpec>
    where
        I: IntoIterator<Item = &'a Question>,
    {
        let mut out = Vec::new();
        for q in questions {
            if q.kind != QuestionKind::Mcq {
                continue;
            }
            for opt in 0..q.options.len() {
                out.push(Self::predicate(
                    &format!("{}={opt}", q.id),
                    &[q.id.as_str()],
                    Predicate::AnyIn(vec![opt]),
                ));
            }
        }
        out
    }

    /// Checks operands against the questionnaire and the formula's parameters.
    pub fn validate(&self, questions: &[Question]) -> Result<()> {
        for op in &self.operands {
            match questions.iter().find(|q| &q.id == op) {
                Some(q) if q.kind == QuestionKind::Mcq => {}
                Some(_) => {
                    return Err(Error::Schema(format!(
                        "feature `{}`: operand `{op}` is not an MCQ question",
                        self.name
                    )))
                }
                None => {
                    return Err(Error::Schema(format!(
                        "feature `{}`: unknown operand question `{op}`",
                        self.name
                    )))
                }
            }
        }
        self.check_formula()
    }

    fn check_formula(&self) -> Result<()> {
        match &self.formula {
            Formula::DifferenceOverRatio { group_ratio } => {
                if self.operands.len() != 2 {
                    return Err(Error::Parameter(format!(
                        "feature `{}`: difference needs exactly 2 operands, got {}",
                        self.name,
                        self.operands.len()
                    )));
                }
                if !(group_ratio.is_finite() && *group_ratio > 0.0) {
                    return Err(Error::Parameter(format!(
                        "feature `{}`: group_ratio must be positive, got {group_ratio}",
                        self.name
                    )));
                }
            }
            Formula::Predicate { .. } => {
                if self.operands.is_empty() {
                    return Err(Error::Parameter(format!(
                        "feature `{}`: predicate needs at least one operand",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Named feature weights in spec order.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Features(pub Vec<(String, f64)>);

impl Features {
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.iter().find(|(n, _)| n == name).map(|(_, w)| *w)
    }
}

impl<S: Into<String>> FromIterator<(S, f64)> for Features {
    fn from_iter<I: IntoIterator<Item = (S, f64)>>(iter: I) -> Self {
        Features(iter.into_iter().map(|(n, w)| (n.into(), w)).collect())
    }
}

/// One candidate's encoded MCQ answers, addressed by question id.
#[derive(Debug, Clone, Copy)]
pub struct McqRow<'a> {
    pub columns: &'a [String],
    pub values: &'a [f64],
}

impl<'a> McqRow<'a> {
    pub fn new(columns: &'a [String], values: &'a [f64]) -> Self {
        Self { columns, values }
    }

    pub fn of(points: &'a PointMatrix, i: usize) -> Self {
        Self::new(points.columns(), points.row(i))
    }

    fn get(&self, question: &str) -> Option<f64> {
        self.columns
            .iter()
            .position(|c| c == question)
            .map(|j| self.values[j])
    }
}

pub fn derive_features(row: McqRow<'_>, specs: &[FeatureSpec]) -> Result<Features> {
    let mut out = Vec::with_capacity(specs.len());
    for spec in specs {
        spec.check_formula()?;
        let values = spec
            .operands
            .iter()
            .map(|q| {
                row.get(q).ok_or_else(|| {
                    Error::Input(format!(
                        "feature `{}`: no answer for operand question `{q}`",
                        spec.name
                    ))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        let w = match &spec.formula {
            Formula::DifferenceOverRatio { group_ratio } => (values[0] - values[1]) / group_ratio,
            Formula::Predicate { test } => {
                if test.eval(&values) {
                    1.0
                } else {
                    0.0
                }
            }
        };
        out.push((spec.name.clone(), w));
    }
    Ok(Features(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cols(ids: &[&str]) -> Vec<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn difference_over_ratio() {
        let c = cols(&["q1", "q2"]);
        let spec = FeatureSpec::difference("travel_1", "q1", "q2", 2.0);
        let f = derive_features(McqRow::new(&c, &[3.0, 1.0]), std::slice::from_ref(&spec)).unwrap();
        assert_eq!(f.get("travel_1"), Some(1.0));
        let f = derive_features(McqRow::new(&c, &[2.0, 2.0]), &[spec]).unwrap();
        assert_eq!(f.get("travel_1"), Some(0.0));
    }

    #[test]
    fn predicate_travel_with_unknown() {
        // option 1 on q4/q5/q7 = "travels with people they don't know"
        let c = cols(&["q4", "q5", "q7"]);
        let spec = FeatureSpec::predicate("travel_4", &["q4", "q5", "q7"], Predicate::AnyIn(vec![1]));
        let yes = derive_features(McqRow::new(&c, &[0.0, 1.0, 2.0]), std::slice::from_ref(&spec)).unwrap();
        assert_eq!(yes.get("travel_4"), Some(1.0));
        let no = derive_features(McqRow::new(&c, &[0.0, 2.0, 2.0]), &[spec]).unwrap();
        assert_eq!(no.get("travel_4"), Some(0.0));
    }

    #[test]
    fn other_predicates() {
        assert!(Predicate::AllIn(vec![0, 2]).eval(&[0.0, 2.0]));
        assert!(!Predicate::AllIn(vec![0, 2]).eval(&[0.0, 1.0]));
        assert!(Predicate::AllEqual.eval(&[3.0, 3.0, 3.0]));
        assert!(!Predicate::AllEqual.eval(&[3.0, 1.0]));
    }

    #[test]
    fn zero_group_ratio_is_parameter_error() {
        let c = cols(&["q1", "q2"]);
        let spec = FeatureSpec::difference("t", "q1", "q2", 0.0);
        assert!(matches!(
            derive_features(McqRow::new(&c, &[1.0, 0.0]), &[spec]),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn missing_operand_names_spec_and_question() {
        let c = cols(&["q1"]);
        let spec = FeatureSpec::difference("travel_2", "q1", "q3", 1.0);
        let err = derive_features(McqRow::new(&c, &[1.0]), &[spec]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("travel_2") && msg.contains("q3"), "{msg}");
    }

    #[test]
    fn spec_json_shape() {
        let json = r#"[
            {"name": "travel_1", "operands": ["q2", "q1"],
             "formula": {"kind": "difference_over_ratio", "group_ratio": 2.0}},
            {"name": "travel_3", "operands": ["q3", "q1"],
             "formula": {"kind": "difference_over_ratio"}},
            {"name": "travel_4", "operands": ["q4", "q5", "q7"],
             "formula": {"kind": "predicate", "test": {"any_in": [1]}}}
        ]"#;
        let specs: Vec<FeatureSpec> = serde_json::from_str(json).unwrap();
        assert_eq!(specs[0], FeatureSpec::difference("travel_1", "q2", "q1", 2.0));
        assert_eq!(
            specs[1].formula,
            Formula::DifferenceOverRatio { group_ratio: 1.0 }
        );
        assert_eq!(
            specs[2],
            FeatureSpec::predicate("travel_4", &["q4", "q5", "q7"], Predicate::AnyIn(vec![1]))
        );
    }
}

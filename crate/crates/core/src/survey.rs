//! Survey ingestion: loading, structural validation and numeric encoding of
//! MCQ / free-text questionnaires.
//!
//! The on-disk format is a single JSON document:
//!
//! ```json
//! {
//!   "questions": [
//!     {"id": "q1", "prompt": "...", "kind": "mcq", "attribute": "location",
//!      "options": ["coast", "hills"]},
//!     {"id": "q2", "prompt": "...", "kind": "text", "attribute": "hobbies"}
//!   ],
//!   "responses": [
//!     {"candidate_id": "c1", "answers": {"q1": 0, "q2": "reading books"}}
//!   ],
//!   "labels": {"c1": "rigid"}
//! }
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuestionKind {
    Mcq,
    Text,
}

/// Attribute categories a question can probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attribute {
    Location,
    Tradition,
    Religion,
    TravelingAttributes,
    BehaviorAttributes,
    WorkInformation,
    SocialAttributes,
    WeekRoutine,
    Hobbies,
    Events,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    pub prompt: String,
    pub kind: QuestionKind,
    pub attribute: Attribute,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub options: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Answer {
    Choice(usize),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateResponse {
    pub candidate_id: String,
    pub answers: BTreeMap<String, Answer>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyDataset {
    pub questions: Vec<Question>,
    pub responses: Vec<CandidateResponse>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<BTreeMap<String, String>>,
}

impl SurveyDataset {
    pub fn question(&self, id: &str) -> Option<&Question> {
        self.questions.iter().find(|q| q.id == id)
    }

    pub fn candidate_ids(&self) -> Vec<String> {
        self.responses.iter().map(|r| r.candidate_id.clone()).collect()
    }

    pub fn mcq_questions(&self) -> impl Iterator<Item = &Question> {
        self.questions.iter().filter(|q| q.kind == QuestionKind::Mcq)
    }

    pub fn text_questions(&self) -> impl Iterator<Item = &Question> {
        self.questions.iter().filter(|q| q.kind == QuestionKind::Text)
    }

    /// All free-text answers of one candidate, joined in questionnaire order.
    pub fn combined_text(&self, response: &CandidateResponse) -> String {
        let mut parts = Vec::new();
        for q in self.text_questions() {
            if let Some(Answer::Text(t)) = response.answers.get(&q.id) {
                parts.push(t.as_str());
            }
        }
        parts.join(" ")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = self.to_json()?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSurvey {
    questions: Vec<RawQuestion>,
    responses: Vec<RawResponse>,
    #[serde(default)]
    labels: Option<BTreeMap<String, String>>,
}

#[derive(Deserialize)]
struct RawQuestion {
    id: String,
    #[serde(default)]
    prompt: String,
    kind: String,
    attribute: Attribute,
    #[serde(default)]
    options: Vec<String>,
}

#[derive(Deserialize)]
struct RawResponse {
    candidate_id: String,
    answers: BTreeMap<String, Value>,
}

/// Load and schema-check a survey file.
pub fn load_survey(path: &Path) -> Result<SurveyDataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_survey(&text, &path.display().to_string())
}

/// Parse survey JSON; `context` names the source in error messages.
pub fn parse_survey(text: &str, context: &str) -> Result<SurveyDataset> {
    let raw: RawSurvey = serde_json::from_str(text).map_err(|e| Error::Parse {
        context: context.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;

    let mut questions = Vec::with_capacity(raw.questions.len());
    let mut seen = BTreeSet::new();
    for q in raw.questions {
        if q.id.is_empty() {
            return Err(Error::Schema("question with empty id".into()));
        }
        if !seen.insert(q.id.clone()) {
            return Err(Error::Schema(format!("duplicate question id `{}`", q.id)));
        }
        let kind = match q.kind.as_str() {
            "mcq" => QuestionKind::Mcq,
            "text" => QuestionKind::Text,
            other => {
                return Err(Error::UnsupportedKind(format!(
                    "question `{}` has kind `{other}` (expected \"mcq\" or \"text\")",
                    q.id
                )))
            }
        };
        match kind {
            QuestionKind::Mcq if q.options.len() < 2 => {
                return Err(Error::Schema(format!(
                    "MCQ question `{}` needs at least 2 options, found {}",
                    q.id,
                    q.options.len()
                )))
            }
            QuestionKind::Text if !q.options.is_empty() => {
                return Err(Error::Schema(format!(
                    "free-text question `{}` must not declare options",
                    q.id
                )))
            }
            _ => {}
        }
        questions.push(Question {
            id: q.id,
            prompt: q.prompt,
            kind,
            attribute: q.attribute,
            options: q.options,
        });
    }

    let by_id: BTreeMap<&str, &Question> = questions.iter().map(|q| (q.id.as_str(), q)).collect();
    let mut responses = Vec::with_capacity(raw.responses.len());
    let mut candidates = BTreeSet::new();
    for r in raw.responses {
        if !candidates.insert(r.candidate_id.clone()) {
            return Err(Error::Schema(format!(
                "duplicate candidate id `{}`",
                r.candidate_id
            )));
        }
        let mut answers = BTreeMap::new();
        for (qid, value) in r.answers {
            let q = by_id.get(qid.as_str()).ok_or_else(|| {
                Error::Schema(format!(
                    "candidate `{}` answers unknown question `{qid}`",
                    r.candidate_id
                ))
            })?;
            let answer = convert_answer(&r.candidate_id, q, value)?;
            answers.insert(qid, answer);
        }
        responses.push(CandidateResponse {
            candidate_id: r.candidate_id,
            answers,
        });
    }

    if let Some(labels) = &raw.labels {
        for id in labels.keys() {
            if !candidates.contains(id) {
                return Err(Error::Schema(format!(
                    "label given for unknown candidate `{id}`"
                )));
            }
        }
    }

    Ok(SurveyDataset {
        questions,
        responses,
        labels: raw.labels,
    })
}

fn convert_answer(candidate: &str, q: &Question, value: Value) -> Result<Answer> {
    match (q.kind, value) {
        (QuestionKind::Mcq, Value::Number(n)) => {
            let idx = n.as_u64().ok_or_else(|| {
                Error::Schema(format!(
                    "candidate `{candidate}`: MCQ answer to `{}` must be a non-negative integer, got {n}",
                    q.id
                ))
            })? as usize;
            if idx >= q.options.len() {
                return Err(Error::Schema(format!(
                    "candidate `{candidate}`: option index {idx} out of range for `{}` ({} options)",
                    q.id,
                    q.options.len()
                )));
            }
            Ok(Answer::Choice(idx))
        }
        (QuestionKind::Text, Value::String(s)) => Ok(Answer::Text(s)),
        (_, v @ (Value::Object(_) | Value::Array(_))) => Err(Error::UnsupportedKind(format!(
            "candidate `{candidate}`: answer to `{}` is {} (only option indices and text are supported)",
            q.id,
            if v.is_object() { "an object" } else { "an array" }
        ))),
        (kind, v) => Err(Error::Schema(format!(
            "candidate `{candidate}`: answer to `{}` has the wrong type for a {} question: {v}",
            q.id,
            match kind {
                QuestionKind::Mcq => "MCQ",
                QuestionKind::Text => "free-text",
            }
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    /// Blocks encoding or graph construction.
    Error,
    /// Tolerated downstream (e.g. an unanswered free-text question).
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "issue", rename_all = "snake_case")]
pub enum Issue {
    MissingAnswer { question: String },
    OutOfRange { question: String, index: usize, options: usize },
    EmptyText { question: String },
    UnknownQuestion { question: String },
    KindMismatch { question: String },
}

impl Issue {
    pub fn severity(&self, ds: &SurveyDataset) -> Severity {
        match self {
            Issue::MissingAnswer { question } => match ds.question(question).map(|q| q.kind) {
                Some(QuestionKind::Text) => Severity::Warning,
                _ => Severity::Error,
            },
            Issue::EmptyText { .. } => Severity::Warning,
            _ => Severity::Error,
        }
    }

    pub fn question(&self) -> &str {
        match self {
            Issue::MissingAnswer { question }
            | Issue::OutOfRange { question, .. }
            | Issue::EmptyText { question }
            | Issue::UnknownQuestion { question }
            | Issue::KindMismatch { question } => question,
        }
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Issue::MissingAnswer { question } => write!(f, "missing answer for `{question}`"),
            Issue::OutOfRange {
                question,
                index,
                options,
            } => write!(
                f,
                "answer to `{question}` out of range: index {index}, {options} options"
            ),
            Issue::EmptyText { question } => write!(f, "empty text answer for `{question}`"),
            Issue::UnknownQuestion { question } => {
                write!(f, "answer to unknown question `{question}`")
            }
            Issue::KindMismatch { question } => {
                write!(f, "answer to `{question}` does not match the question kind")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    /// Issues keyed by candidate id; only candidates with issues appear.
    pub issues: BTreeMap<String, Vec<Issue>>,
    /// Dataset-level problems (duplicate ids, dangling labels).
    pub dataset_issues: Vec<String>,
    pub passing: Vec<String>,
    pub failing: Vec<String>,
}

impl ValidationReport {
    pub fn passes(&self) -> bool {
        self.issues.is_empty() && self.dataset_issues.is_empty()
    }

    pub fn issue_count(&self) -> usize {
        self.issues.values().map(Vec::len).sum::<usize>() + self.dataset_issues.len()
    }

    /// True when some issue would make encoding or featurization fail.
    pub fn has_errors(&self, ds: &SurveyDataset) -> bool {
        !self.dataset_issues.is_empty()
            || self
                .issues
                .values()
                .flatten()
                .any(|i| i.severity(ds) == Severity::Error)
    }

    pub fn write_csv<W: Write>(&self, ds: &SurveyDataset, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["candidate_id", "severity", "question", "issue"])?;
        for msg in &self.dataset_issues {
            out.write_record(["", "error", "", msg.as_str()])?;
        }
        for (cand, issues) in &self.issues {
            for issue in issues {
                let sev = match issue.severity(ds) {
                    Severity::Error => "error",
                    Severity::Warning => "warning",
                };
                out.write_record([cand.as_str(), sev, issue.question(), &issue.to_string()])?;
            }
        }
        out.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Structural check of every candidate against the questionnaire. Never fails.
pub fn validate_dataset(ds: &SurveyDataset) -> ValidationReport {
    let mut report = ValidationReport::default();

    let mut qids = BTreeSet::new();
    for q in &ds.questions {
        if !qids.insert(q.id.as_str()) {
            report
                .dataset_issues
                .push(format!("duplicate question id `{}`", q.id));
        }
        if q.kind == QuestionKind::Mcq && q.options.len() < 2 {
            report
                .dataset_issues
                .push(format!("MCQ question `{}` has fewer than 2 options", q.id));
        }
        if q.kind == QuestionKind::Text && !q.options.is_empty() {
            report
                .dataset_issues
                .push(format!("free-text question `{}` declares options", q.id));
        }
    }
    let mut cids = BTreeSet::new();
    for r in &ds.responses {
        if !cids.insert(r.candidate_id.as_str()) {
            report
                .dataset_issues
                .push(format!("duplicate candidate id `{}`", r.candidate_id));
        }
    }
    if let Some(labels) = &ds.labels {
        for id in labels.keys() {
            if !cids.contains(id.as_str()) {
                report
                    .dataset_issues
                    .push(format!("label given for unknown candidate `{id}`"));
            }
        }
    }

    for r in &ds.responses {
        let mut issues = Vec::new();
        for q in &ds.questions {
            match (q.kind, r.answers.get(&q.id)) {
                (_, None) => issues.push(Issue::MissingAnswer {
                    question: q.id.clone(),
                }),
                (QuestionKind::Mcq, Some(Answer::Choice(i))) => {
                    if *i >= q.options.len() {
                        issues.push(Issue::OutOfRange {
                            question: q.id.clone(),
                            index: *i,
                            options: q.options.len(),
                        });
                    }
                }
                (QuestionKind::Text, Some(Answer::Text(t))) => {
                    if t.trim().is_empty() {
                        issues.push(Issue::EmptyText {
                            question: q.id.clone(),
                        });
                    }
                }
                _ => issues.push(Issue::KindMismatch {
                    question: q.id.clone(),
                }),
            }
        }
        for key in r.answers.keys() {
            if !qids.contains(key.as_str()) {
                issues.push(Issue::UnknownQuestion {
                    question: key.clone(),
                });
            }
        }
        if issues.is_empty() {
            report.passing.push(r.candidate_id.clone());
        } else {
            report.failing.push(r.candidate_id.clone());
            report.issues.insert(r.candidate_id.clone(), issues);
        }
    }
    report
}

/// Dense numeric matrix, one row per candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct PointMatrix {
    columns: Vec<String>,
    row_ids: Vec<String>,
    data: Vec<f64>,
}

impl PointMatrix {
    pub fn new(columns: Vec<String>, row_ids: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if row_ids.len() != rows.len() {
            return Err(Error::Input(format!(
                "{} row ids for {} rows",
                row_ids.len(),
                rows.len()
            )));
        }
        let dim = columns.len();
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::Input(format!(
                    "row {i} has {} entries, expected {dim}",
                    row.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::Input(format!("row {i} has non-finite entry {v}")));
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            columns,
            row_ids,
            data,
        })
    }

    /// Anonymous points: columns `x0..`, rows `0..`.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        let columns = (0..dim).map(|j| format!("x{j}")).collect();
        let ids = (0..rows.len()).map(|i| i.to_string()).collect();
        Self::new(columns, ids, rows)
    }

    pub fn n_rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.data[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.n_rows()).map(move |i| self.row(i))
    }

    /// Value of column `column` in row `i`.
    pub fn get(&self, i: usize, column: &str) -> Option<f64> {
        let j = self.columns.iter().position(|c| c == column)?;
        Some(self.row(i)[j])
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["candidate_id".to_string()];
        header.extend(self.columns.iter().cloned());
        out.write_record(&header)?;
        for (i, id) in self.row_ids.iter().enumerate() {
            let mut rec = vec![id.clone()];
            rec.extend(self.row(i).iter().map(|v| v.to_string()));
            out.write_record(&rec)?;
        }
        out.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Ordinal MCQ encoding: column j holds the 0-based option index chosen for
/// the j-th MCQ question. With `standardize`, columns are z-scored using the
/// population variance; constant columns become all zeros.
pub fn encode_mcq(ds: &SurveyDataset, standardize: bool) -> Result<PointMatrix> {
    let mcq: Vec<&Question> = ds.mcq_questions().collect();
    let mut rows = Vec::with_capacity(ds.responses.len());
    for r in &ds.responses {
        let mut row = Vec::with_capacity(mcq.len());
        for q in &mcq {
            match r.answers.get(&q.id) {
                Some(Answer::Choice(i)) => row.push(*i as f64),
                _ => {
                    return Err(Error::MissingAnswer {
                        candidate: r.candidate_id.clone(),
                        question: q.id.clone(),
                    })
                }
            }
        }
        rows.push(row);
    }

    if standardize && !rows.is_empty() {
        let n = rows.len() as f64;
        for j in 0..mcq.len() {
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            for r in rows.iter_mut() {
                r[j] = if var > 0.0 { (r[j] - mean) / sd } else { 0.0 };
            }
        }
    }

    PointMatrix::new(
        mcq.iter().map(|q| q.id.clone()).collect(),
        ds.candidate_ids(),
        rows,
    )
}

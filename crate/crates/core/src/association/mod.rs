//! Three-channel cultural association, team formation and evaluation.

mod config;
mod evaluate;
mod pipeline;
mod teams;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cluster::SimilarityMatrix;
use crate::error::{Error, Result};
use crate::graph::{build_graph, derive_features, gam_similarity, CandidateGraph, FeatureSpec, Features, McqRow};
use crate::survey::{encode_mcq, SurveyDataset};
use crate::text::{
    document_similarity, extract_context_vector, preprocess, ContextVector, EmbeddingTable, SimilarityMode,
    TextConfig, TokenList,
};

pub use config::{load_config, KRule, KSpec, PipelineConfig};
pub use evaluate::{evaluate_accuracy, AccuracyReport, MAX_LABELS};
pub use pipeline::{run_pipeline, run_until, RunSummary};
pub use teams::{form_teams, TeamAssignment};

/// Relative weights of the MCQ-graph, text-graph and text-vector channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelWeights {
    pub mcq_graph: f64,
    pub text_graph: f64,
    pub text_vector: f64,
}

impl Default for ChannelWeights {
    fn default() -> Self {
        Self {
            mcq_graph: 1.0,
            text_graph: 1.0,
            text_vector: 1.0,
        }
    }
}

impl ChannelWeights {
    pub fn as_array(&self) -> [f64; 3] {
        [self.mcq_graph, self.text_graph, self.text_vector]
    }

    pub fn validate(&self) -> Result<()> {
        let w = self.as_array();
        if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::Parameter(format!("channel weights must be non-negative, got {w:?}")));
        }
        if w.iter().all(|x| *x == 0.0) {
            return Err(Error::Parameter("channel weights are all zero".into()));
        }
        Ok(())
    }

    /// Weights scaled to sum to one.
    pub fn normalized(&self) -> Result<[f64; 3]> {
        self.validate()?;
        let w = self.as_array();
        let total: f64 = w.iter().sum();
        Ok(w.map(|x| x / total))
    }
}

/// Weighted mean of the three channel scores, weights normalized to sum 1.
pub fn overall_association(s_mcq: f64, s_tgraph: f64, s_tvec: f64, weights: &ChannelWeights) -> Result<f64> {
    combine_channels([Some(s_mcq), Some(s_tgraph), Some(s_tvec)], weights)
}

/// Like [`overall_association`], but a `None` channel (nothing to compare on
/// either side) is left out and the remaining weights are renormalized. With
/// no weighted channel left the score is 0.
pub fn combine_channels(scores: [Option<f64>; 3], weights: &ChannelWeights) -> Result<f64> {
    let w = weights.normalized()?;
    let mut num = 0.0;
    let mut den = 0.0;
    for (s, w) in scores.iter().zip(w) {
        if let Some(s) = s {
            if !(0.0..=1.0).contains(s) {
                return Err(Error::Input(format!("channel score {s} is outside [0, 1]")));
            }
            num += w * s;
            den += w;
        }
    }
    Ok(if den > 0.0 { (num / den).clamp(0.0, 1.0) } else { 0.0 })
}

/// Settings that shape the association matrix.
#[derive(Debug, Clone)]
pub struct AssociationSettings {
    pub features: Vec<FeatureSpec>,
    pub weights: ChannelWeights,
    pub top_n: usize,
    pub match_threshold: f64,
    pub text: TextConfig,
}

/// One candidate's derived inputs to the association channels.
#[derive(Debug, Clone)]
pub struct CandidateProfile {
    pub id: String,
    pub features: Features,
    pub tokens: TokenList,
    pub context: ContextVector,
    /// `None` when the candidate has no MCQ features.
    pub mcq_graph: Option<CandidateGraph>,
    /// `None` when the candidate wrote no usable text.
    pub text_graph: Option<CandidateGraph>,
}

/// Features, tokens, context vectors and the two graphs for every candidate.
pub fn build_profiles(ds: &SurveyDataset, settings: &AssociationSettings) -> Result<Vec<CandidateProfile>> {
    let raw = encode_mcq(ds, false)?;
    for spec in &settings.features {
        spec.validate(&ds.questions)?;
    }
    let mut out = Vec::with_capacity(ds.responses.len());
    for (i, r) in ds.responses.iter().enumerate() {
        let features = derive_features(McqRow::of(&raw, i), &settings.features)?;
        let tokens = preprocess(&ds.combined_text(r), &settings.text);
        let context = extract_context_vector(&tokens, settings.top_n)?;
        let mcq_graph = if features.is_empty() {
            None
        } else {
            Some(build_graph(&features, &ContextVector::default())?)
        };
        let text_graph = if context.is_empty() {
            None
        } else {
            Some(build_graph(&Features::default(), &context)?)
        };
        out.push(CandidateProfile {
            id: r.candidate_id.clone(),
            features,
            tokens,
            context,
            mcq_graph,
            text_graph,
        });
    }
    Ok(out)
}

/// Per-pair channel scores and the combined association.
#[derive(Debug, Clone, PartialEq)]
pub struct AssociationReport {
    pub candidates: Vec<String>,
    pub weights: ChannelWeights,
    /// `(i, j, [mcq_graph, text_graph, text_vector], combined)` for i < j.
    pub pairs: Vec<(usize, usize, [Option<f64>; 3], f64)>,
    pub matrix: SimilarityMatrix,
}

impl AssociationReport {
    /// `candidate_a,candidate_b,mcq_graph,text_graph,text_vector,combined`;
    /// an empty cell marks a channel with nothing to compare.
    pub fn write_pairs_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["candidate_a", "candidate_b", "mcq_graph", "text_graph", "text_vector", "combined"])?;
        for (i, j, ch, c) in &self.pairs {
            let cell = |s: &Option<f64>| s.map(|v| v.to_string()).unwrap_or_default();
            out.write_record([
                self.candidates[*i].clone(),
                self.candidates[*j].clone(),
                cell(&ch[0]),
                cell(&ch[1]),
                cell(&ch[2]),
                c.to_string(),
            ])?;
        }
        out.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

fn graph_channel(a: &Option<CandidateGraph>, b: &Option<CandidateGraph>, table: &EmbeddingTable, threshold: f64) -> Option<f64> {
    match (a, b) {
        (Some(a), Some(b)) => Some(gam_similarity(a, b, table, threshold)),
        (None, None) => None,
        _ => Some(0.0),
    }
}

/// Association over prepared profiles. Each unordered pair is scored once and
/// mirrored, so the matrix is exactly symmetric with a unit diagonal.
pub fn associate(profiles: &[CandidateProfile], table: &EmbeddingTable, settings: &AssociationSettings) -> Result<AssociationReport> {
    settings.weights.validate()?;
    let n = profiles.len();
    let mut rows = vec![vec![0.0; n]; n];
    let mut pairs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        rows[i][i] = 1.0;
        for j in i + 1..n {
            let (a, b) = (&profiles[i], &profiles[j]);
            let vector = if a.tokens.is_empty() && b.tokens.is_empty() {
                None
            } else {
                Some(document_similarity(&a.tokens, &b.tokens, table, SimilarityMode::Hybrid))
            };
            let channels = [
                graph_channel(&a.mcq_graph, &b.mcq_graph, table, settings.match_threshold),
                graph_channel(&a.text_graph, &b.text_graph, table, settings.match_threshold),
                vector,
            ];
            let combined = combine_channels(channels, &settings.weights)
                .map_err(|e| Error::Input(format!("pair ({}, {}): {e}", a.id, b.id)))?;
            rows[i][j] = combined;
            rows[j][i] = combined;
            pairs.push((i, j, channels, combined));
        }
    }
    Ok(AssociationReport {
        candidates: profiles.iter().map(|p| p.id.clone()).collect(),
        weights: settings.weights,
        pairs,
        matrix: SimilarityMatrix::new(rows)?,
    })
}

/// Builds profiles and scores every pair.
pub fn association_matrix(ds: &SurveyDataset, settings: &AssociationSettings, table: &EmbeddingTable) -> Result<AssociationReport> {
    associate(&build_profiles(ds, settings)?, table, settings)
}

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ChannelWeights;
use crate::error::{Error, Result};
use crate::graph::FeatureSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KRule {
    Elbow,
    Silhouette,
}

/// A fixed cluster count (`"k": 3`) or a selection rule (`"k": "elbow"`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KSpec {
    Fixed(usize),
    Select(KRule),
}

impl Default for KSpec {
    fn default() -> Self {
        KSpec::Select(KRule::Elbow)
    }
}

fn default_top_n() -> usize {
    10
}
fn default_threshold() -> f64 {
    0.5
}
fn default_k_max() -> usize {
    8
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}
fn default_true() -> bool {
    true
}

/// JSON pipeline configuration. Relative paths are resolved against the
/// directory holding the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub survey: PathBuf,
    pub embeddings: PathBuf,
    /// Replaces the built-in English stop-word list, one word per line.
    #[serde(default)]
    pub stop_words: Option<PathBuf>,
    /// Empty means one indicator feature per MCQ option.
    #[serde(default)]
    pub features: Vec<FeatureSpec>,
    #[serde(default)]
    pub weights: ChannelWeights,
    #[serde(default = "default_top_n")]
    pub top_n: usize,
    #[serde(default = "default_threshold")]
    pub match_threshold: f64,
    #[serde(default)]
    pub k: KSpec,
    /// Largest k tried by elbow / silhouette selection.
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// Re-key the embedding vocabulary through the tokenizer and stemmer so
    /// that surface words in the file meet stemmed context terms.
    #[serde(default = "default_true")]
    pub stem_vocabulary: bool,
    /// z-score MCQ columns before k-means, k selection and PCA.
    #[serde(default = "default_true")]
    pub standardize: bool,
}

impl PipelineConfig {
    /// Minimal config with defaults for everything but the two input files.
    pub fn new(survey: impl Into<PathBuf>, embeddings: impl Into<PathBuf>) -> Self {
        Self {
            survey: survey.into(),
            embeddings: embeddings.into(),
            stop_words: None,
            features: Vec::new(),
            weights: ChannelWeights::default(),
            top_n: default_top_n(),
            match_threshold: default_threshold(),
            k: KSpec::default(),
            k_max: default_k_max(),
            seed: 0,
            output: default_output(),
            stem_vocabulary: true,
            standardize: true,
        }
    }

    pub fn parse(text: &str, context: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Parse {
            context: context.to_string(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        if self.top_n == 0 {
            return Err(Error::Parameter("top_n must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.match_threshold) {
            return Err(Error::Parameter(format!(
                "match_threshold must lie in [0, 1], got {}",
                self.match_threshold
            )));
        }
        match self.k {
            KSpec::Fixed(0) => return Err(Error::Parameter("k must be at least 1".into())),
            KSpec::Select(KRule::Elbow) if self.k_max < 3 => {
                return Err(Error::Parameter(format!("elbow needs k_max >= 3, got {}", self.k_max)))
            }
            KSpec::Select(KRule::Silhouette) if self.k_max < 2 => {
                return Err(Error::Parameter(format!("silhouette needs k_max >= 2, got {}", self.k_max)))
            }
            _ => {}
        }
        Ok(())
    }

    /// Resolves relative paths against `base`.
    pub fn resolve(mut self, base: &Path) -> Self {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.survey);
        fix(&mut self.embeddings);
        fix(&mut self.output);
        if let Some(p) = self.stop_words.as_mut() {
            fix(p);
        }
        self
    }
}

pub fn load_config(path: &Path) -> Result<PipelineConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let cfg = PipelineConfig::parse(&text, &path.display().to_string())?;
    let base = path.parent().unwrap_or(Path::new(""));
    Ok(cfg.resolve(base))
}

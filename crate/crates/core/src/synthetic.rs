//! Synthetic surveys drawn from a few cultural prototypes, with known labels.
//!
//! Each prototype prefers one option per MCQ question and draws its free text
//! from its own term pool. With probability `noise` an answer ignores the
//! prototype: an MCQ choice becomes uniform, a text word comes from another
//! prototype's pool.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::association::{KSpec, PipelineConfig};
use crate::error::{Error, Result};
use crate::survey::{Answer, Attribute, CandidateResponse, Question, QuestionKind, SurveyDataset};
use crate::text::EmbeddingTable;

const ATTRIBUTES: [Attribute; 10] = [
    Attribute::Location,
    Attribute::Tradition,
    Attribute::Religion,
    Attribute::TravelingAttributes,
    Attribute::BehaviorAttributes,
    Attribute::WorkInformation,
    Attribute::SocialAttributes,
    Attribute::WeekRoutine,
    Attribute::Hobbies,
    Attribute::Events,
];

const POOLS: [&[&str]; 3] = [
    &[
        "temple", "festival", "prayer", "lamp", "sweets", "rangoli", "pilgrimage", "saree", "hymn", "ritual",
        "ancestors", "harvest",
    ],
    &[
        "football", "concert", "guitar", "rap", "party", "beach", "surfing", "gaming", "pizza", "dancing",
        "stadium", "skateboard",
    ],
    &[
        "library", "novel", "poetry", "museum", "chess", "history", "painting", "opera", "theatre", "garden",
        "philosophy", "calligraphy",
    ],
];

const SHARED: &[&str] = &["weekend", "family", "friends", "city", "food", "home", "evening", "people"];

const FILLERS: &[&str] = &["and", "the", "with", "my", "i", "like", "to", "a", "on", "we"];

/// Generator settings. The default is the 100-candidate benchmark set.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub candidates: usize,
    /// At most 3 (one term pool per prototype).
    pub prototypes: usize,
    pub mcq_questions: usize,
    pub text_questions: usize,
    pub options: usize,
    /// Probability that the preferred option is chosen before noise.
    pub preference: f64,
    pub noise: f64,
    pub words_per_answer: usize,
    pub embedding_dim: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            candidates: 100,
            prototypes: 3,
            mcq_questions: 17,
            text_questions: 5,
            options: 4,
            preference: 0.8,
            noise: 0.1,
            words_per_answer: 8,
            embedding_dim: 16,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticSurvey {
    pub dataset: SurveyDataset,
    pub embeddings: EmbeddingTable,
}

fn check(spec: &SyntheticSpec) -> Result<()> {
    if spec.prototypes < 1 || spec.prototypes > POOLS.len() {
        return Err(Error::Parameter(format!("prototypes must lie in 1..={}", POOLS.len())));
    }
    if spec.options < 2 || spec.options < spec.prototypes {
        return Err(Error::Parameter("need at least 2 options and one per prototype".into()));
    }
    if !(0.0..=1.0).contains(&spec.noise) || !(0.0..=1.0).contains(&spec.preference) {
        return Err(Error::Parameter("noise and preference are probabilities".into()));
    }
    if spec.candidates == 0 || spec.embedding_dim == 0 {
        return Err(Error::Parameter("need at least one candidate and one embedding dimension".into()));
    }
    Ok(())
}

pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticSurvey> {
    check(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n_questions = spec.mcq_questions + spec.text_questions;
    let questions: Vec<Question> = (0..n_questions)
        .map(|i| {
            let attribute = ATTRIBUTES[i % ATTRIBUTES.len()];
            let mcq = i < spec.mcq_questions;
            Question {
                id: format!("q{}", i + 1),
                prompt: format!("Question {} ({:?})", i + 1, attribute),
                kind: if mcq { QuestionKind::Mcq } else { QuestionKind::Text },
                attribute,
                options: if mcq {
                    (1..=spec.options).map(|o| format!("option {o}")).collect()
                } else {
                    Vec::new()
                },
            }
        })
        .collect();

    // distinct preferred option per prototype for each MCQ question
    let preferred: Vec<Vec<usize>> = (0..spec.mcq_questions)
        .map(|_| {
            let mut opts: Vec<usize> = (0..spec.options).collect();
            opts.shuffle(&mut rng);
            opts.truncate(spec.prototypes);
            opts
        })
        .collect();

    let mut protos: Vec<usize> = (0..spec.candidates).map(|i| i % spec.prototypes).collect();
    protos.shuffle(&mut rng);

    let mut responses = Vec::with_capacity(spec.candidates);
    let mut labels = BTreeMap::new();
    for (c, &p) in protos.iter().enumerate() {
        let id = format!("c{:03}", c + 1);
        let mut answers = BTreeMap::new();
        for (q, question) in questions.iter().enumerate() {
            let answer = if q < spec.mcq_questions {
                Answer::Choice(mcq_answer(&mut rng, spec, preferred[q][p]))
            } else {
                Answer::Text(text_answer(&mut rng, spec, p))
            };
            answers.insert(question.id.clone(), answer);
        }
        labels.insert(id.clone(), format!("prototype_{}", p + 1));
        responses.push(CandidateResponse {
            candidate_id: id,
            answers,
        });
    }

    Ok(SyntheticSurvey {
        dataset: SurveyDataset {
            questions,
            responses,
            labels: Some(labels),
        },
        embeddings: embeddings(&mut rng, spec)?,
    })
}

fn mcq_answer(rng: &mut ChaCha8Rng, spec: &SyntheticSpec, preferred: usize) -> usize {
    if rng.random_bool(spec.noise) {
        return rng.random_range(0..spec.options);
    }
    if rng.random_bool(spec.preference) {
        preferred
    } else {
        // uniform over the other options
        let o = rng.random_range(0..spec.options - 1);
        if o >= preferred {
            o + 1
        } else {
            o
        }
    }
}

fn text_answer(rng: &mut ChaCha8Rng, spec: &SyntheticSpec, proto: usize) -> String {
    let mut words = Vec::new();
    for _ in 0..spec.words_per_answer {
        let pool = if rng.random_bool(spec.noise) && spec.prototypes > 1 {
            let other = (proto + rng.random_range(1..spec.prototypes)) % spec.prototypes;
            POOLS[other]
        } else if rng.random_bool(0.25) {
            SHARED
        } else {
            POOLS[proto]
        };
        if rng.random_bool(0.5) {
            words.push(*FILLERS.choose(rng).expect("fillers"));
        }
        words.push(*pool.choose(rng).expect("non-empty pool"));
    }
    words.join(" ")
}

fn embeddings(rng: &mut ChaCha8Rng, spec: &SyntheticSpec) -> Result<EmbeddingTable> {
    let normal = Normal::new(0.0, 1.0).expect("valid normal");
    let dim = spec.embedding_dim;
    let mut table = EmbeddingTable::new(dim)?;
    for pool in &POOLS[..spec.prototypes] {
        let centre: Vec<f64> = (0..dim).map(|_| normal.sample(rng)).collect();
        for w in pool.iter() {
            let v = centre.iter().map(|c| c + 0.5 * normal.sample(rng)).collect();
            table.insert(w.to_string(), v)?;
        }
    }
    for w in SHARED {
        table.insert(w.to_string(), (0..dim).map(|_| normal.sample(rng)).collect())?;
    }
    Ok(table)
}

/// Writes `survey.json`, `embeddings.txt` and `config.json` into `dir` and
/// returns the config path. The config uses `k` clusters and writes to
/// `dir/out`.
pub fn write_bundle(spec: &SyntheticSpec, dir: &Path, k: KSpec) -> Result<PathBuf> {
    let s = generate(spec)?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    s.dataset.save(&dir.join("survey.json"))?;
    let emb = dir.join("embeddings.txt");
    let mut buf = Vec::new();
    s.embeddings.write(&mut buf).map_err(|e| Error::io(&emb, e))?;
    fs::write(&emb, buf).map_err(|e| Error::io(&emb, e))?;
    let mut cfg = PipelineConfig::new("survey.json", "embeddings.txt");
    cfg.k = k;
    cfg.seed = spec.seed;
    let path = dir.join("config.json");
    let text = serde_json::to_string_pretty(&cfg)? + "\n";
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::survey::validate_dataset;

    #[test]
    fn shape_and_validity() {
        let s = generate(&SyntheticSpec::default()).unwrap();
        let ds = &s.dataset;
        assert_eq!(ds.questions.len(), 22);
        assert_eq!(ds.responses.len(), 100);
        assert!(validate_dataset(ds).passes());
        let labels = ds.labels.as_ref().unwrap();
        let mut counts = BTreeMap::new();
        for l in labels.values() {
            *counts.entry(l.as_str()).or_insert(0) += 1;
        }
        assert_eq!(counts.values().copied().collect::<Vec<_>>(), vec![34, 33, 33]);
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate(&SyntheticSpec::default()).unwrap();
        let b = generate(&SyntheticSpec::default()).unwrap();
        assert_eq!(a.dataset, b.dataset);
        let c = generate(&SyntheticSpec {
            seed: 8,
            ..SyntheticSpec::default()
        })
        .unwrap();
        assert_ne!(a.dataset, c.dataset);
    }

    #[test]
    fn bad_specs() {
        for spec in [
            SyntheticSpec {
                prototypes: 4,
                ..SyntheticSpec::default()
            },
            SyntheticSpec {
                noise: 1.5,
                ..SyntheticSpec::default()
            },
            SyntheticSpec {
                options: 2,
                ..SyntheticSpec::default()
            },
        ] {
            assert!(generate(&spec).is_err());
        }
    }
}

//! Free-text processing: tokenization, term and context vectors, and
//! lexical / embedding-based similarity.

mod embedding;
pub mod stem;
pub mod stopwords;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

pub use embedding::{load_embeddings, parse_embeddings, EmbeddingTable};
pub use stem::porter_stem;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StemmerKind {
    #[default]
    Porter,
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TextConfig {
    pub stop_words: BTreeSet<String>,
    pub stemmer: StemmerKind,
}

impl Default for TextConfig {
    fn default() -> Self {
        Self {
            stop_words: stopwords::english(),
            stemmer: StemmerKind::Porter,
        }
    }
}

impl TextConfig {
    pub fn with_stop_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            stop_words: words.into_iter().map(Into::into).collect(),
            stemmer: StemmerKind::Porter,
        }
    }

    fn stem(&self, word: &str) -> String {
        match self.stemmer {
            StemmerKind::Porter => porter_stem(word),
            StemmerKind::None => word.to_string(),
        }
    }

    /// Maps a vocabulary entry (e.g. from an embedding file) to the token it
    /// would become, or `None` if it is not a single surviving token.
    pub fn normalize_term(&self, term: &str) -> Option<String> {
        let mut tokens = preprocess(term, self).0;
        if tokens.len() == 1 {
            tokens.pop()
        } else {
            None
        }
    }
}

/// Normalized tokens in document order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TokenList(pub Vec<String>);

impl TokenList {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

impl<S: Into<String>> FromIterator<S> for TokenList {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        TokenList(iter.into_iter().map(Into::into).collect())
    }
}

/// Lowercase, split on non-alphanumeric characters, drop stop words, stem.
/// A stem that itself lands on a stop word is dropped as well.
pub fn preprocess(text: &str, config: &TextConfig) -> TokenList {
    let lower = text.to_lowercase();
    let mut out = Vec::new();
    for raw in lower.split(|c: char| !c.is_alphanumeric()) {
        if raw.is_empty() || config.stop_words.contains(raw) {
            continue;
        }
        let stem = config.stem(raw);
        if stem.is_empty() || config.stop_words.contains(&stem) {
            continue;
        }
        out.push(stem);
    }
    TokenList(out)
}

/// Normalized term frequencies; weights are positive and sum to one.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TermVector(BTreeMap<String, f64>);

impl TermVector {
    pub fn get(&self, term: &str) -> f64 {
        self.0.get(term).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn cosine(&self, other: &TermVector) -> f64 {
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        let dot: f64 = small.iter().map(|(t, w)| w * large.get(t)).sum();
        let na: f64 = self.0.values().map(|w| w * w).sum();
        let nb: f64 = other.0.values().map(|w| w * w).sum();
        ratio(dot, na, nb)
    }
}

pub fn term_vector(tokens: &TokenList) -> TermVector {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for t in tokens.iter() {
        *counts.entry(t.to_string()).or_default() += 1;
    }
    let total = tokens.len() as f64;
    TermVector(
        counts
            .into_iter()
            .map(|(t, c)| (t, c as f64 / total))
            .collect(),
    )
}

/// `dot / sqrt(|a|^2 |b|^2)`, clamped to [-1, 1]; zero vectors give 0.
fn ratio(dot: f64, norm_a_sq: f64, norm_b_sq: f64) -> f64 {
    let denom = (norm_a_sq * norm_b_sq).sqrt();
    if denom == 0.0 || !denom.is_finite() {
        return 0.0;
    }
    (dot / denom).clamp(-1.0, 1.0)
}

/// Cosine of the angle between two dense vectors of equal length.
/// Returns 0 when either vector is zero.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "cosine of vectors of different length");
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    ratio(dot, na, nb)
}

/// Embedding cosine of two terms; 0 if either is out of vocabulary.
pub fn term_similarity(t1: &str, t2: &str, table: &EmbeddingTable) -> f64 {
    match (table.get(t1), table.get(t2)) {
        (Some(a), Some(b)) => cosine_similarity(a, b),
        _ => 0.0,
    }
}

/// Ranked `(term, score)` pairs: scores non-increasing, ties by term.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ContextVector(Vec<(String, f64)>);

impl ContextVector {
    /// Ranks arbitrary non-negative scores with the context-vector ordering.
    pub fn from_scores(mut entries: Vec<(String, f64)>) -> Result<Self> {
        if let Some((t, s)) = entries.iter().find(|(_, s)| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::Input(format!("invalid score {s} for `{t}`")));
        }
        sort_ranked(&mut entries);
        Ok(Self(entries))
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(|(t, _)| t.as_str())
    }

    pub fn scores(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().map(|(_, s)| *s)
    }

    /// Appends `candidate_id,term,score` rows.
    pub fn write_csv_rows<W: Write>(
        &self,
        candidate_id: &str,
        out: &mut csv::Writer<W>,
    ) -> Result<()> {
        for (t, s) in &self.0 {
            out.write_record([candidate_id, t.as_str(), &s.to_string()])?;
        }
        Ok(())
    }
}

fn sort_ranked(entries: &mut [(String, f64)]) {
    entries.sort_by(|(ta, sa), (tb, sb)| sb.total_cmp(sa).then_with(|| ta.cmp(tb)));
}

/// The `top_n` highest-frequency terms of `tokens`.
pub fn extract_context_vector(tokens: &TokenList, top_n: usize) -> Result<ContextVector> {
    if top_n == 0 {
        return Err(Error::Parameter("top_n must be at least 1".into()));
    }
    let mut entries: Vec<(String, f64)> = term_vector(tokens)
        .0
        .into_iter()
        .collect();
    sort_ranked(&mut entries);
    entries.truncate(top_n);
    Ok(ContextVector(entries))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimilarityMode {
    Lexical,
    Semantic,
    #[default]
    Hybrid,
}

/// Mean embedding over the in-vocabulary tokens (with multiplicity).
fn mean_embedding(tokens: &TokenList, table: &EmbeddingTable) -> Option<Vec<f64>> {
    let mut acc = vec![0.0; table.dim()];
    let mut n = 0usize;
    for t in tokens.iter() {
        if let Some(v) = table.get(t) {
            acc.iter_mut().zip(v).for_each(|(a, x)| *a += x);
            n += 1;
        }
    }
    (n > 0).then(|| acc.into_iter().map(|x| x / n as f64).collect())
}

fn semantic(d1: &TokenList, d2: &TokenList, table: &EmbeddingTable) -> Option<f64> {
    let a = mean_embedding(d1, table)?;
    let b = mean_embedding(d2, table)?;
    Some(cosine_similarity(&a, &b))
}

/// Document similarity in [0, 1].
///
/// Hybrid averages the lexical and semantic scores; when either document has
/// no in-vocabulary token the semantic score is undefined and hybrid falls
/// back to the lexical score alone.
pub fn document_similarity(
    d1: &TokenList,
    d2: &TokenList,
    table: &EmbeddingTable,
    mode: SimilarityMode,
) -> f64 {
    if d1.is_empty() || d2.is_empty() {
        return 0.0;
    }
    let lexical = || term_vector(d1).cosine(&term_vector(d2));
    let score = match mode {
        SimilarityMode::Lexical => lexical(),
        SimilarityMode::Semantic => semantic(d1, d2, table).unwrap_or(0.0),
        SimilarityMode::Hybrid => match semantic(d1, d2, table) {
            Some(s) => (lexical() + s.max(0.0)) / 2.0,
            None => lexical(),
        },
    };
    score.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(words: &[&str]) -> TokenList {
        words.iter().copied().collect()
    }

    #[test]
    fn preprocess_examples() {
        let cfg = TextConfig::default();
        assert!(preprocess("", &cfg).is_empty());
        let cfg = TextConfig::with_stop_words(["the", "and"]);
        assert_eq!(preprocess("The cats and the CATS", &cfg), toks(&["cat", "cat"]));
        assert_eq!(
            preprocess("Harry-Potter!!", &TextConfig::default()),
            toks(&["harri", "potter"])
        );
    }

    #[test]
    fn preprocess_drops_stems_that_are_stop_words() {
        // "wills" is not a stop word but stems to "will", which is
        let out = preprocess("wills books", &TextConfig::default());
        assert_eq!(out, toks(&["book"]));
    }

    #[test]
    fn unstemmed_config() {
        let cfg = TextConfig {
            stemmer: StemmerKind::None,
            ..TextConfig::default()
        };
        assert_eq!(preprocess("Cats, dogs", &cfg), toks(&["cats", "dogs"]));
    }

    #[test]
    fn term_vector_examples() {
        let tv = term_vector(&toks(&["book", "book", "rap"]));
        assert_eq!(tv.get("book"), 2.0 / 3.0);
        assert_eq!(tv.get("rap"), 1.0 / 3.0);
        assert_eq!(tv.len(), 2);
        assert!(term_vector(&TokenList::default()).is_empty());
        assert_eq!(term_vector(&toks(&["x"])).get("x"), 1.0);
    }

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]), 0.0);
        assert_eq!(cosine_similarity(&[3.0, 4.0], &[3.0, 4.0]), 1.0);
        assert!((cosine_similarity(&[1.0, 1.0], &[1.0, 0.0]) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(cosine_similarity(&[0.0, 0.0], &[0.0, 0.0]), 0.0);
        assert_eq!(cosine_similarity(&[0.0, 0.0], &[1.0, 2.0]), 0.0);
        assert_eq!(cosine_similarity(&[1.0, 2.0], &[-1.0, -2.0]), -1.0);
    }

    #[test]
    fn term_similarity_examples() {
        let t = EmbeddingTable::from_entries(
            3,
            [("a", vec![1.0, 0.0, 0.0]), ("b", vec![0.0, 1.0, 0.0]), ("c", vec![0.3, 0.1, 2.0])],
        )
        .unwrap();
        assert_eq!(term_similarity("c", "c", &t), 1.0);
        assert_eq!(term_similarity("zzz", "a", &t), 0.0);
        assert_eq!(term_similarity("a", "b", &t), 0.0);
    }

    #[test]
    fn context_vector_examples() {
        assert!(extract_context_vector(&TokenList::default(), 5)
            .unwrap()
            .is_empty());
        let cv = extract_context_vector(&toks(&["b", "a", "c"]), 10).unwrap();
        assert_eq!(cv.terms().collect::<Vec<_>>(), ["a", "b", "c"]);
        assert!((cv.scores().sum::<f64>() - 1.0).abs() < 1e-12);
        let cv = extract_context_vector(&toks(&["z", "z", "a", "m", "m", "q"]), 2).unwrap();
        assert_eq!(
            cv.entries(),
            &[("m".to_string(), 2.0 / 6.0), ("z".to_string(), 2.0 / 6.0)]
        );
        assert!(matches!(
            extract_context_vector(&toks(&["a"]), 0),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn context_vector_ranks_reference_scores() {
        // (term, score) pairs of a published example context vector, shuffled
        let published = [
            ("book", 0.08781022329052053),
            ("series", 0.08314971582897987),
            ("rap", 0.07726249198125512),
            ("people", 0.07468618760293577),
            ("harry", 0.07142857142857142),
            ("snape", 0.07142857142857142),
            ("khatam", 0.07142857142857142),
            ("gulab", 0.07142857142857142),
            ("jamun", 0.07142857142857142),
            ("indian", 0.06976656954940326),
        ];
        let mut shuffled: Vec<(String, f64)> =
            published.iter().map(|(t, s)| (t.to_string(), *s)).collect();
        shuffled.reverse();
        shuffled.swap(0, 4);
        let cv = ContextVector::from_scores(shuffled).unwrap();
        let scores: Vec<f64> = cv.scores().collect();
        let expected: Vec<f64> = published.iter().map(|(_, s)| *s).collect();
        assert_eq!(scores, expected);
        assert_eq!(cv.entries()[0].0, "book");
        assert!((scores[4] - 1.0 / 14.0).abs() < 1e-15);
        let tied: Vec<&str> = cv.terms().skip(4).take(5).collect();
        assert_eq!(tied, ["gulab", "harry", "jamun", "khatam", "snape"]);
        assert!(scores.iter().sum::<f64>() <= 1.0);
    }

    #[test]
    fn document_similarity_examples() {
        let table = EmbeddingTable::from_entries(2, [("a", vec![1.0, 0.0])]).unwrap();
        let d = toks(&["a", "b"]);
        for mode in [SimilarityMode::Lexical, SimilarityMode::Semantic, SimilarityMode::Hybrid] {
            assert_eq!(document_similarity(&d, &d, &table, mode), 1.0);
        }
        let empty = EmbeddingTable::new(2).unwrap();
        assert_eq!(
            document_similarity(&toks(&["x"]), &toks(&["y"]), &empty, SimilarityMode::Hybrid),
            0.0
        );
        let lex = document_similarity(
            &toks(&["a", "b"]),
            &toks(&["a", "c"]),
            &table,
            SimilarityMode::Lexical,
        );
        assert!((lex - 0.5).abs() < 1e-15);
        assert_eq!(
            document_similarity(&TokenList::default(), &TokenList::default(), &table, SimilarityMode::Hybrid),
            0.0
        );
        // OOV-only documents score zero semantically
        assert_eq!(
            document_similarity(&toks(&["q"]), &toks(&["q"]), &table, SimilarityMode::Semantic),
            0.0
        );
    }

    #[test]
    fn hybrid_is_mean_of_channels() {
        let table = EmbeddingTable::from_entries(
            2,
            [("a", vec![1.0, 0.0]), ("b", vec![1.0, 1.0]), ("c", vec![0.0, 1.0])],
        )
        .unwrap();
        let d1 = toks(&["a", "b"]);
        let d2 = toks(&["b", "c"]);
        let lex = document_similarity(&d1, &d2, &table, SimilarityMode::Lexical);
        let sem = document_similarity(&d1, &d2, &table, SimilarityMode::Semantic);
        let hyb = document_similarity(&d1, &d2, &table, SimilarityMode::Hybrid);
        assert!((lex - 0.5).abs() < 1e-12);
        // means (1, .5) and (.5, 1): cos = 1 / 1.25
        assert!((sem - 0.8).abs() < 1e-12);
        assert!((hyb - 0.65).abs() < 1e-12);
    }
}

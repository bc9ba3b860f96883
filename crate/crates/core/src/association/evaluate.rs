use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

/// Largest number of distinct labels the exhaustive mapping search accepts.
pub const MAX_LABELS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyReport {
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
    /// Distinct ground-truth labels, sorted.
    pub labels: Vec<String>,
    /// Label each predicted cluster is mapped to, indexed by cluster id.
    pub mapping: Vec<Option<String>>,
    /// `confusion[cluster][label]` member counts.
    pub confusion: Vec<Vec<usize>>,
}

impl AccuracyReport {
    /// `cluster,mapped_label,<label>...` confusion rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["cluster".to_string(), "mapped_label".to_string()];
        header.extend(self.labels.iter().cloned());
        out.write_record(&header)?;
        for (c, row) in self.confusion.iter().enumerate() {
            let mut rec = vec![c.to_string(), self.mapping[c].clone().unwrap_or_default()];
            rec.extend(row.iter().map(usize::to_string));
            out.write_record(&rec)?;
        }
        out.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Accuracy under the best one-to-one mapping between predicted cluster ids
/// and ground-truth labels, found by exhaustive search with a bound.
pub fn evaluate_accuracy(predicted: &[usize], ids: &[String], truth: &BTreeMap<String, String>) -> Result<AccuracyReport> {
    if predicted.len() != ids.len() {
        return Err(Error::Input(format!("{} predictions for {} candidates", predicted.len(), ids.len())));
    }
    let mut label_of = Vec::with_capacity(ids.len());
    for id in ids {
        match truth.get(id) {
            Some(l) => label_of.push(l.as_str()),
            None => return Err(Error::Input(format!("candidate `{id}` has no label"))),
        }
    }
    let mut labels: Vec<String> = label_of.iter().map(|l| l.to_string()).collect();
    labels.sort();
    labels.dedup();
    if labels.len() > MAX_LABELS {
        return Err(Error::Unsupported(format!(
            "{} distinct labels; exhaustive mapping supports at most {MAX_LABELS}",
            labels.len()
        )));
    }
    let n_clusters = predicted.iter().max().map_or(0, |m| m + 1);
    let mut confusion = vec![vec![0usize; labels.len()]; n_clusters];
    for (&c, l) in predicted.iter().zip(&label_of) {
        let li = labels.binary_search_by(|x| x.as_str().cmp(l)).expect("collected");
        confusion[c][li] += 1;
    }

    let best_per_label: Vec<usize> = (0..labels.len())
        .map(|l| confusion.iter().map(|row| row[l]).max().unwrap_or(0))
        .collect();
    let mut search = Search {
        confusion: &confusion,
        best_per_label: &best_per_label,
        used: vec![false; n_clusters],
        current: vec![None; labels.len()],
        best: (0, vec![None; labels.len()]),
        found: false,
    };
    search.run(0, 0);
    let (correct, label_to_cluster) = search.best;

    let mut mapping = vec![None; n_clusters];
    for (l, c) in label_to_cluster.iter().enumerate() {
        if let Some(c) = c {
            mapping[*c] = Some(labels[l].clone());
        }
    }
    let total = predicted.len();
    Ok(AccuracyReport {
        accuracy: if total == 0 { 0.0 } else { correct as f64 / total as f64 },
        correct,
        total,
        labels,
        mapping,
        confusion,
    })
}

struct Search<'a> {
    confusion: &'a [Vec<usize>],
    best_per_label: &'a [usize],
    used: Vec<bool>,
    current: Vec<Option<usize>>,
    best: (usize, Vec<Option<usize>>),
    found: bool,
}

impl Search<'_> {
    /// Assigns label `l` (and onwards) to an unused cluster or to none.
    fn run(&mut self, l: usize, score: usize) {
        if l == self.current.len() {
            if !self.found || score > self.best.0 {
                self.best = (score, self.current.clone());
                self.found = true;
            }
            return;
        }
        let bound: usize = score + self.best_per_label[l..].iter().sum::<usize>();
        if self.found && bound <= self.best.0 {
            return;
        }
        for c in 0..self.used.len() {
            if !self.used[c] {
                self.used[c] = true;
                self.current[l] = Some(c);
                self.run(l + 1, score + self.confusion[c][l]);
                self.current[l] = None;
                self.used[c] = false;
            }
        }
        self.run(l + 1, score);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(labels: &[&str]) -> (Vec<String>, BTreeMap<String, String>) {
        let ids: Vec<String> = (0..labels.len()).map(|i| format!("c{i}")).collect();
        let truth = ids.iter().cloned().zip(labels.iter().map(|s| s.to_string())).collect();
        (ids, truth)
    }

    #[test]
    fn identical_and_permuted() {
        let (ids, truth) = setup(&["a", "a", "b", "c"]);
        assert_eq!(evaluate_accuracy(&[0, 0, 1, 2], &ids, &truth).unwrap().accuracy, 1.0);
        let r = evaluate_accuracy(&[2, 2, 0, 1], &ids, &truth).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.mapping, vec![Some("b".into()), Some("c".into()), Some("a".into())]);
    }

    #[test]
    fn half_correct() {
        // best mapping: cluster 0 -> a (3), cluster 1 -> b (2); 5 of 10
        let (ids, truth) = setup(&["a", "a", "a", "b", "b", "a", "b", "b", "b", "a"]);
        let pred = [0, 0, 0, 1, 1, 1, 0, 0, 0, 1];
        let r = evaluate_accuracy(&pred, &ids, &truth).unwrap();
        assert_eq!(r.correct, 5);
        assert_eq!(r.accuracy, 0.5);
    }

    #[test]
    fn more_clusters_than_labels() {
        let (ids, truth) = setup(&["a", "a", "b", "b"]);
        let r = evaluate_accuracy(&[0, 1, 2, 2], &ids, &truth).unwrap();
        assert_eq!(r.correct, 3);
        assert_eq!(r.mapping.iter().filter(|m| m.is_none()).count(), 1);
    }

    #[test]
    fn errors() {
        let (ids, mut truth) = setup(&["a", "b"]);
        truth.remove("c1");
        assert!(matches!(evaluate_accuracy(&[0, 1], &ids, &truth), Err(Error::Input(_))));
        let names: Vec<String> = (0..9).map(|i| format!("l{i}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let (ids, truth) = setup(&refs);
        let pred: Vec<usize> = (0..9).collect();
        assert!(matches!(evaluate_accuracy(&pred, &ids, &truth), Err(Error::Unsupported(_))));
    }

    #[test]
    fn confusion_csv() {
        let (ids, truth) = setup(&["x", "y", "y"]);
        let r = evaluate_accuracy(&[0, 1, 1], &ids, &truth).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "cluster,mapped_label,x,y\n0,x,1,0\n1,y,0,2\n");
    }
}

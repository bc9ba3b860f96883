//! Clustering, k selection, PCA and membership comparison.

mod agglomerative;
mod compare;
mod kmeans;
mod pca;
mod select;
mod spectral;

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

pub use agglomerative::{agglomerative_points, agglomerative_similarity};
pub use compare::{compare_memberships, rand_index, AgreementReport};
pub use kmeans::{dispersion, kmeans, kmeans_best, kmeans_fit, wcss, KMeansFit};
pub use pca::{pca, PcaResult};
pub use select::{
    mean_silhouette, select_k_elbow, select_k_silhouette, silhouette_samples, KSelectionReport,
    SelectionRule, ELBOW_RESTARTS,
};
pub use spectral::{spectral_cluster, SimilarityMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    #[serde(rename = "kmeans")]
    KMeans,
    #[serde(rename = "spectral")]
    Spectral,
    /// Average-linkage agglomerative clustering; included as a third
    /// reference method for membership comparison.
    #[serde(rename = "agglomerative-average (plumbing)")]
    Agglomerative,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::KMeans => "kmeans",
            Method::Spectral => "spectral",
            Method::Agglomerative => "agglomerative-average (plumbing)",
        }
    }
}

/// Point index to cluster id. Ids are renumbered by first appearance, so they
/// are dense in `0..n_clusters()` and two runs that find the same partition
/// produce the same labels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterAssignment {
    labels: Vec<usize>,
    k: usize,
    method: Method,
    seed: Option<u64>,
}

impl ClusterAssignment {
    pub fn new(labels: &[usize], k: usize, method: Method, seed: Option<u64>) -> Self {
        Self {
            labels: dense_labels(labels),
            k,
            method,
            seed,
        }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// The requested cluster count.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of non-empty clusters.
    pub fn n_clusters(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Member indices of each cluster, clusters in id order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_clusters()];
        for (i, &c) in self.labels.iter().enumerate() {
            out[c].push(i);
        }
        out
    }

    /// `candidate_id,cluster` rows.
    pub fn write_csv<W: Write>(&self, ids: &[String], w: W) -> Result<()> {
        if ids.len() != self.labels.len() {
            return Err(Error::Input(format!(
                "{} ids for {} assigned points",
                ids.len(),
                self.labels.len()
            )));
        }
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["candidate_id", "cluster"])?;
        for (id, c) in ids.iter().zip(&self.labels) {
            out.write_record([id.as_str(), &c.to_string()])?;
        }
        out.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Renumbers labels in order of first appearance.
pub fn dense_labels(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_are_renumbered_by_first_appearance() {
        let a = ClusterAssignment::new(&[4, 4, 1, 7, 1], 3, Method::KMeans, Some(1));
        assert_eq!(a.labels(), &[0, 0, 1, 2, 1]);
        assert_eq!(a.n_clusters(), 3);
        assert_eq!(a.members(), vec![vec![0, 1], vec![2, 4], vec![3]]);
    }

    #[test]
    fn csv_rows() {
        let a = ClusterAssignment::new(&[1, 0], 2, Method::Spectral, None);
        let mut buf = Vec::new();
        a.write_csv(&["c1".into(), "c2".into()], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "candidate_id,cluster\nc1,0\nc2,1\n");
        assert!(a.write_csv(&["c1".into()], Vec::new()).is_err());
    }
}

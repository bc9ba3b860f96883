use std::io::Write;

use serde::Serialize;

use super::kmeans::kmeans_best;
use super::{ClusterAssignment, sq_dist};
use crate::error::{Error, Result};
use crate::survey::PointMatrix;

/// Restarts per k when building the W(k) and silhouette curves.
pub const ELBOW_RESTARTS: usize = 10;

/// W(1) below this counts as "no spread at all" and selects k = 1.
const FLAT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    /// Maximum discrete second difference of W(k).
    Elbow,
    /// Maximum mean silhouette.
    Silhouette,
}

impl SelectionRule {
    pub fn statistic(self) -> &'static str {
        match self {
            SelectionRule::Elbow => "dispersion",
            SelectionRule::Silhouette => "mean_silhouette",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KSelectionReport {
    pub rule: SelectionRule,
    /// `(k, statistic)` in increasing k.
    pub table: Vec<(usize, f64)>,
    pub chosen: usize,
}

impl KSelectionReport {
    pub fn value(&self, k: usize) -> Option<f64> {
        self.table.iter().find(|(kk, _)| *kk == k).map(|(_, v)| *v)
    }

    /// `k,<statistic>,chosen` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["k", self.rule.statistic(), "chosen"])?;
        for (k, v) in &self.table {
            out.write_record([k.to_string(), v.to_string(), (*k == self.chosen).to_string()])?;
        }
        out.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Elbow selection: W(k) for k = 1..=k_max (best of 10 restarts each); the
/// chosen k maximises W(k-1) - 2W(k) + W(k+1) over 2..k_max-1, ties to the
/// smaller k. If W(1) is already ~0 the data has a single cluster.
pub fn select_k_elbow(points: &PointMatrix, k_max: usize, seed: u64) -> Result<KSelectionReport> {
    if k_max < 3 {
        return Err(Error::Parameter(format!("elbow needs k_max >= 3, got {k_max}")));
    }
    if points.n_rows() < k_max {
        return Err(Error::Parameter(format!(
            "k_max = {k_max} exceeds the number of points ({})",
            points.n_rows()
        )));
    }
    let mut table = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        table.push((k, kmeans_best(points, k, seed, ELBOW_RESTARTS)?.wcss()));
    }
    let w = |k: usize| table[k - 1].1;
    let chosen = if w(1) < FLAT_EPS {
        1
    } else {
        let mut best = (2, f64::NEG_INFINITY);
        for k in 2..k_max {
            let curv = w(k - 1) - 2.0 * w(k) + w(k + 1);
            if curv > best.1 {
                best = (k, curv);
            }
        }
        best.0
    };
    Ok(KSelectionReport {
        rule: SelectionRule::Elbow,
        table,
        chosen,
    })
}

fn distance_matrix(points: &PointMatrix) -> Vec<Vec<f64>> {
    points
        .rows()
        .map(|a| points.rows().map(|b| sq_dist(a, b).sqrt()).collect())
        .collect()
}

fn silhouette_from(d: &[Vec<f64>], labels: &[usize]) -> Vec<f64> {
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; k];
    for &l in labels {
        sizes[l] += 1;
    }
    (0..labels.len())
        .map(|i| {
            let own = labels[i];
            if sizes[own] <= 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; k];
            for (j, &l) in labels.iter().enumerate() {
                if j != i {
                    sums[l] += d[i][j];
                }
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..k)
                .filter(|&c| c != own && sizes[c] > 0)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            if !b.is_finite() {
                return 0.0;
            }
            let m = a.max(b);
            if m > 0.0 {
                (b - a) / m
            } else {
                0.0
            }
        })
        .collect()
}

/// Per-point silhouette (b - a) / max(a, b) under Euclidean distance;
/// members of singleton clusters score 0.
pub fn silhouette_samples(points: &PointMatrix, a: &ClusterAssignment) -> Result<Vec<f64>> {
    if a.len() != points.n_rows() {
        return Err(Error::Input(format!(
            "assignment covers {} points, matrix has {}",
            a.len(),
            points.n_rows()
        )));
    }
    Ok(silhouette_from(&distance_matrix(points), a.labels()))
}

pub fn mean_silhouette(points: &PointMatrix, a: &ClusterAssignment) -> Result<f64> {
    let s = silhouette_samples(points, a)?;
    Ok(s.iter().sum::<f64>() / s.len().max(1) as f64)
}

/// Silhouette selection over k = 2..=k_max using the best-of-10 k-means fit
/// for each k; ties go to the smaller k.
pub fn select_k_silhouette(points: &PointMatrix, k_max: usize, seed: u64) -> Result<KSelectionReport> {
    if k_max < 2 {
        return Err(Error::Parameter(format!("silhouette needs k_max >= 2, got {k_max}")));
    }
    if points.n_rows() <= k_max {
        return Err(Error::Parameter(format!(
            "silhouette needs more than k_max = {k_max} points, got {}",
            points.n_rows()
        )));
    }
    let first = points.row(0);
    if points.rows().all(|x| x == first) {
        return Err(Error::Degenerate("all points are identical".into()));
    }
    let d = distance_matrix(points);
    let mut table = Vec::with_capacity(k_max - 1);
    let mut chosen = (2, f64::NEG_INFINITY);
    for k in 2..=k_max {
        let fit = kmeans_best(points, k, seed, ELBOW_RESTARTS)?;
        let s = silhouette_from(&d, fit.assignment.labels());
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        if mean > chosen.1 {
            chosen = (k, mean);
        }
        table.push((k, mean));
    }
    Ok(KSelectionReport {
        rule: SelectionRule::Silhouette,
        table,
        chosen: chosen.0,
    })
}

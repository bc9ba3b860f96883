use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};

use super::kmeans::kmeans;
use super::{ClusterAssignment, Method};
use crate::error::{Error, Result};
use crate::survey::PointMatrix;

const SYMMETRY_TOL: f64 = 1e-9;

/// Self-similarity given to a vertex with no similarity mass at all.
const ISOLATED_SELF: f64 = 1e-12;

/// Square, symmetric, non-negative similarity matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SimilarityMatrix {
    /// Fails on a ragged or non-square input, non-finite or negative entries,
    /// or asymmetry beyond 1e-9.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Input(format!(
                    "similarity row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::Input(format!("similarity ({i}, {j}) = {v} is not a non-negative number")));
                }
            }
            data.extend_from_slice(row);
        }
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (data[i * n + j], data[j * n + i]);
                if (a - b).abs() > SYMMETRY_TOL {
                    return Err(Error::Input(format!(
                        "similarity is not symmetric: ({i}, {j}) = {a}, ({j}, {i}) = {b}"
                    )));
                }
            }
        }
        Ok(Self { n, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    /// Square CSV with candidate ids as header and row labels.
    pub fn write_csv<W: Write>(&self, ids: &[String], w: W) -> Result<()> {
        if ids.len() != self.n {
            return Err(Error::Input(format!("{} ids for a {}x{} matrix", ids.len(), self.n, self.n)));
        }
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec![String::from("candidate_id")];
        header.extend(ids.iter().cloned());
        out.write_record(&header)?;
        for (i, id) in ids.iter().enumerate() {
            let mut rec = vec![id.clone()];
            rec.extend(self.row(i).iter().map(|v| v.to_string()));
            out.write_record(&rec)?;
        }
        out.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Spectral clustering with the normalized symmetric Laplacian
/// `L = I - D^-1/2 S D^-1/2`: the eigenvectors of the k smallest eigenvalues
/// form an n x k embedding whose rows are unit-normalized and clustered with
/// k-means. A vertex with zero degree gets a tiny self-similarity so D stays
/// invertible; it then forms its own component.
pub fn spectral_cluster(sim: &SimilarityMatrix, k: usize, seed: u64) -> Result<ClusterAssignment> {
    let n = sim.n();
    if k < 1 || k > n {
        return Err(Error::Parameter(format!("k = {k} must lie in 1..={n}")));
    }
    let mut s = DMatrix::from_fn(n, n, |i, j| sim.get(i, j));
    for i in 0..n {
        if s.row(i).sum() <= 0.0 {
            s[(i, i)] = ISOLATED_SELF;
        }
    }
    let inv_sqrt: Vec<f64> = (0..n).map(|i| 1.0 / s.row(i).sum().sqrt()).collect();
    let lap = DMatrix::from_fn(n, n, |i, j| {
        let a = s[(i, j)] * inv_sqrt[i] * inv_sqrt[j];
        if i == j {
            1.0 - a
        } else {
            -a
        }
    });
    let eig = SymmetricEigen::new(lap);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));

    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut r: Vec<f64> = order[..k].iter().map(|&c| eig.eigenvectors[(i, c)]).collect();
            let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                for v in &mut r {
                    *v /= norm;
                }
            }
            r
        })
        .collect();
    let embedded = PointMatrix::from_rows(rows)?;
    let a = kmeans(&embedded, k, seed)?;
    Ok(ClusterAssignment::new(a.labels(), k, Method::Spectral, Some(seed)))
}

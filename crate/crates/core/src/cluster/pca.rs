use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::survey::PointMatrix;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PcaResult {
    /// One orthonormal row per component, strongest first.
    pub components: Vec<Vec<f64>>,
    /// Covariance eigenvalues (sample covariance, n - 1 denominator).
    pub explained_variance: Vec<f64>,
    /// Share of the total variance per component; 0 for constant data.
    pub explained_variance_ratio: Vec<f64>,
    pub mean: Vec<f64>,
}

impl PcaResult {
    /// Projects points onto the components.
    pub fn transform(&self, points: &PointMatrix) -> Result<Vec<Vec<f64>>> {
        if points.dim() != self.mean.len() {
            return Err(Error::Input(format!(
                "points have {} columns, PCA was fitted on {}",
                points.dim(),
                self.mean.len()
            )));
        }
        Ok(points
            .rows()
            .map(|x| {
                self.components
                    .iter()
                    .map(|c| c.iter().zip(x).zip(&self.mean).map(|((c, x), m)| c * (x - m)).sum())
                    .collect()
            })
            .collect())
    }

    /// Maps projected coordinates back to the original space.
    pub fn inverse_transform(&self, scores: &[Vec<f64>]) -> Vec<Vec<f64>> {
        scores
            .iter()
            .map(|s| {
                let mut x = self.mean.clone();
                for (c, &w) in self.components.iter().zip(s) {
                    for (xi, ci) in x.iter_mut().zip(c) {
                        *xi += w * ci;
                    }
                }
                x
            })
            .collect()
    }
}

/// Principal components from the eigendecomposition of the covariance of
/// mean-centred data. Each component is signed so that its largest-magnitude
/// entry (first one on ties) is positive.
pub fn pca(points: &PointMatrix, n_components: usize) -> Result<PcaResult> {
    let (n, d) = (points.n_rows(), points.dim());
    if n_components < 1 || n_components > n.min(d) {
        return Err(Error::Parameter(format!(
            "n_components = {n_components} must lie in 1..={}",
            n.min(d)
        )));
    }
    let mut mean = vec![0.0; d];
    for x in points.rows() {
        for (m, v) in mean.iter_mut().zip(x) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let denom = if n > 1 { (n - 1) as f64 } else { 1.0 };
    let mut cov = DMatrix::<f64>::zeros(d, d);
    for x in points.rows() {
        for a in 0..d {
            for b in a..d {
                cov[(a, b)] += (x[a] - mean[a]) * (x[b] - mean[b]);
            }
        }
    }
    for a in 0..d {
        for b in a..d {
            cov[(a, b)] /= denom;
            cov[(b, a)] = cov[(a, b)];
        }
    }

    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let total: f64 = values.iter().sum();

    let mut components = Vec::with_capacity(n_components);
    for &i in &order[..n_components] {
        let mut c: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
        let mut lead = 0;
        for (j, v) in c.iter().enumerate() {
            if v.abs() > c[lead].abs() {
                lead = j;
            }
        }
        if c[lead] < 0.0 {
            for v in &mut c {
                *v = -*v;
            }
        }
        components.push(c);
    }
    let explained_variance: Vec<f64> = values[..n_components].to_vec();
    let explained_variance_ratio = explained_variance
        .iter()
        .map(|v| if total > 0.0 { v / total } else { 0.0 })
        .collect();
    Ok(PcaResult {
        components,
        explained_variance,
        explained_variance_ratio,
        mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_data() {
        let p = PointMatrix::from_rows(vec![vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]]).unwrap();
        let r = pca(&p, 2).unwrap();
        assert!((r.explained_variance_ratio[0] - 1.0).abs() < 1e-9);
        assert!(r.explained_variance_ratio[1].abs() < 1e-9);
        let s = 5f64.sqrt();
        assert!((r.components[0][0] - 1.0 / s).abs() < 1e-12);
        assert!((r.components[0][1] - 2.0 / s).abs() < 1e-12);
    }

    #[test]
    fn centred_data_has_zero_mean() {
        let p = PointMatrix::from_rows(vec![vec![-1.0, 2.0], vec![1.0, -2.0], vec![0.0, 0.0]]).unwrap();
        let r = pca(&p, 1).unwrap();
        assert!(r.mean.iter().all(|m| m.abs() < 1e-15));
    }

    #[test]
    fn component_count_bounds() {
        let p = PointMatrix::from_rows(vec![vec![1.0, 2.0, 3.0], vec![0.0, 1.0, 0.0]]).unwrap();
        assert!(matches!(pca(&p, 0), Err(Error::Parameter(_))));
        assert!(matches!(pca(&p, 3), Err(Error::Parameter(_))));
        assert!(pca(&p, 2).is_ok());
    }

    #[test]
    fn full_reconstruction() {
        let p = PointMatrix::from_rows(vec![
            vec![1.0, 0.5, -2.0],
            vec![0.3, 2.0, 1.0],
            vec![-1.0, 0.0, 0.7],
            vec![2.0, -1.5, 0.1],
        ])
        .unwrap();
        let r = pca(&p, 3).unwrap();
        let back = r.inverse_transform(&r.transform(&p).unwrap());
        for (x, y) in p.rows().zip(&back) {
            for (a, b) in x.iter().zip(y) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }
}

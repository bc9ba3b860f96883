use super::spectral::SimilarityMatrix;
use super::{sq_dist, ClusterAssignment, Method};
use crate::error::{Error, Result};
use crate::survey::PointMatrix;

/// Average-linkage agglomeration on a full distance matrix, merging the
/// closest pair of clusters until `k` remain. Ties merge the pair with the
/// smallest (lower, higher) cluster positions.
fn average_linkage(dist: &[Vec<f64>], k: usize) -> Result<Vec<usize>> {
    let n = dist.len();
    if k < 1 || k > n {
        return Err(Error::Parameter(format!("k = {k} must lie in 1..={n}")));
    }
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    // linkage[a][b] = summed distance between clusters a and b
    let mut linkage: Vec<Vec<f64>> = dist.to_vec();
    while clusters.len() > k {
        let mut best = (0, 1, f64::INFINITY);
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let avg = linkage[a][b] / (clusters[a].len() * clusters[b].len()) as f64;
                if avg < best.2 {
                    best = (a, b, avg);
                }
            }
        }
        let (a, b, _) = best;
        let merged = clusters.remove(b);
        clusters[a].extend(merged);
        let row_b = linkage.remove(b);
        for row in &mut linkage {
            let v = row.remove(b);
            row[a] += v;
        }
        for (c, v) in row_b.iter().enumerate().filter(|(c, _)| *c != b) {
            let c = if c > b { c - 1 } else { c };
            if c != a {
                linkage[a][c] += v;
            }
        }
        linkage[a][a] = 0.0;
    }
    let mut labels = vec![0; n];
    for (c, members) in clusters.iter().enumerate() {
        for &i in members {
            labels[i] = c;
        }
    }
    Ok(labels)
}

/// Average linkage on Euclidean distances between points.
pub fn agglomerative_points(points: &PointMatrix, k: usize) -> Result<ClusterAssignment> {
    let n = points.n_rows();
    let dist: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| sq_dist(points.row(i), points.row(j)).sqrt()).collect())
        .collect();
    let labels = average_linkage(&dist, k)?;
    Ok(ClusterAssignment::new(&labels, k, Method::Agglomerative, None))
}

/// Average linkage on dissimilarities `max(0, 1 - s)`.
pub fn agglomerative_similarity(sim: &SimilarityMatrix, k: usize) -> Result<ClusterAssignment> {
    let n = sim.n();
    let dist: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 0.0 } else { (1.0 - sim.get(i, j)).max(0.0) }).collect())
        .collect();
    let labels = average_linkage(&dist, k)?;
    Ok(ClusterAssignment::new(&labels, k, Method::Agglomerative, None))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_nearest_groups() {
        let p = PointMatrix::from_rows(
            [0.0, 0.2, 5.0, 5.1, 5.3, 20.0].iter().map(|&x| vec![x]).collect(),
        )
        .unwrap();
        assert_eq!(agglomerative_points(&p, 3).unwrap().labels(), &[0, 0, 1, 1, 1, 2]);
        assert_eq!(agglomerative_points(&p, 1).unwrap().labels(), &[0; 6]);
        assert_eq!(agglomerative_points(&p, 6).unwrap().n_clusters(), 6);
        assert!(agglomerative_points(&p, 7).is_err());
    }

    #[test]
    fn middle_point_joins_closer_average() {
        // 2 is 1 from point 1 but 0.95 on average from {2.9, 3}
        let p = PointMatrix::from_rows([0.0, 1.0, 2.0, 2.9, 3.0].iter().map(|&x| vec![x]).collect()).unwrap();
        let a = agglomerative_points(&p, 2).unwrap();
        assert_eq!(a.labels(), &[0, 0, 1, 1, 1]);
    }

    #[test]
    fn similarity_blocks() {
        let s = SimilarityMatrix::new(vec![
            vec![1.0, 0.9, 0.1, 0.0],
            vec![0.9, 1.0, 0.0, 0.2],
            vec![0.1, 0.0, 1.0, 0.8],
            vec![0.0, 0.2, 0.8, 1.0],
        ])
        .unwrap();
        assert_eq!(agglomerative_similarity(&s, 2).unwrap().labels(), &[0, 0, 1, 1]);
    }
}

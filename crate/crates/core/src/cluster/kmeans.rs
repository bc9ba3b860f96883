use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{sq_dist, ClusterAssignment, Method};
use crate::error::{Error, Result};
use crate::survey::PointMatrix;

pub const MAX_ITERATIONS: usize = 300;

#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub assignment: ClusterAssignment,
    pub centroids: Vec<Vec<f64>>,
    /// Within-cluster sum of squares after each Lloyd iteration.
    pub objective: Vec<f64>,
    pub converged: bool,
}

impl KMeansFit {
    pub fn wcss(&self) -> f64 {
        self.objective.last().copied().unwrap_or(0.0)
    }
}

fn check_k(points: &PointMatrix, k: usize) -> Result<()> {
    if k < 1 {
        return Err(Error::Parameter("k must be at least 1".into()));
    }
    if k > points.n_rows() {
        return Err(Error::Parameter(format!(
            "k = {k} exceeds the number of points ({})",
            points.n_rows()
        )));
    }
    Ok(())
}

/// k-means++ seeding: first centre uniform, then each next centre drawn with
/// probability proportional to squared distance from the nearest chosen one.
/// When every remaining point coincides with a centre, the next centre is the
/// lowest-index point not yet chosen.
fn seed_centres(points: &PointMatrix, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.n_rows();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = points.rows().map(|x| sq_dist(x, points.row(chosen[0]))).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can leave target just above the final sum
            pick.unwrap_or_else(|| d2.iter().rposition(|&d| d > 0.0).expect("positive total"))
        } else {
            (0..n).find(|i| !chosen.contains(i)).expect("k <= n")
        };
        chosen.push(next);
        for (i, x) in points.rows().enumerate() {
            d2[i] = d2[i].min(sq_dist(x, points.row(next)));
        }
    }
    chosen.iter().map(|&i| points.row(i).to_vec()).collect()
}

/// Nearest centre, ties to the lowest index.
fn nearest(x: &[f64], centres: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, m) in centres.iter().enumerate() {
        let d = sq_dist(x, m);
        if d < best_d {
            best = c;
            best_d = d;
        }
    }
    best
}

/// Lloyd's algorithm from k-means++ seeding. Stops when assignments no
/// longer change or after 300 iterations. An emptied cluster keeps its
/// previous centre.
pub fn kmeans_fit(points: &PointMatrix, k: usize, seed: u64) -> Result<KMeansFit> {
    fit_with_stream(points, k, seed, 0)
}

fn fit_with_stream(points: &PointMatrix, k: usize, seed: u64, stream: u64) -> Result<KMeansFit> {
    check_k(points, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let dim = points.dim();
    let mut centres = seed_centres(points, k, &mut rng);
    let mut labels: Vec<usize> = points.rows().map(|x| nearest(x, &centres)).collect();
    let mut objective = Vec::new();
    let mut converged = false;

    for _ in 0..MAX_ITERATIONS {
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (x, &c) in points.rows().zip(&labels) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(x) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centres[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        objective.push(
            points
                .rows()
                .zip(&labels)
                .map(|(x, &c)| sq_dist(x, &centres[c]))
                .sum(),
        );
        let next: Vec<usize> = points.rows().map(|x| nearest(x, &centres)).collect();
        if next == labels {
            converged = true;
            break;
        }
        labels = next;
    }

    Ok(KMeansFit {
        assignment: ClusterAssignment::new(&labels, k, Method::KMeans, Some(seed)),
        centroids: centres,
        objective,
        converged,
    })
}

pub fn kmeans(points: &PointMatrix, k: usize, seed: u64) -> Result<ClusterAssignment> {
    Ok(kmeans_fit(points, k, seed)?.assignment)
}

/// Lowest-WCSS fit over `restarts` runs. Restart `r` draws from stream `r` of
/// the seeded generator, so restart 0 is exactly `kmeans_fit(points, k, seed)`
/// and the result does not depend on evaluation order. Ties go to the lower
/// restart index.
pub fn kmeans_best(points: &PointMatrix, k: usize, seed: u64, restarts: usize) -> Result<KMeansFit> {
    let mut best: Option<KMeansFit> = None;
    for r in 0..restarts.max(1) {
        let fit = fit_with_stream(points, k, seed, r as u64)?;
        if best.as_ref().is_none_or(|b| fit.wcss() < b.wcss()) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn check_cover(points: &PointMatrix, labels: &[usize]) -> Result<()> {
    if labels.len() != points.n_rows() {
        return Err(Error::Input(format!(
            "assignment covers {} points, matrix has {}",
            labels.len(),
            points.n_rows()
        )));
    }
    Ok(())
}

/// W = Σ_k D_k / (2 n_k), where D_k sums squared Euclidean distances over
/// all ordered pairs of points in cluster k.
pub fn dispersion(points: &PointMatrix, a: &ClusterAssignment) -> Result<f64> {
    check_cover(points, a.labels())?;
    let mut w = 0.0;
    for members in a.members() {
        let mut d = 0.0;
        for (x, &i) in members.iter().enumerate() {
            for &j in &members[x + 1..] {
                d += sq_dist(points.row(i), points.row(j));
            }
        }
        // each unordered pair appears twice among ordered pairs
        w += 2.0 * d / (2.0 * members.len() as f64);
    }
    Ok(w)
}

/// Centroid-based within-cluster sum of squares.
pub fn wcss(points: &PointMatrix, a: &ClusterAssignment) -> Result<f64> {
    check_cover(points, a.labels())?;
    let mut total = 0.0;
    for members in a.members() {
        let mut mean = vec![0.0; points.dim()];
        for &i in &members {
            for (m, v) in mean.iter_mut().zip(points.row(i)) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= members.len() as f64;
        }
        total += members.iter().map(|&i| sq_dist(points.row(i), &mean)).sum::<f64>();
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> PointMatrix {
        PointMatrix::from_rows(xs.iter().map(|&x| vec![x]).collect()).unwrap()
    }

    #[test]
    fn k_bounds() {
        let p = line(&[0.0, 1.0]);
        assert!(matches!(kmeans(&p, 0, 1), Err(Error::Parameter(_))));
        assert!(matches!(kmeans(&p, 3, 1), Err(Error::Parameter(_))));
    }

    #[test]
    fn single_cluster() {
        let p = line(&[0.0, 1.0, 5.0]);
        assert_eq!(kmeans(&p, 1, 7).unwrap().labels(), &[0, 0, 0]);
    }

    #[test]
    fn k_equals_n_gives_singletons() {
        let p = line(&[0.0, 1.0, 5.0, 9.0]);
        let fit = kmeans_fit(&p, 4, 3).unwrap();
        assert_eq!(fit.assignment.n_clusters(), 4);
        assert_eq!(fit.wcss(), 0.0);
        assert_eq!(dispersion(&p, &fit.assignment).unwrap(), 0.0);
    }

    #[test]
    fn duplicate_points_still_seed() {
        let p = line(&[2.0, 2.0, 2.0]);
        let a = kmeans(&p, 3, 0).unwrap();
        assert_eq!(a.len(), 3);
    }

    #[test]
    fn dispersion_hand_example() {
        // cluster {0, 2}: D = 2 * 4 = 8, W = 8 / 4 = 2 = 1 + 1
        let p = line(&[0.0, 2.0]);
        let a = ClusterAssignment::new(&[0, 0], 1, Method::KMeans, None);
        assert_eq!(dispersion(&p, &a).unwrap(), 2.0);
        assert_eq!(wcss(&p, &a).unwrap(), 2.0);
    }

    #[test]
    fn dispersion_is_additive_over_clusters() {
        let p = line(&[0.0, 2.0, 10.0, 13.0]);
        let a = ClusterAssignment::new(&[0, 0, 1, 1], 2, Method::KMeans, None);
        assert_eq!(dispersion(&p, &a).unwrap(), 2.0 + 4.5);
    }

    #[test]
    fn identical_points_have_zero_dispersion() {
        let p = line(&[3.0, 3.0, 3.0]);
        let a = ClusterAssignment::new(&[0, 0, 0], 1, Method::KMeans, None);
        assert_eq!(dispersion(&p, &a).unwrap(), 0.0);
    }

    #[test]
    fn restart_zero_matches_single_fit() {
        let p = line(&[0.0, 0.5, 4.0, 4.2, 9.0, 9.1, 9.3]);
        let a = kmeans_fit(&p, 3, 5).unwrap();
        let b = kmeans_best(&p, 3, 5, 1).unwrap();
        assert_eq!(a.assignment, b.assignment);
        assert_eq!(a.objective, b.objective);
    }
}

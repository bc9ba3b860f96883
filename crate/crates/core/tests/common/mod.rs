#![allow(dead_code)]

use affinity_core::graph::{CandidateGraph, Node, NodeKind};
use affinity_core::survey::PointMatrix;
use affinity_core::text::EmbeddingTable;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Match threshold used by the graph-association checks.
pub const THRESHOLD: f64 = 0.5;

/// Small vocabulary of synonym groups plus a set of small random graphs
/// (1..=max_nodes nodes mixing text terms and MCQ features).
pub fn random_graph_world(
    count: usize,
    max_nodes: usize,
    seed: u64,
) -> (EmbeddingTable, Vec<CandidateGraph>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = 6;
    let normal = Normal::new(0.0, 1.0).unwrap();
    let groups = [
        ["book", "novel", "story"],
        ["rap", "song", "music"],
        ["temple", "festival", "puja"],
        ["beach", "sea", "coast"],
    ];
    let mut entries = Vec::new();
    for group in &groups {
        let center: Vec<f64> = (0..dim).map(|_| normal.sample(&mut rng)).collect();
        for word in group {
            let v = center
                .iter()
                .map(|c| c + 0.6 * normal.sample(&mut rng))
                .collect();
            entries.push((word.to_string(), v));
        }
    }
    entries.push(("unknownish".to_string(), vec![0.0; dim]));
    let table = EmbeddingTable::from_entries(dim, entries.clone()).unwrap();

    let mut vocab: Vec<(String, NodeKind)> = entries
        .iter()
        .map(|(t, _)| (t.clone(), NodeKind::Term))
        .collect();
    vocab.push(("oov".into(), NodeKind::Term));
    for f in ["travel_1", "travel_2", "travel_3", "travel_4", "q1=0", "q1=1"] {
        vocab.push((f.into(), NodeKind::Feature));
    }

    let graphs = (0..count)
        .map(|_| {
            let n = rng.random_range(1..=max_nodes);
            let picked: Vec<&(String, NodeKind)> = vocab.choose_multiple(&mut rng, n).collect();
            let nodes = picked
                .into_iter()
                .map(|(id, kind)| {
                    // occasional exact ties exercise the id tie-break
                    let weight = if rng.random_bool(0.15) {
                        0.25
                    } else {
                        rng.random_range(0.0..1.0)
                    };
                    Node {
                        id: id.clone(),
                        weight,
                        kind: *kind,
                        negative: *kind == NodeKind::Feature && rng.random_bool(0.3),
                    }
                })
                .collect();
            CandidateGraph::from_nodes(nodes).unwrap()
        })
        .collect();
    (table, graphs)
}

/// Isotropic Gaussian blobs; returns points and generator labels.
pub fn blobs(centers: &[[f64; 2]], per_blob: usize, sigma: f64, seed: u64) -> (PointMatrix, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).unwrap();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (c, center) in centers.iter().enumerate() {
        for _ in 0..per_blob {
            rows.push(vec![
                center[0] + normal.sample(&mut rng),
                center[1] + normal.sample(&mut rng),
            ]);
            labels.push(c);
        }
    }
    (PointMatrix::from_rows(rows).unwrap(), labels)
}

pub const THREE_BLOB_CENTERS: [[f64; 2]; 3] = [[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]];

/// True when two labelings induce the same partition.
pub fn same_partition(a: &[usize], b: &[usize]) -> bool {
    assert_eq!(a.len(), b.len());
    for i in 0..a.len() {
        for j in 0..a.len() {
            if (a[i] == a[j]) != (b[i] == b[j]) {
                return false;
            }
        }
    }
    true
}

/// Best achievable score over every matching, computed from first principles.
pub fn brute_force_best(g1: &CandidateGraph, g2: &CandidateGraph, table: &EmbeddingTable) -> f64 {
    let share = |g: &CandidateGraph| -> Vec<f64> {
        let total: f64 = g.nodes().iter().map(|n| n.weight).sum();
        g.nodes()
            .iter()
            .map(|n| {
                if total > 0.0 {
                    n.weight / total
                } else {
                    1.0 / g.len() as f64
                }
            })
            .collect()
    };
    let rank = |g: &CandidateGraph| -> Vec<usize> {
        let n = g.nodes();
        (0..n.len())
            .map(|i| {
                n.iter()
                    .filter(|m| m.weight > n[i].weight || (m.weight == n[i].weight && m.id < n[i].id))
                    .count()
            })
            .collect()
    };
    let cos = |a: &[f64], b: &[f64]| {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        if na == 0.0 || nb == 0.0 {
            0.0
        } else {
            dot / (na * nb)
        }
    };
    let (s1, s2, r1, r2) = (share(g1), share(g2), rank(g1), rank(g2));
    let n1 = g1.nodes();
    let n2 = g2.nodes();
    let mut gain = vec![vec![None; n2.len()]; n1.len()];
    for i in 0..n1.len() {
        for j in 0..n2.len() {
            let score = if n1[i].id == n2[j].id {
                1.0
            } else if n1[i].kind == NodeKind::Term && n2[j].kind == NodeKind::Term {
                match (table.get(&n1[i].id), table.get(&n2[j].id)) {
                    (Some(a), Some(b)) => cos(a, b),
                    _ => 0.0,
                }
            } else {
                0.0
            };
            if score >= THRESHOLD {
                let factor = if r1[i].abs_diff(r2[j]) <= 1 { 1.0 } else { 0.5 };
                gain[i][j] = Some(score * s1[i].min(s2[j]) * factor);
            }
        }
    }
    fn search(i: usize, used: &mut Vec<bool>, gain: &[Vec<Option<f64>>]) -> f64 {
        if i == gain.len() {
            return 0.0;
        }
        let mut best = search(i + 1, used, gain);
        for j in 0..used.len() {
            if let (false, Some(g)) = (used[j], gain[i][j]) {
                used[j] = true;
                best = best.max(g + search(i + 1, used, gain));
                used[j] = false;
            }
        }
        best
    }
    search(0, &mut vec![false; n2.len()], &gain).min(1.0)
}

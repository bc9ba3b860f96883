use std::collections::HashMap;

use serde::Serialize;

use super::{CandidateGraph, NodeKind};
use crate::text::{term_similarity, EmbeddingTable};

/// Core factor applied when two matched nodes sit at very different depths
/// of their graphs' weight rankings.
const MISALIGNED_CORE_FACTOR: f64 = 0.5;

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct NodeCorrespondence {
    /// `(node in g1, node in g2, match score)` in the order they were chosen.
    pub matches: Vec<(String, String, f64)>,
    pub unmatched_first: Vec<String>,
    pub unmatched_second: Vec<String>,
}

struct Candidate<'a> {
    i: usize,
    j: usize,
    score: f64,
    gain: f64,
    id1: &'a str,
    id2: &'a str,
}

impl Candidate<'_> {
    /// Order-independent tie key, so swapping the graphs picks the same pairs.
    fn sym_key(&self) -> (&str, &str) {
        if self.id1 <= self.id2 {
            (self.id1, self.id2)
        } else {
            (self.id2, self.id1)
        }
    }
}

fn pair_score(g1: &CandidateGraph, i: usize, g2: &CandidateGraph, j: usize, table: &EmbeddingTable) -> f64 {
    let (a, b) = (&g1.nodes[i], &g2.nodes[j]);
    if a.id == b.id {
        1.0
    } else if a.kind == NodeKind::Term && b.kind == NodeKind::Term {
        term_similarity(&a.id, &b.id, table)
    } else {
        0.0
    }
}

/// Matched index pairs `(i, j, score, gain)`, highest gain first.
///
/// Eligible pairs are taken greedily by their contribution to the graph
/// score, then the matching is improved by local exchanges.
fn greedy(
    g1: &CandidateGraph,
    g2: &CandidateGraph,
    table: &EmbeddingTable,
    threshold: f64,
) -> Vec<(usize, usize, f64, f64)> {
    let (w1, w2) = (g1.normalized_weights(), g2.normalized_weights());
    let (r1, r2) = (g1.ranks(), g2.ranks());
    let mut cands: Vec<Candidate<'_>> = Vec::new();
    let mut push = |i: usize, j: usize, score: f64| {
        if score > 0.0 && score >= threshold {
            let core_factor = if r1[i].abs_diff(r2[j]) <= 1 {
                1.0
            } else {
                MISALIGNED_CORE_FACTOR
            };
            cands.push(Candidate {
                i,
                j,
                score,
                gain: score * w1[i].min(w2[j]) * core_factor,
                id1: &g1.nodes[i].id,
                id2: &g2.nodes[j].id,
            });
        }
    };

    // identical ids
    let by_id: HashMap<&str, usize> = g2
        .nodes
        .iter()
        .enumerate()
        .map(|(j, n)| (n.id.as_str(), j))
        .collect();
    for (i, n) in g1.nodes.iter().enumerate() {
        if let Some(&j) = by_id.get(n.id.as_str()) {
            push(i, j, 1.0);
        }
    }
    // distinct text terms, scored through the embedding table
    let terms2: Vec<usize> = (0..g2.len())
        .filter(|&j| g2.nodes[j].kind == NodeKind::Term)
        .collect();
    for (i, n) in g1.nodes.iter().enumerate() {
        if n.kind != NodeKind::Term {
            continue;
        }
        for &j in &terms2 {
            if g2.nodes[j].id != n.id {
                push(i, j, pair_score(g1, i, g2, j, table));
            }
        }
    }

    cands.sort_by(|a, b| {
        b.gain
            .total_cmp(&a.gain)
            .then_with(|| b.score.total_cmp(&a.score))
            .then_with(|| a.sym_key().cmp(&b.sym_key()))
            .then_with(|| (a.id1, a.id2).cmp(&(b.id1, b.id2)))
    });

    let mut gain = vec![vec![None; g2.len()]; g1.len()];
    let mut score = vec![vec![0.0; g2.len()]; g1.len()];
    for c in &cands {
        gain[c.i][c.j] = Some(c.gain);
        score[c.i][c.j] = c.score;
    }

    let mut partner1: Vec<Option<usize>> = vec![None; g1.len()];
    let mut partner2: Vec<Option<usize>> = vec![None; g2.len()];
    for c in &cands {
        if partner1[c.i].is_none() && partner2[c.j].is_none() {
            partner1[c.i] = Some(c.j);
            partner2[c.j] = Some(c.i);
        }
    }
    refine(&gain, &mut partner1, &mut partner2, &g1.ranks(), &g2.ranks());

    let mut out: Vec<(usize, usize, f64, f64)> = partner1
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.map(|j| (i, j, score[i][j], gain[i][j].expect("eligible"))))
        .collect();
    out.sort_by(|a, b| b.3.total_cmp(&a.3).then_with(|| b.2.total_cmp(&a.2)));
    out
}

/// Matched `(i, j)` node index pairs.
type Pairs = Vec<(usize, usize)>;

/// Exchange refinement: repeatedly release one matched pair, or two pairs
/// joined by an eligible edge, and re-pair the released nodes with each other
/// or with unmatched nodes in the best way; apply the best strictly improving
/// exchange until none remains. Pairs are visited in rank order so ties
/// resolve independently of insertion order.
fn refine(
    gain: &[Vec<Option<f64>>],
    partner1: &mut [Option<usize>],
    partner2: &mut [Option<usize>],
    ranks1: &[usize],
    ranks2: &[usize],
) {
    let by_rank = |ranks: &[usize]| {
        let mut order = vec![0; ranks.len()];
        for (i, &r) in ranks.iter().enumerate() {
            order[r] = i;
        }
        order
    };
    let order1 = by_rank(ranks1);
    let order2 = by_rank(ranks2);
    // eligible partners of every node, in rank order
    let adj1: Vec<Vec<usize>> = (0..gain.len())
        .map(|i| order2.iter().copied().filter(|&j| gain[i][j].is_some()).collect())
        .collect();
    let adj2: Vec<Vec<usize>> = (0..partner2.len())
        .map(|j| order1.iter().copied().filter(|&i| gain[i][j].is_some()).collect())
        .collect();

    loop {
        let matched: Vec<(usize, usize)> = order1
            .iter()
            .filter_map(|&i| partner1[i].map(|j| (i, j)))
            .collect();
        let mut releases: Vec<Vec<(usize, usize)>> = matched.iter().map(|&m| vec![m]).collect();
        for (x, &(i, j)) in matched.iter().enumerate() {
            for &(k, l) in &matched[x + 1..] {
                if gain[i][l].is_some() || gain[k][j].is_some() {
                    releases.push(vec![(i, j), (k, l)]);
                }
            }
        }

        let mut best: Option<(f64, Pairs, Pairs)> = None;
        for released in releases {
            let old: f64 = released.iter().map(|&(i, j)| gain[i][j].expect("eligible")).sum();
            for &(i, j) in &released {
                partner1[i] = None;
                partner2[j] = None;
            }
            let mut ends: Vec<(bool, usize)> = Vec::new();
            for &(i, j) in &released {
                ends.push((true, i));
                ends.push((false, j));
            }
            let mut current = Vec::new();
            let mut top = (0.0, Vec::new());
            repair(&ends, 0, 0.0, gain, &adj1, &adj2, partner1, partner2, &mut current, &mut top);
            for &(i, j) in &released {
                partner1[i] = Some(j);
                partner2[j] = Some(i);
            }
            let delta = top.0 - old;
            if delta > 1e-12 && best.as_ref().is_none_or(|b| delta > b.0) {
                best = Some((delta, released, top.1));
            }
        }

        let Some((_, released, added)) = best else { return };
        for (i, j) in released {
            partner1[i] = None;
            partner2[j] = None;
        }
        for (i, j) in added {
            partner1[i] = Some(j);
            partner2[j] = Some(i);
        }
    }
}

/// Exhaustive re-pairing of released nodes: each end either stays single or
/// takes a currently unmatched eligible partner.
#[allow(clippy::too_many_arguments)]
fn repair(
    ends: &[(bool, usize)],
    at: usize,
    total: f64,
    gain: &[Vec<Option<f64>>],
    adj1: &[Vec<usize>],
    adj2: &[Vec<usize>],
    partner1: &mut [Option<usize>],
    partner2: &mut [Option<usize>],
    current: &mut Vec<(usize, usize)>,
    top: &mut (f64, Vec<(usize, usize)>),
) {
    if at == ends.len() {
        if total > top.0 {
            *top = (total, current.clone());
        }
        return;
    }
    let (first, n) = ends[at];
    let taken = if first { partner1[n].is_some() } else { partner2[n].is_some() };
    repair(ends, at + 1, total, gain, adj1, adj2, partner1, partner2, current, top);
    if taken {
        return;
    }
    let partners = if first { &adj1[n] } else { &adj2[n] };
    for &m in partners {
        let (i, j) = if first { (n, m) } else { (m, n) };
        if partner1[i].is_some() || partner2[j].is_some() {
            continue;
        }
        let g = gain[i][j].expect("eligible");
        partner1[i] = Some(j);
        partner2[j] = Some(i);
        current.push((i, j));
        repair(ends, at + 1, total + g, gain, adj1, adj2, partner1, partner2, current, top);
        current.pop();
        partner1[i] = None;
        partner2[j] = None;
    }
}

/// Greedy node correspondence. Identical ids score 1, two text terms score
/// their embedding cosine, anything else scores 0; only pairs scoring at least
/// `threshold` (and above zero) are eligible. Eligible pairs are ranked by
/// their contribution to [`gam_similarity`] (match score times the smaller
/// weight share times the core factor), then by match score and node ids.
pub fn match_nodes(
    g1: &CandidateGraph,
    g2: &CandidateGraph,
    table: &EmbeddingTable,
    threshold: f64,
) -> NodeCorrespondence {
    let pairs = greedy(g1, g2, table, threshold);
    let mut used1 = vec![false; g1.len()];
    let mut used2 = vec![false; g2.len()];
    let mut matches = Vec::with_capacity(pairs.len());
    for (i, j, s, _) in pairs {
        used1[i] = true;
        used2[j] = true;
        matches.push((g1.nodes[i].id.clone(), g2.nodes[j].id.clone(), s));
    }
    let unmatched = |g: &CandidateGraph, used: &[bool]| {
        g.nodes
            .iter()
            .zip(used)
            .filter(|(_, u)| !**u)
            .map(|(n, _)| n.id.clone())
            .collect()
    };
    NodeCorrespondence {
        unmatched_first: unmatched(g1, &used1),
        unmatched_second: unmatched(g2, &used2),
        matches,
    }
}

/// Graph association score in [0, 1].
///
/// Each matched pair contributes `score · min(share₁, share₂) · core_factor`,
/// where a node's share is its fraction of its graph's total weight and the
/// core factor is 1 when the two nodes' positions in their weight rankings
/// differ by at most one, else 0.5. Identical graphs score exactly 1.
pub fn gam_similarity(
    g1: &CandidateGraph,
    g2: &CandidateGraph,
    table: &EmbeddingTable,
    threshold: f64,
) -> f64 {
    if g1.same_nodes(g2) {
        return 1.0;
    }
    let mut terms: Vec<f64> = greedy(g1, g2, table, threshold)
        .into_iter()
        .map(|(_, _, _, gain)| gain)
        .collect();
    // fixed summation order keeps the score independent of node order
    terms.sort_by(f64::total_cmp);
    terms.iter().sum::<f64>().clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, Features};
    use crate::text::ContextVector;

    fn term_graph(pairs: &[(&str, f64)]) -> CandidateGraph {
        let ctx = ContextVector::from_scores(
            pairs.iter().map(|(t, s)| (t.to_string(), *s)).collect(),
        )
        .unwrap();
        build_graph(&Features::default(), &ctx).unwrap()
    }

    fn feature_graph(pairs: &[(&str, f64)]) -> CandidateGraph {
        build_graph(&pairs.iter().map(|(n, w)| (*n, *w)).collect(), &ContextVector::default())
            .unwrap()
    }

    fn book_novel_table() -> EmbeddingTable {
        // cos(book, novel) = 0.7
        let s = (1.0f64 - 0.49).sqrt();
        EmbeddingTable::from_entries(
            2,
            [("book", vec![1.0, 0.0]), ("novel", vec![0.7, s]), ("rap", vec![0.0, -1.0])],
        )
        .unwrap()
    }

    #[test]
    fn identical_node_sets_match_identically() {
        let g = term_graph(&[("book", 0.5), ("novel", 0.3), ("rap", 0.2)]);
        let c = match_nodes(&g, &g, &book_novel_table(), 0.5);
        let mut m = c.matches.clone();
        m.sort_by(|a, b| a.0.cmp(&b.0));
        assert_eq!(
            m,
            vec![
                ("book".into(), "book".into(), 1.0),
                ("novel".into(), "novel".into(), 1.0),
                ("rap".into(), "rap".into(), 1.0)
            ]
        );
        assert!(c.unmatched_first.is_empty() && c.unmatched_second.is_empty());
    }

    #[test]
    fn book_matches_novel_above_threshold() {
        let table = book_novel_table();
        let g1 = term_graph(&[("book", 1.0)]);
        let g2 = term_graph(&[("novel", 1.0)]);
        let c = match_nodes(&g1, &g2, &table, 0.5);
        assert_eq!(c.matches.len(), 1);
        assert!((c.matches[0].2 - 0.7).abs() < 1e-12);
        let c = match_nodes(&g1, &g2, &table, 0.8);
        assert!(c.matches.is_empty());
        assert_eq!(c.unmatched_first, vec!["book"]);
        assert_eq!(c.unmatched_second, vec!["novel"]);
    }

    #[test]
    fn greedy_prefers_highest_score() {
        // book-book (1.0) wins over book-novel (0.7); novel then has no partner
        let table = book_novel_table();
        let g1 = term_graph(&[("book", 0.5), ("rap", 0.5)]);
        let g2 = term_graph(&[("novel", 0.5), ("book", 0.5)]);
        let c = match_nodes(&g1, &g2, &table, 0.5);
        assert_eq!(c.matches, vec![("book".into(), "book".into(), 1.0)]);
    }

    #[test]
    fn features_match_only_by_name() {
        let table = book_novel_table();
        let g1 = feature_graph(&[("book", 1.0)]);
        let g2 = feature_graph(&[("novel", 1.0)]);
        assert!(match_nodes(&g1, &g2, &table, 0.0).matches.is_empty());
    }

    #[test]
    fn gam_examples() {
        let table = EmbeddingTable::new(2).unwrap();
        let g = term_graph(&[("a", 0.5), ("b", 0.3), ("c", 0.2)]);
        assert_eq!(gam_similarity(&g, &g, &table, 0.5), 1.0);
        let h = term_graph(&[("x", 0.5), ("y", 0.5)]);
        assert_eq!(gam_similarity(&g, &h, &table, 0.5), 0.0);
        // shared node "a" holds half of each graph; both are rank-0 cores
        let g1 = feature_graph(&[("a", 0.5), ("b", 0.5)]);
        let g2 = feature_graph(&[("a", 0.5), ("c", 0.5)]);
        assert_eq!(gam_similarity(&g1, &g2, &table, 0.5), 0.5);
    }

    #[test]
    fn misaligned_ranks_halve_the_contribution() {
        let table = EmbeddingTable::new(2).unwrap();
        // "z" is the core of g1 (rank 0) but last in g2 (rank 2)
        let g1 = feature_graph(&[("z", 0.6), ("p", 0.2), ("q", 0.2)]);
        let g2 = feature_graph(&[("z", 0.2), ("m", 0.4), ("n", 0.4)]);
        let s = gam_similarity(&g1, &g2, &table, 0.5);
        assert!((s - 0.2 * 0.5).abs() < 1e-15, "{s}");
    }

    #[test]
    fn scaling_weights_does_not_change_score() {
        let table = EmbeddingTable::new(2).unwrap();
        let g1 = feature_graph(&[("a", 0.6), ("b", 0.3), ("c", 0.1)]);
        let g2 = feature_graph(&[("a", 0.2), ("b", 0.5), ("d", 0.3)]);
        let g2x = feature_graph(&[("a", 2.0), ("b", 5.0), ("d", 3.0)]);
        let s = gam_similarity(&g1, &g2, &table, 0.5);
        let sx = gam_similarity(&g1, &g2x, &table, 0.5);
        assert!((s - sx).abs() < 1e-12);
    }
}

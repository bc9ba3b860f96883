use std::io::Write;

use serde::Serialize;

use crate::cluster::{dense_labels, spectral_cluster, SimilarityMatrix};
use crate::error::{Error, Result};

/// Candidates partitioned into teams. Team ids are ordered by each team's
/// smallest member index.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TeamAssignment {
    labels: Vec<usize>,
    pub k: usize,
    pub method: &'static str,
    pub seed: u64,
}

impl TeamAssignment {
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_teams(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    /// Member indices per team.
    pub fn teams(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_teams()];
        for (i, &t) in self.labels.iter().enumerate() {
            out[t].push(i);
        }
        out
    }

    /// `team,theme,candidate_id` rows; `themes` is indexed by team id.
    pub fn write_csv<W: Write>(&self, ids: &[String], themes: &[String], w: W) -> Result<()> {
        if ids.len() != self.labels.len() {
            return Err(Error::Input(format!("{} ids for {} team members", ids.len(), self.labels.len())));
        }
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["team", "theme", "candidate_id"])?;
        for (t, members) in self.teams().iter().enumerate() {
            let theme = themes.get(t).map_or("", String::as_str);
            for &i in members {
                out.write_record([t.to_string().as_str(), theme, &ids[i]])?;
            }
        }
        out.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Teams from spectral clustering of the association matrix. If clustering
/// leaves fewer than k non-empty teams, the largest team (lowest id on ties)
/// gives up its least attached member, the one with the lowest mean
/// similarity to its teammates, to a new team until there are k.
pub fn form_teams(sim: &SimilarityMatrix, k: usize, seed: u64) -> Result<TeamAssignment> {
    let n = sim.n();
    if k < 1 || k > n {
        return Err(Error::Parameter(format!("k = {k} teams for {n} candidates")));
    }
    let mut labels = spectral_cluster(sim, k, seed)?.labels().to_vec();
    let mut count = labels.iter().max().map_or(0, |m| m + 1);
    while count < k {
        let mut sizes = vec![0usize; count];
        for &l in &labels {
            sizes[l] += 1;
        }
        let largest = (0..count).max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a))).expect("non-empty");
        let members: Vec<usize> = (0..n).filter(|&i| labels[i] == largest).collect();
        let attachment = |i: usize| -> f64 {
            members.iter().filter(|&&j| j != i).map(|&j| sim.get(i, j)).sum::<f64>() / (members.len() - 1) as f64
        };
        let mut out = members[0];
        for &i in &members[1..] {
            if attachment(i) < attachment(out) {
                out = i;
            }
        }
        labels[out] = count;
        count += 1;
    }
    Ok(TeamAssignment {
        labels: dense_labels(&labels),
        k,
        method: "spectral",
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_blocks() -> SimilarityMatrix {
        let b = [0, 1, 0, 1, 1];
        SimilarityMatrix::new(
            (0..5)
                .map(|i| (0..5).map(|j| if b[i] == b[j] { 1.0 } else { 0.0 }).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn blocks_become_teams() {
        let t = form_teams(&two_blocks(), 2, 3).unwrap();
        assert_eq!(t.labels(), &[0, 1, 0, 1, 1]);
        assert_eq!(t.teams(), vec![vec![0, 2], vec![1, 3, 4]]);
    }

    #[test]
    fn one_team_and_bounds() {
        let t = form_teams(&two_blocks(), 1, 0).unwrap();
        assert_eq!(t.labels(), &[0; 5]);
        assert!(matches!(form_teams(&two_blocks(), 6, 0), Err(Error::Parameter(_))));
    }

    #[test]
    fn no_empty_team() {
        // identical candidates collapse to one spectral cluster
        let all = SimilarityMatrix::new(vec![vec![1.0; 4]; 4]).unwrap();
        let t = form_teams(&all, 3, 1).unwrap();
        assert_eq!(t.n_teams(), 3);
        assert!(t.teams().iter().all(|m| !m.is_empty()));
    }

    #[test]
    fn csv_lists_members() {
        let t = form_teams(&two_blocks(), 2, 3).unwrap();
        let ids: Vec<String> = (0..5).map(|i| format!("c{i}")).collect();
        let mut buf = Vec::new();
        t.write_csv(&ids, &["rap".into(), "tea".into()], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "team,theme,candidate_id\n0,rap,c0\n0,rap,c2\n1,tea,c1\n1,tea,c3\n1,tea,c4\n"
        );
    }
}

use std::collections::HashMap;
use std::io::Write;

use serde::Serialize;

use super::ClusterAssignment;
use crate::error::{Error, Result};

/// Pair-counting agreement between two labelings of the same points.
pub fn rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Input(format!(
            "labelings cover {} and {} points",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Ok(1.0);
    }
    let pairs = |c: u64| c * c.saturating_sub(1) / 2;
    let mut joint: HashMap<(usize, usize), u64> = HashMap::new();
    let mut rows: HashMap<usize, u64> = HashMap::new();
    let mut cols: HashMap<usize, u64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let both: u64 = joint.values().map(|&c| pairs(c)).sum();
    let same_a: u64 = rows.values().map(|&c| pairs(c)).sum();
    let same_b: u64 = cols.values().map(|&c| pairs(c)).sum();
    let total = pairs(n as u64);
    // agreeing pairs: together in both, plus apart in both
    let agree = total + 2 * both - same_a - same_b;
    Ok(agree as f64 / total as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementReport {
    pub methods: Vec<String>,
    pub candidates: Vec<String>,
    /// `memberships[m][c]`: cluster of candidate c under method m.
    pub memberships: Vec<Vec<usize>>,
    /// `(method a, method b, Rand index)` for every pair of methods.
    pub rand: Vec<(String, String, f64)>,
}

impl AgreementReport {
    pub fn rand_between(&self, a: &str, b: &str) -> Option<f64> {
        self.rand
            .iter()
            .find(|(x, y, _)| (x == a && y == b) || (x == b && y == a))
            .map(|(_, _, r)| *r)
    }

    /// Wide table: one row per candidate, one column per method.
    pub fn write_table_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec![String::from("candidate_id")];
        header.extend(self.methods.iter().cloned());
        out.write_record(&header)?;
        for (c, id) in self.candidates.iter().enumerate() {
            let mut rec = vec![id.clone()];
            rec.extend(self.memberships.iter().map(|m| m[c].to_string()));
            out.write_record(&rec)?;
        }
        out.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    /// Plot-ready long table `method,candidate_id,cluster`.
    pub fn write_long_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["method", "candidate_id", "cluster"])?;
        for (m, labels) in self.methods.iter().zip(&self.memberships) {
            for (id, l) in self.candidates.iter().zip(labels) {
                out.write_record([m.as_str(), id, &l.to_string()])?;
            }
        }
        out.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn write_rand_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["method_a", "method_b", "rand_index"])?;
        for (a, b, r) in &self.rand {
            out.write_record([a.as_str(), b, &r.to_string()])?;
        }
        out.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Membership table plus pairwise Rand indices. Every assignment must cover
/// exactly the listed candidates.
pub fn compare_memberships(assignments: &[ClusterAssignment], candidates: &[String]) -> Result<AgreementReport> {
    for a in assignments {
        if a.len() != candidates.len() {
            return Err(Error::Input(format!(
                "{} assignment covers {} points, expected {}",
                a.method().tag(),
                a.len(),
                candidates.len()
            )));
        }
    }
    let methods: Vec<String> = assignments.iter().map(|a| a.method().tag().to_string()).collect();
    let mut rand = Vec::new();
    for i in 0..assignments.len() {
        for j in i + 1..assignments.len() {
            rand.push((
                methods[i].clone(),
                methods[j].clone(),
                rand_index(assignments[i].labels(), assignments[j].labels())?,
            ));
        }
    }
    Ok(AgreementReport {
        memberships: assignments.iter().map(|a| a.labels().to_vec()).collect(),
        methods,
        candidates: candidates.to_vec(),
        rand,
    })
}

//! Adjusted mutual information between two labelings.
//!
//! Entropies use natural logarithms. The expected mutual information is the exact
//! sum under the hypergeometric model of random labelings with fixed marginals, with
//! log-factorials taken from a cumulative table so that large `n` stays stable.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Co-occurrence counts of truth classes (rows) and predicted clusters (columns).
/// Rows and columns follow the ascending order of the distinct label values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Contingency {
    counts: Vec<Vec<u64>>,
    row_sums: Vec<u64>,
    col_sums: Vec<u64>,
    n: u64,
}

impl Contingency {
    pub fn new(truth: &[usize], pred: &[usize]) -> Result<Self> {
        if truth.len() != pred.len() {
            return Err(Error::LengthMismatch(truth.len(), pred.len()));
        }
        if truth.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let rows = dense_ids(truth);
        let cols = dense_ids(pred);
        let mut counts = vec![vec![0u64; cols.len()]; rows.len()];
        for (t, p) in truth.iter().zip(pred) {
            counts[rows[t]][cols[p]] += 1;
        }
        let row_sums = counts.iter().map(|r| r.iter().sum()).collect();
        let col_sums = (0..cols.len())
            .map(|j| counts.iter().map(|r| r[j]).sum())
            .collect();
        Ok(Self {
            counts,
            row_sums,
            col_sums,
            n: truth.len() as u64,
        })
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn row_sums(&self) -> &[u64] {
        &self.row_sums
    }

    pub fn col_sums(&self) -> &[u64] {
        &self.col_sums
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn mutual_information(&self) -> f64 {
        let n = self.n as f64;
        let mut mi = 0.0;
        for (i, row) in self.counts.iter().enumerate() {
            for (j, &nij) in row.iter().enumerate() {
                if nij > 0 {
                    let nij = nij as f64;
                    let ab = self.row_sums[i] as f64 * self.col_sums[j] as f64;
                    mi += nij / n * (n * nij / ab).ln();
                }
            }
        }
        mi
    }

    pub fn expected_mutual_information(&self) -> f64 {
        expected_mutual_information(&self.row_sums, &self.col_sums, self.n)
    }
}

fn dense_ids(labels: &[usize]) -> BTreeMap<usize, usize> {
    let mut ids: BTreeMap<usize, usize> = labels.iter().map(|&l| (l, 0)).collect();
    for (dense, v) in ids.values_mut().enumerate() {
        *v = dense;
    }
    ids
}

/// Natural-log entropy of a marginal.
pub fn entropy(sums: &[u64], n: u64) -> f64 {
    let n = n as f64;
    sums.iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// `ln k!` for `k = 0..=n`.
fn log_factorials(n: u64) -> Vec<f64> {
    let mut table = Vec::with_capacity(n as usize + 1);
    table.push(0.0);
    let mut acc = 0.0;
    for k in 1..=n {
        acc += (k as f64).ln();
        table.push(acc);
    }
    table
}

/// Exact expected mutual information of random labelings with marginals `a` and `b`.
pub fn expected_mutual_information(a: &[u64], b: &[u64], n: u64) -> f64 {
    let lf = log_factorials(n);
    let nf = n as f64;
    let mut emi = 0.0;
    for &ai in a {
        for &bj in b {
            let lo = (ai + bj).saturating_sub(n).max(1);
            let hi = ai.min(bj);
            let fixed = lf[ai as usize] + lf[bj as usize] + lf[(n - ai) as usize]
                + lf[(n - bj) as usize]
                - lf[n as usize];
            for nij in lo..=hi {
                let log_p = fixed
                    - lf[nij as usize]
                    - lf[(ai - nij) as usize]
                    - lf[(bj - nij) as usize]
                    - lf[(n + nij - ai - bj) as usize];
                let x = nij as f64;
                emi += x / nf * (nf * x / (ai as f64 * bj as f64)).ln() * log_p.exp();
            }
        }
    }
    emi
}

/// Adjusted mutual information normalized by the larger marginal entropy.
///
/// When the denominator vanishes the score is 1 for labelings that agree up to
/// relabeling and 0 otherwise.
pub fn ami(truth: &[usize], pred: &[usize]) -> Result<f64> {
    let table = Contingency::new(truth, pred)?;
    let h = entropy(table.row_sums(), table.n()).max(entropy(table.col_sums(), table.n()));
    let mi = table.mutual_information();
    let emi = table.expected_mutual_information();
    let denominator = h - emi;
    if denominator.abs() < 1e-12 {
        return Ok(if same_partition(&table) { 1.0 } else { 0.0 });
    }
    Ok((mi - emi) / denominator)
}

fn same_partition(table: &Contingency) -> bool {
    table.row_sums.len() == table.col_sums.len()
        && table
            .counts
            .iter()
            .all(|row| row.iter().filter(|&&c| c > 0).count() == 1)
}

//! Brute-force adjusted mutual information.
//!
//! The expected mutual information is the probability-weighted average over every
//! contingency table with the observed margins, each table weighted by its
//! multivariate hypergeometric probability `prod a_i! prod b_j! / (n! prod n_ij!)`.

fn ln_fact(n: u64) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

pub fn mutual_information(table: &[Vec<u64>]) -> f64 {
    let n: u64 = table.iter().flatten().sum();
    let a: Vec<u64> = table.iter().map(|r| r.iter().sum()).collect();
    let b: Vec<u64> = (0..table[0].len())
        .map(|j| table.iter().map(|r| r[j]).sum())
        .collect();
    let n = n as f64;
    let mut mi = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                let c = c as f64;
                mi += c / n * (c * n / (a[i] as f64 * b[j] as f64)).ln();
            }
        }
    }
    mi
}

pub fn entropy(margin: &[u64]) -> f64 {
    let n: u64 = margin.iter().sum();
    margin
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n as f64;
            -p * p.ln()
        })
        .sum()
}

/// Calls `visit` with every non-negative integer table whose row sums are `a` and
/// column sums are `b`.
pub fn for_each_table(a: &[u64], b: &[u64], visit: &mut dyn FnMut(&[Vec<u64>])) {
    fn fill_row(
        a: &[u64],
        row: usize,
        col: usize,
        left_in_row: u64,
        cols_left: &mut Vec<u64>,
        table: &mut Vec<Vec<u64>>,
        visit: &mut dyn FnMut(&[Vec<u64>]),
    ) {
        let c = cols_left.len();
        if row == a.len() {
            if cols_left.iter().all(|&v| v == 0) {
                visit(table);
            }
            return;
        }
        if col == c - 1 {
            if left_in_row > cols_left[col] {
                return;
            }
            table[row][col] = left_in_row;
            cols_left[col] -= left_in_row;
            let next = a.get(row + 1).copied().unwrap_or(0);
            fill_row(a, row + 1, 0, next, cols_left, table, visit);
            cols_left[col] += left_in_row;
            return;
        }
        for v in 0..=left_in_row.min(cols_left[col]) {
            table[row][col] = v;
            cols_left[col] -= v;
            fill_row(a, row, col + 1, left_in_row - v, cols_left, table, visit);
            cols_left[col] += v;
        }
    }
    let mut table = vec![vec![0; b.len()]; a.len()];
    let mut cols_left = b.to_vec();
    fill_row(a, 0, 0, a[0], &mut cols_left, &mut table, visit);
}

pub fn brute_force_emi(a: &[u64], b: &[u64]) -> f64 {
    let n: u64 = a.iter().sum();
    let fixed: f64 = a.iter().chain(b).map(|&v| ln_fact(v)).sum::<f64>() - ln_fact(n);
    let mut emi = 0.0;
    let mut total_p = 0.0;
    for_each_table(a, b, &mut |t| {
        let lp = fixed - t.iter().flatten().map(|&v| ln_fact(v)).sum::<f64>();
        let p = lp.exp();
        total_p += p;
        emi += p * mutual_information(t);
    });
    assert!((total_p - 1.0).abs() < 1e-9, "probabilities sum to {total_p}");
    emi
}

/// AMI of the partition pair whose contingency table is `table` (no empty margins).
pub fn brute_force_ami(table: &[Vec<u64>]) -> f64 {
    let a: Vec<u64> = table.iter().map(|r| r.iter().sum()).collect();
    let b: Vec<u64> = (0..table[0].len())
        .map(|j| table.iter().map(|r| r[j]).sum())
        .collect();
    let emi = brute_force_emi(&a, &b);
    let h = entropy(&a).max(entropy(&b));
    let den = h - emi;
    if den.abs() < 1e-12 {
        let identical = a.len() == b.len()
            && table.iter().all(|r| r.iter().filter(|&&c| c > 0).count() == 1);
        return if identical { 1.0 } else { 0.0 };
    }
    (mutual_information(table) - emi) / den
}

/// Label vectors realising `table`: `n_ij` items with truth `i` and prediction `j`.
pub fn labels_from_table(table: &[Vec<u64>]) -> (Vec<usize>, Vec<usize>) {
    let mut truth = Vec::new();
    let mut pred = Vec::new();
    for (i, row) in table.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            for _ in 0..c {
                truth.push(i);
                pred.push(j);
            }
        }
    }
    (truth, pred)
}

/// Every `r x c` table (`r, c <= 3`) with total `n` and no empty row or column.
pub fn all_tables(n: u64) -> Vec<Vec<Vec<u64>>> {
    let mut out = Vec::new();
    for r in 1..=3usize {
        for c in 1..=3usize {
            let cells = r * c;
            let mut counts = vec![0u64; cells];
            compositions(n, 0, &mut counts, &mut |flat| {
                let t: Vec<Vec<u64>> = flat.chunks(c).map(|ch| ch.to_vec()).collect();
                let rows_ok = t.iter().all(|row| row.iter().sum::<u64>() > 0);
                let cols_ok = (0..c).all(|j| t.iter().map(|row| row[j]).sum::<u64>() > 0);
                if rows_ok && cols_ok {
                    out.push(t);
                }
            });
        }
    }
    out
}

fn compositions(left: u64, pos: usize, counts: &mut Vec<u64>, visit: &mut dyn FnMut(&[u64])) {
    if pos == counts.len() - 1 {
        counts[pos] = left;
        visit(counts);
        return;
    }
    for v in 0..=left {
        counts[pos] = v;
        compositions(left - v, pos + 1, counts, visit);
    }
}

/// Canonical labelings (restricted growth strings) of `n` items into at most `k` blocks.
pub fn set_partitions(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn grow(cur: &mut Vec<usize>, n: usize, k: usize, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        let next = cur.iter().max().map_or(0, |m| m + 1);
        for l in 0..=next.min(k - 1) {
            cur.push(l);
            grow(cur, n, k, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    grow(&mut Vec::new(), n, k, &mut out);
    out
}

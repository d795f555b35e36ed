//! Dip oracle via linear programming.
//!
//! Against a continuous CDF `G`, the sup-distance to an empirical CDF with jumps of
//! `1/n` at sorted distinct points `x_i` equals `1/(2n) + max_i |g_i - (i - 1/2)/n|`
//! with `g_i = G(x_i)`. A continuous unimodal CDF restricted to the sample points is a
//! non-decreasing sequence whose chord slopes increase up to the mode and decrease
//! after it, and a mode strictly between two sample points can always be moved onto
//! one of them. So the dip is `1/(2n)` plus the smallest Chebyshev error over such
//! sequences, minimised over the mode index; each mode index is one small LP.

use super::simplex::minimize;

pub fn dip_lp(sample: &[f64]) -> f64 {
    let mut x = sample.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len();
    let floor = 0.5 / n as f64;
    if n < 2 {
        return floor;
    }
    let target: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    assert!(h.iter().all(|&v| v > 0.0), "oracle needs distinct values");

    // Variables: g_0..g_{n-1}, err (index n). All >= 0.
    let nv = n + 1;
    let err = n;
    let mut best = f64::INFINITY;
    for mode in 0..n {
        let mut a: Vec<Vec<f64>> = Vec::new();
        let mut b: Vec<f64> = Vec::new();
        let mut push = |coeffs: &[(usize, f64)], rhs: f64| {
            let mut row = vec![0.0; nv];
            for &(j, v) in coeffs {
                row[j] += v;
            }
            a.push(row);
            b.push(rhs);
        };
        for i in 0..n {
            push(&[(i, 1.0), (err, -1.0)], target[i]);
            push(&[(i, -1.0), (err, -1.0)], -target[i]);
            push(&[(i, 1.0)], 1.0);
        }
        for k in 0..n - 1 {
            push(&[(k, 1.0), (k + 1, -1.0)], 0.0);
        }
        // row . g = h_k h_{k+1} (slope(k) - slope(k+1)), scaled to keep pivots tame
        for k in 0..n.saturating_sub(2) {
            let row = [
                (k, -h[k + 1]),
                (k + 1, h[k] + h[k + 1]),
                (k + 2, -h[k]),
            ];
            if k + 1 < mode {
                push(&row, 0.0);
            } else if k >= mode {
                let neg: Vec<(usize, f64)> = row.iter().map(|&(j, v)| (j, -v)).collect();
                push(&neg, 0.0);
            }
        }
        let mut cost = vec![0.0; nv];
        cost[err] = 1.0;
        let value = minimize(&cost, &a, &b).expect("a straight line is always feasible");
        best = best.min(value);
    }
    floor + best
}

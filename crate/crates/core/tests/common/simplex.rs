//! Dense two-phase tableau simplex for tiny linear programs used by test oracles.

const EPS: f64 = 1e-11;

struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        self.rhs[r] /= p;
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r];
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][c];
            if f != 0.0 {
                for (v, pv) in self.rows[i].iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                self.rhs[i] -= f * pivot_rhs;
            }
        }
        self.basis[r] = c;
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for (r, &b) in self.basis.iter().enumerate() {
            if cost[b] != 0.0 {
                for (dj, v) in d.iter_mut().zip(&self.rows[r]) {
                    *dj -= cost[b] * v;
                }
            }
        }
        d
    }

    fn objective(&self, cost: &[f64]) -> f64 {
        self.basis
            .iter()
            .zip(&self.rhs)
            .map(|(&b, &v)| cost[b] * v)
            .sum()
    }

    /// Minimises `cost` over the allowed columns with Bland's rule. `false` if unbounded.
    fn optimise(&mut self, cost: &[f64], allowed: usize) -> bool {
        loop {
            let d = self.reduced_costs(cost);
            let Some(enter) = (0..allowed).find(|&j| d[j] < -EPS) else {
                return true;
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows.len() {
                let a = self.rows[r][enter];
                if a > EPS {
                    let ratio = self.rhs[r] / a;
                    match leave {
                        Some((lr, best))
                            if ratio > best + EPS
                                || ((ratio - best).abs() <= EPS
                                    && self.basis[r] > self.basis[lr]) => {}
                        _ => leave = Some((r, ratio)),
                    }
                }
            }
            let Some((r, _)) = leave else {
                return false;
            };
            self.pivot(r, enter);
        }
    }
}

/// Minimises `c . x` subject to `A x <= b` and `x >= 0`. `None` if infeasible or
/// unbounded.
pub fn minimize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Option<f64> {
    let m = a.len();
    let n = c.len();
    let artificial_rows: Vec<usize> = (0..m).filter(|&r| b[r] < 0.0).collect();
    let width = n + m + artificial_rows.len();
    let mut rows = vec![vec![0.0; width]; m];
    let mut rhs = vec![0.0; m];
    let mut basis = vec![0; m];
    let mut next_art = n + m;
    for r in 0..m {
        let sign = if b[r] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            rows[r][j] = sign * a[r][j];
        }
        rows[r][n + r] = sign;
        rhs[r] = sign * b[r];
        if sign < 0.0 {
            rows[r][next_art] = 1.0;
            basis[r] = next_art;
            next_art += 1;
        } else {
            basis[r] = n + r;
        }
    }
    let mut t = Tableau { rows, rhs, basis };

    if !artificial_rows.is_empty() {
        let mut phase1 = vec![0.0; width];
        for v in phase1.iter_mut().skip(n + m) {
            *v = 1.0;
        }
        t.optimise(&phase1, width);
        if t.objective(&phase1) > 1e-9 {
            return None;
        }
        for r in 0..m {
            if t.basis[r] >= n + m {
                if let Some(c) = (0..n + m).find(|&c| t.rows[r][c].abs() > EPS) {
                    t.pivot(r, c);
                }
            }
        }
    }

    let mut cost = vec![0.0; width];
    cost[..n].copy_from_slice(c);
    if !t.optimise(&cost, n + m) {
        return None;
    }
    Some(t.objective(&cost))
}

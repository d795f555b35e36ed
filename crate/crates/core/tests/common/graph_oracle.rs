//! Exhaustive spanning-tree and connected-component oracles on small complete graphs.

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Every pair `(i, j)` with `i < j` and its Euclidean weight, in enumeration order.
pub fn all_edges(points: &[Vec<f64>]) -> Vec<(usize, usize, f64)> {
    let k = points.len();
    let mut edges = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            edges.push((i, j, distance(&points[i], &points[j])));
        }
    }
    edges
}

fn spans(k: usize, chosen: &[(usize, usize, f64)]) -> bool {
    // k - 1 edges span k vertices iff they connect everything.
    let mut label: Vec<usize> = (0..k).collect();
    for &(i, j, _) in chosen {
        let (a, b) = (label[i], label[j]);
        if a == b {
            return false;
        }
        for l in label.iter_mut() {
            if *l == b {
                *l = a;
            }
        }
    }
    true
}

/// Minimum total weight over all spanning trees, by enumerating every `(k-1)`-subset
/// of the edges.
pub fn brute_force_mst_weight(points: &[Vec<f64>]) -> f64 {
    let k = points.len();
    if k <= 1 {
        return 0.0;
    }
    let edges = all_edges(points);
    let m = edges.len();
    let mut best = f64::INFINITY;
    let mut idx: Vec<usize> = (0..k - 1).collect();
    loop {
        let chosen: Vec<(usize, usize, f64)> = idx.iter().map(|&e| edges[e]).collect();
        if spans(k, &chosen) {
            best = best.min(chosen.iter().map(|e| e.2).sum());
        }
        // next combination in lexicographic order
        let mut pos = k - 1;
        loop {
            if pos == 0 {
                return best;
            }
            pos -= 1;
            if idx[pos] < m - (k - 1 - pos) {
                idx[pos] += 1;
                for q in pos + 1..k - 1 {
                    idx[q] = idx[q - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Component id of every vertex in the graph with edges `w_ij < theta`, by repeated
/// flooding. Ids are the smallest vertex of each component.
pub fn threshold_components(points: &[Vec<f64>], theta: f64) -> Vec<usize> {
    let k = points.len();
    let mut comp: Vec<usize> = (0..k).collect();
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..k {
            for j in 0..k {
                if i != j && distance(&points[i], &points[j]) < theta && comp[j] < comp[i] {
                    comp[i] = comp[j];
                    changed = true;
                }
            }
        }
    }
    comp
}

/// True when two labelings induce the same partition.
pub fn same_partition(a: &[usize], b: &[usize]) -> bool {
    a.len() == b.len()
        && (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
}

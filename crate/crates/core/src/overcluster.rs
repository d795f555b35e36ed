//! Overclustering into many small convex subclusters.
//!
//! Global k-means++ grows the center set one at a time: for every intermediate `k`
//! it samples `Q` candidate positions with k-means++ D² weighting, runs Lloyd from the
//! current centers plus each candidate, and keeps the lowest-SSE solution. Undersized
//! subclusters are eliminated afterwards and their points handed to the nearest
//! surviving centers.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

pub const DEFAULT_CANDIDATES: usize = 10;
pub const DEFAULT_MAX_ITERS: usize = 300;
pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LloydParams {
    pub max_iters: usize,
    /// Stop once the relative SSE improvement of an iteration falls below this.
    pub tol: f64,
}

impl Default for LloydParams {
    fn default() -> Self {
        Self {
            max_iters: DEFAULT_MAX_ITERS,
            tol: DEFAULT_TOL,
        }
    }
}

/// A partition of the dataset into `k` subclusters with their centers.
#[derive(Clone, Debug, PartialEq)]
pub struct Overclustering {
    pub centers: Array2<f64>,
    pub assignments: Vec<usize>,
    pub sse: f64,
}

impl Overclustering {
    pub fn k(&self) -> usize {
        self.centers.nrows()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k()];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }

    /// Point indices of every subcluster, in ascending order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.k()];
        for (i, &a) in self.assignments.iter().enumerate() {
            members[a].push(i);
        }
        members
    }
}

#[inline]
pub(crate) fn sq_dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Row-major storage of a standard-layout matrix.
fn flat<'a>(a: &'a ndarray::CowArray<'_, f64, ndarray::Ix2>) -> &'a [f64] {
    a.as_slice().expect("standard layout")
}

/// Nearest of the row-major `centers` (rows of length `point.len()`) and its squared
/// distance; ties go to the lowest center id.
fn nearest(point: &[f64], centers: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.chunks_exact(point.len()).enumerate() {
        let d: f64 = point
            .iter()
            .zip(center)
            .map(|(x, y)| (x - y) * (x - y))
            .sum();
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn assign(points: &Array2<f64>, centers: &Array2<f64>) -> (Vec<usize>, Vec<f64>) {
    let d = points.ncols();
    let (points, centers) = (points.as_standard_layout(), centers.as_standard_layout());
    let centers = flat(&centers);
    let pairs: Vec<(usize, f64)> = flat(&points)
        .par_chunks_exact(d)
        .map(|p| nearest(p, centers))
        .collect();
    pairs.into_iter().unzip()
}

/// Sum of squared distances of every point to its assigned center.
pub fn sse_of(ds: &Dataset, centers: &Array2<f64>, assignments: &[usize]) -> f64 {
    ds.points()
        .outer_iter()
        .zip(assignments)
        .map(|(p, &a)| sq_dist(p, centers.row(a)))
        .sum()
}

/// Cluster means; sums are accumulated sequentially in point order.
fn means(points: &Array2<f64>, assignments: &[usize], k: usize) -> (Array2<f64>, Vec<usize>) {
    let d = points.ncols();
    let points = points.as_standard_layout();
    let mut sums = vec![0.0; k * d];
    let mut counts = vec![0usize; k];
    for (p, &a) in flat(&points).chunks_exact(d).zip(assignments) {
        for (s, x) in sums[a * d..(a + 1) * d].iter_mut().zip(p) {
            *s += x;
        }
        counts[a] += 1;
    }
    for (row, &c) in sums.chunks_exact_mut(d).zip(&counts) {
        if c > 0 {
            row.iter_mut().for_each(|s| *s /= c as f64);
        }
    }
    (Array2::from_shape_vec((k, d), sums).expect("k x d sums"), counts)
}

/// Result of a k-means++ candidate draw.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidateDraw {
    /// Row indices of the sampled points.
    pub indices: Vec<usize>,
    /// Set when every D² weight was zero and candidates were drawn uniformly instead.
    pub uniform_fallback: bool,
}

/// Draws `q` candidate points (with replacement) with probability proportional to the
/// squared distance to the nearest existing center. Uniform when `centers` is empty or
/// all weights vanish.
pub fn kmeanspp_candidates<R: Rng>(
    ds: &Dataset,
    centers: ArrayView2<'_, f64>,
    q: usize,
    rng: &mut R,
) -> CandidateDraw {
    let n = ds.len();
    let weights: Option<Vec<f64>> = (centers.nrows() > 0).then(|| {
        let points = ds.points().as_standard_layout();
        let centers = centers.as_standard_layout();
        flat(&points)
            .chunks_exact(ds.dims())
            .map(|p| nearest(p, centers.as_slice().expect("standard layout")).1)
            .collect()
    });
    candidates_from_weights(weights.as_deref(), n, q, rng)
}

fn candidates_from_weights<R: Rng>(
    weights: Option<&[f64]>,
    n: usize,
    q: usize,
    rng: &mut R,
) -> CandidateDraw {
    match weights.map(WeightedIndex::new) {
        Some(Ok(dist)) => CandidateDraw {
            indices: (0..q).map(|_| dist.sample(rng)).collect(),
            uniform_fallback: false,
        },
        other => {
            if other.is_some() {
                log::debug!("all D² weights are zero, sampling candidates uniformly");
            }
            CandidateDraw {
                indices: (0..q).map(|_| rng.random_range(0..n)).collect(),
                uniform_fallback: other.is_some(),
            }
        }
    }
}

/// Moves points into empty clusters. Each empty cluster takes the point farthest from
/// its assigned center among clusters that have more than one member.
fn repair_empty(
    assignments: &mut [usize],
    dists: &mut [f64],
    counts: &mut [usize],
    centers: &mut Array2<f64>,
    points: &Array2<f64>,
) {
    for empty in 0..counts.len() {
        if counts[empty] > 0 {
            continue;
        }
        let donor = (0..assignments.len())
            .filter(|&i| counts[assignments[i]] > 1)
            .fold(None, |best: Option<usize>, i| match best {
                Some(b) if dists[b] >= dists[i] => Some(b),
                _ => Some(i),
            });
        let Some(point) = donor else {
            return;
        };
        counts[assignments[point]] -= 1;
        assignments[point] = empty;
        counts[empty] = 1;
        dists[point] = 0.0;
        centers.row_mut(empty).assign(&points.row(point));
    }
}

/// Trace of one Lloyd run: the SSE after every assignment step.
#[derive(Clone, Debug, Default)]
pub struct LloydTrace {
    pub sse: Vec<f64>,
}

/// Standard Lloyd alternation from `init`. Returns after an assignment step, so every
/// point is assigned to a nearest center of the returned solution.
pub fn lloyd(ds: &Dataset, init: &Array2<f64>, params: LloydParams) -> Result<Overclustering> {
    lloyd_traced(ds, init, params).map(|(oc, _)| oc)
}

pub fn lloyd_traced(
    ds: &Dataset,
    init: &Array2<f64>,
    params: LloydParams,
) -> Result<(Overclustering, LloydTrace)> {
    let k = init.nrows();
    let n = ds.len();
    if k == 0 {
        return Err(Error::InvalidConfig("lloyd needs at least one center".into()));
    }
    if k > n {
        return Err(Error::KTooLarge { k, n });
    }
    if init.ncols() != ds.dims() {
        return Err(Error::LengthMismatch(init.ncols(), ds.dims()));
    }
    let points = ds.points();
    let mut centers = init.clone();
    let (mut assignments, mut dists) = assign(points, &centers);
    let mut sse: f64 = dists.iter().sum();
    let mut trace = LloydTrace { sse: vec![sse] };

    for _ in 0..params.max_iters {
        let (_, mut counts) = means(points, &assignments, k);
        if counts.contains(&0) {
            repair_empty(&mut assignments, &mut dists, &mut counts, &mut centers, points);
        }
        centers = means(points, &assignments, k).0;
        let (next, next_dists) = assign(points, &centers);
        let next_sse: f64 = next_dists.iter().sum();
        let changed = next != assignments;
        let improvement = sse - next_sse;
        assignments = next;
        dists = next_dists;
        sse = next_sse;
        trace.sse.push(sse);
        if !changed || improvement <= params.tol * sse.max(f64::MIN_POSITIVE) {
            break;
        }
    }

    Ok((
        Overclustering {
            centers,
            assignments,
            sse,
        },
        trace,
    ))
}

/// Global k-means++ up to `k_target` centers. `on_step` sees the kept solution for
/// every intermediate `k`.
pub fn global_kmeanspp_with<R: Rng>(
    ds: &Dataset,
    k_target: usize,
    candidates: usize,
    params: LloydParams,
    rng: &mut R,
    mut on_step: impl FnMut(&Overclustering),
) -> Result<Overclustering> {
    let n = ds.len();
    if k_target == 0 {
        return Err(Error::InvalidConfig("target subcluster count must be >= 1".into()));
    }
    if k_target > n {
        return Err(Error::KTooLarge { k: k_target, n });
    }
    if candidates == 0 {
        return Err(Error::InvalidConfig("candidate count must be >= 1".into()));
    }

    let mean = ds
        .points()
        .mean_axis(Axis(0))
        .expect("dataset is non-empty")
        .insert_axis(Axis(0));
    let mut best = lloyd(ds, &mean, params)?;
    on_step(&best);

    for _ in 1..k_target {
        let draw = kmeanspp_candidates(ds, best.centers.view(), candidates, rng);
        let trials: Vec<Result<Overclustering>> = draw
            .indices
            .par_iter()
            .map(|&idx| {
                let mut init = best.centers.clone();
                init.push_row(ds.row(idx)).expect("matching width");
                lloyd(ds, &init, params)
            })
            .collect();
        let mut kept: Option<Overclustering> = None;
        for trial in trials {
            let trial = trial?;
            if kept.as_ref().is_none_or(|k| trial.sse < k.sse) {
                kept = Some(trial);
            }
        }
        best = kept.expect("at least one candidate");
        on_step(&best);
    }
    Ok(best)
}

pub fn global_kmeanspp<R: Rng>(
    ds: &Dataset,
    k_target: usize,
    candidates: usize,
    rng: &mut R,
) -> Result<Overclustering> {
    global_kmeanspp_with(ds, k_target, candidates, LloydParams::default(), rng, |_| {})
}

/// Removes subclusters smaller than `min_size`, smallest first (lowest id on ties).
/// Their points go to the nearest surviving center and only the receiving centers are
/// recomputed. If every subcluster would go, the largest survives alone.
pub fn eliminate_small(oc: &Overclustering, ds: &Dataset, min_size: usize) -> Overclustering {
    let points = ds.points();
    let mut alive: Vec<bool> = vec![true; oc.k()];
    let mut centers = oc.centers.clone();
    let mut assignments = oc.assignments.clone();
    let mut sizes = oc.sizes();

    loop {
        let alive_count = alive.iter().filter(|&&a| a).count();
        if alive_count <= 1 {
            break;
        }
        let victim = (0..oc.k())
            .filter(|&c| alive[c] && sizes[c] < min_size)
            .min_by_key(|&c| (sizes[c], c));
        let Some(victim) = victim else {
            break;
        };
        alive[victim] = false;
        let mut touched = vec![false; oc.k()];
        for (i, a) in assignments.iter_mut().enumerate() {
            if *a != victim {
                continue;
            }
            let p = points.row(i);
            let mut target = (usize::MAX, f64::INFINITY);
            for c in (0..oc.k()).filter(|&c| alive[c]) {
                let d = sq_dist(p, centers.row(c));
                if d < target.1 {
                    target = (c, d);
                }
            }
            *a = target.0;
            sizes[target.0] += 1;
            touched[target.0] = true;
        }
        sizes[victim] = 0;
        for c in (0..oc.k()).filter(|&c| touched[c]) {
            let mut sum = Array1::<f64>::zeros(ds.dims());
            for (i, _) in assignments.iter().enumerate().filter(|(_, &a)| a == c) {
                sum.scaled_add(1.0, &points.row(i));
            }
            centers.row_mut(c).assign(&(sum / sizes[c] as f64));
        }
    }

    let mut remap = vec![usize::MAX; oc.k()];
    let mut kept_rows = Vec::new();
    for c in (0..oc.k()).filter(|&c| alive[c]) {
        remap[c] = kept_rows.len();
        kept_rows.push(c);
    }
    let centers = centers.select(Axis(0), &kept_rows);
    let assignments: Vec<usize> = assignments.iter().map(|&a| remap[a]).collect();
    let sse = sse_of(ds, &centers, &assignments);
    Overclustering {
        centers,
        assignments,
        sse,
    }
}

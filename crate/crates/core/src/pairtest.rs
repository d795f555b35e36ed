//! Unimodality test for a pair of subclusters.
//!
//! Points of both subclusters are projected onto the axis joining the two subcluster
//! means, measured as signed distances from the perpendicular bisecting hyperplane.
//! Each of `L` rounds draws a balanced subsample (all points of the smaller
//! subcluster plus an equal-sized random subset of the larger one), runs the dip test
//! on the projected values and votes for unimodality when `p >= alpha`. The pair is
//! unimodal when a strict majority of rounds vote for it.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diptest::{dip_sorted, DipPValue};
use crate::error::{Error, Result};
use crate::seeding::substream;

pub const DEFAULT_VOTES: usize = 11;
pub const DEFAULT_ALPHA: f64 = 0.001;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Unimodal,
    Multimodal,
}

impl Verdict {
    pub fn is_unimodal(self) -> bool {
        self == Verdict::Unimodal
    }
}

/// Outcome of one pair test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairTestRecord {
    pub i: usize,
    pub j: usize,
    pub votes: Vec<u8>,
    pub dips: Vec<f64>,
    pub p_values: Vec<f64>,
    /// Points drawn from each subcluster per round.
    pub s: usize,
    pub verdict: Verdict,
}

impl PairTestRecord {
    /// A record for a verdict decided without data, e.g. by a test double.
    pub fn fixed(i: usize, j: usize, verdict: Verdict) -> Self {
        let unimodal = verdict.is_unimodal();
        Self {
            i,
            j,
            votes: vec![u8::from(unimodal)],
            dips: vec![],
            p_values: vec![if unimodal { 1.0 } else { 0.0 }],
            s: 0,
            verdict,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairTestConfig {
    /// Number of Monte Carlo rounds; must be odd.
    pub votes: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for PairTestConfig {
    fn default() -> Self {
        Self {
            votes: DEFAULT_VOTES,
            alpha: DEFAULT_ALPHA,
            seed: 0,
        }
    }
}

impl PairTestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.votes == 0 || self.votes % 2 == 0 {
            return Err(Error::InvalidConfig(format!(
                "vote count must be odd and positive, got {}",
                self.votes
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Signed distance of every row from the bisecting hyperplane of `mu_i` and `mu_j`:
/// negative on the side of `mu_i`, positive on the side of `mu_j`.
pub fn signed_distances(
    points: ArrayView2<'_, f64>,
    mu_i: ArrayView1<'_, f64>,
    mu_j: ArrayView1<'_, f64>,
) -> Result<Vec<f64>> {
    let diff = &mu_j - &mu_i;
    let norm = diff.dot(&diff).sqrt();
    if norm <= 1e-12 {
        return Err(Error::CoincidentCenters(0, 1));
    }
    let dir = diff / norm;
    let mid = (&mu_i + &mu_j) * 0.5;
    Ok(points
        .outer_iter()
        .map(|x| (&x - &mid).dot(&dir))
        .collect())
}

/// Row indices drawn from each side for one balanced round.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BalancedSample {
    pub from_i: Vec<usize>,
    pub from_j: Vec<usize>,
}

impl BalancedSample {
    pub fn s(&self) -> usize {
        self.from_i.len()
    }

    pub fn union(&self, c_i: ArrayView2<'_, f64>, c_j: ArrayView2<'_, f64>) -> Array2<f64> {
        let a = c_i.select(Axis(0), &self.from_i);
        let b = c_j.select(Axis(0), &self.from_j);
        ndarray::concatenate(Axis(0), &[a.view(), b.view()]).expect("same width")
    }
}

fn draw_rows<R: Rng>(len: usize, s: usize, rng: &mut R) -> Vec<usize> {
    if len == s {
        return (0..len).collect();
    }
    let mut rows = index::sample(rng, len, s).into_vec();
    rows.sort_unstable();
    rows
}

/// Takes every point of the smaller set and `s = min(|c_i|, |c_j|)` distinct points of
/// the larger one. Only the larger side consumes randomness.
pub fn balanced_union<R: Rng>(len_i: usize, len_j: usize, rng: &mut R) -> Result<BalancedSample> {
    if len_i == 0 {
        return Err(Error::EmptySubcluster(0));
    }
    if len_j == 0 {
        return Err(Error::EmptySubcluster(1));
    }
    let s = len_i.min(len_j);
    Ok(BalancedSample {
        from_i: draw_rows(len_i, s, rng),
        from_j: draw_rows(len_j, s, rng),
    })
}

/// Points of one subcluster together with its id in the overclustering.
#[derive(Clone, Copy, Debug)]
pub struct Subcluster<'a> {
    pub id: usize,
    pub points: ArrayView2<'a, f64>,
}

fn mean(points: ArrayView2<'_, f64>) -> Array1<f64> {
    points.mean_axis(Axis(0)).expect("non-empty subcluster")
}

/// Runs the balanced, majority-vote dip test on a pair of subclusters. Round `l`
/// draws from the substream `(seed, min(i, j), max(i, j), l)`, so the verdict depends
/// only on the data, the configuration and the pair.
pub fn unimodal_pair(
    c_i: Subcluster<'_>,
    c_j: Subcluster<'_>,
    cfg: &PairTestConfig,
    pvalue: &dyn DipPValue,
) -> Result<PairTestRecord> {
    cfg.validate()?;
    let smallest = c_i.points.nrows().min(c_j.points.nrows());
    if smallest < 2 {
        return Err(Error::TooFewPoints(smallest));
    }
    let mu_i = mean(c_i.points);
    let mu_j = mean(c_j.points);
    let proj_i = signed_distances(c_i.points, mu_i.view(), mu_j.view())
        .map_err(|_| Error::CoincidentCenters(c_i.id, c_j.id))?;
    let proj_j = signed_distances(c_j.points, mu_i.view(), mu_j.view())
        .map_err(|_| Error::CoincidentCenters(c_i.id, c_j.id))?;

    let (lo, hi) = (c_i.id.min(c_j.id) as u64, c_i.id.max(c_j.id) as u64);
    let s = proj_i.len().min(proj_j.len());
    let mut votes = Vec::with_capacity(cfg.votes);
    let mut dips = Vec::with_capacity(cfg.votes);
    let mut p_values = Vec::with_capacity(cfg.votes);
    let mut buf = Vec::with_capacity(2 * s);
    for round in 0..cfg.votes {
        let mut rng = substream(cfg.seed, &[lo, hi, round as u64]);
        let sample = balanced_union(proj_i.len(), proj_j.len(), &mut rng)?;
        buf.clear();
        buf.extend(sample.from_i.iter().map(|&r| proj_i[r]));
        buf.extend(sample.from_j.iter().map(|&r| proj_j[r]));
        buf.sort_unstable_by(f64::total_cmp);
        let dip = dip_sorted(&buf);
        let p = pvalue.p_value(dip, buf.len());
        dips.push(dip);
        p_values.push(p);
        votes.push(u8::from(p >= cfg.alpha));
    }
    let yes: usize = votes.iter().map(|&v| v as usize).sum();
    let verdict = if 2 * yes > cfg.votes {
        Verdict::Unimodal
    } else {
        Verdict::Multimodal
    };
    Ok(PairTestRecord {
        i: c_i.id,
        j: c_j.id,
        votes,
        dips,
        p_values,
        s,
        verdict,
    })
}

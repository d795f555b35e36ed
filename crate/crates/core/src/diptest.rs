//! Hartigan's dip statistic and p-values against the uniform null.
//!
//! The dip of a sample is the sup-distance between its empirical CDF and the closest
//! unimodal CDF. It is computed with the greatest-convex-minorant /
//! least-concave-majorant iteration of Hartigan & Hartigan (1985), in `O(n)` after
//! sorting. Under this convention a sample of `n` distinct values always has
//! `dip >= 1/(2n)`, with equality on equally spaced points.
//!
//! P-values come either from an exact bootstrap over uniform samples or from a
//! precomputed [`DipTable`] of null quantiles, interpolated in `sqrt(n) * dip` space.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::substream;

/// Minimum bootstrap repetitions for a single p-value.
pub const MIN_BOOTSTRAP_REPS: usize = 100;
/// Minimum bootstrap repetitions per tabulated sample size.
pub const MIN_TABLE_REPS: usize = 1000;
pub const TABLE_FORMAT_VERSION: u32 = 1;

pub const DEFAULT_TABLE_SIZES: &[usize] = &[
    10, 15, 20, 30, 40, 50, 60, 80, 100, 150, 200, 300, 400, 500, 700, 1000, 1500, 2000, 3000,
    5000, 7000, 10000,
];
pub const DEFAULT_TABLE_PROBS: &[f64] = &[
    0.01, 0.02, 0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.85, 0.9, 0.95, 0.98, 0.99,
    0.995, 0.998, 0.999, 0.9995, 0.9999,
];
pub const DEFAULT_TABLE_REPS: usize = 10_000;
pub const DEFAULT_TABLE_SEED: u64 = 20_240_601;

static DEFAULT_TABLE_CSV: &str = include_str!("../data/dip_table.csv");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PValueKind {
    Bootstrap,
    Table,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DipResult {
    pub dip: f64,
    pub p_value: f64,
    pub n: usize,
    pub method: PValueKind,
}

fn validate_sample(sample: &[f64]) -> Result<()> {
    if sample.len() < 2 {
        return Err(Error::TooFewPoints(sample.len()));
    }
    if let Some(pos) = sample.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteValue(pos));
    }
    Ok(())
}

/// Dip statistic of an unsorted sample.
pub fn dip_statistic(sample: &[f64]) -> Result<f64> {
    validate_sample(sample)?;
    let mut sorted = sample.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    Ok(dip_sorted(&sorted))
}

/// Dip of an already sorted slice. Degenerate inputs (fewer than two points, or all
/// values equal) yield the floor value `1/(2n)`.
pub fn dip_sorted(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n == 0 {
        return 0.0;
    }
    debug_assert!(xs.windows(2).all(|w| w[0] <= w[1]), "sample must be sorted");
    let floor = 1.0 / (2.0 * n as f64);
    if n < 2 || xs[n - 1] == xs[0] {
        return floor;
    }

    // 1-based indexing throughout, as in the published procedure.
    let x = |i: usize| xs[i - 1];
    let fl = |i: usize| i as f64;

    // mn[j]: predecessor of j on the convex minorant of x[1..=j].
    let mut mn = vec![0usize; n + 1];
    mn[1] = 1;
    for j in 2..=n {
        mn[j] = j - 1;
        loop {
            let mnj = mn[j];
            let mnmnj = mn[mnj];
            if mnj == 1
                || (x(j) - x(mnj)) * (fl(mnj) - fl(mnmnj)) < (x(mnj) - x(mnmnj)) * (fl(j) - fl(mnj))
            {
                break;
            }
            mn[j] = mnmnj;
        }
    }

    // mj[k]: successor of k on the concave majorant of x[k..=n].
    let mut mj = vec![0usize; n + 1];
    mj[n] = n;
    for k in (1..n).rev() {
        mj[k] = k + 1;
        loop {
            let mjk = mj[k];
            let mjmjk = mj[mjk];
            if mjk == n
                || (x(k) - x(mjk)) * (fl(mjk) - fl(mjmjk)) < (x(mjk) - x(mjmjk)) * (fl(k) - fl(mjk))
            {
                break;
            }
            mj[k] = mjmjk;
        }
    }

    let mut gcm = vec![0usize; n + 1];
    let mut lcm = vec![0usize; n + 1];
    let mut low = 1usize;
    let mut high = n;
    // Distances are kept in units of 1/(2n) until the end.
    let mut dip = 1.0f64;

    loop {
        gcm[1] = high;
        let mut i = 1;
        while gcm[i] > low {
            gcm[i + 1] = mn[gcm[i]];
            i += 1;
        }
        let l_gcm = i;
        let mut ig = l_gcm;
        let mut ix = ig - 1;

        lcm[1] = low;
        i = 1;
        while lcm[i] < high {
            lcm[i + 1] = mj[lcm[i]];
            i += 1;
        }
        let l_lcm = i;
        let mut ih = l_lcm;
        let mut iv = 2;

        // Largest distance between the GCM and LCM on [low, high].
        let mut d = 0.0f64;
        if l_gcm != 2 || l_lcm != 2 {
            loop {
                let gcmix = gcm[ix];
                let lcmiv = lcm[iv];
                if gcmix > lcmiv {
                    let gcmi1 = gcm[ix + 1];
                    let dx = (fl(lcmiv) - fl(gcmi1) + 1.0)
                        - (x(lcmiv) - x(gcmi1)) * (fl(gcmix) - fl(gcmi1)) / (x(gcmix) - x(gcmi1));
                    iv += 1;
                    if dx >= d {
                        d = dx;
                        ig = ix + 1;
                        ih = iv - 1;
                    }
                } else {
                    let lcmiv1 = lcm[iv - 1];
                    let dx = (x(gcmix) - x(lcmiv1)) * (fl(lcmiv) - fl(lcmiv1))
                        / (x(lcmiv) - x(lcmiv1))
                        - (fl(gcmix) - fl(lcmiv1) - 1.0);
                    ix -= 1;
                    if dx >= d {
                        d = dx;
                        ig = ix + 1;
                        ih = iv;
                    }
                }
                ix = ix.max(1);
                iv = iv.min(l_lcm);
                if gcm[ix] == lcm[iv] {
                    break;
                }
            }
        } else {
            d = 1.0;
        }

        if d < dip {
            break;
        }

        // Dip for the convex minorant on the left of the modal interval.
        let mut dip_l = 0.0f64;
        for j in ig..l_gcm {
            let mut max_t = 1.0f64;
            let (jb, je) = (gcm[j + 1], gcm[j]);
            if je - jb > 1 && x(je) != x(jb) {
                let c = (fl(je) - fl(jb)) / (x(je) - x(jb));
                for jj in jb..=je {
                    let t = (fl(jj) - fl(jb) + 1.0) - (x(jj) - x(jb)) * c;
                    max_t = max_t.max(t);
                }
            }
            dip_l = dip_l.max(max_t);
        }

        // Dip for the concave majorant on the right.
        let mut dip_u = 0.0f64;
        for j in ih..l_lcm {
            let mut max_t = 1.0f64;
            let (jb, je) = (lcm[j], lcm[j + 1]);
            if je - jb > 1 && x(je) != x(jb) {
                let c = (fl(je) - fl(jb)) / (x(je) - x(jb));
                for jj in jb..=je {
                    let t = (x(jj) - x(jb)) * c - (fl(jj) - fl(jb) - 1.0);
                    max_t = max_t.max(t);
                }
            }
            dip_u = dip_u.max(max_t);
        }

        dip = dip.max(dip_u.max(dip_l));

        // Without this check the iteration can cycle forever.
        if low == gcm[ig] && high == lcm[ih] {
            break;
        }
        low = gcm[ig];
        high = lcm[ih];
    }

    dip / (2.0 * n as f64)
}

fn uniform_dip<R: Rng>(rng: &mut R, n: usize, buf: &mut Vec<f64>) -> f64 {
    buf.clear();
    buf.extend((0..n).map(|_| rng.random::<f64>()));
    buf.sort_unstable_by(f64::total_cmp);
    dip_sorted(buf)
}

/// Sorted dips of `reps` uniform samples of size `n`.
///
/// Replicate `r` draws from the substream `(seed, n, r)`, so the result does not
/// depend on how the replicates are scheduled across threads.
#[derive(Clone, Debug)]
pub struct BootstrapNull {
    n: usize,
    dips: Vec<f64>,
}

impl BootstrapNull {
    pub fn sample(n: usize, reps: usize, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooFewPoints(n));
        }
        let mut dips: Vec<f64> = (0..reps)
            .into_par_iter()
            .map_init(Vec::new, |buf, r| {
                let mut rng = substream(seed, &[n as u64, r as u64]);
                uniform_dip(&mut rng, n, buf)
            })
            .collect();
        dips.sort_unstable_by(f64::total_cmp);
        Ok(Self { n, dips })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn reps(&self) -> usize {
        self.dips.len()
    }

    pub fn dips(&self) -> &[f64] {
        &self.dips
    }

    /// `(1 + #{null dips >= dip}) / (reps + 1)`.
    pub fn p_value(&self, dip: f64) -> f64 {
        let below = self.dips.partition_point(|&d| d < dip);
        let at_least = self.dips.len() - below;
        (1 + at_least) as f64 / (self.dips.len() + 1) as f64
    }

    /// Empirical quantile with linear interpolation between order statistics.
    pub fn quantile(&self, prob: f64) -> f64 {
        let h = (self.dips.len() - 1) as f64 * prob;
        let lo = h.floor() as usize;
        let hi = (lo + 1).min(self.dips.len() - 1);
        self.dips[lo] + (h - lo as f64) * (self.dips[hi] - self.dips[lo])
    }
}

pub fn dip_pvalue_bootstrap(dip: f64, n: usize, reps: usize, seed: u64) -> Result<f64> {
    if reps < MIN_BOOTSTRAP_REPS {
        return Err(Error::InvalidReps {
            min: MIN_BOOTSTRAP_REPS,
            got: reps,
        });
    }
    if !dip.is_finite() || dip < 0.0 {
        return Err(Error::NonFiniteValue(0));
    }
    Ok(BootstrapNull::sample(n, reps, seed)?.p_value(dip))
}

/// Quantiles of the null dip distribution on a grid of sample sizes and probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct DipTable {
    sizes: Vec<usize>,
    probs: Vec<f64>,
    /// One row per size, one column per prob.
    quantiles: Vec<Vec<f64>>,
    reps: usize,
    seed: u64,
}

const QUANTILE_TIE_TOL: f64 = 1e-12;

fn validate_grid(sizes: &[usize], probs: &[f64]) -> Result<()> {
    if sizes.is_empty() || probs.is_empty() {
        return Err(Error::EmptyTable);
    }
    if sizes[0] < 4 {
        return Err(Error::InvalidGrid("sizes must be at least 4".into()));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidGrid("sizes must be strictly ascending".into()));
    }
    if probs.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
        return Err(Error::InvalidGrid("probs must lie in (0, 1)".into()));
    }
    if probs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidGrid("probs must be strictly ascending".into()));
    }
    Ok(())
}

pub fn build_dip_table(sizes: &[usize], probs: &[f64], reps: usize, seed: u64) -> Result<DipTable> {
    validate_grid(sizes, probs)?;
    if reps < MIN_TABLE_REPS {
        return Err(Error::InvalidGrid(format!(
            "at least {MIN_TABLE_REPS} repetitions required, got {reps}"
        )));
    }
    let quantiles = sizes
        .iter()
        .map(|&n| {
            let null = BootstrapNull::sample(n, reps, seed)?;
            Ok(probs.iter().map(|&p| null.quantile(p)).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    DipTable::from_parts(sizes.to_vec(), probs.to_vec(), quantiles, reps, seed)
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

static CLAMP_WARNED: AtomicBool = AtomicBool::new(false);

impl DipTable {
    pub fn from_parts(
        sizes: Vec<usize>,
        probs: Vec<f64>,
        quantiles: Vec<Vec<f64>>,
        reps: usize,
        seed: u64,
    ) -> Result<Self> {
        validate_grid(&sizes, &probs)?;
        if quantiles.len() != sizes.len() || quantiles.iter().any(|r| r.len() != probs.len()) {
            return Err(Error::InvalidGrid("quantile matrix shape mismatch".into()));
        }
        for (n, row) in sizes.iter().zip(&quantiles) {
            if row.iter().any(|q| !q.is_finite() || *q < 0.0) {
                return Err(Error::InvalidGrid(format!("invalid quantile for n = {n}")));
            }
            if row.windows(2).any(|w| w[1] < w[0] - QUANTILE_TIE_TOL) {
                return Err(Error::InvalidGrid(format!(
                    "quantiles for n = {n} decrease along probs"
                )));
            }
        }
        if reps == 0 {
            return Err(Error::InvalidGrid("reps must be positive".into()));
        }
        Ok(Self {
            sizes,
            probs,
            quantiles,
            reps,
            seed,
        })
    }

    /// The table shipped with the crate (default grid, 10 000 replicates per size).
    pub fn default_table() -> Arc<DipTable> {
        static TABLE: OnceLock<Arc<DipTable>> = OnceLock::new();
        TABLE
            .get_or_init(|| {
                Arc::new(
                    DipTable::from_csv(DEFAULT_TABLE_CSV.as_bytes())
                        .expect("bundled dip table is well formed"),
                )
            })
            .clone()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn quantiles(&self) -> &[Vec<f64>] {
        &self.quantiles
    }

    pub fn reps(&self) -> usize {
        self.reps
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The `sqrt(n) * dip` quantile curve for `n`, interpolated linearly in `1/sqrt(n)`
    /// between the bracketing sizes. Sizes outside the grid clamp to the nearest row.
    fn z_curve(&self, n: usize) -> Vec<f64> {
        let z_row = |a: usize| -> Vec<f64> {
            let scale = (self.sizes[a] as f64).sqrt();
            self.quantiles[a].iter().map(|q| q * scale).collect()
        };
        let first = self.sizes[0];
        let last = *self.sizes.last().expect("non-empty");
        if n <= first || n >= last {
            if (n < first || n > last) && !CLAMP_WARNED.swap(true, Ordering::Relaxed) {
                log::warn!(
                    "sample size {n} outside dip table range [{first}, {last}]; clamping"
                );
            }
            return z_row(if n <= first { 0 } else { self.sizes.len() - 1 });
        }
        let a = self.sizes.partition_point(|&s| s <= n) - 1;
        if self.sizes[a] == n {
            return z_row(a);
        }
        let inv = |s: usize| 1.0 / (s as f64).sqrt();
        let t = (inv(n) - inv(self.sizes[a])) / (inv(self.sizes[a + 1]) - inv(self.sizes[a]));
        z_row(a)
            .into_iter()
            .zip(z_row(a + 1))
            .map(|(lo, hi)| lo + t * (hi - lo))
            .collect()
    }

    /// Upper-tail probability `P(dip_null >= dip)` for a sample of size `n`, clamped to
    /// `[1/(reps+1), 1]`. Between grid probabilities the null CDF is interpolated
    /// linearly in logit space.
    pub fn p_value(&self, dip: f64, n: usize) -> f64 {
        let n = n.max(1);
        let floor = 1.0 / (self.reps + 1) as f64;
        let sqrt_n = (n as f64).sqrt();
        let z = sqrt_n * dip;
        let zq = self.z_curve(n);
        let probs = &self.probs;
        let last = probs.len() - 1;

        let cdf = if z < zq[0] {
            // Linear from the smallest attainable dip, 1/(2n), up to the first quantile.
            let z_min = 0.5 / sqrt_n;
            if z <= z_min || zq[0] <= z_min {
                0.0
            } else {
                probs[0] * (z - z_min) / (zq[0] - z_min)
            }
        } else {
            let b = zq.partition_point(|&q| q <= z) - 1;
            if b == last {
                let slope = if last > 0 && zq[last] > zq[last - 1] {
                    (logit(probs[last]) - logit(probs[last - 1])) / (zq[last] - zq[last - 1])
                } else {
                    0.0
                };
                sigmoid(logit(probs[last]) + slope * (z - zq[last]))
            } else {
                let t = (z - zq[b]) / (zq[b + 1] - zq[b]);
                sigmoid((1.0 - t) * logit(probs[b]) + t * logit(probs[b + 1]))
            }
        };
        (1.0 - cdf).clamp(floor, 1.0)
    }

    /// Writes the versioned CSV form: `version`, `reps` and `seed` lines, a column
    /// header `n,<probs...>`, then one row of quantiles per size. Floats use 17
    /// significant digits, which round-trips exactly.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        writeln!(out, "version,{TABLE_FORMAT_VERSION}").unwrap();
        writeln!(out, "reps,{}", self.reps).unwrap();
        writeln!(out, "seed,{}", self.seed).unwrap();
        out.push('n');
        for p in &self.probs {
            write!(out, ",{p:.16e}").unwrap();
        }
        out.push('\n');
        for (n, row) in self.sizes.iter().zip(&self.quantiles) {
            write!(out, "{n}").unwrap();
            for q in row {
                write!(out, ",{q:.16e}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv(std::fs::File::open(path)?)
    }

    pub fn from_csv<R: Read>(mut reader: R) -> Result<Self> {
        let mut text = String::new();
        reader.read_to_string(&mut text)?;
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let mut keyed = |key: &str| -> Result<String> {
            let line = lines
                .next()
                .ok_or_else(|| Error::TableFormat(format!("missing '{key}' line")))?;
            match line.split_once(',') {
                Some((k, v)) if k.trim() == key => Ok(v.trim().to_string()),
                _ => Err(Error::TableFormat(format!("expected '{key},<value>', got '{line}'"))),
            }
        };
        let bad = |what: &str| Error::TableFormat(format!("bad {what}"));
        let version: u32 = keyed("version")?.parse().map_err(|_| bad("version"))?;
        if version != TABLE_FORMAT_VERSION {
            return Err(Error::TableFormat(format!("unsupported version {version}")));
        }
        let reps: usize = keyed("reps")?.parse().map_err(|_| bad("reps"))?;
        let seed: u64 = keyed("seed")?.parse().map_err(|_| bad("seed"))?;
        let probs: Vec<f64> = keyed("n")?
            .split(',')
            .map(|c| c.trim().parse().map_err(|_| bad("prob")))
            .collect::<Result<_>>()?;
        let mut sizes = Vec::new();
        let mut quantiles = Vec::new();
        for line in lines {
            let mut cells = line.split(',').map(str::trim);
            let n: usize = cells
                .next()
                .and_then(|c| c.parse().ok())
                .ok_or_else(|| bad("size"))?;
            let row: Vec<f64> = cells
                .map(|c| c.parse().map_err(|_| bad("quantile")))
                .collect::<Result<_>>()?;
            sizes.push(n);
            quantiles.push(row);
        }
        if sizes.is_empty() {
            return Err(Error::EmptyTable);
        }
        Self::from_parts(sizes, probs, quantiles, reps, seed)
    }
}

/// Strategy turning a dip value and sample size into a p-value.
pub trait DipPValue: Send + Sync {
    fn p_value(&self, dip: f64, n: usize) -> f64;
    fn kind(&self) -> PValueKind;
}

impl DipPValue for DipTable {
    fn p_value(&self, dip: f64, n: usize) -> f64 {
        DipTable::p_value(self, dip, n)
    }

    fn kind(&self) -> PValueKind {
        PValueKind::Table
    }
}

/// Exact bootstrap p-values with a fixed seed. Null samples are cached per size, which
/// does not change any result since the null for `(n, reps, seed)` is deterministic.
#[derive(Debug)]
pub struct BootstrapPValue {
    reps: usize,
    seed: u64,
    cache: Mutex<HashMap<usize, Arc<BootstrapNull>>>,
}

impl BootstrapPValue {
    pub fn new(reps: usize, seed: u64) -> Result<Self> {
        if reps < MIN_BOOTSTRAP_REPS {
            return Err(Error::InvalidReps {
                min: MIN_BOOTSTRAP_REPS,
                got: reps,
            });
        }
        Ok(Self {
            reps,
            seed,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn null(&self, n: usize) -> Arc<BootstrapNull> {
        if let Some(hit) = self.cache.lock().expect("cache lock").get(&n) {
            return hit.clone();
        }
        let null = Arc::new(
            BootstrapNull::sample(n.max(2), self.reps, self.seed).expect("n >= 2 checked"),
        );
        self.cache
            .lock()
            .expect("cache lock")
            .entry(n)
            .or_insert(null)
            .clone()
    }
}

impl DipPValue for BootstrapPValue {
    fn p_value(&self, dip: f64, n: usize) -> f64 {
        self.null(n).p_value(dip)
    }

    fn kind(&self) -> PValueKind {
        PValueKind::Bootstrap
    }
}

/// Dip statistic and p-value of a sample in one call.
pub fn dip_test(sample: &[f64], pvalue: &dyn DipPValue) -> Result<DipResult> {
    let dip = dip_statistic(sample)?;
    Ok(DipResult {
        dip,
        p_value: pvalue.p_value(dip, sample.len()),
        n: sample.len(),
        method: pvalue.kind(),
    })
}

//! End-to-end clustering run and the serialisable result bundle.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use ndarray::Axis;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{minmax_normalize, Dataset};
use crate::diptest::{BootstrapPValue, DipPValue, DipTable};
use crate::error::{Error, Result};
use crate::eval::ami;
use crate::forest::{build_forest, extract_clusters, TestedEdge};
use crate::overcluster::{eliminate_small, global_kmeanspp, Overclustering, DEFAULT_CANDIDATES};
use crate::pairtest::{PairTestConfig, DEFAULT_ALPHA, DEFAULT_VOTES};
use crate::seeding::{derive_seed, substream};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_K_PRIME: usize = 50;
pub const DEFAULT_MIN_SIZE: usize = 25;
pub const DEFAULT_BOOTSTRAP_REPS: usize = 2000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PValueMethod {
    #[default]
    Table,
    Bootstrap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Subclusters requested from the overclustering step.
    pub k_prime: usize,
    /// Subclusters smaller than this are eliminated.
    pub min_size: usize,
    /// Pair-test rounds; odd.
    pub votes: usize,
    pub alpha: f64,
    /// k-means++ candidates per added center.
    pub candidates: usize,
    pub seed: u64,
    pub normalize: bool,
    pub pvalue_method: PValueMethod,
    pub bootstrap_reps: usize,
    /// Dip table used by the table method; the embedded table when absent.
    pub table_path: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            k_prime: DEFAULT_K_PRIME,
            min_size: DEFAULT_MIN_SIZE,
            votes: DEFAULT_VOTES,
            alpha: DEFAULT_ALPHA,
            candidates: DEFAULT_CANDIDATES,
            seed: 0,
            normalize: true,
            pvalue_method: PValueMethod::Table,
            bootstrap_reps: DEFAULT_BOOTSTRAP_REPS,
            table_path: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.pair_config().validate()?;
        if self.min_size < 2 {
            return Err(Error::InvalidConfig(format!(
                "minimum subcluster size must be >= 2, got {}",
                self.min_size
            )));
        }
        if self.k_prime == 0 {
            return Err(Error::InvalidConfig("k_prime must be >= 1".into()));
        }
        if self.candidates == 0 {
            return Err(Error::InvalidConfig("candidates must be >= 1".into()));
        }
        // The smallest bootstrap p-value is 1 / (reps + 1).
        if self.pvalue_method == PValueMethod::Bootstrap
            && (self.bootstrap_reps as f64 + 1.0) * self.alpha < 1.0
        {
            return Err(Error::InvalidConfig(format!(
                "{} bootstrap replicates cannot reach alpha = {}",
                self.bootstrap_reps, self.alpha
            )));
        }
        Ok(())
    }

    pub fn pair_config(&self) -> PairTestConfig {
        PairTestConfig {
            votes: self.votes,
            alpha: self.alpha,
            seed: derive_seed(self.seed, &[1]),
        }
    }

    /// P-value source selected by the configuration. The bootstrap seed does not depend
    /// on `seed`, so repeats can share one cache.
    pub fn pvalue_source(&self) -> Result<Arc<dyn DipPValue>> {
        Ok(match self.pvalue_method {
            PValueMethod::Table => match &self.table_path {
                Some(path) => Arc::new(DipTable::load(path)?),
                None => DipTable::default_table(),
            },
            PValueMethod::Bootstrap => Arc::new(BootstrapPValue::new(
                self.bootstrap_reps,
                derive_seed(0, &[2]),
            )?),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverclusteringSummary {
    /// Subcluster count before elimination.
    pub k_initial: usize,
    /// Subcluster count after elimination.
    pub k: usize,
    /// SSE after elimination, in the clustering space.
    pub sse: f64,
    /// Subcluster means in input coordinates.
    pub centers: Vec<Vec<f64>>,
    pub sizes: Vec<usize>,
    pub assignments: Vec<usize>,
    /// Final cluster of every subcluster.
    pub cluster_of: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestSummary {
    pub k: usize,
    pub tests: usize,
    pub accepted: Vec<TestedEdge>,
    pub rejected: Vec<TestedEdge>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub normalize: f64,
    pub overcluster: f64,
    pub eliminate: f64,
    pub forest: f64,
    pub extract: f64,
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultBundle {
    pub schema: u32,
    pub n_points: usize,
    pub dims: usize,
    pub estimated_k: usize,
    pub assignments: Vec<usize>,
    pub overclustering: OverclusteringSummary,
    pub forest: ForestSummary,
    pub ami: Option<f64>,
    pub config: RunConfig,
    pub warnings: Vec<String>,
    /// Wall time per stage in milliseconds; the only nondeterministic field.
    pub timings_ms: Timings,
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn warn(warnings: &mut Vec<String>, message: String) {
    log::warn!("{message}");
    warnings.push(message);
}

/// Runs the pipeline with the p-value source selected by `cfg`.
pub fn run_pipeline(ds: &Dataset, cfg: &RunConfig) -> Result<ResultBundle> {
    cfg.validate()?;
    let source = cfg.pvalue_source()?;
    run_pipeline_with(ds, cfg, source.as_ref())
}

/// Runs the pipeline with an explicit p-value source.
pub fn run_pipeline_with(
    ds: &Dataset,
    cfg: &RunConfig,
    pvalue: &dyn DipPValue,
) -> Result<ResultBundle> {
    cfg.validate()?;
    let n = ds.len();
    if n < 2 {
        return Err(Error::TooFewPoints(n));
    }
    let total = Instant::now();
    let mut timings = Timings::default();
    let mut warnings = Vec::new();

    let mut k_prime = cfg.k_prime;
    if k_prime > n {
        warn(
            &mut warnings,
            format!("dataset too small: k_prime reduced from {k_prime} to {n}"),
        );
        k_prime = n;
    }
    if n < 2 * cfg.min_size {
        warn(
            &mut warnings,
            format!(
                "dataset has {n} points, fewer than twice the minimum subcluster size {}",
                cfg.min_size
            ),
        );
    }

    let start = Instant::now();
    let normalized;
    let work = if cfg.normalize {
        normalized = minmax_normalize(ds);
        &normalized
    } else {
        ds
    };
    timings.normalize = elapsed_ms(start);

    let start = Instant::now();
    let mut rng = substream(cfg.seed, &[0]);
    let initial = global_kmeanspp(work, k_prime, cfg.candidates, &mut rng)?;
    timings.overcluster = elapsed_ms(start);
    log::info!("overclustered into {} subclusters", initial.k());

    let start = Instant::now();
    let oc = eliminate_small(&initial, work, cfg.min_size);
    timings.eliminate = elapsed_ms(start);
    log::info!("{} subclusters after elimination", oc.k());

    let start = Instant::now();
    let forest = build_forest(&oc, work, cfg.pair_config(), pvalue)?;
    timings.forest = elapsed_ms(start);
    log::info!(
        "forest: {} trees from {} pair tests",
        forest.k(),
        forest.tests_performed()
    );

    let start = Instant::now();
    let clusters = extract_clusters(&forest, &oc);
    timings.extract = elapsed_ms(start);

    let score = ds
        .labels()
        .map(|truth| ami(truth, &clusters.assignments))
        .transpose()?;
    timings.total = elapsed_ms(total);

    Ok(ResultBundle {
        schema: SCHEMA_VERSION,
        n_points: n,
        dims: ds.dims(),
        estimated_k: clusters.k,
        assignments: clusters.assignments,
        overclustering: OverclusteringSummary {
            k_initial: initial.k(),
            k: oc.k(),
            sse: oc.sse,
            centers: input_space_centers(ds, &oc),
            sizes: oc.sizes(),
            assignments: oc.assignments.clone(),
            cluster_of: clusters.subcluster_labels,
        },
        forest: ForestSummary {
            k: forest.k(),
            tests: forest.tests_performed(),
            accepted: forest.accepted,
            rejected: forest.rejected,
        },
        ami: score,
        config: RunConfig {
            k_prime,
            ..cfg.clone()
        },
        warnings,
        timings_ms: timings,
    })
}

fn input_space_centers(ds: &Dataset, oc: &Overclustering) -> Vec<Vec<f64>> {
    oc.members()
        .iter()
        .map(|rows| {
            ds.points()
                .select(Axis(0), rows)
                .mean_axis(Axis(0))
                .expect("surviving subclusters are non-empty")
                .to_vec()
        })
        .collect()
}

/// One row of a k-prime sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k_prime: usize,
    pub estimated_k: usize,
    pub ami: Option<f64>,
}

/// Runs the pipeline once per `k_prime`, with the seed derived from `(cfg.seed, k_prime)`.
pub fn sweep_kprime(ds: &Dataset, cfg: &RunConfig, k_values: &[usize]) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let source = cfg.pvalue_source()?;
    k_values
        .iter()
        .map(|&k_prime| {
            let run_cfg = RunConfig {
                k_prime,
                seed: derive_seed(cfg.seed, &[k_prime as u64]),
                ..cfg.clone()
            };
            let bundle = run_pipeline_with(ds, &run_cfg, source.as_ref())?;
            Ok(SweepRow {
                k_prime,
                estimated_k: bundle.estimated_k,
                ami: bundle.ami,
            })
        })
        .collect()
}

/// Writes sweep rows as `k_prime,estimated_k,ami`; a missing AMI is an empty field.
pub fn write_sweep_csv<W: std::io::Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k_prime", "estimated_k", "ami"])?;
    for row in rows {
        w.write_record([
            row.k_prime.to_string(),
            row.estimated_k.to_string(),
            row.ami.map(|v| format!("{v:.6}")).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Outcome of one seeded repeat.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepeatRow {
    pub seed: u64,
    pub estimated_k: usize,
    pub ami: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Mean and sample standard deviation; `None` for an empty slice.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Some(Self {
            mean,
            std: var.sqrt(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepeatSummary {
    pub schema: u32,
    pub runs: Vec<RepeatRow>,
    pub estimated_k: MeanStd,
    pub ami: Option<MeanStd>,
}

/// Runs `repeats` independent pipelines with seeds `cfg.seed + r`, concurrently.
pub fn run_repeats(ds: &Dataset, cfg: &RunConfig, repeats: usize) -> Result<RepeatSummary> {
    if repeats == 0 {
        return Err(Error::InvalidConfig("repeats must be >= 1".into()));
    }
    cfg.validate()?;
    let source = cfg.pvalue_source()?;
    let runs: Vec<RepeatRow> = (0..repeats as u64)
        .into_par_iter()
        .map(|r| {
            let seed = cfg.seed.wrapping_add(r);
            let run_cfg = RunConfig {
                seed,
                ..cfg.clone()
            };
            let bundle = run_pipeline_with(ds, &run_cfg, source.as_ref())?;
            Ok(RepeatRow {
                seed,
                estimated_k: bundle.estimated_k,
                ami: bundle.ami,
            })
        })
        .collect::<Result<_>>()?;
    let ks: Vec<f64> = runs.iter().map(|r| r.estimated_k as f64).collect();
    let amis: Vec<f64> = runs.iter().filter_map(|r| r.ami).collect();
    Ok(RepeatSummary {
        schema: SCHEMA_VERSION,
        estimated_k: MeanStd::of(&ks).expect("repeats >= 1"),
        ami: MeanStd::of(&amis),
        runs,
    })
}

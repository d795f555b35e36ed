use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::Serialize;

use uniforce::data::{self, ColumnRef, Dataset, HeaderMode, Shape, SyntheticSpec};
use uniforce::diptest::{self, DipTable};
use uniforce::pipeline::{self, PValueMethod, RunConfig};
use uniforce::{eval, svg};

mod failure;

use failure::Failure;

#[derive(Parser)]
#[command(name = "uniforce", version)]
#[command(about = "Locally unimodal clustering with automatic estimation of the cluster count")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster a CSV dataset and write a JSON result bundle.
    Run(RunArgs),
    /// Generate a synthetic labeled dataset as CSV.
    Gen(GenArgs),
    /// Score predicted labels against ground truth with adjusted mutual information.
    Eval(EvalArgs),
    /// Build a dip-statistic null quantile table.
    Diptable(DiptableArgs),
    /// Run the pipeline for several initial subcluster counts.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum HeaderArg {
    Auto,
    Present,
    Absent,
}

impl From<HeaderArg> for HeaderMode {
    fn from(h: HeaderArg) -> Self {
        match h {
            HeaderArg::Auto => HeaderMode::Auto,
            HeaderArg::Present => HeaderMode::Present,
            HeaderArg::Absent => HeaderMode::Absent,
        }
    }
}

#[derive(Args)]
struct InputArgs {
    /// Input CSV with one point per row.
    #[arg(value_name = "FILE")]
    input: PathBuf,

    /// Ground-truth label column, by header name or 0-based index. Excluded from the features.
    #[arg(long, value_name = "COLUMN")]
    label_column: Option<ColumnRef>,

    /// Whether the first row is a header.
    #[arg(long, value_enum, default_value_t = HeaderArg::Auto)]
    header: HeaderArg,
}

impl InputArgs {
    fn load(&self) -> Result<Dataset, Failure> {
        let ds = data::load_csv(&self.input, self.label_column.as_ref(), self.header.into())?;
        info!("loaded {} points in {} dimensions", ds.len(), ds.dims());
        Ok(ds)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PValueArg {
    Table,
    Bootstrap,
}

#[derive(Args)]
#[command(next_help_heading = "Clustering")]
struct ConfigArgs {
    /// Initial number of subclusters.
    #[arg(long, value_name = "N", default_value_t = pipeline::DEFAULT_K_PRIME)]
    k_prime: usize,

    /// Subclusters with fewer points are eliminated.
    #[arg(long, value_name = "N", default_value_t = pipeline::DEFAULT_MIN_SIZE)]
    min_size: usize,

    /// Dip-test rounds per pair; must be odd.
    #[arg(long, value_name = "N", default_value_t = uniforce::pairtest::DEFAULT_VOTES)]
    votes: usize,

    /// Significance level of each dip test.
    #[arg(long, value_name = "F", default_value_t = uniforce::pairtest::DEFAULT_ALPHA)]
    alpha: f64,

    /// k-means++ candidates per added center.
    #[arg(long, value_name = "N", default_value_t = uniforce::overcluster::DEFAULT_CANDIDATES)]
    candidates: usize,

    #[arg(long, value_name = "N", default_value_t = 0)]
    seed: u64,

    /// Min-max normalize every feature before clustering.
    #[arg(long, value_name = "BOOL", default_value_t = true, action = ArgAction::Set)]
    normalize: bool,

    /// How dip p-values are obtained.
    #[arg(long, value_enum, default_value_t = PValueArg::Table)]
    pvalue_method: PValueArg,

    /// Null samples per size for the bootstrap method.
    #[arg(long, value_name = "N", default_value_t = pipeline::DEFAULT_BOOTSTRAP_REPS)]
    bootstrap_reps: usize,

    /// Dip quantile table replacing the embedded one.
    #[arg(long, value_name = "FILE", env = "UNIFORCE_DIP_TABLE")]
    table_path: Option<PathBuf>,
}

impl ConfigArgs {
    fn to_config(&self) -> RunConfig {
        RunConfig {
            k_prime: self.k_prime,
            min_size: self.min_size,
            votes: self.votes,
            alpha: self.alpha,
            candidates: self.candidates,
            seed: self.seed,
            normalize: self.normalize,
            pvalue_method: match self.pvalue_method {
                PValueArg::Table => PValueMethod::Table,
                PValueArg::Bootstrap => PValueMethod::Bootstrap,
            },
            bootstrap_reps: self.bootstrap_reps,
            table_path: self.table_path.clone(),
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    input: InputArgs,

    #[command(flatten)]
    config: ConfigArgs,

    /// Run R pipelines with seeds seed..seed+R and report per-run and mean±std k and AMI.
    #[arg(long, value_name = "R", default_value_t = 1)]
    repeats: usize,

    /// Where to write the JSON result; stdout when omitted.
    #[arg(short, long, value_name = "FILE")]
    output: Option<PathBuf>,

    /// Write a scatter plot of a 2-D result.
    #[arg(long, value_name = "FILE")]
    svg: Option<PathBuf>,

    /// Write the final cluster of every point as a one-column CSV.
    #[arg(long, value_name = "FILE")]
    labels_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ShapeArg {
    Blobs,
    Rings,
    Moons,
    RingWithStructures,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    shape: ShapeArg,

    /// Total number of points.
    #[arg(long, value_name = "N", default_value_t = 1500)]
    n_points: usize,

    #[arg(long, value_name = "N", default_value_t = 0)]
    seed: u64,

    /// Blob centers as `x,y;x,y;...`.
    #[arg(long, value_name = "LIST", default_value = "0,0;10,0;0,10")]
    centers: String,

    /// Blob standard deviation.
    #[arg(long, value_name = "F", default_value_t = 1.0)]
    std: f64,

    /// Ring radii as `r1,r2,...`.
    #[arg(long, value_name = "LIST", default_value = "1,3")]
    radii: String,

    /// Gaussian noise added to rings, moons and ring-with-structures.
    #[arg(long, value_name = "F")]
    noise: Option<f64>,

    /// Destination CSV; stdout when omitted.
    #[arg(short, long, value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// CSV holding the ground-truth labels.
    #[arg(long, value_name = "FILE")]
    truth: PathBuf,

    /// CSV holding the predicted labels.
    #[arg(long, value_name = "FILE")]
    pred: PathBuf,

    /// Truth column by header name or 0-based index; the last column when omitted.
    #[arg(long, value_name = "COLUMN")]
    truth_column: Option<ColumnRef>,

    /// Prediction column by header name or 0-based index; the last column when omitted.
    #[arg(long, value_name = "COLUMN")]
    pred_column: Option<ColumnRef>,
}

#[derive(Args)]
struct DiptableArgs {
    /// Sample sizes, comma separated; the default grid when omitted.
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    sizes: Option<Vec<usize>>,

    /// Quantile probabilities, comma separated; the default grid when omitted.
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    probs: Option<Vec<f64>>,

    #[arg(long, value_name = "N", default_value_t = diptest::DEFAULT_TABLE_REPS)]
    reps: usize,

    #[arg(long, value_name = "N", default_value_t = diptest::DEFAULT_TABLE_SEED)]
    seed: u64,

    /// Destination CSV; stdout when omitted.
    #[arg(short, long, value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    input: InputArgs,

    #[command(flatten)]
    config: ConfigArgs,

    /// Initial subcluster counts to try.
    #[arg(long, value_name = "LIST", value_delimiter = ',', default_value = "10,20,30,40,50,60")]
    k_values: Vec<usize>,

    /// Destination CSV; stdout when omitted.
    #[arg(short, long, value_name = "FILE")]
    output: Option<PathBuf>,
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::data(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<(), Failure> {
    let mut out = sink(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| Failure::internal(e.to_string()))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let cfg = args.config.to_config();
    cfg.validate()?;
    if args.repeats == 0 {
        return Err(Failure::usage("--repeats must be at least 1"));
    }
    let ds = args.input.load()?;

    if args.repeats > 1 {
        if args.svg.is_some() || args.labels_out.is_some() {
            return Err(Failure::usage(
                "--svg and --labels-out need a single run; drop --repeats",
            ));
        }
        let summary = pipeline::run_repeats(&ds, &cfg, args.repeats)?;
        let k = summary.estimated_k;
        match summary.ami {
            Some(a) => eprintln!(
                "k = {:.3} ± {:.3}, AMI = {:.4} ± {:.4} over {} runs",
                k.mean, k.std, a.mean, a.std, args.repeats
            ),
            None => eprintln!("k = {:.3} ± {:.3} over {} runs", k.mean, k.std, args.repeats),
        }
        return write_json(&summary, args.output.as_deref());
    }

    let bundle = pipeline::run_pipeline(&ds, &cfg)?;
    match bundle.ami {
        Some(a) => eprintln!("estimated k = {}, AMI = {a:.6}", bundle.estimated_k),
        None => eprintln!("estimated k = {}", bundle.estimated_k),
    }
    if let Some(path) = &args.svg {
        svg::emit_svg(&ds, &bundle, path)?;
    }
    if let Some(path) = &args.labels_out {
        let mut out = sink(Some(path))?;
        writeln!(out, "cluster")?;
        for a in &bundle.assignments {
            writeln!(out, "{a}")?;
        }
        out.flush()?;
    }
    write_json(&bundle, args.output.as_deref())
}

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Failure::usage(format!("bad number {v:?} in {what}")))
        })
        .collect()
}

fn gen(args: GenArgs) -> Result<(), Failure> {
    let shape = match args.shape {
        ShapeArg::Blobs => Shape::Blobs {
            centers: args
                .centers
                .split(';')
                .map(|c| parse_list(c, "--centers"))
                .collect::<Result<_, _>>()?,
            std: args.std,
        },
        ShapeArg::Rings => Shape::Rings {
            radii: parse_list(&args.radii, "--radii")?,
            noise: args.noise.unwrap_or(0.1),
        },
        ShapeArg::Moons => Shape::Moons {
            noise: args.noise.unwrap_or(0.05),
        },
        ShapeArg::RingWithStructures => Shape::RingWithStructures {
            noise: args.noise.unwrap_or(0.0),
        },
    };
    let ds = data::generate(&SyntheticSpec {
        shape,
        n_points: args.n_points,
        seed: args.seed,
    })?;
    let out = sink(args.output.as_deref())?;
    data::write_csv(&ds, out)?;
    Ok(())
}

fn read_labels(path: &Path, column: Option<&ColumnRef>) -> Result<Vec<usize>, Failure> {
    let file = File::open(path).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(file);
    let mut rows = reader.records();
    let first = rows
        .next()
        .ok_or_else(|| Failure::data(format!("{}: no rows", path.display())))?
        .map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
    let has_header = match column {
        Some(ColumnRef::Name(_)) => true,
        _ => first.iter().any(|c| c.trim().parse::<f64>().is_err()),
    };
    let index = match column {
        Some(ColumnRef::Index(i)) => *i,
        Some(ColumnRef::Name(name)) => first
            .iter()
            .position(|c| c.trim() == name)
            .ok_or_else(|| Failure::usage(format!("{}: no column {name:?}", path.display())))?,
        None => first.len().saturating_sub(1),
    };
    let mut codes = std::collections::HashMap::new();
    let mut labels = Vec::new();
    let body = (!has_header).then_some(Ok(first)).into_iter().chain(rows);
    for (row, record) in body.enumerate() {
        let record = record.map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
        let cell = record.get(index).ok_or_else(|| {
            Failure::data(format!(
                "{}: row {} has no column {index}",
                path.display(),
                row + 1 + usize::from(has_header)
            ))
        })?;
        let next = codes.len();
        labels.push(*codes.entry(cell.trim().to_string()).or_insert(next));
    }
    Ok(labels)
}

fn evaluate(args: EvalArgs) -> Result<(), Failure> {
    let truth = read_labels(&args.truth, args.truth_column.as_ref())?;
    let pred = read_labels(&args.pred, args.pred_column.as_ref())?;
    let score = eval::ami(&truth, &pred)?;
    println!("{score:.6}");
    Ok(())
}

fn diptable(args: DiptableArgs) -> Result<(), Failure> {
    let sizes = args
        .sizes
        .unwrap_or_else(|| diptest::DEFAULT_TABLE_SIZES.to_vec());
    let probs = args
        .probs
        .unwrap_or_else(|| diptest::DEFAULT_TABLE_PROBS.to_vec());
    info!(
        "simulating {} sizes x {} replicates",
        sizes.len(),
        args.reps
    );
    let table: DipTable = diptest::build_dip_table(&sizes, &probs, args.reps, args.seed)?;
    let mut out = sink(args.output.as_deref())?;
    out.write_all(table.to_csv_string().as_bytes())?;
    out.flush()?;
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<(), Failure> {
    let cfg = args.config.to_config();
    cfg.validate()?;
    if args.k_values.is_empty() || args.k_values.contains(&0) {
        return Err(Failure::usage("--k-values must list positive counts"));
    }
    let ds = args.input.load()?;
    let rows = pipeline::sweep_kprime(&ds, &cfg, &args.k_values)?;
    let out = sink(args.output.as_deref())?;
    pipeline::write_sweep_csv(&rows, out)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_env("RUST_LOG")
        .init();

    let outcome = match cli.command {
        Command::Run(a) => run(a),
        Command::Gen(a) => gen(a),
        Command::Eval(a) => evaluate(a),
        Command::Diptable(a) => diptable(a),
        Command::Sweep(a) => sweep(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            failure.exit_code()
        }
    }
}

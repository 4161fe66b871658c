use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use fastgm::bench::{
    load_sparse, load_stream, run_rmse_experiment, run_speed_experiment, Method, RmseSpec,
    RmseTask, SpeedSpec, WeightDist, Workload,
};
use fastgm::netsim::{simulate_runs, BraidNetConfig, SketchPath};
use fastgm::randgen::SeedScheme;
use fastgm::{
    estimate_cardinality, estimate_jaccard_p, merge, GenerationParams, GumbelMaxSketch,
    StreamSketchState,
};

#[derive(Parser, Debug)]
#[command(
    name = "fastgm",
    version,
    about = "Gumbel-Max sketches for weighted similarity and cardinality"
)]
struct Cli {
    /// Master seed. Sketches are only comparable when built with the same seed.
    #[arg(long, global = true, env = "FASTGM_SEED", default_value_t = 0)]
    seed: u64,

    /// Sketch length (number of registers).
    #[arg(long, global = true, default_value_t = 128)]
    k: usize,

    /// Search-phase budget increment; defaults to k.
    #[arg(long, global = true)]
    delta: Option<usize>,

    /// Worker threads for experiments (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sketch one vector from a sparse file (or a stream file) into a sketch file.
    Sketch(SketchArgs),
    /// Jaccard estimate for two sketch files, cardinality estimate for one.
    Estimate {
        #[arg(required = true, num_args = 1..=2)]
        sketches: Vec<PathBuf>,
    },
    /// Merge sketch files into one.
    Merge {
        #[arg(required = true)]
        sketches: Vec<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Time sketch generators.
    BenchSpeed(SpeedArgs),
    /// Empirical estimator error against exact values.
    BenchRmse(RmseArgs),
    /// Braided-chain sensor network simulation.
    SimulateNet(NetArgs),
}

#[derive(Args, Debug)]
struct SketchArgs {
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    /// Treat the input as a stream of "element_id weight" lines.
    #[arg(long)]
    stream: bool,
    /// 1-based line of the sparse file to sketch.
    #[arg(long, default_value_t = 1, conflicts_with = "stream")]
    line: usize,
    #[arg(long, default_value = "fastgm", conflicts_with = "stream")]
    method: Method,
}

#[derive(Args, Debug)]
struct SpeedArgs {
    /// Sparse dataset to time; a synthetic workload is used when absent.
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value = "uniform")]
    dist: WeightDist,
    #[arg(long, default_value_t = 1)]
    vectors: usize,
    /// Comma-separated sketch lengths; defaults to --k.
    #[arg(long, value_delimiter = ',')]
    k_list: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "naive,fastgm")]
    methods: Vec<Method>,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    /// Write per-repetition rows here instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum TaskArg {
    Jaccard,
    Cardinality,
}

#[derive(Args, Debug)]
struct RmseArgs {
    #[arg(long, value_enum, default_value_t = TaskArg::Cardinality)]
    task: TaskArg,
    /// Fraction of shared ids in the Jaccard pair.
    #[arg(long, default_value_t = 0.5)]
    overlap: f64,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value = "uniform")]
    dist: WeightDist,
    #[arg(long, value_delimiter = ',')]
    k_list: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct NetArgs {
    #[arg(long, default_value_t = 30)]
    d: usize,
    #[arg(long, default_value_t = 0.9)]
    p1: f64,
    #[arg(long, default_value_t = 0.1)]
    p2: f64,
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    runs: usize,
    #[arg(long, default_value = "beta")]
    dist: WeightDist,
    /// Build relay sketches by merging per-edge sketches instead of streaming.
    #[arg(long)]
    merge_path: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn params(cli: &Cli) -> GenerationParams {
    let p = GenerationParams::new(cli.k, SeedScheme::new(cli.seed));
    match cli.delta {
        Some(d) => p.with_delta(d),
        None => p,
    }
}

fn k_list(given: &[usize], k: usize) -> Vec<usize> {
    if given.is_empty() {
        vec![k]
    } else {
        given.to_vec()
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load_sketch(path: &Path) -> Result<GumbelMaxSketch> {
    GumbelMaxSketch::load(path).with_context(|| format!("reading sketch {}", path.display()))
}

/// Prints a flat record as a two-line CSV or a JSON object.
fn emit_record<T: Serialize>(format: Format, record: &T) -> Result<()> {
    let stdout = io::stdout();
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(stdout.lock());
            w.serialize(record)?;
            w.flush()?;
        }
        Format::Json => {
            let mut out = stdout.lock();
            serde_json::to_writer(&mut out, record)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Sketch(args) => sketch(cli, args),
        Command::Estimate { sketches } => estimate(cli, sketches),
        Command::Merge { sketches, output } => {
            let loaded = sketches
                .iter()
                .map(|p| load_sketch(p))
                .collect::<Result<Vec<_>>>()?;
            let refs: Vec<&GumbelMaxSketch> = loaded.iter().collect();
            merge(&refs)?.save(output)?;
            Ok(())
        }
        Command::BenchSpeed(args) => bench_speed(cli, args),
        Command::BenchRmse(args) => bench_rmse(cli, args),
        Command::SimulateNet(args) => simulate_net(cli, args),
    }
}

fn sketch(cli: &Cli, args: &SketchArgs) -> Result<()> {
    let params = params(cli);
    params.validate()?;
    let sk = if args.stream {
        let items = load_stream(&args.input)
            .with_context(|| format!("reading {}", args.input.display()))?;
        let mut state = StreamSketchState::new(params.k, params.scheme)?;
        state.extend(items)?;
        state.into_sketch()?
    } else {
        let ds = load_sparse(&args.input)
            .with_context(|| format!("reading {}", args.input.display()))?;
        if args.line == 0 || args.line > ds.len() {
            bail!(
                "line {} out of range: {} holds {} vectors",
                args.line,
                args.input.display(),
                ds.len()
            );
        }
        args.method.run(&ds.vectors[args.line - 1], &params)?.0
    };
    sk.save(&args.output)?;
    Ok(())
}

#[derive(Serialize)]
struct JaccardRecord {
    jaccard_p: f64,
    matches: usize,
    k: usize,
}

#[derive(Serialize)]
struct CardinalityRecord {
    cardinality: f64,
    k: usize,
}

fn estimate(cli: &Cli, paths: &[PathBuf]) -> Result<()> {
    let a = load_sketch(&paths[0])?;
    match paths.get(1) {
        Some(p) => {
            let b = load_sketch(p)?;
            let e = estimate_jaccard_p(&a, &b)?;
            emit_record(
                cli.format,
                &JaccardRecord {
                    jaccard_p: e.value,
                    matches: e.matches,
                    k: e.k,
                },
            )
        }
        None => {
            let e = estimate_cardinality(&a)?;
            emit_record(
                cli.format,
                &CardinalityRecord {
                    cardinality: e.value,
                    k: e.k,
                },
            )
        }
    }
}

fn bench_speed(cli: &Cli, args: &SpeedArgs) -> Result<()> {
    let workload = match &args.dataset {
        Some(path) => Workload::Dataset(
            load_sparse(path).with_context(|| format!("reading {}", path.display()))?,
        ),
        None => Workload::Synthetic {
            n: args.n,
            dist: args.dist,
            vectors: args.vectors,
        },
    };
    let report = run_speed_experiment(&SpeedSpec {
        workload,
        k_list: k_list(&args.k_list, cli.k),
        methods: args.methods.clone(),
        master_seed: cli.seed,
        reps: args.reps,
        delta: cli.delta,
    })?;
    let mut out = open_output(args.output.as_deref())?;
    match cli.format {
        Format::Csv => report.write_csv(&mut out)?,
        Format::Json => writeln!(out, "{}", report.to_json()?)?,
    }
    out.flush()?;
    Ok(())
}

fn bench_rmse(cli: &Cli, args: &RmseArgs) -> Result<()> {
    let task = match args.task {
        TaskArg::Jaccard => RmseTask::Jaccard {
            overlap: args.overlap,
        },
        TaskArg::Cardinality => RmseTask::Cardinality,
    };
    let report = run_rmse_experiment(&RmseSpec {
        task,
        n: args.n,
        dist: args.dist,
        k_list: k_list(&args.k_list, cli.k),
        trials: args.trials,
        master_seed: cli.seed,
        threads: cli.threads,
    })?;
    let mut out = open_output(args.output.as_deref())?;
    match cli.format {
        Format::Csv => report.write_csv(&mut out)?,
        Format::Json => writeln!(out, "{}", report.to_json()?)?,
    }
    out.flush()?;
    Ok(())
}

fn simulate_net(cli: &Cli, args: &NetArgs) -> Result<()> {
    let config = BraidNetConfig {
        d: args.d,
        p1: args.p1,
        p2: args.p2,
        n: args.n,
        k: cli.k,
        weight_dist: args.dist,
        seed: cli.seed,
        path: if args.merge_path {
            SketchPath::Merge
        } else {
            SketchPath::Stream
        },
    };
    let runs = simulate_runs(&config, args.runs, cli.threads)?;
    let mut out = open_output(args.output.as_deref())?;
    match cli.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            for row in runs.iter().flat_map(|r| r.rows()) {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        Format::Json => {
            let rows: Vec<_> = runs.iter().flat_map(|r| r.rows()).collect();
            serde_json::to_writer(
                &mut out,
                &serde_json::json!({ "config": config, "rows": rows }),
            )?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(())
}

//! Command-line front end: fit a decomposition to CSV snapshots, report
//! rank-selection thresholds, or run the Monte-Carlo noise benchmarks.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use optdmd::harness::{self, Example, ExperimentConfig, RankSpec};
use optdmd::{
    approx_optimized_dmd, exact_dmd, fb_dmd, io, optimized_dmd, select_rank, tls_dmd, Method,
    OptDmdConfig, RankStrategy, SnapshotSet,
};

#[derive(Parser)]
#[command(
    name = "optdmd",
    about = "Dynamic mode decomposition via variable projection",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a decomposition to snapshots from a CSV file and write JSON.
    Fit(FitArgs),
    /// Run a seeded Monte-Carlo benchmark over noise levels and sizes.
    Bench(BenchArgs),
    /// Report hard-thresholding rank choices for a CSV dataset.
    Rank(RankArgs),
}

#[derive(Args)]
struct FitArgs {
    /// Snapshot CSV (header `t,<state columns>`, one snapshot per row).
    #[arg(long)]
    input: PathBuf,
    /// Truncation rank; defaults to the median hard threshold.
    #[arg(long)]
    rank: Option<usize>,
    /// Decomposition method.
    #[arg(long, value_enum, default_value = "optimized")]
    method: MethodArg,
    /// Output JSON path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Which synthetic example to benchmark.
    #[arg(value_enum)]
    example: ExampleArg,
    /// Snapshot counts to sweep (comma-separated).
    #[arg(long, value_delimiter = ',')]
    m: Vec<usize>,
    /// Noise variances σ² to sweep (comma-separated).
    #[arg(long, value_delimiter = ',')]
    sigma2: Vec<f64>,
    /// Trials per (m, σ²) cell.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Master seed; all trial RNG streams derive from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Truncation rank (defaults to the example's true rank).
    #[arg(long)]
    rank: Option<usize>,
    /// Methods to run (comma-separated: exact,fb,tls,optimized,approx).
    #[arg(long, value_delimiter = ',')]
    methods: Vec<String>,
    /// Output prefix; writes `<out>_records.csv` and `<out>_summary.json`.
    #[arg(long)]
    out: PathBuf,
    /// Also write per-trial wall times to this path (non-deterministic).
    #[arg(long)]
    timings: Option<PathBuf>,
    /// Use the full-size sweeps (1000 trials, wider m range).
    #[arg(long, default_value_t = false)]
    full_scale: bool,
}

#[derive(Args)]
struct RankArgs {
    /// Snapshot CSV to analyze.
    #[arg(long)]
    input: PathBuf,
    /// Known noise standard deviation, enabling the known-σ threshold.
    #[arg(long)]
    sigma: Option<f64>,
    /// Nuclear-norm energy fractions to report.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.9, 0.99, 0.999])]
    energy: Vec<f64>,
    /// Optional output JSON path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Exact,
    Fb,
    Tls,
    Optimized,
    Approx,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Exact => Method::Exact,
            MethodArg::Fb => Method::Fb,
            MethodArg::Tls => Method::Tls,
            MethodArg::Optimized => Method::Optimized,
            MethodArg::Approx => Method::ApproxOptimized,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ExampleArg {
    Ex1,
    Ex2,
    Ex3,
}

impl From<ExampleArg> for Example {
    fn from(e: ExampleArg) -> Example {
        match e {
            ExampleArg::Ex1 => Example::Ex1Sensor,
            ExampleArg::Ex2 => Example::Ex2Hidden,
            ExampleArg::Ex3 => Example::Ex3Jitter,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Fit(args) => run_fit(args),
        Command::Bench(args) => run_bench(args),
        Command::Rank(args) => run_rank(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", serde_json::json!({ "error": format!("{e:#}") }));
            ExitCode::FAILURE
        }
    }
}

fn auto_rank(data: &SnapshotSet) -> anyhow::Result<usize> {
    let sv = data.singular_values()?;
    let sel = select_rank(
        &sv,
        data.state_dim(),
        data.len(),
        RankStrategy::GavishDonohoMedian,
    )?;
    Ok(sel.chosen_rank)
}

fn run_fit(args: FitArgs) -> anyhow::Result<()> {
    let data = io::load_snapshots_csv(&args.input)
        .with_context(|| format!("loading {}", args.input.display()))?;
    let rank = match args.rank {
        Some(r) => r,
        None => auto_rank(&data)?,
    };
    let method: Method = args.method.into();
    let (result, solution) = match method {
        Method::Optimized => {
            let (r, s) = optimized_dmd(&data, &OptDmdConfig::new(rank))?;
            (r, Some(s))
        }
        Method::ApproxOptimized => {
            let (r, s) = approx_optimized_dmd(&data, &OptDmdConfig::new(rank))?;
            (r, Some(s))
        }
        Method::Exact => (exact_dmd(&data.pairs()?, rank)?, None),
        Method::Fb => (fb_dmd(&data.pairs()?, rank)?, None),
        Method::Tls => (tls_dmd(&data.pairs()?, rank)?, None),
    };
    io::save_result_json(&result, solution.as_ref(), &args.out)?;
    eprintln!(
        "fit: method={} rank={} -> {}",
        result.method,
        result.rank(),
        args.out.display()
    );
    Ok(())
}

fn parse_methods(names: &[String], example: &Example) -> anyhow::Result<Vec<Method>> {
    if names.is_empty() {
        return Ok(ExperimentConfig::default_methods(example));
    }
    names
        .iter()
        .map(|n| n.parse::<Method>().map_err(|e| anyhow::anyhow!(e)))
        .collect()
}

fn run_bench(args: BenchArgs) -> anyhow::Result<()> {
    let example: Example = args.example.into();
    let mut cfg = ExperimentConfig::desk_default(example.clone(), args.seed);
    if args.full_scale {
        cfg.trials = 1000;
        cfg.m_values = match example {
            Example::Ex2Hidden => vec![128, 256, 512],
            _ => vec![64, 128, 256, 512, 1024, 2048, 4096, 8192],
        };
    }
    if !args.m.is_empty() {
        cfg.m_values = args.m.clone();
    }
    if !args.sigma2.is_empty() {
        cfg.sigma2_values = args.sigma2.clone();
    }
    cfg.trials = if args.full_scale && args.trials == 100 {
        1000
    } else {
        args.trials
    };
    if let Some(r) = args.rank {
        cfg.rank = RankSpec::Fixed(r);
    }
    cfg.methods = parse_methods(&args.methods, &cfg.example)?;

    let records = harness::run_benchmark(&cfg)?;
    let truth_eigs = truth_eigenvalues(&cfg.example);
    let cells = harness::summarize(&records, &truth_eigs);

    let prefix = args.out.to_string_lossy();
    let records_path = PathBuf::from(format!("{prefix}_records.csv"));
    let summary_path = PathBuf::from(format!("{prefix}_summary.json"));
    io::save_records_csv(&records, truth_eigs.len(), &records_path)?;
    io::save_summary_json(cfg.example.as_str(), cfg.seed, &cells, &summary_path)?;
    if let Some(timings) = &args.timings {
        io::save_timings_csv(&records, timings)?;
    }

    let total_time: f64 = records.iter().map(|r| r.wall_time).sum();
    eprintln!(
        "bench {}: {} records in {:.1}s -> {}, {}",
        cfg.example.as_str(),
        records.len(),
        total_time,
        records_path.display(),
        summary_path.display()
    );
    Ok(())
}

fn truth_eigenvalues(example: &Example) -> Vec<optdmd::c64> {
    use optdmd::c64;
    match example {
        Example::Ex1Sensor | Example::Ex3Jitter => vec![c64::new(0.0, 1.0), c64::new(0.0, -1.0)],
        Example::Ex2Hidden => vec![
            c64::new(1.0, 1.0),
            c64::new(1.0, -1.0),
            c64::new(-0.2, 3.7),
            c64::new(-0.2, -3.7),
        ],
        Example::UserData(_) => Vec::new(),
    }
}

fn run_rank(args: RankArgs) -> anyhow::Result<()> {
    let data = io::load_snapshots_csv(&args.input)
        .with_context(|| format!("loading {}", args.input.display()))?;
    let sv = data.singular_values()?;
    let (n, m) = (data.state_dim(), data.len());

    let median = select_rank(&sv, n, m, RankStrategy::GavishDonohoMedian)?;
    let mut report = serde_json::json!({
        "schema": "optdmd-rank-v1",
        "rows": n,
        "cols": m,
        "singular_values": sv,
        "gavish_donoho_median": median.chosen_rank,
    });
    if let Some(sigma) = args.sigma {
        let known = select_rank(&sv, n, m, RankStrategy::GavishDonohoKnownSigma(sigma))?;
        report["gavish_donoho_known_sigma"] = serde_json::json!(known.chosen_rank);
    }
    let mut energies = serde_json::Map::new();
    for &p in &args.energy {
        if !(p > 0.0 && p <= 1.0) {
            bail!("energy fraction {p} outside (0, 1]");
        }
        let sel = select_rank(&sv, n, m, RankStrategy::NuclearEnergy(p))?;
        energies.insert(format!("{p}"), serde_json::json!(sel.chosen_rank));
    }
    report["nuclear_energy"] = serde_json::Value::Object(energies);

    let text = format!("{report:#}\n");
    match &args.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

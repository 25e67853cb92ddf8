//! Command-line tool for clustering dynamic networks: simulate synthetic
//! data, fit a partition, score it against a reference, and summarize it.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dynblock_core::graph::Partition;
use dynblock_core::greedy::{fit, greedy_icl, merge_step, FitConfig, FitResult, GreedyConfig};
use dynblock_core::icl::Hyperparameters;
use dynblock_core::init::parse_strategies;
use dynblock_core::io::{
    read_edge_list, read_partition, write_edge_list, write_kt_csv, write_partition,
    write_run_log, write_summary_json, EdgeListOptions,
};
use dynblock_core::metrics::{nmi, summarize};
use dynblock_core::sim::{simulate, SimConfig};

const SEED_ENV: &str = "DYNBLOCK_SEED";

#[derive(Parser)]
#[command(
    name = "dynblock",
    version,
    about = "Dynamic-network clustering by exact ICL maximization"
)]
struct Cli {
    /// Print per-run details
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic dynamic network with known group structure
    Simulate(SimArgs),
    /// Cluster a network and write allocations, summary, and run log
    Fit(FitArgs),
    /// Print the normalized mutual information between two partitions
    Score(ScoreArgs),
    /// Recompute descriptive summaries for a (network, partition) pair
    Summarize(SummArgs),
}

#[derive(Args)]
struct SimArgs {
    /// Number of nodes
    #[arg(long)]
    nodes: usize,
    /// Number of time frames
    #[arg(long)]
    times: usize,
    /// Number of groups
    #[arg(long)]
    groups: usize,
    /// Diagonal mass of the transition kernel, in (0, 1]
    #[arg(long)]
    pi: f64,
    /// Within-group connection probability
    #[arg(long)]
    theta0: f64,
    /// Between-group connection probability
    #[arg(long)]
    eps0: f64,
    /// Scale of the uniform perturbation of the connection matrix
    #[arg(long, default_value_t = 0.1)]
    perturb: f64,
    /// Generate a directed network
    #[arg(long)]
    directed: bool,
    /// RNG seed (falls back to $DYNBLOCK_SEED, then 0)
    #[arg(long)]
    seed: Option<u64>,
    /// Output path for the edge-list CSV
    #[arg(long)]
    out: PathBuf,
    /// Output path for the ground-truth partition CSV
    #[arg(long)]
    truth: PathBuf,
}

#[derive(Args)]
struct NetworkInput {
    /// Edge-list CSV (header `t,i,j`)
    #[arg(long)]
    input: PathBuf,
    /// Treat the network as directed
    #[arg(long)]
    directed: bool,
    /// Input indices start at 1
    #[arg(long)]
    one_based: bool,
    /// Number of nodes (inferred from data when omitted)
    #[arg(long)]
    nodes: Option<usize>,
    /// Number of time frames (inferred from data when omitted)
    #[arg(long)]
    times: Option<usize>,
}

#[derive(Args)]
struct HyperArgs {
    /// Beta shape a
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Beta shape b
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    /// Symmetric Dirichlet concentration
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    net: NetworkInput,
    /// Initialization strategies: aggregated|colbind|rowbind|random|all
    #[arg(long = "init", default_values_t = [String::from("all")])]
    init: Vec<String>,
    /// Start from this partition CSV instead of the named strategies
    #[arg(long)]
    init_partition: Option<PathBuf>,
    /// Restarts per strategy
    #[arg(long, default_value_t = 1)]
    restarts: usize,
    /// RNG seed (falls back to $DYNBLOCK_SEED, then 0)
    #[arg(long)]
    seed: Option<u64>,
    /// Override the capacity drawn by each strategy
    #[arg(long)]
    kup: Option<usize>,
    #[command(flatten)]
    hyper: HyperArgs,
    /// Safety cap on greedy sweeps
    #[arg(long, default_value_t = 200)]
    max_sweeps: usize,
    /// Mask connection-probability estimates with fewer possible pairs
    #[arg(long, default_value_t = 0)]
    mask_threshold: i64,
    /// Output path for the fitted allocations CSV
    #[arg(long)]
    alloc_out: PathBuf,
    /// Output path for the summary JSON
    #[arg(long)]
    summary_out: PathBuf,
    /// Output path for the per-run log JSON
    #[arg(long)]
    log_out: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    /// Predicted partition CSV
    #[arg(long)]
    pred: PathBuf,
    /// Reference partition CSV
    #[arg(long)]
    truth: PathBuf,
}

#[derive(Args)]
struct SummArgs {
    #[command(flatten)]
    net: NetworkInput,
    /// Partition CSV to summarize
    #[arg(long)]
    partition: PathBuf,
    #[command(flatten)]
    hyper: HyperArgs,
    /// Mask connection-probability estimates with fewer possible pairs
    #[arg(long, default_value_t = 0)]
    mask_threshold: i64,
    /// Output path for the summary JSON
    #[arg(long)]
    summary_out: PathBuf,
    /// Output path for the per-frame group-count CSV
    #[arg(long)]
    kt_out: PathBuf,
}

/// Failure classes mapped to exit codes: usage 1, data 2, internal 3.
enum AppError {
    Usage(String),
    Data(String),
    Internal(String),
}

impl AppError {
    fn code(&self) -> u8 {
        match self {
            AppError::Usage(_) => 1,
            AppError::Data(_) => 2,
            AppError::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            AppError::Usage(m) | AppError::Data(m) | AppError::Internal(m) => m,
        }
    }
}

impl From<dynblock_core::IoError> for AppError {
    fn from(e: dynblock_core::IoError) -> Self {
        AppError::Data(e.to_string())
    }
}

impl From<dynblock_core::GraphError> for AppError {
    fn from(e: dynblock_core::GraphError) -> Self {
        AppError::Data(e.to_string())
    }
}

impl From<dynblock_core::ConfigError> for AppError {
    fn from(e: dynblock_core::ConfigError) -> Self {
        AppError::Usage(e.to_string())
    }
}

impl From<dynblock_core::greedy::FitError> for AppError {
    fn from(e: dynblock_core::greedy::FitError) -> Self {
        match e {
            dynblock_core::greedy::FitError::Graph(g) => AppError::Data(g.to_string()),
            dynblock_core::greedy::FitError::Config(c) => AppError::Usage(c.to_string()),
        }
    }
}

fn resolve_seed(flag: Option<u64>) -> u64 {
    flag.or_else(|| std::env::var(SEED_ENV).ok().and_then(|v| v.parse().ok()))
        .unwrap_or(0)
}

fn fmt_matrix(m: &[Vec<f64>]) -> String {
    m.iter()
        .map(|row| row.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(" "))
        .collect::<Vec<_>>()
        .join("\n")
}

fn cmd_simulate(args: SimArgs) -> Result<(), AppError> {
    let cfg = SimConfig {
        num_nodes: args.nodes,
        num_times: args.times,
        num_groups: args.groups,
        pi: args.pi,
        theta0: args.theta0,
        eps0: args.eps0,
        perturb_scale: args.perturb,
        directed: args.directed,
        rng_seed: resolve_seed(args.seed),
    };
    let out = simulate(&cfg)?;
    write_edge_list(&args.out, &out.network)?;
    write_partition(&args.truth, &out.truth)?;
    println!(
        "simulated N={} T={} K={} M={} seed={}",
        args.nodes,
        args.times,
        args.groups,
        out.network.total_edges(),
        cfg.rng_seed
    );
    println!("realized connection matrix:\n{}", fmt_matrix(&out.theta_real));
    println!("transition kernel:\n{}", fmt_matrix(&out.pi_matrix));
    Ok(())
}

fn read_network(args: &NetworkInput) -> Result<dynblock_core::DynamicNetwork, AppError> {
    Ok(read_edge_list(
        &args.input,
        &EdgeListOptions {
            one_based: args.one_based,
            directed: args.directed,
            num_nodes: args.nodes,
            num_times: args.times,
        },
    )?)
}

fn cmd_fit(args: FitArgs, verbose: bool) -> Result<(), AppError> {
    let hyper = Hyperparameters::new(args.hyper.a, args.hyper.b, args.hyper.delta)?;
    let seed = resolve_seed(args.seed);
    let net = read_network(&args.net)?;

    let result: FitResult = if let Some(init_path) = &args.init_partition {
        let read = read_partition(init_path)?;
        let init = match args.kup {
            Some(k) => read.with_capacity(k)?,
            None => read,
        };
        let greedy_cfg = GreedyConfig { max_sweeps: args.max_sweeps, ..Default::default() };
        let g = greedy_icl(&net, &init, &hyper, dynblock_core::derive_seed(seed, 1), &greedy_cfg)?;
        merge_step(&net, &g.partition, &hyper)?
    } else {
        let strategies = parse_strategies(&args.init)?;
        let mut cfg = FitConfig::new(strategies, seed);
        cfg.restarts = args.restarts;
        cfg.k_up_override = args.kup;
        cfg.hyper = hyper.clone();
        cfg.greedy.max_sweeps = args.max_sweeps;
        fit(&net, &cfg)?
    };

    let report = summarize(&net, &result.partition, &hyper, args.mask_threshold)?;
    if (report.icl.total - result.icl.total).abs() > 1e-6 {
        return Err(AppError::Internal(format!(
            "summary objective {} disagrees with fit objective {}",
            report.icl.total, result.icl.total
        )));
    }
    write_partition(&args.alloc_out, &result.partition)?;
    write_summary_json(&args.summary_out, &report)?;
    if let Some(log_path) = &args.log_out {
        write_run_log(log_path, seed, args.restarts, &result.runs)?;
    }
    if verbose {
        for run in &result.runs {
            println!(
                "run {} restart {}: k_up={} K={} icl={:.6} sweeps={} moves={} merges={} {:.3}s",
                run.strategy,
                run.restart,
                run.k_up,
                run.num_groups,
                run.icl_total,
                run.sweeps,
                run.moves_accepted,
                run.merges_accepted,
                run.wall_secs
            );
        }
    }
    println!(
        "fitted K={} icl={:.6} sweeps={} moves={} runs={}",
        result.partition.num_active(),
        result.icl.total,
        result.sweeps,
        result.moves_accepted,
        result.runs.len().max(1)
    );
    Ok(())
}

fn cmd_score(args: ScoreArgs) -> Result<(), AppError> {
    let pred = read_partition(&args.pred)?;
    let truth = read_partition(&args.truth)?;
    let score = nmi(pred.flatten(), truth.flatten())?;
    println!("{score:.6}");
    Ok(())
}

fn cmd_summarize(args: SummArgs) -> Result<(), AppError> {
    let hyper = Hyperparameters::new(args.hyper.a, args.hyper.b, args.hyper.delta)?;
    let net = read_network(&args.net)?;
    let partition: Partition = read_partition(&args.partition)?;
    let report = summarize(&net, &partition, &hyper, args.mask_threshold)?;
    write_summary_json(&args.summary_out, &report)?;
    write_kt_csv(&args.kt_out, &report.nonempty_per_frame)?;
    println!(
        "summarized K={} icl={:.6}",
        report.transition_means.len(),
        report.icl.total
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not failures.
            use clap::error::ErrorKind;
            let kind = e.kind();
            let _ = e.print();
            return if matches!(kind, ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };
    let result = match cli.cmd {
        Cmd::Simulate(args) => cmd_simulate(args),
        Cmd::Fit(args) => cmd_fit(args, cli.verbose),
        Cmd::Score(args) => cmd_score(args),
        Cmd::Summarize(args) => cmd_summarize(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

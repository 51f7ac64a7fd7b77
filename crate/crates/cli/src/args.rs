use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "cyclewalk",
    version,
    about = "Random transposition walks, cycle structure and breakpoint distances"
)]
pub struct Cli {
    /// Master seed; replicate i uses stream i of this seed.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Output directory. Experiments default to `results`; other commands
    /// print to stdout when it is absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// `csv` or `csv+svg`.
    #[arg(long, global = true, default_value = "csv")]
    pub format: String,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a named experiment and write CSV + manifest.
    Experiment(ExperimentArgs),
    /// Evaluate a closed-form quantity.
    Theory(TheoryArgs),
    /// Run the coupled walk and write trace rows.
    Walk(WalkArgs),
    /// Signed genome tools.
    #[command(subcommand)]
    Breakpoint(BreakpointCommand),
    /// Cluster queuing system simulations.
    #[command(subcommand)]
    Cqs(CqsCommand),
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// fig2, fig3, fig4, fig5, thm1..thm5, cqs-bounds, lemma3-tail, eq4-trees
    /// or `list`.
    pub name: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub c: Option<f64>,
    /// Comma-separated grid of c (or r) values.
    #[arg(long, value_delimiter = ',')]
    pub c_grid: Option<Vec<f64>>,
    #[arg(long)]
    pub reps: Option<u64>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub x_max: Option<u64>,
    /// Re-run from a manifest; other parameter flags are ignored.
    #[arg(long, conflicts_with = "name")]
    pub manifest: Option<PathBuf>,
    /// Exit with status 3 if any check fails.
    #[arg(long)]
    pub check: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TheoryFn {
    Kappa,
    Alpha,
    Borel,
    BorelInf,
    Theta,
    Rho,
    G,
    GSeries,
    U,
    Sigma,
    Trees,
    Lambda,
    Tail,
    Phi,
    Pgw,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct TheoryArgs {
    #[arg(value_enum)]
    pub function: TheoryFn,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub k: Option<u64>,
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub y: Option<f64>,
    #[arg(long)]
    pub x: Option<u32>,
    /// Number of samples for `pgw`.
    #[arg(long, default_value_t = 1)]
    pub count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TimeArg {
    Discrete,
    Poisson,
}

#[derive(Debug, Args)]
pub struct WalkArgs {
    #[arg(long)]
    pub n: usize,
    /// Horizon c; the walk runs for time c·n/2.
    #[arg(long)]
    pub c: f64,
    /// Comma-separated snapshot c-values (default: the horizon).
    #[arg(long, value_delimiter = ',')]
    pub snapshots: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1)]
    pub reps: u64,
    #[arg(long, default_value_t = cyclewalk_core::walk::DEFAULT_MASS_EXPONENT)]
    pub a: f64,
    #[arg(long, value_enum, default_value = "poisson")]
    pub time: TimeArg,
    /// Use the linear-time traversal cycle index instead of the treap.
    #[arg(long)]
    pub traversal: bool,
}

#[derive(Debug, Subcommand)]
pub enum BreakpointCommand {
    /// Components and d0 for every genome in a file.
    D0 {
        file: PathBuf,
        /// Also print the doubled sequence and the component cycles.
        #[arg(long)]
        verbose: bool,
    },
    /// Choose signs for an unsigned order by simulated annealing.
    Anneal {
        file: PathBuf,
        #[arg(long, default_value_t = cyclewalk_core::breakpoint::DEFAULT_RESTARTS)]
        restarts: u64,
        #[arg(long, default_value_t = 100_000)]
        moves: u64,
        #[arg(long)]
        cooling: Option<f64>,
    },
    /// Reversal walk coupled to the transposition walk.
    Walk {
        #[arg(long, default_value_t = 100)]
        markers: usize,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 1000)]
        reps: u64,
    },
}

#[derive(Debug, Subcommand)]
pub enum CqsCommand {
    /// Simulate the queue system and report suprema per replicate.
    Run {
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = cyclewalk_core::walk::DEFAULT_MASS_EXPONENT)]
        a: f64,
        #[arg(long, default_value_t = 2.0)]
        c: f64,
        #[arg(long, default_value_t = 100)]
        reps: u64,
    },
    /// Tail of the excursion maximum against the exact law.
    Excursions {
        #[arg(long, default_value_t = 6)]
        x_max: u64,
        #[arg(long, default_value_t = 10_000)]
        count: u64,
        /// Use the single-level chain for level k instead of a strip.
        #[arg(long)]
        level: Option<u32>,
    },
}

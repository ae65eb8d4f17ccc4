//! Command-line argument definitions.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "heteffect",
    about = "Causal effect heterogeneity unexplained by covariates: \
             positive/negative effect decompositions, bounds, and bootstrap inference",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample observational data from a built-in SCM and write it as CSV.
    Simulate(SimulateArgs),
    /// Brute-force ground truths for the measures from a built-in SCM.
    Oracle(OracleArgs),
    /// Estimate measures (optionally with bounds and bootstrap) from data.
    Estimate(EstimateArgs),
    /// Estimate partial-identification bounds; same as `estimate --bounds`.
    Bounds(EstimateArgs),
    /// Evaluate measures over a covariate grid for plotting.
    Sweep(SweepArgs),
    /// Re-run the built-in simulation studies and summarize per cell.
    #[command(name = "reproduce-tables")]
    ReproduceTables(ReproduceArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Built-in SCM name (see `--help` for the catalog).
    #[arg(long, help = heteffect_catalog())]
    pub scm: String,
    /// Number of records to draw.
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

fn heteffect_catalog() -> String {
    format!(
        "Built-in SCM name; one of: {}",
        heteffect::scm::builtin_names().join(", ")
    )
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, help = heteffect_catalog())]
    pub scm: String,
    /// Covariate point, comma-separated (empty for covariate-free SCMs).
    #[arg(long, default_value = "")]
    pub w: String,
    /// Atomic intervention arms.
    #[arg(long, default_value_t = 0.0)]
    pub x0: f64,
    #[arg(long, default_value_t = 1.0)]
    pub x1: f64,
    /// Base policy for the stochastic family, e.g. `uniform:0,0.1`,
    /// `normal:0,1`, `dirac:0.5`. Omit to skip the stochastic measures.
    #[arg(long)]
    pub pi0: Option<String>,
    /// Second policy: `shift:D`, `double_shift:D`, or any base form.
    #[arg(long)]
    pub pi1: Option<String>,
    /// Monte Carlo draws.
    #[arg(long, default_value_t = 1_000_000)]
    pub mc: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also compute truncated tail integrals up to this threshold.
    #[arg(long)]
    pub c_max: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    pub c_grid: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    /// Input CSV path (requires --schema). Exactly one of --input/--scm.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Schema TOML file describing column roles.
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Built-in SCM to simulate from instead of reading a file.
    #[arg(long)]
    pub scm: Option<String>,
    /// Sample size when simulating via --scm.
    #[arg(long)]
    pub n: Option<usize>,
    /// Optional TOML file with any of the long options below; command-line
    /// flags take precedence over file keys, which take precedence over
    /// defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Stratum constraints, e.g. `age=30,smoker=no,bmi=20..30`.
    #[arg(long)]
    pub stratum: Option<String>,
    /// Covariate point for the measures (comma-separated); defaults to the
    /// values pinned by equality constraints in --stratum.
    #[arg(long)]
    pub w: Option<String>,
    /// Measures to estimate: `all` or a comma list of
    /// cace,p_cace,n_cace,cpice,p_cpice,n_cpice.
    #[arg(long)]
    pub measures: Option<String>,
    #[arg(long)]
    pub x0: Option<f64>,
    #[arg(long)]
    pub x1: Option<f64>,
    #[arg(long)]
    pub pi0: Option<String>,
    #[arg(long)]
    pub pi1: Option<String>,
    /// Also emit lower/upper bounds (and bootstrap the uppers).
    #[arg(long)]
    pub bounds: bool,
    /// Upper-bound envelope: `sharp` (min) or `conservative` (max).
    #[arg(long)]
    pub upper_style: Option<String>,
    /// Policy draws per estimate.
    #[arg(long)]
    pub n1: Option<usize>,
    /// Outcome draws per estimate.
    #[arg(long)]
    pub n2: Option<usize>,
    /// Outcome bounds `a,b`; inferred from the data when omitted.
    #[arg(long)]
    pub y_bounds: Option<String>,
    /// Fixed kernel bandwidth; skips cross-validation.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Cross-validation candidates (comma-separated).
    #[arg(long)]
    pub candidates: Option<String>,
    /// Write the per-candidate cross-validation scores to this CSV path.
    #[arg(long)]
    pub bandwidth_trace: Option<PathBuf>,
    #[arg(long)]
    pub folds: Option<usize>,
    /// Kernel family: epanechnikov, gaussian, or uniform.
    #[arg(long)]
    pub kernel: Option<String>,
    /// Z-score all columns before kernel evaluation.
    #[arg(long)]
    pub standardize: bool,
    /// Bootstrap replicates (0 disables).
    #[arg(long)]
    pub bootstrap: Option<usize>,
    /// Re-select the bandwidth inside each bootstrap replicate.
    #[arg(long)]
    pub reselect_h: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, help = heteffect_catalog())]
    pub scm: String,
    /// Covariate grid `start:stop:step` over the first covariate.
    #[arg(long)]
    pub w_grid: String,
    /// `oracle` evaluates ground truths; `estimate` fits on simulated data.
    #[arg(long, default_value = "oracle")]
    pub mode: String,
    /// Emit truncated tail integrals instead of the measure decomposition.
    #[arg(long)]
    pub tail_integrals: bool,
    /// Tail-integral truncation threshold.
    #[arg(long, default_value_t = 100.0)]
    pub c_max: f64,
    #[arg(long, default_value_t = 0.0)]
    pub x0: f64,
    #[arg(long, default_value_t = 1.0)]
    pub x1: f64,
    /// Sample size for estimate mode.
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    /// Monte Carlo draws per oracle evaluation.
    #[arg(long, default_value_t = 1_000_000)]
    pub mc: usize,
    #[arg(long)]
    pub candidates: Option<String>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 100)]
    pub n2: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// `main` (identification setting) or `violated` (bounds setting).
    #[arg(long, default_value = "main")]
    pub table: String,
    #[arg(long, default_value_t = 100)]
    pub sims: usize,
    /// Sample sizes, comma-separated.
    #[arg(long, default_value = "100,1000,10000")]
    pub sizes: String,
    #[arg(long)]
    pub upper_style: Option<String>,
    #[arg(long, default_value_t = 61409)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

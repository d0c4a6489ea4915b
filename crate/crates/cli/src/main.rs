mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use output::OutputArgs;

/// Walters potentials on the full two-shift: weight sequences, renormalization
/// fixed points, Cantor-measure integrals, equilibrium data and decay of
/// correlations.
///
/// Every table starts with `#` lines giving the version, all parameters and
/// seeds, followed by CSV (or a JSON document with `--out-format json`).
/// Exit status: 0 success, 2 rejected input or usage, 1 I/O or internal error.
#[derive(Debug, Parser)]
#[command(name = "walters", version, args_override_self = true)]
struct Cli {
    /// File of `key = value` lines supplying defaults for the subcommand's
    /// long flags; flags on the command line override them.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate a weight sequence.
    ///
    /// Columns: n, eta, T (tail sum from n), a (log eta_n/eta_{n-1}).
    Eta(EtaArgs),
    /// Build a renormalization fixed point and check it.
    ///
    /// Columns: n, a, Ra (image under the operator, empty where not
    /// computable), residual, then `offset` (first type) or `bound` (second type).
    FixedPoint(FixedPointArgs),
    /// Apply a renormalization operator to coefficients read from CSV.
    ///
    /// The input needs columns `n` and `a` with n = 2, 3, ... contiguous;
    /// `#` lines are skipped. Columns: n, a, Ra, residual.
    Apply(ApplyArgs),
    /// Integrate (n - t)^-alpha against the Cantor measure.
    ///
    /// Columns: n, value, bound, mc_estimate, mc_stderr.
    Integrate(IntegrateArgs),
    /// Renewal recursions and correlations of the indicator of [0].
    ///
    /// Columns: q, A, V, K, D, C_renewal, C_oracle, C_mc, mc_stderr,
    /// ratio (|C|/(D/Z)), can1, est1.
    Decay(DecayArgs),
    /// Construct eta whose double tail reproduces a target decay.
    ///
    /// Columns: q, eta, D, target (d_{q+shift}), rel_err.
    Inverse(InverseArgs),
    /// Cylinder measures, eigenfunction and Jacobian of the equilibrium state.
    ///
    /// Columns: q, rho, mu_raw, mu_norm, r, jacobian_l.
    Equilibrium(EquilibriumArgs),
    /// Fit log eta_n = c - gamma log n.
    ///
    /// Columns: n, log_n, log_eta, fitted, residual.
    Fit(FitArgs),
}

#[derive(Debug, Args)]
struct EtaArgs {
    /// `power:<gamma>`, `stretched:<theta>` or `geometric:<ratio>`.
    #[arg(long)]
    family: String,
    #[arg(long, default_value_t = 10_000)]
    nmax: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct OperatorArgs {
    /// First type: (Ra)_n sums a over k(n-2)+3 ..= k(n-1)+2.
    #[arg(long, conflicts_with = "type2", required_unless_present = "type2")]
    type1: bool,
    /// Second type: (Ra)_n = sum_i a_{kn - c_i}.
    #[arg(long)]
    type2: bool,
    #[arg(long)]
    k: u32,
    /// Digits c_1 < .. < c_l (second type).
    #[arg(long, value_delimiter = ',')]
    digits: Vec<u32>,
}

#[derive(Debug, Args)]
struct FixedPointArgs {
    #[command(flatten)]
    op: OperatorArgs,
    /// a_2 for the first type; must be negative.
    #[arg(long, allow_negative_numbers = true, default_value_t = -std::f64::consts::LN_2)]
    a2: f64,
    /// Quadrature depth for the second type.
    #[arg(long, default_value_t = 14)]
    depth: u32,
    #[arg(long)]
    nmax: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct ApplyArgs {
    #[command(flatten)]
    op: OperatorArgs,
    /// CSV with columns n and a.
    #[arg(long = "in")]
    input: PathBuf,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct IntegrateArgs {
    #[arg(long)]
    k: u32,
    #[arg(long, value_delimiter = ',')]
    digits: Vec<u32>,
    /// One or more evaluation points.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    #[arg(long, default_value_t = 14)]
    depth: u32,
    /// Monte Carlo samples per point (0 disables).
    #[arg(long, default_value_t = 0)]
    mc: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct DecayArgs {
    #[arg(long)]
    family: String,
    #[arg(long, default_value_t = 1000)]
    qmax: usize,
    /// Truncation level M of the Markov-chain oracle (0 disables).
    #[arg(long, default_value_t = 0)]
    oracle_trunc: usize,
    /// Largest admissible relative truncated mass of the oracle.
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    /// Monte Carlo paths for the oracle (0 disables; needs the oracle).
    #[arg(long, default_value_t = 0)]
    mc_paths: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
#[group(id = "goal", required = true, multiple = false, args = ["target", "target_file"])]
struct InverseArgs {
    /// `power:<p>` for d_q = q^-p or `geometric:<ratio>` for d_q = ratio^q.
    #[arg(long)]
    target: Option<String>,
    /// One-column file of d_1, d_2, ... (convex and decreasing).
    #[arg(long)]
    target_file: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    qmax: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct EquilibriumArgs {
    #[arg(long)]
    family: String,
    #[arg(long, default_value_t = 100)]
    qmax: usize,
    #[arg(long, default_value_t = 10_000)]
    nmax: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long)]
    family: String,
    #[arg(long, default_value_t = 10_000)]
    nmax: usize,
    /// Inclusive fit range `lo,hi`.
    #[arg(long, value_delimiter = ',', default_values_t = [10, 1000])]
    range: Vec<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

fn main() -> ExitCode {
    let argv = match config::expand(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("walters: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("walters: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

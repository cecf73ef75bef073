mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::Failure;

#[derive(Parser, Debug)]
#[command(name = "fbl", version, about = "Certified norms and constructions in free Banach lattices over lp")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    run: RunConfig,
}

/// Flags shared by every subcommand.
#[derive(Args, Debug, Clone)]
pub struct RunConfig {
    /// Space as `p:n`, e.g. `1:3`, `2:4`, `inf:2`, `1.5:3`.
    #[arg(long, global = true)]
    pub space: Option<String>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Longest dual tuple tried by the search.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub mmax: Option<u64>,
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub restarts: Option<u64>,
    /// Objective evaluations per search stage.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub evals: Option<u64>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Use the exact LP scheme over l1 for `norm`.
    #[arg(long = "exact-l1", global = true)]
    pub exact_l1: bool,
    /// Re-derive every lower bound from its certificate.
    #[arg(long, global = true)]
    pub verify: bool,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Worker threads; 0 uses the default pool.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate a term or closed form at a functional.
    Eval {
        expr: String,
        /// Functional as a JSON array.
        #[arg(long)]
        at: String,
    },
    /// Certified norm bounds.
    Norm { expr: String },
    /// Image of a term under the lattice homomorphism extending a matrix.
    Extend {
        expr: String,
        /// Row-major JSON matrix, one row per codomain coordinate.
        #[arg(long)]
        matrix: String,
        /// Codomain space `p:k`.
        #[arg(long)]
        codomain: String,
    },
    /// Riesz–Kantorovich value of `y*(u_1 ∨ … ∨ u_m)`.
    Rk {
        /// Positive functional as a JSON array.
        #[arg(long)]
        y: String,
        /// Vectors as a JSON array of arrays.
        #[arg(long)]
        us: String,
    },
    /// Discrete measure `μ` and constant `L` with `f ≤ L·f_μ`.
    Majorant {
        expr: String,
        /// Norm lower bound to start from; defaults to the search bound.
        #[arg(long)]
        bound: Option<f64>,
        #[arg(long, default_value_t = 4)]
        grid: usize,
    },
    /// Directed families over l1: supremum, strong Nakano bound, maximality.
    Nakano {
        /// JSON list of generating members (terms or closed-form tags).
        family: Option<String>,
        /// Run the maximality diagnostics on this function instead.
        #[arg(long)]
        maximality: Option<String>,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Reproduce one of the constructions.
    #[command(subcommand)]
    Example(Example),
}

#[derive(Subcommand, Debug)]
pub enum Example {
    /// `max_a |x*_a|/a` and its harmonic-sum certificate.
    Harmonic {
        #[arg(long = "N", short = 'N')]
        n: usize,
    },
    /// Distance from `minsup:2n` to a term over the first `n` coordinates.
    Distance {
        #[arg(long)]
        n: usize,
        /// Term over `1:n`.
        #[arg(long, default_value = "0")]
        g: String,
    },
    /// Dyadic `f_n` and the Fatou mechanics.
    Fatou {
        #[arg(long, default_value_t = 5)]
        grid: u32,
        #[arg(long, default_value_t = 1.5)]
        gscale: f64,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Rademacher embedding of `l1(Γ)` into `FBL[lp(Γ)]`.
    Rademacher {
        #[arg(long)]
        gamma: usize,
        #[arg(long, default_value = "2")]
        p: String,
        /// 1-based indices of `A`, comma separated.
        #[arg(long = "A", short = 'A', default_value = "")]
        a_set: String,
        #[arg(long, default_value_t = 6)]
        grid: u32,
        /// Coefficients as a JSON array; defaults to all ones.
        #[arg(long = "a")]
        coefficients: Option<String>,
    },
    /// Pairwise separation of `(δ_u ∨ f) ∧ g`.
    Interval {
        #[arg(long)]
        f: String,
        #[arg(long)]
        g: String,
        /// Vectors as a JSON array of arrays.
        #[arg(long)]
        us: String,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let run = cli.run.clone();
    let threads = run.threads;
    let result = fbl_core::par::with_threads(threads, move || commands::dispatch(cli.command, &run));
    match result.and_then(|report| output::emit(&report.json, &cli.run).map(|()| report.failed)) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(check)) => {
            eprintln!("check failed: {check}");
            ExitCode::from(3)
        }
        Err(Failure { code, message }) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}

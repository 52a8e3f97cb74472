use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nips::error::{NipsError, Result};
use nips::verify::{Mutation, Suite};
use nips_cli::config::{parse_variant, ExperimentConfig, Overrides};
use nips_cli::{exit_code_for_error, exit_code_for_status, exit_codes, runner};

const EXIT_HELP: &str = "\
Exit codes:
  0  run finished (converged or iteration budget reached) / all checks passed
  1  a verification suite reported failures
  2  configuration error (bad config file, flags, or solver constants)
  3  file I/O or parse error
  4  numerical failure (empty feasible set, non-convergent subroutine, ...)
  5  a per-iteration inequality audit failed during a run

Environment:
  NIPS_LOG_LEVEL  one of error, info, debug (default: error)";

#[derive(Parser)]
#[command(
    name = "nips",
    about = "Inexact proximal-splitting solvers with an experiment harness",
    after_help = EXIT_HELP
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a key-value config file.
    Run {
        config: PathBuf,
        #[arg(long)]
        trace_out: Option<PathBuf>,
        /// Turn per-iteration inequality audits on.
        #[arg(long)]
        audit: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        max_iters: Option<usize>,
        /// Residual stopping tolerance.
        #[arg(long)]
        tol: Option<f64>,
        /// Constant stepsize (must lie in the admissible window).
        #[arg(long)]
        eta: Option<f64>,
        /// Lower stepsize constant c.
        #[arg(long)]
        c: Option<f64>,
        /// Error level bound (epsilon-bar) for injected gradient errors.
        #[arg(long)]
        error_bound: Option<f64>,
        /// minor-operator variant: major_only or minor_prox.
        #[arg(long)]
        variant: Option<String>,
        #[arg(long)]
        minibatch: Option<usize>,
        #[arg(long)]
        factors_out: Option<PathBuf>,
    },
    /// Run a property suite: prox, lemmas, incremental, nmf, or all.
    Verify {
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Test fixture: deliberately corrupt one check.
        #[arg(long, hide = true)]
        mutation: Option<String>,
    },
    /// Generate a synthetic matrix: uniform_dense MxN, planted_nmf MxTxK,
    /// or sparse_uniform MxN (with --density).
    Gen {
        kind: String,
        dims: String,
        seed: u64,
        out: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        density: f64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(
        env_logger::Env::new().filter_or("NIPS_LOG_LEVEL", "error"),
    )
    .init();
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for_error(&e)
        }
    };
    ExitCode::from(code as u8)
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Run {
            config,
            trace_out,
            audit,
            seed,
            max_iters,
            tol,
            eta,
            c,
            error_bound,
            variant,
            minibatch,
            factors_out,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            let overrides = Overrides {
                trace_out,
                audit: audit.then_some(true),
                seed,
                max_iters,
                tol,
                eta,
                c,
                error_bound,
                variant: variant.as_deref().map(parse_variant).transpose()?,
                minibatch,
                factors_out,
            };
            overrides.apply(&mut cfg)?;
            let outcome = runner::run_experiment(&cfg)?;
            print!("{}", outcome.summary);
            Ok(exit_code_for_status(&outcome.status))
        }
        Command::Verify {
            suite,
            seed,
            mutation,
        } => {
            let suite = Suite::parse(&suite)
                .ok_or_else(|| NipsError::Config(format!("unknown suite '{suite}'")))?;
            let mutation = mutation
                .as_deref()
                .map(|m| {
                    Mutation::parse(m)
                        .ok_or_else(|| NipsError::Config(format!("unknown mutation '{m}'")))
                })
                .transpose()?;
            let report = nips::verify::run_suite_with(suite, seed, mutation);
            print!("{}", report.render());
            if report.all_passed() {
                Ok(exit_codes::OK)
            } else {
                Ok(exit_codes::VERIFY_FAILED)
            }
        }
        Command::Gen {
            kind,
            dims,
            seed,
            out,
            density,
        } => {
            generate(&kind, &dims, seed, &out, density)?;
            Ok(exit_codes::OK)
        }
    }
}

fn parse_dims(dims: &str, want: usize) -> Result<Vec<usize>> {
    let parsed: Vec<usize> = dims
        .split('x')
        .map(|d| {
            d.parse()
                .map_err(|_| NipsError::Config(format!("bad dimension '{d}' in '{dims}'")))
        })
        .collect::<Result<_>>()?;
    if parsed.len() != want {
        return Err(NipsError::Config(format!(
            "expected {want} dimensions, got '{dims}'"
        )));
    }
    Ok(parsed)
}

fn generate(kind: &str, dims: &str, seed: u64, out: &std::path::Path, density: f64) -> Result<()> {
    match kind {
        "uniform_dense" => {
            let d = parse_dims(dims, 2)?;
            let y = nips::synth::uniform_dense(d[0], d[1], seed);
            nips::io::write_dense_csv(out, &y)?;
            println!("wrote {}x{} dense matrix to {}", d[0], d[1], out.display());
        }
        "planted_nmf" => {
            let d = parse_dims(dims, 3)?;
            let (y, factors) = nips::synth::planted_nmf(d[0], d[1], d[2], seed)?;
            nips::io::write_dense_csv(out, &y)?;
            nips::io::write_dense_csv(runner::factor_path(out, "x"), &factors.x)?;
            nips::io::write_dense_csv(runner::factor_path(out, "a"), &factors.a)?;
            println!(
                "wrote {}x{} rank-{} planted matrix to {} (+ .x.csv/.a.csv factors)",
                d[0],
                d[1],
                d[2],
                out.display()
            );
        }
        "sparse_uniform" => {
            let d = parse_dims(dims, 2)?;
            let y = nips::synth::sparse_uniform(d[0], d[1], density, seed)?;
            println!(
                "wrote {}x{} sparse matrix ({} nonzeros) to {}",
                d[0],
                d[1],
                y.nnz(),
                out.display()
            );
            nips::io::write_matrix_market(out, &y)?;
        }
        other => {
            return Err(NipsError::Config(format!(
                "unknown generator '{other}' (try uniform_dense, planted_nmf, sparse_uniform)"
            )))
        }
    }
    Ok(())
}

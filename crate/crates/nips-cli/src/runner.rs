//! Builds the configured problem, runs the configured solver, and writes the
//! requested artifacts. Summary output is deterministic (no wall-clock).

use std::path::Path;

use ndarray::Array1;

use nips::batch::{solve_batch, ErrorKind, ErrorModel, EtaSchedule, SolveStatus, SolverConfig};
use nips::error::{NipsError, Result};
use nips::incremental::{solve_incremental, DecomposableProblem, IncrementalConfig};
use nips::io::{self, MatrixData};
use nips::model::{CompositeProblem, SmoothOracle};
use nips::nmf::{self, InnerSettings, NmfInit, NmfProblem};
use nips::problems;
use nips::prox::ProxRegularizer;
use nips::synth;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{DataSpec, ErrorSpec, ExperimentConfig, ProblemKind, RegSpec, SolverKind};

pub struct RunOutcome {
    pub status: SolveStatus,
    pub summary: String,
}

fn build_reg(spec: &RegSpec) -> Result<ProxRegularizer> {
    Ok(match spec {
        RegSpec::Zero => ProxRegularizer::Zero,
        RegSpec::NonNeg => ProxRegularizer::NonNeg,
        RegSpec::L1(w) => ProxRegularizer::l1(*w)?,
        RegSpec::L1NonNeg(w) => ProxRegularizer::l1_nonneg(*w)?,
    })
}

fn build_error_model(cfg: &ExperimentConfig, dim: usize) -> ErrorModel {
    match cfg.error_model {
        ErrorSpec::None => ErrorModel::none(),
        ErrorSpec::Gaussian(sigma) => ErrorModel::gaussian(sigma, cfg.error_bound, cfg.seed),
        ErrorSpec::Fixed(magnitude) => ErrorModel {
            kind: ErrorKind::FixedDirection {
                direction: Array1::ones(dim),
                magnitude,
            },
            seed: cfg.seed,
        },
    }
}

fn solver_config(cfg: &ExperimentConfig, lipschitz: f64, dim: usize) -> SolverConfig {
    let c = cfg.c.unwrap_or_else(|| 0.25 * (1.0 / lipschitz).min(1.0));
    let mut config = SolverConfig::new(c)
        .with_tol(cfg.residual_tol)
        .with_max_iters(cfg.max_iters)
        .with_trace_every(cfg.trace_every)
        .with_audit(cfg.audit)
        .with_error_model(build_error_model(cfg, dim));
    if let Some(eta) = cfg.eta {
        config = config.with_eta(EtaSchedule::Constant(eta));
    }
    config
}

fn seeded_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Array1<f64> {
    Array1::from_iter((0..n).map(|_| rng.random_range(-scale..scale)))
}

fn load_matrix(cfg: &ExperimentConfig) -> Result<MatrixData> {
    match cfg.data.as_ref() {
        None => Err(NipsError::Config(
            "nmf experiments need a data_path/data_format pair or a synthetic spec".into(),
        )),
        Some(DataSpec::File { path, format }) => io::read_matrix(path, *format),
        Some(DataSpec::Synthetic(spec)) => synth_matrix(spec, cfg.seed),
    }
}

fn synth_matrix(spec: &str, seed: u64) -> Result<MatrixData> {
    let parts: Vec<&str> = spec.split(':').collect();
    let parse_dims = |s: &str| -> Result<Vec<usize>> {
        s.split('x')
            .map(|d| {
                d.parse()
                    .map_err(|_| NipsError::Config(format!("bad dimension '{d}' in '{spec}'")))
            })
            .collect()
    };
    match parts.as_slice() {
        ["uniform", dims] => {
            let d = parse_dims(dims)?;
            if d.len() != 2 {
                return Err(NipsError::Config(format!("uniform wants MxN, got '{spec}'")));
            }
            Ok(MatrixData::Dense(synth::uniform_dense(d[0], d[1], seed)))
        }
        ["planted", dims] => {
            let d = parse_dims(dims)?;
            if d.len() != 3 {
                return Err(NipsError::Config(format!("planted wants MxTxK, got '{spec}'")));
            }
            let (y, _) = synth::planted_nmf(d[0], d[1], d[2], seed)?;
            Ok(MatrixData::Dense(y))
        }
        ["sparse", dims, density] => {
            let d = parse_dims(dims)?;
            if d.len() != 2 {
                return Err(NipsError::Config(format!("sparse wants MxN, got '{spec}'")));
            }
            let density: f64 = density
                .parse()
                .map_err(|_| NipsError::Config(format!("bad density in '{spec}'")))?;
            Ok(MatrixData::Sparse(synth::sparse_uniform(
                d[0], d[1], density, seed,
            )?))
        }
        _ => Err(NipsError::Config(format!(
            "unknown synthetic spec '{spec}' (try uniform:MxN, planted:MxTxK, sparse:MxN:DENSITY)"
        ))),
    }
}

fn write_trace_if_requested(cfg: &ExperimentConfig, trace: &[nips::TraceRecord]) -> Result<()> {
    if let Some(path) = &cfg.trace_out {
        io::write_trace(trace, path)?;
    }
    Ok(())
}

fn status_label(status: &SolveStatus) -> &'static str {
    match status {
        SolveStatus::Converged => "converged",
        SolveStatus::MaxIters => "max_iters",
        SolveStatus::AuditViolation(_) => "audit_violation",
    }
}

fn composite_summary(status: &SolveStatus, out: &nips::SolveResult) -> String {
    let last = out.trace.last().expect("trace has a terminal record");
    let mut s = String::new();
    s.push_str(&format!("status = {}\n", status_label(status)));
    s.push_str(&format!("iterations = {}\n", out.iterations));
    s.push_str(&format!("phi = {:.16e}\n", last.phi));
    s.push_str(&format!("rho_norm = {:.16e}\n", last.rho_norm));
    s.push_str(&format!("best_phi = {:.16e}\n", out.best_phi));
    if let SolveStatus::AuditViolation(f) = status {
        s.push_str(&format!("audit_failure = k={} {}\n", f.k, f.detail));
    }
    s
}

fn run_composite(
    cfg: &ExperimentConfig,
    problem: &CompositeProblem,
    x0: &Array1<f64>,
) -> Result<RunOutcome> {
    let config = solver_config(cfg, problem.current_lipschitz(), problem.dim());
    let out = solve_batch(problem, x0, &config)?;
    write_trace_if_requested(cfg, &out.trace)?;
    Ok(RunOutcome {
        status: out.status.clone(),
        summary: composite_summary(&out.status, &out),
    })
}

fn run_decomposable(
    cfg: &ExperimentConfig,
    problem: &DecomposableProblem,
    x0: &Array1<f64>,
) -> Result<RunOutcome> {
    match cfg.solver {
        SolverKind::Batch => run_composite(cfg, &problem.as_composite(), x0),
        SolverKind::Incremental => {
            let base = solver_config(cfg, problem.lipschitz(), problem.dim());
            let config = IncrementalConfig::new(base, cfg.variant)
                .with_ordering(cfg.ordering)
                .with_minibatch(cfg.minibatch.unwrap_or(1));
            let out = solve_incremental(problem, x0, &config)?;
            write_trace_if_requested(cfg, &out.trace)?;
            Ok(RunOutcome {
                status: out.status.clone(),
                summary: composite_summary(&out.status, &out),
            })
        }
    }
}

fn run_nmf(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let y = load_matrix(cfg)?;
    let mut problem = NmfProblem::new(y, cfg.rank, cfg.lambda, cfg.gamma)?.with_inner(
        InnerSettings {
            tol: cfg.inner_tol,
            max_iters: cfg.inner_max_iters,
        },
    );
    if let Some(mb) = cfg.minibatch {
        problem = problem.with_minibatch(mb)?;
    }
    let x0 = nmf::seeded_dictionary(&problem, cfg.seed);
    let l0 = match cfg.lipschitz {
        Some(l) => l,
        None => nmf::initial_lipschitz(&problem, &x0)?,
    };
    let c = cfg.c.unwrap_or_else(|| (0.02 / l0).min(0.1));
    let mut base = SolverConfig::new(c)
        .with_tol(cfg.residual_tol)
        .with_max_iters(cfg.max_iters)
        .with_trace_every(cfg.trace_every)
        .with_audit(cfg.audit);
    if let Some(eta) = cfg.eta {
        base = base.with_eta(EtaSchedule::Constant(eta));
    }
    if !matches!(cfg.error_model, ErrorSpec::None) {
        return Err(NipsError::Config(
            "nmf runs take no injected error model; inner tolerances supply the error".into(),
        ));
    }

    let out = match cfg.solver {
        SolverKind::Incremental => {
            let config = IncrementalConfig::new(base, cfg.variant).with_ordering(cfg.ordering);
            nmf::solve_nmf(&problem, &NmfInit::Seeded(cfg.seed), &config)?
        }
        SolverKind::Batch => {
            // one block spanning every column, driven by the batch solver
            let t = problem.y.ncols();
            let batch_problem = problem.clone().with_minibatch(t)?;
            let (decomposable, tracker, _) = nmf::build_decomposable(&batch_problem, &x0)?;
            let composite = decomposable.as_composite().with_lipschitz_tracker(tracker);
            let flat = Array1::from_iter(x0.iter().cloned());
            let solved = solve_batch(&composite, &flat, &base)?;
            let x_mat =
                ndarray::Array2::from_shape_vec((batch_problem.y.nrows(), cfg.rank), solved.x.to_vec())
                    .expect("dictionary shape");
            let (a_mat, recover_failures) = nmf::recover_coefficients(&batch_problem, &x_mat)?;
            let fit = nmf::relative_fit(&batch_problem, &x_mat, &a_mat);
            nips::nmf::NmfSolveResult {
                x: x_mat,
                a: a_mat,
                trace: solved.trace,
                status: solved.status,
                fit,
                inner_failures: recover_failures,
            }
        }
    };

    write_trace_if_requested(cfg, &out.trace)?;
    if let Some(prefix) = &cfg.factors_out {
        io::write_dense_csv(factor_path(prefix, "x"), &out.x)?;
        io::write_dense_csv(factor_path(prefix, "a"), &out.a)?;
    }
    let mut summary = String::new();
    summary.push_str(&format!("status = {}\n", status_label(&out.status)));
    summary.push_str(&format!(
        "iterations = {}\n",
        out.trace.last().map(|r| r.k).unwrap_or(0)
    ));
    summary.push_str(&format!(
        "phi = {:.16e}\n",
        out.trace.last().map(|r| r.phi).unwrap_or(f64::NAN)
    ));
    summary.push_str(&format!("fit = {:.16e}\n", out.fit));
    summary.push_str(&format!("sparsity_x = {}\n", nmf::sparsity(&out.x, 0.0)));
    summary.push_str(&format!("sparsity_a = {}\n", nmf::sparsity(&out.a, 0.0)));
    summary.push_str(&format!("inner_failures = {}\n", out.inner_failures));
    Ok(RunOutcome {
        status: out.status.clone(),
        summary,
    })
}

pub fn factor_path(prefix: &Path, which: &str) -> std::path::PathBuf {
    let mut name = prefix.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(format!(".{which}.csv"));
    prefix.with_file_name(name)
}

/// Build the configured problem, run the configured solver, and write the
/// requested trace/factor files. The summary string is printed by the CLI.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    match cfg.problem {
        ProblemKind::Nmf => run_nmf(cfg),
        ProblemKind::Quartic1d => {
            let smooth = problems::quartic_1d().smooth;
            let smooth = match cfg.lipschitz {
                Some(l) => override_lipschitz(&smooth, l)?,
                None => smooth,
            };
            let problem = CompositeProblem::new(smooth, build_reg(&cfg.reg)?);
            run_composite(cfg, &problem, &Array1::from_vec(vec![0.1]))
        }
        ProblemKind::SyntheticQuadratic => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let center = seeded_vec(&mut rng, cfg.dim, 3.0);
            let mut x0 = seeded_vec(&mut rng, cfg.dim, 3.0);
            let reg = build_reg(&cfg.reg)?;
            if matches!(cfg.reg, RegSpec::NonNeg | RegSpec::L1NonNeg(_)) {
                x0 = x0.mapv(f64::abs);
            }
            let smooth = match cfg.lipschitz {
                Some(l) => override_lipschitz(&SmoothOracle::quadratic(center), l)?,
                None => SmoothOracle::quadratic(center),
            };
            run_composite(cfg, &CompositeProblem::new(smooth, reg), &x0)
        }
        ProblemKind::CustomDecomposable => {
            let shifts: Vec<f64> = (1..=cfg.components).map(|t| t as f64).collect();
            let reg = build_reg(&cfg.reg)?;
            let problem = if cfg.dim == 1 {
                problems::quadratic_sum(&shifts, reg)?
            } else {
                let centers = shifts
                    .iter()
                    .map(|&s| Array1::from_elem(cfg.dim, s))
                    .collect();
                problems::quadratic_sum_nd(centers, reg)?
            };
            let x0 = Array1::zeros(cfg.dim);
            run_decomposable(cfg, &problem, &x0)
        }
    }
}

fn override_lipschitz(oracle: &SmoothOracle, l: f64) -> Result<SmoothOracle> {
    let value_src = oracle.clone();
    let grad_src = oracle.clone();
    SmoothOracle::new(
        oracle.dim(),
        l,
        std::sync::Arc::new(move |x| value_src.value(x)),
        std::sync::Arc::new(move |x| grad_src.grad(x)),
    )
}

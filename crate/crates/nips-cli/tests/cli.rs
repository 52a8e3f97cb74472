//! Exit-code contract and end-to-end behavior of the `nips` binary.

use std::path::Path;
use std::process::{Command, Output};

fn nips() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nips"))
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    nips().current_dir(dir).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process exited")
}

#[test]
fn quartic_run_exits_zero_with_monotone_objective() {
    let dir = tempfile::tempdir().unwrap();
    write(
        &dir.path().join("quartic.conf"),
        "problem = quartic_1d\nc = 0.01\nmax_iters = 300\nresidual_tol = 1e-8\ntrace_out = trace.csv\n",
    );
    let out = run_in(dir.path(), &["run", "quartic.conf"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("status = converged"), "{stdout}");

    // exact errors: the phi column must never increase
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let phis: Vec<f64> = trace
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert!(phis.len() > 10);
    for w in phis.windows(2) {
        assert!(w[1] <= w[0], "phi rose from {} to {}", w[0], w[1]);
    }
}

#[test]
fn stepsize_constant_violations_exit_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    // quartic has L around 11, so c = 200 violates c < 1/L
    write(
        &dir.path().join("bad.conf"),
        "problem = quartic_1d\nc = 200\nmax_iters = 10\n",
    );
    let out = run_in(dir.path(), &["run", "bad.conf"]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("configuration error"));
}

#[test]
fn unknown_config_key_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("bad.conf"), "problem = quartic_1d\nbogus = 1\n");
    let out = run_in(dir.path(), &["run", "bad.conf"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn missing_files_exit_with_io_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["run", "no_such.conf"]);
    assert_eq!(code(&out), 3);

    write(
        &dir.path().join("nmf.conf"),
        "problem = nmf\ndata_path = missing.mtx\ndata_format = matrix_market\nrank = 2\n",
    );
    let out = run_in(dir.path(), &["run", "nmf.conf"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn matrix_market_entry_count_mismatch_exits_with_io_code() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("bad.mtx"), "2 2 2\n1 1 3.5\n");
    write(
        &dir.path().join("nmf.conf"),
        "problem = nmf\ndata_path = bad.mtx\ndata_format = matrix_market\nrank = 1\n",
    );
    let out = run_in(dir.path(), &["run", "nmf.conf"]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn audit_violation_exits_with_audit_code() {
    let dir = tempfile::tempdir().unwrap();
    // an understated Lipschitz constant makes the descent-gap audit fail
    write(
        &dir.path().join("audit.conf"),
        "problem = synthetic_quadratic\nn = 4\nlipschitz = 0.01\naudit = true\nmax_iters = 50\nseed = 3\n",
    );
    let out = run_in(dir.path(), &["run", "audit.conf"]);
    assert_eq!(code(&out), 5, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("audit_violation"));
}

#[test]
fn verify_suites_report_and_exit() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["verify", "prox"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.lines().all(|l| l.starts_with("PASS")));

    // the hidden mutation fixture must drive a failing exit
    let out = run_in(
        dir.path(),
        &["verify", "lemmas", "--mutation", "mis-signed-a3"],
    );
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL lemmas/constants_positive"));

    let out = run_in(dir.path(), &["verify", "bogus"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn gen_is_deterministic_and_override_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["gen", "uniform_dense", "4x4", "7", "a.csv"]);
    assert_eq!(code(&out), 0);
    let out = run_in(dir.path(), &["gen", "uniform_dense", "4x4", "7", "b.csv"]);
    assert_eq!(code(&out), 0);
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);

    // --max-iters beats the file value: run stops early
    write(
        &dir.path().join("quad.conf"),
        "problem = synthetic_quadratic\nn = 3\nmax_iters = 500\nresidual_tol = 0\nseed = 1\n",
    );
    let out = run_in(dir.path(), &["run", "quad.conf", "--max-iters", "7"]);
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("iterations = 7"), "{stdout}");
}

#[test]
fn planted_nmf_run_reports_small_fit() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["gen", "planted_nmf", "12x16x2", "4", "y.csv"]);
    assert_eq!(code(&out), 0);
    write(
        &dir.path().join("nmf.conf"),
        "problem = nmf\ndata_path = y.csv\ndata_format = dense_csv\nrank = 2\n\
         max_iters = 80\nresidual_tol = 1e-4\nseed = 4\n",
    );
    let out = run_in(dir.path(), &["run", "nmf.conf"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let fit: f64 = stdout
        .lines()
        .find_map(|l| l.strip_prefix("fit = "))
        .expect("summary reports a fit")
        .trim()
        .parse()
        .unwrap();
    assert!(fit <= 0.05, "fit {fit} too large:\n{stdout}");
}

#[test]
fn incremental_run_honors_variant_and_ordering() {
    let dir = tempfile::tempdir().unwrap();
    write(
        &dir.path().join("sum.conf"),
        "problem = custom_decomposable\ncomponents = 5\nn = 1\nreg = l1:2.5\n\
         solver = incremental\nordering = shuffled:3\nminibatch = 2\n\
         c = 0.05\neta = 0.1\nmax_iters = 200\nresidual_tol = 0\ntrace_out = t.csv\n",
    );
    let out = run_in(
        dir.path(),
        &["run", "sum.conf", "--variant", "major_only"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("status = max_iters"));
    // a second run reproduces the shuffled trajectory
    let again = run_in(
        dir.path(),
        &["run", "sum.conf", "--variant", "major_only", "--trace-out", "t2.csv"],
    );
    assert_eq!(code(&again), 0);
    let strip = |name: &str| {
        std::fs::read_to_string(dir.path().join(name))
            .unwrap()
            .lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect::<Vec<_>>()
    };
    assert_eq!(strip("t.csv"), strip("t2.csv"));
}

#[test]
fn help_documents_the_exit_codes() {
    let out = nips().arg("--help").output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("Exit codes"));
    assert!(text.contains("NIPS_LOG_LEVEL"));
}

#[test]
fn sparse_gen_round_trips_through_nmf_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["gen", "sparse_uniform", "30x40", "5", "y.mtx", "--density", "0.2"],
    );
    assert_eq!(code(&out), 0);
    write(
        &dir.path().join("nmf.conf"),
        "problem = nmf\ndata_path = y.mtx\ndata_format = matrix_market\nrank = 2\nlambda = 0.05\ngamma = 0.05\nmax_iters = 20\nresidual_tol = 1e-4\nseed = 9\nfactors_out = out\n",
    );
    let out = run_in(dir.path(), &["run", "nmf.conf"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("out.x.csv").exists());
    assert!(dir.path().join("out.a.csv").exists());
}

//! Acceptance suite: one test per numbered criterion, each printing one
//! pass/fail line (run with `cargo test -p nips --test acceptance -- --nocapture`).
//! Criterion 13 is determinism; its binary-level half (identical CLI outputs
//! across runs) lives in the `nips-cli` acceptance suite.

use std::sync::OnceLock;
use std::time::Instant;

use nips::verify::{self, Mutation, Suite, VerifyReport};

const SEED: u64 = 0;

fn prox_report() -> &'static VerifyReport {
    static REPORT: OnceLock<VerifyReport> = OnceLock::new();
    REPORT.get_or_init(|| verify::prox_suite(SEED))
}

fn lemmas_report() -> &'static VerifyReport {
    static REPORT: OnceLock<VerifyReport> = OnceLock::new();
    REPORT.get_or_init(|| verify::lemmas_suite(SEED))
}

fn incremental_report() -> &'static VerifyReport {
    static REPORT: OnceLock<VerifyReport> = OnceLock::new();
    REPORT.get_or_init(|| verify::incremental_suite(SEED))
}

fn nmf_report() -> &'static VerifyReport {
    static REPORT: OnceLock<VerifyReport> = OnceLock::new();
    REPORT.get_or_init(|| verify::nmf_suite(SEED))
}

fn require(criterion: &str, check: &verify::CheckResult) {
    assert!(check.passed, "{criterion}: {} — {}", check.name, check.detail);
    println!("PASS {criterion}: {} — {}", check.name, check.detail);
}

#[test]
fn criterion_01_prox_oracle_agreement_under_30s() {
    let start = Instant::now();
    let report = verify::prox_suite(SEED);
    let elapsed = start.elapsed().as_secs_f64();
    let check = report.check("prox/oracle_agreement").unwrap();
    assert!(
        elapsed < 30.0,
        "criterion 1: prox suite took {elapsed:.1}s (>= 30s)"
    );
    require("criterion 1", check);
    println!("PASS criterion 1: full prox property suite ran in {elapsed:.2}s < 30s");
}

#[test]
fn criterion_02_nonexpansivity_sweep() {
    require("criterion 2", prox_report().check("prox/nonexpansive").unwrap());
}

#[test]
fn criterion_03_prox_monotonicity_sweep() {
    require("criterion 3", prox_report().check("prox/monotonicity").unwrap());
}

#[test]
fn criterion_04_exact_error_descent() {
    require(
        "criterion 4",
        lemmas_report().check("lemmas/exact_descent").unwrap(),
    );
}

#[test]
fn criterion_05_bounded_error_audits_and_constants() {
    require(
        "criterion 5",
        lemmas_report().check("lemmas/bounded_error_audits").unwrap(),
    );
    require(
        "criterion 5",
        lemmas_report().check("lemmas/constants_positive").unwrap(),
    );
    // the audit harness must be able to fail: a mis-signed constant is caught
    let mutated = verify::lemmas_suite_with(SEED, Some(Mutation::MisSignedA3));
    assert!(
        !mutated.check("lemmas/constants_positive").unwrap().passed,
        "criterion 5: mutation fixture was not detected"
    );
    println!("PASS criterion 5: mis-signed a3 mutation detected by the suite");
}

#[test]
fn criterion_06_residual_trend() {
    require(
        "criterion 6",
        lemmas_report().check("lemmas/residual_trend").unwrap(),
    );
}

#[test]
fn criterion_07_incremental_error_bounds() {
    require(
        "criterion 7",
        incremental_report().check("incremental/lemma_bounds").unwrap(),
    );
}

#[test]
fn criterion_08_batch_incremental_consistency() {
    require(
        "criterion 8",
        incremental_report().check("incremental/t1_bitwise").unwrap(),
    );
    require(
        "criterion 8",
        incremental_report()
            .check("incremental/quadsum_batch_agreement")
            .unwrap(),
    );
}

#[test]
fn criterion_09_nmf_desk_scale_under_10s() {
    let start = Instant::now();
    let planted = verify::planted_fit_check(SEED);
    let planted_secs = start.elapsed().as_secs_f64();
    require("criterion 9", &planted);
    assert!(
        planted_secs < 10.0,
        "criterion 9: planted 20x30 rank-3 solve took {planted_secs:.1}s (>= 10s)"
    );
    require("criterion 9", &verify::rank1_exact_check(SEED));
    println!("PASS criterion 9: planted problem solved in {planted_secs:.2}s < 10s");
}

#[test]
fn criterion_10_sparsity_strictly_increases_with_penalties() {
    require(
        "criterion 10",
        nmf_report().check("nmf/sparsity_monotone").unwrap(),
    );
}

#[test]
fn criterion_11_gradient_formula_matches_finite_differences() {
    require(
        "criterion 11",
        nmf_report().check("nmf/grad_finite_diff").unwrap(),
    );
}

#[test]
fn criterion_12_dykstra_matches_composition() {
    require(
        "criterion 12",
        prox_report().check("prox/dykstra_composition").unwrap(),
    );
}

#[test]
fn criterion_13_verify_all_is_deterministic() {
    let a = verify::run_suite(Suite::All, SEED);
    let b = verify::run_suite(Suite::All, SEED);
    assert_eq!(a.render(), b.render(), "criterion 13: reports differ");
    assert!(a.all_passed(), "criterion 13: verify all failed:\n{}", a.render());
    println!(
        "PASS criterion 13 (library): two verify-all runs rendered identically ({} checks)",
        a.checks.len()
    );
}

//! Experiment harness around the `nips` solvers: configuration files,
//! run orchestration, and exit-code mapping. The `nips` binary in this crate
//! is the command-line entry point.

// `!(x > 0.0)` deliberately treats NaN as out of range in input checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod runner;

use nips::batch::SolveStatus;
use nips::error::NipsError;

/// Exit codes documented in `nips --help`.
pub mod exit_codes {
    pub const OK: i32 = 0;
    pub const VERIFY_FAILED: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const IO: i32 = 3;
    pub const NUMERICAL: i32 = 4;
    pub const AUDIT_VIOLATION: i32 = 5;
}

pub fn exit_code_for_error(e: &NipsError) -> i32 {
    match e {
        NipsError::Config(_) | NipsError::InvalidInput(_) => exit_codes::CONFIG,
        NipsError::Io(_) | NipsError::Parse { .. } => exit_codes::IO,
        NipsError::Numerical(_)
        | NipsError::EmptySet(_)
        | NipsError::Oracle(_)
        | NipsError::DimensionMismatch { .. } => exit_codes::NUMERICAL,
    }
}

pub fn exit_code_for_status(status: &SolveStatus) -> i32 {
    match status {
        SolveStatus::Converged | SolveStatus::MaxIters => exit_codes::OK,
        SolveStatus::AuditViolation(_) => exit_codes::AUDIT_VIOLATION,
    }
}

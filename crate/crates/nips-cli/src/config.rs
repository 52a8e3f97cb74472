//! Flat key-value experiment configuration with command-line overrides.
//!
//! Files hold one `key = value` pair per line; blank lines and lines starting
//! with `#` are skipped. Later keys win. `serialize` emits the canonical
//! form, so `serialize(parse(file))` is idempotent.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nips::error::{NipsError, Result};
use nips::incremental::{OperatorVariant, Ordering};
use nips::io::MatrixFormat;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Nmf,
    SyntheticQuadratic,
    Quartic1d,
    CustomDecomposable,
}

impl ProblemKind {
    fn parse(s: &str) -> Result<Self> {
        match s {
            "nmf" => Ok(Self::Nmf),
            "synthetic_quadratic" => Ok(Self::SyntheticQuadratic),
            "quartic_1d" => Ok(Self::Quartic1d),
            "custom_decomposable" => Ok(Self::CustomDecomposable),
            other => Err(NipsError::Config(format!("unknown problem kind {other}"))),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Self::Nmf => "nmf",
            Self::SyntheticQuadratic => "synthetic_quadratic",
            Self::Quartic1d => "quartic_1d",
            Self::CustomDecomposable => "custom_decomposable",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSpec {
    File { path: PathBuf, format: MatrixFormat },
    /// `uniform:MxN`, `planted:MxTxK`, or `sparse:MxN:DENSITY`; drawn with
    /// the experiment seed.
    Synthetic(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Batch,
    Incremental,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RegSpec {
    Zero,
    NonNeg,
    L1(f64),
    L1NonNeg(f64),
}

impl RegSpec {
    fn parse(s: &str) -> Result<Self> {
        if s == "zero" {
            return Ok(Self::Zero);
        }
        if s == "nonneg" {
            return Ok(Self::NonNeg);
        }
        if let Some(w) = s.strip_prefix("l1_nonneg:") {
            return Ok(Self::L1NonNeg(parse_f64("reg", w)?));
        }
        if let Some(w) = s.strip_prefix("l1:") {
            return Ok(Self::L1(parse_f64("reg", w)?));
        }
        Err(NipsError::Config(format!("unknown regularizer spec {s}")))
    }

    fn render(&self) -> String {
        match self {
            Self::Zero => "zero".into(),
            Self::NonNeg => "nonneg".into(),
            Self::L1(w) => format!("l1:{w}"),
            Self::L1NonNeg(w) => format!("l1_nonneg:{w}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErrorSpec {
    None,
    /// `gaussian:SIGMA` clipped to the configured error bound.
    Gaussian(f64),
    /// `fixed:MAGNITUDE` along the all-ones direction.
    Fixed(f64),
}

impl ErrorSpec {
    fn parse(s: &str) -> Result<Self> {
        if s == "none" {
            return Ok(Self::None);
        }
        if let Some(v) = s.strip_prefix("gaussian:") {
            return Ok(Self::Gaussian(parse_f64("error_model", v)?));
        }
        if let Some(v) = s.strip_prefix("fixed:") {
            return Ok(Self::Fixed(parse_f64("error_model", v)?));
        }
        Err(NipsError::Config(format!("unknown error model {s}")))
    }

    fn render(&self) -> String {
        match self {
            Self::None => "none".into(),
            Self::Gaussian(s) => format!("gaussian:{s}"),
            Self::Fixed(m) => format!("fixed:{m}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    pub data: Option<DataSpec>,
    // nmf
    pub rank: usize,
    pub lambda: f64,
    pub gamma: f64,
    pub inner_tol: f64,
    pub inner_max_iters: usize,
    // synthetic problems
    pub dim: usize,
    pub components: usize,
    pub reg: RegSpec,
    // solver
    pub solver: SolverKind,
    pub variant: OperatorVariant,
    pub ordering: Ordering,
    pub minibatch: Option<usize>,
    pub c: Option<f64>,
    pub eta: Option<f64>,
    pub lipschitz: Option<f64>,
    pub error_model: ErrorSpec,
    pub error_bound: f64,
    pub seed: u64,
    pub max_iters: usize,
    pub residual_tol: f64,
    pub trace_every: usize,
    pub audit: bool,
    // output
    pub trace_out: Option<PathBuf>,
    pub factors_out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: ProblemKind::SyntheticQuadratic,
            data: None,
            rank: 2,
            lambda: 0.0,
            gamma: 0.0,
            inner_tol: 1e-6,
            inner_max_iters: 2000,
            dim: 5,
            components: 5,
            reg: RegSpec::Zero,
            solver: SolverKind::Batch,
            variant: OperatorVariant::MinorProx,
            ordering: Ordering::Cyclic,
            minibatch: None,
            c: None,
            eta: None,
            lipschitz: None,
            error_model: ErrorSpec::None,
            error_bound: 0.0,
            seed: 0,
            max_iters: 1000,
            residual_tol: 1e-8,
            trace_every: 1,
            audit: false,
            trace_out: None,
            factors_out: None,
        }
    }
}

fn parse_f64(key: &str, s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| NipsError::Config(format!("cannot parse {key} value '{s}' as a number")))
}

fn parse_usize(key: &str, s: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| NipsError::Config(format!("cannot parse {key} value '{s}' as a count")))
}

fn parse_u64(key: &str, s: &str) -> Result<u64> {
    s.trim()
        .parse()
        .map_err(|_| NipsError::Config(format!("cannot parse {key} value '{s}' as an integer")))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut data_path: Option<PathBuf> = None;
        let mut data_format: Option<MatrixFormat> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                NipsError::Config(format!("line {line_no}: expected 'key = value', got '{line}'"))
            })?;
            let key = key.trim();
            let value = value.trim();
            match key {
                "problem" => cfg.problem = ProblemKind::parse(value)?,
                "data_path" => data_path = Some(PathBuf::from(value)),
                "data_format" => data_format = Some(MatrixFormat::parse(value)?),
                "synthetic" => cfg.data = Some(DataSpec::Synthetic(value.to_string())),
                "rank" => cfg.rank = parse_usize(key, value)?,
                "lambda" => cfg.lambda = parse_f64(key, value)?,
                "gamma" => cfg.gamma = parse_f64(key, value)?,
                "inner_tol" => cfg.inner_tol = parse_f64(key, value)?,
                "inner_max_iters" => cfg.inner_max_iters = parse_usize(key, value)?,
                "n" => cfg.dim = parse_usize(key, value)?,
                "components" => cfg.components = parse_usize(key, value)?,
                "reg" => cfg.reg = RegSpec::parse(value)?,
                "solver" => {
                    cfg.solver = match value {
                        "batch" => SolverKind::Batch,
                        "incremental" => SolverKind::Incremental,
                        other => {
                            return Err(NipsError::Config(format!("unknown solver {other}")))
                        }
                    }
                }
                "variant" => cfg.variant = parse_variant(value)?,
                "ordering" => {
                    cfg.ordering = if value == "cyclic" {
                        Ordering::Cyclic
                    } else if let Some(seed) = value.strip_prefix("shuffled:") {
                        Ordering::Shuffled {
                            seed: parse_u64(key, seed)?,
                        }
                    } else {
                        return Err(NipsError::Config(format!("unknown ordering {value}")));
                    }
                }
                "minibatch" => {
                    cfg.minibatch = if value == "auto" {
                        None
                    } else {
                        Some(parse_usize(key, value)?)
                    }
                }
                "c" => cfg.c = parse_auto_f64(key, value)?,
                "eta" => cfg.eta = parse_auto_f64(key, value)?,
                "lipschitz" => cfg.lipschitz = parse_auto_f64(key, value)?,
                "error_model" => cfg.error_model = ErrorSpec::parse(value)?,
                "error_bound" => cfg.error_bound = parse_f64(key, value)?,
                "seed" => cfg.seed = parse_u64(key, value)?,
                "max_iters" => cfg.max_iters = parse_usize(key, value)?,
                "residual_tol" => cfg.residual_tol = parse_f64(key, value)?,
                "trace_every" => cfg.trace_every = parse_usize(key, value)?,
                "audit" => {
                    cfg.audit = match value {
                        "true" => true,
                        "false" => false,
                        other => {
                            return Err(NipsError::Config(format!(
                                "audit must be true or false, got {other}"
                            )))
                        }
                    }
                }
                "trace_out" => cfg.trace_out = Some(PathBuf::from(value)),
                "factors_out" => cfg.factors_out = Some(PathBuf::from(value)),
                other => {
                    return Err(NipsError::Config(format!(
                        "line {line_no}: unknown configuration key '{other}'"
                    )))
                }
            }
        }
        if let Some(path) = data_path {
            let format = data_format.ok_or_else(|| {
                NipsError::Config("data_path requires data_format".into())
            })?;
            cfg.data = Some(DataSpec::File { path, format });
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Range checks that do not need the problem instance.
    pub fn validate(&self) -> Result<()> {
        if let Some(c) = self.c {
            if !(c > 0.0) {
                return Err(NipsError::Config(format!("c must be positive, got {c}")));
            }
        }
        if let Some(eta) = self.eta {
            if !(eta > 0.0) || eta > 1.0 {
                return Err(NipsError::Config(format!(
                    "a constant eta must lie in (0, 1], got {eta}"
                )));
            }
        }
        if !(self.residual_tol >= 0.0) {
            return Err(NipsError::Config("residual_tol must be nonnegative".into()));
        }
        if !(self.lambda >= 0.0) || !(self.gamma >= 0.0) {
            return Err(NipsError::Config("penalties must be nonnegative".into()));
        }
        if self.trace_every == 0 {
            return Err(NipsError::Config("trace_every must be at least 1".into()));
        }
        if !(self.error_bound >= 0.0) {
            return Err(NipsError::Config("error_bound must be nonnegative".into()));
        }
        Ok(())
    }

    /// Canonical text form (stable key order).
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "problem = {}", self.problem.name());
        match &self.data {
            Some(DataSpec::File { path, format }) => {
                let _ = writeln!(out, "data_path = {}", path.display());
                let fmt = match format {
                    MatrixFormat::MatrixMarket => "matrix_market",
                    MatrixFormat::DenseCsv => "dense_csv",
                };
                let _ = writeln!(out, "data_format = {fmt}");
            }
            Some(DataSpec::Synthetic(spec)) => {
                let _ = writeln!(out, "synthetic = {spec}");
            }
            None => {}
        }
        let _ = writeln!(out, "rank = {}", self.rank);
        let _ = writeln!(out, "lambda = {}", self.lambda);
        let _ = writeln!(out, "gamma = {}", self.gamma);
        let _ = writeln!(out, "inner_tol = {}", self.inner_tol);
        let _ = writeln!(out, "inner_max_iters = {}", self.inner_max_iters);
        let _ = writeln!(out, "n = {}", self.dim);
        let _ = writeln!(out, "components = {}", self.components);
        let _ = writeln!(out, "reg = {}", self.reg.render());
        let _ = writeln!(
            out,
            "solver = {}",
            match self.solver {
                SolverKind::Batch => "batch",
                SolverKind::Incremental => "incremental",
            }
        );
        let _ = writeln!(
            out,
            "variant = {}",
            match self.variant {
                OperatorVariant::MajorOnly => "major_only",
                OperatorVariant::MinorProx => "minor_prox",
            }
        );
        let _ = writeln!(
            out,
            "ordering = {}",
            match self.ordering {
                Ordering::Cyclic => "cyclic".to_string(),
                Ordering::Shuffled { seed } => format!("shuffled:{seed}"),
            }
        );
        let _ = writeln!(
            out,
            "minibatch = {}",
            self.minibatch
                .map(|m| m.to_string())
                .unwrap_or_else(|| "auto".into())
        );
        let render_auto =
            |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_else(|| "auto".into());
        let _ = writeln!(out, "c = {}", render_auto(self.c));
        let _ = writeln!(out, "eta = {}", render_auto(self.eta));
        let _ = writeln!(out, "lipschitz = {}", render_auto(self.lipschitz));
        let _ = writeln!(out, "error_model = {}", self.error_model.render());
        let _ = writeln!(out, "error_bound = {}", self.error_bound);
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "max_iters = {}", self.max_iters);
        let _ = writeln!(out, "residual_tol = {}", self.residual_tol);
        let _ = writeln!(out, "trace_every = {}", self.trace_every);
        let _ = writeln!(out, "audit = {}", self.audit);
        if let Some(p) = &self.trace_out {
            let _ = writeln!(out, "trace_out = {}", p.display());
        }
        if let Some(p) = &self.factors_out {
            let _ = writeln!(out, "factors_out = {}", p.display());
        }
        out
    }
}

fn parse_auto_f64(key: &str, value: &str) -> Result<Option<f64>> {
    if value == "auto" {
        Ok(None)
    } else {
        parse_f64(key, value).map(Some)
    }
}

pub fn parse_variant(value: &str) -> Result<OperatorVariant> {
    match value {
        "major_only" => Ok(OperatorVariant::MajorOnly),
        "minor_prox" => Ok(OperatorVariant::MinorProx),
        other => Err(NipsError::Config(format!("unknown variant {other}"))),
    }
}

/// Command-line overrides; flags beat file values (last-wins).
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub trace_out: Option<PathBuf>,
    pub audit: Option<bool>,
    pub seed: Option<u64>,
    pub max_iters: Option<usize>,
    pub tol: Option<f64>,
    pub eta: Option<f64>,
    pub c: Option<f64>,
    pub error_bound: Option<f64>,
    pub variant: Option<OperatorVariant>,
    pub minibatch: Option<usize>,
    pub factors_out: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) -> Result<()> {
        if let Some(p) = &self.trace_out {
            cfg.trace_out = Some(p.clone());
        }
        if let Some(a) = self.audit {
            cfg.audit = a;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(m) = self.max_iters {
            cfg.max_iters = m;
        }
        if let Some(t) = self.tol {
            cfg.residual_tol = t;
        }
        if let Some(e) = self.eta {
            cfg.eta = Some(e);
        }
        if let Some(c) = self.c {
            cfg.c = Some(c);
        }
        if let Some(b) = self.error_bound {
            cfg.error_bound = b;
        }
        if let Some(v) = self.variant {
            cfg.variant = v;
        }
        if let Some(m) = self.minibatch {
            cfg.minibatch = Some(m);
        }
        if let Some(p) = &self.factors_out {
            cfg.factors_out = Some(p.clone());
        }
        cfg.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# comment line
problem = quartic_1d
seed = 7
max_iters = 120
residual_tol = 1e-6
c = 0.01
audit = true
";

    #[test]
    fn parse_and_roundtrip() {
        let cfg = ExperimentConfig::parse(SAMPLE).unwrap();
        assert_eq!(cfg.problem, ProblemKind::Quartic1d);
        assert_eq!(cfg.seed, 7);
        assert!(cfg.audit);
        let once = cfg.serialize();
        let twice = ExperimentConfig::parse(&once).unwrap().serialize();
        assert_eq!(once, twice);
        assert_eq!(ExperimentConfig::parse(&once).unwrap(), cfg);
    }

    #[test]
    fn unknown_key_is_an_error() {
        let err = ExperimentConfig::parse("bogus = 1\n").unwrap_err();
        assert!(matches!(err, NipsError::Config(_)));
        assert!(err.to_string().contains("line 1"));
    }

    #[test]
    fn last_key_wins() {
        let cfg = ExperimentConfig::parse("seed = 1\nseed = 2\n").unwrap();
        assert_eq!(cfg.seed, 2);
    }

    #[test]
    fn overrides_beat_file_values() {
        let mut cfg = ExperimentConfig::parse(SAMPLE).unwrap();
        let ov = Overrides {
            seed: Some(99),
            tol: Some(1e-3),
            ..Default::default()
        };
        ov.apply(&mut cfg).unwrap();
        assert_eq!(cfg.seed, 99);
        assert_eq!(cfg.residual_tol, 1e-3);
    }

    #[test]
    fn invalid_numeric_ranges_rejected() {
        assert!(ExperimentConfig::parse("residual_tol = -1\n").is_err());
        assert!(ExperimentConfig::parse("eta = 1.5\n").is_err());
        assert!(ExperimentConfig::parse("lambda = -0.1\n").is_err());
    }
}

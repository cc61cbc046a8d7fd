use thiserror::Error;

/// The linkage cannot be closed at the requested crank angle.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum AssemblyError {
    #[error("link lengths must be strictly positive")]
    NonPositiveLength,
    #[error("degenerate geometry (zero-length coupler or crank tip on the output pivot)")]
    Degenerate,
    #[error("loop cannot be closed at crank angle {theta1}")]
    NoSolution { theta1: f64 },
}

/// G4 repair could not produce a Grashof linkage.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("Grashof repair did not converge after {passes} passes")]
pub struct RepairFailure {
    pub passes: usize,
}

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("unknown built-in case `{0}` (expected 1, 2, 2r or 3)")]
    UnknownCase(String),
    #[error("design vector has {got} genes, case `{case}` expects {expected}")]
    LengthMismatch {
        case: String,
        expected: usize,
        got: usize,
    },
    #[error("invalid case definition: {0}")]
    Invalid(String),
    #[error("case file: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("population size {0} is too small, best/1 needs at least 4 members")]
    PopulationTooSmall(usize),
    #[error("itermax must be at least 1")]
    NoGenerations,
    #[error("{name} = {value} is outside [0, 1]")]
    RateOutOfRange { name: &'static str, value: f64 },
    #[error("differential weight must be finite and non-negative, got {0}")]
    BadWeight(f64),
    #[error("DE strategy {0} is not supported (only 6 = best/1/bin)")]
    UnsupportedStrategy(u32),
    #[error("max_retries must be at least 1")]
    NoRetries,
    #[error("runs must be at least 1")]
    NoRuns,
}

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

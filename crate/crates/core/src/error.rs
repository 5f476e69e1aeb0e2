use thiserror::Error;

/// Errors produced anywhere in the solver pipeline.
#[derive(Debug, Error)]
pub enum MfsError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("degenerate parametrization of `{curve}` at t = {t}: zero tangent")]
    DegenerateParametrization { curve: String, t: f64 },

    #[error("kernel singularity: {0}")]
    Singularity(String),

    #[error("geometric constraint violated: max eps_j * R_Omega >= 1 (margin {margin:.3e})")]
    ConstraintViolation { margin: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("rank deficiency: {0}")]
    RankDeficient(String),

    #[error("Arnoldi breakdown at step {step}: subdiagonal {value:.3e}")]
    ArnoldiBreakdown { step: usize, value: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl MfsError {
    /// Process exit code used by the `mfs` binary.
    pub fn exit_code(&self) -> i32 {
        match self {
            MfsError::Config(_)
            | MfsError::Argument(_)
            | MfsError::Shape(_)
            | MfsError::Unsupported(_)
            | MfsError::InsufficientData(_) => 2,
            MfsError::DegenerateParametrization { .. }
            | MfsError::Singularity(_)
            | MfsError::ConstraintViolation { .. }
            | MfsError::Domain(_)
            | MfsError::RankDeficient(_)
            | MfsError::ArnoldiBreakdown { .. }
            | MfsError::Linalg(_) => 3,
            MfsError::Io(_) | MfsError::Csv(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, MfsError>;

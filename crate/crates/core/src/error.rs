use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("basis is not orthonormal (max Gram deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },

    #[error("bases are not complementary: |<mu={mu}|k={k}>| = {modulus:e} < eta = {eta:e}")]
    NonComplementaryPair {
        mu: usize,
        k: usize,
        modulus: f64,
        eta: f64,
    },

    #[error("invalid observable: {0}")]
    InvalidObservable(String),

    #[error("invalid meter state: {0}")]
    InvalidMeter(String),

    #[error("meter has zero momentum spread, lambda-tilde undefined")]
    ZeroMomentumSpread,

    #[error("pointer shift {shift} exceeds grid safety bound {limit} (extent/4)")]
    GridWrapAround { shift: f64, limit: f64 },

    #[error("Re(lambda * conj(lambda_tilde)) = {value:e} is too small relative to |lambda| |lambda_tilde| to recover Im W11")]
    DegenerateRecovery { value: f64 },

    #[error("|lambda| = {modulus:e}: first measurement too strong, only populations are recoverable")]
    StrongCouplingSingular { modulus: f64, populations: Vec<f64> },

    #[error("|lambda| = {modulus:e} is too small for the observable transform")]
    SingularTransform { modulus: f64 },

    #[error("reconstructed trace {trace} deviates from 1; correlations are inconsistent")]
    InconsistentTrace { trace: f64 },

    #[error("reconstructed matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPhysical { min_eigenvalue: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable identifier.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::InvalidDensityMatrix(_) => "invalid_density_matrix",
            Error::NotOrthonormal { .. } => "not_orthonormal",
            Error::NonComplementaryPair { .. } => "non_complementary_pair",
            Error::InvalidObservable(_) => "invalid_observable",
            Error::InvalidMeter(_) => "invalid_meter",
            Error::ZeroMomentumSpread => "zero_momentum_spread",
            Error::GridWrapAround { .. } => "grid_wrap_around",
            Error::DegenerateRecovery { .. } => "degenerate_recovery",
            Error::StrongCouplingSingular { .. } => "strong_coupling_singular",
            Error::SingularTransform { .. } => "singular_transform",
            Error::InconsistentTrace { .. } => "inconsistent_trace",
            Error::NotPhysical { .. } => "not_physical",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }

    /// Process exit status: 2 for bad input, 3 for numerical or physicality
    /// failures, 4 when the coupling destroyed the coherences, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DimensionMismatch { .. }
            | Error::InvalidDensityMatrix(_)
            | Error::NotOrthonormal { .. }
            | Error::NonComplementaryPair { .. }
            | Error::InvalidObservable(_)
            | Error::InvalidMeter(_)
            | Error::ZeroMomentumSpread
            | Error::GridWrapAround { .. }
            | Error::Config(_)
            | Error::Json(_) => 2,
            Error::DegenerateRecovery { .. } | Error::InconsistentTrace { .. } | Error::NotPhysical { .. } => 3,
            Error::StrongCouplingSingular { .. } | Error::SingularTransform { .. } => 4,
            Error::Io(_) | Error::Csv(_) => 1,
        }
    }
}

use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid dimension N = {0}, need N >= 2")]
    InvalidDimension(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (max anti-Hermitian residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("generator basis violates {what} (residual {residual:.3e})")]
    InvalidBasis { what: &'static str, residual: f64 },

    #[error("trace is {trace}, expected 1")]
    TraceNotUnity { trace: f64 },

    #[error("density matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("state is not normalized (deviation {deviation:.3e})")]
    NotNormalized { deviation: f64 },

    #[error("commutator [λ_{i}, λ_{j}] is not reproduced by the structure constants (residual {residual:.3e})")]
    InconsistentStructure { i: usize, j: usize, residual: f64 },

    #[error("conflicting structure constant for ({i}, {j}, {k}): {first} vs {second}")]
    ConflictingEntry {
        i: usize,
        j: usize,
        k: usize,
        first: f64,
        second: f64,
    },

    #[error("channel {channel} does not commute with the Hamiltonian (|h⊙l| = {residual:.3e})")]
    NotCommuting { channel: usize, residual: f64 },

    #[error("invalid gamma profile: {0}")]
    InvalidGamma(String),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("unsupported series order {order} (max {max})")]
    UnsupportedOrder { order: usize, max: usize },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("integration diverged at t = {time}: {reason}")]
    Diverged { time: f64, reason: String },

    #[error("empty ensemble")]
    EmptyEnsemble,
}

use alloc::string::String;

/// Errors raised by the simulation and estimation routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("qubit count mismatch: {left} vs {right}")]
    QubitMismatch { left: usize, right: usize },

    #[error("{qubits} qubits exceeds the dense simulation cap of {cap}")]
    TooManyQubits { qubits: usize, cap: usize },

    #[error("qubit count must be between 1 and 64, got {0}")]
    InvalidQubitCount(usize),

    #[error("matrix dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not unitary (max deviation {0:e})")]
    NotUnitary(f64),

    #[error("not a valid density matrix: {0}")]
    InvalidDensityMatrix(&'static str),

    #[error("state is not normalized (squared norm {0})")]
    NotNormalized(f64),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid Pauli character {0:?} (expected one of I, X, Y, Z)")]
    InvalidPauliChar(char),

    #[error("parameter vector has length {found}, circuit expects {expected}")]
    ParameterCount { expected: usize, found: usize },

    #[error("parameter index {index} out of range for {count} parameters")]
    ParameterOutOfRange { index: usize, count: usize },

    #[error("gate index {index} out of range for {count} gates")]
    GateOutOfRange { index: usize, count: usize },

    #[error("gate {gate} has no parametric term {pauli}")]
    UnknownTerm { gate: usize, pauli: String },

    #[error("duplicate term {0} in gate generator")]
    DuplicateTerm(String),

    #[error("parameter-shift rule needs a drift-free slice, but the fixed part has {0} terms (H != 0)")]
    PsrDrift(usize),

    #[error("parameter-shift rule needs exactly two distinct generator eigenvalues, found {0}")]
    PsrSpectrum(usize),

    #[error("shift target must square to the identity")]
    TargetNotInvolution,

    #[error("all Jacobian entries for parameter {0} vanish")]
    ZeroJacobian(usize),

    #[error("shot count must be at least 1")]
    ZeroShots,

    #[error("approximate-gate strength epsilon must be positive, got {0}")]
    InvalidEpsilon(f64),

    #[error("quadrature needs at least one node")]
    ZeroQuadrature,

    #[error("partial trace needs a non-empty set of kept qubits")]
    EmptyKeepSet,

    #[error("qubit index {index} out of range for {qubits} qubits")]
    QubitOutOfRange { index: usize, qubits: usize },

    #[error("regularized metric is singular; increase the regularizer")]
    SingularMetric,

    #[error("environment of {0} qubits exceeds the cap of 2")]
    EnvironmentTooLarge(usize),

    #[error("derivative with respect to tau is not measurable for noisy gate '{spec}': {reason}")]
    TauGradientUnsupported { spec: String, reason: &'static str },

    #[error("pulse horizon must be positive, got {0}")]
    NonPositiveHorizon(f64),

    #[error("{0}")]
    InvalidArgument(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

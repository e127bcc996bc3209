use alloc::string::String;

use crate::stability::SubspaceWitness;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("matrix is {rows}x{cols}, expected a square matrix")]
    NonSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("ambient dimension must be at least 1")]
    InvalidAmbient,
    #[error("point {index} is the zero vector")]
    ZeroVector { index: usize },
    #[error("point {index} has non-positive multiplicity {value}")]
    NonPositiveMultiplicity { index: usize, value: String },
    #[error("configuration has no points")]
    EmptyConfiguration,
    #[error("{count} distinct vectors exceed the exact enumeration limit of {limit}")]
    TooManyVectors { count: usize, limit: usize },
    #[error("columns are linearly dependent")]
    RankDeficient,
    #[error("subspace is not tight: mass {mass} but d*k/(N+1) = {bound}")]
    NotTight { mass: String, bound: String },
    #[error("basis vectors are not linearly independent")]
    DependentBasis,
    #[error("index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("configuration is unstable")]
    Unstable { witness: SubspaceWitness },
    #[error("configuration is not stable")]
    NotStable,
    #[error("multiplicity {0} is not an integer")]
    NonIntegerMultiplicity(String),
    #[error("section vanishes at the given point")]
    ZeroSectionValue,
    #[error("non-finite entry in complex matrix")]
    NonFinite,
    #[error("invalid Hermitian scaling: {0}")]
    InvalidScaling(&'static str),
    #[error("invalid rational literal {0:?}")]
    ParseRational(String),
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("integer too large to factor: {0}")]
    FactorizationTooLarge(String),
    #[error("invariant section does not match the configuration: {0}")]
    SectionMismatch(&'static str),
    #[error("internal invariant violated: {0}")]
    Internal(&'static str),
}

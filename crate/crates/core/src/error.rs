use thiserror::Error;

/// Errors raised by the sieve, quadrature and ensemble routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("{0} is not squarefree")]
    NotSquarefree(u64),
    #[error("condition set for p = {p} has {size} residues; at least one class must survive")]
    FullResidueSet { p: u64, size: usize },
    #[error("residue {residue} is out of range for modulus {p}")]
    ResidueOutOfRange { p: u64, residue: u64 },
    #[error("prime {p} exceeds the sieve bound {bound}")]
    PrimeAboveBound { p: u64, bound: u64 },
    #[error("no amplifier supplied for prime {0}")]
    MissingPrime(u64),
    #[error("weight for prime {p} must be non-negative, got {weight}")]
    NegativeWeight { p: u64, weight: String },
    #[error("coefficient vector is identically zero")]
    ZeroVector,
    #[error("dimension {dim} exceeds the dense limit {limit}")]
    DimensionOverflow { dim: usize, limit: usize },
    #[error("power iteration did not reach tolerance after {0} iterations")]
    NotConverged(usize),
    #[error("argument {0} lies outside [-2, 2]")]
    OutOfRange(f64),
    #[error("no local value supplied for prime {0}")]
    MissingLocalValue(u64),
    #[error("polynomial degrees differ: expected {expected}, found {found} at p = {p}")]
    DegreeMismatch { p: u64, expected: usize, found: usize },
    #[error("degenerate polynomial at p = {p}: {reason}")]
    Degenerate { p: u64, reason: &'static str },
    #[error("{0} is not supported on the friable set")]
    OutsideSupport(u64),
    #[error("ensemble form {form} is missing the eigenvalue at p = {p}")]
    IncompleteEnsemble { form: String, p: u64 },
    #[error("ensemble form {form}: {reason}")]
    InvalidForm { form: String, reason: String },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

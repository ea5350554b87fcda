use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid weight sequence: {0}")]
    InvalidWeights(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("series diverges at t = {t}")]
    Divergent { t: f64 },

    #[error("composition needs w_0 = 0, found w_0 = {0}")]
    NonzeroConstantTerm(f64),

    #[error("partition function vanishes at n = {0}")]
    ZeroPartitionFunction(usize),

    #[error("cannot certify truncation of N: residual mass {residual:e} at ell = {ell}")]
    UncertifiableTail { ell: usize, residual: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("phase mismatch: {verifier} needs {expected}, scheme is {found}")]
    PhaseMismatch {
        verifier: String,
        expected: String,
        found: String,
    },

    #[error("rejection sampler gave up after {attempts} attempts ({accepted} accepted)")]
    AttemptCap { attempts: u64, accepted: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;

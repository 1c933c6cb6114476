use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("singular basis: |r[{index},{index}]| = {value:e} is below the rank tolerance")]
    SingularBasis { index: usize, value: f64 },

    #[error("dimension {n} exceeds the limit of {max} for exhaustive enumeration")]
    DimensionTooLarge { n: usize, max: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("node cap of {cap} visited nodes exceeded")]
    NodeCapExceeded { cap: u64 },

    #[error("bit count {bits} is not a multiple of {bits_per_symbol} bits per symbol")]
    InvalidBitCount { bits: usize, bits_per_symbol: usize },

    #[error("regularized radius undefined: ln K = {ln_k} is below ln of the mass product {ln_mass}")]
    RadiusUndefined { ln_k: f64, ln_mass: f64 },

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

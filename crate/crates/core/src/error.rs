use thiserror::Error;

/// Errors produced anywhere in the simulation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: `{field}` {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("time grid under-resolved: {0}")]
    Resolution(String),

    #[error("inner SFA integral did not converge at t = {t} a.u.")]
    NonConvergent { t: f64 },

    #[error("unsupported envelope for {0}: only a flat envelope is exactly periodic")]
    UnsupportedEnvelope(&'static str),

    #[error("Fock truncation n_max = {n_max} leaves tail mass {tail:.3e} (limit {limit:.0e}); use n_max >= {suggested}")]
    Truncation {
        n_max: usize,
        tail: f64,
        limit: f64,
        suggested: usize,
    },

    #[error("phase sum aliases: n_phi = {n_phi} must exceed q * n_max = {product}; smallest admissible n_phi is {min}")]
    Aliasing {
        n_phi: usize,
        product: usize,
        min: usize,
    },

    #[error("scan needs at least 3 kappa values, got {0}")]
    InsufficientScan(usize),

    #[error("test functional is not finite at E = {re} + {im}i")]
    Divergent { re: f64, im: f64 },

    #[error("quadrature did not reach tolerance: {0}")]
    Quadrature(String),

    #[error("density matrix invalid: {0}")]
    InvalidState(String),

    #[error("schema mismatch in {file}: {reason}")]
    Schema { file: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &str, reason: impl Into<String>) -> Error {
    Error::InvalidConfig {
        field: field.to_string(),
        reason: reason.into(),
    }
}

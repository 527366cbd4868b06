use thiserror::Error;

/// Errors raised while building or combining fields.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("grid resolution must be an even integer >= 4, got {0}")]
    InvalidResolution(usize),
    #[error("grid mismatch: {left} vs {right} points per dimension")]
    GridMismatch { left: usize, right: usize },
    #[error("non-finite sample in component {component} at flat index {index}")]
    NonFinite { component: usize, index: usize },
    #[error("field is identically zero")]
    ZeroField,
}

/// Numerical failures of the time integrators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("integration blew up (non-finite values) at t = {t}")]
    Blowup { t: f64 },
    #[error("non-positive density {min_density} at t = {t}")]
    NegativeDensity { t: f64, min_density: f64 },
    #[error("CFL violation at t = {t}: dt = {dt} exceeds limit {limit}")]
    Cfl { t: f64, dt: f64, limit: f64 },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Snapshot and CSV persistence errors.
#[derive(Debug, Error)]
pub enum IoError {
    #[error("bad snapshot magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported snapshot version {0}")]
    UnsupportedVersion(u32),
    #[error("snapshot truncated or malformed: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Rejected run configuration. `key` is the dotted path of the offending
/// entry, empty for document-level problems.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{}{message}", key_prefix(key))]
    Invalid { key: String, message: String },
    #[error("cannot read {path}: {source}")]
    Read {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
}

fn key_prefix(key: &str) -> String {
    if key.is_empty() {
        String::new()
    } else {
        format!("`{key}`: ")
    }
}

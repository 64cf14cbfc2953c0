use thiserror::Error;

/// Errors produced by grid construction, metric evaluation, and the harnesses.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: expected {expected_width}x{expected_height}, got {got_width}x{got_height}")]
    ShapeMismatch {
        expected_width: usize,
        expected_height: usize,
        got_width: usize,
        got_height: usize,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// Every weighted count divides by foreground mass, so an all-background
    /// ground truth has no defined metric value.
    #[error("ground truth contains no foreground pixels; the weighted metrics are undefined")]
    AllBackground,

    #[error("ground truth contains a single class; AUROC is undefined")]
    SingleClass,

    #[error("image has {pixels} pixels, above the exact-oracle cap of {cap}; pass the large-oracle override to proceed")]
    SizeCapExceeded { pixels: usize, cap: usize },

    #[error("forward cache was built from different inputs")]
    StaleCache,
}

pub type Result<T> = std::result::Result<T, Error>;

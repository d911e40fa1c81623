use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the deblurring toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error(
        "kernel of size {kernel_w}x{kernel_h} does not fit an image of size {image_w}x{image_h}"
    )]
    KernelTooLarge {
        kernel_w: usize,
        kernel_h: usize,
        image_w: usize,
        image_h: usize,
    },

    #[error("kernel side lengths must be odd, got {width}x{height}")]
    KernelSizeEven { width: usize, height: usize },

    #[error("weight `{name}` must be strictly positive, got {value}")]
    NonPositiveWeight { name: &'static str, value: f64 },

    #[error("spectral denominator vanishes at frequency ({fx}, {fy})")]
    DegenerateDenominator { fx: usize, fy: usize },

    #[error("kernel support {support_w}x{support_h} exceeds the {grid_w}x{grid_h} grid")]
    SupportOutOfBounds {
        support_w: usize,
        support_h: usize,
        grid_w: usize,
        grid_h: usize,
    },

    #[error(
        "soft thresholding suppressed every kernel coefficient (alpha too large for the data)"
    )]
    AllZeroKernel,

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("size mismatch: expected {expected_w}x{expected_h}, got {got_w}x{got_h}")]
    SizeMismatch {
        expected_w: usize,
        expected_h: usize,
        got_w: usize,
        got_h: usize,
    },

    #[error("crop of {crop} pixels leaves no interior in a {width}x{height} image")]
    EmptyInterior {
        crop: usize,
        width: usize,
        height: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("corrupt file {path}: {reason}")]
    CorruptFile { path: PathBuf, reason: String },

    #[error("parse error at line {line}: {reason}")]
    ParseError { line: usize, reason: String },

    #[error("kernel invariant violated: {0}")]
    InvariantViolation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

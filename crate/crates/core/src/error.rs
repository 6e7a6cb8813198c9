//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A field with zero L2 norm cannot be normalized.
    #[error("field has zero L2 norm")]
    ZeroField,

    /// Two grids (or a grid and a buffer) disagree in size.
    #[error("shape mismatch in {context}: {left} vs {right}")]
    ShapeMismatch {
        context: &'static str,
        left: usize,
        right: usize,
    },

    /// A field and a propagation step were configured with different pixel pitches.
    #[error("pixel pitch mismatch: field {field} vs step {step}")]
    PitchMismatch { field: f64, step: f64 },

    /// A non-finite sample showed up where only finite values are allowed.
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    /// Negative absorption would amplify the field; panels must be passive.
    #[error("negative absorption {value} at pixel {index}")]
    NegativeAbsorption { index: usize, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Dense transfer-matrix assembly is capped to keep memory and SVD cost bounded.
    #[error("matrix dimension {dim} exceeds assembly cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    /// The singular value decomposition did not converge.
    #[error("singular value decomposition failed to converge")]
    NumericalFailure,

    #[error("empty dataset")]
    EmptyDataset,

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    /// Every class must contribute at least one sample to a centroid.
    #[error("class {0} has no training samples")]
    EmptyClass(usize),

    /// Labeled patterns are stored unit-norm so energy comparisons are fair.
    #[error("pattern is not unit-norm (norm = {0})")]
    NotNormalized(f64),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed file: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

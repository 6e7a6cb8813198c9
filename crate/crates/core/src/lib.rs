//! Simulation and verification of multilayer diffractive optical stacks in
//! the scalar, linear regime.
//!
//! A stack is an alternating chain of free-space hops and thin pixelated
//! panels acting on an N×N complex field:
//!
//! * a hop multiplies the field's plane-wave spectrum by e^{iβD} with
//!   β = √(k₀² − k⊥²) (evanescent components decay or are truncated);
//! * a panel multiplies each pixel by e^{−a + ib} with absorption a ≥ 0 and
//!   phase b.
//!
//! Both stages are linear, so any depth-L stack collapses to one N²×N²
//! matrix M ([`matrix::SystemMatrix`]), and both are non-amplifying, so
//! every singular value of M is ≤ 1. Those two facts bound how far apart a
//! passive stack can push the detector images of two nearby inputs —
//! [`analysis::bound_chain`] evaluates the bound line by line, and
//! [`analysis::pdp_scan`] measures when readout noise swallows the residual
//! difference. The [`classify`], [`train`], and [`mlp`] modules build the
//! accompanying classifiers: a trainable phase-mask stack with K-region
//! detector readout, the nearest-centroid ceiling it cannot beat, and a
//! small squaring network that is not subject to the bound.
//!
//! Everything is deterministic given explicit seeds ([`rng`]), including
//! parallel sections ([`exec`]), so batch outputs are byte-for-byte
//! reproducible at any thread count.

pub mod analysis;
pub mod classify;
pub mod error;
pub mod exec;
mod fft;
pub mod field;
pub mod io;
pub mod matrix;
pub mod mlp;
pub mod optics;
pub mod rng;
pub mod synth;
pub mod train;

pub use num_complex::Complex64;

pub use analysis::{bound_chain, cauchy_schwarz_check, contraction_step_check, pdp_scan};
pub use analysis::{BoundReport, ContractionStepCheck, PdpPoint};
pub use classify::{
    euclidean_classifier, predict, region_readout, DetectorRegions, LabeledPattern,
    NearestCentroid, Prediction,
};
pub use error::{Error, Result};
pub use field::{AmplitudeField, IntensityImage};
pub use matrix::{ContractionReport, SystemMatrix, DEFAULT_ASSEMBLY_CAP};
pub use mlp::{nonlinear_baseline, Activation, MlpClassifier, MlpConfig};
pub use optics::{
    beta_axial, DiffractivePanel, EvanescentMode, OpticalStack, PropagationSpec, MAX_ABSORPTION,
};
pub use synth::{stack_from_layout, ClosePairConfig, ClosePairTask, PanelInit};
pub use train::{
    dataset_loss, loss_and_gradient, train_phase_masks, LossKind, StackGradient, TrainConfig,
};

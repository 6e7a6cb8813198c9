//! Deterministic generators: random fields and stacks for property checks,
//! and built-in labeled datasets (oriented bars, corner blobs, close pairs)
//! so classification experiments are self-contained.
//!
//! Every generator is a pure function of its arguments; randomness comes
//! from named substreams of the given seed (see [`crate::rng`]).

use crate::classify::LabeledPattern;
use crate::error::{Error, Result};
use crate::field::AmplitudeField;
use crate::optics::{DiffractivePanel, EvanescentMode, OpticalStack, PropagationSpec};
use crate::rng::substream;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Default physical parameters shared by the generators.
pub const DEFAULT_WAVELENGTH: f64 = 0.75;
pub const DEFAULT_PIXEL_PITCH: f64 = 0.4;

const TAG_FIELD: u64 = 0x464C44; // field draws
const TAG_STACK: u64 = 0x53544B; // stack draws
const TAG_LAYOUT: u64 = 0x4C4159; // configured stack layouts
const TAG_BARS: u64 = 0x424152; // bar dataset
const TAG_BLOB: u64 = 0x424C42; // blob dataset
const TAG_PAIR: u64 = 0x505152; // close-pair dataset
const TAG_DIR: u64 = 0x444952; // perturbation directions

/// Complex field with iid standard-complex-normal pixels
/// (each component N(0, 1/2), so E|pixel|² = 1).
pub fn random_field(grid_side: usize, pixel_pitch: f64, seed: u64) -> AmplitudeField {
    let mut rng = substream(seed, &[TAG_FIELD, grid_side as u64]);
    let data: Vec<Complex64> = (0..grid_side * grid_side)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        })
        .collect();
    AmplitudeField::new(grid_side, pixel_pitch, data).expect("generated field is valid")
}

/// [`random_field`] normalized to unit L² norm.
pub fn random_unit_field(grid_side: usize, pixel_pitch: f64, seed: u64) -> AmplitudeField {
    random_field(grid_side, pixel_pitch, seed)
        .normalized()
        .expect("gaussian field is nonzero")
}

/// Unit-norm random field with all evanescent spectral bins of `spec`
/// removed, i.e. supported on the propagating band only.
pub fn band_limited_unit_field(
    grid_side: usize,
    spec: &PropagationSpec,
    seed: u64,
) -> AmplitudeField {
    let raw = random_field(grid_side, spec.pixel_pitch(), seed);
    let mask = spec.propagating_mask(grid_side);
    let mut spectrum = raw.unitary_fft2();
    let filtered: Vec<Complex64> = spectrum
        .pixels()
        .iter()
        .zip(&mask)
        .map(|(z, keep)| if *keep { *z } else { Complex64::new(0.0, 0.0) })
        .collect();
    spectrum = AmplitudeField::new(grid_side, spec.pixel_pitch(), filtered)
        .expect("filtered spectrum is valid");
    spectrum
        .unitary_ifft2()
        .normalized()
        .expect("propagating band is non-empty at default parameters")
}

/// Random stack at the default wavelength/pitch: `layers` panels with phases
/// uniform in [0, 2π) and mild absorption (half the panels are lossless),
/// spacings uniform in [5, 40).
pub fn random_stack(
    grid_side: usize,
    layers: usize,
    pad_factor: usize,
    mode: EvanescentMode,
    seed: u64,
) -> Result<OpticalStack> {
    build_stack(grid_side, layers, pad_factor, mode, seed, false)
}

/// Like [`random_stack`] but every panel is pure phase (no absorption), so
/// with [`EvanescentMode::Truncate`] the stack is unitary on the propagating
/// band.
pub fn lossless_stack(
    grid_side: usize,
    layers: usize,
    pad_factor: usize,
    mode: EvanescentMode,
    seed: u64,
) -> Result<OpticalStack> {
    build_stack(grid_side, layers, pad_factor, mode, seed, true)
}

fn build_stack(
    grid_side: usize,
    layers: usize,
    pad_factor: usize,
    mode: EvanescentMode,
    seed: u64,
    lossless: bool,
) -> Result<OpticalStack> {
    let mut rng = substream(seed, &[TAG_STACK, grid_side as u64, layers as u64]);
    let pixels = grid_side * grid_side;
    let mut panels = Vec::with_capacity(layers);
    for l in 0..layers {
        let phase: Vec<f64> = (0..pixels)
            .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
            .collect();
        let absorption: Vec<f64> = if lossless || l % 2 == 1 {
            vec![0.0; pixels]
        } else {
            (0..pixels).map(|_| rng.gen_range(0.0..0.3)).collect()
        };
        panels.push(DiffractivePanel::new(grid_side, absorption, phase)?);
    }
    let mut hops = Vec::with_capacity(layers + 1);
    for _ in 0..layers + 1 {
        let spacing = rng.gen_range(5.0..40.0);
        let hop = PropagationSpec::new(spacing, DEFAULT_WAVELENGTH, DEFAULT_PIXEL_PITCH)?
            .with_evanescent_mode(mode)
            .with_pad_factor(pad_factor)?;
        hops.push(hop);
    }
    OpticalStack::new(grid_side, panels, hops)
}

/// Panel initialization mode for [`stack_from_layout`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PanelInit {
    /// Transparent panels: a = 0, b = 0.
    Identity,
    /// Uniform random phases in [0, 2π), no absorption.
    RandomPhase,
    /// Random phases, plus mild random absorption on even-indexed panels.
    Random,
}

/// Build a stack from an explicit hop layout: `spacings` lists the L+1 gaps
/// (input → panel 1 → … → panel L → detector), so it must be non-empty and
/// the stack gets `spacings.len() - 1` panels, initialized per `init` from
/// a named substream of `seed`.
#[allow(clippy::too_many_arguments)]
pub fn stack_from_layout(
    grid_side: usize,
    wavelength: f64,
    pixel_pitch: f64,
    spacings: &[f64],
    pad_factor: usize,
    mode: EvanescentMode,
    init: PanelInit,
    seed: u64,
) -> Result<OpticalStack> {
    if spacings.is_empty() {
        return Err(Error::InvalidParameter(
            "a stack needs at least one hop (input plane to detector)".into(),
        ));
    }
    let layers = spacings.len() - 1;
    let pixels = grid_side * grid_side;
    let mut rng = substream(seed, &[TAG_LAYOUT, grid_side as u64, layers as u64]);
    let mut panels = Vec::with_capacity(layers);
    for l in 0..layers {
        let panel = match init {
            PanelInit::Identity => DiffractivePanel::identity(grid_side),
            PanelInit::RandomPhase => {
                let phase: Vec<f64> = (0..pixels)
                    .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
                    .collect();
                DiffractivePanel::pure_phase(grid_side, phase)?
            }
            PanelInit::Random => {
                let phase: Vec<f64> = (0..pixels)
                    .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
                    .collect();
                let absorption: Vec<f64> = if l % 2 == 1 {
                    vec![0.0; pixels]
                } else {
                    (0..pixels).map(|_| rng.gen_range(0.0..0.3)).collect()
                };
                DiffractivePanel::new(grid_side, absorption, phase)?
            }
        };
        panels.push(panel);
    }
    let mut hops = Vec::with_capacity(spacings.len());
    for &spacing in spacings {
        hops.push(
            PropagationSpec::new(spacing, wavelength, pixel_pitch)?
                .with_evanescent_mode(mode)
                .with_pad_factor(pad_factor)?,
        );
    }
    OpticalStack::new(grid_side, panels, hops)
}

/// Unit direction orthogonal to `base` (complex inner product), drawn at
/// random; errors only if the grid has a single pixel.
pub fn orthogonal_direction(base: &AmplitudeField, seed: u64) -> Result<AmplitudeField> {
    let unit_base = base.normalized()?;
    let raw = random_field(base.grid_side(), base.pixel_pitch(), seed ^ TAG_DIR);
    let overlap = unit_base.inner(&raw)?;
    raw.sub(&unit_base.scaled(overlap))?.normalized()
}

// ---------------------------------------------------------------------------
// Real-vector helpers for the image-like datasets (non-negative amplitude
// patterns are built in f64 and lifted to complex fields at the end).
// ---------------------------------------------------------------------------

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn scale_to_unit(a: &mut [f64]) {
    let n = norm(a);
    assert!(n > 0.0, "cannot normalize a zero pattern");
    for v in a.iter_mut() {
        *v /= n;
    }
}

/// Remove the projections of `v` onto each (unit-norm) vector in `basis`.
fn project_out(v: &mut [f64], basis: &[&[f64]]) {
    for b in basis {
        let c = dot(v, b);
        axpy(v, -c, b);
    }
}

fn real_pattern_field(grid_side: usize, pixel_pitch: f64, values: &[f64]) -> AmplitudeField {
    let data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    AmplitudeField::new(grid_side, pixel_pitch, data).expect("pattern field is valid")
}

fn check_dataset_params(grid_side: usize, min_grid: usize, per_class: usize) -> Result<()> {
    if grid_side < min_grid {
        return Err(Error::InvalidParameter(format!(
            "grid_side {grid_side} too small for this dataset (need ≥ {min_grid})"
        )));
    }
    if per_class == 0 {
        return Err(Error::EmptyDataset);
    }
    Ok(())
}

/// Two-class dataset: horizontal (label 0) vs vertical (label 1) bright bars
/// of width 2 on a dim background, jittered by at most one pixel around the
/// grid center. Linearly separable, so the nearest-centroid baseline solves
/// it exactly.
pub fn oriented_bars(
    grid_side: usize,
    per_class: usize,
    pixel_pitch: f64,
    seed: u64,
) -> Result<Vec<LabeledPattern>> {
    check_dataset_params(grid_side, 8, per_class)?;
    let mut rng = substream(seed, &[TAG_BARS, grid_side as u64, per_class as u64]);
    let background = 0.05;
    let center = grid_side / 2;
    let mut out = Vec::with_capacity(2 * per_class);
    for i in 0..2 * per_class {
        let label = i % 2;
        let offset = rng.gen_range(-1i64..=1);
        let start = (center as i64 - 1 + offset) as usize;
        let mut values = vec![background; grid_side * grid_side];
        for along in 0..grid_side {
            for across in start..start + 2 {
                let (r, c) = if label == 0 { (across, along) } else { (along, across) };
                values[r * grid_side + c] = 1.0;
            }
        }
        let field = real_pattern_field(grid_side, pixel_pitch, &values);
        out.push(LabeledPattern::from_unnormalized(field, label)?);
    }
    Ok(out)
}

/// Four-class dataset: a Gaussian bright blob in one of the four quadrants
/// (label = quadrant index, row-major), jittered by at most one pixel.
pub fn corner_blobs(
    grid_side: usize,
    per_class: usize,
    pixel_pitch: f64,
    seed: u64,
) -> Result<Vec<LabeledPattern>> {
    check_dataset_params(grid_side, 8, per_class)?;
    let mut rng = substream(seed, &[TAG_BLOB, grid_side as u64, per_class as u64]);
    let background = 0.02;
    let quarter = grid_side as f64 / 4.0;
    let sigma = grid_side as f64 / 8.0;
    let mut out = Vec::with_capacity(4 * per_class);
    for i in 0..4 * per_class {
        let label = i % 4;
        let base_r = quarter * if label < 2 { 1.0 } else { 3.0 };
        let base_c = quarter * if label % 2 == 0 { 1.0 } else { 3.0 };
        let jr = rng.gen_range(-1i64..=1) as f64;
        let jc = rng.gen_range(-1i64..=1) as f64;
        let (cr, cc) = (base_r + jr, base_c + jc);
        let mut values = vec![background; grid_side * grid_side];
        for r in 0..grid_side {
            for c in 0..grid_side {
                let d2 = (r as f64 - cr).powi(2) + (c as f64 - cc).powi(2);
                values[r * grid_side + c] += (-d2 / (2.0 * sigma * sigma)).exp();
            }
        }
        let field = real_pattern_field(grid_side, pixel_pitch, &values);
        out.push(LabeledPattern::from_unnormalized(field, label)?);
    }
    Ok(out)
}

/// Parameters of the close-pair task (see [`close_pairs`]).
#[derive(Debug, Clone)]
pub struct ClosePairConfig {
    pub grid_side: usize,
    pub pixel_pitch: f64,
    /// Exact L² distance between nearest cross-class samples.
    pub epsilon: f64,
    /// L² magnitude of the per-quadruple jitter component.
    pub jitter: f64,
    /// Training quadruples (4 samples each, 2 per class).
    pub train_quads: usize,
    /// Test quadruples.
    pub test_quads: usize,
    pub seed: u64,
}

impl Default for ClosePairConfig {
    fn default() -> Self {
        Self {
            grid_side: 16,
            pixel_pitch: DEFAULT_PIXEL_PITCH,
            epsilon: 0.02,
            jitter: 0.002,
            train_quads: 64,
            test_quads: 2048,
            seed: 7,
        }
    }
}

/// The generated close-pair task.
#[derive(Debug, Clone)]
pub struct ClosePairTask {
    pub train: Vec<LabeledPattern>,
    pub test: Vec<LabeledPattern>,
    /// The shared carrier pattern (unit norm).
    pub base: AmplitudeField,
    /// A unit direction along which classes differ; orthogonal to `base`.
    pub direction: AmplitudeField,
    /// Achieved nearest cross-class L² distance (equals `epsilon`).
    pub pair_distance: f64,
}

/// Binary classification task whose classes are everywhere within L²
/// distance `epsilon` of each other, yet carry one bit of structure that is
/// invisible to any linear readout.
///
/// Construction: a fixed bright carrier `B` (unit norm) and two unit
/// patterns u ⊥ v, both orthogonal to `B`. Each quadruple draws a jitter
/// vector η ⊥ {B, u, v} of fixed norm and emits four samples
///
/// ```text
/// class 0:  normalize(B + w₀ + η),  normalize(B − w₀ − η),   w₀ ∝ u + v
/// class 1:  normalize(B + w₁ + η),  normalize(B − w₁ − η),   w₁ ∝ u − v
/// ```
///
/// Every norm in a quadruple is identical, so each class mean equals `B`
/// exactly and the two class centroids coincide: centroid/linear classifiers
/// are at chance by construction. The sign of the u·v cross term separates
/// the classes perfectly for a quadratic feature map. Nearest cross-class
/// samples (shared η, same signs) sit at exactly `epsilon` apart.
pub fn close_pairs(config: &ClosePairConfig) -> Result<ClosePairTask> {
    let n = config.grid_side;
    check_dataset_params(n, 8, config.train_quads.min(config.test_quads))?;
    if !(config.epsilon > 0.0 && config.epsilon < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be in (0, 0.5), got {}",
            config.epsilon
        )));
    }
    if !(config.jitter >= 0.0 && config.jitter < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "jitter must be in [0, 0.5), got {}",
            config.jitter
        )));
    }
    let pixels = n * n;

    // Carrier: a broad bright dome, strictly positive everywhere.
    let mut base = vec![0.0f64; pixels];
    let mid = (n as f64 - 1.0) / 2.0;
    let dome_sigma = n as f64 / 4.0;
    for r in 0..n {
        for c in 0..n {
            let d2 = (r as f64 - mid).powi(2) + (c as f64 - mid).powi(2);
            base[r * n + c] = 1.0 + 0.5 * (-d2 / (2.0 * dome_sigma * dome_sigma)).exp();
        }
    }
    scale_to_unit(&mut base);

    // Two smooth unit patterns orthogonal to the carrier and to each other.
    let tau = std::f64::consts::TAU;
    let mut u: Vec<f64> = (0..pixels)
        .map(|j| (tau * (j % n) as f64 / n as f64).cos())
        .collect();
    project_out(&mut u, &[&base]);
    scale_to_unit(&mut u);
    let mut v: Vec<f64> = (0..pixels)
        .map(|j| (tau * (j / n) as f64 / n as f64).cos())
        .collect();
    project_out(&mut v, &[&base, &u]);
    scale_to_unit(&mut v);

    // Offsets w₀ = c(u+v), w₁ = c(u−v). All quadruple members share the
    // pre-normalization norm Z = sqrt(1 + 2c² + jitter²) (B, u, v, η are
    // orthonormal directions), and nearest cross-class samples differ by
    // (w₀−w₁)/Z = 2c·v/Z. Choosing
    //   c = ε sqrt((1 + jitter²) / (4 − 2ε²))
    // makes that distance exactly ε.
    let j2 = config.jitter * config.jitter;
    let eps2 = config.epsilon * config.epsilon;
    let c = config.epsilon * ((1.0 + j2) / (4.0 - 2.0 * eps2)).sqrt();
    let z = (1.0 + 2.0 * c * c + j2).sqrt();

    let mut w0 = u.clone();
    axpy(&mut w0, 1.0, &v);
    for x in w0.iter_mut() {
        *x *= c;
    }
    let mut w1 = u.clone();
    axpy(&mut w1, -1.0, &v);
    for x in w1.iter_mut() {
        *x *= c;
    }

    let make_split = |quads: usize, split_tag: u64| -> Result<Vec<LabeledPattern>> {
        let mut rng = substream(config.seed, &[TAG_PAIR, split_tag]);
        let mut out = Vec::with_capacity(4 * quads);
        for _ in 0..quads {
            let mut eta: Vec<f64> = (0..pixels)
                .map(|_| StandardNormal.sample(&mut rng))
                .collect();
            project_out(&mut eta, &[&base, &u, &v]);
            if config.jitter > 0.0 {
                scale_to_unit(&mut eta);
                for x in eta.iter_mut() {
                    *x *= config.jitter;
                }
            } else {
                eta.iter_mut().for_each(|x| *x = 0.0);
            }
            for (label, w) in [(0usize, &w0), (1usize, &w1)] {
                for sign in [1.0f64, -1.0] {
                    let mut sample = base.clone();
                    axpy(&mut sample, sign, w);
                    axpy(&mut sample, sign, &eta);
                    for x in sample.iter_mut() {
                        *x /= z;
                    }
                    let field = real_pattern_field(n, config.pixel_pitch, &sample);
                    out.push(LabeledPattern::new(field, label)?);
                }
            }
        }
        Ok(out)
    };

    let train = make_split(config.train_quads, 0)?;
    let test = make_split(config.test_quads, 1)?;

    let direction = real_pattern_field(n, config.pixel_pitch, &v);
    Ok(ClosePairTask {
        train,
        test,
        base: real_pattern_field(n, config.pixel_pitch, &base),
        direction,
        pair_distance: config.epsilon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::euclidean_classifier;
    use crate::matrix::SystemMatrix;

    #[test]
    fn random_fields_are_seed_deterministic() {
        let a = random_unit_field(8, 0.4, 3);
        let b = random_unit_field(8, 0.4, 3);
        let c = random_unit_field(8, 0.4, 4);
        assert_eq!(a.pixels(), b.pixels());
        assert_ne!(a.pixels(), c.pixels());
        assert!((a.l2_norm() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn band_limited_field_survives_truncation_unchanged() {
        let spec = PropagationSpec::new(10.0, 0.75, 0.4)
            .unwrap()
            .with_evanescent_mode(EvanescentMode::Truncate)
            .with_pad_factor(1)
            .unwrap();
        let f = band_limited_unit_field(8, &spec, 11);
        // Truncation is a projector onto the propagating band; a field
        // already inside the band keeps its full norm through a lossless hop.
        let out = spec.propagate(&f).unwrap();
        assert!((out.l2_norm() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn orthogonal_direction_is_unit_and_orthogonal() {
        let base = random_unit_field(8, 0.4, 5);
        let dir = orthogonal_direction(&base, 9).unwrap();
        assert!((dir.l2_norm() - 1.0).abs() <= 1e-12);
        assert!(base.inner(&dir).unwrap().norm() <= 1e-12);
    }

    #[test]
    fn bars_are_separable_by_centroids() {
        let data = oriented_bars(16, 12, 0.4, 2).unwrap();
        assert_eq!(data.len(), 24);
        let model = euclidean_classifier(&data).unwrap();
        assert_eq!(model.accuracy(&data).unwrap(), 1.0);
        let fresh = oriented_bars(16, 12, 0.4, 99).unwrap();
        assert_eq!(model.accuracy(&fresh).unwrap(), 1.0);
    }

    #[test]
    fn blobs_are_separable_by_centroids() {
        let data = corner_blobs(16, 8, 0.4, 3).unwrap();
        assert_eq!(data.len(), 32);
        assert_eq!(data.iter().map(|p| p.label).max(), Some(3));
        let model = euclidean_classifier(&data).unwrap();
        assert_eq!(model.accuracy(&data).unwrap(), 1.0);
    }

    #[test]
    fn datasets_reject_degenerate_parameters() {
        assert!(oriented_bars(4, 3, 0.4, 0).is_err());
        assert!(corner_blobs(16, 0, 0.4, 0).is_err());
    }

    #[test]
    fn close_pairs_have_exact_cross_class_distance() {
        let task = close_pairs(&ClosePairConfig {
            train_quads: 4,
            test_quads: 4,
            ..ClosePairConfig::default()
        })
        .unwrap();
        assert_eq!(task.train.len(), 16);
        assert_eq!(task.test.len(), 16);
        // Quadruple layout: [c0+, c0−, c1+, c1−]; the (c0+, c1+) pair shares
        // its jitter and differs by exactly epsilon.
        for quad in task.train.chunks(4) {
            let d = quad[0].field.sub(&quad[2].field).unwrap().l2_norm();
            assert!(
                (d - task.pair_distance).abs() <= 1e-12,
                "cross-class distance {d} != {}",
                task.pair_distance
            );
            assert_eq!(quad[0].label, 0);
            assert_eq!(quad[1].label, 0);
            assert_eq!(quad[2].label, 1);
            assert_eq!(quad[3].label, 1);
        }
    }

    #[test]
    fn close_pair_class_centroids_coincide() {
        let task = close_pairs(&ClosePairConfig {
            train_quads: 8,
            test_quads: 1,
            ..ClosePairConfig::default()
        })
        .unwrap();
        let model = euclidean_classifier(&task.train).unwrap();
        let gap = model.centroids()[0]
            .sub(&model.centroids()[1])
            .unwrap()
            .l2_norm();
        assert!(gap <= 1e-14, "centroid gap {gap}");
    }

    #[test]
    fn close_pair_samples_are_positive_amplitude_images() {
        let task = close_pairs(&ClosePairConfig {
            train_quads: 3,
            test_quads: 3,
            ..ClosePairConfig::default()
        })
        .unwrap();
        for p in task.train.iter().chain(&task.test) {
            for z in p.field.pixels() {
                assert!(z.im == 0.0);
                assert!(z.re > 0.0, "amplitude pattern went non-positive");
            }
        }
    }

    #[test]
    fn close_pair_carrier_and_direction_are_orthonormal() {
        let task = close_pairs(&ClosePairConfig {
            train_quads: 1,
            test_quads: 1,
            ..ClosePairConfig::default()
        })
        .unwrap();
        assert!((task.base.l2_norm() - 1.0).abs() <= 1e-12);
        assert!((task.direction.l2_norm() - 1.0).abs() <= 1e-12);
        assert!(task.base.inner(&task.direction).unwrap().norm() <= 1e-12);
    }

    #[test]
    fn random_stack_is_passive() {
        let stack = random_stack(4, 3, 1, EvanescentMode::Decay, 17).unwrap();
        let m = SystemMatrix::assemble(&stack).unwrap();
        assert!(m.sv_max().unwrap() <= 1.0 + 1e-9);
    }

    #[test]
    fn layout_builder_honors_spacings_and_init() {
        let spacings = [10.0, 25.0, 5.0];
        let stack = stack_from_layout(
            4,
            0.75,
            0.4,
            &spacings,
            2,
            EvanescentMode::Decay,
            PanelInit::RandomPhase,
            9,
        )
        .unwrap();
        assert_eq!(stack.layer_count(), 2);
        for (hop, want) in stack.propagations().iter().zip(spacings) {
            assert_eq!(hop.spacing(), want);
        }
        for panel in stack.panels() {
            assert!(panel.absorption().iter().all(|&a| a == 0.0));
            assert!(panel.phase().iter().any(|&b| b != 0.0));
        }

        let transparent = stack_from_layout(
            4,
            0.75,
            0.4,
            &spacings,
            2,
            EvanescentMode::Decay,
            PanelInit::Identity,
            9,
        )
        .unwrap();
        for panel in transparent.panels() {
            assert!(panel.phase().iter().all(|&b| b == 0.0));
        }

        let again = stack_from_layout(
            4,
            0.75,
            0.4,
            &spacings,
            2,
            EvanescentMode::Decay,
            PanelInit::RandomPhase,
            9,
        )
        .unwrap();
        assert_eq!(again.panels()[0].phase(), stack.panels()[0].phase());
        assert!(matches!(
            stack_from_layout(
                4,
                0.75,
                0.4,
                &[],
                2,
                EvanescentMode::Decay,
                PanelInit::Identity,
                9
            ),
            Err(Error::InvalidParameter(_))
        ));
    }
}

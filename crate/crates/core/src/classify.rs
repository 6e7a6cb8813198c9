//! Detector regions, noisy readout, and classification on region energies.
//!
//! A detector splits its plane into K disjoint pixel sets. The readout of
//! region k is the sum of pixel intensities plus independent Gaussian noise
//! per pixel; the predicted class is the argmax of the readouts (ties go to
//! the lowest region index). Noise enters only here, at detection; the
//! optical chain itself is noiseless.

use crate::error::{Error, Result};
use crate::field::{AmplitudeField, IntensityImage};
use crate::optics::OpticalStack;
use crate::rng::substream;
use rand_distr::{Distribution, Normal};

/// K >= 2 disjoint pixel index sets on an n x n detector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectorRegions {
    grid_side: usize,
    regions: Vec<Vec<usize>>,
}

impl DetectorRegions {
    pub fn new(grid_side: usize, regions: Vec<Vec<usize>>) -> Result<Self> {
        if grid_side == 0 {
            return Err(Error::InvalidParameter("grid_side must be positive".into()));
        }
        if regions.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 regions, got {}",
                regions.len()
            )));
        }
        let pixels = grid_side * grid_side;
        let mut seen = vec![false; pixels];
        for (k, region) in regions.iter().enumerate() {
            if region.is_empty() {
                return Err(Error::InvalidParameter(format!("region {k} is empty")));
            }
            for &j in region {
                if j >= pixels {
                    return Err(Error::InvalidParameter(format!(
                        "region {k} refers to pixel {j} outside the {grid_side} x {grid_side} grid"
                    )));
                }
                if seen[j] {
                    return Err(Error::InvalidParameter(format!(
                        "pixel {j} appears in more than one region"
                    )));
                }
                seen[j] = true;
            }
        }
        Ok(Self { grid_side, regions })
    }

    /// Default geometry: K square tiles, one centered in each cell of a
    /// ceil(sqrt(K))-column grid covering the detector. Tile side is half the
    /// cell (at least one pixel).
    pub fn grid_layout(grid_side: usize, k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 regions, got {k}"
            )));
        }
        let cols = (k as f64).sqrt().ceil() as usize;
        let rows = k.div_ceil(cols);
        if cols > grid_side || rows > grid_side {
            return Err(Error::InvalidParameter(format!(
                "cannot place {k} tiles on a {grid_side} x {grid_side} grid"
            )));
        }
        let cell_w = grid_side / cols;
        let cell_h = grid_side / rows;
        let tile = (cell_w.min(cell_h) / 2).max(1);
        let mut regions = Vec::with_capacity(k);
        for idx in 0..k {
            let cr = idx / cols;
            let cc = idx % cols;
            let top = cr * cell_h + (cell_h - tile) / 2;
            let left = cc * cell_w + (cell_w - tile) / 2;
            let mut px = Vec::with_capacity(tile * tile);
            for r in top..top + tile {
                for c in left..left + tile {
                    px.push(r * grid_side + c);
                }
            }
            regions.push(px);
        }
        Self::new(grid_side, regions)
    }

    pub fn grid_side(&self) -> usize {
        self.grid_side
    }

    pub fn count(&self) -> usize {
        self.regions.len()
    }

    pub fn pixel_sets(&self) -> &[Vec<usize>] {
        &self.regions
    }

    /// Pixel count of each region.
    pub fn sizes(&self) -> Vec<usize> {
        self.regions.iter().map(Vec::len).collect()
    }
}

/// Unit-norm labeled field, the sample type of every classifier here.
#[derive(Debug, Clone)]
pub struct LabeledPattern {
    pub field: AmplitudeField,
    pub label: usize,
}

impl LabeledPattern {
    /// Wrap a field that is already unit-norm (to 1e-12).
    pub fn new(field: AmplitudeField, label: usize) -> Result<Self> {
        let norm = field.l2_norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { field, label })
    }

    /// Normalize a raw field and wrap it.
    pub fn from_unnormalized(field: AmplitudeField, label: usize) -> Result<Self> {
        Self::new(field.normalized()?, label)
    }
}

/// Sum the intensity over each region, adding zero-mean Gaussian noise of
/// standard deviation `noise_sigma` to every pixel sample independently.
/// `noise_sigma = 0` gives the exact partial sums. The draw order is fixed
/// (region by region, pixel by pixel) and every call derives its own RNG from
/// `seed`, so results are reproducible regardless of threading.
pub fn region_readout(
    image: &IntensityImage,
    regions: &DetectorRegions,
    noise_sigma: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    if image.grid_side() != regions.grid_side() {
        return Err(Error::ShapeMismatch {
            context: "detector vs image grid",
            left: regions.grid_side(),
            right: image.grid_side(),
        });
    }
    if !noise_sigma.is_finite() || noise_sigma < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "noise_sigma must be non-negative, got {noise_sigma}"
        )));
    }
    let values = image.values();
    if noise_sigma == 0.0 {
        return Ok(regions
            .pixel_sets()
            .iter()
            .map(|px| px.iter().map(|&j| values[j]).sum())
            .collect());
    }
    let mut rng = substream(seed, &[0x5245_4144]); // "READ"
    let normal = Normal::new(0.0, noise_sigma).expect("finite sigma");
    Ok(regions
        .pixel_sets()
        .iter()
        .map(|px| {
            px.iter()
                .map(|&j| values[j] + normal.sample(&mut rng))
                .sum()
        })
        .collect())
}

/// Region scores and the argmax class for one input.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class: usize,
    pub scores: Vec<f64>,
}

/// Run the stack, detect, read out the regions (with noise), and pick the
/// class with the largest readout; ties resolve to the lowest region index.
pub fn predict(
    stack: &OpticalStack,
    regions: &DetectorRegions,
    input: &AmplitudeField,
    noise_sigma: f64,
    seed: u64,
) -> Result<Prediction> {
    let output = stack.forward(input)?;
    let scores = region_readout(&output.intensity(), regions, noise_sigma, seed)?;
    Ok(Prediction {
        class: argmax_lowest(&scores),
        scores,
    })
}

/// Index of the maximum, lowest index on ties.
pub(crate) fn argmax_lowest(scores: &[f64]) -> usize {
    let mut best = 0;
    for (k, v) in scores.iter().enumerate().skip(1) {
        if *v > scores[best] {
            best = k;
        }
    }
    best
}

/// Nearest-centroid classifier in field space: class centroids are complex
/// means of the training fields, queries go to the closest centroid in L2
/// (lowest class index on ties). This is the reference linear-readout
/// discriminator that a passive linear optical chain cannot beat.
#[derive(Debug, Clone)]
pub struct NearestCentroid {
    centroids: Vec<AmplitudeField>,
}

/// Fit a [`NearestCentroid`] from labeled patterns. Class count is
/// max label + 1 and every class must be populated.
pub fn euclidean_classifier(train: &[LabeledPattern]) -> Result<NearestCentroid> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let classes = train.iter().map(|p| p.label).max().expect("non-empty") + 1;
    if classes < 2 {
        return Err(Error::InvalidParameter(
            "need at least 2 classes for classification".into(),
        ));
    }
    let grid = train[0].field.grid_side();
    let pitch = train[0].field.pixel_pitch();
    let mut sums = vec![AmplitudeField::zeros(grid, pitch); classes];
    let mut counts = vec![0usize; classes];
    for p in train {
        if p.field.grid_side() != grid {
            return Err(Error::ShapeMismatch {
                context: "training pattern grid",
                left: p.field.grid_side(),
                right: grid,
            });
        }
        sums[p.label] = sums[p.label].add(&p.field)?;
        counts[p.label] += 1;
    }
    let mut centroids = Vec::with_capacity(classes);
    for (k, (sum, count)) in sums.into_iter().zip(&counts).enumerate() {
        if *count == 0 {
            return Err(Error::EmptyClass(k));
        }
        centroids.push(sum.scaled_real(1.0 / *count as f64));
    }
    Ok(NearestCentroid { centroids })
}

impl NearestCentroid {
    pub fn class_count(&self) -> usize {
        self.centroids.len()
    }

    pub fn centroids(&self) -> &[AmplitudeField] {
        &self.centroids
    }

    /// Class of the nearest centroid (L2 distance, lowest index on ties).
    pub fn classify(&self, input: &AmplitudeField) -> Result<usize> {
        let mut best = 0;
        let mut best_dist = f64::INFINITY;
        for (k, c) in self.centroids.iter().enumerate() {
            let dist = input.sub(c)?.l2_norm();
            if dist < best_dist {
                best_dist = dist;
                best = k;
            }
        }
        Ok(best)
    }

    /// Fraction of patterns classified correctly.
    pub fn accuracy(&self, data: &[LabeledPattern]) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut hits = 0usize;
        for p in data {
            if self.classify(&p.field)? == p.label {
                hits += 1;
            }
        }
        Ok(hits as f64 / data.len() as f64)
    }
}

/// Convenience wrapper: a seeded RNG drawn per (sample, draw) pair for batch
/// evaluation; use distinct `draw` values for repeated noisy readouts.
pub fn eval_seed(master: u64, sample: usize, draw: usize) -> u64 {
    // Distinct linear combination keeps (sample, draw) pairs unique; the
    // substream hash does the real mixing.
    master
        .wrapping_mul(0x9E37_79B9)
        .wrapping_add(sample as u64)
        .wrapping_mul(0x85EB_CA6B)
        .wrapping_add(draw as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::{DiffractivePanel, OpticalStack, PropagationSpec};
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn grid_layout_tiles_are_disjoint_and_sized() {
        let regions = DetectorRegions::grid_layout(16, 2).unwrap();
        assert_eq!(regions.count(), 2);
        // 2 columns of 8 x 16 cells, tile side 4.
        assert_eq!(regions.sizes(), vec![16, 16]);
        let regions4 = DetectorRegions::grid_layout(16, 4).unwrap();
        assert_eq!(regions4.count(), 4);
        for size in regions4.sizes() {
            assert_eq!(size, 16);
        }
    }

    #[test]
    fn regions_reject_overlap_and_out_of_range() {
        assert!(matches!(
            DetectorRegions::new(2, vec![vec![0, 1], vec![1, 2]]),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            DetectorRegions::new(2, vec![vec![0], vec![4]]),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            DetectorRegions::new(2, vec![vec![0]]),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn noiseless_readout_is_exact_partial_sum() {
        let image = IntensityImage::new(2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let regions = DetectorRegions::new(2, vec![vec![0, 3], vec![1]]).unwrap();
        let r = region_readout(&image, &regions, 0.0, 123).unwrap();
        assert_eq!(r, vec![5.0, 2.0]);
    }

    #[test]
    fn readout_noise_is_seed_deterministic() {
        let image = IntensityImage::new(2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let regions = DetectorRegions::new(2, vec![vec![0, 3], vec![1]]).unwrap();
        let a = region_readout(&image, &regions, 0.3, 7).unwrap();
        let b = region_readout(&image, &regions, 0.3, 7).unwrap();
        let c = region_readout(&image, &regions, 0.3, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn readout_rejects_grid_mismatch_and_bad_sigma() {
        let image = IntensityImage::new(2, vec![0.0; 4]).unwrap();
        let regions = DetectorRegions::grid_layout(4, 2).unwrap();
        assert!(matches!(
            region_readout(&image, &regions, 0.0, 0),
            Err(Error::ShapeMismatch { .. })
        ));
        let regions2 = DetectorRegions::new(2, vec![vec![0], vec![1]]).unwrap();
        assert!(matches!(
            region_readout(&image, &regions2, -1.0, 0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn argmax_breaks_ties_toward_lowest_index() {
        assert_eq!(argmax_lowest(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax_lowest(&[2.0, 2.0]), 0);
        assert_eq!(argmax_lowest(&[0.0, 1.0, 2.0]), 2);
    }

    fn region0_only_stack(n: usize, regions: &DetectorRegions) -> OpticalStack {
        // Near-zero hops plus a mask transparent only on region 0: every
        // input's power lands in region 0.
        let mut absorption = vec![crate::optics::MAX_ABSORPTION; n * n];
        for &j in &regions.pixel_sets()[0] {
            absorption[j] = 0.0;
        }
        let panel = DiffractivePanel::new(n, absorption, vec![0.0; n * n]).unwrap();
        let hop = PropagationSpec::new(0.0, 0.75, 0.4)
            .unwrap()
            .with_pad_factor(1)
            .unwrap();
        OpticalStack::new(n, vec![panel], vec![hop.clone(), hop]).unwrap()
    }

    #[test]
    fn masked_stack_always_predicts_region_zero() {
        let n = 8;
        let regions = DetectorRegions::grid_layout(n, 2).unwrap();
        let stack = region0_only_stack(n, &regions);
        let input = AmplitudeField::constant(n, 0.4, c(0.125, 0.0));
        let p = predict(&stack, &regions, &input, 0.0, 0).unwrap();
        assert_eq!(p.class, 0);
        assert!(p.scores[0] > 0.0);
        assert!(p.scores[1].abs() < 1e-20);
    }

    #[test]
    fn prediction_is_global_phase_invariant() {
        let n = 8;
        let regions = DetectorRegions::grid_layout(n, 2).unwrap();
        let stack = region0_only_stack(n, &regions);
        let input = crate::synth::random_unit_field(n, 0.4, 404);
        let rotated = input.scaled(Complex64::from_polar(1.0, 1.234));
        let a = predict(&stack, &regions, &input, 0.0, 0).unwrap();
        let b = predict(&stack, &regions, &rotated, 0.0, 0).unwrap();
        assert_eq!(a.class, b.class);
        for (x, y) in a.scores.iter().zip(&b.scores) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn prediction_scales_quadratically_with_amplitude() {
        let n = 8;
        let regions = DetectorRegions::grid_layout(n, 2).unwrap();
        let stack = region0_only_stack(n, &regions);
        let input = crate::synth::random_unit_field(n, 0.4, 405);
        let scaled = input.scaled_real(3.0);
        let a = predict(&stack, &regions, &input, 0.0, 0).unwrap();
        let b = predict(&stack, &regions, &scaled, 0.0, 0).unwrap();
        assert_eq!(a.class, b.class);
        for (x, y) in a.scores.iter().zip(&b.scores) {
            assert!((y - 9.0 * x).abs() <= 1e-10 * x.abs().max(1.0));
        }
    }

    #[test]
    fn centroid_classifier_requires_full_classes() {
        let f = crate::synth::random_unit_field(4, 0.4, 1);
        let data = vec![LabeledPattern::new(f, 2).unwrap()];
        // Labels imply 3 classes but 0 and 1 are empty.
        assert!(matches!(
            euclidean_classifier(&data),
            Err(Error::EmptyClass(0))
        ));
        assert!(matches!(euclidean_classifier(&[]), Err(Error::EmptyDataset)));
    }

    #[test]
    fn centroid_tie_goes_to_class_zero() {
        // Two mirror-image classes and a perfectly symmetric query.
        let n = 2;
        let a = AmplitudeField::new(n, 0.4, vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)])
            .unwrap();
        let b = AmplitudeField::new(n, 0.4, vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)])
            .unwrap();
        let train = vec![
            LabeledPattern::new(a, 0).unwrap(),
            LabeledPattern::new(b, 1).unwrap(),
        ];
        let model = euclidean_classifier(&train).unwrap();
        let query = AmplitudeField::new(
            n,
            0.4,
            vec![c(0.5_f64.sqrt(), 0.0), c(0.5_f64.sqrt(), 0.0), c(0.0, 0.0), c(0.0, 0.0)],
        )
        .unwrap();
        assert_eq!(model.classify(&query).unwrap(), 0);
    }

    #[test]
    fn labeled_pattern_requires_unit_norm() {
        let f = AmplitudeField::constant(2, 0.4, c(1.0, 0.0));
        assert!(matches!(
            LabeledPattern::new(f.clone(), 0),
            Err(Error::NotNormalized(_))
        ));
        assert!(LabeledPattern::from_unnormalized(f, 0).is_ok());
    }
}

//! Complex scalar fields and detector-plane intensity images on square grids.
//!
//! A field is a row-major n x n array of complex amplitudes sampled at a
//! fixed pixel pitch. Intensities are |amplitude|^2 per pixel. Two distance
//! measures live here:
//!
//! * [`AmplitudeField::tvd_component`] — sum over pixels and over the real and
//!   imaginary components of |a^2 - b^2|. This is the quantity the detection
//!   bound in [`crate::analysis`] controls.
//! * [`IntensityImage::tvd`] — plain L1 distance between intensity images.
//!   It never exceeds the component form (triangle inequality per pixel).

use crate::error::{Error, Result};
use crate::fft;
use num_complex::Complex64;
use rustfft::FftDirection;

/// Complex amplitude distribution over an n x n pixel grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeField {
    grid_side: usize,
    pixel_pitch: f64,
    data: Vec<Complex64>,
}

impl AmplitudeField {
    /// Build a field, rejecting malformed input up front: the data length
    /// must be `grid_side^2`, the pitch positive, every sample finite.
    pub fn new(grid_side: usize, pixel_pitch: f64, data: Vec<Complex64>) -> Result<Self> {
        if grid_side == 0 {
            return Err(Error::InvalidParameter("grid_side must be positive".into()));
        }
        if !pixel_pitch.is_finite() || pixel_pitch <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "pixel_pitch must be positive and finite, got {pixel_pitch}"
            )));
        }
        if data.len() != grid_side * grid_side {
            return Err(Error::ShapeMismatch {
                context: "field data length",
                left: data.len(),
                right: grid_side * grid_side,
            });
        }
        if let Some(index) = data
            .iter()
            .position(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            grid_side,
            pixel_pitch,
            data,
        })
    }

    /// All-zero field. Panics on a zero grid side (programmer error).
    pub fn zeros(grid_side: usize, pixel_pitch: f64) -> Self {
        assert!(grid_side > 0, "grid_side must be positive");
        assert!(
            pixel_pitch.is_finite() && pixel_pitch > 0.0,
            "pixel_pitch must be positive"
        );
        Self {
            grid_side,
            pixel_pitch,
            data: vec![Complex64::new(0.0, 0.0); grid_side * grid_side],
        }
    }

    /// Field with the same value in every pixel.
    pub fn constant(grid_side: usize, pixel_pitch: f64, value: Complex64) -> Self {
        let mut f = Self::zeros(grid_side, pixel_pitch);
        f.data.fill(value);
        f
    }

    pub fn grid_side(&self) -> usize {
        self.grid_side
    }

    pub fn pixel_pitch(&self) -> f64 {
        self.pixel_pitch
    }

    pub fn pixels(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_pixels(self) -> Vec<Complex64> {
        self.data
    }

    /// Euclidean norm over all pixels, sqrt(sum |a_j|^2).
    pub fn l2_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Scale to unit L2 norm. A zero field has no direction to keep.
    pub fn normalized(&self) -> Result<Self> {
        let norm = self.l2_norm();
        if norm == 0.0 {
            return Err(Error::ZeroField);
        }
        Ok(self.scaled_real(1.0 / norm))
    }

    /// Per-pixel |a|^2.
    pub fn intensity(&self) -> IntensityImage {
        IntensityImage {
            grid_side: self.grid_side,
            data: self.data.iter().map(|z| z.norm_sqr()).collect(),
        }
    }

    /// Unitary 2-D DFT (1/sqrt(n) normalisation per dimension). Output is in
    /// standard DFT bin order: bin b maps to signed frequency b for b <= n/2
    /// and b - n above.
    pub fn unitary_fft2(&self) -> Self {
        let mut data = self.data.clone();
        fft::fft2_in_place(&mut data, self.grid_side, FftDirection::Forward);
        Self {
            grid_side: self.grid_side,
            pixel_pitch: self.pixel_pitch,
            data,
        }
    }

    /// Unitary inverse 2-D DFT; exact inverse of [`unitary_fft2`] up to rounding.
    pub fn unitary_ifft2(&self) -> Self {
        let mut data = self.data.clone();
        fft::fft2_in_place(&mut data, self.grid_side, FftDirection::Inverse);
        Self {
            grid_side: self.grid_side,
            pixel_pitch: self.pixel_pitch,
            data,
        }
    }

    /// Component total variation distance:
    /// sum over pixels j and components p in {re, im} of |a(j,p)^2 - b(j,p)^2|.
    pub fn tvd_component(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other)?;
        let mut total = 0.0;
        for (a, b) in self.data.iter().zip(&other.data) {
            total += (a.re * a.re - b.re * b.re).abs();
            total += (a.im * a.im - b.im * b.im).abs();
        }
        Ok(total)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self {
            grid_side: self.grid_side,
            pixel_pitch: self.pixel_pitch,
            data,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self {
            grid_side: self.grid_side,
            pixel_pitch: self.pixel_pitch,
            data,
        })
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            grid_side: self.grid_side,
            pixel_pitch: self.pixel_pitch,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn scaled_real(&self, factor: f64) -> Self {
        Self {
            grid_side: self.grid_side,
            pixel_pitch: self.pixel_pitch,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    /// Hermitian inner product sum conj(a_j) * b_j.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.check_same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub(crate) fn with_data(&self, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), self.data.len());
        Self {
            grid_side: self.grid_side,
            pixel_pitch: self.pixel_pitch,
            data,
        }
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.grid_side != other.grid_side {
            return Err(Error::ShapeMismatch {
                context: "field grid sides",
                left: self.grid_side,
                right: other.grid_side,
            });
        }
        Ok(())
    }
}

/// Real non-negative intensity image, |amplitude|^2 per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityImage {
    grid_side: usize,
    data: Vec<f64>,
}

impl IntensityImage {
    pub fn new(grid_side: usize, data: Vec<f64>) -> Result<Self> {
        if grid_side == 0 {
            return Err(Error::InvalidParameter("grid_side must be positive".into()));
        }
        if data.len() != grid_side * grid_side {
            return Err(Error::ShapeMismatch {
                context: "intensity data length",
                left: data.len(),
                right: grid_side * grid_side,
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { grid_side, data })
    }

    pub fn grid_side(&self) -> usize {
        self.grid_side
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    /// Total detected power, sum of all pixels.
    pub fn total_power(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Intensity total variation distance: sum_j |I_a(j) - I_b(j)|.
    /// Always <= the component form on the generating amplitude fields.
    pub fn tvd(&self, other: &Self) -> Result<f64> {
        if self.grid_side != other.grid_side {
            return Err(Error::ShapeMismatch {
                context: "intensity grid sides",
                left: self.grid_side,
                right: other.grid_side,
            });
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn l2_norm_of_unit_circle_samples() {
        // Pixels 1, i, -1, -i each have modulus 1, so the norm is sqrt(4) = 2.
        let f = AmplitudeField::new(
            2,
            0.4,
            vec![c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)],
        )
        .unwrap();
        assert_eq!(f.l2_norm(), 2.0);
    }

    #[test]
    fn normalize_scales_all_ones_to_half() {
        let f = AmplitudeField::constant(2, 0.4, c(1.0, 0.0));
        let n = f.normalized().unwrap();
        for z in n.pixels() {
            assert!((z.re - 0.5).abs() < 1e-15);
            assert_eq!(z.im, 0.0);
        }
        assert!((n.l2_norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn normalize_zero_field_fails() {
        let f = AmplitudeField::zeros(4, 0.4);
        assert!(matches!(f.normalized(), Err(Error::ZeroField)));
    }

    #[test]
    fn constructor_rejects_bad_shapes_and_values() {
        assert!(matches!(
            AmplitudeField::new(2, 0.4, vec![c(0.0, 0.0); 3]),
            Err(Error::ShapeMismatch { .. })
        ));
        assert!(matches!(
            AmplitudeField::new(2, 0.0, vec![c(0.0, 0.0); 4]),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            AmplitudeField::new(2, 0.4, vec![c(0.0, 0.0), c(f64::NAN, 0.0), c(0.0, 0.0), c(0.0, 0.0)]),
            Err(Error::NonFinite { index: 1 })
        ));
    }

    #[test]
    fn fft_of_uniform_field_is_zero_frequency_delta() {
        // Uniform value 1/n: the DFT sum gives n^2 * (1/n) at bin (0,0) and the
        // unitary scaling divides by n, leaving exactly 1.
        for n in [2usize, 4, 8] {
            let f = AmplitudeField::constant(n, 0.4, c(1.0 / n as f64, 0.0));
            let spectrum = f.unitary_fft2();
            let px = spectrum.pixels();
            assert!((px[0].re - 1.0).abs() < 1e-12, "n={n}");
            assert!(px[0].im.abs() < 1e-12);
            for z in &px[1..] {
                assert!(z.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn fft_preserves_norm_and_round_trips() {
        // Deterministic, non-symmetric test field.
        let n = 8;
        let data: Vec<Complex64> = (0..n * n)
            .map(|i| {
                let x = i as f64;
                c((0.3 * x).sin() + 0.2, (0.7 * x).cos() - 0.1)
            })
            .collect();
        let f = AmplitudeField::new(n, 0.4, data).unwrap();
        let norm = f.l2_norm();

        let spectrum = f.unitary_fft2();
        assert!((spectrum.l2_norm() - norm).abs() <= 1e-12 * norm);

        let back = spectrum.unitary_ifft2();
        let err = back.sub(&f).unwrap().l2_norm();
        assert!(err <= 1e-12 * norm, "round trip error {err}");
    }

    #[test]
    fn intensity_squares_modulus() {
        let f = AmplitudeField::new(1, 0.4, vec![c(1.0, 1.0)]).unwrap();
        let i = f.intensity();
        assert_eq!(i.values()[0], 2.0);
        assert_eq!(i.total_power(), 2.0);
    }

    #[test]
    fn component_tvd_of_disjoint_unit_components_is_two() {
        // One pixel holds a real 1, the other an imaginary 1; each contributes
        // |1 - 0| to its own component, total 2.
        let a = AmplitudeField::new(2, 0.4, vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)])
            .unwrap();
        let b = AmplitudeField::new(2, 0.4, vec![c(0.0, 0.0), c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0)])
            .unwrap();
        assert_eq!(a.tvd_component(&b).unwrap(), 2.0);
    }

    #[test]
    fn component_tvd_is_symmetric_and_zero_on_equal_fields() {
        let a = AmplitudeField::new(2, 0.4, vec![c(0.3, -0.2), c(0.1, 0.9), c(-0.5, 0.0), c(0.2, 0.2)])
            .unwrap();
        let b = AmplitudeField::new(2, 0.4, vec![c(0.0, 0.4), c(0.6, -0.1), c(0.2, 0.2), c(-0.3, 0.7)])
            .unwrap();
        assert_eq!(a.tvd_component(&b).unwrap(), b.tvd_component(&a).unwrap());
        assert_eq!(a.tvd_component(&a).unwrap(), 0.0);
    }

    #[test]
    fn intensity_tvd_never_exceeds_component_tvd() {
        let a = AmplitudeField::new(2, 0.4, vec![c(0.3, -0.2), c(0.1, 0.9), c(-0.5, 0.0), c(0.2, 0.2)])
            .unwrap();
        let b = AmplitudeField::new(2, 0.4, vec![c(0.0, 0.4), c(0.6, -0.1), c(0.2, 0.2), c(-0.3, 0.7)])
            .unwrap();
        let ti = a.intensity().tvd(&b.intensity()).unwrap();
        let tc = a.tvd_component(&b).unwrap();
        assert!(ti <= tc + 1e-15);
    }

    #[test]
    fn tvd_rejects_mismatched_grids() {
        let a = AmplitudeField::zeros(2, 0.4);
        let b = AmplitudeField::zeros(3, 0.4);
        assert!(matches!(
            a.tvd_component(&b),
            Err(Error::ShapeMismatch { .. })
        ));
        assert!(matches!(
            a.intensity().tvd(&b.intensity()),
            Err(Error::ShapeMismatch { .. })
        ));
    }
}

//! Scalar diffraction through layered stacks of phase/absorption panels.
//!
//! Free-space propagation over a spacing D is applied in the spatial-frequency
//! domain (angular spectrum): each DFT bin k = (kx, ky) picks up the factor
//! exp(i * beta * D) with the axial wavenumber
//!
//!   beta(k) = sqrt(k0^2 - kx^2 - ky^2),  k0 = 2 pi / wavelength,
//!
//! real for propagating bins and i * sqrt(kx^2 + ky^2 - k0^2) for evanescent
//! ones, which therefore decay (or are cut, see [`EvanescentMode`]). A panel
//! multiplies pixel j by exp(-a_j + i * b_j) with a_j >= 0, so every element
//! of a stack is non-expansive in L2: the whole chain is a contraction.
//!
//! With `pad_factor = 1` the model is the exact periodic-DFT one (unitary on
//! the propagating subspace; all algebraic identities in the test suite are
//! exact to rounding). Larger factors embed the field in a zero-padded grid
//! during each propagation to suppress periodic wraparound and crop afterwards,
//! which remains a contraction but deliberately sheds the power that leaves
//! the window.

use crate::error::{Error, Result};
use crate::field::AmplitudeField;
use crate::fft;
use num_complex::Complex64;
use rustfft::FftDirection;
use std::f64::consts::PI;

/// Absorption exponents above this are clamped; exp(-46) is ~1e-20, far below
/// any tolerance used in this crate, so larger values only risk underflow.
pub const MAX_ABSORPTION: f64 = 46.0;

/// What happens to spatial frequencies beyond the homogeneous-wave cutoff.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvanescentMode {
    /// Keep the bins and apply their physical exponential decay exp(-gamma D).
    #[default]
    Decay,
    /// Zero the bins outright (hard band limit).
    Truncate,
}

/// One free-space hop: spacing, wavelength and sampling geometry.
#[derive(Clone, Debug, PartialEq)]
pub struct PropagationSpec {
    spacing: f64,
    wavelength: f64,
    pixel_pitch: f64,
    evanescent_mode: EvanescentMode,
    pad_factor: usize,
}

impl PropagationSpec {
    /// New hop with the default evanescent handling (decay) and default 2x
    /// zero padding. Spacing may be zero (identity hop); wavelength and pitch
    /// must be positive.
    pub fn new(spacing: f64, wavelength: f64, pixel_pitch: f64) -> Result<Self> {
        if !spacing.is_finite() || spacing < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "spacing must be finite and non-negative, got {spacing}"
            )));
        }
        if !wavelength.is_finite() || wavelength <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "wavelength must be positive, got {wavelength}"
            )));
        }
        if !pixel_pitch.is_finite() || pixel_pitch <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "pixel_pitch must be positive, got {pixel_pitch}"
            )));
        }
        Ok(Self {
            spacing,
            wavelength,
            pixel_pitch,
            evanescent_mode: EvanescentMode::Decay,
            pad_factor: 2,
        })
    }

    pub fn with_evanescent_mode(mut self, mode: EvanescentMode) -> Self {
        self.evanescent_mode = mode;
        self
    }

    /// Zero-padding factor applied internally during this hop; 1 disables
    /// padding and gives the exact periodic model.
    pub fn with_pad_factor(mut self, pad_factor: usize) -> Result<Self> {
        if pad_factor == 0 {
            return Err(Error::InvalidParameter("pad_factor must be >= 1".into()));
        }
        self.pad_factor = pad_factor;
        Ok(self)
    }

    pub fn with_spacing(mut self, spacing: f64) -> Result<Self> {
        if !spacing.is_finite() || spacing < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "spacing must be finite and non-negative, got {spacing}"
            )));
        }
        self.spacing = spacing;
        Ok(self)
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn pixel_pitch(&self) -> f64 {
        self.pixel_pitch
    }

    pub fn evanescent_mode(&self) -> EvanescentMode {
        self.evanescent_mode
    }

    pub fn pad_factor(&self) -> usize {
        self.pad_factor
    }

    /// Vacuum wavenumber k0 = 2 pi / wavelength.
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    /// Apply the hop to a field.
    pub fn propagate(&self, field: &AmplitudeField) -> Result<AmplitudeField> {
        self.spectral_apply(field, false)
    }

    /// Apply the adjoint (conjugate-transpose) of the hop. Propagating bins
    /// get the conjugate phase; evanescent decay is real and unchanged.
    pub fn propagate_adjoint(&self, field: &AmplitudeField) -> Result<AmplitudeField> {
        self.spectral_apply(field, true)
    }

    /// Per-bin transfer factor exp(i beta D) on an n x n grid, with the
    /// configured evanescent handling applied.
    pub fn transfer_factor(&self, bin_x: usize, bin_y: usize, grid_side: usize) -> Complex64 {
        let beta = beta_axial(bin_x, bin_y, grid_side, self);
        if beta.im == 0.0 {
            Complex64::from_polar(1.0, beta.re * self.spacing)
        } else {
            match self.evanescent_mode {
                EvanescentMode::Decay => Complex64::new((-beta.im * self.spacing).exp(), 0.0),
                // Truncation models the decayed branch as gone; over zero
                // distance nothing has decayed yet, so the hop stays exactly
                // the identity in either mode.
                EvanescentMode::Truncate if self.spacing == 0.0 => Complex64::new(1.0, 0.0),
                EvanescentMode::Truncate => Complex64::new(0.0, 0.0),
            }
        }
    }

    /// Which bins of an n x n grid carry homogeneous (propagating) waves.
    pub fn propagating_mask(&self, grid_side: usize) -> Vec<bool> {
        let mut mask = Vec::with_capacity(grid_side * grid_side);
        for by in 0..grid_side {
            for bx in 0..grid_side {
                mask.push(beta_axial(bx, by, grid_side, self).im == 0.0);
            }
        }
        mask
    }

    fn spectral_apply(&self, field: &AmplitudeField, conjugate: bool) -> Result<AmplitudeField> {
        if field.pixel_pitch() != self.pixel_pitch {
            return Err(Error::PitchMismatch {
                field: field.pixel_pitch(),
                step: self.pixel_pitch,
            });
        }
        // Over zero distance every transfer factor is exactly one, so the hop
        // is the identity bit for bit; skip the transform round trip.
        if self.spacing == 0.0 {
            return Ok(field.clone());
        }
        let n = field.grid_side();
        let np = n * self.pad_factor;
        let offset = (np - n) / 2;

        let mut buf = vec![Complex64::new(0.0, 0.0); np * np];
        let src = field.pixels();
        for r in 0..n {
            for c in 0..n {
                buf[(r + offset) * np + (c + offset)] = src[r * n + c];
            }
        }

        fft::fft2_in_place(&mut buf, np, FftDirection::Forward);
        for by in 0..np {
            for bx in 0..np {
                let f = self.transfer_factor(bx, by, np);
                buf[by * np + bx] *= if conjugate { f.conj() } else { f };
            }
        }
        fft::fft2_in_place(&mut buf, np, FftDirection::Inverse);

        let mut out = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                out.push(buf[(r + offset) * np + (c + offset)]);
            }
        }
        AmplitudeField::new(n, self.pixel_pitch, out)
    }
}

/// Axial wavenumber of DFT bin (bin_x, bin_y) on an n x n grid.
///
/// Bins map to signed frequency indices m = bin for bin <= n/2 and bin - n
/// above, giving the angular frequency 2 pi m / (n * pitch). Returns a purely
/// real value for propagating bins, a purely imaginary one (positive
/// imaginary part) for evanescent bins, and exactly zero at grazing.
pub fn beta_axial(bin_x: usize, bin_y: usize, grid_side: usize, spec: &PropagationSpec) -> Complex64 {
    assert!(
        bin_x < grid_side && bin_y < grid_side,
        "bin ({bin_x},{bin_y}) outside {grid_side} x {grid_side} grid"
    );
    let kx = angular_frequency(bin_x, grid_side, spec.pixel_pitch);
    let ky = angular_frequency(bin_y, grid_side, spec.pixel_pitch);
    let k0 = spec.wavenumber();
    let r = k0 * k0 - kx * kx - ky * ky;
    if r >= 0.0 {
        Complex64::new(r.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, (-r).sqrt())
    }
}

fn angular_frequency(bin: usize, grid_side: usize, pitch: f64) -> f64 {
    let m = if bin <= grid_side / 2 {
        bin as i64
    } else {
        bin as i64 - grid_side as i64
    };
    2.0 * PI * m as f64 / (grid_side as f64 * pitch)
}

/// One diffractive panel: per-pixel absorption exponent a >= 0 and phase b.
/// Pixel j of the incident field is multiplied by exp(-a_j + i b_j).
#[derive(Clone, Debug, PartialEq)]
pub struct DiffractivePanel {
    grid_side: usize,
    absorption: Vec<f64>,
    phase: Vec<f64>,
}

impl DiffractivePanel {
    /// Build a passive panel. Negative absorption (gain) is rejected; values
    /// above [`MAX_ABSORPTION`] are clamped.
    pub fn new(grid_side: usize, absorption: Vec<f64>, phase: Vec<f64>) -> Result<Self> {
        if grid_side == 0 {
            return Err(Error::InvalidParameter("grid_side must be positive".into()));
        }
        let len = grid_side * grid_side;
        if absorption.len() != len {
            return Err(Error::ShapeMismatch {
                context: "panel absorption length",
                left: absorption.len(),
                right: len,
            });
        }
        if phase.len() != len {
            return Err(Error::ShapeMismatch {
                context: "panel phase length",
                left: phase.len(),
                right: len,
            });
        }
        let mut absorption = absorption;
        for (index, a) in absorption.iter_mut().enumerate() {
            if !a.is_finite() {
                return Err(Error::NonFinite { index });
            }
            if *a < 0.0 {
                return Err(Error::NegativeAbsorption { index, value: *a });
            }
            if *a > MAX_ABSORPTION {
                *a = MAX_ABSORPTION;
            }
        }
        if let Some(index) = phase.iter().position(|b| !b.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            grid_side,
            absorption,
            phase,
        })
    }

    /// Fully transparent panel (a = 0, b = 0).
    pub fn identity(grid_side: usize) -> Self {
        Self {
            grid_side,
            absorption: vec![0.0; grid_side * grid_side],
            phase: vec![0.0; grid_side * grid_side],
        }
    }

    /// Lossless panel with the given phases.
    pub fn pure_phase(grid_side: usize, phase: Vec<f64>) -> Result<Self> {
        Self::new(grid_side, vec![0.0; grid_side * grid_side], phase)
    }

    /// Bypasses the passivity check. Exists solely so negative controls can
    /// inject a gain panel and watch the contraction verdict fail; never use
    /// it to model a real element.
    #[doc(hidden)]
    pub fn new_unchecked(grid_side: usize, absorption: Vec<f64>, phase: Vec<f64>) -> Self {
        assert_eq!(absorption.len(), grid_side * grid_side);
        assert_eq!(phase.len(), grid_side * grid_side);
        Self {
            grid_side,
            absorption,
            phase,
        }
    }

    pub fn grid_side(&self) -> usize {
        self.grid_side
    }

    pub fn absorption(&self) -> &[f64] {
        &self.absorption
    }

    pub fn phase(&self) -> &[f64] {
        &self.phase
    }

    /// Complex transmission of pixel j.
    pub fn transmission(&self, j: usize) -> Complex64 {
        Complex64::from_polar((-self.absorption[j]).exp(), self.phase[j])
    }

    /// Apply the panel pixel-wise.
    pub fn modulate(&self, field: &AmplitudeField) -> Result<AmplitudeField> {
        self.check_grid(field)?;
        let data = field
            .pixels()
            .iter()
            .enumerate()
            .map(|(j, z)| z * self.transmission(j))
            .collect();
        Ok(field.with_data(data))
    }

    /// Apply the conjugate transpose of the panel (conjugated transmission).
    pub fn modulate_adjoint(&self, field: &AmplitudeField) -> Result<AmplitudeField> {
        self.check_grid(field)?;
        let data = field
            .pixels()
            .iter()
            .enumerate()
            .map(|(j, z)| z * self.transmission(j).conj())
            .collect();
        Ok(field.with_data(data))
    }

    /// Snap phases to `levels` equally spaced values on [0, 2 pi). A hook for
    /// fabrication-style studies; nothing in this crate calls it implicitly.
    pub fn quantize_phase(&self, levels: usize) -> Result<Self> {
        if levels == 0 {
            return Err(Error::InvalidParameter("levels must be >= 1".into()));
        }
        let step = 2.0 * PI / levels as f64;
        let phase = self
            .phase
            .iter()
            .map(|b| {
                let wrapped = b.rem_euclid(2.0 * PI);
                let q = (wrapped / step).round() * step;
                q.rem_euclid(2.0 * PI)
            })
            .collect();
        Ok(Self {
            grid_side: self.grid_side,
            absorption: self.absorption.clone(),
            phase,
        })
    }

    pub fn with_phase(&self, phase: Vec<f64>) -> Result<Self> {
        Self::new(self.grid_side, self.absorption.clone(), phase)
    }

    fn check_grid(&self, field: &AmplitudeField) -> Result<()> {
        if field.grid_side() != self.grid_side {
            return Err(Error::ShapeMismatch {
                context: "panel vs field grid",
                left: self.grid_side,
                right: field.grid_side(),
            });
        }
        Ok(())
    }
}

/// A stack of L panels interleaved with L + 1 free-space hops:
/// hop 0, panel 0, hop 1, panel 1, ..., panel L-1, hop L.
#[derive(Clone, Debug, PartialEq)]
pub struct OpticalStack {
    grid_side: usize,
    panels: Vec<DiffractivePanel>,
    propagations: Vec<PropagationSpec>,
}

impl OpticalStack {
    pub fn new(
        grid_side: usize,
        panels: Vec<DiffractivePanel>,
        propagations: Vec<PropagationSpec>,
    ) -> Result<Self> {
        if propagations.len() != panels.len() + 1 {
            return Err(Error::ShapeMismatch {
                context: "propagation count (must be panel count + 1)",
                left: propagations.len(),
                right: panels.len() + 1,
            });
        }
        for p in &panels {
            if p.grid_side() != grid_side {
                return Err(Error::ShapeMismatch {
                    context: "panel grid side",
                    left: p.grid_side(),
                    right: grid_side,
                });
            }
        }
        let first = &propagations[0];
        for s in &propagations[1..] {
            if s.wavelength() != first.wavelength() || s.pixel_pitch() != first.pixel_pitch() {
                return Err(Error::InvalidParameter(
                    "all propagation steps must share wavelength and pixel pitch".into(),
                ));
            }
        }
        Ok(Self {
            grid_side,
            panels,
            propagations,
        })
    }

    /// Panel-free stack: a single free-space hop.
    pub fn single(grid_side: usize, propagation: PropagationSpec) -> Result<Self> {
        Self::new(grid_side, Vec::new(), vec![propagation])
    }

    pub fn grid_side(&self) -> usize {
        self.grid_side
    }

    pub fn layer_count(&self) -> usize {
        self.panels.len()
    }

    pub fn panels(&self) -> &[DiffractivePanel] {
        &self.panels
    }

    pub fn propagations(&self) -> &[PropagationSpec] {
        &self.propagations
    }

    pub fn wavelength(&self) -> f64 {
        self.propagations[0].wavelength()
    }

    pub fn pixel_pitch(&self) -> f64 {
        self.propagations[0].pixel_pitch()
    }

    /// Same geometry, new panels (used by training updates).
    pub fn with_panels(&self, panels: Vec<DiffractivePanel>) -> Result<Self> {
        Self::new(self.grid_side, panels, self.propagations.clone())
    }

    /// Run the full chain on an input field.
    pub fn forward(&self, input: &AmplitudeField) -> Result<AmplitudeField> {
        if input.grid_side() != self.grid_side {
            return Err(Error::ShapeMismatch {
                context: "stack vs input grid",
                left: self.grid_side,
                right: input.grid_side(),
            });
        }
        let mut field = self.propagations[0].propagate(input)?;
        for (panel, hop) in self.panels.iter().zip(&self.propagations[1..]) {
            field = panel.modulate(&field)?;
            field = hop.propagate(&field)?;
        }
        Ok(field)
    }

    /// Forward pass that also returns each panel's output field (needed by
    /// the adjoint gradient). Element i of the trace is the field just after
    /// panel i, before the following hop.
    pub(crate) fn forward_trace(
        &self,
        input: &AmplitudeField,
    ) -> Result<(Vec<AmplitudeField>, AmplitudeField)> {
        if input.grid_side() != self.grid_side {
            return Err(Error::ShapeMismatch {
                context: "stack vs input grid",
                left: self.grid_side,
                right: input.grid_side(),
            });
        }
        let mut panel_outputs = Vec::with_capacity(self.panels.len());
        let mut field = self.propagations[0].propagate(input)?;
        for (panel, hop) in self.panels.iter().zip(&self.propagations[1..]) {
            let modulated = panel.modulate(&field)?;
            panel_outputs.push(modulated.clone());
            field = hop.propagate(&modulated)?;
        }
        Ok((panel_outputs, field))
    }

    /// Concatenate two stacks. The junction (last hop of `self`, first hop of
    /// `other`) merges into one hop with summed spacing, which is exact since
    /// the spectral factors compose: exp(i beta D1) exp(i beta D2) =
    /// exp(i beta (D1 + D2)). Requires matching geometry and junction settings.
    pub fn then(&self, other: &OpticalStack) -> Result<OpticalStack> {
        if self.grid_side != other.grid_side {
            return Err(Error::ShapeMismatch {
                context: "stack grids",
                left: self.grid_side,
                right: other.grid_side,
            });
        }
        if self.wavelength() != other.wavelength() || self.pixel_pitch() != other.pixel_pitch() {
            return Err(Error::InvalidParameter(
                "stacks must share wavelength and pixel pitch".into(),
            ));
        }
        let a_last = self.propagations.last().expect("stack has >= 1 hop");
        let b_first = &other.propagations[0];
        if a_last.evanescent_mode() != b_first.evanescent_mode()
            || a_last.pad_factor() != b_first.pad_factor()
        {
            return Err(Error::InvalidParameter(
                "junction hops must share evanescent mode and pad factor".into(),
            ));
        }
        let merged = a_last
            .clone()
            .with_spacing(a_last.spacing() + b_first.spacing())?;

        let mut panels = self.panels.clone();
        panels.extend(other.panels.iter().cloned());
        let mut propagations: Vec<PropagationSpec> =
            self.propagations[..self.propagations.len() - 1].to_vec();
        propagations.push(merged);
        propagations.extend(other.propagations[1..].iter().cloned());
        OpticalStack::new(self.grid_side, panels, propagations)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::AmplitudeField;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn spec(spacing: f64) -> PropagationSpec {
        PropagationSpec::new(spacing, 0.75, 0.4).unwrap()
    }

    #[test]
    fn beta_at_zero_frequency_is_vacuum_wavenumber() {
        let s = spec(10.0);
        let beta = beta_axial(0, 0, 8, &s);
        assert_eq!(beta.im, 0.0);
        assert!((beta.re - 2.0 * PI / 0.75).abs() < 1e-12);
    }

    #[test]
    fn beta_at_grazing_is_zero() {
        // n = 4, pitch = 1: bin (1, 0) has kx = 2 pi / 4 = pi / 2. Choosing
        // wavelength 4 makes k0 = pi / 2 as well, so beta vanishes exactly.
        let s = PropagationSpec::new(5.0, 4.0, 1.0).unwrap();
        let beta = beta_axial(1, 0, 4, &s);
        assert_eq!(beta, c(0.0, 0.0));
    }

    #[test]
    fn beta_is_imaginary_past_cutoff() {
        // Same geometry: bin (1, 1) has kx = ky = k0, so
        // beta = sqrt(k0^2 - 2 k0^2) = i k0.
        let s = PropagationSpec::new(5.0, 4.0, 1.0).unwrap();
        let beta = beta_axial(1, 1, 4, &s);
        assert_eq!(beta.re, 0.0);
        assert!((beta.im - s.wavenumber()).abs() < 1e-12);
        assert!(beta.im > 0.0);
    }

    fn ramp_field(n: usize) -> AmplitudeField {
        let data: Vec<Complex64> = (0..n * n)
            .map(|i| {
                let x = i as f64;
                c((0.31 * x).sin() * 0.4 + 0.1, (0.17 * x).cos() * 0.3)
            })
            .collect();
        AmplitudeField::new(n, 0.4, data).unwrap()
    }

    #[test]
    fn zero_spacing_hop_is_identity() {
        for pad in [1usize, 2] {
            let s = spec(0.0).with_pad_factor(pad).unwrap();
            let f = ramp_field(8);
            let out = s.propagate(&f).unwrap();
            let err = out.sub(&f).unwrap().l2_norm();
            assert!(err <= 1e-10 * f.l2_norm(), "pad={pad} err={err}");
        }
    }

    #[test]
    fn band_limited_field_keeps_its_norm() {
        // Build a field whose spectrum lives only on propagating bins, then
        // check the exact (unpadded) model preserves its L2 norm.
        let n = 8;
        let s = spec(17.0).with_pad_factor(1).unwrap();
        let mask = s.propagating_mask(n);
        let raw = ramp_field(n);
        let mut spectrum = raw.unitary_fft2().into_pixels();
        for (z, keep) in spectrum.iter_mut().zip(&mask) {
            if !keep {
                *z = c(0.0, 0.0);
            }
        }
        let band_limited = AmplitudeField::new(n, 0.4, spectrum).unwrap().unitary_ifft2();
        let norm_in = band_limited.l2_norm();
        assert!(norm_in > 0.1, "fixture degenerate");

        let out = s.propagate(&band_limited).unwrap();
        assert!((out.l2_norm() - norm_in).abs() <= 1e-12 * norm_in);
    }

    #[test]
    fn plane_wave_picks_up_axial_phase() {
        // A uniform field is the pure zero-frequency mode, so one hop of
        // spacing D multiplies it by exp(i k0 D) exactly (unpadded model).
        let d = 12.5;
        let s = spec(d).with_pad_factor(1).unwrap();
        let f = AmplitudeField::constant(8, 0.4, c(0.6, -0.2));
        let out = s.propagate(&f).unwrap();
        let expected = Complex64::from_polar(1.0, s.wavenumber() * d);
        for (got, orig) in out.pixels().iter().zip(f.pixels()) {
            assert!((got - orig * expected).norm() < 1e-12);
        }
    }

    #[test]
    fn truncate_mode_zeroes_evanescent_bins() {
        let s = spec(3.0)
            .with_pad_factor(1)
            .unwrap()
            .with_evanescent_mode(EvanescentMode::Truncate);
        let n = 8;
        let mask = s.propagating_mask(n);
        assert!(mask.iter().any(|m| !m), "geometry should have evanescent bins");
        let out = s.propagate(&ramp_field(n)).unwrap();
        let spectrum = out.unitary_fft2();
        for (z, keep) in spectrum.pixels().iter().zip(&mask) {
            if !keep {
                assert!(z.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn propagate_rejects_pitch_mismatch() {
        let s = spec(1.0);
        let f = AmplitudeField::zeros(4, 0.5);
        assert!(matches!(s.propagate(&f), Err(Error::PitchMismatch { .. })));
    }

    #[test]
    fn ln2_absorption_halves_amplitude() {
        let n = 2;
        let panel =
            DiffractivePanel::new(n, vec![std::f64::consts::LN_2; n * n], vec![0.0; n * n]).unwrap();
        let f = AmplitudeField::constant(n, 0.4, c(1.0, 0.0));
        let out = panel.modulate(&f).unwrap();
        for z in out.pixels() {
            assert!((z.re - 0.5).abs() < 1e-15);
            assert_eq!(z.im, 0.0);
        }
    }

    #[test]
    fn quarter_turn_phase_rotates_to_imaginary() {
        let n = 2;
        let panel = DiffractivePanel::pure_phase(n, vec![PI / 2.0; n * n]).unwrap();
        let f = AmplitudeField::constant(n, 0.4, c(1.0, 0.0));
        let out = panel.modulate(&f).unwrap();
        for z in out.pixels() {
            assert!(z.re.abs() < 1e-15);
            assert!((z.im - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn panel_rejects_gain_and_clamps_large_absorption() {
        let n = 2;
        assert!(matches!(
            DiffractivePanel::new(n, vec![-0.1, 0.0, 0.0, 0.0], vec![0.0; 4]),
            Err(Error::NegativeAbsorption { index: 0, .. })
        ));
        let p = DiffractivePanel::new(n, vec![100.0; 4], vec![0.0; 4]).unwrap();
        assert_eq!(p.absorption()[0], MAX_ABSORPTION);
    }

    #[test]
    fn modulate_rejects_grid_mismatch() {
        let panel = DiffractivePanel::identity(4);
        let f = AmplitudeField::zeros(8, 0.4);
        assert!(matches!(
            panel.modulate(&f),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn quantize_phase_snaps_to_grid() {
        let panel = DiffractivePanel::pure_phase(2, vec![0.1, 1.4, 3.0, 6.0]).unwrap();
        let q = panel.quantize_phase(4).unwrap();
        let step = PI / 2.0;
        for b in q.phase() {
            let ratio = b / step;
            assert!((ratio - ratio.round()).abs() < 1e-12);
        }
    }

    fn two_layer_stack(n: usize) -> OpticalStack {
        let phase_a: Vec<f64> = (0..n * n).map(|i| (i as f64 * 0.37).sin()).collect();
        let phase_b: Vec<f64> = (0..n * n).map(|i| (i as f64 * 0.71).cos()).collect();
        let absorption: Vec<f64> = (0..n * n).map(|i| 0.02 * (i % 5) as f64).collect();
        OpticalStack::new(
            n,
            vec![
                DiffractivePanel::new(n, absorption, phase_a).unwrap(),
                DiffractivePanel::pure_phase(n, phase_b).unwrap(),
            ],
            vec![
                spec(7.0).with_pad_factor(1).unwrap(),
                spec(11.0).with_pad_factor(1).unwrap(),
                spec(5.0).with_pad_factor(1).unwrap(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn forward_is_linear() {
        let stack = two_layer_stack(8);
        let f = ramp_field(8);
        let g = AmplitudeField::new(
            8,
            0.4,
            (0..64).map(|i| c((i as f64 * 0.23).cos(), (i as f64 * 0.41).sin())).collect(),
        )
        .unwrap();
        let alpha = c(0.7, -0.3);
        let beta = c(-0.2, 0.5);

        let combo_in = f.scaled(alpha).add(&g.scaled(beta)).unwrap();
        let lhs = stack.forward(&combo_in).unwrap();
        let rhs = stack
            .forward(&f)
            .unwrap()
            .scaled(alpha)
            .add(&stack.forward(&g).unwrap().scaled(beta))
            .unwrap();
        let scale = lhs.l2_norm().max(rhs.l2_norm());
        let err = lhs.sub(&rhs).unwrap().l2_norm();
        assert!(err <= 1e-11 * scale, "linearity violation {err}");
    }

    #[test]
    fn empty_stack_is_one_hop() {
        let s = spec(9.0).with_pad_factor(1).unwrap();
        let stack = OpticalStack::single(8, s.clone()).unwrap();
        let f = ramp_field(8);
        let via_stack = stack.forward(&f).unwrap();
        let direct = s.propagate(&f).unwrap();
        assert_eq!(via_stack, direct);
    }

    #[test]
    fn forward_never_amplifies() {
        let stack = two_layer_stack(8);
        let f = ramp_field(8);
        let out = stack.forward(&f).unwrap();
        assert!(out.l2_norm() <= f.l2_norm() * (1.0 + 1e-12));
    }

    #[test]
    fn stack_validates_hop_count_and_geometry() {
        let n = 4;
        assert!(matches!(
            OpticalStack::new(n, vec![DiffractivePanel::identity(n)], vec![spec(1.0)]),
            Err(Error::ShapeMismatch { .. })
        ));
        let mismatched = vec![spec(1.0), PropagationSpec::new(1.0, 0.9, 0.4).unwrap()];
        assert!(matches!(
            OpticalStack::new(n, vec![DiffractivePanel::identity(n)], mismatched),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn adjoint_hop_reverses_inner_products() {
        // <P a, b> == <a, P^T b> for the adjoint hop.
        let s = spec(13.0);
        let a = ramp_field(8);
        let b = AmplitudeField::new(
            8,
            0.4,
            (0..64).map(|i| c((i as f64 * 0.13).sin(), (i as f64 * 0.29).cos())).collect(),
        )
        .unwrap();
        let lhs = s.propagate(&a).unwrap().inner(&b).unwrap();
        let rhs = a.inner(&s.propagate_adjoint(&b).unwrap()).unwrap();
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn adjoint_panel_reverses_inner_products() {
        let n = 8;
        let panel = DiffractivePanel::new(
            n,
            (0..n * n).map(|i| 0.01 * (i % 7) as f64).collect(),
            (0..n * n).map(|i| (i as f64 * 0.53).sin()).collect(),
        )
        .unwrap();
        let a = ramp_field(n);
        let b = AmplitudeField::constant(n, 0.4, c(0.2, 0.4));
        let lhs = panel.modulate(&a).unwrap().inner(&b).unwrap();
        let rhs = a.inner(&panel.modulate_adjoint(&b).unwrap()).unwrap();
        assert!((lhs - rhs).norm() < 1e-13);
    }
}

//! Collapse of a whole stack to one dense transfer matrix.
//!
//! Because every element of a stack is linear, the end-to-end map is a single
//! n^2 x n^2 complex matrix M, independent of how many layers the stack has.
//! M is assembled by probing the stack with each basis pixel (column j is the
//! forward image of the j-th unit pixel), which makes the assembly an
//! independent-per-column map and therefore trivially parallel and exactly
//! reproducible.
//!
//! For passive stacks M is a contraction: every singular value is at most 1.
//! [`SystemMatrix::singular_spectrum`] computes the spectrum (cached) and
//! [`SystemMatrix::is_contraction`] reports the verdict.

use crate::error::{Error, Result};
use crate::exec;
use crate::field::AmplitudeField;
use crate::optics::OpticalStack;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::sync::OnceLock;

/// Largest matrix dimension (n^2) assembled by default: 4096 keeps the dense
/// matrix at 256 MiB and the SVD tractable, i.e. grids up to 64 x 64.
pub const DEFAULT_ASSEMBLY_CAP: usize = 4096;

/// Dense end-to-end transfer matrix of a stack.
#[derive(Debug)]
pub struct SystemMatrix {
    grid_side: usize,
    pixel_pitch: f64,
    entries: DMatrix<Complex64>,
    spectrum: OnceLock<Vec<f64>>,
}

impl Clone for SystemMatrix {
    fn clone(&self) -> Self {
        Self {
            grid_side: self.grid_side,
            pixel_pitch: self.pixel_pitch,
            entries: self.entries.clone(),
            spectrum: self.spectrum.clone(),
        }
    }
}

impl SystemMatrix {
    /// Assemble by basis probing with the default dimension cap.
    pub fn assemble(stack: &OpticalStack) -> Result<Self> {
        Self::assemble_with_cap(stack, DEFAULT_ASSEMBLY_CAP)
    }

    /// Assemble by basis probing, refusing dimensions above `cap`.
    pub fn assemble_with_cap(stack: &OpticalStack, cap: usize) -> Result<Self> {
        let n = stack.grid_side();
        let dim = n * n;
        if dim > cap {
            return Err(Error::DimensionCap { dim, cap });
        }
        let pitch = stack.pixel_pitch();
        let columns: Vec<Vec<Complex64>> = exec::try_map(dim, |j| {
            let mut basis = AmplitudeField::zeros(n, pitch);
            let mut data = basis.pixels().to_vec();
            data[j] = Complex64::new(1.0, 0.0);
            basis = AmplitudeField::new(n, pitch, data)?;
            Ok::<_, Error>(stack.forward(&basis)?.into_pixels())
        })?;
        let entries = DMatrix::from_fn(dim, dim, |i, j| columns[j][i]);
        Ok(Self {
            grid_side: n,
            pixel_pitch: pitch,
            entries,
            spectrum: OnceLock::new(),
        })
    }

    /// Wrap an existing dense matrix (e.g. read back from disk).
    pub fn from_entries(grid_side: usize, pixel_pitch: f64, entries: DMatrix<Complex64>) -> Result<Self> {
        let dim = grid_side * grid_side;
        if grid_side == 0 || entries.nrows() != dim || entries.ncols() != dim {
            return Err(Error::ShapeMismatch {
                context: "matrix entries",
                left: entries.nrows().max(entries.ncols()),
                right: dim,
            });
        }
        if !pixel_pitch.is_finite() || pixel_pitch <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "pixel_pitch must be positive, got {pixel_pitch}"
            )));
        }
        Ok(Self {
            grid_side,
            pixel_pitch,
            entries,
            spectrum: OnceLock::new(),
        })
    }

    pub fn grid_side(&self) -> usize {
        self.grid_side
    }

    /// Matrix dimension n^2.
    pub fn dim(&self) -> usize {
        self.grid_side * self.grid_side
    }

    pub fn pixel_pitch(&self) -> f64 {
        self.pixel_pitch
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    /// Apply M to a field (flattened row-major, same layout as assembly).
    pub fn apply(&self, field: &AmplitudeField) -> Result<AmplitudeField> {
        if field.grid_side() != self.grid_side {
            return Err(Error::ShapeMismatch {
                context: "matrix vs field grid",
                left: self.grid_side,
                right: field.grid_side(),
            });
        }
        let v = DVector::from_column_slice(field.pixels());
        let out = &self.entries * v;
        AmplitudeField::new(self.grid_side, self.pixel_pitch, out.as_slice().to_vec())
    }

    /// Composite matrix: apply `self` first, then `other`.
    pub fn then(&self, other: &SystemMatrix) -> Result<SystemMatrix> {
        if self.grid_side != other.grid_side {
            return Err(Error::ShapeMismatch {
                context: "matrix grids",
                left: self.grid_side,
                right: other.grid_side,
            });
        }
        Ok(SystemMatrix {
            grid_side: self.grid_side,
            pixel_pitch: self.pixel_pitch,
            entries: &other.entries * &self.entries,
            spectrum: OnceLock::new(),
        })
    }

    /// Singular values in descending order. Computed once and cached.
    pub fn singular_spectrum(&self) -> Result<&[f64]> {
        if self.spectrum.get().is_none() {
            let svd = nalgebra::linalg::SVD::try_new(
                self.entries.clone(),
                false,
                false,
                f64::EPSILON,
                0,
            )
            .ok_or(Error::NumericalFailure)?;
            let mut values: Vec<f64> = svd.singular_values.iter().copied().collect();
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::NumericalFailure);
            }
            values.sort_by(|a, b| b.partial_cmp(a).expect("finite singular values"));
            let _ = self.spectrum.set(values);
        }
        Ok(self.spectrum.get().expect("spectrum cached").as_slice())
    }

    /// Largest singular value (operator norm).
    pub fn sv_max(&self) -> Result<f64> {
        Ok(self.singular_spectrum()?[0])
    }

    /// Contraction verdict: sv_max <= 1 + tol, plus summary statistics.
    /// `near_unit` counts singular values within 1e-6 of 1 (the effectively
    /// lossless directions).
    pub fn is_contraction(&self, tol: f64) -> Result<ContractionReport> {
        let spectrum = self.singular_spectrum()?;
        let sv_max = spectrum[0];
        let sv_min = *spectrum.last().expect("non-empty spectrum");
        let near_unit = spectrum.iter().filter(|v| (*v - 1.0).abs() <= 1e-6).count();
        Ok(ContractionReport {
            is_contraction: sv_max <= 1.0 + tol,
            sv_max,
            sv_min,
            near_unit,
            tol,
        })
    }
}

/// Summary of a contraction check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionReport {
    pub is_contraction: bool,
    pub sv_max: f64,
    pub sv_min: f64,
    /// Number of singular values within 1e-6 of exactly 1.
    pub near_unit: usize,
    pub tol: f64,
}

//! Unitary 2-D FFT on square grids.
//!
//! rustfft transforms are unnormalised; we scale every 2-D pass by 1/n
//! (1/sqrt(n) per dimension) so that forward and inverse transforms are both
//! unitary and Parseval holds exactly up to rounding. Plans are cached in a
//! process-wide planner; the returned plan handles are safe to share across
//! threads.

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::sync::{Arc, LazyLock, Mutex};

static PLANNER: LazyLock<Mutex<FftPlanner<f64>>> = LazyLock::new(|| Mutex::new(FftPlanner::new()));

fn plan(n: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    PLANNER
        .lock()
        .expect("FFT planner lock poisoned")
        .plan_fft(n, direction)
}

/// In-place unitary 2-D transform of a row-major n x n buffer.
pub(crate) fn fft2_in_place(data: &mut [Complex64], n: usize, direction: FftDirection) {
    assert_eq!(data.len(), n * n, "buffer is not an n x n grid");
    let fft = plan(n, direction);
    // Transform all rows in one batched call, transpose, transform the
    // (former) columns, transpose back.
    fft.process(data);
    transpose_square(data, n);
    fft.process(data);
    transpose_square(data, n);
    let scale = 1.0 / n as f64;
    for z in data.iter_mut() {
        *z *= scale;
    }
}

fn transpose_square(data: &mut [Complex64], n: usize) {
    for r in 0..n {
        for c in (r + 1)..n {
            data.swap(r * n + c, c * n + r);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transpose_involution() {
        let n = 5;
        let orig: Vec<Complex64> = (0..n * n).map(|i| Complex64::new(i as f64, 0.0)).collect();
        let mut data = orig.clone();
        transpose_square(&mut data, n);
        assert_ne!(data, orig);
        transpose_square(&mut data, n);
        assert_eq!(data, orig);
    }
}

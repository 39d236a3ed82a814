use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

const BLOCK: usize = 16;

/// Square 2D FFT built from row transforms and blocked transposes.
///
/// Data is row-major with `y` outer. The inverse transform is normalized.
pub(crate) struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch_len: usize,
}

impl Fft2 {
    pub(crate) fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            n,
            forward,
            inverse,
            scratch_len,
        }
    }

    fn rows(&self, fft: &Arc<dyn Fft<f64>>, data: &mut [Complex64]) {
        data.par_chunks_mut(self.n).for_each_init(
            || vec![Complex64::default(); self.scratch_len],
            |scratch, row| fft.process_with_scratch(row, scratch),
        );
    }

    fn transpose(&self, src: &[Complex64], dst: &mut [Complex64]) {
        let n = self.n;
        dst.par_chunks_mut(n * BLOCK)
            .enumerate()
            .for_each(|(bi, rows)| {
                let i0 = bi * BLOCK;
                for j0 in (0..n).step_by(BLOCK) {
                    for (di, row) in rows.chunks_mut(n).enumerate() {
                        let i = i0 + di;
                        for j in j0..j0 + BLOCK {
                            row[j] = src[j * n + i];
                        }
                    }
                }
            });
    }

    /// Forward transform. The result is stored transposed: row `a`, column
    /// `b` holds the coefficient of `exp(i (k_a x + k_b y))`. `work` must
    /// have length `n²`; its contents are clobbered.
    pub(crate) fn forward(&self, data: &mut Vec<Complex64>, work: &mut Vec<Complex64>) {
        debug_assert_eq!(data.len(), self.n * self.n);
        self.rows(&self.forward, data);
        self.transpose(data, work);
        self.rows(&self.forward, work);
        std::mem::swap(data, work);
    }

    /// Inverse of [`Fft2::forward`], scaled by `1/n²`, from the transposed
    /// spectral layout back to row-major physical layout.
    pub(crate) fn inverse(&self, data: &mut Vec<Complex64>, work: &mut Vec<Complex64>) {
        debug_assert_eq!(data.len(), self.n * self.n);
        self.rows(&self.inverse, data);
        self.transpose(data, work);
        self.rows(&self.inverse, work);
        let scale = 1.0 / (self.n * self.n) as f64;
        work.par_iter_mut().for_each(|v| *v *= scale);
        std::mem::swap(data, work);
    }
}

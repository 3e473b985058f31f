//! Three-dimensional complex FFT assembled from batched 1D transforms.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Planned forward and inverse transforms for an `n x n x n` row-major array.
///
/// The inverse is normalized by `1/n^3`, so `inverse(forward(f)) == f`.
pub struct Fft3 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft3").field("n", &self.n).finish()
    }
}

impl Fft3 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { n, fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.fwd);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inv);
        let scale = 1.0 / (self.n * self.n * self.n) as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    /// Forward transform of real samples.
    pub fn forward_real(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }

    /// Inverse transform keeping the real part.
    pub fn inverse_real(&self, spectrum: &[Complex64]) -> Vec<f64> {
        let mut buf = spectrum.to_vec();
        self.inverse(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        let n2 = n * n;
        assert_eq!(data.len(), n2 * n, "buffer length does not match the planned size");
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        // contiguous axis
        plan.process_with_scratch(data, &mut scratch);
        let mut plane = vec![Complex64::default(); n2];
        // middle axis: transpose each x-plane
        for i in 0..n {
            let block = &mut data[i * n2..(i + 1) * n2];
            for j in 0..n {
                for k in 0..n {
                    plane[k * n + j] = block[j * n + k];
                }
            }
            plan.process_with_scratch(&mut plane, &mut scratch);
            for j in 0..n {
                for k in 0..n {
                    block[j * n + k] = plane[k * n + j];
                }
            }
        }
        // slowest axis: gather (i, k) lines at fixed j
        for j in 0..n {
            for i in 0..n {
                let base = i * n2 + j * n;
                for k in 0..n {
                    plane[k * n + i] = data[base + k];
                }
            }
            plan.process_with_scratch(&mut plane, &mut scratch);
            for i in 0..n {
                let base = i * n2 + j * n;
                for k in 0..n {
                    data[base + k] = plane[k * n + i];
                }
            }
        }
    }
}

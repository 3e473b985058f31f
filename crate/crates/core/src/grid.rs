//! Periodic grid on the box `[-L/2, L/2)^3` with cached FFT plans.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::fft::Fft3;

struct GridInner {
    n: usize,
    length: f64,
    fft: Fft3,
    padded: OnceLock<Arc<Fft3>>,
    k_full: Vec<f64>,
    k_odd: Vec<f64>,
}

/// Uniform periodic grid with `n^3` points and side length `L`.
///
/// Cheap to clone; clones share FFT plans. Sample `i` along an axis sits at
/// `-L/2 + i*dx`, so the origin is the sample `n/2`.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid").field("n", &self.n()).field("length", &self.length()).finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n() == other.n() && self.length() == other.length()
    }
}

impl Grid {
    /// `n` must be a power of two and at least 8, `length` must be at least 8.
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("n = {n} must be a power of two >= 8")));
        }
        if !(length.is_finite() && length >= 8.0) {
            return Err(Error::InvalidGrid(format!("box length {length} must be at least 8")));
        }
        let base = 2.0 * PI / length;
        let k_full: Vec<f64> =
            (0..n).map(|i| base * if i < n / 2 { i as f64 } else { i as f64 - n as f64 }).collect();
        let mut k_odd = k_full.clone();
        k_odd[n / 2] = 0.0;
        Ok(Self {
            inner: Arc::new(GridInner { n, length, fft: Fft3::new(n), padded: OnceLock::new(), k_full, k_odd }),
        })
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    pub fn length(&self) -> f64 {
        self.inner.length
    }

    pub fn dx(&self) -> f64 {
        self.inner.length / self.inner.n as f64
    }

    /// Number of grid points.
    pub fn size(&self) -> usize {
        self.inner.n.pow(3)
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(3)
    }

    pub fn fft(&self) -> &Fft3 {
        &self.inner.fft
    }

    /// FFT plan for the doubled grid used by free-space convolutions.
    pub fn padded_fft(&self) -> Arc<Fft3> {
        self.inner.padded.get_or_init(|| Arc::new(Fft3::new(2 * self.inner.n))).clone()
    }

    /// Coordinate of sample `i` along any axis.
    pub fn coord(&self, i: usize) -> f64 {
        -0.5 * self.inner.length + i as f64 * self.dx()
    }

    pub fn point(&self, idx: usize) -> [f64; 3] {
        let [i, j, k] = self.unflatten(idx);
        [self.coord(i), self.coord(j), self.coord(k)]
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.inner.n + j) * self.inner.n + k
    }

    pub fn unflatten(&self, idx: usize) -> [usize; 3] {
        let n = self.inner.n;
        [idx / (n * n), (idx / n) % n, idx % n]
    }

    /// Angular wavenumbers, Nyquist included (use for even multipliers).
    pub fn wavenumbers(&self) -> &[f64] {
        &self.inner.k_full
    }

    /// Angular wavenumbers with the Nyquist entry zeroed (use for odd multipliers).
    pub fn derivative_wavenumbers(&self) -> &[f64] {
        &self.inner.k_odd
    }

    /// `|k|^2` of flat spectral index `idx`.
    pub fn k2(&self, idx: usize) -> f64 {
        let [i, j, k] = self.unflatten(idx);
        let kk = &self.inner.k_full;
        kk[i] * kk[i] + kk[j] * kk[j] + kk[k] * kk[k]
    }

    /// Integer mode index (signed) along an axis.
    pub fn mode(&self, i: usize) -> i64 {
        let n = self.inner.n as i64;
        if (i as i64) < n / 2 {
            i as i64
        } else {
            i as i64 - n
        }
    }

    /// Builds samples of `f` at the grid points.
    pub fn sample(&self, f: impl Fn([f64; 3]) -> f64) -> Vec<f64> {
        (0..self.size()).map(|idx| f(self.point(idx))).collect()
    }

    pub fn ensure_same(&self, other: &Grid, what: &str) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{what}: n = {} / L = {} versus n = {} / L = {}",
                self.n(),
                self.length(),
                other.n(),
                other.length()
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid::new(12, 10.0).is_err());
        assert!(Grid::new(4, 10.0).is_err());
        assert!(Grid::new(16, 7.9).is_err());
        assert!(Grid::new(16, 8.0).is_ok());
        assert!(Grid::new(16, f64::NAN).is_err());
        assert!(Grid::new(16, 8.5).is_ok());
    }

    #[test]
    fn origin_is_a_sample() {
        let g = Grid::new(16, 10.0).unwrap();
        assert_eq!(g.coord(8), 0.0);
        assert_eq!(g.point(g.index(8, 8, 8)), [0.0; 3]);
    }

    #[test]
    fn nyquist_handling() {
        let g = Grid::new(8, 4.0 * PI).unwrap();
        assert_eq!(g.wavenumbers()[4], -2.0);
        assert_eq!(g.derivative_wavenumbers()[4], 0.0);
        assert_eq!(g.wavenumbers()[7], -0.5);
        assert_eq!(g.mode(5), -3);
    }
}

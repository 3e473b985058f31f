//! Scalar and vector fields sampled on a [`Grid`], with lazily cached spectra.

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{ensure_finite, Error, Result};
use crate::grid::Grid;

/// Spectral coefficients of the three components of a vector field.
pub type VectorSpectrum = [Vec<Complex64>; 3];

/// Real scalar field on a periodic grid. Immutable once built.
#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
    spectrum: OnceLock<Vec<Complex64>>,
}

impl ScalarField {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.size() {
            return Err(Error::GridMismatch(format!(
                "scalar field has {} samples, grid expects {}",
                values.len(),
                grid.size()
            )));
        }
        ensure_finite(&values, "scalar field")?;
        Ok(Self { grid: grid.clone(), values, spectrum: OnceLock::new() })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self { grid: grid.clone(), values: vec![0.0; grid.size()], spectrum: OnceLock::new() }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 3]) -> f64) -> Result<Self> {
        Self::new(grid, grid.sample(f))
    }

    /// Inverse transform of `spectrum`, keeping the real part.
    pub fn from_spectrum(grid: &Grid, spectrum: &[Complex64]) -> Result<Self> {
        if spectrum.len() != grid.size() {
            return Err(Error::GridMismatch("spectrum length".into()));
        }
        Self::new(grid, grid.fft().inverse_real(spectrum))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Forward transform, computed once and cached.
    pub fn spectrum(&self) -> &[Complex64] {
        self.spectrum.get_or_init(|| self.grid.fft().forward_real(&self.values))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|v| v * s).collect(), spectrum: OnceLock::new() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.grid.ensure_same(&other.grid, "scalar add")?;
        Self::new(&self.grid, self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.grid.ensure_same(&other.grid, "scalar sub")?;
        Self::new(&self.grid, self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect())
    }

    /// `L^2` norm over the periodic box.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }
}

/// Real vector field with three components on a periodic grid.
#[derive(Clone, Debug)]
pub struct VectorField {
    grid: Grid,
    comps: [Vec<f64>; 3],
    spectrum: OnceLock<VectorSpectrum>,
}

impl VectorField {
    pub fn new(grid: &Grid, comps: [Vec<f64>; 3]) -> Result<Self> {
        for c in &comps {
            if c.len() != grid.size() {
                return Err(Error::GridMismatch(format!(
                    "vector component has {} samples, grid expects {}",
                    c.len(),
                    grid.size()
                )));
            }
            ensure_finite(c, "vector field")?;
        }
        Ok(Self { grid: grid.clone(), comps, spectrum: OnceLock::new() })
    }

    pub fn zeros(grid: &Grid) -> Self {
        let z = vec![0.0; grid.size()];
        Self { grid: grid.clone(), comps: [z.clone(), z.clone(), z], spectrum: OnceLock::new() }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 3]) -> [f64; 3]) -> Result<Self> {
        let mut comps = [Vec::with_capacity(grid.size()), Vec::with_capacity(grid.size()), Vec::with_capacity(grid.size())];
        for idx in 0..grid.size() {
            let v = f(grid.point(idx));
            for c in 0..3 {
                comps[c].push(v[c]);
            }
        }
        Self::new(grid, comps)
    }

    pub fn from_spectra(grid: &Grid, spectra: &VectorSpectrum) -> Result<Self> {
        let fft = grid.fft();
        Self::new(grid, [fft.inverse_real(&spectra[0]), fft.inverse_real(&spectra[1]), fft.inverse_real(&spectra[2])])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn component(&self, c: usize) -> &[f64] {
        &self.comps[c]
    }

    pub fn components(&self) -> &[Vec<f64>; 3] {
        &self.comps
    }

    pub fn into_components(self) -> [Vec<f64>; 3] {
        self.comps
    }

    /// Cached forward transforms of the components.
    pub fn spectra(&self) -> &VectorSpectrum {
        self.spectrum.get_or_init(|| self.fresh_spectra())
    }

    /// Forward transforms without touching the cache (for bulk scans).
    pub fn fresh_spectra(&self) -> VectorSpectrum {
        if let Some(s) = self.spectrum.get() {
            return s.clone();
        }
        let fft = self.grid.fft();
        [fft.forward_real(&self.comps[0]), fft.forward_real(&self.comps[1]), fft.forward_real(&self.comps[2])]
    }

    /// Pointwise Euclidean norm.
    pub fn magnitude(&self) -> Vec<f64> {
        (0..self.grid.size())
            .map(|i| (self.comps[0][i].powi(2) + self.comps[1][i].powi(2) + self.comps[2][i].powi(2)).sqrt())
            .collect()
    }

    pub fn magnitude_field(&self) -> ScalarField {
        ScalarField { grid: self.grid.clone(), values: self.magnitude(), spectrum: OnceLock::new() }
    }

    pub fn scale(&self, s: f64) -> Self {
        let comps = [0, 1, 2].map(|c| self.comps[c].iter().map(|v| v * s).collect());
        Self { grid: self.grid.clone(), comps, spectrum: OnceLock::new() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.grid.ensure_same(&other.grid, "vector add")?;
        let comps = [0, 1, 2].map(|c| self.comps[c].iter().zip(&other.comps[c]).map(|(a, b)| a + b).collect());
        Self::new(&self.grid, comps)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.grid.ensure_same(&other.grid, "vector sub")?;
        let comps = [0, 1, 2].map(|c| self.comps[c].iter().zip(&other.comps[c]).map(|(a, b)| a - b).collect());
        Self::new(&self.grid, comps)
    }

    /// `L^2` norm over the periodic box.
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.comps.iter().flat_map(|c| c.iter()).map(|v| v * v).sum();
        (s * self.grid.cell_volume()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.magnitude().into_iter().fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nan_and_wrong_length() {
        let g = Grid::new(8, 10.0).unwrap();
        let mut v = vec![0.0; g.size()];
        v[3] = f64::NAN;
        assert!(matches!(ScalarField::new(&g, v), Err(Error::NonFinite(_))));
        assert!(matches!(ScalarField::new(&g, vec![0.0; 7]), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn spectrum_round_trip() {
        let g = Grid::new(8, 10.0).unwrap();
        let f = ScalarField::from_fn(&g, |x| (x[0] * 0.6).sin() + x[2] * 0.01).unwrap();
        let back = ScalarField::from_spectrum(&g, f.spectrum()).unwrap();
        for (a, b) in f.values().iter().zip(back.values()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn l2_norm_of_constant() {
        let g = Grid::new(8, 10.0).unwrap();
        let f = ScalarField::from_fn(&g, |_| 2.0).unwrap();
        assert!((f.l2_norm() - 2.0 * 1000f64.sqrt()).abs() < 1e-9);
    }
}

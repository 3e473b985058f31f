//! Fourier-multiplier operators: Leray projection, heat flow, Riesz products
//! and spectral derivatives.
//!
//! Odd multipliers (first derivatives, the Leray projector) use wavenumbers
//! with the Nyquist entry zeroed so that results stay real. Even multipliers
//! (Laplacian, heat flow, Riesz products) use the full wavenumbers.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField, VectorSpectrum};
use crate::grid::Grid;

/// Calls `f(flat_index, k_full, k_odd)` for every spectral mode.
pub fn for_each_mode(grid: &Grid, mut f: impl FnMut(usize, [f64; 3], [f64; 3])) {
    let n = grid.n();
    let kf = grid.wavenumbers();
    let ko = grid.derivative_wavenumbers();
    let mut idx = 0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                f(idx, [kf[i], kf[j], kf[k]], [ko[i], ko[j], ko[k]]);
                idx += 1;
            }
        }
    }
}

/// Leray projection of spectral components in place. The mean mode is kept.
pub fn leray_spectra(grid: &Grid, s: &mut VectorSpectrum) {
    for_each_mode(grid, |idx, _, k| {
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 == 0.0 {
            return;
        }
        let dot = (s[0][idx] * k[0] + s[1][idx] * k[1] + s[2][idx] * k[2]) / k2;
        for c in 0..3 {
            s[c][idx] -= dot * k[c];
        }
    });
}

/// Divergence-free part of `v`.
pub fn leray_project(v: &VectorField) -> VectorField {
    let mut s = v.fresh_spectra();
    leray_spectra(v.grid(), &mut s);
    VectorField::from_spectra(v.grid(), &s).expect("projection preserves finiteness")
}

/// Multiplies a spectrum by `exp(-|k|^2 t)`.
pub fn heat_spectrum(grid: &Grid, s: &mut [Complex64], t: f64) {
    for_each_mode(grid, |idx, k, _| {
        s[idx] *= (-(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) * t).exp();
    });
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("heat flow time must be >= 0, got {t}")))
    }
}

/// Heat semigroup `e^{t Delta} f` for a scalar field.
pub fn heat_semigroup(f: &ScalarField, t: f64) -> Result<ScalarField> {
    check_time(t)?;
    let mut s = f.spectrum().to_vec();
    heat_spectrum(f.grid(), &mut s, t);
    ScalarField::from_spectrum(f.grid(), &s)
}

/// Heat semigroup applied componentwise.
pub fn heat_semigroup_vector(v: &VectorField, t: f64) -> Result<VectorField> {
    check_time(t)?;
    let mut s = v.fresh_spectra();
    for c in s.iter_mut() {
        heat_spectrum(v.grid(), c, t);
    }
    VectorField::from_spectra(v.grid(), &s)
}

/// Symbol of `R_i R_j`, i.e. `-k_i k_j / |k|^2`, zero at the mean mode.
pub fn riesz_symbol(k: [f64; 3], i: usize, j: usize) -> f64 {
    let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
    if k2 == 0.0 {
        0.0
    } else {
        -k[i] * k[j] / k2
    }
}

/// Periodic Riesz product `R_i R_j f`.
pub fn riesz_riesz(f: &ScalarField, i: usize, j: usize) -> Result<ScalarField> {
    if i > 2 || j > 2 {
        return Err(Error::InvalidParameter(format!("riesz indices ({i}, {j}) out of range")));
    }
    let mut s = f.spectrum().to_vec();
    for_each_mode(f.grid(), |idx, k, _| s[idx] *= riesz_symbol(k, i, j));
    ScalarField::from_spectrum(f.grid(), &s)
}

/// Spectral partial derivative along `axis`.
pub fn partial(f: &ScalarField, axis: usize) -> ScalarField {
    let mut s = f.spectrum().to_vec();
    partial_spectrum(f.grid(), &mut s, axis);
    ScalarField::from_spectrum(f.grid(), &s).expect("derivative preserves finiteness")
}

pub fn partial_spectrum(grid: &Grid, s: &mut [Complex64], axis: usize) {
    for_each_mode(grid, |idx, _, k| s[idx] *= Complex64::new(0.0, k[axis]));
}

pub fn gradient(f: &ScalarField) -> VectorField {
    let g = f.grid();
    let comps = [0, 1, 2].map(|a| {
        let mut s = f.spectrum().to_vec();
        partial_spectrum(g, &mut s, a);
        g.fft().inverse_real(&s)
    });
    VectorField::new(g, comps).expect("gradient preserves finiteness")
}

/// Spectrum of the divergence.
pub fn divergence_spectrum(grid: &Grid, s: &VectorSpectrum) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); grid.size()];
    for_each_mode(grid, |idx, _, k| {
        out[idx] = Complex64::new(0.0, 1.0) * (s[0][idx] * k[0] + s[1][idx] * k[1] + s[2][idx] * k[2]);
    });
    out
}

pub fn divergence(v: &VectorField) -> ScalarField {
    let d = divergence_spectrum(v.grid(), v.spectra());
    ScalarField::from_spectrum(v.grid(), &d).expect("divergence preserves finiteness")
}

/// `||div v||_2 / ||grad v||_2` measured spectrally; 0 for constant fields.
pub fn divergence_relative(v: &VectorField) -> f64 {
    let s = v.spectra();
    let mut num = 0.0;
    let mut den = 0.0;
    for_each_mode(v.grid(), |idx, _, k| {
        let d = s[0][idx] * k[0] + s[1][idx] * k[1] + s[2][idx] * k[2];
        num += d.norm_sqr();
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        den += k2 * (s[0][idx].norm_sqr() + s[1][idx].norm_sqr() + s[2][idx].norm_sqr());
    });
    if den == 0.0 {
        0.0
    } else {
        (num / den).sqrt()
    }
}

pub fn laplacian(f: &ScalarField) -> ScalarField {
    let mut s = f.spectrum().to_vec();
    for_each_mode(f.grid(), |idx, k, _| s[idx] *= -(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]));
    ScalarField::from_spectrum(f.grid(), &s).expect("laplacian preserves finiteness")
}

/// `L^2` norm computed from spectral coefficients (Parseval).
pub fn spectral_l2(grid: &Grid, s: &[Complex64]) -> f64 {
    let n3 = grid.size() as f64;
    (s.iter().map(|c| c.norm_sqr()).sum::<f64>() * grid.length().powi(3) / (n3 * n3)).sqrt()
}

/// Spectral `L^2` norm of a vector spectrum.
pub fn spectral_l2_vector(grid: &Grid, s: &VectorSpectrum) -> f64 {
    s.iter().map(|c| spectral_l2(grid, c).powi(2)).sum::<f64>().sqrt()
}

/// Spectral `L^2` norm of the gradient of a vector spectrum.
pub fn spectral_gradient_l2(grid: &Grid, s: &VectorSpectrum) -> f64 {
    let n3 = grid.size() as f64;
    let mut acc = 0.0;
    for_each_mode(grid, |idx, _, k| {
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        acc += k2 * (s[0][idx].norm_sqr() + s[1][idx].norm_sqr() + s[2][idx].norm_sqr());
    });
    (acc * grid.length().powi(3) / (n3 * n3)).sqrt()
}

/// Two-thirds dealiasing mask: `true` where a mode is retained.
pub fn dealias_mask(grid: &Grid) -> Vec<bool> {
    let n = grid.n();
    let cut = n as i64 / 3;
    let keep: Vec<bool> = (0..n).map(|i| grid.mode(i).abs() <= cut && i != n / 2).collect();
    let mut mask = Vec::with_capacity(grid.size());
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                mask.push(keep[i] && keep[j] && keep[k]);
            }
        }
    }
    mask
}

pub fn apply_mask(s: &mut [Complex64], mask: &[bool]) {
    for (c, &m) in s.iter_mut().zip(mask) {
        if !m {
            *c = Complex64::default();
        }
    }
}

/// Truncates a vector field to the retained two-thirds band.
pub fn dealias_vector(v: &VectorField) -> VectorField {
    let mask = dealias_mask(v.grid());
    let mut s = v.fresh_spectra();
    for c in s.iter_mut() {
        apply_mask(c, &mask);
    }
    VectorField::from_spectra(v.grid(), &s).expect("truncation preserves finiteness")
}


/// Fields that can be filtered by a radial Fourier multiplier `m(|k|)`.
pub trait RadialFilter: Sized {
    fn radial_filter(&self, m: &dyn Fn(f64) -> f64) -> Self;
}

impl RadialFilter for ScalarField {
    fn radial_filter(&self, m: &dyn Fn(f64) -> f64) -> Self {
        let mut s = self.spectrum().to_vec();
        for_each_mode(self.grid(), |idx, k, _| s[idx] *= m((k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt()));
        ScalarField::from_spectrum(self.grid(), &s).expect("bounded multiplier preserves finiteness")
    }
}

impl RadialFilter for VectorField {
    fn radial_filter(&self, m: &dyn Fn(f64) -> f64) -> Self {
        let g = self.grid();
        let mut weights = vec![0.0; g.size()];
        for_each_mode(g, |idx, k, _| weights[idx] = m((k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt()));
        let mut s = self.fresh_spectra();
        for c in s.iter_mut() {
            c.iter_mut().zip(&weights).for_each(|(z, w)| *z *= w);
        }
        VectorField::from_spectra(g, &s).expect("bounded multiplier preserves finiteness")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(16, 4.0 * PI).unwrap()
    }

    #[test]
    fn derivative_of_sine_is_cosine() {
        let g = grid();
        let f = ScalarField::from_fn(&g, |x| (0.5 * x[1]).sin()).unwrap();
        let d = partial(&f, 1);
        for idx in 0..g.size() {
            let x = g.point(idx);
            assert!((d.values()[idx] - 0.5 * (0.5 * x[1]).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn heat_damps_single_mode_exactly() {
        let g = grid();
        let f = ScalarField::from_fn(&g, |x| (x[0]).cos()).unwrap();
        let h = heat_semigroup(&f, 0.3).unwrap();
        for (a, b) in h.values().iter().zip(f.values()) {
            assert!((a - b * (-0.3f64).exp()).abs() < 1e-13);
        }
        assert!(heat_semigroup(&f, -1.0).is_err());
    }

    #[test]
    fn gradient_is_annihilated_by_projection() {
        let g = grid();
        let p = ScalarField::from_fn(&g, |x| (x[0]).sin() * (0.5 * x[2]).cos() + (1.5 * x[1]).sin()).unwrap();
        let gp = gradient(&p);
        let proj = leray_project(&gp);
        assert!(proj.max_abs() < 1e-12);
    }

    #[test]
    fn dealias_mask_counts() {
        let g = Grid::new(8, 10.0).unwrap();
        let m = dealias_mask(&g);
        // retained modes per axis: -2..=2
        assert_eq!(m.iter().filter(|&&b| b).count(), 125);
    }
}

//! Uniformly spaced time series of fields.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField, VectorSpectrum};
use crate::grid::Grid;

/// Velocity slices at `t0 + i*dt`, with optional pressure slices.
#[derive(Clone, Debug)]
pub struct SpaceTimeField {
    t0: f64,
    dt: f64,
    slices: Vec<VectorField>,
    pressure: Option<Vec<ScalarField>>,
}

impl SpaceTimeField {
    pub fn new(t0: f64, dt: f64, slices: Vec<VectorField>) -> Result<Self> {
        if slices.is_empty() {
            return Err(Error::InsufficientData("space-time field needs at least one slice".into()));
        }
        if !(dt.is_finite() && dt > 0.0 && t0.is_finite()) {
            return Err(Error::InvalidParameter(format!("bad time axis t0 = {t0}, dt = {dt}")));
        }
        let g = slices[0].grid().clone();
        for s in &slices {
            g.ensure_same(s.grid(), "space-time slices")?;
        }
        Ok(Self { t0, dt, slices, pressure: None })
    }

    pub fn with_pressure(mut self, pressure: Vec<ScalarField>) -> Result<Self> {
        if pressure.len() != self.slices.len() {
            return Err(Error::InvalidParameter("pressure slice count differs from velocity".into()));
        }
        for p in &pressure {
            self.grid().ensure_same(p.grid(), "pressure slices")?;
        }
        self.pressure = Some(pressure);
        Ok(self)
    }

    pub fn grid(&self) -> &Grid {
        self.slices[0].grid()
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    /// Last stored time.
    pub fn horizon(&self) -> f64 {
        self.time(self.slices.len() - 1)
    }

    pub fn slices(&self) -> &[VectorField] {
        &self.slices
    }

    pub fn slice(&self, i: usize) -> &VectorField {
        &self.slices[i]
    }

    pub fn pressure(&self) -> Option<&[ScalarField]> {
        self.pressure.as_deref()
    }

    /// Bracketing slice indices and the interpolation weight of the upper one.
    /// `None` means `t` lies before `t0` (the field is treated as zero there).
    pub(crate) fn locate(&self, t: f64) -> Result<Option<(usize, usize, f64)>> {
        let tol = 1e-9 * self.dt;
        if t < self.t0 - tol {
            return Ok(None);
        }
        if t > self.horizon() + tol {
            return Err(Error::InvalidParameter(format!(
                "time {t} beyond stored horizon {}",
                self.horizon()
            )));
        }
        let s = ((t - self.t0) / self.dt).max(0.0);
        let lo = (s.floor() as usize).min(self.slices.len() - 1);
        let w = (s - lo as f64).clamp(0.0, 1.0);
        if w < 1e-12 || lo + 1 == self.slices.len() {
            Ok(Some((lo, lo, 0.0)))
        } else if w > 1.0 - 1e-12 {
            Ok(Some((lo + 1, lo + 1, 0.0)))
        } else {
            Ok(Some((lo, lo + 1, w)))
        }
    }

    /// Velocity spectra at `t`, linear in time between slices, zero before `t0`.
    pub fn spectra_at(&self, t: f64) -> Result<VectorSpectrum> {
        let n3 = self.grid().size();
        match self.locate(t)? {
            None => Ok([vec![Complex64::default(); n3], vec![Complex64::default(); n3], vec![Complex64::default(); n3]]),
            Some((a, b, w)) => {
                let sa = self.slices[a].fresh_spectra();
                if a == b {
                    return Ok(sa);
                }
                let sb = self.slices[b].fresh_spectra();
                Ok([0, 1, 2].map(|c| sa[c].iter().zip(&sb[c]).map(|(x, y)| x * (1.0 - w) + y * w).collect()))
            }
        }
    }

    /// Velocity at `t` in physical space, linear in time between slices.
    pub fn field_at(&self, t: f64) -> Result<VectorField> {
        match self.locate(t)? {
            None => Ok(VectorField::zeros(self.grid())),
            Some((a, b, w)) => {
                if a == b {
                    return Ok(self.slices[a].clone());
                }
                Ok(self.slices[a].scale(1.0 - w).add(&self.slices[b].scale(w))?)
            }
        }
    }

    /// Pressure at `t`, linear in time between slices, zero before `t0`.
    pub fn pressure_at(&self, t: f64) -> Result<ScalarField> {
        let p = self
            .pressure
            .as_ref()
            .ok_or_else(|| Error::InsufficientData("space-time field carries no pressure".into()))?;
        match self.locate(t)? {
            None => Ok(ScalarField::zeros(self.grid())),
            Some((a, b, w)) => {
                if a == b {
                    return Ok(p[a].clone());
                }
                p[a].scale(1.0 - w).add(&p[b].scale(w))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_interpolation_and_zero_extension() {
        let g = Grid::new(8, 10.0).unwrap();
        let a = VectorField::from_fn(&g, |_| [1.0, 0.0, 0.0]).unwrap();
        let b = VectorField::from_fn(&g, |_| [3.0, 0.0, 0.0]).unwrap();
        let st = SpaceTimeField::new(1.0, 0.5, vec![a, b]).unwrap();
        let mid = st.field_at(1.25).unwrap();
        assert!((mid.component(0)[5] - 2.0).abs() < 1e-14);
        assert_eq!(st.field_at(0.5).unwrap().max_abs(), 0.0);
        assert!(st.field_at(2.0).is_err());
        let s = st.spectra_at(1.25).unwrap();
        assert!((s[0][0].re - 2.0 * 512.0).abs() < 1e-9);
    }
}

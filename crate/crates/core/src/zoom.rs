//! Spectral zoom: exact trigonometric interpolation of grid fields onto a
//! fine cubic lattice around a point, for quadrature over balls much
//! smaller than the grid spacing allows.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::Grid;
use crate::spacetime::SpaceTimeField;
use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

/// Cubic lattice `center + h (p + 1/2 - m/2)` per axis, `p in 0..m`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Patch {
    pub center: [f64; 3],
    pub half_width: f64,
    pub m: usize,
}

impl Patch {
    pub fn new(center: [f64; 3], half_width: f64, m: usize) -> Result<Self> {
        if !(half_width > 0.0) || m < 2 || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(format!("patch half width {half_width} and {m} points invalid")));
        }
        Ok(Self { center, half_width, m })
    }

    pub fn h(&self) -> f64 {
        2.0 * self.half_width / self.m as f64
    }

    pub fn size(&self) -> usize {
        self.m * self.m * self.m
    }

    pub fn coord(&self, axis: usize, p: usize) -> f64 {
        self.center[axis] + self.h() * (p as f64 + 0.5 - 0.5 * self.m as f64)
    }

    pub fn point(&self, idx: usize) -> [f64; 3] {
        let m = self.m;
        [self.coord(0, idx / (m * m)), self.coord(1, (idx / m) % m), self.coord(2, idx % m)]
    }

    /// Lattice points with `|x - center| < radius` (and `> inner` when
    /// given), paired with their distance to the center.
    pub fn shell(&self, inner: Option<f64>, radius: f64) -> Vec<(usize, f64)> {
        (0..self.size())
            .filter_map(|i| {
                let x = self.point(i);
                let d = ((x[0] - self.center[0]).powi(2) + (x[1] - self.center[1]).powi(2) + (x[2] - self.center[2]).powi(2))
                    .sqrt();
                (d < radius && inner.is_none_or(|r| d > r)).then_some((i, d))
            })
            .collect()
    }
}

/// Interpolation matrices from a grid onto a patch.
#[derive(Clone, Debug)]
pub struct ZoomSampler {
    grid: Grid,
    patch: Patch,
    /// `mats[axis][p * n + i]`.
    mats: [Vec<Complex64>; 3],
}

impl ZoomSampler {
    pub fn new(grid: &Grid, patch: Patch) -> Result<Self> {
        if patch.half_width * 2.0 >= grid.length() {
            return Err(Error::InvalidParameter("patch wider than the box".into()));
        }
        let mats = [0, 1, 2].map(|axis| axis_matrix(grid, &(0..patch.m).map(|p| patch.coord(axis, p)).collect::<Vec<_>>()));
        Ok(Self { grid: grid.clone(), patch, mats })
    }

    pub fn patch(&self) -> &Patch {
        &self.patch
    }

    /// Values of the trigonometric interpolant of a spectrum on the patch.
    pub fn sample_spectrum(&self, s: &[Complex64]) -> Vec<f64> {
        contract(self.grid.n(), self.patch.m, &self.mats, s)
    }

    pub fn sample_scalar(&self, f: &ScalarField) -> Result<Vec<f64>> {
        self.grid.ensure_same(f.grid(), "zoom source")?;
        Ok(self.sample_spectrum(f.spectrum()))
    }

    pub fn sample_vector(&self, f: &VectorField) -> Result<[Vec<f64>; 3]> {
        self.grid.ensure_same(f.grid(), "zoom source")?;
        let s = f.fresh_spectra();
        Ok([self.sample_spectrum(&s[0]), self.sample_spectrum(&s[1]), self.sample_spectrum(&s[2])])
    }
}

/// `mat[p * n + i] = exp(i k_i (x_p + L/2))`, Nyquist as a cosine.
fn axis_matrix(grid: &Grid, coords: &[f64]) -> Vec<Complex64> {
    let n = grid.n();
    let k = grid.wavenumbers();
    let half = 0.5 * grid.length();
    let mut m = vec![Complex64::default(); coords.len() * n];
    for (p, c) in coords.iter().enumerate() {
        let x = c + half;
        for i in 0..n {
            m[p * n + i] = if i == n / 2 { Complex64::new((k[i] * x).cos(), 0.0) } else { Complex64::from_polar(1.0, k[i] * x) };
        }
    }
    m
}

/// Contracts an `n^3` spectrum with one `m x n` matrix per axis.
fn contract(n: usize, m: usize, mats: &[Vec<Complex64>; 3], s: &[Complex64]) -> Vec<f64> {
    let [m0, m1, m2] = mats;
    // contract the last axis, then the middle, then the first
    let mut t1 = vec![Complex64::default(); n * n * m];
    for ij in 0..n * n {
        let row = &s[ij * n..(ij + 1) * n];
        for r in 0..m {
            let mr = &m2[r * n..(r + 1) * n];
            t1[ij * m + r] = row.iter().zip(mr).map(|(a, b)| a * b).sum();
        }
    }
    let mut t2 = vec![Complex64::default(); n * m * m];
    for i in 0..n {
        for q in 0..m {
            let mq = &m1[q * n..(q + 1) * n];
            let out = &mut t2[(i * m + q) * m..(i * m + q + 1) * m];
            for (j, w) in mq.iter().enumerate() {
                let src = &t1[(i * n + j) * m..(i * n + j + 1) * m];
                out.iter_mut().zip(src).for_each(|(o, v)| *o += w * v);
            }
        }
    }
    let mut out = vec![0.0; m * m * m];
    let scale = 1.0 / (n * n * n) as f64;
    for p in 0..m {
        let mp = &m0[p * n..(p + 1) * n];
        let mut acc = vec![Complex64::default(); m * m];
        for (i, w) in mp.iter().enumerate() {
            let src = &t2[i * m * m..(i + 1) * m * m];
            acc.iter_mut().zip(src).for_each(|(o, v)| *o += w * v);
        }
        out[p * m * m..(p + 1) * m * m].iter_mut().zip(&acc).for_each(|(o, v)| *o = v.re * scale);
    }
    out
}

/// Trigonometric interpolant of a grid spectrum on the tensor lattice
/// `coords^3` (the same coordinates on every axis), periodic in the box.
pub fn sample_on_axes(grid: &Grid, s: &[Complex64], coords: &[f64]) -> Result<Vec<f64>> {
    if coords.is_empty() || coords.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidParameter("lattice coordinates must be finite and nonempty".into()));
    }
    if s.len() != grid.size() {
        return Err(Error::GridMismatch(format!("spectrum of length {} on a grid of {}", s.len(), grid.size())));
    }
    let m = axis_matrix(grid, coords);
    Ok(contract(grid.n(), coords.len(), &[m.clone(), m.clone(), m], s))
}

/// Velocity, pressure and drift on a patch at one time.
#[derive(Clone, Debug)]
pub struct PatchSlice {
    pub v: [Vec<f64>; 3],
    pub q: Option<Vec<f64>>,
    pub a: Option<[Vec<f64>; 3]>,
}

impl PatchSlice {
    pub fn speed(&self, i: usize) -> f64 {
        (self.v[0][i] * self.v[0][i] + self.v[1][i] * self.v[1][i] + self.v[2][i] * self.v[2][i]).sqrt()
    }

    pub fn drift_speed(&self, i: usize) -> f64 {
        self.a.as_ref().map_or(0.0, |a| (a[0][i] * a[0][i] + a[1][i] * a[1][i] + a[2][i] * a[2][i]).sqrt())
    }
}

fn lerp(x: &[f64], y: &[f64], w: f64) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a * (1.0 - w) + b * w).collect()
}

/// Zoomed velocity components with the optional zoomed pressure.
type VelocitySlice = ([Vec<f64>; 3], Option<Vec<f64>>);

/// Lazily zoomed stored slices of a run, interpolated linearly in time.
pub struct PatchHistory<'a> {
    sampler: ZoomSampler,
    v: &'a SpaceTimeField,
    a: Option<&'a SpaceTimeField>,
    vcache: RefCell<HashMap<usize, Rc<VelocitySlice>>>,
    acache: RefCell<HashMap<usize, Rc<[Vec<f64>; 3]>>>,
}

impl<'a> PatchHistory<'a> {
    pub fn new(v: &'a SpaceTimeField, a: Option<&'a SpaceTimeField>, patch: Patch) -> Result<Self> {
        if let Some(a) = a {
            v.grid().ensure_same(a.grid(), "drift")?;
        }
        Ok(Self {
            sampler: ZoomSampler::new(v.grid(), patch)?,
            v,
            a,
            vcache: RefCell::new(HashMap::new()),
            acache: RefCell::new(HashMap::new()),
        })
    }

    pub fn patch(&self) -> &Patch {
        self.sampler.patch()
    }

    fn velocity_slice(&self, k: usize) -> Result<Rc<VelocitySlice>> {
        if let Some(c) = self.vcache.borrow().get(&k) {
            return Ok(c.clone());
        }
        let v = self.sampler.sample_vector(self.v.slice(k))?;
        let q = match self.v.pressure() {
            Some(p) => Some(self.sampler.sample_scalar(&p[k])?),
            None => None,
        };
        let rc = Rc::new((v, q));
        self.vcache.borrow_mut().insert(k, rc.clone());
        Ok(rc)
    }

    fn drift_slice(&self, a: &SpaceTimeField, k: usize) -> Result<Rc<[Vec<f64>; 3]>> {
        if let Some(c) = self.acache.borrow().get(&k) {
            return Ok(c.clone());
        }
        let rc = Rc::new(self.sampler.sample_vector(a.slice(k))?);
        self.acache.borrow_mut().insert(k, rc.clone());
        Ok(rc)
    }

    /// Patch values at time `t`, zero before the first stored slice.
    pub fn at(&self, t: f64) -> Result<PatchSlice> {
        let size = self.patch().size();
        let zero = || [vec![0.0; size], vec![0.0; size], vec![0.0; size]];
        let (v, q) = match self.v.locate(t)? {
            None => (zero(), self.v.pressure().map(|_| vec![0.0; size])),
            Some((lo, hi, w)) => {
                let x = self.velocity_slice(lo)?;
                let y = self.velocity_slice(hi)?;
                let v = [0, 1, 2].map(|c| lerp(&x.0[c], &y.0[c], w));
                let q = match (&x.1, &y.1) {
                    (Some(p), Some(r)) => Some(lerp(p, r, w)),
                    _ => None,
                };
                (v, q)
            }
        };
        let a = match self.a {
            None => None,
            Some(a) => Some(match a.locate(t)? {
                None => zero(),
                Some((lo, hi, w)) => {
                    let x = self.drift_slice(a, lo)?;
                    let y = self.drift_slice(a, hi)?;
                    [0, 1, 2].map(|c| lerp(&x[c], &y[c], w))
                }
            }),
        };
        Ok(PatchSlice { v, q, a })
    }

    /// Drops cached slices.
    pub fn clear(&self) {
        self.vcache.borrow_mut().clear();
        self.acache.borrow_mut().clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_limited_fields_are_reproduced_exactly() {
        let g = Grid::new(16, 8.0).unwrap();
        let k = 2.0 * std::f64::consts::PI / 8.0;
        let f = |x: [f64; 3]| (k * x[0]).sin() * (2.0 * k * x[1]).cos() + (3.0 * k * x[2] + 0.4).cos() + 0.25;
        let field = ScalarField::from_fn(&g, f).unwrap();
        let patch = Patch::new([0.3, -0.2, 0.1], 0.25, 7).unwrap();
        let z = ZoomSampler::new(&g, patch).unwrap();
        let vals = z.sample_scalar(&field).unwrap();
        for (i, v) in vals.iter().enumerate() {
            assert!((v - f(patch.point(i))).abs() < 1e-12);
        }
    }

    #[test]
    fn nyquist_mode_interpolates_as_cosine() {
        let g = Grid::new(8, 8.0).unwrap();
        // cos(pi (x + 4)) is the Nyquist mode on this grid
        let field = ScalarField::from_fn(&g, |x| (std::f64::consts::PI * (x[0] + 4.0)).cos()).unwrap();
        let patch = Patch::new([0.0; 3], 0.5, 4).unwrap();
        let vals = ZoomSampler::new(&g, patch).unwrap().sample_scalar(&field).unwrap();
        for (i, v) in vals.iter().enumerate() {
            let x = patch.point(i);
            assert!((v - (std::f64::consts::PI * (x[0] + 4.0)).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn shell_counts_match_ball_volume() {
        let p = Patch::new([0.0; 3], 1.0, 64).unwrap();
        let n = p.shell(None, 1.0).len() as f64 * p.h().powi(3);
        assert!((n - 4.0 * std::f64::consts::PI / 3.0).abs() < 0.01);
        assert!(p.shell(Some(0.5), 1.0).iter().all(|&(_, d)| d > 0.5 && d < 1.0));
    }
}

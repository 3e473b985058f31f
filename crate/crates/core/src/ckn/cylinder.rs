//! Parabolic cylinders and the scaled quantities integrated over them.
//!
//! Fields are zoomed onto a lattice of `zoom` points per diameter of the
//! ball, so every dyadic scale is resolved equally well. Time integrals use
//! `samples` trapezoid intervals with linear interpolation between stored
//! slices; suprema in time are taken over the same nodes.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::Grid;
use crate::norms::BallRegion;
use crate::spacetime::SpaceTimeField;
use crate::spectral::partial_spectrum;
use crate::zoom::{Patch, ZoomSampler};

/// `Q_r(center, t) = B_r(center) x (t - r^2, t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParabolicCylinder {
    pub center: [f64; 3],
    pub t: f64,
    pub r: f64,
}

impl ParabolicCylinder {
    pub fn new(center: [f64; 3], t: f64, r: f64) -> Result<Self> {
        if !(r.is_finite() && r > 0.0 && t.is_finite()) || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(format!("cylinder radius {r} and top time {t} must be finite, r > 0")));
        }
        Ok(Self { center, t, r })
    }

    /// Cylinder of radius `r_k = 2^{-k}`.
    pub fn dyadic(center: [f64; 3], t: f64, k: u32) -> Result<Self> {
        Self::new(center, t, 0.5f64.powi(k as i32))
    }

    pub fn bottom(&self) -> f64 {
        self.t - self.r * self.r
    }

    pub fn contains(&self, x: [f64; 3], s: f64) -> bool {
        let d2: f64 = (0..3).map(|i| (x[i] - self.center[i]).powi(2)).sum();
        d2 < self.r * self.r && s > self.bottom() && s <= self.t
    }

    /// Fails unless the cylinder lies inside the stored window and the box.
    pub fn check_window(&self, run: &SpaceTimeField) -> Result<()> {
        let tol = 1e-9 * run.dt();
        if self.bottom() < run.t0() - tol || self.t > run.horizon() + tol {
            return Err(Error::InsufficientData(format!(
                "cylinder ({}, {}) leaves the stored window ({}, {})",
                self.bottom(),
                self.t,
                run.t0(),
                run.horizon()
            )));
        }
        BallRegion::new(self.center, self.r)?.validate(run.grid())
    }
}

/// Lattice and time resolution of cylinder integrals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CylinderQuadrature {
    pub zoom: usize,
    pub samples: usize,
}

impl Default for CylinderQuadrature {
    fn default() -> Self {
        Self { zoom: 24, samples: 8 }
    }
}

impl CylinderQuadrature {
    fn validate(&self) -> Result<()> {
        if self.zoom < 4 || self.samples < 2 {
            return Err(Error::InvalidParameter(format!(
                "cylinder quadrature needs zoom >= 4 and samples >= 2, got {} and {}",
                self.zoom, self.samples
            )));
        }
        Ok(())
    }
}

/// Ball integrals over `B_r` at one time node.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NodeIntegrals {
    pub s: f64,
    pub v3: f64,
    pub v2: f64,
    pub grad2: f64,
    /// `int |q - (q)_r(s)|^{3/2}`, absent when the run carries no pressure.
    pub q_osc: Option<f64>,
}

/// Node integrals of one cylinder with trapezoid weights.
#[derive(Clone, Debug, PartialEq)]
pub struct CylinderIntegrals {
    pub cylinder: ParabolicCylinder,
    pub nodes: Vec<NodeIntegrals>,
    pub weights: Vec<f64>,
}

impl CylinderIntegrals {
    pub fn integral(&self, f: impl Fn(&NodeIntegrals) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(n, w)| w * f(n)).sum()
    }

    /// `int_{t - r^2}^{s_j}` of `f` for every node `s_j`.
    pub fn cumulative(&self, f: impl Fn(&NodeIntegrals) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut acc = 0.0;
        out.push(0.0);
        for w in self.nodes.windows(2) {
            acc += 0.5 * (w[1].s - w[0].s) * (f(&w[0]) + f(&w[1]));
            out.push(acc);
        }
        out
    }

    pub fn v3(&self) -> f64 {
        self.integral(|n| n.v3)
    }

    pub fn grad2(&self) -> f64 {
        self.integral(|n| n.grad2)
    }

    pub fn sup_v2(&self) -> f64 {
        self.nodes.iter().map(|n| n.v2).fold(0.0, f64::max)
    }

    pub fn q_osc(&self) -> Result<f64> {
        if self.nodes.iter().any(|n| n.q_osc.is_none()) {
            return Err(Error::InsufficientData("run carries no pressure".into()));
        }
        Ok(self.integral(|n| n.q_osc.unwrap_or(0.0)))
    }
}

pub(crate) fn trapezoid_nodes(a: f64, b: f64, m: usize) -> Vec<(f64, f64)> {
    let h = (b - a) / m as f64;
    (0..=m).map(|k| (a + k as f64 * h, if k == 0 || k == m { 0.5 * h } else { h })).collect()
}

/// Velocity, gradient and pressure values at lattice points.
#[derive(Clone, Debug)]
pub(crate) struct PointValues {
    pub v: [Vec<f64>; 3],
    /// `grad[i][j] = d_j v_i`.
    pub grad: [[Vec<f64>; 3]; 3],
    pub q: Option<Vec<f64>>,
}

impl PointValues {
    fn zeros(len: usize, pressure: bool) -> Self {
        let z = || vec![0.0; len];
        Self {
            v: [z(), z(), z()],
            grad: [[z(), z(), z()], [z(), z(), z()], [z(), z(), z()]],
            q: pressure.then(z),
        }
    }

    fn lerp(a: &Self, b: &Self, w: f64) -> Self {
        let mix = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * (1.0 - w) + q * w).collect::<Vec<f64>>();
        Self {
            v: [0, 1, 2].map(|c| mix(&a.v[c], &b.v[c])),
            grad: [0, 1, 2].map(|i| [0, 1, 2].map(|j| mix(&a.grad[i][j], &b.grad[i][j]))),
            q: match (&a.q, &b.q) {
                (Some(x), Some(y)) => Some(mix(x, y)),
                _ => None,
            },
        }
    }
}

/// Spectra of `v_i`, `d_j v_i` and `q`, in the order `v0 v1 v2 d0v0 d1v0 ... q`.
fn slice_spectra(v: &VectorField, q: Option<&ScalarField>) -> Vec<Vec<Complex64>> {
    let g = v.grid();
    let s = v.fresh_spectra();
    let mut out: Vec<Vec<Complex64>> = s.to_vec();
    for comp in &s {
        for j in 0..3 {
            let mut d = comp.clone();
            partial_spectrum(g, &mut d, j);
            out.push(d);
        }
    }
    if let Some(q) = q {
        out.push(q.spectrum().to_vec());
    }
    out
}

fn unpack(mut vals: Vec<Vec<f64>>, pressure: bool) -> PointValues {
    let q = if pressure { vals.pop() } else { None };
    let mut it = vals.into_iter();
    let mut next = || it.next().expect("twelve sampled spectra");
    let v = [next(), next(), next()];
    let grad = [[next(), next(), next()], [next(), next(), next()], [next(), next(), next()]];
    PointValues { v, grad, q }
}

/// Values at the stored slice `k` for a sampler of choice.
fn slice_values(run: &SpaceTimeField, k: usize, sample: &dyn Fn(&[Complex64]) -> Vec<f64>) -> PointValues {
    let q = run.pressure().map(|p| &p[k]);
    let spectra = slice_spectra(run.slice(k), q);
    unpack(spectra.iter().map(|s| sample(s)).collect(), q.is_some())
}

fn values_at(
    run: &SpaceTimeField,
    s: f64,
    len: usize,
    cache: &mut HashMap<usize, PointValues>,
    sample: &dyn Fn(&[Complex64]) -> Vec<f64>,
) -> Result<PointValues> {
    let pressure = run.pressure().is_some();
    Ok(match run.locate(s)? {
        None => PointValues::zeros(len, pressure),
        Some((lo, hi, w)) => {
            for k in [lo, hi] {
                cache.entry(k).or_insert_with(|| slice_values(run, k, sample));
            }
            if lo == hi {
                cache[&lo].clone()
            } else {
                PointValues::lerp(&cache[&lo], &cache[&hi], w)
            }
        }
    })
}

/// Cylinder integrals of a run through the spectral zoom.
pub fn cylinder_integrals(
    run: &SpaceTimeField,
    cyl: ParabolicCylinder,
    quad: CylinderQuadrature,
) -> Result<CylinderIntegrals> {
    quad.validate()?;
    cyl.check_window(run)?;
    let patch = Patch::new(cyl.center, cyl.r, quad.zoom)?;
    let sampler = ZoomSampler::new(run.grid(), patch)?;
    let inner = patch.shell(None, cyl.r);
    if inner.is_empty() {
        return Err(Error::RegionTooSmall(format!("zoom lattice resolves no point of B_{}", cyl.r)));
    }
    let dv = patch.h().powi(3);
    let sample = |s: &[Complex64]| sampler.sample_spectrum(s);
    let mut cache = HashMap::new();
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for (s, w) in trapezoid_nodes(cyl.bottom(), cyl.t, quad.samples) {
        let vals = values_at(run, s, patch.size(), &mut cache, &sample)?;
        let (mut v3, mut v2, mut grad2) = (0.0, 0.0, 0.0);
        for &(i, _) in &inner {
            let m2 = vals.v[0][i] * vals.v[0][i] + vals.v[1][i] * vals.v[1][i] + vals.v[2][i] * vals.v[2][i];
            v2 += m2;
            v3 += m2 * m2.sqrt();
            grad2 += vals.grad.iter().flatten().map(|g| g[i] * g[i]).sum::<f64>();
        }
        let q_osc = vals.q.as_ref().map(|q| {
            let mean = inner.iter().map(|&(i, _)| q[i]).sum::<f64>() / inner.len() as f64;
            inner.iter().map(|&(i, _)| (q[i] - mean).abs().powf(1.5)).sum::<f64>() * dv
        });
        nodes.push(NodeIntegrals { s, v3: v3 * dv, v2: v2 * dv, grad2: grad2 * dv, q_osc });
        weights.push(w);
    }
    Ok(CylinderIntegrals { cylinder: cyl, nodes, weights })
}

/// Per-axis interpolation factors `e^{i k (x + L/2)}`, cosine at Nyquist.
fn axis_factors(grid: &Grid, x: f64) -> Vec<Complex64> {
    let n = grid.n();
    let k = grid.wavenumbers();
    let y = x + 0.5 * grid.length();
    (0..n)
        .map(|i| if i == n / 2 { Complex64::new((k[i] * y).cos(), 0.0) } else { Complex64::from_polar(1.0, k[i] * y) })
        .collect()
}

/// The same integrals as [`cylinder_integrals`], evaluating the trigonometric
/// interpolant point by point with a direct triple sum over all modes and
/// reducing in a different order. Costs `O(n^3)` per lattice point.
pub fn cylinder_integrals_direct(
    run: &SpaceTimeField,
    cyl: ParabolicCylinder,
    quad: CylinderQuadrature,
) -> Result<CylinderIntegrals> {
    quad.validate()?;
    cyl.check_window(run)?;
    let grid = run.grid();
    let n = grid.n();
    let m = quad.zoom;
    let h = 2.0 * cyl.r / m as f64;
    let coord = |axis: usize, p: usize| cyl.center[axis] + h * (p as f64 + 0.5 - 0.5 * m as f64);
    let mut points = Vec::new();
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                let x = [coord(0, a), coord(1, b), coord(2, c)];
                let d2: f64 = (0..3).map(|i| (x[i] - cyl.center[i]).powi(2)).sum();
                if d2.sqrt() < cyl.r {
                    points.push(x);
                }
            }
        }
    }
    if points.is_empty() {
        return Err(Error::RegionTooSmall(format!("lattice resolves no point of B_{}", cyl.r)));
    }
    let factors: Vec<[Vec<Complex64>; 3]> = points.iter().map(|x| [0, 1, 2].map(|i| axis_factors(grid, x[i]))).collect();
    let scale = 1.0 / grid.size() as f64;
    let sample = |s: &[Complex64]| -> Vec<f64> {
        factors
            .iter()
            .map(|[f0, f1, f2]| {
                let mut acc = Complex64::default();
                for (i, a) in f0.iter().enumerate() {
                    let mut acc_j = Complex64::default();
                    for (j, b) in f1.iter().enumerate() {
                        let row = &s[(i * n + j) * n..(i * n + j + 1) * n];
                        let inner: Complex64 = row.iter().zip(f2).map(|(c, e)| c * e).sum();
                        acc_j += b * inner;
                    }
                    acc += a * acc_j;
                }
                acc.re * scale
            })
            .collect()
    };
    let dv = h.powi(3);
    let mut cache = HashMap::new();
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for (s, w) in trapezoid_nodes(cyl.bottom(), cyl.t, quad.samples) {
        let vals = values_at(run, s, points.len(), &mut cache, &sample)?;
        let mut node = NodeIntegrals { s, ..Default::default() };
        for c in 0..3 {
            for j in 0..3 {
                node.grad2 += vals.grad[c][j].iter().map(|g| g * g).sum::<f64>() * dv;
            }
        }
        for i in (0..points.len()).rev() {
            let m2: f64 = (0..3).map(|c| vals.v[c][i].powi(2)).sum();
            node.v2 += m2 * dv;
            node.v3 += m2.powf(1.5) * dv;
        }
        node.q_osc = vals.q.as_ref().map(|q| {
            let mean = q.iter().sum::<f64>() / q.len() as f64;
            q.iter().map(|x| (x - mean).abs().powf(1.5) * dv).sum()
        });
        nodes.push(node);
        weights.push(w);
    }
    Ok(CylinderIntegrals { cylinder: cyl, nodes, weights })
}

/// `sup r^{delta - 5} int_{Q_r} |v|^3` over the given cylinder tops and radii.
#[derive(Clone, Debug, PartialEq)]
pub struct MorreySweep {
    pub delta: f64,
    /// `(center, t, r, r^{delta-5} int_{Q_r} |v|^3)` for every sampled cylinder.
    pub samples: Vec<([f64; 3], f64, f64, f64)>,
}

impl MorreySweep {
    pub fn sup(&self) -> f64 {
        self.samples.iter().map(|s| s.3).fold(0.0, f64::max)
    }

    /// Smallest `C_*` with `avg_{Q_r} |v|^3 <= C_* eps^{2/3} r^{-delta}` on every sample.
    pub fn fitted_constant(&self, eps_star: f64) -> f64 {
        let vol = 4.0 * std::f64::consts::PI / 3.0;
        self.samples.iter().map(|s| s.3 / (vol * eps_star.powf(2.0 / 3.0))).fold(0.0, f64::max)
    }
}

/// Morrey sweep over all `(center, t)` pairs and radii.
pub fn morrey_sup(
    run: &SpaceTimeField,
    centers: &[[f64; 3]],
    times: &[f64],
    radii: &[f64],
    delta: f64,
    quad: CylinderQuadrature,
) -> Result<MorreySweep> {
    if centers.is_empty() || times.is_empty() || radii.is_empty() {
        return Err(Error::InvalidParameter("Morrey sweep needs centers, times and radii".into()));
    }
    let mut samples = Vec::new();
    for &c in centers {
        for &t in times {
            for &r in radii {
                let ints = cylinder_integrals(run, ParabolicCylinder::new(c, t, r)?, quad)?;
                samples.push((c, t, r, r.powf(delta - 5.0) * ints.v3()));
            }
        }
    }
    Ok(MorreySweep { delta, samples })
}

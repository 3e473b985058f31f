//! The parabolic kernel bound
//! `int int |g(y,s)| / (|x-y|^2 + |t-s|)^2 dy ds <= max(C(delta) ||g||_delta, 16 int int |g|)`
//! for `g` supported in `B_{1/2} x (-1/4, 1/4)`, where
//! `||g||_delta = sup r^{delta-5} int_{t-r^2}^{t+r^2} int_{B_r(x)} |g|`.

use crate::error::{Error, Result};

/// Cell samples of a space-time source on `[-1/2, 1/2]^3 x (-1/4, 1/4)`,
/// kept as the list of nonzero cells.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelSource {
    h: f64,
    ht: f64,
    /// `(y, s, |g| dy ds)` per nonzero cell.
    cells: Vec<([f64; 3], f64, f64)>,
}

impl KernelSource {
    /// Samples `g` at the centers of `m^3` spatial and `mt` temporal cells.
    pub fn from_fn(m: usize, mt: usize, g: impl Fn([f64; 3], f64) -> f64) -> Result<Self> {
        if m < 2 || mt < 2 {
            return Err(Error::InvalidParameter(format!("kernel source needs m, mt >= 2, got {m}, {mt}")));
        }
        let h = 1.0 / m as f64;
        let ht = 0.5 / mt as f64;
        let c = |i: usize| -0.5 + (i as f64 + 0.5) * h;
        let mut cells = Vec::new();
        for it in 0..mt {
            let s = -0.25 + (it as f64 + 0.5) * ht;
            for a in 0..m {
                for b in 0..m {
                    for k in 0..m {
                        let y = [c(a), c(b), c(k)];
                        let v = g(y, s);
                        if !v.is_finite() {
                            return Err(Error::NonFinite("kernel source".into()));
                        }
                        if v == 0.0 {
                            continue;
                        }
                        if (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt() >= 0.5 {
                            return Err(Error::SupportViolation(format!("g({y:?}, {s}) = {v} outside B_1/2")));
                        }
                        cells.push((y, s, v.abs() * h * h * h * ht));
                    }
                }
            }
        }
        Ok(Self { h, ht, cells })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn ht(&self) -> f64 {
        self.ht
    }

    pub fn nonzero(&self) -> usize {
        self.cells.len()
    }

    pub fn l1(&self) -> f64 {
        self.cells.iter().map(|c| c.2).sum()
    }

    /// Direct double sum of the kernel integral at `(x, t)`.
    pub fn kernel_integral(&self, x: [f64; 3], t: f64) -> Result<f64> {
        let mut acc = 0.0;
        for &(y, s, w) in &self.cells {
            let d = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) + (x[2] - y[2]).powi(2) + (t - s).abs();
            if d == 0.0 {
                return Err(Error::InvalidParameter(format!("evaluation point ({x:?}, {t}) sits on a source cell")));
            }
            acc += w / (d * d);
        }
        Ok(acc)
    }

    /// `r^{delta-5} int_{t-r^2}^{t+r^2} int_{B_r(x)} |g|`.
    pub fn morrey_sample(&self, x: [f64; 3], t: f64, r: f64, delta: f64) -> f64 {
        let mass: f64 = self
            .cells
            .iter()
            .filter(|(y, s, _)| {
                (s - t).abs() < r * r && (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) + (x[2] - y[2]).powi(2) < r * r
            })
            .map(|c| c.2)
            .sum();
        r.powf(delta - 5.0) * mass
    }

    /// Lattice sup of the Morrey samples: centers on a grid of spacing
    /// `stride h` over `[-3/4, 3/4]^3`, times of spacing `stride ht` over
    /// `(-1/2, 1/2)`, radii `2^{-j}` from 2 down to the cell size.
    pub fn morrey_norm(&self, delta: f64, stride: usize) -> f64 {
        let stride = stride.max(1);
        let dx = self.h * stride as f64;
        let dt = self.ht * stride as f64;
        let xs: Vec<f64> = (0..).map(|i| -0.75 + i as f64 * dx).take_while(|x| *x <= 0.75 + 1e-12).collect();
        let ts: Vec<f64> = (0..).map(|i| -0.5 + i as f64 * dt).take_while(|x| *x <= 0.5 + 1e-12).collect();
        let mut radii = vec![2.0];
        while radii.last().copied().unwrap_or(0.0) * 0.5 >= self.h {
            radii.push(radii.last().copied().unwrap_or(0.0) * 0.5);
        }
        let mut best: f64 = 0.0;
        for &a in &xs {
            for &b in &xs {
                for &c in &xs {
                    for &t in &ts {
                        for &r in &radii {
                            best = best.max(self.morrey_sample([a, b, c], t, r, delta));
                        }
                    }
                }
            }
        }
        best
    }
}

/// Constant of the near-field case, `8^{(5-delta)/2} / (1 - 8^{(delta-1)/2})`.
pub fn kernel_constant(delta: f64) -> f64 {
    8f64.powf((5.0 - delta) / 2.0) / (1.0 - 8f64.powf((delta - 1.0) / 2.0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelBoundReport {
    pub delta: f64,
    /// Largest kernel integral over the evaluation points.
    pub lhs: f64,
    pub g_delta: f64,
    pub l1: f64,
    pub c_delta: f64,
    /// `max(C(delta) ||g||_delta, 16 int |g|)`.
    pub bound: f64,
    pub ratio: f64,
    /// Every point outside `B_1 x (-1, 1)` obeys the far-field bound `16 int |g|`.
    pub far_ok: bool,
}

/// Evaluates both sides of the kernel bound at the given points.
pub fn check_kernel_bound(
    g: &KernelSource,
    delta: f64,
    points: &[([f64; 3], f64)],
    stride: usize,
) -> Result<KernelBoundReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta = {delta} must lie in (0, 1)")));
    }
    if points.is_empty() {
        return Err(Error::InvalidParameter("no evaluation points".into()));
    }
    let l1 = g.l1();
    let mut lhs: f64 = 0.0;
    let mut far_ok = true;
    for &(x, t) in points {
        let v = g.kernel_integral(x, t)?;
        lhs = lhs.max(v);
        let far = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt() >= 1.0 || t.abs() >= 1.0;
        if far {
            far_ok &= v <= 16.0 * l1 * (1.0 + 1e-12);
        }
    }
    let g_delta = g.morrey_norm(delta, stride);
    let c_delta = kernel_constant(delta);
    let bound = (c_delta * g_delta).max(16.0 * l1);
    let ratio = if bound > 0.0 { lhs / bound } else { 0.0 };
    Ok(KernelBoundReport { delta, lhs, g_delta, l1, c_delta, bound, ratio, far_ok })
}

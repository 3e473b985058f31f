//! Free-space Newtonian potential `N * g` with `N(x) = -1/(4 pi |x|)`,
//! evaluated by zero-padded convolution on the doubled grid.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::Fft3;
use crate::field::ScalarField;
use crate::grid::Grid;

/// Discretization of the Newtonian kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum NewtonKernel {
    /// Spherically truncated kernel with an analytic transform. Spectrally
    /// accurate for band-limited sources supported in `|x| < L/4`.
    #[default]
    Truncated,
    /// Point-sampled kernel with the cell average at the origin. Second order.
    CellAveraged,
}

/// Which derivative of `N * g` to return.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Derivative {
    None,
    Gradient(usize),
    /// Free-space Riesz product `R_i R_j g = -d_i d_j (N * g)`.
    RieszPair(usize, usize),
}

/// Precomputed kernel transform on the doubled grid.
pub struct FreeSpace {
    grid: Grid,
    fft: Arc<Fft3>,
    kernel: Vec<Complex64>,
    k_odd: Vec<f64>,
    k_full: Vec<f64>,
}

/// Cell average of `-1/(4 pi |x|)` over the cube `[-h/2, h/2]^3`.
pub fn cell_average_at_origin(h: f64) -> f64 {
    // Six pyramids with apex at the origin, one per face at distance a = h/2:
    // int_pyramid 1/|x| dV = (a/2) * int_{[-a,a]^2} (a^2+u^2+v^2)^{-1/2} du dv.
    let a = 0.5 * h;
    let m = 64;
    let (nodes, weights) = gauss_legendre(m);
    let mut face = 0.0;
    for (xu, wu) in nodes.iter().zip(&weights) {
        for (xv, wv) in nodes.iter().zip(&weights) {
            let u = a * xu;
            let v = a * xv;
            face += wu * wv * a * a / (a * a + u * u + v * v).sqrt();
        }
    }
    let integral = 6.0 * 0.5 * a * face;
    -integral / (4.0 * PI * h * h * h)
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(m, z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre(m, z);
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

fn legendre(m: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for k in 2..=m {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = m as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, dp)
}

impl FreeSpace {
    pub fn new(grid: &Grid, kernel: NewtonKernel) -> Self {
        let n = grid.n();
        let m = 2 * n;
        let p = 2.0 * grid.length();
        let fft = grid.padded_fft();
        let base = 2.0 * PI / p;
        let k_full: Vec<f64> =
            (0..m).map(|i| base * if i < n { i as f64 } else { i as f64 - m as f64 }).collect();
        let mut k_odd = k_full.clone();
        k_odd[n] = 0.0;
        let kernel = match kernel {
            NewtonKernel::Truncated => {
                // Sources in |y| < L/4 and targets in the box keep |x - y| below
                // 1.12 L, while periodic images stay beyond 1.25 L.
                let r = 1.18 * grid.length();
                let mut out = Vec::with_capacity(m * m * m);
                for i in 0..m {
                    for j in 0..m {
                        for k in 0..m {
                            let k2 = k_full[i].powi(2) + k_full[j].powi(2) + k_full[k].powi(2);
                            let v = if k2 == 0.0 {
                                -0.5 * r * r
                            } else {
                                -(1.0 - (k2.sqrt() * r).cos()) / k2
                            };
                            out.push(Complex64::new(v, 0.0));
                        }
                    }
                }
                out
            }
            NewtonKernel::CellAveraged => {
                let h = grid.dx();
                let origin = cell_average_at_origin(h);
                let coord = |i: usize| if i < n { i as f64 * h } else { (i as f64 - m as f64) * h };
                let mut samples = Vec::with_capacity(m * m * m);
                for i in 0..m {
                    for j in 0..m {
                        for k in 0..m {
                            let r = (coord(i).powi(2) + coord(j).powi(2) + coord(k).powi(2)).sqrt();
                            let v = if r == 0.0 { origin } else { -1.0 / (4.0 * PI * r) };
                            samples.push(Complex64::new(v * h * h * h, 0.0));
                        }
                    }
                }
                fft.forward(&mut samples);
                samples
            }
        };
        Self { grid: grid.clone(), fft, kernel, k_odd, k_full }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn check_support(&self, g: &[f64]) -> Result<()> {
        let lim = 0.25 * self.grid.length();
        for (idx, &v) in g.iter().enumerate() {
            if v != 0.0 {
                let x = self.grid.point(idx);
                if (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt() >= lim {
                    return Err(Error::SupportViolation(format!(
                        "nonzero source at |x| = {:.3} >= L/4 = {lim:.3}",
                        (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
                    )));
                }
            }
        }
        Ok(())
    }

    fn pad(&self, g: &[f64]) -> Vec<Complex64> {
        let n = self.grid.n();
        let m = 2 * n;
        let mut buf = vec![Complex64::default(); m * m * m];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    buf[(i * m + j) * m + k] = Complex64::new(g[(i * n + j) * n + k], 0.0);
                }
            }
        }
        self.fft.forward(&mut buf);
        buf
    }

    fn unpad(&self, mut buf: Vec<Complex64>) -> Vec<f64> {
        self.fft.inverse(&mut buf);
        let n = self.grid.n();
        let m = 2 * n;
        let mut out = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    out.push(buf[(i * m + j) * m + k].re);
                }
            }
        }
        out
    }

    fn for_each_padded(&self, mut f: impl FnMut(usize, [f64; 3], [f64; 3])) {
        let m = 2 * self.grid.n();
        let (kf, ko) = (&self.k_full, &self.k_odd);
        let mut idx = 0;
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    f(idx, [kf[i], kf[j], kf[k]], [ko[i], ko[j], ko[k]]);
                    idx += 1;
                }
            }
        }
    }

    /// `N * g` or one of its derivatives, sampled on the original grid.
    pub fn apply(&self, g: &[f64], deriv: Derivative) -> Result<Vec<f64>> {
        if g.len() != self.grid.size() {
            return Err(Error::GridMismatch("free-space source length".into()));
        }
        crate::error::ensure_finite(g, "free-space source")?;
        self.check_support(g)?;
        let mut buf = self.pad(g);
        let kern = &self.kernel;
        match deriv {
            Derivative::None => self.for_each_padded(|idx, _, _| buf[idx] *= kern[idx]),
            Derivative::Gradient(a) => {
                check_axis(a)?;
                self.for_each_padded(|idx, _, ko| buf[idx] *= kern[idx] * Complex64::new(0.0, ko[a]))
            }
            Derivative::RieszPair(a, b) => {
                check_axis(a)?;
                check_axis(b)?;
                self.for_each_padded(|idx, kf, _| buf[idx] *= kern[idx] * (kf[a] * kf[b]))
            }
        }
        Ok(self.unpad(buf))
    }

    /// `sum_j d_j (N * g_j)`.
    pub fn divergence_of(&self, g: [&[f64]; 3]) -> Result<Vec<f64>> {
        let mut acc: Option<Vec<Complex64>> = None;
        for (a, ga) in g.iter().enumerate() {
            crate::error::ensure_finite(ga, "free-space source")?;
            self.check_support(ga)?;
            let mut buf = self.pad(ga);
            let kern = &self.kernel;
            self.for_each_padded(|idx, _, ko| buf[idx] *= kern[idx] * Complex64::new(0.0, ko[a]));
            acc = Some(match acc {
                None => buf,
                Some(mut s) => {
                    s.iter_mut().zip(&buf).for_each(|(x, y)| *x += y);
                    s
                }
            });
        }
        Ok(self.unpad(acc.expect("three components")))
    }

    /// `sum_{ij} R_i R_j g_ij` for a tensor given as `g[i][j]`.
    pub fn riesz_contract(&self, g: &[[Vec<f64>; 3]; 3]) -> Result<Vec<f64>> {
        let mut acc = vec![Complex64::default(); (2 * self.grid.n()).pow(3)];
        for a in 0..3 {
            for b in a..3 {
                let w = if a == b { 1.0 } else { 2.0 };
                let sym: Vec<f64> = if a == b {
                    g[a][a].clone()
                } else {
                    g[a][b].iter().zip(&g[b][a]).map(|(x, y)| 0.5 * (x + y)).collect()
                };
                crate::error::ensure_finite(&sym, "free-space source")?;
                self.check_support(&sym)?;
                let buf = self.pad(&sym);
                let kern = &self.kernel;
                self.for_each_padded(|idx, kf, _| acc[idx] += buf[idx] * kern[idx] * (w * kf[a] * kf[b]));
            }
        }
        Ok(self.unpad(acc))
    }
}

fn check_axis(a: usize) -> Result<()> {
    if a < 3 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("axis {a} out of range")))
    }
}

/// Convenience wrapper: `N * g` (or a derivative) for a scalar field.
pub fn newtonian_potential(g: &ScalarField, deriv: Derivative, kernel: NewtonKernel) -> Result<ScalarField> {
    let fs = FreeSpace::new(g.grid(), kernel);
    ScalarField::new(g.grid(), fs.apply(g.values(), deriv)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(6)).sum();
        assert!((s - 2.0 / 7.0).abs() < 1e-14);
    }

    #[test]
    fn cell_average_matches_known_constant() {
        // int_{[-1/2,1/2]^3} 1/|x| dx = 2.38008...
        let v = cell_average_at_origin(1.0);
        assert!((v * -4.0 * PI - 2.380077).abs() < 1e-5, "{v}");
    }

    #[test]
    fn rejects_wide_support() {
        let g = Grid::new(16, 10.0).unwrap();
        let f = ScalarField::from_fn(&g, |_| 1.0).unwrap();
        assert!(matches!(
            newtonian_potential(&f, Derivative::None, NewtonKernel::Truncated),
            Err(Error::SupportViolation(_))
        ));
    }
}

#[cfg(test)]
mod accuracy {
    use super::*;

    fn gaussian(g: &Grid, sigma: f64) -> ScalarField {
        let lim = 0.25 * g.length();
        ScalarField::from_fn(g, |x| {
            let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
            if r2.sqrt() >= lim {
                0.0
            } else {
                (PI * sigma * sigma).powf(-1.5) * (-r2 / (sigma * sigma)).exp()
            }
        })
        .unwrap()
    }

    fn erf(x: f64) -> f64 {
        if x > 6.0 {
            return 1.0;
        }
        let (t, w) = gauss_legendre(64);
        let h = 0.5 * x;
        2.0 / PI.sqrt() * t.iter().zip(&w).map(|(t, w)| w * h * (-(h * (t + 1.0)).powi(2)).exp()).sum::<f64>()
    }

    fn max_error(kernel: NewtonKernel, n: usize) -> f64 {
        let g = Grid::new(n, 10.0).unwrap();
        let sigma = 0.6;
        let pot = newtonian_potential(&gaussian(&g, sigma), Derivative::None, kernel).unwrap();
        let mut err: f64 = 0.0;
        for idx in 0..g.size() {
            let x = g.point(idx);
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            let exact = if r == 0.0 { -1.0 / (2.0 * PI.powf(1.5) * sigma) } else { -erf(r / sigma) / (4.0 * PI * r) };
            err = err.max((pot.values()[idx] - exact).abs());
        }
        err
    }

    #[test]
    fn truncated_kernel_is_spectrally_accurate() {
        let e = max_error(NewtonKernel::Truncated, 32);
        assert!(e < 1e-6, "{e}");
    }

    #[test]
    fn cell_averaged_kernel_converges() {
        let e1 = max_error(NewtonKernel::CellAveraged, 32);
        let e2 = max_error(NewtonKernel::CellAveraged, 64);
        assert!(e2 < e1 / 3.0, "{e1} {e2}");
        assert!(e2 < 1e-3, "{e2}");
    }
}

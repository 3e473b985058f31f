//! Splitting initial data `u0 = u0a + u0b` with `u0a` divergence-free,
//! equal to `u0` on `B_{r_flat}` and supported in `B_{r_out}`.
//!
//! The cutoff field `chi u0` has divergence `u0 . grad chi`. Its Leray
//! projection is the minimal-norm repair. A second candidate adds
//! `grad chi x psi`, where `psi` is the Coulomb-gauge stream function of `u0`
//! (`curl psi = u0 - mean`), which removes that divergence pointwise inside
//! the annulus. The candidate closer to the constraints is refined by
//! alternating projections: clamping to `u0` inside `B_{r_flat}` and to zero
//! outside `B_{r_out}`, then Leray projection. The last step is always a Leray
//! projection, so `u0a` is divergence-free to rounding while the support
//! leak and the agreement on the flat ball are reported as residuals.

use num_complex::Complex64;

use crate::cutoff::RadialCutoff;
use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::norms::{l2_uloc, lorentz_quasinorm, lp_ball, lp_box, BallRegion};
use crate::spectral::{divergence_relative, for_each_mode, leray_project};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitParams {
    pub r_flat: f64,
    pub r_out: f64,
    pub max_sweeps: usize,
    /// Largest `|u0a|` outside `B_{r_out}`, relative to `max |u0|`.
    pub leak_tol: f64,
    /// Largest `|u0a - u0|` inside `B_{r_flat}`, relative to `max |u0|`.
    pub agree_tol: f64,
    /// Exponent of the reported `B^{-1+3/p}_{p,inf}` norm.
    pub besov_p: f64,
}

impl Default for SplitParams {
    fn default() -> Self {
        Self { r_flat: 1.0, r_out: 1.5, max_sweeps: 200, leak_tol: 1e-2, agree_tol: 1e-2, besov_p: 6.0 }
    }
}

/// Norms of the two parts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitNorms {
    pub l3_a: f64,
    pub weak_l3_a: f64,
    pub besov_a: f64,
    /// `||u0||_{L^3(B_2)}`.
    pub l3_data_b2: f64,
    /// `||u0a||_{L^3} / ||u0||_{L^3(B_2)}`, the measured constant.
    pub l3_ratio: f64,
    pub uloc_b: f64,
    pub uloc_data: f64,
}

#[derive(Clone, Debug)]
pub struct DataSplit {
    pub params: SplitParams,
    pub u0a: VectorField,
    pub u0b: VectorField,
    /// Relative divergence of `u0a`.
    pub divergence: f64,
    pub leak: f64,
    pub agreement: f64,
    pub sweeps: usize,
    pub norms: SplitNorms,
}

impl SplitParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_flat > 0.0 && self.r_out > self.r_flat) || self.max_sweeps == 0 {
            return Err(Error::InvalidParameter(format!(
                "split needs 0 < r_flat < r_out and at least one sweep; got {self:?}"
            )));
        }
        if !(self.leak_tol > 0.0 && self.agree_tol > 0.0) {
            return Err(Error::InvalidParameter("split tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// `psi = curl^{-1}(u - mean)` in Coulomb gauge: `psi_hat = i k x u_hat / |k|^2`.
fn stream_function(u: &VectorField) -> Result<VectorField> {
    let g = u.grid();
    let s = u.fresh_spectra();
    let mut out = [0, 1, 2].map(|_| vec![Complex64::default(); g.size()]);
    for_each_mode(g, |idx, _, k| {
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 == 0.0 {
            return;
        }
        let i = Complex64::new(0.0, 1.0);
        let v = [s[0][idx], s[1][idx], s[2][idx]];
        out[0][idx] = i * (v[2] * k[1] - v[1] * k[2]) / k2;
        out[1][idx] = i * (v[0] * k[2] - v[2] * k[0]) / k2;
        out[2][idx] = i * (v[1] * k[0] - v[0] * k[1]) / k2;
    });
    VectorField::from_spectra(g, &out)
}

fn radius(x: [f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

/// `(leak, agreement)` relative to `scale`.
fn residuals(v: &VectorField, u0: &VectorField, p: &SplitParams, scale: f64) -> (f64, f64) {
    let g = v.grid();
    let (a, b) = (v.components(), u0.components());
    let (mut leak, mut agree) = (0.0f64, 0.0f64);
    for idx in 0..g.size() {
        let r = radius(g.point(idx));
        if r >= p.r_out {
            leak = leak.max((a[0][idx].powi(2) + a[1][idx].powi(2) + a[2][idx].powi(2)).sqrt());
        } else if r < p.r_flat {
            let d = (0..3).map(|c| (a[c][idx] - b[c][idx]).powi(2)).sum::<f64>().sqrt();
            agree = agree.max(d);
        }
    }
    (leak / scale, agree / scale)
}

fn clamp(v: &VectorField, u0: &VectorField, p: &SplitParams) -> Result<VectorField> {
    let g = v.grid();
    let mut comps = v.components().clone();
    for idx in 0..g.size() {
        let r = radius(g.point(idx));
        for c in 0..3 {
            if r >= p.r_out {
                comps[c][idx] = 0.0;
            } else if r < p.r_flat {
                comps[c][idx] = u0.component(c)[idx];
            }
        }
    }
    VectorField::new(g, comps)
}

/// Splits divergence-free `u0` into a compactly supported part and the rest.
pub fn split_initial_data(u0: &VectorField, params: SplitParams) -> Result<DataSplit> {
    params.validate()?;
    let g = u0.grid();
    if 0.5 * g.length() < params.r_out + g.dx() {
        return Err(Error::InvalidParameter(format!("box too small for support radius {}", params.r_out)));
    }
    let div = divergence_relative(u0);
    if div > 1e-8 {
        return Err(Error::InvalidParameter(format!("initial data is not divergence-free ({div:.2e})")));
    }
    let scale = u0.max_abs();
    let (u0a, leak, agreement, sweeps) = if scale == 0.0 {
        (VectorField::zeros(g), 0.0, 0.0, 0)
    } else {
        let chi = RadialCutoff { r_flat: params.r_flat, r_out: params.r_out };
        let psi = stream_function(u0)?;
        let mut cut = u0.components().clone();
        let mut repaired = u0.components().clone();
        for idx in 0..g.size() {
            let (e, d, _) = chi.spatial(g.point(idx), [0.0; 3]);
            let p = [0, 1, 2].map(|c| psi.component(c)[idx]);
            let curl = [d[1] * p[2] - d[2] * p[1], d[2] * p[0] - d[0] * p[2], d[0] * p[1] - d[1] * p[0]];
            for c in 0..3 {
                cut[c][idx] *= e;
                repaired[c][idx] = cut[c][idx] + curl[c];
            }
        }
        // start from whichever of chi u0 and its stream-function repair
        // projects closer to the constraints
        let starts = [leray_project(&VectorField::new(g, cut)?), leray_project(&VectorField::new(g, repaired)?)];
        let res = starts.each_ref().map(|v| residuals(v, u0, &params, scale));
        let pick = usize::from(res[1].0.max(res[1].1) < res[0].0.max(res[0].1));
        let [s0, s1] = starts;
        let mut v = if pick == 0 { s0 } else { s1 };
        let mut last = res[pick];
        let mut done = None;
        for sweep in 1..=params.max_sweeps {
            if sweep > 1 {
                v = leray_project(&clamp(&v, u0, &params)?);
                last = residuals(&v, u0, &params, scale);
            }
            if last.0 <= params.leak_tol && last.1 <= params.agree_tol {
                done = Some(sweep);
                break;
            }
        }
        match done {
            Some(s) => (v, last.0, last.1, s),
            None => {
                return Err(Error::RepairTolerance { iterations: params.max_sweeps, leak: last.0, agreement: last.1 })
            }
        }
    };
    let u0b = u0.sub(&u0a)?;
    let l3_a = lp_box(&u0a, 3.0)?;
    let l3_data_b2 = lp_ball(u0, 3.0, &BallRegion::origin(2.0)?)?.value;
    let sp = -1.0 + 3.0 / params.besov_p;
    let norms = SplitNorms {
        l3_a,
        weak_l3_a: lorentz_quasinorm(&u0a, 3.0, f64::INFINITY, None)?.value,
        besov_a: crate::besov::besov_norm_lp(&u0a, sp, params.besov_p, f64::INFINITY)?.value,
        l3_data_b2,
        l3_ratio: if l3_data_b2 > 0.0 { l3_a / l3_data_b2 } else { 0.0 },
        uloc_b: l2_uloc(&u0b, 1.0)?.value,
        uloc_data: l2_uloc(u0, 1.0)?.value,
    };
    Ok(DataSplit { params, divergence: divergence_relative(&u0a), u0a, u0b, leak, agreement, sweeps, norms })
}

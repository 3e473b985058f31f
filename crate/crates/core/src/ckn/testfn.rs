//! Test functions `phi_n` that nearly solve the backward heat equation.
//!
//! `phi_n(x, s) = c r_n^2 Gamma(x - center, shift r_n^2 + t - s) eta(|x - center|, t - s)`
//! with `Gamma` the heat kernel and `eta` a product of smooth radial and
//! temporal cutoffs. The bounds required of `phi_n` are
//!
//! * `C_1^{-1} r_n^{-1} <= phi_n <= C_1 r_n^{-1}` and `|grad phi_n| <= C_1 r_n^{-2}` on `Q_{r_n}`;
//! * `phi_n <= C_1 r_n^2 r_k^{-3}` and `|grad phi_n| <= C_1 r_n^2 r_k^{-4}` on
//!   `Q_{r_{k-1}} \ Q_{r_k}`, `2 <= k <= n`;
//! * support in `B_{1/2} x (t - 1/9, t + r_n^2 / 2)`;
//! * `|d_s phi_n + Delta phi_n| <= C_1 r_n^2` for `s <= t`.
//!
//! The function is radial in `x`, so every bound is scanned on a lattice in
//! `(|x - center|, t - s)` refined on each dyadic level. The normalization
//! `c` is chosen to minimize the resulting `C_1`.

use std::f64::consts::PI;

use crate::cutoff::{step_jet, Jet, TestFunction};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TestFunctionParams {
    /// Kernel time offset in units of `r_n^2`.
    pub shift: f64,
    /// `eta = 1` for `|x - center| <= flat_radius`.
    pub flat_radius: f64,
    /// `eta = 0` for `|x - center| >= outer_radius`.
    pub outer_radius: f64,
    /// `eta = 1` for `0 <= t - s <= flat_lag`.
    pub flat_lag: f64,
    /// `eta = 0` for `t - s >= max_lag`.
    pub max_lag: f64,
    /// Lattice points per dyadic segment of the scan.
    pub per_segment: usize,
}

impl Default for TestFunctionParams {
    fn default() -> Self {
        Self { shift: 2.0, flat_radius: 1.0 / 3.0, outer_radius: 0.5, flat_lag: 1.0 / 18.0, max_lag: 1.0 / 9.0, per_segment: 160 }
    }
}

impl TestFunctionParams {
    /// The lowest-`C_1` member found in a parameter sweep of the family.
    pub fn tuned() -> Self {
        Self { shift: 0.1, flat_radius: 0.25, flat_lag: 1.0 / 16.0, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.shift > 0.0
            && 0.0 <= self.flat_radius
            && self.flat_radius < self.outer_radius
            && self.outer_radius <= 0.5
            && 0.0 <= self.flat_lag
            && self.flat_lag < self.max_lag
            && self.max_lag <= 1.0 / 9.0
            && self.per_segment >= 8;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("inadmissible test function parameters {self:?}")))
        }
    }
}

/// Measured extremes of the bound families, before normalization.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BoundFamilies {
    /// `min r_n phi` on `Q_{r_n}`.
    pub lower: f64,
    /// `max r_n phi` on `Q_{r_n}`.
    pub upper: f64,
    /// `max r_n^2 |grad phi|` on `Q_{r_n}`.
    pub grad_core: f64,
    /// `max phi / (r_n^2 r_k^{-3})` over the annuli.
    pub annulus_value: f64,
    /// `max |grad phi| / (r_n^2 r_k^{-4})` over the annuli.
    pub annulus_grad: f64,
    /// `max |d_s phi + Delta phi| / r_n^2` for `s <= t`.
    pub residual: f64,
    /// `max |d_s phi + Delta phi|` where the cutoff is flat.
    pub flat_residual: f64,
    /// Every lattice point outside the admissible support carries zero.
    pub support_ok: bool,
}

impl BoundFamilies {
    fn upper_max(&self) -> f64 {
        self.upper.max(self.grad_core).max(self.annulus_value).max(self.annulus_grad).max(self.residual)
    }
}

/// A constructed `phi_n` with its measured constant.
#[derive(Clone, Debug, PartialEq)]
pub struct HeatTestFunction {
    pub center: [f64; 3],
    pub t: f64,
    pub n: u32,
    pub params: TestFunctionParams,
    /// Normalization `c` applied to `r_n^2 Gamma eta`.
    pub normalization: f64,
    /// Families of the unnormalized function.
    pub families: BoundFamilies,
    /// Smallest constant for which all four families hold.
    pub c1: f64,
    /// Lattice points scanned.
    pub samples: usize,
}

/// Radial and temporal pieces at `(rho, lag)`, unnormalized.
#[derive(Clone, Copy, Debug)]
struct Radial {
    value: f64,
    /// `d phi / d rho`.
    drho: f64,
    /// `d_s phi + Delta phi`.
    residual: f64,
    /// `d_s phi`.
    ds: f64,
    /// `Delta phi`.
    lap: f64,
    flat: bool,
}

fn time_cutoff(p: &TestFunctionParams, r2: f64, lag: f64) -> [f64; 2] {
    // [eta_t, d eta_t / d lag]
    if lag >= 0.0 {
        let w = p.max_lag - p.flat_lag;
        let [s, s1, _] = step_jet((lag - p.flat_lag) / w);
        [1.0 - s, -s1 / w]
    } else {
        let top = 0.5 * p.shift.min(1.0) * r2;
        let [s, s1, _] = step_jet(-lag / top);
        [1.0 - s, s1 / top]
    }
}

fn radial(p: &TestFunctionParams, r2: f64, rho: f64, lag: f64) -> Radial {
    let zero = Radial { value: 0.0, drho: 0.0, residual: 0.0, ds: 0.0, lap: 0.0, flat: false };
    let top = 0.5 * p.shift.min(1.0) * r2;
    if rho >= p.outer_radius || lag >= p.max_lag || lag <= -top {
        return zero;
    }
    let tau = p.shift * r2 + lag;
    let g = (4.0 * PI * tau).powf(-1.5) * (-rho * rho / (4.0 * tau)).exp();
    let g_rho = -g * rho / (2.0 * tau);
    let a = rho * rho / (4.0 * tau * tau);
    let b = 1.5 / tau;
    let g_s = g * (b - a);
    let g_lap = g * (a - b);
    let cut = crate::cutoff::RadialCutoff { r_flat: p.flat_radius, r_out: p.outer_radius };
    let [ex, ex1, ex2] = cut.profile(rho);
    let lap_x = if rho > 0.0 { ex2 + 2.0 * ex1 / rho } else { 3.0 * ex2 };
    let [et, et1] = time_cutoff(p, r2, lag);
    let ds_t = -et1;
    let value = r2 * g * ex * et;
    let drho = r2 * (g_rho * ex + g * ex1) * et;
    let ds = r2 * (g_s * ex * et + g * ex * ds_t);
    let lap = r2 * (g_lap * ex + 2.0 * g_rho * ex1 + g * lap_x) * et;
    let residual = r2 * ((g_s + g_lap) * ex * et + g * (ex * ds_t + et * lap_x) + 2.0 * g_rho * ex1 * et);
    let flat = rho <= p.flat_radius && (0.0..=p.flat_lag).contains(&lag);
    Radial { value, drho, residual, ds, lap, flat }
}

fn segments(points: &[f64], per: usize) -> Vec<f64> {
    let mut out = Vec::new();
    for w in points.windows(2) {
        for i in 0..per {
            out.push(w[0] + (w[1] - w[0]) * i as f64 / per as f64);
        }
    }
    out.push(*points.last().expect("nonempty breakpoints"));
    out
}

/// Builds `phi_n` around `(center, t)` and measures its constant.
pub fn build_test_function(center: [f64; 3], t: f64, n: u32, params: TestFunctionParams) -> Result<HeatTestFunction> {
    params.validate()?;
    if !(2..=20).contains(&n) {
        return Err(Error::InvalidParameter(format!("scale index n = {n} must lie in 2..=20")));
    }
    let rn = 0.5f64.powi(n as i32);
    let r2 = rn * rn;
    let rk = |k: u32| 0.5f64.powi(k as i32);

    let mut rho_breaks = vec![0.0];
    let mut lag_breaks = vec![-0.5 * params.shift.min(1.0) * r2 * 1.2, 0.0];
    for k in (1..=n).rev() {
        rho_breaks.push(rk(k));
        lag_breaks.push(rk(k) * rk(k));
    }
    rho_breaks.push(0.75);
    lag_breaks.retain(|&l| l < params.max_lag);
    lag_breaks.push(params.max_lag);
    lag_breaks.push(1.5 * params.max_lag);
    let rhos = segments(&rho_breaks, params.per_segment);
    let lags = segments(&lag_breaks, params.per_segment);

    let mut f = BoundFamilies { lower: f64::INFINITY, support_ok: true, ..Default::default() };
    let top = 0.5 * params.shift.min(1.0) * r2;
    for &rho in &rhos {
        for &lag in &lags {
            let v = radial(&params, r2, rho, lag);
            let outside = rho >= params.outer_radius || lag >= params.max_lag || lag <= -top;
            if outside {
                f.support_ok &= v.value == 0.0;
                continue;
            }
            if lag < 0.0 {
                continue;
            }
            let grad = v.drho.abs();
            f.residual = f.residual.max(v.residual.abs() / r2);
            if v.flat {
                f.flat_residual = f.flat_residual.max(v.residual.abs());
            }
            let in_q = |r: f64| rho < r && lag < r * r;
            if in_q(rn) {
                f.lower = f.lower.min(rn * v.value);
                f.upper = f.upper.max(rn * v.value);
                f.grad_core = f.grad_core.max(r2 * grad);
            }
            for k in 2..=n {
                if in_q(rk(k - 1)) && !in_q(rk(k)) {
                    f.annulus_value = f.annulus_value.max(v.value / (r2 * rk(k).powi(-3)));
                    f.annulus_grad = f.annulus_grad.max(grad / (r2 * rk(k).powi(-4)));
                }
            }
        }
    }
    if !(f.lower > 0.0 && f.lower.is_finite()) {
        return Err(Error::InvalidParameter(format!("phi_{n} is not bounded below on Q_r_n")));
    }
    let up = f.upper_max();
    let c = 1.0 / (f.lower * up).sqrt();
    f.flat_residual *= c;
    Ok(HeatTestFunction {
        center,
        t,
        n,
        params,
        normalization: c,
        families: f,
        c1: (up / f.lower).sqrt(),
        samples: rhos.len() * lags.len(),
    })
}

impl HeatTestFunction {
    pub fn r_n(&self) -> f64 {
        0.5f64.powi(self.n as i32)
    }

    /// Normalized `[phi, d_rho phi, d_s phi + Delta phi]` at `(rho, s)`.
    pub fn radial_jet(&self, rho: f64, s: f64) -> [f64; 3] {
        let v = radial(&self.params, self.r_n().powi(2), rho, self.t - s);
        [self.normalization * v.value, self.normalization * v.drho, self.normalization * v.residual]
    }

    /// Fails with the offending family and scale when `C_1` exceeds `cap`.
    pub fn certify(&self, cap: f64) -> Result<()> {
        let f = &self.families;
        let c = self.normalization;
        let checks = [
            ("lower bound on Q_r_n", 1.0 / (c * f.lower)),
            ("upper bound on Q_r_n", c * f.upper),
            ("gradient on Q_r_n", c * f.grad_core),
            ("annulus value", c * f.annulus_value),
            ("annulus gradient", c * f.annulus_grad),
            ("backward heat residual", c * f.residual),
        ];
        if !f.support_ok {
            return Err(Error::InvalidParameter(format!("phi_{} leaves its admissible support", self.n)));
        }
        for (name, v) in checks {
            if v > cap {
                return Err(Error::InvalidParameter(format!(
                    "phi_{}: {name} needs constant {v:.3} > {cap}",
                    self.n
                )));
            }
        }
        Ok(())
    }
}

impl TestFunction for HeatTestFunction {
    fn jet(&self, x: [f64; 3], s: f64) -> Jet {
        let d = [x[0] - self.center[0], x[1] - self.center[1], x[2] - self.center[2]];
        let rho = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        let v = radial(&self.params, self.r_n().powi(2), rho, self.t - s);
        let c = self.normalization;
        let grad = if rho > 0.0 { d.map(|di| c * v.drho * di / rho) } else { [0.0; 3] };
        Jet { value: c * v.value, dt: c * v.ds, grad, lap: c * v.lap }
    }
}

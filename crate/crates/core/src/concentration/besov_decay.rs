//! Near-initial decay of the fluctuation `u(t) - e^{t Delta} u0a` for data
//! in the Besov regime, with the frequency split `u0a = bar_N + tilde_N`
//! taken at the time-dependent threshold `N = n_scale t^{-beta}`.

use std::fmt::Write as _;

use crate::besov::besov_split;
use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::fit::{loglog_fit, LineFit};
use crate::mild::besov_heat_gate;
use crate::norms::{lp_cells, BallRegion};
use crate::pns::{run, Drift, PnsConfig, PnsRun};
use crate::spectral::heat_semigroup_vector;

use super::smallness::grad_density;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BesovDecayParams {
    pub p: f64,
    pub delta2: f64,
    pub beta: f64,
    pub n_scale: f64,
    /// Bound on `sup_t t^{(1-3/p)/2} ||e^{t Delta} u0a||_{L^p}`.
    pub gate: f64,
    pub horizon: f64,
    pub dt: f64,
    pub stride: usize,
    pub ball_radius: f64,
}

impl Default for BesovDecayParams {
    fn default() -> Self {
        Self { p: 6.0, delta2: 0.5, beta: 0.05, n_scale: 1.0, gate: 0.5, horizon: 0.2, dt: 0.005, stride: 4, ball_radius: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BesovDecayRow {
    pub t: f64,
    pub n_threshold: f64,
    /// `||u(t) - e^{t Delta} u0a||_{L^2(B)}`.
    pub fluctuation: f64,
    /// `int_B |u^N(t)|^2` with `u^N = u - e^{t Delta} bar_N`.
    pub un_energy: f64,
    /// `int_B |grad u^N(t)|^2`.
    pub un_dissipation: f64,
    pub tilde_l2: f64,
    pub bar_smooth: f64,
}

#[derive(Clone, Debug)]
pub struct BesovDecayReport {
    pub params: BesovDecayParams,
    pub gate_value: f64,
    pub rows: Vec<BesovDecayRow>,
    /// Fit of the fluctuation against `t`; `None` when it vanishes.
    pub fit: Option<LineFit>,
    pub run: PnsRun,
}

impl BesovDecayReport {
    pub const CSV_HEADER: &'static str = "t,N,fluctuation,uN_energy,uN_dissipation,tilde_L2,bar_B_smooth";

    /// Fitted decay exponent of the fluctuation.
    pub fn nu(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }

    pub fn csv(&self) -> String {
        let mut s = format!("{}\n", Self::CSV_HEADER);
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                r.t, r.n_threshold, r.fluctuation, r.un_energy, r.un_dissipation, r.tilde_l2, r.bar_smooth
            );
        }
        s
    }
}

/// Evolves `u0a`, and at every stored `t > 0` splits the data at
/// `N = n_scale t^{-beta}` and measures the local terms of `u^N`.
pub fn near_initial_decay_besov(u0a: &VectorField, params: BesovDecayParams) -> Result<BesovDecayReport> {
    if !(params.beta >= 0.0 && params.n_scale > 0.0 && params.ball_radius > 0.0 && params.p > 3.0) {
        return Err(Error::InvalidParameter(format!("invalid Besov decay parameters {params:?}")));
    }
    let gate_value = besov_heat_gate(u0a, params.p, params.horizon)?;
    if gate_value > params.gate {
        return Err(Error::SmallnessGate { measured: gate_value, allowed: params.gate });
    }
    let cfg = PnsConfig { dt: params.dt, horizon: params.horizon, stride: params.stride, ..PnsConfig::default() };
    let u_run = run(u0a, Drift::Zero, cfg)?;
    let g = u0a.grid();
    let cells = BallRegion::origin(params.ball_radius)?.cells(g)?;
    let dv = g.cell_volume();
    let mut rows = Vec::new();
    for (k, u) in u_run.history.slices().iter().enumerate().skip(1) {
        let t = u_run.history.time(k);
        let fl = u.sub(&heat_semigroup_vector(u0a, t)?)?;
        let n_threshold = params.n_scale * t.powf(-params.beta);
        let split = besov_split(u0a, n_threshold, params.p, params.delta2)?;
        let un = u.sub(&heat_semigroup_vector(&split.bar, t)?)?;
        let mag = un.magnitude();
        let grad = grad_density(&un);
        rows.push(BesovDecayRow {
            t,
            n_threshold,
            fluctuation: lp_cells(&fl, 2.0, &cells),
            un_energy: cells.iter().map(|&i| mag[i] * mag[i]).sum::<f64>() * dv,
            un_dissipation: cells.iter().map(|&i| grad[i]).sum::<f64>() * dv,
            tilde_l2: split.tilde_l2,
            bar_smooth: split.bar_besov_smooth,
        });
    }
    let t: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let f: Vec<f64> = rows.iter().map(|r| r.fluctuation).collect();
    let fit = if f.iter().filter(|v| **v > 0.0).count() >= 3 { Some(loglog_fit(&t, &f)?) } else { None };
    Ok(BesovDecayReport { params, gate_value, rows, fit, run: u_run })
}

//! Local smallness of the perturbation `v = u - a` near the initial time,
//! where `a` is the mild solution issued from the compactly supported part
//! of the data and `v` solves the perturbed system from the remainder.
//!
//! Tracked quantities, all at stored times `t`:
//!
//! * `y(t) = sup_{s<t} int |v|^2 phi^2 + 2 int_0^t int |grad v|^2 phi^2`;
//! * the energy budget `sup_{s<t} int_{B_1} |v|^2 + int_0^t int_{B_1} |grad v|^2 <= E`;
//! * the integrability budget `int_0^t int_{B_1} |v|^3 + |q|^{3/2} <= eps`.
//!
//! `S*` is the largest stored time up to which both budgets hold.

use std::fmt::Write as _;

use crate::cutoff::RadialCutoff;
use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::fit::{loglog_fit, LineFit};
use crate::mild::{solve_mild, DuhamelConfig, MildSolution};
use crate::norms::{l2_uloc, lp_ball, BallRegion};
use crate::pns::{run, Drift, PnsConfig, PnsRun};
use crate::spectral::partial_spectrum;

use super::split::{split_initial_data, DataSplit, SplitParams};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmallnessParams {
    /// Bound on `||u0||_{L^2_uloc}` (radius 1).
    pub m_bound: f64,
    /// Bound on `||u0||_{L^3(B_2)}`.
    pub gamma_gate: f64,
    pub eps_star: f64,
    pub energy_budget: f64,
    pub horizon: f64,
    pub dt: f64,
    pub stride: usize,
    pub mild_dt: f64,
    /// Weight of `y(t)`; supported where `v(0)` vanishes.
    pub phi: RadialCutoff,
    /// Start of the boundedness window `(beta, S*)`.
    pub beta: f64,
    pub sup_threshold: f64,
    pub split: SplitParams,
}

impl Default for SmallnessParams {
    fn default() -> Self {
        Self {
            m_bound: 10.0,
            gamma_gate: 1.0,
            eps_star: 0.05,
            energy_budget: 1.0,
            horizon: 0.25,
            dt: 0.005,
            stride: 2,
            mild_dt: 0.01,
            phi: RadialCutoff { r_flat: 0.5, r_out: 1.0 },
            beta: 0.02,
            sup_threshold: 1.0,
            split: SplitParams::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmallnessRow {
    pub t: f64,
    pub y: f64,
    pub energy: f64,
    pub integrability: f64,
    pub budgets_hold: bool,
    /// `max |v(t)|` over grid points of `B_{1/3}`.
    pub sup_v: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmallnessReport {
    pub l3_b2: f64,
    pub uloc: f64,
    pub rows: Vec<SmallnessRow>,
    /// Largest stored time with both budgets holding up to it.
    pub s_star: Option<f64>,
    /// Fit of `y ~ t^slope` over `(0, S*]`.
    pub y_fit: Option<LineFit>,
    /// Both budget quantities are nondecreasing in time.
    pub monotone: bool,
    /// `max |v|` on `B_{1/3} x (beta, S*]`.
    pub window_sup: f64,
    pub bounded: bool,
    pub mild_residual: f64,
    pub mild_iterations: usize,
}

impl SmallnessReport {
    pub const CSV_HEADER: &'static str = "t,y,energy,integrability,budgets_hold,sup_v";

    pub fn csv(&self) -> String {
        let mut s = format!("{}\n", Self::CSV_HEADER);
        for r in &self.rows {
            let _ = writeln!(s, "{:e},{:e},{:e},{:e},{},{:e}", r.t, r.y, r.energy, r.integrability, r.budgets_hold, r.sup_v);
        }
        s
    }
}

/// The split, the drift, the perturbation run and the derived report.
#[derive(Clone, Debug)]
pub struct SmallnessExperiment {
    pub params: SmallnessParams,
    pub split: DataSplit,
    pub mild: MildSolution,
    pub run: PnsRun,
    pub report: SmallnessReport,
}

/// `sum_{i,j} (d_j v_i)^2` at every grid point.
pub(crate) fn grad_density(v: &VectorField) -> Vec<f64> {
    let g = v.grid();
    let s = v.fresh_spectra();
    let mut out = vec![0.0; g.size()];
    for comp in &s {
        for axis in 0..3 {
            let mut d = comp.clone();
            partial_spectrum(g, &mut d, axis);
            for (o, x) in out.iter_mut().zip(g.fft().inverse_real(&d)) {
                *o += x * x;
            }
        }
    }
    out
}

fn cumulative_trapezoid(f: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(f.len());
    let mut acc = 0.0;
    for (i, v) in f.iter().enumerate() {
        if i > 0 {
            acc += 0.5 * h * (f[i - 1] + v);
        }
        out.push(acc);
    }
    out
}

fn running_max(f: &[f64]) -> Vec<f64> {
    let mut m = f64::NEG_INFINITY;
    f.iter()
        .map(|v| {
            m = m.max(*v);
            m
        })
        .collect()
}

/// Runs the split, the mild solve and the perturbed solver, then measures
/// the local smallness quantities.
pub fn local_smallness_experiment(u0: &VectorField, params: SmallnessParams) -> Result<SmallnessExperiment> {
    if !(params.beta >= 0.0 && params.horizon > 0.0 && params.eps_star > 0.0 && params.energy_budget > 0.0) {
        return Err(Error::InvalidParameter(format!("invalid smallness parameters {params:?}")));
    }
    let l3_b2 = lp_ball(u0, 3.0, &BallRegion::origin(2.0)?)?.value;
    if l3_b2 > params.gamma_gate {
        return Err(Error::SmallnessGate { measured: l3_b2, allowed: params.gamma_gate });
    }
    let uloc = l2_uloc(u0, 1.0)?.value;
    if uloc > params.m_bound {
        return Err(Error::SmallnessGate { measured: uloc, allowed: params.m_bound });
    }
    let split = split_initial_data(u0, params.split)?;
    let mild_cfg = DuhamelConfig { dt: params.mild_dt, horizon: params.horizon, ..DuhamelConfig::default() };
    let mild = solve_mild(&split.u0a, &mild_cfg)?;
    let cfg = PnsConfig { dt: params.dt, horizon: params.horizon, stride: params.stride, ..PnsConfig::default() };
    let v_run = run(&split.u0b, Drift::Field(mild.a.clone()), cfg)?;
    let report = measure(u0, &v_run, &params, l3_b2, uloc, &mild)?;
    Ok(SmallnessExperiment { params, split, mild, run: v_run, report })
}

fn measure(
    u0: &VectorField,
    v_run: &PnsRun,
    params: &SmallnessParams,
    l3_b2: f64,
    uloc: f64,
    mild: &MildSolution,
) -> Result<SmallnessReport> {
    let g = u0.grid();
    let h = v_run.history.dt();
    let dv = g.cell_volume();
    let pts: Vec<(f64, f64)> = (0..g.size())
        .map(|i| {
            let x = g.point(i);
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            (r, params.phi.profile(r)[0].powi(2))
        })
        .collect();
    let q = v_run
        .history
        .pressure()
        .ok_or_else(|| Error::InsufficientData("perturbed run stored no pressure".into()))?;
    let n = v_run.history.len();
    let (mut e_phi, mut d_phi, mut e_b1, mut d_b1, mut cube, mut sup_v) =
        (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for (k, v) in v_run.history.slices().iter().enumerate() {
        let mag = v.magnitude();
        let grad = grad_density(v);
        let qv = q[k].values();
        for (i, &(r, w)) in pts.iter().enumerate() {
            let m2 = mag[i] * mag[i];
            e_phi[k] += m2 * w * dv;
            d_phi[k] += grad[i] * w * dv;
            if r < 1.0 {
                e_b1[k] += m2 * dv;
                d_b1[k] += grad[i] * dv;
                cube[k] += (m2 * mag[i] + qv[i].abs().powf(1.5)) * dv;
            }
            if r < 1.0 / 3.0 {
                sup_v[k] = f64::max(sup_v[k], mag[i]);
            }
        }
    }
    let d_phi = cumulative_trapezoid(&d_phi, h);
    let d_b1 = cumulative_trapezoid(&d_b1, h);
    let cube = cumulative_trapezoid(&cube, h);
    let (e_phi, e_b1) = (running_max(&e_phi), running_max(&e_b1));
    let mut rows = Vec::with_capacity(n);
    for k in 0..n {
        let energy = e_b1[k] + d_b1[k];
        rows.push(SmallnessRow {
            t: v_run.history.time(k),
            y: e_phi[k] + 2.0 * d_phi[k],
            energy,
            integrability: cube[k],
            budgets_hold: energy <= params.energy_budget && cube[k] <= params.eps_star,
            sup_v: sup_v[k],
        });
    }
    let monotone = rows.windows(2).all(|w| w[1].energy >= w[0].energy && w[1].integrability >= w[0].integrability);
    let cap = params.horizon.min(0.25) + 1e-12;
    let s_star = rows.iter().take_while(|r| r.budgets_hold && r.t <= cap).last().map(|r| r.t).filter(|t| *t > 0.0);
    let (y_fit, window_sup) = match s_star {
        Some(s) => {
            let win: Vec<&SmallnessRow> = rows.iter().filter(|r| r.t > 0.0 && r.t <= s).collect();
            let t: Vec<f64> = win.iter().map(|r| r.t).collect();
            let y: Vec<f64> = win.iter().map(|r| r.y).collect();
            let fit = loglog_fit(&t, &y).ok().filter(|_| y.iter().filter(|v| **v > 0.0).count() >= 3);
            let sup = rows.iter().filter(|r| r.t > params.beta && r.t <= s).map(|r| r.sup_v).fold(0.0, f64::max);
            (fit, sup)
        }
        None => (None, 0.0),
    };
    Ok(SmallnessReport {
        l3_b2,
        uloc,
        rows,
        s_star,
        y_fit,
        monotone,
        window_sup,
        bounded: s_star.is_some() && window_sup <= params.sup_threshold,
        mild_residual: mild.residual,
        mild_iterations: mild.iterations,
    })
}

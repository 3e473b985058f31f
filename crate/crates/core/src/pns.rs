//! Pseudo-spectral solver for Navier-Stokes and for the perturbed system
//! `d_t v - nu Delta v + grad q = -div(v (x) v + v (x) a + a (x) v)` around a
//! divergence-free drift `a`, with pressure recovery and energy balances.
//!
//! Time stepping is an integrating-factor Heun scheme: with
//! `E = exp(-nu |k|^2 dt)`,
//! `v* = E (v^n + dt N^n)` and `v^{n+1} = E (v^n + dt/2 N^n) + dt/2 N(v*)`.
//! The nonlinear term is Leray projected and truncated to the two-thirds band.

use num_complex::Complex64;

use crate::cutoff::TestFunction;
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField, VectorSpectrum};
use crate::grid::Grid;
use crate::mild::{div_sym_entries, inverse3};
use crate::quad::cumulative_simpson;
use crate::spacetime::SpaceTimeField;
use crate::spectral::{
    apply_mask, dealias_mask, divergence_relative, for_each_mode, riesz_symbol, spectral_gradient_l2,
    spectral_l2_vector,
};

/// Stepping controls.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PnsConfig {
    /// Upper bound on the step; the actual step divides the horizon evenly.
    pub dt: f64,
    pub horizon: f64,
    pub viscosity: f64,
    /// Store every `stride`-th step.
    pub stride: usize,
    pub dealias: bool,
    /// Advective CFL number: `dt <= cfl dx / max|v + a|`.
    pub cfl: f64,
}

impl Default for PnsConfig {
    fn default() -> Self {
        Self { dt: 0.005, horizon: 0.5, viscosity: 1.0, stride: 8, dealias: true, cfl: 0.5 }
    }
}

impl PnsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.horizon >= self.dt && self.viscosity > 0.0 && self.cfl > 0.0) || self.stride == 0 {
            return Err(Error::InvalidParameter(format!("invalid solver configuration {self:?}")));
        }
        Ok(())
    }

    /// Step count (a multiple of the stride) and the matching step size.
    pub fn schedule(&self) -> (usize, f64) {
        let blocks = (self.horizon / (self.dt * self.stride as f64) - 1e-9).ceil().max(1.0) as usize;
        let steps = blocks * self.stride;
        (steps, self.horizon / steps as f64)
    }
}

/// Drift entering the perturbed system.
#[derive(Clone, Debug, Default)]
pub enum Drift {
    #[default]
    Zero,
    /// Slices interpolated linearly in time.
    Field(SpaceTimeField),
}

impl Drift {
    fn at(&self, t: f64) -> Result<Option<VectorField>> {
        match self {
            Drift::Zero => Ok(None),
            Drift::Field(f) => f.field_at(t).map(Some),
        }
    }
}

/// Energy and dissipation at one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyRecord {
    pub t: f64,
    /// `||v||_{L^2}^2`.
    pub energy: f64,
    /// `||grad v||_{L^2}^2`.
    pub dissipation: f64,
}

/// Mutable solver state.
pub struct SolverState {
    grid: Grid,
    v: VectorSpectrum,
    t: f64,
    cfg: PnsConfig,
    dt: f64,
    e: Vec<f64>,
    mask: Option<Vec<bool>>,
    drift: Drift,
}

impl SolverState {
    pub fn new(v0: &VectorField, drift: Drift, cfg: PnsConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = v0.grid().clone();
        if let Drift::Field(a) = &drift {
            grid.ensure_same(a.grid(), "drift")?;
        }
        let div = divergence_relative(v0);
        if div > 1e-8 {
            return Err(Error::InvalidParameter(format!("initial data is not divergence-free ({div:.2e})")));
        }
        let mask = cfg.dealias.then(|| dealias_mask(&grid));
        let mut v = v0.fresh_spectra();
        if let Some(m) = &mask {
            for c in v.iter_mut() {
                apply_mask(c, m);
            }
        }
        let (_, dt) = cfg.schedule();
        let mut e = vec![0.0; grid.size()];
        for_each_mode(&grid, |idx, k, _| e[idx] = (-cfg.viscosity * (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) * dt).exp());
        Ok(Self { grid, v, t: 0.0, cfg, dt, e, mask, drift })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn velocity(&self) -> Result<VectorField> {
        VectorField::from_spectra(&self.grid, &self.v)
    }

    pub fn energy_record(&self) -> EnergyRecord {
        EnergyRecord {
            t: self.t,
            energy: spectral_l2_vector(&self.grid, &self.v).powi(2),
            dissipation: spectral_gradient_l2(&self.grid, &self.v).powi(2),
        }
    }

    /// `N(v, t) = -P div(v (x) v + v (x) a + a (x) v)`.
    fn nonlinear(&self, v: &VectorSpectrum, t: f64) -> Result<(VectorSpectrum, f64)> {
        let g = &self.grid;
        let vp = inverse3(g, v);
        let a = self.drift.at(t)?;
        let a = a.as_ref().map(|a| a.components());
        let n3 = g.size();
        let mut vmax: f64 = 0.0;
        for i in 0..n3 {
            let mut s = 0.0;
            for c in 0..3 {
                let u = vp[c][i] + a.map_or(0.0, |a| a[c][i]);
                s += u * u;
            }
            vmax = vmax.max(s);
        }
        let mut out = div_sym_entries(
            g,
            |i, j| match a {
                None => (0..n3).map(|x| vp[i][x] * vp[j][x]).collect(),
                Some(a) => (0..n3)
                    .map(|x| vp[i][x] * vp[j][x] + vp[i][x] * a[j][x] + a[i][x] * vp[j][x])
                    .collect(),
            },
            true,
            self.mask.as_deref(),
        );
        for c in out.iter_mut() {
            c.iter_mut().for_each(|z| *z = -*z);
        }
        Ok((out, vmax.sqrt()))
    }

    /// Advances one step of the configured size.
    pub fn step(&mut self) -> Result<()> {
        let dt = self.dt;
        let (n0, vmax) = self.nonlinear(&self.v, self.t)?;
        if !vmax.is_finite() || vmax > 1e8 {
            return Err(Error::BlowUp { t: self.t, vmax });
        }
        let limit = self.cfg.cfl * self.grid.dx() / vmax.max(f64::MIN_POSITIVE);
        if dt > limit {
            return Err(Error::Cfl { dt, suggested: limit });
        }
        let mut star = self.v.clone();
        for c in 0..3 {
            for i in 0..star[c].len() {
                star[c][i] = (star[c][i] + n0[c][i] * dt) * self.e[i];
            }
        }
        let (n1, _) = self.nonlinear(&star, self.t + dt)?;
        for c in 0..3 {
            for i in 0..star[c].len() {
                self.v[c][i] = (self.v[c][i] + n0[c][i] * (0.5 * dt)) * self.e[i] + n1[c][i] * (0.5 * dt);
            }
        }
        self.t += dt;
        Ok(())
    }

    /// Pressure of the current state.
    pub fn pressure(&self) -> Result<ScalarField> {
        let v = self.velocity()?;
        let a = self.drift.at(self.t)?;
        recover_pressure(&v, a.as_ref())
    }
}

/// `q = R_i R_j (v_i v_j + a_i v_j + v_i a_j)`, the mean-zero solution of
/// `-Delta q = d_i d_j (v_i v_j + a_i v_j + v_i a_j)`.
pub fn recover_pressure(v: &VectorField, a: Option<&VectorField>) -> Result<ScalarField> {
    let g = v.grid();
    if let Some(a) = a {
        g.ensure_same(a.grid(), "drift")?;
    }
    let vc = v.components();
    let ac = a.map(|a| a.components());
    let n3 = g.size();
    let fft = g.fft();
    let mut q = vec![Complex64::default(); n3];
    for i in 0..3 {
        for j in i..3 {
            let t: Vec<f64> = match ac {
                None => (0..n3).map(|x| vc[i][x] * vc[j][x]).collect(),
                Some(a) => (0..n3).map(|x| vc[i][x] * vc[j][x] + a[i][x] * vc[j][x] + vc[i][x] * a[j][x]).collect(),
            };
            let s = fft.forward_real(&t);
            let mult = if i == j { 1.0 } else { 2.0 };
            for_each_mode(g, |idx, k, _| q[idx] += s[idx] * (mult * riesz_symbol(k, i, j)));
        }
    }
    q[0] = Complex64::default();
    ScalarField::from_spectrum(g, &q)
}

/// Stored output of a run.
#[derive(Clone, Debug)]
pub struct PnsRun {
    pub config: PnsConfig,
    /// Step actually used.
    pub dt: f64,
    pub steps: usize,
    /// Velocity and pressure every `stride` steps.
    pub history: SpaceTimeField,
    /// Energy record at every step.
    pub energy: Vec<EnergyRecord>,
    pub drift: Drift,
}

/// Runs the solver over the configured horizon.
pub fn run(v0: &VectorField, drift: Drift, cfg: PnsConfig) -> Result<PnsRun> {
    run_with_probes(v0, drift, cfg, &[], 10.0).map(|(r, _)| r)
}

/// Runs the solver and accumulates the local energy ledger of every probe
/// at every step, so time integrals use the step size rather than the
/// storage stride. Entries are reported at the stored slice times.
pub fn run_with_probes(
    v0: &VectorField,
    drift: Drift,
    cfg: PnsConfig,
    probes: &[&dyn TestFunction],
    c_energy: f64,
) -> Result<(PnsRun, Vec<LocalEnergyReport>)> {
    let mut state = SolverState::new(v0, drift, cfg)?;
    let (steps, dt) = cfg.schedule();
    let mut slices = vec![state.velocity()?];
    let mut pressure = vec![state.pressure()?];
    let mut energy = vec![state.energy_record()];
    let mut terms: Vec<Vec<SliceTerms>> = probes.iter().map(|_| Vec::with_capacity(steps + 1)).collect();
    let mut probe = |state: &SolverState, v: &VectorField, q: &ScalarField| -> Result<()> {
        let a = state.drift.at(state.t)?;
        for (p, acc) in probes.iter().zip(terms.iter_mut()) {
            acc.push(slice_terms(v, q, a.as_ref(), *p, state.t, cfg.viscosity));
        }
        Ok(())
    };
    probe(&state, &slices[0], &pressure[0])?;
    for k in 1..=steps {
        state.step()?;
        energy.push(state.energy_record());
        let stored = k % cfg.stride == 0;
        if stored || !probes.is_empty() {
            let v = state.velocity()?;
            let q = state.pressure()?;
            probe(&state, &v, &q)?;
            if stored {
                slices.push(v);
                pressure.push(q);
            }
        }
    }
    let history = SpaceTimeField::new(0.0, dt * cfg.stride as f64, slices)?.with_pressure(pressure)?;
    let g = history.grid().clone();
    let reports = terms
        .iter()
        .map(|t| ledger(t, dt, 0.0, cfg.stride, cfg.viscosity, dt, &g, c_energy))
        .collect();
    Ok((PnsRun { config: cfg, dt, steps, history, energy, drift: state.drift }, reports))
}

impl PnsRun {
    pub fn grid(&self) -> &Grid {
        self.history.grid()
    }

    /// Text manifest describing the run.
    pub fn manifest(&self, data_spec: &str, drift_spec: &str) -> String {
        format!(
            "grid_n={}\ngrid_length={}\ndt={}\nT={}\nviscosity={}\nstride={}\ndealias={}\ndata={}\ndrift={}\n",
            self.grid().n(),
            self.grid().length(),
            self.dt,
            self.config.horizon,
            self.config.viscosity,
            self.config.stride,
            self.config.dealias,
            data_spec,
            drift_spec
        )
    }

    pub fn energy_csv(&self) -> String {
        let mut s = String::from("t,energy,dissipation\n");
        for r in &self.energy {
            s.push_str(&format!("{:e},{:e},{:e}\n", r.t, r.energy, r.dissipation));
        }
        s
    }
}

/// Global energy balance `||v(t)||^2 + 2 nu int_0^t ||grad v||^2 <= ||v_0||^2`.
#[derive(Clone, Debug)]
pub struct GlobalEnergyReport {
    pub t: Vec<f64>,
    /// `||v_0||^2 - ||v(t)||^2 - 2 nu int_0^t ||grad v||^2` per step.
    pub slack: Vec<f64>,
    pub initial_energy: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl GlobalEnergyReport {
    /// Largest `|slack| / ||v_0||^2`.
    pub fn max_relative_slack(&self) -> f64 {
        let m = self.slack.iter().map(|s| s.abs()).fold(0.0, f64::max);
        if self.initial_energy > 0.0 { m / self.initial_energy } else { m }
    }
}

/// Checks the global energy inequality at every step; the run must be drift free.
pub fn global_energy_check(run: &PnsRun, c_energy: f64) -> Result<GlobalEnergyReport> {
    if !matches!(run.drift, Drift::Zero) {
        return Err(Error::InvalidParameter("the global energy balance needs a drift-free run".into()));
    }
    let d: Vec<f64> = run.energy.iter().map(|r| r.dissipation).collect();
    let cum = cumulative_simpson(&d, run.dt);
    let e0 = run.energy[0].energy;
    let nu = run.config.viscosity;
    let slack: Vec<f64> = run.energy.iter().zip(&cum).map(|(r, c)| e0 - r.energy - 2.0 * nu * c).collect();
    let g = run.grid();
    let tolerance = c_energy * (run.dt + g.dx() * g.dx()) * e0;
    let pass = slack.iter().all(|s| s.is_finite() && *s >= -tolerance);
    Ok(GlobalEnergyReport { t: run.energy.iter().map(|r| r.t).collect(), slack, initial_energy: e0, tolerance, pass })
}

/// `||v(t) - v_0||_{L^2(B)}` at every stored slice, the discrete surrogate of
/// weak continuity at the initial time.
pub fn initial_continuity(run: &PnsRun, ball: &crate::norms::BallRegion) -> Result<Vec<(f64, f64)>> {
    let h = &run.history;
    let v0 = h.slice(0);
    let cells = ball.cells(h.grid())?;
    h.slices()
        .iter()
        .enumerate()
        .map(|(k, s)| Ok((h.time(k), crate::norms::lp_cells(&s.sub(v0)?, 2.0, &cells))))
        .collect()
}

/// One row of the local energy ledger.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyLedgerEntry {
    pub t: f64,
    /// `int |v(t)|^2 phi(t)`.
    pub local_energy: f64,
    /// `2 nu int int |grad v|^2 phi`.
    pub dissipation: f64,
    /// `int |v(s)|^2 phi(s)` at the window start.
    pub initial: f64,
    /// `int int |v|^2 (d_t phi + nu Delta phi)`.
    pub heat: f64,
    /// `int int (|v|^2 + 2 q) v . grad phi`.
    pub transport: f64,
    /// `-2 int int (a . grad v) . v phi`.
    pub drift_advection: f64,
    /// `2 int int (a (x) v) : (grad v phi + v (x) grad phi)`.
    pub drift_stretch: f64,
}

impl EnergyLedgerEntry {
    pub const CSV_HEADER: &'static str =
        "t,local_energy,dissipation,initial,heat,transport,drift_advection,drift_stretch,slack";

    pub fn lhs(&self) -> f64 {
        self.local_energy + self.dissipation
    }

    pub fn rhs(&self) -> f64 {
        self.initial + self.heat + self.transport + self.drift_advection + self.drift_stretch
    }

    pub fn slack(&self) -> f64 {
        self.rhs() - self.lhs()
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            self.t,
            self.local_energy,
            self.dissipation,
            self.initial,
            self.heat,
            self.transport,
            self.drift_advection,
            self.drift_stretch,
            self.slack()
        )
    }
}

/// Local energy ledger over a window of stored slices.
#[derive(Clone, Debug)]
pub struct LocalEnergyReport {
    pub entries: Vec<EnergyLedgerEntry>,
    /// `C (dt + dx^2)` times the largest ledger term.
    pub tolerance: f64,
    pub pass: bool,
}

impl LocalEnergyReport {
    pub fn min_slack(&self) -> f64 {
        self.entries.iter().map(|e| e.slack()).fold(f64::INFINITY, f64::min)
    }

    pub fn csv(&self) -> String {
        let mut s = format!("{}\n", EnergyLedgerEntry::CSV_HEADER);
        for e in &self.entries {
            s.push_str(&e.csv_row());
            s.push('\n');
        }
        s
    }
}

/// Integrands of the local balance on one stored slice.
struct SliceTerms {
    energy: f64,
    dissipation: f64,
    heat: f64,
    transport: f64,
    drift_advection: f64,
    drift_stretch: f64,
}

fn slice_terms(
    v: &VectorField,
    q: &ScalarField,
    a: Option<&VectorField>,
    phi: &dyn TestFunction,
    t: f64,
    nu: f64,
) -> SliceTerms {
    let g = v.grid();
    let fft = g.fft();
    let vc = v.components();
    // grad[i][j] = d_j v_i
    let spectra = v.fresh_spectra();
    let grad: Vec<Vec<Vec<f64>>> = (0..3)
        .map(|i| {
            (0..3)
                .map(|j| {
                    let mut s = spectra[i].clone();
                    crate::spectral::partial_spectrum(g, &mut s, j);
                    fft.inverse_real(&s)
                })
                .collect()
        })
        .collect();
    let ac = a.map(|a| a.components());
    let qv = q.values();
    let dv = g.cell_volume();
    let mut s = SliceTerms { energy: 0.0, dissipation: 0.0, heat: 0.0, transport: 0.0, drift_advection: 0.0, drift_stretch: 0.0 };
    for idx in 0..g.size() {
        let jet = phi.jet(g.point(idx), t);
        if jet.value == 0.0 && jet.grad == [0.0; 3] && jet.dt == 0.0 && jet.lap == 0.0 {
            continue;
        }
        let u = [vc[0][idx], vc[1][idx], vc[2][idx]];
        let u2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
        let mut gv2 = 0.0;
        for row in &grad {
            for col in row {
                gv2 += col[idx] * col[idx];
            }
        }
        let v_dot_gphi = u[0] * jet.grad[0] + u[1] * jet.grad[1] + u[2] * jet.grad[2];
        s.energy += u2 * jet.value;
        s.dissipation += gv2 * jet.value;
        s.heat += u2 * (jet.dt + nu * jet.lap);
        s.transport += (u2 + 2.0 * qv[idx]) * v_dot_gphi;
        if let Some(a) = ac {
            let w = [a[0][idx], a[1][idx], a[2][idx]];
            // (a . grad v) . v = a_j d_j v_i v_i ; (a (x) v) : grad v = a_i v_j d_j v_i
            let mut adv = 0.0;
            let mut stretch = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    adv += w[j] * grad[i][j][idx] * u[i];
                    stretch += w[i] * u[j] * grad[i][j][idx];
                }
            }
            let a_dot_v = w[0] * u[0] + w[1] * u[1] + w[2] * u[2];
            s.drift_advection += -2.0 * adv * jet.value;
            s.drift_stretch += 2.0 * (stretch * jet.value + a_dot_v * v_dot_gphi);
        }
    }
    for x in [&mut s.energy, &mut s.dissipation, &mut s.heat, &mut s.transport, &mut s.drift_advection, &mut s.drift_stretch] {
        *x *= dv;
    }
    s
}

/// Evaluates every term of the local energy balance on stored slices
/// `window.0..=window.1`; time integrals use cumulative Simpson weights.
pub fn verify_local_energy(
    run: &PnsRun,
    phi: &dyn TestFunction,
    window: (usize, usize),
    c_energy: f64,
) -> Result<LocalEnergyReport> {
    let h = &run.history;
    let (s0, s1) = window;
    if s1 >= h.len() || s0 > s1 {
        return Err(Error::InsufficientData(format!("window {s0}..={s1} exceeds {} stored slices", h.len())));
    }
    let pressure = h.pressure().ok_or_else(|| Error::InsufficientData("run carries no pressure".into()))?;
    let nu = run.config.viscosity;
    let mut terms = Vec::with_capacity(s1 - s0 + 1);
    for k in s0..=s1 {
        let t = h.time(k);
        let a = run.drift.at(t)?;
        terms.push(slice_terms(h.slice(k), &pressure[k], a.as_ref(), phi, t, nu));
    }
    Ok(ledger(&terms, h.dt(), h.time(s0), 1, nu, run.dt, run.grid(), c_energy))
}

/// Assembles ledger entries from integrands sampled every `h`, reporting
/// every `every`-th sample.
#[allow(clippy::too_many_arguments)]
fn ledger(
    terms: &[SliceTerms],
    h: f64,
    t0: f64,
    every: usize,
    nu: f64,
    dt: f64,
    g: &Grid,
    c_energy: f64,
) -> LocalEnergyReport {
    let cum = |f: &dyn Fn(&SliceTerms) -> f64| cumulative_simpson(&terms.iter().map(f).collect::<Vec<_>>(), h);
    let diss = cum(&|s| s.dissipation);
    let heat = cum(&|s| s.heat);
    let transport = cum(&|s| s.transport);
    let adv = cum(&|s| s.drift_advection);
    let stretch = cum(&|s| s.drift_stretch);
    let initial = terms.first().map_or(0.0, |t| t.energy);
    let entries: Vec<EnergyLedgerEntry> = (0..terms.len())
        .step_by(every)
        .map(|m| EnergyLedgerEntry {
            t: t0 + m as f64 * h,
            local_energy: terms[m].energy,
            dissipation: 2.0 * nu * diss[m],
            initial,
            heat: heat[m],
            transport: transport[m],
            drift_advection: adv[m],
            drift_stretch: stretch[m],
        })
        .collect();
    let scale = entries
        .iter()
        .flat_map(|e| {
            [e.local_energy, e.dissipation, e.initial, e.heat, e.transport, e.drift_advection, e.drift_stretch]
        })
        .map(f64::abs)
        .fold(0.0, f64::max);
    let tolerance = c_energy * (dt + g.dx() * g.dx()) * scale;
    let pass = entries.iter().all(|e| e.slack().is_finite() && e.slack() >= -tolerance);
    LocalEnergyReport { entries, tolerance, pass }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cutoff::{RadialCutoff, SpaceTimeCutoff};
    use std::f64::consts::PI;

    fn grid(n: usize) -> Grid {
        Grid::new(n, 4.0 * PI).unwrap()
    }

    fn tg3(g: &Grid, amp: f64) -> VectorField {
        VectorField::from_fn(g, |x| {
            [amp * x[0].sin() * x[1].cos() * x[2].cos(), -amp * x[0].cos() * x[1].sin() * x[2].cos(), 0.0]
        })
        .unwrap()
    }

    #[test]
    fn zero_data_stays_zero() {
        let g = grid(16);
        let cfg = PnsConfig { dt: 0.01, horizon: 0.08, ..PnsConfig::default() };
        let r = run(&VectorField::zeros(&g), Drift::Zero, cfg).unwrap();
        assert!(r.history.slices().iter().all(|s| s.max_abs() == 0.0));
        let rep = global_energy_check(&r, 10.0).unwrap();
        assert!(rep.pass && rep.max_relative_slack() == 0.0);
    }

    #[test]
    fn planar_taylor_green_decays_exactly() {
        // the nonlinearity is a gradient: v(t) = e^{-2t} v0, q = (cos 2x + cos 2y) e^{-4t} / 4
        let g = grid(16);
        let v0 = VectorField::from_fn(&g, |x| [x[0].sin() * x[1].cos(), -x[0].cos() * x[1].sin(), 0.0]).unwrap();
        let cfg = PnsConfig { dt: 0.01, horizon: 0.16, ..PnsConfig::default() };
        let r = run(&v0, Drift::Zero, cfg).unwrap();
        let t = r.history.horizon();
        let want = v0.scale((-2.0 * t).exp());
        assert!(r.history.slice(r.history.len() - 1).sub(&want).unwrap().max_abs() < 1e-10);
        let q = &r.history.pressure().unwrap()[r.history.len() - 1];
        let qw = ScalarField::from_fn(&g, |x| 0.25 * ((2.0 * x[0]).cos() + (2.0 * x[1]).cos()) * (-4.0 * t).exp()).unwrap();
        assert!(q.sub(&qw).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn beltrami_flow_follows_heat_multiplier() {
        let g = grid(16);
        let v0 = VectorField::from_fn(&g, |x| [x[2].sin() + x[1].cos(), x[0].sin() + x[2].cos(), x[1].sin() + x[0].cos()])
            .unwrap();
        let cfg = PnsConfig { dt: 0.01, horizon: 0.08, ..PnsConfig::default() };
        let r = run(&v0, Drift::Zero, cfg).unwrap();
        let want = v0.scale((-0.08f64).exp());
        assert!(r.history.slice(1).sub(&want).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn taylor_green_pressure_matches_closed_form() {
        let g = grid(16);
        let q = recover_pressure(&tg3(&g, 1.0), None).unwrap();
        let want = ScalarField::from_fn(&g, |x| {
            ((2.0 * x[0]).cos() + (2.0 * x[1]).cos()) * ((2.0 * x[2]).cos() + 2.0) / 16.0
        })
        .unwrap();
        assert!(q.sub(&want).unwrap().max_abs() < 1e-8);
        assert!(q.mean().abs() < 1e-14);
    }

    #[test]
    fn two_mode_pressure_and_gauge() {
        // v = (sin y, sin x, 0): -Delta q = 2 cos x cos y, so q = cos x cos y
        let g = grid(16);
        let v = VectorField::from_fn(&g, |x| [x[1].sin(), x[0].sin(), 0.0]).unwrap();
        let q = recover_pressure(&v, None).unwrap();
        let want = ScalarField::from_fn(&g, |x| x[0].cos() * x[1].cos()).unwrap();
        assert!(q.sub(&want).unwrap().max_abs() < 1e-12);
        let shifted = VectorField::from_fn(&g, |x| [x[1].sin() + 0.7, x[0].sin(), -0.3]).unwrap();
        let q2 = recover_pressure(&shifted, None).unwrap();
        assert!(q2.sub(&q).unwrap().max_abs() < 1e-12);
        assert!(recover_pressure(&VectorField::zeros(&g), None).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn small_taylor_green_energy_follows_linear_decay() {
        let g = grid(16);
        let cfg = PnsConfig { dt: 0.0125, horizon: 0.1, ..PnsConfig::default() };
        let r = run(&tg3(&g, 1e-3), Drift::Zero, cfg).unwrap();
        let e0 = r.energy[0].energy;
        for rec in &r.energy {
            let want = e0 * (-6.0 * rec.t).exp();
            assert!((rec.energy - want).abs() <= 0.01 * want);
        }
        assert!(r.energy.windows(2).all(|w| w[1].energy < w[0].energy));
    }

    #[test]
    fn steps_preserve_divergence_and_mean() {
        let g = grid(16);
        let v0 = VectorField::from_fn(&g, |x| {
            [x[1].sin() * x[2].cos() + 0.2, (x[0] + 0.3).cos() * x[2].sin(), 0.4 * x[0].sin() * x[1].cos()]
        })
        .unwrap();
        let v0 = crate::spectral::leray_project(&v0);
        let cfg = PnsConfig { dt: 0.01, horizon: 0.08, ..PnsConfig::default() };
        let r = run(&v0, Drift::Zero, cfg).unwrap();
        let end = r.history.slice(r.history.len() - 1);
        assert!(divergence_relative(end) < 1e-10);
        for c in 0..3 {
            let m0: f64 = v0.component(c).iter().sum::<f64>() / g.size() as f64;
            let m1: f64 = end.component(c).iter().sum::<f64>() / g.size() as f64;
            assert!((m0 - m1).abs() < 1e-12);
        }
    }

    #[test]
    fn cfl_violation_suggests_a_step() {
        let g = grid(16);
        let cfg = PnsConfig { dt: 0.5, horizon: 0.5, stride: 1, ..PnsConfig::default() };
        match run(&tg3(&g, 5.0), Drift::Zero, cfg) {
            Err(Error::Cfl { dt, suggested }) => assert!(suggested < dt),
            other => panic!("expected CFL rejection, got {:?}", other.map(|r| r.steps)),
        }
    }

    #[test]
    fn energy_balances_close_on_a_smooth_run() {
        let g = grid(32);
        let cfg = PnsConfig { dt: 0.005, horizon: 0.2, stride: 4, ..PnsConfig::default() };
        let r = run(&tg3(&g, 1.0), Drift::Zero, cfg).unwrap();
        let glob = global_energy_check(&r, 10.0).unwrap();
        assert!(glob.pass);
        assert!(glob.max_relative_slack() < 1e-5, "{}", glob.max_relative_slack());
        let phi = SpaceTimeCutoff { center: [0.3, 0.0, 0.0], radial: RadialCutoff { r_flat: 0.5, r_out: 2.0 }, decay: 1.0 };
        let loc = verify_local_energy(&r, &phi, (0, r.history.len() - 1), 10.0).unwrap();
        assert!(loc.pass);
        assert!(loc.min_slack().abs() < 1e-3, "{}", loc.csv());
        let (_, probed) = run_with_probes(&tg3(&g, 1.0), Drift::Zero, cfg, &[&phi], 10.0).unwrap();
        let probed = &probed[0];
        assert_eq!(probed.entries.len(), r.history.len());
        assert!(probed.min_slack().abs() < 1e-4, "{}", probed.csv());
    }

    #[test]
    fn aliased_run_breaks_the_global_balance() {
        let g = grid(16);
        let cfg = PnsConfig { dt: 0.004, horizon: 0.2, stride: 10, dealias: false, viscosity: 0.05, ..PnsConfig::default() };
        let u0 = VectorField::from_fn(&g, |x| {
            let s = 3.0;
            [s * (x[2].sin() + 0.5 * (2.0 * x[1]).cos()), s * ((3.0 * x[0]).sin() + x[2].cos()), s * (x[1].sin() + x[0].cos())]
        })
        .unwrap();
        let r = run(&u0, Drift::Zero, cfg).unwrap();
        let rep = global_energy_check(&r, 10.0).unwrap();
        assert!(rep.max_relative_slack() > 1e-3, "{}", rep.max_relative_slack());
        let clean = run(&u0, Drift::Zero, PnsConfig { dealias: true, ..cfg }).unwrap();
        let ok = global_energy_check(&clean, 10.0).unwrap();
        assert!(ok.max_relative_slack() < rep.max_relative_slack() / 10.0);
        let drift = initial_continuity(&clean, &crate::norms::BallRegion::origin(2.0).unwrap()).unwrap();
        assert_eq!(drift[0].1, 0.0);
        assert!(drift.windows(2).all(|w| w[1].1 >= w[0].1));
    }

    #[test]
    fn drift_run_matches_plain_run_of_the_sum() {
        // u = a + v from the perturbed solver against the plain solver of u0
        let g = grid(16);
        let u0 = tg3(&g, 0.5);
        let a0 = VectorField::from_fn(&g, |x| [0.0, 0.0, 0.1 * x[0].sin()]).unwrap();
        let v0 = u0.sub(&a0).unwrap();
        let dt = 0.01;
        // a shear flow is an exact heat and Navier-Stokes solution
        let steps = 8;
        let slices = (0..=steps).map(|k| a0.scale((-(k as f64) * dt).exp())).collect();
        let a = SpaceTimeField::new(0.0, dt, slices).unwrap();
        let cfg = PnsConfig { dt, horizon: 0.08, stride: 8, ..PnsConfig::default() };
        let pert = run(&v0, Drift::Field(a), cfg).unwrap();
        let plain = run(&u0, Drift::Zero, cfg).unwrap();
        let a_end = a0.scale((-0.08f64).exp());
        let u_pert = pert.history.slice(1).add(&a_end).unwrap();
        assert!(u_pert.sub(plain.history.slice(1)).unwrap().max_abs() < 1e-4);
    }
}

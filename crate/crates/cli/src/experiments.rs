//! Experiment drivers. Each returns its CSV artifacts and named checks;
//! nothing is written to disk here.

use std::f64::consts::PI;

use critnorm_core::besov::besov_norm_lp;
use critnorm_core::ckn::{dyadic_ledger, LedgerParams};
use critnorm_core::concentration::{
    concentration_diagnostic, local_smallness_experiment, near_initial_decay_besov, type_one_monitor,
    BesovDecayParams, ConcentrationParams, SmallnessParams, TypeIParams, TypeIRecord,
};
use critnorm_core::cutoff::RadialCutoff;
use critnorm_core::field::VectorField;
use critnorm_core::grid::Grid;
use critnorm_core::mild::{solve_mild, DuhamelConfig};
use critnorm_core::newton::NewtonKernel;
use critnorm_core::norms::{
    center_lattice, l2_uloc, lorentz_quasinorm, lp_ball, morrey_critical, reports_csv, BallRegion, NormReport,
    RegionDesc,
};
use critnorm_core::pns::{recover_pressure, run, Drift, PnsConfig};
use critnorm_core::pressure::{split_pressure, stress_tensor};
use critnorm_core::spectral::heat_semigroup_vector;

use crate::config::{Config, Experiment};
use crate::CliError;

pub struct Artifacts {
    /// `(file name, contents)` in write order.
    pub files: Vec<(String, String)>,
    /// `(name, passed)`; any failure maps to exit status 1.
    pub checks: Vec<(String, bool)>,
}

impl Artifacts {
    fn new() -> Self {
        Self { files: Vec::new(), checks: Vec::new() }
    }

    fn file(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }

    fn check(&mut self, name: &str, pass: bool) {
        self.checks.push((name.to_string(), pass));
    }
}

fn grid(cfg: &Config) -> Result<Grid, CliError> {
    Ok(Grid::new(cfg.n()?, cfg.get("length", 8.0)?)?)
}

/// Initial data named by the `data`, `amplitude` and `modes` keys.
fn initial_data(cfg: &Config, g: &Grid, seed: u64) -> Result<VectorField, CliError> {
    let amp: f64 = cfg.get("amplitude", 0.2)?;
    let k = 2.0 * PI * cfg.get::<u32>("modes", 1)? as f64 / g.length();
    Ok(match cfg.data()?.as_str() {
        "zero" => VectorField::zeros(g),
        "random" => {
            let mut state = seed;
            let mut next = move || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                2.0 * ((state >> 11) as f64 / (1u64 << 53) as f64) - 1.0
            };
            let raw = VectorField::new(g, [0, 1, 2].map(|_| (0..g.size()).map(|_| amp * next()).collect()))?;
            heat_semigroup_vector(&raw, 4.0 * g.dx() * g.dx())?
        }
        _ => VectorField::from_fn(g, |x| {
            let (s0, s1) = ((k * x[0]).sin(), (k * x[1]).sin());
            let (c0, c1, c2) = ((k * x[0]).cos(), (k * x[1]).cos(), (k * x[2]).cos());
            [amp * s0 * c1 * c2, -amp * c0 * s1 * c2, 0.0]
        })?,
    })
}

fn pns_config(cfg: &Config, dt: f64, horizon: f64, stride: usize) -> Result<PnsConfig, CliError> {
    Ok(PnsConfig {
        dt: cfg.get("dt", dt)?,
        horizon: cfg.get("horizon", horizon)?,
        stride: cfg.get("stride", stride)?,
        viscosity: cfg.get("viscosity", 1.0)?,
        ..PnsConfig::default()
    })
}

pub fn run_experiment(cfg: &Config, seed: u64) -> Result<Artifacts, CliError> {
    match cfg.experiment {
        Experiment::NormsSuite => norms_suite(cfg, seed),
        Experiment::MildDecay => mild_decay(cfg),
        Experiment::CknLedger => ckn_ledger(cfg),
        Experiment::PressureSplit => pressure(cfg),
        Experiment::Smallness => smallness(cfg),
        Experiment::Concentration => concentration(cfg),
        Experiment::BesovDecay => besov_decay(cfg),
    }
}

fn norms_suite(cfg: &Config, seed: u64) -> Result<Artifacts, CliError> {
    let g = grid(cfg)?;
    let size: usize = cfg.get("corpus_size", 3)?;
    let radius: f64 = cfg.get("radius", 1.0)?;
    if size == 0 || radius.is_nan() || radius <= 0.0 {
        return Err(CliError::Usage("corpus_size and radius must be positive".into()));
    }
    let ball = BallRegion::origin(radius)?;
    let mut reports = Vec::new();
    for m in 0..size {
        let f = initial_data(cfg, &g, seed.wrapping_add(m as u64))?;
        let tag = |name: &str| format!("f{m}:{name}");
        for p in [2.0, 3.0, 6.0] {
            reports.push(NormReport::new(tag(&format!("L{p}")), lp_ball(&f, p, &ball)?.value, RegionDesc::Ball(ball), "cell sum")?);
        }
        let mut weak = lorentz_quasinorm(&f, 3.0, f64::INFINITY, Some(&ball))?;
        weak.name = tag(&weak.name);
        let mut uloc = l2_uloc(&f, radius)?;
        uloc.name = tag(&uloc.name);
        let centers = center_lattice(&g, radius, 4);
        let mut morrey = morrey_critical(&f, &centers, 2.0 * g.dx(), radius)?;
        morrey.name = tag(&morrey.name);
        let mut besov = besov_norm_lp(&f, -0.5, 6.0, f64::INFINITY)?;
        besov.name = tag(&besov.name);
        reports.extend([weak, uloc, morrey, besov]);
    }
    let mut a = Artifacts::new();
    a.check("norms finite", reports.iter().all(|r| r.value.is_finite() && r.value >= 0.0));
    a.file("norms.csv", reports_csv(&reports));
    Ok(a)
}

fn mild_decay(cfg: &Config) -> Result<Artifacts, CliError> {
    let g = grid(cfg)?;
    let u0 = initial_data(cfg, &g, 0)?;
    let dc = DuhamelConfig {
        dt: cfg.get("dt", 0.01)?,
        horizon: cfg.get("horizon", 0.25)?,
        picard_tol: cfg.get("picard_tol", 1e-10)?,
        smallness: cfg.get("smallness", 0.05)?,
        ..DuhamelConfig::default()
    };
    let sol = solve_mild(&u0, &dc)?;
    let mut a = Artifacts::new();
    a.check("residual <= 10 picard_tol", sol.residual <= 10.0 * dc.picard_tol);
    a.check("contraction below 1", sol.contraction_ratio() < 1.0);
    a.file("decay.csv", sol.decay_csv());
    a.file(
        "picard.csv",
        format!("iterations,residual,contraction,l5_spacetime\n{},{:e},{:e},{:e}\n", sol.iterations, sol.residual, sol.contraction_ratio(), sol.l5_spacetime),
    );
    Ok(a)
}

fn ckn_ledger(cfg: &Config) -> Result<Artifacts, CliError> {
    let g = grid(cfg)?;
    let u0 = initial_data(cfg, &g, 0)?;
    let pc = pns_config(cfg, 0.01, 0.12, 2)?;
    let r = run(&u0, Drift::Zero, pc)?;
    let (k_min, k_max): (u32, u32) = (cfg.get("k_min", 2)?, cfg.get("k_max", 5)?);
    if k_min < 1 || k_max < k_min {
        return Err(CliError::Usage(format!("need 1 <= k_min <= k_max, got {k_min}..{k_max}")));
    }
    let params = LedgerParams {
        delta: cfg.get("delta", LedgerParams::default().delta)?,
        eps_star: cfg.get("eps_star", LedgerParams::default().eps_star)?,
        ..LedgerParams::default()
    };
    let t = cfg.get("t", r.history.horizon())?;
    let ledger = dyadic_ledger(&r.history, cfg.point("center", [0.3, -0.2, 0.1])?, t, k_min..=k_max, params, None)?;
    let mut a = Artifacts::new();
    a.check("ledger finite", ledger.rows.iter().all(|row| row.a.is_finite() && row.b.is_finite()));
    a.check("ledger targets", ledger.all_pass());
    a.file("ledger.csv", ledger.csv());
    a.file("energy.csv", r.energy_csv());
    Ok(a)
}

fn pressure(cfg: &Config) -> Result<Artifacts, CliError> {
    let g = grid(cfg)?;
    let v = initial_data(cfg, &g, 0)?;
    let cut = RadialCutoff { r_flat: cfg.get("r_flat", 0.0)?, r_out: cfg.get("r_out", 1.0)? };
    let tol: f64 = cfg.get("tolerance", 1e-3)?;
    let p = recover_pressure(&v, None)?;
    let s = split_pressure(&p, &stress_tensor(&v, None), cut, NewtonKernel::Truncated)?;
    let mut a = Artifacts::new();
    a.check("split identity", s.identity_mismatch <= tol);
    a.file(
        "pressure.csv",
        format!(
            "n,length,r_flat,r_out,mismatch,precondition_residual\n{},{},{:e},{:e},{:e},{:e}\n",
            g.n(),
            g.length(),
            cut.r_flat,
            cut.r_out,
            s.identity_mismatch,
            s.precondition_residual
        ),
    );
    Ok(a)
}

fn smallness(cfg: &Config) -> Result<Artifacts, CliError> {
    let g = grid(cfg)?;
    let u0 = initial_data(cfg, &g, 0)?;
    let d = SmallnessParams::default();
    let params = SmallnessParams {
        dt: cfg.get("dt", d.dt)?,
        horizon: cfg.get("horizon", d.horizon)?,
        stride: cfg.get("stride", d.stride)?,
        eps_star: cfg.get("eps_star", d.eps_star)?,
        energy_budget: cfg.get("energy_budget", d.energy_budget)?,
        gamma_gate: cfg.get("gamma_gate", d.gamma_gate)?,
        m_bound: cfg.get("m_bound", d.m_bound)?,
        beta: cfg.get("beta", d.beta)?,
        sup_threshold: cfg.get("sup_threshold", d.sup_threshold)?,
        ..d
    };
    let e = local_smallness_experiment(&u0, params)?;
    let r = &e.report;
    let mut a = Artifacts::new();
    a.check("budgets hold on a window", r.s_star.is_some());
    a.check("bounded on the window", r.bounded);
    a.file("smallness.csv", r.csv());
    a.file(
        "split.csv",
        format!(
            "divergence,leak,agreement,sweeps,l3_ratio,uloc_b\n{:e},{:e},{:e},{},{:e},{:e}\n",
            e.split.divergence, e.split.leak, e.split.agreement, e.split.sweeps, e.split.norms.l3_ratio, e.split.norms.uloc_b
        ),
    );
    Ok(a)
}

fn concentration(cfg: &Config) -> Result<Artifacts, CliError> {
    let g = grid(cfg)?;
    let u0 = initial_data(cfg, &g, 0)?;
    let pc = pns_config(cfg, 0.005, 0.1, 4)?;
    let r = run(&u0, Drift::Zero, pc)?;
    let d = ConcentrationParams::default();
    let params = ConcentrationParams {
        t_star: cfg.get("t_star", d.t_star)?,
        s_star: cfg.get("s_star", d.s_star)?,
        center: cfg.point("center", d.center)?,
        gamma: cfg.get("gamma", d.gamma)?,
        sup_threshold: cfg.get("sup_threshold", d.sup_threshold)?,
        zoom: cfg.get("zoom", d.zoom)?,
    };
    let series = concentration_diagnostic(&r.history, params)?;
    let tp = TypeIParams { r0: cfg.get("r0", 1.0)?, bound: cfg.get("type1_bound", 1.0)?, ..TypeIParams::default() };
    let records = type_one_monitor(&r.history, tp)?;
    let mut a = Artifacts::new();
    a.check("contrapositive", series.contrapositive_ok);
    a.check("type I bound", records.iter().all(|x| x.pass));
    a.file("concentration.csv", series.csv());
    a.file("type_one.csv", TypeIRecord::csv(&records));
    Ok(a)
}

fn besov_decay(cfg: &Config) -> Result<Artifacts, CliError> {
    let g = grid(cfg)?;
    let u0 = initial_data(cfg, &g, 0)?;
    let d = BesovDecayParams::default();
    let params = BesovDecayParams {
        p: cfg.get("p", d.p)?,
        beta: cfg.get("beta", d.beta)?,
        n_scale: cfg.get("n_scale", d.n_scale)?,
        gate: cfg.get("gate", d.gate)?,
        horizon: cfg.get("horizon", d.horizon)?,
        dt: cfg.get("dt", d.dt)?,
        stride: cfg.get("stride", d.stride)?,
        ball_radius: cfg.get("ball_radius", d.ball_radius)?,
        ..d
    };
    let rep = near_initial_decay_besov(&u0, params)?;
    let mut a = Artifacts::new();
    a.check("fluctuation decays", rep.nu().is_none_or(|nu| nu > 0.0));
    a.file("besov_decay.csv", rep.csv());
    Ok(a)
}

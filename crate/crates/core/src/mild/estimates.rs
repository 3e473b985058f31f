//! Empirical checks of the Duhamel estimates on a synthetic corpus.
//!
//! Each row evaluates both sides of one inequality by quadrature and records
//! the ratio. Where the inequality is scale invariant, the corpus member is
//! dilated (`x -> lambda x`, `t -> lambda^2 t`, horizon `T / lambda^2`) and
//! the log-log slope of the ratio against `lambda` must vanish.

use super::{duhamel, duhamel_div, spacetime_norm, DuhamelQuadrature, TensorSeries, WorkingNorm};
use crate::error::Result;
use crate::field::VectorField;
use crate::fit::loglog_fit;
use crate::grid::Grid;
use crate::norms::{lp_box, parabolic_holder_seminorm, BallRegion, HolderWindow};
use crate::spacetime::SpaceTimeField;

/// One inequality evaluated on one corpus member.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimateRow {
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`: the empirical constant.
    pub ratio: f64,
    /// Log-log slope of the ratio under dilation, for scale-invariant rows.
    pub slope: Option<f64>,
    pub pass: bool,
}

impl EstimateRow {
    pub const CSV_HEADER: &'static str = "label,lhs,rhs,ratio,slope,pass";

    pub fn csv_row(&self) -> String {
        let slope = self.slope.map(|s| format!("{s:e}")).unwrap_or_default();
        format!("{},{:e},{:e},{:e},{},{}", self.label, self.lhs, self.rhs, self.ratio, slope, self.pass)
    }
}

/// Grid, time axis and dilation factors of the synthetic corpus.
#[derive(Clone, Debug)]
pub struct EstimateCorpus {
    pub grid: Grid,
    pub dt: f64,
    pub steps: usize,
    /// Gaussian width of the profiles at `lambda = 1`.
    pub width: f64,
    pub dilations: Vec<f64>,
    /// Largest admissible `|slope|`.
    pub slope_tol: f64,
}

impl EstimateCorpus {
    pub fn standard() -> Result<Self> {
        Ok(Self {
            grid: Grid::new(32, 4.0 * std::f64::consts::PI)?,
            dt: 0.02,
            steps: 25,
            width: 1.6,
            dilations: vec![1.0, 1.26, 1.59],
            slope_tol: 0.1,
        })
    }
}

fn vector_series(
    grid: &Grid,
    dt: f64,
    steps: usize,
    f: impl Fn([f64; 3], f64) -> [f64; 3],
) -> Result<SpaceTimeField> {
    let slices = (0..=steps)
        .map(|k| VectorField::from_fn(grid, |x| f(x, k as f64 * dt)))
        .collect::<Result<Vec<_>>>()?;
    SpaceTimeField::new(0.0, dt, slices)
}

/// `||u||_{L^s_t L^q_x}` with trapezoid weights in time.
fn mixed(u: &SpaceTimeField, q: f64, s: f64) -> Result<f64> {
    let per: Vec<f64> = u.slices().iter().map(|v| lp_box(v, q)).collect::<Result<_>>()?;
    if s.is_infinite() {
        return Ok(per.iter().copied().fold(0.0, f64::max));
    }
    let n = per.len();
    let acc: f64 = per
        .iter()
        .enumerate()
        .map(|(k, v)| if k == 0 || k + 1 == n { 0.5 } else { 1.0 } * v.powf(s))
        .sum();
    Ok((acc * u.dt()).powf(1.0 / s))
}

fn mixed_tensor(t: &TensorSeries, q: f64, s: f64) -> Result<f64> {
    let grid = &t.grid;
    let dv = grid.cell_volume();
    let per: Vec<f64> = t
        .slices
        .iter()
        .map(|m| {
            let abs = |i: usize| {
                m.iter().flat_map(|r| r.iter()).map(|c| c[i] * c[i]).sum::<f64>().sqrt()
            };
            if q.is_infinite() {
                (0..grid.size()).map(abs).fold(0.0, f64::max)
            } else {
                ((0..grid.size()).map(|i| abs(i).powf(q)).sum::<f64>() * dv).powf(1.0 / q)
            }
        })
        .collect();
    if s.is_infinite() {
        return Ok(per.iter().copied().fold(0.0, f64::max));
    }
    let n = per.len();
    let acc: f64 =
        per.iter().enumerate().map(|(k, v)| if k == 0 || k + 1 == n { 0.5 } else { 1.0 } * v.powf(s)).sum();
    Ok((acc * t.dt).powf(1.0 / s))
}

fn gauss(x: [f64; 3], c: [f64; 3], w: f64) -> f64 {
    let r2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) + (x[2] - c[2]).powi(2);
    (-r2 / (2.0 * w * w)).exp()
}

fn row(label: impl Into<String>, lhs: f64, rhs: f64, pass: bool) -> EstimateRow {
    EstimateRow { label: label.into(), lhs, rhs, ratio: lhs / rhs, slope: None, pass: pass && lhs.is_finite() && rhs > 0.0 }
}

impl EstimateCorpus {
    fn dilated(&self, lambda: f64) -> (f64, f64) {
        (self.dt / (lambda * lambda), self.width / lambda)
    }

    /// Scalar-like forcing `f(x,t) = lambda^alpha G(lambda x) (1 + lambda^2 t)`.
    fn forcing(&self, lambda: f64, alpha: f64) -> Result<SpaceTimeField> {
        let (dt, w) = self.dilated(lambda);
        let amp = lambda.powf(alpha);
        vector_series(&self.grid, dt, self.steps, |x, t| {
            let g = amp * gauss(x, [0.0; 3], w) * (1.0 + lambda * lambda * t);
            [g, 0.5 * g, -0.25 * g]
        })
    }

    fn tensor(&self, lambda: f64, alpha: f64) -> TensorSeries {
        let (dt, w) = self.dilated(lambda);
        let g = &self.grid;
        let amp = lambda.powf(alpha);
        let slices = (0..=self.steps)
            .map(|k| {
                let t = k as f64 * dt;
                let base: Vec<f64> = (0..g.size())
                    .map(|i| amp * gauss(g.point(i), [0.3 / lambda, 0.0, 0.0], w) * (1.0 + lambda * lambda * t))
                    .collect();
                let mut m: [[Vec<f64>; 3]; 3] = Default::default();
                for (i, r) in m.iter_mut().enumerate() {
                    for (j, c) in r.iter_mut().enumerate() {
                        let s = [[1.0, 0.5, 0.0], [0.2, -1.0, 0.3], [0.0, 0.7, 0.4]][i][j];
                        *c = base.iter().map(|v| s * v).collect();
                    }
                }
                m
            })
            .collect();
        TensorSeries { grid: g.clone(), t0: 0.0, dt, slices }
    }

    /// Critical heat-flow drift `a_lambda(x,t) = lambda a(lambda x, lambda^2 t)`.
    fn heat_drift(&self, lambda: f64) -> Result<SpaceTimeField> {
        let (dt, w) = self.dilated(lambda);
        vector_series(&self.grid, dt, self.steps, |x, t| {
            // e^{t Delta} of a Gaussian of variance w^2 per axis
            let v = w * w + 2.0 * t;
            let amp = lambda * (w * w / v).powf(1.5);
            let g = amp * (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / (2.0 * v)).exp();
            [g * x[1] / w, -g * x[0] / w, 0.5 * g]
        })
    }

    fn slope(&self, ratios: &[f64]) -> Option<f64> {
        loglog_fit(&self.dilations, ratios).ok().map(|f| f.slope)
    }

    fn dilation_row(
        &self,
        label: &str,
        eval: impl Fn(f64) -> Result<(f64, f64)>,
    ) -> Result<EstimateRow> {
        let mut ratios = Vec::new();
        let mut first = None;
        for &l in &self.dilations {
            let (lhs, rhs) = eval(l)?;
            first.get_or_insert((lhs, rhs));
            ratios.push(lhs / rhs);
        }
        let (lhs, rhs) = first.expect("at least one dilation");
        let slope = self.slope(&ratios);
        let ok = slope.is_some_and(|s| s.abs() <= self.slope_tol) && ratios.iter().all(|r| r.is_finite());
        let mut r = row(label, lhs, rhs, ok);
        r.slope = slope;
        Ok(r)
    }
}

/// Evaluates every Duhamel, drift and Hoelder estimate on the corpus.
pub fn check_duhamel_estimates(corpus: &EstimateCorpus) -> Result<Vec<EstimateRow>> {
    let c = corpus;
    let g = &c.grid;
    let left = DuhamelQuadrature::LeftEndpoint;
    let lin = DuhamelQuadrature::PiecewiseLinear;
    let mut rows = Vec::new();

    // L^2 contraction with constant 1: one forcing slice, then a full series
    let one = vector_series(g, c.dt, c.steps, |x, t| {
        if t == 0.0 { [gauss(x, [0.0; 3], c.width), 0.0, 0.0] } else { [0.0; 3] }
    })?;
    let l = duhamel(&one, left)?;
    let lhs = mixed(&l, 2.0, f64::INFINITY)?;
    let rhs = c.dt * lp_box(one.slice(0), 2.0)?;
    rows.push(row("L2 bound, single slice", lhs, rhs, lhs <= rhs * (1.0 + 1e-10)));
    let f = c.forcing(1.0, 0.0)?;
    let l = duhamel(&f, left)?;
    let lhs = mixed(&l, 2.0, f64::INFINITY)?;
    let rhs: f64 = f.slices()[..c.steps].iter().map(|s| lp_box(s, 2.0)).sum::<Result<f64>>()? * c.dt;
    rows.push(row("L2 bound, full series", lhs, rhs, lhs <= rhs * (1.0 + 1e-10)));

    // L^r L^p -> L^s L^q at the critical line 3/q + 2/s = 3/p + 2/r - 2
    rows.push(c.dilation_row("L2L2 to L10L10", |lam| {
        let f = c.forcing(lam, 0.0)?;
        Ok((mixed(&duhamel(&f, lin)?, 10.0, 10.0)?, mixed(&f, 2.0, 2.0)?))
    })?);

    // bounded output when 3/p + 2/r < 2
    let f = c.forcing(1.0, 0.0)?;
    let out = duhamel(&f, lin)?;
    let (lhs, rhs) = (mixed(&out, f64::INFINITY, f64::INFINITY)?, mixed(&f, 4.0, 4.0)?);
    rows.push(row("L4L4 to Linf", lhs, rhs, true));
    let rhs = mixed(&f, f64::INFINITY, 1.0)?;
    rows.push(row("L1Linf to Linf", lhs, rhs, true));

    // divergence form: L^p -> L^q with 1/q = 1/p - 1/5
    rows.push(c.dilation_row("div L5/2 to L5", |lam| {
        let t = c.tensor(lam, 2.0);
        Ok((mixed(&duhamel_div(&t, lin)?, 5.0, 5.0)?, mixed_tensor(&t, 2.5, 2.5)?))
    })?);
    let t = c.tensor(1.0, 0.0);
    let out = duhamel_div(&t, lin)?;
    let (lhs, rhs) = (mixed(&out, f64::INFINITY, f64::INFINITY)?, mixed_tensor(&t, 10.0, 10.0)?);
    rows.push(row("div L10 to Linf", lhs, rhs, true));

    // drift products: L(div(a (x) b)) in L^q with a critical in L^5
    rows.push(c.dilation_row("drift L5 x L2 to L2", |lam| {
        let a = c.heat_drift(lam)?;
        let b = c.forcing(lam, 1.0)?;
        let prod = outer(&a, &b);
        let lhs = spacetime_norm(g, a.dt(), &series(&duhamel_div(&prod, lin)?), WorkingNorm::L2);
        let rhs = spacetime_norm(g, a.dt(), &series(&a), WorkingNorm::Lp(5.0))
            * spacetime_norm(g, b.dt(), &series(&b), WorkingNorm::L2);
        Ok((lhs, rhs))
    })?);
    rows.push(c.dilation_row("drift sup s^(1/5)L5 x Linf to Linf", |lam| {
        let a = c.heat_drift(lam)?;
        let b = vector_series(g, a.dt(), c.steps, |_, _| [1.0, 0.0, 0.0])?;
        let prod = outer(&a, &b);
        let lhs = mixed(&duhamel_div(&prod, lin)?, f64::INFINITY, f64::INFINITY)?;
        let mut sup: f64 = 0.0;
        for (k, s) in a.slices().iter().enumerate().skip(1) {
            sup = sup.max(a.time(k).powf(0.2) * lp_box(s, 5.0)?);
        }
        Ok((lhs, sup))
    })?);

    // parabolic Hoelder bounds from bounded forcing
    let window = HolderWindow { ball: BallRegion::origin(1.5)?, slices: (0, c.steps) };
    let f = c.forcing(1.0, 0.0)?;
    let hl = parabolic_holder_seminorm(&duhamel(&f, lin)?, 0.25, &window)?.value;
    rows.push(row("Hoelder of L(f), nu 1/4", hl, mixed(&f, f64::INFINITY, f64::INFINITY)?, true));
    let t = c.tensor(1.0, 0.0);
    let hl = parabolic_holder_seminorm(&duhamel_div(&t, lin)?, 0.25, &window)?.value;
    rows.push(row("Hoelder of L(div F), nu 1/4", hl, mixed_tensor(&t, f64::INFINITY, f64::INFINITY)?, true));
    Ok(rows)
}

fn series(u: &SpaceTimeField) -> Vec<[Vec<f64>; 3]> {
    u.slices().iter().map(|s| s.components().clone()).collect()
}

fn outer(a: &SpaceTimeField, b: &SpaceTimeField) -> TensorSeries {
    let slices = a
        .slices()
        .iter()
        .zip(b.slices())
        .map(|(x, y)| {
            let (x, y) = (x.components(), y.components());
            let mut m: [[Vec<f64>; 3]; 3] = Default::default();
            for (i, r) in m.iter_mut().enumerate() {
                for (j, c) in r.iter_mut().enumerate() {
                    *c = x[i].iter().zip(&y[j]).map(|(p, q)| p * q).collect();
                }
            }
            m
        })
        .collect();
    TensorSeries { grid: a.grid().clone(), t0: a.t0(), dt: a.dt(), slices }
}

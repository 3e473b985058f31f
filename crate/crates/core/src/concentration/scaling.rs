//! Navier-Stokes rescaling `u_lambda(y, s) = lambda u(lambda y, t0 + lambda^2 s)`,
//! the Type I statistic and the concentration series on shrinking balls.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::norms::{center_lattice, morrey_critical, RegionDesc};
use crate::spacetime::SpaceTimeField;
use crate::zoom::{sample_on_axes, Patch, ZoomSampler};

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("scaling factor {lambda} must be positive")));
    }
    // lambda y leaves the box for lambda > 1; only integer factors keep the
    // periodic extension continuous
    if lambda > 1.0 && (lambda - lambda.round()).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!("scaling factor {lambda} > 1 must be an integer")));
    }
    Ok(())
}

fn rescale_values(f: &[num_complex::Complex64], g: &crate::grid::Grid, lambda: f64, amp: f64) -> Result<Vec<f64>> {
    let coords: Vec<f64> = (0..g.n()).map(|i| lambda * g.coord(i)).collect();
    Ok(sample_on_axes(g, f, &coords)?.into_iter().map(|v| amp * v).collect())
}

/// `u_lambda(y) = lambda u(lambda y)` on the same grid, by trigonometric
/// interpolation of `u` (periodically extended).
pub fn rescale(u: &VectorField, lambda: f64) -> Result<VectorField> {
    check_lambda(lambda)?;
    let g = u.grid();
    let s = u.fresh_spectra();
    let comps = [
        rescale_values(&s[0], g, lambda, lambda)?,
        rescale_values(&s[1], g, lambda, lambda)?,
        rescale_values(&s[2], g, lambda, lambda)?,
    ];
    VectorField::new(g, comps)
}

/// Rescaled history from the stored time `t0` on: slice `j` of the result
/// is `u_lambda(., s_j)` with `t0 + lambda^2 s_j` the `j`-th stored time
/// after `t0`. Pressure, when present, scales as `lambda^2 q(lambda y, .)`.
pub fn rescale_run(run: &SpaceTimeField, lambda: f64, t0: f64) -> Result<SpaceTimeField> {
    check_lambda(lambda)?;
    let i0 = ((t0 - run.t0()) / run.dt()).round();
    if i0 < 0.0 || i0 as usize >= run.len() || (run.time(i0 as usize) - t0).abs() > 1e-9 * run.dt().max(1.0) {
        return Err(Error::InvalidParameter(format!("rescaling origin {t0} is not a stored time")));
    }
    let i0 = i0 as usize;
    let slices = run.slices()[i0..].iter().map(|s| rescale(s, lambda)).collect::<Result<Vec<_>>>()?;
    let out = SpaceTimeField::new(0.0, run.dt() / (lambda * lambda), slices)?;
    match run.pressure() {
        None => Ok(out),
        Some(p) => {
            let g = run.grid();
            let q = p[i0..]
                .iter()
                .map(|q| ScalarField::new(g, rescale_values(q.spectrum(), g, lambda, lambda * lambda)?))
                .collect::<Result<Vec<_>>>()?;
            out.with_pressure(q)
        }
    }
}

/// `||u||_{L^p(B_radius(center))}` by midpoint quadrature of the
/// trigonometric interpolant on `m` points per diameter; `p = inf` is the
/// max over those points.
pub fn fine_ball_norm(u: &VectorField, center: [f64; 3], radius: f64, p: f64, m: usize) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("Lebesgue exponent {p} must be >= 1")));
    }
    let patch = Patch::new(center, radius, m)?;
    let z = ZoomSampler::new(u.grid(), patch)?;
    let v = z.sample_vector(u)?;
    let shell = patch.shell(None, radius);
    let mag = |i: usize| (v[0][i] * v[0][i] + v[1][i] * v[1][i] + v[2][i] * v[2][i]).sqrt();
    if p.is_infinite() {
        return Ok(shell.iter().map(|(i, _)| mag(*i)).fold(0.0, f64::max));
    }
    let h3 = patch.h().powi(3);
    Ok((shell.iter().map(|(i, _)| mag(*i).powf(p)).sum::<f64>() * h3).powf(1.0 / p))
}

/// `(||u_lambda||_{L^3(B_radius)}, ||u||_{L^3(B_{lambda radius})})`, both
/// centered at the origin.
pub fn critical_ball_identity(u: &VectorField, lambda: f64, radius: f64, m: usize) -> Result<(f64, f64)> {
    let ul = rescale(u, lambda)?;
    Ok((fine_ball_norm(&ul, [0.0; 3], radius, 3.0, m)?, fine_ball_norm(u, [0.0; 3], lambda * radius, 3.0, m)?))
}

/// `t_* = T* - S* r0`, linear in `r0` as stated; a dimensional reading of
/// the Type I bound would suggest `r0^2` instead.
pub fn t_star(t_star_proxy: f64, s_star: f64, r0: f64) -> f64 {
    t_star_proxy - s_star * r0
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TypeIParams {
    pub r0: f64,
    pub bound: f64,
    /// Smallest radius; `0` selects two grid cells.
    pub r_min: f64,
    /// Spacing of the center lattice in cells.
    pub stride: usize,
}

impl Default for TypeIParams {
    fn default() -> Self {
        Self { r0: 1.0, bound: 1.0, r_min: 0.0, stride: 4 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TypeIRecord {
    pub t: f64,
    /// `sup r^{-1/2} ||u(t)||_{L^2(B_r(x))}` over the lattice.
    pub value: f64,
    pub center: [f64; 3],
    pub radius: f64,
    pub bound: f64,
    pub pass: bool,
}

impl TypeIRecord {
    pub const CSV_HEADER: &'static str = "t,value,cx,cy,cz,r,M,pass";

    pub fn csv(records: &[TypeIRecord]) -> String {
        let mut s = format!("{}\n", Self::CSV_HEADER);
        for r in records {
            let _ = writeln!(
                s,
                "{:e},{:e},{},{},{},{:e},{},{}",
                r.t, r.value, r.center[0], r.center[1], r.center[2], r.radius, r.bound, r.pass
            );
        }
        s
    }
}

/// Type I statistic of every stored slice over dyadic radii `r0, r0/2, ...`.
pub fn type_one_monitor(run: &SpaceTimeField, params: TypeIParams) -> Result<Vec<TypeIRecord>> {
    if !(params.r0 > 0.0 && params.bound > 0.0) {
        return Err(Error::InvalidParameter(format!("Type I monitor needs r0, M > 0; got {params:?}")));
    }
    let g = run.grid();
    let r_min = if params.r_min > 0.0 { params.r_min } else { 2.0 * g.dx() };
    let centers = center_lattice(g, params.r0, params.stride);
    let mut out = Vec::with_capacity(run.len());
    for (i, s) in run.slices().iter().enumerate() {
        let rep = morrey_critical(s, &centers, r_min, params.r0)?;
        let (center, radius) = match rep.region {
            RegionDesc::Ball(b) => (b.center, b.radius),
            _ => ([0.0; 3], params.r0),
        };
        out.push(TypeIRecord {
            t: run.time(i),
            value: rep.value,
            center,
            radius,
            bound: params.bound,
            pass: rep.value <= params.bound,
        });
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConcentrationParams {
    /// Proxy for the singular time.
    pub t_star: f64,
    pub s_star: f64,
    pub center: [f64; 3],
    /// `L^3` level below which the rescaled flow must stay bounded.
    pub gamma: f64,
    /// Bound on the rescaled sup norm over `B_{1/3}`.
    pub sup_threshold: f64,
    /// Quadrature points per ball diameter.
    pub zoom: usize,
}

impl Default for ConcentrationParams {
    fn default() -> Self {
        Self { t_star: 0.1, s_star: 0.25, center: [0.0; 3], gamma: 0.1, sup_threshold: 1.0, zoom: 32 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConcentrationRow {
    pub t: f64,
    /// `2 sqrt((T* - t) / S*)`.
    pub radius: f64,
    pub l3: f64,
    pub below_gate: bool,
    /// `lambda sup_{|x - c| < lambda/3} |u(x, t)|` with `lambda = radius / 2`,
    /// the sup over `B_{1/3}` of the rescaled flow at `s = 0`.
    pub rescaled_sup: f64,
    pub bounded: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConcentrationSeries {
    pub params: ConcentrationParams,
    pub rows: Vec<ConcentrationRow>,
    /// Every row below the gate is bounded.
    pub contrapositive_ok: bool,
}

impl ConcentrationSeries {
    pub const CSV_HEADER: &'static str = "t,radius,L3,below_gate,rescaled_sup,bounded";

    pub fn csv(&self) -> String {
        let mut s = format!("{}\n", Self::CSV_HEADER);
        for r in &self.rows {
            let _ = writeln!(s, "{:e},{:e},{:e},{},{:e},{}", r.t, r.radius, r.l3, r.below_gate, r.rescaled_sup, r.bounded);
        }
        s
    }
}

/// `||u(t)||_{L^3(B_{2 sqrt((T*-t)/S*)}(center))}` for every stored `t < T*`.
pub fn concentration_diagnostic(run: &SpaceTimeField, params: ConcentrationParams) -> Result<ConcentrationSeries> {
    if !(params.s_star > 0.0 && params.t_star.is_finite() && params.gamma >= 0.0 && params.zoom >= 4) {
        return Err(Error::InvalidParameter(format!("invalid concentration parameters {params:?}")));
    }
    let half = 0.5 * run.grid().length();
    let mut rows = Vec::new();
    for (i, u) in run.slices().iter().enumerate() {
        let t = run.time(i);
        if t >= params.t_star {
            continue;
        }
        let lambda = ((params.t_star - t) / params.s_star).sqrt();
        let radius = 2.0 * lambda;
        if params.center.iter().any(|c| c.abs() + radius >= half) {
            return Err(Error::InvalidParameter(format!("ball of radius {radius} at t = {t} leaves the box")));
        }
        let l3 = fine_ball_norm(u, params.center, radius, 3.0, params.zoom)?;
        let rescaled_sup = lambda * fine_ball_norm(u, params.center, lambda / 3.0, f64::INFINITY, params.zoom)?;
        rows.push(ConcentrationRow {
            t,
            radius,
            l3,
            below_gate: l3 <= params.gamma,
            rescaled_sup,
            bounded: rescaled_sup <= params.sup_threshold,
        });
    }
    if rows.is_empty() {
        return Err(Error::InsufficientData(format!("no stored time before T* = {}", params.t_star)));
    }
    let contrapositive_ok = rows.iter().all(|r| !r.below_gate || r.bounded);
    Ok(ConcentrationSeries { params, rows, contrapositive_ok })
}

/// Largest rowwise relative mismatch between the series of `u` from `t0` on and the
/// series of `u_lambda` with proxy time `(T* - t0) / lambda^2`.
pub fn scaling_covariance(run: &SpaceTimeField, params: ConcentrationParams, lambda: f64, t0: f64) -> Result<f64> {
    let scaled = rescale_run(run, lambda, t0)?;
    let sp = ConcentrationParams {
        t_star: (params.t_star - t0) / (lambda * lambda),
        center: params.center.map(|c| c / lambda),
        ..params
    };
    let a = concentration_diagnostic(run, params)?;
    let b = concentration_diagnostic(&scaled, sp)?;
    let a: Vec<&ConcentrationRow> = a.rows.iter().filter(|r| r.t >= t0 - 1e-12).collect();
    if a.len() != b.rows.len() {
        return Err(Error::InsufficientData(format!("series lengths differ: {} vs {}", a.len(), b.rows.len())));
    }
    let scale = a.iter().map(|r| r.l3).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(0.0);
    }
    let floor = 1e-12 * scale;
    Ok(a.iter().zip(&b.rows).map(|(x, y)| (x.l3 - y.l3).abs() / x.l3.max(floor)).fold(0.0, f64::max))
}

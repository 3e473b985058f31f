//! Lorentz quasinorms from distribution functions, and the O'Neil and Hunt
//! inequalities as numerical checks.
//!
//! The quasinorm is `(p int_0^inf alpha^q d(alpha)^{q/p} dalpha/alpha)^{1/q}`
//! with the factor `p` kept in front of the integral; other normalizations
//! differ by a constant.

use num_complex::Complex64;

use super::{BallRegion, Magnitude, NormReport, RegionDesc};
use crate::error::{Error, Result};
use crate::field::ScalarField;

/// Quasinorm of the step function taking `values` on cells of volume `w`.
///
/// With values sorted decreasingly, `d(alpha) = k w` on `[v_{k+1}, v_k)`, so
/// the integral is a finite sum and exact for the sampled function.
pub fn lorentz_from_values(mut values: Vec<f64>, w: f64, p: f64, q: f64) -> f64 {
    values.retain(|v| *v > 0.0);
    values.sort_by(|a, b| b.partial_cmp(a).expect("finite values"));
    if values.is_empty() {
        return 0.0;
    }
    if q.is_infinite() {
        return values
            .iter()
            .enumerate()
            .map(|(k, v)| v * (w * (k + 1) as f64).powf(1.0 / p))
            .fold(0.0, f64::max);
    }
    let mut sum = 0.0;
    for k in 0..values.len() {
        let next = values.get(k + 1).copied().unwrap_or(0.0);
        sum += (w * (k + 1) as f64).powf(q / p) * (values[k].powf(q) - next.powf(q)) / q;
    }
    (p * sum).powf(1.0 / q)
}

fn check_pq(p: f64, q: f64) -> Result<()> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InadmissibleExponents(format!("Lorentz exponent p = {p} must lie in (1, inf)")));
    }
    if !(q >= 1.0) {
        return Err(Error::InadmissibleExponents(format!("Lorentz exponent q = {q} must be >= 1")));
    }
    Ok(())
}

fn magnitudes<F: Magnitude + ?Sized>(f: &F, region: Option<&BallRegion>) -> Result<Vec<f64>> {
    Ok(match region {
        Some(b) => b.cells(f.grid())?.into_iter().map(|i| f.abs_at(i)).collect(),
        None => (0..f.grid().size()).map(|i| f.abs_at(i)).collect(),
    })
}

/// `||f||_{L^{p,q}(region)}`; `region = None` means the whole box.
pub fn lorentz_quasinorm<F: Magnitude + ?Sized>(
    f: &F,
    p: f64,
    q: f64,
    region: Option<&BallRegion>,
) -> Result<NormReport> {
    check_pq(p, q)?;
    let vals = magnitudes(f, region)?;
    let v = lorentz_from_values(vals, f.grid().cell_volume(), p, q);
    let desc = region.map_or(RegionDesc::Box, |b| RegionDesc::Ball(*b));
    NormReport::new(format!("L{p};{q}"), v, desc, "distribution-function quadrature")
}

/// Sharp constant `C` in `||f||_{p,q2} <= C ||f||_{p,q1}` for `q1 < q2`
/// under this normalization: `max(1, (q1/p)^{1/q1 - 1/q2})`.
pub fn nesting_constant(p: f64, q1: f64, q2: f64) -> f64 {
    let inv2 = if q2.is_infinite() { 0.0 } else { 1.0 / q2 };
    (q1 / p).powf(1.0 / q1 - inv2).max(1.0)
}

/// Outcome of an inequality check `lhs <= rhs`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InequalityReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`, or 0 when `lhs == 0`.
    pub ratio: f64,
    pub pass: bool,
}

impl InequalityReport {
    pub fn new(lhs: f64, rhs: f64) -> Self {
        let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs };
        Self { lhs, rhs, ratio, pass: ratio <= 1.0 }
    }
}

/// Linear convolution `f * g` of sources supported in `|x| < L/4`, computed
/// on the doubled grid. The result is supported in `|x| < L/2`.
pub fn free_convolution(f: &ScalarField, g: &ScalarField) -> Result<ScalarField> {
    let grid = f.grid();
    grid.ensure_same(g.grid(), "convolution")?;
    let lim = 0.25 * grid.length();
    for h in [f, g] {
        for (idx, v) in h.values().iter().enumerate() {
            if *v != 0.0 {
                let x = grid.point(idx);
                if (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt() >= lim {
                    return Err(Error::SupportViolation("convolution operand reaches |x| >= L/4".into()));
                }
            }
        }
    }
    let n = grid.n();
    let m = 2 * n;
    let fft = grid.padded_fft();
    // sample (i, j, k) of the box sits at coordinate (i - n/2) dx; embed at the
    // padded index of that coordinate so the product of transforms is a
    // convolution about the origin
    let embed = |h: &ScalarField| {
        let mut buf = vec![Complex64::default(); m * m * m];
        let wrap = |i: usize| (i + m - n / 2) % m;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    buf[(wrap(i) * m + wrap(j)) * m + wrap(k)] = Complex64::new(h.values()[grid.index(i, j, k)], 0.0);
                }
            }
        }
        fft.forward(&mut buf);
        buf
    };
    let mut a = embed(f);
    let b = embed(g);
    a.iter_mut().zip(&b).for_each(|(x, y)| *x *= y);
    fft.inverse(&mut a);
    let wrap = |i: usize| (i + m - n / 2) % m;
    let dv = grid.cell_volume();
    let mut out = vec![0.0; grid.size()];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                out[grid.index(i, j, k)] = a[(wrap(i) * m + wrap(j)) * m + wrap(k)].re * dv;
            }
        }
    }
    ScalarField::new(grid, out)
}

fn inv(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        1.0 / x
    }
}

/// O'Neil: `||f * g||_{L^{r,s}} <= 3r ||f||_{L^{p1,q1}} ||g||_{L^{p2,q2}}` on
/// the whole space, with `1/r + 1 = 1/p1 + 1/p2` and `1/q1 + 1/q2 >= 1/s`.
#[allow(clippy::too_many_arguments)]
pub fn check_oneil(
    f: &ScalarField,
    g: &ScalarField,
    p1: f64,
    q1: f64,
    p2: f64,
    q2: f64,
    s: f64,
) -> Result<InequalityReport> {
    let inv_r = 1.0 / p1 + 1.0 / p2 - 1.0;
    for (name, v) in [("p1", p1), ("p2", p2)] {
        if !(v > 1.0 && v.is_finite()) {
            return Err(Error::InadmissibleExponents(format!("{name} = {v} must lie in (1, inf)")));
        }
    }
    if !(inv_r > 0.0 && inv_r < 1.0) {
        return Err(Error::InadmissibleExponents(format!("1/r = {inv_r} puts r outside (1, inf)")));
    }
    for (name, v) in [("q1", q1), ("q2", q2), ("s", s)] {
        if !(v >= 1.0) {
            return Err(Error::InadmissibleExponents(format!("{name} = {v} must be >= 1")));
        }
    }
    if inv(q1) + inv(q2) < inv(s) - 1e-12 {
        return Err(Error::InadmissibleExponents("1/q1 + 1/q2 < 1/s".into()));
    }
    let r = 1.0 / inv_r;
    let conv = free_convolution(f, g)?;
    let lhs = lorentz_quasinorm(&conv, r, s, None)?.value;
    let rhs = 3.0 * r * lorentz_quasinorm(f, p1, q1, None)?.value * lorentz_quasinorm(g, p2, q2, None)?.value;
    Ok(InequalityReport::new(lhs, rhs))
}

/// Hunt: `||fg||_{L^{r,s}} <= C ||f||_{L^{p,s1}} ||g||_{L^{q,s2}}` with
/// `1/r = 1/p + 1/q`, `1/s = 1/s1 + 1/s2`. The constant is not known in
/// closed form, so the ratio reported is an empirical lower bound for `C`.
pub fn check_hunt(
    f: &ScalarField,
    g: &ScalarField,
    p: f64,
    s1: f64,
    q: f64,
    s2: f64,
    region: Option<&BallRegion>,
) -> Result<InequalityReport> {
    f.grid().ensure_same(g.grid(), "Hunt product")?;
    let r = 1.0 / (1.0 / p + 1.0 / q);
    let inv_s = inv(s1) + inv(s2);
    let s = if inv_s == 0.0 { f64::INFINITY } else { 1.0 / inv_s };
    check_pq(p, s1)?;
    check_pq(q, s2)?;
    check_pq(r, s)?;
    let fg = ScalarField::new(f.grid(), f.values().iter().zip(g.values()).map(|(a, b)| a * b).collect())?;
    let lhs = lorentz_quasinorm(&fg, r, s, region)?.value;
    let rhs = lorentz_quasinorm(f, p, s1, region)?.value * lorentz_quasinorm(g, q, s2, region)?.value;
    let mut rep = InequalityReport::new(lhs, rhs);
    rep.pass = rep.ratio.is_finite();
    Ok(rep)
}

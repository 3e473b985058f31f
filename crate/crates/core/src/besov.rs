//! Homogeneous Besov norms by Littlewood-Paley blocks and by heat flow, and
//! the dyadic low/high frequency split.

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::fit::loglog_fit;
use crate::grid::Grid;
use crate::norms::{lp_box, Magnitude, NormReport, RegionDesc};
use crate::spectral::{divergence_relative, heat_semigroup, heat_semigroup_vector, RadialFilter};

/// Smooth step: 0 for `x <= 0`, 1 for `x >= 1`, built from `exp(-1/x)`.
pub fn smooth_step(x: f64) -> f64 {
    let f = |y: f64| if y > 0.0 { (-1.0 / y).exp() } else { 0.0 };
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        f(x) / (f(x) + f(1.0 - x))
    }
}

/// Low-pass profile: 1 on `[0, 3/4]`, 0 beyond `4/3`.
pub fn chi(r: f64) -> f64 {
    1.0 - smooth_step((r - 0.75) / (4.0 / 3.0 - 0.75))
}

/// Annulus profile `phi(r) = chi(r/2) - chi(r)`, supported in `[3/4, 8/3]`.
/// The dyadic dilates telescope to 1 away from the origin.
pub fn phi(r: f64) -> f64 {
    chi(0.5 * r) - chi(r)
}

/// Dyadic band indices covering the grid frequencies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LpBank {
    pub j_min: i32,
    pub j_max: i32,
}

impl LpBank {
    /// Smallest bank whose bands sum to one on every nonzero grid frequency.
    pub fn for_grid(grid: &Grid) -> Self {
        let k_min = 2.0 * std::f64::consts::PI / grid.length();
        let k_max = 3f64.sqrt() * std::f64::consts::PI / grid.dx();
        // need 2^{j_min} * 4/3 <= k_min and 2^{j_max + 1} * 3/4 >= k_max
        let j_min = (k_min * 0.75).log2().floor() as i32;
        let j_max = (k_max * 4.0 / 3.0).log2().ceil() as i32;
        Self { j_min, j_max }
    }

    pub fn bands(&self) -> impl Iterator<Item = i32> {
        self.j_min..=self.j_max
    }

    /// Sum of the band multipliers at frequency `|xi|`.
    pub fn partition_sum(&self, xi: f64) -> f64 {
        self.bands().map(|j| phi(xi * 2f64.powi(-j))).sum()
    }
}

/// `Delta_j f = phi(2^{-j} D) f`.
pub fn lp_project<F: RadialFilter>(f: &F, j: i32) -> F {
    let scale = 2f64.powi(-j);
    f.radial_filter(&|k| phi(k * scale))
}

fn lp_norm_box<F: Magnitude>(f: &F, p: f64) -> f64 {
    lp_box(f, p).expect("p >= 1 checked by caller")
}

/// `||f||_{B^s_{p,q}}` from Littlewood-Paley blocks over the grid bank.
pub fn besov_norm_lp<F: RadialFilter + Magnitude>(f: &F, s: f64, p: f64, q: f64) -> Result<NormReport> {
    if !(p >= 1.0) || !(q >= 1.0) {
        return Err(Error::InvalidParameter(format!("Besov exponents p = {p}, q = {q} must be >= 1")));
    }
    if !(s < 3.0 / p) {
        return Err(Error::InvalidParameter(format!("regularity s = {s} must be below 3/p = {}", 3.0 / p)));
    }
    let bank = LpBank::for_grid(f.grid());
    let terms: Vec<f64> = bank.bands().map(|j| 2f64.powf(j as f64 * s) * lp_norm_box(&lp_project(f, j), p)).collect();
    let v = if q.is_infinite() {
        terms.iter().copied().fold(0.0, f64::max)
    } else {
        terms.iter().map(|t| t.powf(q)).sum::<f64>().powf(1.0 / q)
    };
    NormReport::new(format!("B{s}_{p};{q}"), v, RegionDesc::Box, "Littlewood-Paley blocks")
}

/// Log-spaced heat-flow times spanning `[dx^2, L^2/16]`.
pub fn heat_lattice(grid: &Grid, points: usize) -> Vec<f64> {
    let (a, b) = (grid.dx().powi(2), grid.length().powi(2) / 16.0);
    let m = points.max(2);
    (0..m).map(|i| a * (b / a).powf(i as f64 / (m - 1) as f64)).collect()
}

/// Number of heat-flow lattice points.
pub const HEAT_LATTICE_POINTS: usize = 40;

/// Heat-flow evaluation shared by scalar and vector fields.
pub trait HeatFlow: Magnitude + Sized {
    fn heat(&self, t: f64) -> Result<Self>;
    fn without_mean(&self) -> Self;
}

impl HeatFlow for ScalarField {
    fn heat(&self, t: f64) -> Result<Self> {
        heat_semigroup(self, t)
    }
    fn without_mean(&self) -> Self {
        let m = self.mean();
        self.map(|v| v - m).expect("finite")
    }
}

impl HeatFlow for VectorField {
    fn heat(&self, t: f64) -> Result<Self> {
        heat_semigroup_vector(self, t)
    }
    fn without_mean(&self) -> Self {
        let comps = self.components().clone().map(|c| {
            let m = c.iter().sum::<f64>() / c.len() as f64;
            c.into_iter().map(|v| v - m).collect()
        });
        VectorField::new(self.grid(), comps).expect("finite")
    }
}

/// `sup_t t^{-s/2} ||e^{t Delta} f||_{L^p}` over the 40-point heat lattice,
/// after removing the mean. A lattice lower bound of the true supremum.
pub fn besov_norm_heat<F: HeatFlow>(f: &F, s: f64, p: f64) -> Result<NormReport> {
    if !(s < 0.0) {
        return Err(Error::InvalidParameter(format!("heat characterization needs s < 0, got {s}")));
    }
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("Lebesgue exponent {p} must be >= 1")));
    }
    let f0 = f.without_mean();
    let mut best: f64 = 0.0;
    for t in heat_lattice(f.grid(), HEAT_LATTICE_POINTS) {
        best = best.max(t.powf(-0.5 * s) * lp_norm_box(&f0.heat(t)?, p));
    }
    NormReport::new(format!("B{s}_{p};inf(heat)"), best, RegionDesc::Box, "heat-flow lattice sup")
}

/// Low/high frequency decomposition `g - mean(g) = bar + tilde`.
#[derive(Clone, Debug)]
pub struct BesovSplit {
    pub n_threshold: f64,
    pub bar: VectorField,
    pub tilde: VectorField,
    /// `||tilde||_{L^2}`
    pub tilde_l2: f64,
    /// `||bar||_{B^{-1+delta2}_{inf,inf}}`
    pub bar_besov_smooth: f64,
    /// `||tilde||_{B^{-1+3/p}_{p,inf}}`
    pub tilde_besov: f64,
    /// `||bar||_{B^{-1+3/p}_{p,inf}}`
    pub bar_besov: f64,
    pub bar_l2: f64,
}

/// Splits a divergence-free `g` at frequency threshold `N`:
/// `bar = sum_{2^j <= N} Delta_j g` and `tilde` is the remainder.
pub fn besov_split(g: &VectorField, n_threshold: f64, p: f64, delta2: f64) -> Result<BesovSplit> {
    if !(n_threshold > 0.0) {
        return Err(Error::InvalidParameter(format!("split threshold N = {n_threshold} must be positive")));
    }
    let div = divergence_relative(g);
    if div > 1e-8 {
        return Err(Error::InvalidParameter(format!("field is not divergence-free (relative divergence {div:.2e})")));
    }
    let bank = LpBank::for_grid(g.grid());
    let top = n_threshold.log2().floor() as i32;
    let low = move |k: f64| bank.bands().filter(|&j| j <= top).map(|j| phi(k * 2f64.powi(-j))).sum::<f64>();
    let bar = g.radial_filter(&low);
    let tilde = g.radial_filter(&|k| if k == 0.0 { 0.0 } else { 1.0 - low(k) });
    let tilde_l2 = tilde.l2_norm();
    let bar_l2 = bar.l2_norm();
    let sp = -1.0 + 3.0 / p;
    Ok(BesovSplit {
        n_threshold,
        bar_besov_smooth: besov_norm_lp(&bar, -1.0 + delta2, f64::INFINITY, f64::INFINITY)?.value,
        tilde_besov: besov_norm_lp(&tilde, sp, p, f64::INFINITY)?.value,
        bar_besov: besov_norm_lp(&bar, sp, p, f64::INFINITY)?.value,
        bar,
        tilde,
        tilde_l2,
        bar_l2,
    })
}

/// Empirical split exponents over a range of thresholds.
#[derive(Clone, Debug)]
pub struct SplitScan {
    pub rows: Vec<(f64, f64, f64)>,
    /// Slope of `log ||tilde||_{L^2}` against `log N` (plays the role of `-gamma_2`).
    pub tilde_slope: f64,
    /// Slope of `log ||bar||_{B^{-1+delta2}}` against `log N` (the `gamma_1` role).
    pub bar_slope: f64,
}

impl SplitScan {
    pub const CSV_HEADER: &'static str = "N,tilde_L2,bar_B_smooth,tilde_slope,bar_slope";

    pub fn csv(&self) -> String {
        let mut s = format!("{}\n", Self::CSV_HEADER);
        for (n, t, b) in &self.rows {
            s.push_str(&format!("{n:e},{t:e},{b:e},{:e},{:e}\n", self.tilde_slope, self.bar_slope));
        }
        s
    }
}

pub fn besov_split_scan(g: &VectorField, thresholds: &[f64], p: f64, delta2: f64) -> Result<SplitScan> {
    let mut rows = Vec::with_capacity(thresholds.len());
    for &n in thresholds {
        let s = besov_split(g, n, p, delta2)?;
        rows.push((n, s.tilde_l2, s.bar_besov_smooth));
    }
    let ns: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let t: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let b: Vec<f64> = rows.iter().map(|r| r.2).collect();
    Ok(SplitScan { tilde_slope: loglog_fit(&ns, &t)?.slope, bar_slope: loglog_fit(&ns, &b)?.slope, rows })
}

/// Besov norm of `cutoff * u`, the extension-by-cutoff value used for data
/// given on a bounded region.
pub fn besov_norm_cutoff(u: &VectorField, cutoff: &ScalarField, s: f64, p: f64) -> Result<NormReport> {
    u.grid().ensure_same(cutoff.grid(), "Besov cutoff")?;
    let comps = u.components().clone().map(|c| c.iter().zip(cutoff.values()).map(|(a, b)| a * b).collect());
    besov_norm_lp(&VectorField::new(u.grid(), comps)?, s, p, f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn profile_support_and_partition() {
        assert_eq!(phi(0.74), 0.0);
        assert_eq!(phi(2.67), 0.0);
        assert!(phi(1.0) > 0.0);
        let g = Grid::new(32, 4.0 * PI).unwrap();
        let bank = LpBank::for_grid(&g);
        for i in 1..2000 {
            let xi = 0.5 + 0.01 * i as f64;
            assert!((bank.partition_sum(xi) - 1.0).abs() < 1e-12, "{xi}");
        }
    }

    #[test]
    fn projections_sum_to_mean_free_field() {
        let g = Grid::new(16, 4.0 * PI).unwrap();
        let f = ScalarField::from_fn(&g, |x| 1.0 + (x[0]).sin() * (1.5 * x[1]).cos() + (3.0 * x[2]).sin()).unwrap();
        let bank = LpBank::for_grid(&g);
        let mut acc = vec![0.0; g.size()];
        for j in bank.bands() {
            let p = lp_project(&f, j);
            acc.iter_mut().zip(p.values()).for_each(|(a, b)| *a += b);
        }
        for (a, b) in acc.iter().zip(f.values()) {
            assert!((a - (b - 1.0)).abs() < 1e-10);
        }
    }

    #[test]
    fn disjoint_band_is_zero() {
        let g = Grid::new(16, 2.0 * PI * 2.0).unwrap();
        // |xi| = 4 lies in bands j = 1, 2 only
        let f = ScalarField::from_fn(&g, |x| (4.0 * x[0]).cos()).unwrap();
        assert!(lp_project(&f, 4).max_abs() < 1e-14);
        assert!(lp_project(&f, -1).max_abs() < 1e-14);
        let w = phi(1.0);
        assert!((lp_project(&f, 2).max_abs() - w).abs() < 1e-12);
    }

    #[test]
    fn heat_norm_of_single_mode() {
        // the maximizer t = 1/16 must lie inside [dx^2, L^2/16]
        let g = Grid::new(64, 4.0 * PI).unwrap();
        let f = ScalarField::from_fn(&g, |x| 3.0 * (2.0 * x[1]).cos()).unwrap();
        let v = besov_norm_heat(&f, -0.5, f64::INFINITY).unwrap().value;
        let exact = 3.0 * (1.0 / 16.0f64).powf(0.25) * (-0.25f64).exp();
        assert!(v <= exact * (1.0 + 1e-12) && v > 0.99 * exact, "{v} {exact}");
        assert_eq!(besov_norm_heat(&ScalarField::zeros(&g), -0.5, 2.0).unwrap().value, 0.0);
        assert!(besov_norm_heat(&f, 0.1, 2.0).is_err());
    }

    #[test]
    fn lp_norm_of_single_mode() {
        let g = Grid::new(32, 4.0 * PI).unwrap();
        let f = ScalarField::from_fn(&g, |x| (2.0 * x[0]).cos()).unwrap();
        // |xi| = 2 lives in bands j = 0 (phi(2)) and j = 1 (phi(1))
        let v = besov_norm_lp(&f, -0.5, f64::INFINITY, f64::INFINITY).unwrap().value;
        let exact = phi(2.0).max(2f64.powf(-0.5) * phi(1.0));
        assert!((v - exact).abs() < 1e-12);
        assert!(besov_norm_lp(&f, 1.0, 3.0, f64::INFINITY).is_err());
    }

    #[test]
    fn split_separates_bands() {
        let g = Grid::new(64, 2.0 * PI * 2.0).unwrap();
        // divergence-free modes at |xi| = 2 and |xi| = 16
        let v = VectorField::from_fn(&g, |x| [(2.0 * x[1]).sin() + (16.0 * x[2]).sin(), 0.0, 0.0]).unwrap();
        let s = besov_split(&v, 8.0, 4.0, 0.5).unwrap();
        let low = VectorField::from_fn(&g, |x| [(2.0 * x[1]).sin(), 0.0, 0.0]).unwrap();
        assert!(s.bar.sub(&low).unwrap().max_abs() < 1e-10);
        let all = besov_split(&v, 1e6, 4.0, 0.5).unwrap();
        assert!(all.tilde.max_abs() < 1e-12);
        let none = besov_split(&v, 1e-3, 4.0, 0.5).unwrap();
        assert!(none.bar.max_abs() < 1e-12);
        let bad = VectorField::from_fn(&g, |x| [(x[0]).sin(), 0.0, 0.0]).unwrap();
        assert!(besov_split(&bad, 4.0, 4.0, 0.5).is_err());
    }
}

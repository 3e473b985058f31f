//! Lebesgue, uniformly local, Morrey, Lorentz and parabolic Hoelder norms.
//!
//! Ball integrals use cell-center membership: a grid point belongs to
//! `B_r(c)` when `|x - c| < r`, and contributes `|f|^p dx^3`.

mod holder;
mod lorentz;

pub use holder::{parabolic_holder_seminorm, HolderWindow};
pub use lorentz::{
    check_hunt, check_oneil, free_convolution, lorentz_from_values, lorentz_quasinorm, nesting_constant, InequalityReport,
};

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::Grid;

/// Fields whose pointwise magnitude can be integrated.
pub trait Magnitude {
    fn grid(&self) -> &Grid;
    fn abs_at(&self, idx: usize) -> f64;
}

impl Magnitude for ScalarField {
    fn grid(&self) -> &Grid {
        ScalarField::grid(self)
    }
    fn abs_at(&self, idx: usize) -> f64 {
        self.values()[idx].abs()
    }
}

impl Magnitude for VectorField {
    fn grid(&self) -> &Grid {
        VectorField::grid(self)
    }
    fn abs_at(&self, idx: usize) -> f64 {
        let c = self.components();
        (c[0][idx] * c[0][idx] + c[1][idx] * c[1][idx] + c[2][idx] * c[2][idx]).sqrt()
    }
}

/// Ball `B_r(c)` in the periodic box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BallRegion {
    pub center: [f64; 3],
    pub radius: f64,
}

impl BallRegion {
    pub fn new(center: [f64; 3], radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(format!("ball radius {radius} must be positive and finite")));
        }
        Ok(Self { center, radius })
    }

    pub fn origin(radius: f64) -> Result<Self> {
        Self::new([0.0; 3], radius)
    }

    /// The ball plus a one-cell margin must lie inside the box.
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        let half = 0.5 * grid.length();
        for c in self.center {
            if c.abs() + self.radius + grid.dx() > half {
                return Err(Error::InvalidParameter(format!(
                    "ball (center {:?}, radius {}) leaves the box of half-width {half}",
                    self.center, self.radius
                )));
            }
        }
        Ok(())
    }

    /// Flat indices of grid points inside the ball.
    pub fn cells(&self, grid: &Grid) -> Result<Vec<usize>> {
        self.validate(grid)?;
        let dx = grid.dx();
        let half = 0.5 * grid.length();
        let range = |c: f64| {
            let lo = ((c - self.radius + half) / dx).floor().max(0.0) as usize;
            let hi = (((c + self.radius + half) / dx).ceil() as usize).min(grid.n() - 1);
            lo..=hi
        };
        let r2 = self.radius * self.radius;
        let mut out = Vec::new();
        for i in range(self.center[0]) {
            let dx0 = grid.coord(i) - self.center[0];
            for j in range(self.center[1]) {
                let dx1 = grid.coord(j) - self.center[1];
                for k in range(self.center[2]) {
                    let dx2 = grid.coord(k) - self.center[2];
                    if dx0 * dx0 + dx1 * dx1 + dx2 * dx2 < r2 {
                        out.push(grid.index(i, j, k));
                    }
                }
            }
        }
        if out.is_empty() {
            return Err(Error::RegionTooSmall(format!("ball of radius {} contains no grid cell", self.radius)));
        }
        Ok(out)
    }
}

/// Where a reported norm was evaluated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RegionDesc {
    Ball(BallRegion),
    Cylinder { center: [f64; 3], t: f64, radius: f64 },
    Box,
}

/// One evaluated norm.
#[derive(Clone, Debug, PartialEq)]
pub struct NormReport {
    pub name: String,
    pub value: f64,
    pub region: RegionDesc,
    pub method: String,
}

impl NormReport {
    pub fn new(name: impl Into<String>, value: f64, region: RegionDesc, method: impl Into<String>) -> Result<Self> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::NonFinite(format!("norm value {value}")));
        }
        Ok(Self { name: name.into(), value, region, method: method.into() })
    }

    pub const CSV_HEADER: &'static str = "name,value,center,radius,method";

    pub fn csv_row(&self) -> String {
        let (center, radius) = match self.region {
            RegionDesc::Ball(b) => (fmt_point(b.center), format!("{:e}", b.radius)),
            RegionDesc::Cylinder { center, t, radius } => {
                (format!("{};t={:e}", fmt_point(center), t), format!("{radius:e}"))
            }
            RegionDesc::Box => ("box".to_string(), String::new()),
        };
        format!("{},{:e},{},{},{}", self.name, self.value, center, radius, self.method)
    }
}

fn fmt_point(p: [f64; 3]) -> String {
    format!("{:e};{:e};{:e}", p[0], p[1], p[2])
}

/// Renders reports as CSV with a header, in the given order.
pub fn reports_csv(reports: &[NormReport]) -> String {
    let mut s = String::from(NormReport::CSV_HEADER);
    s.push('\n');
    for r in reports {
        let _ = writeln!(s, "{}", r.csv_row());
    }
    s
}

fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("Lebesgue exponent {p} must be >= 1")))
    }
}

/// `(sum |f|^p dx^3)^{1/p}` over the given cells; `p = inf` is the max.
pub fn lp_cells<F: Magnitude + ?Sized>(f: &F, p: f64, cells: &[usize]) -> f64 {
    if p.is_infinite() {
        return cells.iter().map(|&i| f.abs_at(i)).fold(0.0, f64::max);
    }
    let s: f64 = cells.iter().map(|&i| f.abs_at(i).powf(p)).sum();
    (s * f.grid().cell_volume()).powf(1.0 / p)
}

/// `L^p` norm on a ball by cell-center quadrature.
pub fn lp_ball<F: Magnitude + ?Sized>(f: &F, p: f64, ball: &BallRegion) -> Result<NormReport> {
    check_p(p)?;
    let cells = ball.cells(f.grid())?;
    NormReport::new(format!("L{p}"), lp_cells(f, p, &cells), RegionDesc::Ball(*ball), "cell-center quadrature")
}

/// `L^p` norm over the whole periodic box.
pub fn lp_box<F: Magnitude + ?Sized>(f: &F, p: f64) -> Result<f64> {
    check_p(p)?;
    let all: Vec<usize> = (0..f.grid().size()).collect();
    Ok(lp_cells(f, p, &all))
}

/// Lattice of admissible centers with spacing `stride` cells for balls of `radius`.
pub fn center_lattice(grid: &Grid, radius: f64, stride: usize) -> Vec<[f64; 3]> {
    let stride = stride.max(1);
    let half = 0.5 * grid.length();
    let ok: Vec<f64> = (0..grid.n())
        .step_by(stride)
        .map(|i| grid.coord(i))
        .filter(|c| c.abs() + radius + grid.dx() <= half)
        .collect();
    let mut out = Vec::with_capacity(ok.len().pow(3));
    for &a in &ok {
        for &b in &ok {
            for &c in &ok {
                out.push([a, b, c]);
            }
        }
    }
    out
}

/// Uniformly local `L^2` norm: sup over a center lattice (stride 4 cells) of
/// `||f||_{L^2(B_radius(c))}`. A lattice lower bound of the true supremum.
pub fn l2_uloc<F: Magnitude + ?Sized>(f: &F, radius: f64) -> Result<NormReport> {
    let grid = f.grid();
    let centers = center_lattice(grid, radius, 4);
    if centers.is_empty() {
        return Err(Error::InvalidParameter(format!("no ball of radius {radius} fits in the box")));
    }
    let mut best = (0.0, centers[0]);
    for c in centers {
        let v = lp_cells(f, 2.0, &BallRegion::new(c, radius)?.cells(grid)?);
        if v > best.0 {
            best = (v, c);
        }
    }
    NormReport::new(
        "L2_uloc",
        best.0,
        RegionDesc::Ball(BallRegion::new(best.1, radius)?),
        "lattice sup of ball L2 (lower bound)",
    )
}

/// Critical Morrey norm `sup r^{-1/2} ||f||_{L^2(B_r(c))}` over dyadic radii
/// `r_max, r_max/2, ... >= r_min` and the given centers.
pub fn morrey_critical<F: Magnitude + ?Sized>(
    f: &F,
    centers: &[[f64; 3]],
    r_min: f64,
    r_max: f64,
) -> Result<NormReport> {
    let dx = f.grid().dx();
    if r_min < 2.0 * dx {
        return Err(Error::RegionTooSmall(format!("r_min = {r_min} below 2 dx = {}", 2.0 * dx)));
    }
    if r_max < r_min || centers.is_empty() {
        return Err(Error::InvalidParameter("empty radius range or center set".into()));
    }
    let mut best: Option<(f64, BallRegion)> = None;
    let mut r = r_max;
    while r >= r_min * (1.0 - 1e-12) {
        for &c in centers {
            let b = BallRegion::new(c, r)?;
            if b.validate(f.grid()).is_err() {
                continue;
            }
            let v = lp_cells(f, 2.0, &b.cells(f.grid())?) / r.sqrt();
            if best.is_none_or(|(bv, _)| v > bv) {
                best = Some((v, b));
            }
        }
        r *= 0.5;
    }
    let (v, b) = best.ok_or_else(|| Error::InvalidParameter("no admissible ball".into()))?;
    NormReport::new("Morrey_2_3", v, RegionDesc::Ball(b), "dyadic radii sup")
}

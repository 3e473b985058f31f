//! Parabolic Hoelder seminorm `[u]_{C^{nu}_t} + sup_t [u(t)]_{C^{2 nu}_x}`.

use super::{BallRegion, NormReport, RegionDesc};
use crate::error::{Error, Result};
use crate::spacetime::SpaceTimeField;

/// Ball and slice range over which the seminorm is sampled.
#[derive(Clone, Copy, Debug)]
pub struct HolderWindow {
    pub ball: BallRegion,
    /// First and last slice index (inclusive).
    pub slices: (usize, usize),
}

fn diff(u: &SpaceTimeField, a: usize, ia: usize, b: usize, ib: usize) -> f64 {
    let (x, y) = (u.slice(a).components(), u.slice(b).components());
    ((x[0][ia] - y[0][ib]).powi(2) + (x[1][ia] - y[1][ib]).powi(2) + (x[2][ia] - y[2][ib]).powi(2)).sqrt()
}

/// Discrete parabolic Hoelder seminorm of order `nu in (0, 1/2)`.
///
/// The time part is the sup over stored slice pairs of `|u(t+h)-u(t)|/h^nu`;
/// the space part is the sup over slices of axis-aligned quotients
/// `|u(x+d)-u(x)|/|d|^{2 nu}` at dyadic separations `d = 2^k dx`.
pub fn parabolic_holder_seminorm(u: &SpaceTimeField, nu: f64, window: &HolderWindow) -> Result<NormReport> {
    if !(nu > 0.0 && nu < 0.5) {
        return Err(Error::InvalidParameter(format!("Hoelder exponent {nu} must lie in (0, 1/2)")));
    }
    let (s0, s1) = window.slices;
    if s1 >= u.len() || s0 >= s1 {
        return Err(Error::InsufficientData(format!(
            "window slices {s0}..={s1} need two stored slices among {}",
            u.len()
        )));
    }
    let grid = u.grid();
    let cells = window.ball.cells(grid)?;
    let mut time_part: f64 = 0.0;
    for a in s0..=s1 {
        for b in a + 1..=s1 {
            let h = (b - a) as f64 * u.dt();
            let hp = h.powf(nu);
            for &i in &cells {
                time_part = time_part.max(diff(u, a, i, b, i) / hp);
            }
        }
    }
    let n = grid.n();
    let mut space_part: f64 = 0.0;
    for s in s0..=s1 {
        let mut step = 1;
        while step < n / 2 {
            let d = (step as f64 * grid.dx()).powf(2.0 * nu);
            for &i in &cells {
                let [a, b, c] = grid.unflatten(i);
                for nb in [grid.index((a + step) % n, b, c), grid.index(a, (b + step) % n, c), grid.index(a, b, (c + step) % n)]
                {
                    space_part = space_part.max(diff(u, s, i, s, nb) / d);
                }
            }
            step *= 2;
        }
    }
    NormReport::new(
        format!("Holder_par_{nu}"),
        time_part + space_part,
        RegionDesc::Cylinder { center: window.ball.center, t: u.time(s1), radius: window.ball.radius },
        "stored-slice difference quotients",
    )
}

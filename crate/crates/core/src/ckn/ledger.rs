//! The dyadic ledger `A_k`, `B_k` and its time-weighted variant.
//!
//! With `r_k = 2^{-k}`:
//!
//! * `A_k = r_k^{-2} int_{Q} |v|^3 + r_k^{-(1+delta)/2} int_{Q} |q - (q)_{r_k}(s)|^{3/2}`,
//!   target `eps^{2/3} r_k^{3 - delta}`;
//! * `B_k = sup_s int_{B} |v|^2 + int_{Q} |grad v|^2`,
//!   target `C_B eps^{2/3} r_k^{3 - 2 delta / 3}`.
//!
//! The weighted variant bounds the integrals up to every `s` in the cylinder
//! by budgets carrying `(s - t0)_+^{3 eta'/2}`, `(s - t0)_+^{3 eta'/4}` and
//! `(s - t0)_+^{eta'}` with `eta' = eta / 6`. Its reported values are the
//! sup over `s` of integral over weight, compared against the unweighted
//! targets; an integral over a zero weight is infinite unless it vanishes.

use std::fmt::Write as _;
use std::ops::RangeInclusive;

use super::cylinder::{cylinder_integrals, CylinderIntegrals, CylinderQuadrature, ParabolicCylinder};
use crate::error::{Error, Result};
use crate::fit::{loglog_fit, LineFit};
use crate::spacetime::SpaceTimeField;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LedgerParams {
    pub delta: f64,
    pub eps_star: f64,
    pub c_b: f64,
    pub quadrature: CylinderQuadrature,
}

impl Default for LedgerParams {
    fn default() -> Self {
        Self { delta: 1.0, eps_star: 0.05, c_b: 1.0, quadrature: CylinderQuadrature::default() }
    }
}

impl LedgerParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 5.0) || !(self.eps_star > 0.0) || !(self.c_b > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ledger needs delta in (0, 5), eps > 0, C_B > 0; got {}, {}, {}",
                self.delta, self.eps_star, self.c_b
            )));
        }
        Ok(())
    }

    pub fn target_a(&self, r: f64) -> f64 {
        self.eps_star.powf(2.0 / 3.0) * r.powf(3.0 - self.delta)
    }

    pub fn target_b(&self, r: f64) -> f64 {
        self.c_b * self.eps_star.powf(2.0 / 3.0) * r.powf(3.0 - 2.0 * self.delta / 3.0)
    }
}

/// `C_B = 10 C_1^2 (2^11 / (1 - 2^{-2 delta / 3}) + 2^6)`, for reporting.
pub fn c_b_formula(c1: f64, delta: f64) -> f64 {
    10.0 * c1 * c1 * (2048.0 / (1.0 - 2f64.powf(-2.0 * delta / 3.0)) + 64.0)
}

/// `A_k` from precomputed cylinder integrals.
pub fn a_value(ints: &CylinderIntegrals, delta: f64, pressure_on: bool) -> Result<f64> {
    let r = ints.cylinder.r;
    let mut a = ints.v3() / (r * r);
    if pressure_on {
        a += ints.q_osc()? * r.powf(-(1.0 + delta) / 2.0);
    }
    Ok(a)
}

/// `B_k` from precomputed cylinder integrals.
pub fn b_value(ints: &CylinderIntegrals) -> f64 {
    ints.sup_v2() + ints.grad2()
}

/// `(A_k, target)` at `Q_{r_k}(center, t)`.
pub fn ledger_a(
    run: &SpaceTimeField,
    center: [f64; 3],
    t: f64,
    k: u32,
    params: &LedgerParams,
    pressure_on: bool,
) -> Result<(f64, f64)> {
    params.validate()?;
    let cyl = ParabolicCylinder::dyadic(center, t, k)?;
    let ints = cylinder_integrals(run, cyl, params.quadrature)?;
    Ok((a_value(&ints, params.delta, pressure_on)?, params.target_a(cyl.r)))
}

/// `(B_k, target)` at `Q_{r_k}(center, t)`.
pub fn ledger_b(run: &SpaceTimeField, center: [f64; 3], t: f64, k: u32, params: &LedgerParams) -> Result<(f64, f64)> {
    params.validate()?;
    let cyl = ParabolicCylinder::dyadic(center, t, k)?;
    let ints = cylinder_integrals(run, cyl, params.quadrature)?;
    Ok((b_value(&ints), params.target_b(cyl.r)))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightedParams {
    pub eta: f64,
    pub t0: f64,
}

impl WeightedParams {
    pub fn eta_prime(&self) -> f64 {
        self.eta / 6.0
    }
}

/// Normalized weighted quantities of one cylinder.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightedValues {
    pub a_p: f64,
    pub a_pp: f64,
    pub b_p: f64,
    /// Largest `(s - t0)_+` over the nodes; zero when the cylinder lies below `t0`.
    pub max_weight: f64,
    pub pass: bool,
}

fn sup_ratio(num: &[f64], weight: &[f64]) -> f64 {
    num.iter().zip(weight).skip(1).fold(0.0, |acc, (&n, &w)| {
        let r = if w > 0.0 {
            n / w
        } else if n > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        acc.max(r)
    })
}

/// Weighted values from precomputed cylinder integrals.
pub fn weighted_values(ints: &CylinderIntegrals, params: &LedgerParams, w: WeightedParams) -> Result<WeightedValues> {
    if !(w.eta > 0.0 && w.eta < 1.0) {
        return Err(Error::InvalidParameter(format!("eta = {} must lie in (0, 1)", w.eta)));
    }
    let r = ints.cylinder.r;
    let ep = w.eta_prime();
    let lag: Vec<f64> = ints.nodes.iter().map(|n| (n.s - w.t0).max(0.0)).collect();
    let weight = |p: f64, c: f64| lag.iter().map(|l| if *l > 0.0 { c * l.powf(p) } else { 0.0 }).collect::<Vec<_>>();
    let v3: Vec<f64> = ints.cumulative(|n| n.v3).iter().map(|x| x / (r * r)).collect();
    let qo: Vec<f64> = if ints.nodes.iter().all(|n| n.q_osc.is_some()) {
        ints.cumulative(|n| n.q_osc.unwrap_or(0.0)).iter().map(|x| x * r.powf(-(1.0 + params.delta) / 2.0)).collect()
    } else {
        return Err(Error::InsufficientData("weighted ledger needs the pressure".into()));
    };
    let g2 = ints.cumulative(|n| n.grad2);
    let b: Vec<f64> = ints.nodes.iter().zip(&g2).map(|(n, g)| n.v2 + g).collect();
    let a_p = sup_ratio(&v3, &weight(1.5 * ep, 0.5));
    let a_pp = sup_ratio(&qo, &weight(0.75 * ep, 0.5));
    let b_p = sup_ratio(&b, &weight(ep, 1.0));
    let pass = a_p <= params.target_a(r) && a_pp <= params.target_a(r) && b_p <= params.target_b(r);
    Ok(WeightedValues { a_p, a_pp, b_p, max_weight: lag.iter().fold(0.0, |a, b| a.max(*b)), pass })
}

/// `(A'_k, A''_k, B'_k)` at `Q_{r_k}(center, t)`.
pub fn ledger_weighted(
    run: &SpaceTimeField,
    center: [f64; 3],
    t: f64,
    k: u32,
    params: &LedgerParams,
    w: WeightedParams,
) -> Result<WeightedValues> {
    params.validate()?;
    if w.t0 < run.t0() - 1.0 || w.t0 > t {
        return Err(Error::InvalidParameter(format!("t0 = {} must lie in [{}, {t}]", w.t0, run.t0() - 1.0)));
    }
    let ints = cylinder_integrals(run, ParabolicCylinder::dyadic(center, t, k)?, params.quadrature)?;
    weighted_values(&ints, params, w)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LedgerRow {
    pub k: u32,
    pub r: f64,
    pub a: f64,
    pub target_a: f64,
    pub b: f64,
    pub target_b: f64,
    pub pass: bool,
    pub weighted: Option<WeightedValues>,
}

/// Ledger rows over consecutive dyadic scales at one `(center, t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DyadicLedger {
    pub center: [f64; 3],
    pub t: f64,
    pub params: LedgerParams,
    pub weighting: Option<WeightedParams>,
    pub rows: Vec<LedgerRow>,
}

impl DyadicLedger {
    pub const CSV_HEADER: &'static str = "k,r_k,A_k,target_A,B_k,target_B,pass";
    pub const WEIGHTED_HEADER: &'static str = ",eta,t0,Apk,Appk,Bpk,weighted_pass";

    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass && r.weighted.is_none_or(|w| w.pass))
    }

    /// Fit of `A_k ~ r_k^slope`.
    pub fn a_decay(&self) -> Result<LineFit> {
        let r: Vec<f64> = self.rows.iter().map(|r| r.r).collect();
        let a: Vec<f64> = self.rows.iter().map(|r| r.a).collect();
        loglog_fit(&r, &a)
    }

    /// Fit of `B_k ~ r_k^slope`.
    pub fn b_decay(&self) -> Result<LineFit> {
        let r: Vec<f64> = self.rows.iter().map(|r| r.r).collect();
        let b: Vec<f64> = self.rows.iter().map(|r| r.b).collect();
        loglog_fit(&r, &b)
    }

    pub fn csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        if self.weighting.is_some() {
            s.push_str(Self::WEIGHTED_HEADER);
        }
        s.push('\n');
        for row in &self.rows {
            let _ = write!(
                s,
                "{},{:e},{:e},{:e},{:e},{:e},{}",
                row.k, row.r, row.a, row.target_a, row.b, row.target_b, row.pass
            );
            if let (Some(wp), Some(w)) = (self.weighting, row.weighted) {
                let _ = write!(s, ",{},{},{:e},{:e},{:e},{}", wp.eta, wp.t0, w.a_p, w.a_pp, w.b_p, w.pass);
            }
            s.push('\n');
        }
        s
    }
}

/// Builds the ledger for `k` in `ks`, optionally with the weighted columns.
pub fn dyadic_ledger(
    run: &SpaceTimeField,
    center: [f64; 3],
    t: f64,
    ks: RangeInclusive<u32>,
    params: LedgerParams,
    weighting: Option<WeightedParams>,
) -> Result<DyadicLedger> {
    params.validate()?;
    if ks.is_empty() {
        return Err(Error::InvalidParameter("empty scale range".into()));
    }
    let pressure_on = run.pressure().is_some();
    let mut rows = Vec::new();
    for k in ks {
        let cyl = ParabolicCylinder::dyadic(center, t, k)?;
        let ints = cylinder_integrals(run, cyl, params.quadrature)?;
        let a = a_value(&ints, params.delta, pressure_on)?;
        let b = b_value(&ints);
        let (target_a, target_b) = (params.target_a(cyl.r), params.target_b(cyl.r));
        let weighted = match weighting {
            Some(w) => Some(weighted_values(&ints, &params, w)?),
            None => None,
        };
        let pass = a <= target_a && b <= target_b;
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::NonFinite(format!("ledger row k = {k}")));
        }
        rows.push(LedgerRow { k, r: cyl.r, a, target_a, b, target_b, pass, weighted });
    }
    Ok(DyadicLedger { center, t, params, weighting, rows })
}

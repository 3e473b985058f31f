//! Partial-regularity bookkeeping on parabolic cylinders: the dyadic ledger
//! of scaled `L^3`, pressure oscillation and local energy quantities, the
//! backward-heat test functions, Morrey sweeps and the parabolic kernel bound.

mod cylinder;
mod kernel;
mod ledger;
mod testfn;

pub use cylinder::{
    cylinder_integrals, cylinder_integrals_direct, morrey_sup, CylinderIntegrals, CylinderQuadrature, MorreySweep,
    NodeIntegrals, ParabolicCylinder,
};
pub use kernel::{check_kernel_bound, kernel_constant, KernelBoundReport, KernelSource};
pub use ledger::{
    a_value, b_value, c_b_formula, dyadic_ledger, ledger_a, ledger_b, ledger_weighted, weighted_values, DyadicLedger,
    LedgerParams, LedgerRow, WeightedParams, WeightedValues,
};
pub use testfn::{build_test_function, BoundFamilies, HeatTestFunction, TestFunctionParams};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cutoff::TestFunction;
    use crate::field::{ScalarField, VectorField};
    use crate::grid::Grid;
    use crate::pns::{run, Drift, PnsConfig};
    use crate::spacetime::SpaceTimeField;
    use std::f64::consts::PI;

    fn tg(g: &Grid, amp: f64, k: f64) -> VectorField {
        VectorField::from_fn(g, |x| {
            [
                amp * (k * x[0]).sin() * (k * x[1]).cos() * (k * x[2]).cos(),
                -amp * (k * x[0]).cos() * (k * x[1]).sin() * (k * x[2]).cos(),
                0.0,
            ]
        })
        .unwrap()
    }

    fn small_run(n: usize) -> SpaceTimeField {
        let g = Grid::new(n, 8.0).unwrap();
        let cfg = PnsConfig { dt: 0.01, horizon: 0.12, stride: 2, ..PnsConfig::default() };
        run(&tg(&g, 0.5, 2.0 * PI / 8.0), Drift::Zero, cfg).unwrap().history
    }

    const CENTER: [f64; 3] = [0.3, -0.2, 0.1];

    #[test]
    fn cylinders_must_fit_the_window() {
        let h = small_run(16);
        assert!(ParabolicCylinder::new([0.0; 3], 0.1, 0.0).is_err());
        let q = CylinderQuadrature::default();
        assert!(cylinder_integrals(&h, ParabolicCylinder::new([0.0; 3], 0.05, 0.25).unwrap(), q).is_err());
        assert!(cylinder_integrals(&h, ParabolicCylinder::new([0.0; 3], 0.2, 0.1).unwrap(), q).is_err());
        let c = ParabolicCylinder::dyadic([0.0; 3], 0.1, 2).unwrap();
        assert_eq!(c.r, 0.25);
        assert!(c.contains([0.1, 0.0, 0.0], 0.05) && !c.contains([0.1, 0.0, 0.0], 0.03));
    }

    #[test]
    fn zero_run_has_zero_ledger() {
        let g = Grid::new(16, 8.0).unwrap();
        let h = SpaceTimeField::new(0.0, 0.05, vec![VectorField::zeros(&g); 3])
            .unwrap()
            .with_pressure(vec![ScalarField::zeros(&g); 3])
            .unwrap();
        let l = dyadic_ledger(&h, [0.0; 3], 0.1, 2..=4, LedgerParams::default(), None).unwrap();
        assert!(l.rows.iter().all(|r| r.a == 0.0 && r.b == 0.0 && r.pass));
        assert_eq!(l.csv().lines().count(), 4);
        let m = morrey_sup(&h, &[[0.0; 3]], &[0.1], &[0.25, 0.125], 1.0, CylinderQuadrature::default()).unwrap();
        assert_eq!(m.sup(), 0.0);
    }

    #[test]
    fn ledger_and_direct_quadrature_agree() {
        let h = small_run(16);
        let quad = CylinderQuadrature { zoom: 8, samples: 4 };
        for k in [2, 4] {
            let cyl = ParabolicCylinder::dyadic(CENTER, 0.12, k).unwrap();
            let a = cylinder_integrals(&h, cyl, quad).unwrap();
            let b = cylinder_integrals_direct(&h, cyl, quad).unwrap();
            let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(1e-300);
            let pa = a_value(&a, 1.0, true).unwrap();
            let pb = a_value(&b, 1.0, true).unwrap();
            assert!(rel(pa, pb) < 1e-12, "A {pa} {pb}");
            assert!(rel(b_value(&a), b_value(&b)) < 1e-12);
        }
    }

    #[test]
    fn cubic_integral_is_critically_invariant() {
        // u_lam(x, t) = lam u(lam x, lam^2 t) sampled on a box smaller by lam
        let lam = 2.0;
        let k = 2.0 * PI / 16.0;
        let profile = |g: &Grid, scale: f64, t: f64| {
            let amp = scale * (-3.0 * k * k * t).exp();
            VectorField::from_fn(g, |x| {
                let y = [scale * x[0], scale * x[1], scale * x[2]];
                [
                    amp * (k * y[0] + 0.3).sin() * (k * y[1]).cos() * (k * y[2]).cos(),
                    -amp * (k * y[0] + 0.3).cos() * (k * y[1]).sin() * (k * y[2]).cos(),
                    0.0,
                ]
            })
            .unwrap()
        };
        let (g, gl) = (Grid::new(16, 16.0).unwrap(), Grid::new(16, 8.0).unwrap());
        let dt = 0.04;
        let u = SpaceTimeField::new(0.0, dt, (0..6).map(|i| profile(&g, 1.0, i as f64 * dt)).collect()).unwrap();
        let ul = SpaceTimeField::new(0.0, dt / (lam * lam), (0..6).map(|i| profile(&gl, lam, i as f64 * dt)).collect())
            .unwrap();
        let quad = CylinderQuadrature { zoom: 12, samples: 5 };
        let r = 0.125;
        let c = [0.4, 0.2, -0.3];
        let small = cylinder_integrals(&ul, ParabolicCylinder::new(c, 0.05, r).unwrap(), quad).unwrap();
        let big = cylinder_integrals(&u, ParabolicCylinder::new(c.map(|x| lam * x), 0.2, lam * r).unwrap(), quad).unwrap();
        let a = small.v3() / (r * r);
        let b = big.v3() / (lam * r).powi(2);
        assert!((a - b).abs() < 1e-10 * b, "{a} {b}");
    }

    #[test]
    fn smooth_flow_ledger_decays_at_the_smooth_rate() {
        let h = small_run(16);
        let l = dyadic_ledger(&h, CENTER, 0.12, 2..=5, LedgerParams::default(), None).unwrap();
        let fit = l.a_decay().unwrap();
        assert!(fit.slope > 2.7, "{}", fit.slope);
        assert!(l.b_decay().unwrap().slope > 2.7);
        for w in l.rows.windows(2) {
            assert!(w[1].b < w[0].b && w[1].a < w[0].a);
        }
        let csv = l.csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], DyadicLedger::CSV_HEADER);
        assert_eq!(lines.len(), 5);
    }

    #[test]
    fn weights_vanish_below_t0_and_are_monotone() {
        let h = small_run(16);
        let p = LedgerParams::default();
        let at = |t0: f64| ledger_weighted(&h, CENTER, 0.12, 3, &p, WeightedParams { eta: 0.6, t0 }).unwrap();
        let top = at(0.12);
        assert_eq!(top.max_weight, 0.0);
        assert!(top.a_p.is_infinite() && !top.pass);
        let vals: Vec<WeightedValues> = [-0.5, 0.0, 0.05, 0.1].iter().map(|&t0| at(t0)).collect();
        for w in vals.windows(2) {
            assert!(w[1].a_p >= w[0].a_p && w[1].a_pp >= w[0].a_pp && w[1].b_p >= w[0].b_p);
        }
        assert!(ledger_weighted(&h, CENTER, 0.12, 3, &p, WeightedParams { eta: 0.6, t0: 0.2 }).is_err());
        let g = h.grid().clone();
        let zero = SpaceTimeField::new(0.0, 0.06, vec![VectorField::zeros(&g); 3])
            .unwrap()
            .with_pressure(vec![ScalarField::zeros(&g); 3])
            .unwrap();
        let z = ledger_weighted(&zero, CENTER, 0.12, 3, &p, WeightedParams { eta: 0.6, t0: 0.12 }).unwrap();
        assert!(z.pass && z.a_p == 0.0);
    }

    #[test]
    fn morrey_sweep_bounds_every_sample_and_bridges_scales() {
        let h = small_run(16);
        let quad = CylinderQuadrature { zoom: 12, samples: 4 };
        let radii = [0.25, 0.125, 0.0625, 0.09];
        let m = morrey_sup(&h, &[CENTER, [0.0; 3]], &[0.1, 0.12], &radii, 1.0, quad).unwrap();
        assert!(m.sup().is_finite() && m.sup() > 0.0);
        assert!(m.samples.iter().all(|s| s.3 <= m.sup()));
        assert!(m.fitted_constant(0.05) > 0.0);
        // avg over Q_r <= 2^5 avg over Q_{r_k} for r in (r_{k+1}, r_k)
        let avg = |r: f64| {
            cylinder_integrals(&h, ParabolicCylinder::new(CENTER, 0.12, r).unwrap(), quad).unwrap().v3() / r.powi(5)
        };
        for r in [0.09, 0.1, 0.12] {
            assert!(avg(r) <= 32.0 * avg(0.125));
        }
    }

    #[test]
    fn test_function_bounds_and_flat_residual() {
        for n in 2..=4 {
            let f = build_test_function([0.0; 3], 0.5, n, TestFunctionParams::default()).unwrap();
            assert!(f.families.support_ok);
            assert!(f.families.flat_residual <= 1e-10);
            assert!(f.c1.is_finite() && f.c1 > 1.0);
            assert!(f.certify(f.c1 * (1.0 + 1e-12)).is_ok());
            assert!(f.certify(0.5 * f.c1).is_err());
        }
        assert!(build_test_function([0.0; 3], 0.5, 1, TestFunctionParams::default()).is_err());
        let bad = TestFunctionParams { outer_radius: 0.7, ..TestFunctionParams::default() };
        assert!(build_test_function([0.0; 3], 0.5, 3, bad).is_err());
    }

    #[test]
    fn test_function_jet_matches_finite_differences() {
        let f = build_test_function([0.1, 0.0, -0.1], 0.5, 3, TestFunctionParams::tuned()).unwrap();
        let h = 1e-4;
        for (x, s) in [([0.3, 0.1, 0.0], 0.45), ([0.1, 0.2, -0.3], 0.48), ([0.05, 0.02, -0.1], 0.499)] {
            let j = f.jet(x, s);
            let v = |y: [f64; 3], u: f64| f.jet(y, u).value;
            let dt = (v(x, s + 1e-6) - v(x, s - 1e-6)) / 2e-6;
            assert!((dt - j.dt).abs() < 1e-5 * (1.0 + j.dt.abs()), "{dt} {}", j.dt);
            let mut lap = 0.0;
            for a in 0..3 {
                let (mut p, mut m) = (x, x);
                p[a] += h;
                m[a] -= h;
                let d = (v(p, s) - v(m, s)) / (2.0 * h);
                assert!((d - j.grad[a]).abs() < 1e-5 * (1.0 + d.abs()));
                let hl = 1e-3;
                let (mut p2, mut m2) = (x, x);
                p2[a] += hl;
                m2[a] -= hl;
                lap += (v(p2, s) - 2.0 * j.value + v(m2, s)) / (hl * hl);
            }
            assert!((lap - j.lap).abs() < 1e-3 * (1.0 + lap.abs()), "{lap} {}", j.lap);
        }
        assert_eq!(f.jet([0.9, 0.0, 0.0], 0.45).value, 0.0);
        assert_eq!(f.jet([0.1, 0.0, -0.1], 0.3).value, 0.0);
    }

    #[test]
    fn kernel_bound_on_an_indicator() {
        let zero = KernelSource::from_fn(8, 4, |_, _| 0.0).unwrap();
        let r = check_kernel_bound(&zero, 0.5, &[([0.0; 3], 0.0)], 2).unwrap();
        assert_eq!((r.lhs, r.bound), (0.0, 0.0));
        let ind = |y: [f64; 3], s: f64| {
            if y[0] * y[0] + y[1] * y[1] + y[2] * y[2] < 1.0 / 64.0 && s > -1.0 / 64.0 && s < 0.0 {
                1.0
            } else {
                0.0
            }
        };
        let g = KernelSource::from_fn(32, 64, ind).unwrap();
        let vol = 4.0 * PI / 3.0 / 512.0 / 64.0;
        assert!((g.l1() - vol).abs() < 0.2 * vol, "{} {vol}", g.l1());
        let pts = [([0.0, 0.0, 0.0], 0.001), ([0.1, 0.05, 0.0], -0.01), ([1.5, 0.0, 0.0], 0.0), ([0.0; 3], 2.0)];
        let rep = check_kernel_bound(&g, 0.5, &pts, 2).unwrap();
        assert!(rep.ratio <= 1.0, "{rep:?}");
        assert!(rep.far_ok);
        let far = g.kernel_integral([1.5, 0.0, 0.0], 0.0).unwrap();
        assert!(far <= 16.0 * g.l1());
        assert!(KernelSource::from_fn(8, 4, |_, _| 1.0).is_err());
    }
}

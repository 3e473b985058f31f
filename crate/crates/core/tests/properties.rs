//! Property checks on random trigonometric fields.

use critnorm_core::field::VectorField;
use critnorm_core::grid::Grid;
use critnorm_core::io::{load_vector, save_vector};
use critnorm_core::norms::{lorentz_quasinorm, lp_box};
use critnorm_core::spectral::{divergence_relative, heat_semigroup_vector, leray_project};
use proptest::prelude::*;

/// Sum of three random plane waves per component on a 16^3 grid.
fn field(coef: &[f64]) -> VectorField {
    let g = Grid::new(16, 8.0).unwrap();
    let k = 2.0 * std::f64::consts::PI / 8.0;
    VectorField::from_fn(&g, |x| {
        let mut v = [0.0; 3];
        for (c, out) in v.iter_mut().enumerate() {
            for m in 0..3 {
                let a = &coef[(c * 3 + m) * 4..(c * 3 + m + 1) * 4];
                let phase = k * (m as f64 + 1.0) * (a[1].round() * x[0] + a[2].round() * x[1] + x[2]) + a[3];
                *out += a[0] * phase.sin();
            }
        }
        v
    })
    .unwrap()
}

fn coefs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, 36)
}

fn max_diff(a: &VectorField, b: &VectorField) -> f64 {
    (0..3)
        .flat_map(|c| a.component(c).iter().zip(b.component(c)).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn leray_is_an_idempotent_projection(c in coefs()) {
        let v = field(&c);
        let p = leray_project(&v);
        prop_assert!(divergence_relative(&p) < 1e-10);
        prop_assert!(max_diff(&leray_project(&p), &p) < 1e-12);
        prop_assert!(lp_box(&p, 2.0).unwrap() <= lp_box(&v, 2.0).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn heat_flow_is_a_contracting_semigroup(c in coefs(), s in 0.0f64..0.5, t in 0.0f64..0.5) {
        let v = field(&c);
        let a = heat_semigroup_vector(&heat_semigroup_vector(&v, s).unwrap(), t).unwrap();
        let b = heat_semigroup_vector(&v, s + t).unwrap();
        prop_assert!(max_diff(&a, &b) < 1e-12);
        prop_assert!(lp_box(&b, 2.0).unwrap() <= lp_box(&v, 2.0).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn weak_norm_is_homogeneous(c in coefs(), lambda in 0.1f64..10.0) {
        let v = field(&c);
        let a = lorentz_quasinorm(&v, 3.0, f64::INFINITY, None).unwrap().value;
        let b = lorentz_quasinorm(&v.scale(lambda), 3.0, f64::INFINITY, None).unwrap().value;
        prop_assert!((b - lambda * a).abs() <= 1e-12 * b.max(1.0));
    }
}

#[test]
fn snapshots_round_trip_exactly() {
    let v = field(&(0..36).map(|i| (i as f64 * 0.37).sin()).collect::<Vec<_>>());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.snap");
    save_vector(&path, &v).unwrap();
    let back = load_vector(&path).unwrap();
    assert_eq!(back.grid(), v.grid());
    assert_eq!(back.components(), v.components());
}

//! Invariants checked on random points and directions.

use finsler_core::linalg::{dot, symmetric_eigenvalues};
use finsler_core::measure::{sigma, VolumeForm};
use finsler_core::spray::spray_f64;
use finsler_core::tensor::{fundamental_matrix, legendre, legendre_inverse};
use finsler_core::FinslerMetric;
use proptest::prelude::*;

fn metric(i: usize) -> FinslerMetric {
    match i {
        0 => FinslerMetric::euclidean(2),
        1 => FinslerMetric::funk(2),
        2 => FinslerMetric::hyperbolic(2),
        3 => FinslerMetric::sphere(2),
        4 => FinslerMetric::randers_navigation(vec![0.2, -0.1], 0.4, 1.5).unwrap(),
        _ => FinslerMetric::perturbed(2, 0.05),
    }
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    (0.0..0.6f64, 0.0..std::f64::consts::TAU).prop_map(|(r, t)| vec![r * t.cos(), r * t.sin()])
}

fn direction() -> impl Strategy<Value = Vec<f64>> {
    (0.0..std::f64::consts::TAU, 0.2..3.0f64).prop_map(|(t, s)| vec![s * t.cos(), s * t.sin()])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn positively_homogeneous(i in 0..6usize, x in point(), y in direction(), lam in 0.1..10.0f64) {
        let m = metric(i);
        let scaled: Vec<f64> = y.iter().map(|v| lam * v).collect();
        let (a, b) = (m.f(&x, &scaled), lam * m.f(&x, &y));
        prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
    }

    #[test]
    fn fundamental_tensor_is_positive_and_reproduces_f(i in 0..6usize, x in point(), y in direction()) {
        let m = metric(i);
        let g = fundamental_matrix(&m, &x, &y);
        prop_assert!(symmetric_eigenvalues(&g).iter().all(|&e| e > 0.0));
        let f = m.f(&x, &y);
        prop_assert!((g.bilinear(&y, &y) - f * f).abs() <= 1e-10 * f * f);
    }

    #[test]
    fn legendre_round_trip(i in 0..6usize, x in point(), y in direction()) {
        let m = metric(i);
        let back = legendre_inverse(&m, &x, &legendre(&m, &x, &y).unwrap()).unwrap();
        let err = back.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-8 * dot(&y, &y).sqrt(), "{err}");
    }

    #[test]
    fn spray_is_two_homogeneous(i in 0..6usize, x in point(), y in direction(), lam in 0.2..5.0f64) {
        let m = metric(i);
        let scaled: Vec<f64> = y.iter().map(|v| lam * v).collect();
        let (g1, g2) = (spray_f64(&m, &x, &y).unwrap(), spray_f64(&m, &x, &scaled).unwrap());
        for (a, b) in g1.iter().zip(&g2) {
            prop_assert!((lam * lam * a - b).abs() <= 1e-9 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn busemann_hausdorff_is_smallest_of_the_averaged_forms(i in 0..6usize, x in point()) {
        let m = metric(i);
        let bh = sigma(&m, VolumeForm::BusemannHausdorff, &x).unwrap();
        let ht = sigma(&m, VolumeForm::HolmesThompson, &x).unwrap();
        let max = sigma(&m, VolumeForm::Max, &x).unwrap();
        let min = sigma(&m, VolumeForm::Min, &x).unwrap();
        prop_assert!(bh <= ht * (1.0 + 1e-9));
        prop_assert!(min <= ht * (1.0 + 1e-9) && ht <= max * (1.0 + 1e-9));
    }
}

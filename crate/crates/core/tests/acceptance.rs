//! Acceptance criteria 1 to 9. Each test prints one PASS/FAIL line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::f64::consts::PI;
use std::time::Instant;

use finsler_core::curvature::{ahf_ricci_bound, ricci, ricci_from_jacobi};
use finsler_core::geodesic::{exponential_map, first_conjugate_radius, integrate_geodesic};
use finsler_core::harmonic::{
    base_point_independence_check, default_profile, density_along, first_density_zero,
    harmonicity_report, horosphere_mean_curvature, mean_curvature_profile, shen_laplacian_report,
    uniform_radii,
};
use finsler_core::linalg::{dist, dot};
use finsler_core::measure::{s_curvature_local, s_curvature_routes, sigma, VolumeForm};
use finsler_core::quadrature::direction_set;
use finsler_core::randers::{
    build_randers_table, flat_randers_cross_check, RadialBetaProfile, SpaceFormBase,
    SpaceFormFamily,
};
use finsler_core::spray::{berwald_tensor_norm, spray_coefficients};
use finsler_core::tensor::{fundamental_matrix, legendre, legendre_inverse};
use finsler_core::FinslerMetric;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

const BH: VolumeForm = VolumeForm::BusemannHausdorff;

/// Collects the checks of one criterion and reports them on one line.
struct Criterion {
    id: u32,
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Criterion {
    fn new(id: u32) -> Self {
        Criterion {
            id,
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn check(&mut self, what: &str, ok: bool, detail: String) {
        let line = format!("{what}: {detail}");
        if ok {
            self.notes.push(line);
        } else {
            self.failures.push(line);
        }
    }

    fn within(&mut self, what: &str, value: f64, want: f64, tol: f64) {
        let err = (value - want).abs();
        self.check(
            what,
            err < tol,
            format!("{value:.6e} vs {want:.6e} (err {err:.2e}, tol {tol:.0e})"),
        );
    }

    fn finish(self) {
        let verdict = if self.failures.is_empty() {
            "PASS"
        } else {
            "FAIL"
        };
        let detail = if self.failures.is_empty() {
            self.notes.join("; ")
        } else {
            self.failures.join("; ")
        };
        println!("criterion {}: {verdict} | {detail}", self.id);
        assert!(
            self.failures.is_empty(),
            "criterion {} failed: {}",
            self.id,
            self.failures.join("; ")
        );
    }
}

fn max_rel_err(values: &[f64], want: impl Fn(usize) -> f64) -> f64 {
    values
        .iter()
        .enumerate()
        .map(|(j, v)| (v - want(j)).abs() / want(j).abs())
        .fold(0.0, f64::max)
}

#[test]
fn criterion_1_space_form_profiles() {
    let mut c = Criterion::new(1);
    let start = Instant::now();
    let radii = uniform_radii(0.1, 2.0, 20);
    let cases: [(FinslerMetric, Vec<f64>, fn(f64) -> f64); 3] = [
        (FinslerMetric::euclidean(3), vec![0.3, -0.1, 0.2], |r| r * r),
        (FinslerMetric::sphere(2), vec![0.2, -0.3], f64::sin),
        (FinslerMetric::hyperbolic(2), vec![0.1, 0.25], f64::sinh),
    ];
    for (m, p, want) in &cases {
        let prof = default_profile(m, BH, p, 32, &radii).unwrap();
        let err = prof
            .sigma_bar
            .iter()
            .map(|row| max_rel_err(row, |j| want(radii[j])))
            .fold(0.0, f64::max);
        c.check(&m.name, err <= 5e-4, format!("max rel err {err:.2e}"));
    }
    let secs = start.elapsed().as_secs_f64();
    c.check("runtime", secs <= 60.0, format!("{secs:.1} s"));
    c.finish();
}

#[test]
fn criterion_2_funk() {
    let mut c = Criterion::new(2);
    let m = FinslerMetric::funk(2);
    let samples: [([f64; 2], [f64; 2]); 3] = [
        ([0.0, 0.0], [1.0, 0.0]),
        ([0.2, 0.1], [0.6, -0.8]),
        ([-0.4, 0.3], [-0.2, 1.0]),
    ];
    let mut worst_s: f64 = 0.0;
    let mut worst_ric: f64 = 0.0;
    for (x, y) in &samples {
        let y = m.normalize(x, y).unwrap();
        let r = s_curvature_routes(&m, BH, x, &y).unwrap();
        worst_s = worst_s
            .max((r.local - 1.5).abs())
            .max((r.along_geodesic - 1.5).abs());
        worst_ric = worst_ric.max((ricci(&m, x, &y).unwrap().ricci + 0.25).abs());
    }
    c.check(
        "S (both routes)",
        worst_s < 1e-4,
        format!("max err {worst_s:.2e}"),
    );
    c.check("Ric", worst_ric < 1e-3, format!("max err {worst_ric:.2e}"));

    let radii = uniform_radii(0.5, 6.0, 111);
    let prof = default_profile(&m, BH, &[0.1, -0.05], 8, &radii).unwrap();
    let pi = mean_curvature_profile(&prof).unwrap();
    let mut worst_pi: f64 = 0.0;
    for row in &pi {
        for (v, r) in row.iter().zip(&radii) {
            worst_pi = worst_pi.max((v - (0.5 / (0.5 * r).tanh() - 1.5)).abs());
        }
    }
    c.check(
        "mean curvature",
        worst_pi < 1e-3,
        format!("max err {worst_pi:.2e}"),
    );

    let h = horosphere_mean_curvature(&m, BH, &[0.0, 0.0], &[1.0, 0.0], 10.0).unwrap();
    c.within("horosphere", h.h, -1.0, 1e-2);
    let ric = ricci(&m, &[0.0, 0.0], &[1.0, 0.0]).unwrap().ricci;
    let s = s_curvature_local(&m, BH, &[0.0, 0.0], &[1.0, 0.0]).unwrap();
    c.within("AHF bound equality", ahf_ricci_bound(h.h, s, 2), ric, 1e-2);
    c.finish();
}

#[test]
fn criterion_3_fish_tank() {
    let mut c = Criterion::new(3);
    let m = FinslerMetric::fish_tank();
    let samples: [([f64; 3], [f64; 3]); 3] = [
        ([0.0, 0.0, 0.0], [1.0, 0.0, 0.0]),
        ([0.2, -0.1, 0.3], [0.3, 0.5, -0.4]),
        ([-0.3, 0.2, -0.1], [0.0, -0.7, 0.6]),
    ];
    let mut worst_s: f64 = 0.0;
    let mut worst_ric: f64 = 0.0;
    for (x, y) in &samples {
        let y = m.normalize(x, y).unwrap();
        let r = s_curvature_routes(&m, BH, x, &y).unwrap();
        worst_s = worst_s.max(r.local.abs()).max(r.along_geodesic.abs());
        worst_ric = worst_ric.max(ricci(&m, x, &y).unwrap().ricci.abs());
    }
    c.check(
        "S (both routes)",
        worst_s < 1e-4,
        format!("max |S| {worst_s:.2e}"),
    );
    c.check(
        "Ric",
        worst_ric < 1e-3,
        format!("max |Ric| {worst_ric:.2e}"),
    );

    let radii = uniform_radii(0.3, 0.8, 51);
    let prof = default_profile(&m, BH, &[0.0, 0.0, 0.0], 8, &radii).unwrap();
    let pi = mean_curvature_profile(&prof).unwrap();
    let worst_pi = pi
        .iter()
        .flat_map(|row| row.iter().zip(&radii).map(|(v, r)| (v - 2.0 / r).abs()))
        .fold(0.0, f64::max);
    c.check(
        "mean curvature 2/r",
        worst_pi < 1e-3,
        format!("max err {worst_pi:.2e}"),
    );

    let b = berwald_tensor_norm(&m, &[0.2, -0.1, 0.3], &[0.3, 0.5, -0.4]).unwrap();
    c.check(
        "non-Berwald",
        b.norm > 10.0 * b.noise_floor && !b.is_berwald(),
        format!("norm {:.3e}, noise {:.1e}", b.norm, b.noise_floor),
    );
    c.finish();
}

#[test]
fn criterion_4_harmonicity_verdicts() {
    let mut c = Criterion::new(4);
    let radii = uniform_radii(0.1, 0.6, 11);
    let harmonic: Vec<(FinslerMetric, Vec<f64>)> = vec![
        (FinslerMetric::euclidean(2), vec![0.3, -0.2]),
        (FinslerMetric::hyperbolic(2), vec![0.2, 0.1]),
        (FinslerMetric::sphere(2), vec![0.4, -0.3]),
        (FinslerMetric::funk(2), vec![0.1, 0.2]),
        (FinslerMetric::fish_tank(), vec![0.1, 0.0, -0.1]),
        (
            FinslerMetric::zoo("randers-radial", 2).unwrap(),
            vec![0.0, 0.0],
        ),
    ];
    for (m, p) in &harmonic {
        let rep =
            harmonicity_report(&default_profile(m, BH, p, 32, &radii).unwrap(), 1e-3).unwrap();
        let spread = rep.spread.iter().cloned().fold(0.0, f64::max);
        c.check(
            &m.name,
            rep.locally_harmonic,
            format!("harmonic, max spread {spread:.1e}"),
        );
    }
    let m = FinslerMetric::perturbed(2, 0.05);
    let rep = harmonicity_report(
        &default_profile(&m, BH, &[0.5, 0.5], 32, &radii).unwrap(),
        1e-3,
    )
    .unwrap();
    let spread = rep.spread.iter().cloned().fold(0.0, f64::max);
    c.check(
        "perturbed control",
        !rep.locally_harmonic,
        format!("not harmonic, max spread {spread:.1e}"),
    );
    c.finish();
}

#[test]
fn criterion_5_randers_tables() {
    let mut c = Criterion::new(5);
    let f = RadialBetaProfile::parse("0.5*r/(1+r)", 100.0).unwrap();
    let radii = uniform_radii(0.2, 2.0, 10);
    let check = flat_randers_cross_check(&f, 2, &radii).unwrap();
    for (kind, err) in &check.by_measure {
        c.check(
            &format!("cross-check {kind}"),
            *err < 1e-3,
            format!("discrepancy {err:.2e}"),
        );
    }

    // ordering chain of the analytic tables on every base
    let mut table_ok = true;
    for fam in SpaceFormFamily::ALL {
        let t = build_randers_table(SpaceFormBase::new(fam, 2).unwrap(), f.clone()).unwrap();
        let r_end = t.base.regular_range().unwrap_or(3.0);
        for r in uniform_radii(0.05, 0.95 * r_end, 40) {
            let d: Vec<f64> = [
                VolumeForm::Min,
                BH,
                VolumeForm::HolmesThompson,
                VolumeForm::Max,
            ]
            .iter()
            .map(|k| t.density(*k, r))
            .collect();
            table_ok &= d.windows(2).all(|w| w[0] < w[1]);
        }
    }
    c.check("table ordering", table_ok, "strict on all bases".into());

    // ordering chain of the numeric densities on the flat construction
    let m = FinslerMetric::zoo("randers-radial", 2).unwrap();
    let mut numeric_ok = true;
    for x in [[0.3, 0.0], [0.5, -0.7], [-1.2, 0.4]] {
        let d: Vec<f64> = [
            VolumeForm::Min,
            BH,
            VolumeForm::HolmesThompson,
            VolumeForm::Max,
        ]
        .iter()
        .map(|k| sigma(&m, *k, &x).unwrap())
        .collect();
        numeric_ok &= d.windows(2).all(|w| w[0] < w[1]);
    }
    c.check(
        "numeric ordering",
        numeric_ok,
        "strict at sampled points".into(),
    );
    c.finish();
}

#[test]
fn criterion_6_taylor_coefficients() {
    let mut c = Criterion::new(6);
    let radii = uniform_radii(0.02, 1.0, 50);
    let cases = [
        (FinslerMetric::euclidean(2), vec![0.3, 0.1]),
        (FinslerMetric::funk(2), vec![0.1, -0.2]),
    ];
    for (m, p) in &cases {
        let prof = default_profile(m, BH, p, 32, &radii).unwrap();
        let rep = harmonicity_report(&prof, 1e-3).unwrap();
        let mut worst: f64 = 0.0;
        for (y, c1) in prof.directions.iter().zip(&rep.c1) {
            worst = worst.max((c1 - s_curvature_local(m, BH, p, y).unwrap()).abs());
        }
        c.check(
            &format!("{} c1 = S", m.name),
            worst < 1e-3,
            format!("max err {worst:.2e}"),
        );
        let (s1, s2) = (rep.c1_spread.unwrap(), rep.c2_spread.unwrap());
        c.check(
            &format!("{} spreads", m.name),
            s1 < 1e-3 && s2 < 1e-3,
            format!("c1 {s1:.1e}, c2 {s2:.1e}"),
        );
    }
    c.finish();
}

#[test]
fn criterion_7_laplacian_of_distance() {
    let mut c = Criterion::new(7);
    let m = FinslerMetric::euclidean(3);
    let rep = shen_laplacian_report(&m, BH, &[0.0, 0.0, 0.0], &[1.2, 1.6, 0.0]).unwrap();
    c.within("euclidean value", rep.value, 1.0, 1e-3);
    c.within(
        "euclidean vs mean curvature",
        rep.value,
        rep.mean_curvature,
        1e-3,
    );
    c.check(
        "euclidean eikonal",
        rep.eikonal_residual < 1e-3,
        format!("{:.1e}", rep.eikonal_residual),
    );

    let m = FinslerMetric::funk(2);
    let p = [0.1, 0.05];
    let y = m.normalize(&p, &[0.6, 0.8]).unwrap();
    let x = exponential_map(&m, &p, &y).unwrap();
    let rep = shen_laplacian_report(&m, BH, &p, &x).unwrap();
    c.within("funk distance", rep.distance, 1.0, 1e-8);
    c.within(
        "funk vs mean curvature",
        rep.value,
        rep.mean_curvature,
        1e-2,
    );
    c.within(
        "funk closed form",
        rep.value,
        0.5 / 0.5f64.tanh() - 1.5,
        1e-2,
    );
    c.check(
        "funk eikonal",
        rep.eikonal_residual < 1e-3,
        format!("{:.1e}", rep.eikonal_residual),
    );
    c.finish();
}

#[test]
fn criterion_8_conjugate_points() {
    let mut c = Criterion::new(8);
    let m = FinslerMetric::sphere(2);
    let p = [0.2, -0.1];
    let y = m.normalize(&p, &[0.3, 1.0]).unwrap();
    let conj = first_conjugate_radius(&m, &p, &y, 5.0)
        .unwrap()
        .unwrap_or(f64::NAN);
    c.within("sphere conjugate radius", conj, PI, 1e-3);
    let zero = first_density_zero(&m, BH, &p, &y, 5.0, 0.01)
        .unwrap()
        .unwrap_or(f64::NAN);
    c.within("first zero of density", zero, conj, 0.01);
    for m in [
        FinslerMetric::euclidean(2),
        FinslerMetric::hyperbolic(2),
        FinslerMetric::funk(2),
    ] {
        let y = m.normalize(&[0.0, 0.0], &[0.6, 0.8]).unwrap();
        let conj = first_conjugate_radius(&m, &[0.0, 0.0], &y, 10.0).unwrap();
        c.check(&m.name, conj.is_none(), format!("{conj:?} up to r = 10"));
    }
    c.finish();
}

fn unit(v: &[f64]) -> Vec<f64> {
    let n = dot(v, v).sqrt();
    v.iter().map(|x| x / n).collect()
}

fn zoo_metric(i: usize) -> FinslerMetric {
    match i % 6 {
        0 => FinslerMetric::funk(2),
        1 => FinslerMetric::hyperbolic(2),
        2 => FinslerMetric::sphere(2),
        3 => FinslerMetric::zoo("randers-flat", 2).unwrap(),
        4 => FinslerMetric::randers_navigation(vec![0.2, -0.1], 0.4, 1.5).unwrap(),
        _ => FinslerMetric::perturbed(2, 0.05),
    }
}

fn point_and_dir() -> impl Strategy<Value = (usize, [f64; 2], [f64; 2], f64)> {
    (
        0usize..6,
        [-0.5f64..0.5, -0.5f64..0.5],
        [-1.0f64..1.0, -1.0f64..1.0],
        0.2f64..5.0,
    )
        .prop_filter("nonzero direction", |(_, _, y, _)| y[0].hypot(y[1]) > 0.1)
}

/// Runs one randomized suite, returning `Err` with the first counterexample.
fn suite<S: Strategy>(
    cases: u32,
    strategy: S,
    body: impl Fn(S::Value) -> std::result::Result<(), TestCaseError>,
) -> std::result::Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner =
        TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner.run(&strategy, body).map_err(|e| e.to_string())
}

#[test]
fn criterion_9_property_suites() {
    let mut c = Criterion::new(9);
    let mut record = |name: &str, r: std::result::Result<(), String>| match r {
        Ok(()) => c.check(name, true, "128 cases".into()),
        Err(e) => c.check(name, false, e),
    };

    record(
        "homogeneity",
        suite(128, point_and_dir(), |(i, x, y, l)| {
            let m = zoo_metric(i);
            let a = m.f(&x, &y);
            let b = m.f(&x, &[l * y[0], l * y[1]]);
            prop_assert!(
                (b - l * a).abs() < 1e-12 * b.abs().max(1.0),
                "F({l}y) = {b}, {l}F(y) = {}",
                l * a
            );
            Ok(())
        }),
    );

    record(
        "euler identity",
        suite(128, point_and_dir(), |(i, x, y, _)| {
            let m = zoo_metric(i);
            let s = spray_coefficients(&m, &x, &y).unwrap();
            let ny = s.connection.mul_vec(&y);
            for k in 0..2 {
                let tol = 1e-9 * s.coeffs[k].abs().max(1.0);
                prop_assert!((ny[k] - 2.0 * s.coeffs[k]).abs() < tol);
            }
            Ok(())
        }),
    );

    record(
        "g zero-homogeneity",
        suite(128, point_and_dir(), |(i, x, y, l)| {
            let m = zoo_metric(i);
            let g1 = fundamental_matrix(&m, &x, &y);
            let g2 = fundamental_matrix(&m, &x, &[l * y[0], l * y[1]]);
            for a in 0..2 {
                for b in 0..2 {
                    prop_assert!((g1[(a, b)] - g2[(a, b)]).abs() < 1e-10 * g1.max_abs());
                }
            }
            Ok(())
        }),
    );

    record(
        "legendre round trip",
        suite(128, point_and_dir(), |(i, x, y, _)| {
            let m = zoo_metric(i);
            let back = legendre_inverse(&m, &x, &legendre(&m, &x, &y).unwrap()).unwrap();
            prop_assert!(dist(&back, &y) < 1e-9 * dot(&y, &y).sqrt());
            Ok(())
        }),
    );

    record(
        "unit speed conservation",
        suite(128, point_and_dir(), |(i, x, y, _)| {
            let m = zoo_metric(i);
            let y = m.normalize(&x, &y).unwrap();
            let path = integrate_geodesic(&m, &x, &y, 1.0, 0.25).unwrap();
            for st in &path.states {
                prop_assert!((m.f(&st.x, &st.v) - 1.0).abs() < 1e-8);
            }
            Ok(())
        }),
    );

    record(
        "volume ordering chain",
        suite(128, (0usize..4, [-0.5f64..0.5, -0.5f64..0.5]), |(i, x)| {
            let m = match i {
                0 => FinslerMetric::funk(2),
                1 => FinslerMetric::zoo("randers-flat", 2).unwrap(),
                2 => FinslerMetric::zoo("randers-radial", 2).unwrap(),
                _ => FinslerMetric::perturbed(2, 0.05),
            };
            let d: Vec<f64> = [
                VolumeForm::Min,
                BH,
                VolumeForm::HolmesThompson,
                VolumeForm::Max,
            ]
            .iter()
            .map(|k| sigma(&m, *k, &x).unwrap())
            .collect();
            prop_assert!(d.windows(2).all(|w| w[0] <= w[1] * (1.0 + 1e-12)), "{d:?}");
            Ok(())
        }),
    );

    record(
        "mean curvature monotone and nonnegative",
        suite(
            128,
            (
                any::<bool>(),
                0.0f64..(2.0 * PI),
                [-0.2f64..0.2, -0.2f64..0.2],
            ),
            |(fish, angle, p)| {
                let (m, p, y) = if fish {
                    let m = FinslerMetric::fish_tank();
                    let p = vec![p[0], p[1], 0.0];
                    let y = m.normalize(&p, &[angle.cos(), angle.sin(), 0.3]).unwrap();
                    (m, p, y)
                } else {
                    let m = FinslerMetric::euclidean(2);
                    (m, p.to_vec(), vec![angle.cos(), angle.sin()])
                };
                let radii = uniform_radii(0.1, 0.6, 11);
                let sb = density_along(&m, BH, &p, &y, &radii).unwrap();
                let h = radii[1] - radii[0];
                let pi: Vec<f64> = (2..radii.len() - 2)
                    .map(|j| {
                        let l = |k: usize| sb[k].ln();
                        (-l(j + 2) + 8.0 * l(j + 1) - 8.0 * l(j - 1) + l(j - 2)) / (12.0 * h)
                    })
                    .collect();
                prop_assert!(pi.iter().all(|v| *v >= 0.0), "{pi:?}");
                prop_assert!(pi.windows(2).all(|w| w[1] < w[0]), "{pi:?}");
                Ok(())
            },
        ),
    );

    record(
        "base point independence",
        suite(128, (0usize..2, [-0.3f64..0.3, -0.3f64..0.3]), |(i, p2)| {
            let m = if i == 0 {
                FinslerMetric::euclidean(2)
            } else {
                FinslerMetric::hyperbolic(2)
            };
            let gap =
                base_point_independence_check(&m, BH, &[0.0, 0.0], &p2, &[0.25, 0.5, 0.75, 1.0])
                    .unwrap();
            prop_assert!(gap < 1e-3, "gap {gap}");
            Ok(())
        }),
    );
    c.finish();
}

#[test]
fn ricci_routes_agree_on_zoo() {
    let metrics = [
        FinslerMetric::funk(2),
        FinslerMetric::hyperbolic(2),
        FinslerMetric::sphere(2),
        FinslerMetric::zoo("randers-flat", 2).unwrap(),
        FinslerMetric::fish_tank(),
    ];
    for m in &metrics {
        let x = vec![0.1; m.dim];
        for y in direction_set(m.dim, 4) {
            let y = m.normalize(&x, &unit(&y)).unwrap();
            let a = ricci(m, &x, &y).unwrap().ricci;
            let b = ricci_from_jacobi(m, BH, &x, &y, 0.2).unwrap();
            assert!((a - b).abs() < 1e-2, "{}: {a} vs {b}", m.name);
        }
    }
}

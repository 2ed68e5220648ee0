//! Integration and optimization over the Euclidean unit sphere.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{FinslerError, Result};
use crate::linalg::{axpy, dot, norm, scale};
use crate::scalar::Scalar;

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let nf = order as f64;
    for i in 0..order.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=order {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[order - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

/// Product rule on `S^{n-1}`: Gauss–Legendre in each polar angle, periodic
/// trapezoid with `2·order` points in the azimuth.
#[derive(Debug)]
pub struct SphereRule {
    pub n: usize,
    pub order: usize,
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    fn build(n: usize, order: usize) -> Self {
        let m_az = 2 * order;
        let az: Vec<f64> = (0..m_az)
            .map(|k| 2.0 * PI * k as f64 / m_az as f64)
            .collect();
        let waz = 2.0 * PI / m_az as f64;
        let (gx, gw) = gauss_legendre(order);
        // polar angles in (0, π) with GL mapped from [-1, 1]
        let polar: Vec<(f64, f64)> = gx
            .iter()
            .zip(&gw)
            .map(|(&t, &w)| (0.5 * PI * (t + 1.0), 0.5 * PI * w))
            .collect();
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let mut stack: Vec<(Vec<f64>, f64)> = vec![(Vec::new(), 1.0)];
        for level in 0..n - 2 {
            let power = (n - 2 - level) as i32;
            let mut next = Vec::with_capacity(stack.len() * polar.len());
            for (angles, w) in &stack {
                for &(phi, pw) in &polar {
                    let mut a = angles.clone();
                    a.push(phi);
                    next.push((a, w * pw * phi.sin().powi(power)));
                }
            }
            stack = next;
        }
        for (angles, w) in &stack {
            for &theta in &az {
                let mut a = angles.clone();
                a.push(theta);
                points.push(sphere_point(n, &a));
                weights.push(w * waz);
            }
        }
        SphereRule {
            n,
            order,
            points,
            weights,
        }
    }

    /// Shared, cached rule.
    pub fn get(n: usize, order: usize) -> Arc<SphereRule> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<SphereRule>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
        guard
            .entry((n, order))
            .or_insert_with(|| Arc::new(SphereRule::build(n, order)))
            .clone()
    }

    pub fn integrate<T: Scalar>(&self, f: impl Fn(&[f64]) -> T) -> T {
        self.points
            .iter()
            .zip(&self.weights)
            .fold(T::zero(), |acc, (u, &w)| acc + f(u) * T::cst(w))
    }
}

/// Default starting order for sphere rules in dimension `n`.
pub fn default_order(n: usize) -> usize {
    match n {
        2 => 64,
        3 => 24,
        _ => 12,
    }
}

fn max_order(n: usize) -> usize {
    match n {
        2 => 8192,
        3 => 384,
        _ => 48,
    }
}

/// Integrate with order doubling until the relative change is at most `rtol`.
/// Returns the value and the order that achieved it.
pub fn adaptive_sphere_integral(
    n: usize,
    start: usize,
    rtol: f64,
    f: impl Fn(&[f64]) -> f64,
) -> Result<(f64, usize)> {
    let mut order = start.max(2);
    let mut prev = SphereRule::get(n, order).integrate(&f);
    if !prev.is_finite() {
        return Err(FinslerError::QuadratureDivergence { direction: vec![] });
    }
    loop {
        let next_order = order * 2;
        if next_order > max_order(n) {
            return Ok((prev, order));
        }
        let next = SphereRule::get(n, next_order).integrate(&f);
        if !next.is_finite() {
            return Err(FinslerError::QuadratureDivergence { direction: vec![] });
        }
        let change = (next - prev).abs();
        order = next_order;
        prev = next;
        if change <= rtol * next.abs() {
            return Ok((next, order));
        }
    }
}

/// `Vol(𝔹ⁿ) = π^{n/2} / Γ(n/2 + 1)`.
pub fn unit_ball_volume(n: usize) -> f64 {
    PI.powf(n as f64 / 2.0) / gamma_half_integer(n + 2)
}

/// `Γ(k/2)` for positive integers `k`.
fn gamma_half_integer(k: usize) -> f64 {
    let (mut g, mut start) = if k.is_multiple_of(2) { (1.0, 2) } else { (PI.sqrt(), 1) };
    while start + 2 <= k {
        g *= start as f64 / 2.0;
        start += 2;
    }
    g
}

/// Area of `S^{n-1}`.
pub fn sphere_area(n: usize) -> f64 {
    n as f64 * unit_ball_volume(n)
}

/// Hyperspherical coordinates `(φ_1, …, φ_{n-2}, θ)` to a unit vector.
pub fn sphere_point(n: usize, angles: &[f64]) -> Vec<f64> {
    let mut u = vec![0.0; n];
    let mut s = 1.0;
    for (i, &phi) in angles.iter().take(n - 2).enumerate() {
        u[i] = s * phi.cos();
        s *= phi.sin();
    }
    let theta = angles[n - 2];
    u[n - 2] = s * theta.cos();
    u[n - 1] = s * theta.sin();
    u
}

/// Quasi-uniform unit directions: equal angles for n = 2, a Fibonacci
/// spiral for n = 3, and normalized Halton–Gaussian points above.
pub fn direction_set(n: usize, m: usize) -> Vec<Vec<f64>> {
    match n {
        2 => (0..m)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / m as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        3 => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..m)
                .map(|k| {
                    let z = 1.0 - (2.0 * k as f64 + 1.0) / m as f64;
                    let rho = (1.0 - z * z).sqrt();
                    let t = golden * k as f64;
                    vec![rho * t.cos(), rho * t.sin(), z]
                })
                .collect()
        }
        _ => {
            let primes = [
                2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53,
            ];
            (0..m)
                .map(|k| {
                    let mut v: Vec<f64> = (0..n)
                        .map(|j| {
                            let a = halton(k as u64 + 1, primes[(2 * j) % primes.len()]);
                            let b = halton(k as u64 + 1, primes[(2 * j + 1) % primes.len()]);
                            (-2.0 * a.ln()).sqrt() * (2.0 * PI * b).cos()
                        })
                        .collect();
                    let l = norm(&v);
                    v.iter_mut().for_each(|c| *c /= l);
                    v
                })
                .collect()
        }
    }
}

fn halton(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Golden-section maximization of a unimodal function on `[a, b]`.
pub fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Maximize `f` over the unit sphere: coarse sampling, then steepest ascent
/// in the tangent plane with golden-section line searches.
pub fn maximize_on_sphere(n: usize, f: &(dyn Fn(&[f64]) -> f64 + Sync)) -> (Vec<f64>, f64) {
    if n == 2 {
        let m = 720;
        let h = 2.0 * PI / m as f64;
        let (best, _) = (0..m)
            .map(|k| {
                (
                    k as f64 * h,
                    f(&[(k as f64 * h).cos(), (k as f64 * h).sin()]),
                )
            })
            .fold(
                (0.0, f64::NEG_INFINITY),
                |acc, c| if c.1 > acc.1 { c } else { acc },
            );
        let g = |t: f64| f(&[t.cos(), t.sin()]);
        let (t, v) = golden_max(g, best - h, best + h, 1e-11);
        return (vec![t.cos(), t.sin()], v);
    }
    let coarse = direction_set(n, 400 * n);
    let mut ranked: Vec<(f64, usize)> = coarse.iter().enumerate().map(|(i, u)| (f(u), i)).collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = (coarse[ranked[0].1].clone(), ranked[0].0);
    for &(_, idx) in ranked.iter().take(3) {
        let (u, v) = ascend(n, f, coarse[idx].clone());
        if v > best.1 {
            best = (u, v);
        }
    }
    best
}

fn ascend(n: usize, f: &(dyn Fn(&[f64]) -> f64 + Sync), mut u: Vec<f64>) -> (Vec<f64>, f64) {
    let retract = |u: &[f64], d: &[f64], s: f64| {
        let p = axpy(s, d, u);
        scale(1.0 / norm(&p), &p)
    };
    let mut val = f(&u);
    let mut step = 0.1;
    for _ in 0..500 {
        // finite-difference gradient projected to the tangent plane
        let h = 1e-6;
        let mut grad = vec![0.0; n];
        for i in 0..n {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            let c = dot(&e, &u);
            let t = axpy(-c, &u, &e);
            let fp = f(&retract(&u, &t, h));
            let fm = f(&retract(&u, &t, -h));
            grad = axpy((fp - fm) / (2.0 * h), &t, &grad);
        }
        let c = dot(&grad, &u);
        grad = axpy(-c, &u, &grad);
        let gn = norm(&grad);
        if gn < 1e-13 {
            break;
        }
        let d = scale(1.0 / gn, &grad);
        let (s, v) = golden_max(|s| f(&retract(&u, &d, s)), 0.0, 2.0 * step, 1e-12);
        if v <= val {
            if step < 1e-10 {
                break;
            }
            step *= 0.25;
            continue;
        }
        let moved = s;
        u = retract(&u, &d, s);
        let gain = v - val;
        val = v;
        step = (2.0 * moved).clamp(1e-9, 0.5);
        if gain <= 1e-16 * val.abs().max(1.0) {
            break;
        }
    }
    (u, val)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(7);
        let s: f64 = x.iter().zip(&w).map(|(a, b)| b * a.powi(12)).sum();
        assert!((s - 2.0 / 13.0).abs() < 1e-14);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(2) - PI).abs() < 1e-14);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-14);
        assert!((unit_ball_volume(5) - 8.0 * PI * PI / 15.0).abs() < 1e-13);
    }

    #[test]
    fn sphere_rule_areas_and_moments() {
        for n in 2..=4 {
            let rule = SphereRule::get(n, default_order(n));
            let area: f64 = rule.integrate(|_| 1.0);
            assert!((area - sphere_area(n)).abs() < 1e-12 * area, "n={n}");
            // ∮ u_1² = area / n
            let m2: f64 = rule.integrate(|u| u[0] * u[0]);
            assert!((m2 - area / n as f64).abs() < 1e-12 * area, "n={n}");
        }
    }

    #[test]
    fn direction_sets_are_unit() {
        for n in 2..=5 {
            for u in direction_set(n, 32) {
                assert!((norm(&u) - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn sphere_maximization() {
        let c = [0.3, -0.5, 0.8];
        let (u, v) = maximize_on_sphere(3, &|u: &[f64]| dot(u, &c));
        assert!((v - norm(&c)).abs() < 1e-12);
        assert!((u[2] - 0.8 / norm(&c)).abs() < 1e-6);
        let (_, v2) = maximize_on_sphere(2, &|u: &[f64]| 3.0 * u[0] + 4.0 * u[1]);
        assert!((v2 - 5.0).abs() < 1e-12);
    }
}

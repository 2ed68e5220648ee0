//! Pointwise quantities obtained by differentiating `F` in `y`.

use crate::dual::Dual;
use crate::error::{FinslerError, Result};
use crate::linalg::{dot, norm, symmetric_eigenvalues, Matrix};
use crate::metric::FinslerMetric;
use crate::quadrature::maximize_on_sphere;
use crate::scalar::Scalar;

pub(crate) fn lift<T: Scalar>(v: &[T]) -> Vec<Dual<T>> {
    v.iter().map(|&a| Dual::constant(a)).collect()
}

pub(crate) fn seed<T: Scalar>(v: &[T], dir: &[T]) -> Vec<Dual<T>> {
    v.iter().zip(dir).map(|(&a, &d)| Dual::new(a, d)).collect()
}

pub(crate) fn seed_axis<T: Scalar>(v: &[T], k: usize) -> Vec<Dual<T>> {
    v.iter()
        .enumerate()
        .map(|(i, &a)| Dual::new(a, if i == k { T::one() } else { T::zero() }))
        .collect()
}

/// Two independent seeds: `inner` lands in `re.eps`, `outer` in `eps.re`.
pub(crate) fn seed2<T: Scalar>(v: &[T], inner: &[T], outer: &[T]) -> Vec<Dual<Dual<T>>> {
    v.iter()
        .zip(inner.iter().zip(outer))
        .map(|(&a, (&i, &o))| Dual::new(Dual::new(a, i), Dual::new(o, T::zero())))
        .collect()
}

pub(crate) fn lift2<T: Scalar>(v: &[T]) -> Vec<Dual<Dual<T>>> {
    v.iter()
        .map(|&a| Dual::constant(Dual::constant(a)))
        .collect()
}

pub(crate) fn axis<T: Scalar>(n: usize, k: usize) -> Vec<T> {
    (0..n)
        .map(|i| if i == k { T::one() } else { T::zero() })
        .collect()
}

/// `g_ij = ½ ∂̇_i ∂̇_j F²` for any scalar type.
pub fn fundamental_matrix<T: Scalar>(m: &FinslerMetric, x: &[T], y: &[T]) -> Matrix<T> {
    let n = y.len();
    let xs = lift2(x);
    let mut g = Matrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let ys = seed2(y, &axis(n, i), &axis(n, j));
            let f = m.eval(&xs, &ys);
            let v = (f * f).eps.eps * T::cst(0.5);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

/// `½ ∂̇_j F²`, the Legendre image of `y`.
pub fn legendre_generic<T: Scalar>(m: &FinslerMetric, x: &[T], y: &[T]) -> Vec<T> {
    let n = y.len();
    let xs = lift(x);
    (0..n)
        .map(|j| {
            let f = m.eval(&xs, &seed_axis(y, j));
            (f * f).eps * T::cst(0.5)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct FundamentalTensor {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub g: Matrix<f64>,
    pub det_g: f64,
}

fn check_direction(m: &FinslerMetric, x: &[f64], y: &[f64]) -> Result<()> {
    m.check_point(x)?;
    if y.len() != m.dim || norm(y) == 0.0 || !y.iter().all(|v| v.is_finite()) {
        return Err(FinslerError::InvalidInput(format!(
            "direction {y:?} must be finite and nonzero"
        )));
    }
    Ok(())
}

pub fn fundamental_tensor(m: &FinslerMetric, x: &[f64], y: &[f64]) -> Result<FundamentalTensor> {
    check_direction(m, x, y)?;
    let g = fundamental_matrix(m, x, y);
    if g.data.iter().any(|v| !v.is_finite()) {
        return Err(FinslerError::DomainViolation { x: x.to_vec() });
    }
    if !m.pseudo {
        let ev = symmetric_eigenvalues(&g);
        let (lo, hi) = (ev[0], ev[ev.len() - 1]);
        if lo <= 1e-12 * hi.abs().max(f64::MIN_POSITIVE) {
            return Err(FinslerError::NonPositiveDefinite {
                x: x.to_vec(),
                y: y.to_vec(),
                min_eigenvalue: lo,
            });
        }
    }
    let det_g = g.det();
    Ok(FundamentalTensor {
        x: x.to_vec(),
        y: y.to_vec(),
        g,
        det_g,
    })
}

/// `F*(x, α) = sup { α(u)/F(x,u) }`.
pub fn dual_norm(m: &FinslerMetric, x: &[f64], alpha: &[f64]) -> Result<f64> {
    m.check_point(x)?;
    let a = norm(alpha);
    if a == 0.0 {
        return Ok(0.0);
    }
    let unit: Vec<f64> = alpha.iter().map(|v| v / a).collect();
    let ratio = |u: &[f64]| dot(&unit, u) / m.f(x, u);
    let (_, v) = maximize_on_sphere(m.dim, &ratio);
    Ok(a * v)
}

/// `J(x, y) = g_ij(x,y) y^i dx^j`; `J(0) = 0`.
pub fn legendre(m: &FinslerMetric, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    m.check_point(x)?;
    if y.iter().all(|&v| v == 0.0) {
        return Ok(vec![0.0; m.dim]);
    }
    check_direction(m, x, y)?;
    Ok(legendre_generic(m, x, y))
}

/// Inverse Legendre map by damped Newton on `½F(y)² − α·y`.
pub fn legendre_inverse(m: &FinslerMetric, x: &[f64], alpha: &[f64]) -> Result<Vec<f64>> {
    m.check_point(x)?;
    let an = norm(alpha);
    if an == 0.0 {
        return Ok(vec![0.0; m.dim]);
    }
    let phi = |y: &[f64]| {
        let f = m.f(x, y);
        0.5 * f * f - dot(alpha, y)
    };
    let mut y = alpha.to_vec();
    let mut residual = f64::INFINITY;
    for _ in 0..200 {
        let l = legendre_generic(m, x, &y);
        let r: Vec<f64> = l.iter().zip(alpha).map(|(a, b)| a - b).collect();
        residual = norm(&r);
        if residual <= 1e-14 * an {
            return Ok(y);
        }
        let g = fundamental_matrix(m, x, &y);
        let step = g
            .solve(&r)
            .ok_or_else(|| FinslerError::SingularMetric { x: x.to_vec() })?;
        let p0 = phi(&y);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = y.iter().zip(&step).map(|(a, s)| a - t * s).collect();
            let p = phi(&trial);
            if p.is_finite() && p <= p0 + 1e-15 * p0.abs() {
                y = trial;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if residual <= 1e-10 * an {
        return Ok(y);
    }
    Err(FinslerError::NoConvergence {
        what: "legendre inverse",
        iterations: 200,
        residual,
    })
}

/// `∇f = J*(df)`, zero where `df = 0`.
pub fn gradient_from_differential(m: &FinslerMetric, x: &[f64], df: &[f64]) -> Result<Vec<f64>> {
    if df.iter().all(|&v| v == 0.0) {
        m.check_point(x)?;
        return Ok(vec![0.0; m.dim]);
    }
    legendre_inverse(m, x, df)
}

/// Gradient of a scalar field written over dual numbers.
pub fn gradient(
    m: &FinslerMetric,
    f: impl Fn(&[Dual<f64>]) -> Dual<f64>,
    x: &[f64],
) -> Result<Vec<f64>> {
    let df: Vec<f64> = (0..m.dim).map(|k| f(&seed_axis(x, k)).eps).collect();
    gradient_from_differential(m, x, &df)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_tensor_is_identity() {
        let m = FinslerMetric::euclidean(2);
        let t = fundamental_tensor(&m, &[0.4, 0.1], &[3.0, 4.0]).unwrap();
        assert!((t.g[(0, 0)] - 1.0).abs() < 1e-14 && t.g[(0, 1)].abs() < 1e-14);
        assert!((t.g.bilinear(&[3.0, 4.0], &[3.0, 4.0]) - 25.0).abs() < 1e-12);
        assert!((t.det_g - 1.0).abs() < 1e-14);
    }

    #[test]
    fn flat_randers_matches_second_differences() {
        let m = FinslerMetric::randers_flat(vec![0.3, 0.0]).unwrap();
        let x = [0.1, 0.2];
        let y = [1.0, 0.0];
        let g = fundamental_tensor(&m, &x, &y).unwrap().g;
        let f2 = |v: &[f64]| m.f(&x, v).powi(2);
        let h = 1e-4;
        for i in 0..2 {
            for j in 0..2 {
                let mut pp = y.to_vec();
                let mut pm = y.to_vec();
                let mut mp = y.to_vec();
                let mut mm = y.to_vec();
                pp[i] += h;
                pp[j] += h;
                pm[i] += h;
                pm[j] -= h;
                mp[i] -= h;
                mp[j] += h;
                mm[i] -= h;
                mm[j] -= h;
                let fd = 0.5 * (f2(&pp) - f2(&pm) - f2(&mp) + f2(&mm)) / (4.0 * h * h);
                let scale = g[(i, j)].abs().max(1.0);
                assert!(
                    (fd - g[(i, j)]).abs() < 1e-6 * scale,
                    "{i}{j}: {fd} vs {}",
                    g[(i, j)]
                );
            }
        }
    }

    #[test]
    fn dual_norm_basic_cases() {
        let e = FinslerMetric::euclidean(2);
        assert!((dual_norm(&e, &[0.0, 0.0], &[3.0, 4.0]).unwrap() - 5.0).abs() < 1e-12);
        assert_eq!(dual_norm(&e, &[0.0, 0.0], &[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn legendre_round_trip_funk() {
        let m = FinslerMetric::funk(2);
        let x = [0.2, 0.0];
        let y = [1.0, 0.0];
        let a = legendre(&m, &x, &y).unwrap();
        let back = legendre_inverse(&m, &x, &a).unwrap();
        for (u, v) in back.iter().zip(&y) {
            assert!((u - v).abs() < 1e-8);
        }
        // F*(J y) = F(y)
        let fs = dual_norm(&m, &x, &a).unwrap();
        assert!((fs - m.f(&x, &y)).abs() < 1e-9);
    }

    #[test]
    fn zero_conventions() {
        let m = FinslerMetric::funk(2);
        assert_eq!(
            legendre(&m, &[0.1, 0.0], &[0.0, 0.0]).unwrap(),
            vec![0.0, 0.0]
        );
        assert_eq!(
            legendre_inverse(&m, &[0.1, 0.0], &[0.0, 0.0]).unwrap(),
            vec![0.0, 0.0]
        );
        let g = gradient(&m, |_x| Dual::constant(2.0), &[0.1, 0.0]).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
    }

    #[test]
    fn euclidean_gradient_of_coordinate() {
        let m = FinslerMetric::euclidean(3);
        let g = gradient(&m, |x| x[0], &[0.3, 0.1, 0.2]).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-14 && g[1].abs() < 1e-14 && g[2].abs() < 1e-14);
    }

    #[test]
    fn degenerate_direction_rejected() {
        let m = FinslerMetric::euclidean(2);
        assert!(fundamental_tensor(&m, &[0.0, 0.0], &[0.0, 0.0]).is_err());
        assert!(fundamental_tensor(&m, &[2e3, 0.0], &[1.0, 0.0]).is_err());
    }
}

//! Geodesic spray `G^i`, nonlinear connection `N^i_j = ∂̇_j G^i`, and the
//! Berwald tensor `∂̇_i ∂̇_j ∂̇_k G^h`.

use crate::dual::Dual;
use crate::error::{FinslerError, Result};
use crate::linalg::{norm, Matrix};
use crate::metric::FinslerMetric;
use crate::scalar::Scalar;
use crate::tensor::{axis, fundamental_matrix, lift, lift2, seed, seed2, seed_axis};

/// `G^i = ¼ g^{ij} { y^l ∂_l ∂̇_j F² − ∂_j F² }` for any scalar type.
/// `None` when `g` is singular.
pub fn spray<T: Scalar>(m: &FinslerMetric, x: &[T], y: &[T]) -> Option<Vec<T>> {
    let n = y.len();
    let g = fundamental_matrix(m, x, y);
    let zero = vec![T::zero(); n];
    let xs_dir = seed2(x, y, &zero);
    let ys_plain = lift(y);
    let mut rhs = Vec::with_capacity(n);
    for j in 0..n {
        let ys = seed2(y, &zero, &axis(n, j));
        let f = m.eval(&xs_dir, &ys);
        let a = (f * f).eps.eps;
        let f1 = m.eval(&seed_axis(x, j), &ys_plain);
        let b = (f1 * f1).eps;
        rhs.push((a - b) * T::cst(0.25));
    }
    g.solve(&rhs)
}

fn spray_checked(m: &FinslerMetric, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    m.check_point(x)?;
    if y.len() != m.dim || norm(y) == 0.0 {
        return Err(FinslerError::InvalidInput(format!(
            "direction {y:?} must be nonzero"
        )));
    }
    let g = spray(m, x, y).ok_or_else(|| FinslerError::SingularMetric { x: x.to_vec() })?;
    if g.iter().any(|v| !v.is_finite()) {
        return Err(FinslerError::DomainViolation { x: x.to_vec() });
    }
    Ok(g)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SprayValue {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub coeffs: Vec<f64>,
    /// `N[(i, j)] = ∂̇_j G^i`.
    pub connection: Matrix<f64>,
    /// `[(i, j)] = ∂G^i/∂x^j` when requested.
    pub dgdx: Option<Matrix<f64>>,
}

fn jacobian_columns(
    n: usize,
    col: impl Fn(usize) -> Option<Vec<Dual<f64>>>,
) -> Option<(Vec<f64>, Matrix<f64>)> {
    let mut mat = Matrix::zeros(n);
    let mut value = Vec::new();
    for j in 0..n {
        let c = col(j)?;
        for i in 0..n {
            mat[(i, j)] = c[i].eps;
        }
        if j == 0 {
            value = c.iter().map(|d| d.re).collect();
        }
    }
    Some((value, mat))
}

pub fn spray_coefficients(m: &FinslerMetric, x: &[f64], y: &[f64]) -> Result<SprayValue> {
    spray_value(m, x, y, false)
}

pub fn spray_with_x_derivative(m: &FinslerMetric, x: &[f64], y: &[f64]) -> Result<SprayValue> {
    spray_value(m, x, y, true)
}

fn spray_value(m: &FinslerMetric, x: &[f64], y: &[f64], with_dx: bool) -> Result<SprayValue> {
    spray_checked(m, x, y)?;
    let n = m.dim;
    let singular = || FinslerError::SingularMetric { x: x.to_vec() };
    let xl = lift(x);
    let (coeffs, connection) =
        jacobian_columns(n, |j| spray(m, &xl, &seed_axis(y, j))).ok_or_else(singular)?;
    let dgdx = if with_dx {
        let yl = lift(y);
        Some(
            jacobian_columns(n, |j| spray(m, &seed_axis(x, j), &yl))
                .ok_or_else(singular)?
                .1,
        )
    } else {
        None
    };
    Ok(SprayValue {
        x: x.to_vec(),
        y: y.to_vec(),
        coeffs,
        connection,
        dgdx,
    })
}

/// `G(x,y)` and its derivative along the variation `(dx, dy)`, i.e.
/// `(∂G/∂x) dx + (∂G/∂y) dy`.
pub fn spray_directional(
    m: &FinslerMetric,
    x: &[f64],
    y: &[f64],
    dx: &[f64],
    dy: &[f64],
) -> Option<(Vec<f64>, Vec<f64>)> {
    let s = spray(m, &seed(x, dx), &seed(y, dy))?;
    Some((
        s.iter().map(|d| d.re).collect(),
        s.iter().map(|d| d.eps).collect(),
    ))
}

/// Plain spray coefficients, `None` on a singular metric.
pub fn spray_f64(m: &FinslerMetric, x: &[f64], y: &[f64]) -> Option<Vec<f64>> {
    spray(m, x, y)
}

type D3 = Dual<Dual<Dual<f64>>>;

fn third_derivatives(m: &FinslerMetric, x: &[f64], y: &[f64]) -> Option<Vec<f64>> {
    let n = y.len();
    let xs: Vec<D3> = x
        .iter()
        .map(|&a| Dual::constant(Dual::constant(Dual::constant(a))))
        .collect();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i..n {
            for k in j..n {
                let ys: Vec<D3> = (0..n)
                    .map(|l| {
                        let d = |a: usize| if a == l { 1.0 } else { 0.0 };
                        let inner = Dual::new(Dual::new(y[l], d(i)), Dual::new(d(j), 0.0));
                        Dual::new(inner, Dual::constant(Dual::constant(d(k))))
                    })
                    .collect();
                let g = spray(m, &xs, &ys)?;
                out.extend(g.iter().map(|v| v.eps.eps.eps));
            }
        }
    }
    Some(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BerwaldSample {
    /// Largest absolute entry of `∂̇_i ∂̇_j ∂̇_k G^h`.
    pub norm: f64,
    /// Violation of the (-1)-homogeneity of the tensor, `|B(y) − 2 B(2y)|`.
    pub noise_floor: f64,
}

impl BerwaldSample {
    pub fn threshold(&self) -> f64 {
        (10.0 * self.noise_floor).max(1e-5)
    }

    pub fn is_berwald(&self) -> bool {
        self.norm < self.threshold()
    }
}

pub fn berwald_tensor_norm(m: &FinslerMetric, x: &[f64], y: &[f64]) -> Result<BerwaldSample> {
    spray_checked(m, x, y)?;
    let singular = || FinslerError::SingularMetric { x: x.to_vec() };
    let b1 = third_derivatives(m, x, y).ok_or_else(singular)?;
    let y2: Vec<f64> = y.iter().map(|v| 2.0 * v).collect();
    let b2 = third_derivatives(m, x, &y2).ok_or_else(singular)?;
    let norm = b1.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let noise_floor = b1
        .iter()
        .zip(&b2)
        .map(|(a, b)| (a - 2.0 * b).abs())
        .fold(0.0, f64::max);
    if !norm.is_finite() || !noise_floor.is_finite() {
        return Err(FinslerError::DomainViolation { x: x.to_vec() });
    }
    if noise_floor > 1e-5 && noise_floor >= norm {
        return Err(FinslerError::NoiseFloorExceeded {
            what: "berwald tensor",
            value: norm,
            noise: noise_floor,
        });
    }
    Ok(BerwaldSample { norm, noise_floor })
}

/// Derivatives of `G` used by the Riemann operator trace.
pub(crate) struct SprayJet {
    pub connection: Matrix<f64>,
    /// `Σ_i ∂_i G^i`.
    pub trace_dx: f64,
    /// `Σ_i y^j ∂_j ∂̇_i G^i`.
    pub trace_ydx_dy: f64,
    /// `Σ_i G^j ∂̇_j ∂̇_i G^i`.
    pub trace_gdy_dy: f64,
}

pub(crate) fn spray_jet(m: &FinslerMetric, x: &[f64], y: &[f64]) -> Result<SprayJet> {
    let n = m.dim;
    let coeffs = spray_checked(m, x, y)?;
    let singular = || FinslerError::SingularMetric { x: x.to_vec() };
    let zero = vec![0.0; n];
    let mut connection = Matrix::zeros(n);
    let mut trace_ydx_dy = 0.0;
    let mut trace_gdy_dy = 0.0;
    let mut trace_dx = 0.0;
    let yl = lift(y);
    let x2 = lift2(x);
    for i in 0..n {
        let e = axis::<f64>(n, i);
        let s = spray(m, &seed2(x, y, &zero), &seed2(y, &zero, &e)).ok_or_else(singular)?;
        for h in 0..n {
            connection[(h, i)] = s[h].eps.re;
        }
        trace_ydx_dy += s[i].eps.eps;
        let s = spray(m, &x2, &seed2(y, &coeffs, &e)).ok_or_else(singular)?;
        trace_gdy_dy += s[i].eps.eps;
        let s = spray(m, &seed_axis(x, i), &yl).ok_or_else(singular)?;
        trace_dx += s[i].eps;
    }
    Ok(SprayJet {
        connection,
        trace_dx,
        trace_ydx_dy,
        trace_gdy_dy,
    })
}

//! Ricci curvature by the spray Riemann operator and by the Taylor
//! coefficients of the polar volume density.

use serde::{Deserialize, Serialize};

use crate::error::{FinslerError, Result};
use crate::harmonic::{density_along, fit_log_psi, uniform_radii};
use crate::measure::{s_curvature_local, s_curvature_rate, VolumeForm};
use crate::metric::FinslerMetric;
use crate::spray::spray_jet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureSample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// `Ric(y)`, the sum of flag curvatures.
    pub ricci: f64,
    /// Declared constant flag curvature, when the metric has one.
    pub flag_k: Option<f64>,
    pub noise_floor: f64,
}

/// `tr R_y` with `R^i_k = 2∂_kG^i − y^j∂_j∂̇_kG^i + 2G^j∂̇_j∂̇_kG^i − ∂̇_jG^i ∂̇_kG^j`.
fn riemann_trace(m: &FinslerMetric, x: &[f64], y: &[f64]) -> Result<f64> {
    let jet = spray_jet(m, x, y)?;
    let n = m.dim;
    let mut nn = 0.0;
    for i in 0..n {
        for j in 0..n {
            nn += jet.connection[(i, j)] * jet.connection[(j, i)];
        }
    }
    Ok(2.0 * jet.trace_dx - jet.trace_ydx_dy + 2.0 * jet.trace_gdy_dy - nn)
}

/// Noise above which the curvature value is rejected.
const RICCI_NOISE_LIMIT: f64 = 1e-3;

pub fn ricci(m: &FinslerMetric, x: &[f64], y: &[f64]) -> Result<CurvatureSample> {
    let f = m.f(x, y);
    if !((f - 1.0).abs() <= 1e-9) {
        return Err(FinslerError::InvalidInput(format!(
            "Ricci curvature needs an F-unit direction, F = {f}"
        )));
    }
    let ric = riemann_trace(m, x, y)?;
    let y2: Vec<f64> = y.iter().map(|v| 2.0 * v).collect();
    let noise_floor = (ric - riemann_trace(m, x, &y2)? / 4.0).abs();
    if !ric.is_finite() {
        return Err(FinslerError::DomainViolation { x: x.to_vec() });
    }
    if noise_floor > RICCI_NOISE_LIMIT {
        return Err(FinslerError::NoiseFloorExceeded {
            what: "ricci",
            value: ric,
            noise: noise_floor,
        });
    }
    Ok(CurvatureSample {
        x: x.to_vec(),
        y: y.to_vec(),
        ricci: ric,
        flag_k: m.known_flag_curvature,
        noise_floor,
    })
}

/// `Ric(y)` read off the `r²` coefficient of `σ̄_x(r, y)/r^{n−1}` fitted on
/// `(0, r_max]`, using `S` and `Ṡ` from the measure module.
pub fn ricci_from_jacobi(
    m: &FinslerMetric,
    kind: VolumeForm,
    x: &[f64],
    y: &[f64],
    r_max: f64,
) -> Result<f64> {
    let radii = uniform_radii(r_max / 10.0, r_max, 19);
    let sb = density_along(m, kind, x, y, &radii)?;
    let k = (m.dim - 1) as i32;
    let psi: Vec<f64> = sb.iter().zip(&radii).map(|(s, r)| s / r.powi(k)).collect();
    let l = fit_log_psi(&radii, &psi, 5)?;
    let a2 = l[1] + 0.5 * l[0] * l[0];
    let s = s_curvature_local(m, kind, x, y)?;
    let s_dot = s_curvature_rate(m, kind, x, y)?;
    Ok(3.0 * (s * s - s_dot - 2.0 * a2))
}

/// Upper bound `−(h + c)²/(n − 1)` on the Ricci curvature of an AHF
/// manifold with horosphere mean curvature `h` and S-curvature `c`.
/// Returns NaN for `n < 2`.
pub fn ahf_ricci_bound(h: f64, c: f64, n: usize) -> f64 {
    if n < 2 {
        return f64::NAN;
    }
    -(h + c).powi(2) / (n as f64 - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_is_flat() {
        let m = FinslerMetric::euclidean(3);
        let s = ricci(&m, &[0.1, 0.2, 0.3], &[0.0, 0.6, 0.8]).unwrap();
        assert!(s.ricci.abs() < 1e-12);
    }

    #[test]
    fn sphere_and_funk_constants() {
        let m = FinslerMetric::sphere(2);
        let x = [0.3, -0.2];
        let y = m.normalize(&x, &[1.0, 0.4]).unwrap();
        let s = ricci(&m, &x, &y).unwrap();
        assert!((s.ricci - 1.0).abs() < 1e-6, "{s:?}");
        let m = FinslerMetric::funk(2);
        let x = [0.2, 0.1];
        let y = m.normalize(&x, &[0.6, -0.8]).unwrap();
        let s = ricci(&m, &x, &y).unwrap();
        assert!((s.ricci + 0.25).abs() < 1e-6, "{s:?}");
    }

    #[test]
    fn jacobi_route_matches() {
        let m = FinslerMetric::funk(2);
        let x = [0.2, 0.1];
        let y = m.normalize(&x, &[0.6, -0.8]).unwrap();
        let r = ricci_from_jacobi(&m, VolumeForm::BusemannHausdorff, &x, &y, 0.2).unwrap();
        assert!((r + 0.25).abs() < 5e-3, "{r}");
    }

    #[test]
    fn ahf_bound_arithmetic() {
        assert_eq!(ahf_ricci_bound(0.0, 0.0, 3), 0.0);
        assert_eq!(ahf_ricci_bound(-1.0, 1.5, 2), -0.25);
        assert_eq!(ahf_ricci_bound(-2.0, 0.0, 5), -1.0);
        assert!(ahf_ricci_bound(1.0, 1.0, 1).is_nan());
    }
}

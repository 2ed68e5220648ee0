//! Volume form densities, distortion and S-curvature.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::dual::Dual;
use crate::error::{FinslerError, Result};
use crate::geodesic::integrate_geodesic;
use crate::metric::FinslerMetric;
use crate::quadrature::{
    adaptive_sphere_integral, default_order, maximize_on_sphere, unit_ball_volume, SphereRule,
};
use crate::spray::spray_coefficients;
use crate::tensor::{fundamental_matrix, fundamental_tensor, lift, seed};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VolumeForm {
    #[serde(rename = "BH")]
    BusemannHausdorff,
    #[serde(rename = "HT")]
    HolmesThompson,
    #[serde(rename = "MAX")]
    Max,
    #[serde(rename = "MIN")]
    Min,
}

impl VolumeForm {
    pub const ALL: [VolumeForm; 4] = [
        VolumeForm::BusemannHausdorff,
        VolumeForm::HolmesThompson,
        VolumeForm::Max,
        VolumeForm::Min,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            VolumeForm::BusemannHausdorff => "BH",
            VolumeForm::HolmesThompson => "HT",
            VolumeForm::Max => "MAX",
            VolumeForm::Min => "MIN",
        }
    }
}

impl fmt::Display for VolumeForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for VolumeForm {
    type Err = FinslerError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bh" => Ok(VolumeForm::BusemannHausdorff),
            "ht" => Ok(VolumeForm::HolmesThompson),
            "max" => Ok(VolumeForm::Max),
            "min" => Ok(VolumeForm::Min),
            _ => Err(FinslerError::InvalidInput(format!("unknown measure '{s}'"))),
        }
    }
}

/// Relative tolerance for adaptive sphere quadrature.
const QUAD_RTOL: f64 = 1e-12;

fn check_directions(m: &FinslerMetric, x: &[f64], order: usize) -> Result<()> {
    let rule = SphereRule::get(m.dim, order);
    for u in &rule.points {
        let f = m.f(x, u);
        if !(f > 0.0) || !f.is_finite() {
            return Err(FinslerError::QuadratureDivergence {
                direction: u.clone(),
            });
        }
    }
    Ok(())
}

fn bh_integrand(m: &FinslerMetric, x: &[f64], u: &[f64]) -> f64 {
    m.f(x, u).powi(-(m.dim as i32))
}

fn ht_integrand(m: &FinslerMetric, x: &[f64], u: &[f64]) -> f64 {
    fundamental_matrix(m, x, u).det() * m.f(x, u).powi(-(m.dim as i32))
}

/// `σ_BH(x) = Vol(𝔹ⁿ) / Vol(B_F)` at a fixed quadrature order.
pub fn sigma_bh(m: &FinslerMetric, x: &[f64], order: usize) -> Result<f64> {
    m.check_point(x)?;
    check_directions(m, x, order)?;
    let n = m.dim as f64;
    let vol = SphereRule::get(m.dim, order).integrate(|u| bh_integrand(m, x, u)) / n;
    Ok(unit_ball_volume(m.dim) / vol)
}

/// `σ_HT(x) = (1/Vol(𝔹ⁿ)) ∮ det g(x,u) F(x,u)^{−n}/n du` at a fixed order.
pub fn sigma_ht(m: &FinslerMetric, x: &[f64], order: usize) -> Result<f64> {
    m.check_point(x)?;
    check_directions(m, x, order)?;
    let n = m.dim as f64;
    let v = SphereRule::get(m.dim, order).integrate(|u| ht_integrand(m, x, u)) / n;
    Ok(v / unit_ball_volume(m.dim))
}

/// Extreme of `√det g(x, ·)`; returns the value and a maximizing direction.
fn extreme(m: &FinslerMetric, x: &[f64], kind: VolumeForm) -> (f64, Vec<f64>) {
    let sign = if kind == VolumeForm::Max { 1.0 } else { -1.0 };
    let f = |u: &[f64]| sign * fundamental_matrix(m, x, u).det().sqrt();
    let (u, v) = maximize_on_sphere(m.dim, &f);
    (sign * v, u)
}

pub fn sigma_extreme(m: &FinslerMetric, x: &[f64], kind: VolumeForm) -> Result<f64> {
    if !matches!(kind, VolumeForm::Max | VolumeForm::Min) {
        return Err(FinslerError::InvalidInput(
            "sigma_extreme needs MAX or MIN".into(),
        ));
    }
    m.check_point(x)?;
    let (v, _) = extreme(m, x, kind);
    if !(v > 0.0) {
        return Err(FinslerError::NonPositiveDefinite {
            x: x.to_vec(),
            y: vec![],
            min_eigenvalue: v,
        });
    }
    Ok(v)
}

/// `σ_μ(x)` with quadrature order doubled until converged; also returns the
/// order used (zero for the extreme forms).
pub fn sigma_adaptive(m: &FinslerMetric, kind: VolumeForm, x: &[f64]) -> Result<(f64, usize)> {
    m.check_point(x)?;
    let n = m.dim;
    match kind {
        VolumeForm::BusemannHausdorff => {
            check_directions(m, x, default_order(n))?;
            let (v, order) = adaptive_sphere_integral(n, default_order(n), QUAD_RTOL, |u| {
                bh_integrand(m, x, u)
            })?;
            Ok((unit_ball_volume(n) * n as f64 / v, order))
        }
        VolumeForm::HolmesThompson => {
            check_directions(m, x, default_order(n))?;
            let (v, order) = adaptive_sphere_integral(n, default_order(n), QUAD_RTOL, |u| {
                ht_integrand(m, x, u)
            })?;
            Ok((v / (n as f64 * unit_ball_volume(n)), order))
        }
        VolumeForm::Max | VolumeForm::Min => Ok((sigma_extreme(m, x, kind)?, 0)),
    }
}

pub fn sigma(m: &FinslerMetric, kind: VolumeForm, x: &[f64]) -> Result<f64> {
    sigma_adaptive(m, kind, x).map(|(v, _)| v)
}

/// `d·∇ log σ_μ(x)`, differentiating through the quadrature (or, for the
/// extreme forms, at the optimal direction).
pub fn log_sigma_derivative(
    m: &FinslerMetric,
    kind: VolumeForm,
    x: &[f64],
    d: &[f64],
) -> Result<f64> {
    let (_, order) = sigma_adaptive(m, kind, x)?;
    let xs = seed(x, d);
    let n = m.dim as i32;
    match kind {
        VolumeForm::BusemannHausdorff => {
            let i: Dual<f64> =
                SphereRule::get(m.dim, order).integrate(|u| m.eval(&xs, &lift(u)).powi(-n));
            Ok(-i.eps / i.re)
        }
        VolumeForm::HolmesThompson => {
            let i: Dual<f64> = SphereRule::get(m.dim, order).integrate(|u| {
                let ul = lift(u);
                fundamental_matrix(m, &xs, &ul).det() * m.eval(&xs, &ul).powi(-n)
            });
            Ok(i.eps / i.re)
        }
        VolumeForm::Max | VolumeForm::Min => {
            let (_, u) = extreme(m, x, kind);
            let det = fundamental_matrix(m, &xs, &lift(&u)).det();
            Ok(0.5 * det.eps / det.re)
        }
    }
}

/// `τ_μ(x, y) = log(√det g(x,y) / σ_μ(x))`.
pub fn distortion(m: &FinslerMetric, kind: VolumeForm, x: &[f64], y: &[f64]) -> Result<f64> {
    let t = fundamental_tensor(m, x, y)?;
    let s = sigma(m, kind, x)?;
    Ok(0.5 * t.det_g.ln() - s.ln())
}

/// Both S-curvature routes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SCurvatureRoutes {
    /// `∂̇_i G^i − y·∇ log σ_μ`.
    pub local: f64,
    /// `d/dt τ(γ̇(t))` at `t = 0` by a fourth-order one-sided difference.
    pub along_geodesic: f64,
}

fn check_unit(m: &FinslerMetric, x: &[f64], y: &[f64]) -> Result<()> {
    let f = m.f(x, y);
    if !((f - 1.0).abs() <= 1e-9) {
        return Err(FinslerError::InvalidInput(format!(
            "S-curvature needs an F-unit direction, F = {f}"
        )));
    }
    Ok(())
}

/// `∂̇_i G^i − y·∇ log σ_μ`, without the geodesic cross-check.
pub fn s_curvature_local(m: &FinslerMetric, kind: VolumeForm, x: &[f64], y: &[f64]) -> Result<f64> {
    check_unit(m, x, y)?;
    let s = spray_coefficients(m, x, y)?;
    let div: f64 = (0..m.dim).map(|i| s.connection[(i, i)]).sum();
    Ok(div - log_sigma_derivative(m, kind, x, y)?)
}

/// Values of `g` at five equally spaced points of the geodesic through
/// `(x, y)`, with their spacing.
fn along_geodesic(
    m: &FinslerMetric,
    x: &[f64],
    y: &[f64],
    g: impl Fn(&[f64], &[f64]) -> Result<f64>,
) -> Result<([f64; 5], f64)> {
    let h = 1e-2 * m.domain.boundary_distance(x).min(1.0);
    let path = integrate_geodesic(m, x, y, 4.0 * h, h)?;
    if path.exit.is_some() || path.states.len() < 5 {
        return Err(FinslerError::StencilOutOfDomain { x: x.to_vec(), h });
    }
    let mut v = [0.0; 5];
    for (vi, st) in v.iter_mut().zip(&path.states) {
        *vi = g(&st.x, &st.v)?;
    }
    Ok((v, h))
}

fn forward_derivative(v: &[f64; 5], h: f64) -> f64 {
    (-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]) / (12.0 * h)
}

pub fn s_curvature_routes(
    m: &FinslerMetric,
    kind: VolumeForm,
    x: &[f64],
    y: &[f64],
) -> Result<SCurvatureRoutes> {
    let local = s_curvature_local(m, kind, x, y)?;
    let (tau, h) = along_geodesic(m, x, y, |x, v| distortion(m, kind, x, v))?;
    Ok(SCurvatureRoutes {
        local,
        along_geodesic: forward_derivative(&tau, h),
    })
}

/// `Ṡ(y) = d/dt S(γ̇(t))` at `t = 0`.
pub fn s_curvature_rate(m: &FinslerMetric, kind: VolumeForm, x: &[f64], y: &[f64]) -> Result<f64> {
    check_unit(m, x, y)?;
    let (s, h) = along_geodesic(m, x, y, |x, v| s_curvature_local(m, kind, x, v))?;
    Ok(forward_derivative(&s, h))
}

/// S-curvature by the local formula, checked against the geodesic route.
pub fn s_curvature(m: &FinslerMetric, kind: VolumeForm, x: &[f64], y: &[f64]) -> Result<f64> {
    let r = s_curvature_routes(m, kind, x, y)?;
    let tol = 1e-4;
    if !((r.local - r.along_geodesic).abs() < tol) {
        return Err(FinslerError::CrossCheckFailure {
            what: "S-curvature",
            a: r.local,
            b: r.along_geodesic,
            tol,
        });
    }
    Ok(r.local)
}

/// Memo table of `σ_μ(x)` keyed by the exact bits of `x`.
#[derive(Debug, Default)]
pub struct SigmaCache {
    table: Mutex<HashMap<(VolumeForm, Vec<u64>), f64>>,
}

impl SigmaCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, m: &FinslerMetric, kind: VolumeForm, x: &[f64]) -> Result<f64> {
        let key = (kind, x.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        if let Some(&v) = self
            .table
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .get(&key)
        {
            return Ok(v);
        }
        let v = sigma(m, kind, x)?;
        self.table
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .insert(key, v);
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.table.lock().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

//! Polar volume densities, mean curvature of geodesic spheres and the
//! harmonicity verdicts built on them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{FinslerError, Result};
use crate::geodesic::{
    continue_frame, forward_shot, forward_shot_from, propagate_jacobi_frame, JacobiFrame,
};
use crate::linalg::least_squares;
use crate::measure::{distortion, sigma, VolumeForm};
use crate::metric::FinslerMetric;
use crate::quadrature::{direction_set, golden_max};
use crate::tensor::{dual_norm, gradient_from_differential};

/// Default number of sample directions for `n ≤ 3`.
pub const DEFAULT_DIRECTIONS: usize = 32;
pub const DEFAULT_TOL_SPREAD: f64 = 1e-3;
/// Tolerance decades at which verdicts are reported.
pub const TOLERANCE_DECADES: [f64; 3] = [1e-2, 1e-3, 1e-4];

/// `σ̄_p(r_j, y_k)` on a direction × radius grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityProfile {
    pub metric: String,
    pub measure: VolumeForm,
    pub base_point: Vec<f64>,
    pub directions: Vec<Vec<f64>>,
    pub radii: Vec<f64>,
    pub sigma_bar: Vec<Vec<f64>>,
    /// `σ̄ / r^{n−1}`.
    pub psi: Vec<Vec<f64>>,
}

impl DensityProfile {
    pub fn dim(&self) -> usize {
        self.base_point.len()
    }
}

fn frame_density(m: &FinslerMetric, kind: VolumeForm, tau0: f64, f: &JacobiFrame) -> Result<f64> {
    let tau = distortion(m, kind, &f.x, &f.v)?;
    Ok((tau0 - tau).exp() * f.det_gram(m).max(0.0).sqrt())
}

/// `σ̄_p(r, y)` along one F-unit direction. The Jacobi frame is
/// `g_y`-orthonormal at `p` and the distortion is taken relative to its
/// value at `(p, y)`, so `σ̄ ~ r^{n−1}` as `r → 0`.
pub fn density_along(
    m: &FinslerMetric,
    kind: VolumeForm,
    p: &[f64],
    y: &[f64],
    radii: &[f64],
) -> Result<Vec<f64>> {
    if radii.iter().any(|&r| !(r > 0.0)) || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(FinslerError::InvalidInput(
            "radii must be positive and increasing".into(),
        ));
    }
    let tau0 = distortion(m, kind, p, y)?;
    let path = propagate_jacobi_frame(m, p, y, radii)?;
    if let Some(t) = path.exit {
        return Err(FinslerError::DomainExit { arc_length: t });
    }
    path.frames
        .iter()
        .map(|f| frame_density(m, kind, tau0, f))
        .collect()
}

/// Density profile over the given directions (normalized to the indicatrix).
pub fn density_profile(
    m: &FinslerMetric,
    kind: VolumeForm,
    p: &[f64],
    directions: &[Vec<f64>],
    radii: &[f64],
) -> Result<DensityProfile> {
    m.check_point(p)?;
    let directions: Vec<Vec<f64>> = directions
        .iter()
        .map(|y| m.normalize(p, y))
        .collect::<Result<_>>()?;
    let sigma_bar: Vec<Vec<f64>> = directions
        .par_iter()
        .map(|y| density_along(m, kind, p, y, radii))
        .collect::<Result<_>>()?;
    let k = (m.dim - 1) as i32;
    let psi = sigma_bar
        .iter()
        .map(|row| row.iter().zip(radii).map(|(s, r)| s / r.powi(k)).collect())
        .collect();
    Ok(DensityProfile {
        metric: m.name.clone(),
        measure: kind,
        base_point: p.to_vec(),
        directions,
        radii: radii.to_vec(),
        sigma_bar,
        psi,
    })
}

/// Profile over the default quasi-uniform direction set.
pub fn default_profile(
    m: &FinslerMetric,
    kind: VolumeForm,
    p: &[f64],
    dirs: usize,
    radii: &[f64],
) -> Result<DensityProfile> {
    density_profile(m, kind, p, &direction_set(m.dim, dirs), radii)
}

/// `r_min, r_min + h, …` up to `r_max` with `count` points.
pub fn uniform_radii(r_min: f64, r_max: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![r_min];
    }
    let h = (r_max - r_min) / (count - 1) as f64;
    (0..count).map(|i| r_min + h * i as f64).collect()
}

fn uniform_step(radii: &[f64]) -> Result<f64> {
    if radii.len() < 5 {
        return Err(FinslerError::GridTooCoarse {
            reason: format!("{} radii, need at least 5", radii.len()),
        });
    }
    let h = (radii[radii.len() - 1] - radii[0]) / (radii.len() - 1) as f64;
    for (i, r) in radii.iter().enumerate() {
        if (r - radii[0] - h * i as f64).abs() > 1e-9 * h.max(r.abs()) {
            return Err(FinslerError::GridTooCoarse {
                reason: "radii are not uniformly spaced".into(),
            });
        }
    }
    Ok(h)
}

/// Fourth-order derivative of uniformly sampled values; one-sided at the ends.
fn derivative4(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    (0..n)
        .map(|i| {
            let d = if i == 0 {
                -25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]
            } else if i == 1 {
                -3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]
            } else if i == n - 2 {
                3.0 * f[n - 1] + 10.0 * f[n - 2] - 18.0 * f[n - 3] + 6.0 * f[n - 4] - f[n - 5]
            } else if i == n - 1 {
                25.0 * f[n - 1] - 48.0 * f[n - 2] + 36.0 * f[n - 3] - 16.0 * f[n - 4]
                    + 3.0 * f[n - 5]
            } else {
                -f[i + 2] + 8.0 * f[i + 1] - 8.0 * f[i - 1] + f[i - 2]
            };
            d / (12.0 * h)
        })
        .collect()
}

/// `Π(r, y) = ∂_r log σ̄` for each direction.
pub fn mean_curvature_profile(profile: &DensityProfile) -> Result<Vec<Vec<f64>>> {
    let h = uniform_step(&profile.radii)?;
    Ok(profile
        .sigma_bar
        .iter()
        .map(|row| derivative4(&row.iter().map(|s| s.ln()).collect::<Vec<_>>(), h))
        .collect())
}

/// Mean curvature of geodesic spheres for constant flag curvature `k` and
/// constant S-curvature `c`.
pub fn closed_form_mean_curvature(k: f64, c: f64, n: usize, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(FinslerError::InvalidInput(format!(
            "radius must be positive, got {r}"
        )));
    }
    let n1 = (n as f64) - 1.0;
    if k > 0.0 {
        let s = k.sqrt();
        let pole = std::f64::consts::PI / s;
        if r >= pole {
            return Err(FinslerError::PoleAtConjugate { r, pole });
        }
        Ok(-c + n1 * s / (s * r).tan())
    } else if k == 0.0 {
        Ok(-c + n1 / r)
    } else {
        let s = (-k).sqrt();
        Ok(-c + n1 * s / (s * r).tanh())
    }
}

/// Shen Laplacian of the distance from `p`, with the quantities it is
/// checked against.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ShenLaplacian {
    pub value: f64,
    pub distance: f64,
    /// `∂_r log σ̄` at the same point.
    pub mean_curvature: f64,
    /// `|F*(x, dr) − 1|`.
    pub eikonal_residual: f64,
}

pub fn shen_laplacian_report(
    m: &FinslerMetric,
    kind: VolumeForm,
    p: &[f64],
    x: &[f64],
) -> Result<ShenLaplacian> {
    m.check_point(p)?;
    m.check_point(x)?;
    let shot = forward_shot(m, p, x)?;
    let r = shot.distance;
    if !(r > 1e-6) {
        return Err(FinslerError::InvalidInput(
            "point coincides with the base point".into(),
        ));
    }
    let n = m.dim;
    let h = 1e-3 * m.domain.scale().min(1.0).min(r);
    if m.domain.boundary_distance(x) <= 3.0 * h {
        return Err(FinslerError::StencilOutOfDomain { x: x.to_vec(), h });
    }
    let shift = |z: &[f64], i: usize, s: f64| {
        let mut z = z.to_vec();
        z[i] += s;
        z
    };
    let dist = |z: &[f64]| forward_shot_from(m, p, z, &shot.w).map(|s| s.distance);
    let differential = |z: &[f64]| -> Result<Vec<f64>> {
        (0..n)
            .map(|j| Ok((dist(&shift(z, j, h))? - dist(&shift(z, j, -h))?) / (2.0 * h)))
            .collect()
    };
    let flux = |z: &[f64], i: usize| -> Result<f64> {
        let grad = gradient_from_differential(m, z, &differential(z)?)?;
        Ok(sigma(m, kind, z)? * grad[i])
    };
    let mut div = 0.0;
    for i in 0..n {
        div += (flux(&shift(x, i, h), i)? - flux(&shift(x, i, -h), i)?) / (2.0 * h);
    }
    let value = div / sigma(m, kind, x)?;
    let eikonal_residual = (dual_norm(m, x, &differential(x)?)? - 1.0).abs();

    let y = m.normalize(p, &shot.w)?;
    let delta = (r / 4.0).min(1e-2);
    let radii: Vec<f64> = (-2..=2).map(|k| r + delta * k as f64).collect();
    let logs: Vec<f64> = density_along(m, kind, p, &y, &radii)?
        .iter()
        .map(|s| s.ln())
        .collect();
    let mean_curvature = (-logs[4] + 8.0 * logs[3] - 8.0 * logs[1] + logs[0]) / (12.0 * delta);
    Ok(ShenLaplacian {
        value,
        distance: r,
        mean_curvature,
        eikonal_residual,
    })
}

/// Shen Laplacian of the distance from `p`, cross-checked against the
/// density-derived mean curvature and the eikonal equation.
pub fn shen_laplacian_of_distance(
    m: &FinslerMetric,
    kind: VolumeForm,
    p: &[f64],
    x: &[f64],
) -> Result<f64> {
    let rep = shen_laplacian_report(m, kind, p, x)?;
    let tol = 1e-3;
    if !(rep.eikonal_residual < tol) {
        return Err(FinslerError::CrossCheckFailure {
            what: "eikonal",
            a: rep.eikonal_residual,
            b: 0.0,
            tol,
        });
    }
    if !((rep.value - rep.mean_curvature).abs() < tol) {
        return Err(FinslerError::CrossCheckFailure {
            what: "laplacian vs mean curvature",
            a: rep.value,
            b: rep.mean_curvature,
            tol,
        });
    }
    Ok(rep.value)
}

/// Coefficients `l_1..l_d` of `log ψ(r) ≈ Σ l_k r^k` by least squares.
pub(crate) fn fit_log_psi(radii: &[f64], psi: &[f64], degree: usize) -> Result<Vec<f64>> {
    let rs = radii.iter().cloned().fold(0.0, f64::max);
    let rows: Vec<Vec<f64>> = radii
        .iter()
        .map(|r| (1..=degree).map(|k| (r / rs).powi(k as i32)).collect())
        .collect();
    let rhs: Vec<f64> = psi.iter().map(|v| v.ln()).collect();
    if rhs.iter().any(|v| !v.is_finite()) {
        return Err(FinslerError::FitIllConditioned {
            condition: f64::INFINITY,
        });
    }
    let (beta, cond) = least_squares(&rows, &rhs).ok_or(FinslerError::FitIllConditioned {
        condition: f64::INFINITY,
    })?;
    if !(cond < 1e10) {
        return Err(FinslerError::FitIllConditioned { condition: cond });
    }
    Ok(beta
        .iter()
        .enumerate()
        .map(|(k, b)| b / rs.powi(k as i32 + 1))
        .collect())
}

/// `(c₁, c₂)` with `ψ = 1 − c₁ r + c₂ r² + …`, so `c₁ = S(y)`.
pub(crate) fn taylor_coefficients(radii: &[f64], psi: &[f64]) -> Result<(f64, f64)> {
    let mut idx: Vec<usize> = (0..radii.len()).filter(|&i| radii[i] <= 0.5).collect();
    if idx.len() < 4 {
        idx = (0..radii.len().min(8)).collect();
    }
    if idx.len() < 3 {
        return Err(FinslerError::GridTooCoarse {
            reason: "too few small radii for a Taylor fit".into(),
        });
    }
    let degree = (idx.len() - 1).min(5);
    let r: Vec<f64> = idx.iter().map(|&i| radii[i]).collect();
    let v: Vec<f64> = idx.iter().map(|&i| psi[i]).collect();
    let l = fit_log_psi(&r, &v, degree)?;
    Ok((-l[0], l[1] + 0.5 * l[0] * l[0]))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AhfEstimate {
    /// Extrapolated horosphere mean curvature.
    pub h: f64,
    /// `|dΠ/dr|` of the fitted model at the end of the grid.
    pub tail_slope: f64,
    pub method: String,
}

fn linear_fit2(rs: &[f64], ys: &[f64], basis: impl Fn(f64) -> f64) -> Option<(f64, f64, f64)> {
    let rows: Vec<Vec<f64>> = rs.iter().map(|&r| vec![1.0, basis(r)]).collect();
    let (c, _) = least_squares(&rows, ys)?;
    let rss = rs
        .iter()
        .zip(ys)
        .map(|(&r, y)| (c[0] + c[1] * basis(r) - y).powi(2))
        .sum();
    Some((c[0], c[1], rss))
}

/// Extrapolate `Π(r)` from the last third of the grid with either
/// `h + A e^{−λr}` or `h + A/r`, whichever fits better.
pub fn extrapolate_mean_curvature(radii: &[f64], pi: &[f64]) -> Result<AhfEstimate> {
    let start = radii.len() - radii.len() / 3;
    let (rs, ys) = (&radii[start..], &pi[start..]);
    if rs.len() < 4 || ys.iter().any(|v| !v.is_finite()) {
        return Err(FinslerError::NotConverging {
            slope: f64::INFINITY,
        });
    }
    let r_end = rs[rs.len() - 1];
    let mut best: Option<AhfEstimate> = None;
    let mut best_rss = f64::INFINITY;
    if let Some((h, a, rss)) = linear_fit2(rs, ys, |r| 1.0 / r) {
        best_rss = rss;
        best = Some(AhfEstimate {
            h,
            tail_slope: (a / (r_end * r_end)).abs(),
            method: "h + A/r".into(),
        });
    }
    let rss_at = |lam: f64| {
        linear_fit2(rs, ys, |r| (-lam * (r - r_end)).exp()).map_or(f64::INFINITY, |f| f.2)
    };
    let grid: Vec<f64> = (0..=60).map(|i| 0.02 * 1.12f64.powi(i)).collect();
    let (i0, _) = grid.iter().enumerate().map(|(i, &l)| (i, rss_at(l))).fold(
        (0, f64::INFINITY),
        |acc, (i, v)| if v < acc.1 { (i, v) } else { acc },
    );
    let (lo, hi) = (
        grid[i0.saturating_sub(1)],
        grid[(i0 + 1).min(grid.len() - 1)],
    );
    let (lam, _) = golden_max(|l| -rss_at(l), lo, hi, 1e-10);
    if let Some((h, a, rss)) = linear_fit2(rs, ys, |r| (-lam * (r - r_end)).exp()) {
        if rss < best_rss {
            best = Some(AhfEstimate {
                h,
                tail_slope: (lam * a).abs(),
                method: "h + A exp(-lambda r)".into(),
            });
        }
    }
    best.ok_or(FinslerError::NotConverging {
        slope: f64::INFINITY,
    })
}

/// Slope above which the tail is not considered converged.
pub const AHF_SLOPE_LIMIT: f64 = 1e-2;

/// `Π_∞` along `(p, y)` from a density profile on `(0, r_large]`.
pub fn horosphere_mean_curvature(
    m: &FinslerMetric,
    kind: VolumeForm,
    p: &[f64],
    y: &[f64],
    r_large: f64,
) -> Result<AhfEstimate> {
    let count = ((r_large / 0.05).round() as usize).max(30);
    let radii = uniform_radii(r_large / count as f64, r_large, count);
    let y = m.normalize(p, y)?;
    let sb = density_along(m, kind, p, &y, &radii)?;
    if sb.iter().any(|s| !(*s > 0.0)) {
        return Err(FinslerError::NotConverging {
            slope: f64::INFINITY,
        });
    }
    let pi = derivative4(
        &sb.iter().map(|s| s.ln()).collect::<Vec<_>>(),
        radii[1] - radii[0],
    );
    let est = extrapolate_mean_curvature(&radii, &pi)?;
    if !(est.tail_slope <= AHF_SLOPE_LIMIT) {
        return Err(FinslerError::NotConverging {
            slope: est.tail_slope,
        });
    }
    Ok(est)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub tolerance: f64,
    pub local: bool,
    pub mean_curvature: Option<bool>,
    pub infinitesimal: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicityReport {
    pub metric: String,
    pub measure: VolumeForm,
    pub base_point: Vec<f64>,
    pub radii: Vec<f64>,
    /// `max_k σ̄ / min_k σ̄ − 1` per radius.
    pub spread: Vec<f64>,
    /// `max_k Π − min_k Π` per radius, when the grid is uniform.
    pub mean_curvature_spread: Option<Vec<f64>>,
    pub tol_spread: f64,
    pub locally_harmonic: bool,
    /// Radii covered by the harmonic prefix of the grid.
    pub harmonic_range: Option<(f64, f64)>,
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
    pub c1_spread: Option<f64>,
    pub c2_spread: Option<f64>,
    pub infinitesimally_harmonic: Option<bool>,
    pub ahf: Option<AhfEstimate>,
    pub verdicts: Vec<Verdict>,
}

fn spread_of(v: &[f64]) -> f64 {
    let mx = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mn = v.iter().cloned().fold(f64::INFINITY, f64::min);
    mx - mn
}

fn prefix_len(spread: &[f64], tol: f64) -> usize {
    spread.iter().take_while(|&&s| s < tol).count()
}

pub fn harmonicity_report(profile: &DensityProfile, tol_spread: f64) -> Result<HarmonicityReport> {
    let m = profile.directions.len();
    if m < 8 {
        return Err(FinslerError::InsufficientDirections { needed: 8, got: m });
    }
    let nr = profile.radii.len();
    let spread: Vec<f64> = (0..nr)
        .map(|j| {
            let col: Vec<f64> = profile.sigma_bar.iter().map(|row| row[j]).collect();
            let mx = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mn = col.iter().cloned().fold(f64::INFINITY, f64::min);
            if mn > 0.0 {
                mx / mn - 1.0
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let pi = mean_curvature_profile(profile).ok();
    let mean_curvature_spread = pi.as_ref().map(|pi| {
        (0..nr)
            .map(|j| spread_of(&pi.iter().map(|row| row[j]).collect::<Vec<_>>()))
            .collect::<Vec<_>>()
    });
    let prefix = prefix_len(&spread, tol_spread);
    let harmonic_range = (prefix > 0).then(|| (profile.radii[0], profile.radii[prefix - 1]));

    let coeffs: Option<Vec<(f64, f64)>> = profile
        .psi
        .iter()
        .map(|row| taylor_coefficients(&profile.radii, row).ok())
        .collect();
    let (c1, c2): (Vec<f64>, Vec<f64>) = coeffs.unwrap_or_default().into_iter().unzip();
    let c1_spread = (!c1.is_empty()).then(|| spread_of(&c1));
    let c2_spread = (!c2.is_empty()).then(|| spread_of(&c2));
    let infinitesimal = |tol: f64| match (c1_spread, c2_spread) {
        (Some(a), Some(b)) => Some(a < tol && b < tol),
        _ => None,
    };

    let ahf = pi.as_ref().and_then(|pi| {
        let mean: Vec<f64> = (0..nr)
            .map(|j| pi.iter().map(|row| row[j]).sum::<f64>() / m as f64)
            .collect();
        extrapolate_mean_curvature(&profile.radii, &mean)
            .ok()
            .filter(|e| e.tail_slope <= AHF_SLOPE_LIMIT)
    });

    let verdicts = TOLERANCE_DECADES
        .iter()
        .map(|&tol| Verdict {
            tolerance: tol,
            local: prefix_len(&spread, tol) == nr,
            mean_curvature: mean_curvature_spread
                .as_ref()
                .map(|s| prefix_len(s, tol) == nr),
            infinitesimal: infinitesimal(tol),
        })
        .collect();

    Ok(HarmonicityReport {
        metric: profile.metric.clone(),
        measure: profile.measure,
        base_point: profile.base_point.clone(),
        radii: profile.radii.clone(),
        spread,
        mean_curvature_spread,
        tol_spread,
        locally_harmonic: prefix == nr,
        harmonic_range,
        c1,
        c2,
        c1_spread,
        c2_spread,
        infinitesimally_harmonic: infinitesimal(tol_spread),
        ahf,
        verdicts,
    })
}

impl HarmonicityReport {
    /// Machine-readable form for the command line tool.
    pub fn to_json(&self) -> Value {
        let spread: Vec<Value> = self
            .radii
            .iter()
            .zip(&self.spread)
            .map(|(r, s)| json!({"r": r, "spread": s}))
            .collect();
        json!({
            "schema": "finsler-lab/1",
            "metric": self.metric,
            "measure": self.measure.tag(),
            "base_point": self.base_point,
            "spread_by_radius": spread,
            "mean_curvature_spread": self.mean_curvature_spread,
            "harmonic_range": self.harmonic_range,
            "verdicts": {
                "local": self.locally_harmonic,
                "infinitesimal": self.infinitesimally_harmonic,
                "ahf": self.ahf,
                "by_tolerance": self.verdicts,
            },
            "coefficients": {
                "c1": self.c1,
                "c2": self.c2,
                "c1_spread": self.c1_spread,
                "c2_spread": self.c2_spread,
            },
            "tolerances": {"spread": self.tol_spread, "decades": TOLERANCE_DECADES},
        })
    }
}

/// Profile CSV; mean curvature is left empty when unavailable.
pub fn profile_csv(profile: &DensityProfile, mean_curvature: Option<&[Vec<f64>]>) -> String {
    let p = profile
        .base_point
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ");
    let mut out = String::from("measure,kind,p,y_index,r,sigmaBar,psi,meanCurvature\n");
    for (k, (sb, ps)) in profile.sigma_bar.iter().zip(&profile.psi).enumerate() {
        for (j, r) in profile.radii.iter().enumerate() {
            let pi = mean_curvature
                .map(|pi| pi[k][j].to_string())
                .unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                profile.measure, profile.metric, p, k, r, sb[j], ps[j], pi
            ));
        }
    }
    out
}

/// Relative gap between the direction-averaged profiles at two base points
/// of a reversible metric.
pub fn base_point_independence_check(
    m: &FinslerMetric,
    kind: VolumeForm,
    p1: &[f64],
    p2: &[f64],
    radii: &[f64],
) -> Result<f64> {
    if !m.reversible {
        return Err(FinslerError::InvalidInput(format!(
            "{} is not reversible",
            m.name
        )));
    }
    let mean_at = |p: &[f64]| -> Result<Vec<f64>> {
        let prof = default_profile(m, kind, p, 8, radii)?;
        let rep = harmonicity_report(&prof, DEFAULT_TOL_SPREAD)?;
        if !rep.locally_harmonic {
            let spread = rep.spread.iter().cloned().fold(0.0, f64::max);
            return Err(FinslerError::NotHarmonic {
                p: p.to_vec(),
                spread,
            });
        }
        Ok((0..radii.len())
            .map(|j| prof.sigma_bar.iter().map(|row| row[j]).sum::<f64>() / 8.0)
            .collect())
    };
    let a = mean_at(p1)?;
    let b = mean_at(p2)?;
    Ok(a.iter()
        .zip(&b)
        .map(|(x, y)| (x - y).abs() / x)
        .fold(0.0, f64::max))
}

/// First zero of `σ̄_p(·, y)` below `r_max`, located on a grid of step `dr`
/// and refined by golden-section search.
pub fn first_density_zero(
    m: &FinslerMetric,
    kind: VolumeForm,
    p: &[f64],
    y: &[f64],
    r_max: f64,
    dr: f64,
) -> Result<Option<f64>> {
    let y = m.normalize(p, y)?;
    let tau0 = distortion(m, kind, p, &y)?;
    let count = (r_max / dr).ceil() as usize;
    let radii = uniform_radii(dr, count as f64 * dr, count);
    let path = propagate_jacobi_frame(m, p, &y, &radii)?;
    let frames = &path.frames;
    let dens: Vec<f64> = frames
        .iter()
        .map(|f| frame_density(m, kind, tau0, f))
        .collect::<Result<_>>()?;
    let mut peak: f64 = 0.0;
    for i in 1..dens.len().saturating_sub(1) {
        peak = peak.max(dens[i - 1]);
        if dens[i] <= dens[i - 1] && dens[i] <= dens[i + 1] && dens[i] < 1e-2 * peak {
            let at = |t: f64| -> f64 {
                match continue_frame(m, &frames[i - 1], &[t]) {
                    Ok(path) if !path.frames.is_empty() => {
                        frame_density(m, kind, tau0, &path.frames[0])
                            .map_or(f64::NEG_INFINITY, |d| -d)
                    }
                    _ => f64::NEG_INFINITY,
                }
            };
            let (t, _) = golden_max(at, frames[i - 1].t, frames[i + 1].t, 1e-9);
            return Ok(Some(t));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_profile_is_power_law() {
        let m = FinslerMetric::euclidean(3);
        let radii = uniform_radii(0.1, 2.0, 20);
        let prof = default_profile(
            &m,
            VolumeForm::BusemannHausdorff,
            &[0.1, 0.0, 0.2],
            8,
            &radii,
        )
        .unwrap();
        for row in &prof.sigma_bar {
            for (s, r) in row.iter().zip(&radii) {
                assert!((s / (r * r) - 1.0).abs() < 1e-8);
            }
        }
        let fine = uniform_radii(0.5, 2.0, 31);
        let prof = default_profile(
            &m,
            VolumeForm::BusemannHausdorff,
            &[0.1, 0.0, 0.2],
            8,
            &fine,
        )
        .unwrap();
        let pi = mean_curvature_profile(&prof).unwrap();
        for (p, r) in pi[0].iter().zip(&fine) {
            assert!((p - 2.0 / r).abs() < 1e-3, "{p} vs {}", 2.0 / r);
        }
    }

    #[test]
    fn closed_form_branches() {
        assert!((closed_form_mean_curvature(0.0, 0.0, 3, 2.0).unwrap() - 1.0).abs() < 1e-15);
        let v = closed_form_mean_curvature(-0.25, 1.5, 2, 4.0).unwrap();
        assert!((v - (0.5 / 2f64.tanh() - 1.5)).abs() < 1e-15);
        assert!((v + 0.981343).abs() < 1e-6);
        assert!(matches!(
            closed_form_mean_curvature(1.0, 0.0, 2, 4.0),
            Err(FinslerError::PoleAtConjugate { .. })
        ));
    }

    #[test]
    fn uniform_grid_required() {
        let prof = DensityProfile {
            metric: "x".into(),
            measure: VolumeForm::BusemannHausdorff,
            base_point: vec![0.0, 0.0],
            directions: vec![vec![1.0, 0.0]],
            radii: vec![0.1, 0.2, 0.4, 0.5, 0.6],
            sigma_bar: vec![vec![1.0; 5]],
            psi: vec![vec![1.0; 5]],
        };
        assert!(matches!(
            mean_curvature_profile(&prof),
            Err(FinslerError::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn log_fit_recovers_polynomial() {
        let radii = uniform_radii(0.02, 0.5, 25);
        let psi: Vec<f64> = radii
            .iter()
            .map(|r| (-1.5 * r + 0.2 * r * r).exp())
            .collect();
        let (c1, c2) = taylor_coefficients(&radii, &psi).unwrap();
        assert!((c1 - 1.5).abs() < 1e-9);
        assert!((c2 - (0.2 + 1.125)).abs() < 1e-8);
    }

    #[test]
    fn report_needs_eight_directions() {
        let m = FinslerMetric::euclidean(2);
        let prof = default_profile(
            &m,
            VolumeForm::BusemannHausdorff,
            &[0.0, 0.0],
            4,
            &[0.5, 1.0],
        )
        .unwrap();
        assert!(matches!(
            harmonicity_report(&prof, 1e-3),
            Err(FinslerError::InsufficientDirections { .. })
        ));
    }

    #[test]
    fn extrapolation_models() {
        let radii = uniform_radii(0.1, 10.0, 100);
        let coth: Vec<f64> = radii.iter().map(|r| 1.0 / r.tanh()).collect();
        let e = extrapolate_mean_curvature(&radii, &coth).unwrap();
        assert!((e.h - 1.0).abs() < 1e-6, "{e:?}");
        let inv: Vec<f64> = radii.iter().map(|r| 2.0 / r).collect();
        let e = extrapolate_mean_curvature(&radii, &inv).unwrap();
        assert!(e.h.abs() < 1e-9 && e.method == "h + A/r", "{e:?}");
    }
}

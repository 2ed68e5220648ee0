//! Geodesics, Jacobi frames, the exponential map, shooting distances and
//! conjugate points.

use crate::error::{FinslerError, Result};
use crate::linalg::{axpy, g_orthonormal_complement, norm, sub, symmetric_eigenvalues, Matrix};
use crate::metric::FinslerMetric;
use crate::ode::{integrate, OdeOptions, OdeStop, OdeSystem};
use crate::quadrature::{direction_set, golden_max};
use crate::spray::{spray_directional, spray_f64};
use crate::tensor::fundamental_matrix;

/// `ẍ = −2G(x, ẋ)` with `fields` co-integrated variations.
/// State layout: `x, v, (J_1, J̇_1), …`.
pub(crate) struct GeodesicSystem<'a> {
    pub m: &'a FinslerMetric,
    pub fields: usize,
}

impl GeodesicSystem<'_> {
    fn n(&self) -> usize {
        self.m.dim
    }
}

impl OdeSystem for GeodesicSystem<'_> {
    fn dim(&self) -> usize {
        2 * self.n() * (1 + self.fields)
    }

    fn rhs(&self, _t: f64, u: &[f64], du: &mut [f64]) -> bool {
        let n = self.n();
        let (x, v) = (&u[..n], &u[n..2 * n]);
        if !self.m.domain.contains(x) {
            return false;
        }
        du[..n].copy_from_slice(v);
        if self.fields == 0 {
            match spray_f64(self.m, x, v) {
                Some(g) => du[n..2 * n]
                    .iter_mut()
                    .zip(&g)
                    .for_each(|(d, gi)| *d = -2.0 * gi),
                None => return false,
            }
            return true;
        }
        for k in 0..self.fields {
            let off = 2 * n * (k + 1);
            let (j, dj) = (&u[off..off + n], &u[off + n..off + 2 * n]);
            let Some((g, dg)) = spray_directional(self.m, x, v, j, dj) else {
                return false;
            };
            if k == 0 {
                du[n..2 * n]
                    .iter_mut()
                    .zip(&g)
                    .for_each(|(d, gi)| *d = -2.0 * gi);
            }
            du[off..off + n].copy_from_slice(dj);
            du[off + n..off + 2 * n]
                .iter_mut()
                .zip(&dg)
                .for_each(|(d, gi)| *d = -2.0 * gi);
        }
        true
    }

    fn weights(&self, u: &[f64], opts: &OdeOptions, out: &mut [f64]) {
        let n = self.n();
        let bd = self.m.domain.boundary_distance(&u[..n]).clamp(1e-300, 1.0);
        let abs = opts.atol * bd;
        for (block, w) in u.chunks(n).zip(out.chunks_mut(n)) {
            let mx = block.iter().map(|v| v.abs()).fold(0.0, f64::max);
            w.iter_mut().for_each(|c| *c = abs + opts.rtol * mx);
        }
    }

    fn admissible(&self, u: &[f64]) -> bool {
        let n = self.n();
        let x = &u[..n];
        if !self.m.domain.contains(x) {
            return false;
        }
        let f = self.m.f(x, &u[n..2 * n]);
        f.is_finite() && f > 0.0
    }
}

/// Point on a unit-speed geodesic.
#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicState {
    pub t: f64,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicPath {
    pub states: Vec<GeodesicState>,
    /// Arc length at which the chart was left, if it was.
    pub exit: Option<f64>,
}

fn check_unit(m: &FinslerMetric, p: &[f64], y: &[f64]) -> Result<()> {
    m.check_point(p)?;
    if y.len() != m.dim {
        return Err(FinslerError::InvalidInput(
            "direction has wrong dimension".into(),
        ));
    }
    let f = m.f(p, y);
    if !((f - 1.0).abs() <= 1e-9) {
        return Err(FinslerError::InvalidInput(format!(
            "initial direction must be F-unit, F = {f}"
        )));
    }
    Ok(())
}

pub(crate) fn time_grid(r_max: f64, dt: f64) -> Vec<f64> {
    let k = (r_max / dt - 1e-9).ceil().max(1.0) as usize;
    let mut ts: Vec<f64> = (0..k).map(|i| i as f64 * dt).collect();
    ts.push(r_max);
    ts
}

pub fn integrate_geodesic(
    m: &FinslerMetric,
    p: &[f64],
    y: &[f64],
    r_max: f64,
    dt: f64,
) -> Result<GeodesicPath> {
    check_unit(m, p, y)?;
    if !(r_max > 0.0) || !(dt > 0.0) {
        return Err(FinslerError::InvalidInput(
            "r_max and dt must be positive".into(),
        ));
    }
    let sys = GeodesicSystem { m, fields: 0 };
    let u0: Vec<f64> = p.iter().chain(y).copied().collect();
    let (res, stop) = integrate(
        &sys,
        0.0,
        &u0,
        &time_grid(r_max, dt),
        &OdeOptions::default(),
    );
    let n = m.dim;
    let states = res
        .into_iter()
        .map(|(t, u)| GeodesicState {
            t,
            x: u[..n].to_vec(),
            v: u[n..].to_vec(),
        })
        .collect();
    let exit = match stop {
        OdeStop::Completed => None,
        OdeStop::Exit { t } => Some(t),
        OdeStop::StepFailure { t } => return Err(FinslerError::StepFailure { arc_length: t }),
    };
    Ok(GeodesicPath { states, exit })
}

/// Solve to parameter 1 with `ẋ(0) = w`, optionally with the Jacobian
/// `∂x(1)/∂w` from the variational equations.
fn shoot(
    m: &FinslerMetric,
    p: &[f64],
    w: &[f64],
    jacobian: bool,
) -> std::result::Result<(Vec<f64>, Option<Matrix<f64>>), f64> {
    let n = m.dim;
    let fields = if jacobian { n } else { 0 };
    let sys = GeodesicSystem { m, fields };
    let mut u0 = vec![0.0; sys.dim()];
    u0[..n].copy_from_slice(p);
    u0[n..2 * n].copy_from_slice(w);
    for k in 0..fields {
        u0[2 * n * (k + 1) + n + k] = 1.0;
    }
    let opts = OdeOptions {
        h_init: 1e-3,
        ..OdeOptions::default()
    };
    let (res, stop) = integrate(&sys, 0.0, &u0, &[1.0], &opts);
    match stop {
        OdeStop::Completed => {
            let u = &res[0].1;
            let jac = jacobian.then(|| Matrix::from_fn(n, |i, k| u[2 * n * (k + 1) + i]));
            Ok((u[..n].to_vec(), jac))
        }
        OdeStop::Exit { t } | OdeStop::StepFailure { t } => Err(t),
    }
}

pub fn exponential_map(m: &FinslerMetric, p: &[f64], w: &[f64]) -> Result<Vec<f64>> {
    m.check_point(p)?;
    if w.iter().all(|&v| v == 0.0) {
        return Ok(p.to_vec());
    }
    let f = m.f(p, w);
    shoot(m, p, w, false)
        .map(|(x, _)| x)
        .map_err(|t| FinslerError::DomainExit { arc_length: t * f })
}

/// Newton on `exp_p(w) = q` from the seed `w`.
fn newton_shoot(m: &FinslerMetric, p: &[f64], q: &[f64], seed: &[f64]) -> Option<Vec<f64>> {
    let tol = 1e-12 * (1.0 + norm(q));
    let mut w = seed.to_vec();
    let mut current = None;
    for _ in 0..8 {
        if let Ok(s) = shoot(m, p, &w, true) {
            current = Some(s);
            break;
        }
        w.iter_mut().for_each(|c| *c *= 0.5);
    }
    let (mut x, mut jac) = current?;
    let mut res = norm(&sub(&x, q));
    for _ in 0..60 {
        if res <= tol {
            return Some(w);
        }
        let step = jac.as_ref()?.solve(&sub(&x, q))?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial = axpy(-lambda, &step, &w);
            if let Ok((xt, jt)) = shoot(m, p, &trial, true) {
                let rt = norm(&sub(&xt, q));
                if rt < res * (1.0 - 1e-4 * lambda) || rt <= tol {
                    w = trial;
                    x = xt;
                    jac = jt;
                    res = rt;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (res <= 1e3 * tol).then_some(w)
}

/// Result of a shooting solve.
#[derive(Clone, Debug, PartialEq)]
pub struct Shot {
    pub distance: f64,
    /// Initial vector with `exp_p(w) = q`; `F(p, w)` is the distance.
    pub w: Vec<f64>,
}

/// `d_F(p, q)` by multi-start shooting.
pub fn forward_distance(m: &FinslerMetric, p: &[f64], q: &[f64]) -> Result<f64> {
    forward_shot(m, p, q).map(|s| s.distance)
}

pub fn forward_shot(m: &FinslerMetric, p: &[f64], q: &[f64]) -> Result<Shot> {
    m.check_point(p)?;
    m.check_point(q)?;
    let n = m.dim;
    let chord = sub(q, p);
    if norm(&chord) == 0.0 {
        return Ok(Shot {
            distance: 0.0,
            w: vec![0.0; n],
        });
    }
    let d0 = m.f(p, &chord);
    let mut seeds = vec![chord.clone()];
    for u in direction_set(n, 2 * n + 8) {
        let fu = m.f(p, &u);
        seeds.push(u.iter().map(|c| c * d0 / fu).collect());
    }
    let mut best: Option<Shot> = None;
    for s in seeds {
        if let Some(w) = newton_shoot(m, p, q, &s) {
            let d = m.f(p, &w);
            if best.as_ref().is_none_or(|b| d < b.distance - 1e-12) {
                best = Some(Shot { distance: d, w });
            }
        }
    }
    best.ok_or_else(|| FinslerError::NotReached {
        p: p.to_vec(),
        q: q.to_vec(),
    })
}

/// Shooting from a single nearby seed, for stencils around a known solution.
pub fn forward_shot_from(m: &FinslerMetric, p: &[f64], q: &[f64], seed: &[f64]) -> Result<Shot> {
    m.check_point(q)?;
    let w = newton_shoot(m, p, q, seed).ok_or_else(|| FinslerError::NotReached {
        p: p.to_vec(),
        q: q.to_vec(),
    })?;
    Ok(Shot {
        distance: m.f(p, &w),
        w,
    })
}

/// `(n−1)` Jacobi fields along a unit-speed geodesic.
#[derive(Clone, Debug, PartialEq)]
pub struct JacobiFrame {
    pub p: Vec<f64>,
    pub y: Vec<f64>,
    /// `g_y`-orthonormal basis of the complement of `y`.
    pub basis: Vec<Vec<f64>>,
    pub t: f64,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub j: Vec<Vec<f64>>,
    pub dj: Vec<Vec<f64>>,
}

impl JacobiFrame {
    /// `g_{γ̇}(J_i, J_k)`.
    pub fn gram(&self, m: &FinslerMetric) -> Matrix<f64> {
        let g = fundamental_matrix(m, &self.x, &self.v);
        let k = self.j.len();
        let mut gram = Matrix::from_fn(k, |a, b| g.bilinear(&self.j[a], &self.j[b]));
        // symmetrize against rounding
        for a in 0..k {
            for b in a + 1..k {
                let s = 0.5 * (gram[(a, b)] + gram[(b, a)]);
                gram[(a, b)] = s;
                gram[(b, a)] = s;
            }
        }
        gram
    }

    pub fn det_gram(&self, m: &FinslerMetric) -> f64 {
        self.gram(m).det()
    }

    /// `det[γ̇, J_1, …, J_{n−1}]` in chart coordinates; changes sign at
    /// conjugate points of odd multiplicity.
    pub fn signed_det(&self) -> f64 {
        let n = self.x.len();
        Matrix::from_fn(n, |i, k| if k == 0 { self.v[i] } else { self.j[k - 1][i] }).det()
    }

    pub fn min_gram_eigenvalue(&self, m: &FinslerMetric) -> f64 {
        symmetric_eigenvalues(&self.gram(m))[0]
    }

    fn state(&self) -> Vec<f64> {
        let mut u = self.x.clone();
        u.extend(&self.v);
        for (j, dj) in self.j.iter().zip(&self.dj) {
            u.extend(j);
            u.extend(dj);
        }
        u
    }

    fn with_state(&self, t: f64, u: &[f64]) -> JacobiFrame {
        let n = self.x.len();
        let k = self.j.len();
        JacobiFrame {
            p: self.p.clone(),
            y: self.y.clone(),
            basis: self.basis.clone(),
            t,
            x: u[..n].to_vec(),
            v: u[n..2 * n].to_vec(),
            j: (0..k)
                .map(|a| u[2 * n * (a + 1)..2 * n * (a + 1) + n].to_vec())
                .collect(),
            dj: (0..k)
                .map(|a| u[2 * n * (a + 1) + n..2 * n * (a + 2)].to_vec())
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct JacobiPath {
    pub frames: Vec<JacobiFrame>,
    pub exit: Option<f64>,
}

/// Initial frame at `p`: `J_i(0) = 0`, `J̇_i(0) = e_i`.
pub fn initial_frame(m: &FinslerMetric, p: &[f64], y: &[f64]) -> Result<JacobiFrame> {
    check_unit(m, p, y)?;
    let g = fundamental_matrix(m, p, y);
    let basis = g_orthonormal_complement(&g, y);
    let n = m.dim;
    Ok(JacobiFrame {
        p: p.to_vec(),
        y: y.to_vec(),
        t: 0.0,
        x: p.to_vec(),
        v: y.to_vec(),
        j: vec![vec![0.0; n]; n - 1],
        dj: basis.clone(),
        basis,
    })
}

/// Continue a frame through the increasing output times.
pub fn continue_frame(m: &FinslerMetric, from: &JacobiFrame, times: &[f64]) -> Result<JacobiPath> {
    let sys = GeodesicSystem {
        m,
        fields: m.dim - 1,
    };
    let (res, stop) = integrate(&sys, from.t, &from.state(), times, &OdeOptions::default());
    let frames = res.iter().map(|(t, u)| from.with_state(*t, u)).collect();
    let exit = match stop {
        OdeStop::Completed => None,
        OdeStop::Exit { t } => Some(t),
        OdeStop::StepFailure { t } => return Err(FinslerError::StepFailure { arc_length: t }),
    };
    Ok(JacobiPath { frames, exit })
}

/// Jacobi frame at each of the given radii (which must be increasing and
/// nonnegative).
pub fn propagate_jacobi_frame(
    m: &FinslerMetric,
    p: &[f64],
    y: &[f64],
    radii: &[f64],
) -> Result<JacobiPath> {
    let start = initial_frame(m, p, y)?;
    continue_frame(m, &start, radii)
}

/// Smallest conjugate radius up to `r_max`, if any.
pub fn first_conjugate_radius(
    m: &FinslerMetric,
    p: &[f64],
    y: &[f64],
    r_max: f64,
) -> Result<Option<f64>> {
    let dt = (r_max / 1000.0).min(0.01);
    let path = propagate_jacobi_frame(m, p, y, &time_grid(r_max, dt))?;
    let frames = &path.frames;
    let dets: Vec<f64> = frames.iter().map(JacobiFrame::signed_det).collect();
    let lams: Vec<f64> = frames.iter().map(|f| f.min_gram_eigenvalue(m)).collect();
    let mut lam_max: f64 = 0.0;
    for i in 1..frames.len() {
        lam_max = lam_max.max(lams[i]);
        if dets[i - 1] != 0.0 && dets[i - 1].signum() != dets[i].signum() && i > 1 {
            return bisect_conjugate(m, &frames[i - 1], frames[i].t, dets[i - 1]).map(Some);
        }
        if i + 1 < frames.len()
            && lams[i] <= lams[i - 1]
            && lams[i] <= lams[i + 1]
            && lams[i] < 1e-3 * lam_max
        {
            let (a, b) = (frames[i - 1].t, frames[i + 1].t);
            let f = |t: f64| -> f64 {
                match continue_frame(m, &frames[i - 1], &[t]) {
                    Ok(p) if !p.frames.is_empty() => -p.frames[0].min_gram_eigenvalue(m),
                    _ => f64::NEG_INFINITY,
                }
            };
            let (t, neg) = golden_max(f, a, b, 1e-10);
            if -neg < 1e-8 * lam_max {
                return Ok(Some(t));
            }
        }
    }
    Ok(None)
}

fn bisect_conjugate(
    m: &FinslerMetric,
    left: &JacobiFrame,
    t_right: f64,
    sign_left: f64,
) -> Result<f64> {
    let mut lo = left.clone();
    let mut hi = t_right;
    while hi - lo.t > 1e-11 {
        let mid = 0.5 * (lo.t + hi);
        let path = continue_frame(m, &lo, &[mid])?;
        let Some(f) = path.frames.into_iter().next() else {
            return Err(FinslerError::DomainExit { arc_length: mid });
        };
        if f.signed_det().signum() == sign_left.signum() {
            lo = f;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo.t + hi))
}

/// CSV with columns `t, x1..xn, v1..vn, detJacobiGram`.
pub fn trajectory_csv(m: &FinslerMetric, frames: &[JacobiFrame]) -> String {
    let n = m.dim;
    let mut s = String::from("t");
    for i in 1..=n {
        s.push_str(&format!(",x{i}"));
    }
    for i in 1..=n {
        s.push_str(&format!(",v{i}"));
    }
    s.push_str(",detJacobiGram\n");
    for f in frames {
        s.push_str(&format!("{}", f.t));
        for c in f.x.iter().chain(&f.v) {
            s.push_str(&format!(",{c}"));
        }
        s.push_str(&format!(",{}\n", f.det_gram(m)));
    }
    s
}

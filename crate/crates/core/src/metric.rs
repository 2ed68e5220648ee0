//! Finsler structures on a single chart.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dual::Dual;
use crate::error::{FinslerError, Result};
use crate::expr::{Expr, Vars};
use crate::linalg::{dot, norm};
use crate::scalar::Scalar;

/// Chart domain in coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl Domain {
    pub fn ball(n: usize, radius: f64) -> Self {
        Domain::Ball {
            center: vec![0.0; n],
            radius,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().all(|v| v.is_finite()) && self.boundary_distance(x) > 0.0
    }

    /// Euclidean distance to the boundary (negative outside).
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        match self {
            Domain::Ball { center, radius } => {
                let d: f64 = x
                    .iter()
                    .zip(center)
                    .map(|(a, c)| (a - c) * (a - c))
                    .sum::<f64>()
                    .sqrt();
                radius - d
            }
            Domain::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(&v, (&l, &h))| (v - l).min(h - v))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Characteristic size (radius or half the shortest side).
    pub fn scale(&self) -> f64 {
        match self {
            Domain::Ball { radius, .. } => *radius,
            Domain::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(l, h)| 0.5 * (h - l))
                .fold(f64::INFINITY, f64::min),
        }
    }

    fn dim(&self) -> usize {
        match self {
            Domain::Ball { center, .. } => center.len(),
            Domain::Box { lo, .. } => lo.len(),
        }
    }
}

/// Closed-form families and user expressions.
#[derive(Clone, Debug, PartialEq)]
pub enum MetricKind {
    Euclidean,
    /// Round unit sphere in the stereographic chart, `2|y|/(1+|x|²)`.
    Sphere,
    /// Poincaré ball, `2|y|/(1-|x|²)`.
    Hyperbolic,
    Funk,
    /// `|y| + b·y`.
    RandersFlat {
        b: Vec<f64>,
    },
    /// Zermelo navigation on flat space with wind `w + ω(-x²,x¹,0,…)`.
    RandersNavigation {
        w: Vec<f64>,
        rotation: f64,
    },
    /// `|y| + f(|x|)⟨x,y⟩/|x|`.
    RandersRadial {
        f: Expr,
        series: [f64; 3],
    },
    /// `|y| + ε x¹ y¹`.
    Perturbed {
        eps: f64,
    },
    BerwaldMoor,
    Custom {
        expr: Expr,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct FinslerMetric {
    pub name: String,
    pub dim: usize,
    pub kind: MetricKind,
    pub domain: Domain,
    pub reversible: bool,
    pub known_flag_curvature: Option<f64>,
    /// S-curvature with respect to the Busemann–Hausdorff form, if constant and known.
    pub known_s_curvature: Option<f64>,
    /// Only positive on a cone; positive-definiteness checks are skipped.
    pub pseudo: bool,
}

impl FinslerMetric {
    fn base(name: &str, dim: usize, kind: MetricKind, domain: Domain) -> Self {
        FinslerMetric {
            name: name.to_string(),
            dim,
            kind,
            domain,
            reversible: false,
            known_flag_curvature: None,
            known_s_curvature: None,
            pseudo: false,
        }
    }

    pub fn euclidean(n: usize) -> Self {
        let mut m = Self::base("euclidean", n, MetricKind::Euclidean, Domain::ball(n, 1e3));
        m.reversible = true;
        m.known_flag_curvature = Some(0.0);
        m.known_s_curvature = Some(0.0);
        m
    }

    pub fn sphere(n: usize) -> Self {
        let mut m = Self::base("sphere", n, MetricKind::Sphere, Domain::ball(n, 1e4));
        m.reversible = true;
        m.known_flag_curvature = Some(1.0);
        m.known_s_curvature = Some(0.0);
        m
    }

    pub fn hyperbolic(n: usize) -> Self {
        let mut m = Self::base(
            "hyperbolic",
            n,
            MetricKind::Hyperbolic,
            Domain::ball(n, 1.0 - 1e-9),
        );
        m.reversible = true;
        m.known_flag_curvature = Some(-1.0);
        m.known_s_curvature = Some(0.0);
        m
    }

    pub fn funk(n: usize) -> Self {
        let mut m = Self::base("funk", n, MetricKind::Funk, Domain::ball(n, 1.0 - 1e-8));
        m.known_flag_curvature = Some(-0.25);
        m.known_s_curvature = Some(0.5 * (n as f64 + 1.0));
        m
    }

    pub fn randers_flat(b: Vec<f64>) -> Result<Self> {
        let n = b.len();
        if norm(&b) >= 1.0 {
            return Err(FinslerError::BetaTooLong { sup: norm(&b) });
        }
        let mut m = Self::base(
            "randers-flat",
            n,
            MetricKind::RandersFlat { b },
            Domain::ball(n, 1e3),
        );
        m.known_flag_curvature = Some(0.0);
        m.known_s_curvature = Some(0.0);
        Ok(m)
    }

    pub fn randers_navigation(w: Vec<f64>, rotation: f64, radius: f64) -> Result<Self> {
        let n = w.len();
        if n < 2 {
            return Err(FinslerError::InvalidInput(
                "navigation needs dimension >= 2".into(),
            ));
        }
        if norm(&w) + rotation.abs() * radius >= 1.0 {
            return Err(FinslerError::BetaTooLong {
                sup: norm(&w) + rotation.abs() * radius,
            });
        }
        let kind = MetricKind::RandersNavigation { w, rotation };
        Ok(Self::base(
            "randers-navigation",
            n,
            kind,
            Domain::ball(n, radius),
        ))
    }

    /// Rotating-wind navigation metric on the ball of radius 0.95 in ℝ³.
    pub fn fish_tank() -> Self {
        let mut m = Self::randers_navigation(vec![0.0; 3], 1.0, 0.95).expect("valid wind");
        m.name = "fish-tank".into();
        m.known_flag_curvature = Some(0.0);
        m.known_s_curvature = Some(0.0);
        m
    }

    pub fn randers_radial(n: usize, f: Expr, radius: f64) -> Result<Self> {
        if f.uses_xy() {
            return Err(FinslerError::InvalidInput(
                "beta profile may depend on r only".into(),
            ));
        }
        let f0 = f.eval_r(0.0f64);
        if f0.abs() > 1e-12 {
            return Err(FinslerError::InvalidInput(format!(
                "beta profile needs f(0) = 0, got {f0}"
            )));
        }
        let t = Dual::variable(Dual::variable(Dual::variable(0.0f64)));
        let d = f.eval_r(t);
        let series = [d.eps.re.re, d.eps.eps.re / 2.0, d.eps.eps.eps / 6.0];
        let sup = crate::randers::sample_sup(&f, radius)?;
        if sup >= 1.0 {
            return Err(FinslerError::BetaTooLong { sup });
        }
        let kind = MetricKind::RandersRadial { f, series };
        Ok(Self::base(
            "randers-radial",
            n,
            kind,
            Domain::ball(n, radius),
        ))
    }

    /// Negative control: `|y| + ε x¹ y¹` on the ball of radius 10.
    pub fn perturbed(n: usize, eps: f64) -> Self {
        Self::base(
            "perturbed",
            n,
            MetricKind::Perturbed { eps },
            Domain::ball(n, 10.0),
        )
    }

    pub fn berwald_moor(n: usize) -> Self {
        let mut m = Self::base(
            "berwald-moor",
            n,
            MetricKind::BerwaldMoor,
            Domain::ball(n, 1e3),
        );
        m.pseudo = true;
        m
    }

    pub fn custom(
        name: &str,
        n: usize,
        expr: Expr,
        domain: Domain,
        reversible: bool,
    ) -> Result<Self> {
        if let Some(i) = expr.max_index() {
            if i >= n {
                return Err(FinslerError::InvalidInput(format!(
                    "index {} exceeds dimension {n}",
                    i + 1
                )));
            }
        }
        let mut m = Self::base(name, n, MetricKind::Custom { expr }, domain);
        m.reversible = reversible;
        Ok(m)
    }

    /// Zoo lookup by name.
    pub fn zoo(name: &str, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(FinslerError::InvalidInput(format!(
                "dimension must be >= 2, got {n}"
            )));
        }
        match name {
            "euclidean" => Ok(Self::euclidean(n)),
            "sphere" => Ok(Self::sphere(n)),
            "hyperbolic" => Ok(Self::hyperbolic(n)),
            "funk" => Ok(Self::funk(n)),
            "randers-flat" => {
                let mut b = vec![0.0; n];
                b[0] = 0.3;
                Self::randers_flat(b)
            }
            "fish-tank" => {
                if n != 3 {
                    return Err(FinslerError::InvalidInput(
                        "fish-tank is three-dimensional".into(),
                    ));
                }
                Ok(Self::fish_tank())
            }
            "randers-radial" => Self::randers_radial(n, Expr::parse("0.5*r/(1+r)")?, 10.0),
            "perturbed" => Ok(Self::perturbed(n, 0.05)),
            "berwald-moor" => Ok(Self::berwald_moor(n)),
            _ => Err(FinslerError::InvalidInput(format!(
                "unknown zoo metric '{name}'"
            ))),
        }
    }

    pub fn zoo_names() -> &'static [&'static str] {
        &[
            "euclidean",
            "sphere",
            "hyperbolic",
            "funk",
            "randers-flat",
            "fish-tank",
            "randers-radial",
            "perturbed",
            "berwald-moor",
        ]
    }

    pub fn is_riemannian(&self) -> bool {
        matches!(
            self.kind,
            MetricKind::Euclidean | MetricKind::Sphere | MetricKind::Hyperbolic
        )
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim || !self.domain.contains(x) {
            return Err(FinslerError::DomainViolation { x: x.to_vec() });
        }
        Ok(())
    }

    /// `F(x, y)` for any scalar type.
    pub fn eval<T: Scalar>(&self, x: &[T], y: &[T]) -> T {
        let one = T::one();
        match &self.kind {
            MetricKind::Euclidean => norm(y),
            MetricKind::Sphere => T::cst(2.0) * norm(y) / (one + dot(x, x)),
            MetricKind::Hyperbolic => T::cst(2.0) * norm(y) / (one - dot(x, x)),
            MetricKind::Funk => {
                let xx = dot(x, x);
                let yy = dot(y, y);
                let xy = dot(x, y);
                ((yy * (one - xx) + xy * xy).sqrt() + xy) / (one - xx)
            }
            MetricKind::RandersFlat { b } => {
                norm(y)
                    + b.iter()
                        .zip(y)
                        .fold(T::zero(), |acc, (&bi, &yi)| acc + T::cst(bi) * yi)
            }
            MetricKind::RandersNavigation { w, rotation } => {
                let wind = self.wind(w, *rotation, x);
                let lambda = one - dot(&wind, &wind);
                let wy = dot(&wind, y);
                ((lambda * dot(y, y) + wy * wy).sqrt() - wy) / lambda
            }
            MetricKind::RandersRadial { f, series } => {
                let rho = dot(x, x).sqrt();
                let k = if rho.re() < 1e-5 {
                    T::cst(series[0]) + rho * (T::cst(series[1]) + rho * T::cst(series[2]))
                } else {
                    f.eval_r(rho) / rho
                };
                norm(y) + k * dot(x, y)
            }
            MetricKind::Perturbed { eps } => norm(y) + T::cst(*eps) * x[0] * y[0],
            MetricKind::BerwaldMoor => {
                let p = y.iter().fold(one, |acc, &v| acc * v);
                p.powf(T::cst(1.0 / self.dim as f64))
            }
            MetricKind::Custom { expr } => expr.eval(&Vars { x, y, r: T::zero() }),
        }
    }

    fn wind<T: Scalar>(&self, w: &[f64], rotation: f64, x: &[T]) -> Vec<T> {
        let mut v: Vec<T> = w.iter().map(|&a| T::cst(a)).collect();
        let om = T::cst(rotation);
        v[0] = v[0] - om * x[1];
        v[1] = v[1] + om * x[0];
        v
    }

    /// Plain `f64` evaluation.
    pub fn f(&self, x: &[f64], y: &[f64]) -> f64 {
        self.eval(x, y)
    }

    /// Scale `y` to unit `F`-length.
    pub fn normalize(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        let f = self.f(x, y);
        if !(f > 0.0) || !f.is_finite() {
            return Err(FinslerError::InvalidInput(format!(
                "F(x, y) = {f} is not positive"
            )));
        }
        Ok(y.iter().map(|v| v / f).collect())
    }

    pub fn from_spec(spec: &MetricSpec) -> Result<Self> {
        let n = spec.dim;
        if n < 2 {
            return Err(FinslerError::InvalidInput(format!(
                "dimension must be >= 2, got {n}"
            )));
        }
        let p = &spec.params;
        let domain = match p.get("domain") {
            Some(d) => {
                let d: Domain = serde_json::from_value(d.clone())
                    .map_err(|e| FinslerError::InvalidInput(format!("domain: {e}")))?;
                if d.dim() != n {
                    return Err(FinslerError::InvalidInput(
                        "domain dimension mismatch".into(),
                    ));
                }
                Some(d)
            }
            None => None,
        };
        let vec_param = |key: &str| -> Result<Option<Vec<f64>>> {
            match p.get(key) {
                None => Ok(None),
                Some(v) => {
                    let v: Vec<f64> = serde_json::from_value(v.clone())
                        .map_err(|e| FinslerError::InvalidInput(format!("{key}: {e}")))?;
                    if v.len() != n {
                        return Err(FinslerError::InvalidInput(format!(
                            "{key} must have {n} entries"
                        )));
                    }
                    Ok(Some(v))
                }
            }
        };
        let str_param = |key: &str| -> Result<&str> {
            p.get(key).and_then(Value::as_str).ok_or_else(|| {
                FinslerError::InvalidInput(format!("missing string parameter '{key}'"))
            })
        };
        let mut m = match spec.kind.as_str() {
            "euclidean" => Self::euclidean(n),
            "sphere" => Self::sphere(n),
            "hyperbolic" => Self::hyperbolic(n),
            "funk" => Self::funk(n),
            "berwald-moor" => Self::berwald_moor(n),
            "fish-tank" => Self::zoo("fish-tank", n)?,
            "randers-flat" => Self::randers_flat(vec_param("b")?.unwrap_or_else(|| vec![0.0; n]))?,
            "randers-navigation" => {
                let w = vec_param("w")?.unwrap_or_else(|| vec![0.0; n]);
                let rotation = p.get("rotation").and_then(Value::as_f64).unwrap_or(0.0);
                let radius = match &domain {
                    Some(d) => d.scale(),
                    None => 0.95,
                };
                Self::randers_navigation(w, rotation, radius)?
            }
            "randers-radial" => {
                let f = Expr::parse(str_param("f")?)?;
                let radius = domain.as_ref().map(Domain::scale).unwrap_or(10.0);
                Self::randers_radial(n, f, radius)?
            }
            "custom-expression" => {
                let expr = Expr::parse(str_param("F")?)?;
                let reversible = p
                    .get("reversible")
                    .and_then(Value::as_bool)
                    .unwrap_or(false);
                let d = domain.clone().unwrap_or_else(|| Domain::ball(n, 1.0));
                Self::custom(&spec.name, n, expr, d, reversible)?
            }
            other => {
                return Err(FinslerError::InvalidInput(format!(
                    "unknown metric kind '{other}'"
                )))
            }
        };
        if let Some(d) = domain {
            m.domain = d;
        }
        if !spec.name.is_empty() {
            m.name = spec.name.clone();
        }
        Ok(m)
    }

    pub fn from_json(src: &str) -> Result<Self> {
        let spec: MetricSpec = serde_json::from_str(src)
            .map_err(|e| FinslerError::InvalidInput(format!("metric spec: {e}")))?;
        Self::from_spec(&spec)
    }
}

/// JSON form of a metric.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricSpec {
    #[serde(default)]
    pub name: String,
    pub dim: usize,
    pub kind: String,
    #[serde(default)]
    pub params: Value,
}

//! Harmonic Randers spaces over the rank-one symmetric spaces: analytic
//! density tables and the numeric check on the flat base.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{FinslerError, Result};
use crate::expr::Expr;
use crate::harmonic::default_profile;
use crate::measure::VolumeForm;
use crate::metric::FinslerMetric;
use crate::quadrature::gauss_legendre;

/// Supremum of `|f|` over `[0, r_max]` by dense sampling.
pub fn sample_sup(f: &Expr, r_max: f64) -> Result<f64> {
    let n = 20_000;
    let mut sup: f64 = 0.0;
    for k in 0..=n {
        let r = r_max * k as f64 / n as f64;
        let v = f.eval_r(r);
        if !v.is_finite() {
            return Err(FinslerError::InvalidInput(format!(
                "f is not finite at r = {r}"
            )));
        }
        sup = sup.max(v.abs());
    }
    Ok(sup)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpaceFormFamily {
    Rn,
    Sn,
    RHn,
    CPn,
    CHn,
    HPn,
    HHn,
    CaP2,
    CaH2,
}

impl SpaceFormFamily {
    pub const ALL: [SpaceFormFamily; 9] = [
        SpaceFormFamily::Rn,
        SpaceFormFamily::Sn,
        SpaceFormFamily::RHn,
        SpaceFormFamily::CPn,
        SpaceFormFamily::CHn,
        SpaceFormFamily::HPn,
        SpaceFormFamily::HHn,
        SpaceFormFamily::CaP2,
        SpaceFormFamily::CaH2,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            SpaceFormFamily::Rn => "ℝⁿ",
            SpaceFormFamily::Sn => "Sⁿ",
            SpaceFormFamily::RHn => "ℝHⁿ",
            SpaceFormFamily::CPn => "ℂPⁿ",
            SpaceFormFamily::CHn => "ℂHⁿ",
            SpaceFormFamily::HPn => "ℍPⁿ",
            SpaceFormFamily::HHn => "ℍHⁿ",
            SpaceFormFamily::CaP2 => "CaP²",
            SpaceFormFamily::CaH2 => "CaH²",
        }
    }

    pub fn is_compact(&self) -> bool {
        matches!(
            self,
            SpaceFormFamily::Sn
                | SpaceFormFamily::CPn
                | SpaceFormFamily::HPn
                | SpaceFormFamily::CaP2
        )
    }

    /// Density `r ↦ σ̄(r)` of the normalized Riemannian metric as a string.
    pub fn symbolic(&self) -> &'static str {
        match self {
            SpaceFormFamily::Rn => "r^{n−1}",
            SpaceFormFamily::Sn => "sin^{n−1}(r)",
            SpaceFormFamily::RHn => "sinh^{n−1}(r)",
            SpaceFormFamily::CPn => "sin^{2n−1}(r) cos(r)",
            SpaceFormFamily::CHn => "sinh^{2n−1}(r) cosh(r)",
            SpaceFormFamily::HPn => "sin^{4n−1}(r) cos³(r)",
            SpaceFormFamily::HHn => "sinh^{4n−1}(r) cosh³(r)",
            SpaceFormFamily::CaP2 => "sin¹⁵(r) cos⁷(r)",
            SpaceFormFamily::CaH2 => "sinh¹⁵(r) cosh⁷(r)",
        }
    }
}

/// A rank-one symmetric space with its family parameter (the real, complex
/// or quaternionic dimension; ignored for the Cayley planes).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceFormBase {
    pub family: SpaceFormFamily,
    pub n: usize,
}

impl SpaceFormBase {
    pub fn new(family: SpaceFormFamily, n: usize) -> Result<Self> {
        if n < 1
            || (matches!(
                family,
                SpaceFormFamily::Rn | SpaceFormFamily::Sn | SpaceFormFamily::RHn
            ) && n < 2)
        {
            return Err(FinslerError::InvalidInput(format!(
                "dimension parameter {n} too small for {}",
                family.label()
            )));
        }
        Ok(SpaceFormBase { family, n })
    }

    pub fn real_dim(&self) -> usize {
        use SpaceFormFamily::*;
        match self.family {
            Rn | Sn | RHn => self.n,
            CPn | CHn => 2 * self.n,
            HPn | HHn => 4 * self.n,
            CaP2 | CaH2 => 16,
        }
    }

    pub fn density(&self, r: f64) -> f64 {
        use SpaceFormFamily::*;
        let n = self.n as i32;
        match self.family {
            Rn => r.powi(n - 1),
            Sn => r.sin().powi(n - 1),
            RHn => r.sinh().powi(n - 1),
            CPn => r.sin().powi(2 * n - 1) * r.cos(),
            CHn => r.sinh().powi(2 * n - 1) * r.cosh(),
            HPn => r.sin().powi(4 * n - 1) * r.cos().powi(3),
            HHn => r.sinh().powi(4 * n - 1) * r.cosh().powi(3),
            CaP2 => r.sin().powi(15) * r.cos().powi(7),
            CaH2 => r.sinh().powi(15) * r.cosh().powi(7),
        }
    }

    /// End of the regular range (first zero of the density), if compact.
    pub fn regular_range(&self) -> Option<f64> {
        use std::f64::consts::{FRAC_PI_2, PI};
        match self.family {
            SpaceFormFamily::Sn => Some(PI),
            SpaceFormFamily::CPn | SpaceFormFamily::HPn | SpaceFormFamily::CaP2 => Some(FRAC_PI_2),
            _ => None,
        }
    }
}

/// The length `f(r) = ‖β‖_α` of the Randers one-form as a radial function.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialBetaProfile {
    pub source: String,
    pub expr: Expr,
    /// Range on which the bound was verified.
    pub r_max: f64,
    pub sup_bound: f64,
}

impl RadialBetaProfile {
    pub fn parse(source: &str, r_max: f64) -> Result<Self> {
        let expr = Expr::parse(source)?;
        if expr.uses_xy() {
            return Err(FinslerError::InvalidInput("f may only depend on r".into()));
        }
        let sup_bound = sample_sup(&expr, r_max)?;
        if sup_bound >= 1.0 {
            return Err(FinslerError::BetaTooLong { sup: sup_bound });
        }
        let n = 20_000;
        if let Some(k) = (0..=n).find(|&k| expr.eval_r(r_max * k as f64 / n as f64) < 0.0) {
            let r = r_max * k as f64 / n as f64;
            return Err(FinslerError::InvalidInput(format!(
                "f is negative at r = {r}"
            )));
        }
        Ok(RadialBetaProfile {
            source: source.to_string(),
            expr,
            r_max,
            sup_bound,
        })
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.expr.eval_r(r)
    }

    /// `∫_0^s f`.
    pub fn integral(&self, s: f64) -> f64 {
        let (nodes, weights) = gauss_legendre(64);
        0.5 * s
            * nodes
                .iter()
                .zip(&weights)
                .map(|(t, w)| w * self.eval(0.5 * s * (t + 1.0)))
                .sum::<f64>()
    }
}

/// Four closed-form densities of a harmonic Randers space.
#[derive(Clone, Debug, PartialEq)]
pub struct RandersDensityTable {
    pub base: SpaceFormBase,
    pub f: RadialBetaProfile,
}

/// Symbolic factor multiplying the base density.
pub fn factor_symbolic(kind: VolumeForm) -> &'static str {
    match kind {
        VolumeForm::HolmesThompson => "",
        VolumeForm::BusemannHausdorff => "[1 − f²(r)]^{(n+1)/2}",
        VolumeForm::Max => "[1 + f(r)]^{n+1}",
        VolumeForm::Min => "[1 − f(r)]^{n+1}",
    }
}

/// Factor multiplying the base density in real dimension `n`.
pub fn table_factor(kind: VolumeForm, f: f64, n: usize) -> f64 {
    let e = n as f64 + 1.0;
    match kind {
        VolumeForm::HolmesThompson => 1.0,
        VolumeForm::BusemannHausdorff => (1.0 - f * f).powf(0.5 * e),
        VolumeForm::Max => (1.0 + f).powf(e),
        VolumeForm::Min => (1.0 - f).powf(e),
    }
}

pub fn build_randers_table(
    base: SpaceFormBase,
    f: RadialBetaProfile,
) -> Result<RandersDensityTable> {
    if f.sup_bound >= 1.0 {
        return Err(FinslerError::BetaTooLong { sup: f.sup_bound });
    }
    Ok(RandersDensityTable { base, f })
}

impl RandersDensityTable {
    pub fn density(&self, kind: VolumeForm, r: f64) -> f64 {
        self.base.density(r) * table_factor(kind, self.f.eval(r), self.base.real_dim())
    }

    pub fn symbolic(&self, kind: VolumeForm) -> String {
        format!("{}{}", self.base.family.symbolic(), factor_symbolic(kind))
    }
}

/// Largest relative discrepancy per measure between the numeric flat
/// Randers pipeline and the analytic table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossCheck {
    pub by_measure: Vec<(VolumeForm, f64)>,
    pub max: f64,
}

/// Density of `F = |y| + f(|x|)⟨x,y⟩/|x|` around the origin, converted to
/// α-polar coordinates and compared with the `ℝⁿ` row of each table. The
/// radii are α-radii; the F-distance along a ray is `s + ∫_0^s f`.
pub fn flat_randers_cross_check(
    f: &RadialBetaProfile,
    n: usize,
    radii: &[f64],
) -> Result<CrossCheck> {
    let s_max = radii.iter().cloned().fold(0.0, f64::max);
    let m = FinslerMetric::randers_radial(n, f.expr.clone(), 1.5 * s_max + 1.0)?;
    let table = build_randers_table(SpaceFormBase::new(SpaceFormFamily::Rn, n)?, f.clone())?;
    let rho: Vec<f64> = radii.iter().map(|&s| s + f.integral(s)).collect();
    let p = vec![0.0; n];
    let mut by_measure = Vec::new();
    for kind in VolumeForm::ALL {
        let prof = default_profile(&m, kind, &p, 8, &rho)?;
        let mut worst: f64 = 0.0;
        for row in &prof.sigma_bar {
            for (j, &s) in radii.iter().enumerate() {
                let numeric = row[j] * (1.0 + f.eval(s));
                let want = table.density(kind, s);
                worst = worst.max((numeric - want).abs() / want.abs());
            }
        }
        by_measure.push((kind, worst));
    }
    let max = by_measure.iter().map(|(_, v)| *v).fold(0.0, f64::max);
    Ok(CrossCheck { by_measure, max })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TableFormat {
    Text,
    Csv,
    Markdown,
}

impl std::str::FromStr for TableFormat {
    type Err = FinslerError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "text" | "txt" => Ok(TableFormat::Text),
            "csv" => Ok(TableFormat::Csv),
            "md" | "markdown" => Ok(TableFormat::Markdown),
            _ => Err(FinslerError::InvalidInput(format!(
                "unknown table format '{s}'"
            ))),
        }
    }
}

/// Numeric columns: a profile, the family parameter and sample radii.
pub struct NumericColumns<'a> {
    pub f: &'a RadialBetaProfile,
    pub n: usize,
    pub radii: &'a [f64],
}

const TABLES: [(Option<VolumeForm>, &str); 4] = [
    (None, "Riemannian volume densities"),
    (
        Some(VolumeForm::BusemannHausdorff),
        "Randers Busemann-Hausdorff volume densities",
    ),
    (Some(VolumeForm::Max), "Randers maximum volume densities"),
    (Some(VolumeForm::Min), "Randers minimum volume densities"),
];

fn csv_field(s: &str) -> String {
    if s.contains([',', '"']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// All rows of the four density tables, optionally with numeric columns.
pub fn emit_density_tables(format: TableFormat, numeric: Option<&NumericColumns<'_>>) -> String {
    let mut out = String::new();
    let radius_headers: Vec<String> = numeric
        .map(|c| c.radii.iter().map(|r| format!("r={r}")).collect())
        .unwrap_or_default();
    if format == TableFormat::Csv {
        let mut header = vec![
            "table".to_string(),
            "space".into(),
            "compact".into(),
            "density".into(),
        ];
        header.extend(radius_headers.iter().cloned());
        out.push_str(&header.join(","));
        out.push('\n');
    }
    for (t, (kind, title)) in TABLES.iter().enumerate() {
        let kind_or_ht = kind.unwrap_or(VolumeForm::HolmesThompson);
        match format {
            TableFormat::Markdown => {
                let _ = writeln!(out, "### Table {}: {}\n", t + 1, title);
                let mut cols = vec!["Space", "Compact", "Density"];
                cols.extend(radius_headers.iter().map(|s| s.as_str()));
                let _ = writeln!(out, "| {} |", cols.join(" | "));
                let _ = writeln!(out, "|{}", "---|".repeat(cols.len()));
            }
            TableFormat::Text => {
                let _ = writeln!(out, "Table {}: {}", t + 1, title);
            }
            TableFormat::Csv => {}
        }
        for family in SpaceFormFamily::ALL {
            let formula = format!("{}{}", family.symbolic(), factor_symbolic(kind_or_ht));
            let values: Vec<String> = numeric
                .map(|c| {
                    let base = SpaceFormBase { family, n: c.n };
                    let dim = base.real_dim();
                    c.radii
                        .iter()
                        .map(|&r| {
                            format!(
                                "{:.6e}",
                                base.density(r) * table_factor(kind_or_ht, c.f.eval(r), dim)
                            )
                        })
                        .collect()
                })
                .unwrap_or_default();
            let compact = if family.is_compact() { "yes" } else { "no" };
            match format {
                TableFormat::Markdown => {
                    let mut cells = vec![
                        family.label().to_string(),
                        compact.into(),
                        format!("`{formula}`"),
                    ];
                    cells.extend(values);
                    let _ = writeln!(out, "| {} |", cells.join(" | "));
                }
                TableFormat::Text => {
                    let _ = write!(out, "  {:<6} {:<48}", family.label(), formula);
                    for v in &values {
                        let _ = write!(out, " {v:>14}");
                    }
                    out.push('\n');
                }
                TableFormat::Csv => {
                    let mut cells = vec![
                        (t + 1).to_string(),
                        family.label().to_string(),
                        compact.into(),
                        csv_field(&formula),
                    ];
                    cells.extend(values);
                    out.push_str(&cells.join(","));
                    out.push('\n');
                }
            }
        }
        if format != TableFormat::Csv {
            out.push('\n');
        }
    }
    if let (Some(c), TableFormat::Text | TableFormat::Markdown) = (numeric, format) {
        let _ = writeln!(out, "f(r) = {}, n = {}", c.f.source, c.n);
    }
    out
}

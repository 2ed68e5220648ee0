//! `finsler-lab`: polar volume densities, harmonicity reports and Randers
//! density tables from the command line.

// `!(a < b)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod svg;

use std::collections::BTreeSet;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use finsler_core::geodesic::{first_conjugate_radius, propagate_jacobi_frame, trajectory_csv};
use finsler_core::harmonic::{
    default_profile, harmonicity_report, mean_curvature_profile, profile_csv, uniform_radii,
    DensityProfile,
};
use finsler_core::measure::VolumeForm;
use finsler_core::randers::{
    emit_density_tables, flat_randers_cross_check, NumericColumns, RadialBetaProfile, TableFormat,
};
use finsler_core::{FinslerError, FinslerMetric};
use serde_json::json;

use crate::svg::{line_plot, Plot};

#[derive(Parser, Debug)]
#[command(
    name = "finsler-lab",
    version,
    about = "Volume densities and harmonicity of Finsler metrics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Polar volume density profile around a base point.
    Density(RunArgs),
    /// Harmonicity verdicts built from a density profile.
    Harmonicity(RunArgs),
    /// Randers density tables, optionally with numeric columns and the flat cross-check.
    Tables(TableArgs),
    /// Geodesic with its Jacobi frame and first conjugate radius.
    Geodesic(GeodesicArgs),
}

#[derive(Args, Debug)]
struct MetricArgs {
    /// JSON metric specification file.
    #[arg(long, conflicts_with = "zoo")]
    metric: Option<PathBuf>,
    /// Built-in metric name.
    #[arg(long)]
    zoo: Option<String>,
    /// Dimension for zoo metrics.
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Base point as comma-separated coordinates (defaults to the origin).
    #[arg(long)]
    base: Option<String>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    metric: MetricArgs,
    /// Volume form: bh, ht, max or min.
    #[arg(long, default_value = "bh")]
    measure: String,
    /// Number of sample directions.
    #[arg(long, default_value_t = 32)]
    dirs: usize,
    #[arg(long, default_value_t = 0.1)]
    rmin: f64,
    #[arg(long, default_value_t = 2.0)]
    rmax: f64,
    /// Number of radii.
    #[arg(long, default_value_t = 20)]
    rn: usize,
    /// Spread tolerance for the harmonicity verdict.
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Comma-separated subset of csv, json, svg.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args, Debug)]
struct TableArgs {
    /// Radial length of the Randers one-form, in terms of `r`.
    #[arg(long)]
    f: Option<String>,
    /// Family dimension parameter for the numeric columns.
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value_t = 0.2)]
    rmin: f64,
    #[arg(long, default_value_t = 2.0)]
    rmax: f64,
    #[arg(long, default_value_t = 10)]
    rn: usize,
    /// Skip the numeric cross-check on the flat base.
    #[arg(long)]
    no_check: bool,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Comma-separated subset of md, csv, txt.
    #[arg(long, default_value = "md")]
    format: String,
}

#[derive(Args, Debug)]
struct GeodesicArgs {
    #[command(flatten)]
    metric: MetricArgs,
    /// Initial direction as comma-separated components (normalized to unit speed).
    #[arg(long)]
    dir: String,
    #[arg(long, default_value_t = 5.0)]
    rmax: f64,
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

/// Failure with the operation it came from.
struct Failure {
    operation: &'static str,
    error: FinslerError,
}

impl Failure {
    fn exit_code(&self) -> u8 {
        if self.error.is_config_error() {
            2
        } else {
            3
        }
    }
}

trait Context<T> {
    fn during(self, operation: &'static str) -> Result<T, Failure>;
}

impl<T> Context<T> for finsler_core::Result<T> {
    fn during(self, operation: &'static str) -> Result<T, Failure> {
        self.map_err(|error| Failure { operation, error })
    }
}

fn config(msg: impl Into<String>) -> Failure {
    Failure {
        operation: "configuration",
        error: FinslerError::InvalidInput(msg.into()),
    }
}

fn parse_vector(s: &str) -> Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| config(format!("cannot parse '{t}' as a number")))
        })
        .collect()
}

fn load_metric(args: &MetricArgs) -> Result<(FinslerMetric, Vec<f64>), Failure> {
    let m = match (&args.metric, &args.zoo) {
        (Some(path), _) => {
            let src = fs::read_to_string(path)
                .map_err(|e| config(format!("cannot read {}: {e}", path.display())))?;
            FinslerMetric::from_json(&src).during("metric specification")?
        }
        (None, Some(name)) => FinslerMetric::zoo(name, args.dim).during("metric specification")?,
        (None, None) => return Err(config("one of --metric or --zoo is required")),
    };
    let base = match &args.base {
        Some(s) => parse_vector(s)?,
        None => vec![0.0; m.dim],
    };
    if base.len() != m.dim {
        return Err(config(format!(
            "base point has {} coordinates, metric dimension is {}",
            base.len(),
            m.dim
        )));
    }
    m.check_point(&base).during("base point")?;
    Ok((m, base))
}

fn formats(
    spec: Option<&str>,
    default: &[&str],
    allowed: &[&str],
) -> Result<BTreeSet<String>, Failure> {
    let list: Vec<String> = match spec {
        Some(s) => s
            .split(',')
            .map(|t| t.trim().to_ascii_lowercase())
            .filter(|t| !t.is_empty())
            .collect(),
        None => default.iter().map(|s| s.to_string()).collect(),
    };
    for f in &list {
        if !allowed.contains(&f.as_str()) {
            return Err(config(format!(
                "unsupported format '{f}', expected one of {}",
                allowed.join(", ")
            )));
        }
    }
    Ok(list.into_iter().collect())
}

fn radii(rmin: f64, rmax: f64, rn: usize) -> Result<Vec<f64>, Failure> {
    if !(rmin > 0.0 && rmax > rmin && rn >= 2) {
        return Err(config("radius grid needs 0 < rmin < rmax and rn >= 2"));
    }
    Ok(uniform_radii(rmin, rmax, rn))
}

/// All outputs are rendered in memory first; each file then lands through a
/// temporary file and an atomic rename.
fn write_outputs(dir: &Path, files: &[(String, String)]) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure {
        operation: "writing output",
        error: FinslerError::InvalidInput(format!("{}: {e}", dir.display())),
    };
    fs::create_dir_all(dir).map_err(io)?;
    let mut staged = Vec::new();
    for (name, body) in files {
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
        tmp.write_all(body.as_bytes()).map_err(io)?;
        staged.push((tmp, dir.join(name)));
    }
    for (tmp, path) in staged {
        tmp.persist(&path).map_err(|e| io(e.error))?;
    }
    Ok(())
}

fn build_profile(args: &RunArgs) -> Result<(FinslerMetric, DensityProfile), Failure> {
    let (m, base) = load_metric(&args.metric)?;
    let kind: VolumeForm = args.measure.parse().during("measure")?;
    let radii = radii(args.rmin, args.rmax, args.rn)?;
    if args.dirs < 1 {
        return Err(config("--dirs must be positive"));
    }
    let prof = default_profile(&m, kind, &base, args.dirs, &radii).during("density profile")?;
    Ok((m, prof))
}

fn profile_svgs(prof: &DensityProfile, pi: Option<&[Vec<f64>]>) -> Vec<(String, String)> {
    let series = |rows: &[Vec<f64>]| -> Vec<Vec<(f64, f64)>> {
        rows.iter()
            .map(|row| {
                prof.radii
                    .iter()
                    .copied()
                    .zip(row.iter().copied())
                    .collect()
            })
            .collect()
    };
    let title = format!("{} ({})", prof.metric, prof.measure);
    let mut out = vec![
        (
            "density.svg".to_string(),
            line_plot(
                &Plot {
                    title: &title,
                    x_label: "r",
                    y_label: "density",
                    log_y: true,
                },
                &series(&prof.sigma_bar),
            ),
        ),
        (
            "psi.svg".to_string(),
            line_plot(
                &Plot {
                    title: &title,
                    x_label: "r",
                    y_label: "density / r^(n-1)",
                    log_y: false,
                },
                &series(&prof.psi),
            ),
        ),
    ];
    if let Some(pi) = pi {
        out.push((
            "mean_curvature.svg".to_string(),
            line_plot(
                &Plot {
                    title: &title,
                    x_label: "r",
                    y_label: "mean curvature",
                    log_y: false,
                },
                &series(pi),
            ),
        ));
    }
    out
}

fn cmd_density(args: &RunArgs) -> Result<(), Failure> {
    let fmts = formats(args.format.as_deref(), &["csv"], &["csv", "svg"])?;
    let (_, prof) = build_profile(args)?;
    let pi = mean_curvature_profile(&prof).ok();
    let mut files = Vec::new();
    if fmts.contains("csv") {
        files.push(("profile.csv".to_string(), profile_csv(&prof, pi.as_deref())));
    }
    if fmts.contains("svg") {
        files.extend(profile_svgs(&prof, pi.as_deref()));
    }
    write_outputs(&args.out, &files)?;
    println!(
        "{} radii x {} directions written to {}",
        prof.radii.len(),
        prof.directions.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_harmonicity(args: &RunArgs) -> Result<(), Failure> {
    let fmts = formats(args.format.as_deref(), &["json"], &["csv", "json", "svg"])?;
    if args.dirs < 8 {
        return Err(Failure {
            operation: "harmonicity report",
            error: FinslerError::InsufficientDirections {
                needed: 8,
                got: args.dirs,
            },
        });
    }
    let (_, prof) = build_profile(args)?;
    let rep = harmonicity_report(&prof, args.tol).during("harmonicity report")?;
    let pi = mean_curvature_profile(&prof).ok();
    let mut files = Vec::new();
    if fmts.contains("json") {
        let body = serde_json::to_string_pretty(&rep.to_json()).expect("report serializes");
        files.push(("report.json".to_string(), body + "\n"));
    }
    if fmts.contains("csv") {
        files.push(("profile.csv".to_string(), profile_csv(&prof, pi.as_deref())));
    }
    if fmts.contains("svg") {
        files.extend(profile_svgs(&prof, pi.as_deref()));
        let spread: Vec<(f64, f64)> = rep
            .radii
            .iter()
            .copied()
            .zip(rep.spread.iter().copied())
            .collect();
        let title = format!("{} ({}) direction spread", prof.metric, prof.measure);
        files.push((
            "spread.svg".to_string(),
            line_plot(
                &Plot {
                    title: &title,
                    x_label: "r",
                    y_label: "spread",
                    log_y: true,
                },
                &[spread],
            ),
        ));
    }
    write_outputs(&args.out, &files)?;
    println!(
        "{}: locally harmonic = {}, infinitesimally harmonic = {}",
        rep.metric,
        rep.locally_harmonic,
        rep.infinitesimally_harmonic
            .map_or("n/a".to_string(), |b| b.to_string())
    );
    Ok(())
}

fn cmd_tables(args: &TableArgs) -> Result<(), Failure> {
    let fmts = formats(Some(&args.format), &[], &["md", "csv", "txt"])?;
    let radii = radii(args.rmin, args.rmax, args.rn)?;
    let f = match &args.f {
        Some(src) => {
            Some(RadialBetaProfile::parse(src, 2.0 * args.rmax + 1.0).during("radial one-form")?)
        }
        None => None,
    };
    if let (Some(f), false) = (&f, args.no_check) {
        let check =
            flat_randers_cross_check(f, args.n, &radii).during("flat Randers cross-check")?;
        for (kind, err) in &check.by_measure {
            println!("cross-check {kind}: max relative discrepancy {err:.3e}");
        }
        if !(check.max < 1e-3) {
            let bad: Vec<String> = check
                .by_measure
                .iter()
                .filter(|(_, e)| !(*e < 1e-3))
                .map(|(k, _)| k.to_string())
                .collect();
            return Err(Failure {
                operation: "flat Randers cross-check",
                error: FinslerError::CrossCheckFailure {
                    what: "analytic table vs numeric density",
                    a: check.max,
                    b: 0.0,
                    tol: 1e-3,
                },
            })
            .inspect_err(|_| eprintln!("measures above tolerance: {}", bad.join(", ")));
        }
    }
    let numeric = f.as_ref().map(|f| NumericColumns {
        f,
        n: args.n,
        radii: &radii,
    });
    let mut files = Vec::new();
    for (tag, format, name) in [
        ("md", TableFormat::Markdown, "tables.md"),
        ("csv", TableFormat::Csv, "tables.csv"),
        ("txt", TableFormat::Text, "tables.txt"),
    ] {
        if fmts.contains(tag) {
            files.push((
                name.to_string(),
                emit_density_tables(format, numeric.as_ref()),
            ));
        }
    }
    write_outputs(&args.out, &files)?;
    println!("tables written to {}", args.out.display());
    Ok(())
}

fn cmd_geodesic(args: &GeodesicArgs) -> Result<(), Failure> {
    let (m, base) = load_metric(&args.metric)?;
    let dir = parse_vector(&args.dir)?;
    if dir.len() != m.dim {
        return Err(config(format!(
            "direction has {} components, metric dimension is {}",
            dir.len(),
            m.dim
        )));
    }
    if !(args.rmax > 0.0 && args.dt > 0.0) {
        return Err(config("--rmax and --dt must be positive"));
    }
    let y = m.normalize(&base, &dir).during("direction")?;
    let count = (args.rmax / args.dt).ceil() as usize;
    let times: Vec<f64> = (0..=count)
        .map(|k| (k as f64 * args.dt).min(args.rmax))
        .collect();
    let path = propagate_jacobi_frame(&m, &base, &y, &times).during("jacobi frame")?;
    let conj = first_conjugate_radius(&m, &base, &y, args.rmax).during("conjugate radius")?;
    let summary = json!({
        "schema": "finsler-lab/1",
        "metric": m.name,
        "base_point": base,
        "direction": y,
        "r_max": args.rmax,
        "exit": path.exit,
        "first_conjugate_radius": conj,
    });
    let files = vec![
        (
            "trajectory.csv".to_string(),
            trajectory_csv(&m, &path.frames),
        ),
        (
            "geodesic.json".to_string(),
            serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n",
        ),
    ];
    write_outputs(&args.out, &files)?;
    let reach = path.exit.unwrap_or(args.rmax);
    match conj {
        Some(r) => println!("first conjugate radius {r:.10}"),
        None => println!("no conjugate point up to r = {reach}"),
    }
    if path.exit.is_some() {
        println!("geodesic leaves the coordinate domain at r = {reach}");
    }
    Ok(())
}

fn configure_threads() -> Result<(), Failure> {
    if let Ok(v) = std::env::var("FINSLER_LAB_THREADS") {
        let n: usize = v.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
            config(format!(
                "FINSLER_LAB_THREADS must be a positive integer, got '{v}'"
            ))
        })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| config(format!("cannot configure worker pool: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = || -> Result<(), Failure> {
        configure_threads()?;
        match &cli.command {
            Command::Density(a) => cmd_density(a),
            Command::Harmonicity(a) => cmd_harmonicity(a),
            Command::Tables(a) => cmd_tables(a),
            Command::Geodesic(a) => cmd_geodesic(a),
        }
    };
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error in {}: {}", f.operation, f.error);
            ExitCode::from(f.exit_code())
        }
    }
}

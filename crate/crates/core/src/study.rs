//! Convergence studies over uniformly refined meshes and their reports.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::analysis::{
    convergence_rates, energy_error, pressure_error, stability_ratio, superclose_error, ConvergenceRecord, ErrorReport,
};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::problem::{case_by_name, ProblemCase};
use crate::system::{solve, DofMap, Discretization};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Md,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "md" | "markdown" => Ok(Self::Md),
            "json" => Ok(Self::Json),
            _ => Err(Error::InvalidArgument(format!("unknown format '{s}' (csv, md, json)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyConfig {
    pub k: usize,
    pub n0: usize,
    pub levels: usize,
    pub case: String,
    pub format: OutputFormat,
    pub tol: f64,
    /// Every reduction here is already sequential and ordered, so runs are
    /// bitwise reproducible either way; the flag is recorded for the report.
    pub deterministic: bool,
    pub dump_mesh: Option<PathBuf>,
    pub dump_system: Option<PathBuf>,
    pub max_unknowns: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            k: 0,
            n0: 10,
            levels: 4,
            case: "paper".into(),
            format: OutputFormat::Md,
            tol: 1e-10,
            deterministic: false,
            dump_mesh: None,
            dump_system: None,
            max_unknowns: 2_000_000,
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.levels == 0 {
            return Err(Error::InvalidArgument("levels must be at least 1".into()));
        }
        if self.n0 == 0 {
            return Err(Error::InvalidArgument("n0 must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", self.tol)));
        }
        case_by_name::<f64>(&self.case)?;
        let finest = self.grid(self.levels - 1)?;
        let unknowns = DofMap::structured_count(finest, self.k);
        if unknowns > self.max_unknowns {
            return Err(Error::Budget { unknowns, budget: self.max_unknowns });
        }
        Ok(())
    }

    /// Grid count `n0 · 2^level`.
    pub fn grid(&self, level: usize) -> Result<usize> {
        u32::try_from(level)
            .ok()
            .and_then(|l| 2usize.checked_pow(l))
            .and_then(|f| f.checked_mul(self.n0))
            .ok_or_else(|| Error::InvalidArgument(format!("level {level} overflows the grid size")))
    }
}

/// Solver and monitoring data of one level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSummary {
    pub n: usize,
    pub unknowns: usize,
    pub solver: String,
    pub residual: f64,
    pub krylov_iterations: usize,
    pub max_divergence_moment: f64,
    pub pressure_mean: f64,
    pub stability_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyReport {
    pub config: StudyConfig,
    pub record: ConvergenceRecord<f64>,
    pub levels: Vec<LevelSummary>,
}

/// Appends `.n<N>` before the extension when several levels are written.
pub fn level_path(path: &Path, n: usize, levels: usize) -> PathBuf {
    if levels <= 1 {
        return path.to_path_buf();
    }
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.n{n}.{}", ext.to_string_lossy()),
        None => format!("{stem}.n{n}"),
    };
    path.with_file_name(name)
}

pub fn run_study(config: &StudyConfig) -> Result<StudyReport> {
    config.validate()?;
    let case: ProblemCase<f64> = case_by_name(&config.case)?;
    let mut errors = Vec::with_capacity(config.levels);
    let mut levels = Vec::with_capacity(config.levels);
    for level in 0..config.levels {
        let n = config.grid(level)?;
        let (report, summary) =
            run_level(config, &case, n).map_err(|e| Error::Level { level, n, source: Box::new(e) })?;
        errors.push(report);
        levels.push(summary);
    }
    Ok(StudyReport { config: config.clone(), record: convergence_rates(errors), levels })
}

fn run_level(config: &StudyConfig, case: &ProblemCase<f64>, n: usize) -> Result<(ErrorReport<f64>, LevelSummary)> {
    let mesh = Mesh::build_structured(n)?;
    if let Some(p) = &config.dump_mesh {
        mesh.write_text(&level_path(p, n, config.levels))?;
    }
    let disc = Discretization::new(mesh, config.k)?;
    let system = disc.assemble(case)?.with_tolerance(config.tol);
    if let Some(p) = &config.dump_system {
        system.dump(&level_path(p, n, config.levels))?;
    }
    let sol = solve(&system)?;
    let report = ErrorReport {
        n,
        h: 1.0 / n as f64,
        energy: energy_error(&disc, &sol.velocity, case.velocity_gradient)?,
        pressure: pressure_error(&disc, &sol.pressure, case.pressure)?,
        superclose: superclose_error(&disc, &sol.velocity, case.velocity)?,
    };
    let ratio = match stability_ratio(&disc, &sol, case.force) {
        Ok(r) => r,
        Err(Error::InvalidArgument(_)) => f64::NAN,
        Err(e) => return Err(e),
    };
    let summary = LevelSummary {
        n,
        unknowns: system.dofs.total,
        solver: sol.diagnostics.method.clone(),
        residual: sol.diagnostics.residual,
        krylov_iterations: sol.diagnostics.krylov_iterations,
        max_divergence_moment: disc.max_divergence_moment(&sol.velocity),
        pressure_mean: sol.pressure.integral(&disc.mesh)?,
        stability_ratio: ratio,
    };
    Ok((report, summary))
}

/// `2.8934e-02`: five significant digits, signed two-digit exponent.
pub fn format_error(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let s = format!("{v:.4e}");
    let (mant, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mant}e{sign}{:02}", exp.abs())
}

/// Five significant digits in fixed notation (`0.98805`, `1.0036`).
pub fn format_rate(r: f64) -> String {
    if r == 0.0 || !r.is_finite() {
        return format!("{r:.4}");
    }
    let mag = r.abs().log10().floor() as i32;
    let decimals = (4 - mag).max(0) as usize;
    format!("{r:.decimals$}")
}

fn rate_cell(r: Option<f64>, empty: &str) -> String {
    r.map(format_rate).unwrap_or_else(|| empty.to_string())
}

fn rows(record: &ConvergenceRecord<f64>) -> impl Iterator<Item = (&ErrorReport<f64>, [Option<f64>; 3])> {
    record.levels.iter().enumerate().map(|(i, e)| {
        let r = i.checked_sub(1).map(|j| record.rates[j]);
        (e, [r.and_then(|r| r.energy), r.and_then(|r| r.pressure), r.and_then(|r| r.superclose)])
    })
}

pub fn format_csv(record: &ConvergenceRecord<f64>) -> String {
    let mut s = String::from("h,energy,energy_rate,pressure,pressure_rate,superclose,superclose_rate\n");
    for (e, r) in rows(record) {
        let _ = writeln!(
            s,
            "1/{},{},{},{},{},{},{}",
            e.n,
            format_error(e.energy),
            rate_cell(r[0], ""),
            format_error(e.pressure),
            rate_cell(r[1], ""),
            format_error(e.superclose),
            rate_cell(r[2], ""),
        );
    }
    s
}

pub fn format_markdown(record: &ConvergenceRecord<f64>) -> String {
    let mut s = String::from(
        "| h | ‖∇u − ∇_w u_h‖ | rate | ‖p − p_h‖ | rate | ‖Q_h⁰u − u_h⁰‖ | rate |\n|---|---|---|---|---|---|---|\n",
    );
    for (e, r) in rows(record) {
        let _ = writeln!(
            s,
            "| 1/{} | {} | {} | {} | {} | {} | {} |",
            e.n,
            format_error(e.energy),
            rate_cell(r[0], ""),
            format_error(e.pressure),
            rate_cell(r[1], ""),
            format_error(e.superclose),
            rate_cell(r[2], ""),
        );
    }
    s
}

#[derive(Serialize)]
struct JsonRow {
    h: String,
    n: usize,
    energy: f64,
    energy_rate: Option<f64>,
    pressure: f64,
    pressure_rate: Option<f64>,
    superclose: f64,
    superclose_rate: Option<f64>,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    k: usize,
    case: &'a str,
    rows: Vec<JsonRow>,
    levels: &'a [LevelSummary],
}

/// Full-precision JSON; every float parses back to the same bits.
pub fn format_json(report: &StudyReport) -> String {
    let rows = rows(&report.record)
        .map(|(e, r)| JsonRow {
            h: format!("1/{}", e.n),
            n: e.n,
            energy: e.energy,
            energy_rate: r[0],
            pressure: e.pressure,
            pressure_rate: r[1],
            superclose: e.superclose,
            superclose_rate: r[2],
        })
        .collect();
    let out = JsonReport { k: report.config.k, case: &report.config.case, rows, levels: &report.levels };
    serde_json::to_string_pretty(&out).expect("report serializes")
}

pub fn format_report(report: &StudyReport) -> String {
    match report.config.format {
        OutputFormat::Csv => format_csv(&report.record),
        OutputFormat::Md => format_markdown(&report.record),
        OutputFormat::Json => format_json(report),
    }
}

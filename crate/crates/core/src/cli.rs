//! Config-driven experiment runner. One subcommand per estimator plus
//! the verification suite; every run writes `report.json` and `table.csv`
//! (and `verify` a `summary.json`) into the output directory.
//!
//! Exit codes: 0 success, 1 `verify` tolerance failure, 2 config/parse
//! errors, 3 quadrature non-convergence.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use serde::Deserialize;

use crate::covering::{vitali_select, verify_cover, BallFamily};
use crate::curves::{
    build_cluster_curve, calibrate_c, curve_energy_field, load_rational_json, ClusterSpec,
    MeromorphicCurve, Polynomial,
};
use crate::estimators::{
    ow_average, rho_estimate, rho_nsa_estimate, rho_tilde_estimate, translate_orbit_experiment,
    ConvergenceTable, DensityReport, NsaEvaluator, RadiusSchedule, TableRow,
};
use crate::field::{load_user_grid_csv, DensityField, QuadratureConfig, TranslateSearchConfig};
use crate::geometry::{Ball, BoxRegion, Region};
use crate::report::{write_csv, write_json};
use crate::verify::{run_suite, write_artifacts, VerifyConfig};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "brody-density",
    about = "Energy densities of measures and meromorphic curves: rho, rho_tilde, NSA densities, Vitali covering, Folner averaging"
)]
pub struct Cli {
    /// TOML experiment config; a missing file is an error, no config uses
    /// the built-in defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for report.json / table.csv artifacts.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Override the quadrature tolerance (density scale).
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    /// Seed for randomized checks.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// rho and rho_tilde of a density field.
    Density,
    /// T(r, f) and the NSA densities of a curve.
    Nsa,
    /// Build and calibrate the lattice-cluster example; run the
    /// translate-orbit experiment and the gap-radius NSA rows.
    BrodyExample,
    /// Vitali selection on a ball-family CSV.
    Vitali,
    /// Folner averaging along ball and square sequences.
    Ow,
    /// Full theorem suite; nonzero exit on any tolerance failure.
    Verify,
}

fn default_one() -> f64 {
    1.0
}
fn default_period() -> f64 {
    4.0
}
fn default_half() -> f64 {
    0.5
}
fn default_dim() -> usize {
    2
}
fn default_field_kind() -> String {
    "disk-lattice".into()
}
fn default_curve_kind() -> String {
    "identity".into()
}
fn default_n_max() -> usize {
    6
}
fn default_margin() -> f64 {
    0.1
}
fn default_outer() -> Vec<f64> {
    vec![10.0, 20.0, 40.0]
}
fn default_inner() -> Vec<f64> {
    vec![2.5, 5.0, 10.0]
}
fn default_nsa() -> Vec<f64> {
    vec![5.0, 10.0, 20.0, 40.0]
}
fn default_tolerance() -> f64 {
    1e-3
}
fn default_box_lo() -> Vec<f64> {
    vec![0.0, 0.0]
}
fn default_box_hi() -> Vec<f64> {
    vec![4.0, 4.0]
}
fn default_spacing() -> f64 {
    0.5
}
fn default_refine() -> usize {
    2
}
fn default_ball_radii() -> Vec<f64> {
    vec![5.0, 10.0, 20.0]
}
fn default_box_sides() -> Vec<f64> {
    vec![10.0, 20.0, 40.0]
}
fn default_true() -> bool {
    true
}
fn default_cluster_n_max() -> usize {
    4
}
fn default_vitali_cases() -> usize {
    1000
}
fn default_equality_tol() -> f64 {
    0.02
}

#[derive(Debug, Deserialize)]
pub struct FieldSection {
    #[serde(default = "default_field_kind")]
    pub kind: String,
    #[serde(default = "default_one")]
    pub value: f64,
    #[serde(default = "default_period")]
    pub period: f64,
    #[serde(default = "default_one")]
    pub disk_radius: f64,
    #[serde(default = "default_half")]
    pub fill: f64,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default)]
    pub axis: usize,
    #[serde(default)]
    pub path: Option<PathBuf>,
}

impl Default for FieldSection {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}

#[derive(Debug, Deserialize)]
pub struct CurveSection {
    #[serde(default = "default_curve_kind")]
    pub kind: String,
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_margin")]
    pub margin: f64,
    /// Explicit scale constant; omitted = calibrate.
    #[serde(default)]
    pub c: Option<f64>,
}

impl Default for CurveSection {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}

#[derive(Debug, Deserialize)]
pub struct ScheduleSection {
    #[serde(default = "default_outer")]
    pub outer: Vec<f64>,
    #[serde(default = "default_inner")]
    pub inner: Vec<f64>,
    #[serde(default = "default_nsa")]
    pub nsa: Vec<f64>,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}

#[derive(Debug, Deserialize)]
pub struct QuadratureSection {
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

impl Default for QuadratureSection {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}

#[derive(Debug, Deserialize)]
pub struct SearchSection {
    #[serde(default = "default_box_lo")]
    pub box_lo: Vec<f64>,
    #[serde(default = "default_box_hi")]
    pub box_hi: Vec<f64>,
    #[serde(default = "default_spacing")]
    pub spacing: f64,
    #[serde(default = "default_refine")]
    pub refine_passes: usize,
}

impl Default for SearchSection {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}

#[derive(Debug, Deserialize, Default)]
pub struct VitaliSection {
    #[serde(default)]
    pub family_csv: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
pub struct OwSection {
    #[serde(default = "default_ball_radii")]
    pub ball_radii: Vec<f64>,
    #[serde(default = "default_box_sides")]
    pub box_sides: Vec<f64>,
    #[serde(default = "default_true")]
    pub sup_translate: bool,
}

impl Default for OwSection {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}

#[derive(Debug, Deserialize)]
pub struct VerifySection {
    #[serde(default = "default_cluster_n_max")]
    pub cluster_n_max: usize,
    #[serde(default = "default_vitali_cases")]
    pub vitali_cases: usize,
    #[serde(default = "default_equality_tol")]
    pub equality_tol: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}

/// The whole experiment config; every section and field has a default so
/// an empty file (or no file) runs.
#[derive(Debug, Deserialize, Default)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub field: FieldSection,
    #[serde(default)]
    pub curve: CurveSection,
    #[serde(default)]
    pub schedules: ScheduleSection,
    #[serde(default)]
    pub quadrature: QuadratureSection,
    #[serde(default)]
    pub search: SearchSection,
    #[serde(default)]
    pub vitali: VitaliSection,
    #[serde(default)]
    pub ow: OwSection,
    #[serde(default)]
    pub verify: VerifySection,
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(ExperimentConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
                toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
            }
        }
    }

    fn build_field(&self) -> Result<DensityField> {
        let f = &self.field;
        match f.kind.as_str() {
            "constant" => DensityField::constant(f.dim, f.value),
            "disk-lattice" => DensityField::disk_lattice(f.period, f.disk_radius),
            "stripes" => DensityField::stripes(f.dim, f.period, f.fill),
            "half-space" => DensityField::half_space(f.dim, f.axis),
            "ball-indicator" => {
                Ok(DensityField::ball_indicator(Ball::centered(f.dim, f.disk_radius)?))
            }
            "user-grid" => {
                let path = f.path.as_ref().ok_or_else(|| {
                    Error::Config("field.kind = \"user-grid\" needs field.path".into())
                })?;
                load_user_grid_csv(path)
            }
            other => Err(Error::Config(format!("unknown field kind {other:?}"))),
        }
    }

    fn build_curve(&self) -> Result<MeromorphicCurve> {
        let c = &self.curve;
        match c.kind.as_str() {
            "identity" => Ok(MeromorphicCurve::identity()),
            "constant" => Ok(MeromorphicCurve::constant(Complex64::new(c.margin, 0.0))),
            "inv-square" => MeromorphicCurve::rational(
                Polynomial::from_reals(&[1.0]),
                Polynomial::from_reals(&[0.0, 0.0, 0.25]),
            ),
            "rational" => {
                let path = c.path.as_ref().ok_or_else(|| {
                    Error::Config("curve.kind = \"rational\" needs curve.path".into())
                })?;
                load_rational_json(path)
            }
            "cluster" => {
                let spec = ClusterSpec::squares(c.n_max)?;
                let scale = match c.c {
                    Some(v) => v,
                    None => calibrate_c(&spec, c.margin)?.c,
                };
                build_cluster_curve(&spec, scale)
            }
            other => Err(Error::Config(format!("unknown curve kind {other:?}"))),
        }
    }

    fn quadrature(&self, tolerance_override: Option<f64>) -> QuadratureConfig {
        QuadratureConfig::default()
            .with_tolerance(tolerance_override.unwrap_or(self.quadrature.tolerance))
    }

    fn search(&self, dim: usize) -> Result<TranslateSearchConfig> {
        if self.search.box_lo.len() != dim || self.search.box_hi.len() != dim {
            return Err(Error::Config(format!(
                "search box must have dimension {dim}"
            )));
        }
        TranslateSearchConfig::new(
            BoxRegion::new(self.search.box_lo.clone(), self.search.box_hi.clone())?,
            self.search.spacing,
            self.search.refine_passes,
        )
    }
}

const BUNDLED_VITALI_FAMILY: &str = "1, 0, 0, 2\n2, 1, 0, 1\n3, 5, 0, 1\n";

/// Run the parsed CLI, returning the process exit code.
pub fn run(cli: Cli) -> i32 {
    if let Some(workers) = cli.workers {
        // Ignore the error if a pool already exists (e.g. repeated calls
        // in tests); the cap is best-effort.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build_global();
    }
    match execute(&cli) {
        Ok(code) => code,
        Err(Error::QuadratureNonConvergence { .. }) => {
            eprintln!("error: quadrature did not converge");
            3
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn execute(cli: &Cli) -> Result<i32> {
    let config = ExperimentConfig::load(cli.config.as_deref())?;
    std::fs::create_dir_all(&cli.out)?;
    match cli.command {
        Command::Density => run_density(cli, &config),
        Command::Nsa => run_nsa(cli, &config),
        Command::BrodyExample => run_brody_example(cli, &config),
        Command::Vitali => run_vitali(cli, &config),
        Command::Ow => run_ow(cli, &config),
        Command::Verify => run_verify_cmd(cli, &config),
    }
}

fn write_reports(out: &Path, reports: &[DensityReport]) -> Result<()> {
    write_json(&out.join("report.json"), &reports)?;
    write_csv(&out.join("table.csv"), reports)
}

fn run_density(cli: &Cli, config: &ExperimentConfig) -> Result<i32> {
    let phi = config.build_field()?;
    let q = config.quadrature(cli.tolerance);
    let search = config.search(phi.dim())?;
    let outer = RadiusSchedule::outer(config.schedules.outer.clone())?;
    let inner = RadiusSchedule::inner(config.schedules.inner.clone())?;
    let mut reports = vec![rho_estimate(&phi, &outer, &search, &q)?];
    reports.push(rho_tilde_estimate(&phi, &inner, &outer, &search, &q)?);
    write_reports(&cli.out, &reports)?;
    Ok(0)
}

fn run_nsa(cli: &Cli, config: &ExperimentConfig) -> Result<i32> {
    let curve = config.build_curve()?;
    let phi = curve_energy_field(&curve);
    let q = config.quadrature(cli.tolerance);
    let sched = RadiusSchedule::nsa(config.schedules.nsa.clone())?;
    let eval = NsaEvaluator::new(&phi, &q)?;
    let rows: Vec<TableRow> = sched
        .radii
        .iter()
        .map(|&r| {
            Ok(TableRow {
                r: None,
                radius: r,
                estimate: eval.characteristic(r)?,
                error_bound: q.tolerance * (1.0 + r * r),
                flags: Vec::new(),
            })
        })
        .collect::<Result<_>>()?;
    let extrapolated = rows.last().map(|r| r.estimate).unwrap_or(0.0);
    let characteristic = DensityReport {
        functional: "nsa_characteristic".into(),
        table: ConvergenceTable {
            rows,
            extrapolated,
            trend_note: "T(r, f); see NSA rows for the density".into(),
        },
        config_echo: format!("r in {:?}", sched.radii),
    };
    let nsa = rho_nsa_estimate(&phi, &sched, &q)?;
    let reports = vec![characteristic, nsa.upper, nsa.lower];
    write_reports(&cli.out, &reports)?;
    if phi.clipping_occurred() {
        eprintln!("warning: curve energy clipped at 1 (input is not Brody)");
    }
    Ok(0)
}

fn run_brody_example(cli: &Cli, config: &ExperimentConfig) -> Result<i32> {
    let n_max = config.curve.n_max;
    let spec = ClusterSpec::squares(n_max)?;
    let cal = calibrate_c(&spec, config.curve.margin)?;
    let c = config.curve.c.unwrap_or(cal.c);
    let curve = build_cluster_curve(&spec, c)?;
    let q = config.quadrature(cli.tolerance);
    let centers: Vec<Complex64> = spec
        .centers()
        .iter()
        .map(|&a| Complex64::new(a / c, 0.0))
        .collect();
    // Window [1, 2] on the w = cz scale, where the cluster images live.
    let sched = RadiusSchedule::inner(vec![1.0 / c, 1.5 / c])?;
    let last = centers.last().unwrap().re;
    let search = TranslateSearchConfig::new(
        BoxRegion::new(
            vec![last - 2.0 / c, -2.0 / c],
            vec![last + 2.0 / c, 2.0 / c],
        )?,
        0.5 / c,
        1,
    )?;
    let experiment = translate_orbit_experiment(&curve, &centers, &sched, 2.0 / c, &search, &q)?;

    // One report per candidate center so the profiles land in table.csv.
    let reports: Vec<DensityReport> = experiment
        .profiles
        .iter()
        .map(|profile| DensityReport {
            functional: "orbit_profile".into(),
            table: ConvergenceTable {
                rows: profile
                    .averages
                    .iter()
                    .map(|&(t, v)| TableRow {
                        r: Some(profile.center[0]),
                        radius: t,
                        estimate: v,
                        error_bound: q.tolerance,
                        flags: Vec::new(),
                    })
                    .collect(),
                extrapolated: profile.inf,
                trend_note: "inf over the window".into(),
            },
            config_echo: format!("center ({}, {})", profile.center[0], profile.center[1]),
        })
        .collect();
    write_csv(&cli.out.join("table.csv"), &reports)?;
    write_json(
        &cli.out.join("report.json"),
        &serde_json::json!({
            "n_max": n_max,
            "calibration": { "c": c, "sup_dg": cal.sup_dg },
            "experiment": experiment,
        }),
    )?;
    Ok(0)
}

fn run_vitali(cli: &Cli, config: &ExperimentConfig) -> Result<i32> {
    let text = match &config.vitali.family_csv {
        Some(path) => std::fs::read_to_string(path)?,
        None => BUNDLED_VITALI_FAMILY.to_string(),
    };
    let family = BallFamily::from_csv(&text)?;
    let selected = vitali_select(&family);
    let report = verify_cover(&family, &selected)?;
    write_json(
        &cli.out.join("report.json"),
        &serde_json::json!({
            "family_size": family.len(),
            "selected": selected,
            "cover": report,
        }),
    )?;
    let mut csv = String::from("index,radius,selected\n");
    for i in 1..=family.len() {
        csv.push_str(&format!(
            "{i},{},{}\n",
            family.ball(i).radius,
            selected.contains(&i)
        ));
    }
    std::fs::write(cli.out.join("table.csv"), csv)?;
    Ok(0)
}

fn run_ow(cli: &Cli, config: &ExperimentConfig) -> Result<i32> {
    let phi = config.build_field()?;
    let q = config.quadrature(cli.tolerance);
    let search = config.search(phi.dim())?;
    let balls: Vec<Region> = config
        .ow
        .ball_radii
        .iter()
        .map(|&r| Ok(Region::Ball(Ball::centered(phi.dim(), r)?)))
        .collect::<Result<_>>()?;
    let boxes: Vec<Region> = config
        .ow
        .box_sides
        .iter()
        .map(|&n| Ok(Region::Box(BoxRegion::cube(phi.dim(), n)?)))
        .collect::<Result<_>>()?;
    let reports = vec![
        ow_average(&phi, config.ow.sup_translate, &balls, &search, &q)?,
        ow_average(&phi, config.ow.sup_translate, &boxes, &search, &q)?,
    ];
    write_reports(&cli.out, &reports)?;
    Ok(0)
}

fn run_verify_cmd(cli: &Cli, config: &ExperimentConfig) -> Result<i32> {
    let cfg = VerifyConfig {
        seed: cli.seed.unwrap_or(0),
        tolerance: cli.tolerance.unwrap_or(config.quadrature.tolerance),
        equality_tol: config.verify.equality_tol,
        outer_radii: config.schedules.outer.clone(),
        inner_radii: config.schedules.inner.clone(),
        nsa_radii: config.schedules.nsa.clone(),
        search_spacing: config.search.spacing,
        cluster_n_max: config.verify.cluster_n_max,
        vitali_cases: config.verify.vitali_cases,
    };
    let run = run_suite(&cfg)?;
    write_artifacts(&run, &cli.out)?;
    for check in &run.summary.checks {
        println!(
            "{}: {} (margin {:.5}) — {}",
            check.name,
            if check.passed { "pass" } else { "FAIL" },
            check.margin,
            check.detail
        );
    }
    Ok(if run.summary.all_passed { 0 } else { 1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_has_defaults() {
        let config = ExperimentConfig::load(None).unwrap();
        assert_eq!(config.field.kind, "disk-lattice");
        assert_eq!(config.schedules.outer, vec![10.0, 20.0, 40.0]);
        assert_eq!(config.verify.vitali_cases, 1000);
        assert!(config.build_field().is_ok());
        assert!(config.build_curve().is_ok());
    }

    #[test]
    fn toml_overrides_apply() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.toml");
        std::fs::write(
            &path,
            "[field]\nkind = \"constant\"\nvalue = 0.5\n\n[schedules]\nouter = [2.0, 4.0]\n",
        )
        .unwrap();
        let config = ExperimentConfig::load(Some(&path)).unwrap();
        assert_eq!(config.field.kind, "constant");
        assert_eq!(config.schedules.outer, vec![2.0, 4.0]);
        assert_eq!(config.schedules.inner, vec![2.5, 5.0, 10.0]);
    }

    #[test]
    fn bad_toml_is_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.toml");
        std::fs::write(&path, "[field\nkind = oops").unwrap();
        assert!(matches!(
            ExperimentConfig::load(Some(&path)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn unknown_kinds_rejected() {
        let mut config = ExperimentConfig::default();
        config.field.kind = "plasma".into();
        assert!(config.build_field().is_err());
        config.curve.kind = "plasma".into();
        assert!(config.build_curve().is_err());
    }

    #[test]
    fn bundled_vitali_family_parses() {
        let family = BallFamily::from_csv(BUNDLED_VITALI_FAMILY).unwrap();
        assert_eq!(vitali_select(&family), vec![1, 3]);
    }
}

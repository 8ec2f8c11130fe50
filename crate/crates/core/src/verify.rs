//! Theorem-verification harness: finite-schedule checks of the density
//! identities (Vitali covering, the NSA closed form, the periodic-field
//! equality rho = rho_tilde, family consistency, Folner independence,
//! monotonicity, Brody bounds, the lattice-cluster density split, and the
//! ordering chain rho_nsa_lower <= rho_nsa <= rho).
//!
//! Each check returns a pass/fail outcome with a numeric margin; the
//! suite writes `report.json`, `table.csv` and `summary.json`.

use std::path::Path;

use num_complex::Complex64;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::covering::{random_family, verify_cover, vitali_select};
use crate::curves::{
    brody_constant, build_cluster_curve, calibrate_c, curve_energy_field, ClusterSpec,
    MeromorphicCurve, Polynomial,
};
use crate::estimators::{
    nsa_characteristic, ow_average, rho_estimate, rho_family_estimate, rho_nsa_estimate,
    rho_tilde_estimate, translate_orbit_experiment, DensityReport, NsaEvaluator, RadiusSchedule,
};
use crate::field::{DensityField, QuadratureConfig, TranslateSearchConfig};
use crate::geometry::{Ball, BoxRegion, Region};
use crate::Result;

/// Scale knobs for the suite. Defaults run the field checks at full
/// schedule (R up to 40) and the lattice-cluster checks at a reduced
/// cluster count so a `verify` run stays in the minutes range.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Quadrature tolerance on the density (mass / volume) scale.
    pub tolerance: f64,
    /// Tolerance for the theorem equality checks.
    pub equality_tol: f64,
    pub outer_radii: Vec<f64>,
    pub inner_radii: Vec<f64>,
    pub nsa_radii: Vec<f64>,
    pub search_spacing: f64,
    pub cluster_n_max: usize,
    pub vitali_cases: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: 0,
            tolerance: 1e-3,
            equality_tol: 0.02,
            outer_radii: vec![10.0, 20.0, 40.0],
            inner_radii: vec![2.5, 5.0, 10.0],
            nsa_radii: vec![5.0, 10.0, 20.0, 40.0],
            search_spacing: 0.5,
            cluster_n_max: 4,
            vitali_cases: 1000,
        }
    }
}

impl VerifyConfig {
    fn quadrature(&self) -> QuadratureConfig {
        QuadratureConfig::default().with_tolerance(self.tolerance)
    }
}

/// One named check with its measured margin (positive = passed by that
/// much, in the units stated in `detail`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub margin: f64,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str, passed: bool, margin: f64, detail: String) -> Self {
        CheckOutcome {
            name: name.into(),
            passed,
            margin,
            detail,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifySummary {
    pub checks: Vec<CheckOutcome>,
    pub all_passed: bool,
}

/// Full suite output: the summary plus every density report produced
/// along the way (for `report.json` / `table.csv`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyRun {
    pub summary: VerifySummary,
    pub reports: Vec<DensityReport>,
}

/// The periodic disk-lattice test field: period-4 lattice of unit disks,
/// area fraction pi/16.
pub fn disk_lattice_field() -> DensityField {
    DensityField::disk_lattice(4.0, 1.0).expect("valid lattice")
}

/// Period-4 stripes of fill 1/2.
pub fn stripe_field() -> DensityField {
    DensityField::stripes(2, 4.0, 0.5).expect("valid stripes")
}

fn search_over(lo: [f64; 2], hi: [f64; 2], spacing: f64) -> TranslateSearchConfig {
    TranslateSearchConfig::new(
        BoxRegion::new(lo.to_vec(), hi.to_vec()).expect("valid box"),
        spacing,
        1,
    )
    .expect("valid search")
}

/// 1000-seeded-family covering check (Vitali greedy selection passes the
/// exact verifier in every dimension).
pub fn check_vitali(cases: usize, seed: u64) -> CheckOutcome {
    // No wall-clock data here: the outcome is serialized into the run
    // artifacts, which must be byte-identical across reruns. Runtime
    // budgets are enforced by the caller.
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0usize;
    for case in 0..cases {
        let dim = 1 + case % 3;
        let family = random_family(&mut rng, dim);
        let selected = vitali_select(&family);
        let report = verify_cover(&family, &selected).expect("valid selection indices");
        if !report.ok {
            violations += 1;
        }
    }
    CheckOutcome::new(
        "vitali_covering",
        violations == 0,
        cases as f64 - violations as f64,
        format!("{cases} families, {violations} violations"),
    )
}

/// NSA characteristic against the closed form for f(z) = z, plus
/// monotone decay of the density rows.
pub fn check_nsa_closed_form() -> CheckOutcome {
    let phi = curve_energy_field(&MeromorphicCurve::identity());
    let q = QuadratureConfig::default();
    let oracle = |r: f64| std::f64::consts::PI / 2.0 * ((1.0 + r * r) / 2.0).ln();
    let mut worst = 0.0f64;
    for &r in &[2.0, std::f64::consts::E, 10.0, 40.0] {
        match nsa_characteristic(&phi, r, &q) {
            Ok(t) => worst = worst.max((t - oracle(r)).abs() / oracle(r)),
            Err(e) => {
                return CheckOutcome::new(
                    "nsa_closed_form",
                    false,
                    f64::NEG_INFINITY,
                    format!("T({r}) failed: {e}"),
                )
            }
        }
    }
    let sched = RadiusSchedule::nsa(vec![2.0, std::f64::consts::E, 10.0, 40.0]).unwrap();
    let rows_monotone = match rho_nsa_estimate(&phi, &sched, &q) {
        Ok(reports) => reports
            .upper
            .table
            .rows
            .windows(2)
            .all(|w| w[1].estimate < w[0].estimate),
        Err(_) => false,
    };
    let passed = worst <= 1e-4 && rows_monotone;
    CheckOutcome::new(
        "nsa_closed_form",
        passed,
        1e-4 - worst,
        format!("worst relative error {worst:.2e}; rows monotone: {rows_monotone}"),
    )
}

/// rho vs rho_tilde vs the analytic area fraction for one periodic field.
/// Returns the outcome and the two reports (for the monotonicity check).
pub fn check_density_equality(
    name: &str,
    phi: &DensityField,
    fraction: f64,
    cfg: &VerifyConfig,
) -> Result<(CheckOutcome, Vec<DensityReport>)> {
    // Indicator-valued fields converge only linearly in the grid spacing,
    // so allow two extra refinement levels beyond the default cap; smooth
    // fields converge earlier and never reach them.
    let q = cfg.quadrature().with_max_levels(10);
    let fallback = BoxRegion::new(vec![0.0, 0.0], vec![4.0, 4.0])?;
    let search = TranslateSearchConfig::for_field(phi, fallback, cfg.search_spacing)?;
    let outer = RadiusSchedule::outer(cfg.outer_radii.clone())?;
    let inner = RadiusSchedule::inner(cfg.inner_radii.clone())?;
    let rho = rho_estimate(phi, &outer, &search, &q)?;
    let tilde = rho_tilde_estimate(phi, &inner, &outer, &search, &q)?;
    let gap = (rho.table.extrapolated - tilde.table.extrapolated).abs();
    let off_rho = (rho.table.extrapolated - fraction).abs();
    let off_tilde = (tilde.table.extrapolated - fraction).abs();
    let worst = gap.max(off_rho).max(off_tilde);
    let outcome = CheckOutcome::new(
        &format!("density_equality_{name}"),
        worst <= cfg.equality_tol,
        cfg.equality_tol - worst,
        format!(
            "rho {:.5}, rho_tilde {:.5}, analytic {fraction:.5}; worst deviation {worst:.5}",
            rho.table.extrapolated, tilde.table.extrapolated
        ),
    );
    Ok((outcome, vec![rho, tilde]))
}

/// Family density over a translate grid vs the single-field rho.
pub fn check_family_consistency(
    cfg: &VerifyConfig,
) -> Result<(CheckOutcome, Vec<DensityReport>)> {
    let q = cfg.quadrature();
    let phi = disk_lattice_field();
    let mut members = Vec::new();
    let mut shift = [0.0f64; 2];
    while shift[0] < 4.0 {
        shift[1] = 0.0;
        while shift[1] < 4.0 {
            members.push(phi.translate(&shift)?);
            shift[1] += 0.5;
        }
        shift[0] += 0.5;
    }
    let outer = RadiusSchedule::outer(cfg.outer_radii.clone())?;
    let family = rho_family_estimate(&members, &outer, &q)?;
    let search = TranslateSearchConfig::for_field(
        &phi,
        BoxRegion::new(vec![0.0, 0.0], vec![4.0, 4.0])?,
        cfg.search_spacing,
    )?;
    let rho = rho_estimate(&phi, &outer, &search, &q)?;
    let gap = (family.table.extrapolated - rho.table.extrapolated).abs();
    let outcome = CheckOutcome::new(
        "family_consistency",
        gap <= cfg.equality_tol,
        cfg.equality_tol - gap,
        format!(
            "family {:.5} vs single-field rho {:.5} over {} translates",
            family.table.extrapolated,
            rho.table.extrapolated,
            members.len()
        ),
    );
    Ok((outcome, vec![family, rho]))
}

/// Ornstein-Weiss averages along balls vs squares agree with each other
/// and with the analytic fraction.
pub fn check_ow_independence(cfg: &VerifyConfig) -> Result<(CheckOutcome, Vec<DensityReport>)> {
    let q = cfg.quadrature();
    let phi = disk_lattice_field();
    let search = TranslateSearchConfig::for_field(
        &phi,
        BoxRegion::new(vec![0.0, 0.0], vec![4.0, 4.0])?,
        cfg.search_spacing,
    )?;
    let balls: Vec<Region> = [5.0, 10.0, 20.0]
        .iter()
        .map(|&r| Ok(Region::Ball(Ball::centered(2, r)?)))
        .collect::<Result<_>>()?;
    let squares: Vec<Region> = [10.0, 20.0, 40.0]
        .iter()
        .map(|&n| Ok(Region::Box(BoxRegion::cube(2, n)?)))
        .collect::<Result<_>>()?;
    let via_balls = ow_average(&phi, true, &balls, &search, &q)?;
    let via_squares = ow_average(&phi, true, &squares, &search, &q)?;
    let fraction = std::f64::consts::PI / 16.0;
    let gap = (via_balls.table.extrapolated - via_squares.table.extrapolated).abs();
    let off = (via_balls.table.extrapolated - fraction)
        .abs()
        .max((via_squares.table.extrapolated - fraction).abs());
    let worst = gap.max(off);
    let outcome = CheckOutcome::new(
        "ow_independence",
        worst <= cfg.equality_tol,
        cfg.equality_tol - worst,
        format!(
            "balls {:.5} vs squares {:.5}, analytic {fraction:.5}",
            via_balls.table.extrapolated, via_squares.table.extrapolated
        ),
    );
    Ok((outcome, vec![via_balls, via_squares]))
}

/// Every rho_tilde table in the supplied reports is monotone modulo its
/// error bounds (no `non-monotone-*` flags).
pub fn check_monotonicity(reports: &[DensityReport]) -> CheckOutcome {
    let mut violations = Vec::new();
    let mut tables = 0;
    for report in reports.iter().filter(|r| r.functional == "rho_tilde") {
        tables += 1;
        for row in &report.table.rows {
            for flag in &row.flags {
                if flag.starts_with("non-monotone") {
                    violations.push(format!(
                        "(r={:?}, R={}): {flag}",
                        row.r, row.radius
                    ));
                }
            }
        }
    }
    let passed = tables > 0 && violations.is_empty();
    CheckOutcome::new(
        "rho_tilde_monotonicity",
        passed,
        -(violations.len() as f64),
        if violations.is_empty() {
            format!("{tables} tables, no violations beyond error bounds")
        } else {
            violations.join("; ")
        },
    )
}

/// A curve in the verification bundle, with the box used for Brody
/// sampling and the translate search box for its rho estimate.
pub struct BundledCurve {
    pub name: String,
    pub curve: MeromorphicCurve,
    pub brody_certified: bool,
    pub brody_probe: BoxRegion,
    pub brody_spacing: f64,
    pub search: TranslateSearchConfig,
}

/// The curve bundle: constant, identity, a dilated inverse square
/// (f(z) = 1/(0.5 z)^2), and the calibrated lattice-cluster curve.
pub fn bundled_curves(cluster_n_max: usize) -> Result<Vec<BundledCurve>> {
    let inv_square = MeromorphicCurve::rational(
        Polynomial::from_reals(&[1.0]),
        Polynomial::from_reals(&[0.0, 0.0, 0.25]),
    )?;
    let spec = ClusterSpec::squares(cluster_n_max)?;
    let cal = calibrate_c(&spec, 0.1)?;
    let cluster = build_cluster_curve(&spec, cal.c)?;
    let last_center = (cluster_n_max * cluster_n_max) as f64 / cal.c;
    // All cluster boxes and spacings live on the w = cz scale: the curve's
    // structure (pole spacing 1) spreads over 1/c in z.
    let reach = (cluster_n_max as f64 + 1.5) / cal.c;
    let small_probe = BoxRegion::new(vec![-5.0, -5.0], vec![5.0, 5.0])?;
    let origin_search = search_over([-2.0, -2.0], [2.0, 2.0], 0.5);
    Ok(vec![
        BundledCurve {
            name: "constant".into(),
            curve: MeromorphicCurve::constant(Complex64::new(2.0, 0.0)),
            brody_certified: true,
            brody_probe: small_probe.clone(),
            brody_spacing: 0.1,
            search: origin_search.clone(),
        },
        BundledCurve {
            name: "identity".into(),
            curve: MeromorphicCurve::identity(),
            brody_certified: true,
            brody_probe: small_probe.clone(),
            brody_spacing: 0.1,
            search: origin_search.clone(),
        },
        BundledCurve {
            name: "inv_square".into(),
            curve: inv_square,
            brody_certified: true,
            brody_probe: BoxRegion::new(vec![-10.0, -10.0], vec![10.0, 10.0])?,
            brody_spacing: 0.1,
            search: origin_search,
        },
        BundledCurve {
            name: format!("cluster_n{cluster_n_max}"),
            curve: cluster,
            brody_certified: true,
            brody_probe: BoxRegion::new(
                vec![-1.5 / cal.c, -reach],
                vec![last_center + reach, reach],
            )?,
            brody_spacing: 0.02 / cal.c,
            search: search_over(
                [last_center - 2.0 / cal.c, -2.0 / cal.c],
                [last_center + 2.0 / cal.c, 2.0 / cal.c],
                0.5 / cal.c,
            ),
        },
    ])
}

/// Brody bound suite: sampled |df| <= 1 + 1e-9 on each probe box and
/// T(r, f) <= pi r^2 / 2 + 1e-6 at every scheduled r.
pub fn check_brody_bounds(curves: &[BundledCurve], cfg: &VerifyConfig) -> Result<CheckOutcome> {
    let q = cfg.quadrature();
    let mut worst_sup = f64::NEG_INFINITY;
    let mut worst_t = f64::NEG_INFINITY;
    let mut detail = Vec::new();
    for bundled in curves.iter().filter(|c| c.brody_certified) {
        let est = brody_constant(&bundled.curve, &bundled.brody_probe, bundled.brody_spacing)?;
        worst_sup = worst_sup.max(est.sup);
        let phi = curve_energy_field(&bundled.curve);
        let eval = NsaEvaluator::new(&phi, &q)?;
        let mut t_excess = f64::NEG_INFINITY;
        for &r in &cfg.nsa_radii {
            let t = eval.characteristic(r)?;
            t_excess = t_excess.max(t - std::f64::consts::PI * r * r / 2.0);
        }
        worst_t = worst_t.max(t_excess);
        detail.push(format!("{}: sup|df| {:.6}", bundled.name, est.sup));
    }
    let passed = worst_sup <= 1.0 + 1e-9 && worst_t <= 1e-6;
    Ok(CheckOutcome::new(
        "brody_bounds",
        passed,
        (1.0 + 1e-9 - worst_sup).min(1e-6 - worst_t),
        detail.join("; "),
    ))
}

/// Measured data for the lattice-cluster density split.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterSplit {
    pub n_max: usize,
    pub c: f64,
    /// Best-cluster-centered inf of the energy ball averages over the
    /// profile window.
    pub floor: f64,
    pub floor_center: [f64; 2],
    /// `(gap index n, gap radius, 2 T(r) / (pi r^2))` rows.
    pub gap_rows: Vec<(usize, f64, f64)>,
}

/// Orbit floor + centered NSA rows at the inter-cluster gap radii for the
/// calibrated cluster curve. Gap radii are `(a_n + a_{n+1}) / (2c)`: the
/// poles of `f` sit at `lambda / c`, so cluster images and their midgaps
/// scale by `1/c`.
pub fn cluster_split(n_max: usize, cfg: &VerifyConfig) -> Result<ClusterSplit> {
    // The split lives on small scales. Orbit ball averages measure a
    // density of ~ 3 pi c^2 ~ 8e-4 inside a cluster image, so they run at
    // 0.1 x the configured density tolerance; the inter-gap NSA rows differ
    // by only ~1e-4 between consecutive gaps and need a further 0.1 factor.
    // Keeping the two apart matters: the tight NSA tolerance applied to the
    // orbit's sup-over-translates search multiplies its cost ~100x for no
    // extra signal.
    let q = cfg.quadrature().with_tolerance(0.1 * cfg.tolerance);
    let q_nsa = cfg.quadrature().with_tolerance(1e-2 * cfg.tolerance);
    let spec = ClusterSpec::squares(n_max)?;
    let cal = calibrate_c(&spec, 0.1)?;
    let curve = build_cluster_curve(&spec, cal.c)?;
    let centers: Vec<Complex64> = spec
        .centers()
        .iter()
        .map(|&a| Complex64::new(a / cal.c, 0.0))
        .collect();
    // Profile window [1, 2] on the w = cz scale (every cluster n >= 2 has
    // radius >= 2): wide enough to average over several poles of the
    // cluster image, narrow enough to stay inside it for every center.
    let sched = RadiusSchedule::inner(vec![1.0 / cal.c, 1.5 / cal.c])?;
    let last = centers.last().unwrap().re;
    let search = search_over(
        [last - 2.0 / cal.c, -2.0 / cal.c],
        [last + 2.0 / cal.c, 2.0 / cal.c],
        0.5 / cal.c,
    );
    let exp = translate_orbit_experiment(&curve, &centers, &sched, 2.0 / cal.c, &search, &q)?;

    let phi = curve_energy_field(&curve);
    let eval = NsaEvaluator::new(&phi, &q_nsa)?;
    let a = spec.centers();
    let ns: Vec<usize> = (2..n_max).collect();
    let rs: Vec<f64> = ns.iter().map(|&n| (a[n - 1] + a[n]) / (2.0 * cal.c)).collect();
    // One shared profile sweep for all gap radii; per-radius sweeps would
    // each pay the full ring grid out to the largest gap. No gaps exist
    // below three clusters.
    let totals = if rs.is_empty() {
        Vec::new()
    } else {
        eval.characteristics(&rs)?
    };
    let gap_rows: Vec<(usize, f64, f64)> = ns
        .iter()
        .zip(&rs)
        .zip(&totals)
        .map(|((&n, &r), &t)| (n, r, 2.0 * t / (std::f64::consts::PI * r * r)))
        .collect();
    Ok(ClusterSplit {
        n_max,
        c: cal.c,
        floor: exp.best_inf,
        floor_center: exp.best_center,
        gap_rows,
    })
}

/// Reduced split check used by `verify`: positive floor and strictly
/// decreasing gap rows at the configured cluster count.
pub fn check_cluster_split(cfg: &VerifyConfig) -> Result<(CheckOutcome, ClusterSplit)> {
    let split = cluster_split(cfg.cluster_n_max, cfg)?;
    let decreasing = split.gap_rows.windows(2).all(|w| w[1].2 < w[0].2);
    let passed = split.floor > 0.0 && decreasing;
    let outcome = CheckOutcome::new(
        "cluster_density_split",
        passed,
        split.floor,
        format!(
            "floor {:.5} at center ({:.2}, {:.2}); gap rows {:?} decreasing: {decreasing}",
            split.floor, split.floor_center[0], split.floor_center[1], split.gap_rows
        ),
    );
    Ok((outcome, split))
}

/// Ordering chain per bundled curve: lower NSA <= upper NSA <= rho
/// extrapolated + combined error.
pub fn check_inequality_chain(
    curves: &[BundledCurve],
    cfg: &VerifyConfig,
) -> Result<(CheckOutcome, Vec<DensityReport>)> {
    let q = cfg.quadrature();
    let nsa_sched = RadiusSchedule::nsa(cfg.nsa_radii.clone())?;
    let outer = RadiusSchedule::outer(cfg.outer_radii.clone())?;
    let mut reports = Vec::new();
    let mut worst_margin = f64::INFINITY;
    let mut detail = Vec::new();
    let mut passed = true;
    for bundled in curves {
        let phi = curve_energy_field(&bundled.curve);
        let nsa = rho_nsa_estimate(&phi, &nsa_sched, &q)?;
        let rho = rho_estimate(&phi, &outer, &bundled.search, &q)?;
        let lower = nsa.lower.table.extrapolated;
        let upper = nsa.upper.table.extrapolated;
        let rho_last = rho.table.rows.last().unwrap();
        let combined = rho_last.error_bound
            + nsa
                .upper
                .table
                .rows
                .iter()
                .map(|r| r.error_bound)
                .fold(0.0, f64::max);
        let ok = lower <= upper + 1e-12 && upper <= rho.table.extrapolated + combined;
        let margin = (rho.table.extrapolated + combined - upper).min(upper - lower + 1e-12);
        passed &= ok;
        worst_margin = worst_margin.min(margin);
        detail.push(format!(
            "{}: {lower:.5} <= {upper:.5} <= {:.5} + {combined:.5}",
            bundled.name, rho.table.extrapolated
        ));
        reports.push(nsa.lower);
        reports.push(nsa.upper);
        reports.push(rho);
    }
    Ok((
        CheckOutcome::new(
            "inequality_chain",
            passed,
            worst_margin,
            detail.join("; "),
        ),
        reports,
    ))
}

/// Run the whole suite with the given scale.
pub fn run_suite(cfg: &VerifyConfig) -> Result<VerifyRun> {
    let mut checks = Vec::new();
    let mut reports = Vec::new();

    checks.push(check_vitali(cfg.vitali_cases, cfg.seed));
    checks.push(check_nsa_closed_form());

    let mut tilde_reports = Vec::new();
    for (name, phi, fraction) in [
        ("disk_lattice", disk_lattice_field(), std::f64::consts::PI / 16.0),
        ("stripes", stripe_field(), 0.5),
    ] {
        let (outcome, mut rep) = check_density_equality(name, &phi, fraction, cfg)?;
        checks.push(outcome);
        tilde_reports.extend(rep.iter().cloned());
        reports.append(&mut rep);
    }

    let (outcome, mut rep) = check_family_consistency(cfg)?;
    checks.push(outcome);
    reports.append(&mut rep);

    let (outcome, mut rep) = check_ow_independence(cfg)?;
    checks.push(outcome);
    reports.append(&mut rep);

    checks.push(check_monotonicity(&tilde_reports));

    let curves = bundled_curves(cfg.cluster_n_max)?;
    checks.push(check_brody_bounds(&curves, cfg)?);

    let (outcome, _split) = check_cluster_split(cfg)?;
    checks.push(outcome);

    let (outcome, mut rep) = check_inequality_chain(&curves, cfg)?;
    checks.push(outcome);
    reports.append(&mut rep);

    let all_passed = checks.iter().all(|c| c.passed);
    Ok(VerifyRun {
        summary: VerifySummary {
            checks,
            all_passed,
        },
        reports,
    })
}

/// Write `report.json`, `table.csv` and `summary.json` into `dir`.
pub fn write_artifacts(run: &VerifyRun, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    crate::report::write_json(&dir.join("report.json"), &run.reports)?;
    crate::report::write_csv(&dir.join("table.csv"), &run.reports)?;
    crate::report::write_json(&dir.join("summary.json"), &run.summary)?;
    Ok(())
}

/// Convenience for tests: a suite scaled down to seconds.
pub fn smoke_config() -> VerifyConfig {
    VerifyConfig {
        vitali_cases: 50,
        outer_radii: vec![4.0, 8.0],
        inner_radii: vec![2.0],
        nsa_radii: vec![2.0, 4.0, 8.0],
        cluster_n_max: 2,
        ..VerifyConfig::default()
    }
}

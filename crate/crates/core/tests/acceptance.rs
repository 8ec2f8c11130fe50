//! Full-scale acceptance gate. Runs each numbered criterion once,
//! prints one pass/fail line per criterion, and exits nonzero if any
//! fail. Not a libtest harness so the lines always reach the terminal.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use brody_density::verify::{
    bundled_curves, check_brody_bounds, check_density_equality, check_family_consistency,
    check_inequality_chain, check_monotonicity, check_nsa_closed_form, check_ow_independence,
    check_vitali, cluster_split, disk_lattice_field, stripe_field, VerifyConfig,
};

struct Criterion {
    number: usize,
    name: &'static str,
    passed: bool,
}

fn record(results: &mut Vec<Criterion>, number: usize, name: &'static str, passed: bool, detail: String) {
    println!(
        "criterion {number} ({name}): {} — {detail}",
        if passed { "PASS" } else { "FAIL" }
    );
    results.push(Criterion {
        number,
        name,
        passed,
    });
}

fn budget(passed: bool, elapsed: f64, limit: f64, detail: String) -> (bool, String) {
    (
        passed && elapsed < limit,
        format!("{detail}; {elapsed:.1} s (budget {limit:.0} s)"),
    )
}

fn run_verify_into(dir: &Path, config: &Path) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_brody-density"))
        .args(["--config"])
        .arg(config)
        .args(["--out"])
        .arg(dir)
        .args(["--seed", "7", "verify"])
        .status()
        .map_err(|e| format!("spawn failed: {e}"))?;
    // Only determinism is asserted here; the reduced-scale suite is
    // allowed to report its own failures.
    let _ = status;
    Ok(())
}

fn determinism_check() -> (bool, String) {
    let tmp = match tempfile::tempdir() {
        Ok(t) => t,
        Err(e) => return (false, format!("tempdir failed: {e}")),
    };
    let config_path = tmp.path().join("config.toml");
    let config = "\
[schedules]
outer = [6.0, 12.0]
inner = [3.0]
nsa = [2.0, 4.0, 8.0]

[verify]
cluster_n_max = 2
vitali_cases = 100
";
    if let Err(e) = std::fs::write(&config_path, config) {
        return (false, format!("config write failed: {e}"));
    }
    let run_a = tmp.path().join("a");
    let run_b = tmp.path().join("b");
    for dir in [&run_a, &run_b] {
        if let Err(e) = run_verify_into(dir, &config_path) {
            return (false, e);
        }
    }
    for artifact in ["table.csv", "summary.json", "report.json"] {
        let a = std::fs::read(run_a.join(artifact));
        let b = std::fs::read(run_b.join(artifact));
        match (a, b) {
            (Ok(a), Ok(b)) if a == b => {}
            (Ok(_), Ok(_)) => return (false, format!("{artifact} differs between runs")),
            (a, b) => {
                return (
                    false,
                    format!("{artifact} unreadable: {:?} / {:?}", a.err(), b.err()),
                )
            }
        }
    }
    (true, "two seeded verify runs produced byte-identical artifacts".into())
}

fn main() {
    let cfg = VerifyConfig::default();
    let mut results = Vec::new();

    // 1: greedy covering selection verified exactly over seeded families.
    let start = Instant::now();
    let outcome = check_vitali(1000, cfg.seed);
    let (passed, detail) = budget(outcome.passed, start.elapsed().as_secs_f64(), 10.0, outcome.detail);
    record(&mut results, 1, "vitali_covering", passed, detail);

    // 2: Nevanlinna characteristic against the closed form for f(z) = z.
    let start = Instant::now();
    let outcome = check_nsa_closed_form();
    let (passed, detail) = budget(outcome.passed, start.elapsed().as_secs_f64(), 30.0, outcome.detail);
    record(&mut results, 2, "nsa_closed_form", passed, detail);

    // 3: rho = rho_tilde = analytic area fraction for two periodic fields.
    let start = Instant::now();
    let mut tilde_reports = Vec::new();
    let mut equality_passed = true;
    let mut equality_detail = Vec::new();
    for (name, phi, fraction) in [
        ("disk_lattice", disk_lattice_field(), std::f64::consts::PI / 16.0),
        ("stripes", stripe_field(), 0.5),
    ] {
        match check_density_equality(name, &phi, fraction, &cfg) {
            Ok((outcome, reports)) => {
                equality_passed &= outcome.passed;
                equality_detail.push(format!("{name}: {}", outcome.detail));
                tilde_reports.extend(reports);
            }
            Err(e) => {
                equality_passed = false;
                equality_detail.push(format!("{name}: error {e}"));
            }
        }
    }
    let (passed, detail) = budget(
        equality_passed,
        start.elapsed().as_secs_f64(),
        600.0,
        equality_detail.join(" | "),
    );
    record(&mut results, 3, "density_equality", passed, detail);

    // 4: family density over a translate grid matches the single field.
    match check_family_consistency(&cfg) {
        Ok((outcome, _)) => record(&mut results, 4, "family_consistency", outcome.passed, outcome.detail),
        Err(e) => record(&mut results, 4, "family_consistency", false, format!("error {e}")),
    }

    // 5: Ornstein-Weiss averages along balls and squares agree.
    match check_ow_independence(&cfg) {
        Ok((outcome, _)) => record(&mut results, 5, "ow_independence", outcome.passed, outcome.detail),
        Err(e) => record(&mut results, 5, "ow_independence", false, format!("error {e}")),
    }

    // 6: no monotonicity violations beyond error bounds in the rho_tilde
    // tables produced by criterion 3.
    let outcome = check_monotonicity(&tilde_reports);
    record(&mut results, 6, "rho_tilde_monotonicity", outcome.passed, outcome.detail);

    // 7 and 9 share the six-cluster bundle.
    let curves = match bundled_curves(6) {
        Ok(c) => c,
        Err(e) => {
            record(&mut results, 7, "brody_bounds", false, format!("bundle error {e}"));
            record(&mut results, 8, "cluster_split_stability", false, "bundle error".into());
            record(&mut results, 9, "inequality_chain", false, "bundle error".into());
            finish(&results);
        }
    };

    match check_brody_bounds(&curves, &cfg) {
        Ok(outcome) => record(&mut results, 7, "brody_bounds", outcome.passed, outcome.detail),
        Err(e) => record(&mut results, 7, "brody_bounds", false, format!("error {e}")),
    }

    // 8: positive orbit floor stable within 20% from 4 to 6 clusters, and
    // strictly decreasing centered density rows at the inter-cluster gaps.
    let start = Instant::now();
    let split = cluster_split(4, &cfg).and_then(|four| Ok((four, cluster_split(6, &cfg)?)));
    let (passed, detail) = match split {
        Ok((four, six)) => {
            let stable = (six.floor - four.floor).abs() <= 0.2 * six.floor;
            let decreasing = six.gap_rows.windows(2).all(|w| w[1].2 < w[0].2);
            let passed = six.floor > 0.0 && stable && decreasing;
            (
                passed,
                format!(
                    "floor {:.5} (4 clusters) vs {:.5} (6); gap rows {:?} strictly decreasing: {decreasing}",
                    four.floor, six.floor, six.gap_rows
                ),
            )
        }
        Err(e) => (false, format!("error {e}")),
    };
    let (passed, detail) = budget(passed, start.elapsed().as_secs_f64(), 1200.0, detail);
    record(&mut results, 8, "cluster_split_stability", passed, detail);

    match check_inequality_chain(&curves, &cfg) {
        Ok((outcome, _)) => record(&mut results, 9, "inequality_chain", outcome.passed, outcome.detail),
        Err(e) => record(&mut results, 9, "inequality_chain", false, format!("error {e}")),
    }

    // 10: repeated seeded verify runs are byte-identical.
    let (passed, detail) = determinism_check();
    record(&mut results, 10, "artifact_determinism", passed, detail);

    finish(&results);
}

fn finish(results: &[Criterion]) -> ! {
    let failed: Vec<String> = results
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{} ({})", c.number, c.name))
        .collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", results.len());
        std::process::exit(0);
    }
    println!("acceptance: FAILED criteria: {}", failed.join(", "));
    std::process::exit(1);
}

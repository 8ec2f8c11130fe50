//! Density functionals reported as finite convergence tables: `rho`
//! (sup-translate ball averages), `rho_tilde` (iterated sup-inf),
//! `T(r, f)` and the NSA densities, family densities, Ornstein-Weiss
//! averages over Folner sequences, and the translate-orbit experiment.
//!
//! Every limit is reported as a table over a user-supplied radius
//! schedule with the last-row (or largest-schedule) value as the headline
//! number; no extrapolation model is applied.

use std::cell::RefCell;
use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::curves::{curve_energy_field, MeromorphicCurve};
use crate::field::{
    ball_mass, ball_mass_profile, grid_search_max, region_mass, sup_translate_ball_mass,
    DensityField, QuadratureConfig, TranslateSearchConfig,
};
use crate::geometry::{ball_volume, folner_diagnostics, r_boundary_volume, Region};
use crate::{Error, Result};

/// Role of a radius schedule in a density functional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScheduleRole {
    /// Outer radii `R` in `lim_{R -> inf}`.
    OuterR,
    /// Inner radii `r` in the iterated `lim_{r -> inf}`.
    InnerR,
    /// Radii for `T(r, f)`, which requires `r >= 1`.
    NsaR,
}

/// A strictly increasing list of positive radii with a role tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusSchedule {
    pub role: ScheduleRole,
    pub radii: Vec<f64>,
}

impl RadiusSchedule {
    pub fn new(role: ScheduleRole, radii: Vec<f64>) -> Result<Self> {
        if radii.is_empty() {
            return Err(Error::InvalidInput("radius schedule is empty".into()));
        }
        if radii[0] <= 0.0 || radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(
                "schedule radii must be positive and strictly increasing".into(),
            ));
        }
        if role == ScheduleRole::NsaR && radii[0] < 1.0 {
            return Err(Error::InvalidInput(
                "NSA schedules must start at r >= 1 (T(r, f) is defined for r >= 1)".into(),
            ));
        }
        Ok(RadiusSchedule { role, radii })
    }

    pub fn outer(radii: Vec<f64>) -> Result<Self> {
        Self::new(ScheduleRole::OuterR, radii)
    }

    pub fn inner(radii: Vec<f64>) -> Result<Self> {
        Self::new(ScheduleRole::InnerR, radii)
    }

    pub fn nsa(radii: Vec<f64>) -> Result<Self> {
        Self::new(ScheduleRole::NsaR, radii)
    }

    pub fn last(&self) -> f64 {
        *self.radii.last().unwrap()
    }

    /// Trailing half of the schedule (at least one entry), the window
    /// realizing limsup/liminf.
    pub fn trailing_half(&self) -> &[f64] {
        &self.radii[self.radii.len() / 2..]
    }
}

/// One table row: `r` is set only for (r, R)-indexed functionals;
/// `radius` is the outer `R` or the profile radius `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub r: Option<f64>,
    pub radius: f64,
    pub estimate: f64,
    pub error_bound: f64,
    pub flags: Vec<String>,
}

/// Rows over a schedule plus the last-row headline value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub rows: Vec<TableRow>,
    pub extrapolated: f64,
    pub trend_note: String,
}

impl ConvergenceTable {
    fn from_rows(rows: Vec<TableRow>, extrapolated: f64) -> Self {
        let trend_note = trend_note(&rows);
        ConvergenceTable {
            rows,
            extrapolated,
            trend_note,
        }
    }
}

fn trend_note(rows: &[TableRow]) -> String {
    if rows.len() < 2 {
        return "single row; no trend".into();
    }
    let a = rows[rows.len() - 2].estimate;
    let b = rows[rows.len() - 1].estimate;
    let eps = rows[rows.len() - 1].error_bound + rows[rows.len() - 2].error_bound;
    if (a - b).abs() <= eps.max(1e-12) {
        "flat within error bounds".into()
    } else if b < a {
        "decreasing at schedule end".into()
    } else {
        "increasing at schedule end".into()
    }
}

/// A named density estimate with its convergence table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub functional: String,
    pub table: ConvergenceTable,
    pub config_echo: String,
}

/// `rho`: for each `R`, `sup_a mu(B_R(a)) / |B_R|`; the limit is read at
/// the last row.
pub fn rho_estimate(
    phi: &DensityField,
    r_sched: &RadiusSchedule,
    s: &TranslateSearchConfig,
    q: &QuadratureConfig,
) -> Result<DensityReport> {
    if r_sched.role != ScheduleRole::OuterR {
        return Err(Error::InvalidInput("rho needs an outer-R schedule".into()));
    }
    let dim = phi.dim();
    let mut rows = Vec::with_capacity(r_sched.radii.len());
    for &radius in &r_sched.radii {
        let vol = ball_volume(dim, radius)?;
        // Quadrature tolerance is on the density (mass / volume) scale.
        let sup = sup_translate_ball_mass(phi, radius, s, &q.with_tolerance(q.tolerance * vol))?;
        rows.push(TableRow {
            r: None,
            radius,
            estimate: sup.value / vol,
            error_bound: sup.error_bound / vol + q.tolerance,
            flags: Vec::new(),
        });
    }
    let extrapolated = rows.last().unwrap().estimate;
    Ok(DensityReport {
        functional: "rho".into(),
        table: ConvergenceTable::from_rows(rows, extrapolated),
        config_echo: format!(
            "R in {:?}; translate grid spacing {}, {} refinement passes",
            r_sched.radii, s.spacing, s.refine_passes
        ),
    })
}

/// Geometric grid over `[r, R]` with at least 16 points per octave.
fn geometric_grid(r: f64, big_r: f64, per_octave: usize) -> Vec<f64> {
    let octaves = (big_r / r).log2();
    let n = ((per_octave as f64 * octaves).ceil() as usize).max(1);
    let ratio = (big_r / r).powf(1.0 / n as f64);
    let mut ts: Vec<f64> = (0..=n).map(|k| r * ratio.powi(k as i32)).collect();
    *ts.last_mut().unwrap() = big_r;
    ts
}

/// `rho_tilde`: for each `(r, R)` pair, maximize over translates the inf
/// over a geometric t-grid of `[r, R]` of the ball average at radius `t`.
///
/// Rows are flagged `t-grid-unstable` when a 2x-refined t-grid moves the
/// inf at the best translate by more than 10x the quadrature tolerance,
/// `non-monotone-R` / `non-monotone-r` when the table violates the
/// expected monotonicity beyond the combined error bounds.
pub fn rho_tilde_estimate(
    phi: &DensityField,
    r_sched: &RadiusSchedule,
    big_r_sched: &RadiusSchedule,
    s: &TranslateSearchConfig,
    q: &QuadratureConfig,
) -> Result<DensityReport> {
    if r_sched.role != ScheduleRole::InnerR || big_r_sched.role != ScheduleRole::OuterR {
        return Err(Error::InvalidInput(
            "rho_tilde needs an inner-r and an outer-R schedule".into(),
        ));
    }
    if r_sched.last() >= big_r_sched.last() {
        return Err(Error::InvalidInput(
            "max of the inner-r schedule must be below the largest outer R".into(),
        ));
    }
    let dim = phi.dim();
    let mut rows = Vec::new();
    for &r in &r_sched.radii {
        for &big_r in &big_r_sched.radii {
            if r >= big_r {
                continue;
            }
            let ts = geometric_grid(r, big_r, 16);
            let vols: Vec<f64> = ts
                .iter()
                .map(|&t| ball_volume(dim, t))
                .collect::<Result<_>>()?;
            let qq = q.with_tolerance(q.tolerance * vols[vols.len() - 1]);
            let inf_over_grid = |a: &[f64], ts: &[f64], vols: &[f64]| -> Result<f64> {
                let masses = ball_mass_profile(phi, a, ts, &qq)?;
                Ok(masses
                    .iter()
                    .zip(vols)
                    .map(|(m, v)| m / v)
                    .fold(f64::INFINITY, f64::min))
            };
            let (value, argmax) =
                grid_search_max(&s.search_box, s.spacing, s.refine_passes, |a| {
                    inf_over_grid(a, &ts, &vols)
                })?;
            // Stability check: a 2x-refined t-grid at the maximizing translate.
            let ts2 = geometric_grid(r, big_r, 32);
            let vols2: Vec<f64> = ts2
                .iter()
                .map(|&t| ball_volume(dim, t))
                .collect::<Result<_>>()?;
            let refined = inf_over_grid(&argmax, &ts2, &vols2)?;
            let mut flags = Vec::new();
            if (refined - value).abs() > 10.0 * q.tolerance {
                flags.push("t-grid-unstable".into());
            }
            rows.push(TableRow {
                r: Some(r),
                radius: big_r,
                estimate: value.min(refined),
                // Translate-search Lipschitz bound: sup over t of
                // surface(B_t) h / |B_t| = D h / r, plus quadrature.
                error_bound: dim as f64 * s.spacing / r + q.tolerance,
                flags,
            });
        }
    }
    if rows.is_empty() {
        return Err(Error::InvalidInput(
            "no (r, R) pair with r < R in the schedules".into(),
        ));
    }
    flag_pair_monotonicity(&mut rows);
    let extrapolated = rows
        .iter()
        .filter(|row| row.r == Some(r_sched.last()))
        .last()
        .unwrap()
        .estimate;
    Ok(DensityReport {
        functional: "rho_tilde".into(),
        table: ConvergenceTable::from_rows(rows, extrapolated),
        config_echo: format!(
            "r in {:?}, R in {:?}; >= 16 t-grid points per octave",
            r_sched.radii, big_r_sched.radii
        ),
    })
}

/// Flag rows violating: non-increasing along R at fixed r, non-decreasing
/// along r at fixed R, modulo combined error bounds.
fn flag_pair_monotonicity(rows: &mut [TableRow]) {
    for i in 0..rows.len() {
        for j in 0..rows.len() {
            if i == j {
                continue;
            }
            let slack = rows[i].error_bound + rows[j].error_bound;
            if rows[i].r == rows[j].r && rows[j].radius > rows[i].radius {
                if rows[j].estimate > rows[i].estimate + slack {
                    push_flag(&mut rows[j], "non-monotone-R");
                }
            }
            if rows[i].radius == rows[j].radius
                && rows[j].r.unwrap_or(0.0) > rows[i].r.unwrap_or(0.0)
                && rows[j].estimate < rows[i].estimate - slack
            {
                push_flag(&mut rows[j], "non-monotone-r");
            }
        }
    }
}

fn push_flag(row: &mut TableRow, flag: &str) {
    if !row.flags.iter().any(|f| f == flag) {
        row.flags.push(flag.into());
    }
}

/// Memoizing evaluator for `T(r, f) = integral over [1, r] of A(t) dt/t`,
/// `A(t)` = energy mass of the disk of radius `t` at the origin.
///
/// Substituting `u = ln t` gives `T = integral of A(e^u) du` over
/// `[0, ln r]`, which is integrated by composite Simpson on a doubling
/// node count; each node set is one shared `ball_mass_profile` sweep.
pub struct NsaEvaluator<'a> {
    phi: &'a DensityField,
    q: QuadratureConfig,
    cache: RefCell<HashMap<u64, f64>>,
}

impl<'a> NsaEvaluator<'a> {
    pub fn new(phi: &'a DensityField, q: &QuadratureConfig) -> Result<Self> {
        if phi.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: phi.dim(),
            });
        }
        Ok(NsaEvaluator {
            phi,
            q: q.clone(),
            cache: RefCell::new(HashMap::new()),
        })
    }

    fn simpson_on_log_grid(&self, r: f64, intervals: usize) -> Result<f64> {
        let l = r.ln();
        let ts: Vec<f64> = (0..=intervals)
            .map(|k| (l * k as f64 / intervals as f64).exp())
            .collect();
        let qq = self
            .q
            .with_tolerance(self.q.tolerance * ball_volume(2, r)?);
        let masses = ball_mass_profile(self.phi, &[0.0, 0.0], &ts, &qq)?;
        let mut s = masses[0] + masses[intervals];
        for (k, m) in masses.iter().enumerate().take(intervals).skip(1) {
            s += m * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        Ok(s * l / intervals as f64 / 3.0)
    }

    /// `T(r, f)` at several radii from shared profile sweeps.
    ///
    /// Each sweep's cost is dominated by the ring grid out to the largest
    /// radius, so integrating all radii from one sweep costs about as much
    /// as the largest radius alone, where separate [`characteristic`] calls
    /// would pay once per radius. Radii must be >= 1 and strictly
    /// increasing.
    ///
    /// [`characteristic`]: NsaEvaluator::characteristic
    pub fn characteristics(&self, rs: &[f64]) -> Result<Vec<f64>> {
        if rs.is_empty() {
            return Err(Error::InvalidInput("empty radius list".into()));
        }
        if rs[0] < 1.0 || rs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(
                "radii must be >= 1 and strictly increasing".into(),
            ));
        }
        let us: Vec<f64> = rs.iter().map(|r| r.ln()).collect();
        let u_max = *us.last().unwrap();
        // Simpson per segment [u_{i-1}, u_i] of the log-radius axis, with
        // segment boundaries at the requested radii; node counts double
        // jointly until every cumulative value settles.
        let mut per_segment = 16usize;
        let mut prev: Option<Vec<f64>> = None;
        loop {
            let mut ts = Vec::new();
            let mut lo = 0.0f64;
            for &u in &us {
                for k in 0..per_segment {
                    ts.push((lo + (u - lo) * k as f64 / per_segment as f64).exp());
                }
                lo = u;
            }
            ts.push(u_max.exp());
            let qq = self
                .q
                .with_tolerance(self.q.tolerance * ball_volume(2, *rs.last().unwrap())?);
            let masses = ball_mass_profile(self.phi, &[0.0, 0.0], &ts, &qq)?;
            let mut totals = Vec::with_capacity(rs.len());
            let mut acc = 0.0;
            let mut lo = 0.0f64;
            for (i, &u) in us.iter().enumerate() {
                let base = i * per_segment;
                let h = (u - lo) / per_segment as f64;
                let mut s = masses[base] + masses[base + per_segment];
                for k in 1..per_segment {
                    s += masses[base + k] * if k % 2 == 1 { 4.0 } else { 2.0 };
                }
                acc += s * h / 3.0;
                totals.push(acc);
                lo = u;
            }
            if let Some(p) = &prev {
                let ok = totals
                    .iter()
                    .zip(p)
                    .zip(rs)
                    .all(|((t, pt), r)| (t - pt).abs() < self.q.tolerance * (1.0 + r * r));
                if ok {
                    let mut cache = self.cache.borrow_mut();
                    for (&r, &t) in rs.iter().zip(&totals) {
                        cache.insert(r.to_bits(), t);
                    }
                    return Ok(totals);
                }
            }
            if per_segment >= 4096 {
                return Err(Error::QuadratureNonConvergence {
                    estimate: *totals.last().unwrap(),
                    change: prev
                        .map(|p| (totals.last().unwrap() - p.last().unwrap()).abs())
                        .unwrap_or(f64::INFINITY),
                    tolerance: self.q.tolerance,
                });
            }
            prev = Some(totals);
            per_segment *= 2;
        }
    }

    /// `T(r, f)`; `T(1, f) = 0`. Tolerance is taken on the scale of the
    /// Brody ceiling `pi r^2 / 2`.
    pub fn characteristic(&self, r: f64) -> Result<f64> {
        if r < 1.0 {
            return Err(Error::InvalidInput(format!(
                "T(r, f) requires r >= 1, got {r}"
            )));
        }
        if r == 1.0 {
            return Ok(0.0);
        }
        if let Some(&v) = self.cache.borrow().get(&r.to_bits()) {
            return Ok(v);
        }
        let tol = self.q.tolerance * (1.0 + r * r);
        let mut intervals = 32;
        let mut prev = self.simpson_on_log_grid(r, intervals)?;
        loop {
            intervals *= 2;
            let next = self.simpson_on_log_grid(r, intervals)?;
            if (next - prev).abs() < tol {
                self.cache.borrow_mut().insert(r.to_bits(), next);
                return Ok(next);
            }
            if intervals >= 4096 {
                return Err(Error::QuadratureNonConvergence {
                    estimate: next,
                    change: (next - prev).abs(),
                    tolerance: tol,
                });
            }
            prev = next;
        }
    }
}

/// `T(r, f)` for a curve-energy field (convenience wrapper; repeated
/// radii should share an [`NsaEvaluator`]).
pub fn nsa_characteristic(phi: &DensityField, r: f64, q: &QuadratureConfig) -> Result<f64> {
    NsaEvaluator::new(phi, q)?.characteristic(r)
}

/// Upper and lower NSA density reports over a shared table of
/// `2 T(r, f) / (pi r^2)` rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NsaReports {
    pub upper: DensityReport,
    pub lower: DensityReport,
}

/// `rho_nsa` / `rho_nsa_lower`: max/min of `2 T(r, f) / (pi r^2)` over
/// the trailing half of the schedule.
pub fn rho_nsa_estimate(
    phi: &DensityField,
    r_sched: &RadiusSchedule,
    q: &QuadratureConfig,
) -> Result<NsaReports> {
    if r_sched.role != ScheduleRole::NsaR {
        return Err(Error::InvalidInput("rho_nsa needs an nsa-r schedule".into()));
    }
    let eval = NsaEvaluator::new(phi, q)?;
    let window = r_sched.trailing_half();
    let mut rows = Vec::with_capacity(r_sched.radii.len());
    for &r in &r_sched.radii {
        let t = eval.characteristic(r)?;
        let denom = std::f64::consts::PI * r * r / 2.0;
        let mut flags = Vec::new();
        if window.contains(&r) {
            flags.push("window".into());
        }
        rows.push(TableRow {
            r: None,
            radius: r,
            estimate: t / denom,
            error_bound: q.tolerance * (1.0 + r * r) / denom,
            flags,
        });
    }
    let in_window: Vec<f64> = rows
        .iter()
        .filter(|row| row.flags.iter().any(|f| f == "window"))
        .map(|row| row.estimate)
        .collect();
    let upper = in_window.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lower = in_window.iter().cloned().fold(f64::INFINITY, f64::min);
    let echo = format!(
        "r in {:?}; limsup/liminf over the trailing half",
        r_sched.radii
    );
    Ok(NsaReports {
        upper: DensityReport {
            functional: "rho_nsa_upper".into(),
            table: ConvergenceTable::from_rows(rows.clone(), upper),
            config_echo: echo.clone(),
        },
        lower: DensityReport {
            functional: "rho_nsa_lower".into(),
            table: ConvergenceTable::from_rows(rows, lower),
            config_echo: echo,
        },
    })
}

/// `rho(N)` for a finite family: rows of `(1/|B_R|) max over members of
/// mass(member, B_R(0))`.
pub fn rho_family_estimate(
    family: &[DensityField],
    r_sched: &RadiusSchedule,
    q: &QuadratureConfig,
) -> Result<DensityReport> {
    let first = family
        .first()
        .ok_or_else(|| Error::InvalidInput("family must be nonempty".into()))?;
    let dim = first.dim();
    if family.iter().any(|phi| phi.dim() != dim) {
        return Err(Error::InvalidInput(
            "family members must share a dimension".into(),
        ));
    }
    if r_sched.role != ScheduleRole::OuterR {
        return Err(Error::InvalidInput(
            "rho_family needs an outer-R schedule".into(),
        ));
    }
    let origin = vec![0.0; dim];
    let mut rows = Vec::with_capacity(r_sched.radii.len());
    for &radius in &r_sched.radii {
        let vol = ball_volume(dim, radius)?;
        let qq = q.with_tolerance(q.tolerance * vol);
        let mut best = f64::NEG_INFINITY;
        for phi in family {
            best = best.max(ball_mass(phi, &origin, radius, &qq)?);
        }
        rows.push(TableRow {
            r: None,
            radius,
            estimate: best / vol,
            error_bound: q.tolerance,
            flags: Vec::new(),
        });
    }
    let extrapolated = rows.last().unwrap().estimate;
    Ok(DensityReport {
        functional: "rho_family".into(),
        table: ConvergenceTable::from_rows(rows, extrapolated),
        config_echo: format!("{} members; R in {:?}", family.len(), r_sched.radii),
    })
}

/// Ornstein-Weiss average `h(Omega_n) / |Omega_n|` along a Folner
/// sequence, with `h(Omega) = integral over a + Omega` (optionally sup
/// over a translate grid).
///
/// The sequence must pass the Folner consistency diagnostic (strictly
/// decreasing `|boundary| / |Omega|` ratios at probe radius 1).
pub fn ow_average(
    phi: &DensityField,
    sup_translate: bool,
    sequence: &[Region],
    s: &TranslateSearchConfig,
    q: &QuadratureConfig,
) -> Result<DensityReport> {
    let diag = folner_diagnostics(sequence, 1.0)?;
    if !diag.consistent {
        return Err(Error::InvalidInput(
            "region sequence fails the Folner consistency diagnostic".into(),
        ));
    }
    let dim = phi.dim();
    let zero = vec![0.0; dim];
    let mut rows = Vec::with_capacity(sequence.len());
    for region in sequence {
        let vol = region.volume();
        let qq = q.with_tolerance(q.tolerance * vol);
        let (mass, search_error) = if sup_translate {
            let (value, _) = grid_search_max(&s.search_box, s.spacing, s.refine_passes, |a| {
                region_mass(phi, region, a, &qq)
            })?;
            // Lipschitz certificate: shifting by h changes the mass by at
            // most |boundary layer| * sup phi (<= 1 for bundled fields).
            (value, r_boundary_volume(region, s.spacing)?)
        } else {
            (region_mass(phi, region, &zero, &qq)?, 0.0)
        };
        rows.push(TableRow {
            r: None,
            radius: vol.powf(1.0 / dim as f64),
            estimate: mass / vol,
            error_bound: search_error / vol + q.tolerance,
            flags: vec![region.label()],
        });
    }
    let extrapolated = rows.last().unwrap().estimate;
    Ok(DensityReport {
        functional: "ow_average".into(),
        table: ConvergenceTable::from_rows(rows, extrapolated),
        config_echo: format!(
            "{} regions ({}); sup over translates: {sup_translate}",
            sequence.len(),
            sequence
                .last()
                .map(|r| r.label())
                .unwrap_or_default()
        ),
    })
}

/// Profile of centered ball averages for one candidate center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitProfile {
    pub center: [f64; 2],
    /// `(t, (1/pi t^2) * energy mass of B_t(center))` rows.
    pub averages: Vec<(f64, f64)>,
    /// inf of the averages over `[min r, R]`.
    pub inf: f64,
}

/// Outcome of the translate-orbit experiment: per-center average
/// profiles, the center whose inf is largest, and a `rho` reference at
/// the outer radius for comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitExperiment {
    pub profiles: Vec<OrbitProfile>,
    pub best_center: [f64; 2],
    pub best_inf: f64,
    pub rho_at_outer: f64,
    pub rho_error_bound: f64,
}

/// For each candidate center `a`, compute `t -> (1/pi t^2) mass(B_t(a))`
/// of the curve energy over the schedule (capped at `R`), identify the
/// center maximizing the inf, and report it alongside the sup-translate
/// ball average at `R`.
pub fn translate_orbit_experiment(
    f: &MeromorphicCurve,
    centers: &[Complex64],
    r_sched: &RadiusSchedule,
    big_r: f64,
    s: &TranslateSearchConfig,
    q: &QuadratureConfig,
) -> Result<OrbitExperiment> {
    if centers.is_empty() {
        return Err(Error::InvalidInput("centers list is empty".into()));
    }
    if big_r < r_sched.radii[0] {
        return Err(Error::InvalidInput(
            "outer radius R is below the profile schedule".into(),
        ));
    }
    let phi = curve_energy_field(f);
    let mut ts: Vec<f64> = r_sched
        .radii
        .iter()
        .cloned()
        .filter(|&t| t <= big_r)
        .collect();
    if *ts.last().unwrap() < big_r {
        ts.push(big_r);
    }
    let vol_r = ball_volume(2, big_r)?;
    let qq = q.with_tolerance(q.tolerance * vol_r);
    let mut profiles = Vec::with_capacity(centers.len());
    for &c in centers {
        let a = [c.re, c.im];
        let masses = ball_mass_profile(&phi, &a, &ts, &qq)?;
        let averages: Vec<(f64, f64)> = ts
            .iter()
            .zip(&masses)
            .map(|(&t, &m)| (t, m / (std::f64::consts::PI * t * t)))
            .collect();
        let inf = averages.iter().map(|&(_, v)| v).fold(f64::INFINITY, f64::min);
        profiles.push(OrbitProfile {
            center: a,
            averages,
            inf,
        });
    }
    let best = profiles
        .iter()
        .max_by(|a, b| a.inf.partial_cmp(&b.inf).unwrap())
        .unwrap();
    let sup = sup_translate_ball_mass(&phi, big_r, s, &qq)?;
    Ok(OrbitExperiment {
        best_center: best.center,
        best_inf: best.inf,
        profiles: profiles.clone(),
        rho_at_outer: sup.value / vol_r,
        rho_error_bound: sup.error_bound / vol_r + q.tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Ball, BoxRegion};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn q() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    fn unit_search() -> TranslateSearchConfig {
        TranslateSearchConfig::new(
            BoxRegion::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap(),
            0.5,
            1,
        )
        .unwrap()
    }

    #[test]
    fn schedule_invariants() {
        assert!(RadiusSchedule::outer(vec![1.0, 2.0, 4.0]).is_ok());
        assert!(RadiusSchedule::outer(vec![2.0, 1.0]).is_err());
        assert!(RadiusSchedule::outer(vec![]).is_err());
        assert!(RadiusSchedule::nsa(vec![0.5, 2.0]).is_err());
        assert!(RadiusSchedule::nsa(vec![1.0, 2.0]).is_ok());
        let s = RadiusSchedule::nsa(vec![1.0, 2.0, 4.0, 8.0]).unwrap();
        assert_eq!(s.trailing_half(), &[4.0, 8.0]);
    }

    #[test]
    fn geometric_grid_density() {
        let ts = geometric_grid(2.0, 8.0, 16);
        assert_eq!(ts[0], 2.0);
        assert_eq!(*ts.last().unwrap(), 8.0);
        // >= 16 points per octave: ratio at most 2^(1/16).
        for w in ts.windows(2) {
            assert!(w[1] / w[0] <= 2f64.powf(1.0 / 16.0) + 1e-12);
        }
    }

    #[test]
    fn rho_constant_fields() {
        let one = DensityField::constant(2, 1.0).unwrap();
        let sched = RadiusSchedule::outer(vec![1.0, 2.0, 4.0]).unwrap();
        let report = rho_estimate(&one, &sched, &unit_search(), &q()).unwrap();
        for row in &report.table.rows {
            assert_relative_eq!(row.estimate, 1.0, epsilon = 1e-4);
        }
        assert_relative_eq!(report.table.extrapolated, 1.0, epsilon = 1e-4);

        let zero = DensityField::constant(2, 0.0).unwrap();
        let report = rho_estimate(&zero, &sched, &unit_search(), &q()).unwrap();
        assert!(report.table.extrapolated.abs() < 1e-9);
    }

    #[test]
    fn rho_identity_curve_decays_like_inverse_square() {
        // Total energy of f(z) = z is pi, so every disk average is <= 1/R^2.
        let phi = curve_energy_field(&MeromorphicCurve::identity());
        let sched = RadiusSchedule::outer(vec![2.0, 4.0, 8.0]).unwrap();
        let report = rho_estimate(&phi, &sched, &unit_search(), &q()).unwrap();
        for row in &report.table.rows {
            assert!(
                row.estimate <= 1.0 / (row.radius * row.radius) + 1e-6,
                "row at R = {}: {}",
                row.radius,
                row.estimate
            );
        }
        // The 1/R^2 bound above is the quantitative decay check; the trend
        // note may report "flat" because the conservative error bounds
        // (driven by the 0.5 search spacing) exceed the tail decrease.
        assert!(
            report.table.trend_note == "decreasing at schedule end"
                || report.table.trend_note == "flat within error bounds",
            "unexpected trend note: {}",
            report.table.trend_note
        );
    }

    #[test]
    fn rho_tilde_constant_field() {
        let phi = DensityField::constant(2, 0.7).unwrap();
        let inner = RadiusSchedule::inner(vec![1.0, 2.0]).unwrap();
        let outer = RadiusSchedule::outer(vec![4.0, 8.0]).unwrap();
        let report = rho_tilde_estimate(&phi, &inner, &outer, &unit_search(), &q()).unwrap();
        assert_eq!(report.table.rows.len(), 4);
        for row in &report.table.rows {
            assert_relative_eq!(row.estimate, 0.7, epsilon = 1e-4);
            assert!(!row.flags.iter().any(|f| f.starts_with("non-monotone")));
        }
        assert_relative_eq!(report.table.extrapolated, 0.7, epsilon = 1e-4);
    }

    #[test]
    fn rho_tilde_rejects_bad_schedules() {
        let phi = DensityField::constant(2, 1.0).unwrap();
        let inner = RadiusSchedule::inner(vec![4.0, 9.0]).unwrap();
        let outer = RadiusSchedule::outer(vec![8.0]).unwrap();
        assert!(rho_tilde_estimate(&phi, &inner, &outer, &unit_search(), &q()).is_err());
    }

    #[test]
    fn nsa_closed_form_oracle() {
        // T(r) = (pi/2) ln((1 + r^2)/2) for f(z) = z.
        let phi = curve_energy_field(&MeromorphicCurve::identity());
        let oracle = |r: f64| PI / 2.0 * ((1.0 + r * r) / 2.0).ln();
        for &r in &[2.0, std::f64::consts::E, 10.0] {
            let t = nsa_characteristic(&phi, r, &q()).unwrap();
            assert_relative_eq!(t, oracle(r), max_relative = 1e-4);
        }
        assert_eq!(nsa_characteristic(&phi, 1.0, &q()).unwrap(), 0.0);
        assert!(nsa_characteristic(&phi, 0.5, &q()).is_err());
        assert_relative_eq!(
            nsa_characteristic(&phi, std::f64::consts::E, &q()).unwrap(),
            2.2518,
            epsilon = 1e-3
        );
    }

    #[test]
    fn batched_characteristics_match_the_closed_form() {
        let phi = curve_energy_field(&MeromorphicCurve::identity());
        let eval = NsaEvaluator::new(&phi, &q()).unwrap();
        let rs = [2.0, std::f64::consts::E, 10.0];
        let totals = eval.characteristics(&rs).unwrap();
        for (&r, &t) in rs.iter().zip(&totals) {
            let oracle = std::f64::consts::PI / 2.0 * ((1.0 + r * r) / 2.0).ln();
            assert_relative_eq!(t, oracle, max_relative = 1e-4);
        }
        // The batch fills the same cache the scalar path reads.
        assert_eq!(eval.characteristic(10.0).unwrap(), totals[2]);
    }

    #[test]
    fn nsa_constant_curve_is_zero() {
        let phi = curve_energy_field(&MeromorphicCurve::constant(Complex64::new(2.0, 1.0)));
        for &r in &[1.0, 3.0, 10.0] {
            assert_eq!(nsa_characteristic(&phi, r, &q()).unwrap(), 0.0);
        }
    }

    #[test]
    fn rho_nsa_identity_curve_trends_to_zero() {
        let phi = curve_energy_field(&MeromorphicCurve::identity());
        let sched = RadiusSchedule::nsa(vec![5.0, 10.0, 20.0, 40.0]).unwrap();
        let reports = rho_nsa_estimate(&phi, &sched, &q()).unwrap();
        // Closed form: rows = ln((1 + r^2)/2) / r^2.
        for row in &reports.upper.table.rows {
            let r = row.radius;
            let expect = ((1.0 + r * r) / 2.0).ln() / (r * r);
            assert_relative_eq!(row.estimate, expect, max_relative = 1e-3);
        }
        // Window extremes over the trailing half {20, 40} of the schedule:
        // upper is the closed form at r = 20, lower at r = 40.
        let at = |r: f64| ((1.0 + r * r) / 2.0).ln() / (r * r);
        assert_relative_eq!(reports.upper.table.extrapolated, at(20.0), max_relative = 1e-3);
        assert_relative_eq!(reports.lower.table.extrapolated, at(40.0), max_relative = 1e-3);
        assert!(reports.lower.table.extrapolated <= reports.upper.table.extrapolated);
    }

    #[test]
    fn rho_family_trivial_cases() {
        let one = DensityField::constant(2, 1.0).unwrap();
        let zero = DensityField::constant(2, 0.0).unwrap();
        let sched = RadiusSchedule::outer(vec![1.0, 2.0]).unwrap();
        let single = rho_family_estimate(std::slice::from_ref(&one), &sched, &q()).unwrap();
        assert_relative_eq!(single.table.extrapolated, 1.0, epsilon = 1e-4);
        let padded = rho_family_estimate(&[zero, one], &sched, &q()).unwrap();
        assert_eq!(single.table.rows[1].estimate, padded.table.rows[1].estimate);
        assert!(rho_family_estimate(&[], &sched, &q()).is_err());
    }

    #[test]
    fn ow_constant_field_every_row() {
        let phi = DensityField::constant(2, 0.3).unwrap();
        let seq: Vec<Region> = (1..=4)
            .map(|n| Region::Ball(Ball::centered(2, 4.0 * n as f64).unwrap()))
            .collect();
        let report = ow_average(&phi, false, &seq, &unit_search(), &q()).unwrap();
        for row in &report.table.rows {
            assert_relative_eq!(row.estimate, 0.3, epsilon = 1e-4);
        }
    }

    #[test]
    fn ow_rejects_inconsistent_sequence() {
        let phi = DensityField::constant(2, 1.0).unwrap();
        let seq = vec![
            Region::Ball(Ball::centered(2, 8.0).unwrap()),
            Region::Ball(Ball::centered(2, 4.0).unwrap()),
        ];
        assert!(ow_average(&phi, false, &seq, &unit_search(), &q()).is_err());
    }

    #[test]
    fn ow_nested_region_monotonicity() {
        // h(Omega_1) <= h(Omega_2) for nested regions and nonneg phi.
        let phi = DensityField::disk_lattice(4.0, 1.0).unwrap();
        let seq: Vec<Region> = [4.0, 8.0, 16.0]
            .iter()
            .map(|&n| Region::Box(BoxRegion::cube(2, n).unwrap()))
            .collect();
        let report = ow_average(&phi, false, &seq, &unit_search(), &q().with_tolerance(1e-3)).unwrap();
        let masses: Vec<f64> = report
            .table
            .rows
            .iter()
            .map(|row| row.estimate * row.radius.powi(2))
            .collect();
        assert!(masses[0] <= masses[1] + 1e-6 && masses[1] <= masses[2] + 1e-6);
    }

    #[test]
    fn orbit_identity_profile_closed_form() {
        let f = MeromorphicCurve::identity();
        let sched = RadiusSchedule::inner(vec![1.0, 2.0, 4.0]).unwrap();
        let exp = translate_orbit_experiment(
            &f,
            &[Complex64::new(0.0, 0.0)],
            &sched,
            8.0,
            &unit_search(),
            &q(),
        )
        .unwrap();
        // Profile is t -> 1/(1 + t^2), strictly decreasing.
        let prof = &exp.profiles[0];
        for &(t, v) in &prof.averages {
            assert_relative_eq!(v, 1.0 / (1.0 + t * t), max_relative = 1e-3);
        }
        for w in prof.averages.windows(2) {
            assert!(w[1].1 < w[0].1);
        }
        assert_relative_eq!(exp.best_inf, 1.0 / 65.0, max_relative = 1e-3);
    }

    #[test]
    fn orbit_constant_curve_all_zero() {
        let f = MeromorphicCurve::constant(Complex64::new(1.0, 0.0));
        let sched = RadiusSchedule::inner(vec![1.0, 2.0]).unwrap();
        let exp = translate_orbit_experiment(
            &f,
            &[Complex64::new(0.0, 0.0), Complex64::new(1.0, 1.0)],
            &sched,
            4.0,
            &unit_search(),
            &q(),
        )
        .unwrap();
        for prof in &exp.profiles {
            assert!(prof.averages.iter().all(|&(_, v)| v == 0.0));
        }
        assert_eq!(exp.best_inf, 0.0);
        assert_eq!(exp.rho_at_outer, 0.0);
    }

    #[test]
    fn rho_tilde_bounded_by_rho_at_shared_radius() {
        // inf over t <= value at t = R <= sup over translates.
        let phi = DensityField::disk_lattice(4.0, 1.0).unwrap();
        let search = TranslateSearchConfig::for_field(
            &phi,
            BoxRegion::new(vec![0.0, 0.0], vec![4.0, 4.0]).unwrap(),
            0.5,
        )
        .unwrap();
        let inner = RadiusSchedule::inner(vec![2.0]).unwrap();
        let outer = RadiusSchedule::outer(vec![8.0]).unwrap();
        let qc = q().with_tolerance(1e-3);
        let tilde = rho_tilde_estimate(&phi, &inner, &outer, &search, &qc).unwrap();
        let rho = rho_estimate(&phi, &outer, &search, &qc).unwrap();
        let slack = tilde.table.rows[0].error_bound + rho.table.rows[0].error_bound;
        assert!(
            tilde.table.extrapolated <= rho.table.extrapolated + slack,
            "tilde {} vs rho {}",
            tilde.table.extrapolated,
            rho.table.extrapolated
        );
    }
}

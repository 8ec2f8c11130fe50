//! Density fields `phi : R^D -> [0, 1]` standing in for measures
//! `mu(Omega) = integral of phi over Omega`, with the translate action
//! `(a.mu)(Omega) = mu(a + Omega)` and quadrature of ball masses.

use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use rayon::prelude::*;

use crate::curves::MeromorphicCurve;
use crate::geometry::{ball_volume, sphere_area, Ball, BoxRegion, Region};
use crate::{Error, Result};

/// Raster data backing a user-grid field (D = 2). Values are constant on
/// grid cells; points outside the raster evaluate to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct GridData {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
    pub dx: f64,
    pub dy: f64,
    /// Row-major: `values[iy * nx + ix]`.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub enum FieldKind {
    Constant(f64),
    /// Indicator of a single ball.
    BallIndicator(Ball),
    /// Indicator of `x_axis > 0`.
    HalfSpaceIndicator { axis: usize },
    /// Unit cells of side `period` with a centered disk of radius
    /// `disk_radius` (D = 2).
    DiskLattice { period: f64, disk_radius: f64 },
    /// Periodic stripes along axis 0: value 1 on the first `fill` fraction
    /// of each period.
    Stripes { period: f64, fill: f64 },
    /// Finite union of indicator balls.
    SparseCluster(Vec<Ball>),
    /// `z -> min(|df|(z)^2, 1)` for a meromorphic curve (D = 2).
    CurveEnergy(Arc<MeromorphicCurve>),
    UserGrid(GridData),
}

/// A measurable function `R^D -> [0, 1]` with a translation action.
#[derive(Debug, Clone)]
pub struct DensityField {
    dim: usize,
    kind: FieldKind,
    offset: Vec<f64>,
    clipped: Arc<AtomicBool>,
}

impl DensityField {
    fn from_kind(dim: usize, kind: FieldKind) -> Self {
        DensityField {
            dim,
            kind,
            offset: vec![0.0; dim],
            clipped: Arc::new(AtomicBool::new(false)),
        }
    }

    pub fn constant(dim: usize, value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::InvalidInput(format!(
                "constant density {value} outside [0, 1]"
            )));
        }
        Ok(Self::from_kind(dim, FieldKind::Constant(value)))
    }

    pub fn ball_indicator(ball: Ball) -> Self {
        let dim = ball.dim();
        Self::from_kind(dim, FieldKind::BallIndicator(ball))
    }

    pub fn half_space(dim: usize, axis: usize) -> Result<Self> {
        if axis >= dim {
            return Err(Error::InvalidInput(format!(
                "axis {axis} out of range for dimension {dim}"
            )));
        }
        Ok(Self::from_kind(dim, FieldKind::HalfSpaceIndicator { axis }))
    }

    pub fn disk_lattice(period: f64, disk_radius: f64) -> Result<Self> {
        if !(period > 0.0) || !(disk_radius > 0.0) || disk_radius > period / 2.0 {
            return Err(Error::InvalidInput(format!(
                "disk lattice needs 0 < disk_radius <= period/2, got period {period}, radius {disk_radius}"
            )));
        }
        Ok(Self::from_kind(
            2,
            FieldKind::DiskLattice {
                period,
                disk_radius,
            },
        ))
    }

    pub fn stripes(dim: usize, period: f64, fill: f64) -> Result<Self> {
        if !(period > 0.0) || !(0.0..=1.0).contains(&fill) {
            return Err(Error::InvalidInput(format!(
                "stripes need period > 0 and fill in [0, 1], got {period}, {fill}"
            )));
        }
        Ok(Self::from_kind(dim, FieldKind::Stripes { period, fill }))
    }

    pub fn sparse_cluster(balls: Vec<Ball>) -> Result<Self> {
        let dim = balls
            .first()
            .ok_or_else(|| Error::InvalidInput("sparse cluster needs at least one ball".into()))?
            .dim();
        if balls.iter().any(|b| b.dim() != dim) {
            return Err(Error::InvalidInput(
                "sparse cluster balls must share a dimension".into(),
            ));
        }
        Ok(Self::from_kind(dim, FieldKind::SparseCluster(balls)))
    }

    pub fn curve_energy(curve: Arc<MeromorphicCurve>) -> Self {
        Self::from_kind(2, FieldKind::CurveEnergy(curve))
    }

    pub fn user_grid(grid: GridData) -> Result<Self> {
        if grid.values.len() != grid.nx * grid.ny {
            return Err(Error::InvalidInput(format!(
                "grid has {} values, expected {}",
                grid.values.len(),
                grid.nx * grid.ny
            )));
        }
        if grid.values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidInput(
                "grid values must lie in [0, 1]".into(),
            ));
        }
        Ok(Self::from_kind(2, FieldKind::UserGrid(grid)))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    /// Whether a curve-energy evaluation has been clipped to 1 so far
    /// (non-Brody input).
    pub fn clipping_occurred(&self) -> bool {
        self.clipped.load(Ordering::Relaxed)
    }

    /// The translated field `x -> phi(a + x)`, realizing `(a.mu)`.
    pub fn translate(&self, a: &[f64]) -> Result<Self> {
        if a.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: a.len(),
            });
        }
        let mut out = self.clone();
        for (o, ai) in out.offset.iter_mut().zip(a) {
            *o += ai;
        }
        Ok(out)
    }

    /// One fundamental domain for periodic kinds.
    pub fn fundamental_domain(&self) -> Option<BoxRegion> {
        let p = match &self.kind {
            FieldKind::DiskLattice { period, .. } | FieldKind::Stripes { period, .. } => *period,
            _ => return None,
        };
        Some(BoxRegion::new(vec![0.0; self.dim], vec![p; self.dim]).expect("period > 0"))
    }

    /// Evaluate the density at a point (deterministic; always in [0, 1]).
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let mut y = [0.0f64; 3];
        for i in 0..self.dim {
            y[i] = self.offset[i] + x[i];
        }
        let y = &y[..self.dim];
        match &self.kind {
            FieldKind::Constant(c) => *c,
            FieldKind::BallIndicator(ball) => {
                if ball.contains(y) {
                    1.0
                } else {
                    0.0
                }
            }
            FieldKind::HalfSpaceIndicator { axis } => {
                if y[*axis] > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            FieldKind::DiskLattice {
                period,
                disk_radius,
            } => {
                let u = y[0] - period * (y[0] / period).round();
                let v = y[1] - period * (y[1] / period).round();
                if u * u + v * v <= disk_radius * disk_radius {
                    1.0
                } else {
                    0.0
                }
            }
            FieldKind::Stripes { period, fill } => {
                let frac = (y[0] / period).rem_euclid(1.0);
                if frac < *fill {
                    1.0
                } else {
                    0.0
                }
            }
            FieldKind::SparseCluster(balls) => {
                if balls.iter().any(|b| b.contains(y)) {
                    1.0
                } else {
                    0.0
                }
            }
            FieldKind::CurveEnergy(curve) => {
                let d = curve.spherical_derivative(num_complex::Complex64::new(y[0], y[1]));
                let e = d * d;
                if e > 1.0 {
                    self.clipped.store(true, Ordering::Relaxed);
                    1.0
                } else {
                    e
                }
            }
            FieldKind::UserGrid(g) => {
                let ix = ((y[0] - g.x0) / g.dx).floor();
                let iy = ((y[1] - g.y0) / g.dy).floor();
                if ix < 0.0 || iy < 0.0 {
                    return 0.0;
                }
                let (ix, iy) = (ix as usize, iy as usize);
                if ix >= g.nx || iy >= g.ny {
                    0.0
                } else {
                    g.values[iy * g.nx + ix]
                }
            }
        }
    }
}

/// Load a user-grid field from a CSV raster.
///
/// Header row: `D, nx, ny, x0, y0, dx, dy`; then `nx * ny` row-major values
/// in `[0, 1]`, in any line layout.
pub fn load_user_grid_csv(path: &Path) -> Result<DensityField> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty grid file".into()))?;
    let head: Vec<f64> = parse_csv_numbers(header)?;
    if head.len() != 7 {
        return Err(Error::Parse(format!(
            "grid header needs 7 fields (D, nx, ny, x0, y0, dx, dy), got {}",
            head.len()
        )));
    }
    if head[0] != 2.0 {
        return Err(Error::UnsupportedDimension(head[0] as usize));
    }
    let (nx, ny) = (head[1] as usize, head[2] as usize);
    let mut values = Vec::with_capacity(nx * ny);
    for line in lines {
        values.extend(parse_csv_numbers(line)?);
    }
    let grid = GridData {
        nx,
        ny,
        x0: head[3],
        y0: head[4],
        dx: head[5],
        dy: head[6],
        values,
    };
    if !(grid.dx > 0.0 && grid.dy > 0.0) {
        return Err(Error::Parse("grid spacing must be positive".into()));
    }
    DensityField::user_grid(grid)
}

fn parse_csv_numbers(line: &str) -> Result<Vec<f64>> {
    line.split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad number {s:?}: {e}")))
        })
        .collect()
}

/// Quadrature settings for ball and box masses.
///
/// `tolerance` is absolute on the returned integral; refinement doubles the
/// subdivision counts until two successive estimates differ by less.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuadratureConfig {
    /// Radial subdivisions at the coarsest level (D = 2).
    pub radial: usize,
    /// Angular subdivisions at the coarsest level (D = 2).
    pub angular: usize,
    /// Per-axis counts at the coarsest level (D != 2).
    pub per_axis: usize,
    pub max_levels: usize,
    pub tolerance: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            radial: 32,
            angular: 64,
            per_axis: 32,
            max_levels: 8,
            tolerance: 1e-6,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.radial < 4 || self.angular < 4 || self.per_axis < 4 {
            return Err(Error::InvalidInput(
                "quadrature subdivision counts must be >= 4".into(),
            ));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidInput("quadrature tolerance must be > 0".into()));
        }
        Ok(())
    }

    /// Same grid, different absolute tolerance.
    pub fn with_tolerance(&self, tolerance: f64) -> Self {
        QuadratureConfig {
            tolerance,
            ..self.clone()
        }
    }

    /// Same grid, different refinement-level cap.
    pub fn with_max_levels(&self, max_levels: usize) -> Self {
        QuadratureConfig {
            max_levels,
            ..self.clone()
        }
    }
}

/// `integral of phi over B_t(a)` by midpoint quadrature with dyadic
/// refinement (polar grid in D = 2, spherical product grid in D = 3,
/// interval midpoints in D = 1).
pub fn ball_mass(phi: &DensityField, a: &[f64], t: f64, q: &QuadratureConfig) -> Result<f64> {
    q.validate()?;
    if a.len() != phi.dim() {
        return Err(Error::DimensionMismatch {
            expected: phi.dim(),
            got: a.len(),
        });
    }
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!("ball radius {t} must be > 0")));
    }
    let mut prev_raw = f64::NAN;
    let mut prev = f64::NAN;
    for level in 0..=q.max_levels {
        let raw = ball_mass_level(phi, a, t, q, level);
        // Midpoint is second order; one Richardson step on consecutive
        // levels upgrades smooth integrands to fourth order.
        let estimate = if level == 0 {
            raw
        } else {
            raw + (raw - prev_raw) / 3.0
        };
        if level > 0 && (estimate - prev).abs() < q.tolerance {
            return Ok(estimate);
        }
        prev_raw = raw;
        prev = estimate;
    }
    Err(Error::QuadratureNonConvergence {
        estimate: prev,
        change: f64::NAN,
        tolerance: q.tolerance,
    })
}

fn ball_mass_level(phi: &DensityField, a: &[f64], t: f64, q: &QuadratureConfig, level: usize) -> f64 {
    match phi.dim() {
        1 => {
            let n = q.per_axis << level;
            let h = 2.0 * t / n as f64;
            let sum: f64 = (0..n)
                .map(|i| phi.eval(&[a[0] - t + (i as f64 + 0.5) * h]))
                .sum();
            sum * h
        }
        2 => {
            let nr = q.radial << level;
            let nth = q.angular << level;
            let dr = t / nr as f64;
            let dth = 2.0 * std::f64::consts::PI / nth as f64;
            let trig: Vec<(f64, f64)> = (0..nth)
                .map(|j| {
                    let th = (j as f64 + 0.5) * dth;
                    (th.cos(), th.sin())
                })
                .collect();
            let rings: Vec<f64> = (0..nr)
                .into_par_iter()
                .map(|i| {
                    let r = (i as f64 + 0.5) * dr;
                    let mut ring = 0.0;
                    for &(c, s) in &trig {
                        ring += phi.eval(&[a[0] + r * c, a[1] + r * s]);
                    }
                    ring * r
                })
                .collect();
            rings.iter().sum::<f64>() * dr * dth
        }
        3 => {
            let nr = q.per_axis << level;
            let nu = q.per_axis << level;
            let np = 2 * (q.per_axis << level);
            let dr = t / nr as f64;
            let du = 2.0 / nu as f64;
            let dp = 2.0 * std::f64::consts::PI / np as f64;
            let trig: Vec<(f64, f64)> = (0..np)
                .map(|k| {
                    let p = (k as f64 + 0.5) * dp;
                    (p.cos(), p.sin())
                })
                .collect();
            let shells: Vec<f64> = (0..nr)
                .into_par_iter()
                .map(|i| {
                    let r = (i as f64 + 0.5) * dr;
                    let mut shell = 0.0;
                    for j in 0..nu {
                        let u = -1.0 + (j as f64 + 0.5) * du;
                        let s = (1.0 - u * u).sqrt();
                        for &(cp, sp) in &trig {
                            shell += phi.eval(&[a[0] + r * s * cp, a[1] + r * s * sp, a[2] + r * u]);
                        }
                    }
                    shell * r * r
                })
                .collect();
            shells.iter().sum::<f64>() * dr * du * dp
        }
        _ => unreachable!("dimension validated on construction"),
    }
}

/// Masses `integral over B_t(a)` for every `t` in an increasing list,
/// computed from one shared polar/spherical sweep out to the largest `t`.
///
/// Per-entry convergence is checked at a tolerance scaled by `(t/t_max)^D`
/// so small-radius entries are held to proportionally tighter bounds.
pub fn ball_mass_profile(
    phi: &DensityField,
    a: &[f64],
    ts: &[f64],
    q: &QuadratureConfig,
) -> Result<Vec<f64>> {
    q.validate()?;
    if ts.is_empty() {
        return Err(Error::InvalidInput("empty radius list".into()));
    }
    if ts.windows(2).any(|w| w[1] <= w[0]) || ts[0] <= 0.0 {
        return Err(Error::InvalidInput(
            "profile radii must be positive and strictly increasing".into(),
        ));
    }
    let t_max = *ts.last().unwrap();
    let dim = phi.dim() as i32;
    let mut prev_raw: Option<Vec<f64>> = None;
    let mut prev: Option<Vec<f64>> = None;
    let mut worst_change = f64::INFINITY;
    for level in 0..=q.max_levels {
        let raw = profile_level(phi, a, ts, t_max, q, level);
        // Per-entry Richardson step, as in `ball_mass`.
        let masses: Vec<f64> = match &prev_raw {
            None => raw.clone(),
            Some(pr) => raw
                .iter()
                .zip(pr)
                .map(|(m, pm)| m + (m - pm) / 3.0)
                .collect(),
        };
        if let Some(p) = &prev {
            // Worst per-entry change measured in units of that entry's
            // tolerance; below 1 means every entry converged.
            worst_change = masses
                .iter()
                .zip(p)
                .zip(ts)
                .map(|((m, pm), t)| {
                    let tol = (q.tolerance * (t / t_max).powi(dim)).max(1e-12);
                    (m - pm).abs() / tol
                })
                .fold(0.0, f64::max);
            if worst_change < 1.0 {
                return Ok(masses);
            }
        }
        prev_raw = Some(raw);
        prev = Some(masses);
    }
    Err(Error::QuadratureNonConvergence {
        estimate: *prev.unwrap().last().unwrap(),
        // Scaled back so `change` and `tolerance` are comparable: the worst
        // entry missed its own tolerance by the factor `change / tolerance`.
        change: worst_change * q.tolerance,
        tolerance: q.tolerance,
    })
}

fn profile_level(
    phi: &DensityField,
    a: &[f64],
    ts: &[f64],
    t_max: f64,
    q: &QuadratureConfig,
    level: usize,
) -> Vec<f64> {
    // Ring integrals over radial cells [i dr, (i+1) dr]. The cell straddled
    // by each t gets its own midpoint evaluation over [r_lo, t]; splitting
    // the full ring by area instead leaves an error whose sign flips with
    // the cell alignment across levels, defeating Richardson extrapolation.
    let dim = phi.dim();
    let nr = match dim {
        2 => q.radial << level,
        _ => q.per_axis << level,
    };
    let dr = t_max / nr as f64;
    // Linear density of the sphere integral at radius r: mass(t) = its
    // integral over [0, t].
    let density: Box<dyn Fn(f64) -> f64 + Send + Sync> = match dim {
        1 => Box::new(move |r: f64| phi.eval(&[a[0] - r]) + phi.eval(&[a[0] + r])),
        2 => {
            let nth = q.angular << level;
            let dth = 2.0 * std::f64::consts::PI / nth as f64;
            let trig: Vec<(f64, f64)> = (0..nth)
                .map(|j| {
                    let th = (j as f64 + 0.5) * dth;
                    (th.cos(), th.sin())
                })
                .collect();
            Box::new(move |r: f64| {
                let mut ring = 0.0;
                for &(c, s) in &trig {
                    ring += phi.eval(&[a[0] + r * c, a[1] + r * s]);
                }
                ring * r * dth
            })
        }
        3 => {
            let nu = q.per_axis << level;
            let np = 2 * (q.per_axis << level);
            let du = 2.0 / nu as f64;
            let dp = 2.0 * std::f64::consts::PI / np as f64;
            let trig: Vec<(f64, f64)> = (0..np)
                .map(|k| {
                    let p = (k as f64 + 0.5) * dp;
                    (p.cos(), p.sin())
                })
                .collect();
            Box::new(move |r: f64| {
                let mut shell = 0.0;
                for j in 0..nu {
                    let u = -1.0 + (j as f64 + 0.5) * du;
                    let s = (1.0 - u * u).sqrt();
                    for &(cp, sp) in &trig {
                        shell += phi.eval(&[a[0] + r * s * cp, a[1] + r * s * sp, a[2] + r * u]);
                    }
                }
                shell * r * r * du * dp
            })
        }
        _ => unreachable!("dimension validated on construction"),
    };

    let rings: Vec<f64> = (0..nr)
        .into_par_iter()
        .map(|i| density((i as f64 + 0.5) * dr) * dr)
        .collect();

    let mut masses = Vec::with_capacity(ts.len());
    let mut acc = 0.0;
    let mut i = 0usize;
    for &t in ts {
        while i < rings.len() && (i as f64 + 1.0) * dr <= t {
            acc += rings[i];
            i += 1;
        }
        let mut m = acc;
        let r_lo = i as f64 * dr;
        if t > r_lo {
            m += density(0.5 * (r_lo + t)) * (t - r_lo);
        }
        masses.push(m);
    }
    masses
}

/// `integral of phi over (a + Omega)` for a ball or box region.
pub fn region_mass(
    phi: &DensityField,
    region: &Region,
    shift: &[f64],
    q: &QuadratureConfig,
) -> Result<f64> {
    match region {
        Region::Ball(b) => {
            let center: Vec<f64> = b.center.iter().zip(shift).map(|(c, s)| c + s).collect();
            ball_mass(phi, &center, b.radius, q)
        }
        Region::Box(b) => box_mass(phi, b, shift, q),
    }
}

fn box_mass(phi: &DensityField, b: &BoxRegion, shift: &[f64], q: &QuadratureConfig) -> Result<f64> {
    q.validate()?;
    if b.dim() != phi.dim() || shift.len() != phi.dim() {
        return Err(Error::DimensionMismatch {
            expected: phi.dim(),
            got: b.dim(),
        });
    }
    let dim = phi.dim();
    let mut prev = f64::NAN;
    for level in 0..=q.max_levels {
        let n = q.per_axis << level;
        let hs: Vec<f64> = (0..dim).map(|k| (b.hi[k] - b.lo[k]) / n as f64).collect();
        let cell: f64 = hs.iter().product();
        let sum: f64 = match dim {
            1 => (0..n)
                .map(|i| phi.eval(&[b.lo[0] + shift[0] + (i as f64 + 0.5) * hs[0]]))
                .sum(),
            2 => (0..n)
                .into_par_iter()
                .map(|i| {
                    let x = b.lo[0] + shift[0] + (i as f64 + 0.5) * hs[0];
                    (0..n)
                        .map(|j| phi.eval(&[x, b.lo[1] + shift[1] + (j as f64 + 0.5) * hs[1]]))
                        .sum::<f64>()
                })
                .sum(),
            3 => (0..n)
                .into_par_iter()
                .map(|i| {
                    let x = b.lo[0] + shift[0] + (i as f64 + 0.5) * hs[0];
                    let mut s = 0.0;
                    for j in 0..n {
                        let y = b.lo[1] + shift[1] + (j as f64 + 0.5) * hs[1];
                        for k in 0..n {
                            s += phi.eval(&[x, y, b.lo[2] + shift[2] + (k as f64 + 0.5) * hs[2]]);
                        }
                    }
                    s
                })
                .sum(),
            _ => unreachable!(),
        };
        let estimate = sum * cell;
        if level > 0 && (estimate - prev).abs() < q.tolerance {
            return Ok(estimate);
        }
        prev = estimate;
    }
    Err(Error::QuadratureNonConvergence {
        estimate: prev,
        change: f64::NAN,
        tolerance: q.tolerance,
    })
}

/// Settings for the grid search realizing `sup` over translates.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TranslateSearchConfig {
    pub search_box: BoxRegion,
    /// Initial grid spacing; this fixes the reported error bound.
    pub spacing: f64,
    /// Local refinement passes around the best grid point.
    pub refine_passes: usize,
}

impl TranslateSearchConfig {
    pub fn new(search_box: BoxRegion, spacing: f64, refine_passes: usize) -> Result<Self> {
        if !(spacing > 0.0) {
            return Err(Error::InvalidInput(format!(
                "search spacing must be positive, got {spacing}"
            )));
        }
        Ok(TranslateSearchConfig {
            search_box,
            spacing,
            refine_passes,
        })
    }

    /// Default search for a field: one fundamental domain for periodic
    /// fields, the supplied fallback box otherwise.
    pub fn for_field(phi: &DensityField, fallback: BoxRegion, spacing: f64) -> Result<Self> {
        let search_box = phi.fundamental_domain().unwrap_or(fallback);
        Self::new(search_box, spacing, 2)
    }
}

/// Result of a translate-sup search: the best grid value, its location and
/// the Lipschitz bound on how far the true supremum over the box can exceed
/// the value.
#[derive(Debug, Clone, PartialEq)]
pub struct SupEstimate {
    pub value: f64,
    pub argmax: Vec<f64>,
    pub error_bound: f64,
}

/// Maximize a function over a box by exhaustive grid evaluation plus local
/// refinement passes (each pass shrinks the spacing by 4 around the best
/// point). Evaluation failures propagate.
pub fn grid_search_max<F>(
    search_box: &BoxRegion,
    spacing: f64,
    refine_passes: usize,
    mut objective: F,
) -> Result<(f64, Vec<f64>)>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let dim = search_box.dim();
    let counts: Vec<usize> = (0..dim)
        .map(|k| ((search_box.hi[k] - search_box.lo[k]) / spacing).floor() as usize + 1)
        .collect();
    let mut best = f64::NEG_INFINITY;
    let mut best_at = vec![0.0; dim];
    let mut idx = vec![0usize; dim];
    loop {
        let point: Vec<f64> = (0..dim)
            .map(|k| (search_box.lo[k] + idx[k] as f64 * spacing).min(search_box.hi[k]))
            .collect();
        let v = objective(&point)?;
        if v > best {
            best = v;
            best_at = point;
        }
        // Odometer increment.
        let mut k = 0;
        loop {
            if k == dim {
                break;
            }
            idx[k] += 1;
            if idx[k] < counts[k] {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == dim {
            break;
        }
    }

    let mut h = spacing;
    for _ in 0..refine_passes {
        let step = h / 4.0;
        let center = best_at.clone();
        let mut offs = vec![0i64; dim];
        // Scan the cube center +- h at spacing h/4, clamped to the box.
        loop {
            let point: Vec<f64> = (0..dim)
                .map(|k| {
                    (center[k] + offs[k] as f64 * step)
                        .clamp(search_box.lo[k], search_box.hi[k])
                })
                .collect();
            let v = objective(&point)?;
            if v > best {
                best = v;
                best_at = point;
            }
            let mut k = 0;
            loop {
                if k == dim {
                    break;
                }
                offs[k] += 1;
                if offs[k] <= 4 {
                    break;
                }
                offs[k] = -4;
                k += 1;
            }
            if k == dim {
                break;
            }
        }
        h = step;
    }
    Ok((best, best_at))
}

/// `sup over a` of `integral of phi over B_t(a)` by grid search with local
/// refinement.
///
/// The reported `error_bound` is the Lipschitz certificate
/// `surface_area(B_t) * spacing * sup phi` on the excess of the true
/// supremum over the returned value (in D = 2: `2 pi t h`).
pub fn sup_translate_ball_mass(
    phi: &DensityField,
    t: f64,
    s: &TranslateSearchConfig,
    q: &QuadratureConfig,
) -> Result<SupEstimate> {
    if s.search_box.dim() != phi.dim() {
        return Err(Error::DimensionMismatch {
            expected: phi.dim(),
            got: s.search_box.dim(),
        });
    }
    let (value, argmax) = grid_search_max(&s.search_box, s.spacing, s.refine_passes, |a| {
        ball_mass(phi, a, t, q)
    })?;
    let error_bound = sphere_area(phi.dim(), t)? * s.spacing;
    Ok(SupEstimate {
        value,
        argmax,
        error_bound,
    })
}

/// Total mass of a field over the ball, never exceeding `|B_t|`.
pub fn ball_volume_bound(dim: usize, t: f64) -> f64 {
    ball_volume(dim, t).unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn q() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn constant_field_full_disk() {
        let phi = DensityField::constant(2, 1.0).unwrap();
        let m = ball_mass(&phi, &[0.0, 0.0], 2.0, &q()).unwrap();
        assert_relative_eq!(m, 4.0 * PI, epsilon = 1e-5);
    }

    #[test]
    fn half_plane_half_disk() {
        let phi = DensityField::half_space(2, 0).unwrap();
        let m = ball_mass(&phi, &[0.0, 0.0], 1.0, &q()).unwrap();
        assert_relative_eq!(m, PI / 2.0, epsilon = 1e-5);
    }

    #[test]
    fn translate_definition_unfold() {
        // phi = indicator of B_1(0); mass moves to -a under (a.mu).
        let phi = DensityField::ball_indicator(Ball::centered(2, 1.0).unwrap());
        let shifted = phi.translate(&[3.0, 0.0]).unwrap();
        assert_eq!(shifted.eval(&[-3.0, 0.0]), 1.0);
        assert_eq!(shifted.eval(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn translate_constant_and_inverse() {
        let phi = DensityField::constant(2, 0.5).unwrap();
        let t = phi.translate(&[2.0, -1.0]).unwrap();
        assert_eq!(t.eval(&[0.3, 0.4]), 0.5);

        let lattice = DensityField::disk_lattice(1.0, 0.25).unwrap();
        let back = lattice
            .translate(&[0.3, 0.7])
            .unwrap()
            .translate(&[-0.3, -0.7])
            .unwrap();
        for i in 0..10 {
            for j in 0..10 {
                let x = [i as f64 * 0.17 - 0.5, j as f64 * 0.23 - 0.5];
                assert_eq!(lattice.eval(&x), back.eval(&x));
            }
        }
    }

    #[test]
    fn translate_rejects_dimension_mismatch() {
        let phi = DensityField::constant(2, 0.5).unwrap();
        assert!(phi.translate(&[1.0]).is_err());
    }

    #[test]
    fn translation_equivariance_random() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let qc = q().with_tolerance(3e-3);
        for _ in 0..100 {
            let dim = 2;
            let balls: Vec<Ball> = (0..rng.gen_range(1..4))
                .map(|_| {
                    Ball::new(
                        (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect(),
                        rng.gen_range(0.3..1.5),
                    )
                    .unwrap()
                })
                .collect();
            let phi = DensityField::sparse_cluster(balls).unwrap();
            let a: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let b: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let t = rng.gen_range(0.5..3.0);
            let lhs = ball_mass(&phi.translate(&a).unwrap(), &b, t, &qc).unwrap();
            let ab: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            let rhs = ball_mass(&phi, &ab, t, &qc).unwrap();
            assert!(
                (lhs - rhs).abs() <= 2.0 * qc.tolerance,
                "equivariance violated: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn mass_monotone_and_bounded() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let qc = q().with_tolerance(5e-3);
        let phi = DensityField::disk_lattice(1.0, 0.25).unwrap();
        for _ in 0..20 {
            let a = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let t1 = rng.gen_range(0.5..2.0);
            let t2 = t1 + rng.gen_range(0.1..2.0);
            let m1 = ball_mass(&phi, &a, t1, &qc).unwrap();
            let m2 = ball_mass(&phi, &a, t2, &qc).unwrap();
            assert!(m1 <= m2 + qc.tolerance);
            assert!(m1 >= -qc.tolerance);
            assert!(m1 <= ball_volume(2, t1).unwrap() + qc.tolerance);
            assert!(m2 <= ball_volume(2, t2).unwrap() + qc.tolerance);
        }
    }

    #[test]
    fn profile_matches_individual_masses() {
        let phi = DensityField::disk_lattice(1.0, 0.25).unwrap();
        let qc = q().with_tolerance(2e-3);
        let ts = [0.7, 1.9, 3.1, 5.0];
        let prof = ball_mass_profile(&phi, &[0.13, 0.41], &ts, &qc).unwrap();
        for (&t, &m) in ts.iter().zip(&prof) {
            let direct = ball_mass(&phi, &[0.13, 0.41], t, &qc).unwrap();
            assert!(
                (m - direct).abs() < 8e-3 * (1.0 + direct),
                "t={t}: profile {m} vs direct {direct}"
            );
        }
    }

    #[test]
    fn sup_translate_constant_field() {
        let phi = DensityField::constant(2, 0.4).unwrap();
        let s = TranslateSearchConfig::new(BoxRegion::cube(2, 1.0).unwrap(), 0.25, 1).unwrap();
        let sup = sup_translate_ball_mass(&phi, 2.0, &s, &q()).unwrap();
        assert_relative_eq!(sup.value, 0.4 * 4.0 * PI, epsilon = 1e-4);
        assert_relative_eq!(sup.error_bound, 2.0 * PI * 2.0 * 0.25);
    }

    #[test]
    fn sup_translate_ball_indicator_perfect_overlap() {
        let phi = DensityField::ball_indicator(Ball::centered(2, 1.0).unwrap());
        let s = TranslateSearchConfig::new(
            BoxRegion::new(vec![-0.5, -0.5], vec![0.5, 0.5]).unwrap(),
            0.25,
            2,
        )
        .unwrap();
        let qc = q().with_tolerance(1e-3);
        let sup = sup_translate_ball_mass(&phi, 1.0, &s, &qc).unwrap();
        assert!((sup.value - PI).abs() < 0.02, "sup {}", sup.value);
        assert!(sup.argmax.iter().all(|v| v.abs() < 0.08));
    }

    #[test]
    fn sup_dominates_sample_point() {
        let phi = DensityField::disk_lattice(1.0, 0.25).unwrap();
        let s = TranslateSearchConfig::for_field(
            &phi,
            BoxRegion::cube(2, 1.0).unwrap(),
            0.25,
        )
        .unwrap();
        let qc = q().with_tolerance(2e-3);
        let t = 3.0;
        let sup = sup_translate_ball_mass(&phi, t, &s, &qc).unwrap();
        let sample = ball_mass(&phi, &[0.0, 0.0], t, &qc).unwrap();
        assert!(sup.value >= sample - 2.0 * qc.tolerance);
    }

    #[test]
    fn lattice_large_ball_average_near_area_fraction() {
        let phi = DensityField::disk_lattice(1.0, 0.25).unwrap();
        let s = TranslateSearchConfig::for_field(
            &phi,
            BoxRegion::cube(2, 1.0).unwrap(),
            0.25,
        )
        .unwrap();
        let qc = q().with_tolerance(0.5);
        let t = 20.0;
        let sup = sup_translate_ball_mass(&phi, t, &s, &qc).unwrap();
        let avg = sup.value / (PI * t * t);
        assert!(
            (avg - PI / 16.0).abs() < 0.02,
            "average {avg} vs fraction {}",
            PI / 16.0
        );
    }

    #[test]
    fn box_mass_of_stripes() {
        let phi = DensityField::stripes(2, 1.0, 0.5).unwrap();
        let b = BoxRegion::cube(2, 4.0).unwrap();
        let m = region_mass(&phi, &Region::Box(b), &[0.0, 0.0], &q().with_tolerance(1e-4)).unwrap();
        assert_relative_eq!(m, 8.0, epsilon = 1e-3);
    }

    #[test]
    fn user_grid_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grid.csv");
        std::fs::write(&path, "2, 2, 2, 0, 0, 1, 1\n0.0, 1.0\n0.25, 0.5\n").unwrap();
        let phi = load_user_grid_csv(&path).unwrap();
        assert_eq!(phi.eval(&[0.5, 0.5]), 0.0);
        assert_eq!(phi.eval(&[1.5, 0.5]), 1.0);
        assert_eq!(phi.eval(&[0.5, 1.5]), 0.25);
        assert_eq!(phi.eval(&[1.5, 1.5]), 0.5);
        // Outside the raster evaluates to 0.
        assert_eq!(phi.eval(&[-0.5, 0.5]), 0.0);
        assert_eq!(phi.eval(&[2.5, 0.5]), 0.0);
    }

    #[test]
    fn non_convergent_quadrature_reports_failure() {
        // One refinement level cannot pin an indicator boundary to 1e-12.
        let phi = DensityField::ball_indicator(Ball::centered(2, 0.5).unwrap());
        let qc = QuadratureConfig {
            radial: 4,
            angular: 4,
            per_axis: 4,
            max_levels: 1,
            tolerance: 1e-12,
        };
        let err = ball_mass(&phi, &[1.0, 1.0], 2.0, &qc).unwrap_err();
        assert!(matches!(err, Error::QuadratureNonConvergence { .. }));
    }
}

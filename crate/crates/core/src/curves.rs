//! Meromorphic maps `C -> CP^1`: spherical derivative evaluation, the
//! curve-energy density field `min(|df|^2, 1)`, Brody-constant estimation,
//! and the sparse lattice-cluster function `f(z) = sum 1/(cz - lambda)^3`
//! with calibration of the scale constant `c`.
//!
//! The Fubini-Study form is normalized so that `|df| = |f'| / (1 + |f|^2)`
//! (total sphere area `pi`); with `|df| <= 1` this gives
//! `T(r, f) <= pi r^2 / 2`.

use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Deserialize;

use crate::field::DensityField;
use crate::geometry::BoxRegion;
use crate::{Error, Result};

/// Dense polynomial over `C`, coefficients in ascending degree order.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial(Vec<Complex64>);

impl Polynomial {
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.len() > 1 && coeffs.last().map_or(false, |c| c.norm() == 0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(Complex64::new(0.0, 0.0));
        }
        Polynomial(coeffs)
    }

    pub fn from_reals(coeffs: &[f64]) -> Self {
        Polynomial::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| c.norm() == 0.0)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in self.0.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    pub fn derivative(&self) -> Polynomial {
        if self.0.len() == 1 {
            return Polynomial::new(vec![Complex64::new(0.0, 0.0)]);
        }
        Polynomial::new(
            self.0[1..]
                .iter()
                .enumerate()
                .map(|(i, &c)| c * (i as f64 + 1.0))
                .collect(),
        )
    }

    fn norm(&self) -> f64 {
        self.0.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Remainder of `self / other` (float Euclid step): degree strictly
    /// below `other`'s.
    fn rem(&self, other: &Polynomial) -> Polynomial {
        let mut r = self.0.clone();
        let d = other.degree();
        let lead = other.0[d];
        while r.len() > d {
            let k = r.len() - 1;
            let factor = r[k] / lead;
            for i in 0..=d {
                let idx = k - d + i;
                r[idx] -= factor * other.0[i];
            }
            r.pop();
        }
        Polynomial::new(r)
    }

    /// Drop leading coefficients that are negligible relative to the
    /// largest one (they are float residue, not genuine degree).
    fn trim(&self) -> Polynomial {
        let n = self.norm();
        let mut c = self.0.clone();
        while c.len() > 1 && c.last().unwrap().norm() <= 1e-12 * n {
            c.pop();
        }
        Polynomial::new(c)
    }

    /// Scale so the largest coefficient has norm 1 (zero stays zero).
    fn normalized(&self) -> Polynomial {
        let n = self.norm();
        if n == 0.0 {
            return self.clone();
        }
        Polynomial::new(self.0.iter().map(|&c| c / n).collect())
    }
}

/// Approximate common-root detection via a Euclidean remainder sequence.
/// Operands are renormalized each step so the near-zero test is relative.
fn have_common_root(a: &Polynomial, b: &Polynomial) -> bool {
    let (mut r0, mut r1) = if a.degree() >= b.degree() {
        (a.trim().normalized(), b.trim().normalized())
    } else {
        (b.trim().normalized(), a.trim().normalized())
    };
    // Degrees strictly decrease, so this runs at most deg(r0) times.
    for _ in 0..=r0.degree() {
        if r1.degree() == 0 {
            return r1.norm() < 1e-10 && r0.degree() >= 1;
        }
        let r2 = r0.rem(&r1).trim();
        if r2.norm() < 1e-10 {
            // r1 is a (near) common factor.
            return true;
        }
        r0 = r1;
        r1 = r2.normalized();
    }
    false
}

/// Rule generating the cluster centers `a_n`.
#[derive(Debug, Clone, PartialEq)]
pub enum CenterRule {
    /// `a_n = n^2` (the default growth rate).
    Squares,
    /// Explicit center list.
    Explicit(Vec<f64>),
}

/// Geometry of the sparse lattice clusters: cluster `n` (1-based) collects
/// the points of `Z^2` within distance `n` of the real center `a_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSpec {
    pub n_max: usize,
    pub rule: CenterRule,
}

impl ClusterSpec {
    pub fn new(n_max: usize, rule: CenterRule) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidInput("cluster count must be >= 1".into()));
        }
        let spec = ClusterSpec { n_max, rule };
        let centers = spec.centers();
        if centers.len() != n_max {
            return Err(Error::InvalidInput(format!(
                "center rule provides {} centers, need {n_max}",
                centers.len()
            )));
        }
        for n in 1..n_max {
            let gap = centers[n] - centers[n - 1];
            // Clusters n and n+1 must not overlap: a_{n+1} - a_n >= (n+1) + n.
            if gap < (2 * n + 1) as f64 {
                return Err(Error::InvalidInput(format!(
                    "cluster centers too close: a_{} - a_{} = {gap} < {}",
                    n + 1,
                    n,
                    2 * n + 1
                )));
            }
        }
        Ok(spec)
    }

    pub fn squares(n_max: usize) -> Result<Self> {
        ClusterSpec::new(n_max, CenterRule::Squares)
    }

    pub fn centers(&self) -> Vec<f64> {
        match &self.rule {
            CenterRule::Squares => (1..=self.n_max).map(|n| (n * n) as f64).collect(),
            CenterRule::Explicit(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Cluster {
    center: f64,
    radius: f64,
    points: Vec<Complex64>,
}

/// The lattice-cluster curve in scaled coordinates: `f(z) = g(c z)` where
/// `g(w) = sum over lattice points of 1/(w - lambda)^3`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterCurve {
    spec: ClusterSpec,
    c: f64,
    clusters: Vec<Cluster>,
    /// Far clusters are dropped when their summed tail bound is below this.
    drop_threshold: f64,
}

/// Default drop threshold for far-cluster truncation.
pub const DEFAULT_DROP_THRESHOLD: f64 = 1e-12;

/// Value of `g` (or `f`) together with the truncation tail bound from
/// dropped clusters.
#[derive(Debug, Clone, Copy)]
pub struct TruncatedValue {
    pub value: Complex64,
    pub tail_bound: f64,
}

impl ClusterCurve {
    pub fn new(spec: ClusterSpec, c: f64, drop_threshold: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::InvalidInput(format!(
                "scale constant c must be positive, got {c}"
            )));
        }
        let mut seen = std::collections::HashSet::new();
        let mut clusters = Vec::with_capacity(spec.n_max);
        for (i, center) in spec.centers().into_iter().enumerate() {
            let n = (i + 1) as f64;
            let mut points = Vec::new();
            let x_lo = (center - n).ceil() as i64;
            let x_hi = (center + n).floor() as i64;
            for x in x_lo..=x_hi {
                let dx = x as f64 - center;
                let y_span = (n * n - dx * dx).max(0.0).sqrt().floor() as i64;
                for y in -y_span..=y_span {
                    // Touching clusters may share a lattice point; it belongs
                    // to the set once.
                    if seen.insert((x, y)) {
                        points.push(Complex64::new(x as f64, y as f64));
                    }
                }
            }
            clusters.push(Cluster {
                center,
                radius: n,
                points,
            });
        }
        Ok(ClusterCurve {
            spec,
            c,
            clusters,
            drop_threshold,
        })
    }

    pub fn spec(&self) -> &ClusterSpec {
        &self.spec
    }

    pub fn scale(&self) -> f64 {
        self.c
    }

    pub fn drop_threshold(&self) -> f64 {
        self.drop_threshold
    }

    pub fn with_drop_threshold(&self, drop_threshold: f64) -> Self {
        ClusterCurve {
            drop_threshold,
            ..self.clone()
        }
    }

    pub fn lattice_size(&self) -> usize {
        self.clusters.iter().map(|c| c.points.len()).sum()
    }

    pub fn lattice_contains(&self, x: i64, y: i64) -> bool {
        let p = Complex64::new(x as f64, y as f64);
        self.clusters.iter().any(|c| c.points.contains(&p))
    }

    /// Pole locations in the z-plane (`lambda / c`).
    pub fn pole_images(&self) -> Vec<Complex64> {
        self.clusters
            .iter()
            .flat_map(|cl| cl.points.iter().map(|&p| p / self.c))
            .collect()
    }

    /// Cluster image centers `a_n / c` and radii `n / c` in the z-plane.
    pub fn cluster_images(&self) -> Vec<(Complex64, f64)> {
        self.clusters
            .iter()
            .map(|cl| (Complex64::new(cl.center / self.c, 0.0), cl.radius / self.c))
            .collect()
    }

    fn cluster_dropped(&self, cluster: &Cluster, w: Complex64) -> Option<(f64, f64)> {
        let d = (w - Complex64::new(cluster.center, 0.0)).norm() - cluster.radius;
        if d < 2.0 {
            return None;
        }
        let count = cluster.points.len() as f64;
        let bound_g = count / (d * d * d);
        let bound_gp = 3.0 * count / (d * d * d * d);
        if bound_g < self.drop_threshold && bound_gp < self.drop_threshold {
            Some((bound_g, bound_gp))
        } else {
            None
        }
    }

    /// `g(w)`, `g'(w)`, tail bounds, and the nearest lattice point.
    fn eval_g(&self, w: Complex64) -> GEval {
        let mut g = Complex64::new(0.0, 0.0);
        let mut gp = Complex64::new(0.0, 0.0);
        let mut tail_g = 0.0;
        let mut nearest = Complex64::new(f64::INFINITY, 0.0);
        let mut nearest_d2 = f64::INFINITY;
        for cluster in &self.clusters {
            if let Some((bg, _bgp)) = self.cluster_dropped(cluster, w) {
                tail_g += bg;
                continue;
            }
            for &lambda in &cluster.points {
                let t = w - lambda;
                let d2 = t.norm_sqr();
                if d2 < nearest_d2 {
                    nearest_d2 = d2;
                    nearest = lambda;
                }
                let inv = t.inv();
                let i2 = inv * inv;
                let i3 = i2 * inv;
                g += i3;
                gp -= 3.0 * i3 * inv;
            }
        }
        GEval {
            g,
            gp,
            tail_g,
            nearest,
            nearest_dist: nearest_d2.sqrt(),
        }
    }

    /// Sums over all lattice points except `skip` (used near poles where
    /// the skipped term dominates).
    fn eval_rest(&self, w: Complex64, skip: Complex64) -> (Complex64, Complex64) {
        let mut g = Complex64::new(0.0, 0.0);
        let mut gp = Complex64::new(0.0, 0.0);
        for cluster in &self.clusters {
            if self.cluster_dropped(cluster, w).is_some() {
                continue;
            }
            for &lambda in &cluster.points {
                if lambda == skip {
                    continue;
                }
                let inv = (w - lambda).inv();
                let i2 = inv * inv;
                let i3 = i2 * inv;
                g += i3;
                gp -= 3.0 * i3 * inv;
            }
        }
        (g, gp)
    }

    /// `f(z) = g(c z)` with the truncation tail bound.
    pub fn eval(&self, z: Complex64) -> TruncatedValue {
        let e = self.eval_g(self.c * z);
        TruncatedValue {
            value: e.g,
            tail_bound: e.tail_g,
        }
    }

    /// Spherical derivative of `g` at `w` (scale `c = 1` coordinates),
    /// stable across poles.
    fn spherical_derivative_g(&self, w: Complex64) -> f64 {
        let e = self.eval_g(w);
        if e.nearest_dist < 0.5 {
            // Split off the dominant pole: g = (1 + u^3 rest) / u^3 with
            // u = w - lambda; the homogeneous formula stays finite at u = 0.
            let (rest, rest_p) = self.eval_rest(w, e.nearest);
            let u = w - e.nearest;
            let u2 = u * u;
            let u3 = u2 * u;
            let u6 = u3 * u3;
            let num = (u6 * rest_p - 3.0 * u2).norm();
            let den = (1.0 + u3 * rest).norm_sqr() + u3.norm_sqr();
            num / den
        } else if e.g.norm_sqr() <= 1.0 {
            e.gp.norm() / (1.0 + e.g.norm_sqr())
        } else {
            // Reciprocal branch: |d(1/g)| = |dg|, computed without squaring
            // a large |g|.
            let inv = e.g.inv();
            let v = e.gp * inv * inv;
            v.norm() / (1.0 + inv.norm_sqr())
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct GEval {
    g: Complex64,
    gp: Complex64,
    tail_g: f64,
    nearest: Complex64,
    nearest_dist: f64,
}

/// A meromorphic curve `C -> CP^1`.
#[derive(Debug, Clone, PartialEq)]
pub enum MeromorphicCurve {
    Rational { num: Polynomial, den: Polynomial },
    Cluster(ClusterCurve),
}

impl MeromorphicCurve {
    pub fn rational(num: Polynomial, den: Polynomial) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::InvalidInput(
                "rational curve denominator is identically zero".into(),
            ));
        }
        if !num.is_zero() && have_common_root(&num, &den) {
            return Err(Error::InvalidInput(
                "rational curve is not reduced: numerator and denominator share a root".into(),
            ));
        }
        Ok(MeromorphicCurve::Rational { num, den })
    }

    /// `f(z) = z`.
    pub fn identity() -> Self {
        MeromorphicCurve::Rational {
            num: Polynomial::from_reals(&[0.0, 1.0]),
            den: Polynomial::from_reals(&[1.0]),
        }
    }

    pub fn constant(value: Complex64) -> Self {
        MeromorphicCurve::Rational {
            num: Polynomial::new(vec![value]),
            den: Polynomial::from_reals(&[1.0]),
        }
    }

    /// The reciprocal curve `1/f`.
    pub fn reciprocal(&self) -> Result<Self> {
        match self {
            MeromorphicCurve::Rational { num, den } => Ok(MeromorphicCurve::Rational {
                num: den.clone(),
                den: num.clone(),
            }),
            MeromorphicCurve::Cluster(_) => Err(Error::InvalidInput(
                "reciprocal is only available for rational curves".into(),
            )),
        }
    }

    /// Spherical derivative `|f'| / (1 + |f|^2)`, extended continuously
    /// across poles.
    ///
    /// Rational curves use the homogeneous form
    /// `|p'q - pq'| / (|p|^2 + |q|^2)`; cluster curves switch to the
    /// reciprocal representation when `|f| > 1` and to a pole-split form
    /// near lattice points.
    pub fn spherical_derivative(&self, z: Complex64) -> f64 {
        match self {
            MeromorphicCurve::Rational { num, den } => {
                let p = num.eval(z);
                let q = den.eval(z);
                let pp = num.derivative().eval(z);
                let qp = den.derivative().eval(z);
                (pp * q - p * qp).norm() / (p.norm_sqr() + q.norm_sqr())
            }
            MeromorphicCurve::Cluster(curve) => {
                curve.c * curve.spherical_derivative_g(curve.c * z)
            }
        }
    }

    /// Curve value at `z` (rational curves report a zero tail bound).
    pub fn eval(&self, z: Complex64) -> TruncatedValue {
        match self {
            MeromorphicCurve::Rational { num, den } => TruncatedValue {
                value: num.eval(z) / den.eval(z),
                tail_bound: 0.0,
            },
            MeromorphicCurve::Cluster(curve) => curve.eval(z),
        }
    }
}

/// The density field `z -> min(|df|(z)^2, 1)`, tagged curve-energy.
///
/// Evaluation clips at 1 and records that clipping occurred; query
/// `DensityField::clipping_occurred` after use to detect non-Brody input.
pub fn curve_energy_field(curve: &MeromorphicCurve) -> DensityField {
    DensityField::curve_energy(Arc::new(curve.clone()))
}

/// Grid estimate of `sup |df|` over a box, with a refinement pass around
/// the top grid points. `grid_spacing` records the sampling resolution;
/// no rigorous global bound is claimed.
#[derive(Debug, Clone, PartialEq)]
pub struct BrodyEstimate {
    pub sup: f64,
    pub argmax: Complex64,
    pub grid_spacing: f64,
}

/// Estimate the Brody constant `sup |df|` over `box_region` by grid
/// sampling plus local refinement around the 10 best grid points.
pub fn brody_constant(
    curve: &MeromorphicCurve,
    box_region: &BoxRegion,
    spacing: f64,
) -> Result<BrodyEstimate> {
    if box_region.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: box_region.dim(),
        });
    }
    if !(spacing > 0.0) {
        return Err(Error::InvalidInput(format!(
            "grid spacing must be positive, got {spacing}"
        )));
    }
    let nx = ((box_region.hi[0] - box_region.lo[0]) / spacing).floor() as usize + 1;
    let ny = ((box_region.hi[1] - box_region.lo[1]) / spacing).floor() as usize + 1;
    // Best point per row, then the 10 best rows get a local refinement.
    let mut per_row: Vec<(f64, Complex64)> = (0..nx)
        .into_par_iter()
        .map(|i| {
            let x = (box_region.lo[0] + i as f64 * spacing).min(box_region.hi[0]);
            let mut best = (f64::NEG_INFINITY, Complex64::new(0.0, 0.0));
            for j in 0..ny {
                let y = (box_region.lo[1] + j as f64 * spacing).min(box_region.hi[1]);
                let z = Complex64::new(x, y);
                let v = curve.spherical_derivative(z);
                if v > best.0 {
                    best = (v, z);
                }
            }
            best
        })
        .collect();
    per_row.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let mut sup = per_row[0].0;
    let mut argmax = per_row[0].1;
    for &(_, seed) in per_row.iter().take(10) {
        let mut center = seed;
        let mut h = spacing;
        for _ in 0..3 {
            let step = h / 4.0;
            for di in -4i32..=4 {
                for dj in -4i32..=4 {
                    let z = center + Complex64::new(di as f64 * step, dj as f64 * step);
                    let v = curve.spherical_derivative(z);
                    if v > sup {
                        sup = v;
                        argmax = z;
                    }
                }
            }
            center = argmax;
            h = step;
        }
    }
    Ok(BrodyEstimate {
        sup,
        argmax,
        grid_spacing: spacing,
    })
}

/// Build the lattice-cluster curve `f(z) = sum 1/(cz - lambda)^3`.
pub fn build_cluster_curve(spec: &ClusterSpec, c: f64) -> Result<MeromorphicCurve> {
    Ok(MeromorphicCurve::Cluster(ClusterCurve::new(
        spec.clone(),
        c,
        DEFAULT_DROP_THRESHOLD,
    )?))
}

/// Calibration output: the chosen scale `c` and the sup estimate of
/// `|dg|` it was derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub c: f64,
    pub sup_dg: f64,
}

/// The calibration rule `c = (1 - margin) / s`.
pub fn scale_from_sup(sup_dg: f64, target_margin: f64) -> f64 {
    (1.0 - target_margin) / sup_dg
}

/// Choose `c` so that `sup |df_c| <= 1 - margin` on the sampled region,
/// using the scaling identity `|df_c|(z) = c |dg|(cz)`: one sup estimate
/// of `|dg|` over the clusters (plus separation gaps) fixes `c`.
pub fn calibrate_c(spec: &ClusterSpec, target_margin: f64) -> Result<Calibration> {
    if !(0.0 < target_margin && target_margin < 1.0) {
        return Err(Error::InvalidInput(format!(
            "target margin must lie in (0, 1), got {target_margin}"
        )));
    }
    let g = ClusterCurve::new(spec.clone(), 1.0, DEFAULT_DROP_THRESHOLD)?;
    let curve = MeromorphicCurve::Cluster(g);
    let centers = spec.centers();
    let mut sup = 0.0f64;
    for (i, &a) in centers.iter().enumerate() {
        let n = (i + 1) as f64;
        let cluster_box = BoxRegion::new(vec![a - n - 2.0, -n - 2.0], vec![a + n + 2.0, n + 2.0])?;
        let est = brody_constant(&curve, &cluster_box, 0.05)?;
        sup = sup.max(est.sup);
    }
    // Separation gaps carry little energy but are sampled coarsely anyway.
    if centers.len() > 1 {
        let gap_box = BoxRegion::new(
            vec![centers[0], -2.0],
            vec![*centers.last().unwrap(), 2.0],
        )?;
        let est = brody_constant(&curve, &gap_box, 0.5)?;
        sup = sup.max(est.sup);
    }
    if !sup.is_finite() || sup <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "sup estimate of |dg| is not usable: {sup}"
        )));
    }
    Ok(Calibration {
        c: scale_from_sup(sup, target_margin),
        sup_dg: sup,
    })
}

#[derive(Deserialize)]
struct RationalJson {
    num: Vec<[f64; 2]>,
    den: Vec<[f64; 2]>,
}

/// Load a rational curve from JSON: numerator/denominator coefficient
/// arrays of `[re, im]` pairs, ascending degree.
pub fn load_rational_json(path: &Path) -> Result<MeromorphicCurve> {
    let text = std::fs::read_to_string(path)?;
    let raw: RationalJson =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("rational curve: {e}")))?;
    let to_poly = |v: Vec<[f64; 2]>| {
        Polynomial::new(v.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
    };
    MeromorphicCurve::rational(to_poly(raw.num), to_poly(raw.den))
}

//! Euclidean primitives: balls, boxes, volumes, r-boundaries and
//! Folner-sequence diagnostics in `R^D` for `D` in `{1, 2, 3}`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 3;

/// Closed ball `B_r(a) = { x : |x - a| <= r }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        check_dim(center.len())?;
        if !(radius > 0.0) {
            return Err(Error::InvalidInput(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        Ok(Ball { center, radius })
    }

    /// Ball at the origin.
    pub fn centered(dim: usize, radius: f64) -> Result<Self> {
        Ball::new(vec![0.0; dim], radius)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn volume(&self) -> f64 {
        ball_volume(self.dim(), self.radius).expect("ball was validated on construction")
    }

    pub fn distance_to(&self, other: &Ball) -> f64 {
        self.center
            .iter()
            .zip(&other.center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let d2: f64 = self
            .center
            .iter()
            .zip(x)
            .map(|(c, v)| (c - v) * (c - v))
            .sum();
        d2 <= self.radius * self.radius
    }
}

/// Axis-aligned box given by per-axis closed intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        check_dim(lo.len())?;
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        for (l, h) in lo.iter().zip(&hi) {
            if !(l < h) {
                return Err(Error::InvalidInput(format!(
                    "box interval [{l}, {h}] is degenerate"
                )));
            }
        }
        Ok(BoxRegion { lo, hi })
    }

    /// Cube `[0, n]^dim`.
    pub fn cube(dim: usize, n: f64) -> Result<Self> {
        BoxRegion::new(vec![0.0; dim], vec![n; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.lo
            .iter()
            .zip(&self.hi)
            .zip(x)
            .all(|((l, h), v)| *l <= *v && *v <= *h)
    }
}

/// A region usable in Folner sequences and Ornstein-Weiss averaging.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Region {
    Ball(Ball),
    Box(BoxRegion),
}

impl Region {
    pub fn dim(&self) -> usize {
        match self {
            Region::Ball(b) => b.dim(),
            Region::Box(b) => b.dim(),
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            Region::Ball(b) => b.volume(),
            Region::Box(b) => b.volume(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Region::Ball(b) => format!("ball(r={})", b.radius),
            Region::Box(b) => {
                let sides: Vec<String> = b
                    .lo
                    .iter()
                    .zip(&b.hi)
                    .map(|(l, h)| format!("{}", h - l))
                    .collect();
                format!("box({})", sides.join("x"))
            }
        }
    }
}

/// Lebesgue volume of the ball of radius `r` in `R^dim`.
pub fn ball_volume(dim: usize, r: f64) -> Result<f64> {
    check_dim(dim)?;
    if !(r > 0.0) {
        return Err(Error::InvalidInput(format!(
            "ball radius must be positive, got {r}"
        )));
    }
    Ok(unit_ball_volume(dim) * r.powi(dim as i32))
}

/// Surface area of the sphere of radius `r` in `R^dim` (the `d/dr` of
/// the ball volume; `2` for an interval's two endpoints in D = 1).
pub fn sphere_area(dim: usize, r: f64) -> Result<f64> {
    check_dim(dim)?;
    Ok(match dim {
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI * r,
        3 => 4.0 * std::f64::consts::PI * r * r,
        _ => unreachable!(),
    })
}

fn unit_ball_volume(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI / 3.0,
        _ => unreachable!(),
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || dim > MAX_DIM {
        Err(Error::UnsupportedDimension(dim))
    } else {
        Ok(())
    }
}

/// Volume of the r-boundary of a region: the set of points whose r-ball
/// meets both the region and its complement.
///
/// For a ball of radius `t` this is the closed annulus `|B_{t+r}| - |B_{t-r}|`
/// (the deflated part is empty when `t <= r`); for a box it is the inflated
/// box minus the deflated box, with the deflated box clamped at empty.
pub fn r_boundary_volume(region: &Region, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidInput(format!(
            "probe radius must be positive, got {r}"
        )));
    }
    let dim = region.dim();
    Ok(match region {
        Region::Ball(b) => {
            let outer = ball_volume(dim, b.radius + r)?;
            if b.radius > r {
                outer - ball_volume(dim, b.radius - r)?
            } else {
                outer
            }
        }
        Region::Box(b) => {
            // Outer offset by a Euclidean ball (Steiner formula: corners
            // are rounded, not square); inner offset of a box is a box,
            // empty as soon as one side collapses.
            let sides: Vec<f64> = b.lo.iter().zip(&b.hi).map(|(l, h)| h - l).collect();
            let pi = std::f64::consts::PI;
            let inflated = match sides.as_slice() {
                [a] => a + 2.0 * r,
                [a, bb] => a * bb + 2.0 * (a + bb) * r + pi * r * r,
                [a, bb, c] => {
                    a * bb * c
                        + 2.0 * (a * bb + bb * c + c * a) * r
                        + pi * r * r * (a + bb + c)
                        + 4.0 / 3.0 * pi * r * r * r
                }
                _ => unreachable!(),
            };
            let deflated: f64 = sides.iter().map(|s| (s - 2.0 * r).max(0.0)).product();
            inflated - deflated
        }
    })
}

/// One row of a Folner diagnostics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FolnerRow {
    pub label: String,
    pub volume: f64,
    pub boundary_volume: f64,
    pub ratio: f64,
}

/// Per-region boundary-to-volume ratios for a fixed probe radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FolnerDiagnostics {
    pub probe_radius: f64,
    pub rows: Vec<FolnerRow>,
    /// True when the ratios are strictly decreasing over the supplied prefix.
    pub consistent: bool,
}

/// Boundary ratios `|d_r Omega_n| / |Omega_n|` for a sequence of regions.
pub fn folner_diagnostics(sequence: &[Region], probe_r: f64) -> Result<FolnerDiagnostics> {
    if sequence.is_empty() {
        return Err(Error::InvalidInput("empty region sequence".into()));
    }
    let mut rows = Vec::with_capacity(sequence.len());
    for region in sequence {
        let volume = region.volume();
        let boundary_volume = r_boundary_volume(region, probe_r)?;
        rows.push(FolnerRow {
            label: region.label(),
            volume,
            boundary_volume,
            ratio: boundary_volume / volume,
        });
    }
    let consistent = rows.windows(2).all(|w| w[1].ratio < w[0].ratio);
    Ok(FolnerDiagnostics {
        probe_radius: probe_r,
        rows,
        consistent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn ball_volume_closed_forms() {
        assert_relative_eq!(ball_volume(2, 1.0).unwrap(), PI);
        assert_relative_eq!(ball_volume(1, 2.0).unwrap(), 4.0);
        assert_relative_eq!(ball_volume(3, 1.0).unwrap(), 4.0 * PI / 3.0);
    }

    #[test]
    fn ball_volume_rejects_bad_input() {
        assert!(ball_volume(4, 1.0).is_err());
        assert!(ball_volume(0, 1.0).is_err());
        assert!(ball_volume(2, 0.0).is_err());
        assert!(ball_volume(2, -1.0).is_err());
    }

    #[test]
    fn ball_volume_scales_as_r_pow_d() {
        for dim in 1..=3 {
            for &r in &[0.3, 1.0, 7.5] {
                let v1 = ball_volume(dim, r).unwrap();
                let v2 = ball_volume(dim, 2.0 * r).unwrap();
                let scale = 2.0f64.powi(dim as i32);
                assert!((v2 / (scale * v1) - 1.0).abs() < 1e-12);
                assert!(v2 > v1);
            }
        }
    }

    #[test]
    fn r_boundary_of_balls() {
        let b10 = Region::Ball(Ball::centered(2, 10.0).unwrap());
        assert_relative_eq!(
            r_boundary_volume(&b10, 1.0).unwrap(),
            40.0 * PI,
            max_relative = 1e-12
        );
        // Deflation empty: the whole B_3 is boundary.
        let b1 = Region::Ball(Ball::centered(2, 1.0).unwrap());
        assert_relative_eq!(
            r_boundary_volume(&b1, 2.0).unwrap(),
            9.0 * PI,
            max_relative = 1e-12
        );
    }

    #[test]
    fn r_boundary_of_boxes() {
        // 10x10 square, probe 1: (100 + 40 + pi) - 8x8.
        let square = Region::Box(BoxRegion::cube(2, 10.0).unwrap());
        assert_relative_eq!(
            r_boundary_volume(&square, 1.0).unwrap(),
            76.0 + PI,
            max_relative = 1e-12
        );
        // Deflation clamps at empty.
        let small = Region::Box(BoxRegion::cube(2, 1.0).unwrap());
        assert_relative_eq!(
            r_boundary_volume(&small, 1.0).unwrap(),
            5.0 + PI,
            max_relative = 1e-12
        );
    }

    #[test]
    fn boundary_ratio_small_for_large_balls() {
        // |d_N B_t| / |B_t| < 1/(3N) for t > 12 N^2 in D = 2.
        for n in 1..=4 {
            let r = n as f64;
            let t = 12.0 * r * r + 1.0;
            let region = Region::Ball(Ball::centered(2, t).unwrap());
            let ratio =
                r_boundary_volume(&region, r).unwrap() / ball_volume(2, t).unwrap();
            assert!(ratio < 1.0 / (3.0 * r), "ratio {ratio} at N={n}");
        }
    }

    #[test]
    fn folner_balls_consistent() {
        let seq: Vec<Region> = [1.0, 10.0, 100.0]
            .iter()
            .map(|&r| Region::Ball(Ball::centered(2, r).unwrap()))
            .collect();
        let diag = folner_diagnostics(&seq, 1.0).unwrap();
        assert!(diag.consistent);
        for row in &diag.rows {
            assert_relative_eq!(row.ratio, row.boundary_volume / row.volume);
        }
    }

    #[test]
    fn folner_constant_sequence_not_consistent() {
        let seq: Vec<Region> = (0..3)
            .map(|_| Region::Ball(Ball::centered(2, 1.0).unwrap()))
            .collect();
        assert!(!folner_diagnostics(&seq, 1.0).unwrap().consistent);
    }

    #[test]
    fn folner_boxes_ratio_closed_form() {
        let seq: Vec<Region> = [4.0, 8.0, 16.0]
            .iter()
            .map(|&n| Region::Box(BoxRegion::cube(2, n).unwrap()))
            .collect();
        let diag = folner_diagnostics(&seq, 1.0).unwrap();
        assert!(diag.consistent);
        for (row, &n) in diag.rows.iter().zip(&[4.0, 8.0, 16.0]) {
            // (n^2 + 4n + pi - (n-2)^2) / n^2 = (8n - 4 + pi) / n^2
            assert_relative_eq!(
                row.ratio,
                (8.0 * n - 4.0 + PI) / (n * n),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn monte_carlo_cross_check() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let samples = 1_000_000usize;
        for case in 0..50 {
            let dim = 1 + case % 3;
            let probe = rng.gen_range(0.2..2.0);
            let region = if case % 2 == 0 {
                let center: Vec<f64> = (0..dim).map(|_| rng.gen_range(-5.0..5.0)).collect();
                Region::Ball(Ball::new(center, rng.gen_range(0.5..6.0)).unwrap())
            } else {
                let lo: Vec<f64> = (0..dim).map(|_| rng.gen_range(-5.0..0.0)).collect();
                let hi: Vec<f64> = lo.iter().map(|l| l + rng.gen_range(1.0..8.0)).collect();
                Region::Box(BoxRegion::new(lo, hi).unwrap())
            };
            let exact = r_boundary_volume(&region, probe).unwrap();

            // Sample a bounding box of the inflated region; a point is in the
            // r-boundary iff its distance to the region is <= probe and its
            // distance to the complement is <= probe.
            let (lo, hi): (Vec<f64>, Vec<f64>) = match &region {
                Region::Ball(b) => (
                    b.center.iter().map(|c| c - b.radius - probe).collect(),
                    b.center.iter().map(|c| c + b.radius + probe).collect(),
                ),
                Region::Box(b) => (
                    b.lo.iter().map(|l| l - probe).collect(),
                    b.hi.iter().map(|h| h + probe).collect(),
                ),
            };
            let box_vol: f64 = lo.iter().zip(&hi).map(|(l, h)| h - l).product();
            let mut hits = 0usize;
            for _ in 0..samples {
                let x: Vec<f64> = lo
                    .iter()
                    .zip(&hi)
                    .map(|(l, h)| rng.gen_range(*l..*h))
                    .collect();
                let in_boundary = match &region {
                    Region::Ball(b) => {
                        let d: f64 = b
                            .center
                            .iter()
                            .zip(&x)
                            .map(|(c, v)| (c - v) * (c - v))
                            .sum::<f64>()
                            .sqrt();
                        (d - b.radius).abs() <= probe
                    }
                    Region::Box(b) => {
                        // Distance to the box and penetration depth inside it.
                        let mut out2 = 0.0;
                        let mut min_inside = f64::INFINITY;
                        for ((l, h), v) in b.lo.iter().zip(&b.hi).zip(&x) {
                            if *v < *l {
                                out2 += (l - v) * (l - v);
                                min_inside = 0.0;
                            } else if *v > *h {
                                out2 += (v - h) * (v - h);
                                min_inside = 0.0;
                            } else {
                                min_inside = min_inside.min((v - l).min(h - v));
                            }
                        }
                        let dist_to_region = out2.sqrt();
                        let dist_to_complement = if out2 > 0.0 { 0.0 } else { min_inside };
                        dist_to_region <= probe && dist_to_complement <= probe
                    }
                };
                if in_boundary {
                    hits += 1;
                }
            }
            let p = hits as f64 / samples as f64;
            let estimate = p * box_vol;
            let se = box_vol * (p * (1.0 - p) / samples as f64).sqrt();
            assert!(
                (estimate - exact).abs() <= 3.0 * se.max(1e-9),
                "case {case}: exact {exact}, MC {estimate} +- {se}"
            );
        }
    }
}

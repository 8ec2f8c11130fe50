//! Finite Vitali covering selection: a greedy largest-first pass that
//! returns pairwise disjoint balls whose 3x-enlargements cover every
//! input ball, plus an exact verifier for both conclusions.

use serde::{Deserialize, Serialize};

use crate::geometry::Ball;
use crate::{Error, Result};

/// Disjointness slack for float centers/radii: balls are treated as
/// intersecting when the center distance is within this of the radius sum.
const SLACK: f64 = 1e-12;

/// A finite family of balls with stable 1-based indices.
#[derive(Debug, Clone, PartialEq)]
pub struct BallFamily {
    dim: usize,
    balls: Vec<Ball>,
}

impl BallFamily {
    pub fn new(balls: Vec<Ball>) -> Result<Self> {
        let dim = balls
            .first()
            .ok_or_else(|| Error::InvalidInput("ball family must be nonempty".into()))?
            .dim();
        if balls.iter().any(|b| b.dim() != dim) {
            return Err(Error::InvalidInput(
                "all balls in a family must share a dimension".into(),
            ));
        }
        Ok(BallFamily { dim, balls })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.balls.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Ball by 1-based index.
    pub fn ball(&self, index: usize) -> &Ball {
        &self.balls[index - 1]
    }

    pub fn balls(&self) -> &[Ball] {
        &self.balls
    }

    /// Parse a CSV family: one ball per line, `index, x1..xD, r`.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows: Vec<(usize, Ball)> = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(|s| s.trim()).collect();
            if fields.len() < 3 {
                return Err(Error::Parse(format!(
                    "ball row needs index, coordinates and radius: {line:?}"
                )));
            }
            let index: usize = fields[0]
                .parse()
                .map_err(|e| Error::Parse(format!("bad index {:?}: {e}", fields[0])))?;
            let nums: Vec<f64> = fields[1..]
                .iter()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|e| Error::Parse(format!("bad number {s:?}: {e}")))
                })
                .collect::<Result<_>>()?;
            let (center, radius) = nums.split_at(nums.len() - 1);
            rows.push((index, Ball::new(center.to_vec(), radius[0])?));
        }
        rows.sort_by_key(|(i, _)| *i);
        for (expect, (i, _)) in rows.iter().enumerate() {
            if *i != expect + 1 {
                return Err(Error::Parse(format!(
                    "ball indices must be 1..K without gaps, found {i}"
                )));
            }
        }
        BallFamily::new(rows.into_iter().map(|(_, b)| b).collect())
    }
}

/// Greedy largest-first Vitali selection. Returns 1-based indices.
///
/// Repeatedly takes the largest-radius ball (ties broken by lower index)
/// that does not intersect any already selected ball. The output is
/// pairwise disjoint and every input ball is contained in the
/// 3x-enlargement of some selected ball.
pub fn vitali_select(family: &BallFamily) -> Vec<usize> {
    let mut order: Vec<usize> = (1..=family.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (family.ball(a).radius, family.ball(b).radius);
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    let mut selected: Vec<usize> = Vec::new();
    for i in order {
        let candidate = family.ball(i);
        let disjoint = selected.iter().all(|&j| {
            let picked = family.ball(j);
            candidate.distance_to(picked) > candidate.radius + picked.radius + SLACK
        });
        if disjoint {
            selected.push(i);
        }
    }
    selected.sort_unstable();
    selected
}

/// Verification report for a selection; failed checks are entries, not
/// errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverReport {
    /// Pairs of selected indices whose balls intersect.
    pub disjoint_violations: Vec<(usize, usize)>,
    /// Input indices with no selected ball certifying containment
    /// (`|a_j - a_i| + r_j <= 3 r_i`).
    pub containment_violations: Vec<usize>,
    pub ok: bool,
}

/// Check both Vitali conclusions for a selection.
pub fn verify_cover(family: &BallFamily, selected: &[usize]) -> Result<CoverReport> {
    if selected.iter().any(|&i| i == 0 || i > family.len()) {
        return Err(Error::InvalidInput(
            "selected indices must reference the family".into(),
        ));
    }
    let mut disjoint_violations = Vec::new();
    for (k, &i) in selected.iter().enumerate() {
        for &j in &selected[k + 1..] {
            let (a, b) = (family.ball(i), family.ball(j));
            if a.distance_to(b) <= a.radius + b.radius {
                disjoint_violations.push((i.min(j), i.max(j)));
            }
        }
    }
    let mut containment_violations = Vec::new();
    for j in 1..=family.len() {
        let ball = family.ball(j);
        let certified = selected.iter().any(|&i| {
            let picked = family.ball(i);
            ball.distance_to(picked) + ball.radius <= 3.0 * picked.radius + 1e-9
        });
        if !certified {
            containment_violations.push(j);
        }
    }
    let ok = disjoint_violations.is_empty() && containment_violations.is_empty();
    Ok(CoverReport {
        disjoint_violations,
        containment_violations,
        ok,
    })
}

/// Random family generator shared by property tests and the verification
/// harness: `K <= 200`, radii in `[0.1, 10]`, centers in `[0, 100]^D`.
pub fn random_family(rng: &mut impl rand::Rng, dim: usize) -> BallFamily {
    let k = rng.gen_range(1..=200usize);
    let balls = (0..k)
        .map(|_| {
            Ball::new(
                (0..dim).map(|_| rng.gen_range(0.0..100.0)).collect(),
                rng.gen_range(0.1..10.0),
            )
            .expect("valid random ball")
        })
        .collect();
    BallFamily::new(balls).expect("nonempty")
}

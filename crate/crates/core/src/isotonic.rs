//! Greatest convex minorants and least concave majorants of step functions,
//! and the Grenander-type estimators obtained from their left-hand slopes.
//!
//! The minorant of a right-continuous step function on `[anchor, end]` is the
//! lower convex hull of the anchor, the end point, and both the left limit and
//! the value at every knot. Between knots the function is flat, so this finite
//! vertex set gives the exact minorant.

use serde::{Deserialize, Serialize};

use crate::data::CensoredSample;
use crate::error::{Error, Result};
use crate::step::{kaplan_meier, nelson_aalen, StepFunction};

/// Relative slack used when comparing slopes while building a hull.
/// Near-collinear vertices are pooled.
const SLOPE_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Increasing,
    Decreasing,
}

/// Continuous piecewise-linear function given by its vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    vertices: Vec<(f64, f64)>,
}

impl PiecewiseLinear {
    pub fn new(vertices: Vec<(f64, f64)>) -> Self {
        Self { vertices }
    }

    pub fn vertices(&self) -> &[(f64, f64)] {
        &self.vertices
    }

    pub fn start(&self) -> f64 {
        self.vertices[0].0
    }

    pub fn end(&self) -> f64 {
        self.vertices[self.vertices.len() - 1].0
    }

    /// Linear interpolation; `None` outside `[start, end]`.
    pub fn eval(&self, t: f64) -> Option<f64> {
        let v = &self.vertices;
        if v.is_empty() || t < v[0].0 || t > v[v.len() - 1].0 {
            return None;
        }
        let i = v.partition_point(|p| p.0 < t);
        if i == 0 {
            return Some(v[0].1);
        }
        let (t0, y0) = v[i - 1];
        let (t1, y1) = v[i];
        if t == t1 {
            return Some(y1);
        }
        Some(y0 + (y1 - y0) * (t - t0) / (t1 - t0))
    }

    pub fn slopes(&self) -> Vec<f64> {
        self.vertices
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .collect()
    }

    pub fn negate(&self) -> Self {
        Self {
            vertices: self.vertices.iter().map(|&(t, y)| (t, -y)).collect(),
        }
    }
}

/// Piecewise-constant monotone estimate: `slopes[i]` holds on
/// `(breakpoints[i], breakpoints[i + 1]]`, and at the first breakpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneEstimate {
    breakpoints: Vec<f64>,
    slopes: Vec<f64>,
    direction: Direction,
}

impl MonotoneEstimate {
    /// Builds an estimate from explicit pieces. `breakpoints` must be strictly
    /// increasing with one more entry than `slopes`.
    pub fn from_pieces(breakpoints: Vec<f64>, slopes: Vec<f64>, direction: Direction) -> Result<Self> {
        if breakpoints.len() != slopes.len() + 1 || slopes.is_empty() {
            return Err(Error::Config(format!(
                "{} breakpoints do not bound {} pieces",
                breakpoints.len(),
                slopes.len()
            )));
        }
        if let Some(w) = breakpoints.windows(2).find(|w| !(w[0] < w[1])) {
            return Err(Error::DuplicateVertex(w[1]));
        }
        Ok(Self {
            breakpoints,
            slopes,
            direction,
        })
    }

    /// Constant estimate on `[start, end]`.
    pub fn constant(value: f64, start: f64, end: f64) -> Result<Self> {
        Self::from_pieces(vec![start, end], vec![value], Direction::Increasing)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn start(&self) -> f64 {
        self.breakpoints[0]
    }

    pub fn end(&self) -> f64 {
        self.breakpoints[self.breakpoints.len() - 1]
    }

    /// `(start, end, value)` for every piece.
    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.breakpoints
            .windows(2)
            .zip(self.slopes.iter())
            .map(|(w, &s)| (w[0], w[1], s))
    }

    /// Index of the piece containing `x` under the left-continuous convention.
    pub fn piece_index(&self, x: f64) -> Result<usize> {
        if !(x >= self.start() && x <= self.end()) {
            return Err(Error::OutsideDomain {
                x,
                lower: self.start(),
                upper: self.end(),
            });
        }
        Ok(self.breakpoints.partition_point(|&b| b < x).saturating_sub(1))
    }

    /// Left-continuous evaluation; undefined outside `[start, end]`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        Ok(self.slopes[self.piece_index(x)?])
    }

    /// Difference quotient across the jump points `τ_{m-1} < τ_m` enclosing
    /// `x0 ∈ (τ_{m-1}, τ_m]`, with the estimate read right-continuously at
    /// the jumps: the jump at `τ_m` divided by `τ_m - τ_{m-1}`.
    pub fn jump_derivative(&self, x0: f64) -> Result<f64> {
        let i = self.piece_index(x0)?;
        // jump points are the interior breakpoints 1..len-2
        if x0 <= self.breakpoints[0] || i == 0 || i + 1 >= self.slopes.len() {
            return Err(Error::DerivativeUndefined(x0));
        }
        let (lo, hi) = (self.breakpoints[i], self.breakpoints[i + 1]);
        Ok((self.slopes[i + 1] - self.slopes[i]) / (hi - lo))
    }

    /// `∫ est` over the full domain.
    pub fn integral(&self) -> f64 {
        self.pieces().map(|(a, c, s)| s * (c - a)).sum()
    }
}

fn slope(a: (f64, f64), b: (f64, f64)) -> f64 {
    (b.1 - a.1) / (b.0 - a.0)
}

/// Lower convex hull of points sorted by time; equal times keep the lowest
/// value.
fn lower_hull(points: impl IntoIterator<Item = (f64, f64)>) -> Vec<(f64, f64)> {
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for p in points {
        if let Some(last) = hull.last_mut() {
            if last.0 == p.0 {
                if p.1 >= last.1 {
                    continue;
                }
                hull.pop();
            }
        }
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let (s_ab, s_bp) = (slope(a, b), slope(b, p));
            let scale = s_ab.abs().max(s_bp.abs()).max(f64::MIN_POSITIVE);
            if s_ab >= s_bp - SLOPE_RTOL * scale {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

fn candidate_vertices(f: &StepFunction, anchor: (f64, f64), end: f64) -> Result<Vec<(f64, f64)>> {
    if !(end > anchor.0) {
        return Err(Error::Config(format!(
            "minorant end {end} must exceed anchor time {}",
            anchor.0
        )));
    }
    let mut pts = vec![anchor];
    let mut any = false;
    for &k in f.knots() {
        if k <= anchor.0 || k > end {
            continue;
        }
        any = true;
        pts.push((k, f.left_limit(k)));
        pts.push((k, f.eval(k)));
    }
    if !any {
        return Err(Error::EmptyKnotSet { start: anchor.0, end });
    }
    if pts.last().map(|p| p.0) != Some(end) {
        pts.push((end, f.eval(end)));
    }
    Ok(pts)
}

/// Greatest convex minorant of a finite point set (a cumulative-sum
/// diagram). Points need not be sorted; equal times keep the lowest value.
pub fn gcm_points(points: &[(f64, f64)]) -> Result<PiecewiseLinear> {
    if points.len() < 2 {
        return Err(Error::Config("need at least two points".into()));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    Ok(PiecewiseLinear::new(lower_hull(pts)))
}

/// Greatest convex minorant of `f` on `[anchor.0, end]`, pinned at `anchor`.
pub fn gcm(f: &StepFunction, anchor: (f64, f64), end: f64) -> Result<PiecewiseLinear> {
    let pts = candidate_vertices(f, anchor, end)?;
    Ok(PiecewiseLinear::new(lower_hull(pts)))
}

/// Least concave majorant, computed as `-gcm(-f)`.
pub fn lcm(f: &StepFunction, anchor: (f64, f64), end: f64) -> Result<PiecewiseLinear> {
    let neg = f.affine(-1.0, 0.0);
    Ok(gcm(&neg, (anchor.0, -anchor.1), end)?.negate())
}

/// Left-hand slopes of a piecewise-linear function.
pub fn left_slopes(m: &PiecewiseLinear, direction: Direction) -> Result<MonotoneEstimate> {
    let v = m.vertices();
    if v.len() < 2 {
        return Err(Error::Config("need at least two vertices".into()));
    }
    if let Some(w) = v.windows(2).find(|w| !(w[0].0 < w[1].0)) {
        return Err(Error::DuplicateVertex(w[1].0));
    }
    MonotoneEstimate::from_pieces(v.iter().map(|p| p.0).collect(), m.slopes(), direction)
}

/// `sup_{t ∈ [a, b]} |f(t) - m(t)|`, evaluated exactly over the interval
/// ends, the knots of `f` (value and left limit) and the vertices of `m`.
pub fn sup_distance(f: &StepFunction, m: &PiecewiseLinear, interval: (f64, f64)) -> Result<f64> {
    let (a, b) = interval;
    if !(a >= m.start() && b <= m.end() && a <= b) {
        return Err(Error::OutsideDomain {
            x: if a < m.start() { a } else { b },
            lower: m.start(),
            upper: m.end(),
        });
    }
    let at = |t: f64| m.eval(t).expect("inside range");
    let mut best = (f.eval(a) - at(a)).abs().max((f.eval(b) - at(b)).abs());
    if b > a {
        best = best.max((f.left_limit(b) - at(b)).abs());
    }
    for &k in f.knots().iter().filter(|&&k| k > a && k <= b) {
        let mk = at(k);
        best = best.max((f.eval(k) - mk).abs()).max((f.left_limit(k) - mk).abs());
    }
    for &(t, y) in m.vertices().iter().filter(|p| p.0 > a && p.0 < b) {
        best = best.max((f.eval(t) - y).abs()).max((f.left_limit(t) - y).abs());
    }
    Ok(best)
}

/// A cumulative estimator together with its monotone envelope and the
/// Grenander-type estimate (its left-hand slopes).
#[derive(Debug, Clone)]
pub struct GrenanderFit {
    pub cumulative: StepFunction,
    pub envelope: PiecewiseLinear,
    pub estimate: MonotoneEstimate,
}

fn fit_envelope(cumulative: StepFunction, end: f64, direction: Direction) -> Result<GrenanderFit> {
    let envelope = match direction {
        Direction::Increasing => gcm(&cumulative, (0.0, 0.0), end)?,
        Direction::Decreasing => lcm(&cumulative, (0.0, 0.0), end)?,
    };
    let estimate = left_slopes(&envelope, direction)?;
    Ok(GrenanderFit {
        cumulative,
        envelope,
        estimate,
    })
}

/// Grenander-type estimate of a nondecreasing hazard: slopes of the greatest
/// convex minorant of the Nelson-Aalen estimator on `[0, end]`.
pub fn grenander_hazard(sample: &CensoredSample, end: f64) -> Result<GrenanderFit> {
    fit_envelope(nelson_aalen(sample), end, Direction::Increasing)
}

/// Grenander-type estimate of a monotone density from the Kaplan-Meier
/// estimator: convex minorant for a nondecreasing density, concave majorant
/// for a nonincreasing one.
pub fn grenander_density(sample: &CensoredSample, end: f64, direction: Direction) -> Result<GrenanderFit> {
    fit_envelope(kaplan_meier(sample), end, direction)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step(points: &[(f64, f64)]) -> StepFunction {
        StepFunction::new(
            points.iter().map(|p| p.0).collect(),
            points.iter().map(|p| p.1).collect(),
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn diagram_with_one_violator_is_pooled() {
        let m = gcm_points(&[(0.0, 0.0), (1.0, 1.0), (2.0, 1.2)]).unwrap();
        assert_eq!(m.vertices(), &[(0.0, 0.0), (2.0, 1.2)]);
        let est = left_slopes(&m, Direction::Increasing).unwrap();
        assert!((est.slopes()[0] - 0.6).abs() < 1e-15);
        // the step function's left limit at t=1 is 0, which the chord exceeds by 0.6
        let f = step(&[(1.0, 1.0), (2.0, 1.2)]);
        assert!((sup_distance(&f, &m, (0.0, 2.0)).unwrap() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn step_minorant_touches_left_limits() {
        let f = step(&[(1.0, 1.0), (2.0, 1.2)]);
        let m = gcm(&f, (0.0, 0.0), 2.0).unwrap();
        // left limits are 0 at t=1 and 1 at t=2, both on the hull
        assert_eq!(m.vertices(), &[(0.0, 0.0), (1.0, 0.0), (2.0, 1.0)]);
        let est = left_slopes(&m, Direction::Increasing).unwrap();
        assert_eq!(est.slopes(), &[0.0, 1.0]);
    }

    #[test]
    fn convex_diagram_is_its_own_minorant() {
        let vertices = vec![(0.0, 0.0), (1.0, 1.0), (2.0, 3.0)];
        let est = left_slopes(&PiecewiseLinear::new(vertices), Direction::Increasing).unwrap();
        assert_eq!(est.slopes(), &[1.0, 2.0]);
        assert!((est.integral() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn chord_has_constant_slope() {
        let est = left_slopes(
            &PiecewiseLinear::new(vec![(0.0, 0.0), (1.0, 2.0)]),
            Direction::Increasing,
        )
        .unwrap();
        assert_eq!(est.eval(0.0).unwrap(), 2.0);
        assert_eq!(est.eval(1.0).unwrap(), 2.0);
        assert!(est.eval(1.5).is_err());
    }

    #[test]
    fn left_slopes_rejects_duplicates() {
        let m = PiecewiseLinear::new(vec![(0.0, 0.0), (1.0, 1.0), (1.0, 2.0)]);
        assert!(matches!(
            left_slopes(&m, Direction::Increasing),
            Err(Error::DuplicateVertex(_))
        ));
    }

    #[test]
    fn empty_knot_range_is_an_error() {
        let f = step(&[(5.0, 1.0)]);
        assert!(matches!(gcm(&f, (0.0, 0.0), 2.0), Err(Error::EmptyKnotSet { .. })));
    }

    #[test]
    fn left_continuous_evaluation_and_jump_derivative() {
        let est = MonotoneEstimate::from_pieces(vec![0.0, 1.0, 2.0, 4.0], vec![1.0, 3.0, 4.0], Direction::Increasing)
            .unwrap();
        assert_eq!(est.eval(1.0).unwrap(), 1.0);
        assert_eq!(est.eval(1.0 + 1e-12).unwrap(), 3.0);
        // x0 in (1, 2]: jump at 2 over the segment length, (4 - 3) / (2 - 1)
        assert_eq!(est.jump_derivative(1.5).unwrap(), 1.0);
        assert_eq!(est.jump_derivative(2.0).unwrap(), 1.0);
        assert!(matches!(est.jump_derivative(0.5), Err(Error::DerivativeUndefined(_))));
        assert!(matches!(est.jump_derivative(3.0), Err(Error::DerivativeUndefined(_))));
        assert!(est.jump_derivative(0.0).is_err());
    }

    #[test]
    fn sup_distance_of_pooled_example() {
        let f = step(&[(1.0, 1.0), (2.0, 1.2)]);
        let m = gcm(&f, (0.0, 0.0), 2.0).unwrap();
        // the jump at t=1 lifts the step a full unit above the flat first piece
        let d = sup_distance(&f, &m, (0.0, 2.0)).unwrap();
        assert!((d - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sup_distance_zero_when_minorant_matches() {
        // a "step" function whose jumps all sit on a line through its left limits
        let f = step(&[(1.0, 0.0), (2.0, 0.0)]);
        let m = gcm(&f, (0.0, 0.0), 2.0).unwrap();
        assert_eq!(sup_distance(&f, &m, (0.0, 2.0)).unwrap(), 0.0);
    }

    #[test]
    fn lcm_reflects_gcm() {
        let f = step(&[(0.5, 0.4), (1.0, 0.5), (3.0, 0.9)]);
        let up = lcm(&f, (0.0, 0.0), 3.0).unwrap();
        let down = gcm(&f.affine(-1.0, 0.0), (0.0, 0.0), 3.0).unwrap();
        for (a, b) in up.vertices().iter().zip(down.vertices()) {
            assert_eq!(a.0, b.0);
            assert_eq!(a.1 + b.1, 0.0);
        }
        for &k in f.knots() {
            assert!(up.eval(k).unwrap() >= f.eval(k));
        }
    }
}

//! Finite pseudo-orbits and the admissibility notions they are judged under.
//!
//! A chain `(p_0, …, p_n)` jumps by `d(f(p_{i-1}), p_i)` at step `i`. The notions:
//!
//! * `Eps(ε)`: every jump `< ε`;
//! * `Strong(ε)`: the jumps sum to `< ε`;
//! * `Radius(r)`: jump `i` is `< r(f(p_{i-1}))`, i.e. `p_i ∈ N(f(p_{i-1}))`;
//! * `Restricted { region: W, eps }`: every jump `< ε`, and the chain follows the
//!   map exactly (`p_i = f(p_{i-1})`) whenever `f(p_{i-1}) ∉ W`.
//!
//! Also holds the two explicit chain recipes for the shear `(x + e^y, y)` and the
//! semicircle flow.

use std::fmt::Write as _;

use crate::geometry::{Dim, GeometryError, Metric, Point, Region, Window};
use crate::radius::RadiusField;
use crate::scalar::Scalar;
use crate::systems::{DynSystem, SemicircleFlow, TranslationExp};

/// A jump at most this large counts as "no jump" for restricted chains.
pub const ZERO_JUMP_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChainError {
    #[error("a chain needs at least two points, got {0}")]
    TooShort(usize),
    #[error("{0} jump costs for {1} points")]
    CostCount(usize, usize),
    #[error("chain parameter must be positive, got {0}")]
    NonPositive(String),
    #[error("invalid start point: {0}")]
    InvalidStart(String),
    #[error("chain construction failed: {0}")]
    ConstructionFailed(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("chain point {index} has dimension {got:?}, expected {expected:?}")]
    Dimension {
        index: usize,
        expected: Dim,
        got: Dim,
    },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// A finite point sequence with its per-step jump costs.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain<S = f64> {
    points: Vec<Point<S>>,
    jump_costs: Vec<S>,
}

impl<S: Scalar> Chain<S> {
    /// Computes `jump_costs[i-1] = d(f(points[i-1]), points[i])`.
    pub fn new(
        system: &dyn DynSystem<S>,
        metric: Metric,
        points: Vec<Point<S>>,
    ) -> Result<Self, ChainError> {
        if points.len() < 2 {
            return Err(ChainError::TooShort(points.len()));
        }
        let dim = system.dim();
        if !metric.supports(dim) {
            return Err(GeometryError::CircleNeedsLine.into());
        }
        if let Some((index, p)) = points.iter().enumerate().find(|(_, p)| p.dim() != dim) {
            return Err(ChainError::Dimension {
                index,
                expected: dim,
                got: p.dim(),
            });
        }
        let jump_costs = points
            .windows(2)
            .map(|w| metric.dist(&system.eval(w[0]), &w[1]))
            .collect();
        Ok(Chain { points, jump_costs })
    }

    pub fn from_parts(points: Vec<Point<S>>, jump_costs: Vec<S>) -> Result<Self, ChainError> {
        if points.len() < 2 {
            return Err(ChainError::TooShort(points.len()));
        }
        if jump_costs.len() + 1 != points.len() {
            return Err(ChainError::CostCount(jump_costs.len(), points.len()));
        }
        Ok(Chain { points, jump_costs })
    }

    pub fn points(&self) -> &[Point<S>] {
        &self.points
    }

    pub fn jump_costs(&self) -> &[S] {
        &self.jump_costs
    }

    /// Number of points, `n + 1`.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of steps, `n`.
    pub fn steps(&self) -> usize {
        self.jump_costs.len()
    }

    pub fn first(&self) -> Point<S> {
        self.points[0]
    }

    pub fn last(&self) -> Point<S> {
        self.points[self.points.len() - 1]
    }

    pub fn is_closed(&self) -> bool {
        self.first() == self.last()
    }

    pub fn max_jump(&self) -> S {
        self.jump_costs.iter().copied().fold(S::zero(), S::max)
    }

    pub fn total_jump(&self) -> S {
        self.jump_costs.iter().copied().sum()
    }

    pub fn into_points(self) -> Vec<Point<S>> {
        self.points
    }

    /// Line-oriented text: one point per line, coordinates separated by spaces.
    pub fn to_text(&self) -> String {
        points_to_text(&self.points)
    }
}

/// Serializes points one per line using shortest round-trip decimals.
pub fn points_to_text<S: Scalar>(points: &[Point<S>]) -> String {
    let mut out = String::with_capacity(points.len() * 24);
    for p in points {
        let _ = writeln!(out, "{p}");
    }
    out
}

/// Parses the chain text format; `#` starts a comment, blank lines are skipped.
pub fn parse_points<S: Scalar>(text: &str) -> Result<Vec<Point<S>>, ChainError> {
    let mut points = Vec::new();
    let mut dim = None;
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let coords = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<S>().map_err(|_| ChainError::Parse {
                    line: k + 1,
                    msg: format!("not a number: `{tok}`"),
                })
            })
            .collect::<Result<Vec<S>, _>>()?;
        let p = Point::from_coords(&coords).map_err(|e| ChainError::Parse {
            line: k + 1,
            msg: e.to_string(),
        })?;
        match dim {
            None => dim = Some(p.dim()),
            Some(d) if d != p.dim() => {
                return Err(ChainError::Parse {
                    line: k + 1,
                    msg: format!("expected {} coordinate(s)", d.count()),
                })
            }
            _ => {}
        }
        points.push(p);
    }
    Ok(points)
}

/// Which jumps a chain may make.
#[derive(Debug, Clone, PartialEq)]
pub enum ChainNotion<S = f64> {
    Eps(S),
    Strong(S),
    Radius(RadiusField<S>),
    Restricted { region: Region<S>, eps: S },
}

impl<S: Scalar> ChainNotion<S> {
    pub fn validate(&self) -> Result<(), ChainError> {
        let check = |e: S| {
            if e > S::zero() && e.is_finite() {
                Ok(())
            } else {
                Err(ChainError::NonPositive(e.to_string()))
            }
        };
        match self {
            ChainNotion::Eps(e) | ChainNotion::Strong(e) => check(*e),
            ChainNotion::Restricted { eps, .. } => check(*eps),
            ChainNotion::Radius(RadiusField::Constant(c)) => check(*c),
            ChainNotion::Radius(_) => Ok(()),
        }
    }

    /// Short label, e.g. `eps=0.5`.
    pub fn label(&self) -> String {
        match self {
            ChainNotion::Eps(e) => format!("eps={e}"),
            ChainNotion::Strong(e) => format!("strong={e}"),
            ChainNotion::Radius(r) => format!("radius={r}"),
            ChainNotion::Restricted { region, eps } => {
                let w = match region {
                    Region::Disk(d) => format!("disk:{},{},{}", d.center.x(), d.center.y(), d.radius),
                    Region::Window(w) => {
                        let (lo, hi) = (w.lo(), w.hi());
                        format!("box:{},{},{},{}", lo.x(), hi.x(), lo.y(), hi.y())
                    }
                };
                format!("restricted W={w} eps={eps}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainReport<S = f64> {
    pub valid: bool,
    pub max_jump: S,
    pub total_jump: S,
    /// Index `i` of the first offending step `p_{i-1} → p_i`.
    pub first_violation: Option<usize>,
}

/// Recomputes every jump from the points and checks it against `notion`.
/// Comparisons are strict: a jump equal to its bound is a violation.
pub fn verify_chain<S: Scalar>(
    system: &dyn DynSystem<S>,
    metric: Metric,
    chain: &Chain<S>,
    notion: &ChainNotion<S>,
) -> ChainReport<S> {
    let slack = S::lit(ZERO_JUMP_SLACK);
    let mut max_jump = S::zero();
    let mut total = S::zero();
    let mut first_violation = None;
    for (k, w) in chain.points().windows(2).enumerate() {
        let image = system.eval(w[0]);
        let jump = metric.dist(&image, &w[1]);
        max_jump = max_jump.max(jump);
        total = total + jump;
        let ok = match notion {
            ChainNotion::Eps(e) => jump < *e,
            ChainNotion::Strong(e) => total < *e,
            ChainNotion::Radius(r) => jump < r.eval(&image),
            ChainNotion::Restricted { region, eps } => {
                jump < *eps && (jump <= slack || region.contains(&image))
            }
        };
        if !ok && first_violation.is_none() {
            first_violation = Some(k + 1);
        }
    }
    ChainReport {
        valid: first_violation.is_none(),
        max_jump,
        total_jump: total,
        first_violation,
    }
}

/// An ε-chain of `(x + e^y, y)` from `start` back to itself: descend (`p_i = f(p_{i-1}) − (0, η)`)
/// until `e^y ≤ 0.45 ε`, drift left (`p_i = f(p_{i-1}) − (η_x, 0)`), then climb
/// (`p_i = f(p_{i-1}) + (0, η')`) and land on `start`. All step sizes are at most `0.9 ε`.
///
/// The climb's horizontal drift does not depend on `x`, so it is simulated once and
/// the leftward phase is sized to end exactly where the climb must begin.
pub fn build_translation_exp_chain<S: Scalar>(start: Point<S>, eps: S) -> Result<Chain<S>, ChainError> {
    if !(eps > S::zero()) || !eps.is_finite() {
        return Err(ChainError::NonPositive(eps.to_string()));
    }
    if start.dim() != Dim::Two || !start.is_finite() {
        return Err(ChainError::InvalidStart(start.to_string()));
    }
    let f = TranslationExp;
    let eta = S::lit(0.9) * eps;
    let floor = S::lit(0.45) * eps;
    let mut pts = vec![start];

    let mut p = start;
    while p.y().exp() > floor {
        p = DynSystem::<S>::eval(&f, p) - Point::plane(S::zero(), eta);
        pts.push(p);
    }
    let y_low = p.y();

    let rise = start.y() - y_low;
    let climb_steps = (rise / eta).ceil().to_usize().unwrap_or(0).max(1);
    let climb = rise / S::from_usize_lossy(climb_steps);
    let mut drift = S::zero();
    let mut y = y_low;
    for _ in 0..climb_steps {
        drift = drift + y.exp();
        y = y + climb;
    }
    let x_left = start.x() - drift;

    let gap = p.x() - x_left;
    let net = eta - y_low.exp();
    let moves = (gap / net).ceil().to_usize().unwrap_or(0).max(1);
    let push_left = y_low.exp() + gap / S::from_usize_lossy(moves);
    if push_left > eta {
        return Err(ChainError::ConstructionFailed(format!(
            "leftward step {push_left} exceeds {eta}"
        )));
    }
    for _ in 0..moves {
        p = DynSystem::<S>::eval(&f, p) - Point::plane(push_left, S::zero());
        pts.push(p);
    }

    for _ in 1..climb_steps {
        p = DynSystem::<S>::eval(&f, p) + Point::plane(S::zero(), climb);
        pts.push(p);
    }
    pts.push(start);
    Chain::new(&f, Metric::Euclidean, pts)
}

/// Fraction of the admissible radius used by every jump of the semicircle recipe.
const SEMICIRCLE_JUMP_FRACTION: f64 = 0.99;

/// A `Radius(r)`-chain of the semicircle time-one map from `(0, h)` back to itself:
/// step off the y-axis onto a right-hand circle, ride it down to the fixed x-axis,
/// walk left along the axis to the origin, hop onto the y-axis and ride it up.
pub fn build_semicircle_tcr_chain<S: Scalar>(
    start: Point<S>,
    r: &RadiusField<S>,
) -> Result<Chain<S>, ChainError> {
    if start.dim() != Dim::Two || start.x() != S::zero() || !(start.y() > S::zero()) {
        return Err(ChainError::InvalidStart(format!(
            "({start}) is not on the positive y-axis"
        )));
    }
    let f = SemicircleFlow::default();
    let frac = S::lit(SEMICIRCLE_JUMP_FRACTION);
    let failed = |msg: String| ChainError::ConstructionFailed(msg);
    let radius_at = |q: &Point<S>| -> Result<S, ChainError> {
        let v = r.eval(q);
        if v > S::zero() && v.is_finite() {
            Ok(v)
        } else {
            Err(failed(format!("radius field is {v} at ({q})")))
        }
    };
    let zero = S::zero();
    let mut pts = vec![start];

    let top = DynSystem::<S>::eval(&f, start);
    let mut p = top + Point::plane(frac * radius_at(&top)?, zero);
    pts.push(p);

    const MAX_ARC_STEPS: usize = 1_000_000;
    let mut landed = false;
    for _ in 0..MAX_ARC_STEPS {
        let q = DynSystem::<S>::eval(&f, p);
        if q.y() < frac * radius_at(&q)? {
            p = Point::plane(q.x(), zero);
            pts.push(p);
            landed = true;
            break;
        }
        p = q;
        pts.push(p);
    }
    if !landed {
        return Err(failed(format!(
            "orbit did not approach the x-axis within {MAX_ARC_STEPS} steps"
        )));
    }

    // the closed lower half-plane is fixed, so every axis step is a pure jump
    let tiny = S::lit(1e-300).max(S::min_positive_value());
    while p.x() > zero {
        let step = frac * radius_at(&p)?;
        if step <= tiny {
            return Err(failed(format!("radius vanishes on the x-axis at ({p})")));
        }
        p = Point::plane((p.x() - step).max(zero), zero);
        pts.push(p);
    }

    let h = start.y();
    let hop = frac * radius_at(&p)?;
    if h < hop {
        pts.push(start);
        return Chain::new(&f, Metric::Euclidean, pts);
    }
    let height = |eta: S, k: usize| -> S {
        (0..k)
            .fold(Point::plane(zero, eta), |q, _| DynSystem::<S>::eval(&f, q))
            .y()
    };
    let mut k = 0;
    let mut y = hop;
    while y < h {
        y = DynSystem::<S>::eval(&f, Point::plane(zero, y)).y();
        k += 1;
        if k > MAX_ARC_STEPS {
            return Err(failed("y-axis climb does not reach the start".into()));
        }
    }
    // f(y) ≤ e·y on the axis, so starting below hop/e takes more than k steps
    let (mut lo, mut hi) = (hop / S::E() * S::lit(0.999), hop);
    for _ in 0..200 {
        let mid = (lo + hi) * S::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if height(mid, k) < h {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let eta = if (height(lo, k) - h).abs() < (height(hi, k) - h).abs() {
        lo
    } else {
        hi
    };
    let mut q = Point::plane(zero, eta);
    pts.push(q);
    for _ in 1..k {
        q = DynSystem::<S>::eval(&f, q);
        pts.push(q);
    }
    pts.push(start);
    Chain::new(&f, Metric::Euclidean, pts)
}

/// `min r` over the closed 1-neighborhood of `region`: a restricted chain with jumps
/// below this value is also a `Radius(r)`-chain.
pub fn transfer_radius<S: Scalar>(region: &Region<S>, r: &RadiusField<S>) -> S {
    let hull: Window<S> = region.bounding_window(S::one());
    r.min_over(&hull, 64)
}

/// Sampled modulus of continuity of the identity `(K, from) → (K, to)`: the smallest
/// `from`-distance among sample pairs that are at least `eps_to / 2` apart in `to`.
///
/// Halving the target leaves room for pairs that fall between the samples, so a
/// chain in `K` whose `from`-jumps stay below the result has `to`-jumps below
/// `eps_to` once the samples are dense. Returns `eps_to` when no sampled pair is
/// that far apart.
pub fn compact_modulus<S: Scalar>(from: Metric, to: Metric, samples: &[Point<S>], eps_to: S) -> S {
    let target = eps_to * S::lit(0.5);
    let mut best = S::infinity();
    for (i, p) in samples.iter().enumerate() {
        for q in &samples[i + 1..] {
            if to.dist(p, q) >= target {
                best = best.min(from.dist(p, q));
            }
        }
    }
    if best.is_finite() {
        best
    } else {
        eps_to
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{Identity, Rotation, Translation};

    #[test]
    fn identity_two_point_chain() {
        let id = Identity::new(Dim::Two);
        let p = Point::plane(0.3, 0.7);
        let c = Chain::new(&id, Metric::Euclidean, vec![p, p]).unwrap();
        let rep = verify_chain(&id, Metric::Euclidean, &c, &ChainNotion::Eps(1e-9));
        assert!(rep.valid);
        assert_eq!(rep.max_jump, 0.0);
    }

    #[test]
    fn line_translation_violation_index() {
        let f = Translation::<f64>::unit_line();
        let c = Chain::new(&f, Metric::Euclidean, vec![Point::line(0.0), Point::line(0.5)]).unwrap();
        let rep = verify_chain(&f, Metric::Euclidean, &c, &ChainNotion::Eps(0.4));
        assert!(!rep.valid);
        assert_eq!(rep.first_violation, Some(1));
        assert_eq!(rep.max_jump, 0.5);
    }

    #[test]
    fn equality_counts_as_violation() {
        let f = Translation::<f64>::unit_line();
        let c = Chain::new(&f, Metric::Euclidean, vec![Point::line(0.0), Point::line(0.5)]).unwrap();
        assert!(!verify_chain(&f, Metric::Euclidean, &c, &ChainNotion::Eps(0.5)).valid);
        assert!(verify_chain(&f, Metric::Euclidean, &c, &ChainNotion::Eps(0.5000001)).valid);
    }

    #[test]
    fn exact_rotation_orbit_is_valid_for_any_radius() {
        let f = Rotation::<f64>::by_fraction(5);
        let mut pts = vec![Point::plane(1.0, 0.0)];
        for _ in 0..5 {
            pts.push(f.eval(*pts.last().unwrap()));
        }
        let c = Chain::new(&f, Metric::Euclidean, pts).unwrap();
        let rep = verify_chain(&f, Metric::Euclidean, &c, &ChainNotion::Radius(RadiusField::constant(1e-6)));
        assert!(rep.valid);
        assert!(rep.max_jump < 1e-12);
    }

    #[test]
    fn too_short_and_wrong_dimension() {
        let f = Translation::<f64>::unit_line();
        assert_eq!(
            Chain::new(&f, Metric::Euclidean, vec![Point::line(0.0)]).unwrap_err(),
            ChainError::TooShort(1)
        );
        assert!(matches!(
            Chain::new(&f, Metric::Euclidean, vec![Point::line(0.0), Point::plane(1.0, 0.0)]),
            Err(ChainError::Dimension { index: 1, .. })
        ));
    }

    #[test]
    fn restricted_forbids_jumps_outside_region() {
        let f = Translation::new(Point::plane(1.0, 0.0));
        let w = Region::Window(Window::plane(-0.5, 0.5, -0.5, 0.5).unwrap());
        let notion = ChainNotion::Restricted { region: w, eps: 0.1 };
        // image (1, 0) lies outside W: a jump there is forbidden
        let c = Chain::new(&f, Metric::Euclidean, vec![Point::plane(0.0, 0.0), Point::plane(1.05, 0.0)]).unwrap();
        assert_eq!(verify_chain(&f, Metric::Euclidean, &c, &notion).first_violation, Some(1));
        // exact step outside W is fine
        let c = Chain::new(&f, Metric::Euclidean, vec![Point::plane(0.0, 0.0), Point::plane(1.0, 0.0)]).unwrap();
        assert!(verify_chain(&f, Metric::Euclidean, &c, &notion).valid);
        // image (0.4, 0) in W: small jump allowed
        let c = Chain::new(&f, Metric::Euclidean, vec![Point::plane(-0.6, 0.0), Point::plane(0.45, 0.0)]).unwrap();
        assert!(verify_chain(&f, Metric::Euclidean, &c, &notion).valid);
    }

    #[test]
    fn strong_reports_where_the_budget_runs_out() {
        let f = Identity::new(Dim::One);
        let pts = (0..5).map(|k| Point::line(0.1 * k as f64)).collect();
        let c = Chain::new(&f, Metric::Euclidean, pts).unwrap();
        let rep = verify_chain(&f, Metric::Euclidean, &c, &ChainNotion::Strong(0.25));
        assert_eq!(rep.first_violation, Some(3));
        assert!((rep.total_jump - 0.4).abs() < 1e-12);
    }

    #[test]
    fn translation_exp_recipe_closes_up() {
        for &eps in &[0.5, 0.1] {
            let c = build_translation_exp_chain(Point::plane(0.0, 0.0), eps).unwrap();
            assert!(c.is_closed());
            let rep = verify_chain(&TranslationExp, Metric::Euclidean, &c, &ChainNotion::Eps(eps));
            assert!(rep.valid, "eps {eps}: {rep:?}");
            assert!(rep.max_jump < eps);
        }
        assert!(build_translation_exp_chain(Point::plane(0.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn semicircle_recipe_rejects_off_axis_start() {
        let r = RadiusField::constant(0.2);
        assert!(matches!(
            build_semicircle_tcr_chain(Point::plane(0.1, 1.0), &r),
            Err(ChainError::InvalidStart(_))
        ));
        assert!(matches!(
            build_semicircle_tcr_chain(Point::plane(0.0, -1.0), &r),
            Err(ChainError::InvalidStart(_))
        ));
    }

    #[test]
    fn semicircle_recipe_constant_radius() {
        let r = RadiusField::constant(0.2);
        let c = build_semicircle_tcr_chain(Point::plane(0.0, 1.0), &r).unwrap();
        assert!(c.is_closed());
        let rep = verify_chain(&SemicircleFlow::default(), Metric::Euclidean, &c, &ChainNotion::Radius(r));
        assert!(rep.valid, "{rep:?}");
    }

    #[test]
    fn text_round_trip_and_comments() {
        let text = "# header\n0 0\n1.5 -2 # trailing\n\n3e-1 4\n";
        let pts: Vec<Point> = parse_points(text).unwrap();
        assert_eq!(pts.len(), 3);
        assert_eq!(pts[2], Point::plane(0.3, 4.0));
        let again: Vec<Point> = parse_points(&points_to_text(&pts)).unwrap();
        assert_eq!(again, pts);
        assert!(parse_points::<f64>("0 0\n1\n").is_err());
        assert!(parse_points::<f64>("0 x\n").is_err());
    }
}

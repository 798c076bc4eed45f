//! Points, analysis windows, metrics and the line-to-circle embedding.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GeometryError {
    #[error("dimension mismatch: {0:?} vs {1:?}")]
    DimensionMismatch(Dim, Dim),
    #[error("the circle-induced metric is only defined on the line")]
    CircleNeedsLine,
    #[error("degenerate window: lo must be strictly below hi in every coordinate")]
    DegenerateWindow,
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("unknown metric `{0}` (expected euclidean, bounded or circle)")]
    UnknownMetric(String),
}

/// Phase-space dimension. Systems live on the line or on the plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dim {
    One,
    Two,
}

impl Dim {
    pub fn count(self) -> usize {
        match self {
            Dim::One => 1,
            Dim::Two => 2,
        }
    }
}

/// A point of the line (`y` is kept at zero) or the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point<S = f64> {
    x: S,
    y: S,
    dim: Dim,
}

impl<S: Scalar> Point<S> {
    pub fn plane(x: S, y: S) -> Self {
        Point { x, y, dim: Dim::Two }
    }

    pub fn line(t: S) -> Self {
        Point {
            x: t,
            y: S::zero(),
            dim: Dim::One,
        }
    }

    /// Builds a point from one or two coordinates.
    pub fn from_coords(coords: &[S]) -> Result<Self, GeometryError> {
        let p = match *coords {
            [t] => Point::line(t),
            [x, y] => Point::plane(x, y),
            _ => return Err(GeometryError::DimensionMismatch(Dim::One, Dim::Two)),
        };
        if p.is_finite() {
            Ok(p)
        } else {
            Err(GeometryError::NonFinite)
        }
    }

    pub fn origin(dim: Dim) -> Self {
        Point {
            x: S::zero(),
            y: S::zero(),
            dim,
        }
    }

    #[inline]
    pub fn x(&self) -> S {
        self.x
    }

    /// Zero for line points.
    #[inline]
    pub fn y(&self) -> S {
        self.y
    }

    /// The line coordinate (alias of `x`).
    #[inline]
    pub fn t(&self) -> S {
        self.x
    }

    #[inline]
    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn coords(&self) -> Vec<S> {
        match self.dim {
            Dim::One => vec![self.x],
            Dim::Two => vec![self.x, self.y],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    #[inline]
    pub fn norm(&self) -> S {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn dot(&self, other: &Self) -> S {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the planar cross product.
    #[inline]
    pub fn cross(&self, other: &Self) -> S {
        self.x * other.y - self.y * other.x
    }

    /// Euclidean distance, ignoring the dimension tag.
    #[inline]
    pub fn euclid(&self, other: &Self) -> S {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn with_dim(self, dim: Dim) -> Self {
        match dim {
            Dim::One => Point::line(self.x),
            Dim::Two => Point::plane(self.x, self.y),
        }
    }
}

impl<S: Scalar> Add for Point<S> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Point {
            x: self.x + rhs.x,
            y: self.y + rhs.y,
            dim: self.dim,
        }
    }
}

impl<S: Scalar> Sub for Point<S> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Point {
            x: self.x - rhs.x,
            y: self.y - rhs.y,
            dim: self.dim,
        }
    }
}

impl<S: Scalar> Mul<S> for Point<S> {
    type Output = Self;
    #[inline]
    fn mul(self, k: S) -> Self {
        Point {
            x: self.x * k,
            y: self.y * k,
            dim: self.dim,
        }
    }
}

impl<S: Scalar> Neg for Point<S> {
    type Output = Self;
    fn neg(self) -> Self {
        Point {
            x: -self.x,
            y: -self.y,
            dim: self.dim,
        }
    }
}

impl<S: Scalar> fmt::Display for Point<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.dim {
            Dim::One => write!(f, "{}", self.x),
            Dim::Two => write!(f, "{} {}", self.x, self.y),
        }
    }
}

/// Closed axis-aligned analysis region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window<S = f64> {
    pub(crate) lo: Point<S>,
    pub(crate) hi: Point<S>,
}

impl<S: Scalar> Window<S> {
    pub fn new(lo: Point<S>, hi: Point<S>) -> Result<Self, GeometryError> {
        if lo.dim() != hi.dim() {
            return Err(GeometryError::DimensionMismatch(lo.dim(), hi.dim()));
        }
        if !lo.is_finite() || !hi.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        let ok = match lo.dim() {
            Dim::One => lo.x() < hi.x(),
            Dim::Two => lo.x() < hi.x() && lo.y() < hi.y(),
        };
        if ok {
            Ok(Window { lo, hi })
        } else {
            Err(GeometryError::DegenerateWindow)
        }
    }

    pub fn plane(x0: S, x1: S, y0: S, y1: S) -> Result<Self, GeometryError> {
        Window::new(Point::plane(x0, y0), Point::plane(x1, y1))
    }

    pub fn line(t0: S, t1: S) -> Result<Self, GeometryError> {
        Window::new(Point::line(t0), Point::line(t1))
    }

    pub fn lo(&self) -> Point<S> {
        self.lo
    }

    pub fn hi(&self) -> Point<S> {
        self.hi
    }

    pub fn dim(&self) -> Dim {
        self.lo.dim()
    }

    pub fn width(&self) -> S {
        self.hi.x() - self.lo.x()
    }

    /// Zero on the line.
    pub fn height(&self) -> S {
        self.hi.y() - self.lo.y()
    }

    pub fn center(&self) -> Point<S> {
        (self.lo + self.hi) * S::lit(0.5)
    }

    pub fn diameter(&self) -> S {
        self.lo.euclid(&self.hi)
    }

    pub fn contains(&self, p: &Point<S>) -> bool {
        let inx = p.x() >= self.lo.x() && p.x() <= self.hi.x();
        match self.dim() {
            Dim::One => inx,
            Dim::Two => inx && p.y() >= self.lo.y() && p.y() <= self.hi.y(),
        }
    }

    /// Nearest point of the window.
    pub fn clamp(&self, p: &Point<S>) -> Point<S> {
        let x = p.x().max(self.lo.x()).min(self.hi.x());
        match self.dim() {
            Dim::One => Point::line(x),
            Dim::Two => Point::plane(x, p.y().max(self.lo.y()).min(self.hi.y())),
        }
    }

    /// Euclidean distance from `p` to the window (zero inside).
    pub fn euclid_to(&self, p: &Point<S>) -> S {
        p.euclid(&self.clamp(p))
    }

    /// The four corners in counter-clockwise order (two endpoints on the line).
    pub fn corners(&self) -> Vec<Point<S>> {
        match self.dim() {
            Dim::One => vec![self.lo, self.hi],
            Dim::Two => vec![
                self.lo,
                Point::plane(self.hi.x(), self.lo.y()),
                self.hi,
                Point::plane(self.lo.x(), self.hi.y()),
            ],
        }
    }
}

/// Closed metric disk in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disk<S = f64> {
    pub center: Point<S>,
    pub radius: S,
}

impl<S: Scalar> Disk<S> {
    pub fn new(center: Point<S>, radius: S) -> Self {
        Disk { center, radius }
    }
}

/// A compact restriction set: the only place a restricted chain may jump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region<S = f64> {
    Window(Window<S>),
    Disk(Disk<S>),
}

impl<S: Scalar> Region<S> {
    pub fn contains(&self, p: &Point<S>) -> bool {
        self.euclid_to(p) <= S::zero()
    }

    /// Euclidean distance from `p` to the region.
    pub fn euclid_to(&self, p: &Point<S>) -> S {
        match self {
            Region::Window(w) => w.euclid_to(p),
            Region::Disk(d) => (p.euclid(&d.center) - d.radius).max(S::zero()),
        }
    }

    /// The closed `margin`-neighborhood's bounding window.
    pub fn bounding_window(&self, margin: S) -> Window<S> {
        match self {
            Region::Window(w) => {
                let m = Point::plane(margin, margin).with_dim(w.dim());
                Window {
                    lo: w.lo() - m,
                    hi: w.hi() + m,
                }
            }
            Region::Disk(d) => {
                let r = d.radius + margin;
                let m = Point::plane(r, r).with_dim(d.center.dim());
                Window {
                    lo: d.center - m,
                    hi: d.center + m,
                }
            }
        }
    }
}

/// Angle of the embedded image of `t` on the unit circle, in `(0, 2π)`.
pub fn circle_angle<S: Scalar>(t: S) -> S {
    S::PI() + S::lit(2.0) * t.atan()
}

/// Sends the line onto the unit circle minus `(1, 0)`, with `0 ↦ (−1, 0)`.
pub fn embed_line_to_circle<S: Scalar>(t: S) -> Point<S> {
    let theta = circle_angle(t);
    Point::plane(theta.cos(), theta.sin())
}

/// Distance functions on points of the line or plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    /// The standard metric.
    Euclidean,
    /// `min(euclidean, 1)`.
    Bounded,
    /// Chordal distance between images under [`embed_line_to_circle`]; line only.
    CircleInduced,
}

impl Metric {
    pub fn distance<S: Scalar>(&self, p: &Point<S>, q: &Point<S>) -> Result<S, GeometryError> {
        if p.dim() != q.dim() {
            return Err(GeometryError::DimensionMismatch(p.dim(), q.dim()));
        }
        if *self == Metric::CircleInduced && p.dim() != Dim::One {
            return Err(GeometryError::CircleNeedsLine);
        }
        Ok(self.dist(p, q))
    }

    /// Unchecked distance; callers guarantee compatible dimensions.
    #[inline]
    pub fn dist<S: Scalar>(&self, p: &Point<S>, q: &Point<S>) -> S {
        match self {
            Metric::Euclidean => p.euclid(q),
            Metric::Bounded => p.euclid(q).min(S::one()),
            Metric::CircleInduced => chord(p.t(), q.t()),
        }
    }

    /// `inf { d(p, b) : b ∈ window }`, exact.
    pub fn dist_to_window<S: Scalar>(&self, p: &Point<S>, w: &Window<S>) -> S {
        match self {
            Metric::Euclidean => w.euclid_to(p),
            Metric::Bounded => w.euclid_to(p).min(S::one()),
            Metric::CircleInduced => {
                let t = p.t();
                let (a, b) = (w.lo().t(), w.hi().t());
                if t >= a && t <= b {
                    S::zero()
                } else {
                    // chord length is monotone in angular distance, so the closest
                    // point of the arc is one of its ends
                    chord(t, a).min(chord(t, b))
                }
            }
        }
    }

    /// Whether the metric is compatible with a phase space of dimension `dim`.
    pub fn supports(&self, dim: Dim) -> bool {
        !(*self == Metric::CircleInduced && dim == Dim::Two)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Metric::Euclidean => "euclidean",
            Metric::Bounded => "bounded",
            Metric::CircleInduced => "circle",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = GeometryError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "euclidean" | "standard" => Ok(Metric::Euclidean),
            "bounded" => Ok(Metric::Bounded),
            "circle" | "circle_induced" | "circle-induced" => Ok(Metric::CircleInduced),
            other => Err(GeometryError::UnknownMetric(other.to_string())),
        }
    }
}

// |e^{iθ(s)} − e^{iθ(t)}| = 2|sin((θ(s) − θ(t))/2)| = 2|sin(atan s − atan t)|
#[inline]
fn chord<S: Scalar>(s: S, t: S) -> S {
    S::lit(2.0) * (s.atan() - t.atan()).sin().abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn euclidean_pythagorean() {
        let d = Metric::Euclidean
            .distance(&Point::plane(0.0, 0.0), &Point::plane(3.0, 4.0))
            .unwrap();
        assert_eq!(d, 5.0);
    }

    #[test]
    fn bounded_caps_at_one() {
        let d = Metric::Bounded
            .distance(&Point::plane(0.0, 0.0), &Point::plane(10.0, 0.0))
            .unwrap();
        assert_eq!(d, 1.0);
        let d = Metric::Bounded
            .distance(&Point::plane(0.0, 0.0), &Point::plane(0.3, 0.4))
            .unwrap();
        assert_abs_diff_eq!(d, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn circle_identity_and_far_ends() {
        let m = Metric::CircleInduced;
        assert_eq!(m.distance(&Point::line(0.0), &Point::line(0.0)).unwrap(), 0.0);
        // oracle: chord between the explicit embedded points
        let (a, b) = (embed_line_to_circle(-1e6_f64), embed_line_to_circle(1e6_f64));
        let oracle = a.euclid(&b);
        let d = m.distance(&Point::line(-1e6), &Point::line(1e6)).unwrap();
        assert!(d < 0.01);
        assert_abs_diff_eq!(d, oracle, epsilon = 1e-9);
    }

    #[test]
    fn circle_rejects_plane_points() {
        let err = Metric::CircleInduced
            .distance(&Point::plane(0.0, 0.0), &Point::plane(1.0, 0.0))
            .unwrap_err();
        assert_eq!(err, GeometryError::CircleNeedsLine);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let err = Metric::Euclidean
            .distance(&Point::line(0.0), &Point::plane(1.0, 0.0))
            .unwrap_err();
        assert!(matches!(err, GeometryError::DimensionMismatch(..)));
    }

    #[test]
    fn embedding_examples() {
        let p = embed_line_to_circle(0.0_f64);
        assert_abs_diff_eq!(p.x(), -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.y(), 0.0, epsilon = 1e-15);
        let p = embed_line_to_circle(1.0_f64);
        assert_abs_diff_eq!(p.x(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.y(), -1.0, epsilon = 1e-15);
        let far = embed_line_to_circle(1e9_f64);
        assert!(far.y() < 0.0 && (far.x() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn window_validation() {
        assert!(Window::plane(0.0, 1.0, 0.0, 1.0).is_ok());
        assert_eq!(
            Window::plane(0.0, 0.0, 0.0, 1.0).unwrap_err(),
            GeometryError::DegenerateWindow
        );
        assert!(Window::line(1.0, -1.0).is_err());
    }

    #[test]
    fn window_distance_matches_clamped_point() {
        let w = Window::plane(0.0, 1.0, 0.0, 1.0).unwrap();
        assert_eq!(w.euclid_to(&Point::plane(0.5, 0.5)), 0.0);
        assert_abs_diff_eq!(w.euclid_to(&Point::plane(4.0, 5.0)), 5.0, epsilon = 1e-15);
    }

    #[test]
    fn circle_distance_to_window_is_endpoint_minimum() {
        let w = Window::line(-1.0, 2.0).unwrap();
        let m = Metric::CircleInduced;
        assert_eq!(m.dist_to_window(&Point::line(0.5), &w), 0.0);
        // brute force over a fine sample of the interval
        for &t in &[-40.0, -3.0, 5.0, 900.0] {
            let p = Point::line(t);
            let brute = (0..=3000)
                .map(|k| m.dist(&p, &Point::line(-1.0 + 3.0 * k as f64 / 3000.0)))
                .fold(f64::INFINITY, f64::min);
            assert_abs_diff_eq!(m.dist_to_window(&p, &w), brute, epsilon = 1e-12);
        }
    }

    #[test]
    fn region_membership_is_closed() {
        let d = Region::Disk(Disk::new(Point::plane(0.0, 0.0), 2.0));
        assert!(d.contains(&Point::plane(0.0, 2.0)));
        assert!(!d.contains(&Point::plane(0.0, 2.0 + 1e-12)));
    }

    #[test]
    fn works_in_single_precision() {
        let d = Metric::Euclidean
            .distance(&Point::plane(0.0_f32, 0.0), &Point::plane(3.0, 4.0))
            .unwrap();
        assert_eq!(d, 5.0_f32);
        assert!(embed_line_to_circle(0.0_f32).x() < -0.999);
    }
}

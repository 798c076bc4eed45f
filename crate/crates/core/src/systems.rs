//! Homeomorphisms of the line and the plane.
//!
//! Every system implements [`DynSystem`]. The built-ins cover the worked examples
//! (the exponential shear `(x + e^y, y)`, unit translation of the line, the
//! time-one map of the half-plane semicircle flow) plus a few test maps. User
//! systems are coefficient expressions, see [`ExprSystem`].

use std::fmt;
use std::sync::Arc;

use crate::expr::{Expr, ExprError};
use crate::geometry::{Dim, Metric, Point};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SystemError {
    #[error("system `{system}` is {expected:?}-dimensional but the point is {got:?}")]
    DimensionMismatch {
        system: String,
        expected: Dim,
        got: Dim,
    },
    #[error("system `{system}` produced a non-finite image at {at}")]
    NonFinite { system: String, at: String },
    #[error("unknown system `{0}`")]
    Unknown(String),
    #[error("bad parameters for system `{name}`: {msg}")]
    BadParameters { name: String, msg: String },
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// A deterministic self-map of the line or plane.
pub trait DynSystem<S: Scalar = f64>: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> Dim;

    /// `f(p)`. Callers pass points of the right dimension; see [`evaluate`] for the
    /// checked version.
    fn eval(&self, p: Point<S>) -> Point<S>;

    /// Upper bound on the Lipschitz constant of `eval` on the ball `B(p, radius)`.
    fn local_lipschitz(&self, _p: Point<S>, _radius: S) -> Option<S> {
        None
    }

    fn inverse(&self, _p: Point<S>) -> Option<Point<S>> {
        None
    }

    fn notes(&self) -> &str {
        ""
    }
}

pub type SharedSystem<S = f64> = Arc<dyn DynSystem<S>>;

impl<S: Scalar> fmt::Debug for dyn DynSystem<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DynSystem({})", self.name())
    }
}

/// Checked evaluation: dimension must match and the image must be finite.
pub fn evaluate<S: Scalar>(
    system: &dyn DynSystem<S>,
    p: Point<S>,
) -> Result<Point<S>, SystemError> {
    if p.dim() != system.dim() {
        return Err(SystemError::DimensionMismatch {
            system: system.name().to_string(),
            expected: system.dim(),
            got: p.dim(),
        });
    }
    let q = system.eval(p);
    if !q.is_finite() {
        return Err(SystemError::NonFinite {
            system: system.name().to_string(),
            at: p.to_string(),
        });
    }
    Ok(q)
}

/// `d(f(p), p)`.
pub fn displacement<S: Scalar>(system: &dyn DynSystem<S>, metric: Metric, p: Point<S>) -> S {
    metric.dist(&system.eval(p), &p)
}

/// `f^n(p)`.
pub fn iterate<S: Scalar>(system: &dyn DynSystem<S>, p: Point<S>, n: usize) -> Point<S> {
    (0..n).fold(p, |q, _| system.eval(q))
}

#[derive(Debug, Clone)]
pub struct Identity {
    dim: Dim,
}

impl Identity {
    pub fn new(dim: Dim) -> Self {
        Identity { dim }
    }
}

impl<S: Scalar> DynSystem<S> for Identity {
    fn name(&self) -> &str {
        match self.dim {
            Dim::One => "identity_line",
            Dim::Two => "identity",
        }
    }
    fn dim(&self) -> Dim {
        self.dim
    }
    fn eval(&self, p: Point<S>) -> Point<S> {
        p
    }
    fn local_lipschitz(&self, _p: Point<S>, _radius: S) -> Option<S> {
        Some(S::one())
    }
    fn inverse(&self, p: Point<S>) -> Option<Point<S>> {
        Some(p)
    }
}

/// `p ↦ p + offset`.
#[derive(Debug, Clone)]
pub struct Translation<S = f64> {
    offset: Point<S>,
    name: String,
}

impl<S: Scalar> Translation<S> {
    pub fn new(offset: Point<S>) -> Self {
        let name = match offset.dim() {
            Dim::One if offset.t() == S::one() => "line_translation".to_string(),
            _ => format!("translation:{}", offset.coords().iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")),
        };
        Translation { offset, name }
    }

    /// `x ↦ x + 1` on the line.
    pub fn unit_line() -> Self {
        Translation::new(Point::line(S::one()))
    }
}

impl<S: Scalar> DynSystem<S> for Translation<S> {
    fn name(&self) -> &str {
        &self.name
    }
    fn dim(&self) -> Dim {
        self.offset.dim()
    }
    fn eval(&self, p: Point<S>) -> Point<S> {
        p + self.offset
    }
    fn local_lipschitz(&self, _p: Point<S>, _radius: S) -> Option<S> {
        Some(S::one())
    }
    fn inverse(&self, p: Point<S>) -> Option<Point<S>> {
        Some(p - self.offset)
    }
}

/// `(x, y) ↦ (x + e^y, y)`: no fixed points, yet every point is chain recurrent.
#[derive(Debug, Clone, Default)]
pub struct TranslationExp;

impl<S: Scalar> DynSystem<S> for TranslationExp {
    fn name(&self) -> &str {
        "translation_exp"
    }
    fn dim(&self) -> Dim {
        Dim::Two
    }
    fn eval(&self, p: Point<S>) -> Point<S> {
        Point::plane(p.x() + p.y().exp(), p.y())
    }
    fn local_lipschitz(&self, p: Point<S>, radius: S) -> Option<S> {
        // ‖[[1, e^y], [0, 1]]‖ ≤ 1 + e^y
        Some(S::one() + (p.y() + radius.abs()).exp())
    }
    fn inverse(&self, p: Point<S>) -> Option<Point<S>> {
        Some(Point::plane(p.x() - p.y().exp(), p.y()))
    }
}

/// `p ↦ factor · p` in the plane.
#[derive(Debug, Clone)]
pub struct Scaling<S = f64> {
    factor: S,
    name: String,
}

impl<S: Scalar> Scaling<S> {
    pub fn new(factor: S) -> Self {
        let name = if factor == S::lit(0.5) {
            "contraction_half".to_string()
        } else {
            format!("scaling:{factor}")
        };
        Scaling { factor, name }
    }
}

impl<S: Scalar> DynSystem<S> for Scaling<S> {
    fn name(&self) -> &str {
        &self.name
    }
    fn dim(&self) -> Dim {
        Dim::Two
    }
    fn eval(&self, p: Point<S>) -> Point<S> {
        p * self.factor
    }
    fn local_lipschitz(&self, _p: Point<S>, _radius: S) -> Option<S> {
        Some(self.factor.abs())
    }
    fn inverse(&self, p: Point<S>) -> Option<Point<S>> {
        if self.factor == S::zero() {
            None
        } else {
            Some(p * self.factor.recip())
        }
    }
}

/// Rigid rotation about `center`.
#[derive(Debug, Clone)]
pub struct Rotation<S = f64> {
    angle: S,
    center: Point<S>,
    cos: S,
    sin: S,
    name: String,
}

impl<S: Scalar> Rotation<S> {
    pub fn new(angle: S, center: Point<S>) -> Self {
        Rotation {
            angle,
            center,
            cos: angle.cos(),
            sin: angle.sin(),
            name: format!("rotation_angle:{angle}"),
        }
    }

    /// Rotation by `2π/k` about the origin.
    pub fn by_fraction(k: u32) -> Self {
        let mut r = Rotation::new(
            S::TAU() / S::from_u32(k).expect("small integer"),
            Point::plane(S::zero(), S::zero()),
        );
        r.name = format!("rotation:{k}");
        r
    }

    pub fn angle(&self) -> S {
        self.angle
    }
}

impl<S: Scalar> DynSystem<S> for Rotation<S> {
    fn name(&self) -> &str {
        &self.name
    }
    fn dim(&self) -> Dim {
        Dim::Two
    }
    fn eval(&self, p: Point<S>) -> Point<S> {
        let v = p - self.center;
        self.center + Point::plane(self.cos * v.x() - self.sin * v.y(), self.sin * v.x() + self.cos * v.y())
    }
    fn local_lipschitz(&self, _p: Point<S>, _radius: S) -> Option<S> {
        Some(S::one())
    }
    fn inverse(&self, p: Point<S>) -> Option<Point<S>> {
        let v = p - self.center;
        Some(self.center + Point::plane(self.cos * v.x() + self.sin * v.y(), -self.sin * v.x() + self.cos * v.y()))
    }
}

/// Time-one map of the flow whose orbits in the upper half-plane run along the
/// circles through the origin centred on the x-axis, up the positive y-axis, and
/// which fixes the closed lower half-plane.
///
/// Vector field: `V = min(y, 1) · (2xy, y² − x²) / (x² + y²)` for `y > 0`, `V = 0`
/// otherwise; integrated with fixed-step classical RK4.
#[derive(Debug, Clone)]
pub struct SemicircleFlow {
    steps: usize,
}

impl Default for SemicircleFlow {
    fn default() -> Self {
        SemicircleFlow { steps: 64 }
    }
}

impl SemicircleFlow {
    pub fn with_steps(steps: usize) -> Self {
        SemicircleFlow {
            steps: steps.max(1),
        }
    }

    pub fn field<S: Scalar>(p: Point<S>) -> Point<S> {
        let (x, y) = (p.x(), p.y());
        if y <= S::zero() {
            return Point::plane(S::zero(), S::zero());
        }
        let r2 = x * x + y * y;
        let g = y.min(S::one());
        let two = S::lit(2.0);
        Point::plane(g * two * x * y / r2, g * (y * y - x * x) / r2)
    }

    /// Bound on ‖DV‖ over the ball `B(c, rad)`: `|g'| + 2·min(1, y)/|p|`, capped at 3.
    fn field_lipschitz<S: Scalar>(c: Point<S>, rad: S) -> S {
        let (ylo, yhi) = (c.y() - rad, c.y() + rad);
        if yhi <= S::zero() {
            return S::zero();
        }
        let slope = if ylo < S::one() { S::one() } else { S::zero() };
        let two = S::lit(2.0);
        let rmin = c.norm() - rad;
        let turn = if rmin > S::zero() {
            (two * yhi.min(S::one()) / rmin).min(two)
        } else {
            two
        };
        slope + turn
    }
}

/// Time-one map of [`SemicircleFlow::field`].
pub fn semicircle_time_one<S: Scalar>(p: Point<S>) -> Point<S> {
    SemicircleFlow::default().eval(p)
}

impl<S: Scalar> DynSystem<S> for SemicircleFlow {
    fn name(&self) -> &str {
        "semicircle"
    }
    fn dim(&self) -> Dim {
        Dim::Two
    }
    fn eval(&self, p: Point<S>) -> Point<S> {
        if p.y() <= S::zero() {
            return p;
        }
        let h = S::from_usize_lossy(self.steps).recip();
        let half = h * S::lit(0.5);
        let sixth = h / S::lit(6.0);
        let two = S::lit(2.0);
        let mut q = p;
        for _ in 0..self.steps {
            let k1 = Self::field(q);
            let k2 = Self::field(q + k1 * half);
            let k3 = Self::field(q + k2 * half);
            let k4 = Self::field(q + k3 * h);
            q = q + (k1 + k2 * two + k3 * two + k4) * sixth;
        }
        q
    }
    fn local_lipschitz(&self, p: Point<S>, radius: S) -> Option<S> {
        if p.y() + radius <= S::zero() {
            return Some(S::one());
        }
        // Gronwall along the centre trajectory: the tube radius grows at rate L_V
        let h = S::from_usize_lossy(self.steps).recip();
        let half = h * S::lit(0.5);
        let sixth = h / S::lit(6.0);
        let two = S::lit(2.0);
        let grow = (S::lit(3.0) * h).exp();
        let rho0 = radius.abs().max(S::lit(1e-12));
        let mut rho = rho0;
        let mut q = p;
        let mut log_lip = S::zero();
        for _ in 0..self.steps {
            // every trajectory from the tube stays within rho·e^{3h} + h·|V|max of the centre
            let l = Self::field_lipschitz(q, rho * grow + h);
            log_lip = log_lip + l * h;
            rho = rho * (l * h).exp();
            let k1 = Self::field(q);
            let k2 = Self::field(q + k1 * half);
            let k3 = Self::field(q + k2 * half);
            let k4 = Self::field(q + k3 * h);
            q = q + (k1 + k2 * two + k3 * two + k4) * sixth;
        }
        Some(log_lip.exp())
    }
    fn notes(&self) -> &str {
        "identity on y <= 0; RK4, h = 1/64"
    }
}

/// A user map given by coordinate expressions in `x`, `y` (`t` on the line).
#[derive(Debug, Clone)]
pub struct ExprSystem {
    name: String,
    dim: Dim,
    fx: Expr,
    fy: Option<Expr>,
    lipschitz: Option<Expr>,
    notes: String,
}

impl ExprSystem {
    /// `fy` must be given exactly when `dim` is two. `lipschitz` may use `x`, `y`
    /// and the ball radius `r`.
    pub fn new(
        name: &str,
        dim: Dim,
        fx: &str,
        fy: Option<&str>,
        lipschitz: Option<&str>,
    ) -> Result<Self, SystemError> {
        let bad = |msg: &str| SystemError::BadParameters {
            name: name.to_string(),
            msg: msg.to_string(),
        };
        let fy = match (dim, fy) {
            (Dim::One, None) => None,
            (Dim::Two, Some(s)) => Some(Expr::parse(s)?),
            (Dim::One, Some(_)) => return Err(bad("a line map takes only `fx`")),
            (Dim::Two, None) => return Err(bad("a plane map needs both `fx` and `fy`")),
        };
        Ok(ExprSystem {
            name: name.to_string(),
            dim,
            fx: Expr::parse(fx)?,
            fy,
            lipschitz: lipschitz.map(Expr::parse).transpose()?,
            notes: String::new(),
        })
    }

    pub fn with_notes(mut self, notes: &str) -> Self {
        self.notes = notes.to_string();
        self
    }
}

impl<S: Scalar> DynSystem<S> for ExprSystem {
    fn name(&self) -> &str {
        &self.name
    }
    fn dim(&self) -> Dim {
        self.dim
    }
    fn eval(&self, p: Point<S>) -> Point<S> {
        let x = self.fx.eval(p.x(), p.y(), S::zero());
        match &self.fy {
            None => Point::line(x),
            Some(fy) => Point::plane(x, fy.eval(p.x(), p.y(), S::zero())),
        }
    }
    fn local_lipschitz(&self, p: Point<S>, radius: S) -> Option<S> {
        self.lipschitz
            .as_ref()
            .map(|e| e.eval(p.x(), p.y(), radius))
    }
    fn notes(&self) -> &str {
        &self.notes
    }
}

/// Looks up a built-in system by name.
///
/// Accepted: `identity`, `identity_line`, `translation_exp`, `line_translation`,
/// `contraction_half`, `semicircle`, `rotation:K` (angle 2π/K about the origin),
/// `rotation_angle:A`, `translation:DX,DY`, `translation:DT`, `scaling:K`.
pub fn builtin<S: Scalar>(spec: &str) -> Result<SharedSystem<S>, SystemError> {
    let spec = spec.trim();
    let (name, params) = match spec.split_once(':') {
        Some((n, p)) => (n.trim(), Some(p.trim())),
        None => (spec, None),
    };
    let bad = |msg: &str| SystemError::BadParameters {
        name: name.to_string(),
        msg: msg.to_string(),
    };
    let nums = |p: &str| -> Result<Vec<S>, SystemError> {
        p.split(',')
            .map(|s| s.trim().parse::<S>().map_err(|_| bad(&format!("not a number: `{s}`"))))
            .collect()
    };
    let sys: SharedSystem<S> = match (name, params) {
        ("identity", None) => Arc::new(Identity::new(Dim::Two)),
        ("identity_line", None) => Arc::new(Identity::new(Dim::One)),
        ("translation_exp", None) => Arc::new(TranslationExp),
        ("line_translation", None) => Arc::new(Translation::<S>::unit_line()),
        ("contraction_half", None) => Arc::new(Scaling::new(S::lit(0.5))),
        ("semicircle", None) => Arc::new(SemicircleFlow::default()),
        ("rotation", Some(p)) => {
            let k: u32 = p.parse().map_err(|_| bad("expected a positive integer K"))?;
            if k == 0 {
                return Err(bad("K must be positive"));
            }
            Arc::new(Rotation::<S>::by_fraction(k))
        }
        ("rotation_angle", Some(p)) => {
            let v = nums(p)?;
            if v.len() != 1 {
                return Err(bad("expected one angle"));
            }
            Arc::new(Rotation::new(v[0], Point::plane(S::zero(), S::zero())))
        }
        ("translation", Some(p)) => {
            let v = nums(p)?;
            let offset = Point::from_coords(&v).map_err(|e| bad(&e.to_string()))?;
            Arc::new(Translation::new(offset))
        }
        ("scaling", Some(p)) => {
            let v = nums(p)?;
            if v.len() != 1 {
                return Err(bad("expected one factor"));
            }
            Arc::new(Scaling::new(v[0]))
        }
        _ => return Err(SystemError::Unknown(spec.to_string())),
    };
    Ok(sys)
}

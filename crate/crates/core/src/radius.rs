//! Positive radius functions `r(p)`; a field stands for the neighborhood of the
//! diagonal `N = {(p, q) : d(p, q) < r(p)}`, so `N(p)` is the open ball `B(p, r(p))`.

use std::fmt;
use std::str::FromStr;

use crate::expr::{Expr, ExprError};
use crate::geometry::{Dim, Point, Window};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RadiusError {
    #[error("unrecognised radius field `{0}` (expected const:C, invsq:C or expr:EXPR)")]
    Unrecognised(String),
    #[error("radius field value must be positive, got {0}")]
    NonPositive(String),
    #[error("grid field has {got} values, expected {expected}")]
    WrongLength { expected: usize, got: usize },
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Node values on the corners of a regular box grid, bilinearly interpolated.
/// Points outside the window are clamped onto it.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField<S = f64> {
    window: Window<S>,
    nx: usize,
    ny: usize,
    values: Vec<S>,
}

impl<S: Scalar> GridField<S> {
    /// `ny` is ignored on the line. Values are stored row by row, x fastest.
    pub fn new(window: Window<S>, nx: usize, ny: usize, values: Vec<S>) -> Result<Self, RadiusError> {
        let ny = if window.dim() == Dim::One { 0 } else { ny };
        let expected = (nx + 1) * (ny + 1);
        if nx == 0 || (window.dim() == Dim::Two && ny == 0) || values.len() != expected {
            return Err(RadiusError::WrongLength {
                expected,
                got: values.len(),
            });
        }
        Ok(GridField {
            window,
            nx,
            ny,
            values,
        })
    }

    /// Samples `f` at every node.
    pub fn from_fn(window: Window<S>, nx: usize, ny: usize, f: impl Fn(Point<S>) -> S) -> Self {
        let ny = if window.dim() == Dim::One { 0 } else { ny };
        let mut g = GridField {
            window,
            nx,
            ny,
            values: Vec::new(),
        };
        g.values = (0..g.node_count()).map(|k| f(g.node(k))).collect();
        g
    }

    pub fn window(&self) -> &Window<S> {
        &self.window
    }

    /// Box counts `(nx, ny)`; `ny` is zero on the line.
    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn node_count(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [S] {
        &mut self.values
    }

    pub fn with_values(&self, values: Vec<S>) -> Self {
        assert_eq!(values.len(), self.node_count());
        GridField {
            values,
            ..self.clone()
        }
    }

    fn spacing(&self) -> (S, S) {
        let hx = self.window.width() / S::from_usize_lossy(self.nx);
        let hy = if self.ny == 0 {
            S::one()
        } else {
            self.window.height() / S::from_usize_lossy(self.ny)
        };
        (hx, hy)
    }

    /// Position of node `k`.
    pub fn node(&self, k: usize) -> Point<S> {
        let (i, j) = (k % (self.nx + 1), k / (self.nx + 1));
        let (hx, hy) = self.spacing();
        let lo = self.window.lo();
        let x = lo.x() + hx * S::from_usize_lossy(i);
        match self.window.dim() {
            Dim::One => Point::line(x),
            Dim::Two => Point::plane(x, lo.y() + hy * S::from_usize_lossy(j)),
        }
    }

    pub fn eval(&self, p: &Point<S>) -> S {
        let (hx, hy) = self.spacing();
        let q = self.window.clamp(p);
        let lo = self.window.lo();
        let cell = |u: S, h: S, n: usize| -> (usize, S) {
            let s = u / h;
            let i = s.floor().to_usize().unwrap_or(0).min(n - 1);
            (i, s - S::from_usize_lossy(i))
        };
        let (i, fx) = cell(q.x() - lo.x(), hx, self.nx);
        let row = self.nx + 1;
        if self.ny == 0 {
            return self.values[i] * (S::one() - fx) + self.values[i + 1] * fx;
        }
        let (j, fy) = cell(q.y() - lo.y(), hy, self.ny);
        let v00 = self.values[i + row * j];
        let v10 = self.values[i + 1 + row * j];
        let v01 = self.values[i + row * (j + 1)];
        let v11 = self.values[i + 1 + row * (j + 1)];
        let one = S::one();
        (v00 * (one - fx) + v10 * fx) * (one - fy) + (v01 * (one - fx) + v11 * fx) * fy
    }

    /// Bound on the Euclidean Lipschitz constant of the interpolant.
    pub fn lipschitz_bound(&self) -> S {
        let (hx, hy) = self.spacing();
        let row = self.nx + 1;
        let mut gx = S::zero();
        let mut gy = S::zero();
        for j in 0..=self.ny {
            for i in 0..self.nx {
                let d = (self.values[i + 1 + row * j] - self.values[i + row * j]).abs();
                gx = gx.max(d / hx);
            }
        }
        for j in 0..self.ny {
            for i in 0..=self.nx {
                let d = (self.values[i + row * (j + 1)] - self.values[i + row * j]).abs();
                gy = gy.max(d / hy);
            }
        }
        gx.hypot(gy)
    }
}

/// A positive function on the phase space.
#[derive(Debug, Clone, PartialEq)]
pub enum RadiusField<S = f64> {
    Constant(S),
    /// `scale / (1 + |p|²)`.
    InverseSquare { scale: S },
    /// Closed form in `x`, `y`.
    Expr(Expr),
    Grid(GridField<S>),
}

impl<S: Scalar> RadiusField<S> {
    pub fn constant(c: S) -> Self {
        RadiusField::Constant(c)
    }

    pub fn inverse_square(scale: S) -> Self {
        RadiusField::InverseSquare { scale }
    }

    #[inline]
    pub fn eval(&self, p: &Point<S>) -> S {
        match self {
            RadiusField::Constant(c) => *c,
            RadiusField::InverseSquare { scale } => {
                *scale / (S::one() + p.x() * p.x() + p.y() * p.y())
            }
            RadiusField::Expr(e) => e.eval(p.x(), p.y(), S::zero()),
            RadiusField::Grid(g) => g.eval(p),
        }
    }

    /// Euclidean Lipschitz bound, when one is known.
    pub fn lipschitz_bound(&self) -> Option<S> {
        match self {
            RadiusField::Constant(_) => Some(S::zero()),
            // sup |∇ c/(1+|p|²)| = c · 3√3/8 < 0.65 c
            RadiusField::InverseSquare { scale } => Some(scale.abs() * S::lit(0.65)),
            RadiusField::Expr(_) => None,
            RadiusField::Grid(g) => Some(g.lipschitz_bound()),
        }
    }

    /// Errors unless the field is positive at every point in `samples`.
    pub fn check_positive<'a>(
        &self,
        samples: impl IntoIterator<Item = &'a Point<S>>,
    ) -> Result<(), RadiusError> {
        if let RadiusField::Grid(g) = self {
            if let Some(v) = g.values().iter().find(|v| !(**v > S::zero())) {
                return Err(RadiusError::NonPositive(v.to_string()));
            }
        }
        for p in samples {
            let v = self.eval(p);
            if !(v > S::zero()) {
                return Err(RadiusError::NonPositive(format!("{v} at ({p})")));
            }
        }
        Ok(())
    }

    /// `min` of the field over a lattice of `(k + 1)²` points of `window`
    /// (an exact minimum for constants and for `InverseSquare`).
    pub fn min_over(&self, window: &Window<S>, k: usize) -> S {
        if let RadiusField::InverseSquare { scale } = self {
            let far = window
                .corners()
                .iter()
                .map(|c| c.x() * c.x() + c.y() * c.y())
                .fold(S::zero(), S::max);
            return *scale / (S::one() + far);
        }
        if let RadiusField::Constant(c) = self {
            return *c;
        }
        let k = k.max(1);
        let mut m = S::infinity();
        let (lo, w, h) = (window.lo(), window.width(), window.height());
        let ky = if window.dim() == Dim::One { 0 } else { k };
        for j in 0..=ky {
            for i in 0..=k {
                let fx = S::from_usize_lossy(i) / S::from_usize_lossy(k);
                let fy = S::from_usize_lossy(j) / S::from_usize_lossy(k);
                let p = Point::plane(lo.x() + w * fx, lo.y() + h * fy).with_dim(window.dim());
                m = m.min(self.eval(&p));
            }
        }
        m
    }
}

impl<S: Scalar> fmt::Display for RadiusField<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RadiusField::Constant(c) => write!(f, "const:{c}"),
            RadiusField::InverseSquare { scale } => write!(f, "invsq:{scale}"),
            RadiusField::Expr(e) => write!(f, "expr:{e}"),
            RadiusField::Grid(g) => {
                let (nx, ny) = g.shape();
                write!(f, "grid:{nx}x{ny}")
            }
        }
    }
}

impl<S: Scalar> FromStr for RadiusField<S> {
    type Err = RadiusError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (kind, arg) = s
            .split_once(':')
            .ok_or_else(|| RadiusError::Unrecognised(s.to_string()))?;
        let num = |a: &str| -> Result<S, RadiusError> {
            let v: S = a
                .trim()
                .parse()
                .map_err(|_| RadiusError::Unrecognised(s.to_string()))?;
            if v > S::zero() {
                Ok(v)
            } else {
                Err(RadiusError::NonPositive(a.to_string()))
            }
        };
        match kind.trim() {
            "const" | "constant" => Ok(RadiusField::Constant(num(arg)?)),
            "invsq" | "inverse_square" => Ok(RadiusField::InverseSquare { scale: num(arg)? }),
            "expr" => Ok(RadiusField::Expr(Expr::parse(arg)?)),
            _ => Err(RadiusError::Unrecognised(s.to_string())),
        }
    }
}

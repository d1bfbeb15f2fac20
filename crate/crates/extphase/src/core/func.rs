use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::jet::Jet;
use crate::numeric::{quad, QuinticHermite};

/// How derivatives of a closure-backed function are obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DerivMode {
    Analytic,
    /// Central differences; `None` selects the default step for the order.
    FiniteDifference(Option<f64>),
    Unavailable,
}

type F1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type F2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Default first-derivative step: cbrt(eps)·max(1,|x|).
pub fn fd_step1(x: f64) -> f64 {
    f64::EPSILON.cbrt() * x.abs().max(1.0)
}

/// Default second-derivative step: eps^(1/4)·max(1,|x|).
pub fn fd_step2(x: f64) -> f64 {
    f64::EPSILON.powf(0.25) * x.abs().max(1.0)
}

#[derive(Clone)]
enum Repr1 {
    Const(f64),
    Expr(Arc<Expr>),
    Closure {
        f: F1,
        d1: Option<F1>,
        d2: Option<F1>,
        antiderivative: Option<F1>,
        mode: DerivMode,
    },
    Hermite(Arc<QuinticHermite>),
}

/// A real function of one variable with access to its first two derivatives.
#[derive(Clone)]
pub struct ScalarFn {
    repr: Repr1,
}

impl fmt::Debug for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr1::Const(c) => write!(f, "ScalarFn::Const({c})"),
            Repr1::Expr(e) => write!(f, "ScalarFn::Expr({:?})", e.source()),
            Repr1::Closure { mode, .. } => write!(f, "ScalarFn::Closure({mode:?})"),
            Repr1::Hermite(h) => write!(f, "ScalarFn::Hermite({} nodes)", h.nodes().len()),
        }
    }
}

impl ScalarFn {
    pub fn constant(c: f64) -> Self {
        ScalarFn { repr: Repr1::Const(c) }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// Parse an expression in the single variable `var`.
    pub fn parse(src: &str, var: &str) -> Result<Self> {
        let e = Expr::parse(src, &[var])?;
        Ok(Self::from_expr(e))
    }

    pub fn from_expr(e: Expr) -> Self {
        match e.as_constant() {
            Some(c) => Self::constant(c),
            None => ScalarFn { repr: Repr1::Expr(Arc::new(e)) },
        }
    }

    /// A closure with finite-difference derivatives.
    pub fn from_fn(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        ScalarFn {
            repr: Repr1::Closure {
                f: Arc::new(f),
                d1: None,
                d2: None,
                antiderivative: None,
                mode: DerivMode::FiniteDifference(None),
            },
        }
    }

    /// A closure whose derivatives must not be requested.
    pub fn opaque(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        let mut s = Self::from_fn(f);
        if let Repr1::Closure { mode, .. } = &mut s.repr {
            *mode = DerivMode::Unavailable;
        }
        s
    }

    /// A closure with supplied analytic first and second derivatives.
    pub fn analytic(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ScalarFn {
            repr: Repr1::Closure {
                f: Arc::new(f),
                d1: Some(Arc::new(d1)),
                d2: Some(Arc::new(d2)),
                antiderivative: None,
                mode: DerivMode::Analytic,
            },
        }
    }

    /// Attach a closed-form antiderivative used by [`ScalarFn::integral`].
    pub fn with_antiderivative(mut self, g: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        if let Repr1::Closure { antiderivative, .. } = &mut self.repr {
            *antiderivative = Some(Arc::new(g));
        }
        self
    }

    /// Switch a closure to finite differences with a fixed step.
    pub fn with_fd_step(mut self, h: f64) -> Self {
        if let Repr1::Closure { mode, .. } = &mut self.repr {
            *mode = DerivMode::FiniteDifference(Some(h));
        }
        self
    }

    pub fn from_hermite(h: QuinticHermite) -> Self {
        ScalarFn { repr: Repr1::Hermite(Arc::new(h)) }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self.repr {
            Repr1::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn expr_source(&self) -> Option<&str> {
        match &self.repr {
            Repr1::Expr(e) => Some(e.source()),
            _ => None,
        }
    }

    pub fn hermite(&self) -> Option<&QuinticHermite> {
        match &self.repr {
            Repr1::Hermite(h) => Some(h),
            _ => None,
        }
    }

    pub fn deriv_mode(&self) -> DerivMode {
        match &self.repr {
            Repr1::Closure { mode, .. } => *mode,
            _ => DerivMode::Analytic,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.repr {
            Repr1::Const(c) => *c,
            Repr1::Expr(e) => e.eval(&[x]),
            Repr1::Closure { f, .. } => f(x),
            Repr1::Hermite(h) => h.eval(x),
        }
    }

    /// Value, first and second derivative.
    pub fn jet(&self, x: f64) -> Result<[f64; 3]> {
        match &self.repr {
            Repr1::Const(c) => Ok([*c, 0.0, 0.0]),
            Repr1::Expr(e) => {
                let j = e.eval_jet(&[Jet::var(x, 0)]);
                Ok([j.v, j.d[0], j.h[0][0]])
            }
            Repr1::Hermite(h) => {
                let a = h.eval_all(x);
                Ok([a[0], a[1], a[2]])
            }
            Repr1::Closure { f, d1, d2, mode, .. } => {
                let v = f(x);
                match mode {
                    DerivMode::Unavailable => Err(Error::Capability("derivative not available for this function".into())),
                    DerivMode::Analytic => {
                        let (d1, d2) = match (d1, d2) {
                            (Some(a), Some(b)) => (a, b),
                            _ => return Err(Error::Capability("analytic derivative missing".into())),
                        };
                        Ok([v, d1(x), d2(x)])
                    }
                    DerivMode::FiniteDifference(h) => {
                        let h1 = h.unwrap_or_else(|| fd_step1(x));
                        let h2 = h.unwrap_or_else(|| fd_step2(x));
                        let d = (f(x + h1) - f(x - h1)) / (2.0 * h1);
                        let s = (f(x + h2) - 2.0 * v + f(x - h2)) / (h2 * h2);
                        Ok([v, d, s])
                    }
                }
            }
        }
    }

    pub fn d1(&self, x: f64) -> Result<f64> {
        Ok(self.jet(x)?[1])
    }

    pub fn d2(&self, x: f64) -> Result<f64> {
        Ok(self.jet(x)?[2])
    }

    /// Third derivative. Exact for constants and Hermite interpolants; central
    /// differences of the second derivative otherwise.
    pub fn d3(&self, x: f64) -> Result<f64> {
        match &self.repr {
            Repr1::Const(_) => Ok(0.0),
            Repr1::Hermite(h) => Ok(h.eval_all(x)[3]),
            _ => {
                let h = fd_step1(x);
                Ok((self.d2(x + h)? - self.d2(x - h)?) / (2.0 * h))
            }
        }
    }

    /// ∫_a^b f, exact for constants and closed-form antiderivatives, adaptive
    /// Gauss–Legendre otherwise.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        match &self.repr {
            Repr1::Const(c) => c * (b - a),
            Repr1::Closure { antiderivative: Some(g), .. } => g(b) - g(a),
            _ => quad::integrate(&|x| self.eval(x), a, b, 1e-14),
        }
    }
}

#[derive(Clone)]
enum Repr2 {
    Const(f64),
    Expr(Arc<Expr>),
    Closure { f: F2, mode: DerivMode },
}

/// A real function of two variables (x, y) with derivatives up to second order.
#[derive(Clone)]
pub struct ScalarFn2 {
    repr: Repr2,
}

/// Value, gradient and Hessian of a two-variable function at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivs2 {
    pub v: f64,
    pub dx: f64,
    pub dy: f64,
    pub dxx: f64,
    pub dxy: f64,
    pub dyy: f64,
}

impl fmt::Debug for ScalarFn2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr2::Const(c) => write!(f, "ScalarFn2::Const({c})"),
            Repr2::Expr(e) => write!(f, "ScalarFn2::Expr({:?})", e.source()),
            Repr2::Closure { mode, .. } => write!(f, "ScalarFn2::Closure({mode:?})"),
        }
    }
}

impl ScalarFn2 {
    pub fn constant(c: f64) -> Self {
        ScalarFn2 { repr: Repr2::Const(c) }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// Parse an expression in the two variables `x` and `y` (in that order).
    pub fn parse(src: &str, x: &str, y: &str) -> Result<Self> {
        let e = Expr::parse(src, &[x, y])?;
        Ok(Self::from_expr(e))
    }

    pub fn from_expr(e: Expr) -> Self {
        match e.as_constant() {
            Some(c) => Self::constant(c),
            None => ScalarFn2 { repr: Repr2::Expr(Arc::new(e)) },
        }
    }

    pub fn from_fn(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        ScalarFn2 { repr: Repr2::Closure { f: Arc::new(f), mode: DerivMode::FiniteDifference(None) } }
    }

    pub fn opaque(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        ScalarFn2 { repr: Repr2::Closure { f: Arc::new(f), mode: DerivMode::Unavailable } }
    }

    pub fn expr_source(&self) -> Option<&str> {
        match &self.repr {
            Repr2::Expr(e) => Some(e.source()),
            _ => None,
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match &self.repr {
            Repr2::Const(c) => *c,
            Repr2::Expr(e) => e.eval(&[x, y]),
            Repr2::Closure { f, .. } => f(x, y),
        }
    }

    pub fn derivs(&self, x: f64, y: f64) -> Result<Derivs2> {
        match &self.repr {
            Repr2::Const(c) => Ok(Derivs2 { v: *c, dx: 0.0, dy: 0.0, dxx: 0.0, dxy: 0.0, dyy: 0.0 }),
            Repr2::Expr(e) => {
                let j = e.eval_jet(&[Jet::var(x, 0), Jet::var(y, 1)]);
                Ok(Derivs2 { v: j.v, dx: j.d[0], dy: j.d[1], dxx: j.h[0][0], dxy: j.h[0][1], dyy: j.h[1][1] })
            }
            Repr2::Closure { f, mode } => {
                let v = f(x, y);
                match mode {
                    DerivMode::Unavailable | DerivMode::Analytic => {
                        Err(Error::Capability("derivative not available for this function".into()))
                    }
                    DerivMode::FiniteDifference(h) => {
                        let hx = h.unwrap_or_else(|| fd_step1(x));
                        let hy = h.unwrap_or_else(|| fd_step1(y));
                        let sx = h.unwrap_or_else(|| fd_step2(x));
                        let sy = h.unwrap_or_else(|| fd_step2(y));
                        let dx = (f(x + hx, y) - f(x - hx, y)) / (2.0 * hx);
                        let dy = (f(x, y + hy) - f(x, y - hy)) / (2.0 * hy);
                        let dxx = (f(x + sx, y) - 2.0 * v + f(x - sx, y)) / (sx * sx);
                        let dyy = (f(x, y + sy) - 2.0 * v + f(x, y - sy)) / (sy * sy);
                        let dxy = (f(x + sx, y + sy) - f(x + sx, y - sy) - f(x - sx, y + sy) + f(x - sx, y - sy))
                            / (4.0 * sx * sy);
                        Ok(Derivs2 { v, dx, dy, dxx, dxy, dyy })
                    }
                }
            }
        }
    }

    pub fn dx(&self, x: f64, y: f64) -> Result<f64> {
        Ok(self.derivs(x, y)?.dx)
    }

    pub fn dy(&self, x: f64, y: f64) -> Result<f64> {
        Ok(self.derivs(x, y)?.dy)
    }

    pub fn dxx(&self, x: f64, y: f64) -> Result<f64> {
        Ok(self.derivs(x, y)?.dxx)
    }

    /// False only when the function provably ignores its second argument.
    pub fn depends_on_y(&self) -> bool {
        match &self.repr {
            Repr2::Const(_) => false,
            Repr2::Expr(e) => e.uses_var(1),
            Repr2::Closure { .. } => true,
        }
    }
}

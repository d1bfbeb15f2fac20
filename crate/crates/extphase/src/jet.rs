//! Second-order forward-mode derivatives in two variables.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Value, gradient and Hessian of a function of two variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub d: [f64; 2],
    pub h: [[f64; 2]; 2],
}

impl Jet {
    pub fn cst(v: f64) -> Jet {
        Jet { v, d: [0.0; 2], h: [[0.0; 2]; 2] }
    }

    /// The independent variable number `i` (0 or 1) at value `v`.
    pub fn var(v: f64, i: usize) -> Jet {
        let mut j = Jet::cst(v);
        j.d[i] = 1.0;
        j
    }

    // f(u) with f' = a, f'' = b
    fn chain(self, f: f64, a: f64, b: f64) -> Jet {
        let mut h = [[0.0; 2]; 2];
        for (i, row) in h.iter_mut().enumerate() {
            for (k, hk) in row.iter_mut().enumerate() {
                *hk = b * self.d[i] * self.d[k] + a * self.h[i][k];
            }
        }
        Jet { v: f, d: [a * self.d[0], a * self.d[1]], h }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let mut r = self;
        r.v += o.v;
        for i in 0..2 {
            r.d[i] += o.d[i];
            for k in 0..2 {
                r.h[i][k] += o.h[i][k];
            }
        }
        r
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        let mut r = self;
        r.v = -r.v;
        for i in 0..2 {
            r.d[i] = -r.d[i];
            for k in 0..2 {
                r.h[i][k] = -r.h[i][k];
            }
        }
        r
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut h = [[0.0; 2]; 2];
        for (i, row) in h.iter_mut().enumerate() {
            for (k, hk) in row.iter_mut().enumerate() {
                *hk = self.h[i][k] * o.v + o.h[i][k] * self.v + self.d[i] * o.d[k] + self.d[k] * o.d[i];
            }
        }
        Jet {
            v: self.v * o.v,
            d: [
                self.d[0] * o.v + self.v * o.d[0],
                self.d[1] * o.v + self.v * o.d[1],
            ],
            h,
        }
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        let inv = o.chain(1.0 / o.v, -1.0 / (o.v * o.v), 2.0 / (o.v * o.v * o.v));
        self * inv
    }
}

/// Arithmetic needed by the expression evaluator.
pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    fn cst(v: f64) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn tanh(self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn powf(self, c: f64) -> Self;
}

impl Scalar for f64 {
    fn cst(v: f64) -> f64 {
        v
    }
    fn sin(self) -> f64 {
        f64::sin(self)
    }
    fn cos(self) -> f64 {
        f64::cos(self)
    }
    fn exp(self) -> f64 {
        f64::exp(self)
    }
    fn ln(self) -> f64 {
        f64::ln(self)
    }
    fn sqrt(self) -> f64 {
        f64::sqrt(self)
    }
    fn tanh(self) -> f64 {
        f64::tanh(self)
    }
    fn powi(self, n: i32) -> f64 {
        f64::powi(self, n)
    }
    fn powf(self, c: f64) -> f64 {
        f64::powf(self, c)
    }
}

impl Scalar for Jet {
    fn cst(v: f64) -> Jet {
        Jet::cst(v)
    }
    fn sin(self) -> Jet {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }
    fn cos(self) -> Jet {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }
    fn exp(self) -> Jet {
        let e = self.v.exp();
        self.chain(e, e, e)
    }
    fn ln(self) -> Jet {
        self.chain(self.v.ln(), 1.0 / self.v, -1.0 / (self.v * self.v))
    }
    fn sqrt(self) -> Jet {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.v))
    }
    fn tanh(self) -> Jet {
        let t = self.v.tanh();
        let a = 1.0 - t * t;
        self.chain(t, a, -2.0 * t * a)
    }
    fn powi(self, n: i32) -> Jet {
        let x = self.v;
        let nf = n as f64;
        let a = if n == 0 { 0.0 } else { nf * x.powi(n - 1) };
        let b = if n == 0 || n == 1 { 0.0 } else { nf * (nf - 1.0) * x.powi(n - 2) };
        self.chain(x.powi(n), a, b)
    }
    fn powf(self, c: f64) -> Jet {
        let x = self.v;
        self.chain(x.powf(c), c * x.powf(c - 1.0), c * (c - 1.0) * x.powf(c - 2.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule() {
        let x = Jet::var(2.0, 0);
        let y = Jet::var(3.0, 1);
        let f = x * x * y;
        assert_eq!(f.v, 12.0);
        assert_eq!(f.d, [12.0, 4.0]);
        assert_eq!(f.h, [[6.0, 4.0], [4.0, 0.0]]);
    }

    #[test]
    fn quotient() {
        let x = Jet::var(2.0, 0);
        let f = Jet::cst(1.0) / x;
        assert!((f.d[0] + 0.25).abs() < 1e-15);
        assert!((f.h[0][0] - 0.25).abs() < 1e-15);
    }
}

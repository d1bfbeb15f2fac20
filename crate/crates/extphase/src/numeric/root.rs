//! Bracketed scalar root finding (Brent's method).

use crate::error::{Error, Result};

/// Find x in [a, b] with f(x) = 0, given a sign change over the bracket.
pub fn brent(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
        return Err(Error::Numerical(format!("root not bracketed in [{a}, {b}]")));
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            if 2.0 * p < (3.0 * xm * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
    }
    Err(Error::Numerical("root finder did not converge".into()))
}

/// Invert a strictly increasing function: solve g(x) = y, expanding the
/// initial bracket [lo, hi] geometrically if needed.
pub fn invert_increasing(g: &dyn Fn(f64) -> f64, y: f64, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut width = (hi - lo).max(1.0);
    for _ in 0..60 {
        if g(lo) <= y {
            break;
        }
        lo -= width;
        width *= 2.0;
    }
    width = (hi - lo).max(1.0);
    for _ in 0..60 {
        if g(hi) >= y {
            break;
        }
        hi += width;
        width *= 2.0;
    }
    brent(&|x| g(x) - y, lo, hi, tol)
}

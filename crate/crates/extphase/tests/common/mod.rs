#![allow(dead_code)]

use extphase::core::{HamiltonianSpec, ScalarFn};
use extphase::dynamics::GaugeSpec;
use extphase::transform::{new_potential, solve_coefficients_until, CoefficientInit, InvariantSpec, TransformSpec};

pub const TD_OMEGA2: &str = "1+0.5*sin(0.3*t)";

pub fn td_spec() -> HamiltonianSpec {
    HamiltonianSpec::oscillator(TD_OMEGA2).unwrap()
}

pub fn td_omega2(t: f64) -> f64 {
    1.0 + 0.5 * (0.3 * t).sin()
}

/// Coefficients for the TD oscillator with Ã(0) = 1 out to B(T) = t_end.
pub fn td_transform(t_end: f64) -> (HamiltonianSpec, TransformSpec, InvariantSpec) {
    let spec = td_spec();
    let tf = solve_coefficients_until(&spec, &CoefficientInit::unit(1.0), ScalarFn::zero(), t_end, 1e-11).unwrap();
    let inv = new_potential(&tf, &spec).unwrap();
    (spec, tf, inv)
}

/// Classical fixed-step RK4, written out here so it shares nothing with the crate's integrators.
pub fn rk4<const N: usize>(f: impl Fn(f64, &[f64; N]) -> [f64; N], t0: f64, y0: [f64; N], t1: f64, h: f64) -> [f64; N] {
    let n = ((t1 - t0) / h).round().max(1.0) as usize;
    let h = (t1 - t0) / n as f64;
    let mut y = y0;
    let axpy = |y: &[f64; N], k: &[f64; N], s: f64| -> [f64; N] { std::array::from_fn(|i| y[i] + s * k[i]) };
    for i in 0..n {
        let t = t0 + i as f64 * h;
        let k1 = f(t, &y);
        let k2 = f(t + 0.5 * h, &axpy(&y, &k1, 0.5 * h));
        let k3 = f(t + 0.5 * h, &axpy(&y, &k2, 0.5 * h));
        let k4 = f(t + h, &axpy(&y, &k3, h));
        y = std::array::from_fn(|j| y[j] + h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]));
    }
    y
}

/// λ(τ) = 1 + τ² from τ = 0 at t_start, ending exactly at t_end.
pub fn quadratic_gauge(t_start: f64, t_end: f64) -> GaugeSpec {
    let lam = ScalarFn::parse("1+tau^2", "tau").unwrap();
    // ∫₀^τ λ = τ + τ³/3, inverted by bisection
    let (mut lo, mut hi) = (0.0, t_end - t_start);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid + mid.powi(3) / 3.0 < t_end - t_start {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    GaugeSpec::multiplier(lam, 0.0, 0.5 * (lo + hi), t_start).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

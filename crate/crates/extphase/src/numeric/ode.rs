//! Dormand–Prince 5(4) with local extrapolation and exact output times.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0];
const B: [f64; 6] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Adaptive integrator settings. The error test per step is
/// `|err_i| <= tol * (1 + max(|y_i|, |y_new_i|))` for every component.
#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub tol: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

/// An accepted step: time and state after the step.
#[derive(Debug, Clone, Copy)]
pub struct StepRecord<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
}

impl Dopri5 {
    pub fn new(tol: f64) -> Self {
        Dopri5 { tol, h_max: f64::INFINITY, max_steps: 10_000_000 }
    }

    pub fn with_h_max(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self
    }

    /// Integrate from (t0, y0) through the increasing times `outputs`, returning
    /// the state at each one. `on_step` sees every accepted step and may abort.
    pub fn solve<const N: usize, F, O>(
        &self,
        mut f: F,
        t0: f64,
        y0: [f64; N],
        outputs: &[f64],
        mut on_step: O,
    ) -> Result<Vec<[f64; N]>>
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
        O: FnMut(f64, &[f64; N]) -> Result<()>,
    {
        if !(self.tol > 0.0) {
            return Err(Error::Input("integrator tolerance must be positive".into()));
        }
        let mut t = t0;
        let mut y = y0;
        let mut k1 = f(t, &y);
        let mut h = initial_step(&mut f, t, &y, &k1, self.tol).min(self.h_max);
        let mut out = Vec::with_capacity(outputs.len());
        let mut steps = 0usize;
        for &target in outputs {
            if target < t {
                return Err(Error::Input(format!("output time {target} precedes current time {t}")));
            }
            while t < target {
                let remaining = target - t;
                let last = h >= remaining;
                let step = if last { remaining } else { h.min(remaining) };
                let (y_new, k7, err) = self.attempt(&mut f, t, &y, &k1, step);
                steps += 1;
                if steps > self.max_steps {
                    return Err(Error::Stiffness { t, step });
                }
                if err <= 1.0 {
                    t = if last { target } else { t + step };
                    y = y_new;
                    k1 = k7;
                    on_step(t, &y)?;
                    let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                    // a clamped final step says nothing about the natural step size
                    if !last || step >= h {
                        h = (step * fac).min(self.h_max);
                    }
                } else {
                    let fac = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.1 };
                    h = step * fac;
                    if h <= 1e-14 * (1.0 + t.abs()) {
                        return Err(Error::Stiffness { t, step: h });
                    }
                }
            }
            out.push(y);
        }
        Ok(out)
    }

    /// Integrate to `t_end`, recording every accepted step (including the start).
    pub fn solve_steps<const N: usize, F, O>(
        &self,
        mut f: F,
        t0: f64,
        y0: [f64; N],
        t_end: f64,
        mut on_step: O,
    ) -> Result<Vec<StepRecord<N>>>
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
        O: FnMut(f64, &[f64; N]) -> Result<()>,
    {
        let mut rec = vec![StepRecord { t: t0, y: y0 }];
        self.solve(&mut f, t0, y0, &[t_end], |t, y| {
            on_step(t, y)?;
            rec.push(StepRecord { t, y: *y });
            Ok(())
        })?;
        Ok(rec)
    }

    fn attempt<const N: usize, F>(&self, f: &mut F, t: f64, y: &[f64; N], k1: &[f64; N], h: f64) -> ([f64; N], [f64; N], f64)
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
    {
        let stage = |coef: &[f64], ks: &[&[f64; N]]| {
            let mut s = *y;
            for (c, k) in coef.iter().zip(ks) {
                for i in 0..N {
                    s[i] += h * c * k[i];
                }
            }
            s
        };
        let k2 = f(t + C[1] * h, &stage(&A2, &[k1]));
        let k3 = f(t + C[2] * h, &stage(&A3, &[k1, &k2]));
        let k4 = f(t + C[3] * h, &stage(&A4, &[k1, &k2, &k3]));
        let k5 = f(t + C[4] * h, &stage(&A5, &[k1, &k2, &k3, &k4]));
        let k6 = f(t + C[5] * h, &stage(&A6, &[k1, &k2, &k3, &k4, &k5]));
        let y_new = stage(&B, &[k1, &k2, &k3, &k4, &k5, &k6]);
        let k7 = f(t + h, &y_new);
        let ks = [k1, &k2, &k3, &k4, &k5, &k6, &k7];
        let mut err = 0.0f64;
        for i in 0..N {
            let mut e = 0.0;
            for (c, k) in E.iter().zip(ks.iter()) {
                e += c * k[i];
            }
            let scale = self.tol * (1.0 + y[i].abs().max(y_new[i].abs()));
            let r = (h * e).abs() / scale;
            if !r.is_finite() || !y_new[i].is_finite() {
                return (y_new, k7, f64::INFINITY);
            }
            err = err.max(r);
        }
        (y_new, k7, err)
    }
}

fn initial_step<const N: usize, F>(f: &mut F, t: f64, y: &[f64; N], k1: &[f64; N], tol: f64) -> f64
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let norm = |v: &[f64; N]| {
        v.iter()
            .zip(y.iter())
            .map(|(a, b)| (a / (tol * (1.0 + b.abs()))).powi(2))
            .sum::<f64>()
            .sqrt()
            / (N as f64).sqrt()
    };
    let scaled_y: [f64; N] = std::array::from_fn(|i| y[i]);
    let d0 = norm(&scaled_y);
    let d1 = norm(k1);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1: [f64; N] = std::array::from_fn(|i| y[i] + h0 * k1[i]);
    let k2 = f(t + h0, &y1);
    let diff: [f64; N] = std::array::from_fn(|i| k2[i] - k1[i]);
    let d2 = norm(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1)
}

/// Classic fixed-step RK4, kept as an independent reference.
pub fn rk4_fixed<const N: usize, F>(mut f: F, t0: f64, y0: [f64; N], t_end: f64, h: f64) -> [f64; N]
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let n = ((t_end - t0) / h).round().max(1.0) as usize;
    let h = (t_end - t0) / n as f64;
    let mut y = y0;
    for s in 0..n {
        let t = t0 + s as f64 * h;
        let k1 = f(t, &y);
        let y2: [f64; N] = std::array::from_fn(|i| y[i] + 0.5 * h * k1[i]);
        let k2 = f(t + 0.5 * h, &y2);
        let y3: [f64; N] = std::array::from_fn(|i| y[i] + 0.5 * h * k2[i]);
        let k3 = f(t + 0.5 * h, &y3);
        let y4: [f64; N] = std::array::from_fn(|i| y[i] + h * k3[i]);
        let k4 = f(t + h, &y4);
        for i in 0..N {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let s = Dopri5::new(1e-10);
        let out = s.solve(|_, y: &[f64; 1]| [-y[0]], 0.0, [1.0], &[1.0, 2.0], |_, _| Ok(())).unwrap();
        assert!((out[0][0] - (-1f64).exp()).abs() < 1e-9);
        assert!((out[1][0] - (-2f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn harmonic_oscillator_period() {
        let s = Dopri5::new(1e-11);
        let tp = 2.0 * std::f64::consts::PI;
        let out = s
            .solve(|_, y: &[f64; 2]| [y[1], -y[0]], 0.0, [1.0, 0.0], &[tp], |_, _| Ok(()))
            .unwrap();
        assert!((out[0][0] - 1.0).abs() < 1e-9 && out[0][1].abs() < 1e-9);
    }

    #[test]
    fn matches_rk4_reference() {
        let f = |t: f64, y: &[f64; 2]| [y[1], -(1.0 + 0.5 * (0.3 * t).sin()) * y[0]];
        let reference = rk4_fixed(f, 0.0, [1.0, 0.0], 10.0, 1e-4);
        let out = Dopri5::new(1e-10).solve(f, 0.0, [1.0, 0.0], &[10.0], |_, _| Ok(())).unwrap();
        assert!((out[0][0] - reference[0]).abs() < 1e-9);
    }

    #[test]
    fn observer_can_abort() {
        let r = Dopri5::new(1e-8).solve(
            |_, y: &[f64; 1]| [y[0]],
            0.0,
            [1.0],
            &[10.0],
            |t, _| if t > 1.0 { Err(Error::Numerical("stop".into())) } else { Ok(()) },
        );
        assert!(r.is_err());
    }

    #[test]
    fn blow_up_reports_stiffness() {
        let r = Dopri5::new(1e-8).solve(|_, y: &[f64; 1]| [y[0] * y[0]], 0.0, [1.0], &[2.0], |_, _| Ok(()));
        assert!(matches!(r, Err(Error::Stiffness { .. })));
    }
}

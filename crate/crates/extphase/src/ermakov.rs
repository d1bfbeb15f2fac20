//! The auxiliary equation ρ̈ + ω²(t)ρ = ρ⁻³ and the Lewis invariant of the
//! unit-mass oscillator H = p²/2 + ω²(t)q²/2.
//!
//! Frequencies are passed as ω²(t), which is what the potential supplies.

use std::cell::Cell;
use std::io::Write;

use crate::core::ScalarFn;
use crate::dynamics::{fmt17, Trajectory};
use crate::error::{Error, Result};
use crate::numeric::{Dopri5, QuinticHermite};

/// Output grid spacing of [`solve_ermakov`].
pub const GRID_STEP: f64 = 1.0 / 64.0;
/// Denominator floor of the relative drift.
pub const DRIFT_FLOOR: f64 = 1e-12;

/// ρ and ρ̇ sampled on a uniform grid, with the quintic Hermite interpolant
/// built from (ρ, ρ̇, ρ̈) at the nodes.
#[derive(Debug, Clone)]
pub struct ErmakovSolution {
    pub t: Vec<f64>,
    pub rho: Vec<f64>,
    pub rhodot: Vec<f64>,
    pub omega2: ScalarFn,
    interp: QuinticHermite,
}

/// Adiabatic seed ρ₀ = ω(t₀)^(−1/2), ρ̇₀ = 0.
pub fn adiabatic_seed(omega2: &ScalarFn, t0: f64) -> Result<(f64, f64)> {
    let w2 = omega2.eval(t0);
    if !(w2 > 0.0) {
        return Err(Error::Input(format!("adiabatic seed needs omega^2 > 0, got {w2} at t = {t0}")));
    }
    Ok((w2.powf(-0.25), 0.0))
}

fn rho_ddot(omega2: &ScalarFn, t: f64, rho: f64) -> f64 {
    rho.powi(-3) - omega2.eval(t) * rho
}

/// Integrate the auxiliary equation over `t_span` with local error `tol`.
pub fn solve_ermakov(omega2: &ScalarFn, rho0: f64, rhodot0: f64, t_span: (f64, f64), tol: f64) -> Result<ErmakovSolution> {
    let (t0, t1) = t_span;
    if !(rho0 > 0.0) || !rhodot0.is_finite() {
        return Err(Error::Input(format!("rho0 must be positive and finite, got ({rho0}, {rhodot0})")));
    }
    if !(t1 > t0) {
        return Err(Error::Input(format!("empty time span [{t0}, {t1}]")));
    }
    let n = ((t1 - t0) / GRID_STEP).ceil().max(2.0) as usize;
    let ts: Vec<f64> = (0..=n).map(|k| t0 + (t1 - t0) * k as f64 / n as f64).collect();
    let floor = 1e-8 * rho0.min(1.0);
    let last_valid = Cell::new(t0);
    let rhs = |t: f64, y: &[f64; 2]| [y[1], rho_ddot(omega2, t, y[0])];
    let res = Dopri5::new(tol).solve(rhs, t0, [rho0, rhodot0], &ts[1..], |t, y| {
        if !(y[0] > floor) || !y[1].is_finite() {
            return Err(Error::Singularity { what: "rho".into(), last_valid_t: last_valid.get() });
        }
        last_valid.set(t);
        Ok(())
    });
    let ys = match res {
        Ok(ys) => ys,
        Err(Error::Stiffness { .. }) | Err(Error::Numerical(_)) => {
            return Err(Error::Singularity { what: "rho".into(), last_valid_t: last_valid.get() });
        }
        Err(e) => return Err(e),
    };
    let mut rho = vec![rho0];
    let mut rhodot = vec![rhodot0];
    for y in ys {
        rho.push(y[0]);
        rhodot.push(y[1]);
    }
    let data: Vec<[f64; 3]> =
        ts.iter().zip(rho.iter().zip(&rhodot)).map(|(&t, (&r, &rd))| [r, rd, rho_ddot(omega2, t, r)]).collect();
    let interp = QuinticHermite::new(ts.clone(), data)?;
    Ok(ErmakovSolution { t: ts, rho, rhodot, omega2: omega2.clone(), interp })
}

impl ErmakovSolution {
    pub fn domain(&self) -> (f64, f64) {
        self.interp.domain()
    }

    /// (ρ, ρ̇) at any t in the domain.
    pub fn at(&self, t: f64) -> (f64, f64) {
        let a = self.interp.eval_all(t);
        (a[0], a[1])
    }

    /// ρ as a function of t, backed by the interpolant.
    pub fn rho_fn(&self) -> ScalarFn {
        ScalarFn::from_hermite(self.interp.clone())
    }

    /// |ρ̈ + ω²ρ − ρ⁻³| / (1 + |ρ̈|) per grid point, with ρ̈ from five-point
    /// differences of the stored ρ̇ (one-sided stencils near the ends).
    pub fn residuals(&self) -> Vec<f64> {
        // first-derivative weights ×12h, indexed by the evaluation point's offset in the stencil
        const W: [[f64; 5]; 5] = [
            [-25.0, 48.0, -36.0, 16.0, -3.0],
            [-3.0, -10.0, 18.0, -6.0, 1.0],
            [1.0, -8.0, 0.0, 8.0, -1.0],
            [-1.0, 6.0, -18.0, 10.0, 3.0],
            [3.0, -16.0, 36.0, -48.0, 25.0],
        ];
        let n = self.t.len();
        if n < 5 {
            return vec![0.0; n];
        }
        let h = self.t[1] - self.t[0];
        (0..n)
            .map(|i| {
                let start = i.saturating_sub(2).min(n - 5);
                let w = &W[i - start];
                let acc = (0..5).map(|k| w[k] * self.rhodot[start + k]).sum::<f64>() / (12.0 * h);
                let r = self.rho[i];
                (acc + self.omega2.eval(self.t[i]) * r - r.powi(-3)).abs() / (1.0 + acc.abs())
            })
            .collect()
    }

    /// CSV `t,rho,rhodot,residual`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,rho,rhodot,residual")?;
        for (i, res) in self.residuals().into_iter().enumerate() {
            writeln!(w, "{},{},{},{}", fmt17(self.t[i]), fmt17(self.rho[i]), fmt17(self.rhodot[i]), fmt17(res))?;
        }
        Ok(())
    }
}

/// I = ½(ρp − ρ̇q)² + q²/(2ρ²).
pub fn lewis_invariant(q: f64, p: f64, rho: f64, rhodot: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::Input(format!("rho must be positive, got {rho}")));
    }
    let a = rho * p - rhodot * q;
    Ok(0.5 * a * a + q * q / (2.0 * rho * rho))
}

/// I(t) along a trajectory, with ρ taken from `sol`.
pub fn invariant_series(traj: &Trajectory, sol: &ErmakovSolution) -> Result<Vec<f64>> {
    let (a, b) = sol.domain();
    let slack = 1e-12 * (1.0 + a.abs().max(b.abs()));
    traj.projected()
        .iter()
        .map(|s| {
            if s.t < a - slack || s.t > b + slack {
                return Err(Error::Input(format!("trajectory time {} outside the auxiliary solution on [{a}, {b}]", s.t)));
            }
            let (rho, rhodot) = sol.at(s.t.clamp(a, b));
            lewis_invariant(s.q, s.p, rho, rhodot)
        })
        .collect()
}

/// max |I(t) − I(t₀)| / max(|I(t₀)|, 10⁻¹²) over the samples.
pub fn invariant_drift(traj: &Trajectory, sol: &ErmakovSolution) -> Result<f64> {
    let series = invariant_series(traj, sol)?;
    let Some(&i0) = series.first() else {
        return Err(Error::Input("empty trajectory".into()));
    };
    let drift = series.iter().map(|i| (i - i0).abs()).fold(0.0, f64::max) / i0.abs().max(DRIFT_FLOOR);
    if drift > 1e-3 {
        log::warn!("invariant drift {drift:.3e}: the quantity is not conserved along this trajectory");
    }
    Ok(drift)
}

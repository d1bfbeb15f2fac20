//! Reduced and extended (gauge-fixed) Hamiltonian flows, Poisson and Dirac
//! brackets, and the singular velocity Hessian of the extended Lagrangian.
//!
//! Dirac brackets are evaluated at fixed τ: the gauge condition
//! η = t̃ − g(τ) enters only through its phase-space gradient, so an explicit
//! τ-dependence of g plays no role in the bracket itself.

mod brackets;
mod gauge;
mod trajectory;

pub use brackets::{
    dirac_bracket, dirac_brackets_old, dirac_table, gradient4, hessian_rank_check, poisson_bracket, BracketKind, BracketReport,
};
pub use gauge::{GaugeKind, GaugeSpec};
pub use trajectory::{fmt17, Trajectory, TrajectoryStates, Variables};

use std::cell::RefCell;
use std::collections::BTreeMap;

use crate::core::{eval_constraint, ExtendedState, HamiltonianSpec, ReducedState};
use crate::error::{Error, Result};
use crate::numeric::Dopri5;

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_CONSTRAINT_TOL: f64 = 1e-8;

/// Records the first error raised inside an ODE right-hand side.
pub(crate) struct RhsGuard {
    err: RefCell<Option<Error>>,
}

impl RhsGuard {
    pub fn new() -> Self {
        RhsGuard { err: RefCell::new(None) }
    }

    pub fn eval<const N: usize>(&self, r: Result<[f64; N]>) -> [f64; N] {
        match r {
            Ok(v) => v,
            Err(e) => {
                self.err.borrow_mut().get_or_insert(e);
                [f64::NAN; N]
            }
        }
    }

    pub fn finish<T>(&self, r: Result<T>) -> Result<T> {
        match self.err.borrow_mut().take() {
            Some(e) => Err(e),
            None => r,
        }
    }
}

fn reduced_rhs(spec: &HamiltonianSpec, t: f64, y: &[f64; 2]) -> Result<[f64; 2]> {
    let m = spec.mass_at(t)?;
    Ok([y[1] / m, -spec.force_gradient(y[0], t)?])
}

/// How output samples are placed.
#[derive(Debug, Clone)]
pub enum Sampling {
    /// Every accepted integrator step.
    Steps,
    /// Fixed parameter values, increasing, starting after the initial point.
    At(Vec<f64>),
}

/// dq/dt = p/m(t), dp/dt = −∂V/∂q from `init` to `t_end`, sampled at every step.
pub fn integrate_reduced(spec: &HamiltonianSpec, init: ReducedState, t_end: f64, tol: f64) -> Result<Trajectory> {
    integrate_reduced_sampled(spec, init, t_end, tol, Sampling::Steps)
}

pub fn integrate_reduced_sampled(
    spec: &HamiltonianSpec,
    init: ReducedState,
    t_end: f64,
    tol: f64,
    sampling: Sampling,
) -> Result<Trajectory> {
    if !(t_end > init.t) {
        return Err(Error::Input(format!("t_end = {t_end} must exceed the initial time {}", init.t)));
    }
    if !(tol > 0.0) {
        return Err(Error::Input("tolerance must be positive".into()));
    }
    if !init.is_finite() {
        return Err(Error::Input("initial state is not finite".into()));
    }
    let guard = RhsGuard::new();
    let solver = Dopri5::new(tol);
    let rhs = |t: f64, y: &[f64; 2]| guard.eval(reduced_rhs(spec, t, y));
    let (ts, ys): (Vec<f64>, Vec<[f64; 2]>) = match sampling {
        Sampling::Steps => {
            let rec = guard.finish(solver.solve_steps(rhs, init.t, [init.q, init.p], t_end, |_, _| Ok(())))?;
            rec.into_iter().map(|r| (r.t, r.y)).unzip()
        }
        Sampling::At(times) => {
            let mut outs = times.clone();
            if outs.last().copied() != Some(t_end) {
                outs.push(t_end);
            }
            let ys = guard.finish(solver.solve(rhs, init.t, [init.q, init.p], &outs, |_, _| Ok(())))?;
            let mut ts = vec![init.t];
            ts.extend(outs);
            let mut all = vec![[init.q, init.p]];
            all.extend(ys);
            (ts, all)
        }
    };
    let states: Vec<ReducedState> = ts.iter().zip(&ys).map(|(&t, y)| ReducedState::new(y[0], y[1], t)).collect();
    let energy = states.iter().map(|s| spec.energy(s.q, s.p, s.t)).collect::<Result<Vec<_>>>()?;
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("H".to_string(), energy);
    Trajectory::new(ts, TrajectoryStates::Reduced(states), Variables::Original, diagnostics)
}

/// Gradient of a constraint function in canonical coordinates (x₁, x₂, p₁, p₂).
pub type ConstraintGradient<'a> = dyn Fn(&[f64; 4]) -> Result<[f64; 4]> + 'a;
pub type ConstraintValue<'a> = dyn Fn(&[f64; 4]) -> Result<f64> + 'a;

/// Options for constrained flows.
#[derive(Debug, Clone, Copy)]
pub struct FlowOptions {
    pub tol: f64,
    pub constraint_tol: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions { tol: DEFAULT_TOL, constraint_tol: DEFAULT_CONSTRAINT_TOL }
    }
}

/// Integrate the flow generated by λ(τ)·φ in canonical coordinates
/// (x₁, x₂, p₁, p₂): x' = λ ∂φ/∂p, p' = −λ ∂φ/∂x.
#[allow(clippy::too_many_arguments)]
pub fn integrate_constraint_flow(
    phi: &ConstraintValue<'_>,
    grad: &ConstraintGradient<'_>,
    gauge: &GaugeSpec,
    init: [f64; 4],
    tau0: f64,
    sampling: Sampling,
    tau_end: f64,
    opts: FlowOptions,
) -> Result<(Vec<f64>, Vec<[f64; 4]>, Vec<f64>)> {
    if !(tau_end > tau0) {
        return Err(Error::Input(format!("tau_end = {tau_end} must exceed tau0 = {tau0}")));
    }
    let phi0 = phi(&init)?;
    if phi0.abs() > opts.constraint_tol {
        return Err(Error::Input(format!(
            "initial state is off-shell: |phi| = {:e} > constraint_tol {:e}",
            phi0.abs(),
            opts.constraint_tol
        )));
    }
    let guard = RhsGuard::new();
    let rhs = |tau: f64, y: &[f64; 4]| {
        guard.eval((|| {
            let l = gauge.lambda(tau)?;
            let g = grad(y)?;
            Ok([l * g[2], l * g[3], -l * g[0], -l * g[1]])
        })())
    };
    let bound = 100.0 * opts.constraint_tol;
    let check = |tau: f64, y: &[f64; 4]| {
        let r = phi(y)?;
        if !(r.abs() <= bound) {
            return Err(Error::ConstraintViolation { param: tau, residual: r.abs(), bound });
        }
        Ok(())
    };
    let solver = Dopri5::new(opts.tol);
    let (taus, ys): (Vec<f64>, Vec<[f64; 4]>) = match sampling {
        Sampling::Steps => {
            let rec = guard.finish(solver.solve_steps(rhs, tau0, init, tau_end, check))?;
            rec.into_iter().map(|r| (r.t, r.y)).unzip()
        }
        Sampling::At(mut outs) => {
            if outs.last().copied() != Some(tau_end) {
                outs.push(tau_end);
            }
            let ys = guard.finish(solver.solve(rhs, tau0, init, &outs, check))?;
            let mut taus = vec![tau0];
            taus.extend(outs);
            let mut all = vec![init];
            all.extend(ys);
            (taus, all)
        }
    };
    let phis = ys.iter().map(phi).collect::<Result<Vec<_>>>()?;
    Ok((taus, ys, phis))
}

/// Extended Hamilton equations q̃′ = λp/m, p′ = −λ∂V/∂q̃, t̃′ = λ, p′_t̃ = −λ∂H/∂t̃
/// from an on-shell initial state, sampled at every accepted step.
pub fn integrate_extended(
    spec: &HamiltonianSpec,
    gauge: &GaugeSpec,
    init: ExtendedState,
    tau_end: f64,
    tol: f64,
) -> Result<Trajectory> {
    integrate_extended_sampled(spec, gauge, init, tau_end, FlowOptions { tol, ..Default::default() }, Sampling::Steps)
}

pub fn integrate_extended_sampled(
    spec: &HamiltonianSpec,
    gauge: &GaugeSpec,
    init: ExtendedState,
    tau_end: f64,
    opts: FlowOptions,
    sampling: Sampling,
) -> Result<Trajectory> {
    if !init.is_finite() {
        return Err(Error::Input("initial state is not finite".into()));
    }
    let phi = |x: &[f64; 4]| eval_constraint(spec, &ExtendedState::from_coords(*x, 0.0));
    let grad = |x: &[f64; 4]| {
        let m = spec.mass_at(x[1])?;
        Ok([spec.force_gradient(x[0], x[1])?, spec.dh_dt(x[0], x[2], x[1])?, x[2] / m, 1.0])
    };
    let (taus, ys, phis) = integrate_constraint_flow(&phi, &grad, gauge, init.coords(), init.tau, sampling, tau_end, opts)?;
    let states: Vec<ExtendedState> = taus.iter().zip(&ys).map(|(&tau, y)| ExtendedState::from_coords(*y, tau)).collect();
    let energy = states.iter().map(|s| spec.energy(s.q, s.p, s.t)).collect::<Result<Vec<_>>>()?;
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("phi".to_string(), phis);
    diagnostics.insert("H".to_string(), energy);
    Trajectory::new(taus, TrajectoryStates::Extended(states), Variables::Original, diagnostics)
}

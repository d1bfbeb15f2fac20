use std::collections::BTreeMap;

use crate::core::{ExtendedState, HamiltonianSpec};
use crate::dynamics::{
    dirac_table, gradient4, integrate_constraint_flow, BracketReport, FlowOptions, GaugeSpec, Sampling, Trajectory,
    TrajectoryStates, Variables,
};
use crate::error::{finite, Error, Result};

use super::{boundary_term_derivs, forward_map, invariant_I, jacobian_analytic, InvariantSpec, TransformSpec};

/// The constraint in new variables,
///
/// φ = (1/Ḃ){P_T + (Ḃ/2mÃ²)P² + (ḂD/mÃ − ΓQ)P + W(Q,T)},
/// W = ḂD²/2m − m₀ΓQ(κ + ΓQ) + (m₀Q²/2)Γ̇ + ḂV(ÃQ, B),
///
/// with D = m₀(κ + ΓQ)/Ã. It coincides with p_t̃ + H evaluated at the
/// forward image of (Q, T, P, P_T).
pub fn constraint_new(tf: &TransformSpec, spec: &HamiltonianSpec, x: [f64; 4]) -> Result<f64> {
    let [qn, tn, pn, ptn] = x;
    let c = tf.coeffs(tn)?;
    let m = spec.mass_at(c.b)?;
    let g = c.gamma();
    let k = tf.kappa.eval(qn);
    let d = tf.m0 * (k + g * qn) / c.a;
    let w = c.bd * d * d / (2.0 * m) - tf.m0 * g * qn * (k + g * qn)
        + 0.5 * tf.m0 * qn * qn * c.gamma_dot()
        + c.bd * spec.potential.eval(c.a * qn, c.b);
    let quad = c.bd / (2.0 * m * c.a * c.a);
    let lin = c.bd * d / (m * c.a) - g * qn;
    finite((ptn + quad * pn * pn + lin * pn + w) / c.bd, "transformed constraint")
}

/// Put (Q, T, P) on the constraint surface by solving for P_T.
pub fn on_shell_new(tf: &TransformSpec, spec: &HamiltonianSpec, q: f64, t: f64, p: f64, tau: f64) -> Result<ExtendedState> {
    let bd = tf.coeffs(t)?.bd;
    let p_t = -bd * constraint_new(tf, spec, [q, t, p, 0.0])?;
    Ok(ExtendedState::new(q, t, p, p_t, tau))
}

/// ∇φ in (Q, T, P, P_T) as Mᵀ∇φ_old with M the Jacobian of the forward map.
fn constraint_new_grad(tf: &TransformSpec, spec: &HamiltonianSpec, x: &[f64; 4]) -> Result<[f64; 4]> {
    let y = forward_map(tf, *x)?;
    let m = spec.mass_at(y[1])?;
    let old = [spec.force_gradient(y[0], y[1])?, spec.dh_dt(y[0], y[2], y[1])?, y[2] / m, 1.0];
    let jac = jacobian_analytic(tf, *x)?;
    Ok(std::array::from_fn(|j| (0..4).map(|i| old[i] * jac.m[i][j]).sum()))
}

/// Dirac brackets of (Q, T, P, P_T) for φ in new variables and η = T − T(τ)
/// at fixed τ. Entries are keyed by "Q", "T", "P", "P_T".
pub fn dirac_brackets_new(tf: &TransformSpec, spec: &HamiltonianSpec, s: &ExtendedState) -> Result<BracketReport> {
    let phi = |x: &[f64; 4]| constraint_new(tf, spec, *x);
    let t_gauge = s.t;
    let eta = |x: &[f64; 4]| Ok(x[1] - t_gauge);
    dirac_table(["Q", "T", "P", "P_T"], &phi, &eta, &s.coords())
}

/// A gauge-fixed trajectory in new variables.
pub type TransformedFlow = Trajectory;

/// Flow of λφ in (Q, T, P, P_T) from an on-shell state. Diagnostics: "phi"
/// and "I" = I(Q,P).
#[allow(clippy::too_many_arguments)]
pub fn integrate_transformed(
    tf: &TransformSpec,
    spec: &HamiltonianSpec,
    inv: &InvariantSpec,
    gauge: &GaugeSpec,
    init: ExtendedState,
    tau_end: f64,
    opts: FlowOptions,
    sampling: Sampling,
) -> Result<TransformedFlow> {
    if !init.is_finite() {
        return Err(Error::Input("initial state is not finite".into()));
    }
    let phi = |x: &[f64; 4]| constraint_new(tf, spec, *x);
    let grad = |x: &[f64; 4]| constraint_new_grad(tf, spec, x);
    let (taus, ys, phis) = integrate_constraint_flow(&phi, &grad, gauge, init.coords(), init.tau, sampling, tau_end, opts)?;
    let states: Vec<ExtendedState> = taus.iter().zip(&ys).map(|(&tau, y)| ExtendedState::from_coords(*y, tau)).collect();
    let inv_vals = states.iter().map(|s| invariant_I(inv, s.q, s.p)).collect();
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("phi".to_string(), phis);
    diagnostics.insert("I".to_string(), inv_vals);
    Trajectory::new(taus, TrajectoryStates::Extended(states), Variables::Transformed, diagnostics)
}

/// Derivative of samples y(x) on a possibly non-uniform grid by five-point
/// Lagrange differentiation (stencils shifted inward near the ends).
fn sample_derivative(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let width = n.min(5);
    (0..n)
        .map(|i| {
            let start = i.saturating_sub(width / 2).min(n - width);
            let idx: Vec<usize> = (start..start + width).collect();
            let xa = x[i];
            let mut d = 0.0;
            for &k in &idx {
                let denom: f64 = idx.iter().filter(|&&l| l != k).map(|&l| x[k] - x[l]).product();
                let mut num = 0.0;
                for &m in idx.iter().filter(|&&m| m != k) {
                    num += idx.iter().filter(|&&l| l != k && l != m).map(|&l| xa - x[l]).product::<f64>();
                }
                d += y[k] * num / denom;
            }
            d
        })
        .collect()
}

/// sup |dP_T/dT| along a transformed trajectory, by differences of the samples.
pub fn p_t_rate(traj: &Trajectory) -> Result<f64> {
    let states = traj.extended().ok_or_else(|| Error::Input("p_t_rate needs an extended trajectory".into()))?;
    if traj.variables != Variables::Transformed {
        return Err(Error::Input("p_t_rate needs a trajectory in transformed variables".into()));
    }
    if states.len() < 3 {
        return Err(Error::Input("need at least three samples".into()));
    }
    let ts: Vec<f64> = states.iter().map(|s| s.t).collect();
    if ts.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Input("T must increase along the trajectory".into()));
    }
    let pts: Vec<f64> = states.iter().map(|s| s.p_t).collect();
    Ok(sample_derivative(&ts, &pts).into_iter().map(f64::abs).fold(0.0, f64::max))
}

/// sup |dP_T/dT| along a transformed trajectory from Hamilton's equations,
/// dP_T/dT = −(∂φ/∂T)/(∂φ/∂P_T) at each sample.
pub fn p_t_rate_along(tf: &TransformSpec, spec: &HamiltonianSpec, traj: &Trajectory) -> Result<f64> {
    let states = traj.extended().ok_or_else(|| Error::Input("p_t_rate_along needs an extended trajectory".into()))?;
    if traj.variables != Variables::Transformed {
        return Err(Error::Input("p_t_rate_along needs a trajectory in transformed variables".into()));
    }
    let mut worst = 0.0f64;
    for s in states {
        let g = constraint_new_grad(tf, spec, &s.coords())?;
        if !(g[3].abs() > 0.0) {
            return Err(Error::Numerical(format!("dphi/dP_T vanishes at T = {}", s.t)));
        }
        worst = worst.max((g[1] / g[3]).abs());
    }
    Ok(worst)
}

/// max over samples of |{F, λφ} − dF/dτ|, the bracket from ∇φ and the τ-derivative
/// by differences of F along the samples.
#[allow(non_snake_case)]
pub fn gauge_variation_F(tf: &TransformSpec, spec: &HamiltonianSpec, gauge: &GaugeSpec, traj: &Trajectory) -> Result<f64> {
    let states = traj.extended().ok_or_else(|| Error::Input("gauge_variation_F needs an extended trajectory".into()))?;
    if states.len() < 3 {
        return Err(Error::Input("need at least three samples".into()));
    }
    let fs = states.iter().map(|s| Ok(boundary_term_derivs(tf, s.q, s.t)?.f)).collect::<Result<Vec<_>>>()?;
    let fd = sample_derivative(&traj.param, &fs);
    let mut worst = 0.0f64;
    for (s, d) in states.iter().zip(fd) {
        let b = boundary_term_derivs(tf, s.q, s.t)?;
        let g = gradient4(&|x: &[f64; 4]| constraint_new(tf, spec, *x), &s.coords())?;
        let bracket = gauge.lambda(s.tau)? * (b.f_q * g[2] + b.f_t * g[3]);
        worst = worst.max((bracket - d).abs());
    }
    Ok(worst)
}

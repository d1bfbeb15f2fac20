use crate::core::{HamiltonianSpec, ScalarFn};
use crate::dynamics::RhsGuard;
use crate::error::{finite, Error, Result};
use crate::numeric::Dopri5;

use super::TransformSpec;

/// Default relative tolerance on the T-independence of V̄.
pub const SEP_TOL: f64 = 1e-6;

/// I(Q,P) = P²/2m₀ + κ(Q)P + V̄(Q).
#[derive(Debug, Clone)]
pub struct InvariantSpec {
    pub m0: f64,
    pub kappa: ScalarFn,
    pub vbar: ScalarFn,
}

/// m₀κ²/2 + (m₀Q²/2)(Ä/Ã − 2Γ²) + (mÃ²/m₀)V(ÃQ, B) at one T.
fn vbar_literal(tf: &TransformSpec, spec: &HamiltonianSpec, q: f64, t: f64) -> Result<f64> {
    let c = tf.coeffs(t)?;
    let m = spec.mass_at(c.b)?;
    let k = tf.kappa.eval(q);
    let g = c.gamma();
    let v = 0.5 * tf.m0 * k * k
        + 0.5 * tf.m0 * q * q * (c.add / c.a - 2.0 * g * g)
        + m * c.a * c.a / tf.m0 * spec.potential.eval(c.a * q, c.b);
    finite(v, "new potential")
}

/// V̄ at T = start of the domain, checked against T at the middle of the domain.
pub fn new_potential(tf: &TransformSpec, spec: &HamiltonianSpec) -> Result<InvariantSpec> {
    let (lo, hi) = tf.domain;
    let dt = (0.5 * (hi - lo)).min(1.0);
    new_potential_at(tf, spec, lo, dt, SEP_TOL)
}

/// V̄ frozen at `t_ref`; the same expression at `t_ref + dt` must agree within
/// `sep_tol` (relative) at sample points Q.
pub fn new_potential_at(tf: &TransformSpec, spec: &HamiltonianSpec, t_ref: f64, dt: f64, sep_tol: f64) -> Result<InvariantSpec> {
    for &q in &[-2.0, -0.5, 0.75, 1.5] {
        let (a, b) = (vbar_literal(tf, spec, q, t_ref)?, vbar_literal(tf, spec, q, t_ref + dt)?);
        if (a - b).abs() > sep_tol * (1.0 + a.abs().max(b.abs())) {
            return Err(Error::Separability(format!(
                "new potential depends on T: Vbar({q}) = {a} at T = {t_ref} but {b} at T = {}",
                t_ref + dt
            )));
        }
    }
    let c = tf.coeffs(t_ref)?;
    let m = spec.mass_at(c.b)?;
    let stiff = spec.stiffness(c.b)?;
    let g = c.gamma();
    let m0 = tf.m0;
    // quadratic coefficient of V̄, which the determining equation pins to h₀
    let quad = 0.5 * m0 * (c.add / c.a - 2.0 * g * g) + 0.5 * m * stiff * c.a.powi(4) / m0;
    let (k0, k1, k2) = (tf.kappa.clone(), tf.kappa.clone(), tf.kappa.clone());
    let jet = |k: &ScalarFn, q: f64| k.jet(q).unwrap_or([f64::NAN; 3]);
    let vbar = ScalarFn::analytic(
        move |q| 0.5 * m0 * k0.eval(q).powi(2) + quad * q * q,
        move |q| {
            let [k, kd, _] = jet(&k1, q);
            m0 * k * kd + 2.0 * quad * q
        },
        move |q| {
            let [k, kd, kdd] = jet(&k2, q);
            m0 * (kd * kd + k * kdd) + 2.0 * quad
        },
    );
    Ok(InvariantSpec { m0, kappa: tf.kappa.clone(), vbar })
}

#[allow(non_snake_case)]
pub fn invariant_I(inv: &InvariantSpec, q: f64, p: f64) -> f64 {
    p * p / (2.0 * inv.m0) + inv.kappa.eval(q) * p + inv.vbar.eval(q)
}

/// (∂I/∂Q, ∂I/∂P).
fn invariant_grad(inv: &InvariantSpec, q: f64, p: f64) -> Result<(f64, f64)> {
    let [k, kd, _] = inv.kappa.jet(q)?;
    Ok((kd * p + inv.vbar.d1(q)?, p / inv.m0 + k))
}

/// F(Q,T) = m₀[∫₀^Q κ + (Ȧ/Ã)Q²/2].
pub fn boundary_term(tf: &TransformSpec, q: f64, t: f64) -> Result<f64> {
    let c = tf.coeffs(t)?;
    finite(tf.m0 * (tf.kappa.integral(0.0, q) + 0.5 * c.gamma() * q * q), "boundary term")
}

/// Partials of the boundary term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryDerivs {
    pub f: f64,
    pub f_q: f64,
    pub f_t: f64,
    pub f_qq: f64,
    pub f_qt: f64,
}

pub fn boundary_term_derivs(tf: &TransformSpec, q: f64, t: f64) -> Result<BoundaryDerivs> {
    let c = tf.coeffs(t)?;
    let [k, kd, _] = tf.kappa.jet(q)?;
    let (g, gd) = (c.gamma(), c.gamma_dot());
    let m0 = tf.m0;
    Ok(BoundaryDerivs {
        f: m0 * (tf.kappa.integral(0.0, q) + 0.5 * g * q * q),
        f_q: m0 * (k + g * q),
        f_t: 0.5 * m0 * gd * q * q,
        f_qq: m0 * (kd + g),
        f_qt: m0 * gd * q,
    })
}

/// F₃(p, p_t̃, Q, T) = −B p_t̃ − ÃQp + F(Q,T).
#[allow(non_snake_case)]
pub fn generating_F3(tf: &TransformSpec, p: f64, p_t: f64, q: f64, t: f64) -> Result<f64> {
    let c = tf.coeffs(t)?;
    finite(-c.b * p_t - c.a * q * p + boundary_term(tf, q, t)?, "generating function")
}

/// Ĩ(Q, P̃, T) = I(Q, P̃ − ∂F/∂Q) − ∂F/∂T.
pub fn tilde_hamiltonian(inv: &InvariantSpec, tf: &TransformSpec, q: f64, p_tilde: f64, t: f64) -> Result<f64> {
    let d = boundary_term_derivs(tf, q, t)?;
    finite(invariant_I(inv, q, p_tilde - d.f_q) - d.f_t, "shifted invariant")
}

/// Hamilton flow of I in (Q, P), sampled at the increasing times `outputs`.
pub fn integrate_invariant_flow(inv: &InvariantSpec, init: [f64; 2], t0: f64, outputs: &[f64], tol: f64) -> Result<Vec<[f64; 2]>> {
    let guard = RhsGuard::new();
    let rhs = |_t: f64, y: &[f64; 2]| {
        guard.eval(invariant_grad(inv, y[0], y[1]).map(|(iq, ip)| [ip, -iq]))
    };
    let r = Dopri5::new(tol).solve(rhs, t0, init, outputs, |_, _| Ok(()));
    guard.finish(r)
}

/// Hamilton flow of Ĩ in (Q, P̃).
pub fn integrate_tilde_flow(
    inv: &InvariantSpec,
    tf: &TransformSpec,
    init: [f64; 2],
    t0: f64,
    outputs: &[f64],
    tol: f64,
) -> Result<Vec<[f64; 2]>> {
    let guard = RhsGuard::new();
    let rhs = |t: f64, y: &[f64; 2]| {
        guard.eval((|| {
            let d = boundary_term_derivs(tf, y[0], t)?;
            let (iq, ip) = invariant_grad(inv, y[0], y[1] - d.f_q)?;
            Ok([ip, -(iq - ip * d.f_qq - d.f_qt)])
        })())
    };
    let r = Dopri5::new(tol).solve(rhs, t0, init, outputs, |_, _| Ok(()));
    guard.finish(r)
}

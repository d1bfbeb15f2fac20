//! The extended-phase-space canonical map
//!
//! q̃ = Ã(T)Q,  t̃ = B(T),  p = [P + m₀(κ(Q) + ΓQ)]/Ã,
//! p_t̃ = [P_T − ȦQp + (m₀Q²/2)Γ̇]/Ḃ,   Γ = Ȧ/Ã,
//!
//! generated by F₃ = −B p_t̃ − ÃQp + F(Q,T) with the boundary term
//! F = m₀[∫₀^Q κ + ΓQ²/2]. The map is canonical for any positive Ã, increasing
//! B and any κ; the coefficient equations make the transformed constraint
//! read Ḃφ = P_T + I(Q,P) with an autonomous I.

mod flow;
mod invariant;
mod serial;

pub use flow::{
    constraint_new, dirac_brackets_new, gauge_variation_F, integrate_transformed, on_shell_new, p_t_rate, p_t_rate_along, TransformedFlow,
};
pub use invariant::{
    boundary_term, boundary_term_derivs, generating_F3, integrate_invariant_flow, integrate_tilde_flow, invariant_I,
    new_potential, new_potential_at, tilde_hamiltonian, InvariantSpec, SEP_TOL,
};
pub use serial::TransformRecord;

use std::cell::Cell;

use crate::core::{HamiltonianSpec, ScalarFn};
use crate::error::{Error, Result};
use crate::numeric::{root, Dopri5, QuinticHermite};

/// Node spacing in T of solved coefficient functions.
pub const NODE_STEP: f64 = 1.0 / 128.0;
/// Tolerance of the B⁻¹ root finder.
pub const B_INVERSE_TOL: f64 = 1e-12;

const VALIDATION_SAMPLES: usize = 257;

/// Coefficient functions Ã(T), B(T), κ(Q) and the constants m₀, h₀ of the map,
/// valid on `domain` in T.
///
/// Solved coefficients also keep the Hamiltonian they solve. Values and the
/// first two derivatives are interpolated; the third derivatives A⃛ and B⃛
/// come from the differentiated coefficient equations, since differentiating
/// the interpolant that often mostly amplifies node noise.
#[derive(Debug, Clone)]
pub struct TransformSpec {
    pub a: ScalarFn,
    pub b: ScalarFn,
    pub kappa: ScalarFn,
    pub m0: f64,
    pub h0: f64,
    pub domain: (f64, f64),
    equations: Option<HamiltonianSpec>,
}

/// Ã, B and their T-derivatives at one T.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coeffs {
    pub a: f64,
    pub ad: f64,
    pub add: f64,
    pub addd: f64,
    pub b: f64,
    pub bd: f64,
    pub bdd: f64,
    pub bddd: f64,
}

impl Coeffs {
    /// Γ = Ȧ/Ã.
    pub fn gamma(&self) -> f64 {
        self.ad / self.a
    }

    /// Γ̇ = Ä/Ã − Γ².
    pub fn gamma_dot(&self) -> f64 {
        self.add / self.a - self.gamma().powi(2)
    }

    /// Γ̈ = A⃛/Ã − ÄȦ/Ã² − 2ΓΓ̇.
    pub fn gamma_ddot(&self) -> f64 {
        self.addd / self.a - self.add * self.ad / (self.a * self.a) - 2.0 * self.gamma() * self.gamma_dot()
    }
}

fn derivs3(f: &ScalarFn, x: f64) -> Result<[f64; 4]> {
    if let Some(h) = f.hermite() {
        return Ok(h.eval_all(x));
    }
    let j = f.jet(x)?;
    Ok([j[0], j[1], j[2], f.d3(x)?])
}

impl TransformSpec {
    /// Validates m₀ > 0, Ã > 0 and Ḃ > 0 at samples over the domain.
    pub fn new(a: ScalarFn, b: ScalarFn, kappa: ScalarFn, m0: f64, h0: f64, domain: (f64, f64)) -> Result<Self> {
        if !(m0 > 0.0) {
            return Err(Error::Input(format!("m0 must be positive, got {m0}")));
        }
        if !(domain.1 > domain.0) {
            return Err(Error::Input(format!("empty transform domain [{}, {}]", domain.0, domain.1)));
        }
        let tf = TransformSpec { a, b, kappa, m0, h0, domain, equations: None };
        tf.validate()?;
        Ok(tf)
    }

    fn validate(&self) -> Result<()> {
        let (tf, domain) = (self, self.domain);
        for k in 0..VALIDATION_SAMPLES {
            let t = domain.0 + (domain.1 - domain.0) * k as f64 / (VALIDATION_SAMPLES - 1) as f64;
            let c = tf.coeffs(t)?;
            if !(c.a > 0.0) {
                return Err(Error::Input(format!("A must be positive, A({t}) = {}", c.a)));
            }
            if !(c.bd > 0.0) {
                return Err(Error::Input(format!("B must be strictly increasing, B'({t}) = {}", c.bd)));
            }
        }
        Ok(())
    }

    /// Take A⃛ and B⃛ from the coefficient equations of `spec`.
    pub fn with_equations(mut self, spec: &HamiltonianSpec) -> Result<Self> {
        check_quadratic_flag(spec)?;
        self.equations = Some(spec.clone());
        self.validate()?;
        Ok(self)
    }

    /// The Hamiltonian whose coefficient equations close this map, if any.
    pub fn equations(&self) -> Option<&HamiltonianSpec> {
        self.equations.as_ref()
    }

    /// Ã ≡ 1, B = T, κ ≡ 0, m₀ = 1.
    pub fn identity() -> Self {
        let b = ScalarFn::analytic(|t| t, |_| 1.0, |_| 0.0);
        TransformSpec { a: ScalarFn::constant(1.0), b, kappa: ScalarFn::zero(), m0: 1.0, h0: 0.5, domain: (-1e6, 1e6), equations: None }
    }

    /// Ã ≡ a, B = b₀ + sT.
    pub fn constant(a: f64, slope: f64, b0: f64, kappa: ScalarFn, m0: f64, h0: f64) -> Result<Self> {
        let b = ScalarFn::analytic(move |t| b0 + slope * t, move |_| slope, |_| 0.0);
        Self::new(ScalarFn::constant(a), b, kappa, m0, h0, (-1e6, 1e6))
    }

    /// Coefficients at T; one node step of extrapolation is allowed past either end.
    pub fn coeffs(&self, t: f64) -> Result<Coeffs> {
        let (lo, hi) = self.domain;
        if !(t >= lo - NODE_STEP && t <= hi + NODE_STEP) {
            return Err(Error::Input(format!("T = {t} outside the solved domain [{lo}, {hi}]")));
        }
        let [a, ad, add, addd] = derivs3(&self.a, t)?;
        let [b, bd, bdd, bddd] = derivs3(&self.b, t)?;
        if let Some(spec) = &self.equations {
            let e = coefficient_jet(spec, self.m0, self.h0, b, a, ad)?;
            return Ok(Coeffs { a, ad, add, addd: e.addd, b, bd, bdd, bddd: e.bddd });
        }
        Ok(Coeffs { a, ad, add, addd, b, bd, bdd, bddd })
    }

    /// B⁻¹(t̃) by bracketed root finding.
    pub fn b_inverse(&self, t: f64) -> Result<f64> {
        if let Some(h) = self.b.hermite() {
            let (lo, hi) = h.domain();
            let (blo, bhi) = (h.eval(lo), h.eval(hi));
            let slack = 1e-12 * (1.0 + t.abs());
            if t < blo - slack || t > bhi + slack {
                return Err(Error::Input(format!("time {t} outside the range [{blo}, {bhi}] of B")));
            }
            if t <= blo {
                return Ok(lo);
            }
            if t >= bhi {
                return Ok(hi);
            }
            return root::brent(&|x| h.eval(x) - t, lo, hi, B_INVERSE_TOL);
        }
        let (lo, hi) = self.domain;
        let guess = (lo.max(-1.0), hi.min(1.0));
        root::invert_increasing(&|x| self.b.eval(x), t, guess.0, guess.1, B_INVERSE_TOL)
    }

    /// ρ(t̃) = Ã(B⁻¹(t̃)) and ρ̇ = Ȧ/Ḃ.
    pub fn rho_at(&self, t: f64) -> Result<(f64, f64)> {
        let c = self.coeffs(self.b_inverse(t)?)?;
        Ok((c.a, c.ad / c.bd))
    }

    /// max over samples of |Ḃ − m(B)Ã²/m₀| / Ḃ.
    pub fn consistency_defect(&self, spec: &HamiltonianSpec, n: usize) -> Result<f64> {
        let (lo, hi) = self.domain;
        let mut worst = 0.0f64;
        for k in 0..n.max(2) {
            let t = lo + (hi - lo) * k as f64 / (n.max(2) - 1) as f64;
            let c = self.coeffs(t)?;
            let m = spec.mass_at(c.b)?;
            worst = worst.max((c.bd - m * c.a * c.a / self.m0).abs() / c.bd);
        }
        Ok(worst)
    }
}

/// Initial data of the coefficient equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientInit {
    pub m0: f64,
    pub h0: f64,
    pub t0: f64,
    pub a0: f64,
    pub adot0: f64,
    pub b0: f64,
}

impl CoefficientInit {
    /// m₀ = 1, h₀ = m₀/2, Ã(T₀) = a₀, Ȧ(T₀) = 0, B(T₀) = T₀ = 0.
    pub fn unit(a0: f64) -> Self {
        CoefficientInit { m0: 1.0, h0: 0.5, t0: 0.0, a0, adot0: 0.0, b0: 0.0 }
    }
}

/// d(B, Ã, Ȧ)/dT with Ä = Ã[2h₀/m₀ + 2Γ² − m(B)·V_qq(B)·Ã⁴/m₀²].
fn coefficient_rhs(spec: &HamiltonianSpec, init: &CoefficientInit, y: &[f64; 3]) -> Result<[f64; 3]> {
    let [b, a, ad] = *y;
    let m = spec.mass_at(b)?;
    let k = spec.stiffness(b)?;
    let g = ad / a;
    let add = a * (2.0 * init.h0 / init.m0 + 2.0 * g * g - m * k * a.powi(4) / (init.m0 * init.m0));
    Ok([m * a * a / init.m0, ad, add])
}

/// Ã, B and their derivatives at one T from (B, Ã, Ȧ) and the coefficient pair
/// Ḃ = mÃ²/m₀, Ä = Ã[2h₀/m₀ + 2Γ² − m·V_qq·Ã⁴/m₀²] differentiated once more.
pub fn coefficient_jet(spec: &HamiltonianSpec, m0: f64, h0: f64, b: f64, a: f64, ad: f64) -> Result<Coeffs> {
    let [m, mdot, mddot] = spec.mass.jet(b)?;
    let k = spec.stiffness(b)?;
    // V_qt at q = 1 is dk/dt for a quadratic potential
    let kdot = spec.potential.derivs(1.0, b)?.dxy;
    let g = ad / a;
    let big_g = 2.0 * h0 / m0 + 2.0 * g * g - m * k * a.powi(4) / (m0 * m0);
    let add = a * big_g;
    let bd = m * a * a / m0;
    let bdd = (mdot * bd * a * a + 2.0 * m * a * ad) / m0;
    let bddd = (mddot * bd * bd * a * a + mdot * bdd * a * a + 4.0 * mdot * bd * a * ad + 2.0 * m * (ad * ad + a * add)) / m0;
    let gd = add / a - g * g;
    let mk_dot = bd * (mdot * k + m * kdot);
    let big_gd = 4.0 * g * gd - (mk_dot * a.powi(4) + 4.0 * m * k * a.powi(3) * ad) / (m0 * m0);
    let c = Coeffs { a, ad, add, addd: ad * big_g + a * big_gd, b, bd, bdd, bddd };
    if ![c.add, c.addd, c.bd, c.bdd, c.bddd].iter().all(|v| v.is_finite()) {
        return Err(Error::Numerical(format!("non-finite coefficients at B = {b}")));
    }
    Ok(c)
}

fn check_quadratic_flag(spec: &HamiltonianSpec) -> Result<()> {
    if !spec.quadratic {
        return Err(Error::Separability(
            "coefficient equations separate only for potentials quadratic in q (quadratic flag unset)".into(),
        ));
    }
    Ok(())
}

fn check_init(spec: &HamiltonianSpec, init: &CoefficientInit) -> Result<()> {
    check_quadratic_flag(spec)?;
    if !(init.m0 > 0.0) {
        return Err(Error::Input(format!("m0 must be positive, got {}", init.m0)));
    }
    if !(init.a0 > 0.0) {
        return Err(Error::Input(format!("A(T0) must be positive, got {}", init.a0)));
    }
    Ok(())
}

/// Integrate node to node; `stop` is consulted after each chunk with the latest node.
fn integrate_nodes(
    spec: &HamiltonianSpec,
    init: &CoefficientInit,
    tol: f64,
    max_nodes: usize,
    stop: &dyn Fn(f64, &[f64; 3]) -> bool,
) -> Result<(Vec<f64>, Vec<[f64; 3]>)> {
    let guard = crate::dynamics::RhsGuard::new();
    let solver = Dopri5::new(tol);
    let mut ts = vec![init.t0];
    let mut ys = vec![[init.b0, init.a0, init.adot0]];
    let floor = 1e-8 * init.a0;
    let last_valid = Cell::new(init.t0);
    // chunks of 128 nodes; after a failure, node by node so `stop` can fire first
    let mut chunk = 128;
    while ts.len() - 1 < max_nodes {
        let start = ts.len() - 1;
        let end = (start + chunk).min(max_nodes);
        let outs: Vec<f64> = (start + 1..=end).map(|k| init.t0 + k as f64 * NODE_STEP).collect();
        let y0 = ys[start];
        let rhs = |_t: f64, y: &[f64; 3]| guard.eval(coefficient_rhs(spec, init, y));
        let res = solver.solve(rhs, ts[start], y0, &outs, |t, y| {
            if !(y[1] > floor) || !y.iter().all(|v| v.is_finite()) {
                return Err(Error::Singularity { what: "A degenerates".into(), last_valid_t: last_valid.get() });
            }
            last_valid.set(t);
            Ok(())
        });
        let out = match guard.finish(res) {
            Ok(c) => c,
            Err(Error::Singularity { .. }) | Err(Error::Stiffness { .. }) | Err(Error::Numerical(_)) if chunk > 1 => {
                chunk = 1;
                last_valid.set(ts[start]);
                continue;
            }
            Err(Error::Stiffness { .. }) | Err(Error::Numerical(_)) => {
                return Err(Error::Singularity { what: "A degenerates".into(), last_valid_t: last_valid.get() })
            }
            Err(e) => return Err(e),
        };
        ts.extend(outs);
        ys.extend(out);
        let n = ts.len() - 1;
        if stop(ts[n], &ys[n]) {
            break;
        }
    }
    Ok((ts, ys))
}

fn assemble(
    spec: &HamiltonianSpec,
    init: &CoefficientInit,
    kappa: ScalarFn,
    ts: Vec<f64>,
    ys: Vec<[f64; 3]>,
) -> Result<TransformSpec> {
    let mut a_nodes = Vec::with_capacity(ts.len());
    let mut b_nodes = Vec::with_capacity(ts.len());
    let mut a3 = Vec::with_capacity(ts.len());
    let mut b3 = Vec::with_capacity(ts.len());
    for y in &ys {
        let c = coefficient_jet(spec, init.m0, init.h0, y[0], y[1], y[2])?;
        a_nodes.push([c.a, c.ad, c.add]);
        b_nodes.push([c.b, c.bd, c.bdd]);
        a3.push(c.addd);
        b3.push(c.bddd);
    }
    let sample_ts: Vec<f64> = ys.iter().step_by(16).map(|y| y[0]).collect();
    spec.check_quadratic(&[-2.0, -0.5, 1.0, 3.0], &sample_ts, 1e-9)?;
    let domain = (ts[0], ts[ts.len() - 1]);
    let a = ScalarFn::from_hermite(QuinticHermite::new(ts.clone(), a_nodes)?.with_third(a3)?);
    let b = ScalarFn::from_hermite(QuinticHermite::new(ts, b_nodes)?.with_third(b3)?);
    TransformSpec::new(a, b, kappa, init.m0, init.h0, domain)?.with_equations(spec)
}

/// Solve Ḃ = m(B)Ã²/m₀ jointly with the reduced determining equation
/// (m₀/2)(Ä/Ã − 2Ȧ²/Ã²) + m(B)²ω²(B)Ã⁴/(2m₀) = h₀ over `t_span` in T.
pub fn solve_coefficients(
    spec: &HamiltonianSpec,
    init: &CoefficientInit,
    kappa: ScalarFn,
    t_span: (f64, f64),
    tol: f64,
) -> Result<TransformSpec> {
    check_init(spec, init)?;
    if (t_span.0 - init.t0).abs() > 0.0 || !(t_span.1 > t_span.0) {
        return Err(Error::Input(format!("T span must start at T0 = {} and be non-empty", init.t0)));
    }
    let nodes = ((t_span.1 - t_span.0) / NODE_STEP).ceil().max(2.0) as usize;
    let (ts, ys) = integrate_nodes(spec, init, tol, nodes, &|_, _| false)?;
    assemble(spec, init, kappa, ts, ys)
}

/// As [`solve_coefficients`], integrating in T until B(T) reaches `t_end`.
pub fn solve_coefficients_until(
    spec: &HamiltonianSpec,
    init: &CoefficientInit,
    kappa: ScalarFn,
    t_end: f64,
    tol: f64,
) -> Result<TransformSpec> {
    check_init(spec, init)?;
    if !(t_end > init.b0) {
        return Err(Error::Input(format!("target time {t_end} must exceed B(T0) = {}", init.b0)));
    }
    let (mut ts, mut ys) = integrate_nodes(spec, init, tol, 1 << 26, &|_, y| y[0] >= t_end)?;
    // keep one node past the target so the whole [B(T0), t_end] is covered
    if let Some(k) = ys.iter().position(|y| y[0] >= t_end) {
        let keep = (k + 2).min(ys.len()).max(3);
        ts.truncate(keep);
        ys.truncate(keep);
    }
    assemble(spec, init, kappa, ts, ys)
}

/// (Q, T, P, P_T) ↦ (q̃, t̃, p, p_t̃).
pub fn forward_map(tf: &TransformSpec, x: [f64; 4]) -> Result<[f64; 4]> {
    let [qn, tn, pn, ptn] = x;
    let c = tf.coeffs(tn)?;
    let g = c.gamma();
    let p = (pn + tf.m0 * (tf.kappa.eval(qn) + g * qn)) / c.a;
    let p_t = (ptn - c.ad * qn * p + 0.5 * tf.m0 * qn * qn * c.gamma_dot()) / c.bd;
    Ok([c.a * qn, c.b, p, p_t])
}

/// (q̃, t̃, p, p_t̃) ↦ (Q, T, P, P_T).
pub fn inverse_map(tf: &TransformSpec, y: [f64; 4]) -> Result<[f64; 4]> {
    let [q, t, p, p_t] = y;
    let tn = tf.b_inverse(t)?;
    let c = tf.coeffs(tn)?;
    let qn = q / c.a;
    let pn = c.a * p - tf.m0 * (tf.kappa.eval(qn) + c.gamma() * qn);
    let ptn = c.bd * p_t + c.ad * qn * p - 0.5 * tf.m0 * qn * qn * c.gamma_dot();
    Ok([qn, tn, pn, ptn])
}

/// ∂(q̃,t̃,p,p_t̃)/∂(Q,T,P,P_T) at a base point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jacobian4 {
    pub m: [[f64; 4]; 4],
    pub base: [f64; 4],
}

/// Stencil direction and step in T: the interpolated coefficients are only C²
/// at their nodes, so stencils stay inside one node interval.
fn t_stencil(tf: &TransformSpec, t: f64, h: f64) -> (i8, f64) {
    let nodes = match (tf.a.hermite(), tf.b.hermite()) {
        (Some(a), _) => a.nodes(),
        (None, Some(b)) => b.nodes(),
        _ => return (0, h),
    };
    let k = nodes.partition_point(|&x| x <= t);
    if k == 0 || k == nodes.len() {
        return (0, h);
    }
    let (lo, hi) = (nodes[k - 1], nodes[k]);
    let h = h.min((hi - lo) / 8.0);
    let h = (t + h) - t;
    if t - 2.0 * h >= lo && t + 2.0 * h <= hi {
        (0, h)
    } else if hi - t >= 4.0 * h {
        (1, h)
    } else {
        (-1, h)
    }
}

/// Five-point finite-difference Jacobian of [`forward_map`]. The step is
/// absolute (eps^(1/5)) up to |x| = 10³.
pub fn jacobian(tf: &TransformSpec, x: [f64; 4]) -> Result<Jacobian4> {
    let mut m = [[0.0; 4]; 4];
    for j in 0..4 {
        let h0 = f64::EPSILON.powf(0.2) * (x[j].abs() * 1e-3).max(1.0);
        let (dir, h) = if j == 1 { t_stencil(tf, x[1], h0) } else { (0, (x[j] + h0) - x[j]) };
        let at = |d: f64| {
            let mut y = x;
            y[j] += d;
            forward_map(tf, y)
        };
        if dir == 0 {
            let (f2, f1, fm1, fm2) = (at(2.0 * h)?, at(h)?, at(-h)?, at(-2.0 * h)?);
            for i in 0..4 {
                m[i][j] = (8.0 * (f1[i] - fm1[i]) - (f2[i] - fm2[i])) / (12.0 * h);
            }
        } else {
            let s = f64::from(dir) * h;
            let f: Vec<[f64; 4]> = (0..5).map(|k| at(k as f64 * s)).collect::<Result<_>>()?;
            for i in 0..4 {
                m[i][j] = (-25.0 * f[0][i] + 48.0 * f[1][i] - 36.0 * f[2][i] + 16.0 * f[3][i] - 3.0 * f[4][i]) / (12.0 * s);
            }
        }
    }
    Ok(Jacobian4 { m, base: x })
}

/// Closed-form partial derivatives of [`forward_map`].
pub fn jacobian_analytic(tf: &TransformSpec, x: [f64; 4]) -> Result<Jacobian4> {
    let [qn, tn, pn, ptn] = x;
    let c = tf.coeffs(tn)?;
    let [kap, kap1, _] = tf.kappa.jet(qn)?;
    let (g, gd, gdd) = (c.gamma(), c.gamma_dot(), c.gamma_ddot());
    let m0 = tf.m0;
    let p = (pn + m0 * (kap + g * qn)) / c.a;
    let p_q = m0 * (kap1 + g) / c.a;
    let p_tn = -g * p + m0 * gd * qn / c.a;
    let p_p = 1.0 / c.a;
    let num = ptn - c.ad * qn * p + 0.5 * m0 * qn * qn * gd;
    let pt_q = (-c.ad * p - c.ad * qn * p_q + m0 * qn * gd) / c.bd;
    let pt_t = (-c.add * qn * p - c.ad * qn * p_tn + 0.5 * m0 * qn * qn * gdd) / c.bd - c.bdd * num / (c.bd * c.bd);
    let pt_p = -c.ad * qn * p_p / c.bd;
    let m = [
        [c.a, c.ad * qn, 0.0, 0.0],
        [0.0, c.bd, 0.0, 0.0],
        [p_q, p_tn, p_p, 0.0],
        [pt_q, pt_t, pt_p, 1.0 / c.bd],
    ];
    Ok(Jacobian4 { m, base: x })
}

/// max |MᵀJM − J| with J = [[0, 1], [−1, 0]] in (coordinates, momenta) blocks.
pub fn symplectic_residual(jac: &Jacobian4) -> f64 {
    let j = |r: usize, c: usize| -> f64 {
        match (r, c) {
            (0, 2) | (1, 3) => 1.0,
            (2, 0) | (3, 1) => -1.0,
            _ => 0.0,
        }
    };
    let m = &jac.m;
    let mut worst = 0.0f64;
    for r in 0..4 {
        for c in 0..4 {
            let mut s = 0.0;
            for a in 0..4 {
                for b in 0..4 {
                    s += m[a][r] * j(a, b) * m[b][c];
                }
            }
            worst = worst.max((s - j(r, c)).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ermakov::solve_ermakov;

    fn td_spec() -> HamiltonianSpec {
        HamiltonianSpec::oscillator("1+0.5*sin(0.3*t)").unwrap()
    }

    #[test]
    fn constant_solutions() {
        let osc = HamiltonianSpec::oscillator("1").unwrap();
        let tf = solve_coefficients(&osc, &CoefficientInit::unit(1.0), ScalarFn::zero(), (0.0, 5.0), 1e-10).unwrap();
        for &t in &[0.0, 1.3, 4.9] {
            let c = tf.coeffs(t).unwrap();
            assert!((c.a - 1.0).abs() < 1e-12 && (c.b - t).abs() < 1e-11);
        }
        let w0 = 4.0f64;
        let osc = HamiltonianSpec::oscillator(&format!("{}", w0 * w0)).unwrap();
        let tf = solve_coefficients(&osc, &CoefficientInit::unit(w0.powf(-0.5)), ScalarFn::zero(), (0.0, 3.0), 1e-10).unwrap();
        let c = tf.coeffs(2.0).unwrap();
        assert!((c.a - 0.5).abs() < 1e-12 && (c.b - 2.0 / w0).abs() < 1e-11);
    }

    #[test]
    fn matches_auxiliary_solution() {
        let tol = 1e-10;
        let tf = solve_coefficients_until(&td_spec(), &CoefficientInit::unit(1.0), ScalarFn::zero(), 20.0, tol).unwrap();
        let w2 = ScalarFn::parse("1+0.5*sin(0.3*t)", "t").unwrap();
        let sol = solve_ermakov(&w2, 1.0, 0.0, (0.0, 20.5), tol).unwrap();
        for k in 0..200 {
            let t = tf.domain.0 + (tf.domain.1 - tf.domain.0) * k as f64 / 199.0;
            let c = tf.coeffs(t).unwrap();
            if c.b > 20.0 {
                continue;
            }
            assert!((c.a - sol.at(c.b).0).abs() < 10.0 * tol * 20.0, "T {t}");
        }
    }

    #[test]
    fn refuses_non_quadratic() {
        let quartic = HamiltonianSpec::from_exprs("1", "q^4", false).unwrap();
        let r = solve_coefficients(&quartic, &CoefficientInit::unit(1.0), ScalarFn::zero(), (0.0, 1.0), 1e-9);
        assert!(matches!(r, Err(Error::Separability(_))));
        let liar = HamiltonianSpec::from_exprs("1", "q^4", true).unwrap();
        let r = solve_coefficients(&liar, &CoefficientInit::unit(1.0), ScalarFn::zero(), (0.0, 1.0), 1e-9);
        assert!(matches!(r, Err(Error::Separability(_))));
    }

    #[test]
    fn collapse_is_singular() {
        // a strong attractive h0 drives A to zero in finite T
        let free = HamiltonianSpec::free(1.0);
        let init = CoefficientInit { h0: -50.0, ..CoefficientInit::unit(1.0) };
        let r = solve_coefficients(&free, &init, ScalarFn::zero(), (0.0, 5.0), 1e-9);
        assert!(matches!(r, Err(Error::Singularity { .. })), "{r:?}");
    }

    #[test]
    fn identity_and_scaling_maps() {
        let id = TransformSpec::identity();
        let x = [0.3, 1.1, -0.4, 2.0];
        assert_eq!(forward_map(&id, x).unwrap(), x);
        let s = TransformSpec::constant(2.0, 4.0, 0.0, ScalarFn::zero(), 1.0, 0.5).unwrap();
        assert_eq!(forward_map(&s, [1.0, 0.0, 1.0, 0.0]).unwrap(), [2.0, 0.0, 0.5, 0.0]);
        let jac = jacobian(&s, [0.7, 0.2, -1.0, 0.3]).unwrap();
        let diag = [2.0, 4.0, 0.5, 0.25];
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { diag[i] } else { 0.0 };
                assert!((jac.m[i][j] - want).abs() < 1e-9);
            }
        }
        let jid = jacobian(&id, x).unwrap();
        assert!(symplectic_residual(&jid) < 1e-12);
    }

    #[test]
    fn symplectic_residual_of_momentum_scaling() {
        let mut m = [[0.0; 4]; 4];
        m[0][0] = 1.0;
        m[1][1] = 1.0;
        m[2][2] = 2.0;
        m[3][3] = 1.0;
        assert!((symplectic_residual(&Jacobian4 { m, base: [0.0; 4] }) - 1.0).abs() < 1e-15);
        let mut id = [[0.0; 4]; 4];
        (0..4).for_each(|i| id[i][i] = 1.0);
        assert_eq!(symplectic_residual(&Jacobian4 { m: id, base: [0.0; 4] }), 0.0);
    }

    #[test]
    fn round_trip_and_jacobians() {
        let kappa = ScalarFn::parse("0.3*sin(Q)", "Q").unwrap();
        let tf = solve_coefficients(&td_spec(), &CoefficientInit::unit(1.2), kappa, (0.0, 4.0), 1e-10).unwrap();
        for &x in &[[0.5, 0.3, -1.0, 0.2], [-1.5, 3.7, 0.4, -2.0], [2.0, 1.9, 1.0, 0.0]] {
            let y = forward_map(&tf, x).unwrap();
            let back = inverse_map(&tf, y).unwrap();
            for i in 0..4 {
                assert!((back[i] - x[i]).abs() < 1e-10, "{back:?} vs {x:?}");
            }
            let fd = jacobian(&tf, x).unwrap();
            let an = jacobian_analytic(&tf, x).unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    assert!((fd.m[i][j] - an.m[i][j]).abs() < 1e-6, "entry {i}{j}");
                }
                assert_eq!(fd.m[i.min(1)][2], 0.0);
                assert_eq!(fd.m[i.min(1)][3], 0.0);
            }
            assert!(symplectic_residual(&fd) < 1e-9);
            assert!(symplectic_residual(&an) < 1e-12);
        }
    }

    #[test]
    fn fd_jacobian_beside_a_node() {
        let tf = solve_coefficients(&td_spec(), &CoefficientInit::unit(1.0), ScalarFn::zero(), (0.0, 8.0), 1e-11).unwrap();
        // 3.0 is a node; a centred stencil here would straddle the kink in d³Ã/dT³
        for t in [3.0 + 2e-4, 3.0 - 2e-4, 3.0] {
            let jac = jacobian(&tf, [1.2, t, -0.8, 0.9]).unwrap();
            assert!(symplectic_residual(&jac) < 1e-9, "T {t}: {:e}", symplectic_residual(&jac));
        }
    }

    #[test]
    fn free_particle_until_stops_before_blow_up() {
        // Ã = 1/cos T, B = tan T; the target is reached well inside a 128-node chunk
        let tf = solve_coefficients_until(&HamiltonianSpec::free(1.0), &CoefficientInit::unit(1.0), ScalarFn::zero(), 5.0, 1e-11)
            .unwrap();
        assert!(tf.domain.1 < std::f64::consts::FRAC_PI_2);
        let t = 5.0f64.atan();
        let c = tf.coeffs(t).unwrap();
        assert!((c.a - 1.0 / t.cos()).abs() < 1e-8 && (c.b - 5.0).abs() < 1e-8, "{c:?}");
    }
}

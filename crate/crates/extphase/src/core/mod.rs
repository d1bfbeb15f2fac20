//! Hamiltonians, phase-space states and pointwise evaluation of the energy,
//! the extended-phase-space constraint and the energy rate.

mod func;

pub use func::{fd_step1, fd_step2, DerivMode, Derivs2, ScalarFn, ScalarFn2};

use serde::{Deserialize, Serialize};

use crate::error::{finite, Error, Result};

/// H(q,p,t) = p²/2m(t) + V(q,t).
#[derive(Debug, Clone)]
pub struct HamiltonianSpec {
    pub mass: ScalarFn,
    pub potential: ScalarFn2,
    /// Declares V(q,t) = ½·∂²V/∂q²·q². Checked by sampling, see
    /// [`HamiltonianSpec::check_quadratic`].
    pub quadratic: bool,
}

impl HamiltonianSpec {
    pub fn new(mass: ScalarFn, potential: ScalarFn2, quadratic: bool) -> Self {
        HamiltonianSpec { mass, potential, quadratic }
    }

    /// Build from expression strings: mass in `t`, potential in `q` and `t`.
    pub fn from_exprs(mass: &str, potential: &str, quadratic: bool) -> Result<Self> {
        Ok(Self::new(ScalarFn::parse(mass, "t")?, ScalarFn2::parse(potential, "q", "t")?, quadratic))
    }

    pub fn free(m: f64) -> Self {
        Self::new(ScalarFn::constant(m), ScalarFn2::zero(), true)
    }

    /// Unit-mass oscillator with V = ½ω²(t)q², ω² given as an expression in t.
    pub fn oscillator(omega2: &str) -> Result<Self> {
        Self::from_exprs("1", &format!("0.5*({omega2})*q^2"), true)
    }

    pub fn mass_at(&self, t: f64) -> Result<f64> {
        let m = self.mass.eval(t);
        if !(m > 0.0) {
            return Err(Error::Input(format!("mass must be positive, m({t}) = {m}")));
        }
        Ok(m)
    }

    pub fn energy(&self, q: f64, p: f64, t: f64) -> Result<f64> {
        let m = self.mass_at(t)?;
        finite(p * p / (2.0 * m) + self.potential.eval(q, t), "hamiltonian")
    }

    /// ∂V/∂q.
    pub fn force_gradient(&self, q: f64, t: f64) -> Result<f64> {
        self.potential.dx(q, t)
    }

    /// ∂H/∂t at fixed (q,p).
    pub fn dh_dt(&self, q: f64, p: f64, t: f64) -> Result<f64> {
        let [m, mdot, _] = self.mass.jet(t)?;
        if !(m > 0.0) {
            return Err(Error::Input(format!("mass must be positive, m({t}) = {m}")));
        }
        let vt = self.potential.dy(q, t)?;
        finite(-(mdot / (m * m)) * p * p / 2.0 + vt, "energy rate")
    }

    /// m(t)·ω²(t) = ∂²V/∂q² at q = 0 for a quadratic potential.
    pub fn stiffness(&self, t: f64) -> Result<f64> {
        self.potential.dxx(0.0, t)
    }

    /// Verify V(q,t) − ½·V_qq·q² vanishes at the sampled points.
    pub fn check_quadratic(&self, qs: &[f64], ts: &[f64], tol: f64) -> Result<()> {
        for &t in ts {
            for &q in qs {
                let d = self.potential.derivs(q, t)?;
                let resid = d.v - 0.5 * d.dxx * q * q;
                if resid.abs() > tol * (1.0 + d.v.abs()) {
                    return Err(Error::Separability(format!(
                        "potential is not quadratic in q: V - q^2 V_qq/2 = {resid:e} at (q,t) = ({q},{t})"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A point (q, p) at time t of the ordinary phase space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedState {
    pub q: f64,
    pub p: f64,
    pub t: f64,
}

impl ReducedState {
    pub fn new(q: f64, p: f64, t: f64) -> Self {
        ReducedState { q, p, t }
    }

    pub fn is_finite(&self) -> bool {
        self.q.is_finite() && self.p.is_finite() && self.t.is_finite()
    }
}

/// A point of the extended phase space: coordinates (q̃, t̃), momenta (p, p_t̃)
/// and the evolution parameter τ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtendedState {
    pub q: f64,
    pub t: f64,
    pub p: f64,
    pub p_t: f64,
    pub tau: f64,
}

impl ExtendedState {
    pub fn new(q: f64, t: f64, p: f64, p_t: f64, tau: f64) -> Self {
        ExtendedState { q, t, p, p_t, tau }
    }

    /// Put (q,p,t) on the constraint surface, p_t̃ = −H.
    pub fn on_shell(spec: &HamiltonianSpec, s: ReducedState, tau: f64) -> Result<Self> {
        let h = spec.energy(s.q, s.p, s.t)?;
        Ok(ExtendedState { q: s.q, t: s.t, p: s.p, p_t: -h, tau })
    }

    /// Coordinates ordered (q̃, t̃, p, p_t̃).
    pub fn coords(&self) -> [f64; 4] {
        [self.q, self.t, self.p, self.p_t]
    }

    pub fn from_coords(x: [f64; 4], tau: f64) -> Self {
        ExtendedState { q: x[0], t: x[1], p: x[2], p_t: x[3], tau }
    }

    pub fn reduced(&self) -> ReducedState {
        ReducedState { q: self.q, p: self.p, t: self.t }
    }

    pub fn is_finite(&self) -> bool {
        self.coords().iter().all(|v| v.is_finite()) && self.tau.is_finite()
    }
}

/// p²/2m(t) + V(q,t).
pub fn eval_hamiltonian(spec: &HamiltonianSpec, s: &ReducedState) -> Result<f64> {
    spec.energy(s.q, s.p, s.t)
}

/// φ = p_t̃ + H(q̃, p, t̃).
pub fn eval_constraint(spec: &HamiltonianSpec, s: &ExtendedState) -> Result<f64> {
    finite(s.p_t + spec.energy(s.q, s.p, s.t)?, "constraint")
}

/// dH/dt = −(ṁ/m²)p²/2 + ∂V/∂t.
pub fn energy_rate(spec: &HamiltonianSpec, s: &ReducedState) -> Result<f64> {
    spec.dh_dt(s.q, s.p, s.t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hamiltonian_values() {
        let free = HamiltonianSpec::free(1.0);
        assert_eq!(eval_hamiltonian(&free, &ReducedState::new(0.0, 2.0, 0.0)).unwrap(), 2.0);
        let osc = HamiltonianSpec::oscillator("1").unwrap();
        assert_eq!(eval_hamiltonian(&osc, &ReducedState::new(1.0, 0.0, 5.0)).unwrap(), 0.5);
        let ramp = HamiltonianSpec::from_exprs("1+t", "0.5*q^2", true).unwrap();
        let hand = |q: f64, p: f64, t: f64| p * p / (2.0 * (1.0 + t)) + 0.5 * q * q;
        let got = eval_hamiltonian(&ramp, &ReducedState::new(1.0, 2.0, 1.0)).unwrap();
        assert_eq!(got, hand(1.0, 2.0, 1.0));
        assert_eq!(got, 1.5);
    }

    #[test]
    fn constraint_values() {
        let free = HamiltonianSpec::free(1.0);
        let c = |q, t, p, pt| eval_constraint(&free, &ExtendedState::new(q, t, p, pt, 0.0)).unwrap();
        assert_eq!(c(0.0, 0.0, 2.0, -2.0), 0.0);
        assert_eq!(c(0.0, 0.0, 2.0, 0.0), 2.0);
        let osc = HamiltonianSpec::oscillator("1").unwrap();
        assert_eq!(eval_constraint(&osc, &ExtendedState::new(1.0, 0.0, 1.0, -1.0, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn energy_rate_values() {
        let osc = HamiltonianSpec::oscillator("1").unwrap();
        assert_eq!(energy_rate(&osc, &ReducedState::new(0.3, -1.2, 7.0)).unwrap(), 0.0);
        let growing = HamiltonianSpec::from_exprs("1", "0.5*(1+t)*q^2", true).unwrap();
        assert!((energy_rate(&growing, &ReducedState::new(1.0, 0.0, 0.0)).unwrap() - 0.5).abs() < 1e-15);
        let expm = HamiltonianSpec::from_exprs("exp(t)", "0", true).unwrap();
        let s = ReducedState::new(0.0, 1.0, 0.0);
        let got = energy_rate(&expm, &s).unwrap();
        // independent check: difference quotient of H at fixed (q,p)
        let h = 1e-5;
        let fd = (expm.energy(0.0, 1.0, h).unwrap() - expm.energy(0.0, 1.0, -h).unwrap()) / (2.0 * h);
        assert!((got - fd).abs() < 1e-9);
        assert!((got + 0.5).abs() < 1e-14);
    }

    #[test]
    fn energy_rate_without_derivatives() {
        let spec = HamiltonianSpec::new(ScalarFn::opaque(|t| 1.0 + t * t), ScalarFn2::zero(), true);
        assert!(matches!(energy_rate(&spec, &ReducedState::new(0.0, 1.0, 0.0)), Err(Error::Capability(_))));
    }

    #[test]
    fn nonpositive_mass_rejected() {
        let spec = HamiltonianSpec::from_exprs("1-t", "0", true).unwrap();
        assert!(matches!(spec.energy(0.0, 1.0, 2.0), Err(Error::Input(_))));
    }

    #[test]
    fn on_shell_constraint_is_zero() {
        let spec = HamiltonianSpec::from_exprs("1+0.1*t", "0.5*(1+0.5*sin(0.3*t))*q^2", true).unwrap();
        let s = ExtendedState::on_shell(&spec, ReducedState::new(0.37, -1.9, 2.2), 0.0).unwrap();
        assert_eq!(eval_constraint(&spec, &s).unwrap(), 0.0);
    }

    #[test]
    fn quadratic_check() {
        let qs = [-1.0, 0.5, 2.0];
        let ts = [0.0, 1.0];
        HamiltonianSpec::oscillator("1+0.5*sin(0.3*t)").unwrap().check_quadratic(&qs, &ts, 1e-10).unwrap();
        let quartic = HamiltonianSpec::from_exprs("1", "q^4", false).unwrap();
        assert!(matches!(quartic.check_quadratic(&qs, &ts, 1e-10), Err(Error::Separability(_))));
    }
}

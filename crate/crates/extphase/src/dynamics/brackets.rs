use std::collections::BTreeMap;

use crate::core::{eval_constraint, fd_step1, ExtendedState, HamiltonianSpec};
use crate::error::{finite, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BracketKind {
    Poisson,
    Dirac,
}

/// Bracket values between named phase-space coordinates at one state.
#[derive(Debug, Clone)]
pub struct BracketReport {
    pub state: [f64; 4],
    pub kind: BracketKind,
    pub entries: BTreeMap<(String, String), f64>,
}

impl BracketReport {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        self.entries.get(&(a.to_string(), b.to_string())).copied()
    }

    /// Largest |{a,b} + {b,a}| over all stored pairs.
    pub fn antisymmetry_defect(&self) -> f64 {
        self.entries
            .iter()
            .filter_map(|((a, b), v)| self.entries.get(&(b.clone(), a.clone())).map(|w| (v + w).abs()))
            .fold(0.0, f64::max)
    }
}

/// Central-difference gradient of `f` in the coordinates (x₁, x₂, p₁, p₂).
pub fn gradient4(f: &dyn Fn(&[f64; 4]) -> Result<f64>, x: &[f64; 4]) -> Result<[f64; 4]> {
    let mut g = [0.0; 4];
    for i in 0..4 {
        let h = fd_step1(x[i]);
        let mut xp = *x;
        let mut xm = *x;
        xp[i] += h;
        xm[i] -= h;
        // dividing by the realised spread keeps linear observables exact
        g[i] = (f(&xp)? - f(&xm)?) / (xp[i] - xm[i]);
    }
    Ok(g)
}

fn pb_from_grads(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a[0] * b[2] + a[1] * b[3] - a[2] * b[0] - a[3] * b[1]
}

/// {f, g} = Σ ∂f/∂xᵢ ∂g/∂pᵢ − ∂f/∂pᵢ ∂g/∂xᵢ over the pairs (x₁,p₁), (x₂,p₂),
/// with coordinates ordered (x₁, x₂, p₁, p₂).
pub fn poisson_bracket(
    f: &dyn Fn(&[f64; 4]) -> Result<f64>,
    g: &dyn Fn(&[f64; 4]) -> Result<f64>,
    x: &[f64; 4],
) -> Result<f64> {
    finite(pb_from_grads(&gradient4(f, x)?, &gradient4(g, x)?), "poisson bracket")
}

/// {f,g}_DB = {f,g} + [{f,φ}{η,g} − {f,η}{φ,g}] / {φ,η}, with {φ,η} evaluated
/// numerically.
pub fn dirac_bracket(
    f: &dyn Fn(&[f64; 4]) -> Result<f64>,
    g: &dyn Fn(&[f64; 4]) -> Result<f64>,
    phi: &dyn Fn(&[f64; 4]) -> Result<f64>,
    eta: &dyn Fn(&[f64; 4]) -> Result<f64>,
    x: &[f64; 4],
) -> Result<f64> {
    let (gf, gg) = (gradient4(f, x)?, gradient4(g, x)?);
    let (gphi, geta) = (gradient4(phi, x)?, gradient4(eta, x)?);
    let c = pb_from_grads(&gphi, &geta);
    let v = pb_from_grads(&gf, &gg)
        + (pb_from_grads(&gf, &gphi) * pb_from_grads(&geta, &gg) - pb_from_grads(&gf, &geta) * pb_from_grads(&gphi, &gg))
            / c;
    finite(v, "dirac bracket")
}

/// Full table of Dirac brackets between the four coordinates, named by `names`.
pub fn dirac_table(
    names: [&str; 4],
    phi: &dyn Fn(&[f64; 4]) -> Result<f64>,
    eta: &dyn Fn(&[f64; 4]) -> Result<f64>,
    x: &[f64; 4],
) -> Result<BracketReport> {
    let gphi = gradient4(phi, x)?;
    let geta = gradient4(eta, x)?;
    let c = pb_from_grads(&gphi, &geta);
    let unit = |i: usize| {
        let mut e = [0.0; 4];
        e[i] = 1.0;
        e
    };
    let mut entries = BTreeMap::new();
    for i in 0..4 {
        for k in 0..4 {
            let (a, b) = (unit(i), unit(k));
            let v = pb_from_grads(&a, &b)
                + (pb_from_grads(&a, &gphi) * pb_from_grads(&geta, &b)
                    - pb_from_grads(&a, &geta) * pb_from_grads(&gphi, &b))
                    / c;
            entries.insert((names[i].to_string(), names[k].to_string()), finite(v, "dirac bracket")?);
        }
    }
    Ok(BracketReport { state: *x, kind: BracketKind::Dirac, entries })
}

/// Dirac brackets of (q̃, t̃, p, p_t̃) for the pair φ = p_t̃ + H, η = t̃ − g(τ)
/// at fixed τ. Entries are keyed by "q", "t", "p", "p_t".
pub fn dirac_brackets_old(spec: &HamiltonianSpec, s: &ExtendedState) -> Result<BracketReport> {
    let phi = |x: &[f64; 4]| eval_constraint(spec, &ExtendedState::from_coords(*x, s.tau));
    let t_gauge = s.t;
    let eta = |x: &[f64; 4]| Ok(x[1] - t_gauge);
    dirac_table(["q", "t", "p", "p_t"], &phi, &eta, &s.coords())
}

/// Determinant of the velocity Hessian of L = m(t̃)q̃′²/(2t̃′) − V(q̃,t̃)t̃′ at
/// velocities (q̃′, t̃′), by Richardson-extrapolated central differences.
pub fn hessian_rank_check(spec: &HamiltonianSpec, qdot: f64, tdot: f64, s: &ExtendedState) -> Result<f64> {
    let m = spec.mass_at(s.t)?;
    let v = spec.potential.eval(s.q, s.t);
    let lag = |a: f64, b: f64| m * a * a / (2.0 * b) - v * b;
    let hess = |ha: f64, hb: f64| {
        let l0 = lag(qdot, tdot);
        let laa = (lag(qdot + ha, tdot) - 2.0 * l0 + lag(qdot - ha, tdot)) / (ha * ha);
        let lbb = (lag(qdot, tdot + hb) - 2.0 * l0 + lag(qdot, tdot - hb)) / (hb * hb);
        let lab = (lag(qdot + ha, tdot + hb) - lag(qdot + ha, tdot - hb) - lag(qdot - ha, tdot + hb)
            + lag(qdot - ha, tdot - hb))
            / (4.0 * ha * hb);
        [laa, lab, lbb]
    };
    let ha = 2e-3 * qdot.abs().max(1e-3);
    let hb = 2e-3 * tdot.abs();
    let coarse = hess(ha, hb);
    let fine = hess(0.5 * ha, 0.5 * hb);
    let [laa, lab, lbb]: [f64; 3] = std::array::from_fn(|i| (4.0 * fine[i] - coarse[i]) / 3.0);
    finite(laa * lbb - lab * lab, "hessian determinant")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::ReducedState;

    fn coord(i: usize) -> impl Fn(&[f64; 4]) -> Result<f64> {
        move |x: &[f64; 4]| Ok(x[i])
    }

    #[test]
    fn canonical_pairs() {
        let x = [0.3, 1.2, -0.7, 2.0];
        assert!((poisson_bracket(&coord(0), &coord(2), &x).unwrap() - 1.0).abs() < 1e-12);
        assert!((poisson_bracket(&coord(1), &coord(3), &x).unwrap() - 1.0).abs() < 1e-12);
        assert!(poisson_bracket(&coord(0), &coord(3), &x).unwrap().abs() < 1e-12);
    }

    #[test]
    fn antisymmetry_and_leibniz() {
        let f = |x: &[f64; 4]| Ok(x[0] * x[0] * x[2] + x[1] * x[3]);
        let g = |x: &[f64; 4]| Ok(x[2].powi(3) - x[0] * x[1]);
        let h = |x: &[f64; 4]| Ok(x[0] + x[3] * x[3]);
        let x = [0.4, -1.1, 0.9, 1.3];
        let fg = poisson_bracket(&f, &g, &x).unwrap();
        let gf = poisson_bracket(&g, &f, &x).unwrap();
        assert!((fg + gf).abs() < 1e-9);
        let prod = |y: &[f64; 4]| Ok(g(y)? * h(y)?);
        let lhs = poisson_bracket(&f, &prod, &x).unwrap();
        let rhs = poisson_bracket(&f, &g, &x).unwrap() * h(&x).unwrap() + g(&x).unwrap() * poisson_bracket(&f, &h, &x).unwrap();
        assert!((lhs - rhs).abs() < 1e-8);
    }

    #[test]
    fn old_dirac_brackets() {
        let free = HamiltonianSpec::free(1.0);
        let s = ExtendedState::on_shell(&free, ReducedState::new(0.2, 3.0, 0.5), 0.0).unwrap();
        let r = dirac_brackets_old(&free, &s).unwrap();
        assert!((r.get("q", "p").unwrap() - 1.0).abs() < 1e-9);
        assert!((r.get("q", "p_t").unwrap() + 3.0).abs() < 1e-9);
        assert!(r.get("t", "p_t").unwrap().abs() < 1e-9);
        assert!(r.antisymmetry_defect() < 1e-9);

        let osc = HamiltonianSpec::oscillator("1").unwrap();
        let s = ExtendedState::on_shell(&osc, ReducedState::new(2.0, -0.4, 0.0), 0.0).unwrap();
        let r = dirac_brackets_old(&osc, &s).unwrap();
        assert!((r.get("p", "p_t").unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn hessian_is_singular() {
        let s = ExtendedState::new(0.3, 1.0, 0.0, 0.0, 0.0);
        assert!(hessian_rank_check(&HamiltonianSpec::free(1.0), 1.0, 1.0, &s).unwrap().abs() < 1e-6);
        let m2 = HamiltonianSpec::from_exprs("2", "0.5*q^2", true).unwrap();
        assert!(hessian_rank_check(&m2, 3.0, 2.0, &s).unwrap().abs() < 1e-6);
    }

    #[test]
    fn hessian_entries_match_analytic() {
        // analytic entries m/t', -m q'/t'^2, m q'^2/t'^3 for m(t) = 1 + t at t = 1
        let spec = HamiltonianSpec::from_exprs("1+t", "0.5*q^2", true).unwrap();
        let s = ExtendedState::new(0.0, 1.0, 0.0, 0.0, 0.0);
        let (a, b, m) = (1.0f64, 0.5f64, 2.0f64);
        let analytic = (m / b) * (m * a * a / (b * b * b)) - (m * a / (b * b)).powi(2);
        assert!(analytic.abs() < 1e-12);
        let det = hessian_rank_check(&spec, a, b, &s).unwrap();
        assert!((det - analytic).abs() < 1e-6, "det {det}");
    }
}

use num_complex::Complex64 as C64;

use crate::core::HamiltonianSpec;
use crate::error::{Error, Result};
use crate::transform::{boundary_term, boundary_term_derivs, InvariantSpec, TransformSpec};

use super::grid::WaveFunction;

/// Allowed deviation of the initial norm from 1 and the unitarity budget.
pub const NORM_TOL: f64 = 1e-10;
const CFL_LIMIT: f64 = 0.5;
const INITIAL_NORM_SLACK: f64 = 1e-8;

/// Hamiltonian driving a grid evolution.
#[derive(Debug, Clone, Copy)]
pub enum GridSystem<'a> {
    /// H = p²/2m(t) + V(q,t) in the original variables.
    Direct(&'a HamiltonianSpec),
    /// The autonomous invariant I(Q,P).
    Invariant(&'a InvariantSpec),
    /// Ĩ(Q,P̃,T) = I(Q, P̃ − ∂F/∂Q) − ∂F/∂T.
    Shifted { inv: &'a InvariantSpec, tf: &'a TransformSpec },
}

/// Hermitian tridiagonal matrix: real diagonal, upper entries H[k, k+1].
struct Tridiag {
    diag: Vec<f64>,
    upper: Vec<C64>,
    /// max |diagonal potential part|, for the step-size warning
    vmax: f64,
}

impl GridSystem<'_> {
    fn time_dependent(&self) -> bool {
        match self {
            GridSystem::Direct(s) => s.mass.as_constant().is_none() || s.potential.depends_on_y(),
            GridSystem::Invariant(_) => false,
            GridSystem::Shifted { .. } => true,
        }
    }

    fn matrix(&self, q: &[f64], hbar: f64, t: f64, gauge_links: &[f64]) -> Result<Tridiag> {
        let n = q.len();
        let dq = q[1] - q[0];
        match self {
            GridSystem::Direct(spec) => {
                let m = spec.mass_at(t)?;
                let hop = hbar * hbar / (2.0 * m * dq * dq);
                let v: Vec<f64> = q.iter().map(|&x| spec.potential.eval(x, t)).collect();
                let vmax = v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
                Ok(Tridiag { diag: v.iter().map(|v| 2.0 * hop + v).collect(), upper: vec![C64::new(-hop, 0.0); n - 1], vmax })
            }
            GridSystem::Invariant(inv) | GridSystem::Shifted { inv, .. } => {
                let hop = hbar * hbar / (2.0 * inv.m0 * dq * dq);
                let mut v: Vec<f64> =
                    q.iter().map(|&x| inv.vbar.eval(x) - 0.5 * inv.m0 * inv.kappa.eval(x).powi(2)).collect();
                let mut theta = gauge_links.to_vec();
                if let GridSystem::Shifted { tf, .. } = self {
                    let f = q.iter().map(|&x| boundary_term(tf, x, t)).collect::<Result<Vec<_>>>()?;
                    for k in 0..n - 1 {
                        theta[k] += (f[k + 1] - f[k]) / hbar;
                    }
                    for (vk, &x) in v.iter_mut().zip(q) {
                        *vk -= boundary_term_derivs(tf, x, t)?.f_t;
                    }
                }
                let vmax = v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
                Ok(Tridiag {
                    diag: v.iter().map(|v| 2.0 * hop + v).collect(),
                    upper: theta.iter().map(|&th| C64::from_polar(-hop, -th)).collect(),
                    vmax,
                })
            }
        }
    }
}

/// Peierls phases −(m₀/ħ)∫κ between neighbouring points, from the (P + m₀κ)² form of I.
fn kappa_links(system: &GridSystem, q: &[f64], hbar: f64) -> Vec<f64> {
    match system {
        GridSystem::Direct(_) => vec![0.0; q.len() - 1],
        GridSystem::Invariant(inv) | GridSystem::Shifted { inv, .. } => {
            if inv.kappa.as_constant() == Some(0.0) {
                return vec![0.0; q.len() - 1];
            }
            q.windows(2).map(|w| -inv.m0 * inv.kappa.integral(w[0], w[1]) / hbar).collect()
        }
    }
}

/// Solves (1 + iεH/2ħ)x = (1 − iεH/2ħ)ψ in place by the Thomas algorithm.
fn cayley_step(h: &Tridiag, psi: &mut [C64], s: f64, scratch: &mut Vec<C64>) {
    let n = psi.len();
    let is = C64::new(0.0, s);
    let up = |k: usize| is * h.upper[k];
    let lo = |k: usize| is * h.upper[k - 1].conj();
    let mut rhs: Vec<C64> = (0..n)
        .map(|k| {
            let mut r = (C64::new(1.0, 0.0) - is * h.diag[k]) * psi[k];
            if k > 0 {
                r -= lo(k) * psi[k - 1];
            }
            if k + 1 < n {
                r -= up(k) * psi[k + 1];
            }
            r
        })
        .collect();
    scratch.clear();
    scratch.resize(n, C64::new(0.0, 0.0));
    let mut beta = C64::new(1.0, 0.0) + is * h.diag[0];
    for k in 1..n {
        scratch[k - 1] = up(k - 1) / beta;
        let r = rhs[k - 1] / beta;
        rhs[k - 1] = r;
        beta = C64::new(1.0, 0.0) + is * h.diag[k] - lo(k) * scratch[k - 1];
        rhs[k] -= lo(k) * r;
    }
    psi[n - 1] = rhs[n - 1] / beta;
    for k in (0..n - 1).rev() {
        psi[k] = rhs[k] - scratch[k] * psi[k + 1];
    }
}

/// Unitary Cayley (Crank–Nicolson) evolution with H at each step midpoint
/// and hard walls at the grid ends.
pub fn evolve_wavefunction(system: GridSystem, psi0: &WaveFunction, t_i: f64, t_f: f64, n_steps: usize) -> Result<WaveFunction> {
    if n_steps == 0 {
        return Err(Error::Input("need at least one step".into()));
    }
    if !(t_f > t_i) {
        return Err(Error::Input(format!("need t_f > t_i, got [{t_i}, {t_f}]")));
    }
    let norm0 = psi0.norm();
    if (norm0 - 1.0).abs() > INITIAL_NORM_SLACK {
        return Err(Error::Input(format!("initial state must be normalised, norm = {norm0}")));
    }
    let hbar = psi0.grid.hbar;
    let q = psi0.grid.points();
    let eps = (t_f - t_i) / n_steps as f64;
    let links = kappa_links(&system, &q, hbar);
    let s = eps / (2.0 * hbar);
    let mut psi = psi0.psi.clone();
    let mut scratch = Vec::new();
    let mut fixed = None;
    let mut warned = false;
    for step in 0..n_steps {
        let t_mid = t_i + (step as f64 + 0.5) * eps;
        let fresh;
        let h = if system.time_dependent() {
            fresh = system.matrix(&q, hbar, t_mid, &links)?;
            &fresh
        } else {
            if fixed.is_none() {
                fixed = Some(system.matrix(&q, hbar, t_mid, &links)?);
            }
            fixed.as_ref().unwrap()
        };
        if !warned && eps * h.vmax / hbar > CFL_LIMIT {
            log::warn!("evolution step {eps:e} is coarse: eps*max|V|/hbar = {:.3} > {CFL_LIMIT}", eps * h.vmax / hbar);
            warned = true;
        }
        cayley_step(h, &mut psi, s, &mut scratch);
    }
    let out = WaveFunction::new(psi0.grid, psi)?;
    let drift = (out.norm() - norm0).abs();
    if drift > NORM_TOL {
        log::warn!("norm drifted by {drift:e} during evolution");
    }
    Ok(out)
}

/// ψ̃(Q) = e^{iF(Q,T)/ħ} ψ(Q).
pub fn phase_map(tf: &TransformSpec, psi: &WaveFunction, t: f64) -> Result<WaveFunction> {
    let hbar = psi.grid.hbar;
    let out = psi
        .grid
        .points()
        .iter()
        .zip(&psi.psi)
        .map(|(&x, z)| Ok(z * C64::cis(boundary_term(tf, x, t)? / hbar)))
        .collect::<Result<Vec<_>>>()?;
    WaveFunction::new(psi.grid, out)
}

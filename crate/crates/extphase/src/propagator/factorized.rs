use std::f64::consts::PI;

use ndarray::parallel::prelude::*;
use ndarray::{Array2, Axis};
use num_complex::Complex64 as C64;

use crate::core::HamiltonianSpec;
use crate::error::{finite, Error, Result};
use crate::transform::{boundary_term, InvariantSpec, TransformSpec};

use super::grid::GridSpec;
use super::kernel::{chain, compose_kernel_at_times, Kernel};

/// Agreement required between the endpoint measure and the explicit product.
pub const TELESCOPE_TOL: f64 = 1e-12;

/// Net measure prefactor of the transformed slice product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureFactor {
    /// 1/√(Ã(T_0)Ã(T_N)).
    pub value: f64,
    /// The slice-by-slice product with every Ḃ factor kept explicit.
    pub telescoped: f64,
}

impl MeasureFactor {
    pub fn residual(&self) -> f64 {
        (self.telescoped - self.value).abs()
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.len() < 2 {
        return Err(Error::Input("need at least two slice times".into()));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Input("slice times must increase".into()));
    }
    Ok(())
}

/// Measure prefactor for slice times T_0 < … < T_N.
///
/// Interior points carry Ã(T_j)Ḃ(T_j) from the coordinate change and 1/Ḃ(T_j)
/// from the time delta; each slice carries 1/Ã(T̄_j) ≈ 1/√(Ã(T_j)Ã(T_{j−1})).
pub fn measure_factor(tf: &TransformSpec, times: &[f64]) -> Result<MeasureFactor> {
    check_times(times)?;
    let coeffs = times.iter().map(|&t| tf.coeffs(t)).collect::<Result<Vec<_>>>()?;
    if let Some((t, c)) = times.iter().zip(&coeffs).find(|(_, c)| !(c.a > 0.0)) {
        return Err(Error::Input(format!("A must be positive, A({t}) = {}", c.a)));
    }
    let n = coeffs.len() - 1;
    let mut prod = 1.0;
    for c in &coeffs[1..n] {
        prod *= c.a * c.bd / c.bd;
    }
    for j in 1..=n {
        prod /= (coeffs[j - 1].a * coeffs[j].a).sqrt();
    }
    Ok(MeasureFactor { value: 1.0 / (coeffs[0].a * coeffs[n].a).sqrt(), telescoped: prod })
}

/// K_I between Q-grids together with the endpoint factors that map it to q.
#[derive(Debug, Clone)]
pub struct FactorizedKernel {
    /// K_I(Q_f, Q_i): rows on `q_final`, columns on `q_initial`.
    pub k_invariant: Array2<C64>,
    pub q_initial: Vec<f64>,
    pub q_final: Vec<f64>,
    pub prefactor: f64,
    /// F(Q_i, T_i)/ħ on `q_initial`.
    pub phase_initial: Vec<f64>,
    /// F(Q_f, T_f)/ħ on `q_final`.
    pub phase_final: Vec<f64>,
    pub big_t_i: f64,
    pub big_t_f: f64,
    /// B(T_i), B(T_f).
    pub t_i: f64,
    pub t_f: f64,
    pub grid: GridSpec,
}

impl FactorizedKernel {
    /// K(q_f, q_i) = prefactor · e^{i[F(Q_f,T_f) − F(Q_i,T_i)]/ħ} · K_I(Q_f, Q_i).
    ///
    /// The endpoint phase enters with the same sign as the state map ψ̃ = e^{iF/ħ}ψ.
    pub fn to_q_kernel(&self) -> Kernel {
        let mut m = self.k_invariant.clone();
        for ((k, l), z) in m.indexed_iter_mut() {
            *z *= C64::from_polar(self.prefactor, self.phase_final[k] - self.phase_initial[l]);
        }
        Kernel { matrix: m, t_i: self.t_i, t_f: self.t_f, grid: self.grid }
    }
}

/// Slice amplitude of I between Q-point sets, from the Gaussian P-integral
/// with a = −ΔT/2m₀, b = ΔQ − κ(Q̄)ΔT, c = −ΔT·V̄(Q̄).
fn invariant_slice(inv: &InvariantSpec, q_out: &[f64], q_in: &[f64], dt: f64, hbar: f64) -> Result<Array2<C64>> {
    let m0 = inv.m0;
    let pref = C64::from_polar((m0 / (2.0 * PI * hbar * dt)).sqrt(), -PI / 4.0);
    let mut s = Array2::zeros((q_out.len(), q_in.len()));
    s.axis_iter_mut(Axis(0)).into_par_iter().enumerate().for_each(|(k, mut row)| {
        for (l, z) in row.iter_mut().enumerate() {
            let qb = 0.5 * (q_out[k] + q_in[l]);
            let b = q_out[k] - q_in[l] - inv.kappa.eval(qb) * dt;
            *z = pref * C64::cis((m0 * b * b / (2.0 * dt) - dt * inv.vbar.eval(qb)) / hbar);
        }
    });
    if s.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("non-finite slice amplitude of the invariant".into()));
    }
    Ok(s)
}

/// Builds K_I over equal slices of [T_i, T_f] on the Q-grids Q = q/Ã(T_j).
pub fn factorize(tf: &TransformSpec, inv: &InvariantSpec, grid: &GridSpec, big_t_i: f64, big_t_f: f64) -> Result<FactorizedKernel> {
    grid.validate()?;
    if !(big_t_f > big_t_i) {
        return Err(Error::Input(format!("need T_f > T_i, got [{big_t_i}, {big_t_f}]")));
    }
    let n = grid.n_slices;
    let dt = (big_t_f - big_t_i) / n as f64;
    let nodes: Vec<f64> = (0..=n).map(|j| if j == n { big_t_f } else { big_t_i + j as f64 * dt }).collect();
    let coeffs = nodes.iter().map(|&t| tf.coeffs(t)).collect::<Result<Vec<_>>>()?;
    let q = grid.points();
    let qgrid = |j: usize| -> Vec<f64> { q.iter().map(|x| x / coeffs[j].a).collect() };
    let hbar = grid.hbar;
    let dq = grid.dq();
    let k_invariant = chain(n, |j| invariant_slice(inv, &qgrid(j), &qgrid(j - 1), dt, hbar), |j| dq / coeffs[j].a)?;
    let (q_initial, q_final) = (qgrid(0), qgrid(n));
    let phase = |qs: &[f64], t: f64| -> Result<Vec<f64>> { qs.iter().map(|&x| Ok(boundary_term(tf, x, t)? / hbar)).collect() };
    Ok(FactorizedKernel {
        prefactor: 1.0 / (coeffs[0].a * coeffs[n].a).sqrt(),
        phase_initial: phase(&q_initial, big_t_i)?,
        phase_final: phase(&q_final, big_t_f)?,
        k_invariant,
        q_initial,
        q_final,
        big_t_i,
        big_t_f,
        t_i: coeffs[0].b,
        t_f: coeffs[n].b,
        grid: *grid,
    })
}

/// The invariant's kernel mapped back to the original q-grid.
pub fn factorized_kernel(tf: &TransformSpec, inv: &InvariantSpec, grid: &GridSpec, big_t_i: f64, big_t_f: f64) -> Result<Kernel> {
    Ok(factorize(tf, inv, grid, big_t_i, big_t_f)?.to_q_kernel())
}

/// compose_kernel of H on the slice times t_j = B(T_j) of equal T-slices.
pub fn direct_kernel_mapped(spec: &HamiltonianSpec, tf: &TransformSpec, grid: &GridSpec, big_t_i: f64, big_t_f: f64) -> Result<Kernel> {
    let n = grid.n_slices;
    let dt = (big_t_f - big_t_i) / n as f64;
    let times = (0..=n)
        .map(|j| tf.coeffs(if j == n { big_t_f } else { big_t_i + j as f64 * dt }).map(|c| c.b))
        .collect::<Result<Vec<_>>>()?;
    compose_kernel_at_times(spec, grid, &times)
}

/// Per-slice boundary increments along a sampled path (Q_j, T_j):
/// 𝓑_j = m₀[κ(Q̄_j) + Γ(T̄_j)Q̄_j]ΔQ_j + (m₀Q̄_j²/2)Γ̇(T̄_j)ΔT_j.
pub fn boundary_increments(tf: &TransformSpec, q_path: &[f64], times: &[f64]) -> Result<Vec<f64>> {
    check_times(times)?;
    if q_path.len() != times.len() {
        return Err(Error::Input(format!("{} path points for {} times", q_path.len(), times.len())));
    }
    (1..times.len())
        .map(|j| {
            let (qb, tb) = (0.5 * (q_path[j] + q_path[j - 1]), 0.5 * (times[j] + times[j - 1]));
            let c = tf.coeffs(tb)?;
            let b = tf.m0 * (tf.kappa.eval(qb) + c.gamma() * qb) * (q_path[j] - q_path[j - 1])
                + 0.5 * tf.m0 * qb * qb * c.gamma_dot() * (times[j] - times[j - 1]);
            finite(b, "boundary increment")
        })
        .collect()
}

/// |Σ_j 𝓑_j − [F(Q_N,T_N) − F(Q_0,T_0)]|.
pub fn telescoping_defect(tf: &TransformSpec, q_path: &[f64], times: &[f64]) -> Result<f64> {
    let sum: f64 = boundary_increments(tf, q_path, times)?.iter().sum();
    let n = times.len() - 1;
    let ends = boundary_term(tf, q_path[n], times[n])? - boundary_term(tf, q_path[0], times[0])?;
    Ok((sum - ends).abs())
}

/// New slice momenta from old ones at slice midpoints (Q̄_j, T̄_j):
/// P = Ãp − m₀[κ + ΓQ̄], P_T = Ḃp_t + ȦQ̄p − (m₀Q̄²/2)Γ̇.
pub fn slice_momenta_new(tf: &TransformSpec, p: f64, p_t: f64, q_bar: f64, t_bar: f64) -> Result<(f64, f64)> {
    let c = tf.coeffs(t_bar)?;
    let k = tf.kappa.eval(q_bar);
    let big_p = c.a * p - tf.m0 * (k + c.gamma() * q_bar);
    let big_pt = c.bd * p_t + c.ad * q_bar * p - 0.5 * tf.m0 * q_bar * q_bar * (c.add / c.a - c.gamma().powi(2));
    Ok((finite(big_p, "slice momentum")?, finite(big_pt, "slice time momentum")?))
}

/// Old slice momenta from new ones, written in the expanded form
/// p_t = {P_T − ΓQ̄P − m₀ΓκQ̄ + (m₀Q̄²/2)(Ä/Ã − 3Γ²)}/Ḃ.
pub fn slice_momenta_old(tf: &TransformSpec, big_p: f64, big_pt: f64, q_bar: f64, t_bar: f64) -> Result<(f64, f64)> {
    let c = tf.coeffs(t_bar)?;
    let k = tf.kappa.eval(q_bar);
    let g = c.gamma();
    let p = big_p / c.a + tf.m0 / c.a * (k + g * q_bar);
    let p_t = (big_pt - g * q_bar * big_p - tf.m0 * g * k * q_bar + 0.5 * tf.m0 * q_bar * q_bar * (c.add / c.a - 3.0 * g * g)) / c.bd;
    Ok((finite(p, "slice momentum")?, finite(p_t, "slice time momentum")?))
}

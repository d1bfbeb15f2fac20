use std::f64::consts::PI;
use std::io::{Read, Write};
use std::ops::Range;

use ndarray::linalg::general_mat_mul;
use ndarray::parallel::prelude::*;
use ndarray::{Array1, Array2, Axis};
use num_complex::Complex64 as C64;

use crate::core::HamiltonianSpec;
use crate::dynamics::GaugeSpec;
use crate::error::{Error, Result};

use super::grid::{GridSpec, WaveFunction};

/// Relative tolerance of the gauge round trip t̃_j → g⁻¹ → τ_j, per slice width.
pub const GAUGE_TOL: f64 = 1e-10;
/// Relative L2 agreement expected from the composition property.
pub const COMPOSITION_TOL: f64 = 1e-10;

const MAGIC: &[u8; 5] = b"KRNL1";
const COLUMN_BLOCK: usize = 32;

/// K(q_f, q_i) on a grid: rows index q_f, columns q_i.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    pub matrix: Array2<C64>,
    pub t_i: f64,
    pub t_f: f64,
    pub grid: GridSpec,
}

impl Kernel {
    /// `later ∘ self`, the product later·self·Δq.
    pub fn then(&self, later: &Kernel) -> Result<Kernel> {
        if !self.grid.same_points(&later.grid) {
            return Err(Error::Input("kernels live on different grids".into()));
        }
        if (later.t_i - self.t_f).abs() > 1e-12 * (1.0 + self.t_f.abs()) {
            return Err(Error::Input(format!("kernel ends at t = {} but the next starts at {}", self.t_f, later.t_i)));
        }
        Ok(Kernel {
            matrix: mat_mul(&later.matrix, &self.matrix, self.grid.dq()),
            t_i: self.t_i,
            t_f: later.t_f,
            grid: GridSpec { n_slices: self.grid.n_slices + later.grid.n_slices, ..self.grid },
        })
    }

    /// ψ(q_f) = Σ K(q_f, q_i) ψ(q_i) Δq.
    pub fn apply(&self, psi: &WaveFunction) -> Result<WaveFunction> {
        if !self.grid.same_points(&psi.grid) {
            return Err(Error::Input("wavefunction and kernel live on different grids".into()));
        }
        let v = Array1::from(psi.psi.clone());
        let out = self.matrix.dot(&v) * C64::new(self.grid.dq(), 0.0);
        WaveFunction::new(psi.grid, out.to_vec())
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        self.matrix.column(j).to_vec()
    }

    /// ‖self − reference‖/‖reference‖ (Frobenius) restricted to the given columns.
    pub fn rel_l2_columns(&self, reference: &Kernel, cols: Range<usize>) -> Result<f64> {
        if self.matrix.dim() != reference.matrix.dim() || cols.end > self.matrix.ncols() {
            return Err(Error::Input("kernel shapes differ".into()));
        }
        let (mut num, mut den) = (0.0, 0.0);
        for j in cols {
            for (a, b) in self.matrix.column(j).iter().zip(reference.matrix.column(j)) {
                num += (a - b).norm_sqr();
                den += b.norm_sqr();
            }
        }
        Ok((num / den).sqrt())
    }

    pub fn rel_l2_interior(&self, reference: &Kernel) -> Result<f64> {
        self.rel_l2_columns(reference, self.grid.interior())
    }

    /// KRNL1 file: magic, u32 n, f64 t_i t_f q_min q_max ħ, then row-major (re, im) pairs, all little-endian.
    pub fn write_krnl1<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.grid.n_points as u32).to_le_bytes())?;
        for v in [self.t_i, self.t_f, self.grid.q_min, self.grid.q_max, self.grid.hbar] {
            w.write_all(&v.to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(16 * self.matrix.len());
        for z in self.matrix.iter() {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    /// Inverse of [`Kernel::write_krnl1`]. The slice count is not stored and reads back as 1.
    pub fn read_krnl1<R: Read>(mut r: R) -> Result<Kernel> {
        let mut magic = [0u8; 5];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Input("not a KRNL1 file".into()));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let n = u32::from_le_bytes(b4) as usize;
        let mut f = [0.0; 5];
        let mut b8 = [0u8; 8];
        for v in f.iter_mut() {
            r.read_exact(&mut b8)?;
            *v = f64::from_le_bytes(b8);
        }
        let grid = GridSpec::new(f[2], f[3], n, 1, f[4])?;
        let mut data = vec![0u8; 16 * n * n];
        r.read_exact(&mut data)?;
        let vals: Vec<C64> = data
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().unwrap());
                let im = f64::from_le_bytes(c[8..].try_into().unwrap());
                C64::new(re, im)
            })
            .collect();
        let matrix = Array2::from_shape_vec((n, n), vals).map_err(|e| Error::Input(e.to_string()))?;
        Ok(Kernel { matrix, t_i: f[0], t_f: f[1], grid })
    }
}

/// alpha·a·b, parallel over column blocks of b.
pub(crate) fn mat_mul(a: &Array2<C64>, b: &Array2<C64>, alpha: f64) -> Array2<C64> {
    let mut out = Array2::zeros((a.nrows(), b.ncols()));
    out.axis_chunks_iter_mut(Axis(1), COLUMN_BLOCK)
        .into_par_iter()
        .zip(b.axis_chunks_iter(Axis(1), COLUMN_BLOCK).into_par_iter())
        .for_each(|(mut o, bj)| general_mat_mul(C64::new(alpha, 0.0), a, &bj, C64::new(0.0, 0.0), &mut o));
    out
}

/// S_N·w_{N−1}·…·w_1·S_1 where `slice(j)` builds S_j and `weight(j)` is the
/// measure of the intermediate integration over the j-th point set.
pub(crate) fn chain(
    n_slices: usize,
    mut slice: impl FnMut(usize) -> Result<Array2<C64>>,
    weight: impl Fn(usize) -> f64,
) -> Result<Array2<C64>> {
    let mut m = slice(1)?;
    for j in 2..=n_slices {
        let s = slice(j)?;
        m = mat_mul(&s, &m, weight(j - 1));
    }
    Ok(m)
}

/// √(m/(2πiħε)).
fn free_prefactor(m: f64, eps: f64, hbar: f64) -> C64 {
    C64::from_polar((m / (2.0 * PI * hbar * eps)).sqrt(), -PI / 4.0)
}

#[inline]
fn entry(pref: C64, m: f64, eps: f64, hbar: f64, dq: f64, v: f64) -> C64 {
    pref * C64::cis((m * dq * dq / (2.0 * eps) - eps * v) / hbar)
}

/// Short-time amplitude from (q_jm1) to (q_j) across a slice of width ε
/// centred at t̄, with the momentum integral done in closed form.
pub fn short_time_kernel(spec: &HamiltonianSpec, q_j: f64, q_jm1: f64, t_bar: f64, eps: f64, hbar: f64) -> Result<C64> {
    if !(eps > 0.0) {
        return Err(Error::Input(format!("slice width must be positive, got {eps}")));
    }
    if !(hbar > 0.0) {
        return Err(Error::Input(format!("hbar must be positive, got {hbar}")));
    }
    let m = spec.mass_at(t_bar)?;
    let v = spec.potential.eval(0.5 * (q_j + q_jm1), t_bar);
    Ok(entry(free_prefactor(m, eps, hbar), m, eps, hbar, q_j - q_jm1, v))
}

/// ∫ dp/(2πħ) exp{i(ap² + bp + c)/ħ} for real a ≠ 0.
pub fn gaussian_p_integral(a: f64, b: f64, c: f64, hbar: f64) -> Result<C64> {
    if !(a != 0.0 && a.is_finite()) {
        return Err(Error::Input(format!("quadratic coefficient must be finite and nonzero, got {a}")));
    }
    let width = (C64::new(PI * hbar, 0.0) / C64::new(0.0, -a)).sqrt();
    Ok(width * C64::cis((c - b * b / (4.0 * a)) / hbar) / (2.0 * PI * hbar))
}

/// Slice widths and midpoints (ε_j, t̄_j).
fn uniform_slices(t_i: f64, t_f: f64, n: usize) -> Vec<(f64, f64)> {
    let eps = (t_f - t_i) / n as f64;
    (1..=n).map(|j| (eps, t_i + (j as f64 - 0.5) * eps)).collect()
}

fn node_slices(times: &[f64]) -> Result<Vec<(f64, f64)>> {
    if times.len() < 2 {
        return Err(Error::Input("need at least two slice times".into()));
    }
    times
        .windows(2)
        .map(|w| {
            if !(w[1] > w[0]) {
                return Err(Error::Input(format!("slice times must increase ({} then {})", w[0], w[1])));
            }
            Ok((w[1] - w[0], 0.5 * (w[0] + w[1])))
        })
        .collect()
}

fn time_independent(spec: &HamiltonianSpec) -> bool {
    spec.mass.as_constant().is_some() && !spec.potential.depends_on_y()
}

/// Matrix of short-time amplitudes S[k, l] from point l to point k.
pub fn slice_matrix(spec: &HamiltonianSpec, grid: &GridSpec, eps: f64, t_bar: f64) -> Result<Array2<C64>> {
    if !(eps > 0.0) {
        return Err(Error::Input(format!("slice width must be positive, got {eps}")));
    }
    let m = spec.mass_at(t_bar)?;
    let hbar = grid.hbar;
    let pref = free_prefactor(m, eps, hbar);
    let q = grid.points();
    let n = q.len();
    let mut s = Array2::zeros((n, n));
    s.axis_iter_mut(Axis(0)).into_par_iter().enumerate().for_each(|(k, mut row)| {
        for (l, z) in row.iter_mut().enumerate() {
            let v = spec.potential.eval(0.5 * (q[k] + q[l]), t_bar);
            *z = entry(pref, m, eps, hbar, q[k] - q[l], v);
        }
    });
    if s.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical(format!("non-finite short-time kernel at t = {t_bar}")));
    }
    Ok(s)
}

/// Reuses the previous slice matrix when H has no explicit time dependence and ε repeats.
struct SliceCache<'a> {
    spec: &'a HamiltonianSpec,
    grid: &'a GridSpec,
    reuse: bool,
    last: Option<(u64, Array2<C64>)>,
}

impl<'a> SliceCache<'a> {
    fn new(spec: &'a HamiltonianSpec, grid: &'a GridSpec) -> Self {
        SliceCache { spec, grid, reuse: time_independent(spec), last: None }
    }

    fn get(&mut self, eps: f64, t_bar: f64) -> Result<&Array2<C64>> {
        let hit = self.reuse && matches!(&self.last, Some((bits, _)) if *bits == eps.to_bits());
        if !hit {
            self.last = Some((eps.to_bits(), slice_matrix(self.spec, self.grid, eps, t_bar)?));
        }
        Ok(&self.last.as_ref().unwrap().1)
    }
}

/// Largest change of the free phase m(q−q′)²/2ħε between neighbouring grid
/// points over all slices. Above π the short-time kernels alias on the grid.
pub fn free_phase_step(spec: &HamiltonianSpec, grid: &GridSpec, slices: &[(f64, f64)]) -> Result<f64> {
    let width = grid.q_max - grid.q_min;
    slices.iter().try_fold(0.0f64, |w, &(eps, t)| Ok(w.max(spec.mass_at(t)? * width * grid.dq() / (grid.hbar * eps))))
}

fn compose_slices(spec: &HamiltonianSpec, grid: &GridSpec, slices: &[(f64, f64)]) -> Result<Array2<C64>> {
    let step = free_phase_step(spec, grid, slices)?;
    if step > PI {
        log::warn!("slices too short for the grid: free phase changes by {step:.2} rad between grid points");
    }
    let mut cache = SliceCache::new(spec, grid);
    let dq = grid.dq();
    chain(slices.len(), |j| cache.get(slices[j - 1].0, slices[j - 1].1).cloned(), |_| dq)
}

/// Time-sliced kernel from t_i to t_f with `grid.n_slices` equal slices.
pub fn compose_kernel(spec: &HamiltonianSpec, grid: &GridSpec, t_i: f64, t_f: f64) -> Result<Kernel> {
    grid.validate()?;
    if !(t_f > t_i) {
        return Err(Error::Input(format!("need t_f > t_i, got [{t_i}, {t_f}]")));
    }
    let matrix = compose_slices(spec, grid, &uniform_slices(t_i, t_f, grid.n_slices))?;
    Ok(Kernel { matrix, t_i, t_f, grid: *grid })
}

/// Time-sliced kernel over explicit slice times t_0 < … < t_N.
pub fn compose_kernel_at_times(spec: &HamiltonianSpec, grid: &GridSpec, times: &[f64]) -> Result<Kernel> {
    let slices = node_slices(times)?;
    let grid = grid.with_slices(slices.len())?;
    let matrix = compose_slices(spec, &grid, &slices)?;
    Ok(Kernel { matrix, t_i: times[0], t_f: times[times.len() - 1], grid })
}

/// Applies the slice product to states one slice at a time, without forming the kernel.
pub struct SlicedPropagator<'a> {
    spec: &'a HamiltonianSpec,
    grid: GridSpec,
    slices: Vec<(f64, f64)>,
}

impl<'a> SlicedPropagator<'a> {
    pub fn new(spec: &'a HamiltonianSpec, grid: &GridSpec, t_i: f64, t_f: f64) -> Result<Self> {
        grid.validate()?;
        if !(t_f > t_i) {
            return Err(Error::Input(format!("need t_f > t_i, got [{t_i}, {t_f}]")));
        }
        Ok(SlicedPropagator { spec, grid: *grid, slices: uniform_slices(t_i, t_f, grid.n_slices) })
    }

    /// The same product applied to several states, slice by slice.
    pub fn apply_all(&self, states: &[WaveFunction]) -> Result<Vec<WaveFunction>> {
        if states.iter().any(|s| !s.grid.same_points(&self.grid)) {
            return Err(Error::Input("wavefunction and propagator live on different grids".into()));
        }
        let dq = C64::new(self.grid.dq(), 0.0);
        let mut vs: Vec<Array1<C64>> = states.iter().map(|s| Array1::from(s.psi.clone())).collect();
        let mut cache = SliceCache::new(self.spec, &self.grid);
        for &(eps, t_bar) in &self.slices {
            let s = cache.get(eps, t_bar)?;
            for v in vs.iter_mut() {
                *v = s.dot(v) * dq;
            }
        }
        vs.into_iter().map(|v| WaveFunction::new(self.grid, v.to_vec())).collect()
    }

    pub fn apply(&self, psi: &WaveFunction) -> Result<WaveFunction> {
        Ok(self.apply_all(std::slice::from_ref(psi))?.remove(0))
    }
}

fn gaussian_slice_matrix(spec: &HamiltonianSpec, grid: &GridSpec, dt: f64, t_bar: f64) -> Result<Array2<C64>> {
    let m = spec.mass_at(t_bar)?;
    let q = grid.points();
    let n = q.len();
    let hbar = grid.hbar;
    // the p_t delta replaces p_t by −H: a momentum-quadratic −Δt̃/2m and a constant −Δt̃V
    let a = -dt / (2.0 * m);
    let mut s = Array2::zeros((n, n));
    for k in 0..n {
        for l in 0..n {
            let c = -dt * spec.potential.eval(0.5 * (q[k] + q[l]), t_bar);
            s[[k, l]] = gaussian_p_integral(a, q[k] - q[l], c, hbar)?;
        }
    }
    Ok(s)
}

/// Extended-space amplitude on explicit gauge parameters τ_0 < … < τ_N.
/// Slice times come from the t̃ delta (t̃_j = g(τ_j)), slice momenta from the p_t̃ delta.
pub fn extended_kernel_on(spec: &HamiltonianSpec, grid: &GridSpec, gauge: &GaugeSpec, taus: &[f64]) -> Result<Kernel> {
    if taus.len() < 2 {
        return Err(Error::Input("need at least two gauge parameters".into()));
    }
    let t_tilde: Vec<f64> = taus.iter().map(|&tau| gauge.time_at(tau)).collect();
    for j in 1..taus.len() {
        let dtau = taus[j] - taus[j - 1];
        if !(dtau > 0.0) {
            return Err(Error::Input(format!("gauge parameters must increase ({} then {})", taus[j - 1], taus[j])));
        }
        if !(t_tilde[j] > t_tilde[j - 1]) {
            return Err(Error::GaugeCondition(format!("g is not increasing on [{}, {}]", taus[j - 1], taus[j])));
        }
        let back = gauge.tau_at(t_tilde[j]).map_err(|e| Error::GaugeCondition(format!("g cannot be inverted: {e}")))?;
        let resid = (back - taus[j]).abs() / dtau;
        if resid > GAUGE_TOL {
            return Err(Error::GaugeCondition(format!("slice round trip residual {resid:e} at tau = {}", taus[j])));
        }
    }
    let grid = grid.with_slices(taus.len() - 1)?;
    let slices = node_slices(&t_tilde)?;
    let dq = grid.dq();
    let matrix = chain(slices.len(), |j| gaussian_slice_matrix(spec, &grid, slices[j - 1].0, slices[j - 1].1), |_| dq)?;
    Ok(Kernel { matrix, t_i: t_tilde[0], t_f: t_tilde[t_tilde.len() - 1], grid })
}

/// Extended-space amplitude between τ_i and τ_f with `grid.n_slices` slices.
/// The τ_j are chosen so that g(τ_j) are equally spaced in t̃.
pub fn extended_kernel(spec: &HamiltonianSpec, grid: &GridSpec, gauge: &GaugeSpec, tau_i: f64, tau_f: f64) -> Result<Kernel> {
    grid.validate()?;
    if !(tau_f > tau_i) {
        return Err(Error::Input(format!("need tau_f > tau_i, got [{tau_i}, {tau_f}]")));
    }
    let (t_i, t_f) = (gauge.time_at(tau_i), gauge.time_at(tau_f));
    let n = grid.n_slices;
    let eps = (t_f - t_i) / n as f64;
    let mut taus = Vec::with_capacity(n + 1);
    taus.push(tau_i);
    for j in 1..n {
        taus.push(gauge.tau_at(t_i + j as f64 * eps).map_err(|e| Error::GaugeCondition(format!("g cannot be inverted: {e}")))?);
    }
    taus.push(tau_f);
    extended_kernel_on(spec, grid, gauge, &taus)
}

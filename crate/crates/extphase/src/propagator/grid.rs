use std::io::Write;
use std::ops::Range;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dynamics::fmt17;
use crate::error::{Error, Result};

/// Smallest accepted number of grid points.
pub const MIN_POINTS: usize = 16;

/// Uniform spatial grid, slice count and ħ shared by kernels and wavefunctions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub q_min: f64,
    pub q_max: f64,
    pub n_points: usize,
    pub n_slices: usize,
    pub hbar: f64,
}

impl GridSpec {
    pub fn new(q_min: f64, q_max: f64, n_points: usize, n_slices: usize, hbar: f64) -> Result<Self> {
        let g = GridSpec { q_min, q_max, n_points, n_slices, hbar };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_points < MIN_POINTS {
            return Err(Error::Input(format!("grid has {} points, minimum is {MIN_POINTS}", self.n_points)));
        }
        if self.n_slices < 1 {
            return Err(Error::Input("grid needs at least one time slice".into()));
        }
        if !(self.q_min.is_finite() && self.q_max.is_finite() && self.q_max > self.q_min) {
            return Err(Error::Input(format!("bad grid interval [{}, {}]", self.q_min, self.q_max)));
        }
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(Error::Input(format!("hbar must be positive, got {}", self.hbar)));
        }
        Ok(())
    }

    pub fn with_slices(mut self, n_slices: usize) -> Result<Self> {
        self.n_slices = n_slices;
        self.validate()?;
        Ok(self)
    }

    pub fn dq(&self) -> f64 {
        (self.q_max - self.q_min) / (self.n_points - 1) as f64
    }

    pub fn point(&self, k: usize) -> f64 {
        self.q_min + self.dq() * k as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|k| self.point(k)).collect()
    }

    /// Column range n/4..3n/4 used for kernel comparisons.
    pub fn interior(&self) -> Range<usize> {
        self.n_points / 4..3 * self.n_points / 4
    }

    pub(crate) fn same_points(&self, other: &GridSpec) -> bool {
        self.q_min == other.q_min && self.q_max == other.q_max && self.n_points == other.n_points && self.hbar == other.hbar
    }
}

/// Complex samples on a grid, normalised as Σ|ψ|²Δq.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    pub grid: GridSpec,
    pub psi: Vec<C64>,
}

impl WaveFunction {
    pub fn new(grid: GridSpec, psi: Vec<C64>) -> Result<Self> {
        grid.validate()?;
        if psi.len() != grid.n_points {
            return Err(Error::Input(format!("{} samples for a grid of {} points", psi.len(), grid.n_points)));
        }
        if psi.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Numerical("wavefunction has non-finite samples".into()));
        }
        Ok(WaveFunction { grid, psi })
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> C64) -> Result<Self> {
        let psi = grid.points().into_iter().map(f).collect();
        Self::new(grid, psi)
    }

    /// exp(−(q−c)²/4σ² + ip₀q/ħ), normalised on the grid. σ² is the variance of |ψ|².
    pub fn gaussian(grid: GridSpec, center: f64, sigma: f64, p0: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::Input(format!("packet width must be positive, got {sigma}")));
        }
        let hbar = grid.hbar;
        Self::from_fn(grid, |q| C64::from_polar((-(q - center).powi(2) / (4.0 * sigma * sigma)).exp(), p0 * q / hbar))?
            .normalized()
    }

    pub fn norm(&self) -> f64 {
        self.psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.dq()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm();
        if !(n > 0.0) {
            return Err(Error::Input("cannot normalise a zero wavefunction".into()));
        }
        let s = 1.0 / n.sqrt();
        self.psi.iter_mut().for_each(|z| *z *= s);
        Ok(self)
    }

    fn check_same(&self, other: &WaveFunction) -> Result<()> {
        if !self.grid.same_points(&other.grid) {
            return Err(Error::Input("wavefunctions live on different grids".into()));
        }
        Ok(())
    }

    /// ⟨self|other⟩ = Σ conj(ψ)φ Δq.
    pub fn inner(&self, other: &WaveFunction) -> Result<C64> {
        self.check_same(other)?;
        Ok(self.psi.iter().zip(&other.psi).map(|(a, b)| a.conj() * b).sum::<C64>() * self.grid.dq())
    }

    /// |⟨a|b⟩|² / (‖a‖²‖b‖²).
    pub fn fidelity(&self, other: &WaveFunction) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr() / (self.norm() * other.norm()))
    }

    /// ‖self − other‖ in the grid L2 norm.
    pub fn l2_distance(&self, other: &WaveFunction) -> Result<f64> {
        self.check_same(other)?;
        let s: f64 = self.psi.iter().zip(&other.psi).map(|(a, b)| (a - b).norm_sqr()).sum();
        Ok((s * self.grid.dq()).sqrt())
    }

    /// Mean and variance of |ψ|².
    pub fn moments(&self) -> (f64, f64) {
        let q = self.grid.points();
        let w: Vec<f64> = self.psi.iter().map(|z| z.norm_sqr()).collect();
        let total: f64 = w.iter().sum();
        let mean = q.iter().zip(&w).map(|(x, p)| x * p).sum::<f64>() / total;
        let var = q.iter().zip(&w).map(|(x, p)| (x - mean).powi(2) * p).sum::<f64>() / total;
        (mean, var)
    }

    /// CSV with columns `q,re,im,abs2`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "q,re,im,abs2")?;
        for (q, z) in self.grid.points().into_iter().zip(&self.psi) {
            writeln!(w, "{},{},{},{}", fmt17(q), fmt17(z.re), fmt17(z.im), fmt17(z.norm_sqr()))?;
        }
        Ok(())
    }
}

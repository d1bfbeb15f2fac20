//! Time-sliced propagators on a uniform grid.
//!
//! Direct kernels are products of short-time amplitudes with the momentum
//! integral done in closed form. The extended construction allocates slice
//! times and time momenta and removes them with their delta functions. The
//! factorized kernel is built from the autonomous invariant I on per-slice
//! grids Q = q/Ã(T_j) and carried back by the measure 1/√(Ã_iÃ_f) and the
//! boundary term F. Cayley evolution of wavefunctions covers the state side,
//! where ψ̃ = e^{iF/ħ}ψ.

mod evolve;
mod factorized;
mod grid;
mod kernel;

pub use evolve::{evolve_wavefunction, phase_map, GridSystem, NORM_TOL};
pub use factorized::{
    boundary_increments, direct_kernel_mapped, factorize, factorized_kernel, measure_factor, slice_momenta_new,
    slice_momenta_old, telescoping_defect, FactorizedKernel, MeasureFactor, TELESCOPE_TOL,
};
pub use grid::{GridSpec, WaveFunction, MIN_POINTS};
pub use kernel::{
    compose_kernel, compose_kernel_at_times, extended_kernel, free_phase_step, extended_kernel_on, gaussian_p_integral, short_time_kernel,
    slice_matrix, Kernel, SlicedPropagator, COMPOSITION_TOL, GAUGE_TOL,
};

pub use num_complex::Complex64;

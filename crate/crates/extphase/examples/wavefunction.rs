//! Grid evolution of a Gaussian packet under the invariant and under the
//! shifted invariant, related by the boundary-term phase.

use extphase::core::{HamiltonianSpec, ScalarFn};
use extphase::propagator::{evolve_wavefunction, phase_map, GridSpec, GridSystem, WaveFunction};
use extphase::transform::{new_potential, solve_coefficients, CoefficientInit};

fn main() -> extphase::Result<()> {
    let spec = HamiltonianSpec::oscillator("1+0.5*sin(0.3*t)")?;
    // nonzero A'(0) so the boundary term is not trivial
    let init = CoefficientInit { adot0: 0.3, ..CoefficientInit::unit(1.0) };
    let tf = solve_coefficients(&spec, &init, ScalarFn::zero(), (0.0, 1.0), 1e-11)?;
    let inv = new_potential(&tf, &spec)?;

    let grid = GridSpec::new(-8.0, 8.0, 256, 1, 1.0)?;
    let psi = WaveFunction::gaussian(grid, 1.0, 0.7, 0.0)?;
    let plain = evolve_wavefunction(GridSystem::Invariant(&inv), &psi, 0.0, 1.0, 1000)?;
    let shifted = evolve_wavefunction(GridSystem::Shifted { inv: &inv, tf: &tf }, &phase_map(&tf, &psi, 0.0)?, 0.0, 1.0, 1000)?;
    let mapped = phase_map(&tf, &plain, 1.0)?;
    println!("norms: {:.15} {:.15}", plain.norm(), shifted.norm());
    println!("|| shifted - phase_map(plain) || = {:.3e}", shifted.l2_distance(&mapped)?);
    let (mean, var) = plain.moments();
    println!("<Q> = {mean:.6}, var Q = {var:.6}");
    Ok(())
}

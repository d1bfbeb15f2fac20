//! Direct time-sliced kernel of a driven oscillator against the kernel of its
//! Lewis invariant carried back to q by the measure and boundary phase.

use std::time::Instant;

use extphase::core::{HamiltonianSpec, ScalarFn};
use extphase::propagator::{direct_kernel_mapped, factorized_kernel, GridSpec};
use extphase::transform::{new_potential, solve_coefficients, CoefficientInit};

fn main() -> extphase::Result<()> {
    let spec = HamiltonianSpec::oscillator("1+0.5*sin(0.3*t)")?;
    let tf = solve_coefficients(&spec, &CoefficientInit::unit(1.0), ScalarFn::zero(), (0.0, 1.0), 1e-11)?;
    let inv = new_potential(&tf, &spec)?;
    println!("{:>8} {:>14} {:>10}", "slices", "rel_l2", "secs");
    for n in [64, 128, 256, 512] {
        let start = Instant::now();
        let grid = GridSpec::new(-0.6, 0.6, 256, n, 1.0)?;
        let direct = direct_kernel_mapped(&spec, &tf, &grid, 0.0, 1.0)?;
        let fact = factorized_kernel(&tf, &inv, &grid, 0.0, 1.0)?;
        let err = fact.rel_l2_interior(&direct)?;
        println!("{n:>8} {err:>14.6e} {:>10.2}", start.elapsed().as_secs_f64());
    }
    Ok(())
}

//! Time-sliced kernels: slice refinement for a free particle, the composition
//! property, and the extended construction under two gauges.

use extphase::core::{HamiltonianSpec, ScalarFn};
use extphase::dynamics::GaugeSpec;
use extphase::propagator::{compose_kernel, extended_kernel, GridSpec, Kernel, SlicedPropagator, WaveFunction};

fn main() -> extphase::Result<()> {
    // slice refinement on probe states; the box is as wide as 64 slices allow without aliasing
    let free = HamiltonianSpec::free(1.0);
    let n = 2048;
    let half = 0.45 * (2.0 * std::f64::consts::PI * (n - 1) as f64 / 64.0).sqrt();
    let grid = GridSpec::new(-half, half, n, 64, 1.0)?;
    let one = SlicedPropagator::new(&free, &grid.with_slices(1)?, 0.0, 1.0)?;
    let many = SlicedPropagator::new(&free, &grid, 0.0, 1.0)?;
    for c in [0.0, 0.4] {
        let probe = WaveFunction::gaussian(grid, c, std::f64::consts::FRAC_1_SQRT_2, 0.0)?;
        let (a, b) = (one.apply(&probe)?, many.apply(&probe)?);
        println!("free particle, probe at {c}: 1 vs 64 slices rel L2 {:.2e}", a.l2_distance(&b)? / b.norm().sqrt());
    }

    let spec = HamiltonianSpec::oscillator("1+0.5*sin(0.3*t)")?;
    let grid = GridSpec::new(-0.6, 0.6, 128, 64, 1.0)?;
    let full = compose_kernel(&spec, &grid, 0.0, 1.0)?;
    let halves = compose_kernel(&spec, &grid.with_slices(32)?, 0.0, 0.5)?.then(&compose_kernel(&spec, &grid.with_slices(32)?, 0.5, 1.0)?)?;
    println!("composition 0->0.5->1 vs 0->1: rel L2 {:.2e}", halves.rel_l2_interior(&full)?);

    for (name, g, tau_f) in [("linear", "tau/2", 2.0), ("quadratic", "0.5*tau+0.5*tau^2", 1.0)] {
        let gauge = GaugeSpec::time_function(ScalarFn::parse(g, "tau")?, 0.0, tau_f)?;
        let ext = extended_kernel(&spec, &grid, &gauge, 0.0, tau_f)?;
        println!("extended kernel, {name} gauge: rel L2 to direct {:.2e}", ext.rel_l2_interior(&full)?);
    }

    let mut bytes = Vec::new();
    full.write_krnl1(&mut bytes)?;
    let back = Kernel::read_krnl1(bytes.as_slice())?;
    println!("KRNL1: {} bytes, round trip exact: {}", bytes.len(), back.matrix == full.matrix);
    Ok(())
}

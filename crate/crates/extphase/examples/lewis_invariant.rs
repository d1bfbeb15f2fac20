//! Auxiliary equation and Lewis invariant along a driven oscillator.

use extphase::core::{HamiltonianSpec, ReducedState, ScalarFn};
use extphase::dynamics::integrate_reduced;
use extphase::ermakov::{adiabatic_seed, invariant_drift, invariant_series, solve_ermakov};

fn main() -> extphase::Result<()> {
    let omega2 = ScalarFn::parse("1+0.5*sin(0.3*t)", "t")?;
    let spec = HamiltonianSpec::oscillator("1+0.5*sin(0.3*t)")?;
    let (rho0, rhodot0) = adiabatic_seed(&omega2, 0.0)?;
    let sol = solve_ermakov(&omega2, rho0, rhodot0, (0.0, 50.0), 1e-11)?;
    let worst = sol.residuals().into_iter().fold(0.0f64, f64::max);
    println!("rho0 = {rho0}, max auxiliary residual {worst:.2e}");

    for tol in [1e-7, 1e-9, 1e-11] {
        let traj = integrate_reduced(&spec, ReducedState::new(1.0, 0.0, 0.0), 50.0, tol)?;
        println!("tol {tol:.0e}: max relative drift of I = {:.3e}", invariant_drift(&traj, &sol)?);
    }

    let traj = integrate_reduced(&spec, ReducedState::new(1.0, 0.0, 0.0), 50.0, 1e-10)?;
    let energy = &traj.diagnostics["H"];
    let inv = invariant_series(&traj, &sol)?;
    println!("{:>6} {:>12} {:>12}", "t", "H", "I");
    for k in (0..traj.len()).step_by(traj.len() / 8) {
        println!("{:>6.2} {:>12.8} {:>12.8}", traj.param[k], energy[k], inv[k]);
    }
    Ok(())
}

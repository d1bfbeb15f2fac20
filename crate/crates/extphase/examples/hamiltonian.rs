//! Energy, primary constraint and energy rate for a mass that grows in time.

use extphase::core::{energy_rate, eval_constraint, eval_hamiltonian, ExtendedState, HamiltonianSpec, ReducedState};

fn main() -> extphase::Result<()> {
    let spec = HamiltonianSpec::from_exprs("1+t", "0.5*q^2", true)?;
    let s = ReducedState::new(1.0, 2.0, 1.0);
    let h = eval_hamiltonian(&spec, &s)?;
    println!("H(q=1, p=2, t=1)      = {h}");
    println!("dH/dt                 = {}", energy_rate(&spec, &s)?);

    // p_t = -H puts the extended state on the constraint surface
    let on = ExtendedState::on_shell(&spec, s, 0.0)?;
    println!("phi on shell          = {:e}", eval_constraint(&spec, &on)?);
    let off = ExtendedState { p_t: on.p_t + 0.25, ..on };
    println!("phi with p_t + 0.25   = {}", eval_constraint(&spec, &off)?);
    Ok(())
}

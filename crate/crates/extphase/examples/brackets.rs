//! Poisson and Dirac brackets in the extended phase space, and the singular
//! velocity Hessian that makes the time reparametrization a gauge freedom.

use extphase::core::{ExtendedState, HamiltonianSpec, ReducedState};
use extphase::dynamics::{dirac_brackets_old, hessian_rank_check, poisson_bracket};

fn main() -> extphase::Result<()> {
    let spec = HamiltonianSpec::oscillator("1")?;
    let s = ExtendedState::on_shell(&spec, ReducedState::new(2.0, 3.0, 0.5), 0.0)?;

    let q = |x: &[f64; 4]| Ok(x[0]);
    let p = |x: &[f64; 4]| Ok(x[2]);
    println!("{{q, p}}_PB        = {:.9}", poisson_bracket(&q, &p, &s.coords())?);

    let db = dirac_brackets_old(&spec, &s)?;
    for (a, b, closed) in [("q", "p", 1.0), ("q", "p_t", -s.p), ("p", "p_t", s.q), ("t", "p_t", 0.0)] {
        let v = db.get(a, b).unwrap_or(f64::NAN);
        println!("{{{a}, {b}}}_DB = {v:+.9}   expected {closed:+}");
    }
    println!("antisymmetry defect {:.1e}", db.antisymmetry_defect());
    println!("det Hessian at (q', t') = (3, 2): {:.2e}", hessian_rank_check(&spec, 3.0, 2.0, &s)?);
    Ok(())
}

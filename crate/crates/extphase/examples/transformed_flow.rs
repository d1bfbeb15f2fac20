//! The constrained flow in the new variables: the Lewis invariant becomes an
//! autonomous Hamiltonian, P_T stays put, and I is a gauge-invariant observable.

use extphase::core::{HamiltonianSpec, ScalarFn};
use extphase::dynamics::{FlowOptions, GaugeSpec, Sampling};
use extphase::transform::{
    integrate_transformed, inverse_map, invariant_I, new_potential, on_shell_new, p_t_rate_along, solve_coefficients_until,
    CoefficientInit,
};

fn main() -> extphase::Result<()> {
    let spec = HamiltonianSpec::oscillator("1+0.5*sin(0.3*t)")?;
    let tf = solve_coefficients_until(&spec, &CoefficientInit::unit(1.0), ScalarFn::zero(), 20.0, 1e-11)?;
    let inv = new_potential(&tf, &spec)?;
    println!("Vbar(Q) at Q = 1: {:.12} (expected 0.5)", inv.vbar.eval(1.0));

    // start from q = 1, p = 0 at t = 0, mapped into (Q, T, P, P_T)
    let [qn, tn, pn, _] = inverse_map(&tf, [1.0, 0.0, 0.0, 0.0])?;
    let init = on_shell_new(&tf, &spec, qn, tn, pn, 0.0)?;
    for lambda in ["1", "1+tau^2"] {
        let probe = GaugeSpec::multiplier(ScalarFn::parse(lambda, "tau")?, 0.0, 1.0, 0.0)?;
        let tau_end = probe.tau_at(20.0)?;
        let gauge = GaugeSpec::multiplier(ScalarFn::parse(lambda, "tau")?, 0.0, tau_end, 0.0)?;
        let outs: Vec<f64> = (1..=500).map(|k| tau_end * k as f64 / 500.0).collect();
        let tr = integrate_transformed(&tf, &spec, &inv, &gauge, init, tau_end, FlowOptions::default(), Sampling::At(outs))?;
        let i = &tr.diagnostics["I"];
        let drift = i.iter().map(|v| (v - i[0]).abs()).fold(0.0, f64::max);
        let last = tr.last_extended();
        println!(
            "lambda={lambda:<8} I = {:.12}  drift {drift:.1e}  |dP_T/dT| {:.1e}  I at end {:.12}",
            i[0],
            p_t_rate_along(&tf, &spec, &tr)?,
            invariant_I(&inv, last.q, last.p)
        );
    }
    Ok(())
}

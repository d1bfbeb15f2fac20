//! One driven oscillator integrated three ways: in t, and in the extended
//! phase space under two multiplier gauges. The physical curves coincide.

use extphase::core::{ExtendedState, HamiltonianSpec, ReducedState, ScalarFn};
use extphase::dynamics::{integrate_extended, integrate_reduced, GaugeSpec};

fn main() -> extphase::Result<()> {
    let spec = HamiltonianSpec::oscillator("1+0.5*sin(0.3*t)")?;
    let init = ReducedState::new(1.0, 0.0, 0.0);
    let t_end = 10.0;
    let reduced = integrate_reduced(&spec, init, t_end, 1e-10)?;
    let end = reduced.last_reduced();
    println!("reduced        q = {:+.12} p = {:+.12}", end.q, end.p);

    let start = ExtendedState::on_shell(&spec, init, 0.0)?;
    for lambda in ["1", "1+tau^2"] {
        let probe = GaugeSpec::multiplier(ScalarFn::parse(lambda, "tau")?, 0.0, 1.0, 0.0)?;
        let tau_end = probe.tau_at(t_end)?;
        let gauge = GaugeSpec::multiplier(ScalarFn::parse(lambda, "tau")?, 0.0, tau_end, 0.0)?;
        let ext = integrate_extended(&spec, &gauge, start, tau_end, 1e-10)?;
        let e = ext.last_extended();
        let phi = ext.diagnostics["phi"].iter().fold(0.0f64, |a, v| a.max(v.abs()));
        println!("lambda={lambda:<8} q = {:+.12} p = {:+.12} t = {:.12} max|phi| = {phi:.1e}", e.q, e.p, e.t);
    }
    Ok(())
}

mod common;

use std::f64::consts::PI;

use approx::assert_abs_diff_eq;
use extphase::core::{energy_rate, eval_constraint, eval_hamiltonian, ExtendedState, HamiltonianSpec, ReducedState};
use extphase::dynamics::{
    dirac_brackets_old, hessian_rank_check, integrate_extended, integrate_reduced, integrate_reduced_sampled,
    poisson_bracket, GaugeSpec, Sampling,
};
use extphase::Result;

use common::{quadratic_gauge, rk4, td_omega2, td_spec};

const TOL: f64 = 1e-9;

fn osc() -> HamiltonianSpec {
    HamiltonianSpec::from_exprs("1", "0.5*q^2", true).unwrap()
}

#[test]
fn hamiltonian_values() {
    let h = |spec: &HamiltonianSpec, q, p, t| eval_hamiltonian(spec, &ReducedState::new(q, p, t)).unwrap();
    assert_abs_diff_eq!(h(&HamiltonianSpec::free(1.0), 0.0, 2.0, 0.0), 2.0, epsilon = 1e-15);
    assert_abs_diff_eq!(h(&osc(), 1.0, 0.0, 5.0), 0.5, epsilon = 1e-15);

    let ramp = HamiltonianSpec::from_exprs("1+t", "0.5*q^2", true).unwrap();
    let by_hand = |q: f64, p: f64, t: f64| p * p / (2.0 * (1.0 + t)) + 0.5 * q * q;
    assert_abs_diff_eq!(h(&ramp, 1.0, 2.0, 1.0), 1.5, epsilon = 1e-14);
    for (q, p, t) in [(0.3, -1.2, 0.0), (2.0, 0.5, 3.5), (-1.0, 4.0, 0.25)] {
        assert_abs_diff_eq!(h(&ramp, q, p, t), by_hand(q, p, t), epsilon = 1e-13);
    }
}

#[test]
fn constraint_values() {
    let phi = |spec: &HamiltonianSpec, q, t, p, pt| eval_constraint(spec, &ExtendedState::new(q, t, p, pt, 0.0)).unwrap();
    let free = HamiltonianSpec::free(1.0);
    assert_abs_diff_eq!(phi(&free, 0.0, 0.0, 2.0, -2.0), 0.0, epsilon = 1e-15);
    assert_abs_diff_eq!(phi(&free, 0.0, 0.0, 2.0, 0.0), 2.0, epsilon = 1e-15);
    assert_abs_diff_eq!(phi(&osc(), 1.0, 0.0, 1.0, -1.0), 0.0, epsilon = 1e-15);
}

#[test]
fn energy_rate_values() {
    let rate = |spec: &HamiltonianSpec, q, p, t| energy_rate(spec, &ReducedState::new(q, p, t)).unwrap();
    assert_abs_diff_eq!(rate(&osc(), 0.7, -0.3, 2.0), 0.0, epsilon = 1e-12);
    let stiff = HamiltonianSpec::from_exprs("1", "0.5*(1+t)*q^2", true).unwrap();
    assert_abs_diff_eq!(rate(&stiff, 1.0, 0.0, 0.0), 0.5, epsilon = 1e-10);

    // for V = 0 the flow keeps p and moves q; differentiate H along it
    let exp_mass = HamiltonianSpec::from_exprs("exp(t)", "0", true).unwrap();
    let along = |t: f64| eval_hamiltonian(&exp_mass, &ReducedState::new(t, 1.0, t)).unwrap();
    let h = 1e-4;
    let fd = (along(h) - along(-h)) / (2.0 * h);
    let r = rate(&exp_mass, 0.0, 1.0, 0.0);
    assert_abs_diff_eq!(r, -0.5, epsilon = 1e-10);
    assert_abs_diff_eq!(r, fd, epsilon = 1e-7);
}

#[test]
fn reduced_free_flight_and_half_period() {
    let free = integrate_reduced(&HamiltonianSpec::free(1.0), ReducedState::new(0.0, 1.0, 0.0), 2.0, TOL).unwrap();
    let end = free.last_reduced();
    assert_abs_diff_eq!(end.q, 2.0, epsilon = 10.0 * TOL);
    assert_abs_diff_eq!(end.p, 1.0, epsilon = 10.0 * TOL);
    assert_abs_diff_eq!(end.t, 2.0, epsilon = 1e-14);

    let half = integrate_reduced(&osc(), ReducedState::new(1.0, 0.0, 0.0), PI, TOL).unwrap().last_reduced();
    assert_abs_diff_eq!(half.q, -1.0, epsilon = 10.0 * TOL);
    assert_abs_diff_eq!(half.p, 0.0, epsilon = 10.0 * TOL);
}

#[test]
fn reduced_td_oscillator_matches_rk4() {
    let tr = integrate_reduced(&td_spec(), ReducedState::new(1.0, 0.0, 0.0), 10.0, TOL).unwrap();
    let end = tr.last_reduced();
    let oracle = rk4(|t, y: &[f64; 2]| [y[1], -td_omega2(t) * y[0]], 0.0, [1.0, 0.0], 10.0, 1e-5);
    assert_abs_diff_eq!(end.q, oracle[0], epsilon = 10.0 * TOL);
    assert_abs_diff_eq!(end.p, oracle[1], epsilon = 10.0 * TOL);
}

#[test]
fn extended_unit_and_doubled_multiplier() {
    let free = HamiltonianSpec::free(1.0);
    let init = ExtendedState::new(0.0, 0.0, 1.0, -0.5, 0.0);
    let unit = integrate_extended(&free, &GaugeSpec::constant(0.0, 1.0, 0.0, 1.0).unwrap(), init, 1.0, TOL).unwrap();
    let a = unit.last_extended();
    for (got, want) in [(a.t, 1.0), (a.q, 1.0), (a.p, 1.0), (a.p_t, -0.5)] {
        assert_abs_diff_eq!(got, want, epsilon = 10.0 * TOL);
    }
    assert!(unit.diagnostics["phi"].iter().all(|v| v.abs() < 1e-12));

    let fast = integrate_extended(&free, &GaugeSpec::constant(0.0, 0.5, 0.0, 1.0).unwrap(), init, 0.5, TOL).unwrap();
    let b = fast.last_extended();
    for (x, y) in [(a.q, b.q), (a.t, b.t), (a.p, b.p), (a.p_t, b.p_t)] {
        assert_abs_diff_eq!(x, y, epsilon = 10.0 * TOL);
    }
}

#[test]
fn extended_projection_matches_reduced() {
    let spec = osc();
    let gauge = quadratic_gauge(0.0, 6.0);
    let start = ReducedState::new(1.0, 0.3, 0.0);
    let init = ExtendedState::on_shell(&spec, start, 0.0).unwrap();
    let ext = integrate_extended(&spec, &gauge, init, gauge.tau2, TOL).unwrap();
    let proj = ext.projected();
    let ts: Vec<f64> = proj[1..].iter().map(|s| s.t).filter(|&t| t < 6.0 - 1e-9).collect();
    let red = integrate_reduced_sampled(&spec, start, 6.0, TOL, Sampling::At(ts.clone())).unwrap();
    let red = red.reduced().unwrap();
    assert!(ts.len() > 10);
    for (k, t) in ts.iter().enumerate() {
        let e = proj.iter().find(|s| s.t == *t).unwrap();
        let r = &red[k + 1];
        assert_abs_diff_eq!(r.t, *t, epsilon = 1e-14);
        assert_abs_diff_eq!(e.q, r.q, epsilon = 10.0 * TOL);
        assert_abs_diff_eq!(e.p, r.p, epsilon = 10.0 * TOL);
    }
}

#[test]
fn poisson_brackets_of_coordinates() {
    let coord = |i: usize| move |x: &[f64; 4]| -> Result<f64> { Ok(x[i]) };
    let x = [0.4, 1.3, -0.8, 2.1];
    // ordering (q̃, t̃, p, p_t̃)
    assert_abs_diff_eq!(poisson_bracket(&coord(0), &coord(2), &x).unwrap(), 1.0, epsilon = 1e-10);
    assert_abs_diff_eq!(poisson_bracket(&coord(1), &coord(3), &x).unwrap(), 1.0, epsilon = 1e-10);
    assert_abs_diff_eq!(poisson_bracket(&coord(0), &coord(3), &x).unwrap(), 0.0, epsilon = 1e-10);
}

#[test]
fn dirac_brackets_closed_forms() {
    let spec = osc();
    let s = ExtendedState::on_shell(&spec, ReducedState::new(0.5, 3.0, 1.0), 0.0).unwrap();
    let b = dirac_brackets_old(&spec, &s).unwrap();
    assert_abs_diff_eq!(b.get("q", "p").unwrap(), 1.0, epsilon = 1e-6);
    assert_abs_diff_eq!(b.get("q", "p_t").unwrap(), -3.0, epsilon = 1e-6);

    let s = ExtendedState::on_shell(&spec, ReducedState::new(2.0, -0.4, 0.0), 0.0).unwrap();
    let b = dirac_brackets_old(&spec, &s).unwrap();
    assert_abs_diff_eq!(b.get("p", "p_t").unwrap(), 2.0, epsilon = 1e-6);
    assert!(b.antisymmetry_defect() < 1e-9);
}

#[test]
fn velocity_hessian_is_singular() {
    // L = m a²/2b − V b has L_aa = m/b, L_ab = −ma/b², L_bb = ma²/b³
    let exact = |m: f64, a: f64, b: f64| (m / b) * (m * a * a / b.powi(3)) - (m * a / (b * b)).powi(2);
    let cases = [
        (HamiltonianSpec::free(1.0), 1.0, 1.0, ExtendedState::new(0.0, 0.0, 0.0, 0.0, 0.0), 1.0),
        (HamiltonianSpec::from_exprs("2", "0.5*q^2", true).unwrap(), 3.0, 2.0, ExtendedState::new(0.7, 0.0, 0.0, 0.0, 0.0), 2.0),
        (HamiltonianSpec::from_exprs("1+t", "0", true).unwrap(), 1.0, 0.5, ExtendedState::new(0.0, 1.0, 0.0, 0.0, 0.0), 2.0),
    ];
    for (spec, a, b, s, m) in cases {
        assert_abs_diff_eq!(exact(m, a, b), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(hessian_rank_check(&spec, a, b, &s).unwrap(), 0.0, epsilon = 1e-6);
    }
}

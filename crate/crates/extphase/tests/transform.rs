mod common;

use approx::assert_abs_diff_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use extphase::core::{eval_constraint, ExtendedState, HamiltonianSpec, ReducedState, ScalarFn};
use extphase::dynamics::{dirac_brackets_old, integrate_reduced, integrate_extended_sampled, FlowOptions, GaugeSpec, Sampling};
use extphase::ermakov::{lewis_invariant, solve_ermakov};
use extphase::transform::{
    boundary_term, boundary_term_derivs, constraint_new, dirac_brackets_new, forward_map, gauge_variation_F,
    generating_F3, integrate_invariant_flow, integrate_tilde_flow, integrate_transformed, invariant_I, inverse_map,
    jacobian, jacobian_analytic, new_potential, new_potential_at, on_shell_new, solve_coefficients,
    solve_coefficients_until, symplectic_residual, tilde_hamiltonian, CoefficientInit, InvariantSpec, Jacobian4,
    TransformSpec, SEP_TOL,
};

use common::{quadratic_gauge, td_spec, td_transform, TD_OMEGA2};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn osc() -> HamiltonianSpec {
    HamiltonianSpec::oscillator("1").unwrap()
}

fn random_point(r: &mut ChaCha8Rng, t_max: f64) -> [f64; 4] {
    [r.gen_range(-2.0..2.0), r.gen_range(0.0..t_max), r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0)]
}

fn scaling() -> TransformSpec {
    TransformSpec::constant(2.0, 4.0, 0.0, ScalarFn::zero(), 1.0, 0.5).unwrap()
}

#[test]
fn coefficients_for_unit_and_constant_frequency() {
    let tf = solve_coefficients(&osc(), &CoefficientInit::unit(1.0), ScalarFn::zero(), (0.0, 10.0), 1e-10).unwrap();
    for t in [0.0, 2.5, 7.0, 10.0] {
        let c = tf.coeffs(t).unwrap();
        assert_abs_diff_eq!(c.a, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(c.b, t, epsilon = 1e-9);
    }

    let w0 = 3.0_f64;
    let spec = HamiltonianSpec::oscillator("9").unwrap();
    let tf = solve_coefficients(&spec, &CoefficientInit::unit(w0.powf(-0.5)), ScalarFn::zero(), (0.0, 6.0), 1e-10).unwrap();
    for t in [0.0, 1.0, 3.3, 6.0] {
        let c = tf.coeffs(t).unwrap();
        assert_abs_diff_eq!(c.a, w0.powf(-0.5), epsilon = 1e-9);
        assert_abs_diff_eq!(c.b, t / w0, epsilon = 1e-9);
    }
}

#[test]
fn td_coefficients_follow_the_auxiliary_solution() {
    let tol = 1e-10;
    let spec = td_spec();
    let tf = solve_coefficients_until(&spec, &CoefficientInit::unit(1.0), ScalarFn::zero(), 50.0, tol).unwrap();
    let sol = solve_ermakov(&ScalarFn::parse(TD_OMEGA2, "t").unwrap(), 1.0, 0.0, (0.0, 50.0), 1e-12).unwrap();
    let t_end = tf.b_inverse(50.0).unwrap();
    for k in 0..=400 {
        let c = tf.coeffs(t_end * k as f64 / 400.0).unwrap();
        assert_abs_diff_eq!(c.a, sol.at(c.b.min(50.0)).0, epsilon = 10.0 * tol);
    }
}

#[test]
fn non_quadratic_potentials_are_refused() {
    let spec = HamiltonianSpec::from_exprs("1", "q^4", false).unwrap();
    let err = solve_coefficients(&spec, &CoefficientInit::unit(1.0), ScalarFn::zero(), (0.0, 1.0), 1e-9).unwrap_err();
    assert!(matches!(err, extphase::Error::Separability(_)), "{err}");
}

#[test]
fn forward_map_examples() {
    let x = [0.3, 1.1, -0.7, 2.0];
    assert_eq!(forward_map(&TransformSpec::identity(), x).unwrap(), x);
    let y = forward_map(&scaling(), [1.0, 0.0, 1.0, 0.0]).unwrap();
    for (got, want) in y.iter().zip([2.0, 0.0, 0.5, 0.0]) {
        assert_abs_diff_eq!(*got, want, epsilon = 1e-15);
    }
}

#[test]
fn td_inverse_recovers_points() {
    let (_, tf, _) = td_transform(20.0);
    let (lo, hi) = tf.domain;
    let mut r = rng(11);
    for _ in 0..50 {
        let x = random_point(&mut r, hi);
        let y = forward_map(&tf, x).unwrap();
        // T from bisection on B, then the remaining entries in closed form
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if tf.coeffs(mid).unwrap().b < y[1] {
                a = mid;
            } else {
                b = mid;
            }
        }
        let t = 0.5 * (a + b);
        let c = tf.coeffs(t).unwrap();
        let q = y[0] / c.a;
        let p = c.a * y[2] - tf.m0 * c.ad / c.a * q;
        let gd = c.add / c.a - (c.ad / c.a).powi(2);
        let pt = c.bd * y[3] + c.ad * q * y[2] - 0.5 * tf.m0 * q * q * gd;
        let inv = inverse_map(&tf, y).unwrap();
        for (k, v) in [q, t, p, pt].into_iter().enumerate() {
            assert_abs_diff_eq!(v, x[k], epsilon = 1e-10 * (1.0 + x[k].abs()));
            assert_abs_diff_eq!(inv[k], x[k], epsilon = 1e-10 * (1.0 + x[k].abs()));
        }
    }
}

#[test]
fn jacobian_examples() {
    let id = jacobian(&TransformSpec::identity(), [0.4, 0.2, -1.0, 0.5]).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            assert_abs_diff_eq!(id.m[i][j], if i == j { 1.0 } else { 0.0 }, epsilon = 1e-9);
        }
    }
    let s = jacobian(&scaling(), [1.3, -0.4, 0.2, 2.0]).unwrap();
    let diag = [2.0, 4.0, 0.5, 0.25];
    for i in 0..4 {
        for j in 0..4 {
            assert_abs_diff_eq!(s.m[i][j], if i == j { diag[i] } else { 0.0 }, epsilon = 1e-9);
        }
    }
}

/// Partials of the forward map written from q̃ = ÃQ, t̃ = B, p = (P + m₀ΓQ)/Ã,
/// p_t̃ = (P_T − ȦQp + m₀Q²Γ̇/2)/Ḃ with κ ≡ 0.
fn oracle_jacobian(tf: &TransformSpec, x: [f64; 4]) -> [[f64; 4]; 4] {
    let [q, t, pn, ptn] = x;
    let c = tf.coeffs(t).unwrap();
    let m0 = tf.m0;
    let (a, ad, add, addd) = (c.a, c.ad, c.add, c.addd);
    let g = ad / a;
    let gd = (add * a - ad * ad) / (a * a);
    let gdd = (addd * a - ad * add) / (a * a) - 2.0 * ad * (add * a - ad * ad) / a.powi(3);
    let p = (pn + m0 * g * q) / a;
    let dp_dq = m0 * g / a;
    let dp_dt = m0 * gd * q / a - p * ad / a;
    let num = ptn - ad * q * p + 0.5 * m0 * q * q * gd;
    [
        [a, ad * q, 0.0, 0.0],
        [0.0, c.bd, 0.0, 0.0],
        [dp_dq, dp_dt, 1.0 / a, 0.0],
        [
            (-ad * p - ad * q * dp_dq + m0 * q * gd) / c.bd,
            (-add * q * p - ad * q * dp_dt + 0.5 * m0 * q * q * gdd) / c.bd - num * c.bdd / (c.bd * c.bd),
            -ad * q / (a * c.bd),
            1.0 / c.bd,
        ],
    ]
}

#[test]
fn td_jacobian_matches_closed_form() {
    let (_, tf, _) = td_transform(20.0);
    let mut r = rng(12);
    for _ in 0..100 {
        let x = random_point(&mut r, tf.domain.1);
        let want = oracle_jacobian(&tf, x);
        let fd = jacobian(&tf, x).unwrap();
        let an = jacobian_analytic(&tf, x).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let scale = 1.0 + want[i][j].abs();
                assert!((fd.m[i][j] - want[i][j]).abs() < 1e-6 * scale, "fd ({i},{j}) at {x:?}");
                assert!((an.m[i][j] - want[i][j]).abs() < 1e-10 * scale, "analytic ({i},{j}) at {x:?}");
            }
        }
    }
}

#[test]
fn symplectic_residual_examples() {
    let mut m = [[0.0; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    assert_eq!(symplectic_residual(&Jacobian4 { m, base: [0.0; 4] }), 0.0);
    m[2][2] = 2.0;
    assert_abs_diff_eq!(symplectic_residual(&Jacobian4 { m, base: [0.0; 4] }), 1.0, epsilon = 1e-15);

    let (_, tf, _) = td_transform(20.0);
    let mut r = rng(13);
    for _ in 0..100 {
        let x = random_point(&mut r, tf.domain.1);
        assert!(symplectic_residual(&jacobian(&tf, x).unwrap()) < 1e-9);
    }
}

#[test]
fn new_potential_examples() {
    let inv = new_potential(&TransformSpec::identity(), &osc()).unwrap();
    for q in [-1.5, 0.0, 0.4, 2.0] {
        assert_abs_diff_eq!(inv.vbar.eval(q), 0.5 * q * q, epsilon = 1e-12);
    }

    let spec = HamiltonianSpec::oscillator("4").unwrap();
    let tf = TransformSpec::constant(0.5f64.sqrt(), 0.5, 0.0, ScalarFn::zero(), 1.0, 0.5).unwrap();
    let inv = new_potential(&tf, &spec).unwrap();
    for q in [-1.5, 0.0, 0.4, 2.0] {
        assert_abs_diff_eq!(inv.vbar.eval(q), tf.h0 * q * q, epsilon = 1e-12);
    }

    let (spec, tf, _) = td_transform(30.0);
    let hi = tf.domain.1;
    for k in 0..20 {
        let t_ref = (hi - 1.0) * k as f64 / 19.0;
        let inv = new_potential_at(&tf, &spec, t_ref, 1.0, SEP_TOL).unwrap();
        for q in [-1.0, 0.3, 1.7] {
            assert_abs_diff_eq!(inv.vbar.eval(q), 0.5 * q * q, epsilon = SEP_TOL);
        }
    }
}

#[test]
fn invariant_values() {
    let plain = InvariantSpec { m0: 1.0, kappa: ScalarFn::zero(), vbar: ScalarFn::parse("0.5*Q^2", "Q").unwrap() };
    assert_abs_diff_eq!(invariant_I(&plain, 1.0, 1.0), 1.0, epsilon = 1e-15);
    let c = 0.7;
    let shifted = InvariantSpec { m0: 1.0, kappa: ScalarFn::constant(c), vbar: ScalarFn::parse("0.5*Q^2", "Q").unwrap() };
    assert_abs_diff_eq!(invariant_I(&shifted, 0.0, 2.0), 2.0 + 2.0 * c, epsilon = 1e-15);
}

#[test]
fn pulled_back_invariant_is_the_lewis_invariant() {
    let (spec, tf, inv) = td_transform(30.0);
    let traj = integrate_reduced(&spec, ReducedState::new(1.0, 0.0, 0.0), 30.0, 1e-10).unwrap();
    let sol = solve_ermakov(&ScalarFn::parse(TD_OMEGA2, "t").unwrap(), 1.0, 0.0, (0.0, 30.0), 1e-12).unwrap();
    let mut values = Vec::new();
    for s in traj.reduced().unwrap() {
        let y = inverse_map(&tf, ExtendedState::on_shell(&spec, *s, 0.0).unwrap().coords()).unwrap();
        let i = invariant_I(&inv, y[0], y[2]);
        let (rho, rhodot) = sol.at(s.t);
        assert_abs_diff_eq!(i, lewis_invariant(s.q, s.p, rho, rhodot).unwrap(), epsilon = 1e-8);
        values.push(i);
    }
    let spread = values.iter().map(|v| (v - values[0]).abs()).fold(0.0, f64::max);
    assert!(spread < 1e-7, "{spread:e}");
}

#[test]
fn boundary_term_examples() {
    assert_eq!(boundary_term(&scaling(), 1.3, 0.4).unwrap(), 0.0);
    let c = 0.8;
    let tf = TransformSpec::constant(2.0, 4.0, 0.0, ScalarFn::constant(c), 1.0, 0.5).unwrap();
    for q in [-1.0, 0.5, 2.0] {
        assert_abs_diff_eq!(boundary_term(&tf, q, 1.0).unwrap(), c * q, epsilon = 1e-12);
    }

    let (_, tf, _) = td_transform(20.0);
    for t_star in [0.7, 3.2, 9.5] {
        let c = tf.coeffs(t_star).unwrap();
        assert_abs_diff_eq!(boundary_term(&tf, 1.0, t_star).unwrap(), 0.5 * c.ad / c.a, epsilon = 1e-12);
        // Γ from a difference quotient of Ã, integrated over Q by Simpson's rule
        let h = 1e-5;
        let gamma = (tf.a.eval(t_star + h) - tf.a.eval(t_star - h)) / (2.0 * h) / tf.a.eval(t_star);
        let n = 200;
        let f = |q: f64| tf.m0 * gamma * q;
        let simpson: f64 = (0..n)
            .map(|k| {
                let (a, b) = (k as f64 / n as f64, (k + 1) as f64 / n as f64);
                (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
            })
            .sum();
        assert_abs_diff_eq!(boundary_term(&tf, 1.0, t_star).unwrap(), simpson, epsilon = 1e-8);
    }
}

#[test]
fn generating_function_examples() {
    assert_abs_diff_eq!(generating_F3(&TransformSpec::identity(), 1.0, 1.0, 1.0, 1.0).unwrap(), -2.0, epsilon = 1e-15);
    assert_abs_diff_eq!(generating_F3(&scaling(), 1.0, 0.0, 1.0, 1.0).unwrap(), -2.0, epsilon = 1e-15);
}

#[test]
fn generating_function_derivatives_are_the_new_momenta() {
    let spec = td_spec();
    let tf = solve_coefficients(&spec, &CoefficientInit::unit(1.0), ScalarFn::parse("0.3*cos(Q)", "Q").unwrap(), (0.0, 10.0), 1e-11)
        .unwrap();
    let mut r = rng(14);
    for _ in 0..30 {
        let x = random_point(&mut r, 9.5);
        let [_, _, p, pt] = forward_map(&tf, x).unwrap();
        let (q, t) = (x[0], x[1]);
        let h = 1e-5;
        let f3 = |q: f64, t: f64| generating_F3(&tf, p, pt, q, t).unwrap();
        let big_p = -(f3(q + h, t) - f3(q - h, t)) / (2.0 * h);
        let big_pt = -(f3(q, t + h) - f3(q, t - h)) / (2.0 * h);
        assert_abs_diff_eq!(big_p, x[2], epsilon = 1e-8 * (1.0 + x[2].abs()));
        assert_abs_diff_eq!(big_pt, x[3], epsilon = 1e-8 * (1.0 + x[3].abs()));
    }
}

#[test]
fn shifted_invariant_examples() {
    let inv = new_potential(&TransformSpec::identity(), &osc()).unwrap();
    for (q, p) in [(0.0, 1.0), (1.2, -0.3)] {
        assert_abs_diff_eq!(
            tilde_hamiltonian(&inv, &TransformSpec::identity(), q, p, 0.5).unwrap(),
            invariant_I(&inv, q, p),
            epsilon = 1e-15
        );
    }
    let c = 0.4;
    let tf = TransformSpec::constant(1.0, 1.0, 0.0, ScalarFn::constant(c), 1.0, 0.5).unwrap();
    let inv = new_potential(&tf, &osc()).unwrap();
    for (q, p) in [(0.0, 1.0), (1.2, -0.3)] {
        assert_abs_diff_eq!(tilde_hamiltonian(&inv, &tf, q, p, 0.5).unwrap(), invariant_I(&inv, q, p - c), epsilon = 1e-14);
    }
}

#[test]
fn invariant_and_shifted_flows_share_q() {
    let tol = 1e-10;
    let (_, tf, inv) = td_transform(20.0);
    let outputs: Vec<f64> = (1..=100).map(|k| 0.1 * k as f64).collect();
    let (q0, p0) = (0.8, -0.2);
    let plain = integrate_invariant_flow(&inv, [q0, p0], 0.0, &outputs, tol).unwrap();
    let shift = boundary_term_derivs(&tf, q0, 0.0).unwrap().f_q;
    let tilde = integrate_tilde_flow(&inv, &tf, [q0, p0 + shift], 0.0, &outputs, tol).unwrap();
    for ((a, b), &t) in plain.iter().zip(&tilde).zip(&outputs) {
        assert_abs_diff_eq!(a[0], b[0], epsilon = 10.0 * tol);
        let f_q = boundary_term_derivs(&tf, a[0], t).unwrap().f_q;
        assert_abs_diff_eq!(b[1], a[1] + f_q, epsilon = 10.0 * tol);
    }
}

#[test]
fn transformed_constraint_examples() {
    let id = TransformSpec::identity();
    let s = on_shell_new(&id, &osc(), 0.7, 0.3, -0.2, 0.0).unwrap();
    assert_abs_diff_eq!(constraint_new(&id, &osc(), s.coords()).unwrap(), 0.0, epsilon = 1e-15);

    let tf = scaling();
    let s = on_shell_new(&tf, &osc(), 0.7, 0.3, -0.2, 0.0).unwrap();
    let delta = 0.125;
    let mut x = s.coords();
    x[3] += delta;
    assert_abs_diff_eq!(constraint_new(&tf, &osc(), x).unwrap(), delta / 4.0, epsilon = 1e-14);

    let (spec, tf, _) = td_transform(20.0);
    let mut r = rng(15);
    for _ in 0..100 {
        let x = random_point(&mut r, tf.domain.1);
        let composed = eval_constraint(&spec, &ExtendedState::from_coords(forward_map(&tf, x).unwrap(), 0.0)).unwrap();
        let direct = constraint_new(&tf, &spec, x).unwrap();
        assert_abs_diff_eq!(direct, composed, epsilon = 1e-10 * (1.0 + composed.abs()));
    }
}

#[test]
fn transformed_dirac_brackets() {
    let spec = osc();
    let id = TransformSpec::identity();
    let s = on_shell_new(&id, &spec, 0.6, 0.2, 1.4, 0.0).unwrap();
    let new = dirac_brackets_new(&id, &spec, &s).unwrap();
    let old = dirac_brackets_old(&spec, &s).unwrap();
    let names = [("Q", "q"), ("T", "t"), ("P", "p"), ("P_T", "p_t")];
    for (a_new, a_old) in names {
        for (b_new, b_old) in names {
            assert_abs_diff_eq!(new.get(a_new, b_new).unwrap(), old.get(a_old, b_old).unwrap(), epsilon = 1e-8);
        }
    }

    let (spec, tf, _) = td_transform(20.0);
    let mut r = rng(16);
    for _ in 0..20 {
        let s = on_shell_new(&tf, &spec, r.gen_range(-2.0..2.0), r.gen_range(0.0..15.0), r.gen_range(-2.0..2.0), 0.0).unwrap();
        let b = dirac_brackets_new(&tf, &spec, &s).unwrap();
        assert_abs_diff_eq!(b.get("Q", "P").unwrap(), 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(b.get("T", "P_T").unwrap(), 0.0, epsilon = 1e-6);
    }
}

#[test]
fn reduced_brackets_are_not_preserved() {
    let (spec, tf, _) = td_transform(20.0);
    let s_old = ExtendedState::on_shell(&spec, ReducedState::new(1.2, 0.9, 4.0), 0.0).unwrap();
    let y = inverse_map(&tf, s_old.coords()).unwrap();
    let s_new = ExtendedState::from_coords(y, 0.0);
    let old = dirac_brackets_old(&spec, &s_old).unwrap().get("q", "p_t").unwrap();
    let new = dirac_brackets_new(&tf, &spec, &s_new).unwrap().get("Q", "P_T").unwrap();
    assert!((old - new).abs() > 1e-3, "{old} vs {new}");
}

#[test]
fn invariant_is_gauge_independent_along_extended_flows() {
    let (spec, tf, inv) = td_transform(20.0);
    let tol = 1e-10;
    let opts = FlowOptions { tol, ..Default::default() };
    let ts: Vec<f64> = (1..=200).map(|k| 0.1 * k as f64).collect();
    let mut series = Vec::new();
    for gauge in [GaugeSpec::constant(0.0, 1.0, 0.0, 20.0).unwrap(), quadratic_gauge(0.0, 20.0)] {
        let mut taus: Vec<f64> = ts.iter().map(|&t| gauge.tau_at(t).unwrap()).collect();
        *taus.last_mut().unwrap() = gauge.tau2;
        let init = ExtendedState::on_shell(&spec, ReducedState::new(1.0, 0.0, 0.0), 0.0).unwrap();
        let tr = integrate_extended_sampled(&spec, &gauge, init, gauge.tau2, opts, Sampling::At(taus)).unwrap();
        let vals: Vec<f64> = tr
            .extended()
            .unwrap()
            .iter()
            .map(|s| {
                let y = inverse_map(&tf, s.coords()).unwrap();
                invariant_I(&inv, y[0], y[2])
            })
            .collect();
        let spread = vals.iter().map(|v| (v - vals[0]).abs()).fold(0.0, f64::max);
        assert!(spread < 100.0 * tol, "{spread:e}");
        series.push(vals);
    }
    assert!(common::max_abs_diff(&series[0], &series[1]) < 100.0 * tol);
}

#[test]
fn gauge_variation_of_the_boundary_term() {
    let spec = osc();
    let opts = FlowOptions { tol: 1e-10, ..Default::default() };
    let taus: Vec<f64> = (1..=2000).map(|k| 1e-3 * k as f64).collect();
    let gauge = GaugeSpec::constant(0.0, 2.0, 0.0, 2.0).unwrap();
    for tf in [TransformSpec::identity(), scaling()] {
        let inv = new_potential(&tf, &spec).unwrap();
        let init = on_shell_new(&tf, &spec, 0.5, 0.0, 0.3, 0.0).unwrap();
        let tr = integrate_transformed(&tf, &spec, &inv, &gauge, init, 2.0, opts, Sampling::At(taus.clone())).unwrap();
        assert_eq!(gauge_variation_F(&tf, &spec, &gauge, &tr).unwrap(), 0.0);
    }

    let (spec, tf, inv) = td_transform(20.0);
    let init = on_shell_new(&tf, &spec, 0.5, 0.0, 0.3, 0.0).unwrap();
    let tr = integrate_transformed(&tf, &spec, &inv, &gauge, init, 2.0, opts, Sampling::At(taus)).unwrap();
    let r = gauge_variation_F(&tf, &spec, &gauge, &tr).unwrap();
    assert!(r < 1e-6, "{r:e}");
}

use proptest::prelude::*;

use extphase::core::{HamiltonianSpec, ReducedState, ScalarFn};
use extphase::dynamics::{integrate_reduced, GaugeSpec};
use extphase::ermakov::{invariant_drift, solve_ermakov};
use extphase::propagator::{
    compose_kernel, compose_kernel_at_times, evolve_wavefunction, extended_kernel, GridSpec, GridSystem, WaveFunction,
    COMPOSITION_TOL, GAUGE_TOL, NORM_TOL,
};
use extphase::transform::{forward_map, inverse_map, jacobian, solve_coefficients, symplectic_residual, CoefficientInit};

fn td(amp: f64, freq: f64) -> (String, HamiltonianSpec) {
    let w2 = format!("1+{amp}*sin({freq}*t)");
    let spec = HamiltonianSpec::oscillator(&w2).unwrap();
    (w2, spec)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn composition_over_a_split(split in 0.1f64..0.9, amp in 0.0f64..0.6) {
        let (_, spec) = td(amp, 0.3);
        let grid = GridSpec::new(-0.6, 0.6, 32, 8, 1.0).unwrap();
        let first = compose_kernel(&spec, &grid, 0.0, split).unwrap();
        let second = compose_kernel(&spec, &grid, split, 1.0).unwrap();
        let times: Vec<f64> = (0..=8).map(|j| split * j as f64 / 8.0)
            .chain((1..=8).map(|j| split + (1.0 - split) * j as f64 / 8.0))
            .collect();
        let whole = compose_kernel_at_times(&spec, &grid, &times).unwrap();
        prop_assert!(first.then(&second).unwrap().rel_l2_interior(&whole).unwrap() < COMPOSITION_TOL);
    }

    #[test]
    fn extended_kernel_is_gauge_independent(alpha in 0.2f64..1.0, beta in 0.2f64..1.0) {
        let (_, spec) = td(0.5, 0.3);
        let grid = GridSpec::new(-0.6, 0.6, 32, 16, 1.0).unwrap();
        let gauge = |a: f64| {
            let g = ScalarFn::parse(&format!("{a}*tau+{}*tau^2", 1.0 - a), "tau").unwrap();
            GaugeSpec::time_function(g, 0.0, 1.0).unwrap()
        };
        let k1 = extended_kernel(&spec, &grid, &gauge(alpha), 0.0, 1.0).unwrap();
        let k2 = extended_kernel(&spec, &grid, &gauge(beta), 0.0, 1.0).unwrap();
        prop_assert!(k1.rel_l2_columns(&k2, 0..32).unwrap() < GAUGE_TOL);
    }

    #[test]
    fn evolution_is_unitary(c in -1.0f64..1.0, sigma in 0.4f64..1.2, p0 in -1.0f64..1.0, amp in 0.0f64..0.6) {
        let (_, spec) = td(amp, 0.3);
        let grid = GridSpec::new(-8.0, 8.0, 256, 1, 1.0).unwrap();
        let psi = WaveFunction::gaussian(grid, c, sigma, p0).unwrap();
        let out = evolve_wavefunction(GridSystem::Direct(&spec), &psi, 0.0, 2.0, 400).unwrap();
        prop_assert!((out.norm() - psi.norm()).abs() < NORM_TOL);
    }

    #[test]
    fn solved_transforms_are_canonical(
        a0 in 0.6f64..1.4,
        ad0 in -0.3f64..0.3,
        amp in 0.0f64..0.6,
        x in prop::array::uniform4(-2.0f64..2.0),
    ) {
        let (_, spec) = td(amp, 0.3);
        let init = CoefficientInit { adot0: ad0, ..CoefficientInit::unit(a0) };
        let tf = solve_coefficients(&spec, &init, ScalarFn::zero(), (0.0, 4.0), 1e-11).unwrap();
        let point = [x[0], 2.0 + x[1], x[2], x[3]];
        prop_assert!(symplectic_residual(&jacobian(&tf, point).unwrap()) < 1e-9);
        let back = inverse_map(&tf, forward_map(&tf, point).unwrap()).unwrap();
        for k in 0..4 {
            prop_assert!((back[k] - point[k]).abs() < 1e-9 * (1.0 + point[k].abs()));
        }
    }

    #[test]
    fn lewis_invariant_is_conserved(
        amp in 0.0f64..0.6,
        freq in 0.1f64..1.0,
        q0 in -1.5f64..1.5,
        p0 in -1.5f64..1.5,
    ) {
        prop_assume!(q0.abs() + p0.abs() > 0.1);
        let (w2, spec) = td(amp, freq);
        let traj = integrate_reduced(&spec, ReducedState::new(q0, p0, 0.0), 20.0, 1e-10).unwrap();
        let sol = solve_ermakov(&ScalarFn::parse(&w2, "t").unwrap(), 1.0, 0.0, (0.0, 20.0), 1e-11).unwrap();
        let d = invariant_drift(&traj, &sol).unwrap();
        prop_assert!(d < 1e-7, "drift {d:e}");
    }
}

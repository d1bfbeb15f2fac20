use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::report::{CheckRecord, VerificationReport};
use super::Context;
use crate::core::{ExtendedState, ReducedState};
use crate::dynamics::{dirac_brackets_old, integrate_extended_sampled, FlowOptions, GaugeSpec, Sampling};
use crate::ermakov::{solve_ermakov, DRIFT_FLOOR};
use crate::error::{Error, Result};
use crate::propagator::{
    compose_kernel, direct_kernel_mapped, evolve_wavefunction, extended_kernel, factorized_kernel, measure_factor,
    phase_map, slice_momenta_new, slice_momenta_old, telescoping_defect, GridSpec, GridSystem, WaveFunction,
};
use crate::transform::{
    dirac_brackets_new, integrate_invariant_flow, integrate_transformed, invariant_I, inverse_map, jacobian,
    on_shell_new, p_t_rate_along, symplectic_residual, InvariantSpec, TransformSpec,
};

const RANDOM_POINTS: usize = 100;
const BRACKET_STATES: usize = 50;
const GAUGE_SAMPLES: usize = 500;
const FLOW_SAMPLES: usize = 1000;
const EXTENDED_GRID: usize = 128;

struct Shared<'a> {
    ctx: &'a Context,
    /// Transform, invariant and B⁻¹(t_f).
    xf: Option<&'a (TransformSpec, InvariantSpec, f64)>,
}

impl Shared<'_> {
    fn xf(&self) -> Result<(&TransformSpec, &InvariantSpec, f64)> {
        let (tf, inv, t_end) = self.xf.ok_or_else(|| Error::Capability("check needs the transform".into()))?;
        Ok((tf, inv, *t_end))
    }
}

type Measure = fn(&Shared) -> Result<Vec<f64>>;

struct Check {
    names: &'static [(&'static str, f64)],
    run: Measure,
    needs_transform: bool,
}

const CHECKS: &[Check] = &[
    Check { names: &[("lewis_drift", 1e-7)], run: lewis_drift, needs_transform: false },
    Check { names: &[("ermakov_correspondence", 1e-7)], run: ermakov_correspondence, needs_transform: true },
    Check { names: &[("symplectic", 1e-9)], run: symplectic, needs_transform: true },
    Check { names: &[("gauge_invariance_I", 1e-7)], run: gauge_invariance, needs_transform: true },
    Check {
        names: &[("autonomy_dPT_dT", 1e-7), ("transformed_invariant_drift", 1e-7)],
        run: autonomy,
        needs_transform: true,
    },
    Check { names: &[("extended_vs_direct", 1e-10)], run: extended_vs_direct, needs_transform: false },
    Check {
        names: &[("factorization", 1e-3), ("factorization_monotone", 0.5)],
        run: factorization,
        needs_transform: true,
    },
    Check {
        names: &[("phase_map", 1e-3), ("norm_invariant_evolution", 1e-10), ("norm_shifted_evolution", 1e-10)],
        run: phase_map_check,
        needs_transform: true,
    },
    Check { names: &[("telescoping", 1e-8)], run: telescoping, needs_transform: true },
    Check { names: &[("brackets_old", 1e-6)], run: brackets_old, needs_transform: false },
    Check { names: &[("brackets_new", 1e-6)], run: brackets_new, needs_transform: true },
    Check {
        names: &[("measure_residual", 1e-12), ("momenta_round_trip", 1e-10)],
        run: measure_and_momenta,
        needs_transform: true,
    },
];

/// Why a check cannot run for this Hamiltonian, if so.
fn not_applicable(ctx: &Context, name: &str) -> Option<String> {
    let m = ctx.constant_mass();
    match name {
        "lewis_drift" if m.is_none() || !ctx.spec.quadratic => Some("needs a constant mass and quadratic potential".into()),
        "ermakov_correspondence" if m != Some(ctx.sc.transform.m0) || ctx.sc.h0() != 0.5 * ctx.sc.transform.m0 => {
            Some("needs m = m0 constant and h0 = m0/2".into())
        }
        _ => None,
    }
}

/// Run every applicable check, concurrently, and collect them in a fixed order.
pub fn run_checks(ctx: &Context) -> Result<VerificationReport> {
    ctx.sc.grid()?;
    ctx.sc.wave_grid()?;
    let mut skipped = Vec::new();
    let transform = if ctx.spec.quadratic {
        Some(ctx.transform_and_invariant().and_then(|(tf, inv)| {
            let t_end = tf.b_inverse(ctx.sc.spans.t_f)?;
            Ok((tf, inv, t_end))
        }))
    } else {
        None
    };
    let mut todo = Vec::new();
    for c in CHECKS {
        if let Some(why) = not_applicable(ctx, c.names[0].0) {
            skipped.extend(c.names.iter().map(|(n, _)| (n.to_string(), why.clone())));
        } else if c.needs_transform && transform.is_none() {
            skipped.extend(c.names.iter().map(|(n, _)| (n.to_string(), "potential is not quadratic".to_string())));
        } else {
            todo.push(c);
        }
    }
    let records: Vec<Vec<CheckRecord>> = todo
        .par_iter()
        .map(|c| {
            let start = Instant::now();
            let res = match &transform {
                Some(Err(e)) if c.needs_transform => Err(e.clone()),
                Some(Ok(x)) => (c.run)(&Shared { ctx, xf: Some(x) }),
                _ => (c.run)(&Shared { ctx, xf: None }),
            };
            let ms = start.elapsed().as_millis() as u64;
            match res {
                Ok(vals) => c.names.iter().zip(vals).map(|((n, b), v)| CheckRecord::below(n, v, *b, ms)).collect(),
                Err(e) => c.names.iter().map(|(n, b)| CheckRecord::failed(n, *b, e.to_string(), ms)).collect(),
            }
        })
        .collect();
    Ok(VerificationReport::new(&ctx.sc.name, records.into_iter().flatten().collect(), skipped))
}

fn rng(ctx: &Context, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(ctx.seed);
    r.set_stream(stream);
    r
}

fn rel_drift(series: &[f64]) -> f64 {
    let i0 = series[0];
    series.iter().map(|v| (v - i0).abs()).fold(0.0, f64::max) / i0.abs().max(DRIFT_FLOOR)
}

/// Second gauge of the pairwise comparisons: the scenario's λ, or 1 + τ² when that is constant.
fn second_gauge(ctx: &Context, t1: f64, t2: f64) -> Result<GaugeSpec> {
    if ctx.sc.lambda()?.as_constant().is_some() {
        let mut sc = ctx.sc.clone();
        sc.gauge = "1+tau^2".into();
        return sc.gauge_until(t1, t2);
    }
    ctx.sc.gauge_until(t1, t2)
}

fn lewis_drift(s: &Shared) -> Result<Vec<f64>> {
    let (sol, m) = s.ctx.ermakov()?;
    let traj = s.ctx.trajectory()?;
    Ok(vec![rel_drift(&s.ctx.lewis_series(&traj, &sol, m)?)])
}

fn ermakov_correspondence(s: &Shared) -> Result<Vec<f64>> {
    let (tf, _, t_end) = s.xf()?;
    let (w2, _) = s.ctx.omega2()?;
    let t_i = s.ctx.sc.spans.t_i;
    let t_f = s.ctx.sc.spans.t_f;
    let (rho0, rhodot0) = tf.rho_at(t_i)?;
    let sol = solve_ermakov(&w2, rho0, rhodot0, (t_i, t_f), s.ctx.sc.aux_tol())?;
    let n = 2000;
    let mut worst = 0.0f64;
    for k in 0..=n {
        let c = tf.coeffs(t_end * k as f64 / n as f64)?;
        worst = worst.max((c.a - sol.at(c.b.clamp(t_i, t_f)).0).abs());
    }
    Ok(vec![worst])
}

fn symplectic(s: &Shared) -> Result<Vec<f64>> {
    let (tf, _, t_end) = s.xf()?;
    let mut r = rng(s.ctx, 1);
    let mut worst = 0.0f64;
    for _ in 0..RANDOM_POINTS {
        let x = [r.gen_range(-2.0..2.0), r.gen_range(0.0..t_end), r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0)];
        worst = worst.max(symplectic_residual(&jacobian(tf, x)?));
    }
    Ok(vec![worst])
}

/// I(Q, P) of each sample of an extended trajectory in the original variables.
fn invariant_along(s: &Shared, states: &[ExtendedState]) -> Result<Vec<f64>> {
    let (tf, inv, _) = s.xf()?;
    states
        .iter()
        .map(|st| {
            let y = inverse_map(tf, st.coords())?;
            Ok(invariant_I(inv, y[0], y[2]))
        })
        .collect()
}

fn gauge_invariance(s: &Shared) -> Result<Vec<f64>> {
    let sc = &s.ctx.sc;
    let (t_i, t_f) = (sc.spans.t_i, sc.spans.t_f);
    let opts = FlowOptions { tol: sc.tol(), constraint_tol: sc.constraint_tol() };
    let t_samples: Vec<f64> = (1..=GAUGE_SAMPLES).map(|k| t_i + (t_f - t_i) * k as f64 / GAUGE_SAMPLES as f64).collect();
    let mut series = Vec::new();
    for gauge in [GaugeSpec::constant(0.0, 1.0, t_i, t_f)?, second_gauge(s.ctx, t_i, t_f)?] {
        let mut taus = t_samples.iter().map(|&t| gauge.tau_at(t)).collect::<Result<Vec<_>>>()?;
        let tau_end = taus[taus.len() - 1].max(gauge.tau2);
        *taus.last_mut().unwrap() = tau_end;
        let init = ExtendedState::on_shell(&s.ctx.spec, sc.initial_state(), gauge.tau1)?;
        let tr = integrate_extended_sampled(&s.ctx.spec, &gauge, init, tau_end, opts, Sampling::At(taus))?;
        let states = tr.extended().ok_or_else(|| Error::Numerical("expected an extended trajectory".into()))?;
        series.push(invariant_along(s, &states[..=GAUGE_SAMPLES])?);
    }
    Ok(vec![series[0].iter().zip(&series[1]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)])
}

fn autonomy(s: &Shared) -> Result<Vec<f64>> {
    let (tf, inv, _) = s.xf()?;
    let sc = &s.ctx.sc;
    // λ drives the original time here, dT/dτ = λ/Ḃ
    let gauge = sc.gauge_until(sc.spans.t_i, sc.spans.t_f)?;
    let [q0, p0] = s.ctx.mapped_initial(tf)?;
    let init = on_shell_new(tf, &s.ctx.spec, q0, 0.0, p0, gauge.tau1)?;
    let taus: Vec<f64> =
        (1..=FLOW_SAMPLES).map(|k| gauge.tau1 + (gauge.tau2 - gauge.tau1) * k as f64 / FLOW_SAMPLES as f64).collect();
    let opts = FlowOptions { tol: sc.tol(), constraint_tol: sc.constraint_tol() };
    let tr = integrate_transformed(tf, &s.ctx.spec, inv, &gauge, init, gauge.tau2, opts, Sampling::At(taus))?;
    Ok(vec![p_t_rate_along(tf, &s.ctx.spec, &tr)?, rel_drift(&tr.diagnostics["I"])])
}

fn extended_vs_direct(s: &Shared) -> Result<Vec<f64>> {
    let sc = &s.ctx.sc;
    let grid = GridSpec::new(sc.grid.q_min, sc.grid.q_max, EXTENDED_GRID, EXTENDED_GRID, sc.hbar)?;
    let (t1, t2) = (sc.spans.t_i, sc.spans.t_i + sc.spans.kernel);
    let direct = compose_kernel(&s.ctx.spec, &grid, t1, t2)?;
    let mut worst = 0.0f64;
    for g in [GaugeSpec::linear(0.0, 1.0, t1, t2)?, second_gauge(s.ctx, t1, t2)?] {
        let e = extended_kernel(&s.ctx.spec, &grid, &g, g.tau1, g.tau2)?;
        worst = worst.max(e.rel_l2_columns(&direct, 0..grid.n_points)?);
    }
    Ok(vec![worst])
}

/// Relative L2 (interior columns) between the factorized and direct kernels over
/// T ∈ [0, kernel span] at each slice count.
pub fn factorization_errors(ctx: &Context, slices: &[usize]) -> Result<Vec<f64>> {
    let (tf, inv) = ctx.transform_and_invariant()?;
    factorization_errors_with(ctx, &tf, &inv, slices)
}

fn factorization_errors_with(ctx: &Context, tf: &TransformSpec, inv: &InvariantSpec, slices: &[usize]) -> Result<Vec<f64>> {
    let span = ctx.sc.spans.kernel;
    slices
        .iter()
        .map(|&n| {
            let grid = ctx.sc.grid()?.with_slices(n)?;
            let direct = direct_kernel_mapped(&ctx.spec, tf, &grid, 0.0, span)?;
            factorized_kernel(tf, inv, &grid, 0.0, span)?.rel_l2_interior(&direct)
        })
        .collect()
}

/// Factorization errors below this are at rounding level and count as converged.
pub const CONVERGED_FLOOR: f64 = 1e-10;

fn factorization(s: &Shared) -> Result<Vec<f64>> {
    let (tf, inv, _) = s.xf()?;
    let n = s.ctx.sc.grid.n_slices;
    let slices: Vec<usize> = [n / 8, n / 4, n / 2, n].into_iter().filter(|&k| k >= 1).collect();
    let errs = factorization_errors_with(s.ctx, tf, inv, &slices)?;
    let monotone = errs.windows(2).all(|w| w[1] < w[0] || w[0].max(w[1]) < CONVERGED_FLOOR);
    Ok(vec![errs[errs.len() - 1], if monotone { 0.0 } else { 1.0 }])
}

fn phase_map_check(s: &Shared) -> Result<Vec<f64>> {
    let (tf, inv, _) = s.xf()?;
    let w = s.ctx.sc.wavefunction;
    let span = s.ctx.sc.spans.kernel;
    let psi = WaveFunction::gaussian(s.ctx.sc.wave_grid()?, w.center, w.sigma, w.p0)?;
    let plain = evolve_wavefunction(GridSystem::Invariant(inv), &psi, 0.0, span, w.steps)?;
    let start = phase_map(tf, &psi, 0.0)?;
    let shifted = evolve_wavefunction(GridSystem::Shifted { inv, tf }, &start, 0.0, span, w.steps)?;
    let d = shifted.l2_distance(&phase_map(tf, &plain, span)?)?;
    Ok(vec![d, (plain.norm() - 1.0).abs(), (shifted.norm() - 1.0).abs()])
}

fn telescoping(s: &Shared) -> Result<Vec<f64>> {
    let (tf, inv, _) = s.xf()?;
    let n = s.ctx.sc.grid.n_slices;
    let span = s.ctx.sc.spans.kernel;
    let times: Vec<f64> = (0..=n).map(|j| span * j as f64 / n as f64).collect();
    let init = s.ctx.mapped_initial(tf)?;
    let path = integrate_invariant_flow(inv, init, 0.0, &times[1..], s.ctx.sc.aux_tol())?;
    let q: Vec<f64> = std::iter::once(init[0]).chain(path.iter().map(|y| y[0])).collect();
    Ok(vec![telescoping_defect(tf, &q, &times)?])
}

fn brackets_old(s: &Shared) -> Result<Vec<f64>> {
    let sc = &s.ctx.sc;
    let spec = &s.ctx.spec;
    let mut r = rng(s.ctx, 2);
    let mut worst = 0.0f64;
    for _ in 0..BRACKET_STATES {
        let red = ReducedState::new(r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0), r.gen_range(sc.spans.t_i..sc.spans.t_f));
        let st = ExtendedState::on_shell(spec, red, 0.0)?;
        let b = dirac_brackets_old(spec, &st)?;
        let get = |a: &str, c: &str| b.get(a, c).ok_or_else(|| Error::Numerical(format!("missing bracket {{{a},{c}}}")));
        let m = spec.mass_at(st.t)?;
        worst = worst
            .max((get("q", "p")? - 1.0).abs())
            .max((get("q", "p_t")? + st.p / m).abs())
            .max((get("p", "p_t")? - spec.force_gradient(st.q, st.t)?).abs());
    }
    Ok(vec![worst])
}

fn brackets_new(s: &Shared) -> Result<Vec<f64>> {
    let (tf, _, t_end) = s.xf()?;
    let mut r = rng(s.ctx, 3);
    let mut worst = 0.0f64;
    for _ in 0..BRACKET_STATES {
        let st = on_shell_new(tf, &s.ctx.spec, r.gen_range(-2.0..2.0), r.gen_range(0.0..t_end), r.gen_range(-2.0..2.0), 0.0)?;
        let b = dirac_brackets_new(tf, &s.ctx.spec, &st)?;
        let get = |a: &str, c: &str| b.get(a, c).ok_or_else(|| Error::Numerical(format!("missing bracket {{{a},{c}}}")));
        worst = worst.max((get("Q", "P")? - 1.0).abs()).max(get("T", "P_T")?.abs());
    }
    Ok(vec![worst])
}

fn measure_and_momenta(s: &Shared) -> Result<Vec<f64>> {
    let (tf, _, _) = s.xf()?;
    let n = s.ctx.sc.grid.n_slices;
    let span = s.ctx.sc.spans.kernel;
    let times: Vec<f64> = (0..=n).map(|j| span * j as f64 / n as f64).collect();
    let measure = measure_factor(tf, &times)?.residual();
    let mut r = rng(s.ctx, 4);
    let mut worst = 0.0f64;
    for _ in 0..RANDOM_POINTS {
        let (p, p_t, q, t) = (r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0), r.gen_range(0.0..span));
        let (big_p, big_pt) = slice_momenta_new(tf, p, p_t, q, t)?;
        let (p2, pt2) = slice_momenta_old(tf, big_p, big_pt, q, t)?;
        worst = worst.max((p2 - p).abs() / (1.0 + p.abs())).max((pt2 - p_t).abs() / (1.0 + p_t.abs()));
    }
    Ok(vec![measure, worst])
}

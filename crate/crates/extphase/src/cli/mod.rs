//! Scenario-driven front end behind the `extphase` binary.
//!
//! A [`Scenario`] is read from JSON, optional command-line overrides are
//! applied, and [`run`] executes one [`Command`], writing its artifacts into
//! the output directory. [`exit_code`] maps the outcome to 0 (pass), 2
//! (verification failed) or 1 (error).

mod checks;
mod plot;
mod report;
mod scenario;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

pub use checks::{factorization_errors, run_checks};
pub use plot::{emit_plot_data, PlotKind};
pub use report::{CheckRecord, VerificationReport};
pub use scenario::{
    ErmakovConfig, GridConfig, HamiltonianConfig, InitialConfig, Scenario, Spans, TransformConfig, WavefunctionConfig,
    AUX_TOL,
};

use crate::core::{ExtendedState, HamiltonianSpec, ScalarFn};
use crate::dynamics::{fmt17, integrate_extended_sampled, integrate_reduced, FlowOptions, Sampling, Trajectory};
use crate::ermakov::{adiabatic_seed, lewis_invariant, solve_ermakov, ErmakovSolution, DRIFT_FLOOR};
use crate::error::{Error, Result};
use crate::propagator::{direct_kernel_mapped, factorized_kernel, Kernel};
use crate::transform::{
    inverse_map, jacobian, new_potential, solve_coefficients, solve_coefficients_until, symplectic_residual,
    InvariantSpec, TransformRecord, TransformSpec,
};

/// Subcommands of the binary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Integrate,
    Ermakov,
    Transform,
    Propagate,
    Verify,
    Plot,
}

/// Command-line settings layered over the scenario file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub tol: Option<f64>,
    pub hbar: Option<f64>,
    pub slices: Option<usize>,
    pub points: Option<usize>,
    pub seed: Option<u64>,
}

/// Extra arguments of `plot`.
#[derive(Debug, Clone, Default)]
pub struct PlotArgs {
    pub kind: String,
    pub column: Option<usize>,
    /// Kernel file for `kernel-column`; computed from the scenario when absent.
    pub artifact: Option<PathBuf>,
}

/// What a successful command produced.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// Set by `verify`.
    pub report: Option<VerificationReport>,
}

pub fn exit_code(r: &Result<Outcome>) -> i32 {
    match r {
        Ok(Outcome { report: Some(rep), .. }) if !rep.pass => 2,
        Ok(_) => 0,
        Err(_) => 1,
    }
}

/// Shared state of one run: the scenario with overrides applied and the
/// Hamiltonian built from it.
pub struct Context {
    pub sc: Scenario,
    pub spec: HamiltonianSpec,
    pub seed: u64,
}

impl Context {
    pub fn new(mut sc: Scenario, ov: &Overrides) -> Result<Self> {
        if let Some(t) = ov.tol {
            sc.tolerances.insert("ode".into(), t);
        }
        if let Some(h) = ov.hbar {
            sc.hbar = h;
        }
        if let Some(n) = ov.slices {
            sc.grid.n_slices = n;
        }
        if let Some(n) = ov.points {
            sc.grid.n_points = n;
        }
        sc.validate()?;
        let spec = sc.hamiltonian()?;
        Ok(Context { sc, spec, seed: ov.seed.unwrap_or(0) })
    }

    /// Ã, B on T ∈ [0, T_end] with B(T_end) ≥ t_f and T_end ≥ the kernel span.
    pub fn transform(&self) -> Result<TransformSpec> {
        let init = self.sc.coefficient_init();
        let kappa = self.sc.kappa()?;
        let tf = solve_coefficients_until(&self.spec, &init, kappa.clone(), self.sc.spans.t_f, self.sc.aux_tol())?;
        if tf.domain.1 >= self.sc.spans.kernel {
            return Ok(tf);
        }
        solve_coefficients(&self.spec, &init, kappa, (0.0, self.sc.spans.kernel), self.sc.aux_tol())
    }

    pub fn transform_and_invariant(&self) -> Result<(TransformSpec, InvariantSpec)> {
        let tf = self.transform()?;
        let inv = new_potential(&tf, &self.spec)?;
        Ok((tf, inv))
    }

    /// Constant mass, if the mass expression is a constant.
    pub fn constant_mass(&self) -> Option<f64> {
        self.spec.mass.as_constant()
    }

    /// ω²(t) = V_qq/m for a constant mass.
    pub fn omega2(&self) -> Result<(ScalarFn, f64)> {
        let m = self.constant_mass().ok_or_else(|| {
            Error::Capability("the auxiliary equation needs a constant mass; use `transform` for time-dependent masses".into())
        })?;
        if !self.spec.quadratic {
            return Err(Error::Capability("the auxiliary equation needs a quadratic potential".into()));
        }
        let spec = self.spec.clone();
        Ok((ScalarFn::from_fn(move |t| spec.stiffness(t).map_or(f64::NAN, |k| k / m)), m))
    }

    /// ρ on [t_i, t_f]: the scenario seed, else the adiabatic one, else (A0, Ȧ0/Ḃ(0)).
    pub fn ermakov(&self) -> Result<(ErmakovSolution, f64)> {
        let (w2, m) = self.omega2()?;
        let t_i = self.sc.spans.t_i;
        let (rho0, rhodot0) = match self.sc.ermakov {
            Some(e) => (e.rho0, e.rhodot0),
            None => adiabatic_seed(&w2, t_i).unwrap_or_else(|_| {
                let a = self.sc.transform.a0;
                (a, self.sc.transform.adot0 * self.sc.transform.m0 / (m * a * a))
            }),
        };
        let sol = solve_ermakov(&w2, rho0, rhodot0, (t_i, self.sc.spans.t_f), self.sc.aux_tol())?;
        Ok((sol, m))
    }

    /// Lewis invariant along a reduced trajectory; q and p are rescaled by √m.
    pub fn lewis_series(&self, traj: &Trajectory, sol: &ErmakovSolution, m: f64) -> Result<Vec<f64>> {
        let (a, b) = sol.domain();
        let s = m.sqrt();
        traj.projected()
            .iter()
            .map(|st| {
                let (rho, rhodot) = sol.at(st.t.clamp(a, b));
                lewis_invariant(s * st.q, st.p / s, rho, rhodot)
            })
            .collect()
    }

    pub fn trajectory(&self) -> Result<Trajectory> {
        integrate_reduced(&self.spec, self.sc.initial_state(), self.sc.spans.t_f, self.sc.tol())
    }

    /// Extended trajectory under the scenario gauge over [t_i, t_f].
    pub fn extended_trajectory(&self, samples: usize) -> Result<Trajectory> {
        let gauge = self.sc.gauge_until(self.sc.spans.t_i, self.sc.spans.t_f)?;
        let init = ExtendedState::on_shell(&self.spec, self.sc.initial_state(), gauge.tau1)?;
        let taus: Vec<f64> =
            (1..=samples).map(|k| gauge.tau1 + (gauge.tau2 - gauge.tau1) * k as f64 / samples as f64).collect();
        let opts = FlowOptions { tol: self.sc.tol(), constraint_tol: self.sc.constraint_tol() };
        integrate_extended_sampled(&self.spec, &gauge, init, gauge.tau2, opts, Sampling::At(taus))
    }

    /// Initial (Q, P) from the scenario's (q, p) at t_i, where T = 0.
    pub fn mapped_initial(&self, tf: &TransformSpec) -> Result<[f64; 2]> {
        let s = ExtendedState::on_shell(&self.spec, self.sc.initial_state(), 0.0)?;
        let y = inverse_map(tf, s.coords())?;
        Ok([y[0], y[2]])
    }
}

fn create(dir: &Path, name: &str, files: &mut Vec<PathBuf>) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let f = File::create(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    files.push(path);
    Ok(BufWriter::new(f))
}

/// Write a whole text artifact.
fn write_text(dir: &Path, name: &str, text: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    let mut w = create(dir, name, files)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

pub fn run(cmd: Command, ctx: &Context, out: &Path, plot: &PlotArgs) -> Result<Outcome> {
    fs::create_dir_all(out).map_err(|e| Error::Io(format!("{}: {e}", out.display())))?;
    let mut files = Vec::new();
    let mut report = None;
    match cmd {
        Command::Integrate => integrate(ctx, out, &mut files)?,
        Command::Ermakov => ermakov(ctx, out, &mut files)?,
        Command::Transform => transform(ctx, out, &mut files)?,
        Command::Propagate => propagate(ctx, out, &mut files)?,
        Command::Verify => {
            let rep = run_checks(ctx)?;
            write_text(out, "report.json", &(rep.to_json()? + "\n"), &mut files)?;
            let mut table = Vec::new();
            rep.write_table(&mut table)?;
            write_text(out, "report.txt", &String::from_utf8_lossy(&table), &mut files)?;
            report = Some(rep);
        }
        Command::Plot => {
            let kind = PlotKind::parse(&plot.kind)?;
            let mut w = create(out, kind.file_name(), &mut files)?;
            emit_plot_data(ctx, kind, plot, &mut w)?;
            w.flush()?;
        }
    }
    Ok(Outcome { files, report })
}

fn integrate(ctx: &Context, out: &Path, files: &mut Vec<PathBuf>) -> Result<()> {
    let traj = ctx.trajectory()?;
    let mut w = create(out, "trajectory.csv", files)?;
    traj.write_csv(&mut w)?;
    w.flush()?;
    let ext = ctx.extended_trajectory(1000)?;
    let mut w = create(out, "extended.csv", files)?;
    ext.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn ermakov(ctx: &Context, out: &Path, files: &mut Vec<PathBuf>) -> Result<()> {
    let (sol, m) = ctx.ermakov()?;
    let mut w = create(out, "ermakov.csv", files)?;
    sol.write_csv(&mut w)?;
    w.flush()?;
    let traj = ctx.trajectory()?;
    let series = ctx.lewis_series(&traj, &sol, m)?;
    let i0 = series[0];
    let mut w = create(out, "invariant_drift.csv", files)?;
    writeln!(w, "t,I,rel_drift")?;
    let mut worst = 0.0f64;
    for (st, i) in traj.projected().iter().zip(&series) {
        let d = (i - i0).abs() / i0.abs().max(DRIFT_FLOOR);
        worst = worst.max(d);
        writeln!(w, "{},{},{}", fmt17(st.t), fmt17(*i), fmt17(d))?;
    }
    w.flush()?;
    println!("max relative drift of I: {worst:.3e}");
    Ok(())
}

fn transform(ctx: &Context, out: &Path, files: &mut Vec<PathBuf>) -> Result<()> {
    let tf = ctx.transform()?;
    let rec = TransformRecord::from_spec(&tf)?;
    write_text(out, "transform.json", &(rec.to_json()? + "\n"), files)?;
    let (lo, hi) = tf.domain;
    let mut sym = 0.0f64;
    for k in 0..=20 {
        let t = lo + (hi - lo) * k as f64 / 20.0;
        sym = sym.max(symplectic_residual(&jacobian(&tf, [0.7, t, -0.3, 0.2])?));
    }
    let consistency = tf.consistency_defect(&ctx.spec, 512)?;
    let report = serde_json::json!({
        "domain": [lo, hi],
        "b_end": tf.coeffs(hi)?.b,
        "consistency_defect": consistency,
        "symplectic_residual": sym,
    });
    write_text(out, "transform_report.json", &(serde_json::to_string_pretty(&report).unwrap_or_default() + "\n"), files)?;
    println!("T domain [{lo}, {hi}], consistency {consistency:.3e}, symplectic {sym:.3e}");
    Ok(())
}

fn write_kernel(k: &Kernel, out: &Path, name: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    let mut w = create(out, name, files)?;
    k.write_krnl1(&mut w)?;
    w.flush()?;
    Ok(())
}

fn propagate(ctx: &Context, out: &Path, files: &mut Vec<PathBuf>) -> Result<()> {
    let grid = ctx.sc.grid()?;
    let (tf, inv) = ctx.transform_and_invariant()?;
    let span = ctx.sc.spans.kernel;
    let direct = direct_kernel_mapped(&ctx.spec, &tf, &grid, 0.0, span)?;
    write_kernel(&direct, out, "direct.krnl", files)?;
    let fact = factorized_kernel(&tf, &inv, &grid, 0.0, span)?;
    write_kernel(&fact, out, "factorized.krnl", files)?;
    let mut w = create(out, "comparison.csv", files)?;
    writeln!(w, "column,q,rel_l2")?;
    for j in grid.interior() {
        writeln!(w, "{j},{},{}", fmt17(grid.point(j)), fmt17(fact.rel_l2_columns(&direct, j..j + 1)?))?;
    }
    w.flush()?;
    println!("relative L2 over interior columns: {:.3e}", fact.rel_l2_interior(&direct)?);
    Ok(())
}

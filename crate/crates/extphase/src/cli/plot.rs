use std::fs::File;
use std::io::{BufReader, Write};

use super::{Context, PlotArgs};
use crate::dynamics::fmt17;
use crate::ermakov::DRIFT_FLOOR;
use crate::error::{Error, Result};
use crate::propagator::{compose_kernel, Kernel};

/// Plot-ready series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// `t,I,rel_drift` of the Lewis invariant along the reference trajectory.
    InvariantDrift,
    /// `q,re,im,abs` of one kernel column.
    KernelColumn,
    /// `slices,rel_l2` of the factorized kernel against the direct one.
    FactorizationError,
}

impl PlotKind {
    pub const ALL: [&'static str; 3] = ["invariant-drift", "kernel-column", "factorization-error"];

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "invariant-drift" => Ok(PlotKind::InvariantDrift),
            "kernel-column" => Ok(PlotKind::KernelColumn),
            "factorization-error" => Ok(PlotKind::FactorizationError),
            other => Err(Error::Input(format!("unknown plot kind '{other}', expected one of {}", Self::ALL.join(", ")))),
        }
    }

    pub fn file_name(self) -> &'static str {
        match self {
            PlotKind::InvariantDrift => "plot_invariant_drift.csv",
            PlotKind::KernelColumn => "plot_kernel_column.csv",
            PlotKind::FactorizationError => "plot_factorization_error.csv",
        }
    }
}

pub fn emit_plot_data<W: Write>(ctx: &Context, kind: PlotKind, args: &PlotArgs, mut w: W) -> Result<()> {
    match kind {
        PlotKind::InvariantDrift => {
            let (sol, m) = ctx.ermakov()?;
            let traj = ctx.trajectory()?;
            let series = ctx.lewis_series(&traj, &sol, m)?;
            let i0 = series[0];
            writeln!(w, "t,I,rel_drift")?;
            for (s, i) in traj.projected().iter().zip(&series) {
                writeln!(w, "{},{},{}", fmt17(s.t), fmt17(*i), fmt17((i - i0).abs() / i0.abs().max(DRIFT_FLOOR)))?;
            }
        }
        PlotKind::KernelColumn => {
            let k = match &args.artifact {
                Some(path) => {
                    let f = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                    Kernel::read_krnl1(BufReader::new(f))?
                }
                None => {
                    let t_i = ctx.sc.spans.t_i;
                    compose_kernel(&ctx.spec, &ctx.sc.grid()?, t_i, t_i + ctx.sc.spans.kernel)?
                }
            };
            let n = k.grid.n_points;
            let j = args.column.unwrap_or(n / 2);
            if j >= n {
                return Err(Error::Input(format!("column {j} outside a grid of {n} points")));
            }
            writeln!(w, "q,re,im,abs")?;
            for (i, z) in k.column(j).iter().enumerate() {
                writeln!(w, "{},{},{},{}", fmt17(k.grid.point(i)), fmt17(z.re), fmt17(z.im), fmt17(z.norm()))?;
            }
        }
        PlotKind::FactorizationError => {
            let n = ctx.sc.grid.n_slices;
            let slices: Vec<usize> = [n / 8, n / 4, n / 2, n].into_iter().filter(|&k| k >= 1).collect();
            let errs = super::factorization_errors(ctx, &slices)?;
            writeln!(w, "slices,rel_l2")?;
            for (s, e) in slices.iter().zip(errs) {
                writeln!(w, "{s},{}", fmt17(e))?;
            }
        }
    }
    Ok(())
}

//! Run the verification suite on a scenario given inline, as the CLI does.
//! Pass a scenario file path to check that one instead.

use extphase::cli::{run, Command, Context, Overrides, PlotArgs, Scenario};

const INLINE: &str = r#"{
  "name": "constant_oscillator",
  "hamiltonian": { "mass": "1", "potential": "0.5*4*q^2", "quadratic": true },
  "transform": { "A0": 0.7071067811865476 },
  "ermakov": { "rho0": 0.7071067811865476, "rhodot0": 0.0 },
  "spans": { "t_i": 0.0, "t_f": 20.0, "kernel": 2.0 },
  "grid": { "n_slices": 128 }
}"#;

fn main() -> extphase::Result<()> {
    let sc = match std::env::args().nth(1) {
        Some(path) => Scenario::load(std::path::Path::new(&path))?,
        None => Scenario::parse(INLINE)?,
    };
    let ctx = Context::new(sc, &Overrides::default())?;
    let out = std::env::temp_dir().join(format!("extphase-{}", ctx.sc.name));
    let outcome = run(Command::Verify, &ctx, &out, &PlotArgs::default())?;
    if let Some(rep) = outcome.report {
        rep.write_table(std::io::stdout())?;
    }
    for f in outcome.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

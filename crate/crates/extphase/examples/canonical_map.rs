//! Solve the coefficient equations of the extended canonical map for a driven
//! oscillator, check canonicity and the correspondence with the auxiliary
//! solution, and serialize the result.

use extphase::core::{HamiltonianSpec, ScalarFn};
use extphase::ermakov::solve_ermakov;
use extphase::transform::{
    forward_map, inverse_map, jacobian, jacobian_analytic, solve_coefficients_until, symplectic_residual, CoefficientInit,
    TransformRecord,
};

fn main() -> extphase::Result<()> {
    let spec = HamiltonianSpec::oscillator("1+0.5*sin(0.3*t)")?;
    let tf = solve_coefficients_until(&spec, &CoefficientInit::unit(1.0), ScalarFn::zero(), 50.0, 1e-11)?;
    println!("T domain [{}, {:.4}] covers t up to {:.4}", tf.domain.0, tf.domain.1, tf.coeffs(tf.domain.1)?.b);

    let omega2 = ScalarFn::parse("1+0.5*sin(0.3*t)", "t")?;
    let sol = solve_ermakov(&omega2, 1.0, 0.0, (0.0, 51.0), 1e-11)?;
    let t_max = tf.b_inverse(50.0)?;
    let gap = (0..=2000)
        .map(|k| {
            let c = tf.coeffs(t_max * k as f64 / 2000.0)?;
            Ok((c.a - sol.at(c.b).0).abs())
        })
        .collect::<extphase::Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0f64, f64::max);
    println!("max |A(T) - rho(B(T))| = {gap:.2e}");

    let x = [0.7, 12.3, -0.4, 0.9];
    let y = forward_map(&tf, x)?;
    let back = inverse_map(&tf, y)?;
    println!("(Q,T,P,P_T) = {x:?}\n  -> {y:?}\n  -> {back:?}");
    let fd = jacobian(&tf, x)?;
    let an = jacobian_analytic(&tf, x)?;
    let diff = (0..4).flat_map(|i| (0..4).map(move |j| (i, j))).map(|(i, j)| (fd.m[i][j] - an.m[i][j]).abs()).fold(0.0, f64::max);
    println!("symplectic residual {:.2e}, |FD - analytic| {diff:.2e}", symplectic_residual(&fd));

    let json = TransformRecord::from_spec(&tf)?.to_json()?;
    println!("transform record: {} bytes of JSON", json.len());
    Ok(())
}

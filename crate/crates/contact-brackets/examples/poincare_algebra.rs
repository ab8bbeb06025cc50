//! The ten functions p_μ and J_{μν} = u_μ p_ν − u_ν p_μ close on the
//! Poincaré algebra under the Jacobi bracket, their Jacobian fields are
//! the canonical generators, and the bracket itself is invariant under
//! finite Poincaré transformations.
//!
//! Run with `cargo run --example poincare_algebra`.

use contact_brackets::expr::Expression;
use contact_brackets::mass_shell::{
    lorentz_generator, matrix_exp_rk4, poincare_chart_map, poincare_closure_table, poincare_field,
    poincare_function, MassShellSpec, PoincareLabel,
};
use contact_brackets::sample::{sample_points, SampleBox, SplitMix64};
use contact_brackets::Result;

fn main() -> Result<()> {
    let shell = MassShellSpec::new(1.0)?;
    let contact = shell.contact()?;
    let sb = SampleBox::from_named(
        shell.chart(),
        &[
            ("p1", (-1.0, 1.0)),
            ("p2", (-1.0, 1.0)),
            ("p3", (-1.0, 1.0)),
        ],
        (-2.0, 2.0),
    )?;
    let mut rng = SplitMix64::new(9);
    let points = sample_points(&sb, None, 30, &mut rng)?;

    // Jacobian fields of the generator functions match the canonical ones.
    for label in [
        PoincareLabel::Translation(0),
        PoincareLabel::Translation(1),
        PoincareLabel::Lorentz(0, 1),
        PoincareLabel::Lorentz(1, 2),
    ] {
        let f = poincare_function(&shell, label)?;
        let printed = poincare_field(&shell, label)?;
        let mut worst = 0.0_f64;
        for p in &points {
            let via_lambda = contact.jacobian_field_at(&f, p)?;
            worst = worst.max((via_lambda - printed.eval(p)?).amax());
        }
        println!("X_{label} vs canonical generator: max |Δ| = {worst:.2e}");
    }

    // Closure on the structure constants, certified against the 5×5
    // matrix realization.
    let table = poincare_closure_table(&shell, &points)?;
    let worst = table.iter().map(|r| r.max_residual).fold(0.0_f64, f64::max);
    println!(
        "closure residual over all {} pairs: {worst:.2e}",
        table.len()
    );
    for row in table.iter().take(6) {
        println!(
            "  [{}, {}] closes with residual {:.2e}",
            row.f, row.g, row.max_residual
        );
    }

    // Invariance of the bracket under a boost-plus-rotation with a
    // translation, built from the exponential of the generator matrices.
    let generator = 0.25 * lorentz_generator(0, 3) + 0.5 * lorentz_generator(2, 3);
    let lorentz = matrix_exp_rk4(&generator, 512);
    let map = poincare_chart_map(&shell, &lorentz, &[0.4, 0.0, -0.1, 0.2])?;
    let f = Expression::parse("u1*p2", shell.chart())?;
    let h = Expression::parse("u0*p1 + u3", shell.chart())?;
    let f_moved = map.pullback_function(&f)?;
    let h_moved = map.pullback_function(&h)?;
    let mut worst = 0.0_f64;
    for p in &points {
        let lhs = contact.jacobi_bracket(&f_moved, &h_moved, p)?;
        let rhs = contact.jacobi_bracket(&f, &h, &map.apply(p)?)?;
        worst = worst.max((lhs - rhs).abs());
    }
    println!("bracket invariance under the transformation: max |Δ| = {worst:.2e}");
    Ok(())
}

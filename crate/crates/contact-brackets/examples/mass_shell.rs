//! The relativistic particle on the positive mass shell: the kinematical
//! (Landau) description, the Reeb field, non-commuting positions and
//! Newton–Wigner coordinates.
//!
//! Run with `cargo run --example mass_shell`.

use contact_brackets::expr::Expression;
use contact_brackets::extended::{integrate_flow, Method};
use contact_brackets::mass_shell::MassShellSpec;
use contact_brackets::Result;

fn main() -> Result<()> {
    let shell = MassShellSpec::new(1.0)?;
    println!("chart: {:?} with p0 eliminated", shell.chart().coords());

    // Kinematical flow: du^0/ds = 1, du^j/ds = −p_j/p_0, dp/ds = 0.
    let start = shell.embed(&[0.0, 0.4, -0.3, 0.8], &[1.0, 0.0, 0.0])?;
    println!("p0 at start: {:.6}", shell.p0(&start)?);
    let x = shell.landau_field();
    let trajectory = integrate_flow(&x, &start, (0.0, 5.0), 1e-3, Method::Rk4, None)?;
    println!("after Δu0 = 5: {}", trajectory.end());

    // Newton–Wigner positions and momenta are constants of that flow; the
    // dynamical time T = p_μ u^μ advances at unit Reeb rate.
    let before = shell.newton_wigner(&start)?;
    let after = shell.newton_wigner(trajectory.end())?;
    println!(
        "Newton–Wigner before: Q = {:?}, T = {:.4}",
        before.q, before.t
    );
    println!(
        "Newton–Wigner after:  Q = {:?}, T = {:.4}",
        after.q, after.t
    );

    let contact = shell.contact()?;
    let t = shell.dynamical_time();
    let gamma = contact.reeb_at(&start)?;
    let rate: f64 = (0..7)
        .map(|i| gamma[i] * t.differentiate_index(i).evaluate(&start).unwrap())
        .sum();
    println!("Γ(T) = {rate:.12}");

    // Positions do not commute: [u^μ, u^ν] = (u^μ p^ν − u^ν p^μ)/m².
    let chart = shell.chart();
    let u0 = Expression::coord(chart, "u0")?;
    let u1 = Expression::coord(chart, "u1")?;
    let at = shell.embed(&[2.0, 1.0, 0.0, 0.0], &[0.0; 3])?;
    println!(
        "[u1, u0] at rest with u = (2,1,0,0): {:+.6}",
        contact.jacobi_bracket(&u1, &u0, &at)?
    );
    let moving = shell.embed(&[0.3, -0.2, 0.7, 0.1], &[0.6, -0.1, 0.2])?;
    let up = shell.p_upper(&moving)?;
    let expected = (moving.values()[1] * up[0] - moving.values()[0] * up[1]) / 1.0;
    println!(
        "[u1, u0] at a boosted point: {:+.6} (expected {expected:+.6})",
        contact.jacobi_bracket(&u1, &u0, &moving)?
    );
    Ok(())
}

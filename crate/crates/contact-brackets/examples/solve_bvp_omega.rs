//! Two-point boundary value problems and the solution-space 2-form:
//! Newton on the discrete Euler–Lagrange system, transported variations,
//! node-independence of Ω, and conjugate-point detection.
//!
//! Run with `cargo run --example solve_bvp_omega`.

use contact_brackets::extended::{free_particle, harmonic_oscillator};
use contact_brackets::variational::{
    el_residual, omega_basis_table, omega_form, solve_bvp, transport_variation,
};
use contact_brackets::Result;

fn main() -> Result<()> {
    // Free particle: the solver lands on the analytic solution exactly.
    let free = free_particle();
    let section = solve_bvp(&free, &[0.0], &[1.0], (0.0, 1.0), 64)?;
    let mid = section.grid().len() / 2;
    println!(
        "free particle q(0)=0, q(1)=1: q_mid = {:.12}, p_mid = {:.12}, residual {:.2e}",
        section.u()[mid][0],
        section.p()[mid][0],
        el_residual(&section, &free)?.max_abs()
    );

    // Transported variations satisfy the linearized equations; Ω of any
    // pair is the same at every node.
    let u = transport_variation(&section, &free, &[1.0], &[0.0])?;
    let v = transport_variation(&section, &free, &[0.0], &[1.0])?;
    println!(
        "Ω(U, V) at nodes 0, N/2, N: {:+.12}, {:+.12}, {:+.12}",
        omega_form(&section, &u, &v, 0)?,
        omega_form(&section, &u, &v, mid)?,
        omega_form(&section, &u, &v, section.grid().len() - 1)?,
    );

    // Harmonic oscillator over a quarter period.
    let oscillator = harmonic_oscillator();
    let span = (0.0, std::f64::consts::FRAC_PI_2);
    let section = solve_bvp(&oscillator, &[0.0], &[1.0], span, 128)?;
    let worst = section
        .grid()
        .iter()
        .enumerate()
        .map(|(k, sk)| (section.u()[k][0] - sk.sin()).abs())
        .fold(0.0_f64, f64::max);
    println!(
        "oscillator vs sin(s): max position error {worst:.2e} at Δs = {:.4}",
        section.step()
    );
    let table = omega_basis_table(&section, &oscillator)?;
    println!("Ω node spread along the solution: {:.2e}", table.max_spread);

    // At span π the endpoints are conjugate and the boundary value problem
    // degenerates; the solver reports it instead of returning a solution.
    match solve_bvp(&oscillator, &[0.0], &[0.0], (0.0, std::f64::consts::PI), 64) {
        Err(e) => println!("span π: {e}"),
        Ok(_) => unreachable!("conjugate span must be reported"),
    }
    Ok(())
}

//! The discrete action principle: the derivative of the sampled action
//! splits exactly into interior Euler–Lagrange rows plus endpoint terms,
//! for every section and every vertical variation.
//!
//! Run with `cargo run --example schwinger_weiss`.

use contact_brackets::extended::SystemSpec;
use contact_brackets::sample::SplitMix64;
use contact_brackets::variational::{
    action_directional_derivative_fd, boundary_term, discrete_action, el_pairing, el_residual,
    DiscreteSection, VariationField,
};
use contact_brackets::Result;

fn main() -> Result<()> {
    let system = SystemSpec::new(1, "p^2/2 + q^4/4")?;

    // The exact free-particle line has S_d = ∫(p q̇ − p²/2) ds = 1/2.
    let free = contact_brackets::extended::free_particle();
    let intervals = 32;
    let s: Vec<f64> = (0..=intervals)
        .map(|k| k as f64 / intervals as f64)
        .collect();
    let u: Vec<Vec<f64>> = s.iter().map(|sk| vec![*sk]).collect();
    let p = vec![vec![1.0]; intervals + 1];
    let line = DiscreteSection::new(s, u, p)?;
    println!(
        "S_d[straight free-particle line] = {}",
        discrete_action(&line, &free)?
    );
    println!(
        "Euler–Lagrange residual of the line: {:.2e}",
        el_residual(&line, &free)?.max_abs()
    );

    // A random section of the quartic system with a random variation:
    // dS(U) = EL(U) + boundary(U), checked against central differences.
    let mut rng = SplitMix64::new(3);
    let intervals = 12;
    let s: Vec<f64> = (0..=intervals).map(|k| 0.1 * k as f64).collect();
    let u = (0..=intervals)
        .map(|_| vec![rng.next_in(-1.0, 1.0)])
        .collect();
    let p = (0..=intervals)
        .map(|_| vec![rng.next_in(0.2, 1.0)])
        .collect();
    let section = DiscreteSection::new(s, u, p)?;
    let du = (0..=intervals)
        .map(|_| vec![rng.next_in(-1.0, 1.0)])
        .collect();
    let dp = (0..=intervals)
        .map(|_| vec![rng.next_in(-1.0, 1.0)])
        .collect();
    let variation = VariationField::new(du, dp)?;

    let fd = action_directional_derivative_fd(&section, &variation, &system, 3e-6)?;
    let interior = el_pairing(&section, &variation, &system)?;
    let boundary = boundary_term(&section, &variation, &system)?;
    println!("dS(U)      = {fd:+.12}");
    println!("EL(U)      = {interior:+.12}");
    println!("boundary   = {boundary:+.12}");
    println!("defect     = {:.2e}", (fd - interior - boundary).abs());

    // With endpoint-fixed variations the boundary term drops and dS(U) is
    // pure Euler–Lagrange, which is the variational characterization of
    // solutions.
    let mut clamped = variation.clone();
    clamped.du[0][0] = 0.0;
    clamped.du[intervals][0] = 0.0;
    let boundary = boundary_term(&section, &clamped, &system)?;
    println!("boundary with endpoint-fixed δu: {boundary:+.1e}");
    Ok(())
}

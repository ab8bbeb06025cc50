//! Free-particle Darboux coordinates Q = q − ps, P = p, W = p²s/2: the
//! transformation, its generating function, and the shifted coordinates
//! W̃ = W + PQ/2.
//!
//! Run with `cargo run --example darboux_transform`.

use contact_brackets::extended::{
    darboux_contact, darboux_inverse, darboux_map, darboux_point, free_particle,
    hamilton_jacobi_residual, tilde_contact, tilde_map, tilde_point,
};
use contact_brackets::sample::{sample_points, SampleBox, SplitMix64};
use contact_brackets::Result;

fn main() -> Result<()> {
    let system = free_particle();

    let p = system.point(&[3.0], &[2.0], 1.0)?;
    let d = darboux_point(&p)?;
    let t = tilde_point(&d)?;
    println!("{p}  ->  {d}  ->  {t}");
    let back = darboux_inverse(&d)?;
    println!("inverse round trip: {back}");

    // θ_H = p dq − (p²/2) ds equals the pullback of dW + P dQ.
    let theta = system.theta();
    let pulled = darboux_map().pullback_oneform(darboux_contact()?.theta())?;
    let sb = SampleBox::from_named(system.chart(), &[("p", (0.3, 2.0))], (-2.0, 2.0))?;
    let mut rng = SplitMix64::new(5);
    let mut worst = 0.0_f64;
    for pt in sample_points(&sb, system.exclude(), 100, &mut rng)? {
        worst = worst.max((theta.eval(&pt)? - pulled.eval(&pt)?).amax());
    }
    println!("pullback identity max |Δ| over 100 points: {worst:.2e}");

    // The transformation is generated by S(Q, q, s) = (q − Q)²/(2s), a
    // solution of the Hamilton–Jacobi equation for H = p²/2.
    let mut worst = 0.0_f64;
    for _ in 0..50 {
        let q = rng.next_in(-2.0, 2.0);
        let label = rng.next_in(-2.0, 2.0);
        let s = rng.next_in(0.2, 2.0);
        worst = worst.max(hamilton_jacobi_residual(q, label, s)?.abs());
    }
    println!("Hamilton–Jacobi residual of the generating function: {worst:.2e}");

    // In the shifted coordinates, θ = dW̃ + (P̃/2) dQ̃ − (Q̃/2) dP̃ and the
    // Reeb field stays ∂/∂W̃.
    let pulled = tilde_map().pullback_oneform(tilde_contact()?.theta())?;
    let dc = darboux_contact()?;
    let dbox = SampleBox::uniform(dc.chart(), -2.0, 2.0);
    let mut worst = 0.0_f64;
    for pt in sample_points(&dbox, None, 50, &mut rng)? {
        worst = worst.max((dc.theta().eval(&pt)? - pulled.eval(&pt)?).amax());
    }
    println!("tilde coordinate expression of θ, max |Δ|: {worst:.2e}");
    Ok(())
}

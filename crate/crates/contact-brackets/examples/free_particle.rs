//! The free particle on the extended phase space (q, p, s): contact form,
//! dynamics field, flow, constants of motion and the Reeb field.
//!
//! Run with `cargo run --example free_particle`.

use contact_brackets::contact::check_is_invariant;
use contact_brackets::expr::Expression;
use contact_brackets::extended::{free_particle, integrate_flow, Method};
use contact_brackets::sample::{sample_points, SampleBox, SplitMix64};
use contact_brackets::Result;

fn main() -> Result<()> {
    let system = free_particle();
    let chart = system.chart().clone();
    println!(
        "system: H = {} on chart {:?}",
        system.hamiltonian(),
        chart.coords()
    );

    // θ_H = p dq − (p²/2) ds and X_H = ∂/∂s + p ∂/∂q.
    let start = system.point(&[0.0], &[1.0], 0.0)?;
    let theta = system.theta();
    println!("θ_H at {start}: {:?}", theta.eval(&start)?.as_slice());
    let x_h = system.dynamics_field();
    println!("X_H at {start}: {:?}", x_h.eval(&start)?.as_slice());

    // Flow from (q, p, s) = (0, 1, 0) over one unit of time.
    let trajectory = integrate_flow(
        &x_h,
        &start,
        (0.0, 1.0),
        1e-3,
        Method::Rk4,
        system.exclude(),
    )?;
    println!(
        "flow endpoint: {} (section property: {})",
        trajectory.end(),
        trajectory.is_section()
    );

    // Q = q − ps and P = p label the trajectory; both are invariant.
    let sb = SampleBox::from_named(&chart, &[("p", (0.5, 2.0))], (-1.5, 1.5))?;
    let mut rng = SplitMix64::new(1);
    let sample = sample_points(&sb, system.exclude(), 40, &mut rng)?;
    for text in ["q - p*s", "p", "p^2/2"] {
        let f = Expression::parse(text, &chart)?;
        let check = check_is_invariant(&f, &x_h, &sample)?;
        println!(
            "L_XH ({text}) = 0? {} (max residual {:.2e})",
            check.invariant, check.max_residual
        );
    }

    // The Reeb field is the dynamics rescaled: Γ = (2/p²) X_H.
    let contact = system.contact(&start)?;
    let probe = system.point(&[0.0], &[2.0], 0.0)?;
    let gamma = contact.reeb_at(&probe)?;
    println!(
        "Γ at p = 2: ({:.3}, {:.3}, {:.3}); (2/p²) X_H = (1, 0, 0.5)",
        gamma[0], gamma[1], gamma[2]
    );

    // The zero section p = 0 is excluded: the contact solve degenerates.
    let degenerate = system.point(&[0.0], &[0.0], 0.0)?;
    match contact.reeb_at(&degenerate) {
        Err(e) => println!("at p = 0: {e}"),
        Ok(_) => unreachable!("p = 0 must be degenerate"),
    }
    Ok(())
}

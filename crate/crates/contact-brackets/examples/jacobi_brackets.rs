//! Jacobi brackets on a contact chart: [f, g] = Λ(df, dg) + fΓ(g) − gΓ(f),
//! the Jacobian vector fields X_f = Λ(df, ·) + fΓ, and the homomorphism
//! [X_f, X_g] = X_{[f,g]}.
//!
//! Run with `cargo run --example jacobi_brackets`.

use contact_brackets::chart::ChartPoint;
use contact_brackets::contact::{commutator_fd, FD_STEP};
use contact_brackets::expr::Expression;
use contact_brackets::extended::{darboux_chart, darboux_contact};
use contact_brackets::Result;

fn main() -> Result<()> {
    // Darboux normal form θ = dW + P dQ; the Reeb field is ∂/∂W and the
    // bracket normalization gives [P, Q] = +1 (so [Q, P] = −1).
    let contact = darboux_contact()?;
    let chart = darboux_chart();
    let at = ChartPoint::new(&chart, vec![0.7, -1.3, 2.0])?;

    let q = Expression::coord(&chart, "Q")?;
    let p = Expression::coord(&chart, "P")?;
    let w = Expression::coord(&chart, "W")?;
    println!("[Q, P] = {:+.3}", contact.jacobi_bracket(&q, &p, &at)?);
    println!("[P, Q] = {:+.3}", contact.jacobi_bracket(&p, &q, &at)?);
    println!("[Q, W] = {:+.3}", contact.jacobi_bracket(&q, &w, &at)?);
    println!(
        "[P, W] = {:+.3}  (fL_Γg − gL_Γf terms at work)",
        contact.jacobi_bracket(&p, &w, &at)?
    );

    // Unlike a Poisson bracket, the Jacobi bracket is not a derivation:
    // [fg, h] − f[g, h] − g[f, h] = −fg Γ(h), nonzero whenever h moves
    // along the Reeb direction. Here: defect −QP for (f, g, h) = (Q, P, W).
    let one = Expression::one(&chart);
    let qp = Expression::parse("Q*P", &chart)?;
    let lhs = contact.jacobi_bracket(&qp, &w, &at)?;
    let rhs = q.evaluate(&at)? * contact.jacobi_bracket(&p, &w, &at)?
        + p.evaluate(&at)? * contact.jacobi_bracket(&q, &w, &at)?;
    println!(
        "Leibniz defect for (Q, P, W): {:+.3} (= -QP = {:+.3})",
        lhs - rhs,
        -q.evaluate(&at)? * p.evaluate(&at)?
    );

    // Jacobian fields: X_1 = Γ, X_W = PΛ-part + WΓ.
    let x1 = contact.jacobian_field_at(&one, &at)?;
    println!("X_1 = Γ: {:?}", x1.as_slice());
    let xw = contact.jacobian_field_at(&w, &at)?;
    println!("X_W: {:?}", xw.as_slice());

    // f ↦ X_f is a Lie algebra homomorphism.
    let f = Expression::parse("Q*P", &chart)?;
    let g = Expression::parse("W + Q^2", &chart)?;
    let xf = contact.jacobian_vector_field(&f);
    let xg = contact.jacobian_vector_field(&g);
    let bracket_fn = contact.bracket_field(&f, &g);
    let lhs = commutator_fd(&xf, &xg, &at, FD_STEP)?;
    let rhs = contact.jacobian_field_at(&bracket_fn, &at)?;
    println!(
        "homomorphism residual |[X_f, X_g] − X_[f,g]| = {:.2e}",
        (lhs - rhs).amax()
    );
    Ok(())
}

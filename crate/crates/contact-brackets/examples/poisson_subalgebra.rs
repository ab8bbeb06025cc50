//! Constants of the motion form a Poisson subalgebra of the Jacobi
//! algebra: the Reeb terms vanish, the Leibniz rule returns, and the
//! bracket agrees with the canonical bracket on any level-set section.
//!
//! Run with `cargo run --example poisson_subalgebra`.

use contact_brackets::chart::ChartPoint;
use contact_brackets::expr::Expression;
use contact_brackets::extended::{
    darboux_chart, darboux_point, flow_to_section, free_particle, restricted_poisson_bracket,
    Section,
};
use contact_brackets::sample::{sample_points, SampleBox, SplitMix64};
use contact_brackets::Result;

fn main() -> Result<()> {
    let system = free_particle();
    let chart = system.chart().clone();
    let x_h = system.dynamics_field();

    let sb = SampleBox::from_named(&chart, &[("p", (0.5, 2.0))], (-1.5, 1.5))?;
    let mut rng = SplitMix64::new(11);
    let points = sample_points(&sb, system.exclude(), 20, &mut rng)?;
    let contact = system.contact(&points[0])?;

    // Q = q − ps and P = p are invariant; their bracket reduces to the
    // Λ-part: [Q, P] = Λ(dQ, dP) everywhere.
    let f = Expression::parse("q - p*s", &chart)?;
    let g = Expression::parse("p", &chart)?;
    let mut reeb_term = 0.0_f64;
    let mut bracket = 0.0;
    for p in &points {
        let gamma = contact.reeb_at(p)?;
        let lf: f64 = (0..3)
            .map(|i| gamma[i] * f.differentiate_index(i).evaluate(p).unwrap())
            .sum();
        let lg: f64 = (0..3)
            .map(|i| gamma[i] * g.differentiate_index(i).evaluate(p).unwrap())
            .sum();
        reeb_term = reeb_term.max((f.evaluate(p)? * lg - g.evaluate(p)? * lf).abs());
        bracket = contact.jacobi_bracket(&f, &g, p)?;
    }
    println!("[Q, P] = {bracket:+.6}; max |fΓ(g) − gΓ(f)| = {reeb_term:.2e}");

    // Leibniz within the subalgebra: [QP, P²] = Q[P, P²] + P[Q, P²].
    let fg = Expression::parse("(q - p*s)*p", &chart)?;
    let h = Expression::parse("p^2", &chart)?;
    let at = &points[0];
    let lhs = contact.jacobi_bracket(&fg, &h, at)?;
    let rhs = f.evaluate(at)? * contact.jacobi_bracket(&g, &h, at)?
        + g.evaluate(at)? * contact.jacobi_bracket(&f, &h, at)?;
    println!("Leibniz on invariants: |Δ| = {:.2e}", (lhs - rhs).abs());

    // Restriction to the section W = 0 reproduces the same values through
    // the canonical bracket of the labels.
    let section = Section::W(0.0);
    let label_chart = section.chart();
    let f2 = Expression::parse("Q", &label_chart)?;
    let g2 = Expression::parse("P", &label_chart)?;
    let w_level = Expression::parse("p^2*s/2", &chart)?;
    let mut worst = 0.0_f64;
    for p in &points {
        let jac = contact.jacobi_bracket(&f, &g, p)?;
        let on_section = flow_to_section(&x_h, p, &w_level, 0.0)?;
        let d = darboux_point(&on_section)?;
        let d = ChartPoint::new(&darboux_chart(), vec![d.values()[0], d.values()[1], 0.0])?;
        let restricted = restricted_poisson_bracket(&f2, &g2, section, &d)?;
        worst = worst.max((jac - restricted).abs());
    }
    println!("Jacobi vs W-section bracket, max |Δ| over 20 trajectories: {worst:.2e}");
    Ok(())
}

//! Seeded verification suites.
//!
//! Each suite builds its models, draws reproducible sample points and
//! reports one named residual per geometric identity. Thresholds are fixed
//! here, not configurable: they are part of the contract the suites check.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::chart::ChartPoint;
use crate::config::LoadedSpec;
use crate::contact::{commutator_fd, ContactStructure, FD_STEP};
use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::extended::{
    darboux_chart, darboux_contact, darboux_inverse, darboux_map, darboux_point, flow_to_section,
    free_particle, hamilton_jacobi_residual, harmonic_oscillator, integrate_flow,
    restricted_poisson_bracket, tilde_contact, tilde_map, tilde_point, Method, Section, SystemSpec,
};
use crate::mass_shell::{
    lorentz_generator, matrix_exp_rk4, poincare_chart_map, poincare_closure_table, poincare_field,
    poincare_function, reparam_el_residual, MassShellSpec, PoincareLabel,
};
use crate::report::{Check, Report};
use crate::sample::{sample_points, SampleBox, SplitMix64};
use crate::variational::{
    action_directional_derivative_fd, boundary_term, el_pairing, omega_basis_table, solve_bvp,
    transport_variation, DiscreteSection, VariationField,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Contact,
    PoissonSubalgebra,
    Omega,
    Poincare,
    Darboux,
    SchwingerWeiss,
    All,
}

impl Suite {
    pub fn parse(name: &str) -> Result<Suite> {
        Ok(match name {
            "contact" => Suite::Contact,
            "poisson-subalgebra" => Suite::PoissonSubalgebra,
            "omega" => Suite::Omega,
            "poincare" => Suite::Poincare,
            "darboux" => Suite::Darboux,
            "schwinger-weiss" => Suite::SchwingerWeiss,
            "all" => Suite::All,
            other => {
                return Err(Error::Config(format!(
                    "unknown suite `{other}` (expected contact, poisson-subalgebra, omega, \
                     poincare, darboux, schwinger-weiss or all)"
                )))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Contact => "contact",
            Suite::PoissonSubalgebra => "poisson-subalgebra",
            Suite::Omega => "omega",
            Suite::Poincare => "poincare",
            Suite::Darboux => "darboux",
            Suite::SchwingerWeiss => "schwinger-weiss",
            Suite::All => "all",
        }
    }
}

/// Extra inputs for the contact suite: a spec file to check alongside the
/// built-in models, and explicit probe points on its chart.
#[derive(Default)]
pub struct VerifyOptions {
    pub spec: Option<LoadedSpec>,
    pub probes: Vec<Vec<(String, f64)>>,
}

pub fn run_suite(suite: Suite, seed: u64, options: &VerifyOptions) -> Result<Report> {
    let checks = match suite {
        Suite::Contact => contact_checks(seed, options)?,
        Suite::PoissonSubalgebra => poisson_subalgebra_checks(seed)?,
        Suite::Omega => omega_checks()?,
        Suite::Poincare => poincare_checks(seed)?,
        Suite::Darboux => darboux_checks(seed)?,
        Suite::SchwingerWeiss => schwinger_weiss_checks(seed)?,
        Suite::All => {
            let mut all = Vec::new();
            for (name, list) in [
                ("contact", contact_checks(seed, options)?),
                ("poisson-subalgebra", poisson_subalgebra_checks(seed)?),
                ("omega", omega_checks()?),
                ("poincare", poincare_checks(seed)?),
                ("darboux", darboux_checks(seed)?),
                ("schwinger-weiss", schwinger_weiss_checks(seed)?),
            ] {
                for mut check in list {
                    check.name = format!("{name}/{}", check.name);
                    all.push(check);
                }
            }
            all
        }
    };
    Ok(Report::new(suite.name(), seed, checks))
}

// ---------------------------------------------------------------------
// contact
// ---------------------------------------------------------------------

fn reeb_checks(
    prefix: &str,
    contact: &ContactStructure,
    points: &[ChartPoint],
    checks: &mut Vec<Check>,
) -> Result<()> {
    let mut pairing = 0.0_f64;
    let mut kernel = 0.0_f64;
    let mut rank_defect = 0.0_f64;
    for p in points {
        let gamma = contact.reeb_at(p)?;
        let (pr, kr) = contact.reeb_residuals(p, &gamma)?;
        pairing = pairing.max(pr);
        kernel = kernel.max(kr);
        let rank = contact.contact_rank(p)?;
        rank_defect = rank_defect.max((contact.chart().dim() - rank) as f64);
    }
    checks.push(Check::below(
        &format!("{prefix}/reeb-pairing"),
        pairing,
        1e-8,
    ));
    checks.push(Check::below(&format!("{prefix}/reeb-kernel"), kernel, 1e-8));
    checks.push(Check::below(
        &format!("{prefix}/contact-rank-defect"),
        rank_defect,
        0.5,
    ));
    Ok(())
}

fn contact_checks(seed: u64, options: &VerifyOptions) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let mut rng = SplitMix64::new(seed);

    // Darboux chart.
    let dc = darboux_contact()?;
    let dbox = SampleBox::uniform(&darboux_chart(), -2.0, 2.0);
    let dpts = sample_points(&dbox, None, 100, &mut rng)?;
    reeb_checks("darboux", &dc, &dpts, &mut checks)?;
    let mut gamma_diff = 0.0_f64;
    let mut lambda_diff = 0.0_f64;
    for p in &dpts {
        let solved = dc.reeb_at(p)?;
        gamma_diff = gamma_diff.max((solved - dc.reeb_closed().unwrap().eval(p)?).amax());
        let l = dc.lambda_at(p)?;
        lambda_diff = lambda_diff.max((l - dc.lambda_closed().unwrap().eval(p)?).amax());
    }
    checks.push(Check::below("darboux/reeb-closed-form", gamma_diff, 1e-10));
    checks.push(Check::below(
        "darboux/lambda-closed-form",
        lambda_diff,
        1e-10,
    ));

    // Free particle, away from the excluded zero section.
    let free = free_particle();
    let fbox = SampleBox::from_named(free.chart(), &[("p", (0.5, 2.0))], (-2.0, 2.0))?;
    let fpts = sample_points(&fbox, free.exclude(), 100, &mut rng)?;
    let probe = &fpts[0];
    let fc = free.contact(probe)?;
    reeb_checks("free-particle", &fc, &fpts, &mut checks)?;
    let x_h = free.dynamics_field();
    let mut scaled = 0.0_f64;
    for p in &fpts {
        let gamma = fc.reeb_at(p)?;
        let xv = x_h.eval(p)?;
        let factor = 2.0 / (p.values()[1] * p.values()[1]);
        scaled = scaled.max((gamma - factor * xv).amax());
    }
    checks.push(Check::below(
        "free-particle/reeb-scaled-dynamics",
        scaled,
        1e-10,
    ));

    // Mass shells.
    for mass in [0.5, 1.0, 2.0] {
        let spec = MassShellSpec::new(mass)?;
        let contact = spec.contact()?;
        let sbox = SampleBox::from_named(
            spec.chart(),
            &[
                ("p1", (-1.0, 1.0)),
                ("p2", (-1.0, 1.0)),
                ("p3", (-1.0, 1.0)),
            ],
            (-2.0, 2.0),
        )?;
        let pts = sample_points(&sbox, None, 100, &mut rng)?;
        let prefix = format!("mass-shell-m{mass}");
        reeb_checks(&prefix, &contact, &pts, &mut checks)?;
        let mut annihilation = 0.0_f64;
        let mut rank_err = 0.0_f64;
        for p in &pts {
            let theta = contact.theta().eval(p)?;
            let lambda = contact.lambda_at(p)?;
            annihilation = annihilation.max((lambda.transpose() * theta).amax());
            rank_err = rank_err.max((contact.omega_rank(p)? as f64 - 6.0).abs());
        }
        checks.push(Check::below(
            &format!("{prefix}/lambda-annihilates-theta"),
            annihilation,
            1e-8,
        ));
        checks.push(Check::below(
            &format!("{prefix}/omega-rank-6"),
            rank_err,
            0.5,
        ));
    }

    // Caller-supplied spec and probes.
    if let Some(loaded) = &options.spec {
        match loaded.contact(&mut rng) {
            Ok(contact) => {
                let pts = loaded.sample(100, &mut rng)?;
                reeb_checks("spec", &contact, &pts, &mut checks).or_else(|e| -> Result<()> {
                    checks.push(Check::failed("spec/reeb-pairing", 1e-8, e.to_string()));
                    Ok(())
                })?;
                for (i, assignment) in options.probes.iter().enumerate() {
                    let name = format!("spec/probe-{i}-nondegenerate");
                    match probe_point(loaded, assignment)
                        .and_then(|p| contact.reeb_at(&p).map(|_| p))
                        .and_then(|p| contact.lambda_at(&p))
                    {
                        Ok(_) => checks.push(Check::below(&name, 0.0, 1e-8)),
                        Err(e) => checks.push(Check::failed(&name, 1e-8, e.to_string())),
                    }
                }
            }
            Err(e) => checks.push(Check::failed("spec/contact-structure", 1e-8, e.to_string())),
        }
    }

    Ok(checks)
}

fn probe_point(spec: &LoadedSpec, assignment: &[(String, f64)]) -> Result<ChartPoint> {
    let chart = spec.chart();
    let mut values = vec![0.0; chart.dim()];
    for (name, value) in assignment {
        let i = chart
            .index_of(name)
            .ok_or_else(|| Error::UnknownCoordinate {
                name: name.clone(),
                chart: chart.id().to_string(),
            })?;
        values[i] = *value;
    }
    ChartPoint::new(chart, values)
}

// ---------------------------------------------------------------------
// poisson-subalgebra
// ---------------------------------------------------------------------

/// The invariant pairs exercised on the free particle: (Q, P) and
/// (P², QP), written over (q, p, s) and as label functions.
fn invariant_pairs(
    chart: &Arc<crate::chart::Chart>,
) -> Vec<(Expression, Expression, &'static str, &'static str)> {
    vec![
        (
            Expression::parse("q - p*s", chart).unwrap(),
            Expression::parse("p", chart).unwrap(),
            "Q",
            "P",
        ),
        (
            Expression::parse("p^2", chart).unwrap(),
            Expression::parse("(q - p*s)*p", chart).unwrap(),
            "P^2",
            "Q*P",
        ),
    ]
}

fn poisson_subalgebra_checks(seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let mut rng = SplitMix64::new(seed);
    let free = free_particle();
    let chart = free.chart().clone();
    let fbox = SampleBox::from_named(&chart, &[("p", (0.5, 2.0))], (-1.5, 1.5))?;
    let pts = sample_points(&fbox, free.exclude(), 50, &mut rng)?;
    let contact = free.contact(&pts[0])?;
    let x_h = free.dynamics_field();
    let w_expr = Expression::parse("p^2*s/2", &chart)?;

    for (pair_index, (f, g, flabel, glabel)) in invariant_pairs(&chart).into_iter().enumerate() {
        let tag = format!("pair-{pair_index}");

        // Both functions are constants of the motion.
        let mut invariance = 0.0_f64;
        for p in &pts {
            invariance = invariance.max(x_h.derive(&f, p)?.abs());
            invariance = invariance.max(x_h.derive(&g, p)?.abs());
        }
        checks.push(Check::below(
            &format!("{tag}/flow-invariance"),
            invariance,
            1e-8,
        ));

        // The Reeb terms of the Jacobi bracket vanish on invariants.
        let mut gamma_term = 0.0_f64;
        for p in &pts {
            let gamma = contact.reeb_at(p)?;
            let lf = gamma.dot(&crate::contact::ScalarField::gradient(&f, p)?);
            let lg = gamma.dot(&crate::contact::ScalarField::gradient(&g, p)?);
            gamma_term = gamma_term.max((f.evaluate(p)? * lg - g.evaluate(p)? * lf).abs());
        }
        checks.push(Check::below(&format!("{tag}/reeb-term"), gamma_term, 1e-8));

        // Jacobi bracket values transported to the W- and W̃-sections agree
        // with the canonical section brackets of the label functions.
        let w_section = Section::W(0.0);
        let wt_section = Section::WTilde(0.0);
        let f2 = Expression::parse(flabel, &w_section.chart())?;
        let g2 = Expression::parse(glabel, &w_section.chart())?;
        let f2t = Expression::parse(
            &flabel.replace('Q', "Qt").replace('P', "Pt"),
            &wt_section.chart(),
        )?;
        let g2t = Expression::parse(
            &glabel.replace('Q', "Qt").replace('P', "Pt"),
            &wt_section.chart(),
        )?;
        let mut w_agreement = 0.0_f64;
        let mut wt_agreement = 0.0_f64;
        let mut flow_invariance = 0.0_f64;
        for p in pts.iter().take(50) {
            let jac = contact.jacobi_bracket(&f, &g, p)?;

            // Transport to W = 0 along the flow; the bracket of invariants
            // is itself invariant.
            let on_w = flow_to_section(&x_h, p, &w_expr, 0.0)?;
            flow_invariance =
                flow_invariance.max((contact.jacobi_bracket(&f, &g, &on_w)? - jac).abs());
            let d = darboux_point(&on_w)?;
            let d_exact =
                ChartPoint::new(&darboux_chart(), vec![d.values()[0], d.values()[1], 0.0])?;
            let section_value = restricted_poisson_bracket(&f2, &g2, w_section, &d_exact)?;
            w_agreement = w_agreement.max((jac - section_value).abs());

            // The W̃ = 0 section: transport along the flow to W̃ = 0, i.e.
            // W = −PQ/2 expressed on the extended chart.
            let wt_expr = Expression::parse("p^2*s/2 + p*(q - p*s)/2", &chart)?;
            let on_wt = flow_to_section(&x_h, p, &wt_expr, 0.0)?;
            let dt = tilde_point(&darboux_point(&on_wt)?)?;
            let dt_exact = ChartPoint::new(
                &crate::extended::tilde_chart(),
                vec![dt.values()[0], dt.values()[1], 0.0],
            )?;
            let section_value = restricted_poisson_bracket(&f2t, &g2t, wt_section, &dt_exact)?;
            wt_agreement = wt_agreement.max((jac - section_value).abs());
        }
        checks.push(Check::below(
            &format!("{tag}/w-section-agreement"),
            w_agreement,
            1e-8,
        ));
        checks.push(Check::below(
            &format!("{tag}/wtilde-section-agreement"),
            wt_agreement,
            1e-8,
        ));
        checks.push(Check::below(
            &format!("{tag}/bracket-flow-invariance"),
            flow_invariance,
            1e-7,
        ));

        // Agreement with the bracket induced by the solution-space 2-form.
        let mut omega_agreement = 0.0_f64;
        for p in pts.iter().take(10) {
            let jac = contact.jacobi_bracket(&f, &g, p)?;
            let omega_value = omega_bracket_on_labels(&free, p, flabel, glabel)?;
            omega_agreement = omega_agreement.max((jac - omega_value).abs());
        }
        checks.push(Check::below(
            &format!("{tag}/omega-bracket-agreement"),
            omega_agreement,
            1e-7,
        ));
    }

    // Leibniz within the invariant subalgebra: [fg, h] = f[g, h] + g[f, h]
    // for f = Q, g = P, h = P².
    let f = Expression::parse("q - p*s", &chart)?;
    let g = Expression::parse("p", &chart)?;
    let h = Expression::parse("p^2", &chart)?;
    let fg = Expression::parse("(q - p*s)*p", &chart)?;
    let mut leibniz = 0.0_f64;
    for p in &pts {
        let lhs = contact.jacobi_bracket(&fg, &h, p)?;
        let rhs = f.evaluate(p)? * contact.jacobi_bracket(&g, &h, p)?
            + g.evaluate(p)? * contact.jacobi_bracket(&f, &h, p)?;
        leibniz = leibniz.max((lhs - rhs).abs());
    }
    checks.push(Check::below("leibniz-on-invariants", leibniz, 1e-6));

    // Bracket laws on the three standing charts (criterion: antisymmetry,
    // Jacobi identity on a fixed polynomial triple, field homomorphism).
    bracket_law_checks(&mut checks, seed)?;

    Ok(checks)
}

/// Label-space bracket induced by Ω: build the free-particle solution with
/// the labels of `point`, transport the standard variation basis, and
/// contract label gradients with the inverse of the Ω matrix.
fn omega_bracket_on_labels(
    free: &SystemSpec,
    point: &ChartPoint,
    flabel: &str,
    glabel: &str,
) -> Result<f64> {
    let q_label = point.values()[0] - point.values()[1] * point.values()[2];
    let p_label = point.values()[1];
    let section = solve_bvp(free, &[q_label], &[q_label + p_label], (0.0, 1.0), 64)?;
    let u1 = transport_variation(&section, free, &[1.0], &[0.0])?;
    let u2 = transport_variation(&section, free, &[0.0], &[1.0])?;
    // Label tangents of the basis at s = 0: δQ = δq − s δp = δq, δP = δp.
    let m = DMatrix::<f64>::identity(2, 2);
    let mut omega = DMatrix::<f64>::zeros(2, 2);
    omega[(0, 1)] = crate::variational::omega_form(&section, &u1, &u2, 0)?;
    omega[(1, 0)] = -omega[(0, 1)];
    let pi = &m
        * omega
            .try_inverse()
            .ok_or_else(|| Error::SingularJacobian("Ω matrix is singular".to_string()))?
        * m.transpose();
    let label_chart = Section::W(0.0).chart();
    let f = Expression::parse(flabel, &label_chart)?;
    let g = Expression::parse(glabel, &label_chart)?;
    let at = ChartPoint::new(&label_chart, vec![q_label, p_label])?;
    let grad = |e: &Expression| -> Result<DVector<f64>> {
        Ok(DVector::from_vec(vec![
            e.differentiate_index(0).evaluate(&at)?,
            e.differentiate_index(1).evaluate(&at)?,
        ]))
    };
    Ok(grad(&f)?.dot(&(pi * grad(&g)?)))
}

/// Antisymmetry, the Jacobi identity on a fixed polynomial triple, and the
/// homomorphism [X_f, X_g] = X_{[f,g]} on the three standing charts.
fn bracket_law_checks(checks: &mut Vec<Check>, seed: u64) -> Result<()> {
    struct ChartCase {
        name: &'static str,
        contact: ContactStructure,
        points: Vec<ChartPoint>,
        triple: [Expression; 3],
    }

    let mut rng = SplitMix64::new(seed ^ 0x5eed);
    let mut cases = Vec::new();

    let dc = darboux_contact()?;
    let dchart = darboux_chart();
    let dpts = sample_points(&SampleBox::uniform(&dchart, -1.5, 1.5), None, 50, &mut rng)?;
    cases.push(ChartCase {
        name: "darboux",
        contact: dc,
        points: dpts,
        triple: [
            Expression::parse("Q", &dchart)?,
            Expression::parse("P^2", &dchart)?,
            Expression::parse("Q*P + W", &dchart)?,
        ],
    });

    let free = free_particle();
    let fchart = free.chart().clone();
    let fpts = sample_points(
        &SampleBox::from_named(&fchart, &[("p", (0.5, 2.0))], (-1.5, 1.5))?,
        free.exclude(),
        50,
        &mut rng,
    )?;
    cases.push(ChartCase {
        name: "free-particle",
        contact: free.contact(&fpts[0])?,
        points: fpts,
        triple: [
            Expression::parse("q", &fchart)?,
            Expression::parse("p^2", &fchart)?,
            Expression::parse("q*p + s", &fchart)?,
        ],
    });

    let shell = MassShellSpec::new(1.0)?;
    let schart = shell.chart().clone();
    let spts = sample_points(
        &SampleBox::from_named(
            &schart,
            &[
                ("p1", (-1.0, 1.0)),
                ("p2", (-1.0, 1.0)),
                ("p3", (-1.0, 1.0)),
            ],
            (-1.5, 1.5),
        )?,
        None,
        50,
        &mut rng,
    )?;
    cases.push(ChartCase {
        name: "mass-shell",
        contact: shell.contact()?,
        points: spts,
        triple: [
            Expression::parse("u1", &schart)?,
            Expression::parse("p1^2", &schart)?,
            Expression::parse("u0*p2 + u3", &schart)?,
        ],
    });

    for case in cases {
        let [f, g, h] = &case.triple;
        let mut antisymmetry = 0.0_f64;
        for p in &case.points {
            let fg = case.contact.jacobi_bracket(f, g, p)?;
            let gf = case.contact.jacobi_bracket(g, f, p)?;
            antisymmetry = antisymmetry.max((fg + gf).abs());
            antisymmetry = antisymmetry.max(case.contact.jacobi_bracket(f, f, p)?.abs());
        }
        checks.push(Check::below(
            &format!("laws/{}/antisymmetry", case.name),
            antisymmetry,
            1e-6,
        ));

        let fg = case.contact.bracket_field(f, g);
        let gh = case.contact.bracket_field(g, h);
        let hf = case.contact.bracket_field(h, f);
        let mut jacobi = 0.0_f64;
        for p in case.points.iter().take(25) {
            let cyc = case.contact.jacobi_bracket(&fg, h, p)?
                + case.contact.jacobi_bracket(&gh, f, p)?
                + case.contact.jacobi_bracket(&hf, g, p)?;
            jacobi = jacobi.max(cyc.abs());
        }
        checks.push(Check::below(
            &format!("laws/{}/jacobi-identity", case.name),
            jacobi,
            1e-6,
        ));

        let xf = case.contact.jacobian_vector_field(f);
        let xg = case.contact.jacobian_vector_field(g);
        let mut homomorphism = 0.0_f64;
        for p in case.points.iter().take(25) {
            let lhs = commutator_fd(&xf, &xg, p, FD_STEP)?;
            let rhs = case.contact.jacobian_field_at(&fg, p)?;
            homomorphism = homomorphism.max((lhs - rhs).amax());
        }
        checks.push(Check::below(
            &format!("laws/{}/field-homomorphism", case.name),
            homomorphism,
            1e-6,
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------------
// omega
// ---------------------------------------------------------------------

fn omega_checks() -> Result<Vec<Check>> {
    let mut checks = Vec::new();

    let oscillator = harmonic_oscillator();
    let section = solve_bvp(
        &oscillator,
        &[0.0],
        &[1.0],
        (0.0, std::f64::consts::FRAC_PI_2),
        64,
    )?;
    let table = omega_basis_table(&section, &oscillator)?;
    checks.push(Check::below(
        "oscillator/node-spread",
        table.max_spread,
        1e-8,
    ));

    let free = free_particle();
    let section = solve_bvp(&free, &[0.0], &[1.0], (0.0, 1.0), 64)?;
    let table = omega_basis_table(&section, &free)?;
    let mut deviation = 0.0_f64;
    for m in &table.per_node {
        deviation = deviation.max((m[(0, 1)] - 1.0).abs());
        deviation = deviation.max((m[(1, 0)] + 1.0).abs());
        deviation = deviation.max(m[(0, 0)].abs()).max(m[(1, 1)].abs());
    }
    checks.push(Check::below("free-particle/omega-matrix", deviation, 1e-10));

    // The degenerate oscillator span must be reported as singular.
    let conjugate = solve_bvp(&oscillator, &[0.0], &[0.0], (0.0, std::f64::consts::PI), 64);
    let detected = matches!(conjugate, Err(Error::SingularJacobian(_)));
    checks.push(Check::below(
        "oscillator/conjugate-span-detected",
        if detected { 0.0 } else { 1.0 },
        0.5,
    ));

    Ok(checks)
}

// ---------------------------------------------------------------------
// schwinger-weiss
// ---------------------------------------------------------------------

fn schwinger_weiss_checks(seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let mut rng = SplitMix64::new(seed);
    for (name, spec) in [
        ("free-particle", free_particle()),
        ("oscillator", harmonic_oscillator()),
        ("quartic", SystemSpec::new(1, "p^2/2 + q^4/4")?),
    ] {
        let mut worst = 0.0_f64;
        for _ in 0..20 {
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
            let fd = action_directional_derivative_fd(&section, &variation, &spec, 3e-6)?;
            let el = el_pairing(&section, &variation, &spec)?;
            let b = boundary_term(&section, &variation, &spec)?;
            worst = worst.max((fd - el - b).abs());
        }
        checks.push(Check::below(&format!("{name}/decomposition"), worst, 1e-9));
    }
    Ok(checks)
}

// ---------------------------------------------------------------------
// poincare (all §-relativistic identities)
// ---------------------------------------------------------------------

fn poincare_checks(seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let mut rng = SplitMix64::new(seed);
    let spec = MassShellSpec::new(1.0)?;
    let contact = spec.contact()?;
    let chart = spec.chart().clone();
    let sbox = SampleBox::from_named(
        &chart,
        &[
            ("p1", (-1.0, 1.0)),
            ("p2", (-1.0, 1.0)),
            ("p3", (-1.0, 1.0)),
        ],
        (-2.0, 2.0),
    )?;

    // Position brackets at 100 points.
    let pts = sample_points(&sbox, None, 100, &mut rng)?;
    let coords: Vec<Expression> = (0..4)
        .map(|mu| Expression::coord(&chart, &format!("u{mu}")))
        .collect::<Result<_>>()?;
    let mut uu = 0.0_f64;
    for p in &pts {
        let up = spec.p_upper(p)?;
        for mu in 0..4 {
            for nu in (mu + 1)..4 {
                let bracket = contact.jacobi_bracket(&coords[mu], &coords[nu], p)?;
                let expected = p.values()[mu] * up[nu] - p.values()[nu] * up[mu];
                uu = uu.max((bracket - expected).abs());
            }
        }
    }
    checks.push(Check::below("position-brackets", uu, 1e-9));

    // Closure on the Poincaré structure constants at 50 points.
    let closure_pts = sample_points(&sbox, None, 50, &mut rng)?;
    let table = poincare_closure_table(&spec, &closure_pts)?;
    let worst = table
        .iter()
        .map(|row| row.max_residual)
        .fold(0.0_f64, f64::max);
    checks.push(Check::below("closure-structure-constants", worst, 1e-8));

    // Jacobian fields match the generator fields at 50 points.
    let mut fields = 0.0_f64;
    for label in PoincareLabel::all() {
        let f = poincare_function(&spec, label)?;
        let printed = poincare_field(&spec, label)?;
        for p in &closure_pts {
            let via_lambda = contact.jacobian_field_at(&f, p)?;
            fields = fields.max((via_lambda - printed.eval(p)?).amax());
        }
    }
    checks.push(Check::below("generator-fields", fields, 1e-7));

    // Newton–Wigner conservation along the kinematical flow.
    let x = spec.landau_field();
    let mut nw_drift = 0.0_f64;
    for p in pts.iter().take(10) {
        let before = spec.newton_wigner(p)?;
        let u0 = p.values()[0];
        let traj = integrate_flow(&x, p, (u0, u0 + 5.0), 1e-3, Method::Rk4, None)?;
        let after = spec.newton_wigner(traj.end())?;
        for j in 0..3 {
            nw_drift = nw_drift.max((before.q[j] - after.q[j]).abs());
            nw_drift = nw_drift.max((before.p[j] - after.p[j]).abs());
        }
    }
    checks.push(Check::below("newton-wigner-drift", nw_drift, 1e-9));

    // Γ(T) = 1 on the shell.
    let t = spec.dynamical_time();
    let mut rate_residual = 0.0_f64;
    for p in &pts {
        let gamma = contact.reeb_at(p)?;
        let mut rate = 0.0;
        for i in 0..7 {
            rate += gamma[i] * t.differentiate_index(i).evaluate(p)?;
        }
        rate_residual = rate_residual.max((rate - 1.0).abs());
    }
    checks.push(Check::below("dynamical-time-rate", rate_residual, 1e-10));

    // Invariance of the bracket under a finite Poincaré transformation.
    let gen = 0.3 * lorentz_generator(0, 1) + 0.4 * lorentz_generator(1, 2);
    let lorentz = matrix_exp_rk4(&gen, 512);
    let map = poincare_chart_map(&spec, &lorentz, &[0.1, -0.2, 0.3, 0.05])?;
    let f = Expression::parse("u1*p2", &chart)?;
    let h = Expression::parse("u0*p1 + u3", &chart)?;
    let f_composed = map.pullback_function(&f)?;
    let h_composed = map.pullback_function(&h)?;
    let mut invariance = 0.0_f64;
    for p in pts.iter().take(30) {
        let lhs = contact.jacobi_bracket(&f_composed, &h_composed, p)?;
        let rhs = contact.jacobi_bracket(&f, &h, &map.apply(p)?)?;
        invariance = invariance.max((lhs - rhs).abs());
    }
    checks.push(Check::below(
        "bracket-poincare-invariance",
        invariance,
        1e-6,
    ));

    // Reparametrization invariance of the covariant Euler–Lagrange
    // residuals on a straight worldline.
    let p_spatial = [0.4, -0.3, 0.2];
    let p0 = (p_spatial.iter().map(|v| v * v).sum::<f64>() + 1.0).sqrt();
    let p_up = [p0, -p_spatial[0], -p_spatial[1], -p_spatial[2]];
    let straight = |lambda: f64| -> Result<ChartPoint> {
        spec.embed(
            &[
                0.1 + lambda * p_up[0],
                -0.5 + lambda * p_up[1],
                0.2 + lambda * p_up[2],
                lambda * p_up[3],
            ],
            &p_spatial,
        )
    };
    let mut worst_straight = 0.0_f64;
    let curve: Vec<(f64, ChartPoint)> = (0..21)
        .map(|i| Ok((i as f64 * 0.05, straight(i as f64 * 0.05)?)))
        .collect::<Result<_>>()?;
    for r in reparam_el_residual(&spec, &curve)? {
        worst_straight = worst_straight.max(r.p_dot).max(r.projector);
    }
    checks.push(Check::below("reparam-straight", worst_straight, 1e-8));

    let mut worst_cubed = 0.0_f64;
    let curve: Vec<(f64, ChartPoint)> = (0..21)
        .map(|i| {
            let l = 1.0 + i as f64 * 0.05;
            Ok((l, straight(l * l * l)?))
        })
        .collect::<Result<_>>()?;
    for r in reparam_el_residual(&spec, &curve)? {
        worst_cubed = worst_cubed.max(r.p_dot).max(r.projector);
    }
    checks.push(Check::below("reparam-cubed", worst_cubed, 1e-8));

    Ok(checks)
}

// ---------------------------------------------------------------------
// darboux
// ---------------------------------------------------------------------

fn darboux_checks(seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let mut rng = SplitMix64::new(seed);
    let free = free_particle();
    let fbox = SampleBox::from_named(free.chart(), &[("p", (0.3, 2.0))], (-2.0, 2.0))?;
    let pts = sample_points(&fbox, free.exclude(), 100, &mut rng)?;

    // Pullback identity: coefficients of θ_H and of φ*(dW + P dQ) agree.
    let theta = free.theta();
    let dc = darboux_contact()?;
    let pulled = darboux_map().pullback_oneform(dc.theta())?;
    let mut pullback = 0.0_f64;
    for p in &pts {
        pullback = pullback.max((theta.eval(p)? - pulled.eval(p)?).amax());
    }
    checks.push(Check::below("pullback-coefficients", pullback, 1e-10));

    // Round trip through (Q, P, W) and back.
    let mut roundtrip = 0.0_f64;
    for p in &pts {
        let back = darboux_inverse(&darboux_point(p)?)?;
        for (a, b) in back.values().iter().zip(p.values()) {
            roundtrip = roundtrip.max((a - b).abs());
        }
    }
    checks.push(Check::below("roundtrip", roundtrip, 1e-12));

    // Hamilton–Jacobi residual of the generating function.
    let mut hj = 0.0_f64;
    for _ in 0..100 {
        let q = rng.next_in(-2.0, 2.0);
        let q_label = rng.next_in(-2.0, 2.0);
        let s = rng.next_in(0.2, 2.0);
        hj = hj.max(hamilton_jacobi_residual(q, q_label, s)?.abs());
    }
    checks.push(Check::below("hamilton-jacobi", hj, 1e-10));

    // θ agrees with its tilde-coordinate expression.
    let tc = tilde_contact()?;
    let tilde_pulled = tilde_map().pullback_oneform(tc.theta())?;
    let dpts = sample_points(
        &SampleBox::uniform(&darboux_chart(), -2.0, 2.0),
        None,
        50,
        &mut rng,
    )?;
    let mut tilde_pullback = 0.0_f64;
    for p in &dpts {
        tilde_pullback = tilde_pullback.max((dc.theta().eval(p)? - tilde_pulled.eval(p)?).amax());
    }
    checks.push(Check::below("tilde-pullback", tilde_pullback, 1e-10));

    let mut tilde_roundtrip = 0.0_f64;
    for p in &dpts {
        let back = crate::extended::tilde_inverse(&tilde_point(p)?)?;
        for (a, b) in back.values().iter().zip(p.values()) {
            tilde_roundtrip = tilde_roundtrip.max((a - b).abs());
        }
    }
    checks.push(Check::below("tilde-roundtrip", tilde_roundtrip, 1e-12));

    // The lift through the W̃-section moves W: its derivative along the
    // lift of Q̃ is Q̃/2, bounded away from zero on |Q̃| ≥ 0.5.
    let tchart = crate::extended::tilde_chart();
    let w_in_tilde = Expression::parse("Wt - Pt*Qt/2", &tchart)?;
    let mut min_rate = f64::INFINITY;
    for _ in 0..50 {
        let qt = rng.next_in(0.5, 2.0) * if rng.next_f64() < 0.5 { -1.0 } else { 1.0 };
        let pt = ChartPoint::new(
            &tchart,
            vec![qt, rng.next_in(-2.0, 2.0), rng.next_in(-2.0, 2.0)],
        )?;
        // Lift of Q̃ through the section bivector: ±∂/∂P̃.
        let rate = w_in_tilde.differentiate("Pt")?.evaluate(&pt)?.abs();
        min_rate = min_rate.min(rate);
    }
    checks.push(Check::above("tilde-lift-nontangency", min_rate, 0.1));

    Ok(checks)
}

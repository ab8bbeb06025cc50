//! Non-relativistic mechanics on the extended phase space T*Q × ℝ with
//! coordinates (u^a, p_a, s): the contact form θ_H = p_a du^a − H ds, the
//! dynamics field X_H, flows, the free-particle Darboux transformation and
//! level-set Poisson brackets.

use std::sync::Arc;

use nalgebra::DVector;

use crate::chart::{Chart, ChartPoint};
use crate::contact::ContactStructure;
use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::forms::{Bivector, ChartMap, OneForm, VectorField};

/// Chart (u^1..u^n, p_1..p_n, s). For n = 1 the coordinates are written
/// (q, p, s), with u1/p1 accepted as aliases.
pub fn nonrel_chart(n: usize) -> Arc<Chart> {
    assert!(n >= 1, "configuration dimension must be at least 1");
    if n == 1 {
        Chart::with_base_and_defs(
            "extended-1",
            &["q", "p", "s"],
            2,
            &[("u1", "q".to_string()), ("p1", "p".to_string())],
        )
    } else {
        let mut names: Vec<String> = (1..=n).map(|a| format!("u{a}")).collect();
        names.extend((1..=n).map(|a| format!("p{a}")));
        names.push("s".to_string());
        let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        Chart::with_base(&format!("extended-{n}"), &refs, 2 * n)
    }
}

/// Chart with caller-chosen coordinate names, laid out positions-first:
/// (u^1..u^n, p_1..p_n, s). Used by spec files that rename coordinates
/// (e.g. a Darboux chart (Q, P, W) seen as an extended phase space).
pub fn nonrel_chart_named(n: usize, names: &[String]) -> Result<Arc<Chart>> {
    if names.len() != 2 * n + 1 {
        return Err(Error::Config(format!(
            "expected {} coordinate names, got {}",
            2 * n + 1,
            names.len()
        )));
    }
    let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    Ok(Chart::with_base(
        &format!("extended-{}-{}", n, names.join("-")),
        &refs,
        2 * n,
    ))
}

/// A non-relativistic model: configuration dimension, Hamiltonian over the
/// chart, and an optional excluded region (the zero set of a predicate).
#[derive(Debug, Clone)]
pub struct SystemSpec {
    n: usize,
    chart: Arc<Chart>,
    hamiltonian: Expression,
    exclude: Option<Expression>,
}

impl SystemSpec {
    pub fn new(n: usize, hamiltonian: &str) -> Result<SystemSpec> {
        SystemSpec::on_chart(n, nonrel_chart(n), hamiltonian)
    }

    pub fn on_chart(n: usize, chart: Arc<Chart>, hamiltonian: &str) -> Result<SystemSpec> {
        if chart.dim() != 2 * n + 1 {
            return Err(Error::Precondition(format!(
                "chart `{}` has dimension {}, expected {}",
                chart.id(),
                chart.dim(),
                2 * n + 1
            )));
        }
        let hamiltonian = Expression::parse(hamiltonian, &chart)?;
        Ok(SystemSpec {
            n,
            chart,
            hamiltonian,
            exclude: None,
        })
    }

    pub fn with_exclude(mut self, predicate: &str) -> Result<SystemSpec> {
        self.exclude = Some(Expression::parse(predicate, &self.chart)?);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn hamiltonian(&self) -> &Expression {
        &self.hamiltonian
    }

    pub fn exclude(&self) -> Option<&Expression> {
        self.exclude.as_ref()
    }

    /// Index of position coordinate u^a (a = 0..n-1).
    pub fn u_index(&self, a: usize) -> usize {
        a
    }

    /// Index of momentum coordinate p_a.
    pub fn p_index(&self, a: usize) -> usize {
        self.n + a
    }

    pub fn s_index(&self) -> usize {
        2 * self.n
    }

    /// θ_H = p_a du^a − H ds.
    pub fn theta(&self) -> OneForm {
        let mut comps = Vec::with_capacity(self.chart.dim());
        for a in 0..self.n {
            comps.push(
                Expression::coord(&self.chart, self.chart.coord_name(self.p_index(a))).unwrap(),
            );
        }
        for _ in 0..self.n {
            comps.push(Expression::zero(&self.chart));
        }
        comps.push(-self.hamiltonian.clone());
        OneForm::new(&self.chart, comps)
    }

    /// X_H = ∂/∂s + ∂H/∂p_a ∂/∂u^a − ∂H/∂u^a ∂/∂p_a.
    pub fn dynamics_field(&self) -> VectorField {
        let mut comps = Vec::with_capacity(self.chart.dim());
        for a in 0..self.n {
            comps.push(self.hamiltonian.differentiate_index(self.p_index(a)));
        }
        for a in 0..self.n {
            comps.push(-self.hamiltonian.differentiate_index(self.u_index(a)));
        }
        comps.push(Expression::one(&self.chart));
        VectorField::symbolic(&self.chart, comps)
    }

    /// The contraction i_{X_H} θ_H = p_a ∂H/∂p_a − H.
    pub fn lagrangian(&self) -> Expression {
        let mut acc = -self.hamiltonian.clone();
        for a in 0..self.n {
            let p = Expression::coord(&self.chart, self.chart.coord_name(self.p_index(a))).unwrap();
            acc = acc + p * self.hamiltonian.differentiate_index(self.p_index(a));
        }
        acc
    }

    /// Closed-form Reeb field Γ = X_H / i_{X_H}θ_H, valid away from the
    /// zero set of i_{X_H}θ_H.
    pub fn reeb_field(&self) -> VectorField {
        let scale = self.lagrangian();
        let comps = self
            .dynamics_field()
            .symbolic_components()
            .unwrap()
            .iter()
            .map(|c| c.clone() / scale.clone())
            .collect();
        VectorField::symbolic(&self.chart, comps)
    }

    /// Contact structure carried by θ_H; `probe` must satisfy the contact
    /// condition.
    pub fn contact(&self, probe: &ChartPoint) -> Result<ContactStructure> {
        ContactStructure::new(self.theta(), probe)
    }

    /// Point (u, p, s) on the chart.
    pub fn point(&self, u: &[f64], p: &[f64], s: f64) -> Result<ChartPoint> {
        if u.len() != self.n || p.len() != self.n {
            return Err(Error::Precondition(format!(
                "expected {} position and momentum components",
                self.n
            )));
        }
        let mut values = Vec::with_capacity(self.chart.dim());
        values.extend_from_slice(u);
        values.extend_from_slice(p);
        values.push(s);
        ChartPoint::new(&self.chart, values)
    }
}

/// Free particle on a line, H = p²/2, with the zero section p = 0 excluded.
pub fn free_particle() -> SystemSpec {
    SystemSpec::new(1, "p^2/2")
        .unwrap()
        .with_exclude("p")
        .unwrap()
}

/// Harmonic oscillator, H = (p² + q²)/2.
pub fn harmonic_oscillator() -> SystemSpec {
    SystemSpec::new(1, "(p^2 + q^2)/2").unwrap()
}

// ---------------------------------------------------------------------
// Flows
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Euler,
    Rk4,
}

/// A sampled integral curve: strictly increasing flow parameters with a
/// chart point each, plus integrator metadata.
#[derive(Debug, Clone)]
pub struct Trajectory {
    samples: Vec<(f64, ChartPoint)>,
    method: Method,
    dt: f64,
}

impl Trajectory {
    pub fn samples(&self) -> &[(f64, ChartPoint)] {
        &self.samples
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn start(&self) -> &ChartPoint {
        &self.samples[0].1
    }

    pub fn end(&self) -> &ChartPoint {
        &self.samples[self.samples.len() - 1].1
    }

    /// A trajectory is a section of the fibration when the base coordinate
    /// of every sample equals the flow parameter.
    pub fn is_section(&self) -> bool {
        match self.samples[0].1.chart().base_index() {
            None => false,
            Some(b) => self
                .samples
                .iter()
                .all(|(t, p)| (p.values()[b] - t).abs() < 1e-9),
        }
    }
}

fn rk4_step(x: &VectorField, p: &ChartPoint, dt: f64) -> Result<ChartPoint> {
    let chart = p.chart().clone();
    let v = DVector::from_column_slice(p.values());
    let k1 = x.eval(p)?;
    let k2 = x.eval(&ChartPoint::new(&chart, (&v + 0.5 * dt * &k1).data.into())?)?;
    let k3 = x.eval(&ChartPoint::new(&chart, (&v + 0.5 * dt * &k2).data.into())?)?;
    let k4 = x.eval(&ChartPoint::new(&chart, (&v + dt * &k3).data.into())?)?;
    let next = v + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    ChartPoint::new(&chart, next.data.into())
}

fn euler_step(x: &VectorField, p: &ChartPoint, dt: f64) -> Result<ChartPoint> {
    let chart = p.chart().clone();
    let v = DVector::from_column_slice(p.values());
    let next = v + dt * x.eval(p)?;
    ChartPoint::new(&chart, next.data.into())
}

/// Integrate the flow of `x` from `start` over `span` with fixed step
/// `dt` (the final step is shortened to land on the endpoint). The flow
/// fails with a domain error if it enters the excluded region.
pub fn integrate_flow(
    x: &VectorField,
    start: &ChartPoint,
    span: (f64, f64),
    dt: f64,
    method: Method,
    exclude: Option<&Expression>,
) -> Result<Trajectory> {
    if !(dt > 0.0) {
        return Err(Error::Precondition(format!(
            "dt must be positive, got {dt}"
        )));
    }
    if !(span.1 > span.0) {
        return Err(Error::Precondition(format!(
            "span must be increasing, got ({}, {})",
            span.0, span.1
        )));
    }
    start.check_chart(x.chart())?;
    let check_excluded = |p: &ChartPoint, t: f64| -> Result<()> {
        if let Some(pred) = exclude {
            if pred.evaluate(p)?.abs() < 1e-9 {
                return Err(Error::ExcludedRegion { at: t });
            }
        }
        Ok(())
    };
    check_excluded(start, span.0)?;
    let mut samples = vec![(span.0, start.clone())];
    let mut t = span.0;
    let mut current = start.clone();
    while t < span.1 - 1e-15 * span.1.abs().max(1.0) {
        let step = dt.min(span.1 - t);
        current = match method {
            Method::Rk4 => rk4_step(x, &current, step)?,
            Method::Euler => euler_step(x, &current, step)?,
        };
        t += step;
        check_excluded(&current, t)?;
        samples.push((t, current.clone()));
    }
    Ok(Trajectory {
        samples,
        method,
        dt,
    })
}

// ---------------------------------------------------------------------
// Free-particle Darboux coordinates
// ---------------------------------------------------------------------

pub fn darboux_chart() -> Arc<Chart> {
    Chart::with_base("darboux-1", &["Q", "P", "W"], 2)
}

pub fn tilde_chart() -> Arc<Chart> {
    Chart::with_base("darboux-tilde-1", &["Qt", "Pt", "Wt"], 2)
}

/// The free-particle transformation (q, p, s) → (Q, P, W) with
/// Q = q − ps, P = p, W = p²s/2, as a symbolic map.
pub fn darboux_map() -> ChartMap {
    let src = nonrel_chart(1);
    let dst = darboux_chart();
    ChartMap::new(
        &src,
        &dst,
        vec![
            Expression::parse("q - p*s", &src).unwrap(),
            Expression::parse("p", &src).unwrap(),
            Expression::parse("p^2*s/2", &src).unwrap(),
        ],
    )
}

pub fn darboux_point(p: &ChartPoint) -> Result<ChartPoint> {
    darboux_map().apply(p)
}

/// Inverse transformation; undefined at P = 0 where s = 2W/P² is not
/// recoverable.
pub fn darboux_inverse(p: &ChartPoint) -> Result<ChartPoint> {
    p.check_chart(&darboux_chart())?;
    let q_big = p.values()[0];
    let p_big = p.values()[1];
    let w = p.values()[2];
    if p_big == 0.0 {
        return Err(Error::Precondition(
            "Darboux inverse is undefined at P = 0 (s is not recoverable)".to_string(),
        ));
    }
    let s = 2.0 * w / (p_big * p_big);
    let q = q_big + p_big * s;
    ChartPoint::new(&nonrel_chart(1), vec![q, p_big, s])
}

/// (Q, P, W) → (Q̃, P̃, W̃) = (Q, P, W + PQ/2).
pub fn tilde_map() -> ChartMap {
    let src = darboux_chart();
    let dst = tilde_chart();
    ChartMap::new(
        &src,
        &dst,
        vec![
            Expression::parse("Q", &src).unwrap(),
            Expression::parse("P", &src).unwrap(),
            Expression::parse("W + P*Q/2", &src).unwrap(),
        ],
    )
}

pub fn tilde_point(p: &ChartPoint) -> Result<ChartPoint> {
    tilde_map().apply(p)
}

pub fn tilde_inverse(p: &ChartPoint) -> Result<ChartPoint> {
    p.check_chart(&tilde_chart())?;
    let q = p.values()[0];
    let pp = p.values()[1];
    let wt = p.values()[2];
    ChartPoint::new(&darboux_chart(), vec![q, pp, wt - pp * q / 2.0])
}

/// θ = dW + P dQ on the Darboux chart, with closed-form Reeb field ∂/∂W
/// and closed-form bivector attached.
pub fn darboux_contact() -> Result<ContactStructure> {
    let chart = darboux_chart();
    let theta = OneForm::new(
        &chart,
        vec![
            Expression::coord(&chart, "P").unwrap(),
            Expression::zero(&chart),
            Expression::one(&chart),
        ],
    );
    let gamma = VectorField::symbolic(
        &chart,
        vec![
            Expression::zero(&chart),
            Expression::zero(&chart),
            Expression::one(&chart),
        ],
    );
    // Λ(dQ, dP) = −1, Λ(dP, dW) = −P, Λ(dQ, dW) = 0.
    let mut lambda = Bivector::zero(&chart);
    lambda.set_upper(0, 1, Expression::constant(&chart, -1.0));
    lambda.set_upper(1, 2, -Expression::coord(&chart, "P").unwrap());
    let probe = ChartPoint::new(&chart, vec![0.0, 0.0, 0.0])?;
    ContactStructure::with_closed_forms(theta, &probe, Some(gamma), Some(lambda))
}

/// θ in tilde coordinates: dW̃ + (P̃/2) dQ̃ − (Q̃/2) dP̃. (The level sets of
/// W̃ are another family of sections transversal to the dynamics.)
pub fn tilde_contact() -> Result<ContactStructure> {
    let chart = tilde_chart();
    let theta = OneForm::new(
        &chart,
        vec![
            Expression::parse("Pt/2", &chart).unwrap(),
            Expression::parse("-Qt/2", &chart).unwrap(),
            Expression::one(&chart),
        ],
    );
    let gamma = VectorField::symbolic(
        &chart,
        vec![
            Expression::zero(&chart),
            Expression::zero(&chart),
            Expression::one(&chart),
        ],
    );
    let probe = ChartPoint::new(&chart, vec![0.0, 0.0, 0.0])?;
    ContactStructure::with_closed_forms(theta, &probe, Some(gamma), None)
}

/// Residual of the Hamilton–Jacobi equation ∂S/∂s + H(q, ∂S/∂q) = 0 for
/// the free-particle generating function S(Q, q, s) = (q − Q)²/(2s),
/// evaluated symbolically. Undefined at s = 0.
pub fn hamilton_jacobi_residual(q: f64, q_label: f64, s: f64) -> Result<f64> {
    let chart = Chart::new("hj-free", &["q", "Q", "s"]);
    let gen = Expression::parse("(q - Q)^2/(2*s)", &chart)?;
    let ds = gen.differentiate("s")?;
    let dq = gen.differentiate("q")?;
    let residual = ds + dq.powi(2) / Expression::constant(&chart, 2.0);
    residual.evaluate(&ChartPoint::new(&chart, vec![q, q_label, s])?)
}

// ---------------------------------------------------------------------
// Level-set sections and the restricted Poisson bracket
// ---------------------------------------------------------------------

/// A symplectic section of the characteristic foliation: a level set of W
/// on the Darboux chart, or of W̃ on the tilde chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Section {
    W(f64),
    WTilde(f64),
}

impl Section {
    pub fn label(&self) -> String {
        match self {
            Section::W(c) => format!("W = {c}"),
            Section::WTilde(c) => format!("Wt = {c}"),
        }
    }

    /// Chart of the ambient Darboux coordinates this section lives in.
    pub fn ambient_chart(&self) -> Arc<Chart> {
        match self {
            Section::W(_) => darboux_chart(),
            Section::WTilde(_) => tilde_chart(),
        }
    }

    /// Two-dimensional chart of the section coordinates.
    pub fn chart(&self) -> Arc<Chart> {
        match self {
            Section::W(_) => Chart::new("darboux-section", &["Q", "P"]),
            Section::WTilde(_) => Chart::new("darboux-tilde-section", &["Qt", "Pt"]),
        }
    }

    pub fn level(&self) -> f64 {
        match self {
            Section::W(c) | Section::WTilde(c) => *c,
        }
    }
}

/// Poisson bracket on a section, i.e. the canonical bracket induced by the
/// pullback of ω = dP ∧ dQ, normalized so that it agrees with the Jacobi
/// bracket of invariant representatives: {Q, P} = −1. `point` must satisfy
/// the section constraint to 1e-10; `f` and `g` are expressions in the
/// section coordinates.
pub fn restricted_poisson_bracket(
    f: &Expression,
    g: &Expression,
    section: Section,
    point: &ChartPoint,
) -> Result<f64> {
    point.check_chart(&section.ambient_chart())?;
    let residual = (point.values()[2] - section.level()).abs();
    if residual > 1e-10 {
        return Err(Error::OffSection {
            section: section.label(),
            residual,
        });
    }
    let chart = section.chart();
    if f.chart().as_ref() != chart.as_ref() {
        return Err(chart.mismatch(f.chart()));
    }
    if g.chart().as_ref() != chart.as_ref() {
        return Err(chart.mismatch(g.chart()));
    }
    let at = ChartPoint::new(&chart, vec![point.values()[0], point.values()[1]])?;
    // {f, g} = ∂f/∂P ∂g/∂Q − ∂f/∂Q ∂g/∂P.
    let value = f.differentiate_index(1).evaluate(&at)? * g.differentiate_index(0).evaluate(&at)?
        - f.differentiate_index(0).evaluate(&at)? * g.differentiate_index(1).evaluate(&at)?;
    Ok(value)
}

/// Follow the flow of `x` from `start` until `level_fn` crosses `c0`,
/// by interval expansion and bisection on the flow parameter. Tolerance
/// 1e-10 on the level residual.
pub fn flow_to_section(
    x: &VectorField,
    start: &ChartPoint,
    level_fn: &Expression,
    c0: f64,
) -> Result<ChartPoint> {
    let flow_value = |t: f64| -> Result<(f64, ChartPoint)> {
        let p = if t.abs() < 1e-14 {
            start.clone()
        } else {
            let steps = (t.abs() / 0.05).ceil().max(1.0) as usize;
            let dt = t / steps as f64;
            let mut current = start.clone();
            for _ in 0..steps {
                current = rk4_step(x, &current, dt)?;
            }
            current
        };
        Ok((level_fn.evaluate(&p)? - c0, p))
    };
    let (g0, p0) = flow_value(0.0)?;
    if g0.abs() < 1e-10 {
        return Ok(p0);
    }
    // Expand until the level function changes sign.
    let mut span = 0.5;
    let mut bracket = None;
    for _ in 0..12 {
        for t in [span, -span] {
            let (g, _) = flow_value(t)?;
            if g0.signum() != g.signum() {
                bracket = Some((0.0_f64.min(t), 0.0_f64.max(t)));
                break;
            }
        }
        if bracket.is_some() {
            break;
        }
        span *= 2.0;
    }
    let (mut lo, mut hi) = bracket
        .ok_or_else(|| Error::Precondition("flow does not reach the section".to_string()))?;
    let (mut glo, _) = flow_value(lo)?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let (gmid, pmid) = flow_value(mid)?;
        if gmid.abs() < 1e-10 {
            return Ok(pmid);
        }
        if glo.signum() == gmid.signum() {
            lo = mid;
            glo = gmid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NonConvergence {
        iterations: 200,
        residual: (hi - lo).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact::{check_is_invariant, lie_derivative};
    use crate::sample::{sample_points, SampleBox, SplitMix64};

    fn qps_point(q: f64, p: f64, s: f64) -> ChartPoint {
        ChartPoint::new(&nonrel_chart(1), vec![q, p, s]).unwrap()
    }

    #[test]
    fn theta_of_free_particle() {
        let spec = free_particle();
        let theta = spec.theta();
        let pt = qps_point(0.3, 1.5, -0.2);
        let v = theta.eval(&pt).unwrap();
        assert_eq!(v[0], 1.5);
        assert_eq!(v[1], 0.0);
        assert_eq!(v[2], -1.5 * 1.5 / 2.0);
    }

    #[test]
    fn theta_of_zero_hamiltonian_is_tautological() {
        let spec = SystemSpec::new(1, "0").unwrap();
        let pt = qps_point(0.3, 1.5, -0.2);
        let v = spec.theta().eval(&pt).unwrap();
        assert_eq!((v[0], v[1], v[2]), (1.5, 0.0, 0.0));
    }

    #[test]
    fn theta_in_two_degrees_of_freedom() {
        let spec = SystemSpec::new(2, "(p1^2 + p2^2)/2").unwrap();
        let chart = spec.chart().clone();
        let pt = ChartPoint::new(&chart, vec![0.1, 0.2, 0.5, -0.4, 0.0]).unwrap();
        let v = spec.theta().eval(&pt).unwrap();
        assert_eq!(v[0], 0.5);
        assert_eq!(v[1], -0.4);
        assert_eq!(v[2], 0.0);
        assert_eq!(v[3], 0.0);
        assert!((v[4] + (0.25 + 0.16) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn dynamics_field_examples() {
        let free = free_particle().dynamics_field();
        let v = free.eval(&qps_point(0.0, 2.0, 0.0)).unwrap();
        assert_eq!((v[0], v[1], v[2]), (2.0, 0.0, 1.0));

        let ho = harmonic_oscillator().dynamics_field();
        let v = ho.eval(&qps_point(0.3, -0.7, 0.1)).unwrap();
        assert_eq!((v[0], v[1], v[2]), (-0.7, -0.3, 1.0));

        let trivial = SystemSpec::new(1, "0").unwrap().dynamics_field();
        let v = trivial.eval(&qps_point(0.3, -0.7, 0.1)).unwrap();
        assert_eq!((v[0], v[1], v[2]), (0.0, 0.0, 1.0));
    }

    #[test]
    fn dynamics_field_spans_kernel_of_omega() {
        // i_{X_H} dθ_H = 0 and i_{X_H} θ_H = p ∂H/∂p − H at sample points.
        for spec in [free_particle(), harmonic_oscillator()] {
            let theta = spec.theta();
            let omega = crate::forms::exterior_derivative(&theta);
            let x = spec.dynamics_field();
            let lag = spec.lagrangian();
            let sb =
                SampleBox::from_named(spec.chart(), &[("p", (0.4, 2.0))], (-1.5, 1.5)).unwrap();
            let mut rng = SplitMix64::new(21);
            for p in sample_points(&sb, None, 40, &mut rng).unwrap() {
                let xv = x.eval(&p).unwrap();
                let contraction = omega.eval(&p).unwrap().transpose() * &xv;
                assert!(contraction.amax() < 1e-10);
                let pairing = theta.eval(&p).unwrap().dot(&xv);
                assert!((pairing - lag.evaluate(&p).unwrap()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn free_particle_reeb_matches_scaled_dynamics() {
        let spec = free_particle();
        let probe = qps_point(0.0, 2.0, 0.0);
        let c = spec.contact(&probe).unwrap();
        let gamma = c.reeb_at(&probe).unwrap();
        // Γ = (2/p²) X_H, components (∂q, ∂p, ∂s) = (1, 0, 0.5) at p = 2.
        assert!((gamma[0] - 1.0).abs() < 1e-10);
        assert!(gamma[1].abs() < 1e-10);
        assert!((gamma[2] - 0.5).abs() < 1e-10);
        let closed = spec.reeb_field().eval(&probe).unwrap();
        assert!((gamma - closed).amax() < 1e-10);
    }

    #[test]
    fn zero_section_is_degenerate() {
        let spec = free_particle();
        let good = qps_point(0.0, 1.0, 0.0);
        let c = spec.contact(&good).unwrap();
        let bad = qps_point(0.0, 0.0, 0.0);
        assert!(matches!(c.reeb_at(&bad), Err(Error::Degenerate { .. })));
    }

    #[test]
    fn free_flow_reaches_closed_form_endpoint() {
        let spec = free_particle();
        let x = spec.dynamics_field();
        let traj = integrate_flow(
            &x,
            &qps_point(0.3, 1.0, 0.0),
            (0.0, 1.0),
            1e-3,
            Method::Rk4,
            spec.exclude(),
        )
        .unwrap();
        assert!(traj.is_section());
        let end = traj.end();
        assert!((end.values()[0] - 1.3).abs() < 1e-9);
        assert!((end.values()[1] - 1.0).abs() < 1e-12);
        assert!((end.values()[2] - 1.0).abs() < 1e-12);
        // The trajectory labels Q = q − ps and P = p do not drift.
        let label = Expression::parse("q - p*s", spec.chart()).unwrap();
        for (_, point) in traj.samples() {
            assert!((label.evaluate(point).unwrap() - 0.3).abs() < 1e-10);
            assert!((point.values()[1] - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn oscillator_period_returns_to_start() {
        let spec = harmonic_oscillator();
        let x = spec.dynamics_field();
        let traj = integrate_flow(
            &x,
            &qps_point(1.0, 0.0, 0.0),
            (0.0, 2.0 * std::f64::consts::PI),
            1e-3,
            Method::Rk4,
            None,
        )
        .unwrap();
        let end = traj.end();
        assert!((end.values()[0] - 1.0).abs() < 1e-6);
        assert!(end.values()[1].abs() < 1e-6);
    }

    #[test]
    fn flow_rejects_bad_steps() {
        let spec = free_particle();
        let x = spec.dynamics_field();
        let start = qps_point(0.0, 1.0, 0.0);
        assert!(matches!(
            integrate_flow(&x, &start, (0.0, 1.0), 0.0, Method::Rk4, None),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            integrate_flow(&x, &start, (1.0, 0.0), 1e-3, Method::Rk4, None),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn energy_is_conserved_along_flow() {
        let spec = harmonic_oscillator();
        let x = spec.dynamics_field();
        let h = spec.hamiltonian();
        let traj = integrate_flow(
            &x,
            &qps_point(1.0, 0.3, 0.0),
            (0.0, 10.0),
            1e-3,
            Method::Rk4,
            None,
        )
        .unwrap();
        let h0 = h.evaluate(traj.start()).unwrap();
        let drift = traj
            .samples()
            .iter()
            .map(|(_, p)| (h.evaluate(p).unwrap() - h0).abs())
            .fold(0.0_f64, f64::max);
        assert!(drift < 1e-8, "energy drift {drift}");
    }

    #[test]
    fn invariants_of_free_motion() {
        let spec = free_particle();
        let chart = spec.chart().clone();
        let x = spec.dynamics_field();
        let sb = SampleBox::from_named(&chart, &[("p", (0.4, 2.0))], (-1.5, 1.5)).unwrap();
        let mut rng = SplitMix64::new(33);
        let sample = sample_points(&sb, None, 30, &mut rng).unwrap();

        let p_mom = Expression::parse("p", &chart).unwrap();
        assert!(check_is_invariant(&p_mom, &x, &sample).unwrap().invariant);

        let label = Expression::parse("q - p*s", &chart).unwrap();
        assert!(check_is_invariant(&label, &x, &sample).unwrap().invariant);

        let q = Expression::parse("q", &chart).unwrap();
        let check = check_is_invariant(&q, &x, &sample).unwrap();
        assert!(!check.invariant);
        let max_p = sample
            .iter()
            .map(|p| p.values()[1].abs())
            .fold(0.0_f64, f64::max);
        assert!((check.max_residual - max_p).abs() < 1e-12);

        // Energy conservation: L_{X_H} H = 0 for autonomous H.
        assert!(
            check_is_invariant(spec.hamiltonian(), &x, &sample)
                .unwrap()
                .invariant
        );
    }

    #[test]
    fn darboux_forward_and_inverse() {
        let p = qps_point(3.0, 2.0, 1.0);
        let d = darboux_point(&p).unwrap();
        assert_eq!(d.values(), &[1.0, 2.0, 2.0]);
        let back = darboux_inverse(&d).unwrap();
        for (a, b) in back.values().iter().zip(p.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        let stuck = ChartPoint::new(&darboux_chart(), vec![1.0, 0.0, 0.0]).unwrap();
        assert!(darboux_inverse(&stuck).is_err());
    }

    #[test]
    fn darboux_pullback_reproduces_theta() {
        // Coefficients of φ*(dW + P dQ) equal those of θ_H wherever p ≠ 0.
        let spec = free_particle();
        let theta = spec.theta();
        let c = darboux_contact().unwrap();
        let pulled = darboux_map().pullback_oneform(c.theta()).unwrap();
        let sb = SampleBox::from_named(spec.chart(), &[("p", (0.3, 2.0))], (-2.0, 2.0)).unwrap();
        let mut rng = SplitMix64::new(17);
        for p in sample_points(&sb, None, 100, &mut rng).unwrap() {
            let a = theta.eval(&p).unwrap();
            let b = pulled.eval(&p).unwrap();
            assert!((a - b).amax() < 1e-10);
        }
    }

    #[test]
    fn tilde_examples() {
        let d = ChartPoint::new(&darboux_chart(), vec![1.0, 2.0, 2.0]).unwrap();
        let t = tilde_point(&d).unwrap();
        assert_eq!(t.values(), &[1.0, 2.0, 3.0]);
        let d2 = ChartPoint::new(&darboux_chart(), vec![0.0, 0.0, 5.0]).unwrap();
        assert_eq!(tilde_point(&d2).unwrap().values(), &[0.0, 0.0, 5.0]);
        let back = tilde_inverse(&t).unwrap();
        assert_eq!(back.values(), d.values());
    }

    #[test]
    fn tilde_theta_agrees_with_pullback() {
        // φ*(θ̃) = θ on the Darboux chart, θ̃ = dW̃ + (P̃/2)dQ̃ − (Q̃/2)dP̃.
        let tc = tilde_contact().unwrap();
        let pulled = tilde_map().pullback_oneform(tc.theta()).unwrap();
        let dc = darboux_contact().unwrap();
        let chart = darboux_chart();
        let sb = SampleBox::uniform(&chart, -2.0, 2.0);
        let mut rng = SplitMix64::new(29);
        for p in sample_points(&sb, None, 50, &mut rng).unwrap() {
            let a = dc.theta().eval(&p).unwrap();
            let b = pulled.eval(&p).unwrap();
            assert!((a - b).amax() < 1e-12);
        }
    }

    #[test]
    fn tilde_section_lift_is_not_tangent_to_w_levels() {
        // The canonical lift through the W̃-section moves W: with
        // W = W̃ − P̃Q̃/2, the lift of f = Q̃ has L_X W = ±Q̃/2 and the lift
        // of f = P̃ has L_X W = ±P̃/2.
        let tchart = tilde_chart();
        let w = Expression::parse("Wt - Pt*Qt/2", &tchart).unwrap();
        // Lift of f(Q̃,P̃) through Λ̃_W: X_f = ∂f/∂P̃ ∂/∂Q̃ − ∂f/∂Q̃ ∂/∂P̃.
        let x_qt = VectorField::symbolic(
            &tchart,
            vec![
                Expression::zero(&tchart),
                -Expression::one(&tchart),
                Expression::zero(&tchart),
            ],
        );
        let x_pt = VectorField::symbolic(
            &tchart,
            vec![
                Expression::one(&tchart),
                Expression::zero(&tchart),
                Expression::zero(&tchart),
            ],
        );
        let p = ChartPoint::new(&tchart, vec![1.4, 0.8, 0.3]).unwrap();
        let lq = lie_derivative(&x_qt, &w, &p).unwrap();
        assert!((lq - 1.4 / 2.0).abs() < 1e-12);
        let lp = lie_derivative(&x_pt, &w, &p).unwrap();
        assert!((lp + 0.8 / 2.0).abs() < 1e-12);
    }

    #[test]
    fn hamilton_jacobi_equation_holds() {
        let mut rng = SplitMix64::new(41);
        for _ in 0..50 {
            let q = rng.next_in(-2.0, 2.0);
            let q_label = rng.next_in(-2.0, 2.0);
            let s = rng.next_in(0.2, 2.0);
            assert!(hamilton_jacobi_residual(q, q_label, s).unwrap().abs() < 1e-10);
        }
        assert!(hamilton_jacobi_residual(1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn restricted_bracket_canonical_pair() {
        let section = Section::W(0.0);
        let chart = section.chart();
        let f = Expression::parse("Q", &chart).unwrap();
        let g = Expression::parse("P", &chart).unwrap();
        let on = ChartPoint::new(&darboux_chart(), vec![0.7, -1.1, 0.0]).unwrap();
        assert_eq!(
            restricted_poisson_bracket(&f, &g, section, &on).unwrap(),
            -1.0
        );
        let off = ChartPoint::new(&darboux_chart(), vec![0.7, -1.1, 0.5]).unwrap();
        assert!(matches!(
            restricted_poisson_bracket(&f, &g, section, &off),
            Err(Error::OffSection { .. })
        ));
    }

    #[test]
    fn restricted_bracket_agrees_with_jacobi_on_invariants() {
        // i*([f,g]_J) = {i*f, i*g} on both the W- and the W̃-section.
        let c = darboux_contact().unwrap();
        let chart = darboux_chart();
        let pairs = [("Q", "P"), ("P^2", "Q*P")];
        let mut rng = SplitMix64::new(53);
        for (ftext, gtext) in pairs {
            let f3 = Expression::parse(ftext, &chart).unwrap();
            let g3 = Expression::parse(gtext, &chart).unwrap();
            for _ in 0..50 {
                let q = rng.next_in(-2.0, 2.0);
                let p = rng.next_in(-2.0, 2.0);

                let section = Section::W(0.0);
                let s2 = section.chart();
                let f2 = Expression::parse(ftext, &s2).unwrap();
                let g2 = Expression::parse(gtext, &s2).unwrap();
                let on = ChartPoint::new(&chart, vec![q, p, 0.0]).unwrap();
                let jac = c.jacobi_bracket(&f3, &g3, &on).unwrap();
                let restricted = restricted_poisson_bracket(&f2, &g2, section, &on).unwrap();
                assert!((jac - restricted).abs() < 1e-8);

                // Same labels seen on the W̃-section: points with
                // W = c̃ − PQ/2 restrict to (Q̃, P̃) = (Q, P).
                let section_t = Section::WTilde(0.25);
                let s2t = section_t.chart();
                let f2t =
                    Expression::parse(&ftext.replace('Q', "Qt").replace('P', "Pt"), &s2t).unwrap();
                let g2t =
                    Expression::parse(&gtext.replace('Q', "Qt").replace('P', "Pt"), &s2t).unwrap();
                let on_t = ChartPoint::new(&chart, vec![q, p, 0.25 - p * q / 2.0]).unwrap();
                let jac_t = c.jacobi_bracket(&f3, &g3, &on_t).unwrap();
                let ambient_t = tilde_point(&on_t).unwrap();
                let restricted_t =
                    restricted_poisson_bracket(&f2t, &g2t, section_t, &ambient_t).unwrap();
                assert!((jac_t - restricted_t).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn flow_transport_to_section() {
        let spec = free_particle();
        let x = spec.dynamics_field();
        let w = Expression::parse("p^2*s/2", spec.chart()).unwrap();
        let start = qps_point(1.3, 0.8, 0.9);
        let on_section = flow_to_section(&x, &start, &w, 0.0).unwrap();
        assert!(w.evaluate(&on_section).unwrap().abs() < 1e-10);
        // The trajectory label (Q, P) is preserved by the transport.
        let label = Expression::parse("q - p*s", spec.chart()).unwrap();
        assert!(
            (label.evaluate(&start).unwrap() - label.evaluate(&on_section).unwrap()).abs() < 1e-9
        );
    }
}

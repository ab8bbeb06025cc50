//! Contact structures, Reeb fields and the Jacobi bracket.
//!
//! A chart of odd dimension 2n+1 with a 1-form θ such that ω = dθ has
//! maximal rank carries a unique Reeb field Γ (i_Γω = 0, i_Γθ = 1) and a
//! unique bivector Λ forming a Jacobi pair with Γ:
//!
//! ```text
//! [f, g] = Λ(df, dg) + f Γ(g) − g Γ(f)
//! ```
//!
//! Λ is fixed by two conditions: Λ(θ, ·) = 0, and Λ(α, β) = ω(♯α, ♯β)
//! where ♯α is the unique vector in ker θ with ω(♯α, w) = α(w) for all
//! w ∈ ker θ. This normalization is the one under which the bracket
//! satisfies the Jacobi identity and f ↦ X_f = Λ(df, ·) + f Γ is a Lie
//! algebra homomorphism, [X_f, X_g] = X_{[f,g]}. In Darboux coordinates
//! with θ = dW + P dQ it gives Γ = ∂/∂W and [Q, P] = −1 (equivalently
//! [P, Q] = +1, the Landau–Lifshitz ordering).
//!
//! Γ and Λ are computed pointwise by dense solves; charts are small
//! (dimension ≤ 8). Closed-form Γ or Λ may be attached where known and are
//! cross-checked against the solves at build time.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::chart::{Chart, ChartPoint};
use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::forms::{exterior_derivative, Bivector, OneForm, TwoForm, VectorField};

/// Residual above which a point is declared degenerate (not a contact
/// point), e.g. the zero section p = 0 of the free particle.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// Step for the central differences used on pointwise-evaluable objects.
pub const FD_STEP: f64 = 1e-5;

/// Scalar quantity on a chart whose value and gradient can be evaluated at
/// a point. Expressions differentiate exactly; values produced by solves
/// (e.g. a Jacobi bracket used as the argument of another bracket) fall
/// back to central differences.
pub trait ScalarField: Send + Sync {
    fn chart(&self) -> &Arc<Chart>;
    fn value(&self, p: &ChartPoint) -> Result<f64>;
    fn gradient(&self, p: &ChartPoint) -> Result<DVector<f64>>;
}

impl ScalarField for Expression {
    fn chart(&self) -> &Arc<Chart> {
        Expression::chart(self)
    }

    fn value(&self, p: &ChartPoint) -> Result<f64> {
        self.evaluate(p)
    }

    fn gradient(&self, p: &ChartPoint) -> Result<DVector<f64>> {
        let d = Expression::chart(self).dim();
        let mut g = DVector::zeros(d);
        for i in 0..d {
            g[i] = self.differentiate_index(i).evaluate(p)?;
        }
        Ok(g)
    }
}

type ScalarRule = Arc<dyn Fn(&ChartPoint) -> Result<f64> + Send + Sync>;

/// Pointwise scalar with finite-difference gradients.
#[derive(Clone)]
pub struct NumericScalar {
    chart: Arc<Chart>,
    rule: ScalarRule,
    step: f64,
}

impl NumericScalar {
    pub fn new<F>(chart: &Arc<Chart>, rule: F) -> NumericScalar
    where
        F: Fn(&ChartPoint) -> Result<f64> + Send + Sync + 'static,
    {
        NumericScalar {
            chart: Arc::clone(chart),
            rule: Arc::new(rule),
            step: FD_STEP,
        }
    }
}

impl ScalarField for NumericScalar {
    fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    fn value(&self, p: &ChartPoint) -> Result<f64> {
        (self.rule)(p)
    }

    fn gradient(&self, p: &ChartPoint) -> Result<DVector<f64>> {
        let d = self.chart.dim();
        let mut g = DVector::zeros(d);
        for i in 0..d {
            let h = self.step * p.values()[i].abs().max(1.0);
            let hi = (self.rule)(&p.with_value(i, p.values()[i] + h)?)?;
            let lo = (self.rule)(&p.with_value(i, p.values()[i] - h)?)?;
            g[i] = (hi - lo) / (2.0 * h);
        }
        Ok(g)
    }
}

/// Contact data on a chart: θ, ω = dθ, and pointwise-solvable Γ and Λ.
#[derive(Debug, Clone)]
pub struct ContactStructure {
    chart: Arc<Chart>,
    theta: OneForm,
    omega: TwoForm,
    reeb_closed: Option<VectorField>,
    lambda_closed: Option<Bivector>,
}

impl ContactStructure {
    /// Build from θ; `probe` must be a point where the contact condition
    /// holds (it is checked).
    pub fn new(theta: OneForm, probe: &ChartPoint) -> Result<ContactStructure> {
        let chart = theta.chart().clone();
        if chart.dim().is_multiple_of(2) {
            return Err(Error::Precondition(format!(
                "contact charts must be odd-dimensional, `{}` has dimension {}",
                chart.id(),
                chart.dim()
            )));
        }
        let omega = exterior_derivative(&theta);
        let structure = ContactStructure {
            chart,
            theta,
            omega,
            reeb_closed: None,
            lambda_closed: None,
        };
        structure.reeb_at(probe)?;
        structure.lambda_at(probe)?;
        Ok(structure)
    }

    /// As [`ContactStructure::new`], attaching closed forms for Γ and/or Λ.
    /// The attachments are cross-checked against the pointwise solves at
    /// the probe.
    pub fn with_closed_forms(
        theta: OneForm,
        probe: &ChartPoint,
        reeb: Option<VectorField>,
        lambda: Option<Bivector>,
    ) -> Result<ContactStructure> {
        let mut structure = ContactStructure::new(theta, probe)?;
        if let Some(gamma) = reeb {
            let solved = structure.reeb_at(probe)?;
            let closed = gamma.eval(probe)?;
            let diff = (&solved - &closed).amax();
            if diff > DEGENERACY_TOL {
                return Err(Error::Precondition(format!(
                    "closed-form Reeb field disagrees with the solve at the probe by {diff:.3e}"
                )));
            }
            structure.reeb_closed = Some(gamma);
        }
        if let Some(bivector) = lambda {
            let solved = structure.lambda_at(probe)?;
            let closed = bivector.eval(probe)?;
            let diff = (&solved - &closed).amax();
            if diff > DEGENERACY_TOL {
                return Err(Error::Precondition(format!(
                    "closed-form bivector disagrees with the solve at the probe by {diff:.3e}"
                )));
            }
            structure.lambda_closed = Some(bivector);
        }
        Ok(structure)
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn theta(&self) -> &OneForm {
        &self.theta
    }

    pub fn omega(&self) -> &TwoForm {
        &self.omega
    }

    /// Closed-form Reeb field, when one was attached.
    pub fn reeb_closed(&self) -> Option<&VectorField> {
        self.reeb_closed.as_ref()
    }

    /// Closed-form bivector, when one was attached.
    pub fn lambda_closed(&self) -> Option<&Bivector> {
        self.lambda_closed.as_ref()
    }

    /// Reeb vector at a point, from the (2n+2)-row least-squares system
    /// ω(Γ, ·) = 0, θ(Γ) = 1. Degenerate points are errors.
    pub fn reeb_at(&self, p: &ChartPoint) -> Result<DVector<f64>> {
        p.check_chart(&self.chart)?;
        let d = self.chart.dim();
        let omega = self.omega.eval(p)?;
        let theta = self.theta.eval(p)?;
        let mut a = DMatrix::zeros(d + 1, d);
        // i_Γω = 0 row-block: (Γᵀ Ω)_j = 0  ⇔  (Ωᵀ Γ) = 0.
        a.view_mut((0, 0), (d, d)).copy_from(&omega.transpose());
        a.view_mut((d, 0), (1, d)).copy_from(&theta.transpose());
        let mut b = DVector::zeros(d + 1);
        b[d] = 1.0;
        let svd = a.clone().svd(true, true);
        let gamma = svd
            .solve(&b, 1e-13)
            .map_err(|m| Error::Precondition(m.to_string()))?;
        let residual = (&a * &gamma - &b).amax();
        if residual > DEGENERACY_TOL {
            return Err(Error::Degenerate {
                chart: self.chart.id().to_string(),
                residual,
                tolerance: DEGENERACY_TOL,
            });
        }
        Ok(gamma)
    }

    /// Matrix L with L[i][j] = Λ(dx^i, dx^j) at a point, by inverting ω on
    /// ker θ: with E an orthonormal basis of ker θ and W = EᵀΩE,
    /// L = −E W⁻¹ Eᵀ.
    pub fn lambda_at(&self, p: &ChartPoint) -> Result<DMatrix<f64>> {
        p.check_chart(&self.chart)?;
        let omega = self.omega.eval(p)?;
        let theta = self.theta.eval(p)?;
        let norm = theta.norm();
        if norm < DEGENERACY_TOL {
            return Err(Error::Degenerate {
                chart: self.chart.id().to_string(),
                residual: 1.0,
                tolerance: DEGENERACY_TOL,
            });
        }
        let e = kernel_basis(&theta);
        let w = e.transpose() * &omega * &e;
        let lu = w.clone().lu();
        let rhs = e.transpose();
        let x = lu.solve(&rhs).ok_or(Error::Degenerate {
            chart: self.chart.id().to_string(),
            residual: f64::INFINITY,
            tolerance: DEGENERACY_TOL,
        })?;
        let residual = (&w * &x - &rhs).amax();
        if residual > DEGENERACY_TOL {
            return Err(Error::Degenerate {
                chart: self.chart.id().to_string(),
                residual,
                tolerance: DEGENERACY_TOL,
            });
        }
        Ok(-(&e * x))
    }

    /// Rank of the d×(d+1) matrix [ω | θ]; the contact condition is
    /// rank = d.
    pub fn contact_rank(&self, p: &ChartPoint) -> Result<usize> {
        let d = self.chart.dim();
        let omega = self.omega.eval(p)?;
        let theta = self.theta.eval(p)?;
        let mut m = DMatrix::zeros(d, d + 1);
        m.view_mut((0, 0), (d, d)).copy_from(&omega);
        m.view_mut((0, d), (d, 1)).copy_from(&theta);
        let svd = m.svd(false, false);
        let smax = svd.singular_values.max();
        Ok(svd
            .singular_values
            .iter()
            .filter(|s| **s > 1e-10 * smax.max(1.0))
            .count())
    }

    /// Rank of ω itself (2n on a contact chart).
    pub fn omega_rank(&self, p: &ChartPoint) -> Result<usize> {
        let omega = self.omega.eval(p)?;
        let svd = omega.svd(false, false);
        let smax = svd.singular_values.max();
        Ok(svd
            .singular_values
            .iter()
            .filter(|s| **s > 1e-10 * smax.max(1.0))
            .count())
    }

    pub fn satisfies_contact_condition(&self, p: &ChartPoint) -> Result<bool> {
        Ok(self.contact_rank(p)? == self.chart.dim())
    }

    /// Residuals |θ(Γ) − 1| and ‖i_Γω‖∞ for a candidate Reeb vector.
    pub fn reeb_residuals(&self, p: &ChartPoint, gamma: &DVector<f64>) -> Result<(f64, f64)> {
        let theta = self.theta.eval(p)?;
        let omega = self.omega.eval(p)?;
        let pairing = (theta.dot(gamma) - 1.0).abs();
        let contraction = (omega.transpose() * gamma).amax();
        Ok((pairing, contraction))
    }

    /// The Jacobi bracket [f, g] = Λ(df, dg) + f Γ(g) − g Γ(f) at a point.
    pub fn jacobi_bracket(
        &self,
        f: &dyn ScalarField,
        g: &dyn ScalarField,
        p: &ChartPoint,
    ) -> Result<f64> {
        let lambda = self.lambda_at(p)?;
        let gamma = self.reeb_at(p)?;
        let fv = f.value(p)?;
        let gv = g.value(p)?;
        let df = f.gradient(p)?;
        let dg = g.gradient(p)?;
        Ok(df.dot(&(&lambda * &dg)) + fv * gamma.dot(&dg) - gv * gamma.dot(&df))
    }

    /// [f, g] packaged as a pointwise scalar, so brackets can be nested.
    pub fn bracket_field<F, G>(&self, f: &F, g: &G) -> NumericScalar
    where
        F: ScalarField + Clone + 'static,
        G: ScalarField + Clone + 'static,
    {
        let structure = self.clone();
        let f = f.clone();
        let g = g.clone();
        NumericScalar::new(&self.chart, move |p| structure.jacobi_bracket(&f, &g, p))
    }

    /// The Jacobian vector field X_f = Λ(df, ·) + f Γ, pointwise-evaluable.
    pub fn jacobian_vector_field<F>(&self, f: &F) -> VectorField
    where
        F: ScalarField + Clone + 'static,
    {
        let structure = self.clone();
        let f = f.clone();
        VectorField::pointwise(&self.chart, move |p| structure.jacobian_field_at(&f, p))
    }

    /// X_f evaluated at one point.
    pub fn jacobian_field_at(&self, f: &dyn ScalarField, p: &ChartPoint) -> Result<DVector<f64>> {
        let lambda = self.lambda_at(p)?;
        let gamma = self.reeb_at(p)?;
        let df = f.gradient(p)?;
        // Λ(df, ·)^j = Σ_i ∂_i f L^{ij}.
        Ok(lambda.transpose() * df + f.value(p)? * gamma)
    }
}

/// Orthonormal basis of the hyperplane annihilated by a nonzero covector,
/// via the Householder reflection mapping θ̂ to ±e₁: columns 2..d of the
/// reflection matrix.
fn kernel_basis(theta: &DVector<f64>) -> DMatrix<f64> {
    let d = theta.len();
    let that = theta / theta.norm();
    let mut u = that.clone();
    u[0] += if that[0] >= 0.0 { 1.0 } else { -1.0 };
    let scale = 2.0 / u.dot(&u);
    // H = I − scale · u uᵀ; Hθ̂ = ∓e₁, so He_j (j ≥ 2) ⟂ θ̂.
    let mut e = DMatrix::zeros(d, d - 1);
    for col in 1..d {
        for row in 0..d {
            let id = if row == col { 1.0 } else { 0.0 };
            e[(row, col - 1)] = id - scale * u[row] * u[col];
        }
    }
    e
}

/// Directional derivative L_X f at a point.
pub fn lie_derivative(x: &VectorField, f: &Expression, p: &ChartPoint) -> Result<f64> {
    x.derive(f, p)
}

#[derive(Debug, Clone, Copy)]
pub struct InvarianceCheck {
    pub invariant: bool,
    pub max_residual: f64,
}

/// True iff max |L_X f| over the sample is below 1e-8; the residual is
/// reported either way.
pub fn check_is_invariant(
    f: &Expression,
    x: &VectorField,
    sample: &[ChartPoint],
) -> Result<InvarianceCheck> {
    if sample.is_empty() {
        return Err(Error::Precondition("empty sample".to_string()));
    }
    let mut max_residual: f64 = 0.0;
    for p in sample {
        max_residual = max_residual.max(x.derive(f, p)?.abs());
    }
    Ok(InvarianceCheck {
        invariant: max_residual < 1e-8,
        max_residual,
    })
}

/// Commutator [X, Y] at a point via central differences of the component
/// functions, step scaled by coordinate magnitude. Fields produced by
/// pointwise inversion have no symbolic form, so this is the generic route.
pub fn commutator_fd(
    x: &VectorField,
    y: &VectorField,
    p: &ChartPoint,
    step: f64,
) -> Result<DVector<f64>> {
    if x.chart().as_ref() != y.chart().as_ref() {
        return Err(x.chart().mismatch(y.chart()));
    }
    p.check_chart(x.chart())?;
    let d = x.chart().dim();
    let xv = x.eval(p)?;
    let yv = y.eval(p)?;
    let mut bracket = DVector::zeros(d);
    for j in 0..d {
        let h = step * p.values()[j].abs().max(1.0);
        let hi = p.with_value(j, p.values()[j] + h)?;
        let lo = p.with_value(j, p.values()[j] - h)?;
        let dy = (y.eval(&hi)? - y.eval(&lo)?) / (2.0 * h);
        let dx = (x.eval(&hi)? - x.eval(&lo)?) / (2.0 * h);
        bracket += xv[j] * dy - yv[j] * dx;
    }
    Ok(bracket)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extended::{darboux_chart, darboux_contact};
    use crate::sample::{sample_points, SampleBox, SplitMix64};

    fn dpt(v: &[f64]) -> ChartPoint {
        ChartPoint::new(&darboux_chart(), v.to_vec()).unwrap()
    }

    #[test]
    fn darboux_reeb_is_dw() {
        let c = darboux_contact().unwrap();
        let p = dpt(&[0.7, -1.3, 2.0]);
        let gamma = c.reeb_at(&p).unwrap();
        assert!((gamma[0]).abs() < 1e-12);
        assert!((gamma[1]).abs() < 1e-12);
        assert!((gamma[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn darboux_lambda_components() {
        // θ = dW + P dQ: Λ(dQ,dP) = −1, Λ(dP,dW) = −P, Λ(dQ,dW) = 0.
        let c = darboux_contact().unwrap();
        for pv in [[0.7, -1.3, 2.0], [0.0, 2.0, -1.0], [1.5, 0.0, 0.3]] {
            let p = dpt(&pv);
            let l = c.lambda_at(&p).unwrap();
            assert!((l[(0, 1)] + 1.0).abs() < 1e-10, "L_QP = {}", l[(0, 1)]);
            assert!((l[(1, 2)] + pv[1]).abs() < 1e-10, "L_PW = {}", l[(1, 2)]);
            assert!(l[(0, 2)].abs() < 1e-10);
        }
    }

    #[test]
    fn even_dimensional_chart_is_rejected() {
        let chart = Chart::new("even", &["x", "y"]);
        let theta = OneForm::new(
            &chart,
            vec![
                Expression::coord(&chart, "y").unwrap(),
                Expression::zero(&chart),
            ],
        );
        let probe = ChartPoint::new(&chart, vec![0.0, 1.0]).unwrap();
        assert!(matches!(
            ContactStructure::new(theta, &probe),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn darboux_bracket_of_canonical_pair() {
        let c = darboux_contact().unwrap();
        let chart = darboux_chart();
        let q = Expression::coord(&chart, "Q").unwrap();
        let p = Expression::coord(&chart, "P").unwrap();
        for pv in [[0.7, -1.3, 2.0], [0.0, 2.0, -1.0], [3.0, 1.0, 0.0]] {
            let pt = dpt(&pv);
            let v = c.jacobi_bracket(&q, &p, &pt).unwrap();
            assert!((v + 1.0).abs() < 1e-10, "[Q,P] = {v}");
        }
    }

    #[test]
    fn bracket_of_function_with_itself_vanishes() {
        let c = darboux_contact().unwrap();
        let chart = darboux_chart();
        let f = Expression::parse("Q^2*P - W", &chart).unwrap();
        let pt = dpt(&[0.4, 1.1, -0.6]);
        assert!(c.jacobi_bracket(&f, &f, &pt).unwrap().abs() < 1e-12);
    }

    #[test]
    fn bracket_is_bilinear() {
        let c = darboux_contact().unwrap();
        let chart = darboux_chart();
        let f1 = Expression::parse("Q*P", &chart).unwrap();
        let f2 = Expression::parse("W + Q^2", &chart).unwrap();
        let g = Expression::parse("P^2 - Q", &chart).unwrap();
        let combo = Expression::parse("2*(Q*P) + 3*(W + Q^2)", &chart).unwrap();
        let pt = dpt(&[0.8, -0.9, 1.2]);
        let lhs = c.jacobi_bracket(&combo, &g, &pt).unwrap();
        let rhs = 2.0 * c.jacobi_bracket(&f1, &g, &pt).unwrap()
            + 3.0 * c.jacobi_bracket(&f2, &g, &pt).unwrap();
        assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn jacobian_field_of_one_is_reeb() {
        let c = darboux_contact().unwrap();
        let chart = darboux_chart();
        let one = Expression::one(&chart);
        let pt = dpt(&[0.4, 1.1, -0.6]);
        let x1 = c.jacobian_field_at(&one, &pt).unwrap();
        let gamma = c.reeb_at(&pt).unwrap();
        assert!((x1 - gamma).amax() < 1e-12);
    }

    #[test]
    fn jacobian_field_of_w() {
        // X_W = Λ(dW,·) + WΓ = P ∂/∂P + W ∂/∂W under this bracket
        // normalization (Λ(dW,·) = P ∂/∂P).
        let c = darboux_contact().unwrap();
        let chart = darboux_chart();
        let w = Expression::coord(&chart, "W").unwrap();
        let pt = dpt(&[0.4, 1.1, -0.6]);
        let xw = c.jacobian_field_at(&w, &pt).unwrap();
        assert!((xw[0] - 0.0).abs() < 1e-10);
        assert!((xw[1] - 1.1).abs() < 1e-10);
        assert!((xw[2] - (-0.6)).abs() < 1e-10);
    }

    #[test]
    fn homomorphism_bracket_of_fields() {
        // [X_f, X_g] = X_{[f,g]} at sampled points.
        let c = darboux_contact().unwrap();
        let chart = darboux_chart();
        let f = Expression::parse("Q*P", &chart).unwrap();
        let g = Expression::parse("W + Q^2", &chart).unwrap();
        let xf = c.jacobian_vector_field(&f);
        let xg = c.jacobian_vector_field(&g);
        let fg = c.bracket_field(&f, &g);
        let sb = SampleBox::uniform(&chart, -1.5, 1.5);
        let mut rng = SplitMix64::new(5);
        for p in sample_points(&sb, None, 50, &mut rng).unwrap() {
            let lhs = commutator_fd(&xf, &xg, &p, FD_STEP).unwrap();
            let rhs = c.jacobian_field_at(&fg, &p).unwrap();
            assert!(
                (lhs - rhs).amax() < 1e-6,
                "homomorphism residual too large at {p}"
            );
        }
    }

    #[test]
    fn jacobi_identity_on_polynomial_triple() {
        let c = darboux_contact().unwrap();
        let chart = darboux_chart();
        let f = Expression::parse("Q", &chart).unwrap();
        let g = Expression::parse("P^2", &chart).unwrap();
        let h = Expression::parse("Q*P + W", &chart).unwrap();
        let fg = c.bracket_field(&f, &g);
        let gh = c.bracket_field(&g, &h);
        let hf = c.bracket_field(&h, &f);
        let sb = SampleBox::uniform(&chart, -1.2, 1.2);
        let mut rng = SplitMix64::new(9);
        for p in sample_points(&sb, None, 25, &mut rng).unwrap() {
            let cyc = c.jacobi_bracket(&fg, &h, &p).unwrap()
                + c.jacobi_bracket(&gh, &f, &p).unwrap()
                + c.jacobi_bracket(&hf, &g, &p).unwrap();
            assert!(cyc.abs() < 1e-6, "Jacobi identity residual {cyc} at {p}");
        }
    }

    #[test]
    fn invariance_check_reports_residual() {
        let chart = darboux_chart();
        let x = VectorField::symbolic(
            &chart,
            vec![
                Expression::zero(&chart),
                Expression::zero(&chart),
                Expression::one(&chart),
            ],
        );
        let w = Expression::coord(&chart, "W").unwrap();
        let q = Expression::coord(&chart, "Q").unwrap();
        let sample = vec![dpt(&[1.0, 2.0, 3.0])];
        let inv = check_is_invariant(&q, &x, &sample).unwrap();
        assert!(inv.invariant);
        let noninv = check_is_invariant(&w, &x, &sample).unwrap();
        assert!(!noninv.invariant);
        assert!((noninv.max_residual - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lie_derivative_of_constant_vanishes() {
        let chart = darboux_chart();
        let x = VectorField::symbolic(
            &chart,
            vec![
                Expression::parse("P", &chart).unwrap(),
                Expression::parse("-Q", &chart).unwrap(),
                Expression::one(&chart),
            ],
        );
        let c = Expression::constant(&chart, 4.25);
        assert_eq!(lie_derivative(&x, &c, &dpt(&[1.0, 2.0, 3.0])).unwrap(), 0.0);
    }
}

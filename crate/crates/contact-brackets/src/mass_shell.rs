//! The relativistic particle on the positive mass shell.
//!
//! Minkowski metric η = diag(+1, −1, −1, −1). The shell chart carries
//! (u^0..u^3, p_1, p_2, p_3) with p_0 = +sqrt(δ^{jk} p_j p_k + m²)
//! eliminated; every ambient quantity is pulled back by substituting
//! p_0(p). The contact form is θ_m = p_μ du^μ; its Reeb field is
//! Γ = (p^ν/m²) ∂/∂u^ν and the bivector pairs momenta with positions:
//!
//! ```text
//! Λ(du^0, dp_j) = p_0 p_j / m²
//! Λ(du^k, dp_j) = −δ_{kj} − p_k p_j / m²
//! ```
//!
//! (spatial indices raised with δ). The massless case is excluded: Γ and
//! Λ divide by m².

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix4, SMatrix};

use crate::chart::{Chart, ChartPoint};
use crate::contact::ContactStructure;
use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::forms::{Bivector, ChartMap, OneForm, VectorField};

fn eta(mu: usize) -> f64 {
    if mu == 0 {
        1.0
    } else {
        -1.0
    }
}

#[derive(Debug, Clone)]
pub struct MassShellSpec {
    mass: f64,
    chart: Arc<Chart>,
}

impl MassShellSpec {
    pub fn new(mass: f64) -> Result<MassShellSpec> {
        if !(mass > 0.0) {
            return Err(Error::Precondition(format!(
                "mass must be positive (Γ and Λ divide by m²), got {mass}"
            )));
        }
        let p0_def = format!("sqrt(p1^2 + p2^2 + p3^2 + {})", mass * mass);
        let chart = Chart::with_base_and_defs(
            &format!("mass-shell-m{mass}"),
            &["u0", "u1", "u2", "u3", "p1", "p2", "p3"],
            0,
            &[("p0", p0_def), ("m", format!("{mass}"))],
        );
        Ok(MassShellSpec { mass, chart })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    /// Chart point from a position 4-vector and the three covariant
    /// spatial momentum components.
    pub fn embed(&self, u: &[f64; 4], p_spatial: &[f64; 3]) -> Result<ChartPoint> {
        let mut values = Vec::with_capacity(7);
        values.extend_from_slice(u);
        values.extend_from_slice(p_spatial);
        ChartPoint::new(&self.chart, values)
    }

    /// p_0 = sqrt(δ^{jk} p_j p_k + m²) at a point.
    pub fn p0(&self, point: &ChartPoint) -> Result<f64> {
        point.check_chart(&self.chart)?;
        let p = &point.values()[4..7];
        Ok((p.iter().map(|x| x * x).sum::<f64>() + self.mass * self.mass).sqrt())
    }

    /// Covariant momentum p_μ at a point (p_0 computed, p_j read off).
    pub fn p_lower(&self, point: &ChartPoint) -> Result<[f64; 4]> {
        let p0 = self.p0(point)?;
        let v = point.values();
        Ok([p0, v[4], v[5], v[6]])
    }

    /// Contravariant momentum p^μ = η^{μν} p_ν.
    pub fn p_upper(&self, point: &ChartPoint) -> Result<[f64; 4]> {
        let p = self.p_lower(point)?;
        Ok([p[0], -p[1], -p[2], -p[3]])
    }

    /// θ_m: the tautological form p_μ du^μ pulled back to the shell chart.
    pub fn theta(&self) -> OneForm {
        let comps = vec![
            Expression::parse("p0", &self.chart).unwrap(),
            Expression::coord(&self.chart, "p1").unwrap(),
            Expression::coord(&self.chart, "p2").unwrap(),
            Expression::coord(&self.chart, "p3").unwrap(),
            Expression::zero(&self.chart),
            Expression::zero(&self.chart),
            Expression::zero(&self.chart),
        ];
        OneForm::new(&self.chart, comps)
    }

    /// The kinematical-time dynamics field
    /// X = ∂/∂u^0 − (δ^{jk} p_k / p_0) ∂/∂u^j, spanning ker ω_m and
    /// normalized by du^0/ds = 1. It satisfies i_X θ_m = m²/p_0.
    pub fn landau_field(&self) -> VectorField {
        let comps = vec![
            Expression::one(&self.chart),
            Expression::parse("-p1/p0", &self.chart).unwrap(),
            Expression::parse("-p2/p0", &self.chart).unwrap(),
            Expression::parse("-p3/p0", &self.chart).unwrap(),
            Expression::zero(&self.chart),
            Expression::zero(&self.chart),
            Expression::zero(&self.chart),
        ];
        VectorField::symbolic(&self.chart, comps)
    }

    /// Closed-form Reeb field Γ = (η^{μν} p_μ / m²) ∂/∂u^ν.
    pub fn reeb_field(&self) -> VectorField {
        let m2 = format!("{}", self.mass * self.mass);
        let comps = vec![
            Expression::parse(&format!("p0/{m2}"), &self.chart).unwrap(),
            Expression::parse(&format!("-p1/{m2}"), &self.chart).unwrap(),
            Expression::parse(&format!("-p2/{m2}"), &self.chart).unwrap(),
            Expression::parse(&format!("-p3/{m2}"), &self.chart).unwrap(),
            Expression::zero(&self.chart),
            Expression::zero(&self.chart),
            Expression::zero(&self.chart),
        ];
        VectorField::symbolic(&self.chart, comps)
    }

    /// Closed-form bivector on the shell chart (see the module header).
    pub fn lambda_bivector(&self) -> Bivector {
        let chart = &self.chart;
        let m2 = Expression::constant(chart, self.mass * self.mass);
        let p0 = Expression::parse("p0", chart).unwrap();
        let p = |j: usize| Expression::coord(chart, &format!("p{j}")).unwrap();
        let mut lambda = Bivector::zero(chart);
        for j in 1..=3 {
            // Λ(du^0, dp_j) = p_0 p_j / m².
            lambda.set_upper(0, 3 + j, p0.clone() * p(j) / m2.clone());
            for k in 1..=3 {
                // Λ(du^k, dp_j) = −δ_{kj} − p_k p_j / m².
                let delta = Expression::constant(chart, if k == j { 1.0 } else { 0.0 });
                lambda.set_upper(k, 3 + j, -(delta + p(k) * p(j) / m2.clone()));
            }
        }
        lambda
    }

    /// Contact structure of θ_m with the closed forms attached.
    pub fn contact(&self) -> Result<ContactStructure> {
        let probe = self.embed(&[0.0; 4], &[0.3, -0.2, 0.1])?;
        ContactStructure::with_closed_forms(
            self.theta(),
            &probe,
            Some(self.reeb_field()),
            Some(self.lambda_bivector()),
        )
    }

    /// Newton–Wigner positions, momenta and the dynamical time:
    /// Q^j = u^j + (δ^{jk} p_k / p_0) u^0, P_j = p_j, T = p_μ u^μ. Q and P
    /// are constants of the kinematical flow and Γ(T) = 1 on the shell.
    pub fn newton_wigner(&self, point: &ChartPoint) -> Result<NewtonWigner> {
        point.check_chart(&self.chart)?;
        let v = point.values();
        let p0 = self.p0(point)?;
        let mut q = [0.0; 3];
        for (j, slot) in q.iter_mut().enumerate() {
            *slot = v[1 + j] + v[4 + j] / p0 * v[0];
        }
        let p = [v[4], v[5], v[6]];
        let t = p0 * v[0] + v[4] * v[1] + v[5] * v[2] + v[6] * v[3];
        Ok(NewtonWigner { q, p, t })
    }

    /// T = p_μ u^μ as an expression.
    pub fn dynamical_time(&self) -> Expression {
        Expression::parse("p0*u0 + p1*u1 + p2*u2 + p3*u3", &self.chart).unwrap()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonWigner {
    pub q: [f64; 3],
    pub p: [f64; 3],
    pub t: f64,
}

// ---------------------------------------------------------------------
// Poincaré algebra
// ---------------------------------------------------------------------

/// Generator label: a translation p_μ or a Lorentz generator
/// J_{μν} = u_μ p_ν − u_ν p_μ with μ < ν.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoincareLabel {
    Translation(usize),
    Lorentz(usize, usize),
}

impl PoincareLabel {
    pub fn all() -> Vec<PoincareLabel> {
        let mut labels: Vec<PoincareLabel> = (0..4).map(PoincareLabel::Translation).collect();
        for mu in 0..4 {
            for nu in (mu + 1)..4 {
                labels.push(PoincareLabel::Lorentz(mu, nu));
            }
        }
        labels
    }

    fn validate(self) -> Result<PoincareLabel> {
        let ok = match self {
            PoincareLabel::Translation(mu) => mu < 4,
            PoincareLabel::Lorentz(mu, nu) => mu < nu && nu < 4,
        };
        if ok {
            Ok(self)
        } else {
            Err(Error::Precondition(format!(
                "invalid generator label {self}"
            )))
        }
    }
}

impl fmt::Display for PoincareLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PoincareLabel::Translation(mu) => write!(f, "p{mu}"),
            PoincareLabel::Lorentz(mu, nu) => write!(f, "J{mu}{nu}"),
        }
    }
}

/// u_μ = η_{μν} u^ν as an expression.
fn u_lower(spec: &MassShellSpec, mu: usize) -> Expression {
    let u = Expression::coord(spec.chart(), &format!("u{mu}")).unwrap();
    if mu == 0 {
        u
    } else {
        -u
    }
}

/// p_μ as an expression (p0 expands to the shell root).
fn p_lower_expr(spec: &MassShellSpec, mu: usize) -> Expression {
    Expression::parse(&format!("p{mu}"), spec.chart()).unwrap()
}

/// The generator as a function on the shell chart.
pub fn poincare_function(spec: &MassShellSpec, label: PoincareLabel) -> Result<Expression> {
    match label.validate()? {
        PoincareLabel::Translation(mu) => Ok(p_lower_expr(spec, mu)),
        PoincareLabel::Lorentz(mu, nu) => {
            Ok(u_lower(spec, mu) * p_lower_expr(spec, nu)
                - u_lower(spec, nu) * p_lower_expr(spec, mu))
        }
    }
}

/// The generator vector field restricted to the shell chart:
/// X_μ = ∂/∂u^μ and
/// X_{μν} = u_μ ∂/∂u^ν − u_ν ∂/∂u^μ + (p_μ η_{νk} − p_ν η_{μk}) ∂/∂p_k
/// (the ∂/∂p_0 component is determined by tangency and drops out of the
/// chart expression).
pub fn poincare_field(spec: &MassShellSpec, label: PoincareLabel) -> Result<VectorField> {
    let chart = spec.chart();
    let mut comps = vec![Expression::zero(chart); 7];
    match label.validate()? {
        PoincareLabel::Translation(mu) => {
            comps[mu] = Expression::one(chart);
        }
        PoincareLabel::Lorentz(mu, nu) => {
            comps[nu] = comps[nu].clone() + u_lower(spec, mu);
            comps[mu] = comps[mu].clone() - u_lower(spec, nu);
            for k in 1..=3 {
                let mut term = Expression::zero(chart);
                if nu == k {
                    term = term + p_lower_expr(spec, mu) * Expression::constant(chart, eta(k));
                }
                if mu == k {
                    term = term - p_lower_expr(spec, nu) * Expression::constant(chart, eta(k));
                }
                comps[3 + k] = comps[3 + k].clone() + term;
            }
        }
    }
    Ok(VectorField::symbolic(chart, comps))
}

// 5×5 affine realization on (u, 1): the brute-force oracle for the
// structure constants. Translations sit in the last column, Lorentz
// generators in the linear block with M[α][β] = η_{μβ} δ_{αν} − η_{νβ} δ_{αμ}
// (the matrix of the flow u̇ = X_{μν}(u)).
fn generator_matrix(label: PoincareLabel) -> SMatrix<f64, 5, 5> {
    let mut m = SMatrix::<f64, 5, 5>::zeros();
    match label {
        PoincareLabel::Translation(mu) => {
            m[(mu, 4)] = 1.0;
        }
        PoincareLabel::Lorentz(mu, nu) => {
            for alpha in 0..4 {
                for beta in 0..4 {
                    let mut v = 0.0;
                    if alpha == nu && beta == mu {
                        v += eta(mu);
                    }
                    if alpha == mu && beta == nu {
                        v -= eta(nu);
                    }
                    m[(alpha, beta)] = v;
                }
            }
        }
    }
    m
}

/// Structure constants of the Jacobi brackets of the ten generator
/// functions, certified against the matrix oracle: every matrix commutator
/// is expanded in the generator basis by least squares, and the single
/// global sign between matrix commutators and function brackets is fixed
/// numerically at probe points before use.
pub struct StructureConstants {
    labels: Vec<PoincareLabel>,
    /// constants[i][j][k]: [f_i, f_j] = Σ_k constants[i][j][k] f_k.
    constants: Vec<Vec<Vec<f64>>>,
}

impl StructureConstants {
    pub fn labels(&self) -> &[PoincareLabel] {
        &self.labels
    }

    pub fn coefficients(&self, i: usize, j: usize) -> &[f64] {
        &self.constants[i][j]
    }
}

fn matrix_structure_constants() -> Result<Vec<Vec<Vec<f64>>>> {
    let labels = PoincareLabel::all();
    let n = labels.len();
    let mats: Vec<_> = labels.iter().map(|l| generator_matrix(*l)).collect();
    let mut basis = DMatrix::zeros(25, n);
    for (k, m) in mats.iter().enumerate() {
        for r in 0..5 {
            for c in 0..5 {
                basis[(r * 5 + c, k)] = m[(r, c)];
            }
        }
    }
    let svd = basis.clone().svd(true, true);
    let mut constants = vec![vec![vec![0.0; n]; n]; n];
    for i in 0..n {
        for j in 0..n {
            let comm = mats[i] * mats[j] - mats[j] * mats[i];
            let mut v = DVector::zeros(25);
            for r in 0..5 {
                for c in 0..5 {
                    v[r * 5 + c] = comm[(r, c)];
                }
            }
            let coeff = svd
                .solve(&v, 1e-12)
                .map_err(|m| Error::Precondition(m.to_string()))?;
            let residual = (&basis * &coeff - &v).amax();
            if residual > 1e-10 {
                return Err(Error::Precondition(format!(
                    "matrix commutator [{}, {}] does not close on the basis (residual {residual:.3e})",
                    labels[i], labels[j]
                )));
            }
            for k in 0..n {
                constants[i][j][k] = coeff[k];
            }
        }
    }
    Ok(constants)
}

/// Build the certified structure constants for a given shell.
pub fn structure_constants(
    spec: &MassShellSpec,
    contact: &ContactStructure,
    probes: &[ChartPoint],
) -> Result<StructureConstants> {
    if probes.is_empty() {
        return Err(Error::Precondition("empty probe sample".to_string()));
    }
    let labels = PoincareLabel::all();
    let raw = matrix_structure_constants()?;
    let functions: Vec<Expression> = labels
        .iter()
        .map(|l| poincare_function(spec, *l))
        .collect::<Result<_>>()?;
    // Fix the global sign on a pair with a nonzero bracket ([J01, p1]).
    let (i, j) = (4, 1);
    let mut best: Option<(f64, f64)> = None;
    for sign in [1.0, -1.0] {
        let mut residual = 0.0_f64;
        for p in probes {
            let lhs = contact.jacobi_bracket(&functions[i], &functions[j], p)?;
            let mut rhs = 0.0;
            for k in 0..labels.len() {
                if raw[i][j][k].abs() > 1e-12 {
                    rhs += sign * raw[i][j][k] * functions[k].evaluate(p)?;
                }
            }
            residual = residual.max((lhs - rhs).abs());
        }
        match best {
            Some((_, r)) if r <= residual => {}
            _ => best = Some((sign, residual)),
        }
    }
    let (sign, residual) = best.unwrap();
    if residual > 1e-8 {
        return Err(Error::Precondition(format!(
            "structure-constant certification failed: best residual {residual:.3e}"
        )));
    }
    let mut constants = raw;
    for row in constants.iter_mut() {
        for cell in row.iter_mut() {
            for c in cell.iter_mut() {
                *c *= sign;
            }
        }
    }
    Ok(StructureConstants { labels, constants })
}

#[derive(Debug, Clone)]
pub struct ClosureRow {
    pub f: String,
    pub g: String,
    pub max_residual: f64,
}

/// For every generator pair, the maximal deviation over the sample of
/// [f, g]_J from the certified linear combination of generators.
pub fn poincare_closure_table(
    spec: &MassShellSpec,
    samples: &[ChartPoint],
) -> Result<Vec<ClosureRow>> {
    if samples.is_empty() {
        return Err(Error::Precondition("empty sample".to_string()));
    }
    let contact = spec.contact()?;
    let constants = structure_constants(spec, &contact, &samples[..samples.len().min(5)])?;
    let labels = constants.labels().to_vec();
    let functions: Vec<Expression> = labels
        .iter()
        .map(|l| poincare_function(spec, *l))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for i in 0..labels.len() {
        for j in (i + 1)..labels.len() {
            let coeff = constants.coefficients(i, j);
            let mut max_residual = 0.0_f64;
            for p in samples {
                let lhs = contact.jacobi_bracket(&functions[i], &functions[j], p)?;
                let mut rhs = 0.0;
                for (k, c) in coeff.iter().enumerate() {
                    if c.abs() > 1e-12 {
                        rhs += c * functions[k].evaluate(p)?;
                    }
                }
                max_residual = max_residual.max((lhs - rhs).abs());
            }
            rows.push(ClosureRow {
                f: labels[i].to_string(),
                g: labels[j].to_string(),
                max_residual,
            });
        }
    }
    Ok(rows)
}

// ---------------------------------------------------------------------
// Poincaré transformations as chart self-maps
// ---------------------------------------------------------------------

/// exp of a 4×4 generator by integrating Ẋ = A X from the identity with
/// fixed-step RK4 over unit time.
pub fn matrix_exp_rk4(a: &Matrix4<f64>, steps: usize) -> Matrix4<f64> {
    let dt = 1.0 / steps as f64;
    let mut x = Matrix4::identity();
    for _ in 0..steps {
        let k1 = a * x;
        let k2 = a * (x + 0.5 * dt * k1);
        let k3 = a * (x + 0.5 * dt * k2);
        let k4 = a * (x + dt * k3);
        x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    x
}

/// The 4×4 linear block of a Lorentz generator (flow on u).
pub fn lorentz_generator(mu: usize, nu: usize) -> Matrix4<f64> {
    let m = generator_matrix(PoincareLabel::Lorentz(mu, nu));
    Matrix4::from_fn(|r, c| m[(r, c)])
}

/// The cotangent lift of u ↦ L u + a as a self-map of the shell chart:
/// u'^μ = L^μ_ν u^ν + a^μ, p'_j = p_ν (L⁻¹)^ν_j with p_0 = p_0(p).
pub fn poincare_chart_map(
    spec: &MassShellSpec,
    lorentz: &Matrix4<f64>,
    translation: &[f64; 4],
) -> Result<ChartMap> {
    let chart = spec.chart();
    let inv = lorentz
        .try_inverse()
        .ok_or_else(|| Error::Precondition("Lorentz matrix is not invertible".to_string()))?;
    let mut comps = Vec::with_capacity(7);
    for mu in 0..4 {
        let mut acc = Expression::constant(chart, translation[mu]);
        for nu in 0..4 {
            let u = Expression::coord(chart, &format!("u{nu}")).unwrap();
            acc = acc + Expression::constant(chart, lorentz[(mu, nu)]) * u;
        }
        comps.push(acc);
    }
    for j in 1..=3 {
        let mut acc = Expression::zero(chart);
        for nu in 0..4 {
            let p = p_lower_expr(spec, nu);
            acc = acc + Expression::constant(chart, inv[(nu, j)]) * p;
        }
        comps.push(acc);
    }
    Ok(ChartMap::new(chart, chart, comps))
}

// ---------------------------------------------------------------------
// Reparametrization-invariant Euler–Lagrange residuals
// ---------------------------------------------------------------------

/// Residuals of ṗ_μ = 0 and (δ^μ_ν − p^μ p_ν/m²) ẋ^ν = 0 at one interior
/// sample of a curve into the shell chart. The projector residual uses the
/// normalized velocity, so it is invariant under monotone
/// reparametrization; the momentum residual is reported raw.
#[derive(Debug, Clone, Copy)]
pub struct ReparamResidual {
    pub lambda: f64,
    pub p_dot: f64,
    pub projector: f64,
}

pub fn reparam_el_residual(
    spec: &MassShellSpec,
    curve: &[(f64, ChartPoint)],
) -> Result<Vec<ReparamResidual>> {
    if curve.len() < 3 {
        return Err(Error::Precondition(
            "reparametrization residuals need at least 3 samples".to_string(),
        ));
    }
    for w in curve.windows(2) {
        if !(w[1].0 > w[0].0) {
            return Err(Error::Precondition(
                "curve parameters must be strictly increasing (degenerate samples)".to_string(),
            ));
        }
        w[0].1.check_chart(spec.chart())?;
    }
    let m2 = spec.mass() * spec.mass();
    let mut out = Vec::with_capacity(curve.len() - 2);
    for i in 1..curve.len() - 1 {
        let (l_prev, ref prev) = curve[i - 1];
        let (l_mid, ref mid) = curve[i];
        let (l_next, ref next) = curve[i + 1];
        let h_prev = l_mid - l_prev;
        let h_next = l_next - l_mid;
        // Central difference on a possibly non-uniform grid.
        let dot = |a: usize| -> f64 {
            let fm = prev.values()[a];
            let f0 = mid.values()[a];
            let fp = next.values()[a];
            (h_prev * h_prev * fp + (h_next * h_next - h_prev * h_prev) * f0 - h_next * h_next * fm)
                / (h_prev * h_next * (h_prev + h_next))
        };
        let u_dot = [dot(0), dot(1), dot(2), dot(3)];
        let p_dot_spatial = [dot(4), dot(5), dot(6)];
        // ṗ_0 follows by the chain rule on the eliminated coordinate.
        let p0 = spec.p0(mid)?;
        let v = mid.values();
        let p_dot_0 =
            (v[4] * p_dot_spatial[0] + v[5] * p_dot_spatial[1] + v[6] * p_dot_spatial[2]) / p0;
        let p_dot = p_dot_0
            .abs()
            .max(p_dot_spatial.iter().fold(0.0_f64, |a, x| a.max(x.abs())));

        let speed = u_dot.iter().map(|x| x * x).sum::<f64>().sqrt();
        if speed == 0.0 {
            return Err(Error::Precondition(format!(
                "stationary sample at parameter {l_mid}"
            )));
        }
        let unit: Vec<f64> = u_dot.iter().map(|x| x / speed).collect();
        let p_low = spec.p_lower(mid)?;
        let p_up = spec.p_upper(mid)?;
        let contraction: f64 = (0..4).map(|nu| p_low[nu] * unit[nu]).sum();
        let mut projector = 0.0_f64;
        for mu in 0..4 {
            projector = projector.max((unit[mu] - p_up[mu] * contraction / m2).abs());
        }
        out.push(ReparamResidual {
            lambda: l_mid,
            p_dot,
            projector,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact::{check_is_invariant, commutator_fd, FD_STEP};
    use crate::extended::{integrate_flow, Method};
    use crate::sample::{sample_points, SampleBox, SplitMix64};

    fn shell_samples(spec: &MassShellSpec, count: usize, seed: u64) -> Vec<ChartPoint> {
        let sb = SampleBox::from_named(
            spec.chart(),
            &[
                ("p1", (-1.0, 1.0)),
                ("p2", (-1.0, 1.0)),
                ("p3", (-1.0, 1.0)),
            ],
            (-2.0, 2.0),
        )
        .unwrap();
        let mut rng = SplitMix64::new(seed);
        sample_points(&sb, None, count, &mut rng).unwrap()
    }

    #[test]
    fn embed_examples() {
        let spec = MassShellSpec::new(1.0).unwrap();
        let rest = spec.embed(&[0.0; 4], &[0.0; 3]).unwrap();
        assert_eq!(spec.p0(&rest).unwrap(), 1.0);

        let boosted = spec.embed(&[0.0; 4], &[3.0, 0.0, 0.0]).unwrap();
        assert!((spec.p0(&boosted).unwrap() - 10.0_f64.sqrt()).abs() < 1e-15);

        assert!(MassShellSpec::new(0.0).is_err());
        assert!(MassShellSpec::new(-1.0).is_err());
    }

    #[test]
    fn on_shell_identity_by_construction() {
        let spec = MassShellSpec::new(2.0).unwrap();
        for p in shell_samples(&spec, 100, 3) {
            let low = spec.p_lower(&p).unwrap();
            let up = spec.p_upper(&p).unwrap();
            let norm2: f64 = (0..4).map(|mu| low[mu] * up[mu]).sum();
            assert!((norm2 - 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn landau_field_examples() {
        let spec = MassShellSpec::new(1.0).unwrap();
        let x = spec.landau_field();

        let rest = spec.embed(&[0.0; 4], &[0.0; 3]).unwrap();
        let v = x.eval(&rest).unwrap();
        assert_eq!(v.as_slice(), &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);

        let moving = spec.embed(&[0.0; 4], &[1.0, 0.0, 0.0]).unwrap();
        let v = x.eval(&moving).unwrap();
        assert!((v[1] + 1.0 / 2.0_f64.sqrt()).abs() < 1e-15);

        // i_X θ = m²/p_0, equal to 1 in the rest frame.
        let theta = spec.theta();
        assert!((theta.contract(&x, &rest).unwrap() - 1.0).abs() < 1e-15);
        for p in shell_samples(&spec, 30, 4) {
            let pairing = theta.contract(&x, &p).unwrap();
            assert!((pairing - 1.0 / spec.p0(&p).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn landau_field_spans_kernel_of_omega() {
        let spec = MassShellSpec::new(1.0).unwrap();
        let omega = crate::forms::exterior_derivative(&spec.theta());
        let x = spec.landau_field();
        for p in shell_samples(&spec, 30, 5) {
            let contraction = omega.eval(&p).unwrap().transpose() * x.eval(&p).unwrap();
            assert!(contraction.amax() < 1e-10);
        }
    }

    #[test]
    fn closed_forms_match_pointwise_solves() {
        for mass in [0.5, 1.0, 2.0] {
            let spec = MassShellSpec::new(mass).unwrap();
            let contact = spec.contact().unwrap();
            let gamma_closed = spec.reeb_field();
            let lambda_closed = spec.lambda_bivector();
            for p in shell_samples(&spec, 50, 7) {
                let solved = contact.reeb_at(&p).unwrap();
                let closed = gamma_closed.eval(&p).unwrap();
                assert!((solved - closed).amax() < 1e-8);
                let l_solved = contact.lambda_at(&p).unwrap();
                let l_closed = lambda_closed.eval(&p).unwrap();
                assert!(
                    (&l_solved - &l_closed).amax() < 1e-8,
                    "m={mass}: bivector mismatch {:.3e}",
                    (l_solved - l_closed).amax()
                );
            }
        }
    }

    #[test]
    fn reeb_conditions_and_rank() {
        let spec = MassShellSpec::new(1.0).unwrap();
        let contact = spec.contact().unwrap();
        for p in shell_samples(&spec, 50, 11) {
            let gamma = contact.reeb_at(&p).unwrap();
            let (pairing, contraction) = contact.reeb_residuals(&p, &gamma).unwrap();
            assert!(pairing < 1e-8 && contraction < 1e-8);
            assert_eq!(contact.omega_rank(&p).unwrap(), 6);
            assert!(contact.satisfies_contact_condition(&p).unwrap());
            // Λ annihilates θ.
            let theta = contact.theta().eval(&p).unwrap();
            let lambda = contact.lambda_at(&p).unwrap();
            assert!((lambda.transpose() * theta).amax() < 1e-8);
        }
    }

    #[test]
    fn rest_frame_reeb_is_du0() {
        let spec = MassShellSpec::new(1.0).unwrap();
        let contact = spec.contact().unwrap();
        let rest = spec.embed(&[0.3, 1.0, -0.5, 0.2], &[0.0; 3]).unwrap();
        let gamma = contact.reeb_at(&rest).unwrap();
        assert!((gamma[0] - 1.0).abs() < 1e-10);
        for i in 1..7 {
            assert!(gamma[i].abs() < 1e-10);
        }
    }

    #[test]
    fn position_brackets() {
        let spec = MassShellSpec::new(1.0).unwrap();
        let contact = spec.contact().unwrap();
        let chart = spec.chart();

        // [u^1, u^0] = (u^1 p^0 − u^0 p^1)/m² = 1 at this point.
        let u1 = Expression::coord(chart, "u1").unwrap();
        let u0 = Expression::coord(chart, "u0").unwrap();
        let at = spec.embed(&[2.0, 1.0, 0.0, 0.0], &[0.0; 3]).unwrap();
        assert!((contact.jacobi_bracket(&u1, &u0, &at).unwrap() - 1.0).abs() < 1e-10);

        // [u^1, u^2] = 0 at zero momentum.
        let u2 = Expression::coord(chart, "u2").unwrap();
        let at = spec.embed(&[0.0, 1.0, 2.0, 0.0], &[0.0; 3]).unwrap();
        assert!(contact.jacobi_bracket(&u1, &u2, &at).unwrap().abs() < 1e-10);

        // General identity at 100 shell points.
        let coords: Vec<Expression> = (0..4)
            .map(|mu| Expression::coord(chart, &format!("u{mu}")).unwrap())
            .collect();
        for p in shell_samples(&spec, 100, 13) {
            let up = spec.p_upper(&p).unwrap();
            let u = [p.values()[0], p.values()[1], p.values()[2], p.values()[3]];
            for mu in 0..4 {
                for nu in 0..4 {
                    let bracket = contact
                        .jacobi_bracket(&coords[mu], &coords[nu], &p)
                        .unwrap();
                    let expected = u[mu] * up[nu] - u[nu] * up[mu];
                    assert!(
                        (bracket - expected).abs() < 1e-9,
                        "[u{mu}, u{nu}] off by {:.2e}",
                        (bracket - expected).abs()
                    );
                }
            }
        }
    }

    #[test]
    fn poincare_function_examples() {
        let spec = MassShellSpec::new(1.0).unwrap();
        let p0 = poincare_function(&spec, PoincareLabel::Translation(0)).unwrap();
        let rest = spec.embed(&[0.0; 4], &[0.0; 3]).unwrap();
        assert_eq!(p0.evaluate(&rest).unwrap(), 1.0);

        let j12 = poincare_function(&spec, PoincareLabel::Lorentz(1, 2)).unwrap();
        let at = spec.embed(&[0.0, 1.0, 0.0, 0.0], &[0.0; 3]).unwrap();
        assert_eq!(j12.evaluate(&at).unwrap(), 0.0);

        assert!(poincare_function(&spec, PoincareLabel::Lorentz(2, 1)).is_err());
        assert!(poincare_function(&spec, PoincareLabel::Translation(5)).is_err());
    }

    #[test]
    fn jacobian_fields_match_printed_generators() {
        let spec = MassShellSpec::new(1.0).unwrap();
        let contact = spec.contact().unwrap();
        for label in PoincareLabel::all() {
            let f = poincare_function(&spec, label).unwrap();
            let printed = poincare_field(&spec, label).unwrap();
            for p in shell_samples(&spec, 50, 17) {
                let via_lambda = contact.jacobian_field_at(&f, &p).unwrap();
                let direct = printed.eval(&p).unwrap();
                assert!(
                    (&via_lambda - &direct).amax() < 1e-7,
                    "{label}: field mismatch {:.3e} at {p}",
                    (via_lambda - direct).amax()
                );
            }
        }
    }

    #[test]
    fn generator_functions_are_flow_invariants() {
        let spec = MassShellSpec::new(1.0).unwrap();
        let x = spec.landau_field();
        let sample = shell_samples(&spec, 30, 19);
        for label in PoincareLabel::all() {
            let f = poincare_function(&spec, label).unwrap();
            let check = check_is_invariant(&f, &x, &sample).unwrap();
            assert!(
                check.invariant,
                "{label} drifts with residual {:.3e}",
                check.max_residual
            );
        }
    }

    #[test]
    fn closure_table_residuals() {
        let spec = MassShellSpec::new(1.0).unwrap();
        let samples = shell_samples(&spec, 50, 23);
        let table = poincare_closure_table(&spec, &samples).unwrap();
        assert_eq!(table.len(), 45);
        for row in &table {
            assert!(
                row.max_residual < 1e-8,
                "closure failure for [{}, {}]: {:.3e}",
                row.f,
                row.g,
                row.max_residual
            );
        }
    }

    #[test]
    fn specific_structure_constants() {
        let spec = MassShellSpec::new(1.0).unwrap();
        let contact = spec.contact().unwrap();
        let probes = shell_samples(&spec, 5, 29);
        let sc = structure_constants(&spec, &contact, &probes).unwrap();
        let labels = sc.labels().to_vec();
        let idx = |want: PoincareLabel| labels.iter().position(|l| *l == want).unwrap();

        // [p_1, p_2] = 0.
        let c = sc.coefficients(
            idx(PoincareLabel::Translation(1)),
            idx(PoincareLabel::Translation(2)),
        );
        assert!(c.iter().all(|v| v.abs() < 1e-12));

        // [J_{12}, p_1] ∝ p_2 and nothing else.
        let c = sc.coefficients(
            idx(PoincareLabel::Lorentz(1, 2)),
            idx(PoincareLabel::Translation(1)),
        );
        for (k, v) in c.iter().enumerate() {
            if k == idx(PoincareLabel::Translation(2)) {
                assert!((v.abs() - 1.0).abs() < 1e-12);
            } else {
                assert!(v.abs() < 1e-12);
            }
        }

        // [J_{01}, J_{02}] ∝ J_{12}.
        let c = sc.coefficients(
            idx(PoincareLabel::Lorentz(0, 1)),
            idx(PoincareLabel::Lorentz(0, 2)),
        );
        for (k, v) in c.iter().enumerate() {
            if k == idx(PoincareLabel::Lorentz(1, 2)) {
                assert!((v.abs() - 1.0).abs() < 1e-12);
            } else {
                assert!(v.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn homomorphism_on_the_shell() {
        let spec = MassShellSpec::new(1.0).unwrap();
        let contact = spec.contact().unwrap();
        let chart = spec.chart();
        let f = Expression::parse("u1*p2", chart).unwrap();
        let g = Expression::parse("u0 + u3^2", chart).unwrap();
        let xf = contact.jacobian_vector_field(&f);
        let xg = contact.jacobian_vector_field(&g);
        let fg = contact.bracket_field(&f, &g);
        for p in shell_samples(&spec, 25, 31) {
            let lhs = commutator_fd(&xf, &xg, &p, FD_STEP).unwrap();
            let rhs = contact.jacobian_field_at(&fg, &p).unwrap();
            assert!((lhs - rhs).amax() < 1e-6);
        }
    }

    #[test]
    fn newton_wigner_examples() {
        let spec = MassShellSpec::new(1.0).unwrap();
        let at = spec.embed(&[2.0, 1.0, 0.0, 0.0], &[0.0; 3]).unwrap();
        let nw = spec.newton_wigner(&at).unwrap();
        assert_eq!(nw.q, [1.0, 0.0, 0.0]);
        assert_eq!(nw.p, [0.0, 0.0, 0.0]);
        assert_eq!(nw.t, 2.0);
    }

    #[test]
    fn newton_wigner_conserved_along_landau_flow() {
        let spec = MassShellSpec::new(1.0).unwrap();
        let x = spec.landau_field();
        let start = spec
            .embed(&[0.0, 0.4, -0.3, 0.8], &[1.0, 0.0, 0.0])
            .unwrap();
        let nw0 = spec.newton_wigner(&start).unwrap();
        let traj = integrate_flow(&x, &start, (0.0, 5.0), 1e-3, Method::Rk4, None).unwrap();
        let nw1 = spec.newton_wigner(traj.end()).unwrap();
        for j in 0..3 {
            assert!((nw0.q[j] - nw1.q[j]).abs() < 1e-9);
            assert!((nw0.p[j] - nw1.p[j]).abs() < 1e-12);
        }
        // Kinematical time runs with the flow parameter exactly.
        assert!((traj.end().values()[0] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn dynamical_time_has_unit_reeb_rate() {
        let spec = MassShellSpec::new(1.0).unwrap();
        let contact = spec.contact().unwrap();
        let t = spec.dynamical_time();
        for p in shell_samples(&spec, 50, 37) {
            let gamma = contact.reeb_at(&p).unwrap();
            let mut rate = 0.0;
            for i in 0..7 {
                rate += gamma[i] * t.differentiate_index(i).evaluate(&p).unwrap();
            }
            assert!((rate - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn bracket_is_poincare_invariant() {
        let spec = MassShellSpec::new(1.0).unwrap();
        let contact = spec.contact().unwrap();
        let chart = spec.chart();
        // Boost in (0,1) and rotation in (1,2), plus a translation.
        let gen = 0.3 * lorentz_generator(0, 1) + 0.4 * lorentz_generator(1, 2);
        let lorentz = matrix_exp_rk4(&gen, 512);
        let map = poincare_chart_map(&spec, &lorentz, &[0.1, -0.2, 0.3, 0.05]).unwrap();
        let f = Expression::parse("u1*p2", chart).unwrap();
        let h = Expression::parse("u0*p1 + u3", chart).unwrap();
        let f_composed = map.pullback_function(&f).unwrap();
        let h_composed = map.pullback_function(&h).unwrap();
        for p in shell_samples(&spec, 30, 41) {
            let lhs = contact
                .jacobi_bracket(&f_composed, &h_composed, &p)
                .unwrap();
            let moved = map.apply(&p).unwrap();
            let rhs = contact.jacobi_bracket(&f, &h, &moved).unwrap();
            assert!(
                (lhs - rhs).abs() < 1e-6,
                "invariance residual {:.3e}",
                (lhs - rhs).abs()
            );
        }
    }

    #[test]
    fn reparam_residual_examples() {
        let spec = MassShellSpec::new(1.0).unwrap();
        let p_spatial = [0.4, -0.3, 0.2];
        let p0 = (p_spatial.iter().map(|x| x * x).sum::<f64>() + 1.0).sqrt();
        let p_up = [p0, -p_spatial[0], -p_spatial[1], -p_spatial[2]];
        let x0 = [0.1, -0.5, 0.2, 0.0];
        let straight = |lambda: f64| -> ChartPoint {
            let u = [
                x0[0] + lambda * p_up[0],
                x0[1] + lambda * p_up[1],
                x0[2] + lambda * p_up[2],
                x0[3] + lambda * p_up[3],
            ];
            spec.embed(&u, &p_spatial).unwrap()
        };

        // Uniform sampling of the straight worldline.
        let curve: Vec<(f64, ChartPoint)> = (0..21)
            .map(|i| {
                let l = i as f64 * 0.05;
                (l, straight(l))
            })
            .collect();
        for r in reparam_el_residual(&spec, &curve).unwrap() {
            assert!(r.p_dot < 1e-8 && r.projector < 1e-8);
        }

        // The same worldline sampled through λ ↦ λ³ away from zero.
        let curve: Vec<(f64, ChartPoint)> = (0..21)
            .map(|i| {
                let l = 1.0 + i as f64 * 0.05;
                (l, straight(l * l * l))
            })
            .collect();
        for r in reparam_el_residual(&spec, &curve).unwrap() {
            assert!(r.p_dot < 1e-8 && r.projector < 1e-8);
        }

        // A moving curve with driven momentum shows the imposed slope.
        let slope = 0.25;
        let curve: Vec<(f64, ChartPoint)> = (0..11)
            .map(|i| {
                let l = i as f64 * 0.1;
                let u = [x0[0] + l, x0[1], x0[2], x0[3]];
                let p = [0.4 + slope * l, 0.0, 0.0];
                (l, spec.embed(&u, &p).unwrap())
            })
            .collect();
        for r in reparam_el_residual(&spec, &curve).unwrap() {
            assert!((r.p_dot - slope).abs() < 1e-8);
        }

        // Degenerate parameter values are rejected.
        let bad = vec![curve[0].clone(), curve[0].clone(), curve[1].clone()];
        assert!(reparam_el_residual(&spec, &bad).is_err());
    }
}

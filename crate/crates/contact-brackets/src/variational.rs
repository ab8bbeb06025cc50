//! The discrete action principle on sampled sections.
//!
//! A section χ is sampled on a uniform grid s_0 < … < s_N with values
//! (u^a_k, p_{a,k}) per node; the action is
//!
//! ```text
//! S_d = Σ_{k=0}^{N−1} [ p_{a,k} (u^a_{k+1} − u^a_k) − H(u_k, p_k, s_k) Δs ]
//! ```
//!
//! whose exact critical points are the first-order variational scheme
//!
//! ```text
//! (u^a_{k+1} − u^a_k)/Δs =  ∂H/∂p_a (u_k, p_k, s_k)
//! (p_{a,k} − p_{a,k−1})/Δs = −∂H/∂u^a (u_k, p_k, s_k)
//! ```
//!
//! Because the scheme is itself the Euler–Lagrange system of S_d, the node
//! maps are symplectic and the solution-space 2-form
//! Ω_k(U, V) = δu_U δp_V − δu_V δp_U is conserved exactly along solutions,
//! not just to discretization order.
//!
//! The directional derivative of S_d splits exactly into interior residual
//! rows plus endpoint terms: dS_d(U) = Δs Σ (R·U) + B(U) with
//! B(U) = p_{N−1} δu_N − p₋ δu_0, where p₋ = p_0 + Δs ∂H/∂u(u_0, p_0, s_0)
//! is the scheme's left-endpoint ghost momentum.

use nalgebra::{DMatrix, DVector};

use crate::chart::ChartPoint;
use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::extended::SystemSpec;

/// Convergence threshold for the Newton iteration on the residual rates.
pub const NEWTON_TOL: f64 = 1e-10;
pub const NEWTON_MAX_ITER: usize = 50;

/// A sampled field: uniform grid plus per-node positions and momenta.
#[derive(Debug, Clone)]
pub struct DiscreteSection {
    s: Vec<f64>,
    /// u[k][a], k = 0..=N.
    u: Vec<Vec<f64>>,
    /// p[k][a].
    p: Vec<Vec<f64>>,
}

impl DiscreteSection {
    pub fn new(s: Vec<f64>, u: Vec<Vec<f64>>, p: Vec<Vec<f64>>) -> Result<DiscreteSection> {
        if s.len() < 2 {
            return Err(Error::Precondition(
                "a discrete section needs at least two nodes".to_string(),
            ));
        }
        if u.len() != s.len() || p.len() != s.len() {
            return Err(Error::GridMismatch(format!(
                "{} grid nodes but {} position and {} momentum rows",
                s.len(),
                u.len(),
                p.len()
            )));
        }
        let n = u[0].len();
        if n == 0 || u.iter().any(|row| row.len() != n) || p.iter().any(|row| row.len() != n) {
            return Err(Error::GridMismatch(
                "ragged position/momentum rows".to_string(),
            ));
        }
        let ds = s[1] - s[0];
        if !(ds > 0.0) {
            return Err(Error::Precondition("grid must be increasing".to_string()));
        }
        for k in 1..s.len() {
            if ((s[k] - s[k - 1]) - ds).abs() > 1e-12 {
                return Err(Error::Precondition(format!(
                    "grid must be uniform to 1e-12; spacing at node {k} deviates by {:.3e}",
                    ((s[k] - s[k - 1]) - ds).abs()
                )));
            }
        }
        Ok(DiscreteSection { s, u, p })
    }

    /// Number of intervals N (nodes are 0..=N).
    pub fn intervals(&self) -> usize {
        self.s.len() - 1
    }

    pub fn dof(&self) -> usize {
        self.u[0].len()
    }

    pub fn step(&self) -> f64 {
        self.s[1] - self.s[0]
    }

    pub fn grid(&self) -> &[f64] {
        &self.s
    }

    pub fn u(&self) -> &[Vec<f64>] {
        &self.u
    }

    pub fn p(&self) -> &[Vec<f64>] {
        &self.p
    }

    /// Node k as a chart point of `spec`.
    pub fn point(&self, spec: &SystemSpec, k: usize) -> Result<ChartPoint> {
        spec.point(&self.u[k], &self.p[k], self.s[k])
    }

    fn check_spec(&self, spec: &SystemSpec) -> Result<()> {
        if spec.n() != self.dof() {
            return Err(Error::GridMismatch(format!(
                "section has {} degrees of freedom, system has {}",
                self.dof(),
                spec.n()
            )));
        }
        Ok(())
    }
}

/// A vertical variation δχ: per-node (δu, δp) on the same grid as its base
/// section.
#[derive(Debug, Clone)]
pub struct VariationField {
    pub du: Vec<Vec<f64>>,
    pub dp: Vec<Vec<f64>>,
}

impl VariationField {
    pub fn new(du: Vec<Vec<f64>>, dp: Vec<Vec<f64>>) -> Result<VariationField> {
        if du.len() != dp.len() || du.is_empty() {
            return Err(Error::GridMismatch(
                "variation rows must pair up".to_string(),
            ));
        }
        Ok(VariationField { du, dp })
    }

    pub fn zero(nodes: usize, dof: usize) -> VariationField {
        VariationField {
            du: vec![vec![0.0; dof]; nodes],
            dp: vec![vec![0.0; dof]; nodes],
        }
    }

    fn check_grid(&self, section: &DiscreteSection) -> Result<()> {
        if self.du.len() != section.s.len() {
            return Err(Error::GridMismatch(format!(
                "variation has {} nodes, section has {}",
                self.du.len(),
                section.s.len()
            )));
        }
        Ok(())
    }
}

/// A variation satisfying the linearized scheme along a solution; produced
/// by [`transport_variation`].
#[derive(Debug, Clone)]
pub struct SolutionTangent {
    pub variation: VariationField,
}

// Evaluation helpers: H and its first and second derivatives at a node.
struct HamiltonianDerivs {
    n: usize,
    h: Expression,
    h_u: Vec<Expression>,
    h_p: Vec<Expression>,
    h_uu: Vec<Vec<Expression>>,
    h_up: Vec<Vec<Expression>>, // ∂²H/∂u^a ∂p_b
    h_pp: Vec<Vec<Expression>>,
}

impl HamiltonianDerivs {
    fn new(spec: &SystemSpec) -> HamiltonianDerivs {
        let n = spec.n();
        let h = spec.hamiltonian().clone();
        let h_u: Vec<_> = (0..n)
            .map(|a| h.differentiate_index(spec.u_index(a)))
            .collect();
        let h_p: Vec<_> = (0..n)
            .map(|a| h.differentiate_index(spec.p_index(a)))
            .collect();
        let second = |first: &[Expression], index: fn(&SystemSpec, usize) -> usize| {
            first
                .iter()
                .map(|f| {
                    (0..n)
                        .map(|b| f.differentiate_index(index(spec, b)))
                        .collect::<Vec<_>>()
                })
                .collect::<Vec<_>>()
        };
        HamiltonianDerivs {
            n,
            h_uu: second(&h_u, |s, b| s.u_index(b)),
            h_up: second(&h_u, |s, b| s.p_index(b)),
            h_pp: second(&h_p, |s, b| s.p_index(b)),
            h,
            h_u,
            h_p,
        }
    }

    fn values(&self, spec: &SystemSpec, section: &DiscreteSection, k: usize) -> Result<NodeDerivs> {
        let point = section.point(spec, k)?;
        let eval_vec = |es: &[Expression]| -> Result<DVector<f64>> {
            let mut v = DVector::zeros(self.n);
            for (i, e) in es.iter().enumerate() {
                v[i] = e.evaluate(&point)?;
            }
            Ok(v)
        };
        let eval_mat = |es: &[Vec<Expression>]| -> Result<DMatrix<f64>> {
            let mut m = DMatrix::zeros(self.n, self.n);
            for (i, row) in es.iter().enumerate() {
                for (j, e) in row.iter().enumerate() {
                    m[(i, j)] = e.evaluate(&point)?;
                }
            }
            Ok(m)
        };
        Ok(NodeDerivs {
            h: self.h.evaluate(&point)?,
            h_u: eval_vec(&self.h_u)?,
            h_p: eval_vec(&self.h_p)?,
            h_uu: eval_mat(&self.h_uu)?,
            h_up: eval_mat(&self.h_up)?,
            h_pp: eval_mat(&self.h_pp)?,
        })
    }
}

struct NodeDerivs {
    #[allow(dead_code)]
    h: f64,
    h_u: DVector<f64>,
    h_p: DVector<f64>,
    h_uu: DMatrix<f64>,
    h_up: DMatrix<f64>,
    h_pp: DMatrix<f64>,
}

/// S_d[χ].
pub fn discrete_action(section: &DiscreteSection, spec: &SystemSpec) -> Result<f64> {
    section.check_spec(spec)?;
    let ds = section.step();
    let mut action = 0.0;
    for k in 0..section.intervals() {
        let point = section.point(spec, k)?;
        let h = spec.hamiltonian().evaluate(&point)?;
        for a in 0..spec.n() {
            action += section.p[k][a] * (section.u[k + 1][a] - section.u[k][a]);
        }
        action -= h * ds;
    }
    Ok(action)
}

/// Per-node residuals of the discrete Euler–Lagrange equations, in rate
/// form. `p_rows[k]` (k = 0..N−1) is (u_{k+1} − u_k)/Δs − ∂H/∂p at node k;
/// `u_rows` holds (p_{k−1} − p_k)/Δs − ∂H/∂u at interior nodes k = 1..N−1.
/// Both vanish exactly on solutions of the scheme.
#[derive(Debug, Clone)]
pub struct ElResidual {
    /// Indexed by k = 0..N−1.
    pub p_rows: Vec<Vec<f64>>,
    /// Entry i corresponds to interior node k = i + 1. Empty when the grid
    /// has a single interval.
    pub u_rows: Vec<Vec<f64>>,
}

impl ElResidual {
    pub fn max_abs(&self) -> f64 {
        self.p_rows
            .iter()
            .chain(self.u_rows.iter())
            .flat_map(|row| row.iter())
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }
}

pub fn el_residual(section: &DiscreteSection, spec: &SystemSpec) -> Result<ElResidual> {
    section.check_spec(spec)?;
    let derivs = HamiltonianDerivs::new(spec);
    el_residual_with(section, spec, &derivs)
}

fn el_residual_with(
    section: &DiscreteSection,
    spec: &SystemSpec,
    derivs: &HamiltonianDerivs,
) -> Result<ElResidual> {
    let n = spec.n();
    let nn = section.intervals();
    let ds = section.step();
    let mut p_rows = Vec::with_capacity(nn);
    let mut u_rows = Vec::with_capacity(nn.saturating_sub(1));
    for k in 0..nn {
        let node = derivs.values(spec, section, k)?;
        let row: Vec<f64> = (0..n)
            .map(|a| (section.u[k + 1][a] - section.u[k][a]) / ds - node.h_p[a])
            .collect();
        p_rows.push(row);
        if k >= 1 {
            let row: Vec<f64> = (0..n)
                .map(|a| (section.p[k - 1][a] - section.p[k][a]) / ds - node.h_u[a])
                .collect();
            u_rows.push(row);
        }
    }
    Ok(ElResidual { p_rows, u_rows })
}

/// Endpoint pairing of the action differential with a vertical variation:
/// B(U) = p_{N−1} δu_N − p₋ δu_0 with the left ghost momentum
/// p₋ = p_0 + Δs ∂H/∂u(u_0, p_0, s_0). Together with the interior residual
/// rows this reproduces dS_d(U) exactly; the δp and δs pairings drop out
/// because θ has no dp components and the variation is vertical.
pub fn boundary_term(
    section: &DiscreteSection,
    variation: &VariationField,
    spec: &SystemSpec,
) -> Result<f64> {
    section.check_spec(spec)?;
    variation.check_grid(section)?;
    let n = spec.n();
    let nn = section.intervals();
    let ds = section.step();
    let node0 = HamiltonianDerivs::new(spec).values(spec, section, 0)?;
    let mut value = 0.0;
    for a in 0..n {
        let ghost = section.p[0][a] + ds * node0.h_u[a];
        value += section.p[nn - 1][a] * variation.du[nn][a] - ghost * variation.du[0][a];
    }
    Ok(value)
}

/// Interior pairing Δs Σ_k (R_u·δu + R_p·δp): the directional derivative of
/// S_d along interior directions.
pub fn el_pairing(
    section: &DiscreteSection,
    variation: &VariationField,
    spec: &SystemSpec,
) -> Result<f64> {
    section.check_spec(spec)?;
    variation.check_grid(section)?;
    let residual = el_residual(section, spec)?;
    let ds = section.step();
    let mut acc = 0.0;
    for (k, row) in residual.p_rows.iter().enumerate() {
        for (a, r) in row.iter().enumerate() {
            acc += r * variation.dp[k][a];
        }
    }
    for (i, row) in residual.u_rows.iter().enumerate() {
        let k = i + 1;
        for (a, r) in row.iter().enumerate() {
            acc += r * variation.du[k][a];
        }
    }
    Ok(ds * acc)
}

/// Directional derivative of S_d along a variation by central differences;
/// the independent oracle for the action-principle decomposition.
pub fn action_directional_derivative_fd(
    section: &DiscreteSection,
    variation: &VariationField,
    spec: &SystemSpec,
    eps: f64,
) -> Result<f64> {
    variation.check_grid(section)?;
    let shifted = |sign: f64| -> Result<f64> {
        let mut moved = section.clone();
        for k in 0..moved.s.len() {
            for a in 0..moved.dof() {
                moved.u[k][a] += sign * eps * variation.du[k][a];
                moved.p[k][a] += sign * eps * variation.dp[k][a];
            }
        }
        discrete_action(&moved, spec)
    };
    Ok((shifted(1.0)? - shifted(-1.0)?) / (2.0 * eps))
}

/// Newton solve of the discrete boundary value problem with positions
/// fixed at both ends and momenta free. The Jacobian of the scheme is
/// assembled from exact symbolic second derivatives of H. Conjugate-point
/// degeneracies surface as singular-Jacobian errors.
pub fn solve_bvp(
    spec: &SystemSpec,
    q_initial: &[f64],
    q_final: &[f64],
    span: (f64, f64),
    intervals: usize,
) -> Result<DiscreteSection> {
    solve_bvp_traced(spec, q_initial, q_final, span, intervals).map(|(section, _)| section)
}

/// As [`solve_bvp`], additionally returning the max-norm residual at the
/// start of every Newton iteration (ending with the accepted one).
pub fn solve_bvp_traced(
    spec: &SystemSpec,
    q_initial: &[f64],
    q_final: &[f64],
    span: (f64, f64),
    intervals: usize,
) -> Result<(DiscreteSection, Vec<f64>)> {
    let n = spec.n();
    if q_initial.len() != n || q_final.len() != n {
        return Err(Error::Precondition(format!(
            "boundary data must have {n} components"
        )));
    }
    if intervals < 8 {
        return Err(Error::Precondition(
            "the boundary value solver needs at least 8 intervals".to_string(),
        ));
    }
    if !(span.1 > span.0) {
        return Err(Error::Precondition("span must be increasing".to_string()));
    }
    let nn = intervals;
    let ds = (span.1 - span.0) / nn as f64;
    let s: Vec<f64> = (0..=nn).map(|k| span.0 + ds * k as f64).collect();

    // Straight-line initialization: u interpolates the boundary data, p is
    // the difference quotient (exact for the free particle).
    let mut u = vec![vec![0.0; n]; nn + 1];
    let mut p = vec![vec![0.0; n]; nn + 1];
    for k in 0..=nn {
        let t = k as f64 / nn as f64;
        for a in 0..n {
            u[k][a] = q_initial[a] + t * (q_final[a] - q_initial[a]);
            p[k][a] = (q_final[a] - q_initial[a]) / (span.1 - span.0);
        }
    }
    let mut section = DiscreteSection::new(s, u, p)?;
    let derivs = HamiltonianDerivs::new(spec);

    // Unknown layout: z = [u_1..u_{N-1} | p_0..p_{N-1}], each block of n.
    let unknowns = (2 * nn - 1) * n;
    let u_slot = |k: usize, a: usize| (k - 1) * n + a; // k = 1..N-1
    let p_slot = |k: usize, a: usize| (nn - 1) * n + k * n + a; // k = 0..N-1

    let mut history = Vec::new();
    let mut residual_norm = f64::INFINITY;
    for iteration in 0..=NEWTON_MAX_ITER {
        let residual = el_residual_with(&section, spec, &derivs)?;
        residual_norm = residual.max_abs();
        history.push(residual_norm);
        if residual_norm < NEWTON_TOL {
            finish_section(&mut section, spec, &derivs)?;
            check_conjugate_point(&section, spec, &derivs)?;
            return Ok((section, history));
        }
        if iteration == NEWTON_MAX_ITER {
            break;
        }

        // Rows: p-equations k = 0..N-1, then u-equations k = 1..N-1.
        let mut jac = DMatrix::zeros(unknowns, unknowns);
        let mut rhs = DVector::zeros(unknowns);
        let mut row = 0;
        for k in 0..nn {
            let node = derivs.values(spec, &section, k)?;
            for a in 0..n {
                rhs[row] = -residual.p_rows[k][a];
                if k + 1 < nn {
                    jac[(row, u_slot(k + 1, a))] += 1.0 / ds;
                }
                if k >= 1 {
                    jac[(row, u_slot(k, a))] -= 1.0 / ds;
                }
                for b in 0..n {
                    if k >= 1 {
                        // ∂/∂u_k of −H_p[a]: −H_pu = −(∂²H/∂u^b∂p_a).
                        jac[(row, u_slot(k, b))] -= node.h_up[(b, a)];
                    }
                    jac[(row, p_slot(k, b))] -= node.h_pp[(a, b)];
                }
                row += 1;
            }
        }
        for k in 1..nn {
            let node = derivs.values(spec, &section, k)?;
            for a in 0..n {
                rhs[row] = -residual.u_rows[k - 1][a];
                jac[(row, p_slot(k - 1, a))] += 1.0 / ds;
                jac[(row, p_slot(k, a))] -= 1.0 / ds;
                for b in 0..n {
                    jac[(row, p_slot(k, b))] -= node.h_up[(a, b)];
                    jac[(row, u_slot(k, b))] -= node.h_uu[(a, b)];
                }
                row += 1;
            }
        }

        let lu = jac.lu();
        let delta = lu.solve(&rhs).ok_or_else(|| {
            Error::SingularJacobian(
                "the Newton system of the discrete boundary value problem is singular".to_string(),
            )
        })?;
        for k in 1..nn {
            for a in 0..n {
                section.u[k][a] += delta[u_slot(k, a)];
            }
        }
        for k in 0..nn {
            for a in 0..n {
                section.p[k][a] += delta[p_slot(k, a)];
            }
        }
    }
    Err(Error::NonConvergence {
        iterations: NEWTON_MAX_ITER,
        residual: residual_norm,
    })
}

/// p_N does not enter S_d; extend the converged solution by the scheme's
/// own continuation equation p_N = p_{N−1} − Δs ∂H/∂u(u_N, p_N), implicit
/// in p_N.
fn finish_section(
    section: &mut DiscreteSection,
    spec: &SystemSpec,
    derivs: &HamiltonianDerivs,
) -> Result<()> {
    let n = spec.n();
    let nn = section.intervals();
    let ds = section.step();
    section.p[nn] = section.p[nn - 1].clone();
    for _ in 0..100 {
        let node = derivs.values(spec, section, nn)?;
        let mut residual = DVector::zeros(n);
        for a in 0..n {
            residual[a] = section.p[nn - 1][a] - ds * node.h_u[a] - section.p[nn][a];
        }
        if residual.amax() < 1e-13 {
            return Ok(());
        }
        // d(residual)/d(p_N) = −I − Δs H_up.
        let m = -DMatrix::identity(n, n) - ds * &node.h_up;
        let delta = m.lu().solve(&residual).ok_or_else(|| {
            Error::SingularJacobian("endpoint momentum continuation is singular".to_string())
        })?;
        for a in 0..n {
            section.p[nn][a] -= delta[a];
        }
    }
    Err(Error::NonConvergence {
        iterations: 100,
        residual: f64::NAN,
    })
}

/// Degenerate boundary value problems (conjugate endpoints) make the
/// boundary-sensitivity block of the Newton system singular in the
/// continuum limit; on a grid with step Δs the block determinant is
/// O(Δs²) rather than exactly zero. Flag it below 0.1·Δs.
fn check_conjugate_point(
    section: &DiscreteSection,
    spec: &SystemSpec,
    derivs: &HamiltonianDerivs,
) -> Result<()> {
    let n = spec.n();
    let nn = section.intervals();
    let mut block = DMatrix::zeros(n, n);
    for b in 0..n {
        let mut dp0 = vec![0.0; n];
        dp0[b] = 1.0;
        let tangent = transport_with(section, spec, derivs, &vec![0.0; n], &dp0)?;
        for a in 0..n {
            block[(a, b)] = tangent.variation.du[nn][a];
        }
    }
    let det = block.determinant().abs();
    let threshold = 0.1 * section.step();
    if det < threshold {
        return Err(Error::SingularJacobian(format!(
            "conjugate endpoints: boundary sensitivity determinant {det:.3e} below {threshold:.3e}"
        )));
    }
    Ok(())
}

/// Integrate the linearized scheme from an initial variation (δu_0, δp_0)
/// along a solution. The output satisfies the linearized Euler–Lagrange
/// equations node by node.
pub fn transport_variation(
    section: &DiscreteSection,
    spec: &SystemSpec,
    du0: &[f64],
    dp0: &[f64],
) -> Result<SolutionTangent> {
    section.check_spec(spec)?;
    if du0.len() != spec.n() || dp0.len() != spec.n() {
        return Err(Error::Precondition(format!(
            "initial variation must have {} components",
            spec.n()
        )));
    }
    let derivs = HamiltonianDerivs::new(spec);
    let residual = el_residual_with(section, spec, &derivs)?;
    if residual.max_abs() > 1e-9 {
        return Err(Error::Precondition(format!(
            "transport base is not a solution (residual {:.3e})",
            residual.max_abs()
        )));
    }
    transport_with(section, spec, &derivs, du0, dp0)
}

fn transport_with(
    section: &DiscreteSection,
    spec: &SystemSpec,
    derivs: &HamiltonianDerivs,
    du0: &[f64],
    dp0: &[f64],
) -> Result<SolutionTangent> {
    let n = spec.n();
    let nn = section.intervals();
    let ds = section.step();
    let mut du = vec![vec![0.0; n]; nn + 1];
    let mut dp = vec![vec![0.0; n]; nn + 1];
    du[0] = du0.to_vec();
    dp[0] = dp0.to_vec();
    for k in 0..nn {
        let node = derivs.values(spec, section, k)?;
        let duk = DVector::from_column_slice(&du[k]);
        let dpk = DVector::from_column_slice(&dp[k]);
        // δu_{k+1} = δu_k + Δs (H_pu δu_k + H_pp δp_k) at node k; H_pu is
        // the transpose of the stored ∂²H/∂u∂p block.
        let dun = &duk + ds * (node.h_up.transpose() * &duk + &node.h_pp * &dpk);
        du[k + 1] = dun.data.into();
        // (I + Δs H_up) δp_{k+1} = δp_k − Δs H_uu δu_{k+1} at node k+1.
        let next = derivs.values(spec, section, k + 1)?;
        let dunext = DVector::from_column_slice(&du[k + 1]);
        let rhs = &dpk - ds * (&next.h_uu * &dunext);
        let m = DMatrix::identity(n, n) + ds * &next.h_up;
        let dpn = m.lu().solve(&rhs).ok_or_else(|| {
            Error::SingularJacobian("linearized momentum update is singular".to_string())
        })?;
        dp[k + 1] = dpn.data.into();
    }
    Ok(SolutionTangent {
        variation: VariationField { du, dp },
    })
}

/// Ω_k(U, V) = Σ_a (δu^a_U δp^V_a − δu^a_V δp^U_a) at node k.
pub fn omega_form(
    section: &DiscreteSection,
    u: &SolutionTangent,
    v: &SolutionTangent,
    k: usize,
) -> Result<f64> {
    u.variation.check_grid(section)?;
    v.variation.check_grid(section)?;
    if k >= section.s.len() {
        return Err(Error::Precondition(format!(
            "node index {k} out of range (grid has {} nodes)",
            section.s.len()
        )));
    }
    let mut acc = 0.0;
    for a in 0..section.dof() {
        acc += u.variation.du[k][a] * v.variation.dp[k][a]
            - v.variation.du[k][a] * u.variation.dp[k][a];
    }
    Ok(acc)
}

/// Ω evaluated at every node for a transported basis of 2n variations
/// (δu = e_a and δp = e_a at the initial node), plus the maximal node
/// spread over all pairs.
#[derive(Debug, Clone)]
pub struct OmegaTable {
    /// One antisymmetric (2n)×(2n) matrix per node.
    pub per_node: Vec<DMatrix<f64>>,
    pub max_spread: f64,
}

impl OmegaTable {
    /// Tangent vectors of the transported basis at node 0, as label-space
    /// columns (δu; δp); the identity for the standard basis.
    pub fn basis_dim(&self) -> usize {
        self.per_node[0].nrows()
    }
}

pub fn omega_basis_table(section: &DiscreteSection, spec: &SystemSpec) -> Result<OmegaTable> {
    let n = spec.n();
    let mut basis = Vec::with_capacity(2 * n);
    for a in 0..n {
        let mut du0 = vec![0.0; n];
        du0[a] = 1.0;
        basis.push(transport_variation(section, spec, &du0, &vec![0.0; n])?);
    }
    for a in 0..n {
        let mut dp0 = vec![0.0; n];
        dp0[a] = 1.0;
        basis.push(transport_variation(section, spec, &vec![0.0; n], &dp0)?);
    }
    let nodes = section.s.len();
    let mut per_node = Vec::with_capacity(nodes);
    for k in 0..nodes {
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..2 * n {
            for j in 0..2 * n {
                m[(i, j)] = omega_form(section, &basis[i], &basis[j], k)?;
            }
        }
        per_node.push(m);
    }
    let mut max_spread = 0.0_f64;
    for k in 1..nodes {
        max_spread = max_spread.max((&per_node[k] - &per_node[0]).amax());
    }
    Ok(OmegaTable {
        per_node,
        max_spread,
    })
}

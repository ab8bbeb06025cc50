//! Coordinate expressions of 1-forms, 2-forms, bivectors, vector fields and
//! chart maps. Antisymmetric objects store their strict upper triangle, so
//! antisymmetry holds by construction.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::chart::{Chart, ChartPoint};
use crate::error::Result;
use crate::expr::Expression;

/// θ = θ_i dx^i with symbolic coefficients.
#[derive(Debug, Clone)]
pub struct OneForm {
    chart: Arc<Chart>,
    comps: Vec<Expression>,
}

impl OneForm {
    pub fn new(chart: &Arc<Chart>, comps: Vec<Expression>) -> OneForm {
        assert_eq!(
            comps.len(),
            chart.dim(),
            "component count != chart dimension"
        );
        for c in &comps {
            assert_eq!(c.chart().as_ref(), chart.as_ref(), "component off chart");
        }
        OneForm {
            chart: Arc::clone(chart),
            comps,
        }
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn components(&self) -> &[Expression] {
        &self.comps
    }

    pub fn eval(&self, p: &ChartPoint) -> Result<DVector<f64>> {
        p.check_chart(&self.chart)?;
        let mut v = DVector::zeros(self.comps.len());
        for (i, c) in self.comps.iter().enumerate() {
            v[i] = c.evaluate(p)?;
        }
        Ok(v)
    }

    /// θ(X) at a point.
    pub fn contract(&self, field: &VectorField, p: &ChartPoint) -> Result<f64> {
        let theta = self.eval(p)?;
        let x = field.eval(p)?;
        Ok(theta.dot(&x))
    }
}

/// Antisymmetric rank-2 object with symbolic entries; used both for 2-forms
/// ω_ij and for bivectors Λ^ij. Only i < j entries are stored.
#[derive(Debug, Clone)]
pub struct AntisymMatrix {
    chart: Arc<Chart>,
    upper: Vec<Expression>,
}

pub type TwoForm = AntisymMatrix;
pub type Bivector = AntisymMatrix;

fn upper_index(i: usize, j: usize, dim: usize) -> usize {
    debug_assert!(i < j && j < dim);
    // Row-major offset into the strict upper triangle.
    i * dim - i * (i + 1) / 2 + (j - i - 1)
}

impl AntisymMatrix {
    /// Build from the strict upper triangle, row-major: (0,1), (0,2), ...
    pub fn from_upper(chart: &Arc<Chart>, upper: Vec<Expression>) -> AntisymMatrix {
        let d = chart.dim();
        assert_eq!(upper.len(), d * (d - 1) / 2, "upper triangle size mismatch");
        AntisymMatrix {
            chart: Arc::clone(chart),
            upper,
        }
    }

    pub fn zero(chart: &Arc<Chart>) -> AntisymMatrix {
        let d = chart.dim();
        AntisymMatrix::from_upper(chart, vec![Expression::zero(chart); d * (d - 1) / 2])
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    /// Entry (i, j); antisymmetry is applied on the fly.
    pub fn entry(&self, i: usize, j: usize) -> Expression {
        let d = self.chart.dim();
        if i == j {
            Expression::zero(&self.chart)
        } else if i < j {
            self.upper[upper_index(i, j, d)].clone()
        } else {
            -self.upper[upper_index(j, i, d)].clone()
        }
    }

    pub fn set_upper(&mut self, i: usize, j: usize, value: Expression) {
        let d = self.chart.dim();
        assert!(i < j, "only strict upper entries can be set");
        self.upper[upper_index(i, j, d)] = value;
    }

    pub fn eval(&self, p: &ChartPoint) -> Result<DMatrix<f64>> {
        p.check_chart(&self.chart)?;
        let d = self.chart.dim();
        let mut m = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in (i + 1)..d {
                let v = self.upper[upper_index(i, j, d)].evaluate(p)?;
                m[(i, j)] = v;
                m[(j, i)] = -v;
            }
        }
        Ok(m)
    }
}

/// ω = dθ, computed symbolically: ω_ij = ∂_i θ_j − ∂_j θ_i.
pub fn exterior_derivative(theta: &OneForm) -> TwoForm {
    let chart = theta.chart().clone();
    let d = chart.dim();
    let mut upper = Vec::with_capacity(d * (d - 1) / 2);
    for i in 0..d {
        for j in (i + 1)..d {
            let di_tj = theta.comps[j].differentiate_index(i);
            let dj_ti = theta.comps[i].differentiate_index(j);
            upper.push(di_tj - dj_ti);
        }
    }
    TwoForm::from_upper(&chart, upper)
}

type PointwiseComponents = Arc<dyn Fn(&ChartPoint) -> Result<DVector<f64>> + Send + Sync>;

/// A vector field, either with symbolic components or as a pointwise
/// evaluation rule (fields obtained from linear solves have no symbolic
/// form).
#[derive(Clone)]
pub enum VectorField {
    Symbolic {
        chart: Arc<Chart>,
        comps: Vec<Expression>,
    },
    Pointwise {
        chart: Arc<Chart>,
        eval: PointwiseComponents,
    },
}

impl std::fmt::Debug for VectorField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            VectorField::Symbolic { chart, comps } => f
                .debug_struct("VectorField::Symbolic")
                .field("chart", &chart.id())
                .field(
                    "comps",
                    &comps.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
                )
                .finish(),
            VectorField::Pointwise { chart, .. } => f
                .debug_struct("VectorField::Pointwise")
                .field("chart", &chart.id())
                .finish_non_exhaustive(),
        }
    }
}

impl VectorField {
    pub fn symbolic(chart: &Arc<Chart>, comps: Vec<Expression>) -> VectorField {
        assert_eq!(
            comps.len(),
            chart.dim(),
            "component count != chart dimension"
        );
        VectorField::Symbolic {
            chart: Arc::clone(chart),
            comps,
        }
    }

    pub fn pointwise<F>(chart: &Arc<Chart>, eval: F) -> VectorField
    where
        F: Fn(&ChartPoint) -> Result<DVector<f64>> + Send + Sync + 'static,
    {
        VectorField::Pointwise {
            chart: Arc::clone(chart),
            eval: Arc::new(eval),
        }
    }

    pub fn chart(&self) -> &Arc<Chart> {
        match self {
            VectorField::Symbolic { chart, .. } | VectorField::Pointwise { chart, .. } => chart,
        }
    }

    pub fn symbolic_components(&self) -> Option<&[Expression]> {
        match self {
            VectorField::Symbolic { comps, .. } => Some(comps),
            VectorField::Pointwise { .. } => None,
        }
    }

    pub fn eval(&self, p: &ChartPoint) -> Result<DVector<f64>> {
        p.check_chart(self.chart())?;
        match self {
            VectorField::Symbolic { comps, .. } => {
                let mut v = DVector::zeros(comps.len());
                for (i, c) in comps.iter().enumerate() {
                    v[i] = c.evaluate(p)?;
                }
                Ok(v)
            }
            VectorField::Pointwise { eval, .. } => eval(p),
        }
    }

    /// Directional derivative X(f) = X^i ∂_i f at a point.
    pub fn derive(&self, f: &Expression, p: &ChartPoint) -> Result<f64> {
        if f.chart().as_ref() != self.chart().as_ref() {
            return Err(self.chart().mismatch(f.chart()));
        }
        let x = self.eval(p)?;
        let mut acc = 0.0;
        for i in 0..self.chart().dim() {
            if x[i] != 0.0 {
                acc += x[i] * f.differentiate_index(i).evaluate(p)?;
            }
        }
        Ok(acc)
    }
}

/// A smooth map between charts, written as one target-coordinate expression
/// per target coordinate, all over the source chart.
#[derive(Debug, Clone)]
pub struct ChartMap {
    source: Arc<Chart>,
    target: Arc<Chart>,
    comps: Vec<Expression>,
}

impl ChartMap {
    pub fn new(source: &Arc<Chart>, target: &Arc<Chart>, comps: Vec<Expression>) -> ChartMap {
        assert_eq!(
            comps.len(),
            target.dim(),
            "one component per target coordinate"
        );
        for c in &comps {
            assert_eq!(
                c.chart().as_ref(),
                source.as_ref(),
                "component off source chart"
            );
        }
        ChartMap {
            source: Arc::clone(source),
            target: Arc::clone(target),
            comps,
        }
    }

    pub fn source(&self) -> &Arc<Chart> {
        &self.source
    }

    pub fn target(&self) -> &Arc<Chart> {
        &self.target
    }

    pub fn apply(&self, p: &ChartPoint) -> Result<ChartPoint> {
        p.check_chart(&self.source)?;
        let mut values = Vec::with_capacity(self.target.dim());
        for c in &self.comps {
            values.push(c.evaluate(p)?);
        }
        ChartPoint::new(&self.target, values)
    }

    /// f ∘ φ for a function f on the target chart.
    pub fn pullback_function(&self, f: &Expression) -> Result<Expression> {
        if f.chart().as_ref() != self.target.as_ref() {
            return Err(self.target.mismatch(f.chart()));
        }
        let target = self.target.clone();
        let source = self.source.clone();
        let comps = self.comps.clone();
        f.substitute(&source, |name| {
            target.index_of(name).map(|i| comps[i].clone())
        })
    }

    /// φ*(α) for a 1-form α on the target chart:
    /// (φ*α)_j = Σ_i (α_i ∘ φ) ∂φ^i/∂x^j.
    pub fn pullback_oneform(&self, alpha: &OneForm) -> Result<OneForm> {
        if alpha.chart().as_ref() != self.target.as_ref() {
            return Err(self.target.mismatch(alpha.chart()));
        }
        let mut comps = Vec::with_capacity(self.source.dim());
        for j in 0..self.source.dim() {
            let mut acc = Expression::zero(&self.source);
            for i in 0..self.target.dim() {
                let coeff = self.pullback_function(&alpha.components()[i])?;
                let jac = self.comps[i].differentiate_index(j);
                acc = acc + coeff * jac;
            }
            comps.push(acc);
        }
        Ok(OneForm::new(&self.source, comps))
    }
}

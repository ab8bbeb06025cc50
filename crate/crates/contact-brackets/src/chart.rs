//! Charts (named coordinate systems) and points on them.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A coordinate chart: an ordered list of coordinate names, optionally a
/// distinguished base coordinate (the fibration parameter, `s` or `u0`),
/// and derived symbols that the expression parser expands in place
/// (e.g. `p0 -> sqrt(p1^2 + p2^2 + p3^2 + m^2)` on the mass shell).
#[derive(Debug)]
pub struct Chart {
    id: String,
    coords: Vec<String>,
    base: Option<usize>,
    /// Derived symbols as raw grammar text, keyed by name. They may
    /// reference coordinates only, not other derived symbols.
    defs: Vec<(String, String)>,
}

impl PartialEq for Chart {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id && self.coords == other.coords
    }
}

impl Chart {
    pub fn new(id: &str, coords: &[&str]) -> Arc<Chart> {
        Arc::new(Chart {
            id: id.to_string(),
            coords: coords.iter().map(|c| c.to_string()).collect(),
            base: None,
            defs: Vec::new(),
        })
    }

    pub fn with_base(id: &str, coords: &[&str], base: usize) -> Arc<Chart> {
        Chart::with_base_and_defs(id, coords, base, &[])
    }

    pub fn with_base_and_defs(
        id: &str,
        coords: &[&str],
        base: usize,
        defs: &[(&str, String)],
    ) -> Arc<Chart> {
        assert!(base < coords.len(), "base coordinate index out of range");
        Arc::new(Chart {
            id: id.to_string(),
            coords: coords.iter().map(|c| c.to_string()).collect(),
            base: Some(base),
            defs: defs
                .iter()
                .map(|(n, d)| (n.to_string(), d.clone()))
                .collect(),
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn coord_name(&self, index: usize) -> &str {
        &self.coords[index]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.coords.iter().position(|c| c == name)
    }

    /// Raw text of a derived symbol, if one is declared under this name.
    pub fn def_of(&self, name: &str) -> Option<&str> {
        self.defs
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, d)| d.as_str())
    }

    /// Index of the fibration coordinate, when the chart has one.
    pub fn base_index(&self) -> Option<usize> {
        self.base
    }

    pub(crate) fn mismatch(&self, other: &Chart) -> Error {
        Error::ChartMismatch {
            expected: self.id.clone(),
            got: other.id.clone(),
        }
    }
}

/// A point of a chart: one real value per coordinate, all finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartPoint {
    chart: Arc<Chart>,
    values: Vec<f64>,
}

impl ChartPoint {
    pub fn new(chart: &Arc<Chart>, values: Vec<f64>) -> Result<ChartPoint> {
        if values.len() != chart.dim() {
            return Err(Error::Precondition(format!(
                "point has {} entries but chart `{}` has dimension {}",
                values.len(),
                chart.id(),
                chart.dim()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Precondition(format!(
                "non-finite coordinate value {bad} on chart `{}`",
                chart.id()
            )));
        }
        Ok(ChartPoint {
            chart: Arc::clone(chart),
            values,
        })
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, name: &str) -> Result<f64> {
        match self.chart.index_of(name) {
            Some(i) => Ok(self.values[i]),
            None => Err(Error::UnknownCoordinate {
                name: name.to_string(),
                chart: self.chart.id().to_string(),
            }),
        }
    }

    /// Same point with one coordinate replaced.
    pub fn with_value(&self, index: usize, value: f64) -> Result<ChartPoint> {
        let mut values = self.values.clone();
        values[index] = value;
        ChartPoint::new(&self.chart, values)
    }

    pub(crate) fn check_chart(&self, chart: &Arc<Chart>) -> Result<()> {
        if self.chart.as_ref() == chart.as_ref() {
            Ok(())
        } else {
            Err(chart.mismatch(&self.chart))
        }
    }
}

impl fmt::Display for ChartPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, (name, v)) in self.chart.coords().iter().zip(&self.values).enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{name}={v}")?;
        }
        write!(f, ")")
    }
}

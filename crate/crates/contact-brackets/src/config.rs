//! System spec files (JSON) and the runtime model they load into.
//!
//! ```json
//! {
//!   "kind": "nonrelativistic" | "relativistic",
//!   "n": 1,                      // nonrelativistic: configuration dim
//!   "hamiltonian": "p^2/2",      // nonrelativistic: expression
//!   "mass": 1.0,                 // relativistic
//!   "exclude": "p == 0",         // optional zero-set predicate
//!   "coords": ["Q", "P", "W"],   // optional coordinate renaming
//!   "sample_box": {"p": [0.5, 2.0]}
//! }
//! ```

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use crate::chart::{Chart, ChartPoint};
use crate::contact::ContactStructure;
use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::extended::{nonrel_chart_named, SystemSpec};
use crate::mass_shell::MassShellSpec;
use crate::sample::{sample_points, SampleBox, SplitMix64};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub kind: String,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub hamiltonian: Option<String>,
    #[serde(default)]
    pub mass: Option<f64>,
    #[serde(default)]
    pub exclude: Option<String>,
    #[serde(default)]
    pub coords: Option<Vec<String>>,
    #[serde(default)]
    pub sample_box: Option<BTreeMap<String, [f64; 2]>>,
}

/// A loaded model: either a non-relativistic system or a mass shell,
/// together with its sampling box.
#[derive(Debug, Clone)]
pub enum Model {
    NonRelativistic(SystemSpec),
    Relativistic(MassShellSpec),
}

#[derive(Debug, Clone)]
pub struct LoadedSpec {
    pub model: Model,
    pub sample_box: SampleBox,
}

impl LoadedSpec {
    pub fn load(path: &Path) -> Result<LoadedSpec> {
        let text = std::fs::read_to_string(path)?;
        let file: SpecFile = serde_json::from_str(&text)?;
        LoadedSpec::from_file(&file)
    }

    pub fn from_file(file: &SpecFile) -> Result<LoadedSpec> {
        match file.kind.as_str() {
            "nonrelativistic" => {
                let n = file
                    .n
                    .ok_or_else(|| Error::Config("nonrelativistic specs need `n`".to_string()))?;
                if n == 0 {
                    return Err(Error::Config("`n` must be at least 1".to_string()));
                }
                let h = file.hamiltonian.as_deref().ok_or_else(|| {
                    Error::Config("nonrelativistic specs need `hamiltonian`".to_string())
                })?;
                let mut spec = match &file.coords {
                    Some(names) => SystemSpec::on_chart(n, nonrel_chart_named(n, names)?, h)?,
                    None => SystemSpec::new(n, h)?,
                };
                if let Some(pred) = &file.exclude {
                    spec = spec.with_exclude(&parse_exclude(pred)?)?;
                }
                let sample_box = build_box(spec.chart(), file, (-2.0, 2.0))?;
                Ok(LoadedSpec {
                    model: Model::NonRelativistic(spec),
                    sample_box,
                })
            }
            "relativistic" => {
                let mass = file
                    .mass
                    .ok_or_else(|| Error::Config("relativistic specs need `mass`".to_string()))?;
                let spec = MassShellSpec::new(mass)?;
                let sample_box = match &file.sample_box {
                    None => SampleBox::from_named(
                        spec.chart(),
                        &[
                            ("p1", (-1.0, 1.0)),
                            ("p2", (-1.0, 1.0)),
                            ("p3", (-1.0, 1.0)),
                        ],
                        (-2.0, 2.0),
                    )?,
                    Some(_) => build_box(spec.chart(), file, (-2.0, 2.0))?,
                };
                Ok(LoadedSpec {
                    model: Model::Relativistic(spec),
                    sample_box,
                })
            }
            other => Err(Error::Config(format!(
                "unknown spec kind `{other}` (expected `nonrelativistic` or `relativistic`)"
            ))),
        }
    }

    pub fn chart(&self) -> &Arc<Chart> {
        match &self.model {
            Model::NonRelativistic(s) => s.chart(),
            Model::Relativistic(s) => s.chart(),
        }
    }

    pub fn exclude(&self) -> Option<&Expression> {
        match &self.model {
            Model::NonRelativistic(s) => s.exclude(),
            Model::Relativistic(_) => None,
        }
    }

    /// Seeded sample points from the box, honoring the excluded region.
    pub fn sample(&self, count: usize, rng: &mut SplitMix64) -> Result<Vec<ChartPoint>> {
        sample_points(&self.sample_box, self.exclude(), count, rng)
    }

    /// Contact structure of the model; for non-relativistic systems the
    /// probe point is searched in the sample box.
    pub fn contact(&self, rng: &mut SplitMix64) -> Result<ContactStructure> {
        match &self.model {
            Model::Relativistic(s) => s.contact(),
            Model::NonRelativistic(s) => {
                let mut last = None;
                for probe in self.sample(20, rng)? {
                    match s.contact(&probe) {
                        Ok(c) => return Ok(c),
                        Err(e) => last = Some(e),
                    }
                }
                Err(last.unwrap_or_else(|| {
                    Error::Config("could not find a contact probe point".to_string())
                }))
            }
        }
    }
}

/// Excluded regions are written either as a bare expression or as
/// `expr == 0`.
fn parse_exclude(text: &str) -> Result<String> {
    match text.split_once("==") {
        None => Ok(text.trim().to_string()),
        Some((lhs, rhs)) => {
            if rhs.trim() != "0" {
                return Err(Error::Config(format!(
                    "excluded regions must compare against 0, got `{text}`"
                )));
            }
            Ok(lhs.trim().to_string())
        }
    }
}

fn build_box(chart: &Arc<Chart>, file: &SpecFile, default: (f64, f64)) -> Result<SampleBox> {
    let named: Vec<(&str, (f64, f64))> = file
        .sample_box
        .iter()
        .flatten()
        .map(|(k, v)| (k.as_str(), (v[0], v[1])))
        .collect();
    SampleBox::from_named(chart, &named, default)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loads_a_nonrelativistic_spec() {
        let file: SpecFile = serde_json::from_str(
            r#"{"kind": "nonrelativistic", "n": 1, "hamiltonian": "p^2/2",
                "exclude": "p == 0", "sample_box": {"p": [0.5, 2.0]}}"#,
        )
        .unwrap();
        let loaded = LoadedSpec::from_file(&file).unwrap();
        assert_eq!(loaded.chart().coords(), &["q", "p", "s"]);
        let mut rng = SplitMix64::new(1);
        let pts = loaded.sample(20, &mut rng).unwrap();
        assert!(pts.iter().all(|p| p.values()[1] >= 0.5));
        assert!(loaded.contact(&mut rng).is_ok());
    }

    #[test]
    fn loads_a_renamed_chart() {
        let file: SpecFile = serde_json::from_str(
            r#"{"kind": "nonrelativistic", "n": 1, "hamiltonian": "-1",
                "coords": ["Q", "P", "W"]}"#,
        )
        .unwrap();
        let loaded = LoadedSpec::from_file(&file).unwrap();
        assert_eq!(loaded.chart().coords(), &["Q", "P", "W"]);
        // θ = P dQ + dW: the Darboux normal form, Reeb ∂/∂W.
        let mut rng = SplitMix64::new(2);
        let contact = loaded.contact(&mut rng).unwrap();
        let p = ChartPoint::new(loaded.chart(), vec![0.3, -0.7, 1.1]).unwrap();
        let gamma = contact.reeb_at(&p).unwrap();
        assert!((gamma[2] - 1.0).abs() < 1e-10);
        assert!(gamma[0].abs() < 1e-10 && gamma[1].abs() < 1e-10);
    }

    #[test]
    fn loads_a_relativistic_spec() {
        let file: SpecFile =
            serde_json::from_str(r#"{"kind": "relativistic", "mass": 1.0}"#).unwrap();
        let loaded = LoadedSpec::from_file(&file).unwrap();
        assert_eq!(loaded.chart().dim(), 7);
        assert!(matches!(loaded.model, Model::Relativistic(_)));
    }

    #[test]
    fn rejects_malformed_specs() {
        let bad: SpecFile = serde_json::from_str(r#"{"kind": "quantum"}"#).unwrap();
        assert!(LoadedSpec::from_file(&bad).is_err());
        let missing: SpecFile =
            serde_json::from_str(r#"{"kind": "nonrelativistic", "n": 1}"#).unwrap();
        assert!(LoadedSpec::from_file(&missing).is_err());
        let bad_exclude: SpecFile = serde_json::from_str(
            r#"{"kind": "nonrelativistic", "n": 1, "hamiltonian": "p^2/2",
                "exclude": "p == 1"}"#,
        )
        .unwrap();
        assert!(LoadedSpec::from_file(&bad_exclude).is_err());
    }
}

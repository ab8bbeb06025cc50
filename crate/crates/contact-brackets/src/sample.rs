//! Seeded sampling of chart points.
//!
//! Reproducibility contract: the same seed and box produce bitwise-identical
//! point sequences on every platform, which is what makes verification
//! reports byte-stable. The generator is SplitMix64.

use std::sync::Arc;

use crate::chart::{Chart, ChartPoint};
use crate::error::{Error, Result};
use crate::expr::Expression;

/// SplitMix64: 64-bit state, 64-bit output, integer arithmetic only.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> SplitMix64 {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1) with 53 bits of mantissa.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

/// Axis-aligned sampling box, one interval per chart coordinate.
#[derive(Debug, Clone)]
pub struct SampleBox {
    chart: Arc<Chart>,
    ranges: Vec<(f64, f64)>,
}

impl SampleBox {
    /// The same interval for every coordinate.
    pub fn uniform(chart: &Arc<Chart>, lo: f64, hi: f64) -> SampleBox {
        SampleBox {
            chart: Arc::clone(chart),
            ranges: vec![(lo, hi); chart.dim()],
        }
    }

    /// Intervals given per coordinate name; unnamed coordinates default to
    /// `default`.
    pub fn from_named(
        chart: &Arc<Chart>,
        named: &[(&str, (f64, f64))],
        default: (f64, f64),
    ) -> Result<SampleBox> {
        let mut ranges = vec![default; chart.dim()];
        for (name, range) in named {
            let i = chart
                .index_of(name)
                .ok_or_else(|| Error::UnknownCoordinate {
                    name: name.to_string(),
                    chart: chart.id().to_string(),
                })?;
            if !(range.0 < range.1) {
                return Err(Error::Config(format!(
                    "empty sample range for `{name}`: [{}, {}]",
                    range.0, range.1
                )));
            }
            ranges[i] = *range;
        }
        Ok(SampleBox {
            chart: Arc::clone(chart),
            ranges,
        })
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn draw(&self, rng: &mut SplitMix64) -> ChartPoint {
        let values = self
            .ranges
            .iter()
            .map(|(lo, hi)| rng.next_in(*lo, *hi))
            .collect();
        ChartPoint::new(&self.chart, values).expect("box bounds are finite")
    }
}

/// Draw `count` points, rejecting any with |exclude| < 1e-9 (the excluded
/// region is the zero set of the predicate expression).
pub fn sample_points(
    sample_box: &SampleBox,
    exclude: Option<&Expression>,
    count: usize,
    rng: &mut SplitMix64,
) -> Result<Vec<ChartPoint>> {
    let mut points = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while points.len() < count {
        attempts += 1;
        if attempts > 1000 * (count + 1) {
            return Err(Error::Config(
                "sample box lies almost entirely in the excluded region".to_string(),
            ));
        }
        let p = sample_box.draw(rng);
        if let Some(pred) = exclude {
            if pred.evaluate(&p)?.abs() < 1e-9 {
                continue;
            }
        }
        points.push(p);
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::Chart;

    #[test]
    fn splitmix_is_deterministic() {
        let mut a = SplitMix64::new(7);
        let mut b = SplitMix64::new(7);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn rejection_avoids_excluded_region() {
        let chart = Chart::new("line", &["p"]);
        let sb = SampleBox::uniform(&chart, -1.0, 1.0);
        let pred = Expression::parse("p", &chart).unwrap();
        let mut rng = SplitMix64::new(3);
        let pts = sample_points(&sb, Some(&pred), 200, &mut rng).unwrap();
        assert_eq!(pts.len(), 200);
        assert!(pts.iter().all(|p| p.values()[0].abs() >= 1e-9));
    }
}

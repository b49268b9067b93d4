//! Threshold strategy matrices and the BCG growth-share instance.
//!
//! A point exactly on a threshold belongs to the low side (`<=`).

use serde::{Deserialize, Serialize};

use crate::analytics::{mean_exit_index, mean_shift_time};
use crate::error::{Error, Result};
use crate::process::{ModelParams, Thresholds};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    I,
    II,
    III,
    IV,
}

impl Region {
    pub const ALL: [Region; 4] = [Region::I, Region::II, Region::III, Region::IV];

    fn index(self) -> usize {
        match self {
            Region::I => 0,
            Region::II => 1,
            Region::III => 2,
            Region::IV => 3,
        }
    }

    fn from_sides(a_high: bool, b_high: bool) -> Self {
        match (a_high, b_high) {
            (false, false) => Region::I,
            (true, false) => Region::II,
            (true, true) => Region::III,
            (false, true) => Region::IV,
        }
    }
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Region::I => "I",
            Region::II => "II",
            Region::III => "III",
            Region::IV => "IV",
        })
    }
}

/// Threshold layout of a 2x2 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThresholdSpec {
    /// One A-threshold `m` and one B-threshold `n`.
    Uniform { m: f64, n: f64 },
    /// The B comparison picks the row; each row carries its own A-threshold.
    RowDependent {
        b_threshold: f64,
        a_threshold_low_b: f64,
        a_threshold_high_b: f64,
    },
}

/// Log scale for the relative-market-share axis: `factor * log10(share)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BcgScale {
    pub factor: f64,
}

impl Default for BcgScale {
    fn default() -> Self {
        Self { factor: 100.0 }
    }
}

impl BcgScale {
    pub fn apply(&self, relative_share: f64) -> Result<f64> {
        if !(relative_share > 0.0 && relative_share.is_finite()) {
            return Err(Error::Domain(format!(
                "relative market share must be positive, got {relative_share}"
            )));
        }
        Ok(self.factor * relative_share.log10())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyMatrix {
    /// Labels for regions I, II, III, IV in that order.
    pub labels: [String; 4],
    pub thresholds: ThresholdSpec,
    /// Present when the A axis is entered as a relative market share.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<BcgScale>,
}

impl StrategyMatrix {
    pub fn uniform(m: f64, n: f64) -> Self {
        Self {
            labels: ["I", "II", "III", "IV"].map(String::from),
            thresholds: ThresholdSpec::Uniform { m, n },
            scale: None,
        }
    }

    /// Dogs / Cows / Stars / Question Marks with A-thresholds 0 and 17.6 and a
    /// 10% market-growth split.
    pub fn bcg() -> Self {
        Self {
            labels: ["Dogs", "Cows", "Stars", "Question Marks"].map(String::from),
            thresholds: ThresholdSpec::RowDependent {
                b_threshold: 10.0,
                a_threshold_low_b: 0.0,
                a_threshold_high_b: 17.6,
            },
            scale: Some(BcgScale::default()),
        }
    }

    pub fn label(&self, region: Region) -> &str {
        &self.labels[region.index()]
    }

    pub fn b_threshold(&self) -> f64 {
        match self.thresholds {
            ThresholdSpec::Uniform { n, .. } => n,
            ThresholdSpec::RowDependent { b_threshold, .. } => b_threshold,
        }
    }

    /// A-threshold in force for the row selected by `b_high`.
    pub fn a_threshold(&self, b_high: bool) -> f64 {
        match self.thresholds {
            ThresholdSpec::Uniform { m, .. } => m,
            ThresholdSpec::RowDependent {
                a_threshold_low_b,
                a_threshold_high_b,
                ..
            } => {
                if b_high {
                    a_threshold_high_b
                } else {
                    a_threshold_low_b
                }
            }
        }
    }

    pub fn classify(&self, level_a: f64, level_b: f64) -> Region {
        let b_high = level_b > self.b_threshold();
        Region::from_sides(level_a > self.a_threshold(b_high), b_high)
    }

    /// Scale of this matrix, or the default log scale.
    pub fn share_scale(&self) -> BcgScale {
        self.scale.unwrap_or_default()
    }
}

pub fn classify(level_a: f64, level_b: f64, matrix: &StrategyMatrix) -> Region {
    matrix.classify(level_a, level_b)
}

/// `100 log10(share)`.
pub fn bcg_scale(relative_share: f64) -> Result<f64> {
    BcgScale::default().apply(relative_share)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BcgCategory {
    Dogs,
    Cows,
    Stars,
    QuestionMarks,
}

impl BcgCategory {
    pub fn from_region(region: Region) -> Self {
        match region {
            Region::I => BcgCategory::Dogs,
            Region::II => BcgCategory::Cows,
            Region::III => BcgCategory::Stars,
            Region::IV => BcgCategory::QuestionMarks,
        }
    }
}

impl std::fmt::Display for BcgCategory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BcgCategory::Dogs => "Dogs",
            BcgCategory::Cows => "Cows",
            BcgCategory::Stars => "Stars",
            BcgCategory::QuestionMarks => "Question Marks",
        })
    }
}

pub fn bcg_classify(relative_share: f64, growth_pct: f64) -> Result<BcgCategory> {
    let a = bcg_scale(relative_share)?;
    Ok(BcgCategory::from_region(StrategyMatrix::bcg().classify(a, growth_pct)))
}

/// Forecast for one axis of the shift advisor.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum AxisForecast {
    NoShiftPredicted,
    Shift {
        expected_exit_index: f64,
        expected_shift_time: f64,
        expected_prior_time: f64,
        /// Level still to accrue before the stochastic threshold is reached.
        remaining_level: f64,
        region_after: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftAdvice {
    pub level_a: f64,
    pub level_b: f64,
    pub current_region: String,
    pub axis_a: AxisForecast,
    pub axis_b: AxisForecast,
}

/// Combines the current classification with the predicted shift moments.
///
/// Levels only increase, so an exceedance on A moves the point to the high-A
/// side of its current row and an exceedance on B moves it to the high-B row.
/// An axis with zero intensity is reported as `NoShiftPredicted`.
pub fn shift_advisor(
    level_a: f64,
    level_b: f64,
    params: &ModelParams,
    thresholds: Thresholds,
    matrix: &StrategyMatrix,
) -> Result<ShiftAdvice> {
    params.validate()?;
    let current = matrix.classify(level_a, level_b);
    let b_high = level_b > matrix.b_threshold();
    let after_a = Region::from_sides(true, b_high);
    // After a B crossing the A comparison moves to the high-B row.
    let after_b = Region::from_sides(level_a > matrix.a_threshold(true), true);

    let (d0, d) = (params.delta0_mean(), params.delta_mean());
    let forecast = |axis, lambda: f64, remaining: f64, region: Region| -> Result<AxisForecast> {
        match (mean_exit_index(axis, lambda, d), mean_shift_time(axis, lambda, d0, d)) {
            (Ok(index), Ok(time)) => Ok(AxisForecast::Shift {
                expected_exit_index: index,
                expected_shift_time: time,
                expected_prior_time: time - d,
                remaining_level: remaining.max(0.0),
                region_after: matrix.label(region).to_string(),
            }),
            (Err(Error::NoExit(_)), _) | (_, Err(Error::NoExit(_))) => Ok(AxisForecast::NoShiftPredicted),
            (Err(e), _) | (_, Err(e)) => Err(e),
        }
    };
    Ok(ShiftAdvice {
        level_a,
        level_b,
        current_region: matrix.label(current).to_string(),
        axis_a: forecast(
            crate::Axis::A,
            params.lambda_a,
            thresholds.m as f64 - level_a,
            after_a,
        )?,
        axis_b: forecast(
            crate::Axis::B,
            params.lambda_b,
            thresholds.n as f64 - level_b,
            after_b,
        )?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::IntervalFamily;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Piecewise definition written out independently of `classify`.
    fn bcg_literal(a: f64, b: f64) -> Option<BcgCategory> {
        let mut hits = vec![];
        if a <= 0.0 && b <= 10.0 {
            hits.push(BcgCategory::Dogs);
        }
        if a > 0.0 && b <= 10.0 {
            hits.push(BcgCategory::Cows);
        }
        if a > 17.6 && b > 10.0 {
            hits.push(BcgCategory::Stars);
        }
        if a <= 17.6 && b > 10.0 {
            hits.push(BcgCategory::QuestionMarks);
        }
        (hits.len() == 1).then(|| hits[0])
    }

    #[test]
    fn uniform_examples_and_boundaries() {
        let m = StrategyMatrix::uniform(0.0, 0.0);
        assert_eq!(m.classify(0.0, 0.0), Region::I);
        let m = StrategyMatrix::uniform(3.0, 5.0);
        assert_eq!(m.classify(3.0, 5.0), Region::I);
        assert_eq!(m.classify(3.1, 5.0), Region::II);
        assert_eq!(m.classify(3.1, 5.1), Region::III);
        assert_eq!(m.classify(3.0, 5.1), Region::IV);
    }

    #[test]
    fn bcg_examples() {
        let m = StrategyMatrix::bcg();
        assert_eq!(m.label(m.classify(5.0, 8.0)), "Cows");
        assert_eq!(m.label(m.classify(10.0, 12.0)), "Question Marks");
        assert_eq!(m.classify(0.0, 10.0), Region::I);
        assert_eq!(m.classify(17.6, 10.5), Region::IV);
        assert_eq!(bcg_classify(0.8, 5.0).unwrap(), BcgCategory::Dogs);
        assert_eq!(bcg_classify(2.0, 15.0).unwrap(), BcgCategory::Stars);
        assert_eq!(bcg_classify(1.2, 12.0).unwrap(), BcgCategory::QuestionMarks);
        assert!(matches!(bcg_classify(0.0, 5.0), Err(Error::Domain(_))));
    }

    #[test]
    fn scale_examples() {
        assert_eq!(bcg_scale(1.0).unwrap(), 0.0);
        assert!((bcg_scale(1.5).unwrap() - 17.6).abs() <= 0.05);
        assert!((bcg_scale(10.0).unwrap() - 100.0).abs() < 1e-12);
        assert!((bcg_scale(0.1).unwrap() + 100.0).abs() < 1e-12);
        assert!(bcg_scale(-1.0).is_err());
        let mut prev = f64::NEG_INFINITY;
        for i in 1..400 {
            let v = bcg_scale(i as f64 * 0.025).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn partition_is_total_and_disjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let uniform = StrategyMatrix::uniform(2.0, -1.0);
        for _ in 0..10_000 {
            let a = rng.random_range(-60.0..60.0);
            let b = rng.random_range(-20.0..40.0);
            let lit = bcg_literal(a, b).expect("exactly one predicate holds");
            assert_eq!(BcgCategory::from_region(StrategyMatrix::bcg().classify(a, b)), lit);
            let sides = [
                a <= 2.0 && b <= -1.0,
                a > 2.0 && b <= -1.0,
                a > 2.0 && b > -1.0,
                a <= 2.0 && b > -1.0,
            ];
            assert_eq!(sides.iter().filter(|s| **s).count(), 1);
            let r = uniform.classify(a, b);
            assert!(sides[Region::ALL.iter().position(|x| *x == r).unwrap()]);
        }
    }

    #[test]
    fn advisor_examples() {
        let bcg = StrategyMatrix::bcg();
        let a = bcg_scale(2.0).unwrap();
        let p = ModelParams::unit_marks(0.5, 1.0, IntervalFamily::Exponential, 1.0, 1.0);
        let r = shift_advisor(a, 5.0, &p, Thresholds::new(40, 10), &bcg).unwrap();
        assert_eq!(r.current_region, "Cows");
        match &r.axis_b {
            AxisForecast::Shift { region_after, .. } => assert_eq!(region_after, "Stars"),
            other => panic!("unexpected {other:?}"),
        }
        match &r.axis_a {
            AxisForecast::Shift {
                expected_shift_time,
                expected_prior_time,
                ..
            } => {
                assert_eq!(*expected_shift_time, 2.0);
                assert_eq!(*expected_prior_time, 1.0);
            }
            other => panic!("unexpected {other:?}"),
        }

        let p = ModelParams::unit_marks(0.0, 0.0, IntervalFamily::Exponential, 1.0, 1.0);
        let r = shift_advisor(0.0, 0.0, &p, Thresholds::new(1, 1), &bcg).unwrap();
        assert_eq!(r.axis_a, AxisForecast::NoShiftPredicted);
        assert_eq!(r.axis_b, AxisForecast::NoShiftPredicted);
    }

    #[test]
    fn low_share_question_mark_stays_question_mark_after_b() {
        // Already on the high-B row: a B exceedance leaves the region unchanged.
        let bcg = StrategyMatrix::bcg();
        let p = ModelParams::unit_marks(1.0, 1.0, IntervalFamily::Exponential, 1.0, 1.0);
        let r = shift_advisor(5.0, 12.0, &p, Thresholds::new(1, 1), &bcg).unwrap();
        assert_eq!(r.current_region, "Question Marks");
        match &r.axis_a {
            AxisForecast::Shift { region_after, .. } => assert_eq!(region_after, "Stars"),
            other => panic!("unexpected {other:?}"),
        }
    }
}

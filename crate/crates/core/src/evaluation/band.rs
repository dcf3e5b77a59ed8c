use std::fmt;

use super::Predictor;
use crate::dataset::{Dataset, EncodingConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandConfig {
    /// Fraction of ratios dropped from each end.
    pub trim_fraction: f64,
    /// Actuals below this are excluded.
    pub floor: f64,
}

impl Default for BandConfig {
    fn default() -> Self {
        BandConfig {
            trim_fraction: 0.05,
            floor: 500.0,
        }
    }
}

/// Trimmed range of predicted/actual ratios over a test set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyBand {
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// Records at or above the floor, before trimming.
    pub n_evaluated: usize,
    pub n_excluded: usize,
    pub trim_fraction: f64,
}

impl AccuracyBand {
    pub fn contains(&self, other: &AccuracyBand) -> bool {
        self.ratio_min <= other.ratio_min && other.ratio_max <= self.ratio_max
    }

    pub fn width(&self) -> f64 {
        self.ratio_max - self.ratio_min
    }
}

/// Renders as whole percentages, e.g. `94%~107%`.
impl fmt::Display for AccuracyBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.0}%~{:.0}%", self.ratio_min * 100.0, self.ratio_max * 100.0)
    }
}

/// Ratios `predicted / actual` for records with `actual ≥ floor`; sorts them,
/// drops `⌊trim·m⌋` from each end and reports the extremes of the rest.
pub fn accuracy_band(
    predictor: &dyn Predictor,
    test: &Dataset,
    config: &EncodingConfig,
    band: &BandConfig,
) -> Result<AccuracyBand> {
    if !(0.0..=0.25).contains(&band.trim_fraction) {
        return Err(Error::validation(format!(
            "trim_fraction must lie in [0, 0.25], got {}",
            band.trim_fraction
        )));
    }
    if !(band.floor > 0.0) {
        return Err(Error::validation(format!("floor must be positive, got {}", band.floor)));
    }
    let mut ratios: Vec<f64> = test
        .records()
        .iter()
        .zip(test.features(config))
        .filter(|(r, _)| r.expenditure >= band.floor)
        .map(|(r, x)| predictor.predict(&x) / r.expenditure)
        .collect();
    let n_evaluated = ratios.len();
    if n_evaluated == 0 {
        return Err(Error::validation("no evaluable records"));
    }
    ratios.sort_by(f64::total_cmp);
    let k = (band.trim_fraction * n_evaluated as f64).floor() as usize;
    let kept = &ratios[k..n_evaluated - k];
    Ok(AccuracyBand {
        ratio_min: kept[0],
        ratio_max: kept[kept.len() - 1],
        n_evaluated,
        n_excluded: test.len() - n_evaluated,
        trim_fraction: band.trim_fraction,
    })
}

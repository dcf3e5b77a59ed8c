use std::thread;

use super::{overfit_scan, Ladder, ModelSpec, OverfitConfig};
use crate::ann::TrainingConfig;
use crate::dataset::{generate_synthetic, GeneratorParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CurveCell {
    pub n: usize,
    pub seed: u64,
    /// `None` when no overfitting was detected.
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveSummary {
    pub n: usize,
    /// Mean over detected thresholds; `None` when none were found.
    pub mean: Option<f64>,
    /// Standard error of that mean; `None` with fewer than two detections.
    pub standard_error: Option<f64>,
    pub found: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearningCurve {
    pub cells: Vec<CurveCell>,
}

impl LearningCurve {
    /// `n,seed,threshold`; missing thresholds are left empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,seed,threshold\n");
        for c in &self.cells {
            let t = c.threshold.map(|t| t.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{t}\n", c.n, c.seed));
        }
        out
    }

    pub fn summary(&self) -> Vec<CurveSummary> {
        let mut sizes: Vec<usize> = self.cells.iter().map(|c| c.n).collect();
        sizes.dedup();
        sizes
            .into_iter()
            .map(|n| {
                let total = self.cells.iter().filter(|c| c.n == n).count();
                let vals: Vec<f64> = self.cells.iter().filter(|c| c.n == n).filter_map(|c| c.threshold).collect();
                let k = vals.len() as f64;
                let mean = (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / k);
                let standard_error = (vals.len() >= 2).then(|| {
                    let m = mean.expect("non-empty");
                    let var = vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (k - 1.0);
                    (var / k).sqrt()
                });
                CurveSummary { n, mean, standard_error, found: vals.len(), total }
            })
            .collect()
    }

    /// Whether each size's mean threshold is at most the previous size's mean
    /// plus the pooled standard error `√(se₁² + se₂²)` of the pair. Sizes with
    /// no detections break the chain and make this false.
    pub fn is_non_increasing_within_se(&self) -> bool {
        let s = self.summary();
        s.windows(2).all(|w| match (w[0].mean, w[1].mean) {
            (Some(a), Some(b)) => {
                let se = w[0].standard_error.unwrap_or(0.0).hypot(w[1].standard_error.unwrap_or(0.0));
                b <= a + se
            }
            _ => false,
        })
    }
}

/// Generates data at every size and seed, runs an overfit scan on each and
/// collects the detected thresholds. Each cell reseeds both the generator and
/// the internal split; ANN cells also reseed the weight initialization.
pub fn learning_curve(
    spec: &ModelSpec,
    ladder: &Ladder,
    params: &GeneratorParams,
    sizes: &[usize],
    seeds: &[u64],
    options: &OverfitConfig,
) -> Result<LearningCurve> {
    if sizes.is_empty() || seeds.is_empty() {
        return Err(Error::validation("learning curve needs at least one size and one seed"));
    }
    if !sizes.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::validation(format!("sizes must be strictly ascending, got {sizes:?}")));
    }
    let grid: Vec<(usize, u64)> = sizes.iter().flat_map(|&n| seeds.iter().map(move |&s| (n, s))).collect();
    let run = |&(n, seed): &(usize, u64)| -> Result<CurveCell> {
        let data = generate_synthetic(&GeneratorParams { n, seed, ..params.clone() })?;
        let spec = match spec {
            ModelSpec::Ann { topology, training } => ModelSpec::Ann {
                topology: topology.clone(),
                training: TrainingConfig { seed, ..training.clone() },
            },
            other => other.clone(),
        };
        let opts = OverfitConfig { seed, ..options.clone() };
        let report = overfit_scan(&spec, ladder, &data, &params.encoding, &opts)?;
        Ok(CurveCell { n, seed, threshold: report.threshold })
    };
    let cells: Vec<Result<CurveCell>> = thread::scope(|scope| {
        let handles: Vec<_> = grid.iter().map(|cell| scope.spawn(move || run(cell))).collect();
        handles.into_iter().map(|h| h.join().expect("curve worker panicked")).collect()
    });
    Ok(LearningCurve { cells: cells.into_iter().collect::<Result<_>>()? })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(rows: &[(usize, Option<f64>)]) -> LearningCurve {
        LearningCurve {
            cells: rows.iter().enumerate().map(|(k, &(n, t))| CurveCell { n, seed: k as u64, threshold: t }).collect(),
        }
    }

    #[test]
    fn csv_leaves_missing_cells_empty() {
        let c = curve(&[(100, Some(0.25)), (100, None)]);
        assert_eq!(c.to_csv(), "n,seed,threshold\n100,0,0.25\n100,1,\n");
    }

    #[test]
    fn summary_and_trend() {
        let c = curve(&[(100, Some(0.3)), (100, Some(0.2)), (200, Some(0.26)), (200, Some(0.26))]);
        let s = c.summary();
        assert_eq!(s.len(), 2);
        assert!((s[0].mean.unwrap() - 0.25).abs() < 1e-12);
        assert!((s[0].standard_error.unwrap() - 0.05).abs() < 1e-12);
        assert!(c.is_non_increasing_within_se());
        let rising = curve(&[(100, Some(0.2)), (100, Some(0.2)), (200, Some(0.3)), (200, Some(0.3))]);
        assert!(!rising.is_non_increasing_within_se());
    }
}

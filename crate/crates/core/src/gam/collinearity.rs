use crate::dataset::{Dataset, EncodingConfig, FeatureVector, FEATURE_COUNT, FEATURE_NAMES};
use crate::error::{Error, Result};
use crate::linalg::{solve_spd, Mat};

/// Pairwise correlation and variance inflation over the encoded features.
#[derive(Debug, Clone, PartialEq)]
pub struct CollinearityReport {
    pub correlation: [[f64; FEATURE_COUNT]; FEATURE_COUNT],
    /// `(i, j, corr)` with `i < j` and `|corr| ≥ threshold`.
    pub flagged: Vec<(usize, usize, f64)>,
    pub vif: [f64; FEATURE_COUNT],
    /// Zero-variance features; their correlations are reported as 0.
    pub degenerate: [bool; FEATURE_COUNT],
    pub threshold: f64,
}

impl CollinearityReport {
    pub fn is_flagged(&self, i: usize, j: usize) -> bool {
        let (a, b) = (i.min(j), i.max(j));
        self.flagged.iter().any(|&(x, y, _)| (x, y) == (a, b))
    }

    /// One row per feature: VIF, degenerate flag, then its correlation row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature,vif,degenerate");
        for name in FEATURE_NAMES {
            out.push_str(&format!(",corr_{name}"));
        }
        out.push('\n');
        for j in 0..FEATURE_COUNT {
            out.push_str(&format!("{},{},{}", FEATURE_NAMES[j], self.vif[j], self.degenerate[j]));
            for k in 0..FEATURE_COUNT {
                out.push_str(&format!(",{}", self.correlation[j][k]));
            }
            out.push('\n');
        }
        out
    }
}

pub fn collinearity_report(
    train: &Dataset,
    config: &EncodingConfig,
    threshold: f64,
) -> Result<CollinearityReport> {
    if train.len() < 3 {
        return Err(Error::validation(format!(
            "collinearity report needs at least 3 records, got {}",
            train.len()
        )));
    }
    Ok(report_features(&train.features(config), threshold))
}

pub(crate) fn report_features(features: &[FeatureVector], threshold: f64) -> CollinearityReport {
    let n = features.len() as f64;
    let cols: Vec<Vec<f64>> = (0..FEATURE_COUNT)
        .map(|j| features.iter().map(|f| f[j]).collect())
        .collect();
    let means: Vec<f64> = cols.iter().map(|c| c.iter().sum::<f64>() / n).collect();
    let centered: Vec<Vec<f64>> = cols
        .iter()
        .zip(&means)
        .map(|(c, m)| c.iter().map(|v| v - m).collect())
        .collect();
    let ss: Vec<f64> = centered.iter().map(|c| c.iter().map(|v| v * v).sum()).collect();
    let mut degenerate = [false; FEATURE_COUNT];
    for j in 0..FEATURE_COUNT {
        degenerate[j] = ss[j] <= 1e-14 * n;
    }

    let mut correlation = [[0.0; FEATURE_COUNT]; FEATURE_COUNT];
    for i in 0..FEATURE_COUNT {
        correlation[i][i] = 1.0;
        for j in i + 1..FEATURE_COUNT {
            let r = if degenerate[i] || degenerate[j] {
                0.0
            } else {
                let cov: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
                (cov / (ss[i] * ss[j]).sqrt()).clamp(-1.0, 1.0)
            };
            correlation[i][j] = r;
            correlation[j][i] = r;
        }
    }
    let mut flagged = Vec::new();
    for i in 0..FEATURE_COUNT {
        for j in i + 1..FEATURE_COUNT {
            if correlation[i][j].abs() >= threshold && !(degenerate[i] || degenerate[j]) {
                flagged.push((i, j, correlation[i][j]));
            }
        }
    }

    let mut vif = [1.0; FEATURE_COUNT];
    for j in 0..FEATURE_COUNT {
        if degenerate[j] {
            continue;
        }
        let others: Vec<usize> = (0..FEATURE_COUNT).filter(|&k| k != j && !degenerate[k]).collect();
        if others.is_empty() {
            continue;
        }
        // centered regressors absorb the intercept
        let rows: Vec<Vec<f64>> = (0..features.len())
            .map(|i| others.iter().map(|&k| centered[k][i]).collect())
            .collect();
        let x = Mat::from_rows(&rows);
        let (mut gram, rhs) = x.weighted_normal_equations(&centered[j], None);
        let beta = match solve_spd(&gram, &rhs) {
            Ok(b) => b,
            Err(_) => {
                let scale = (0..gram.cols).map(|a| gram.get(a, a)).fold(0.0, f64::max);
                for a in 0..gram.cols {
                    gram.add_to(a, a, 1e-12 * scale);
                }
                solve_spd(&gram, &rhs).unwrap_or_else(|_| vec![0.0; gram.cols])
            }
        };
        let sse: f64 = (0..features.len())
            .map(|i| (centered[j][i] - crate::linalg::dot(x.row(i), &beta)).powi(2))
            .sum();
        let r2 = 1.0 - sse / ss[j];
        vif[j] = if sse <= 1e-12 * ss[j] {
            f64::INFINITY
        } else {
            (1.0 / (1.0 - r2)).max(1.0)
        };
    }

    CollinearityReport {
        correlation,
        flagged,
        vif,
        degenerate,
        threshold,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, GeneratorParams, Provenance, CLAIM_SEVERITY, SMOKER};

    #[test]
    fn matrix_symmetric_with_unit_diagonal() {
        let p = GeneratorParams { n: 100, ..Default::default() };
        let ds = generate_synthetic(&p).unwrap();
        let rep = collinearity_report(&ds, &p.encoding, 0.5).unwrap();
        for i in 0..FEATURE_COUNT {
            assert_eq!(rep.correlation[i][i], 1.0);
            for j in 0..FEATURE_COUNT {
                assert_eq!(rep.correlation[i][j], rep.correlation[j][i]);
            }
        }
        assert!(rep.vif.iter().all(|v| *v >= 1.0));
    }

    #[test]
    fn constant_feature_is_flagged_degenerate() {
        let p = GeneratorParams { n: 50, ..Default::default() };
        let ds = generate_synthetic(&p).unwrap();
        let recs: Vec<_> = ds
            .records()
            .iter()
            .cloned()
            .map(|mut r| {
                r.gender = crate::dataset::Gender::Female;
                r
            })
            .collect();
        let ds = Dataset::new(recs, Provenance::Loaded).unwrap();
        let rep = collinearity_report(&ds, &p.encoding, 0.5).unwrap();
        assert!(rep.degenerate[crate::dataset::GENDER]);
        assert!(rep.correlation[crate::dataset::GENDER][1..].iter().all(|c| *c == 0.0));
        assert!(rep.vif.iter().all(|v| *v >= 1.0));
    }

    #[test]
    fn strict_threshold_flags_nothing() {
        let p = GeneratorParams { n: 200, ..Default::default() };
        let ds = generate_synthetic(&p).unwrap();
        let rep = collinearity_report(&ds, &p.encoding, 1.0).unwrap();
        assert!(rep.flagged.is_empty());
    }

    #[test]
    fn correlated_pair_flagged() {
        let p = GeneratorParams { n: 500, collinearity_rho: 0.8, ..Default::default() };
        let ds = generate_synthetic(&p).unwrap();
        let rep = collinearity_report(&ds, &p.encoding, 0.5).unwrap();
        assert!(rep.is_flagged(SMOKER, CLAIM_SEVERITY));
        assert!(rep.vif[CLAIM_SEVERITY] > rep.vif[crate::dataset::AGE]);
        let csv = rep.to_csv();
        assert_eq!(csv.lines().count(), 7);
    }

    #[test]
    fn too_few_records() {
        let ds = Dataset::new(crate::dataset::table1_records()[..2].to_vec(), Provenance::Loaded).unwrap();
        assert!(collinearity_report(&ds, &EncodingConfig::default(), 0.5).is_err());
    }
}

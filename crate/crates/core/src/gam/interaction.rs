use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{add_interaction_features, check_train, predict_gam, GamModel};
use crate::dataset::{Dataset, EncodingConfig, FeatureVector, FEATURE_COUNT};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    /// Minimum relative RSS reduction for a pair to count.
    pub threshold: f64,
    pub permutations: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            threshold: 0.01,
            permutations: 199,
            alpha: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InteractionCandidate {
    pub i: usize,
    pub j: usize,
    /// Relative training-RSS reduction from adding the pair; `None` when the
    /// refit failed.
    pub score: Option<f64>,
    pub p_value: Option<f64>,
    pub significant: bool,
}

/// Every unordered feature pair, in lexicographic order.
pub fn all_pairs() -> Vec<(usize, usize)> {
    (0..FEATURE_COUNT)
        .flat_map(|i| (i + 1..FEATURE_COUNT).map(move |j| (i, j)))
        .collect()
}

/// Squared projection of `r` on the centered column `p`.
fn projection_stat(r: &[f64], p: &[f64]) -> f64 {
    let n = p.len() as f64;
    let mp = p.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (ri, pi) in r.iter().zip(p) {
        let c = pi - mp;
        num += ri * c;
        den += c * c;
    }
    if den <= 0.0 {
        0.0
    } else {
        num * num / den
    }
}

/// Permutation p-value for the association between base-model residuals and
/// the interaction column `fᵢ·fⱼ`.
fn permutation_p(r: &[f64], p: &[f64], permutations: usize, seed: u64) -> f64 {
    let observed = projection_stat(r, p);
    if observed == 0.0 {
        return 1.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shuffled = p.to_vec();
    let mut exceed = 0usize;
    for _ in 0..permutations {
        shuffled.shuffle(&mut rng);
        if projection_stat(r, &shuffled) >= observed {
            exceed += 1;
        }
    }
    (1 + exceed) as f64 / (1 + permutations) as f64
}

/// Examines all m(m−1)/2 feature pairs by refitting `base` with each single
/// interaction added. A pair is significant when its relative RSS reduction
/// exceeds `scan.threshold` and its permutation p-value is below `scan.alpha`.
/// Results are sorted by score, best first; failed refits sort last.
pub fn interaction_scan(
    train: &Dataset,
    config: &EncodingConfig,
    base: &GamModel,
    scan: &ScanConfig,
) -> Result<Vec<InteractionCandidate>> {
    check_train(train)?;
    let features = train.features(config);
    let y = train.targets();
    Ok(scan_features(&features, &y, base, scan))
}

pub(crate) fn scan_features(
    features: &[FeatureVector],
    y: &[f64],
    base: &GamModel,
    scan: &ScanConfig,
) -> Vec<InteractionCandidate> {
    let base_rss: f64 = features
        .iter()
        .zip(y)
        .map(|(f, yi)| (yi - predict_gam(base, f)).powi(2))
        .sum();
    let residuals: Vec<f64> = features
        .iter()
        .zip(y)
        .map(|(f, yi)| yi - predict_gam(base, f))
        .collect();

    let mut out: Vec<InteractionCandidate> = all_pairs()
        .into_iter()
        .enumerate()
        .map(|(k, (i, j))| {
            if base.has_interaction(i, j) {
                return InteractionCandidate { i, j, score: None, p_value: None, significant: false };
            }
            let score = add_interaction_features(base, i, j, features, y)
                .ok()
                .map(|m| {
                    if base_rss > 0.0 {
                        (base_rss - m.diagnostics.rss) / base_rss
                    } else {
                        0.0
                    }
                });
            let column: Vec<f64> = features
                .iter()
                .map(|f| base.components[i].eval(f[i]) * base.components[j].eval(f[j]))
                .collect();
            let p_value = score.map(|_| {
                permutation_p(&residuals, &column, scan.permutations, scan.seed.wrapping_add(k as u64))
            });
            let significant = matches!((score, p_value), (Some(s), Some(p)) if s > scan.threshold && p < scan.alpha);
            InteractionCandidate { i, j, score, p_value, significant }
        })
        .collect();
    out.sort_by(|a, b| match (a.score, b.score) {
        (Some(x), Some(y)) => y.total_cmp(&x),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifteen_pairs_each_once() {
        let pairs = all_pairs();
        assert_eq!(pairs.len(), FEATURE_COUNT * (FEATURE_COUNT - 1) / 2);
        assert_eq!(pairs.len(), 15);
        let set: std::collections::HashSet<_> = pairs.iter().collect();
        assert_eq!(set.len(), 15);
        assert!(pairs.iter().all(|(i, j)| i < j));
    }

    #[test]
    fn permutation_p_is_small_for_strong_signal() {
        let p: Vec<f64> = (0..100).map(|i| (i % 7) as f64).collect();
        let r: Vec<f64> = p.iter().map(|v| 2.0 * v - 6.0).collect();
        assert!(permutation_p(&r, &p, 199, 1) <= 0.01);
        let flat = vec![1.0; 100];
        assert_eq!(permutation_p(&r, &flat, 199, 1), 1.0);
    }
}

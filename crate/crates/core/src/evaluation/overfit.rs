use super::{relative_rmse, Family, ModelSpec, Predictor};
use crate::ann::{init_weights, Trainer};
use crate::dataset::{split_fraction, Dataset, EncodingConfig, FeatureVector};
use crate::error::{Error, Result};
use crate::gam::{fit_gam, SmoothConfig};
use crate::glm::fit_glm;

/// A capacity or effort ladder, one fit per rung.
#[derive(Debug, Clone, PartialEq)]
pub enum Ladder {
    /// One fit, no ladder (GLM).
    Single,
    /// Smoothing penalties, strictly decreasing (GAM).
    Lambdas(Vec<f64>),
    /// Epoch checkpoints, strictly increasing (ANN).
    Epochs(Vec<usize>),
}

impl Ladder {
    /// Checkpoints 500, 1000, …, 20000. Plain gradient descent on a few hundred
    /// records rarely turns over much earlier than that.
    pub fn default_epochs() -> Self {
        Ladder::Epochs((1..=40).map(|k| k * 500).collect())
    }

    /// Three penalties per decade from 10 down to 1e-8.
    pub fn default_lambdas() -> Self {
        Ladder::Lambdas((0..=27).map(|k| 10f64.powf(1.0 - k as f64 / 3.0)).collect())
    }

    pub fn default_for(family: Family) -> Self {
        match family {
            Family::Glm => Ladder::Single,
            Family::Gam => Ladder::default_lambdas(),
            Family::Ann => Ladder::default_epochs(),
        }
    }

    fn validate(&self, family: Family) -> Result<()> {
        let ok = match (self, family) {
            (Ladder::Single, Family::Glm) => true,
            (Ladder::Lambdas(l), Family::Gam) => {
                !l.is_empty() && l.iter().all(|v| *v >= 0.0) && l.windows(2).all(|w| w[1] < w[0])
            }
            (Ladder::Epochs(e), Family::Ann) => {
                !e.is_empty() && e[0] > 0 && e.windows(2).all(|w| w[1] > w[0])
            }
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::validation(format!(
                "{self:?} is not a monotone ladder for the {family} family"
            )))
        }
    }

    fn label(&self, step: usize) -> String {
        match self {
            Ladder::Single => "fit".into(),
            Ladder::Lambdas(l) => format!("lambda={:e}", l[step]),
            Ladder::Epochs(e) => format!("epoch={}", e[step]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverfitConfig {
    pub validation_fraction: f64,
    /// Consecutive validation rises that mark overfitting.
    pub patience: usize,
    pub seed: u64,
}

impl Default for OverfitConfig {
    fn default() -> Self {
        OverfitConfig {
            validation_fraction: 0.2,
            patience: 3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverfitStep {
    pub label: String,
    /// Relative RMSE on the fitting part.
    pub train_error: f64,
    /// Relative RMSE on the validation part.
    pub val_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverfitReport {
    pub family: Family,
    pub steps: Vec<OverfitStep>,
    /// Training error at the last step before the upturn.
    pub threshold: Option<f64>,
    pub threshold_step: Option<usize>,
}

impl OverfitReport {
    pub fn threshold_found(&self) -> bool {
        self.threshold.is_some()
    }

    /// `step,train_error,val_error`, one row per rung.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,train_error,val_error\n");
        for s in &self.steps {
            out.push_str(&format!("{},{},{}\n", s.label, s.train_error, s.val_error));
        }
        out
    }
}

/// First step `s` after which validation error rises for `patience`
/// consecutive steps while training error keeps falling.
fn detect(steps: &[OverfitStep], patience: usize) -> Option<usize> {
    (0..steps.len()).find(|&s| {
        s + patience < steps.len()
            && (1..=patience).all(|k| {
                let (prev, cur) = (&steps[s + k - 1], &steps[s + k]);
                cur.val_error > prev.val_error && cur.train_error < prev.train_error
            })
    })
}

fn errors(
    model: &dyn Predictor,
    fit: (&[FeatureVector], &[f64]),
    val: (&[FeatureVector], &[f64]),
) -> (f64, f64) {
    let predict = |xs: &[FeatureVector]| xs.iter().map(|x| model.predict(x)).collect::<Vec<_>>();
    (
        relative_rmse(&predict(fit.0), fit.1),
        relative_rmse(&predict(val.0), val.1),
    )
}

/// Fits `spec` at every rung of `ladder` on an internal split of `train` and
/// looks for the point where held-out error turns up.
pub fn overfit_scan(
    spec: &ModelSpec,
    ladder: &Ladder,
    train: &Dataset,
    config: &EncodingConfig,
    options: &OverfitConfig,
) -> Result<OverfitReport> {
    ladder.validate(spec.family())?;
    if !(options.validation_fraction > 0.0 && options.validation_fraction < 1.0) {
        return Err(Error::validation("validation_fraction must lie in (0, 1)"));
    }
    if options.patience == 0 {
        return Err(Error::validation("patience must be at least 1"));
    }
    let n = train.len();
    let n_val = (n as f64 * options.validation_fraction).round() as usize;
    if n_val == 0 || n_val >= n {
        return Err(Error::validation(format!(
            "cannot carve a validation part from {n} records"
        )));
    }
    let (fit, val) = split_fraction(train, n - n_val, options.seed)?;
    let (fit_x, fit_y) = (fit.features(config), fit.targets());
    let (val_x, val_y) = (val.features(config), val.targets());
    let fit_part = (fit_x.as_slice(), fit_y.as_slice());
    let val_part = (val_x.as_slice(), val_y.as_slice());

    let mut pairs = Vec::new();
    match (spec, ladder) {
        (ModelSpec::Glm { link }, Ladder::Single) => {
            let m = fit_glm(&fit, config, *link)?;
            pairs.push(errors(&m, fit_part, val_part));
        }
        (ModelSpec::Gam { link, smooth }, Ladder::Lambdas(lambdas)) => {
            for &lambda in lambdas {
                let s = SmoothConfig { lambda, ..smooth.clone() };
                let m = fit_gam(&fit, config, *link, &s)?;
                pairs.push(errors(&m, fit_part, val_part));
            }
        }
        (ModelSpec::Ann { topology, training }, Ladder::Epochs(epochs)) => {
            let weights = init_weights(topology, training.seed)?;
            let mut trainer = Trainer::new(weights, fit_x.clone(), &fit_y, training.learning_rate);
            for &target in epochs {
                while trainer.epoch() < target {
                    let loss = trainer.step();
                    if !loss.is_finite() {
                        return Err(Error::Numeric { epoch: trainer.epoch() });
                    }
                }
                let predict = |x: &FeatureVector| trainer.predict(x);
                pairs.push(errors(&predict, fit_part, val_part));
            }
        }
        _ => unreachable!("ladder checked against family"),
    }

    let steps: Vec<OverfitStep> = pairs
        .into_iter()
        .enumerate()
        .map(|(k, (train_error, val_error))| OverfitStep {
            label: ladder.label(k),
            train_error,
            val_error,
        })
        .collect();
    let threshold_step = detect(&steps, options.patience);
    Ok(OverfitReport {
        family: spec.family(),
        threshold: threshold_step.map(|s| steps[s].train_error),
        threshold_step,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn steps(pairs: &[(f64, f64)]) -> Vec<OverfitStep> {
        pairs
            .iter()
            .map(|&(t, v)| OverfitStep { label: String::new(), train_error: t, val_error: v })
            .collect()
    }

    #[test]
    fn detects_first_sustained_upturn() {
        let s = steps(&[(0.5, 0.5), (0.4, 0.45), (0.3, 0.46), (0.25, 0.44), (0.2, 0.45), (0.15, 0.46), (0.1, 0.5)]);
        assert_eq!(detect(&s, 3), Some(3));
        assert_eq!(detect(&s, 1), Some(1));
        assert_eq!(detect(&s, 4), None);
    }

    #[test]
    fn rise_without_falling_training_error_is_not_overfitting() {
        let s = steps(&[(0.3, 0.3), (0.3, 0.31), (0.3, 0.32), (0.3, 0.33)]);
        assert_eq!(detect(&s, 3), None);
    }

    #[test]
    fn ladder_must_match_family() {
        assert!(Ladder::Single.validate(Family::Glm).is_ok());
        assert!(Ladder::Single.validate(Family::Ann).is_err());
        assert!(Ladder::Epochs(vec![200, 100]).validate(Family::Ann).is_err());
        assert!(Ladder::Lambdas(vec![1e-3, 1e-2]).validate(Family::Gam).is_err());
        assert!(Ladder::default_lambdas().validate(Family::Gam).is_ok());
        assert!(Ladder::default_epochs().validate(Family::Ann).is_ok());
    }
}

//! Held-out accuracy bands, overfitting thresholds, sample-size curves and the
//! side-by-side comparison of fitted models.

use std::fmt;
use std::str::FromStr;

use crate::ann::{self, predict_ann, AnnModel, NetworkTopology, TrainingConfig};
use crate::dataset::{Dataset, EncodingConfig, FeatureVector};
use crate::error::{Error, Result};
use crate::gam::{self, predict_gam, GamModel, SmoothConfig};
use crate::glm::{self, predict_glm, GlmModel, LinkKind};

mod band;
mod compare;
mod curve;
mod overfit;

pub use band::{accuracy_band, AccuracyBand, BandConfig};
pub use compare::{compare, CompareOptions, ComparisonReport, ModelSummary};
pub use curve::{learning_curve, CurveCell, CurveSummary, LearningCurve};
pub use overfit::{overfit_scan, Ladder, OverfitConfig, OverfitReport, OverfitStep};

pub trait Predictor {
    fn predict(&self, x: &FeatureVector) -> f64;
}

impl<F: Fn(&FeatureVector) -> f64> Predictor for F {
    fn predict(&self, x: &FeatureVector) -> f64 {
        self(x)
    }
}

impl Predictor for GlmModel {
    fn predict(&self, x: &FeatureVector) -> f64 {
        predict_glm(self, x)
    }
}

impl Predictor for GamModel {
    fn predict(&self, x: &FeatureVector) -> f64 {
        predict_gam(self, x)
    }
}

impl Predictor for AnnModel {
    fn predict(&self, x: &FeatureVector) -> f64 {
        predict_ann(self, x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Glm,
    Gam,
    Ann,
}

impl Family {
    pub fn key(self) -> &'static str {
        match self {
            Family::Glm => "glm",
            Family::Gam => "gam",
            Family::Ann => "ann",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Glm => "GLM",
            Family::Gam => "GAM",
            Family::Ann => "ANN",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "glm" => Ok(Family::Glm),
            "gam" => Ok(Family::Gam),
            "ann" => Ok(Family::Ann),
            other => Err(Error::validation(format!(
                "unknown model family `{other}` (expected glm, gam or ann)"
            ))),
        }
    }
}

/// How to fit one family: everything except the data.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Glm { link: LinkKind },
    Gam { link: LinkKind, smooth: SmoothConfig },
    Ann { topology: NetworkTopology, training: TrainingConfig },
}

impl ModelSpec {
    pub fn default_for(family: Family) -> Self {
        match family {
            Family::Glm => ModelSpec::Glm { link: LinkKind::Identity },
            Family::Gam => ModelSpec::Gam {
                link: LinkKind::Identity,
                smooth: SmoothConfig::default(),
            },
            Family::Ann => ModelSpec::Ann {
                topology: NetworkTopology::default(),
                training: TrainingConfig::default(),
            },
        }
    }

    pub fn family(&self) -> Family {
        match self {
            ModelSpec::Glm { .. } => Family::Glm,
            ModelSpec::Gam { .. } => Family::Gam,
            ModelSpec::Ann { .. } => Family::Ann,
        }
    }

    pub fn fit(&self, train: &Dataset, config: &EncodingConfig) -> Result<FittedModel> {
        Ok(match self {
            ModelSpec::Glm { link } => FittedModel::Glm(glm::fit_glm(train, config, *link)?),
            ModelSpec::Gam { link, smooth } => {
                FittedModel::Gam(gam::fit_gam(train, config, *link, smooth)?)
            }
            ModelSpec::Ann { topology, training } => {
                FittedModel::Ann(ann::train(train, config, topology, training)?)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FittedModel {
    Glm(GlmModel),
    Gam(GamModel),
    Ann(AnnModel),
}

impl FittedModel {
    pub fn family(&self) -> Family {
        match self {
            FittedModel::Glm(_) => Family::Glm,
            FittedModel::Gam(_) => Family::Gam,
            FittedModel::Ann(_) => Family::Ann,
        }
    }

    /// The settings this model was fit with.
    pub fn spec(&self) -> ModelSpec {
        match self {
            FittedModel::Glm(m) => ModelSpec::Glm { link: m.link },
            FittedModel::Gam(m) => ModelSpec::Gam {
                link: m.link,
                smooth: m.smooth.clone(),
            },
            FittedModel::Ann(m) => ModelSpec::Ann {
                topology: m.topology.clone(),
                training: m.training.clone(),
            },
        }
    }
}

impl Predictor for FittedModel {
    fn predict(&self, x: &FeatureVector) -> f64 {
        match self {
            FittedModel::Glm(m) => predict_glm(m, x),
            FittedModel::Gam(m) => predict_gam(m, x),
            FittedModel::Ann(m) => predict_ann(m, x),
        }
    }
}

/// RMSE divided by the mean actual.
pub fn relative_rmse(predictions: &[f64], actuals: &[f64]) -> f64 {
    let n = actuals.len() as f64;
    let se: f64 = predictions.iter().zip(actuals).map(|(p, a)| (p - a).powi(2)).sum();
    let mean = actuals.iter().sum::<f64>() / n;
    (se / n).sqrt() / mean
}

/// Predictions for every record of `data`, in record order.
pub fn predict_dataset(predictor: &dyn Predictor, data: &Dataset, config: &EncodingConfig) -> Vec<f64> {
    data.features(config).iter().map(|x| predictor.predict(x)).collect()
}

//! Generalized linear model: `g(E[y]) = β₀ + Σ βⱼ xⱼ` over the six encoded
//! features.
//!
//! The identity link is solved directly from the normal equations. The log
//! link uses iteratively reweighted least squares with constant-variance
//! working weights `w = μ²`, working response `z = η + (y − μ)/μ`.

use std::fmt;
use std::str::FromStr;

use crate::dataset::{Dataset, EncodingConfig, FeatureVector, FEATURE_COUNT, FEATURE_NAMES};
use crate::error::{Error, Result};
use crate::linalg::{dependent_columns, dot, solve_spd, Mat};

pub const PARAM_COUNT: usize = FEATURE_COUNT + 1;
pub const RIDGE_EPSILON: f64 = 1e-8;
pub const IRLS_TOLERANCE: f64 = 1e-8;
pub const IRLS_MAX_ITER: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LinkKind {
    #[default]
    Identity,
    Log,
}

impl LinkKind {
    pub fn link(self, mu: f64) -> f64 {
        match self {
            LinkKind::Identity => mu,
            LinkKind::Log => mu.ln(),
        }
    }

    pub fn inverse(self, eta: f64) -> f64 {
        match self {
            LinkKind::Identity => eta,
            LinkKind::Log => eta.exp(),
        }
    }
}

impl fmt::Display for LinkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LinkKind::Identity => "identity",
            LinkKind::Log => "log",
        })
    }
}

impl FromStr for LinkKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "identity" => Ok(LinkKind::Identity),
            "log" => Ok(LinkKind::Log),
            other => Err(format!("unknown link `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GlmOptions {
    /// Add [`RIDGE_EPSILON`] to the diagonal instead of failing when the
    /// normal equations are singular.
    pub ridge_fallback: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlmDiagnostics {
    /// Residual sum of squares on the response scale.
    pub rss: f64,
    pub iterations: usize,
    pub ridge_used: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlmModel {
    pub intercept: f64,
    pub coefficients: [f64; FEATURE_COUNT],
    pub link: LinkKind,
    pub diagnostics: GlmDiagnostics,
}

impl GlmModel {
    /// A model with the given parameters and empty diagnostics.
    pub fn new(intercept: f64, coefficients: [f64; FEATURE_COUNT], link: LinkKind) -> Self {
        GlmModel {
            intercept,
            coefficients,
            link,
            diagnostics: GlmDiagnostics {
                rss: 0.0,
                iterations: 0,
                ridge_used: false,
            },
        }
    }

    pub fn linear_predictor(&self, x: &FeatureVector) -> f64 {
        self.intercept + dot(&self.coefficients, &x.0)
    }

    /// `[β₀, β₁, …, β₆]`
    pub fn params(&self) -> [f64; PARAM_COUNT] {
        let mut p = [0.0; PARAM_COUNT];
        p[0] = self.intercept;
        p[1..].copy_from_slice(&self.coefficients);
        p
    }
}

pub fn predict_glm(model: &GlmModel, x: &FeatureVector) -> f64 {
    model.link.inverse(model.linear_predictor(x))
}

/// Design matrix with a leading intercept column.
pub fn design_matrix(features: &[FeatureVector]) -> Mat {
    let rows: Vec<Vec<f64>> = features
        .iter()
        .map(|f| std::iter::once(1.0).chain(f.0).collect())
        .collect();
    Mat::from_rows(&rows)
}

fn column_names(idx: &[usize]) -> Vec<String> {
    idx.iter()
        .map(|&j| {
            if j == 0 {
                "intercept".to_string()
            } else {
                FEATURE_NAMES[j - 1].to_string()
            }
        })
        .collect()
}

fn solve_normal(
    x: &Mat,
    y: &[f64],
    w: Option<&[f64]>,
    options: &GlmOptions,
    ridge_used: &mut bool,
) -> Result<Vec<f64>> {
    let (mut gram, rhs) = x.weighted_normal_equations(y, w);
    match solve_spd(&gram, &rhs) {
        Ok(beta) => Ok(beta),
        Err(_) if options.ridge_fallback => {
            for j in 0..gram.cols {
                gram.add_to(j, j, RIDGE_EPSILON);
            }
            *ridge_used = true;
            solve_spd(&gram, &rhs).map_err(|_| Error::Singular {
                columns: column_names(&dependent_columns(x, 1e-9)),
            })
        }
        Err(_) => {
            let mut dep = dependent_columns(x, 1e-9);
            if dep.is_empty() {
                dep = (0..x.cols).collect();
            }
            Err(Error::Singular {
                columns: column_names(&dep),
            })
        }
    }
}

pub fn fit_glm(train: &Dataset, config: &EncodingConfig, link: LinkKind) -> Result<GlmModel> {
    fit_glm_with(train, config, link, &GlmOptions::default())
}

pub fn fit_glm_with(
    train: &Dataset,
    config: &EncodingConfig,
    link: LinkKind,
    options: &GlmOptions,
) -> Result<GlmModel> {
    fit_glm_features(&train.features(config), &train.targets(), link, options)
}

pub(crate) fn fit_glm_features(
    features: &[FeatureVector],
    y: &[f64],
    link: LinkKind,
    options: &GlmOptions,
) -> Result<GlmModel> {
    let n = features.len();
    let x = design_matrix(features);
    if n <= PARAM_COUNT && !options.ridge_fallback {
        let mut dep = dependent_columns(&x, 1e-9);
        if dep.is_empty() {
            dep = (n..PARAM_COUNT).collect();
        }
        return Err(Error::Singular {
            columns: column_names(&dep),
        });
    }
    let mut ridge_used = false;

    let (beta, iterations) = match link {
        LinkKind::Identity => (solve_normal(&x, y, None, options, &mut ridge_used)?, 1),
        LinkKind::Log => {
            let mean_y = y.iter().sum::<f64>() / n as f64;
            if !(mean_y > 0.0) {
                return Err(Error::validation("log link needs a positive mean response"));
            }
            let mut beta = vec![0.0; PARAM_COUNT];
            beta[0] = mean_y.ln();
            let mut converged = None;
            for iter in 1..=IRLS_MAX_ITER {
                let eta = x.mul_vec(&beta);
                let mu: Vec<f64> = eta.iter().map(|e| e.exp()).collect();
                if mu.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
                    return Err(Error::Convergence {
                        iterations: iter,
                        detail: "fitted mean left (0, ∞) under the log link".into(),
                        trajectory: beta,
                    });
                }
                let z: Vec<f64> = (0..n).map(|i| eta[i] + (y[i] - mu[i]) / mu[i]).collect();
                let w: Vec<f64> = mu.iter().map(|m| m * m).collect();
                let next = solve_normal(&x, &z, Some(&w), options, &mut ridge_used)?;
                let change = next
                    .iter()
                    .zip(&beta)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                let size = next.iter().map(|b| b.abs()).fold(1.0, f64::max);
                beta = next;
                if change / size < IRLS_TOLERANCE {
                    converged = Some(iter);
                    break;
                }
            }
            match converged {
                Some(it) => (beta, it),
                None => {
                    return Err(Error::Convergence {
                        iterations: IRLS_MAX_ITER,
                        detail: "IRLS coefficient change stayed above tolerance".into(),
                        trajectory: beta,
                    })
                }
            }
        }
    };

    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::Singular {
            columns: column_names(&dependent_columns(&x, 1e-9)),
        });
    }
    let mut coefficients = [0.0; FEATURE_COUNT];
    coefficients.copy_from_slice(&beta[1..]);
    let mut model = GlmModel::new(beta[0], coefficients, link);
    let rss = features
        .iter()
        .zip(y)
        .map(|(f, yi)| (yi - predict_glm(&model, f)).powi(2))
        .sum();
    model.diagnostics = GlmDiagnostics {
        rss,
        iterations,
        ridge_used,
    };
    Ok(model)
}

//! Generalized additive model `g(E[y]) = β₀ + Σ fⱼ(xⱼ) + Σ γ·fᵢ(xᵢ)·fⱼ(xⱼ)`.
//!
//! Continuous features get penalized natural cubic splines with knots at
//! quantiles of the training values; binary features (and any feature with
//! fewer distinct values than knots) get a single centered linear term.
//! Components are fit by backfitting (see [`backfit`]) and every component has
//! mean zero over the training sample, so `β₀` carries the overall level.

mod backfit;
mod collinearity;
mod interaction;
pub mod spline;

use crate::dataset::{Dataset, EncodingConfig, FeatureVector, FEATURE_COUNT, FEATURE_NAMES};
use crate::error::{Error, Result};
use crate::glm::LinkKind;

use backfit::{Kind, Problem, State};
use spline::{quantile_knots, KnotGeometry};

pub use collinearity::{collinearity_report, CollinearityReport};
pub use interaction::{interaction_scan, InteractionCandidate, ScanConfig};

/// Features that are {0,1} by construction of the encoding.
pub const BINARY_FEATURES: [usize; 3] = [
    crate::dataset::GENDER,
    crate::dataset::SMOKER,
    crate::dataset::CLAIM_PRESENT,
];

pub const MIN_TRAIN: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothConfig {
    /// Knots per spline, including both ends.
    pub knots: usize,
    pub lambda: f64,
    pub max_cycles: usize,
    /// Stop when no component moves by more than this at any training row.
    pub tolerance: f64,
    /// Fit every feature with a linear term.
    pub force_linear: bool,
}

impl Default for SmoothConfig {
    fn default() -> Self {
        SmoothConfig {
            knots: 6,
            lambda: 1e-3,
            max_cycles: 200,
            tolerance: 1e-6,
            force_linear: false,
        }
    }
}

/// Centered natural cubic spline of one feature.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothFunction {
    pub feature: usize,
    geometry: KnotGeometry,
    /// Spline value at each knot, before centering.
    pub values: Vec<f64>,
    pub center: f64,
}

impl SmoothFunction {
    pub fn new(feature: usize, knots: Vec<f64>, values: Vec<f64>, center: f64) -> Result<Self> {
        if knots.len() < 2 || !knots.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::validation(format!(
                "smooth for `{}` needs at least 2 strictly ascending knots",
                FEATURE_NAMES[feature]
            )));
        }
        if values.len() != knots.len() {
            return Err(Error::validation("one spline value per knot required"));
        }
        Ok(SmoothFunction {
            feature,
            geometry: KnotGeometry::new(knots),
            values,
            center,
        })
    }

    pub fn knots(&self) -> &[f64] {
        self.geometry.knots()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.geometry.eval(&self.values, x) - self.center
    }
}

/// `coefficient · (x − center)`
#[derive(Debug, Clone, PartialEq)]
pub struct LinearTerm {
    pub feature: usize,
    pub coefficient: f64,
    pub center: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Component {
    Spline(SmoothFunction),
    Linear(LinearTerm),
}

impl Component {
    pub fn feature(&self) -> usize {
        match self {
            Component::Spline(s) => s.feature,
            Component::Linear(l) => l.feature,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Component::Spline(s) => s.eval(x),
            Component::Linear(l) => l.coefficient * (x - l.center),
        }
    }
}

/// `gamma · f_i(x_i) · f_j(x_j)`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteractionTerm {
    pub i: usize,
    pub j: usize,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GamDiagnostics {
    pub cycles: usize,
    /// Training RSS on the response scale.
    pub rss: f64,
    /// Training RSS after each backfitting cycle.
    pub rss_trajectory: Vec<f64>,
    /// Penalized working objective `Σ w (z − η)² + λ·w̄·Σ gᵀΩg` after each
    /// cycle. Backfitting never increases it; RSS alone may rise slightly
    /// while the penalty settles.
    pub objective_trajectory: Vec<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GamModel {
    pub intercept: f64,
    pub link: LinkKind,
    /// One component per feature, in feature order.
    pub components: Vec<Component>,
    pub interactions: Vec<InteractionTerm>,
    pub smooth: SmoothConfig,
    pub diagnostics: GamDiagnostics,
}

impl GamModel {
    /// Additive predictor on the link scale.
    pub fn linear_predictor(&self, x: &FeatureVector) -> f64 {
        let mut eta = self.intercept;
        for c in &self.components {
            eta += c.eval(x[c.feature()]);
        }
        for t in &self.interactions {
            eta += t.gamma * self.components[t.i].eval(x[t.i]) * self.components[t.j].eval(x[t.j]);
        }
        eta
    }

    pub fn has_interaction(&self, i: usize, j: usize) -> bool {
        let (a, b) = (i.min(j), i.max(j));
        self.interactions.iter().any(|t| (t.i, t.j) == (a, b))
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.len() != FEATURE_COUNT
            || self.components.iter().enumerate().any(|(j, c)| c.feature() != j)
        {
            return Err(Error::validation("GAM needs exactly one component per feature, in order"));
        }
        for t in &self.interactions {
            if t.i == t.j || t.i >= FEATURE_COUNT || t.j >= FEATURE_COUNT {
                return Err(Error::validation(format!(
                    "interaction ({}, {}) must join two distinct features",
                    t.i, t.j
                )));
            }
        }
        Ok(())
    }
}

pub fn predict_gam(model: &GamModel, x: &FeatureVector) -> f64 {
    model.link.inverse(model.linear_predictor(x))
}

fn column(features: &[FeatureVector], j: usize) -> Vec<f64> {
    features.iter().map(|f| f[j]).collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn linear_kind(xs: &[f64]) -> Kind {
    let center = mean(xs);
    let degenerate = xs.iter().all(|x| *x == xs[0]);
    Kind::Linear { center, degenerate }
}

fn spline_kind(xs: &[f64], knots: Vec<f64>) -> Kind {
    let geometry = KnotGeometry::new(knots);
    let basis = geometry.basis_matrix(xs);
    let n = xs.len() as f64;
    let constraint = (0..basis.cols)
        .map(|k| (0..basis.rows).map(|i| basis.get(i, k)).sum::<f64>() / n)
        .collect();
    Kind::Spline {
        geometry,
        basis,
        constraint,
    }
}

fn check_train(train: &Dataset) -> Result<()> {
    if train.len() < MIN_TRAIN {
        return Err(Error::validation(format!(
            "GAM needs at least {MIN_TRAIN} training records, got {}",
            train.len()
        )));
    }
    Ok(())
}

pub fn fit_gam(
    train: &Dataset,
    config: &EncodingConfig,
    link: LinkKind,
    smooth: &SmoothConfig,
) -> Result<GamModel> {
    check_train(train)?;
    let features = train.features(config);
    fit_gam_features(&features, &train.targets(), link, smooth)
}

pub(crate) fn fit_gam_features(
    features: &[FeatureVector],
    y: &[f64],
    link: LinkKind,
    smooth: &SmoothConfig,
) -> Result<GamModel> {
    if smooth.knots < 2 {
        return Err(Error::validation("smooths need at least 2 knots"));
    }
    if !(smooth.lambda >= 0.0 && smooth.lambda.is_finite()) {
        return Err(Error::validation("smoothing penalty must be finite and >= 0"));
    }
    if link == LinkKind::Log && !(mean(y) > 0.0) {
        return Err(Error::validation("log link needs a positive mean response"));
    }
    let mut warnings = Vec::new();
    let kinds = (0..FEATURE_COUNT)
        .map(|j| {
            let xs = column(features, j);
            if smooth.force_linear || BINARY_FEATURES.contains(&j) {
                return linear_kind(&xs);
            }
            match quantile_knots(&xs, smooth.knots) {
                Some(knots) => spline_kind(&xs, knots),
                None => {
                    warnings.push(format!(
                        "`{}` has fewer distinct values than {} knots; fitted as linear",
                        FEATURE_NAMES[j], smooth.knots
                    ));
                    linear_kind(&xs)
                }
            }
        })
        .collect::<Vec<_>>();
    for (j, k) in kinds.iter().enumerate() {
        if let Kind::Linear { degenerate: true, .. } = k {
            warnings.push(format!("`{}` is constant; its component is zero", FEATURE_NAMES[j]));
        }
    }
    let problem = Problem {
        features,
        y,
        kinds,
        pairs: Vec::new(),
        lambda: smooth.lambda,
        tolerance: smooth.tolerance,
        max_cycles: smooth.max_cycles,
        link,
    };
    let state = problem.initial_state();
    let outcome = problem.fit(state)?;
    assemble(&problem, outcome, smooth.clone(), warnings)
}

/// Rebuilds the backfitting problem behind a fitted model, reusing its knots.
fn problem_from_model<'a>(
    model: &GamModel,
    features: &'a [FeatureVector],
    y: &'a [f64],
    pairs: Vec<(usize, usize)>,
) -> Problem<'a> {
    let kinds = model
        .components
        .iter()
        .map(|c| match c {
            Component::Linear(l) => {
                let xs = column(features, l.feature);
                Kind::Linear {
                    center: l.center,
                    degenerate: xs.iter().all(|x| *x == xs[0]),
                }
            }
            Component::Spline(s) => spline_kind(&column(features, s.feature), s.knots().to_vec()),
        })
        .collect();
    Problem {
        features,
        y,
        kinds,
        pairs,
        lambda: model.smooth.lambda,
        tolerance: model.smooth.tolerance,
        max_cycles: model.smooth.max_cycles,
        link: model.link,
    }
}

fn linear_coef(model: &GamModel, j: usize) -> Option<f64> {
    match &model.components[j] {
        Component::Linear(l) => Some(l.coefficient),
        Component::Spline(_) => None,
    }
}

/// Backfitting state equivalent to a fitted model.
fn state_from_model(model: &GamModel, problem: &Problem<'_>) -> State {
    let mut state = problem.initial_state();
    state.intercept = model.intercept;
    for c in &model.components {
        match c {
            Component::Linear(l) => state.linear[l.feature] = l.coefficient,
            Component::Spline(s) => {
                state.spline[s.feature] = s.values.iter().map(|v| v - s.center).collect();
            }
        }
    }
    for (q, &(a, b)) in problem.pairs.iter().enumerate() {
        state.theta[q] = model
            .interactions
            .iter()
            .find(|t| (t.i, t.j) == (a, b))
            .map_or(0.0, |t| {
                t.gamma * linear_coef(model, a).unwrap_or(1.0) * linear_coef(model, b).unwrap_or(1.0)
            });
    }
    state
}

fn assemble(
    problem: &Problem<'_>,
    outcome: backfit::Outcome,
    smooth: SmoothConfig,
    warnings: Vec<String>,
) -> Result<GamModel> {
    let state = outcome.state;
    let mut components = Vec::with_capacity(FEATURE_COUNT);
    for (j, kind) in problem.kinds.iter().enumerate() {
        components.push(match kind {
            Kind::Linear { center, .. } => Component::Linear(LinearTerm {
                feature: j,
                coefficient: state.linear[j],
                center: *center,
            }),
            Kind::Spline {
                geometry,
                basis,
                ..
            } => {
                let fitted = basis.mul_vec(&state.spline[j]);
                Component::Spline(SmoothFunction {
                    feature: j,
                    geometry: geometry.clone(),
                    values: state.spline[j].clone(),
                    center: mean(&fitted),
                })
            }
        });
    }
    let mut interactions = Vec::with_capacity(problem.pairs.len());
    for (q, &(a, b)) in problem.pairs.iter().enumerate() {
        let mut scale = 1.0;
        for j in [a, b] {
            if let Component::Linear(l) = &components[j] {
                scale *= l.coefficient;
            }
        }
        let theta = state.theta[q];
        let gamma = if theta == 0.0 {
            0.0
        } else if scale.abs() > 1e-300 && (theta / scale).is_finite() {
            theta / scale
        } else {
            return Err(Error::Convergence {
                iterations: outcome.cycles,
                detail: format!(
                    "interaction ({}, {}) is not expressible as γ·f·f: a partner component is zero",
                    FEATURE_NAMES[a], FEATURE_NAMES[b]
                ),
                trajectory: outcome.rss_trajectory,
            });
        };
        interactions.push(InteractionTerm { i: a, j: b, gamma });
    }
    let mut model = GamModel {
        intercept: state.intercept,
        link: problem.link,
        components,
        interactions,
        smooth,
        diagnostics: GamDiagnostics::default(),
    };
    let rss = problem
        .features
        .iter()
        .zip(problem.y)
        .map(|(f, y)| (y - predict_gam(&model, f)).powi(2))
        .sum();
    model.diagnostics = GamDiagnostics {
        cycles: outcome.cycles,
        rss,
        rss_trajectory: outcome.rss_trajectory,
        objective_trajectory: outcome.objective_trajectory,
        warnings,
    };
    Ok(model)
}

/// Refits `model` with one more interaction `γ·fᵢ·fⱼ`, warm-started from the
/// current components.
pub fn add_interaction(
    model: &GamModel,
    i: usize,
    j: usize,
    train: &Dataset,
    config: &EncodingConfig,
) -> Result<GamModel> {
    check_train(train)?;
    let features = train.features(config);
    add_interaction_features(model, i, j, &features, &train.targets())
}

pub(crate) fn add_interaction_features(
    model: &GamModel,
    i: usize,
    j: usize,
    features: &[FeatureVector],
    y: &[f64],
) -> Result<GamModel> {
    if i == j || i >= FEATURE_COUNT || j >= FEATURE_COUNT {
        return Err(Error::validation(format!(
            "interaction needs two distinct features, got ({i}, {j})"
        )));
    }
    if model.has_interaction(i, j) {
        return Err(Error::validation(format!(
            "interaction ({}, {}) already present",
            FEATURE_NAMES[i.min(j)],
            FEATURE_NAMES[i.max(j)]
        )));
    }
    let mut pairs: Vec<(usize, usize)> = model.interactions.iter().map(|t| (t.i, t.j)).collect();
    pairs.push((i.min(j), i.max(j)));
    let problem = problem_from_model(model, features, y, pairs);
    let state = state_from_model(model, &problem);
    let outcome = problem.fit(state)?;
    assemble(
        &problem,
        outcome,
        model.smooth.clone(),
        model.diagnostics.warnings.clone(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, GeneratorParams, AGE, CLAIM_SEVERITY, SMOKER};

    fn constant_model(c: f64) -> GamModel {
        GamModel {
            intercept: c,
            link: LinkKind::Identity,
            components: (0..FEATURE_COUNT)
                .map(|j| {
                    Component::Linear(LinearTerm {
                        feature: j,
                        coefficient: 0.0,
                        center: 0.5,
                    })
                })
                .collect(),
            interactions: Vec::new(),
            smooth: SmoothConfig::default(),
            diagnostics: GamDiagnostics::default(),
        }
    }

    #[test]
    fn constant_model_predicts_intercept() {
        let m = constant_model(812.0);
        assert_eq!(predict_gam(&m, &FeatureVector([0.2, 0.9, 0.1, 1.0, 1.0, 0.6])), 812.0);
    }

    #[test]
    fn zero_gamma_interaction_changes_nothing() {
        let p = GeneratorParams { n: 80, ..Default::default() };
        let ds = generate_synthetic(&p).unwrap();
        let base = fit_gam(&ds, &p.encoding, LinkKind::Identity, &SmoothConfig::default()).unwrap();
        let mut with = base.clone();
        with.interactions.push(InteractionTerm { i: AGE, j: SMOKER, gamma: 0.0 });
        for f in ds.features(&p.encoding) {
            assert_eq!(predict_gam(&base, &f), predict_gam(&with, &f));
        }
    }

    #[test]
    fn prediction_at_knots_sums_tabulated_values() {
        let knots = vec![0.0, 0.25, 0.5, 1.0];
        let age = SmoothFunction::new(AGE, knots.clone(), vec![1.0, -3.0, 2.0, 5.0], 0.5).unwrap();
        let mut m = constant_model(100.0);
        m.components[AGE] = Component::Spline(age);
        // knot values at x = 0.25: -3.0, minus center 0.5
        let mut x = FeatureVector([0.5, 0.25, 0.5, 0.5, 0.5, 0.5]);
        assert!((predict_gam(&m, &x) - (100.0 - 3.0 - 0.5)).abs() < 1e-12);
        x.0[AGE] = 1.0;
        assert!((predict_gam(&m, &x) - (100.0 + 5.0 - 0.5)).abs() < 1e-12);
    }

    #[test]
    fn constant_response_gives_flat_components() {
        let p = GeneratorParams {
            coefficients: [0.0; 6],
            interaction: 0.0,
            noise_scale: 0.0,
            base_cost: 3.0,
            n: 60,
            ..Default::default()
        };
        let ds = generate_synthetic(&p).unwrap();
        let m = fit_gam(&ds, &p.encoding, LinkKind::Identity, &SmoothConfig::default()).unwrap();
        assert!((m.intercept - 3000.0).abs() < 1e-9);
        for f in ds.features(&p.encoding) {
            for c in &m.components {
                assert!(c.eval(f[c.feature()]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn severity_degrades_to_linear_with_warning() {
        let p = GeneratorParams { n: 60, ..Default::default() };
        let ds = generate_synthetic(&p).unwrap();
        let m = fit_gam(&ds, &p.encoding, LinkKind::Identity, &SmoothConfig::default()).unwrap();
        assert!(matches!(m.components[CLAIM_SEVERITY], Component::Linear(_)));
        assert!(matches!(m.components[AGE], Component::Spline(_)));
        assert!(m.diagnostics.warnings.iter().any(|w| w.contains("claim_severity")));
    }

    #[test]
    fn too_few_rows_is_rejected() {
        let p = GeneratorParams { n: 10, ..Default::default() };
        let ds = generate_synthetic(&p).unwrap();
        let err = fit_gam(&ds, &p.encoding, LinkKind::Identity, &SmoothConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn duplicate_and_self_pairs_are_rejected() {
        let p = GeneratorParams { n: 60, ..Default::default() };
        let ds = generate_synthetic(&p).unwrap();
        let base = fit_gam(&ds, &p.encoding, LinkKind::Identity, &SmoothConfig::default()).unwrap();
        assert!(add_interaction(&base, AGE, AGE, &ds, &p.encoding).is_err());
        let one = add_interaction(&base, SMOKER, CLAIM_SEVERITY, &ds, &p.encoding).unwrap();
        let err = add_interaction(&one, CLAIM_SEVERITY, SMOKER, &ds, &p.encoding).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn cycle_cap_reports_trajectory() {
        let p = GeneratorParams { n: 60, ..Default::default() };
        let ds = generate_synthetic(&p).unwrap();
        let smooth = SmoothConfig { max_cycles: 1, tolerance: 0.0, ..Default::default() };
        match fit_gam(&ds, &p.encoding, LinkKind::Identity, &smooth).unwrap_err() {
            Error::Convergence { trajectory, iterations, .. } => {
                assert_eq!(iterations, 1);
                assert_eq!(trajectory.len(), 1);
            }
            e => panic!("unexpected {e}"),
        }
    }
}

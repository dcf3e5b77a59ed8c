use std::collections::HashSet;
use std::time::{Duration, Instant};

use super::{accuracy_band, overfit_scan, AccuracyBand, BandConfig, Family, FittedModel, Ladder, OverfitConfig, OverfitReport};
use crate::dataset::{Dataset, EncodingConfig, FEATURE_NAMES};
use crate::error::{Error, Result};
use crate::gam::{collinearity_report, interaction_scan, CollinearityReport, InteractionCandidate, ScanConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct CompareOptions {
    pub band: BandConfig,
    pub overfit: OverfitConfig,
    pub gam_ladder: Ladder,
    pub ann_ladder: Ladder,
    pub scan: ScanConfig,
    pub collinearity_threshold: f64,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions {
            band: BandConfig::default(),
            overfit: OverfitConfig::default(),
            gam_ladder: Ladder::default_lambdas(),
            ann_ladder: Ladder::default_epochs(),
            scan: ScanConfig::default(),
            collinearity_threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSummary {
    pub family: Family,
    pub band: AccuracyBand,
    pub overfit: OverfitReport,
    /// GAM only.
    pub interactions: Option<Vec<InteractionCandidate>>,
    /// GAM only.
    pub collinearity: Option<CollinearityReport>,
    /// Time spent evaluating this model. Not part of the rendered tables.
    pub wall_time: Duration,
}

impl ModelSummary {
    fn interaction_cell(&self) -> String {
        let Some(found) = &self.interactions else {
            return "None".into();
        };
        let names: Vec<String> = found
            .iter()
            .filter(|c| c.significant)
            .map(|c| format!("{} x {}", FEATURE_NAMES[c.i], FEATURE_NAMES[c.j]))
            .collect();
        if names.is_empty() {
            "None".into()
        } else {
            names.join("; ")
        }
    }

    fn collinear_cell(&self) -> String {
        let Some(rep) = &self.collinearity else {
            return "None".into();
        };
        let names: Vec<String> = rep
            .flagged
            .iter()
            .map(|&(i, j, _)| format!("{} & {}", FEATURE_NAMES[i], FEATURE_NAMES[j]))
            .collect();
        if names.is_empty() {
            "None".into()
        } else {
            names.join("; ")
        }
    }

    fn threshold_cell(&self) -> String {
        match self.overfit.threshold {
            Some(t) => format!("{:.1}%", t * 100.0),
            None => "not detected".into(),
        }
    }

    fn distribution(&self) -> &'static str {
        match self.family {
            Family::Ann => "None",
            Family::Glm | Family::Gam => "Normal",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub models: Vec<ModelSummary>,
}

impl ComparisonReport {
    pub fn get(&self, family: Family) -> Option<&ModelSummary> {
        self.models.iter().find(|m| m.family == family)
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::from("## Accuracy on the test half\n\n");
        out.push_str("| Model | Accuracy | Interaction analysis | Collinear analysis |\n");
        out.push_str("|---|---|---|---|\n");
        for m in &self.models {
            out.push_str(&format!(
                "| {} | {} | {} | {} |\n",
                m.family,
                m.band,
                m.interaction_cell(),
                m.collinear_cell()
            ));
        }
        out.push_str("\n## Overfitting\n\n");
        out.push_str("| Model | Distribution assumption | Error of over fitting threshold |\n");
        out.push_str("|---|---|---|\n");
        for m in &self.models {
            out.push_str(&format!("| {} | {} | {} |\n", m.family, m.distribution(), m.threshold_cell()));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "model,ratio_min,ratio_max,n_evaluated,n_excluded,trim_fraction,threshold,interactions,collinear\n",
        );
        for m in &self.models {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                m.family.key(),
                m.band.ratio_min,
                m.band.ratio_max,
                m.band.n_evaluated,
                m.band.n_excluded,
                m.band.trim_fraction,
                m.overfit.threshold.map(|t| t.to_string()).unwrap_or_default(),
                m.interaction_cell(),
                m.collinear_cell()
            ));
        }
        out
    }
}

/// Evaluates every model on `test` and reruns its overfit ladder on `train`.
/// GAM rows also carry the interaction scan and collinearity report.
pub fn compare(
    models: &[FittedModel],
    train: &Dataset,
    test: &Dataset,
    config: &EncodingConfig,
    options: &CompareOptions,
) -> Result<ComparisonReport> {
    if models.is_empty() {
        return Err(Error::validation("nothing to compare"));
    }
    let train_ids: HashSet<u64> = train.ids().into_iter().collect();
    let shared: Vec<u64> = test.ids().into_iter().filter(|id| train_ids.contains(id)).collect();
    if !shared.is_empty() {
        return Err(Error::Leakage(format!(
            "{} test record(s) also appear in training, e.g. id {}",
            shared.len(),
            shared[0]
        )));
    }

    let mut rows = Vec::with_capacity(models.len());
    for model in models {
        let start = Instant::now();
        let band = accuracy_band(model, test, config, &options.band)?;
        let ladder = match model.family() {
            Family::Glm => Ladder::Single,
            Family::Gam => options.gam_ladder.clone(),
            Family::Ann => options.ann_ladder.clone(),
        };
        let overfit = overfit_scan(&model.spec(), &ladder, train, config, &options.overfit)?;
        let (interactions, collinearity) = match model {
            FittedModel::Gam(g) => (
                Some(interaction_scan(train, config, g, &options.scan)?),
                Some(collinearity_report(train, config, options.collinearity_threshold)?),
            ),
            _ => (None, None),
        };
        rows.push(ModelSummary {
            family: model.family(),
            band,
            overfit,
            interactions,
            collinearity,
            wall_time: start.elapsed(),
        });
    }
    Ok(ComparisonReport { models: rows })
}

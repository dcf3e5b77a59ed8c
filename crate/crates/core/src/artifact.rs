//! Plain-text model artifacts.
//!
//! Every artifact starts with `family = glm|gam|ann` and carries the encoding
//! it was fit with, so a reloaded model encodes new customers exactly as the
//! original did. Floats are written in shortest round-trip form, so a
//! reloaded model predicts bit-for-bit like the one that was saved.

use std::path::Path;

use crate::ann::{AnnModel, Layer, NetworkTopology, TargetScaler, TrainingConfig, Weights};
use crate::dataset::{EncodingConfig, FEATURE_COUNT, FEATURE_NAMES};
use crate::error::{Error, Result};
use crate::evaluation::{Family, FittedModel};
use crate::gam::{
    Component, GamDiagnostics, GamModel, InteractionTerm, LinearTerm, SmoothConfig, SmoothFunction,
};
use crate::glm::{GlmDiagnostics, GlmModel};
use crate::kv::{KvDoc, KvSection};

fn feature_index(name: &str) -> Result<usize> {
    FEATURE_NAMES
        .iter()
        .position(|f| *f == name)
        .ok_or_else(|| Error::Schema(format!("unknown feature `{name}`")))
}

fn push_encoding(doc: &mut KvDoc, enc: &EncodingConfig) {
    doc.section("encoding")
        .push_list("age_range", &[enc.age_range.0, enc.age_range.1])
        .push_list("income_range", &[enc.income_range.0, enc.income_range.1])
        .push_list("severity", &enc.claim_severity);
}

fn read_encoding(doc: &KvDoc) -> Result<EncodingConfig> {
    let s = doc.get_section("encoding")?;
    let two = |key: &str| -> Result<(f64, f64)> {
        match s.list(key)?.as_slice() {
            [a, b] => Ok((*a, *b)),
            _ => Err(Error::Schema(format!("`{key}` needs two numbers"))),
        }
    };
    let sev = s.list("severity")?;
    let enc = EncodingConfig {
        age_range: two("age_range")?,
        income_range: two("income_range")?,
        claim_severity: sev
            .as_slice()
            .try_into()
            .map_err(|_| Error::Schema("`severity` needs 5 numbers".into()))?,
    };
    enc.validate()?;
    Ok(enc)
}

fn usize_list(s: &KvSection<'_>, key: &str) -> Result<Vec<usize>> {
    s.req(key)?
        .split_whitespace()
        .map(|t| {
            t.parse().map_err(|e| Error::Parse {
                row: 0,
                column: key.to_string(),
                message: format!("`{t}`: {e}"),
            })
        })
        .collect()
}

/// Like [`KvSection::list`] but an empty value is an empty list.
fn list_or_empty(s: &KvSection<'_>, key: &str) -> Result<Vec<f64>> {
    if s.req(key)?.is_empty() {
        Ok(Vec::new())
    } else {
        s.list(key)
    }
}

pub fn render_model(model: &FittedModel, encoding: &EncodingConfig) -> String {
    let mut doc = KvDoc::new();
    doc.push("family", model.family().key());
    match model {
        FittedModel::Glm(m) => {
            doc.push("link", m.link);
            push_encoding(&mut doc, encoding);
            doc.section("coefficients").push("intercept", m.intercept);
            for (name, b) in FEATURE_NAMES.iter().zip(m.coefficients) {
                doc.push(name, b);
            }
            doc.section("diagnostics")
                .push("rss", m.diagnostics.rss)
                .push("iterations", m.diagnostics.iterations)
                .push("ridge_used", m.diagnostics.ridge_used);
        }
        FittedModel::Gam(m) => {
            doc.push("link", m.link).push("intercept", m.intercept);
            push_encoding(&mut doc, encoding);
            doc.section("smooth")
                .push("knots", m.smooth.knots)
                .push("lambda", m.smooth.lambda)
                .push("max_cycles", m.smooth.max_cycles)
                .push("tolerance", m.smooth.tolerance)
                .push("force_linear", m.smooth.force_linear);
            for c in &m.components {
                doc.section("component").push("feature", FEATURE_NAMES[c.feature()]);
                match c {
                    Component::Spline(s) => {
                        doc.push("kind", "spline")
                            .push_list("knots", s.knots())
                            .push_list("values", &s.values)
                            .push("center", s.center);
                    }
                    Component::Linear(l) => {
                        doc.push("kind", "linear")
                            .push("coefficient", l.coefficient)
                            .push("center", l.center);
                    }
                }
            }
            for t in &m.interactions {
                doc.section("interaction")
                    .push("i", FEATURE_NAMES[t.i])
                    .push("j", FEATURE_NAMES[t.j])
                    .push("gamma", t.gamma);
            }
            let d = &m.diagnostics;
            doc.section("diagnostics")
                .push("cycles", d.cycles)
                .push("rss", d.rss)
                .push_list("rss_trajectory", &d.rss_trajectory)
                .push_list("objective_trajectory", &d.objective_trajectory)
                .push("warnings", d.warnings.len());
            for (k, w) in d.warnings.iter().enumerate() {
                doc.push(&format!("warning_{k}"), w);
            }
        }
        FittedModel::Ann(m) => {
            push_encoding(&mut doc, encoding);
            let hidden: Vec<String> = m.topology.hidden_layers.iter().map(|h| h.to_string()).collect();
            doc.section("topology")
                .push("inputs", m.topology.input_count)
                .push("hidden", hidden.join(" "))
                .push("outputs", m.topology.output_count);
            let t = &m.training;
            doc.section("training")
                .push("learning_rate", t.learning_rate)
                .push("max_epochs", t.max_epochs)
                .push("seed", t.seed)
                .push("validation_fraction", t.validation_fraction)
                .push("early_stop_patience", t.early_stop_patience);
            doc.section("scaler").push("min", m.scaler.min).push("max", m.scaler.max);
            for l in &m.weights.layers {
                doc.section("layer")
                    .push("rows", l.rows)
                    .push("cols", l.cols)
                    .push_list("weights", &l.weights)
                    .push_list("bias", &l.bias);
            }
            doc.section("history")
                .push("stopped_epoch", m.stopped_epoch)
                .push("best_epoch", m.best_epoch)
                .push_list("train_loss", &m.train_loss)
                .push_list("val_loss", &m.val_loss);
        }
    }
    doc.render()
}

pub fn parse_model(text: &str) -> Result<(FittedModel, EncodingConfig)> {
    let doc = KvDoc::parse(text)?;
    let root = doc.root();
    let family: Family = root.req("family")?.parse()?;
    let encoding = read_encoding(&doc)?;
    let model = match family {
        Family::Glm => {
            let c = doc.get_section("coefficients")?;
            let mut coefficients = [0.0; FEATURE_COUNT];
            for (j, name) in FEATURE_NAMES.iter().enumerate() {
                coefficients[j] = c.parse(name)?;
            }
            let d = doc.get_section("diagnostics")?;
            FittedModel::Glm(GlmModel {
                intercept: c.parse("intercept")?,
                coefficients,
                link: root.parse("link")?,
                diagnostics: GlmDiagnostics {
                    rss: d.parse("rss")?,
                    iterations: d.parse("iterations")?,
                    ridge_used: d.parse("ridge_used")?,
                },
            })
        }
        Family::Gam => {
            let s = doc.get_section("smooth")?;
            let smooth = SmoothConfig {
                knots: s.parse("knots")?,
                lambda: s.parse("lambda")?,
                max_cycles: s.parse("max_cycles")?,
                tolerance: s.parse("tolerance")?,
                force_linear: s.parse("force_linear")?,
            };
            let mut components = Vec::new();
            for c in doc.sections_named("component") {
                let feature = feature_index(c.req("feature")?)?;
                components.push(match c.req("kind")? {
                    "spline" => Component::Spline(SmoothFunction::new(
                        feature,
                        c.list("knots")?,
                        c.list("values")?,
                        c.parse("center")?,
                    )?),
                    "linear" => Component::Linear(LinearTerm {
                        feature,
                        coefficient: c.parse("coefficient")?,
                        center: c.parse("center")?,
                    }),
                    other => return Err(Error::Schema(format!("unknown component kind `{other}`"))),
                });
            }
            let mut interactions = Vec::new();
            for t in doc.sections_named("interaction") {
                interactions.push(InteractionTerm {
                    i: feature_index(t.req("i")?)?,
                    j: feature_index(t.req("j")?)?,
                    gamma: t.parse("gamma")?,
                });
            }
            let d = doc.get_section("diagnostics")?;
            let n_warn: usize = d.parse("warnings")?;
            let warnings = (0..n_warn)
                .map(|k| d.req(&format!("warning_{k}")).map(str::to_string))
                .collect::<Result<_>>()?;
            let model = GamModel {
                intercept: root.parse("intercept")?,
                link: root.parse("link")?,
                components,
                interactions,
                smooth,
                diagnostics: GamDiagnostics {
                    cycles: d.parse("cycles")?,
                    rss: d.parse("rss")?,
                    rss_trajectory: list_or_empty(&d, "rss_trajectory")?,
                    objective_trajectory: list_or_empty(&d, "objective_trajectory")?,
                    warnings,
                },
            };
            model.validate()?;
            FittedModel::Gam(model)
        }
        Family::Ann => {
            let t = doc.get_section("topology")?;
            let topology = NetworkTopology {
                input_count: t.parse("inputs")?,
                hidden_layers: usize_list(&t, "hidden")?,
                output_count: t.parse("outputs")?,
            };
            topology.validate()?;
            let tr = doc.get_section("training")?;
            let training = TrainingConfig {
                learning_rate: tr.parse("learning_rate")?,
                max_epochs: tr.parse("max_epochs")?,
                seed: tr.parse("seed")?,
                validation_fraction: tr.parse("validation_fraction")?,
                early_stop_patience: tr.parse("early_stop_patience")?,
            };
            let s = doc.get_section("scaler")?;
            let scaler = TargetScaler {
                min: s.parse("min")?,
                max: s.parse("max")?,
            };
            let layers = doc
                .sections_named("layer")
                .map(|l| {
                    Ok(Layer {
                        rows: l.parse("rows")?,
                        cols: l.parse("cols")?,
                        weights: l.list("weights")?,
                        bias: l.list("bias")?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let weights = Weights { layers };
            weights.validate()?;
            if weights.topology() != topology {
                return Err(Error::Schema("layer shapes disagree with [topology]".into()));
            }
            let h = doc.get_section("history")?;
            FittedModel::Ann(AnnModel {
                topology,
                training,
                weights,
                scaler,
                train_loss: list_or_empty(&h, "train_loss")?,
                val_loss: list_or_empty(&h, "val_loss")?,
                stopped_epoch: h.parse("stopped_epoch")?,
                best_epoch: h.parse("best_epoch")?,
            })
        }
    };
    Ok((model, encoding))
}

pub fn save_model(path: &Path, model: &FittedModel, encoding: &EncodingConfig) -> Result<()> {
    std::fs::write(path, render_model(model, encoding)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<(FittedModel, EncodingConfig)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_model(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glm::LinkKind;

    #[test]
    fn glm_round_trip_is_exact() {
        let m = GlmModel::new(0.1 + 0.2, [1.0 / 3.0, -2.5e-17, 7.0, 0.0, 1e300, -0.5], LinkKind::Log);
        let enc = EncodingConfig::default();
        let text = render_model(&FittedModel::Glm(m.clone()), &enc);
        let (back, enc2) = parse_model(&text).unwrap();
        assert_eq!(back, FittedModel::Glm(m));
        assert_eq!(enc2, enc);
        assert_eq!(text.lines().filter(|l| l.contains(" = ")).count(), 15);
    }

    #[test]
    fn wrong_family_or_missing_section_fails() {
        assert!(parse_model("family = svm\n").is_err());
        assert!(parse_model("family = glm\nlink = identity\n").is_err());
    }
}

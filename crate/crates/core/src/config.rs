//! Lab configuration file. Every key is optional and falls back to the
//! library default; unknown keys are rejected so typos surface early.
//!
//! ```text
//! [encoding]
//! age_range = 18 80
//! income_range = 0 150000
//! severity = 0 0.4 0.6 1 0.5
//!
//! [generator]
//! n = 200
//! seed = 7
//! coefficients = 0.3 5 -1 2 1.5 6
//!
//! [gam]
//! knots = 6
//! lambda = 0.001
//!
//! [ann]
//! hidden = 8
//! learning_rate = 0.3
//! ```

use std::path::Path;

use crate::ann::{NetworkTopology, TrainingConfig};
use crate::dataset::{EncodingConfig, GeneratorParams, FEATURE_COUNT};
use crate::error::{Error, Result};
use crate::evaluation::{BandConfig, CompareOptions, Family, Ladder, ModelSpec, OverfitConfig};
use crate::gam::{ScanConfig, SmoothConfig};
use crate::glm::LinkKind;
use crate::kv::{KvDoc, KvSection};

#[derive(Debug, Clone, PartialEq)]
pub struct LabConfig {
    pub encoding: EncodingConfig,
    /// Its `encoding` field always equals [`LabConfig::encoding`].
    pub generator: GeneratorParams,
    pub glm_link: LinkKind,
    pub gam_link: LinkKind,
    pub smooth: SmoothConfig,
    pub topology: NetworkTopology,
    pub training: TrainingConfig,
    pub compare: CompareOptions,
}

impl Default for LabConfig {
    fn default() -> Self {
        LabConfig {
            encoding: EncodingConfig::default(),
            generator: GeneratorParams::default(),
            glm_link: LinkKind::Identity,
            gam_link: LinkKind::Identity,
            smooth: SmoothConfig::default(),
            topology: NetworkTopology::default(),
            training: TrainingConfig::default(),
            compare: CompareOptions::default(),
        }
    }
}

const SECTIONS: [(&str, &[&str]); 6] = [
    ("encoding", &["age_range", "income_range", "severity"]),
    (
        "generator",
        &[
            "n",
            "seed",
            "base_cost",
            "coefficients",
            "age_quadratic",
            "interaction",
            "collinearity_rho",
            "noise_scale",
            "unit_scale",
        ],
    ),
    ("glm", &["link"]),
    ("gam", &["link", "knots", "lambda", "max_cycles", "tolerance", "force_linear"]),
    (
        "ann",
        &["hidden", "learning_rate", "max_epochs", "seed", "validation_fraction", "early_stop_patience"],
    ),
    (
        "evaluation",
        &[
            "trim_fraction",
            "floor",
            "validation_fraction",
            "patience",
            "seed",
            "gam_lambdas",
            "ann_epochs",
            "scan_threshold",
            "permutations",
            "alpha",
            "scan_seed",
            "collinearity_threshold",
        ],
    ),
];

fn pair(s: &KvSection<'_>, key: &str, default: (f64, f64)) -> Result<(f64, f64)> {
    if s.raw(key).is_none() {
        return Ok(default);
    }
    match s.list(key)?.as_slice() {
        [a, b] => Ok((*a, *b)),
        other => Err(Error::Schema(format!("`{key}` needs two numbers, got {}", other.len()))),
    }
}

fn fixed<const N: usize>(s: &KvSection<'_>, key: &str, default: [f64; N]) -> Result<[f64; N]> {
    if s.raw(key).is_none() {
        return Ok(default);
    }
    let v = s.list(key)?;
    v.as_slice()
        .try_into()
        .map_err(|_| Error::Schema(format!("`{key}` needs {N} numbers, got {}", v.len())))
}

fn counts(s: &KvSection<'_>, key: &str) -> Result<Option<Vec<usize>>> {
    s.raw(key)
        .map(|v| {
            v.split_whitespace()
                .map(|t| {
                    t.parse::<usize>().map_err(|e| Error::Parse {
                        row: 0,
                        column: key.to_string(),
                        message: format!("`{t}`: {e}"),
                    })
                })
                .collect()
        })
        .transpose()
}

impl LabConfig {
    /// The model this configuration describes for `family`.
    pub fn spec(&self, family: Family) -> ModelSpec {
        match family {
            Family::Glm => ModelSpec::Glm { link: self.glm_link },
            Family::Gam => ModelSpec::Gam { link: self.gam_link, smooth: self.smooth.clone() },
            Family::Ann => ModelSpec::Ann { topology: self.topology.clone(), training: self.training.clone() },
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let doc = KvDoc::parse(text)?;
        for (section, key, _) in doc.entries() {
            let known = SECTIONS
                .iter()
                .find(|(s, _)| *s == section)
                .ok_or_else(|| Error::Schema(format!("unknown config section [{section}]")))?;
            if !known.1.contains(&key) {
                return Err(Error::Schema(format!("unknown key `{key}` in section [{section}]")));
            }
        }
        let empty = KvDoc::new();
        let get = |name: &str| doc.sections_named(name).next().unwrap_or_else(|| empty.root());
        let d = LabConfig::default();

        let s = get("encoding");
        let encoding = EncodingConfig {
            age_range: pair(&s, "age_range", d.encoding.age_range)?,
            income_range: pair(&s, "income_range", d.encoding.income_range)?,
            claim_severity: fixed(&s, "severity", d.encoding.claim_severity)?,
        };
        encoding.validate()?;

        let s = get("generator");
        let g = &d.generator;
        let generator = GeneratorParams {
            n: s.parse_or("n", g.n)?,
            seed: s.parse_or("seed", g.seed)?,
            base_cost: s.parse_or("base_cost", g.base_cost)?,
            coefficients: fixed::<FEATURE_COUNT>(&s, "coefficients", g.coefficients)?,
            age_quadratic: s.parse_or("age_quadratic", g.age_quadratic)?,
            interaction: s.parse_or("interaction", g.interaction)?,
            collinearity_rho: s.parse_or("collinearity_rho", g.collinearity_rho)?,
            noise_scale: s.parse_or("noise_scale", g.noise_scale)?,
            unit_scale: s.parse_or("unit_scale", g.unit_scale)?,
            encoding: encoding.clone(),
        };

        let glm_link = get("glm").parse_or("link", d.glm_link)?;

        let s = get("gam");
        let sm = &d.smooth;
        let gam_link = s.parse_or("link", d.gam_link)?;
        let smooth = SmoothConfig {
            knots: s.parse_or("knots", sm.knots)?,
            lambda: s.parse_or("lambda", sm.lambda)?,
            max_cycles: s.parse_or("max_cycles", sm.max_cycles)?,
            tolerance: s.parse_or("tolerance", sm.tolerance)?,
            force_linear: s.parse_or("force_linear", sm.force_linear)?,
        };

        let s = get("ann");
        let tr = &d.training;
        let topology = NetworkTopology {
            hidden_layers: counts(&s, "hidden")?.unwrap_or(d.topology.hidden_layers.clone()),
            ..d.topology.clone()
        };
        topology.validate()?;
        let training = TrainingConfig {
            learning_rate: s.parse_or("learning_rate", tr.learning_rate)?,
            max_epochs: s.parse_or("max_epochs", tr.max_epochs)?,
            seed: s.parse_or("seed", tr.seed)?,
            validation_fraction: s.parse_or("validation_fraction", tr.validation_fraction)?,
            early_stop_patience: s.parse_or("early_stop_patience", tr.early_stop_patience)?,
        };
        training.validate()?;

        let s = get("evaluation");
        let c = &d.compare;
        let compare = CompareOptions {
            band: BandConfig {
                trim_fraction: s.parse_or("trim_fraction", c.band.trim_fraction)?,
                floor: s.parse_or("floor", c.band.floor)?,
            },
            overfit: OverfitConfig {
                validation_fraction: s.parse_or("validation_fraction", c.overfit.validation_fraction)?,
                patience: s.parse_or("patience", c.overfit.patience)?,
                seed: s.parse_or("seed", c.overfit.seed)?,
            },
            gam_ladder: match s.raw("gam_lambdas") {
                Some(_) => Ladder::Lambdas(s.list("gam_lambdas")?),
                None => c.gam_ladder.clone(),
            },
            ann_ladder: counts(&s, "ann_epochs")?.map(Ladder::Epochs).unwrap_or(c.ann_ladder.clone()),
            scan: ScanConfig {
                threshold: s.parse_or("scan_threshold", c.scan.threshold)?,
                permutations: s.parse_or("permutations", c.scan.permutations)?,
                alpha: s.parse_or("alpha", c.scan.alpha)?,
                seed: s.parse_or("scan_seed", c.scan.seed)?,
            },
            collinearity_threshold: s.parse_or("collinearity_threshold", c.collinearity_threshold)?,
        };

        Ok(LabConfig {
            encoding,
            generator,
            glm_link,
            gam_link,
            smooth,
            topology,
            training,
            compare,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(LabConfig::parse("").unwrap(), LabConfig::default());
    }

    #[test]
    fn overrides_apply_and_encoding_is_shared() {
        let cfg = LabConfig::parse(
            "[encoding]\nage_range = 20 70\n[generator]\nn = 50\ncoefficients = 1 2 3 4 5 6\n[ann]\nhidden = 4 3\n[evaluation]\nann_epochs = 10 20\n",
        )
        .unwrap();
        assert_eq!(cfg.encoding.age_range, (20.0, 70.0));
        assert_eq!(cfg.generator.encoding, cfg.encoding);
        assert_eq!(cfg.generator.n, 50);
        assert_eq!(cfg.generator.coefficients, [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(cfg.topology.hidden_layers, vec![4, 3]);
        assert_eq!(cfg.compare.ann_ladder, Ladder::Epochs(vec![10, 20]));
    }

    #[test]
    fn typos_and_bad_values_are_rejected() {
        assert!(LabConfig::parse("[gam]\nlamda = 1\n").is_err());
        assert!(LabConfig::parse("[gams]\nlambda = 1\n").is_err());
        assert!(LabConfig::parse("[encoding]\nage_range = 80 18\n").is_err());
        assert!(LabConfig::parse("[generator]\ncoefficients = 1 2\n").is_err());
        assert!(LabConfig::parse("[glm]\nlink = probit\n").is_err());
    }
}

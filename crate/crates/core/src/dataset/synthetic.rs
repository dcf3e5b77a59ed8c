//! Synthetic customers with a known expenditure function.
//!
//! In units of `unit_scale` currency, the noiseless mean is
//!
//! ```text
//! mean(x) = base_cost + Σ coefficients[j]·x[j] + age_quadratic·age²
//!         + interaction·smoker·claim_severity
//! ```
//!
//! and the recorded expenditure is `max(0, unit_scale·(mean(x) + noise_scale·z))`
//! with `z` standard normal. Smoking and claim severity are coupled so their
//! Pearson correlation equals `collinearity_rho` in expectation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{
    encode, CustomerRecord, Dataset, EncodingConfig, FeatureVector, Gender, PriorClaim,
    Provenance, AGE, CLAIM_SEVERITY, FEATURE_COUNT, MAX_AGE, MIN_AGE, SMOKER,
};
use crate::error::{Error, Result};

const CLAIM_KINDS: [PriorClaim; 4] = [
    PriorClaim::Diabetes,
    PriorClaim::Copd,
    PriorClaim::LungCancer,
    PriorClaim::Other,
];

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    pub n: usize,
    pub seed: u64,
    /// Positive constant cost, in units of `unit_scale`.
    pub base_cost: f64,
    /// Linear effect per encoded feature, in units of `unit_scale`.
    pub coefficients: [f64; FEATURE_COUNT],
    /// Coefficient on the squared scaled age.
    pub age_quadratic: f64,
    /// Strength `a` of the smoker × claim-severity interaction.
    pub interaction: f64,
    pub collinearity_rho: f64,
    pub noise_scale: f64,
    /// Currency per model unit.
    pub unit_scale: f64,
    pub encoding: EncodingConfig,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams {
            n: 200,
            seed: 7,
            base_cost: 3.0,
            coefficients: [0.3, 5.0, -1.0, 2.0, 1.5, 6.0],
            age_quadratic: 0.0,
            interaction: 8.0,
            collinearity_rho: 0.5,
            noise_scale: 0.5,
            unit_scale: 1000.0,
            encoding: EncodingConfig::default(),
        }
    }
}

impl GeneratorParams {
    pub fn validate(&self) -> Result<()> {
        self.encoding.validate()?;
        if self.n < 10 {
            return Err(Error::validation(format!("n = {} but at least 10 required", self.n)));
        }
        if !(self.noise_scale.is_finite() && self.noise_scale >= 0.0) {
            return Err(Error::validation("noise_scale must be finite and >= 0"));
        }
        if !(self.base_cost.is_finite() && self.base_cost > 0.0) {
            return Err(Error::validation("base_cost must be positive"));
        }
        if !(self.unit_scale.is_finite() && self.unit_scale > 0.0) {
            return Err(Error::validation("unit_scale must be positive"));
        }
        if self
            .coefficients
            .iter()
            .chain([&self.age_quadratic, &self.interaction])
            .any(|c| !c.is_finite())
        {
            return Err(Error::validation("generator coefficients must be finite"));
        }
        if !(0.0..1.0).contains(&self.collinearity_rho) {
            return Err(Error::validation(format!(
                "collinearity_rho = {} outside [0, 1)",
                self.collinearity_rho
            )));
        }
        let max = self.max_collinearity();
        if self.collinearity_rho > max {
            return Err(Error::validation(format!(
                "collinearity_rho = {} exceeds {max:.4}, the largest correlation reachable \
                 with this severity map",
                self.collinearity_rho
            )));
        }
        let (lo, hi) = self.age_bounds();
        if lo > hi {
            return Err(Error::validation("age_range does not intersect [18, 100]"));
        }
        Ok(())
    }

    /// Largest smoker/severity correlation the coupling can produce: both
    /// flags always agree and severities are drawn from the claim kinds.
    pub fn max_collinearity(&self) -> f64 {
        let sev: Vec<f64> = CLAIM_KINDS.iter().map(|&c| self.encoding.severity(c)).collect();
        let m = sev.iter().sum::<f64>() / sev.len() as f64;
        let v = sev.iter().map(|s| (s - m).powi(2)).sum::<f64>() / sev.len() as f64;
        if m == 0.0 {
            return 0.0;
        }
        m / (2.0 * v + m * m).sqrt()
    }

    fn age_bounds(&self) -> (u32, u32) {
        let (lo, hi) = self.encoding.age_range;
        let lo = (lo.ceil().max(f64::from(MIN_AGE))) as u32;
        let hi = (hi.floor().min(f64::from(MAX_AGE))) as u32;
        (lo, hi)
    }

    /// Noiseless mean expenditure in currency.
    pub fn mean_expenditure(&self, x: &FeatureVector) -> f64 {
        self.unit_scale * self.mean_units(x)
    }

    fn mean_units(&self, x: &FeatureVector) -> f64 {
        let linear: f64 = self.coefficients.iter().zip(x.0).map(|(c, v)| c * v).sum();
        self.base_cost
            + linear
            + self.age_quadratic * x[AGE] * x[AGE]
            + self.interaction * x[SMOKER] * x[CLAIM_SEVERITY]
    }
}

/// Draws `params.n` customers; identical params give identical datasets.
pub fn generate_synthetic(params: &GeneratorParams) -> Result<Dataset> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let coupling = if params.collinearity_rho > 0.0 {
        params.collinearity_rho / params.max_collinearity()
    } else {
        0.0
    };
    let (age_lo, age_hi) = params.age_bounds();
    let (inc_lo, inc_hi) = params.encoding.income_range;
    let inc_lo = inc_lo.max(0.0);

    let mut records = Vec::with_capacity(params.n);
    for id in 1..=params.n as u64 {
        // fixed draw order keeps the stream aligned whatever branch is taken
        let male = rng.random_bool(0.5);
        let age = rng.random_range(age_lo..=age_hi);
        let income_u: f64 = rng.random();
        let smoker = rng.random_bool(0.5);
        let coupled = rng.random::<f64>() < coupling;
        let claim_indep = rng.random_bool(0.5);
        let kind = CLAIM_KINDS[rng.random_range(0..CLAIM_KINDS.len())];
        let z: f64 = rng.sample(StandardNormal);

        let has_claim = if coupled { smoker } else { claim_indep };
        let mut record = CustomerRecord {
            id,
            gender: if male { Gender::Male } else { Gender::Female },
            age,
            income: (inc_lo + income_u * (inc_hi - inc_lo)).round(),
            smoker,
            prior_claim: if has_claim { kind } else { PriorClaim::None },
            expenditure: 0.0,
        };
        let x = encode(&record, &params.encoding);
        let units = params.mean_units(&x) + params.noise_scale * z;
        record.expenditure = (params.unit_scale * units).max(0.0);
        records.push(record);
    }
    Dataset::new(records, Provenance::Synthetic(params.clone()))
}

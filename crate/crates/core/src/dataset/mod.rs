//! Customer records, their numeric encoding, and the train/test split.
//!
//! A [`CustomerRecord`] carries the demographic, smoking and claim-history
//! fields of one policy holder together with the observed expenditure. Every
//! model consumes the same six-slot [`FeatureVector`]:
//!
//! | slot | meaning          | range  |
//! |------|------------------|--------|
//! | 0    | gender (male=1)  | {0,1}  |
//! | 1    | age, min-max     | [0,1]  |
//! | 2    | income, min-max  | [0,1]  |
//! | 3    | smoker           | {0,1}  |
//! | 4    | claim present    | {0,1}  |
//! | 5    | claim severity   | [0,1]  |
//!
//! The prior claim is split into a presence bit and a severity score so that
//! five predictors become six network inputs.

mod csv_io;
mod synthetic;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub use csv_io::{load_csv, load_csv_for_prediction, read_csv, write_csv, CSV_HEADER};
pub use synthetic::{generate_synthetic, GeneratorParams};

pub const FEATURE_COUNT: usize = 6;
pub const GENDER: usize = 0;
pub const AGE: usize = 1;
pub const INCOME: usize = 2;
pub const SMOKER: usize = 3;
pub const CLAIM_PRESENT: usize = 4;
pub const CLAIM_SEVERITY: usize = 5;

pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "gender",
    "age",
    "income",
    "smoker",
    "claim_present",
    "claim_severity",
];

pub const MIN_AGE: u32 = 18;
pub const MAX_AGE: u32 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gender {
    Female,
    Male,
}

impl FromStr for Gender {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "female" => Ok(Gender::Female),
            "male" => Ok(Gender::Male),
            other => Err(format!("unknown gender `{other}`")),
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gender::Female => "female",
            Gender::Male => "male",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PriorClaim {
    None,
    Diabetes,
    Copd,
    LungCancer,
    Other,
}

impl PriorClaim {
    pub const ALL: [PriorClaim; 5] = [
        PriorClaim::None,
        PriorClaim::Diabetes,
        PriorClaim::Copd,
        PriorClaim::LungCancer,
        PriorClaim::Other,
    ];

    pub fn key(self) -> &'static str {
        match self {
            PriorClaim::None => "none",
            PriorClaim::Diabetes => "diabetes",
            PriorClaim::Copd => "copd",
            PriorClaim::LungCancer => "lung_cancer",
            PriorClaim::Other => "other",
        }
    }
}

impl FromStr for PriorClaim {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim().to_ascii_lowercase();
        PriorClaim::ALL
            .into_iter()
            .find(|c| c.key() == s)
            .ok_or_else(|| format!("unknown previous_claim `{s}`"))
    }
}

impl fmt::Display for PriorClaim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

/// One policy holder.
#[derive(Debug, Clone, PartialEq)]
pub struct CustomerRecord {
    pub id: u64,
    pub gender: Gender,
    pub age: u32,
    pub income: f64,
    pub smoker: bool,
    pub prior_claim: PriorClaim,
    pub expenditure: f64,
}

impl CustomerRecord {
    pub fn validate(&self) -> Result<()> {
        if self.id == 0 {
            return Err(Error::validation("record id must be a positive integer"));
        }
        if !(MIN_AGE..=MAX_AGE).contains(&self.age) {
            return Err(Error::validation(format!(
                "record {}: age {} outside [{MIN_AGE}, {MAX_AGE}]",
                self.id, self.age
            )));
        }
        if !(self.income.is_finite() && self.income >= 0.0) {
            return Err(Error::validation(format!(
                "record {}: income {} must be finite and >= 0",
                self.id, self.income
            )));
        }
        if !(self.expenditure.is_finite() && self.expenditure >= 0.0) {
            return Err(Error::validation(format!(
                "record {}: expenditure {} must be finite and >= 0",
                self.id, self.expenditure
            )));
        }
        Ok(())
    }
}

/// Ranges and claim-severity scores used by [`encode`].
#[derive(Debug, Clone, PartialEq)]
pub struct EncodingConfig {
    pub age_range: (f64, f64),
    pub income_range: (f64, f64),
    /// Severity per claim kind, indexed in [`PriorClaim::ALL`] order.
    pub claim_severity: [f64; 5],
}

impl Default for EncodingConfig {
    fn default() -> Self {
        EncodingConfig {
            age_range: (18.0, 80.0),
            income_range: (0.0, 150_000.0),
            claim_severity: [0.0, 0.4, 0.6, 1.0, 0.5],
        }
    }
}

impl EncodingConfig {
    pub fn severity(&self, claim: PriorClaim) -> f64 {
        self.claim_severity[claim as usize]
    }

    pub fn validate(&self) -> Result<()> {
        let (alo, ahi) = self.age_range;
        let (ilo, ihi) = self.income_range;
        if !(alo.is_finite() && ahi.is_finite() && alo < ahi) {
            return Err(Error::validation(format!("age_range [{alo}, {ahi}] needs lo < hi")));
        }
        if !(ilo.is_finite() && ihi.is_finite() && ilo < ihi) {
            return Err(Error::validation(format!(
                "income_range [{ilo}, {ihi}] needs lo < hi"
            )));
        }
        if self.severity(PriorClaim::None) != 0.0 {
            return Err(Error::validation("severity of `none` must be 0"));
        }
        for c in PriorClaim::ALL {
            let s = self.severity(c);
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::validation(format!("severity of `{c}` = {s} outside [0,1]")));
            }
        }
        Ok(())
    }
}

/// Six encoded inputs, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector(pub [f64; FEATURE_COUNT]);

impl FeatureVector {
    pub fn new(values: [f64; FEATURE_COUNT]) -> Result<Self> {
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::validation(format!(
                "feature {} = {v} outside [0,1]",
                FEATURE_NAMES[i]
            )));
        }
        Ok(FeatureVector(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::Index<usize> for FeatureVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

fn min_max(v: f64, (lo, hi): (f64, f64)) -> f64 {
    ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
}

/// Encodes a record; numeric fields outside the configured ranges are clamped.
pub fn encode(record: &CustomerRecord, config: &EncodingConfig) -> FeatureVector {
    let severity = config.severity(record.prior_claim);
    FeatureVector([
        match record.gender {
            Gender::Female => 0.0,
            Gender::Male => 1.0,
        },
        min_max(f64::from(record.age), config.age_range),
        min_max(record.income, config.income_range),
        if record.smoker { 1.0 } else { 0.0 },
        if record.prior_claim == PriorClaim::None { 0.0 } else { 1.0 },
        severity,
    ])
}

#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Loaded,
    Synthetic(GeneratorParams),
}

/// A non-empty, id-unique list of records.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<CustomerRecord>,
    provenance: Provenance,
}

impl Dataset {
    pub fn new(records: Vec<CustomerRecord>, provenance: Provenance) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::validation("empty dataset"));
        }
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            r.validate()?;
            if !seen.insert(r.id) {
                return Err(Error::validation(format!("duplicate record id {}", r.id)));
            }
        }
        Ok(Dataset {
            records,
            provenance,
        })
    }

    pub fn records(&self) -> &[CustomerRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Generator parameters when the data is synthetic.
    pub fn generator(&self) -> Option<&GeneratorParams> {
        match &self.provenance {
            Provenance::Synthetic(p) => Some(p),
            Provenance::Loaded => None,
        }
    }

    pub fn ids(&self) -> Vec<u64> {
        self.records.iter().map(|r| r.id).collect()
    }

    pub fn features(&self, config: &EncodingConfig) -> Vec<FeatureVector> {
        self.records.iter().map(|r| encode(r, config)).collect()
    }

    pub fn targets(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.expenditure).collect()
    }

    /// Records whose ids are in `ids`, in this dataset's order.
    pub fn select(&self, ids: &HashSet<u64>) -> Result<Dataset> {
        let records = self
            .records
            .iter()
            .filter(|r| ids.contains(&r.id))
            .cloned()
            .collect();
        Dataset::new(records, self.provenance.clone())
    }

    /// Records at the given positions, in the order given.
    pub fn subset(&self, positions: &[usize]) -> Result<Dataset> {
        let records = positions.iter().map(|&i| self.records[i].clone()).collect();
        Dataset::new(records, self.provenance.clone())
    }
}

/// Seeded permutation of `0..n`.
pub(crate) fn shuffled_positions(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    idx
}

/// Shuffles with `seed` and splits into a training half of `ceil(n/2)`
/// records and a test half with the rest. Each half keeps the original
/// record order.
pub fn split_half(dataset: &Dataset, seed: u64) -> Result<(Dataset, Dataset)> {
    let n = dataset.len();
    if n < 2 {
        return Err(Error::validation(format!(
            "split needs at least 2 records, got {n}"
        )));
    }
    split_fraction(dataset, n.div_ceil(2), seed)
}

/// Seeded split with exactly `n_first` records in the first part.
pub(crate) fn split_fraction(
    dataset: &Dataset,
    n_first: usize,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    let idx = shuffled_positions(dataset.len(), seed);
    let mut first = idx[..n_first].to_vec();
    let mut second = idx[n_first..].to_vec();
    first.sort_unstable();
    second.sort_unstable();
    Ok((dataset.subset(&first)?, dataset.subset(&second)?))
}

/// The five customers listed as the published example of the record schema.
pub fn table1_records() -> Vec<CustomerRecord> {
    use Gender::*;
    let row = |id, gender, age, income, smoker, prior_claim, expenditure| CustomerRecord {
        id,
        gender,
        age,
        income,
        smoker,
        prior_claim,
        expenditure,
    };
    vec![
        row(1, Female, 58, 0.0, true, PriorClaim::Copd, 10_250.0),
        row(2, Male, 32, 83_000.0, false, PriorClaim::None, 0.0),
        row(3, Male, 45, 67_000.0, true, PriorClaim::LungCancer, 148_765.0),
        row(4, Female, 24, 45_000.0, false, PriorClaim::None, 100.0),
        row(5, Female, 37, 30_000.0, false, PriorClaim::Diabetes, 5_200.0),
    ]
}

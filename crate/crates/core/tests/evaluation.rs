use premium_lab::dataset::{
    generate_synthetic, split_half, CustomerRecord, Dataset, EncodingConfig, FeatureVector, Gender,
    GeneratorParams, PriorClaim, Provenance,
};
use premium_lab::evaluation::{
    accuracy_band, compare, learning_curve, overfit_scan, BandConfig, CompareOptions, Family, FittedModel, Ladder,
    ModelSpec, OverfitConfig,
};
use premium_lab::glm::{fit_glm, predict_glm, LinkKind};
use premium_lab::Error;

fn record(id: u64, expenditure: f64) -> CustomerRecord {
    CustomerRecord {
        id,
        gender: if id.is_multiple_of(2) { Gender::Female } else { Gender::Male },
        age: 20 + (id % 50) as u32,
        income: 1000.0 * id as f64,
        smoker: id.is_multiple_of(3),
        prior_claim: PriorClaim::ALL[id as usize % 5],
        expenditure,
    }
}

fn book(expenditures: &[f64]) -> Dataset {
    let recs = expenditures.iter().enumerate().map(|(k, &e)| record(k as u64 + 1, e)).collect();
    Dataset::new(recs, Provenance::Loaded).unwrap()
}

#[test]
fn perfect_predictor_has_unit_band() {
    let p = GeneratorParams { n: 200, noise_scale: 0.0, interaction: 0.0, age_quadratic: 0.0, ..Default::default() };
    let ds = generate_synthetic(&p).unwrap();
    let m = fit_glm(&ds, &p.encoding, LinkKind::Identity).unwrap();
    let band = accuracy_band(&m, &ds, &p.encoding, &BandConfig::default()).unwrap();
    assert!((band.ratio_min - 1.0).abs() < 1e-9 && (band.ratio_max - 1.0).abs() < 1e-9, "{band:?}");
    assert_eq!(band.to_string(), "100%~100%");
}

#[test]
fn band_trims_floor_of_fraction_from_each_end() {
    // constant prediction over actuals 20000/k gives ratios k = 1..=20
    let actuals: Vec<f64> = (1..=20).map(|k| 20_000.0 / k as f64).collect();
    let ds = book(&actuals);
    let predictor = |_: &FeatureVector| 20_000.0;
    let enc = EncodingConfig::default();
    let cfg = BandConfig { trim_fraction: 0.1, floor: 1.0 };
    let band = accuracy_band(&predictor, &ds, &enc, &cfg).unwrap();
    assert_eq!((band.ratio_min, band.ratio_max), (3.0, 18.0));
    assert_eq!(band.n_evaluated, 20);

    // 0.05 * 20 = 1 dropped per end
    let band = accuracy_band(&predictor, &ds, &enc, &BandConfig { trim_fraction: 0.05, floor: 1.0 }).unwrap();
    assert_eq!((band.ratio_min, band.ratio_max), (2.0, 19.0));
    // 0.04 * 20 floors to 0
    let band = accuracy_band(&predictor, &ds, &enc, &BandConfig { trim_fraction: 0.04, floor: 1.0 }).unwrap();
    assert_eq!((band.ratio_min, band.ratio_max), (1.0, 20.0));
}

#[test]
fn band_widens_as_trimming_shrinks() {
    let p = GeneratorParams::default();
    let ds = generate_synthetic(&p).unwrap();
    let (train, test) = split_half(&ds, 1).unwrap();
    let m = fit_glm(&train, &p.encoding, LinkKind::Identity).unwrap();
    let mut last: Option<(f64, f64)> = None;
    for trim in [0.2, 0.1, 0.05, 0.0] {
        let b = accuracy_band(&m, &test, &p.encoding, &BandConfig { trim_fraction: trim, ..Default::default() }).unwrap();
        if let Some((lo, hi)) = last {
            assert!(b.ratio_min <= lo && b.ratio_max >= hi);
        }
        last = Some((b.ratio_min, b.ratio_max));
    }
}

#[test]
fn floor_excludes_small_claims() {
    let ds = book(&[100.0, 499.0, 500.0, 1000.0]);
    let enc = EncodingConfig::default();
    let b = accuracy_band(&|_: &FeatureVector| 1000.0, &ds, &enc, &BandConfig::default()).unwrap();
    assert_eq!((b.n_evaluated, b.n_excluded), (2, 2));
    assert_eq!((b.ratio_min, b.ratio_max), (1.0, 2.0));

    let tiny = book(&[10.0, 20.0]);
    let err = accuracy_band(&|_: &FeatureVector| 1.0, &tiny, &enc, &BandConfig::default()).unwrap_err();
    assert!(matches!(err, Error::Validation(_)));
    assert!(accuracy_band(&|_: &FeatureVector| 1.0, &ds, &enc, &BandConfig { trim_fraction: 0.3, floor: 1.0 }).is_err());
}

#[test]
fn single_step_glm_never_reports_a_threshold() {
    let p = GeneratorParams { noise_scale: 1.0, ..Default::default() };
    let ds = generate_synthetic(&p).unwrap();
    let r = overfit_scan(&ModelSpec::default_for(Family::Glm), &Ladder::Single, &ds, &p.encoding, &OverfitConfig::default()).unwrap();
    assert_eq!(r.steps.len(), 1);
    assert!(!r.threshold_found());
}

#[test]
fn noiseless_additive_data_does_not_overfit_the_gam() {
    let p = GeneratorParams { noise_scale: 0.0, interaction: 0.0, ..Default::default() };
    let ds = generate_synthetic(&p).unwrap();
    let r = overfit_scan(&ModelSpec::default_for(Family::Gam), &Ladder::default_lambdas(), &ds, &p.encoding, &OverfitConfig::default()).unwrap();
    assert_eq!(r.threshold, None, "{}", r.to_csv());
}

#[test]
fn overfit_scan_is_deterministic_and_checks_ladders() {
    let p = GeneratorParams { n: 120, noise_scale: 1.0, ..Default::default() };
    let ds = generate_synthetic(&p).unwrap();
    let ladder = Ladder::Epochs(vec![50, 100, 150, 200]);
    let spec = ModelSpec::default_for(Family::Ann);
    let a = overfit_scan(&spec, &ladder, &ds, &p.encoding, &OverfitConfig::default()).unwrap();
    let b = overfit_scan(&spec, &ladder, &ds, &p.encoding, &OverfitConfig::default()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.to_csv().lines().count(), 5);
    assert!(overfit_scan(&spec, &Ladder::Single, &ds, &p.encoding, &OverfitConfig::default()).is_err());
}

#[test]
fn compare_rejects_shared_records() {
    let p = GeneratorParams::default();
    let ds = generate_synthetic(&p).unwrap();
    let (train, _) = split_half(&ds, 0).unwrap();
    let m = ModelSpec::default_for(Family::Glm).fit(&train, &p.encoding).unwrap();
    let err = compare(&[m], &train, &ds, &p.encoding, &CompareOptions::default()).unwrap_err();
    assert!(matches!(err, Error::Leakage(_)), "{err:?}");
}

#[test]
fn report_tables_have_one_row_per_model() {
    let p = GeneratorParams::default();
    let ds = generate_synthetic(&p).unwrap();
    let (train, test) = split_half(&ds, 0).unwrap();
    let glm = ModelSpec::default_for(Family::Glm).fit(&train, &p.encoding).unwrap();
    let report = compare(std::slice::from_ref(&glm), &train, &test, &p.encoding, &CompareOptions::default()).unwrap();
    let md = report.to_markdown();
    assert_eq!(md.lines().filter(|l| l.starts_with("| GLM |")).count(), 2);
    assert!(md.contains("| GLM | Normal | not detected |"));
    assert_eq!(report.to_csv().lines().count(), 2);

    // a single test row still yields a band
    let one = test.subset(&[test.len() - 1]).unwrap();
    let r = compare(std::slice::from_ref(&glm), &train, &one, &p.encoding, &CompareOptions { band: BandConfig { floor: 1.0, ..Default::default() }, ..Default::default() }).unwrap();
    let b = r.models[0].band;
    assert_eq!(b.ratio_min, b.ratio_max);
    let x = one.features(&p.encoding)[0];
    let FittedModel::Glm(g) = &glm else { unreachable!() };
    assert_eq!(b.ratio_min, predict_glm(g, &x) / one.targets()[0]);
}

#[test]
fn learning_curve_validates_its_grid() {
    let spec = ModelSpec::default_for(Family::Gam);
    let ladder = Ladder::Lambdas(vec![1.0, 0.1, 0.01]);
    let p = GeneratorParams::default();
    let o = OverfitConfig::default();
    assert!(learning_curve(&spec, &ladder, &p, &[200, 100], &[0], &o).is_err());
    assert!(learning_curve(&spec, &ladder, &p, &[100, 100], &[0], &o).is_err());
    assert!(learning_curve(&spec, &ladder, &p, &[100], &[], &o).is_err());
    let c = learning_curve(&spec, &ladder, &p, &[100], &[3], &o).unwrap();
    assert_eq!(c.cells.len(), 1);
    assert_eq!(c.to_csv().lines().count(), 2);
    let again = learning_curve(&spec, &ladder, &p, &[100], &[3], &o).unwrap();
    assert_eq!(c, again);
}

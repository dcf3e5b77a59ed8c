use premium_lab::ann::TrainingConfig;
use premium_lab::artifact::{parse_model, render_model};
use premium_lab::dataset::{generate_synthetic, EncodingConfig, GeneratorParams};
use premium_lab::evaluation::{predict_dataset, Family, FittedModel, ModelSpec};
use premium_lab::gam::add_interaction;

fn round_trip(model: &FittedModel, enc: &EncodingConfig) -> FittedModel {
    let text = render_model(model, enc);
    let (back, enc2) = parse_model(&text).unwrap();
    assert_eq!(&enc2, enc);
    assert_eq!(render_model(&back, &enc2), text, "rendering is not stable");
    back
}

#[test]
fn every_family_round_trips_exactly() {
    let enc = EncodingConfig { age_range: (20.0, 75.0), ..Default::default() };
    let p = GeneratorParams { n: 150, seed: 4, encoding: enc.clone(), ..Default::default() };
    let ds = generate_synthetic(&p).unwrap();
    for family in [Family::Glm, Family::Gam, Family::Ann] {
        let spec = match ModelSpec::default_for(family) {
            ModelSpec::Ann { topology, .. } => ModelSpec::Ann {
                topology,
                training: TrainingConfig { max_epochs: 200, early_stop_patience: 50, ..Default::default() },
            },
            other => other,
        };
        let model = spec.fit(&ds, &enc).unwrap();
        let back = round_trip(&model, &enc);
        assert_eq!(back, model, "{family}");
        assert_eq!(predict_dataset(&back, &ds, &enc), predict_dataset(&model, &ds, &enc));
    }
}

#[test]
fn gam_with_interaction_round_trips() {
    let p = GeneratorParams { n: 150, interaction: 8.0, ..Default::default() };
    let ds = generate_synthetic(&p).unwrap();
    let FittedModel::Gam(base) = ModelSpec::default_for(Family::Gam).fit(&ds, &p.encoding).unwrap() else {
        unreachable!()
    };
    let with = FittedModel::Gam(add_interaction(&base, 3, 5, &ds, &p.encoding).unwrap());
    assert_eq!(round_trip(&with, &p.encoding), with);
}

#[test]
fn tampered_artifacts_are_rejected() {
    let p = GeneratorParams { n: 60, ..Default::default() };
    let ds = generate_synthetic(&p).unwrap();
    let spec = ModelSpec::Ann {
        topology: Default::default(),
        training: TrainingConfig { max_epochs: 20, early_stop_patience: 10, ..Default::default() },
    };
    let text = render_model(&spec.fit(&ds, &p.encoding).unwrap(), &p.encoding);
    assert!(parse_model(&text.replacen("rows = 8", "rows = 7", 1)).is_err());
    assert!(parse_model(&text.replacen("hidden = 8", "hidden = 9", 1)).is_err());
    assert!(parse_model(&text.replacen("[scaler]", "[scale]", 1)).is_err());
}

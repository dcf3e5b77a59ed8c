use premium_lab::ann::{
    backprop, forward, gradient_check, init_weights, predict_ann, train, NetworkTopology,
    TrainingConfig, Weights,
};
use premium_lab::dataset::{
    encode, generate_synthetic, table1_records, Dataset, EncodingConfig, FeatureVector,
    GeneratorParams, Provenance,
};
use premium_lab::Error;

/// Two-layer formula written out longhand, independent of the library's
/// layer loop.
fn straight_line(w: &Weights, x: &[f64]) -> f64 {
    let (l1, l2) = (&w.layers[0], &w.layers[1]);
    let mut out = l2.bias[0];
    for r in 0..8 {
        let mut z = l1.bias[r];
        for c in 0..6 {
            z += l1.weights[r * 6 + c] * x[c];
        }
        let h = 1.0 / (1.0 + (-z).exp());
        out += l2.weights[r] * h;
    }
    out
}

fn rmse(pred: impl Fn(&FeatureVector) -> f64, ds: &Dataset, enc: &EncodingConfig) -> f64 {
    let f = ds.features(enc);
    let se: f64 = f.iter().zip(ds.targets()).map(|(x, y)| (pred(x) - y).powi(2)).sum();
    (se / ds.len() as f64).sqrt()
}

#[test]
fn forward_matches_longhand_oracle() {
    let w = init_weights(&NetworkTopology::default(), 42).unwrap();
    let x = encode(&table1_records()[1], &EncodingConfig::default());
    let got = forward(&w, x.as_slice()).output;
    assert!((got - straight_line(&w, x.as_slice())).abs() < 1e-12);
}

#[test]
fn gradients_match_central_differences() {
    let enc = EncodingConfig::default();
    let xs: Vec<FeatureVector> = table1_records().iter().map(|r| encode(r, &enc)).collect();
    for seed in 0..20 {
        let w = init_weights(&NetworkTopology::default(), seed).unwrap();
        let x = &xs[seed as usize % xs.len()];
        let err = gradient_check(&w, (x, 0.37), 1e-6);
        assert!(err < 1e-5, "seed {seed}: {err}");
        let coarse = gradient_check(&w, (x, 0.37), 2e-6);
        assert!(coarse < 1e-4, "seed {seed}: {coarse}");
    }
}

#[test]
fn zero_residual_gives_zero_output_bias_gradient() {
    let t = NetworkTopology::default();
    let w = Weights::zeros(&t);
    let x = [0.2, 0.4, 0.1, 1.0, 0.0, 0.0];
    let mut grad = Weights::zeros(&t);
    let target = forward(&w, &x).output;
    assert_eq!(backprop(&w, &x, target, &mut grad), 0.0);
    assert_eq!(grad.layers[1].bias[0], 0.0);
}

#[test]
fn constant_targets_are_learned() {
    let p = GeneratorParams { n: 60, seed: 3, ..Default::default() };
    let ds = generate_synthetic(&p).unwrap();
    let c = 5000.0;
    let recs = ds
        .records()
        .iter()
        .cloned()
        .map(|mut r| {
            r.expenditure = c;
            r
        })
        .collect();
    let ds = Dataset::new(recs, Provenance::Loaded).unwrap();
    let cfg = TrainingConfig { max_epochs: 2000, ..Default::default() };
    let model = train(&ds, &p.encoding, &NetworkTopology::default(), &cfg).unwrap();
    let best = model.train_loss.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(best < 1e-6, "best training MSE {best:e}");
    for x in [[0.0; 6], [1.0; 6], [0.5, 0.2, 0.9, 1.0, 0.0, 0.3]] {
        let x = FeatureVector::new(x).unwrap();
        assert!((predict_ann(&model, &x) - c).abs() < 0.01 * c);
    }
}

#[test]
fn learns_noiseless_linear_map() {
    let p = GeneratorParams { n: 200, seed: 5, interaction: 0.0, noise_scale: 0.0, ..Default::default() };
    let ds = generate_synthetic(&p).unwrap();
    let y = ds.targets();
    let range = y.iter().cloned().fold(f64::MIN, f64::max) - y.iter().cloned().fold(f64::MAX, f64::min);
    let cfg = TrainingConfig { max_epochs: 10_000, early_stop_patience: 500, ..Default::default() };
    let model = train(&ds, &p.encoding, &NetworkTopology::default(), &cfg).unwrap();
    let e = rmse(|x| predict_ann(&model, x), &ds, &p.encoding);
    assert!(e <= 0.02 * range, "rmse {e} vs range {range}");
}

#[test]
fn huge_learning_rate_diverges() {
    let p = GeneratorParams { n: 100, ..Default::default() };
    let ds = generate_synthetic(&p).unwrap();
    let cfg = TrainingConfig { learning_rate: 1e6, ..Default::default() };
    let err = train(&ds, &p.encoding, &NetworkTopology::default(), &cfg).unwrap_err();
    assert!(matches!(err, Error::Divergence { .. }), "{err:?}");
}

#[test]
fn training_is_seed_deterministic_and_early_stopping_keeps_best() {
    let p = GeneratorParams { n: 120, seed: 11, ..Default::default() };
    let ds = generate_synthetic(&p).unwrap();
    let cfg = TrainingConfig { seed: 9, max_epochs: 600, early_stop_patience: 50, ..Default::default() };
    let a = train(&ds, &p.encoding, &NetworkTopology::default(), &cfg).unwrap();
    let b = train(&ds, &p.encoding, &NetworkTopology::default(), &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.train_loss.len(), a.stopped_epoch);
    assert_eq!(a.val_loss.len(), a.stopped_epoch);
    let min_val = a.val_loss.iter().cloned().fold(f64::INFINITY, f64::min);
    assert_eq!(a.val_loss[a.best_epoch - 1], min_val);
    assert!(a.stopped_epoch - a.best_epoch <= cfg.early_stop_patience);
    assert_eq!(a.loss_csv().lines().count(), a.stopped_epoch + 1);
}

#[test]
fn early_descent_is_monotone() {
    let p = GeneratorParams::default();
    let ds = generate_synthetic(&p).unwrap();
    for lr in [0.01, 0.05] {
        let cfg = TrainingConfig { learning_rate: lr, max_epochs: 50, early_stop_patience: 50, ..Default::default() };
        let m = train(&ds, &p.encoding, &NetworkTopology::default(), &cfg).unwrap();
        assert_eq!(m.train_loss.len(), 50);
        assert!(m.train_loss.windows(2).all(|w| w[1] <= w[0]), "lr {lr}: {:?}", m.train_loss);
    }
}

#[test]
fn zero_learning_rate_keeps_initial_weights() {
    let p = GeneratorParams { n: 50, ..Default::default() };
    let ds = generate_synthetic(&p).unwrap();
    let cfg = TrainingConfig { learning_rate: 0.0, seed: 4, max_epochs: 20, early_stop_patience: 5, ..Default::default() };
    let m = train(&ds, &p.encoding, &NetworkTopology::default(), &cfg).unwrap();
    assert_eq!(m.weights, init_weights(&NetworkTopology::default(), 4).unwrap());
    let x = ds.features(&p.encoding)[0];
    assert!(predict_ann(&m, &x).is_finite());
}

#[test]
fn predictions_are_scaled_forward_outputs_and_bounded() {
    let p = GeneratorParams { n: 80, seed: 2, ..Default::default() };
    let ds = generate_synthetic(&p).unwrap();
    let cfg = TrainingConfig { max_epochs: 300, early_stop_patience: 100, ..Default::default() };
    let m = train(&ds, &p.encoding, &NetworkTopology::default(), &cfg).unwrap();
    let out = &m.weights.layers[1];
    let bound = out.weights.iter().map(|w| w.abs()).sum::<f64>() + out.bias[0].abs();
    let (lo, hi) = (m.scaler.unscale(-bound), m.scaler.unscale(bound));
    for x in ds.features(&p.encoding) {
        let y = predict_ann(&m, &x);
        assert_eq!(y, predict_ann(&m, &x));
        assert_eq!(y, m.scaler.unscale(forward(&m.weights, x.as_slice()).output));
        assert!(lo <= y && y <= hi);
    }
}

#[test]
fn too_few_records_rejected() {
    let ds = Dataset::new(table1_records(), Provenance::Loaded).unwrap();
    let err = train(&ds, &EncodingConfig::default(), &NetworkTopology::default(), &TrainingConfig::default());
    assert!(matches!(err, Err(Error::Validation(_))));
}

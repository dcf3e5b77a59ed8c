//! Back-propagation network: sigmoid hidden layers, one linear output unit,
//! full-batch gradient descent on min-max scaled targets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{shuffled_positions, Dataset, EncodingConfig, FeatureVector, FEATURE_COUNT};
use crate::error::{Error, Result};

mod gradient;

pub use gradient::{backprop, gradient_check};

/// Fewest training records `train` accepts.
pub const MIN_TRAIN: usize = 10;
/// Training loss above this multiple of the first epoch's counts as blow-up.
pub const DIVERGENCE_FACTOR: f64 = 10.0;
/// Consecutive blown-up epochs before training gives up.
pub const DIVERGENCE_EPOCHS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkTopology {
    pub input_count: usize,
    pub hidden_layers: Vec<usize>,
    pub output_count: usize,
}

impl Default for NetworkTopology {
    fn default() -> Self {
        NetworkTopology {
            input_count: FEATURE_COUNT,
            hidden_layers: vec![8],
            output_count: 1,
        }
    }
}

impl NetworkTopology {
    pub fn validate(&self) -> Result<()> {
        if self.input_count != FEATURE_COUNT {
            return Err(Error::validation(format!(
                "network takes {} inputs but feature vectors have {FEATURE_COUNT}",
                self.input_count
            )));
        }
        if self.output_count != 1 {
            return Err(Error::validation(format!(
                "network must have exactly one output, got {}",
                self.output_count
            )));
        }
        if self.hidden_layers.contains(&0) {
            return Err(Error::validation("hidden layer widths must be at least 1"));
        }
        Ok(())
    }

    /// Layer widths from input to output.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.input_count];
        w.extend(&self.hidden_layers);
        w.push(self.output_count);
        w
    }
}

/// One affine map `next × prev`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Layer {
            rows,
            cols,
            weights: vec![0.0; rows * cols],
            bias: vec![0.0; rows],
        }
    }

    pub fn weight(&self, r: usize, c: usize) -> f64 {
        self.weights[r * self.cols + c]
    }

    fn apply(&self, input: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|r| {
                let row = &self.weights[r * self.cols..(r + 1) * self.cols];
                self.bias[r] + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    pub layers: Vec<Layer>,
}

impl Weights {
    pub fn zeros(topology: &NetworkTopology) -> Self {
        let widths = topology.widths();
        Weights {
            layers: widths.windows(2).map(|w| Layer::zeros(w[1], w[0])).collect(),
        }
    }

    pub fn topology(&self) -> NetworkTopology {
        NetworkTopology {
            input_count: self.layers.first().map_or(0, |l| l.cols),
            hidden_layers: self.layers[..self.layers.len().saturating_sub(1)]
                .iter()
                .map(|l| l.rows)
                .collect(),
            output_count: self.layers.last().map_or(0, |l| l.rows),
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Every parameter, layer by layer: weights row-major, then biases.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend(&l.weights);
            out.extend(&l.bias);
        }
        out
    }

    pub fn param_mut(&mut self, mut k: usize) -> &mut f64 {
        for l in &mut self.layers {
            if k < l.weights.len() {
                return &mut l.weights[k];
            }
            k -= l.weights.len();
            if k < l.bias.len() {
                return &mut l.bias[k];
            }
            k -= l.bias.len();
        }
        panic!("parameter index out of range")
    }

    pub fn validate(&self) -> Result<()> {
        for pair in self.layers.windows(2) {
            if pair[0].rows != pair[1].cols {
                return Err(Error::validation("layer shapes do not chain"));
            }
        }
        for l in &self.layers {
            if l.weights.len() != l.rows * l.cols || l.bias.len() != l.rows {
                return Err(Error::validation("layer storage does not match its shape"));
            }
        }
        if self.params().iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("non-finite weight"));
        }
        self.topology().validate()
    }

    /// `self -= rate · grad`.
    fn descend(&mut self, grad: &Weights, rate: f64) {
        for (l, g) in self.layers.iter_mut().zip(&grad.layers) {
            l.weights.iter_mut().zip(&g.weights).for_each(|(w, d)| *w -= rate * d);
            l.bias.iter_mut().zip(&g.bias).for_each(|(b, d)| *b -= rate * d);
        }
    }
}

/// Uniform `[−r, r]` weights with `r = √(6/(fan_in + fan_out))` per layer,
/// zero biases.
pub fn init_weights(topology: &NetworkTopology, seed: u64) -> Result<Weights> {
    topology.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = Weights::zeros(topology);
    for l in &mut weights.layers {
        let r = (6.0 / (l.rows + l.cols) as f64).sqrt();
        for w in &mut l.weights {
            *w = rng.random_range(-r..=r);
        }
    }
    Ok(weights)
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Output of a forward pass. `activations[0]` is the input and the last entry
/// holds the single (scaled) output.
#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    pub output: f64,
    pub activations: Vec<Vec<f64>>,
}

pub fn forward(weights: &Weights, x: &[f64]) -> Forward {
    let mut activations = vec![x.to_vec()];
    let last = weights.layers.len() - 1;
    for (k, layer) in weights.layers.iter().enumerate() {
        let mut z = layer.apply(activations.last().expect("input present"));
        if k < last {
            z.iter_mut().for_each(|v| *v = sigmoid(*v));
        }
        activations.push(z);
    }
    Forward {
        output: activations[last + 1][0],
        activations,
    }
}

/// Affine map of expenditure onto `[0, 1]` over the training targets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetScaler {
    pub min: f64,
    pub max: f64,
}

impl TargetScaler {
    pub fn fit(targets: &[f64]) -> Self {
        let min = targets.iter().copied().fold(f64::INFINITY, f64::min);
        let max = targets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        TargetScaler { min, max }
    }

    /// Constant targets map to 0 with unit span.
    fn span(&self) -> f64 {
        if self.max > self.min {
            self.max - self.min
        } else {
            1.0
        }
    }

    pub fn scale(&self, y: f64) -> f64 {
        (y - self.min) / self.span()
    }

    pub fn unscale(&self, s: f64) -> f64 {
        self.min + s * self.span()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    /// Step size; 0 leaves the initial weights untouched.
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub seed: u64,
    pub validation_fraction: f64,
    pub early_stop_patience: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            learning_rate: 0.3,
            max_epochs: 8000,
            seed: 0,
            validation_fraction: 0.2,
            early_stop_patience: 1000,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::validation(format!(
                "learning_rate must be a nonnegative finite number, got {}",
                self.learning_rate
            )));
        }
        if self.max_epochs == 0 {
            return Err(Error::validation("max_epochs must be at least 1"));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction <= 0.5) {
            return Err(Error::validation(format!(
                "validation_fraction must lie in (0, 0.5], got {}",
                self.validation_fraction
            )));
        }
        if self.early_stop_patience == 0 || self.early_stop_patience > self.max_epochs {
            return Err(Error::validation(format!(
                "early_stop_patience must lie in [1, max_epochs], got {}",
                self.early_stop_patience
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnModel {
    pub topology: NetworkTopology,
    pub training: TrainingConfig,
    pub weights: Weights,
    pub scaler: TargetScaler,
    /// Mean squared error on scaled targets, one entry per epoch run.
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    /// Epochs run; equals the loss history length.
    pub stopped_epoch: usize,
    /// 1-based epoch whose weights were kept (lowest validation loss).
    pub best_epoch: usize,
}

impl AnnModel {
    /// `epoch,train_mse,val_mse`, one row per epoch.
    pub fn loss_csv(&self) -> String {
        let mut out = String::from("epoch,train_mse,val_mse\n");
        for (k, (t, v)) in self.train_loss.iter().zip(&self.val_loss).enumerate() {
            out.push_str(&format!("{},{t},{v}\n", k + 1));
        }
        out
    }
}

pub fn predict_ann(model: &AnnModel, x: &FeatureVector) -> f64 {
    model.scaler.unscale(forward(&model.weights, x.as_slice()).output)
}

/// Mean squared error of `weights` on already-scaled targets.
pub fn mse(weights: &Weights, xs: &[FeatureVector], ts: &[f64]) -> f64 {
    xs.iter()
        .zip(ts)
        .map(|(x, t)| (forward(weights, x.as_slice()).output - t).powi(2))
        .sum::<f64>()
        / xs.len() as f64
}

/// Full-batch gradient descent state. `step` runs one epoch and reports the
/// loss of the weights it started from.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub weights: Weights,
    pub scaler: TargetScaler,
    xs: Vec<FeatureVector>,
    ts: Vec<f64>,
    learning_rate: f64,
    epoch: usize,
}

impl Trainer {
    /// Scales `ys` with a scaler fit on them and starts from `weights`.
    pub fn new(weights: Weights, xs: Vec<FeatureVector>, ys: &[f64], learning_rate: f64) -> Self {
        let scaler = TargetScaler::fit(ys);
        let ts = ys.iter().map(|&y| scaler.scale(y)).collect();
        Trainer {
            weights,
            scaler,
            xs,
            ts,
            learning_rate,
            epoch: 0,
        }
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn step(&mut self) -> f64 {
        let n = self.xs.len() as f64;
        let mut grad = Weights::zeros(&self.weights.topology());
        let mut loss = 0.0;
        for (x, &t) in self.xs.iter().zip(&self.ts) {
            loss += backprop(&self.weights, x.as_slice(), t, &mut grad);
        }
        for l in &mut grad.layers {
            l.weights.iter_mut().for_each(|g| *g /= n);
            l.bias.iter_mut().for_each(|g| *g /= n);
        }
        if self.learning_rate > 0.0 {
            self.weights.descend(&grad, self.learning_rate);
        }
        self.epoch += 1;
        loss / n
    }

    /// Scaled-target MSE of the current weights on other data.
    pub fn loss_on(&self, xs: &[FeatureVector], ys: &[f64]) -> f64 {
        let ts: Vec<f64> = ys.iter().map(|&y| self.scaler.scale(y)).collect();
        mse(&self.weights, xs, &ts)
    }

    pub fn predict(&self, x: &FeatureVector) -> f64 {
        self.scaler.unscale(forward(&self.weights, x.as_slice()).output)
    }
}

pub fn train(
    train: &Dataset,
    config: &EncodingConfig,
    topology: &NetworkTopology,
    tconfig: &TrainingConfig,
) -> Result<AnnModel> {
    if train.len() < MIN_TRAIN {
        return Err(Error::validation(format!(
            "network training needs at least {MIN_TRAIN} records, got {}",
            train.len()
        )));
    }
    train_features(&train.features(config), &train.targets(), topology, tconfig)
}

pub(crate) fn train_features(
    features: &[FeatureVector],
    y: &[f64],
    topology: &NetworkTopology,
    tconfig: &TrainingConfig,
) -> Result<AnnModel> {
    topology.validate()?;
    tconfig.validate()?;
    let n = features.len();
    let n_val = ((n as f64 * tconfig.validation_fraction).round() as usize).clamp(1, n - 1);
    let order = shuffled_positions(n, tconfig.seed);
    let (mut val_idx, mut fit_idx) = (order[..n_val].to_vec(), order[n_val..].to_vec());
    val_idx.sort_unstable();
    fit_idx.sort_unstable();
    let pick = |idx: &[usize]| -> (Vec<FeatureVector>, Vec<f64>) {
        (idx.iter().map(|&i| features[i]).collect(), idx.iter().map(|&i| y[i]).collect())
    };
    let (fit_x, fit_y) = pick(&fit_idx);
    let (val_x, val_y) = pick(&val_idx);

    let weights = init_weights(topology, tconfig.seed)?;
    let mut trainer = Trainer::new(weights, fit_x, &fit_y, tconfig.learning_rate);
    let mut train_loss = Vec::new();
    let mut val_loss = Vec::new();
    let mut best = (f64::INFINITY, trainer.weights.clone(), 0usize);
    let mut initial = None;
    let mut blown = 0;

    for epoch in 1..=tconfig.max_epochs {
        let v = trainer.loss_on(&val_x, &val_y);
        let weights_before = trainer.weights.clone();
        let t = trainer.step();
        let reference = *initial.get_or_insert(t);
        if t > DIVERGENCE_FACTOR * reference {
            blown += 1;
        } else if t.is_finite() {
            blown = 0;
        }
        if !t.is_finite() || !v.is_finite() {
            if blown > 0 {
                return Err(Error::Divergence { epoch, loss: t });
            }
            return Err(Error::Numeric { epoch });
        }
        if blown >= DIVERGENCE_EPOCHS {
            return Err(Error::Divergence { epoch, loss: t });
        }
        train_loss.push(t);
        val_loss.push(v);
        if v < best.0 {
            best = (v, weights_before, epoch);
        }
        if epoch - best.2 >= tconfig.early_stop_patience {
            break;
        }
    }

    let stopped_epoch = train_loss.len();
    Ok(AnnModel {
        topology: topology.clone(),
        training: tconfig.clone(),
        weights: best.1,
        scaler: trainer.scaler,
        train_loss,
        val_loss,
        stopped_epoch,
        best_epoch: best.2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_shapes() {
        let w = init_weights(&NetworkTopology::default(), 1).unwrap();
        assert_eq!((w.layers[0].rows, w.layers[0].cols), (8, 6));
        assert_eq!((w.layers[1].rows, w.layers[1].cols), (1, 8));
        assert_eq!(w.layers[0].bias.len(), 8);
        assert_eq!(w.layers[1].bias.len(), 1);
        assert_eq!(w.param_count(), 8 * 6 + 8 + 8 + 1);
        assert_eq!(w.topology(), NetworkTopology::default());
    }

    #[test]
    fn init_is_bounded_and_seeded() {
        let t = NetworkTopology::default();
        let a = init_weights(&t, 42).unwrap();
        assert_eq!(a, init_weights(&t, 42).unwrap());
        assert_ne!(a, init_weights(&t, 43).unwrap());
        let r = (6.0f64 / 14.0).sqrt();
        assert!((r - 0.6547).abs() < 1e-4);
        assert!(a.layers[0].weights.iter().all(|w| w.abs() <= r));
        assert!(a.layers.iter().all(|l| l.bias.iter().all(|b| *b == 0.0)));
    }

    #[test]
    fn zero_network_outputs() {
        let t = NetworkTopology::default();
        let mut w = Weights::zeros(&t);
        let f = forward(&w, &[0.3; 6]);
        assert_eq!(f.output, 0.0);
        assert!(f.activations[1].iter().all(|h| *h == 0.5));
        w.layers[1].weights.iter_mut().for_each(|v| *v = 1.0);
        assert_eq!(forward(&w, &[0.3; 6]).output, 4.0);
    }

    #[test]
    fn topology_checks() {
        let t = NetworkTopology { input_count: 5, ..Default::default() };
        assert!(t.validate().is_err());
        let t = NetworkTopology { hidden_layers: vec![0], ..Default::default() };
        assert!(t.validate().is_err());
    }

    #[test]
    fn scaler_round_trip() {
        let s = TargetScaler::fit(&[100.0, 600.0, 350.0]);
        assert_eq!(s.scale(100.0), 0.0);
        assert_eq!(s.scale(600.0), 1.0);
        assert!((s.unscale(s.scale(420.0)) - 420.0).abs() < 1e-12);
        let flat = TargetScaler::fit(&[7.0, 7.0]);
        assert_eq!(flat.unscale(flat.scale(7.0)), 7.0);
    }

    #[test]
    fn config_checks() {
        assert!(TrainingConfig::default().validate().is_ok());
        let bad = TrainingConfig { learning_rate: -1.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = TrainingConfig { early_stop_patience: 9000, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = TrainingConfig { validation_fraction: 0.6, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}

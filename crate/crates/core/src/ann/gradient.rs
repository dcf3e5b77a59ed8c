use super::{forward, Weights};
use crate::dataset::FeatureVector;

/// Adds the gradient of `(ŷ − t)²` at `x` into `grad` and returns the squared
/// error.
pub fn backprop(weights: &Weights, x: &[f64], t: f64, grad: &mut Weights) -> f64 {
    let fwd = forward(weights, x);
    let residual = fwd.output - t;
    let last = weights.layers.len() - 1;
    // delta holds ∂loss/∂z for the layer being processed
    let mut delta = vec![2.0 * residual];
    for k in (0..=last).rev() {
        let layer = &weights.layers[k];
        let input = &fwd.activations[k];
        let g = &mut grad.layers[k];
        for r in 0..layer.rows {
            g.bias[r] += delta[r];
            for c in 0..layer.cols {
                g.weights[r * layer.cols + c] += delta[r] * input[c];
            }
        }
        if k > 0 {
            // input[c] is a sigmoid output of the previous layer
            delta = (0..layer.cols)
                .map(|c| {
                    let back: f64 = (0..layer.rows).map(|r| layer.weight(r, c) * delta[r]).sum();
                    back * input[c] * (1.0 - input[c])
                })
                .collect();
        }
    }
    residual * residual
}

/// Largest relative gap between analytic and central-difference partials of
/// the per-sample squared error, over every parameter. Each gap is
/// `|a − n| / max(|a|, |n|, 1e-8)`.
pub fn gradient_check(weights: &Weights, sample: (&FeatureVector, f64), epsilon: f64) -> f64 {
    let (x, t) = sample;
    let mut analytic = Weights::zeros(&weights.topology());
    backprop(weights, x.as_slice(), t, &mut analytic);
    let analytic = analytic.params();
    let loss = |w: &Weights| (forward(w, x.as_slice()).output - t).powi(2);
    let mut probe = weights.clone();
    let mut worst: f64 = 0.0;
    for (k, &a) in analytic.iter().enumerate() {
        let original = *probe.param_mut(k);
        *probe.param_mut(k) = original + epsilon;
        let up = loss(&probe);
        *probe.param_mut(k) = original - epsilon;
        let down = loss(&probe);
        *probe.param_mut(k) = original;
        let numeric = (up - down) / (2.0 * epsilon);
        let denom = a.abs().max(numeric.abs()).max(1e-8);
        worst = worst.max((a - numeric).abs() / denom);
    }
    worst
}

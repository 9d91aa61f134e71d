//! Two-hidden-layer perceptron with ReLU activations, trained by
//! mini-batch stochastic gradient descent. The regression head emits the
//! predicted score difference; the softmax head a two-way win
//! probability. Initialization, shuffling and early stopping are all
//! driven by the configured seed.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // shadowed by std inherent methods in test builds
use num_traits::Float;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rngx;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlpHead {
    Regression,
    Softmax,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden: vec![64, 32],
            learning_rate: 1e-3,
            batch_size: 256,
            max_epochs: 200,
            patience: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// Row-major (outputs x inputs).
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpNet {
    pub layers: Vec<DenseLayer>,
    pub head: MlpHead,
}

pub struct MlpGradients {
    pub weights: Vec<Matrix>,
    pub bias: Vec<Vec<f64>>,
}

pub fn softmax_pair(z0: f64, z1: f64) -> (f64, f64) {
    let m = z0.max(z1);
    let e0 = (z0 - m).exp();
    let e1 = (z1 - m).exp();
    let total = e0 + e1;
    (e0 / total, e1 / total)
}

impl MlpNet {
    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.weights.cols())
    }

    /// Fan-in scaled uniform initialization, fully determined by the seed.
    pub fn init(input_dim: usize, cfg: &MlpConfig, head: MlpHead) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::Parameter("MLP needs at least one input".into()));
        }
        if cfg.hidden.iter().any(|&w| w == 0) {
            return Err(Error::Parameter("hidden widths must be >= 1".into()));
        }
        let out_dim = match head {
            MlpHead::Regression => 1,
            MlpHead::Softmax => 2,
        };
        let mut dims = vec![input_dim];
        dims.extend_from_slice(&cfg.hidden);
        dims.push(out_dim);

        let mut rng = rngx::rng_from_seed(cfg.seed);
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for pair in dims.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let limit = 1.0 / (fan_in as f64).sqrt();
            let mut weights = Matrix::zeros(fan_out, fan_in);
            for i in 0..fan_out {
                for j in 0..fan_in {
                    weights.set(i, j, (rng.gen::<f64>() * 2.0 - 1.0) * limit);
                }
            }
            layers.push(DenseLayer { weights, bias: vec![0.0; fan_out] });
        }
        Ok(MlpNet { layers, head })
    }

    /// Forward pass keeping every post-activation, `activations[0]` being
    /// the input batch.
    fn forward_batch(&self, x: &Matrix) -> Vec<Matrix> {
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x.clone());
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = activations[l].a_bt(&layer.weights);
            for i in 0..z.rows() {
                let row = z.row_mut(i);
                for (v, b) in row.iter_mut().zip(&layer.bias) {
                    *v += b;
                }
                if l + 1 < self.layers.len() {
                    for v in row.iter_mut() {
                        if *v < 0.0 {
                            *v = 0.0;
                        }
                    }
                }
            }
            activations.push(z);
        }
        activations
    }

    /// Mean loss of the batch: squared error for the regression head,
    /// cross-entropy against 0/1 labels for the softmax head.
    pub fn loss(&self, x: &Matrix, y: &[f64]) -> f64 {
        let activations = self.forward_batch(x);
        let out = activations.last().expect("at least the input");
        batch_loss(out, y, self.head)
    }

    /// Batch loss together with gradients for every layer.
    pub fn loss_and_gradients(&self, x: &Matrix, y: &[f64]) -> (f64, MlpGradients) {
        let n = x.rows();
        let activations = self.forward_batch(x);
        let out = activations.last().expect("at least the input");
        let loss = batch_loss(out, y, self.head);

        // dL/d(output logits)
        let mut delta = Matrix::zeros(n, out.cols());
        match self.head {
            MlpHead::Regression => {
                for i in 0..n {
                    delta.set(i, 0, 2.0 * (out.get(i, 0) - y[i]) / n as f64);
                }
            }
            MlpHead::Softmax => {
                for i in 0..n {
                    let (p0, p1) = softmax_pair(out.get(i, 0), out.get(i, 1));
                    let label = y[i];
                    delta.set(i, 0, (p0 - (1.0 - label)) / n as f64);
                    delta.set(i, 1, (p1 - label) / n as f64);
                }
            }
        }

        let mut grads = MlpGradients {
            weights: self.layers.iter().map(|l| Matrix::zeros(l.weights.rows(), l.weights.cols())).collect(),
            bias: self.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        };
        for l in (0..self.layers.len()).rev() {
            grads.weights[l] = delta.at_b(&activations[l]);
            for i in 0..delta.rows() {
                for (acc, v) in grads.bias[l].iter_mut().zip(delta.row(i)) {
                    *acc += v;
                }
            }
            if l > 0 {
                let mut prev = delta.matmul(&self.layers[l].weights);
                // ReLU derivative gates on the stored post-activation.
                for i in 0..prev.rows() {
                    let act = activations[l].row(i);
                    for (v, &a) in prev.row_mut(i).iter_mut().zip(act) {
                        if a <= 0.0 {
                            *v = 0.0;
                        }
                    }
                }
                delta = prev;
            }
        }
        (loss, grads)
    }

    fn sgd_step(&mut self, grads: &MlpGradients, lr: f64) {
        for (layer, (gw, gb)) in self
            .layers
            .iter_mut()
            .zip(grads.weights.iter().zip(&grads.bias))
        {
            for (w, g) in layer.weights.data_mut().iter_mut().zip(gw.data()) {
                *w -= lr * g;
            }
            for (b, g) in layer.bias.iter_mut().zip(gb) {
                *b -= lr * g;
            }
        }
    }

    /// Forward pass for one feature vector.
    pub fn predict_logits(&self, row: &[f64]) -> Vec<f64> {
        let mut current = row.to_vec();
        for (l, layer) in self.layers.iter().enumerate() {
            let mut next = layer.bias.clone();
            for (o, out_val) in next.iter_mut().enumerate() {
                *out_val += crate::linalg::dot(layer.weights.row(o), &current);
            }
            if l + 1 < self.layers.len() {
                for v in next.iter_mut() {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            current = next;
        }
        current
    }

    /// Scalar prediction: the regression value, or P(class 1) under the
    /// softmax head.
    pub fn predict_one(&self, row: &[f64]) -> f64 {
        let logits = self.predict_logits(row);
        match self.head {
            MlpHead::Regression => logits[0],
            MlpHead::Softmax => softmax_pair(logits[0], logits[1]).1,
        }
    }
}

fn batch_loss(out: &Matrix, y: &[f64], head: MlpHead) -> f64 {
    let n = y.len() as f64;
    match head {
        MlpHead::Regression => {
            let mut total = 0.0;
            for (i, &target) in y.iter().enumerate() {
                let e = out.get(i, 0) - target;
                total += e * e;
            }
            total / n
        }
        MlpHead::Softmax => {
            let mut total = 0.0;
            for (i, &label) in y.iter().enumerate() {
                let (z0, z1) = (out.get(i, 0), out.get(i, 1));
                let m = z0.max(z1);
                let lse = m + ((z0 - m).exp() + (z1 - m).exp()).ln();
                let z_true = if label == 1.0 { z1 } else { z0 };
                total += lse - z_true;
            }
            total / n
        }
    }
}

/// Train a network with mini-batch SGD and early stopping on a held-out
/// validation split (10% is carved from the training rows when no
/// explicit split is given). Returns the weights of the best validation
/// epoch.
pub fn fit_mlp(
    x: &Matrix,
    y: &[f64],
    validation: Option<(&Matrix, &[f64])>,
    cfg: &MlpConfig,
    head: MlpHead,
) -> Result<MlpNet> {
    if x.rows() == 0 {
        return Err(Error::Fit("empty training set".into()));
    }
    if x.rows() != y.len() {
        return Err(Error::Fit("row/target count mismatch".into()));
    }
    if !x.is_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Fit("non-finite values in training set".into()));
    }
    if head == MlpHead::Softmax && y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::Fit("softmax targets must be 0/1".into()));
    }
    if cfg.batch_size == 0 || cfg.max_epochs == 0 {
        return Err(Error::Parameter("batch_size and max_epochs must be positive".into()));
    }

    let mut rng = rngx::rng_from_seed(rngx::splitmix64(cfg.seed ^ 0x6d6c_70)); // shuffle stream
    let mut net = MlpNet::init(x.cols(), cfg, head)?;

    // Materialize the validation split.
    let (train_x, train_y, val_x, val_y) = match validation {
        Some((vx, vy)) => {
            if vx.cols() != x.cols() || vx.rows() != vy.len() {
                return Err(Error::Fit("validation split shape mismatch".into()));
            }
            (x.clone(), y.to_vec(), vx.clone(), vy.to_vec())
        }
        None => {
            let mut order: Vec<usize> = (0..x.rows()).collect();
            rngx::shuffle(&mut rng, &mut order);
            let n_val = (x.rows() / 10).max(1).min(x.rows() - 1);
            let (val_idx, train_idx) = order.split_at(n_val);
            (
                x.select_rows(train_idx),
                train_idx.iter().map(|&i| y[i]).collect(),
                x.select_rows(val_idx),
                val_idx.iter().map(|&i| y[i]).collect(),
            )
        }
    };

    let mut order: Vec<usize> = (0..train_x.rows()).collect();
    let mut best = net.clone();
    let mut best_val = f64::INFINITY;
    let mut since_best = 0usize;

    for epoch in 0..cfg.max_epochs {
        rngx::shuffle(&mut rng, &mut order);
        for batch in order.chunks(cfg.batch_size) {
            let bx = train_x.select_rows(batch);
            let by: Vec<f64> = batch.iter().map(|&i| train_y[i]).collect();
            let (loss, grads) = net.loss_and_gradients(&bx, &by);
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, learning_rate: cfg.learning_rate });
            }
            net.sgd_step(&grads, cfg.learning_rate);
        }
        let val_loss = net.loss(&val_x, &val_y);
        if !val_loss.is_finite() {
            return Err(Error::Divergence { epoch, learning_rate: cfg.learning_rate });
        }
        if val_loss < best_val - 1e-12 {
            best_val = val_loss;
            best = net.clone();
            since_best = 0;
        } else {
            since_best += 1;
            if since_best > cfg.patience {
                break;
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn toy_batch(n: usize, d: usize, seed: u64) -> (Matrix, Vec<f64>) {
        let mut rng = crate::rngx::rng_from_seed(seed);
        let rows: alloc::vec::Vec<alloc::vec::Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect())
            .collect();
        let y: alloc::vec::Vec<f64> =
            rows.iter().map(|r| if r[0] + r[1] > 0.0 { 1.0 } else { 0.0 }).collect();
        (Matrix::from_rows(&rows).unwrap(), y)
    }

    // Central finite differences over every parameter of every layer.
    fn gradient_check(head: MlpHead, target: impl Fn(&[f64]) -> f64) {
        let (x, _) = toy_batch(5, 7, 21);
        let y: alloc::vec::Vec<f64> = (0..5).map(|i| target(x.row(i))).collect();
        let cfg = MlpConfig { hidden: alloc::vec![6, 4], seed: 13, ..MlpConfig::default() };
        let mut net = MlpNet::init(7, &cfg, head).unwrap();
        let (_, grads) = net.loss_and_gradients(&x, &y);
        let eps = 1e-5;
        let mut max_rel = 0.0f64;
        for l in 0..net.layers.len() {
            let (rows, cols) = (net.layers[l].weights.rows(), net.layers[l].weights.cols());
            for i in 0..rows {
                for j in 0..cols {
                    let orig = net.layers[l].weights.get(i, j);
                    net.layers[l].weights.set(i, j, orig + eps);
                    let up = net.loss(&x, &y);
                    net.layers[l].weights.set(i, j, orig - eps);
                    let down = net.loss(&x, &y);
                    net.layers[l].weights.set(i, j, orig);
                    let numeric = (up - down) / (2.0 * eps);
                    let analytic = grads.weights[l].get(i, j);
                    let denom = numeric.abs().max(analytic.abs()).max(1e-6);
                    max_rel = max_rel.max((numeric - analytic).abs() / denom);
                }
            }
            for b in 0..net.layers[l].bias.len() {
                let orig = net.layers[l].bias[b];
                net.layers[l].bias[b] = orig + eps;
                let up = net.loss(&x, &y);
                net.layers[l].bias[b] = orig - eps;
                let down = net.loss(&x, &y);
                net.layers[l].bias[b] = orig;
                let numeric = (up - down) / (2.0 * eps);
                let analytic = grads.bias[l][b];
                let denom = numeric.abs().max(analytic.abs()).max(1e-6);
                max_rel = max_rel.max((numeric - analytic).abs() / denom);
            }
        }
        assert!(max_rel < 1e-4, "max relative gradient error {max_rel}");
    }

    #[test]
    fn regression_gradients_match_finite_differences() {
        gradient_check(MlpHead::Regression, |r| 2.0 * r[0] - r[3]);
    }

    #[test]
    fn softmax_gradients_match_finite_differences() {
        gradient_check(MlpHead::Softmax, |r| f64::from(u8::from(r[0] > 0.0)));
    }

    #[test]
    fn constant_target_is_learned() {
        let (x, _) = toy_batch(200, 4, 31);
        let y = alloc::vec![1.75; 200];
        let cfg = MlpConfig {
            hidden: alloc::vec![8, 4],
            learning_rate: 0.4,
            batch_size: 32,
            max_epochs: 800,
            patience: 800,
            seed: 5,
        };
        let net = fit_mlp(&x, &y, None, &cfg, MlpHead::Regression).unwrap();
        for i in 0..20 {
            let pred = net.predict_one(x.row(i));
            assert!((pred - 1.75).abs() < 1e-2, "prediction {pred}");
        }
    }

    #[test]
    fn softmax_probabilities_sum_to_one() {
        let cfg = MlpConfig { seed: 3, ..MlpConfig::default() };
        let net = MlpNet::init(7, &cfg, MlpHead::Softmax).unwrap();
        let (x, _) = toy_batch(50, 7, 77);
        for i in 0..x.rows() {
            let logits = net.predict_logits(x.row(i));
            let (p0, p1) = softmax_pair(logits[0], logits[1]);
            assert!((p0 + p1 - 1.0).abs() < 1e-9);
            assert!((0.0..=1.0).contains(&p0));
        }
    }

    #[test]
    fn learns_a_separable_classification() {
        let (x, y) = toy_batch(600, 3, 91);
        let cfg = MlpConfig {
            hidden: alloc::vec![16, 8],
            learning_rate: 0.1,
            batch_size: 64,
            max_epochs: 200,
            patience: 25,
            seed: 7,
        };
        let net = fit_mlp(&x, &y, None, &cfg, MlpHead::Softmax).unwrap();
        let correct = (0..x.rows())
            .filter(|&i| (net.predict_one(x.row(i)) > 0.5) == (y[i] == 1.0))
            .count();
        assert!(correct as f64 / x.rows() as f64 > 0.9, "accuracy {correct}/600");
    }

    #[test]
    fn absurd_learning_rate_reports_divergence() {
        let (x, _) = toy_batch(100, 4, 41);
        let y: alloc::vec::Vec<f64> = (0..100).map(|i| i as f64).collect();
        let cfg = MlpConfig {
            learning_rate: 1e12,
            batch_size: 16,
            max_epochs: 50,
            ..MlpConfig::default()
        };
        let err = fit_mlp(&x, &y, None, &cfg, MlpHead::Regression).unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }), "{err:?}");
    }

    #[test]
    fn training_is_deterministic() {
        let (x, y) = toy_batch(120, 4, 51);
        let cfg = MlpConfig {
            hidden: alloc::vec![8],
            max_epochs: 10,
            seed: 19,
            ..MlpConfig::default()
        };
        let a = fit_mlp(&x, &y, None, &cfg, MlpHead::Regression).unwrap();
        let b = fit_mlp(&x, &y, None, &cfg, MlpHead::Regression).unwrap();
        assert_eq!(a, b);
    }
}

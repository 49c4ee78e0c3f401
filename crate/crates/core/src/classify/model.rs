use rand::Rng;

use crate::error::{Error, Result};

use super::FeatureSet;

/// Multinomial logistic regression `softmax(W x + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub classes: usize,
    pub dim: usize,
    /// Row-major `[classes][dim]`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Init {
    /// Independent uniform draws in `±1/√dim`.
    #[default]
    Uniform,
    /// Uniform draws with the class mean removed per feature, so the class
    /// weight rows sum to zero (`W₁ = −W₀` for two classes).
    Symmetric,
}

impl LinearModel {
    pub fn zeros(classes: usize, dim: usize) -> Self {
        LinearModel {
            classes,
            dim,
            weights: vec![0.0; classes * dim],
            bias: vec![0.0; classes],
        }
    }

    pub fn init<R: Rng>(classes: usize, dim: usize, init: Init, rng: &mut R) -> Self {
        let bound = 1.0 / (dim as f64).sqrt();
        let mut weights: Vec<f64> = (0..classes * dim).map(|_| rng.random_range(-bound..bound)).collect();
        if init == Init::Symmetric && classes == 2 {
            for k in 0..dim {
                weights[dim + k] = -weights[k];
            }
        } else if init == Init::Symmetric {
            for k in 0..dim {
                let mean = (0..classes).map(|c| weights[c * dim + k]).sum::<f64>() / classes as f64;
                for c in 0..classes {
                    weights[c * dim + k] -= mean;
                }
            }
        }
        LinearModel {
            classes,
            dim,
            weights,
            bias: vec![0.0; classes],
        }
    }

    pub fn class_weights(&self, class: usize) -> &[f64] {
        &self.weights[class * self.dim..(class + 1) * self.dim]
    }

    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        (0..self.classes)
            .map(|c| {
                self.class_weights(c).iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias[c]
            })
            .collect()
    }

    /// Class with the largest logit; ties go to the lowest index.
    pub fn predict(&self, x: &[f64]) -> usize {
        argmax(&self.logits(x))
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|v| v.is_finite())
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn softmax_in_place(z: &mut [f64]) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    z.iter_mut().for_each(|v| *v /= sum);
    max + sum.ln()
}

/// Class probabilities for one sample.
pub fn forward(model: &LinearModel, x: &[f64]) -> Vec<f64> {
    let mut z = model.logits(x);
    softmax_in_place(&mut z);
    z
}

/// Gradients of the mean cross-entropy.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Mean softmax cross-entropy over `batch` (sample indices into `set`) and
/// its gradient.
pub fn loss_grad(model: &LinearModel, set: &FeatureSet, batch: &[usize]) -> Result<(f64, Gradients)> {
    if set.dim != model.dim {
        return Err(Error::ShapeMismatch(format!(
            "model of dimension {} on features of dimension {}",
            model.dim, set.dim
        )));
    }
    if batch.is_empty() {
        return Err(Error::Empty("batch".into()));
    }
    let (c, d) = (model.classes, model.dim);
    let mut gw = vec![0.0; c * d];
    let mut gb = vec![0.0; c];
    let mut loss = 0.0;
    for &i in batch {
        let x = set.sample(i);
        let y = set.labels[i];
        let mut z = model.logits(x);
        let target = z[y];
        loss += softmax_in_place(&mut z) - target;
        z[y] -= 1.0;
        for (class, &delta) in z.iter().enumerate() {
            gb[class] += delta;
            if delta != 0.0 {
                for (g, v) in gw[class * d..(class + 1) * d].iter_mut().zip(x) {
                    *g += delta * v;
                }
            }
        }
    }
    let n = batch.len() as f64;
    gw.iter_mut().for_each(|g| *g /= n);
    gb.iter_mut().for_each(|g| *g /= n);
    Ok((loss / n, Gradients { weights: gw, bias: gb }))
}

pub const ADAM_LEARNING_RATE: f64 = 0.001;

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    m_w: Vec<f64>,
    v_w: Vec<f64>,
    m_b: Vec<f64>,
    v_b: Vec<f64>,
}

impl AdamState {
    pub fn new(model: &LinearModel, alpha: f64) -> Self {
        AdamState {
            alpha,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            m_w: vec![0.0; model.weights.len()],
            v_w: vec![0.0; model.weights.len()],
            m_b: vec![0.0; model.bias.len()],
            v_b: vec![0.0; model.bias.len()],
        }
    }
}

/// One bias-corrected Adam update.
pub fn adam_step(model: &mut LinearModel, state: &mut AdamState, grads: &Gradients) -> Result<()> {
    if grads.weights.len() != model.weights.len()
        || grads.bias.len() != model.bias.len()
        || state.m_w.len() != model.weights.len()
        || state.m_b.len() != model.bias.len()
    {
        return Err(Error::ShapeMismatch("gradient, optimizer state and model shapes differ".into()));
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - state.beta1.powi(t);
    let c2 = 1.0 - state.beta2.powi(t);
    let (a, b1, b2, eps) = (state.alpha, state.beta1, state.beta2, state.epsilon);
    let update = |p: &mut [f64], m: &mut [f64], v: &mut [f64], g: &[f64]| {
        for i in 0..p.len() {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            p[i] -= a * (m[i] / c1) / ((v[i] / c2).sqrt() + eps);
        }
    };
    update(&mut model.weights, &mut state.m_w, &mut state.v_w, &grads.weights);
    update(&mut model.bias, &mut state.m_b, &mut state.v_b, &grads.bias);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_instance(seed: u64, n: usize, d: usize, c: usize) -> (LinearModel, FeatureSet) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut model = LinearModel::init(c, d, Init::Uniform, &mut rng);
        model.bias.iter_mut().for_each(|b| *b = rng.random_range(-0.5..0.5));
        let data = (0..n * d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let labels = (0..n).map(|_| rng.random_range(0..c)).collect();
        (model, FeatureSet::new(d, c, data, labels).unwrap())
    }

    #[test]
    fn zero_model_is_uniform() {
        let m = LinearModel::zeros(4, 3);
        let p = forward(&m, &[1.0, -2.0, 3.0]);
        assert!(p.iter().all(|&v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn probabilities_sum_to_one() {
        let (m, s) = random_instance(1, 20, 10, 3);
        for i in 0..s.len() {
            assert!((forward(&m, s.sample(i)).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let big = LinearModel {
            classes: 2,
            dim: 1,
            weights: vec![800.0, -800.0],
            bias: vec![0.0, 0.0],
        };
        let p = forward(&big, &[1.0]);
        assert!(p.iter().all(|v| v.is_finite()) && (p[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn large_margin_loss_vanishes() {
        let m = LinearModel {
            classes: 2,
            dim: 1,
            weights: vec![50.0, -50.0],
            bias: vec![0.0, 0.0],
        };
        let s = FeatureSet::new(1, 2, vec![1.0, -1.0], vec![0, 1]).unwrap();
        let (loss, _) = loss_grad(&m, &s, &[0, 1]).unwrap();
        assert!(loss < 1e-40);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let h = 1e-6;
        for seed in 0..10 {
            let (m, s) = random_instance(seed, 8, 10, 3);
            let batch: Vec<usize> = (0..s.len()).collect();
            let (_, g) = loss_grad(&m, &s, &batch).unwrap();
            let numeric = |perturb: &dyn Fn(&mut LinearModel, f64)| {
                let mut plus = m.clone();
                perturb(&mut plus, h);
                let mut minus = m.clone();
                perturb(&mut minus, -h);
                (loss_grad(&plus, &s, &batch).unwrap().0 - loss_grad(&minus, &s, &batch).unwrap().0) / (2.0 * h)
            };
            let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-6);
            for k in 0..m.weights.len() {
                let fd = numeric(&|p: &mut LinearModel, e| p.weights[k] += e);
                assert!(rel(g.weights[k], fd) < 1e-5, "seed {seed} w{k}: {} vs {fd}", g.weights[k]);
            }
            for k in 0..m.bias.len() {
                let fd = numeric(&|p: &mut LinearModel, e| p.bias[k] += e);
                assert!(rel(g.bias[k], fd) < 1e-5, "seed {seed} b{k}");
            }
        }
    }

    #[test]
    fn first_adam_step_has_magnitude_alpha() {
        for g in [1e-6, 0.3, -25.0] {
            let mut m = LinearModel::zeros(1, 1);
            let mut st = AdamState::new(&m, ADAM_LEARNING_RATE);
            adam_step(&mut m, &mut st, &Gradients { weights: vec![g], bias: vec![0.0] }).unwrap();
            let want = -ADAM_LEARNING_RATE * g / (g.abs() + 1e-8);
            assert!((m.weights[0] - want).abs() < 1e-12);
            assert_eq!(m.bias[0], 0.0);
        }
    }

    #[test]
    fn adam_rejects_shape_mismatch() {
        let mut m = LinearModel::zeros(2, 3);
        let mut st = AdamState::new(&m, ADAM_LEARNING_RATE);
        let g = Gradients { weights: vec![0.0; 5], bias: vec![0.0; 2] };
        assert!(matches!(adam_step(&mut m, &mut st, &g), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax(&[2.0, 2.0]), 0);
    }

    #[test]
    fn bias_shift_keeps_predictions() {
        let (mut m, s) = random_instance(3, 30, 5, 4);
        let before: Vec<usize> = (0..s.len()).map(|i| m.predict(s.sample(i))).collect();
        m.bias.iter_mut().for_each(|b| *b += 3.25);
        let after: Vec<usize> = (0..s.len()).map(|i| m.predict(s.sample(i))).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn symmetric_init_negates_two_class_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = LinearModel::init(2, 16, Init::Symmetric, &mut rng);
        for (a, b) in m.class_weights(0).iter().zip(m.class_weights(1)) {
            assert_eq!(*a, -*b);
        }
    }
}

//! Variational free energy and its gradients, plus the Adam training loop.
//!
//! For a minibatch `D_b` and weight draws `w⁽ⁿ⁾ = μ + σ ξ⁽ⁿ⁾`, `n = 1..N`,
//!
//! ```text
//! F = 1/N Σ_n [ κ (log q(w⁽ⁿ⁾|θ) - log P(w⁽ⁿ⁾)) - log P(D_b | w⁽ⁿ⁾) ]
//! ```
//!
//! with a Gaussian posterior `q`, a zero-mean Gaussian prior and a Gaussian
//! likelihood of fixed noise. `κ = 1 / batches_per_epoch` spreads the
//! complexity cost over an epoch so that one epoch sums to the full-data
//! objective.

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{mix_seed, sigmoid, softplus, BnnInput, BnnModel, BnnParams, Normalization};
use crate::data::StepSeries;
use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

pub type Gradients = BnnParams;

/// Raw one-step transitions `(s_t, t) -> s_{t+1}`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TransitionSet {
    pub inputs: Vec<BnnInput>,
    pub targets: Vec<f64>,
}

impl TransitionSet {
    /// Every consecutive pair of steps of every day, night steps included.
    pub fn from_days(days: &[StepSeries]) -> Self {
        let mut set = Self::default();
        for day in days {
            for (t, pair) in day.steps.windows(2).enumerate() {
                set.inputs.push(BnnInput {
                    sun_ppfd: pair[0].sun_ppfd.value(),
                    step: t as f64,
                });
                set.targets.push(pair[1].sun_ppfd.value());
            }
        }
        set
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Concatenation of `self` with itself `times` times.
    pub fn repeated(&self, times: usize) -> Self {
        Self {
            inputs: self.inputs.repeat(times),
            targets: self.targets.repeat(times),
        }
    }
}

/// Normalised inputs and targets ready for a forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingBatch {
    pub inputs: Array2<f64>,
    pub targets: Array1<f64>,
}

impl TrainingBatch {
    pub fn new(set: &TransitionSet, indices: &[usize], norm: &Normalization) -> Self {
        let mut inputs = Array2::zeros((indices.len(), 2));
        let mut targets = Array1::zeros(indices.len());
        for (row, &i) in indices.iter().enumerate() {
            let x = norm.input(set.inputs[i]);
            inputs[[row, 0]] = x[0];
            inputs[[row, 1]] = x[1];
            targets[row] = norm.target(set.targets[i]);
        }
        Self { inputs, targets }
    }

    pub fn from_set(set: &TransitionSet, norm: &Normalization) -> Self {
        Self::new(set, &(0..set.len()).collect::<Vec<_>>(), norm)
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

/// Components of one free-energy evaluation, averaged over the weight draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElboTerms {
    /// `κ · complexity + likelihood`.
    pub total: f64,
    /// `log q(w|θ) - log P(w)`, unweighted.
    pub complexity: f64,
    /// `-log P(D|w)`.
    pub likelihood: f64,
    pub kl_weight: f64,
}

/// Free energy and its exact gradient for explicit standard-normal draws
/// `noise[n]` of the output weights (bias last).
pub fn elbo_with_noise(model: &BnnModel, batch: &TrainingBatch, noise: &[Array1<f64>], kl_weight: f64) -> Result<(ElboTerms, Gradients)> {
    if batch.is_empty() {
        return Err(Error::Validation("free energy of an empty batch".into()));
    }
    if noise.is_empty() {
        return Err(Error::Validation("free energy needs at least one weight draw".into()));
    }
    let p = &model.params;
    let cfg = &model.config;
    let h2 = p.b2.len();
    let n_draws = noise.len() as f64;
    let obs_var = cfg.obs_noise_std * cfg.obs_noise_std;
    let prior_var = cfg.prior_std * cfg.prior_std;
    let sigma = p.rho.mapv(softplus);

    let z1 = batch.inputs.dot(&p.w1.t()) + &p.b1;
    let a1 = z1.mapv(|v| v.max(0.0));
    let z2 = a1.dot(&p.w2.t()) + &p.b2;
    let a2 = z2.mapv(|v| v.max(0.0));

    let mut grads = BnnParams::zeros_like(p);
    let mut d_a2 = Array2::<f64>::zeros(a2.raw_dim());
    let (mut complexity, mut likelihood) = (0.0, 0.0);

    for xi in noise {
        if xi.len() != h2 + 1 {
            return Err(Error::Validation(format!("weight draw has {} entries, expected {}", xi.len(), h2 + 1)));
        }
        let w = &p.mu + &(&sigma * xi);
        let out = a2.dot(&w.slice(ndarray::s![..h2])) + w[h2];
        let resid = &out - &batch.targets;
        likelihood += resid.iter().map(|r| 0.5 * (LN_2PI + obs_var.ln()) + r * r / (2.0 * obs_var)).sum::<f64>();
        complexity += sigma
            .iter()
            .zip(xi)
            .zip(&w)
            .map(|((s, e), wj)| -s.ln() - 0.5 * e * e + cfg.prior_std.ln() + wj * wj / (2.0 * prior_var))
            .sum::<f64>();

        // dF/dout
        let r = resid / obs_var;
        // gradient flowing into each sampled weight from the likelihood and the prior
        let mut g_w = a2.t().dot(&r);
        let g_b = r.sum();
        g_w.zip_mut_with(&w.slice(ndarray::s![..h2]), |g, wj| *g += kl_weight * wj / prior_var);
        let g_b = g_b + kl_weight * w[h2] / prior_var;

        for j in 0..=h2 {
            let g = if j < h2 { g_w[j] } else { g_b };
            grads.mu[j] += g / n_draws;
            // log q contributes -1/σ through σ; the ξ-path terms cancel
            grads.rho[j] += (g * xi[j] - kl_weight / sigma[j]) / n_draws;
        }

        // back into the deterministic layers
        let w_hidden = w.slice(ndarray::s![..h2]);
        for (mut row, ri) in d_a2.axis_iter_mut(Axis(0)).zip(&r) {
            row.scaled_add(*ri / n_draws, &w_hidden);
        }
    }
    grads.rho.zip_mut_with(&p.rho, |g, rho| *g *= sigmoid(*rho));

    let d_z2 = d_a2 * &z2.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
    grads.w2 = d_z2.t().dot(&a1);
    grads.b2 = d_z2.sum_axis(Axis(0));
    let d_a1 = d_z2.dot(&p.w2);
    let d_z1 = d_a1 * &z1.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
    grads.w1 = d_z1.t().dot(&batch.inputs);
    grads.b1 = d_z1.sum_axis(Axis(0));

    complexity /= n_draws;
    likelihood /= n_draws;
    Ok((
        ElboTerms {
            total: kl_weight * complexity + likelihood,
            complexity,
            likelihood,
            kl_weight,
        },
        grads,
    ))
}

fn draw_noise(len: usize, n: usize, rng: &mut impl Rng) -> Vec<Array1<f64>> {
    (0..n)
        .map(|_| Array1::from_shape_simple_fn(len, || StandardNormal.sample(&mut *rng)))
        .collect()
}

/// Monte-Carlo estimate of the free energy with `n_samples` fresh weight draws.
pub fn elbo_loss(model: &BnnModel, batch: &TrainingBatch, n_samples: usize, kl_weight: f64, rng: &mut impl Rng) -> Result<ElboTerms> {
    if n_samples == 0 {
        return Err(Error::Validation("free energy needs at least one weight draw".into()));
    }
    let noise = draw_noise(model.params.mu.len(), n_samples, rng);
    elbo_with_noise(model, batch, &noise, kl_weight).map(|(terms, _)| terms)
}

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    steps: i32,
    m: BnnParams,
    v: BnnParams,
}

impl Adam {
    pub fn new(learning_rate: f64, like: &BnnParams) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            steps: 0,
            m: BnnParams::zeros_like(like),
            v: BnnParams::zeros_like(like),
        }
    }

    pub fn step(&mut self, params: &mut BnnParams, grads: &Gradients) {
        self.steps = self.steps.saturating_add(1);
        let c1 = 1.0 - self.beta1.powi(self.steps);
        let c2 = 1.0 - self.beta2.powi(self.steps);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.learning_rate, self.epsilon);
        let groups = params
            .slices_mut()
            .into_iter()
            .zip(grads.slices())
            .zip(self.m.slices_mut())
            .zip(self.v.slices_mut());
        for (((p, g), m), v) in groups {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + eps);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub model: BnnModel,
    /// Free energy summed over each epoch's minibatches.
    pub loss_history: Vec<f64>,
}

/// Minimises the free energy with Adam using the model's own configuration.
/// Deterministic in `config.seed`.
pub fn train(model: BnnModel, data: &TransitionSet) -> Result<TrainedModel> {
    model.config.validate()?;
    if data.is_empty() {
        return Err(Error::Validation("cannot train on an empty dataset".into()));
    }
    let cfg = model.config.clone();
    let mut model = model;
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed ^ 0x7472_6169_6e00));
    let mut adam = Adam::new(cfg.learning_rate, &model.params);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let n_batches = data.len().div_ceil(cfg.batch_size);
    let kl_weight = 1.0 / n_batches as f64;
    let mut loss_history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch = TrainingBatch::new(data, chunk, &cfg.normalization);
            let noise = draw_noise(model.params.mu.len(), cfg.mc_samples_train, &mut rng);
            let (terms, grads) = elbo_with_noise(&model, &batch, &noise, kl_weight)?;
            if !terms.total.is_finite() {
                return Err(Error::Divergence { epoch, loss: terms.total });
            }
            adam.step(&mut model.params, &grads);
            epoch_loss += terms.total;
        }
        if !epoch_loss.is_finite() {
            return Err(Error::Divergence { epoch, loss: epoch_loss });
        }
        loss_history.push(epoch_loss);
    }
    Ok(TrainedModel { model, loss_history })
}

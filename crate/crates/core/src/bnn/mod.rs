//! Bayesian neural network for one-step sunlight prediction.
//!
//! The network maps the current sunlight and step index `(s_t, t)` to the
//! next step's sunlight `s_{t+1}`. Two plain dense ReLU layers feed a single
//! variational output unit whose weights are Gaussian, `w = μ + σ ξ` with
//! `σ = softplus(ρ)` and `ξ ~ N(0, 1)`. Training minimises a Monte-Carlo
//! estimate of the variational free energy (see [`train`]); prediction
//! averages several weight draws.

mod train;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::data::StepSeries;
use crate::error::{Error, Result};
use crate::light::Ppfd;
use crate::predict::{Observation, Predictor};

pub use train::{elbo_loss, elbo_with_noise, train, Adam, ElboTerms, Gradients, TrainedModel, TrainingBatch, TransitionSet};

/// Training and architecture settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BnnConfig {
    /// Widths of the two ReLU hidden layers.
    pub hidden_sizes: [usize; 2],
    /// Weight draws per training step.
    pub mc_samples_train: usize,
    /// Weight draws averaged per prediction.
    pub mc_samples_predict: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Standard deviation of the zero-mean Gaussian weight prior.
    pub prior_std: f64,
    /// Likelihood noise, in normalised output units.
    pub obs_noise_std: f64,
    /// Posterior standard deviation at initialisation.
    pub init_sigma: f64,
    pub seed: u64,
    pub normalization: Normalization,
}

impl Default for BnnConfig {
    fn default() -> Self {
        Self {
            hidden_sizes: [100, 100],
            mc_samples_train: 1,
            mc_samples_predict: 10,
            learning_rate: 1e-4,
            epochs: 2000,
            batch_size: 32,
            prior_std: 1.0,
            obs_noise_std: 0.05,
            init_sigma: 0.05,
            seed: 0,
            normalization: Normalization::default(),
        }
    }
}

impl BnnConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("hidden layer width", self.hidden_sizes[0].min(self.hidden_sizes[1])),
            ("mc_samples_train", self.mc_samples_train),
            ("mc_samples_predict", self.mc_samples_predict),
            ("batch_size", self.batch_size),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(crate::Error::Validation(format!("{name} must be >= 1")));
            }
        }
        let positive = [
            ("learning_rate", self.learning_rate),
            ("prior_std", self.prior_std),
            ("obs_noise_std", self.obs_noise_std),
            ("init_sigma", self.init_sigma),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(crate::Error::Validation(format!("{name} must be > 0, got {v}")));
            }
        }
        self.normalization.validate()
    }
}

/// Z-score statistics for the inputs `(s_t, t)` and the target `s_{t+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub input_mean: [f64; 2],
    pub input_std: [f64; 2],
    pub output_mean: f64,
    pub output_std: f64,
}

impl Default for Normalization {
    fn default() -> Self {
        Self {
            input_mean: [0.0, 0.0],
            input_std: [1.0, 1.0],
            output_mean: 0.0,
            output_std: 1.0,
        }
    }
}

impl Normalization {
    /// Fits statistics on raw transitions; constant columns keep unit scale.
    pub fn fit(data: &TransitionSet) -> Self {
        let n = data.len().max(1) as f64;
        let stats = |values: &mut dyn Iterator<Item = f64>| {
            let v: Vec<f64> = values.collect();
            let mean = v.iter().sum::<f64>() / n;
            let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            let std = var.sqrt();
            (mean, if std > 1e-12 { std } else { 1.0 })
        };
        let (m0, s0) = stats(&mut data.inputs.iter().map(|x| x.sun_ppfd));
        let (m1, s1) = stats(&mut data.inputs.iter().map(|x| x.step));
        let (mo, so) = stats(&mut data.targets.iter().copied());
        Self {
            input_mean: [m0, m1],
            input_std: [s0, s1],
            output_mean: mo,
            output_std: so,
        }
    }

    fn validate(&self) -> Result<()> {
        let all = self.input_mean.iter().chain(&self.input_std).chain([&self.output_mean, &self.output_std]);
        if all.clone().any(|v| !v.is_finite()) || self.input_std.iter().chain([&self.output_std]).any(|s| *s <= 0.0) {
            return Err(crate::Error::Validation("normalisation statistics must be finite with positive scales".into()));
        }
        Ok(())
    }

    pub fn input(&self, x: BnnInput) -> [f64; 2] {
        [
            (x.sun_ppfd - self.input_mean[0]) / self.input_std[0],
            (x.step - self.input_mean[1]) / self.input_std[1],
        ]
    }

    pub fn target(&self, y: f64) -> f64 {
        (y - self.output_mean) / self.output_std
    }

    pub fn denormalize(&self, y: f64) -> f64 {
        y * self.output_std + self.output_mean
    }
}

/// Raw network input: current sunlight and 0-based step index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BnnInput {
    pub sun_ppfd: f64,
    pub step: f64,
}

/// Trainable parameters. The output unit's weights and bias are stored
/// together, bias last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BnnParams {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    pub mu: Array1<f64>,
    pub rho: Array1<f64>,
}

impl BnnParams {
    pub fn zeros_like(other: &BnnParams) -> Self {
        Self {
            w1: Array2::zeros(other.w1.raw_dim()),
            b1: Array1::zeros(other.b1.raw_dim()),
            w2: Array2::zeros(other.w2.raw_dim()),
            b2: Array1::zeros(other.b2.raw_dim()),
            mu: Array1::zeros(other.mu.raw_dim()),
            rho: Array1::zeros(other.rho.raw_dim()),
        }
    }

    pub fn slices(&self) -> [&[f64]; 6] {
        [
            self.w1.as_slice().expect("standard layout"),
            self.b1.as_slice().expect("standard layout"),
            self.w2.as_slice().expect("standard layout"),
            self.b2.as_slice().expect("standard layout"),
            self.mu.as_slice().expect("standard layout"),
            self.rho.as_slice().expect("standard layout"),
        ]
    }

    pub fn slices_mut(&mut self) -> [&mut [f64]; 6] {
        [
            self.w1.as_slice_mut().expect("standard layout"),
            self.b1.as_slice_mut().expect("standard layout"),
            self.w2.as_slice_mut().expect("standard layout"),
            self.b2.as_slice_mut().expect("standard layout"),
            self.mu.as_slice_mut().expect("standard layout"),
            self.rho.as_slice_mut().expect("standard layout"),
        ]
    }

    pub fn len(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BnnModel {
    pub config: BnnConfig,
    pub params: BnnParams,
}

#[inline]
pub(crate) fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Inverse of softplus for `y > 0`.
pub(crate) fn softplus_inv(y: f64) -> f64 {
    if y > 30.0 {
        y
    } else {
        y.exp_m1().ln()
    }
}

impl BnnModel {
    pub fn sigma(&self) -> Array1<f64> {
        self.params.rho.mapv(softplus)
    }

    /// Hidden-layer activations of the second layer for one normalised input.
    pub(crate) fn features(&self, x: [f64; 2]) -> Array1<f64> {
        let p = &self.params;
        let z1 = p.w1.column(0).to_owned() * x[0] + p.w1.column(1).to_owned() * x[1] + &p.b1;
        let h1 = z1.mapv(|v| v.max(0.0));
        (p.w2.dot(&h1) + &p.b2).mapv(|v| v.max(0.0))
    }

    /// Output in normalised units for given features and an output-weight draw.
    fn output(features: &Array1<f64>, weights: &[f64]) -> f64 {
        let (w, b) = weights.split_at(weights.len() - 1);
        features.iter().zip(w).map(|(h, w)| h * w).sum::<f64>() + b[0]
    }

    fn draw_output_weights(&self, rng: &mut impl Rng, out: &mut [f64]) {
        let p = &self.params;
        for ((o, mu), rho) in out.iter_mut().zip(&p.mu).zip(&p.rho) {
            let xi: f64 = StandardNormal.sample(rng);
            *o = mu + softplus(*rho) * xi;
        }
    }
}

/// Fresh network: fan-in scaled uniform dense weights, output means near
/// zero and output spreads at `init_sigma`. Deterministic in `config.seed`.
pub fn init_model(config: &BnnConfig) -> BnnModel {
    let [h1, h2] = config.hidden_sizes;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut uniform = |shape: (usize, usize), fan_in: usize| {
        let bound = (6.0 / fan_in as f64).sqrt();
        let dist = Uniform::new(-bound, bound).expect("finite bound");
        Array2::from_shape_simple_fn(shape, || dist.sample(&mut rng))
    };
    let w1 = uniform((h1, 2), 2);
    let w2 = uniform((h2, h1), h1);
    let mu_bound = 1.0 / (h2 as f64).sqrt();
    let mu_dist = Uniform::new(-mu_bound, mu_bound).expect("finite bound");
    let mut mu = Array1::from_shape_simple_fn(h2 + 1, || mu_dist.sample(&mut rng));
    mu[h2] = 0.0;
    BnnModel {
        config: config.clone(),
        params: BnnParams {
            w1,
            b1: Array1::zeros(h1),
            w2,
            b2: Array1::zeros(h2),
            mu,
            rho: Array1::from_elem(h2 + 1, softplus_inv(config.init_sigma)),
        },
    }
}

/// Fits the normalisation to `days`, initialises from `config` and trains.
pub fn fit_bnn(config: &BnnConfig, days: &[StepSeries]) -> Result<TrainedModel> {
    let data = TransitionSet::from_days(days);
    if data.is_empty() {
        return Err(Error::Validation("no training transitions: need at least one day with two steps".into()));
    }
    let config = BnnConfig {
        normalization: Normalization::fit(&data),
        ..config.clone()
    };
    train(init_model(&config), &data)
}

/// One stochastic forward pass with a single draw of the output weights.
/// Returns the prediction in PPFD units (not clamped).
pub fn forward_sample(model: &BnnModel, input: BnnInput, rng: &mut impl Rng) -> f64 {
    let norm = &model.config.normalization;
    let features = model.features(norm.input(input));
    let mut weights = vec![0.0; model.params.mu.len()];
    model.draw_output_weights(rng, &mut weights);
    norm.denormalize(BnnModel::output(&features, &weights))
}

/// Mean of `n_draws` forward samples, clamped at zero.
pub fn predict_mean(model: &BnnModel, input: BnnInput, n_draws: usize, rng: &mut impl Rng) -> Ppfd {
    let norm = &model.config.normalization;
    let features = model.features(norm.input(input));
    let mut weights = vec![0.0; model.params.mu.len()];
    let n = n_draws.max(1);
    let mut total = 0.0;
    for _ in 0..n {
        model.draw_output_weights(rng, &mut weights);
        total += norm.denormalize(BnnModel::output(&features, &weights));
    }
    Ppfd::new((total / n as f64).max(0.0)).unwrap_or(Ppfd::ZERO)
}

/// Autoregressive forecast for steps `step + 1 .. steps_per_day`, feeding each
/// prediction back as the next input.
pub fn predict_horizon(
    model: &BnnModel,
    step: usize,
    current: Ppfd,
    steps_per_day: usize,
    n_draws: usize,
    rng: &mut impl Rng,
) -> Vec<Ppfd> {
    let mut out = Vec::with_capacity(steps_per_day.saturating_sub(step + 1));
    let mut s = current;
    for t in step..steps_per_day.saturating_sub(1) {
        s = predict_mean(
            model,
            BnnInput {
                sun_ppfd: s.value(),
                step: t as f64,
            },
            n_draws,
            rng,
        );
        out.push(s);
    }
    out
}

/// Controller-facing wrapper. Each `(day, step)` forecast gets its own RNG
/// stream derived from `seed`, so forecasts are reproducible and independent
/// of call order.
#[derive(Debug, Clone)]
pub struct BnnPredictor {
    pub model: BnnModel,
    pub n_draws: usize,
    pub seed: u64,
}

impl BnnPredictor {
    pub fn new(model: BnnModel, seed: u64) -> Self {
        let n_draws = model.config.mc_samples_predict;
        Self { model, n_draws, seed }
    }
}

/// SplitMix64 finaliser, used to derive independent stream seeds.
pub(crate) fn mix_seed(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Predictor for BnnPredictor {
    fn name(&self) -> &str {
        "bnn"
    }

    fn predict_horizon(&self, obs: &Observation<'_>) -> Result<Vec<Ppfd>> {
        let stream = mix_seed(self.seed ^ mix_seed(obs.day_key ^ mix_seed(obs.step as u64)));
        let mut rng = ChaCha8Rng::seed_from_u64(stream);
        Ok(predict_horizon(&self.model, obs.step, obs.sun_ppfd, obs.steps_per_day, self.n_draws, &mut rng))
    }
}

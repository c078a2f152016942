//! Mini-batch training with Adam, global-norm clipping and resumable
//! checkpoints.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::autograd::{ParamStore, Tape};
use crate::data::generator::substream;
use crate::data::sequence::RecoverySample;
use crate::error::{Error, Result};
use crate::layers::Dropout;
use crate::model::checkpoint::{self, decode_f32, encode_f32};
use crate::model::{insertion_loss, Model, ModelConfig, TrainingExample};
use crate::tensor::Tensor;

const SHUFFLE_STREAM: u64 = 1 << 52;
const STEP_STREAM: u64 = 1 << 53;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr: f64,
    pub betas: (f64, f64),
    pub eps: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Total step count; overrides `epochs` when set.
    pub max_steps: Option<usize>,
    pub clip_norm: f64,
    pub seed: u64,
    /// Write a checkpoint every this many steps (needs a checkpoint path).
    pub checkpoint_every: Option<usize>,
    /// Probability of training on a later-round decoder state rather than
    /// the raw incomplete sequence.
    pub partial_state_prob: f64,
    /// Pad each batch to its longest state.
    pub pad_batches: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            betas: (0.9, 0.999),
            eps: 1e-8,
            batch_size: 64,
            epochs: 10,
            max_steps: None,
            clip_norm: 1.0,
            seed: 0,
            checkpoint_every: None,
            partial_state_prob: 0.5,
            pad_batches: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.lr)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if !(self.clip_norm > 0.0) {
            return Err(Error::Config("clip norm must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.partial_state_prob) {
            return Err(Error::Config("partial_state_prob outside [0, 1]".into()));
        }
        Ok(())
    }
}

/// First and second moment estimates, one pair per parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub t: u64,
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
    pub skipped: usize,
}

impl AdamState {
    pub fn new(store: &ParamStore) -> Self {
        let zeros: Vec<Tensor> = store
            .iter()
            .map(|(_, p)| Tensor::zeros(p.value.shape()))
            .collect();
        Self {
            t: 0,
            m: zeros.clone(),
            v: zeros,
            skipped: 0,
        }
    }
}

pub fn global_norm(grads: &[Tensor]) -> f64 {
    grads
        .iter()
        .flat_map(|g| g.data())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
}

/// Rescales `grads` so their joint L2 norm is at most `max_norm`. Returns
/// the norm before clipping.
pub fn clip_global_norm(grads: &mut [Tensor], max_norm: f64) -> f64 {
    let norm = global_norm(grads);
    if norm > max_norm {
        let k = max_norm / norm;
        grads.iter_mut().for_each(|g| g.scale_assign(k));
    }
    norm
}

/// Clips, then applies one bias-corrected Adam update. A non-finite gradient
/// skips the step (parameters and moments untouched) and is counted in
/// `state.skipped`. Returns whether the step was applied.
pub fn adam_step(
    store: &mut ParamStore,
    mut grads: Vec<Tensor>,
    state: &mut AdamState,
    config: &TrainConfig,
) -> Result<bool> {
    if grads.len() != store.len() {
        return Err(Error::dim("adam_step", &[grads.len()], &[store.len()]));
    }
    let norm = clip_global_norm(&mut grads, config.clip_norm);
    if !norm.is_finite() {
        state.skipped += 1;
        return Ok(false);
    }
    state.t += 1;
    let (b1, b2) = config.betas;
    let c1 = 1.0 - b1.powi(state.t as i32);
    let c2 = 1.0 - b2.powi(state.t as i32);
    for (((p, g), m), v) in store
        .iter_mut()
        .zip(&grads)
        .zip(&mut state.m)
        .zip(&mut state.v)
    {
        let (pd, gd) = (p.value.data_mut(), g.data());
        let (md, vd) = (m.data_mut(), v.data_mut());
        for i in 0..pd.len() {
            md[i] = b1 * md[i] + (1.0 - b1) * gd[i];
            vd[i] = b2 * vd[i] + (1.0 - b2) * gd[i] * gd[i];
            let mh = md[i] / c1;
            let vh = vd[i] / c2;
            pd[i] -= config.lr * mh / (vh.sqrt() + config.eps);
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub flavor: String,
    pub steps: usize,
    pub skipped_steps: usize,
    pub losses: Vec<f64>,
    pub checksum: String,
    pub wall_clock_secs: f64,
    pub model_config: ModelConfig,
    pub train_config: TrainConfig,
}

impl TrainReport {
    /// Mean of the first and last `window` losses.
    pub fn smoothed_ends(&self, window: usize) -> (f64, f64) {
        let n = self.losses.len();
        let w = window.clamp(1, n.max(1));
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len().max(1) as f64;
        (mean(&self.losses[..w.min(n)]), mean(&self.losses[n.saturating_sub(w)..]))
    }
}

#[derive(Serialize, Deserialize)]
struct TrainerState {
    step: usize,
    adam_t: u64,
    skipped: usize,
    losses: Vec<f64>,
    train_config: TrainConfig,
    moments: String,
}

fn state_path(path: &Path) -> PathBuf {
    path.with_extension("trainer.json")
}

fn moments_path(path: &Path) -> PathBuf {
    path.with_extension("moments.bin")
}

/// Owns a model and its optimizer state across steps.
pub struct Trainer {
    pub model: Model,
    pub config: TrainConfig,
    pub adam: AdamState,
    pub step: usize,
    pub losses: Vec<f64>,
}

impl Trainer {
    pub fn new(model: Model, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let adam = AdamState::new(&model.store);
        Ok(Self {
            model,
            config,
            adam,
            step: 0,
            losses: Vec::new(),
        })
    }

    fn steps_per_epoch(&self, n: usize) -> usize {
        n.div_ceil(self.config.batch_size)
    }

    pub fn total_steps(&self, n: usize) -> usize {
        self.config
            .max_steps
            .unwrap_or(self.steps_per_epoch(n) * self.config.epochs)
    }

    /// Batch indices for global step `step`: epoch `e` uses its own seeded
    /// permutation, so any step can be reconstructed without replaying.
    fn batch_indices(&self, n: usize, step: usize) -> Vec<usize> {
        let per = self.steps_per_epoch(n);
        let epoch = (step / per) as u64;
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut substream(self.config.seed, SHUFFLE_STREAM + epoch));
        let b = step % per;
        let end = ((b + 1) * self.config.batch_size).min(n);
        order[b * self.config.batch_size..end].to_vec()
    }

    /// One optimization step on the given samples. Returns the batch loss.
    pub fn step_on(&mut self, batch: &[&RecoverySample]) -> Result<f64> {
        let mut rng = substream(self.config.seed, STEP_STREAM + self.step as u64);
        let examples = batch
            .iter()
            .map(|s| TrainingExample::sample(s, self.config.partial_state_prob, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let refs: Vec<&TrainingExample> = examples.iter().collect();
        let pad = self
            .config
            .pad_batches
            .then(|| refs.iter().map(|e| e.state.len()).max().unwrap_or(0) + 2);

        let rate = self.model.config.dropout;
        let mut dropout = if rate > 0.0 {
            Dropout::On { rate, rng: &mut rng }
        } else {
            Dropout::Off
        };
        let outcome = {
            let mut tape = Tape::new(&self.model.store);
            match insertion_loss(&self.model, &mut tape, &refs, pad, &mut dropout) {
                Ok(loss) => {
                    let value = tape.value(loss).data()[0];
                    tape.backward(loss).map(|g| Some((value, g)))
                }
                Err(Error::Numeric(_)) => Ok(None),
                Err(e) => Err(e),
            }
        }?;
        self.step += 1;
        let Some((value, grads)) = outcome else {
            self.adam.skipped += 1;
            self.losses.push(f64::NAN);
            return Ok(f64::NAN);
        };
        let grads: Vec<Tensor> = grads
            .into_param_grads()
            .into_iter()
            .zip(self.model.store.iter())
            .map(|(g, (_, p))| g.unwrap_or_else(|| Tensor::zeros(p.value.shape())))
            .collect();
        adam_step(&mut self.model.store, grads, &mut self.adam, &self.config)?;
        self.losses.push(value);
        Ok(value)
    }

    /// Trains until `total_steps`, writing checkpoints to `checkpoint` if
    /// configured. Picks up from `self.step` after a resume.
    pub fn run(&mut self, samples: &[RecoverySample], checkpoint: Option<&Path>) -> Result<TrainReport> {
        if samples.is_empty() {
            return Err(Error::Config("training set is empty".into()));
        }
        let started = Instant::now();
        let total = self.total_steps(samples.len());
        while self.step < total {
            let idx = self.batch_indices(samples.len(), self.step);
            let batch: Vec<&RecoverySample> = idx.iter().map(|&i| &samples[i]).collect();
            self.step_on(&batch)?;
            if let (Some(every), Some(path)) = (self.config.checkpoint_every, checkpoint) {
                if every > 0 && self.step.is_multiple_of(every) {
                    self.save(path)?;
                }
            }
        }
        if let Some(path) = checkpoint {
            self.save(path)?;
        }
        Ok(self.report(started.elapsed().as_secs_f64()))
    }

    pub fn report(&self, wall_clock_secs: f64) -> TrainReport {
        TrainReport {
            flavor: if self.model.config.use_vsn { "vsnit" } else { "baseline" }.into(),
            steps: self.step,
            skipped_steps: self.adam.skipped,
            losses: self.losses.clone(),
            checksum: checkpoint::checksum(&self.model),
            wall_clock_secs,
            model_config: self.model.config.clone(),
            train_config: self.config.clone(),
        }
    }

    /// Writes the model checkpoint plus optimizer state next to it.
    pub fn save(&self, path: &Path) -> Result<()> {
        checkpoint::save(&self.model, path)?;
        let moments = moments_path(path);
        fs::write(&moments, encode_f32(self.adam.m.iter().chain(&self.adam.v)))?;
        let state = TrainerState {
            step: self.step,
            adam_t: self.adam.t,
            skipped: self.adam.skipped,
            losses: self.losses.clone(),
            train_config: self.config.clone(),
            moments: moments
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
        };
        fs::write(state_path(path), serde_json::to_string(&state)? + "\n")?;
        Ok(())
    }

    /// Restores model, optimizer state, step counter and loss history. The
    /// stored training config is used unless `config` overrides it.
    pub fn resume(path: &Path, config: Option<TrainConfig>) -> Result<Self> {
        let model = checkpoint::load(path)?;
        let state: TrainerState = serde_json::from_str(&fs::read_to_string(state_path(path))?)?;
        let config = config.unwrap_or(state.train_config);
        config.validate()?;
        let shapes: Vec<Vec<usize>> = model
            .store
            .iter()
            .map(|(_, p)| p.value.shape().to_vec())
            .collect();
        let both: Vec<Vec<usize>> = shapes.iter().chain(&shapes).cloned().collect();
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        let mut moments = decode_f32(&fs::read(dir.join(&state.moments))?, &both)?;
        let v = moments.split_off(shapes.len());
        Ok(Self {
            model,
            config,
            adam: AdamState {
                t: state.adam_t,
                m: moments,
                v,
                skipped: state.skipped,
            },
            step: state.step,
            losses: state.losses,
        })
    }
}

/// Builds a model from `model_config` and trains it on `samples`.
pub fn train(
    samples: &[RecoverySample],
    model_config: &ModelConfig,
    train_config: &TrainConfig,
) -> Result<(Model, TrainReport)> {
    let mut trainer = Trainer::new(Model::new(model_config.clone())?, train_config.clone())?;
    let report = trainer.run(samples, None)?;
    Ok((trainer.model, report))
}

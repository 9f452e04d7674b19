//! Streamed-synthetic training.
//!
//! Every batch is freshly generated: the stream draws a Hurst label
//! uniformly from (0, 1) per sequence and simulates a new path, so the
//! network never sees a sequence twice and the loss on the next fresh
//! batches doubles as the validation loss. Training consumes batches in
//! a fixed deterministic order (per epoch: the train steps, then the
//! validation batches), generated on a producer thread ahead of the
//! optimizer through a bounded queue. Batch `k` of either stream is
//! always built from the same generator stream indices, so prefetch
//! depth and thread scheduling cannot change the result.

use std::sync::mpsc;

use ndarray::Array2;

use super::backprop::{loss_and_gradients, Gradients};
use super::model::{pack_sequences, Architecture, LstmModel, ModelMeta, Scalar};
use super::preprocess::StandardizedIncrements;
use crate::error::{Error, Result};
use crate::generators::{BatchRequest, FouScheme, Generator, HurstSampling, LfsmMesh};
use crate::process::{ProcessKind, ProcessParams};
use crate::seed::SeedScheme;

/// Training loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LossKind {
    #[default]
    Mse,
    Mae,
}

impl LossKind {
    pub fn name(&self) -> &'static str {
        match self {
            LossKind::Mse => "mse",
            LossKind::Mae => "mae",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "mse" => Ok(LossKind::Mse),
            "mae" => Ok(LossKind::Mae),
            other => Err(Error::InvalidParameter(format!(
                "unknown loss {other:?}, expected mse or mae"
            ))),
        }
    }
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Full specification of a training run. Identical configs produce
/// identical weights.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub architecture: Architecture,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub loss: LossKind,
    pub epochs: usize,
    pub sequences_per_epoch: usize,
    pub batch_size: usize,
    pub validation_batch_size: usize,
    /// Fresh validation batches drawn after each epoch.
    pub validation_batches: usize,
    /// Path length of the streamed sequences; the grid step is its
    /// reciprocal, as if each path lived on [0, 1].
    pub sequence_length: usize,
    /// Process the stream simulates. The Hurst value inside is ignored;
    /// labels are drawn uniformly per sequence. Only fBm and fOU streams
    /// are supported: there is no generator fast enough to stream the
    /// stable-driven process at training volume.
    pub process: ProcessParams,
    pub fou_scheme: FouScheme,
    pub seed: u64,
    /// Bound on batches generated ahead of the optimizer (0 = lockstep).
    pub prefetch_batches: usize,
}

impl TrainConfig {
    pub fn new(process: ProcessParams, sequence_length: usize, seed: u64) -> Self {
        TrainConfig {
            architecture: Architecture::default(),
            learning_rate: 1e-4,
            weight_decay: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            loss: LossKind::Mse,
            epochs: 25,
            sequences_per_epoch: 100_000,
            batch_size: 32,
            validation_batch_size: 128,
            validation_batches: 8,
            sequence_length,
            process,
            fou_scheme: FouScheme::default(),
            seed,
            prefetch_batches: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.architecture.validate()?;
        self.process.validate()?;
        if self.process.kind() == ProcessKind::Lfsm {
            return Err(Error::InvalidParameter(
                "training stream supports fbm and fou only".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "learning rate out of (0,inf): {}",
                self.learning_rate
            )));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "weight decay out of [0,inf): {}",
                self.weight_decay
            )));
        }
        for (name, beta) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&beta) {
                return Err(Error::InvalidParameter(format!(
                    "{name} out of [0,1): {beta}"
                )));
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "epsilon out of (0,inf): {}",
                self.epsilon
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidParameter("epochs out of [1,inf): 0".into()));
        }
        if self.batch_size == 0 || self.validation_batch_size == 0 || self.validation_batches == 0
        {
            return Err(Error::InvalidParameter(
                "batch sizes and validation batches must be at least 1".into(),
            ));
        }
        if self.sequences_per_epoch < self.batch_size {
            return Err(Error::InvalidParameter(format!(
                "sequences per epoch {} below batch size {}",
                self.sequences_per_epoch, self.batch_size
            )));
        }
        if self.sequence_length < 3 {
            return Err(Error::InvalidParameter(format!(
                "sequence length out of [3,inf): {}",
                self.sequence_length
            )));
        }
        Ok(())
    }
}

/// One generated batch: raw paths and their Hurst labels.
#[derive(Debug, Clone)]
pub struct LabeledBatch {
    pub paths: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
}

/// Anything that can feed labeled sequences to the trainer.
pub trait SequenceSource: Send {
    fn next_batch(&mut self, count: usize) -> Result<LabeledBatch>;
}

/// Labeled batches straight out of a process generator. Consecutive
/// calls consume consecutive stream indices of the same seed scheme, so
/// the k-th sequence ever produced is a pure function of the scheme.
pub struct SyntheticSource<'g> {
    generator: &'g Generator,
    params: ProcessParams,
    sequence_length: usize,
    dt: f64,
    fou_scheme: FouScheme,
    seeds: SeedScheme,
    next_index: u64,
}

impl<'g> SyntheticSource<'g> {
    pub fn new(
        generator: &'g Generator,
        params: ProcessParams,
        sequence_length: usize,
        fou_scheme: FouScheme,
        seeds: SeedScheme,
    ) -> Self {
        SyntheticSource {
            generator,
            params,
            sequence_length,
            dt: 1.0 / sequence_length as f64,
            fou_scheme,
            seeds,
            next_index: 0,
        }
    }
}

impl SequenceSource for SyntheticSource<'_> {
    fn next_batch(&mut self, count: usize) -> Result<LabeledBatch> {
        let req = BatchRequest {
            params: self.params,
            n: self.sequence_length,
            dt: self.dt,
            count: count as u64,
            first_index: self.next_index,
            seeds: self.seeds,
            hurst_sampling: HurstSampling::Uniform,
            fou_scheme: self.fou_scheme,
            lfsm_mesh: LfsmMesh::default(),
        };
        let batch = self.generator.batch(&req)?;
        self.next_index += count as u64;
        let mut paths = Vec::with_capacity(batch.len());
        let mut labels = Vec::with_capacity(batch.len());
        for t in batch {
            labels.push(t.true_hurst().ok_or_else(|| {
                Error::InvalidParameter("training trajectory without a label".into())
            })?);
            paths.push(t.values);
        }
        Ok(LabeledBatch { paths, labels })
    }
}

/// Per-epoch loss record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

/// Result of a run: the best-by-validation weights, the final weights,
/// and the loss history.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: LstmModel<f32>,
    pub final_model: LstmModel<f32>,
    pub best_epoch: usize,
    pub history: Vec<EpochStats>,
}

/// Loss history as CSV.
pub fn history_csv(history: &[EpochStats], loss: LossKind) -> String {
    let mut out = String::from("epoch,train_loss,val_loss,loss_kind\n");
    for row in history {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.epoch, row.train_loss, row.val_loss, loss
        ));
    }
    out
}

/// Decoupled-weight-decay Adam over the flat parameter slices.
pub(crate) struct AdamW<F> {
    lr: F,
    wd: F,
    beta1: F,
    beta2: F,
    eps: F,
    step: i32,
    m: Vec<Vec<F>>,
    v: Vec<Vec<F>>,
}

impl<F: Scalar> AdamW<F> {
    pub(crate) fn new(cfg: &TrainConfig, sizes: &[usize]) -> Self {
        AdamW {
            lr: F::from_f64(cfg.learning_rate),
            wd: F::from_f64(cfg.weight_decay),
            beta1: F::from_f64(cfg.beta1),
            beta2: F::from_f64(cfg.beta2),
            eps: F::from_f64(cfg.epsilon),
            step: 0,
            m: sizes.iter().map(|&s| vec![F::zero(); s]).collect(),
            v: sizes.iter().map(|&s| vec![F::zero(); s]).collect(),
        }
    }

    pub(crate) fn step(&mut self, params: &mut [&mut [F]], grads: &[&[F]]) {
        self.step += 1;
        let bc1 = F::one() - self.beta1.powi(self.step);
        let bc2 = F::one() - self.beta2.powi(self.step);
        let one = F::one();
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            for k in 0..p.len() {
                let grad = g[k];
                m[k] = self.beta1 * m[k] + (one - self.beta1) * grad;
                v[k] = self.beta2 * v[k] + (one - self.beta2) * grad * grad;
                let mhat = m[k] / bc1;
                let vhat = v[k] / bc2;
                p[k] = p[k] - self.lr * (mhat / (vhat.sqrt() + self.eps) + self.wd * p[k]);
            }
        }
    }
}

enum StreamItem {
    Train(LabeledBatch),
    Val(LabeledBatch),
}

/// Trains a fresh model on synthetic batches streamed from `generator`.
pub fn train(generator: &Generator, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let seeds = SeedScheme::new(cfg.seed);
    let mut model = LstmModel::<f32>::init_with_rng(
        cfg.architecture,
        &mut seeds.child(2).stream(0),
    )?;
    model.meta = ModelMeta {
        loss: cfg.loss,
        epochs: cfg.epochs as u32,
        sequence_length: cfg.sequence_length as u32,
        seed: cfg.seed,
    };

    let steps_per_epoch = cfg.sequences_per_epoch / cfg.batch_size;
    let sizes: Vec<usize> = model.param_slices().iter().map(|s| s.len()).collect();
    let mut opt = AdamW::<f32>::new(cfg, &sizes);

    let (tx, rx) = mpsc::sync_channel::<Result<StreamItem>>(cfg.prefetch_batches);
    let epochs = cfg.epochs;
    let (batch_size, val_size, val_batches) = (
        cfg.batch_size,
        cfg.validation_batch_size,
        cfg.validation_batches,
    );

    std::thread::scope(|scope| {
        // owned by the closure: dropping it on an early error return
        // unblocks the producer's send so the scope can join
        let rx = rx;
        let mut train_src = SyntheticSource::new(
            generator,
            cfg.process,
            cfg.sequence_length,
            cfg.fou_scheme,
            seeds.child(0),
        );
        let mut val_src = SyntheticSource::new(
            generator,
            cfg.process,
            cfg.sequence_length,
            cfg.fou_scheme,
            seeds.child(1),
        );
        scope.spawn(move || {
            'produce: for _ in 0..epochs {
                for _ in 0..steps_per_epoch {
                    let item = train_src.next_batch(batch_size).map(StreamItem::Train);
                    if tx.send(item).is_err() {
                        break 'produce;
                    }
                }
                for _ in 0..val_batches {
                    let item = val_src.next_batch(val_size).map(StreamItem::Val);
                    if tx.send(item).is_err() {
                        break 'produce;
                    }
                }
            }
        });

        let mut history = Vec::with_capacity(epochs);
        let mut best: Option<(f64, usize, LstmModel<f32>)> = None;

        for epoch in 1..=epochs {
            let mut train_sum = 0.0;
            let mut finite_steps = 0usize;
            for _ in 0..steps_per_epoch {
                let batch = match recv(&rx)? {
                    StreamItem::Train(b) => b,
                    StreamItem::Val(_) => unreachable!("stream order is fixed"),
                };
                let (packed, steps) = pack_batch::<f32>(&batch)?;
                match loss_and_gradients(&model, packed.view(), steps, &batch.labels, cfg.loss)
                {
                    Ok((loss, grads)) => {
                        apply_step(&mut opt, &mut model, &grads);
                        train_sum += loss;
                        finite_steps += 1;
                    }
                    // a non-finite batch is skipped; only a whole epoch of
                    // them counts as divergence
                    Err(Error::NonFinite(_)) => {}
                    Err(e) => return Err(e),
                }
            }
            if finite_steps == 0 {
                return Err(Error::OptimizationFailure(format!(
                    "training loss was non-finite for all of epoch {epoch}"
                )));
            }

            let mut val_sum = 0.0;
            for _ in 0..val_batches {
                let batch = match recv(&rx)? {
                    StreamItem::Val(b) => b,
                    StreamItem::Train(_) => unreachable!("stream order is fixed"),
                };
                val_sum += validation_loss(&model, &batch, cfg.loss)?;
            }
            let val_loss = val_sum / val_batches as f64;
            let train_loss = train_sum / finite_steps as f64;
            history.push(EpochStats {
                epoch,
                train_loss,
                val_loss,
            });
            if val_loss.is_finite() && best.as_ref().map_or(true, |(b, _, _)| val_loss < *b) {
                best = Some((val_loss, epoch, model.clone()));
            }
        }

        let (best_epoch, best_model) = match best {
            Some((_, e, m)) => (e, m),
            None => (epochs, model.clone()),
        };
        Ok(TrainOutcome {
            model: best_model,
            final_model: model,
            best_epoch,
            history,
        })
    })
}

fn recv(rx: &mpsc::Receiver<Result<StreamItem>>) -> Result<StreamItem> {
    rx.recv()
        .expect("producer lives while batches are pending")
}

fn apply_step(opt: &mut AdamW<f32>, model: &mut LstmModel<f32>, grads: &Gradients<f32>) {
    let grad_slices = grads.slices();
    let mut param_slices = model.param_slices_mut();
    opt.step(&mut param_slices, &grad_slices);
}

pub(crate) fn pack_batch<F: Scalar>(batch: &LabeledBatch) -> Result<(Array2<F>, usize)> {
    let seqs: Vec<StandardizedIncrements> = batch
        .paths
        .iter()
        .map(|p| StandardizedIncrements::new(p))
        .collect::<Result<_>>()?;
    if seqs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let steps = seqs[0].len();
    Ok((pack_sequences(&seqs)?, steps))
}

fn validation_loss(model: &LstmModel<f32>, batch: &LabeledBatch, loss: LossKind) -> Result<f64> {
    let (packed, steps) = pack_batch::<f32>(batch)?;
    let preds = model.forward_packed(packed.view(), steps)?;
    let mut sum = 0.0;
    for (p, &y) in preds.iter().zip(&batch.labels) {
        let r = p.as_f64() - y;
        sum += match loss {
            LossKind::Mse => r * r,
            LossKind::Mae => r.abs(),
        };
    }
    Ok(sum / batch.labels.len() as f64)
}

//! Optimization loop: ADAM with bias correction, inverse-time learning-rate
//! decay, global-norm gradient clipping, early stopping on validation
//! accuracy, best-checkpoint selection.

use crate::corpus::LabeledText;
use crate::error::{Error, Result};
use crate::model::{backward, forward, Hyperparams, Mode, ModelParams};
use crate::real::Real;
use crate::vocab::CharVocab;
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Training settings. Defaults: lr 0.001, decay_rate 0.05, max_epochs 512,
/// patience 64, clip_rate 5, dropout 0.5, batch_size 256.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub decay_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub clip_rate: f64,
    pub dropout: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.001,
            decay_rate: 0.05,
            max_epochs: 512,
            patience: 64,
            clip_rate: 5.0,
            dropout: 0.5,
            batch_size: 256,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        // lr = 0 is allowed: it freezes the parameters, which is useful for
        // exercising the early-stopping machinery in isolation
        if self.lr < 0.0 || self.decay_rate < 0.0 || self.clip_rate <= 0.0 {
            return Err(Error::Usage("lr and decay_rate must be >= 0, clip_rate > 0".into()));
        }
        if self.max_epochs == 0 || self.batch_size == 0 {
            return Err(Error::Usage("max_epochs and batch_size must be >= 1".into()));
        }
        if self.patience == 0 || self.patience > self.max_epochs {
            return Err(Error::Usage("patience must be in [1, max_epochs]".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Usage("dropout must be in [0, 1)".into()));
        }
        Ok(())
    }
}

/// ADAM moment accumulators, shapes mirroring [`ModelParams`].
pub struct OptimizerState<F: Real> {
    pub m: ModelParams<F>,
    pub v: ModelParams<F>,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl<F: Real> OptimizerState<F> {
    /// Canonical constants: beta1 0.9, beta2 0.999, eps 1e-8.
    pub fn new(params: &ModelParams<F>) -> Self {
        OptimizerState {
            m: params.zeros_like(),
            v: params.zeros_like(),
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// In-place global-norm clipping: if the joint L2 norm exceeds `clip_rate`,
/// every gradient is scaled by `clip_rate / norm`.
pub fn clip_gradients<F: Real>(grads: &mut ModelParams<F>, clip_rate: f64) {
    let mut sq = 0.0f64;
    for s in grads.slices() {
        for &g in s {
            let g = g.as_f64();
            sq += g * g;
        }
    }
    let norm = sq.sqrt();
    if norm > clip_rate {
        let scale = F::from_f64(clip_rate / norm);
        for s in grads.slices_mut() {
            for g in s {
                *g *= scale;
            }
        }
    }
}

/// Inverse-time decay: lr / (1 + decay_rate * epoch).
pub fn decayed_lr(epoch: usize, cfg: &TrainConfig) -> f64 {
    cfg.lr / (1.0 + cfg.decay_rate * epoch as f64)
}

/// One bias-corrected ADAM update. Gradients must be finite.
pub fn adam_step<F: Real>(
    params: &mut ModelParams<F>,
    grads: &ModelParams<F>,
    state: &mut OptimizerState<F>,
    lr: f64,
) -> Result<()> {
    for s in grads.slices() {
        if s.iter().any(|g| !g.is_finite()) {
            return Err(Error::Numeric("non-finite gradient in ADAM step".into()));
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let b1 = F::from_f64(state.beta1);
    let b2 = F::from_f64(state.beta2);
    let one = F::one();
    let corr1 = F::from_f64(1.0 - state.beta1.powi(t));
    let corr2 = F::from_f64(1.0 - state.beta2.powi(t));
    let lr = F::from_f64(lr);
    let eps = F::from_f64(state.eps);
    let mut p = params.slices_mut();
    let g = grads.slices();
    let mut m = state.m.slices_mut();
    let mut v = state.v.slices_mut();
    for k in 0..p.len() {
        let (p, g, m, v) = (&mut p[k], g[k], &mut m[k], &mut v[k]);
        for i in 0..g.len() {
            let gi = g[i];
            m[i] = b1 * m[i] + (one - b1) * gi;
            v[i] = b2 * v[i] + (one - b2) * gi * gi;
            let mhat = m[i] / corr1;
            let vhat = v[i] / corr2;
            p[i] -= lr * mhat / (vhat.sqrt() + eps);
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub valid_accuracy: f64,
    pub valid_loss: f64,
    pub lr: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    pub best_epoch: usize,
    pub best_valid_accuracy: f64,
    pub stopping_reason: String,
}

fn encode_set(
    set: &[LabeledText],
    languages: &[String],
    vocab: &CharVocab,
    max_len: usize,
    which: &str,
) -> Result<(Vec<Vec<usize>>, Vec<usize>)> {
    let mut seqs = Vec::with_capacity(set.len());
    let mut labels = Vec::with_capacity(set.len());
    for rec in set {
        let idx = languages.iter().position(|l| *l == rec.label).ok_or_else(|| {
            Error::Data(format!("{which} split has label '{}' outside the model's language set", rec.label))
        })?;
        seqs.push(vocab.encode(&rec.text, max_len));
        labels.push(idx);
    }
    Ok((seqs, labels))
}

fn validation_pass<F: Real>(
    seqs: &[Vec<usize>],
    labels: &[usize],
    params: &ModelParams<F>,
    hp: &Hyperparams,
    batch_size: usize,
) -> Result<(f64, f64)> {
    let mut correct = 0usize;
    let mut loss_sum = 0.0f64;
    for (chunk, gold) in seqs.chunks(batch_size).zip(labels.chunks(batch_size)) {
        let trace = forward(chunk.to_vec(), params, hp, Mode::Infer, None)?;
        loss_sum += trace.loss(gold).as_f64() * gold.len() as f64;
        for (b, &g) in gold.iter().enumerate() {
            let col = trace.probs.column(b);
            let mut best = 0usize;
            for l in 1..hp.n_languages {
                if col[l] > col[best] {
                    best = l;
                }
            }
            if best == g {
                correct += 1;
            }
        }
    }
    Ok((correct as f64 / labels.len() as f64, loss_sum / labels.len() as f64))
}

/// Train a model from scratch, returning the parameters of the epoch with the
/// best validation accuracy (not the last).
///
/// Initialization, shuffling, and dropout all flow from one generator seeded
/// with `cfg.seed`, so identical inputs produce identical reports.
pub fn train<F: Real>(
    train_set: &[LabeledText],
    valid_set: &[LabeledText],
    languages: &[String],
    vocab: &CharVocab,
    hp: &Hyperparams,
    cfg: &TrainConfig,
) -> Result<(ModelParams<F>, TrainReport)> {
    cfg.validate()?;
    let mut hp = hp.clone();
    hp.dropout_rate = cfg.dropout;
    hp.validate()?;
    if train_set.is_empty() || valid_set.is_empty() {
        return Err(Error::Data("train and validation splits must be non-empty".into()));
    }
    if languages.len() != hp.n_languages {
        return Err(Error::Usage(format!(
            "{} languages given but model expects {}",
            languages.len(),
            hp.n_languages
        )));
    }
    let (train_seqs, train_labels) =
        encode_set(train_set, languages, vocab, hp.max_len, "train")?;
    let (valid_seqs, valid_labels) =
        encode_set(valid_set, languages, vocab, hp.max_len, "validation")?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = ModelParams::<F>::init_with_rng(vocab.index_space(), &hp, &mut rng);
    let mut state = OptimizerState::new(&params);
    let mut best_params = params.clone();
    let mut best_acc = f64::NEG_INFINITY;
    let mut best_loss = f64::INFINITY;
    let mut best_epoch = 0usize;
    let mut since_best = 0usize;
    let mut report = TrainReport {
        epochs: Vec::new(),
        best_epoch: 0,
        best_valid_accuracy: 0.0,
        stopping_reason: "max_epochs".into(),
    };

    let mut order: Vec<usize> = (0..train_seqs.len()).collect();
    for epoch in 0..cfg.max_epochs {
        let lr = decayed_lr(epoch, cfg);
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0f64;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let seqs: Vec<Vec<usize>> = chunk.iter().map(|&i| train_seqs[i].clone()).collect();
            let labels: Vec<usize> = chunk.iter().map(|&i| train_labels[i]).collect();
            let trace = forward(seqs, &params, &hp, Mode::Train, Some(&mut rng))?;
            let loss = trace.loss(&labels).as_f64();
            if !loss.is_finite() {
                return Err(Error::Numeric(format!(
                    "NaN loss at epoch {epoch}, batch {batches}"
                )));
            }
            loss_sum += loss;
            batches += 1;
            let mut grads = backward(&trace, &labels, &params, &hp)?;
            clip_gradients(&mut grads, cfg.clip_rate);
            adam_step(&mut params, &grads, &mut state, lr)?;
        }
        let train_loss = loss_sum / batches.max(1) as f64;
        let (acc, vloss) =
            validation_pass(&valid_seqs, &valid_labels, &params, &hp, cfg.batch_size)?;
        report.epochs.push(EpochStats {
            epoch,
            train_loss,
            valid_accuracy: acc,
            valid_loss: vloss,
            lr,
        });
        if std::env::var_os("LIDKIT_VERBOSE").is_some() {
            eprintln!(
                "epoch {epoch}: train loss {train_loss:.4}, valid acc {acc:.4}, valid loss {vloss:.4}, lr {lr:.6}"
            );
        }
        // checkpoint selection: accuracy first, validation loss as tie-break;
        // any checkpoint improvement counts as progress for early stopping
        if acc > best_acc || (acc == best_acc && vloss < best_loss) {
            best_acc = acc;
            best_loss = vloss;
            best_epoch = epoch;
            best_params = params.clone();
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                report.stopping_reason = "early_stopping".into();
                break;
            }
        }
    }
    report.best_epoch = best_epoch;
    report.best_valid_accuracy = best_acc;
    Ok((best_params, report))
}

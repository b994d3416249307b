//! The network: character embedding, zero-padded ngram-regional convolution,
//! max-pool or attention pooling head, affine output layer, softmax.
//!
//! Forward and backward passes are hand-written. The batched forward
//! concatenates all sequences of a batch column-wise so the convolution and
//! hidden layers run as a few large matrix products; pooling respects
//! per-sequence boundaries, so batch composition never changes the math.

mod backward;
mod ops;

pub use backward::backward;
pub use ops::{conv_ngram, embed_sequence, pool_attention, pool_max};

use crate::error::{Error, Result};
use crate::real::Real;
use crate::vocab::{CharVocab, PAD};
use ndarray::{s, Array1, Array2, Axis};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Pooling head variant on top of the convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Head {
    /// Row-wise max over positions (the baseline CNN).
    MaxPool,
    /// Learned weighted sum of regional feature vectors.
    Attention,
}

impl Head {
    pub fn parse(s: &str) -> Result<Head> {
        match s {
            "maxpool" => Ok(Head::MaxPool),
            "attention" => Ok(Head::Attention),
            other => Err(Error::Usage(format!("unknown head '{other}' (maxpool|attention)"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Head::MaxPool => "maxpool",
            Head::Attention => "attention",
        }
    }
}

/// Architecture dimensions and settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    /// Character embedding dimension (d).
    pub embed_dim: usize,
    /// Number of convolution filters (d_cnn).
    pub conv_dim: usize,
    /// Region size m (odd); the filter spans m consecutive characters.
    pub region: usize,
    /// Attention hidden dimension (d_hd).
    pub hidden_dim: usize,
    /// Number of languages (L).
    pub n_languages: usize,
    pub head: Head,
    /// Dropout rate applied in train mode to embedded columns and pooled h.
    pub dropout_rate: f64,
    /// Encoder truncation length in characters.
    pub max_len: usize,
}

impl Hyperparams {
    /// Defaults for everything but `n_languages` and `head`:
    /// d=50, d_cnn=100, m=5, d_hd=100, dropout 0.5, max_len 280.
    pub fn defaults(n_languages: usize, head: Head) -> Self {
        Hyperparams {
            embed_dim: 50,
            conv_dim: 100,
            region: 5,
            hidden_dim: 100,
            n_languages,
            head,
            dropout_rate: 0.5,
            max_len: 280,
        }
    }

    /// Zero-padding columns per side: p = (m-1)/2.
    pub fn padding(&self) -> usize {
        (self.region - 1) / 2
    }

    pub fn validate(&self) -> Result<()> {
        if self.region.is_multiple_of(2) {
            return Err(Error::Usage(format!("region size m must be odd, got {}", self.region)));
        }
        if self.embed_dim == 0
            || self.conv_dim == 0
            || self.hidden_dim == 0
            || self.n_languages == 0
            || self.region == 0
            || self.max_len == 0
        {
            return Err(Error::Usage("all dimensions must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Usage(format!(
                "dropout rate must be in [0, 1), got {}",
                self.dropout_rate
            )));
        }
        Ok(())
    }
}

/// All learnable tensors. The PAD embedding row stays exactly zero through
/// initialization, gradients, and optimizer updates.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<F: Real> {
    /// (V+2, d); row 0 is PAD, row 1 is UNK.
    pub embed: Array2<F>,
    /// (d_cnn, m*d)
    pub w_cnn: Array2<F>,
    /// (d_cnn)
    pub b_cnn: Array1<F>,
    /// (d_hd, d_cnn)
    pub w_hd: Array2<F>,
    /// (d_hd)
    pub b_hd: Array1<F>,
    /// Regional context vector u, (d_hd).
    pub ctx: Array1<F>,
    /// (L, d_cnn)
    pub w_out: Array2<F>,
    /// (L)
    pub b_out: Array1<F>,
}

fn glorot<F: Real>(rng: &mut ChaCha8Rng, rows: usize, cols: usize, fan_sum: usize) -> Array2<F> {
    let a = (6.0 / fan_sum as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || F::from_f64(rng.gen_range(-a..a)))
}

impl<F: Real> ModelParams<F> {
    /// Glorot-uniform weights, zero biases, zero PAD embedding row.
    pub fn init(index_space: usize, hp: &Hyperparams, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::init_with_rng(index_space, hp, &mut rng)
    }

    /// Like [`ModelParams::init`] but drawing from a caller-owned generator.
    pub fn init_with_rng(index_space: usize, hp: &Hyperparams, rng: &mut ChaCha8Rng) -> Self {
        let d = hp.embed_dim;
        let md = hp.region * d;
        let mut embed = glorot::<F>(rng, index_space, d, index_space + d);
        embed.row_mut(PAD).fill(F::zero());
        let w_cnn = glorot(rng, hp.conv_dim, md, hp.conv_dim + md);
        let w_hd = glorot(rng, hp.hidden_dim, hp.conv_dim, hp.hidden_dim + hp.conv_dim);
        let ctx = glorot::<F>(rng, hp.hidden_dim, 1, hp.hidden_dim + 1)
            .index_axis(Axis(1), 0)
            .to_owned();
        let w_out = glorot(rng, hp.n_languages, hp.conv_dim, hp.n_languages + hp.conv_dim);
        ModelParams {
            embed,
            w_cnn,
            b_cnn: Array1::zeros(hp.conv_dim),
            w_hd,
            b_hd: Array1::zeros(hp.hidden_dim),
            ctx,
            w_out,
            b_out: Array1::zeros(hp.n_languages),
        }
    }

    /// Same-shaped zero tensors (gradient / moment accumulators).
    pub fn zeros_like(&self) -> Self {
        ModelParams {
            embed: Array2::zeros(self.embed.raw_dim()),
            w_cnn: Array2::zeros(self.w_cnn.raw_dim()),
            b_cnn: Array1::zeros(self.b_cnn.raw_dim()),
            w_hd: Array2::zeros(self.w_hd.raw_dim()),
            b_hd: Array1::zeros(self.b_hd.raw_dim()),
            ctx: Array1::zeros(self.ctx.raw_dim()),
            w_out: Array2::zeros(self.w_out.raw_dim()),
            b_out: Array1::zeros(self.b_out.raw_dim()),
        }
    }

    /// Flat mutable views over every tensor, in checkpoint order.
    pub fn slices_mut(&mut self) -> Vec<&mut [F]> {
        vec![
            self.embed.as_slice_mut().expect("contiguous"),
            self.w_cnn.as_slice_mut().expect("contiguous"),
            self.b_cnn.as_slice_mut().expect("contiguous"),
            self.w_hd.as_slice_mut().expect("contiguous"),
            self.b_hd.as_slice_mut().expect("contiguous"),
            self.ctx.as_slice_mut().expect("contiguous"),
            self.w_out.as_slice_mut().expect("contiguous"),
            self.b_out.as_slice_mut().expect("contiguous"),
        ]
    }

    /// Flat read-only views, same order as `slices_mut`.
    pub fn slices(&self) -> Vec<&[F]> {
        vec![
            self.embed.as_slice().expect("contiguous"),
            self.w_cnn.as_slice().expect("contiguous"),
            self.b_cnn.as_slice().expect("contiguous"),
            self.w_hd.as_slice().expect("contiguous"),
            self.b_hd.as_slice().expect("contiguous"),
            self.ctx.as_slice().expect("contiguous"),
            self.w_out.as_slice().expect("contiguous"),
            self.b_out.as_slice().expect("contiguous"),
        ]
    }

    pub fn convert<G: Real>(&self) -> ModelParams<G> {
        ModelParams {
            embed: self.embed.mapv(|v| G::from_f64(v.as_f64())),
            w_cnn: self.w_cnn.mapv(|v| G::from_f64(v.as_f64())),
            b_cnn: self.b_cnn.mapv(|v| G::from_f64(v.as_f64())),
            w_hd: self.w_hd.mapv(|v| G::from_f64(v.as_f64())),
            b_hd: self.b_hd.mapv(|v| G::from_f64(v.as_f64())),
            ctx: self.ctx.mapv(|v| G::from_f64(v.as_f64())),
            w_out: self.w_out.mapv(|v| G::from_f64(v.as_f64())),
            b_out: self.b_out.mapv(|v| G::from_f64(v.as_f64())),
        }
    }
}

/// Train/infer switch; train mode samples dropout masks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

/// Cached activations of one batch forward pass, consumed by [`backward`].
///
/// Sequences are stored concatenated column-wise; `offsets[i]..offsets[i+1]`
/// is the column range of sequence `i`.
pub struct ForwardTrace<F: Real> {
    pub seqs: Vec<Vec<usize>>,
    pub offsets: Vec<usize>,
    /// Embedded batch after dropout, (d, total).
    pub x: Array2<F>,
    /// Inverted-scaling dropout factors for x (train mode only).
    pub x_mask: Option<Array2<F>>,
    /// Post-ReLU convolution features, (d_cnn, total).
    pub conv: Array2<F>,
    /// Post-ReLU regional hidden vectors (attention head), (d_hd, total).
    pub hidden: Option<Array2<F>>,
    /// Attention weights, concatenated per sequence (attention head).
    pub alpha: Option<Array1<F>>,
    /// Per-sequence, per-row argmax column (max-pool head), (d_cnn * batch).
    pub argmax: Option<Vec<usize>>,
    /// Pooled representation after dropout, (d_cnn, batch).
    pub pooled: Array2<F>,
    /// Inverted-scaling dropout factors for pooled h (train mode only).
    pub pooled_mask: Option<Array2<F>>,
    /// (L, batch)
    pub logits: Array2<F>,
    /// Softmax probabilities, (L, batch).
    pub probs: Array2<F>,
}

impl<F: Real> ForwardTrace<F> {
    pub fn batch_len(&self) -> usize {
        self.seqs.len()
    }

    /// Attention weights of sequence `i`.
    pub fn alpha_of(&self, i: usize) -> Option<Vec<F>> {
        let alpha = self.alpha.as_ref()?;
        Some(alpha.slice(s![self.offsets[i]..self.offsets[i + 1]]).to_vec())
    }

    /// Mean cross-entropy of the batch against `labels`.
    pub fn loss(&self, labels: &[usize]) -> F {
        assert_eq!(labels.len(), self.batch_len());
        let mut total = F::zero();
        for (b, &gold) in labels.iter().enumerate() {
            total -= self.probs[[gold, b]].ln();
        }
        total / F::from_f64(labels.len() as f64)
    }
}

/// Build the concatenated im2col matrix (m*d, total) from embedded columns,
/// zero-padding p columns at each sequence boundary.
pub(crate) fn build_columns<F: Real>(
    x: &Array2<F>,
    offsets: &[usize],
    hp: &Hyperparams,
) -> Array2<F> {
    let d = hp.embed_dim;
    let p = hp.padding() as isize;
    let total = *offsets.last().unwrap();
    let mut col = Array2::<F>::zeros((hp.region * d, total));
    for w in offsets.windows(2) {
        let (o, end) = (w[0], w[1]);
        let n = end - o;
        for k in 0..hp.region {
            let shift = k as isize - p;
            // destination positions i where source j = i + shift stays in range
            let i0 = (-shift).max(0) as usize;
            let i1 = ((n as isize - shift).min(n as isize)).max(0) as usize;
            if i0 >= i1 {
                continue;
            }
            let src = x.slice(s![
                ..,
                (o as isize + i0 as isize + shift) as usize..(o as isize + i1 as isize + shift) as usize
            ]);
            col.slice_mut(s![k * d..(k + 1) * d, o + i0..o + i1]).assign(&src);
        }
    }
    col
}

fn relu_inplace<F: Real>(a: &mut Array2<F>) {
    a.mapv_inplace(|v| if v > F::zero() { v } else { F::zero() });
}

fn dropout_mask<F: Real>(shape: (usize, usize), rate: f64, rng: &mut ChaCha8Rng) -> Array2<F> {
    let scale = F::from_f64(1.0 / (1.0 - rate));
    Array2::from_shape_simple_fn(shape, || {
        if rng.gen::<f64>() < rate {
            F::zero()
        } else {
            scale
        }
    })
}

/// Full forward pass over a batch of encoded sequences.
///
/// In train mode `rng` drives the dropout masks; in infer mode no dropout and
/// no scaling are applied.
pub fn forward<F: Real>(
    seqs: Vec<Vec<usize>>,
    params: &ModelParams<F>,
    hp: &Hyperparams,
    mode: Mode,
    mut rng: Option<&mut ChaCha8Rng>,
) -> Result<ForwardTrace<F>> {
    assert!(!seqs.is_empty(), "empty batch");
    let d = hp.embed_dim;
    let batch = seqs.len();
    let mut offsets = Vec::with_capacity(batch + 1);
    offsets.push(0usize);
    for q in &seqs {
        assert!(!q.is_empty(), "empty sequence in batch");
        offsets.push(offsets.last().unwrap() + q.len());
    }
    let total = *offsets.last().unwrap();

    // embed
    let mut x = Array2::<F>::zeros((d, total));
    for (i, q) in seqs.iter().enumerate() {
        let o = offsets[i];
        for (j, &idx) in q.iter().enumerate() {
            if idx >= params.embed.nrows() {
                return Err(Error::Data(format!(
                    "character index {idx} out of range (vocab size {})",
                    params.embed.nrows()
                )));
            }
            x.column_mut(o + j).assign(&params.embed.row(idx));
        }
    }

    let train = mode == Mode::Train && hp.dropout_rate > 0.0;
    let x_mask = if train {
        let rng = rng.as_deref_mut().expect("train mode requires an rng");
        let mask = dropout_mask::<F>((d, total), hp.dropout_rate, rng);
        x = &x * &mask;
        Some(mask)
    } else {
        None
    };

    // ngram-regional convolution, same-length via zero padding
    let col = build_columns(&x, &offsets, hp);
    let mut conv = params.w_cnn.dot(&col);
    conv += &params
        .b_cnn
        .view()
        .insert_axis(Axis(1))
        .broadcast((hp.conv_dim, total))
        .unwrap();
    relu_inplace(&mut conv);

    // pooling head
    let mut pooled = Array2::<F>::zeros((hp.conv_dim, batch));
    let mut hidden = None;
    let mut alpha_all = None;
    let mut argmax_all = None;
    match hp.head {
        Head::Attention => {
            let mut hid = params.w_hd.dot(&conv);
            hid += &params
                .b_hd
                .view()
                .insert_axis(Axis(1))
                .broadcast((hp.hidden_dim, total))
                .unwrap();
            relu_inplace(&mut hid);
            let scores = params.ctx.dot(&hid); // (total)
            let mut alpha = Array1::<F>::zeros(total);
            for (i, w) in offsets.windows(2).enumerate() {
                let seg = scores.slice(s![w[0]..w[1]]);
                let max = seg.iter().cloned().fold(F::neg_infinity(), F::max);
                let mut exps: Vec<F> = seg.iter().map(|&t| (t - max).exp()).collect();
                let sum: F = exps.iter().cloned().sum();
                for e in exps.iter_mut() {
                    *e = *e / sum;
                }
                alpha.slice_mut(s![w[0]..w[1]]).assign(&Array1::from(exps));
                let a_seg = alpha.slice(s![w[0]..w[1]]);
                let h = conv.slice(s![.., w[0]..w[1]]).dot(&a_seg);
                pooled.column_mut(i).assign(&h);
            }
            hidden = Some(hid);
            alpha_all = Some(alpha);
        }
        Head::MaxPool => {
            let mut argmax = vec![0usize; hp.conv_dim * batch];
            for (i, w) in offsets.windows(2).enumerate() {
                let seg = conv.slice(s![.., w[0]..w[1]]);
                for r in 0..hp.conv_dim {
                    let mut best = seg[[r, 0]];
                    let mut best_j = 0usize;
                    for j in 1..(w[1] - w[0]) {
                        if seg[[r, j]] > best {
                            best = seg[[r, j]];
                            best_j = j;
                        }
                    }
                    pooled[[r, i]] = best;
                    argmax[i * hp.conv_dim + r] = w[0] + best_j;
                }
            }
            argmax_all = Some(argmax);
        }
    }

    let pooled_mask = if train {
        let rng = rng.as_deref_mut().expect("train mode requires an rng");
        let mask = dropout_mask::<F>((hp.conv_dim, batch), hp.dropout_rate, rng);
        pooled = &pooled * &mask;
        Some(mask)
    } else {
        None
    };

    // output layer + numerically stable softmax
    let mut logits = params.w_out.dot(&pooled);
    logits += &params
        .b_out
        .view()
        .insert_axis(Axis(1))
        .broadcast((hp.n_languages, batch))
        .unwrap();
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite activation in output layer".into()));
    }
    let mut probs = Array2::<F>::zeros((hp.n_languages, batch));
    for b in 0..batch {
        let colv = logits.column(b);
        let max = colv.iter().cloned().fold(F::neg_infinity(), F::max);
        let exps: Vec<F> = colv.iter().map(|&v| (v - max).exp()).collect();
        let sum: F = exps.iter().cloned().sum();
        for (l, e) in exps.into_iter().enumerate() {
            probs[[l, b]] = e / sum;
        }
    }

    Ok(ForwardTrace {
        seqs,
        offsets,
        x,
        x_mask,
        conv,
        hidden,
        alpha: alpha_all,
        argmax: argmax_all,
        pooled,
        pooled_mask,
        logits,
        probs,
    })
}

/// One classified text.
#[derive(Debug, Clone)]
pub struct Prediction {
    /// Per-language probabilities, in the model's language order.
    pub probs: Vec<f64>,
    /// Index of the predicted language (argmax; ties to the lowest index).
    pub label: usize,
    /// Per-character attention weights, when requested on an attention head.
    pub attention: Option<Vec<f64>>,
}

/// Argmax with ties broken toward the lowest index.
pub fn argmax_stable(probs: &[f64]) -> usize {
    let mut best = 0usize;
    for (i, &p) in probs.iter().enumerate().skip(1) {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

/// Classify texts in batches. Deterministic; results do not depend on
/// `batch_size`. Empty texts are classified via their UNK encoding.
pub fn predict<F: Real>(
    texts: &[String],
    vocab: &CharVocab,
    params: &ModelParams<F>,
    hp: &Hyperparams,
    batch_size: usize,
    want_attention: bool,
) -> Result<Vec<Prediction>> {
    assert!(batch_size >= 1);
    let mut out = Vec::with_capacity(texts.len());
    for chunk in texts.chunks(batch_size) {
        let seqs: Vec<Vec<usize>> = chunk.iter().map(|t| vocab.encode(t, hp.max_len)).collect();
        let trace = forward(seqs, params, hp, Mode::Infer, None)?;
        for b in 0..chunk.len() {
            let probs: Vec<f64> = trace.probs.column(b).iter().map(|v| v.as_f64()).collect();
            let label = argmax_stable(&probs);
            let attention = if want_attention && hp.head == Head::Attention {
                trace.alpha_of(b).map(|a| a.into_iter().map(|v| v.as_f64()).collect())
            } else {
                None
            };
            out.push(Prediction { probs, label, attention });
        }
    }
    Ok(out)
}

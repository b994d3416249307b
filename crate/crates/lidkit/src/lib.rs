//! Character-level language identification for short noisy texts.
//!
//! The classifier is a shallow ngram-regional CNN over character embeddings
//! with two interchangeable pooling heads: row-wise max-pooling and an
//! attention head that learns a per-position importance weight. Training
//! (ADAM, gradient clipping, early stopping) and backpropagation are
//! implemented from scratch; no autodiff framework is involved.
//!
//! The crate also ships the dataset side of the pipeline: streaming JSONL/TSV
//! ingestion, a label-agreement filter, and a balanced train/valid/test split
//! builder, plus evaluation metrics, a binary checkpoint format, and
//! attention-weight inspection outputs.
//!
//! See the `examples/` directory for one runnable example per capability, and
//! the `lidkit` binary for the batch-pipeline CLI.

pub mod checkpoint;
pub mod corpus;
pub mod error;
pub mod inspect;
pub mod metrics;
pub mod model;
pub mod real;
pub mod synth;
pub mod training;
pub mod vocab;

pub use error::{Error, Result};
pub use model::{Head, Hyperparams, ModelParams, Prediction};
pub use training::TrainConfig;
pub use vocab::CharVocab;

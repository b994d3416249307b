//! Evaluation: confusion matrix, accuracy, precision/recall/F1 (macro and
//! support-weighted), and wall-clock throughput of the predict path.

use crate::corpus::LabeledText;
use crate::error::{Error, Result};
use crate::model::{predict, Hyperparams, ModelParams};
use crate::real::Real;
use crate::vocab::CharVocab;
use serde::Serialize;
use std::time::Instant;

/// L x L count matrix; rows are gold labels, columns predictions.
#[derive(Debug, Clone)]
pub struct ConfusionMatrix {
    pub languages: Vec<String>,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(languages: Vec<String>) -> Self {
        let l = languages.len();
        ConfusionMatrix { languages, counts: vec![0; l * l] }
    }

    pub fn from_counts(languages: Vec<String>, rows: &[&[u64]]) -> Self {
        let l = languages.len();
        assert_eq!(rows.len(), l);
        let mut counts = Vec::with_capacity(l * l);
        for r in rows {
            assert_eq!(r.len(), l);
            counts.extend_from_slice(r);
        }
        ConfusionMatrix { languages, counts }
    }

    pub fn record(&mut self, gold: usize, predicted: usize) {
        let l = self.languages.len();
        self.counts[gold * l + predicted] += 1;
    }

    pub fn get(&self, gold: usize, predicted: usize) -> u64 {
        self.counts[gold * self.languages.len() + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn row_sum(&self, r: usize) -> u64 {
        let l = self.languages.len();
        self.counts[r * l..(r + 1) * l].iter().sum()
    }

    fn col_sum(&self, c: usize) -> u64 {
        let l = self.languages.len();
        (0..l).map(|r| self.counts[r * l + c]).sum()
    }

    fn trace(&self) -> u64 {
        (0..self.languages.len()).map(|i| self.get(i, i)).sum()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PerLanguage {
    pub language: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

/// Metrics matching the Acc / P / R / F1 / Speed reporting columns.
#[derive(Debug, Clone, Serialize)]
pub struct EvalResult {
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
    pub per_language: Vec<PerLanguage>,
    /// Rows are gold labels, columns predicted, in `per_language` order.
    pub confusion: Vec<Vec<u64>>,
    /// Number of classes whose P or R hit a 0/0 and were defined as 0.
    pub zero_division_classes: usize,
    pub messages_per_sec: f64,
    pub wall_secs: f64,
    pub total: u64,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Derive all rates from a confusion matrix. Zero-division resolves to 0.
pub fn metrics_from_confusion(cm: &ConfusionMatrix) -> EvalResult {
    let l = cm.languages.len();
    let total = cm.total();
    let mut per_language = Vec::with_capacity(l);
    let mut zero_division = 0usize;
    for i in 0..l {
        let tp = cm.get(i, i);
        let support = cm.row_sum(i);
        let predicted = cm.col_sum(i);
        let p = ratio(tp, predicted);
        let r = ratio(tp, support);
        if p.is_none() || r.is_none() {
            zero_division += 1;
        }
        let p = p.unwrap_or(0.0);
        let r = r.unwrap_or(0.0);
        let f1 = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        per_language.push(PerLanguage {
            language: cm.languages[i].clone(),
            precision: p,
            recall: r,
            f1,
            support,
        });
    }
    let lf = l as f64;
    let wsum = |f: fn(&PerLanguage) -> f64| {
        per_language
            .iter()
            .map(|x| f(x) * x.support as f64)
            .sum::<f64>()
            / total.max(1) as f64
    };
    EvalResult {
        accuracy: cm.trace() as f64 / total.max(1) as f64,
        macro_precision: per_language.iter().map(|x| x.precision).sum::<f64>() / lf,
        macro_recall: per_language.iter().map(|x| x.recall).sum::<f64>() / lf,
        macro_f1: per_language.iter().map(|x| x.f1).sum::<f64>() / lf,
        weighted_precision: wsum(|x| x.precision),
        weighted_recall: wsum(|x| x.recall),
        weighted_f1: wsum(|x| x.f1),
        per_language,
        confusion: (0..l).map(|i| (0..l).map(|j| cm.get(i, j)).collect()).collect(),
        zero_division_classes: zero_division,
        messages_per_sec: 0.0,
        wall_secs: 0.0,
        total,
    }
}

/// Single-pass evaluation. Throughput counts only the predict calls, not file
/// parsing or model loading.
pub fn evaluate<F: Real>(
    test_set: &[LabeledText],
    languages: &[String],
    vocab: &CharVocab,
    params: &ModelParams<F>,
    hp: &Hyperparams,
    batch_size: usize,
) -> Result<EvalResult> {
    let mut gold = Vec::with_capacity(test_set.len());
    for rec in test_set {
        let idx = languages.iter().position(|l| *l == rec.label).ok_or_else(|| {
            Error::Data(format!("test set label '{}' unknown to the model", rec.label))
        })?;
        gold.push(idx);
    }
    let texts: Vec<String> = test_set.iter().map(|r| r.text.clone()).collect();
    let start = Instant::now();
    let predictions = predict(&texts, vocab, params, hp, batch_size, false)?;
    let wall = start.elapsed().as_secs_f64();
    let mut cm = ConfusionMatrix::new(languages.to_vec());
    for (g, p) in gold.iter().zip(&predictions) {
        cm.record(*g, p.label);
    }
    let mut result = metrics_from_confusion(&cm);
    result.wall_secs = wall;
    result.messages_per_sec = test_set.len() as f64 / wall.max(1e-12);
    Ok(result)
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchResult {
    pub median_msgs_per_sec: f64,
    pub min_msgs_per_sec: f64,
    pub max_msgs_per_sec: f64,
    pub repeats: usize,
    pub messages: usize,
}

/// Timed repeated inference over `texts` after `warmup` untimed batches.
/// Fails if predicted labels change across repeats.
pub fn bench_throughput<F: Real>(
    texts: &[String],
    vocab: &CharVocab,
    params: &ModelParams<F>,
    hp: &Hyperparams,
    batch_size: usize,
    warmup_batches: usize,
    repeats: usize,
) -> Result<BenchResult> {
    if texts.is_empty() {
        return Err(Error::Usage("bench needs a non-empty input".into()));
    }
    if repeats < 3 {
        return Err(Error::Usage("bench needs at least 3 repeats".into()));
    }
    let warm: Vec<String> = texts.iter().take(warmup_batches * batch_size).cloned().collect();
    if !warm.is_empty() {
        predict(&warm, vocab, params, hp, batch_size, false)?;
    }
    let mut rates = Vec::with_capacity(repeats);
    let mut reference: Option<Vec<usize>> = None;
    for _ in 0..repeats {
        let start = Instant::now();
        let preds = predict(texts, vocab, params, hp, batch_size, false)?;
        let secs = start.elapsed().as_secs_f64();
        rates.push(texts.len() as f64 / secs.max(1e-12));
        let labels: Vec<usize> = preds.iter().map(|p| p.label).collect();
        match &reference {
            None => reference = Some(labels),
            Some(r) => {
                if *r != labels {
                    return Err(Error::Numeric("predictions changed across bench repeats".into()));
                }
            }
        }
    }
    rates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(BenchResult {
        median_msgs_per_sec: rates[rates.len() / 2],
        min_msgs_per_sec: rates[0],
        max_msgs_per_sec: *rates.last().unwrap(),
        repeats,
        messages: texts.len(),
    })
}

//! Batch-pipeline CLI: dataset construction, training, evaluation, batched
//! prediction, throughput benchmarking, and attention inspection.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 integrity error.

use clap::{Args, Parser, Subcommand};
use lidkit::checkpoint::Checkpoint;
use lidkit::corpus::{
    agreement_filter, build_balanced_splits, ingest_records, read_split, InputFormat, JsonFields,
    SplitSpec,
};
use lidkit::inspect::{attention_records, dump_html, dump_tsv, predict_lines};
use lidkit::metrics::{bench_throughput, evaluate};
use lidkit::model::{predict, Head, Hyperparams};
use lidkit::training::{train, TrainConfig};
use lidkit::vocab::CharVocab;
use lidkit::{Error, Result};
use std::io::{Read, Write};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "lidkit", version, about = "Character-level language identification for short noisy texts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest raw records, apply the label-agreement filter, and write
    /// balanced train/valid/test splits.
    BuildDataset(BuildDatasetArgs),
    /// Train a model from TSV splits and save a checkpoint.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a labeled TSV split.
    Evaluate(EvaluateArgs),
    /// Classify lines from a file or stdin.
    Predict(PredictArgs),
    /// Measure batched inference throughput.
    Bench(BenchArgs),
    /// Dump per-character attention weights as TSV or an HTML heatmap.
    AttentionDump(AttentionDumpArgs),
}

#[derive(Args)]
struct BuildDatasetArgs {
    #[arg(long)]
    input: PathBuf,
    /// Input format: jsonl or tsv
    #[arg(long, default_value = "jsonl")]
    format: String,
    /// Comma-separated language codes, e.g. en,fr,es
    #[arg(long)]
    languages: String,
    /// Training records per language
    #[arg(long)]
    train: usize,
    /// Validation records per language
    #[arg(long)]
    valid: usize,
    /// Test records per language
    #[arg(long)]
    test: usize,
    #[arg(long, env = "LIDKIT_SEED", default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Drop records shorter than this many characters
    #[arg(long, default_value_t = 1)]
    min_chars: usize,
    /// Basename for the split files
    #[arg(long, default_value = "dataset")]
    name: String,
    /// JSON field path for the text (jsonl format)
    #[arg(long, default_value = "text")]
    text_field: String,
    /// JSON field path for the detected language
    #[arg(long, default_value = "lang")]
    detected_field: String,
    /// JSON field path for the declared language
    #[arg(long, default_value = "user.lang")]
    declared_field: String,
    /// JSON field path for the record id
    #[arg(long, default_value = "id")]
    id_field: String,
}

#[derive(Args)]
struct TrainArgs {
    /// Training split TSV (label TAB text)
    #[arg(long)]
    train: PathBuf,
    /// Validation split TSV
    #[arg(long)]
    valid: PathBuf,
    /// Pooling head: attention or maxpool
    #[arg(long, env = "LIDKIT_HEAD", default_value = "attention")]
    head: String,
    /// Output checkpoint path
    #[arg(long)]
    out: PathBuf,
    #[arg(long, env = "LIDKIT_LR", default_value_t = 0.001)]
    lr: f64,
    #[arg(long, env = "LIDKIT_DECAY_RATE", default_value_t = 0.05)]
    decay_rate: f64,
    #[arg(long, env = "LIDKIT_MAX_EPOCHS", default_value_t = 512)]
    max_epochs: usize,
    #[arg(long, env = "LIDKIT_PATIENCE", default_value_t = 64)]
    patience: usize,
    #[arg(long, env = "LIDKIT_CLIP_RATE", default_value_t = 5.0)]
    clip_rate: f64,
    #[arg(long, env = "LIDKIT_DROPOUT", default_value_t = 0.5)]
    dropout: f64,
    #[arg(long, env = "LIDKIT_BATCH_SIZE", default_value_t = 256)]
    batch_size: usize,
    #[arg(long, env = "LIDKIT_SEED", default_value_t = 42)]
    seed: u64,
    /// Character frequency cutoff for the vocabulary
    #[arg(long, env = "LIDKIT_MIN_FREQ", default_value_t = 5)]
    min_freq: u64,
    /// Truncation length in characters
    #[arg(long, env = "LIDKIT_MAX_LEN", default_value_t = 280)]
    max_len: usize,
    #[arg(long, env = "LIDKIT_EMBED_DIM", default_value_t = 50)]
    embed_dim: usize,
    #[arg(long, env = "LIDKIT_CONV_DIM", default_value_t = 100)]
    conv_dim: usize,
    #[arg(long, env = "LIDKIT_REGION", default_value_t = 5)]
    region: usize,
    #[arg(long, env = "LIDKIT_HIDDEN_DIM", default_value_t = 100)]
    hidden_dim: usize,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// Also write the full result as JSON here
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long, env = "LIDKIT_BATCH_SIZE", default_value_t = 256)]
    batch_size: usize,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// Input file of one text per line; stdin when omitted
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, env = "LIDKIT_BATCH_SIZE", default_value_t = 256)]
    batch_size: usize,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    model: PathBuf,
    /// Labeled TSV or plain text file to classify
    #[arg(long)]
    input: PathBuf,
    #[arg(long, env = "LIDKIT_BATCH_SIZE", default_value_t = 256)]
    batch_size: usize,
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    #[arg(long, default_value_t = 2)]
    warmup_batches: usize,
}

#[derive(Args)]
struct AttentionDumpArgs {
    #[arg(long)]
    model: PathBuf,
    /// Input file of one text per line; stdin when omitted
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output format: tsv or html
    #[arg(long, default_value = "tsv")]
    format: String,
    /// Output file; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_lines_lossy(input: Option<&PathBuf>) -> Result<Vec<String>> {
    let mut bytes = Vec::new();
    match input {
        Some(path) => {
            std::fs::File::open(path)
                .and_then(|mut f| f.read_to_end(&mut bytes))
                .map_err(|e| Error::io(path, e))?;
        }
        None => {
            std::io::stdin()
                .lock()
                .read_to_end(&mut bytes)
                .map_err(|e| Error::io("<stdin>", e))?;
        }
    }
    let mut lines: Vec<String> = bytes
        .split(|&b| b == b'\n')
        .map(|line| {
            let line = line.strip_suffix(b"\r").unwrap_or(line);
            String::from_utf8_lossy(line).into_owned()
        })
        .collect();
    // drop the empty tail produced by a final newline
    if lines.last().is_some_and(|s| s.is_empty()) {
        lines.pop();
    }
    Ok(lines)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::BuildDataset(a) => {
            let format = InputFormat::parse(&a.format)?;
            let fields = JsonFields {
                id: a.id_field.clone(),
                text: a.text_field.clone(),
                detected: a.detected_field.clone(),
                declared: a.declared_field.clone(),
            };
            let spec = SplitSpec {
                languages: a
                    .languages
                    .split(',')
                    .map(|s| s.trim().to_lowercase())
                    .filter(|s| !s.is_empty())
                    .collect(),
                per_lang_train: a.train,
                per_lang_valid: a.valid,
                per_lang_test: a.test,
                seed: a.seed,
                min_chars: a.min_chars,
                name: a.name.clone(),
            };
            // surface the wrong-format diagnostic from the first pass
            let mut probe = ingest_records(&a.input, format, fields.clone())?;
            probe.by_ref().for_each(drop);
            probe.check_malformed()?;
            let manifest = build_balanced_splits(
                || {
                    let stream = ingest_records(&a.input, format, fields.clone())?;
                    Ok(agreement_filter(stream))
                },
                &spec,
                &a.out,
            )?;
            for name in ["train", "valid", "test"] {
                let total: usize = manifest.counts[name].values().sum();
                eprintln!("{name}: {total} records -> {}", manifest.splits[name].display());
            }
            Ok(())
        }
        Command::Train(a) => {
            let head = Head::parse(&a.head)?;
            let train_set = read_split(&a.train)?;
            let valid_set = read_split(&a.valid)?;
            let mut languages: Vec<String> =
                train_set.iter().map(|r| r.label.clone()).collect();
            languages.sort();
            languages.dedup();
            let vocab =
                CharVocab::build(train_set.iter().map(|r| r.text.as_str()), a.min_freq)?;
            let hp = Hyperparams {
                embed_dim: a.embed_dim,
                conv_dim: a.conv_dim,
                region: a.region,
                hidden_dim: a.hidden_dim,
                n_languages: languages.len(),
                head,
                dropout_rate: a.dropout,
                max_len: a.max_len,
            };
            let cfg = TrainConfig {
                lr: a.lr,
                decay_rate: a.decay_rate,
                max_epochs: a.max_epochs,
                patience: a.patience,
                clip_rate: a.clip_rate,
                dropout: a.dropout,
                batch_size: a.batch_size,
                seed: a.seed,
            };
            eprintln!(
                "training {} head on {} records, {} languages, V = {}",
                head.name(),
                train_set.len(),
                languages.len(),
                vocab.len()
            );
            let (params, report) =
                train::<f32>(&train_set, &valid_set, &languages, &vocab, &hp, &cfg)?;
            let ck = Checkpoint { hp, cfg, vocab, languages, params };
            ck.save(&a.out)?;
            let report_path = a.out.with_extension("report.json");
            let json = serde_json::to_string_pretty(&report).expect("report serializes");
            std::fs::write(&report_path, json).map_err(|e| Error::io(&report_path, e))?;
            eprintln!(
                "best epoch {} (valid acc {:.4}), stopped by {}; checkpoint -> {}",
                report.best_epoch,
                report.best_valid_accuracy,
                report.stopping_reason,
                a.out.display()
            );
            Ok(())
        }
        Command::Evaluate(a) => {
            let ck = Checkpoint::load(&a.model)?;
            let test_set = read_split(&a.test)?;
            let result = evaluate(
                &test_set,
                &ck.languages,
                &ck.vocab,
                &ck.params,
                &ck.hp,
                a.batch_size,
            )?;
            println!(
                "Acc {:.4}  P {:.4}  R {:.4}  F1 {:.4}  Speed {:.2} msgs/sec",
                result.accuracy,
                result.weighted_precision,
                result.weighted_recall,
                result.weighted_f1,
                result.messages_per_sec
            );
            println!(
                "macro: P {:.4}  R {:.4}  F1 {:.4}",
                result.macro_precision, result.macro_recall, result.macro_f1
            );
            if let Some(path) = a.json {
                let json = serde_json::to_string_pretty(&result).expect("result serializes");
                std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
            }
            Ok(())
        }
        Command::Predict(a) => {
            let ck = Checkpoint::load(&a.model)?;
            let texts = read_lines_lossy(a.input.as_ref())?;
            if texts.is_empty() {
                return Ok(());
            }
            let preds = predict(&texts, &ck.vocab, &ck.params, &ck.hp, a.batch_size, false)?;
            let out = predict_lines(&ck, &texts, &preds);
            std::io::stdout()
                .write_all(out.as_bytes())
                .map_err(|e| Error::io("<stdout>", e))?;
            Ok(())
        }
        Command::Bench(a) => {
            let ck = Checkpoint::load(&a.model)?;
            // accept either a labeled TSV split or plain lines
            let texts: Vec<String> = match read_split(&a.input) {
                Ok(recs) => recs.into_iter().map(|r| r.text).collect(),
                Err(_) => read_lines_lossy(Some(&a.input))?,
            };
            let result = bench_throughput(
                &texts,
                &ck.vocab,
                &ck.params,
                &ck.hp,
                a.batch_size,
                a.warmup_batches,
                a.repeats,
            )?;
            println!(
                "{} messages x {} repeats: median {:.2} msgs/sec (min {:.2}, max {:.2})",
                result.messages,
                result.repeats,
                result.median_msgs_per_sec,
                result.min_msgs_per_sec,
                result.max_msgs_per_sec
            );
            Ok(())
        }
        Command::AttentionDump(a) => {
            let ck = Checkpoint::load(&a.model)?;
            let texts = read_lines_lossy(a.input.as_ref())?;
            let records = attention_records(&ck, &texts)?;
            let out = match a.format.as_str() {
                "tsv" => dump_tsv(&records),
                "html" => dump_html(&records),
                other => return Err(Error::Usage(format!("unknown format '{other}' (tsv|html)"))),
            };
            match a.out {
                Some(path) => std::fs::write(&path, out).map_err(|e| Error::io(&path, e))?,
                None => std::io::stdout()
                    .write_all(out.as_bytes())
                    .map_err(|e| Error::io("<stdout>", e))?,
            }
            Ok(())
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are success, everything else is usage (1)
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

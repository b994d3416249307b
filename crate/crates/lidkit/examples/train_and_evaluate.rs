//! Train an attention-head classifier on a small synthetic corpus, evaluate
//! it on held-out data, and save a checkpoint.
//!
//! Uses a reduced model so the run finishes in well under a minute; drop the
//! overrides to train at the full default size.
//!
//! Run with: cargo run --release --example train_and_evaluate

use lidkit::checkpoint::Checkpoint;
use lidkit::metrics::evaluate;
use lidkit::model::{Head, Hyperparams};
use lidkit::synth;
use lidkit::training::{train, TrainConfig};
use lidkit::vocab::CharVocab;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> anyhow::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let train_set = synth::labeled_set(&mut rng, 400, 0.2);
    let valid_set = synth::labeled_set(&mut rng, 100, 0.2);
    let test_set = synth::labeled_set(&mut rng, 100, 0.2);
    let languages: Vec<String> = synth::LANGUAGES.iter().map(|s| s.to_string()).collect();

    let vocab = CharVocab::build(train_set.iter().map(|r| r.text.as_str()), 5)?;
    let hp = Hyperparams {
        embed_dim: 16,
        conv_dim: 32,
        hidden_dim: 32,
        ..Hyperparams::defaults(languages.len(), Head::Attention)
    };
    let cfg = TrainConfig { max_epochs: 30, patience: 8, batch_size: 64, ..TrainConfig::default() };

    let (params, report) = train::<f32>(&train_set, &valid_set, &languages, &vocab, &hp, &cfg)?;
    println!(
        "best epoch {} of {}, valid accuracy {:.4} ({})",
        report.best_epoch,
        report.epochs.len(),
        report.best_valid_accuracy,
        report.stopping_reason
    );

    let result = evaluate(&test_set, &languages, &vocab, &params, &hp, cfg.batch_size)?;
    println!(
        "test: acc {:.4}  macro-F1 {:.4}  {:.0} msgs/sec",
        result.accuracy, result.macro_f1, result.messages_per_sec
    );
    for pl in &result.per_language {
        println!("  {}: P {:.3} R {:.3} F1 {:.3} (n = {})", pl.language, pl.precision, pl.recall, pl.f1, pl.support);
    }

    let path = std::path::PathBuf::from("target/demo-model.ck");
    Checkpoint { hp, cfg, vocab, languages, params }.save(&path)?;
    println!("checkpoint -> {}", path.display());
    Ok(())
}

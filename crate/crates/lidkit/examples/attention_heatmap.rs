//! Visualize which characters the attention head weights when classifying.
//!
//! Trains a small model, then writes a self-contained HTML heatmap and prints
//! the per-character weights of one text as a terminal bar chart. URLs and
//! @mentions typically receive visibly less weight than language-bearing
//! words.
//!
//! Run with: cargo run --release --example attention_heatmap

use lidkit::checkpoint::Checkpoint;
use lidkit::inspect::{attention_records, dump_html};
use lidkit::model::{Head, Hyperparams};
use lidkit::synth;
use lidkit::training::{train, TrainConfig};
use lidkit::vocab::CharVocab;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> anyhow::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let train_set = synth::labeled_set(&mut rng, 600, 0.3);
    let valid_set = synth::labeled_set(&mut rng, 150, 0.3);
    let languages: Vec<String> = synth::LANGUAGES.iter().map(|s| s.to_string()).collect();
    let vocab = CharVocab::build(train_set.iter().map(|r| r.text.as_str()), 5)?;
    let hp = Hyperparams {
        embed_dim: 16,
        conv_dim: 32,
        hidden_dim: 32,
        ..Hyperparams::defaults(languages.len(), Head::Attention)
    };
    let cfg = TrainConfig { max_epochs: 40, patience: 10, batch_size: 64, ..TrainConfig::default() };
    let (params, _) = train::<f32>(&train_set, &valid_set, &languages, &vocab, &hp, &cfg)?;
    let ck = Checkpoint { hp, cfg, vocab, languages, params };

    let texts: Vec<String> = vec![
        format!("le monde est grand {}", synth::url(&mut rng)),
        "the good people have time today".into(),
        "hôm nay em không có gì".into(),
    ];
    let records = attention_records(&ck, &texts)?;

    // terminal bar chart for the first text
    let rec = &records[0];
    println!("predicted {} (p = {:.3}) for: {}", rec.predicted, rec.probability, rec.text);
    let max = rec.weights.iter().map(|&(_, w)| w).fold(0.0f64, f64::max).max(1e-12);
    for &(ch, w) in &rec.weights {
        let bar = "#".repeat((w / max * 40.0).round() as usize);
        println!("  {ch} {w:.4} {bar}");
    }

    let path = std::path::PathBuf::from("target/attention.html");
    std::fs::write(&path, dump_html(&records))?;
    println!("heatmap -> {}", path.display());
    Ok(())
}

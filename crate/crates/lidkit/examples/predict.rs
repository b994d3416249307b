//! Classify a handful of short noisy texts with a freshly trained model.
//!
//! Run with: cargo run --release --example predict

use lidkit::model::{predict, Head, Hyperparams};
use lidkit::synth;
use lidkit::training::{train, TrainConfig};
use lidkit::vocab::CharVocab;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> anyhow::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let train_set = synth::labeled_set(&mut rng, 400, 0.2);
    let valid_set = synth::labeled_set(&mut rng, 100, 0.2);
    let languages: Vec<String> = synth::LANGUAGES.iter().map(|s| s.to_string()).collect();
    let vocab = CharVocab::build(train_set.iter().map(|r| r.text.as_str()), 5)?;
    let hp = Hyperparams {
        embed_dim: 16,
        conv_dim: 32,
        hidden_dim: 32,
        ..Hyperparams::defaults(languages.len(), Head::Attention)
    };
    let cfg = TrainConfig { max_epochs: 30, patience: 8, batch_size: 64, ..TrainConfig::default() };
    let (params, _) = train::<f32>(&train_set, &valid_set, &languages, &vocab, &hp, &cfg)?;

    let texts: Vec<String> = [
        "the people are here and the day is good",
        "le monde est grand et la vie est belle @ami",
        "la casa es grande y el tiempo es bueno",
        "die zeit ist gut und das leben ist hier",
        "em hôm nay không có thời gian https://t.co/abc123XYZ0",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();

    for (text, p) in texts.iter().zip(predict(&texts, &vocab, &params, &hp, 64, false)?) {
        println!("{}  (p = {:.3})  {}", languages[p.label], p.probs[p.label], text);
    }
    Ok(())
}

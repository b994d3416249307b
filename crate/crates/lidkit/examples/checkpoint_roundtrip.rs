//! Save a model to the binary checkpoint format and load it back.
//!
//! The file carries a JSON header (hyperparameters, training config, vocab,
//! labels) followed by raw little-endian f32 tensors and a checksum; loading
//! verifies magic, version, shapes, and checksum. See docs/checkpoint.md.
//!
//! Run with: cargo run --example checkpoint_roundtrip

use lidkit::checkpoint::Checkpoint;
use lidkit::model::{predict, Head, Hyperparams, ModelParams};
use lidkit::synth;
use lidkit::training::TrainConfig;
use lidkit::vocab::CharVocab;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> anyhow::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let corpus = synth::labeled_set(&mut rng, 100, 0.2);
    let vocab = CharVocab::build(corpus.iter().map(|r| r.text.as_str()), 2)?;
    let hp = Hyperparams::defaults(5, Head::Attention);
    let ck = Checkpoint {
        params: ModelParams::<f32>::init(vocab.index_space(), &hp, 11),
        hp,
        cfg: TrainConfig::default(),
        vocab,
        languages: synth::LANGUAGES.iter().map(|s| s.to_string()).collect(),
    };

    let path = std::path::PathBuf::from("target/roundtrip.ck");
    ck.save(&path)?;
    let loaded = Checkpoint::load(&path)?;
    println!(
        "saved and reloaded {} ({} bytes)",
        path.display(),
        std::fs::metadata(&path)?.len()
    );

    let texts: Vec<String> = corpus.into_iter().take(5).map(|r| r.text).collect();
    let a = predict(&texts, &ck.vocab, &ck.params, &ck.hp, 8, false)?;
    let b = predict(&texts, &loaded.vocab, &loaded.params, &loaded.hp, 8, false)?;
    for ((x, y), text) in a.iter().zip(&b).zip(&texts) {
        assert_eq!(x.label, y.label);
        assert_eq!(x.probs, y.probs);
        println!("  {} == {}  {}", ck.languages[x.label], loaded.languages[y.label], text);
    }
    println!("predictions identical before and after the round trip");
    Ok(())
}

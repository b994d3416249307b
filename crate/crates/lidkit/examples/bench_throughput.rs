//! Measure batched inference throughput of the default-size model.
//!
//! The timing covers only the predict calls (encode + forward), after warmup
//! batches, with the median over repeated passes reported. Labels must be
//! identical across repeats or the run fails.
//!
//! Run with: cargo run --release --example bench_throughput

use lidkit::metrics::bench_throughput;
use lidkit::model::{Head, Hyperparams, ModelParams};
use lidkit::synth;
use lidkit::vocab::CharVocab;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> anyhow::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let corpus = synth::labeled_set(&mut rng, 1000, 0.2);
    let vocab = CharVocab::build(corpus.iter().map(|r| r.text.as_str()), 5)?;
    let texts: Vec<String> = corpus.into_iter().map(|r| r.text).collect();

    for head in [Head::MaxPool, Head::Attention] {
        let hp = Hyperparams::defaults(5, head);
        let params = ModelParams::<f32>::init(vocab.index_space(), &hp, 9);
        let r = bench_throughput(&texts, &vocab, &params, &hp, 256, 2, 5)?;
        println!(
            "{:>9}: {} messages x {} repeats, median {:.0} msgs/sec (min {:.0}, max {:.0})",
            head.name(),
            r.messages,
            r.repeats,
            r.median_msgs_per_sec,
            r.min_msgs_per_sec,
            r.max_msgs_per_sec
        );
    }
    Ok(())
}

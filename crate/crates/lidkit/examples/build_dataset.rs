//! Build balanced train/valid/test splits from a raw JSONL dump.
//!
//! Generates a synthetic tweet-shaped corpus, keeps only records whose
//! detected and self-declared languages agree, and deals equal per-language
//! quotas into three disjoint splits.
//!
//! Run with: cargo run --example build_dataset

use lidkit::corpus::{agreement_filter, build_balanced_splits, ingest_records, InputFormat, JsonFields, SplitSpec};
use lidkit::synth;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> anyhow::Result<()> {
    let dir = tempfile::tempdir()?;
    let raw_path = dir.path().join("raw.jsonl");

    // 20,000 synthetic records; ~15% carry a disagreeing declared language
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut raw = String::new();
    for id in 0..20_000u64 {
        raw.push_str(&synth::jsonl_line(&mut rng, id, 0.15));
        raw.push('\n');
    }
    std::fs::write(&raw_path, raw)?;

    let spec = SplitSpec {
        languages: synth::LANGUAGES.iter().map(|s| s.to_string()).collect(),
        per_lang_train: 500,
        per_lang_valid: 150,
        per_lang_test: 150,
        seed: 42,
        min_chars: 1,
        name: "demo".into(),
    };
    let out_dir = std::path::PathBuf::from("target/demo-dataset");
    let manifest = build_balanced_splits(
        || {
            let stream = ingest_records(&raw_path, InputFormat::Jsonl, JsonFields::default())?;
            Ok(agreement_filter(stream))
        },
        &spec,
        &out_dir,
    )?;

    for split in ["train", "valid", "test"] {
        let total: usize = manifest.counts[split].values().sum();
        println!("{split}: {total} records -> {}", manifest.splits[split].display());
    }
    println!("manifest: {}", out_dir.join("demo.manifest.json").display());
    Ok(())
}

//! Acceptance gate: every release criterion checked end to end, one printed
//! pass/fail line per criterion.
//!
//! Criteria 4 and 8 train two full-size models on a 5-language corpus and are
//! marked `#[ignore]`; run them with `cargo test --test acceptance --release --
//! --ignored --nocapture` (expect a long run on a desktop CPU).

mod common;

use common::{gradient_mismatches, tiny_hp};
use lidkit::checkpoint::Checkpoint;
use lidkit::corpus::{
    agreement_filter, build_balanced_splits, ingest_records, read_split, InputFormat, JsonFields,
    LabeledText, SplitSpec,
};
use lidkit::inspect::attention_records;
use lidkit::metrics::{bench_throughput, evaluate};
use lidkit::model::{
    backward, conv_ngram, forward, pool_attention, predict, Head, Hyperparams, Mode, ModelParams,
};
use lidkit::synth;
use lidkit::training::{train, TrainConfig};
use lidkit::vocab::CharVocab;
use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::Path;
use std::sync::OnceLock;
use tempfile::TempDir;

fn report(line: &str, pass: bool) {
    println!("[{}] {line}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{line}");
}

// ---------------------------------------------------------------- criterion 1

#[test]
fn c1_gradient_correctness() {
    let mut worst = 0usize;
    for (head, seed) in [(Head::Attention, 17), (Head::MaxPool, 23)] {
        let hp = tiny_hp(head);
        let params = ModelParams::<f64>::init(8, &hp, seed);
        let seqs = vec![
            vec![2, 3, 4, 5, 6, 7, 2, 3, 4, 5],
            vec![4, 4, 2],
            vec![7, 6, 5, 4, 3, 2, 7],
            vec![1, 5, 2, 2],
        ];
        let labels = vec![0, 2, 1, 0];
        let trace = forward(seqs.clone(), &params, &hp, Mode::Train, None).unwrap();
        let grads = backward(&trace, &labels, &params, &hp).unwrap();
        worst += gradient_mismatches(&seqs, &labels, &params, &grads, &hp, 1e-4, 1e-4).len();
    }
    report(
        "criterion 1 — analytic gradients match central finite differences (rel 1e-4, both heads)",
        worst == 0,
    );
}

// ---------------------------------------------------------------- criterion 2

#[test]
fn c2_architecture_invariants() {
    let mut ok = true;

    // same-length convolution for m in {3,5,7}
    for m in [3usize, 5, 7] {
        let x = Array2::<f64>::from_shape_fn((3, 17), |(r, c)| ((r + c) as f64 * 0.3).sin());
        let w = Array2::<f64>::from_shape_fn((4, m * 3), |(r, c)| ((r * 5 + c) as f64 * 0.2).cos());
        let b = Array1::<f64>::zeros(4);
        ok &= conv_ngram(&x, &w, &b, m).ncols() == 17;
    }

    // attention weights: sum 1 +- 1e-6, exact zeros on masked positions
    let c = Array2::<f64>::from_shape_fn((2, 12), |(r, j)| (r as f64 + 1.0) * (j as f64 * 0.4).sin());
    let w_hd = Array2::<f64>::from_shape_fn((3, 2), |(r, k)| 0.5 * r as f64 - 0.3 * k as f64);
    let b_hd = Array1::<f64>::from_elem(3, 0.1);
    let ctx = Array1::<f64>::from_vec(vec![0.7, -0.2, 0.4]);
    let (_, alpha) = pool_attention(&c, &w_hd, &b_hd, &ctx, 8);
    ok &= (alpha.iter().take(8).sum::<f64>() - 1.0).abs() < 1e-6;
    ok &= alpha.iter().skip(8).all(|&a| a == 0.0);

    // softmax shift invariance: shifting all logits leaves probabilities fixed
    let hp = tiny_hp(Head::Attention);
    let params = ModelParams::<f64>::init(8, &hp, 5);
    let mut shifted = params.clone();
    shifted.b_out.mapv_inplace(|v| v + 1000.0);
    let seq = vec![vec![2, 5, 3, 7, 4]];
    let a = forward(seq.clone(), &params, &hp, Mode::Infer, None).unwrap();
    let b = forward(seq, &shifted, &hp, Mode::Infer, None).unwrap();
    ok &= a
        .probs
        .iter()
        .zip(b.probs.iter())
        .all(|(x, y)| (x - y).abs() < 1e-9);

    // batching independence: batch_size 1 vs 64 within 1e-6
    let vocab = CharVocab::build(["abcdefghijklmnopqrstuvwxyz "], 1).unwrap();
    let hp32 = Hyperparams { dropout_rate: 0.0, ..Hyperparams::defaults(3, Head::Attention) };
    let params32 = ModelParams::<f32>::init(vocab.index_space(), &hp32, 9);
    let texts: Vec<String> = (0..100)
        .map(|i| {
            "the quick brown fox jumps over the lazy dog "
                .chars()
                .cycle()
                .skip(i % 13)
                .take(5 + (i * 3) % 60)
                .collect()
        })
        .collect();
    let p1 = predict(&texts, &vocab, &params32, &hp32, 1, false).unwrap();
    let p64 = predict(&texts, &vocab, &params32, &hp32, 64, false).unwrap();
    ok &= p1.iter().zip(&p64).all(|(a, b)| {
        a.label == b.label
            && a.probs.iter().zip(&b.probs).all(|(x, y)| (x - y).abs() < 1e-6)
    });

    report(
        "criterion 2 — same-length conv, normalized masked attention, softmax shift invariance, batching independence",
        ok,
    );
}

// ---------------------------------------------------------------- criterion 3

#[test]
fn c3_overfit_oracle() {
    // ten samples, three synthetic "languages" with disjoint character sets;
    // every character occurs often enough to clear the default frequency cutoff
    let set: Vec<LabeledText> = [
        ("aka baka kaaba abab kabak", "aa"),
        ("baka abba kaka abak baab", "aa"),
        ("abab kaab baka abka kaba", "aa"),
        ("dede fegge degef gefde efgd", "bb"),
        ("gefd edge defeg gedef fgede", "bb"),
        ("edef gdefe fgede edgef dgef", "bb"),
        ("momo nopop monpo ponom opnm", "cc"),
        ("pono mnopo ponmo onomp mpon", "cc"),
        ("nomp oponm ponop monop onpo", "cc"),
        ("mnop ponom opmno nopom pomn", "cc"),
    ]
    .into_iter()
    .map(|(t, l)| LabeledText::new(t, l))
    .collect();
    let languages: Vec<String> = ["aa", "bb", "cc"].iter().map(|s| s.to_string()).collect();
    let vocab = CharVocab::build(set.iter().map(|r| r.text.as_str()), 5).unwrap();
    let hp = Hyperparams::defaults(3, Head::Attention);
    let cfg = TrainConfig::default();
    let (params, _report) = train::<f32>(&set, &set, &languages, &vocab, &hp, &cfg).unwrap();

    let texts: Vec<String> = set.iter().map(|r| r.text.clone()).collect();
    let preds = predict(&texts, &vocab, &params, &hp, 16, false).unwrap();
    let correct = preds
        .iter()
        .zip(&set)
        .filter(|(p, r)| languages[p.label] == r.label)
        .count();
    let seqs: Vec<Vec<usize>> = texts.iter().map(|t| vocab.encode(t, hp.max_len)).collect();
    let labels: Vec<usize> = set
        .iter()
        .map(|r| languages.iter().position(|l| *l == r.label).unwrap())
        .collect();
    let trace = forward(seqs, &params, &hp, Mode::Infer, None).unwrap();
    let loss = trace.loss(&labels);
    report(
        &format!(
            "criterion 3 — 10-sample toy corpus overfits: accuracy {}/10, loss {loss:.6} < 0.01",
            correct
        ),
        correct == 10 && loss < 0.01,
    );
}

// ---------------------------------------------------------------- criterion 5

#[test]
fn c5_throughput() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let corpus = synth::labeled_set(&mut rng, 400, 0.2);
    let vocab = CharVocab::build(corpus.iter().map(|r| r.text.as_str()), 5).unwrap();
    let hp = Hyperparams::defaults(5, Head::Attention);
    let params = ModelParams::<f32>::init(vocab.index_space(), &hp, 33);
    let texts: Vec<String> = corpus.into_iter().map(|r| r.text).take(5000).collect();
    let result = bench_throughput(&texts, &vocab, &params, &hp, 256, 2, 3).unwrap();
    report(
        &format!(
            "criterion 5 — batched inference {:.0} msgs/sec median over {} repeats (>= 5000, labels invariant)",
            result.median_msgs_per_sec, result.repeats
        ),
        result.median_msgs_per_sec >= 5000.0,
    );
}

// ---------------------------------------------------------------- criterion 6

#[test]
fn c6_dataset_builder_exactness() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("raw.jsonl");
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut raw = String::with_capacity(16 << 20);
    for id in 0..100_000u64 {
        raw.push_str(&synth::jsonl_line(&mut rng, id, 0.25));
        raw.push('\n');
    }
    std::fs::write(&input, &raw).unwrap();

    // agreement-filter exactness against an independent JSON re-parse
    let mut expected: Vec<(String, String)> = raw
        .lines()
        .filter_map(|line| {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            let detected = v["lang"].as_str().unwrap();
            let declared = v["user"]["lang"].as_str().unwrap();
            (detected == declared)
                .then(|| (detected.to_string(), v["text"].as_str().unwrap().to_string()))
        })
        .collect();
    let stream = ingest_records(&input, InputFormat::Jsonl, JsonFields::default()).unwrap();
    let mut kept: Vec<(String, String)> =
        agreement_filter(stream).map(|r| (r.label, r.text)).collect();
    expected.sort();
    kept.sort();
    let filter_exact = kept == expected;

    // (7,3,3) per language over 4 languages: 13 records per language,
    // disjoint splits, byte-identical across identical seeds
    let spec = SplitSpec {
        languages: ["en", "fr", "es", "de"].iter().map(|s| s.to_string()).collect(),
        per_lang_train: 7,
        per_lang_valid: 3,
        per_lang_test: 3,
        seed: 99,
        min_chars: 1,
        name: "tiny".into(),
    };
    let make = |out: &Path| {
        build_balanced_splits(
            || {
                let s = ingest_records(&input, InputFormat::Jsonl, JsonFields::default())?;
                Ok(agreement_filter(s))
            },
            &spec,
            out,
        )
        .unwrap()
    };
    let out1 = dir.path().join("a");
    let out2 = dir.path().join("b");
    make(&out1);
    make(&out2);

    let mut counts_ok = true;
    let mut identical = true;
    let mut all: Vec<LabeledText> = Vec::new();
    for (split, per) in [("train", 7usize), ("valid", 3), ("test", 3)] {
        let name = format!("tiny.{split}.tsv");
        let a = std::fs::read(out1.join(&name)).unwrap();
        let b = std::fs::read(out2.join(&name)).unwrap();
        identical &= a == b;
        let recs = read_split(&out1.join(&name)).unwrap();
        for lang in ["en", "fr", "es", "de"] {
            counts_ok &= recs.iter().filter(|r| r.label == lang).count() == per;
        }
        all.extend(recs);
    }
    let total = all.len();
    let mut uniq: Vec<(String, String)> =
        all.into_iter().map(|r| (r.label, r.text)).collect();
    uniq.sort();
    uniq.dedup();
    let disjoint = uniq.len() == total && total == 13 * 4;

    report(
        &format!(
            "criterion 6 — 100k-record builder: agreement filter exact ({} kept), 13/language, disjoint splits, byte-identical reruns",
            kept.len()
        ),
        filter_exact && counts_ok && disjoint && identical,
    );
}

// ---------------------------------------------------------------- criterion 7

#[test]
fn c7_checkpoint_round_trip() {
    let dir = TempDir::new().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let corpus = synth::labeled_set(&mut rng, 50, 0.2);
    let vocab = CharVocab::build(corpus.iter().map(|r| r.text.as_str()), 2).unwrap();
    let hp = Hyperparams::defaults(5, Head::Attention);
    let ck = Checkpoint {
        params: ModelParams::<f32>::init(vocab.index_space(), &hp, 41),
        hp,
        cfg: TrainConfig::default(),
        vocab,
        languages: synth::LANGUAGES.iter().map(|s| s.to_string()).collect(),
    };
    let path = dir.path().join("model.ck");
    ck.save(&path).unwrap();
    let loaded = Checkpoint::load(&path).unwrap();

    let tensors_identical = ck
        .params
        .slices()
        .into_iter()
        .zip(loaded.params.slices())
        .all(|(a, b)| {
            a.len() == b.len()
                && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
        });

    // 1,000 random strings over a wide character range
    let mut texts = Vec::with_capacity(1000);
    for _ in 0..1000 {
        let len = rng.gen_range(1..200);
        let s: String = (0..len)
            .map(|_| match rng.gen_range(0..4) {
                0 => rng.gen_range(b'a'..=b'z') as char,
                1 => rng.gen_range(b'0'..=b'9') as char,
                2 => ' ',
                _ => char::from_u32(rng.gen_range(0xA0..0x2FF)).unwrap_or('x'),
            })
            .collect();
        texts.push(s);
    }
    let before = predict(&texts, &ck.vocab, &ck.params, &ck.hp, 128, false).unwrap();
    let after = predict(&texts, &loaded.vocab, &loaded.params, &loaded.hp, 128, false).unwrap();
    let preds_identical = before
        .iter()
        .zip(&after)
        .all(|(a, b)| a.label == b.label && a.probs == b.probs);

    report(
        "criterion 7 — checkpoint save/load: bit-identical tensors, identical predictions on 1000 random strings",
        tensors_identical && preds_identical,
    );
}

// ----------------------------------------------------- criteria 4 and 8 (slow)

struct TrainedPair {
    _dir: TempDir,
    attention: Checkpoint,
    attention_acc: f64,
    maxpool_acc: f64,
    test_set: Vec<LabeledText>,
}

/// Full-size protocol: 7,000/3,000/3,000 per language over 5 languages,
/// default hyperparameters, both heads. Shared by the two slow criteria.
fn trained_pair() -> &'static TrainedPair {
    static PAIR: OnceLock<TrainedPair> = OnceLock::new();
    PAIR.get_or_init(|| {
        let dir = TempDir::new().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2026);
        let train_set = synth::labeled_set(&mut rng, 7000, 0.25);
        let valid_set = synth::labeled_set(&mut rng, 3000, 0.25);
        let test_set = synth::labeled_set(&mut rng, 3000, 0.25);
        let languages: Vec<String> = synth::LANGUAGES.iter().map(|s| s.to_string()).collect();
        let vocab = CharVocab::build(train_set.iter().map(|r| r.text.as_str()), 5).unwrap();
        let cfg = TrainConfig::default();

        let run = |head: Head| {
            let hp = Hyperparams::defaults(5, head);
            eprintln!("== training {} head ==", head.name());
            let (params, report) =
                train::<f32>(&train_set, &valid_set, &languages, &vocab, &hp, &cfg).unwrap();
            eprintln!(
                "{}: best epoch {}, valid acc {:.4}, stopped by {}",
                head.name(),
                report.best_epoch,
                report.best_valid_accuracy,
                report.stopping_reason
            );
            let result =
                evaluate(&test_set, &languages, &vocab, &params, &hp, cfg.batch_size).unwrap();
            eprintln!("{}: test acc {:.4}", head.name(), result.accuracy);
            let ck = Checkpoint {
                params,
                hp,
                cfg: cfg.clone(),
                vocab: vocab.clone(),
                languages: languages.clone(),
            };
            (ck, result.accuracy)
        };
        let (attention, attention_acc) = run(Head::Attention);
        let (_, maxpool_acc) = run(Head::MaxPool);
        TrainedPair { _dir: dir, attention, attention_acc, maxpool_acc, test_set }
    })
}

#[test]
#[ignore = "slow suite: trains two full-size models"]
fn c4_desk_scale_head_comparison() {
    let pair = trained_pair();
    report(
        &format!(
            "criterion 4 — attention test acc {:.4} >= maxpool {:.4} - 0.002 and >= 0.90",
            pair.attention_acc, pair.maxpool_acc
        ),
        pair.attention_acc >= pair.maxpool_acc - 0.002 && pair.attention_acc >= 0.90,
    );
}

#[test]
#[ignore = "slow suite: trains two full-size models"]
fn c8_attention_ignores_urls() {
    let pair = trained_pair();
    // 20 held-out texts with an injected URL whose character span is known
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let mut texts = Vec::new();
    let mut url_spans = Vec::new();
    for i in 0..20 {
        let lang = synth::LANGUAGES[i % synth::LANGUAGES.len()];
        let body = pair.test_set[i * 37 % pair.test_set.len()].text.clone();
        let _ = lang;
        let url = synth::url(&mut rng);
        let start = body.chars().count() + 1;
        let len = url.chars().count();
        texts.push(format!("{body} {url}"));
        url_spans.push(start..start + len);
    }
    let records = attention_records(&pair.attention, &texts).unwrap();
    let mut low_url_cases = 0;
    for (rec, span) in records.iter().zip(&url_spans) {
        let (mut url_sum, mut url_n, mut rest_sum, mut rest_n) = (0.0f64, 0usize, 0.0f64, 0usize);
        for (i, &(_, w)) in rec.weights.iter().enumerate() {
            if span.contains(&i) {
                url_sum += w;
                url_n += 1;
            } else {
                rest_sum += w;
                rest_n += 1;
            }
        }
        if url_sum / url_n as f64 <= rest_sum / rest_n as f64 {
            low_url_cases += 1;
        }
    }
    report(
        &format!(
            "criterion 8 — URL characters draw below-average attention in {low_url_cases}/20 texts (need >= 15)"
        ),
        low_url_cases >= 15,
    );
}

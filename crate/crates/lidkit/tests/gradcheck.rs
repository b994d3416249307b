//! Analytic gradients against independent oracles: central finite
//! differences, the closed-form softmax/cross-entropy identity for the output
//! bias, and a loop-by-loop naive forward implementation.

mod common;

use common::{gradient_mismatches, naive_logits, tiny_hp};
use lidkit::model::{backward, forward, Head, Mode, ModelParams};
use lidkit::vocab::UNK;

fn tiny_batch() -> (Vec<Vec<usize>>, Vec<usize>) {
    // vocab indices in [2, 8); lengths 3..10
    let seqs = vec![
        vec![2, 3, 4, 5, 6, 7, 2, 3, 4, 5],
        vec![4, 4, 2],
        vec![7, 6, 5, 4, 3, 2, 7],
        vec![UNK, 5, 2, 2],
    ];
    let labels = vec![0, 2, 1, 0];
    (seqs, labels)
}

fn check_head(head: Head, seed: u64) {
    let hp = tiny_hp(head);
    let params = ModelParams::<f64>::init(8, &hp, seed);
    let (seqs, labels) = tiny_batch();
    let trace = forward(seqs.clone(), &params, &hp, Mode::Train, None).unwrap();
    let grads = backward(&trace, &labels, &params, &hp).unwrap();
    let bad = gradient_mismatches(&seqs, &labels, &params, &grads, &hp, 1e-4, 1e-4);
    assert!(
        bad.is_empty(),
        "{} head: {} gradient mismatches, first: {:?}",
        head.name(),
        bad.len(),
        &bad[..bad.len().min(5)]
    );
}

#[test]
fn finite_differences_attention_head() {
    check_head(Head::Attention, 17);
}

#[test]
fn finite_differences_maxpool_head() {
    check_head(Head::MaxPool, 23);
}

#[test]
fn output_bias_gradient_matches_closed_form() {
    // dL/db_out = mean over batch of (probs - onehot(gold))
    let hp = tiny_hp(Head::Attention);
    let params = ModelParams::<f64>::init(8, &hp, 5);
    let (seqs, labels) = tiny_batch();
    let trace = forward(seqs, &params, &hp, Mode::Train, None).unwrap();
    let grads = backward(&trace, &labels, &params, &hp).unwrap();
    let batch = labels.len();
    for l in 0..hp.n_languages {
        let mut expect = 0.0;
        for (b, &gold) in labels.iter().enumerate() {
            expect += trace.probs[[l, b]] - if gold == l { 1.0 } else { 0.0 };
        }
        expect /= batch as f64;
        assert!(
            (grads.b_out[l] - expect).abs() < 1e-12,
            "b_out[{l}]: {} vs {}",
            grads.b_out[l],
            expect
        );
    }
}

#[test]
fn gradient_shapes_match_parameter_shapes() {
    for head in [Head::Attention, Head::MaxPool] {
        let hp = tiny_hp(head);
        let params = ModelParams::<f64>::init(8, &hp, 1);
        let (seqs, labels) = tiny_batch();
        let trace = forward(seqs, &params, &hp, Mode::Train, None).unwrap();
        let grads = backward(&trace, &labels, &params, &hp).unwrap();
        for (g, p) in grads.slices().iter().zip(params.slices().iter()) {
            assert_eq!(g.len(), p.len());
        }
    }
}

#[test]
fn pad_embedding_row_gradient_is_zero() {
    let hp = tiny_hp(Head::Attention);
    let params = ModelParams::<f64>::init(8, &hp, 3);
    let (seqs, labels) = tiny_batch();
    let trace = forward(seqs, &params, &hp, Mode::Train, None).unwrap();
    let grads = backward(&trace, &labels, &params, &hp).unwrap();
    assert!(grads.embed.row(0).iter().all(|&g| g == 0.0));
}

#[test]
fn forward_matches_naive_reference_to_1e10() {
    for head in [Head::Attention, Head::MaxPool] {
        let hp = tiny_hp(head);
        let params = ModelParams::<f64>::init(8, &hp, 41);
        let (seqs, _) = tiny_batch();
        let trace = forward(seqs.clone(), &params, &hp, Mode::Infer, None).unwrap();
        for (b, seq) in seqs.iter().enumerate() {
            let expect = naive_logits(seq, &params, &hp);
            for l in 0..hp.n_languages {
                assert!(
                    (trace.logits[[l, b]] - expect[l]).abs() < 1e-10,
                    "{} head, seq {b}, logit {l}: {} vs {}",
                    hp.head.name(),
                    trace.logits[[l, b]],
                    expect[l]
                );
            }
        }
    }
}

#[test]
fn stale_trace_is_rejected() {
    let hp = tiny_hp(Head::Attention);
    let params = ModelParams::<f64>::init(8, &hp, 3);
    let (seqs, _) = tiny_batch();
    let trace = forward(seqs, &params, &hp, Mode::Train, None).unwrap();
    // wrong number of labels
    assert!(backward(&trace, &[0, 1], &params, &hp).is_err());
}

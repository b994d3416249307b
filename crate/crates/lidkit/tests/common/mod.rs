//! Shared test support: a naive loop-by-loop reference forward pass written
//! independently of the library's vectorized code, and a central
//! finite-difference gradient oracle.

#![allow(dead_code)]
// the reference implementation is deliberately written index-by-index
#![allow(clippy::needless_range_loop)]

use lidkit::model::{forward, Head, Hyperparams, Mode, ModelParams};

pub fn tiny_hp(head: Head) -> Hyperparams {
    Hyperparams {
        embed_dim: 4,
        conv_dim: 6,
        region: 3,
        hidden_dim: 5,
        n_languages: 3,
        head,
        dropout_rate: 0.0,
        max_len: 10,
    }
}

fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// Scalar-loop forward pass: returns logits for one sequence. Everything is
/// computed entry by entry from the definitions, no linear algebra library.
pub fn naive_logits(seq: &[usize], p: &ModelParams<f64>, hp: &Hyperparams) -> Vec<f64> {
    let n = seq.len();
    let d = hp.embed_dim;
    let m = hp.region;
    let pad = (m - 1) / 2;

    // embedding lookup: x[j][k]
    let mut x = vec![vec![0.0f64; d]; n];
    for (j, &idx) in seq.iter().enumerate() {
        for k in 0..d {
            x[j][k] = p.embed[[idx, k]];
        }
    }

    // same-length convolution with zero padding
    let mut c = vec![vec![0.0f64; hp.conv_dim]; n];
    for i in 0..n {
        for f in 0..hp.conv_dim {
            let mut acc = p.b_cnn[f];
            for w in 0..m {
                let j = i as isize + w as isize - pad as isize;
                if j < 0 || j >= n as isize {
                    continue; // zero-pad column contributes nothing
                }
                for k in 0..d {
                    acc += p.w_cnn[[f, w * d + k]] * x[j as usize][k];
                }
            }
            c[i][f] = relu(acc);
        }
    }

    // pooling
    let mut pooled = vec![0.0f64; hp.conv_dim];
    match hp.head {
        Head::MaxPool => {
            for f in 0..hp.conv_dim {
                let mut best = f64::NEG_INFINITY;
                for row in c.iter() {
                    if row[f] > best {
                        best = row[f];
                    }
                }
                pooled[f] = best;
            }
        }
        Head::Attention => {
            // hidden vectors and scores
            let mut t = vec![0.0f64; n];
            for i in 0..n {
                for hrow in 0..hp.hidden_dim {
                    let mut acc = p.b_hd[hrow];
                    for f in 0..hp.conv_dim {
                        acc += p.w_hd[[hrow, f]] * c[i][f];
                    }
                    t[i] += p.ctx[hrow] * relu(acc);
                }
            }
            // softmax over scores
            let max = t.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = t.iter().map(|&v| (v - max).exp()).collect();
            let sum: f64 = exps.iter().sum();
            for i in 0..n {
                let a = exps[i] / sum;
                for f in 0..hp.conv_dim {
                    pooled[f] += a * c[i][f];
                }
            }
        }
    }

    // output projection
    let mut logits = vec![0.0f64; hp.n_languages];
    for l in 0..hp.n_languages {
        let mut acc = p.b_out[l];
        for f in 0..hp.conv_dim {
            acc += p.w_out[[l, f]] * pooled[f];
        }
        logits[l] = acc;
    }
    logits
}

/// Mean cross-entropy of a batch under the library's forward pass.
pub fn batch_loss(
    seqs: &[Vec<usize>],
    labels: &[usize],
    p: &ModelParams<f64>,
    hp: &Hyperparams,
) -> f64 {
    let trace = forward(seqs.to_vec(), p, hp, Mode::Infer, None).unwrap();
    trace.loss(labels)
}

/// Central finite differences over every parameter entry.
/// Returns (analytic, numeric, name) triples for mismatches beyond `tol`.
pub fn gradient_mismatches(
    seqs: &[Vec<usize>],
    labels: &[usize],
    params: &ModelParams<f64>,
    grads: &ModelParams<f64>,
    hp: &Hyperparams,
    eps: f64,
    tol: f64,
) -> Vec<(f64, f64, String)> {
    let names = ["embed", "w_cnn", "b_cnn", "w_hd", "b_hd", "ctx", "w_out", "b_out"];
    let mut bad = Vec::new();
    let mut work = params.clone();
    for tensor in 0..names.len() {
        let len = grads.slices()[tensor].len();
        for i in 0..len {
            let orig = work.slices()[tensor][i];
            work.slices_mut()[tensor][i] = orig + eps;
            let plus = batch_loss(seqs, labels, &work, hp);
            work.slices_mut()[tensor][i] = orig - eps;
            let minus = batch_loss(seqs, labels, &work, hp);
            work.slices_mut()[tensor][i] = orig;
            let numeric = (plus - minus) / (2.0 * eps);
            let analytic = grads.slices()[tensor][i];
            let scale = analytic.abs().max(numeric.abs());
            let err = if scale > 1e-7 {
                (analytic - numeric).abs() / scale
            } else {
                (analytic - numeric).abs()
            };
            if err > tol {
                bad.push((analytic, numeric, format!("{}[{}]", names[tensor], i)));
            }
        }
    }
    bad
}

//! Verify the analytic backward pass against central finite differences.
//!
//! Builds a tiny f64 model, computes gradients with the library's backward
//! pass, then perturbs every parameter entry by ±ε and compares. This is the
//! same oracle the test suite uses; run it to convince yourself the
//! from-scratch backpropagation is exact.
//!
//! Run with: cargo run --release --example gradient_check

use lidkit::model::{backward, forward, Head, Hyperparams, Mode, ModelParams};

fn main() -> anyhow::Result<()> {
    let hp = Hyperparams {
        embed_dim: 4,
        conv_dim: 6,
        region: 3,
        hidden_dim: 5,
        n_languages: 3,
        head: Head::Attention,
        dropout_rate: 0.0,
        max_len: 16,
    };
    let params = ModelParams::<f64>::init(8, &hp, 17);
    let seqs = vec![vec![2, 3, 4, 5, 6, 7], vec![4, 4, 2], vec![7, 6, 5, 4, 3]];
    let labels = vec![0usize, 2, 1];

    let trace = forward(seqs.clone(), &params, &hp, Mode::Train, None)?;
    let grads = backward(&trace, &labels, &params, &hp)?;

    let eps = 1e-5;
    let names = ["embed", "w_cnn", "b_cnn", "w_hd", "b_hd", "ctx", "w_out", "b_out"];
    let loss_at = |p: &ModelParams<f64>| -> f64 {
        forward(seqs.clone(), p, &hp, Mode::Infer, None).unwrap().loss(&labels)
    };

    let mut checked = 0usize;
    let mut worst = 0.0f64;
    let mut work = params.clone();
    for t in 0..names.len() {
        let len = grads.slices()[t].len();
        for i in 0..len {
            let orig = work.slices()[t][i];
            work.slices_mut()[t][i] = orig + eps;
            let up = loss_at(&work);
            work.slices_mut()[t][i] = orig - eps;
            let down = loss_at(&work);
            work.slices_mut()[t][i] = orig;
            let numeric = (up - down) / (2.0 * eps);
            let analytic = grads.slices()[t][i];
            let scale = analytic.abs().max(numeric.abs()).max(1e-7);
            worst = worst.max((analytic - numeric).abs() / scale);
            checked += 1;
        }
    }
    println!("checked {checked} parameter entries; worst relative error {worst:.2e}");
    anyhow::ensure!(worst < 1e-4, "gradient mismatch");
    println!("analytic gradients match finite differences");
    Ok(())
}

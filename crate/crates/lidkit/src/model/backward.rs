//! Analytic gradients of the mean cross-entropy loss with respect to every
//! tensor in [`ModelParams`], reusing the dropout masks cached in the trace.

use super::{build_columns, ForwardTrace, Head, Hyperparams, ModelParams};
use crate::error::{Error, Result};
use crate::real::Real;
use crate::vocab::PAD;
use ndarray::{s, Array1, Array2, Axis};

/// Gradient of the batch-mean cross-entropy loss at `trace` for `labels`.
///
/// The PAD embedding row gradient is forced to zero.
pub fn backward<F: Real>(
    trace: &ForwardTrace<F>,
    labels: &[usize],
    params: &ModelParams<F>,
    hp: &Hyperparams,
) -> Result<ModelParams<F>> {
    let batch = trace.batch_len();
    if labels.len() != batch {
        return Err(Error::Data(format!(
            "label count {} does not match batch size {batch}",
            labels.len()
        )));
    }
    if trace.probs.ncols() != batch || trace.x.nrows() != hp.embed_dim {
        return Err(Error::Data("stale trace: shape mismatch with hyperparameters".into()));
    }
    let total = *trace.offsets.last().unwrap();
    let inv_b = F::from_f64(1.0 / batch as f64);
    let mut grads = params.zeros_like();

    // softmax + CE: dlogits = (probs - onehot(gold)) / B
    let mut dlogits = trace.probs.clone();
    for (b, &gold) in labels.iter().enumerate() {
        if gold >= hp.n_languages {
            return Err(Error::Data(format!("gold label {gold} out of range")));
        }
        dlogits[[gold, b]] -= F::one();
    }
    dlogits.mapv_inplace(|v| v * inv_b);

    grads.b_out = dlogits.sum_axis(Axis(1));
    grads.w_out = dlogits.dot(&trace.pooled.t());
    let mut dpooled = params.w_out.t().dot(&dlogits);

    // back through pooled-h dropout
    if let Some(mask) = &trace.pooled_mask {
        dpooled = &dpooled * mask;
    }

    // back through the pooling head into dC
    let mut dconv = Array2::<F>::zeros((hp.conv_dim, total));
    match hp.head {
        Head::Attention => {
            let hidden = trace.hidden.as_ref().expect("attention trace has hidden");
            let alpha = trace.alpha.as_ref().expect("attention trace has alpha");
            let mut dscores = Array1::<F>::zeros(total);
            for (i, w) in trace.offsets.windows(2).enumerate() {
                let (o, end) = (w[0], w[1]);
                let dh = dpooled.column(i);
                let a_seg = alpha.slice(s![o..end]);
                let c_seg = trace.conv.slice(s![.., o..end]);
                // h = C alpha: dC += dh alpha^T, dalpha = C^T dh
                for j in o..end {
                    let aj = alpha[j];
                    let mut dc_col = dconv.column_mut(j);
                    dc_col.zip_mut_with(&dh, |dc, &g| *dc += g * aj);
                }
                let dalpha = c_seg.t().dot(&dh);
                // softmax jacobian: dt = alpha .* (dalpha - <alpha, dalpha>)
                let inner = a_seg.dot(&dalpha);
                for (j, da) in dalpha.iter().enumerate() {
                    dscores[o + j] = a_seg[j] * (*da - inner);
                }
            }
            // t = H^T u
            grads.ctx = hidden.dot(&dscores);
            // dH[:, i] = dt_i * u, then through ReLU
            let mut dhidden = params
                .ctx
                .view()
                .insert_axis(Axis(1))
                .broadcast((hp.hidden_dim, total))
                .unwrap()
                .to_owned();
            for j in 0..total {
                let t = dscores[j];
                dhidden.column_mut(j).mapv_inplace(|v| v * t);
            }
            dhidden.zip_mut_with(hidden, |d, &h| {
                if h <= F::zero() {
                    *d = F::zero()
                }
            });
            grads.w_hd = dhidden.dot(&trace.conv.t());
            grads.b_hd = dhidden.sum_axis(Axis(1));
            dconv += &params.w_hd.t().dot(&dhidden);
        }
        Head::MaxPool => {
            let argmax = trace.argmax.as_ref().expect("maxpool trace has argmax");
            for i in 0..batch {
                for r in 0..hp.conv_dim {
                    let j = argmax[i * hp.conv_dim + r];
                    dconv[[r, j]] += dpooled[[r, i]];
                }
            }
        }
    }

    // conv ReLU
    dconv.zip_mut_with(&trace.conv, |d, &c| {
        if c <= F::zero() {
            *d = F::zero()
        }
    });

    // conv affine over the im2col matrix (rebuilt from the cached, already
    // dropout-scaled x)
    let col = build_columns(&trace.x, &trace.offsets, hp);
    grads.w_cnn = dconv.dot(&col.t());
    grads.b_cnn = dconv.sum_axis(Axis(1));
    let dcol = params.w_cnn.t().dot(&dconv);

    // fold dcol back onto dX, reversing the window construction
    let d = hp.embed_dim;
    let p = hp.padding() as isize;
    let mut dx = Array2::<F>::zeros((d, total));
    for w in trace.offsets.windows(2) {
        let (o, end) = (w[0], w[1]);
        let n = end - o;
        for k in 0..hp.region {
            let shift = k as isize - p;
            let i0 = (-shift).max(0) as usize;
            let i1 = ((n as isize - shift).min(n as isize)).max(0) as usize;
            if i0 >= i1 {
                continue;
            }
            let src = dcol.slice(s![k * d..(k + 1) * d, o + i0..o + i1]);
            let mut dst = dx.slice_mut(s![
                ..,
                (o as isize + i0 as isize + shift) as usize..(o as isize + i1 as isize + shift) as usize
            ]);
            dst += &src;
        }
    }

    // back through x dropout
    if let Some(mask) = &trace.x_mask {
        dx = &dx * mask;
    }

    // scatter into embedding rows
    for (i, q) in trace.seqs.iter().enumerate() {
        let o = trace.offsets[i];
        for (j, &idx) in q.iter().enumerate() {
            let mut row = grads.embed.row_mut(idx);
            row += &dx.column(o + j);
        }
    }
    grads.embed.row_mut(PAD).fill(F::zero());

    Ok(grads)
}

//! Single-sequence building blocks of the architecture.
//!
//! These operate on one embedded sequence at a time and define the reference
//! semantics; the batched [`super::forward`] must agree with composing them
//! (checked by tests). `valid` marks the number of leading non-PAD columns.

use crate::real::Real;
use ndarray::{s, Array1, Array2, Axis};

/// Embed one index sequence into a (d, n) matrix. PAD indices map to the
/// all-zero column regardless of the stored row.
pub fn embed_sequence<F: Real>(indices: &[usize], embed: &Array2<F>) -> Array2<F> {
    let d = embed.ncols();
    let mut x = Array2::<F>::zeros((d, indices.len()));
    for (j, &idx) in indices.iter().enumerate() {
        if idx != crate::vocab::PAD {
            x.column_mut(j).assign(&embed.row(idx));
        }
    }
    x
}

/// Same-length ngram-regional convolution with ReLU: one output column per
/// input column, via (m-1)/2 zero-padding columns on each side.
pub fn conv_ngram<F: Real>(
    x: &Array2<F>,
    w_cnn: &Array2<F>,
    b_cnn: &Array1<F>,
    region: usize,
) -> Array2<F> {
    assert!(region % 2 == 1, "region size must be odd");
    let (d, n) = (x.nrows(), x.ncols());
    let p = (region - 1) / 2;
    let d_cnn = w_cnn.nrows();
    assert_eq!(w_cnn.ncols(), region * d);
    let mut c = Array2::<F>::zeros((d_cnn, n));
    for i in 0..n {
        // concatenated window x_{i-p} .. x_{i+p}, zeros outside the sequence
        let mut window = Array1::<F>::zeros(region * d);
        for k in 0..region {
            let j = i as isize + k as isize - p as isize;
            if j >= 0 && (j as usize) < n {
                window.slice_mut(s![k * d..(k + 1) * d]).assign(&x.column(j as usize));
            }
        }
        let mut v = w_cnn.dot(&window) + b_cnn;
        v.mapv_inplace(|t| if t > F::zero() { t } else { F::zero() });
        c.column_mut(i).assign(&v);
    }
    c
}

/// Row-wise max over the first `valid` columns.
pub fn pool_max<F: Real>(c: &Array2<F>, valid: usize) -> Array1<F> {
    assert!(valid >= 1 && valid <= c.ncols());
    let mut h = Array1::<F>::zeros(c.nrows());
    for r in 0..c.nrows() {
        h[r] = c
            .slice(s![r, ..valid])
            .iter()
            .cloned()
            .fold(F::neg_infinity(), F::max);
    }
    h
}

/// Attention pooling over the first `valid` columns.
///
/// Returns the pooled vector (a weighted sum of the regional feature vectors)
/// and the weights, which sum to 1 over valid positions and are exactly zero
/// on masked ones.
pub fn pool_attention<F: Real>(
    c: &Array2<F>,
    w_hd: &Array2<F>,
    b_hd: &Array1<F>,
    ctx: &Array1<F>,
    valid: usize,
) -> (Array1<F>, Array1<F>) {
    assert!(valid >= 1 && valid <= c.ncols());
    let n = c.ncols();
    let mut hid = w_hd.dot(c);
    hid += &b_hd.view().insert_axis(Axis(1)).broadcast(hid.raw_dim()).unwrap();
    hid.mapv_inplace(|t| if t > F::zero() { t } else { F::zero() });
    let scores = ctx.dot(&hid);
    // masked positions get score -inf, hence weight exactly 0
    let max = scores
        .slice(s![..valid])
        .iter()
        .cloned()
        .fold(F::neg_infinity(), F::max);
    let mut alpha = Array1::<F>::zeros(n);
    let mut sum = F::zero();
    for i in 0..valid {
        let e = (scores[i] - max).exp();
        alpha[i] = e;
        sum += e;
    }
    for i in 0..valid {
        alpha[i] = alpha[i] / sum;
    }
    let h = c.dot(&alpha);
    (h, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn embed_pad_column_is_zero() {
        let e = array![[9.0, 9.0], [1.0, 2.0], [3.0, 4.0]];
        let x = embed_sequence(&[1, 0, 2], &e);
        assert_eq!(x.column(0).to_vec(), vec![1.0, 2.0]);
        assert_eq!(x.column(1).to_vec(), vec![0.0, 0.0]);
        assert_eq!(x.column(2).to_vec(), vec![3.0, 4.0]);
    }

    #[test]
    fn conv_hand_example() {
        // d=1, d_cnn=1, m=3, X=[1,2,3], W=[1,1,1], b=0
        // -> [0+1+2, 1+2+3, 2+3+0] = [3, 6, 5]
        let x = array![[1.0, 2.0, 3.0]];
        let w = array![[1.0, 1.0, 1.0]];
        let b = array![0.0];
        let c = conv_ngram(&x, &w, &b, 3);
        assert_eq!(c, array![[3.0, 6.0, 5.0]]);
    }

    #[test]
    fn conv_zero_weights_give_zero() {
        let x = array![[1.0, -2.0, 3.0], [0.5, 0.5, 0.5]];
        let w = Array2::<f64>::zeros((4, 6));
        let b = Array1::<f64>::zeros(4);
        let c = conv_ngram(&x, &w, &b, 3);
        assert!(c.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn conv_same_length_for_any_odd_region() {
        let x = Array2::<f64>::from_shape_fn((3, 11), |(r, c)| (r * c) as f64 * 0.1 - 1.0);
        for m in [3usize, 5, 7] {
            let w = Array2::<f64>::from_elem((2, m * 3), 0.3);
            let b = array![0.1, -0.1];
            assert_eq!(conv_ngram(&x, &w, &b, m).ncols(), 11);
        }
    }

    #[test]
    fn pool_max_basics() {
        let c = array![[1.0, 5.0, 3.0]];
        assert_eq!(pool_max(&c, 3), array![5.0]);
        // masked last column holds the row max -> excluded
        assert_eq!(pool_max(&c, 1), array![1.0]);
        let single = array![[2.0], [7.0]];
        assert_eq!(pool_max(&single, 1), array![2.0, 7.0]);
    }

    #[test]
    fn attention_uniform_when_scores_equal() {
        // zero context vector -> all scores equal -> uniform weights
        let c = array![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]];
        let w_hd = Array2::<f64>::from_elem((2, 2), 0.5);
        let b_hd = Array1::<f64>::zeros(2);
        let ctx = Array1::<f64>::zeros(2);
        let (h, alpha) = pool_attention(&c, &w_hd, &b_hd, &ctx, 3);
        for &a in alpha.iter() {
            assert!((a - 1.0 / 3.0).abs() < 1e-12);
        }
        assert!((h[0] - 2.0).abs() < 1e-12);
        assert!((h[1] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn attention_single_valid_column() {
        let c = array![[1.0, 9.0], [2.0, 9.0]];
        let w_hd = Array2::<f64>::from_elem((2, 2), 1.0);
        let b_hd = Array1::<f64>::zeros(2);
        let ctx = array![1.0, -1.0];
        let (h, alpha) = pool_attention(&c, &w_hd, &b_hd, &ctx, 1);
        assert_eq!(alpha[0], 1.0);
        assert_eq!(alpha[1], 0.0); // masked position, exact zero
        assert_eq!(h[0], 1.0);
        assert_eq!(h[1], 2.0);
    }

    #[test]
    fn attention_hand_softmax() {
        // Identity hidden layer, ctx picks the score row so that
        // t = (ln 1, ln 3) -> alpha = (0.25, 0.75), h = (0.25, 0.75).
        let c = array![[1.0, 0.0], [0.0, 1.0]];
        let w_hd = array![[1.0f64.ln(), 3.0f64.ln()], [0.0, 0.0]];
        let b_hd = Array1::<f64>::zeros(2);
        let ctx = array![1.0, 0.0];
        // hidden = relu(w_hd * c): column 1 = (ln1, 0) = (0,0), column 2 = (ln3, 0)
        let (h, alpha) = pool_attention(&c, &w_hd, &b_hd, &ctx, 2);
        assert!((alpha[0] - 0.25).abs() < 1e-12, "alpha = {alpha:?}");
        assert!((alpha[1] - 0.75).abs() < 1e-12);
        assert!((h[0] - 0.25).abs() < 1e-12);
        assert!((h[1] - 0.75).abs() < 1e-12);
    }
}

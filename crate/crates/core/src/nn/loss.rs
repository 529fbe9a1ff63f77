use crate::numcore::Matrix;
use crate::{Error, Result};

/// Lower clamp applied to probabilities before taking logs.
pub const PROB_CLAMP: f64 = 1e-12;

/// One-hot rows for integer class labels.
pub fn one_hot(labels: &[u8], classes: usize) -> Matrix {
    let mut m = Matrix::zeros(labels.len(), classes);
    for (i, &l) in labels.iter().enumerate() {
        m.set(i, l as usize, 1.0);
    }
    m
}

/// `n` copies of the same one-hot row.
pub fn constant_one_hot(n: usize, class: usize, classes: usize) -> Matrix {
    let mut m = Matrix::zeros(n, classes);
    for i in 0..n {
        m.set(i, class, 1.0);
    }
    m
}

fn check_one_hot(y: &Matrix) -> Result<()> {
    for r in 0..y.rows() {
        let row = y.row(r);
        let ones = row.iter().filter(|&&v| v == 1.0).count();
        let zeros = row.iter().filter(|&&v| v == 0.0).count();
        if ones != 1 || ones + zeros != row.len() {
            return Err(Error::Validation(format!("label row {r} is not one-hot: {row:?}")));
        }
    }
    Ok(())
}

/// Weighted mean cross-entropy and its gradient with respect to the softmax logits.
///
/// `loss = weight · mean_i(−Σ_k y_ik · ln max(p_ik, 1e-12))`,
/// `dlogits = weight · (p − y) / n`.
pub fn cross_entropy(probs: &Matrix, onehot: &Matrix, weight: f64) -> Result<(f64, Matrix)> {
    if probs.shape() != onehot.shape() {
        return Err(Error::Shape(format!(
            "probabilities {:?} vs labels {:?}",
            probs.shape(),
            onehot.shape()
        )));
    }
    check_one_hot(onehot)?;
    for r in 0..probs.rows() {
        let s: f64 = probs.row(r).iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(format!("probability row {r} sums to {s}")));
        }
    }
    let n = probs.rows();
    if n == 0 {
        return Ok((0.0, Matrix::zeros(0, probs.cols())));
    }
    let mut total = 0.0;
    for (p, y) in probs.as_slice().iter().zip(onehot.as_slice()) {
        if *y != 0.0 {
            total -= y * p.clamp(PROB_CLAMP, 1.0).ln();
        }
    }
    let scale = weight / n as f64;
    let grad = probs.zip_map(onehot, |p, y| scale * (p - y))?;
    Ok((weight * total / n as f64, grad))
}

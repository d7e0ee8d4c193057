use crate::error::{Error, Result};

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `W · features + b` for a row-major `W` with `b.len()` rows.
pub fn dense_forward(features: &[f64], weight: &[f64], bias: &[f64]) -> Result<Vec<f64>> {
    let cols = features.len();
    if weight.len() != bias.len() * cols {
        return Err(Error::ShapeMismatch(format!(
            "dense weight of {} for {} outputs × {cols} features",
            weight.len(),
            bias.len()
        )));
    }
    Ok(bias
        .iter()
        .zip(weight.chunks_exact(cols.max(1)))
        .map(|(b, row)| b + row.iter().zip(features).map(|(w, x)| w * x).sum::<f64>())
        .collect())
}

pub struct DenseOutput {
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
    /// `-ln probs[label]`
    pub loss: f64,
}

pub struct DenseGrads {
    pub grad_w: Vec<f64>,
    pub grad_b: Vec<f64>,
    pub grad_features: Vec<f64>,
}

/// Gradients of the cross-entropy given softmax probabilities.
pub fn dense_softmax_backward(features: &[f64], weight: &[f64], probs: &[f64], label: usize) -> DenseGrads {
    let cols = features.len();
    let grad_b: Vec<f64> = probs
        .iter()
        .enumerate()
        .map(|(r, p)| p - if r == label { 1.0 } else { 0.0 })
        .collect();
    let grad_w = grad_b.iter().flat_map(|g| features.iter().map(move |x| g * x)).collect();
    let grad_features = (0..cols)
        .map(|c| grad_b.iter().enumerate().map(|(r, g)| weight[r * cols + c] * g).sum())
        .collect();
    DenseGrads { grad_w, grad_b, grad_features }
}

/// Fully connected layer, softmax and cross-entropy against `label`.
pub fn dense_softmax_xent(
    features: &[f64],
    weight: &[f64],
    bias: &[f64],
    label: usize,
) -> Result<(DenseOutput, DenseGrads)> {
    if label >= bias.len() {
        return Err(Error::ShapeMismatch(format!("label {label} for {} classes", bias.len())));
    }
    let logits = dense_forward(features, weight, bias)?;
    if let Some(i) = logits.iter().position(|z| !z.is_finite()) {
        return Err(Error::NonFiniteInput(format!("logit {i} is {}", logits[i])));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|z| (z - max).exp()).sum();
    let loss = sum.ln() - (logits[label] - max);
    let probs = softmax(&logits);
    let grads = dense_softmax_backward(features, weight, &probs, label);
    Ok((DenseOutput { logits, probs, loss }, grads))
}

use crate::error::{config, invalid, Result};

/// `ln σ(z/T)`, computed with max subtraction.
pub fn log_softmax_t(logits: &[f64], t: f64) -> Result<Vec<f64>> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(config(format!("temperature must be > 0, got {t}")));
    }
    if logits.is_empty() {
        return Err(invalid("empty logit vector"));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let shifted: Vec<f64> = logits.iter().map(|&z| (z - max) / t).collect();
    let lse = shifted.iter().map(|s| s.exp()).sum::<f64>().ln();
    Ok(shifted.into_iter().map(|s| s - lse).collect())
}

/// Softened softmax `σ(z/T)`.
pub fn softmax_t(logits: &[f64], t: f64) -> Result<Vec<f64>> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(config(format!("temperature must be > 0, got {t}")));
    }
    if logits.is_empty() {
        return Err(invalid("empty logit vector"));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|&z| ((z - max) / t).exp()).collect();
    let s: f64 = e.iter().sum();
    Ok(e.into_iter().map(|v| v / s).collect())
}

/// `−ln σ(z)[y]` and its gradient `σ(z) − onehot(y)`.
pub fn cross_entropy(logits: &[f64], class_id: usize) -> Result<(f64, Vec<f64>)> {
    if class_id >= logits.len() {
        return Err(invalid(format!(
            "class {class_id} out of range for {} logits",
            logits.len()
        )));
    }
    let logp = log_softmax_t(logits, 1.0)?;
    let mut grad: Vec<f64> = logp.iter().map(|l| l.exp()).collect();
    grad[class_id] -= 1.0;
    Ok((-logp[class_id], grad))
}

/// Index of the largest entry; the first one wins ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

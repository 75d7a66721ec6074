//! Vector kernels and softmax helpers.

use crate::{Error, Result};

/// Dot product with four independent accumulators so the loop vectorizes
/// without relying on float reassociation.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    let mut acc = [0.0f64; 4];
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Softmax with max subtraction. Entries equal to `-inf` get probability
/// exactly zero, which is how action masking is expressed.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return vec![0.0; logits.len()];
    }
    let mut out: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for p in &mut out {
        *p /= sum;
    }
    out
}

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|&l| (l - max).exp()).sum::<f64>().ln();
    logits.iter().map(|&l| l - lse).collect()
}

/// Returns `(-log softmax(logits)[target], softmax(logits) - one_hot(target))`.
pub fn softmax_cross_entropy(logits: &[f64], target: usize) -> Result<(f64, Vec<f64>)> {
    if target >= logits.len() {
        return Err(Error::OutOfRange {
            what: "target",
            index: target,
            len: logits.len(),
        });
    }
    if logits.iter().any(|l| !l.is_finite()) {
        return Err(Error::Shape("cross-entropy logits must be finite".into()));
    }
    let logp = log_softmax(logits);
    let mut grad = softmax(logits);
    grad[target] -= 1.0;
    Ok((-logp[target], grad))
}

/// Shannon entropy in nats; zero-probability entries contribute nothing.
pub fn entropy(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_pair_costs_ln2() {
        let (loss, grad) = softmax_cross_entropy(&[0.0, 0.0], 0).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(grad, vec![-0.5, 0.5]);
    }

    #[test]
    fn large_logit_gap_does_not_overflow() {
        let (loss, grad) = softmax_cross_entropy(&[1000.0, 0.0], 0).unwrap();
        assert!(loss.abs() < 1e-12);
        assert!(grad.iter().all(|g| g.is_finite()));
    }

    #[test]
    fn three_class_loss_matches_direct_evaluation() {
        // ln(e + e^2 + e^3) - 3 from a 30-digit evaluation.
        let expected = 0.407_605_964_444_380_3;
        let (loss, _) = softmax_cross_entropy(&[1.0, 2.0, 3.0], 2).unwrap();
        assert!((loss - expected).abs() < 1e-14, "{loss}");
    }

    #[test]
    fn target_out_of_range_is_rejected() {
        assert!(matches!(
            softmax_cross_entropy(&[0.0, 1.0], 2),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn masked_entries_get_exact_zero() {
        let p = softmax(&[1.0, f64::NEG_INFINITY, 0.5]);
        assert_eq!(p[1], 0.0);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dot_handles_remainders() {
        let a: Vec<f64> = (0..7).map(f64::from).collect();
        let b = vec![1.0; 7];
        assert_eq!(dot(&a, &b), 21.0);
    }

    #[test]
    fn uniform_entropy_is_log_n() {
        let p = vec![0.05; 20];
        assert!((entropy(&p) - 20f64.ln()).abs() < 1e-12);
    }
}

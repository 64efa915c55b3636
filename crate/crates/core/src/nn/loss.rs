//! Weighted binary cross-entropy, minimized and normalized by total weight.

use crate::error::{Error, Result};

/// Predictions are clamped to `[EPS, 1 - EPS]` before taking logs.
pub const EPS: f64 = 1e-7;

#[inline]
fn clamp(p: f64) -> f64 {
    p.clamp(EPS, 1.0 - EPS)
}

/// Unweighted cross-entropy of one prediction.
#[inline]
pub fn bce(y: f64, p: f64) -> f64 {
    let p = clamp(p);
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

/// `d (weight * bce(y, p) / norm) / dp`; zero inside the clamped region.
#[inline]
pub fn bce_grad(y: f64, p: f64, weight: f64, norm: f64) -> f64 {
    if !(EPS..=1.0 - EPS).contains(&p) {
        return 0.0;
    }
    -weight / norm * (y / p - (1.0 - y) / (1.0 - p))
}

pub fn weighted_bce(targets: &[f64], predictions: &[f64], weights: &[f64]) -> Result<f64> {
    if targets.len() != predictions.len() || targets.len() != weights.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} targets, {} predictions, {} weights",
            targets.len(),
            predictions.len(),
            weights.len()
        )));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ShapeMismatch("total weight must be positive".into()));
    }
    let sum: f64 = targets
        .iter()
        .zip(predictions)
        .zip(weights)
        .map(|((&y, &p), &w)| w * bce(y, p))
        .sum();
    Ok(sum / total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let l = weighted_bce(&[1.0], &[1.0 - EPS], &[1.0]).unwrap();
        assert!(l < 2e-7);
        let l = weighted_bce(&[1.0], &[1.0], &[1.0]).unwrap();
        assert!(l < 2e-7 && l > 0.0);
        let l = weighted_bce(&[1.0], &[0.5], &[1.0]).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(weighted_bce(&[1.0], &[0.5, 0.2], &[1.0]).is_err());
    }

    #[test]
    fn invariant_to_weight_scaling() {
        let y = [1.0, 0.0, 0.0, 1.0];
        let p = [0.8, 0.3, 0.1, 0.4];
        let w = [3.0, 1.0, 1.0, 5.0];
        let w2: Vec<f64> = w.iter().map(|x| x * 2.0).collect();
        let a = weighted_bce(&y, &p, &w).unwrap();
        let b = weighted_bce(&y, &p, &w2).unwrap();
        assert!((a - b).abs() < 1e-15);
        assert!(a > 0.0);
    }

    #[test]
    fn grad_matches_finite_difference() {
        for (y, p) in [(1.0, 0.3), (0.0, 0.3), (1.0, 0.9), (0.0, 0.01)] {
            let h = 1e-6;
            let fd = (2.0 * bce(y, p + h) - 2.0 * bce(y, p - h)) / (2.0 * h) / 4.0;
            let an = bce_grad(y, p, 2.0, 4.0);
            assert!((fd - an).abs() / an.abs() < 1e-6);
        }
        assert_eq!(bce_grad(1.0, 1.0, 1.0, 1.0), 0.0);
    }
}

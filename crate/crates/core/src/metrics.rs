//! Kullback-Leibler and Jensen-Shannon measures, in bits.
//!
//! All functions take plain slices so that rows of a [`Matrix`](crate::Matrix)
//! can be compared without copying. [`Distribution`] is the validated owner
//! for values that come from outside (query vectors, user input).

use alloc::vec::Vec;
use core::ops::Deref;

use thiserror::Error;

/// Inputs whose mass is within this distance of 1 are renormalized.
pub const NORMALIZATION_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("distribution has a negative or non-finite entry at index {0}")]
    InvalidEntry(usize),
    #[error("distribution sums to {0}, not 1")]
    NotNormalized(f64),
    #[error("distribution is empty")]
    Empty,
}

/// A probability vector: non-negative entries summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    /// Validates `probs`, rescaling it when the total is within
    /// [`NORMALIZATION_SLACK`] of 1 and rejecting it otherwise.
    pub fn new(mut probs: Vec<f64>) -> Result<Self, MetricError> {
        if probs.is_empty() {
            return Err(MetricError::Empty);
        }
        if let Some(i) = probs.iter().position(|p| !p.is_finite() || *p < 0.0) {
            return Err(MetricError::InvalidEntry(i));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_SLACK {
            return Err(MetricError::NotNormalized(total));
        }
        if total != 1.0 {
            for p in &mut probs {
                *p /= total;
            }
        }
        Ok(Self { probs })
    }

    /// Normalizes arbitrary non-negative weights.
    pub fn from_weights(mut weights: Vec<f64>) -> Result<Self, MetricError> {
        if weights.is_empty() {
            return Err(MetricError::Empty);
        }
        if let Some(i) = weights.iter().position(|p| !p.is_finite() || *p < 0.0) {
            return Err(MetricError::InvalidEntry(i));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(MetricError::NotNormalized(total));
        }
        for w in &mut weights {
            *w /= total;
        }
        Ok(Self { probs: weights })
    }

    pub fn uniform(n: usize) -> Result<Self, MetricError> {
        if n == 0 {
            return Err(MetricError::Empty);
        }
        Ok(Self { probs: alloc::vec![1.0 / n as f64; n] })
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }
}

impl Deref for Distribution {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.probs
    }
}

fn check_dims(p: &[f64], q: &[f64]) -> Result<(), MetricError> {
    if p.len() != q.len() {
        return Err(MetricError::DimensionMismatch { left: p.len(), right: q.len() });
    }
    Ok(())
}

/// `p * log2(p / q)` with the `0 * log(0 / q) = 0` convention.
#[inline]
fn kl_term(p: f64, q: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else if q == 0.0 {
        f64::INFINITY
    } else {
        p * libm::log2(p / q)
    }
}

/// `KL(p || q)` in bits; `+inf` when `q` misses mass that `p` has.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64, MetricError> {
    check_dims(p, q)?;
    let mut total = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        let t = kl_term(pi, qi);
        if t == f64::INFINITY {
            return Ok(f64::INFINITY);
        }
        total += t;
    }
    Ok(total.max(0.0))
}

/// Jensen-Shannon divergence in bits, clamped to `[0, 1]`.
///
/// Each coordinate contributes `p log2(p/m) + q log2(q/m)` with
/// `m = (p + q) / 2`; both sums are commutative in IEEE arithmetic so
/// `js_divergence(p, q)` and `js_divergence(q, p)` are bit-identical.
pub fn js_divergence(p: &[f64], q: &[f64]) -> Result<f64, MetricError> {
    check_dims(p, q)?;
    Ok(js_divergence_unchecked(p, q))
}

#[inline]
pub(crate) fn js_divergence_unchecked(p: &[f64], q: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi == 0.0 && qi == 0.0 {
            continue;
        }
        let m = 0.5 * (pi + qi);
        // m > 0 here, so neither term can be infinite.
        total += kl_term(pi, m) + kl_term(qi, m);
    }
    (0.5 * total).clamp(0.0, 1.0)
}

/// Square root of the Jensen-Shannon divergence; a metric on distributions.
pub fn js_distance(p: &[f64], q: &[f64]) -> Result<f64, MetricError> {
    check_dims(p, q)?;
    Ok(js_distance_unchecked(p, q))
}

#[inline]
pub(crate) fn js_distance_unchecked(p: &[f64], q: &[f64]) -> f64 {
    libm::sqrt(js_divergence_unchecked(p, q))
}

/// `1 - js_distance(p, q)`.
pub fn similarity(p: &[f64], q: &[f64]) -> Result<f64, MetricError> {
    check_dims(p, q)?;
    Ok(similarity_unchecked(p, q))
}

#[inline]
pub(crate) fn similarity_unchecked(p: &[f64], q: &[f64]) -> f64 {
    1.0 - js_distance_unchecked(p, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn kl_self_is_zero() {
        let p = [0.2, 0.3, 0.5];
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn kl_disjoint_is_infinite() {
        assert_eq!(kl_divergence(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), f64::INFINITY);
    }

    #[test]
    fn kl_zero_mass_in_p_is_ignored() {
        // q has zero where p has zero: 0 log 0 convention, finite result.
        let v = kl_divergence(&[1.0, 0.0], &[1.0, 0.0]).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn js_of_disjoint_support_is_one() {
        assert_eq!(js_divergence(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(js_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn self_similarity_is_exactly_one() {
        let p = [0.1, 0.25, 0.65];
        assert_eq!(js_distance(&p, &p).unwrap(), 0.0);
        assert_eq!(similarity(&p, &p).unwrap(), 1.0);
    }

    #[test]
    fn dimension_mismatch() {
        let err = js_distance(&[1.0], &[0.5, 0.5]).unwrap_err();
        assert_eq!(err, MetricError::DimensionMismatch { left: 1, right: 2 });
        assert!(kl_divergence(&[1.0], &[0.5, 0.5]).is_err());
        assert!(similarity(&[1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn distribution_renormalizes_small_drift() {
        let d = Distribution::new(vec![0.5, 0.5 + 5e-7]).unwrap();
        let total: f64 = d.iter().sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn distribution_rejects_bad_input() {
        assert_eq!(Distribution::new(vec![]), Err(MetricError::Empty));
        assert_eq!(Distribution::new(vec![0.5, -0.1, 0.6]), Err(MetricError::InvalidEntry(1)));
        assert!(matches!(Distribution::new(vec![0.5, 0.6]), Err(MetricError::NotNormalized(_))));
        assert!(Distribution::new(vec![f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn from_weights_normalizes() {
        let d = Distribution::from_weights(vec![1.0, 3.0]).unwrap();
        assert_eq!(&*d, &[0.25, 0.75]);
        assert!(Distribution::from_weights(vec![0.0, 0.0]).is_err());
    }
}

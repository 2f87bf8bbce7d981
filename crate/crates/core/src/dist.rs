//! Finite probability distributions and the divergences between them.
//!
//! A KL divergence with disjoint support is `f64::INFINITY`, never an error;
//! callers propagate it like any other value.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass of a [`Distribution`].
pub const MASS_TOL: f64 = 1e-12;

/// A probability vector over a finite alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    /// Validates nonnegativity and unit mass (within [`MASS_TOL`]).
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        if let Some(&bad) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::InvalidDistribution(format!("entry {bad}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidDistribution(format!("mass {sum}")));
        }
        Ok(Self(probs))
    }

    /// Rescales a nonnegative weight vector to unit mass.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidDistribution("negative or non-finite weight".into()));
        }
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) {
            return Err(Error::InvalidDistribution("zero total weight".into()));
        }
        Ok(Self(weights.into_iter().map(|w| w / sum).collect()))
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform distribution over an empty alphabet");
        Self(vec![1.0 / n as f64; n])
    }

    /// Wraps a vector the caller has already normalised.
    pub(crate) fn from_raw(probs: Vec<f64>) -> Self {
        Self(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Smallest mass over the alphabet.
    pub fn min_mass(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

impl AsRef<[f64]> for Distribution {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// `D(p || q)` in nats with `0 log(0/q) = 0`; `+inf` when `p(y) > 0 = q(y)`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch { left: p.len(), right: q.len() });
    }
    Ok(kl_unchecked(p, q))
}

#[inline]
pub(crate) fn kl_unchecked(p: &[f64], q: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            if qi <= 0.0 {
                return f64::INFINITY;
            }
            acc += pi * (pi / qi).ln();
        }
    }
    // rounding can push tiny divergences below zero
    acc.max(0.0)
}

/// Shannon entropy in nats.
pub fn entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum()
}

/// `h_b(t) = -t ln t - (1-t) ln(1-t)`.
pub fn binary_entropy(t: f64) -> f64 {
    entropy(&[t, 1.0 - t])
}

/// Total variation as the plain L1 distance `sum |p - q|` (no factor 1/2).
pub fn total_variation(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch { left: p.len(), right: q.len() });
    }
    Ok(p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum())
}

/// The element of `{Q : Q(y) >= eta, sum Q = 1}` closest to `p` in the
/// cross-entropy sense, `Q = max{p, xi*eta} / xi` with `xi` chosen so that
/// `Q` sums to one.
///
/// This minimises `-sum p(y) ln Q(y)` (equivalently `D(p || Q)`) over the
/// floored simplex and satisfies `D(p || Q) <= 2 eta |Y|` whenever
/// `eta < 1/(2|Y|)`.
pub fn floored_approximation(p: &[f64], eta: f64) -> Result<Distribution> {
    let m = p.len();
    if m == 0 {
        return Err(Error::InvalidDistribution("empty support".into()));
    }
    if !(eta >= 0.0 && eta * (m as f64) < 1.0) {
        return Err(Error::BadEta { eta, outputs: m });
    }
    Ok(Distribution::from_raw(floor_unchecked(p, eta)))
}

/// Water-filling solution of `Q(y) = max(p(y)/xi, eta)`, `sum Q = 1`.
pub(crate) fn floor_unchecked(p: &[f64], eta: f64) -> Vec<f64> {
    let m = p.len();
    if eta <= 0.0 {
        let s: f64 = p.iter().sum();
        return p.iter().map(|x| x / s).collect();
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    // clamp the `clamped` smallest entries to eta, scale the rest
    let mut free_mass: f64 = p.iter().sum();
    let mut xi = free_mass;
    for clamped in 0..m {
        let rest = 1.0 - clamped as f64 * eta;
        xi = free_mass / rest;
        let smallest_free = p[order[clamped]];
        if smallest_free >= xi * eta {
            break;
        }
        free_mass -= smallest_free;
    }
    p.iter()
        .map(|&x| if x >= xi * eta && xi > 0.0 { x / xi } else { eta })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn kl_identity_is_zero() {
        let p = [0.2, 0.3, 0.5];
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn kl_hand_value() {
        let v = kl_divergence(&[0.5, 0.5], &[0.25, 0.75]).unwrap();
        let expected = 0.5 * 2f64.ln() + 0.5 * (2.0f64 / 3.0).ln();
        assert_abs_diff_eq!(v, expected, epsilon = 1e-15);
        assert_abs_diff_eq!(v, 0.14384, epsilon = 1e-5);
    }

    #[test]
    fn kl_disjoint_support_is_infinite() {
        assert_eq!(kl_divergence(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), f64::INFINITY);
        // zero mass on p's side contributes nothing
        assert_eq!(kl_divergence(&[0.0, 1.0], &[0.5, 0.5]).unwrap(), 2f64.ln());
    }

    #[test]
    fn kl_length_mismatch() {
        assert!(matches!(
            kl_divergence(&[1.0], &[0.5, 0.5]),
            Err(Error::LengthMismatch { left: 1, right: 2 })
        ));
    }

    #[test]
    fn distribution_validation() {
        assert!(Distribution::new(vec![0.5, 0.5]).is_ok());
        assert!(Distribution::new(vec![0.5, 0.6]).is_err());
        assert!(Distribution::new(vec![-0.1, 1.1]).is_err());
        assert!(Distribution::new(vec![]).is_err());
        let d = Distribution::normalized(vec![1.0, 3.0]).unwrap();
        assert_eq!(d.probs(), &[0.25, 0.75]);
    }

    #[test]
    fn floored_approximation_respects_floor() {
        let q = floored_approximation(&[0.0, 0.01, 0.99], 0.05).unwrap();
        assert!(q.min_mass() >= 0.05 - 1e-15);
        assert_abs_diff_eq!(q.probs().iter().sum::<f64>(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(q.probs()[0], 0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(q.probs()[1], 0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(q.probs()[2], 0.9, epsilon = 1e-14);
    }

    #[test]
    fn floored_approximation_interior_is_identity() {
        let p = [0.3, 0.3, 0.4];
        let q = floored_approximation(&p, 0.1).unwrap();
        for (a, b) in p.iter().zip(q.probs()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn floored_approximation_rejects_large_eta() {
        assert!(matches!(
            floored_approximation(&[0.5, 0.5], 0.5),
            Err(Error::BadEta { .. })
        ));
    }

    #[test]
    fn binary_entropy_half_is_ln2() {
        assert_abs_diff_eq!(binary_entropy(0.5), 2f64.ln(), epsilon = 1e-15);
        assert_eq!(binary_entropy(0.0), 0.0);
    }
}

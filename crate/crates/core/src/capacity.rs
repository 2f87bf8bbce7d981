//! Capacity, its minimax dual, and the output-floored pseudo-capacity.
//!
//! Both solvers are multiplicative-weights ascent on the input distribution.
//! Each iterate `P` yields a certified bracket
//!
//! ```text
//! sum_x P(x) D(W_x || Q_P)  <=  optimum  <=  max_x D(W_x || Q_P)
//! ```
//!
//! where `Q_P` is the best output distribution for `P` (the induced output
//! law for the capacity, its floored projection for the pseudo-capacity).
//! Iteration stops once the bracket is narrower than `tol`.

use serde::{Deserialize, Serialize};

use crate::channel::Channel;
use crate::dist::{floor_unchecked, kl_unchecked, Distribution};
use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    /// Mutual information of `input_dist`, in nats.
    pub capacity: f64,
    pub input_dist: Distribution,
    /// Output law induced by `input_dist`.
    pub output_dist: Distribution,
    pub iterations: usize,
    /// `max_x D(W_x || output_dist) - capacity`, nonnegative.
    pub duality_gap: f64,
    /// False when `max_iter` ran out before the gap fell below `tol`.
    pub converged: bool,
}

/// Blahut–Arimoto from the uniform input.
pub fn capacity(ch: &Channel, tol: f64, max_iter: usize) -> Result<CapacityResult> {
    check_solver_args(tol, max_iter)?;
    let state = ascend(ch, 0.0, tol, max_iter);
    Ok(CapacityResult {
        capacity: state.lower,
        input_dist: Distribution::from_raw(state.input),
        output_dist: Distribution::from_raw(state.output),
        iterations: state.iterations,
        duality_gap: (state.upper - state.lower).max(0.0),
        converged: state.converged,
    })
}

/// Capacity value with the default tolerance and iteration cap.
pub fn capacity_value(ch: &Channel) -> f64 {
    ascend(ch, 0.0, DEFAULT_TOL, DEFAULT_MAX_ITER).lower
}

/// `max_x D(W_x || q)`; an upper bound on the capacity for every `q`.
pub fn dual_value(ch: &Channel, q: &[f64]) -> Result<f64> {
    if q.len() != ch.output_size() {
        return Err(Error::LengthMismatch { left: ch.output_size(), right: q.len() });
    }
    Ok(ch.rows().iter().map(|row| kl_unchecked(row, q)).fold(0.0, f64::max))
}

/// `I(P; W) = sum_x P(x) D(W_x || P W)`.
pub fn mutual_information(p: &[f64], ch: &Channel) -> Result<f64> {
    if p.len() != ch.input_size() {
        return Err(Error::LengthMismatch { left: ch.input_size(), right: p.len() });
    }
    let out = ch.output_distribution(p);
    Ok(p
        .iter()
        .zip(ch.rows())
        .filter(|(px, _)| **px > 0.0)
        .map(|(px, row)| px * kl_unchecked(row, &out))
        .sum::<f64>()
        .max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoCapacity {
    /// `max_x D(W_x || output_dist)` at the returned feasible output law.
    pub value: f64,
    /// Certified lower bound; `value - lower <= tol` on convergence.
    pub lower: f64,
    /// Minimiser over the floored simplex (every mass `>= eta`).
    pub output_dist: Distribution,
    /// Input weights certifying `lower`.
    pub input_weights: Distribution,
    pub iterations: usize,
    pub converged: bool,
}

/// `min_{Q : Q(y) >= eta} max_x D(W_x || Q)`.
pub fn pseudo_capacity(ch: &Channel, eta: f64, tol: f64) -> Result<PseudoCapacity> {
    pseudo_capacity_with(ch, eta, tol, DEFAULT_MAX_ITER)
}

pub fn pseudo_capacity_with(
    ch: &Channel,
    eta: f64,
    tol: f64,
    max_iter: usize,
) -> Result<PseudoCapacity> {
    let outputs = ch.output_size();
    if !(eta >= 0.0 && eta * (outputs as f64) < 1.0) {
        return Err(Error::BadEta { eta, outputs });
    }
    check_solver_args(tol, max_iter)?;
    let state = ascend(ch, eta, tol, max_iter);
    Ok(PseudoCapacity {
        value: state.upper,
        lower: state.lower,
        output_dist: Distribution::from_raw(state.output),
        input_weights: Distribution::from_raw(state.input),
        iterations: state.iterations,
        converged: state.converged,
    })
}

fn check_solver_args(tol: f64, max_iter: usize) -> Result<()> {
    if !(tol > 0.0) {
        return Err(Error::BadParameter(format!("tolerance {tol} must be positive")));
    }
    if max_iter == 0 {
        return Err(Error::BadParameter("max_iter must be at least 1".into()));
    }
    Ok(())
}

struct AscentState {
    input: Vec<f64>,
    output: Vec<f64>,
    lower: f64,
    upper: f64,
    iterations: usize,
    converged: bool,
}

/// Evaluates the bracket at input `p`: returns (per-row divergences, Q_P).
fn bracket(ch: &Channel, p: &[f64], eta: f64) -> (Vec<f64>, Vec<f64>) {
    let py = ch.output_distribution(p);
    let q = if eta > 0.0 { floor_unchecked(&py, eta) } else { py };
    let d = ch.rows().iter().map(|row| kl_unchecked(row, &q)).collect();
    (d, q)
}

fn lower_of(p: &[f64], d: &[f64]) -> f64 {
    p.iter()
        .zip(d)
        .filter(|(px, _)| **px > 0.0)
        .map(|(px, dx)| px * dx)
        .sum()
}

/// Multiplicative update `P'(x) ∝ P(x) exp(step * d_x)`. With `eta = 0` and
/// `step = 1` this is exactly Blahut–Arimoto; for `eta > 0` the step is
/// halved whenever the certified lower bound would decrease.
fn ascend(ch: &Channel, eta: f64, tol: f64, max_iter: usize) -> AscentState {
    let n = ch.input_size();
    let mut p = vec![1.0 / n as f64; n];
    let (mut d, mut q) = bracket(ch, &p, eta);
    let mut lower = lower_of(&p, &d);
    let mut upper = d.iter().copied().fold(0.0, f64::max);
    let mut best = (p.clone(), q.clone(), lower, upper);
    let mut iterations = 0;
    let mut converged = upper - lower < tol;
    let mut step = 1.0f64;

    while !converged && iterations < max_iter {
        iterations += 1;
        let dmax = d
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .fold(f64::NEG_INFINITY, f64::max);
        let mut accepted = false;
        while !accepted {
            let mut next: Vec<f64> = p
                .iter()
                .zip(&d)
                .map(|(px, dx)| {
                    if dx.is_infinite() {
                        // unreachable for interior iterates; keep the mass
                        *px
                    } else {
                        px * (step * (dx - dmax)).exp()
                    }
                })
                .collect();
            let s: f64 = next.iter().sum();
            next.iter_mut().for_each(|v| *v /= s);
            let (nd, nq) = bracket(ch, &next, eta);
            let nlower = lower_of(&next, &nd);
            if eta == 0.0 || nlower >= lower - 1e-15 || step < 1e-6 {
                p = next;
                d = nd;
                q = nq;
                lower = nlower;
                accepted = true;
            } else {
                step *= 0.5;
            }
        }
        if eta > 0.0 {
            step = (step * 2.0).min(1.0);
        }
        upper = d.iter().copied().fold(0.0, f64::max);
        if upper - lower < best.3 - best.2 {
            best = (p.clone(), q.clone(), lower, upper);
        }
        converged = upper - lower < tol;
    }
    if converged {
        best = (p, q, lower, upper);
    }
    AscentState {
        input: best.0,
        output: best.1,
        lower: best.2,
        upper: best.3,
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{bsc_capacity, z_channel_capacity};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::LN_2;

    #[test]
    fn identity_channel_is_ln2() {
        let r = capacity(&Channel::identity(2).unwrap(), 1e-12, 100_000).unwrap();
        assert_abs_diff_eq!(r.capacity, LN_2, epsilon = 1e-12);
        assert!(r.converged);
    }

    #[test]
    fn bsc_matches_closed_form() {
        let r = capacity(&Channel::bsc(0.11).unwrap(), 1e-12, 100_000).unwrap();
        assert_abs_diff_eq!(r.capacity, bsc_capacity(0.11), epsilon = 1e-12);
        assert_abs_diff_eq!(r.capacity, 0.34664, epsilon = 1e-5);
        assert!(r.duality_gap <= 1e-11);
    }

    #[test]
    fn z_channel_matches_closed_form() {
        let r = capacity(&Channel::z_channel(0.5, 0.0).unwrap(), 1e-12, 100_000).unwrap();
        assert_abs_diff_eq!(r.capacity, z_channel_capacity(0.5), epsilon = 1e-11);
        assert_abs_diff_eq!(r.capacity, 1.25f64.ln(), epsilon = 1e-11);
    }

    #[test]
    fn dual_value_examples() {
        let bsc = Channel::bsc(0.11).unwrap();
        assert_abs_diff_eq!(
            dual_value(&bsc, &[0.5, 0.5]).unwrap(),
            bsc_capacity(0.11),
            epsilon = 1e-14
        );
        assert!(dual_value(&bsc, &[0.9, 0.1]).unwrap() >= bsc_capacity(0.11));
        let flat = Channel::new(vec![vec![0.3, 0.7], vec![0.3, 0.7]]).unwrap();
        assert_eq!(dual_value(&flat, &[0.3, 0.7]).unwrap(), 0.0);
        assert_eq!(dual_value(&bsc, &[1.0, 0.0]).unwrap(), f64::INFINITY);
        assert!(dual_value(&bsc, &[1.0]).is_err());
    }

    #[test]
    fn mutual_information_examples() {
        let id = Channel::identity(2).unwrap();
        assert_abs_diff_eq!(mutual_information(&[0.5, 0.5], &id).unwrap(), LN_2, epsilon = 1e-15);
        let flat = Channel::new(vec![vec![0.2, 0.8], vec![0.2, 0.8]]).unwrap();
        assert_eq!(mutual_information(&[0.1, 0.9], &flat).unwrap(), 0.0);
        let bsc = Channel::bsc(0.11).unwrap();
        assert_abs_diff_eq!(
            mutual_information(&[0.5, 0.5], &bsc).unwrap(),
            bsc_capacity(0.11),
            epsilon = 1e-14
        );
        assert!(mutual_information(&[1.0], &bsc).is_err());
    }

    #[test]
    fn zero_capacity_channel_converges_immediately() {
        let flat = Channel::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let r = capacity(&flat, 1e-12, 10).unwrap();
        assert_eq!(r.capacity, 0.0);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn iteration_cap_reports_nonconvergence() {
        let ch = Channel::new(vec![vec![0.7, 0.2, 0.1], vec![0.1, 0.3, 0.6]]).unwrap();
        let r = capacity(&ch, 1e-15, 1).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 1);
        assert!(r.duality_gap > 0.0);
    }

    #[test]
    fn solver_args_validated() {
        let bsc = Channel::bsc(0.2).unwrap();
        assert!(capacity(&bsc, 0.0, 10).is_err());
        assert!(capacity(&bsc, 1e-9, 0).is_err());
        assert!(matches!(pseudo_capacity(&bsc, 0.5, 1e-9), Err(Error::BadEta { .. })));
        assert!(matches!(pseudo_capacity(&bsc, -0.1, 1e-9), Err(Error::BadEta { .. })));
    }

    #[test]
    fn pseudo_capacity_at_zero_eta_is_capacity() {
        let bsc = Channel::bsc(0.11).unwrap();
        let pc = pseudo_capacity(&bsc, 0.0, 1e-12).unwrap();
        let c = capacity(&bsc, 1e-12, 100_000).unwrap();
        assert!((pc.value - c.capacity).abs() <= 10.0 * 1e-12);
    }

    #[test]
    fn pseudo_capacity_bsc_bias_window() {
        let bsc = Channel::bsc(0.11).unwrap();
        let pc = pseudo_capacity(&bsc, 0.01, 1e-12).unwrap();
        let c = bsc_capacity(0.11);
        assert!(pc.value >= c - 1e-12);
        assert!(pc.value <= c + 2.0 * 0.01 * 2.0);
        assert!(pc.output_dist.min_mass() >= 0.01 - 1e-15);
    }
}

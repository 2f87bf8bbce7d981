//! Plug-in capacity estimation from sensing counts, and the confidence and
//! sample-count formulas that drive every identification schedule.
//!
//! With `alpha` the failure probability and alphabets `X`, `Y`:
//!
//! ```text
//! n_alpha   = 4 |X| |Y| ln(|X| / alpha)
//! beta      = (|Y| e^2 / (|X| ln(|X| / alpha)))^(1/5)
//! beta_bar  = 25/4 * beta
//! C_lin     = 15 * 25 / 4
//! radius(n) = 5 sqrt(n_alpha) / 4 * ln(n beta) / sqrt(n) + n_alpha / n
//! ```

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::capacity::{capacity, CapacityResult, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::channel::Channel;
use crate::error::{Error, Result};

/// Linear constant of the required-sample bound.
pub const C_LIN: f64 = 15.0 * 25.0 / 4.0;

/// Confidence parameters for estimating one channel's capacity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceSpec {
    pub alpha: f64,
    pub input_size: usize,
    pub output_size: usize,
}

impl ConfidenceSpec {
    pub fn new(alpha: f64, input_size: usize, output_size: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::BadAlpha(alpha));
        }
        if input_size == 0 || output_size < 2 {
            return Err(Error::Degenerate(format!("alphabet {input_size}x{output_size}")));
        }
        if !((input_size as f64 / alpha).ln() > 0.0) {
            return Err(Error::Degenerate(format!(
                "ln(|X|/alpha) vanishes for |X| = {input_size}, alpha = {alpha}"
            )));
        }
        Ok(Self { alpha, input_size, output_size })
    }

    /// Same alphabets, different confidence level.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(alpha, self.input_size, self.output_size)
    }

    fn log_term(&self) -> f64 {
        (self.input_size as f64 / self.alpha).ln()
    }

    pub fn n_alpha(&self) -> f64 {
        4.0 * (self.input_size * self.output_size) as f64 * self.log_term()
    }

    pub fn beta(&self) -> f64 {
        let e2 = std::f64::consts::E.powi(2);
        (self.output_size as f64 * e2 / (self.input_size as f64 * self.log_term())).powf(0.2)
    }

    pub fn beta_bar(&self) -> f64 {
        25.0 / 4.0 * self.beta()
    }

    /// `beta_bar` evaluated at `alpha = 1`; since `beta` grows with alpha this
    /// bounds `beta_bar` for every admissible alpha. Needs `|X| >= 2`.
    pub fn beta_bar_bound(&self) -> Result<f64> {
        Ok(Self::new(1.0, self.input_size, self.output_size)?.beta_bar())
    }

    pub fn c_lin(&self) -> f64 {
        C_LIN
    }
}

/// Tallies of observed outputs per input symbol.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountMatrix {
    counts: Vec<Vec<u64>>,
}

impl CountMatrix {
    pub fn new(counts: Vec<Vec<u64>>) -> Result<Self> {
        let Some(first) = counts.first() else {
            return Err(Error::BadParameter("count matrix needs at least one row".into()));
        };
        let outputs = first.len();
        if let Some(row) = counts.iter().find(|r| r.len() != outputs) {
            return Err(Error::LengthMismatch { left: outputs, right: row.len() });
        }
        Ok(Self { counts })
    }

    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { counts: vec![vec![0; outputs]; inputs] }
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub(crate) fn row_mut(&mut self, x: usize) -> &mut [u64] {
        &mut self.counts[x]
    }

    pub fn input_size(&self) -> usize {
        self.counts.len()
    }

    pub fn output_size(&self) -> usize {
        self.counts[0].len()
    }

    /// Number of times each input symbol was sent.
    pub fn sends_per_input(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Element-wise accumulation of another matrix with the same shape.
    pub fn merge(&mut self, other: &CountMatrix) -> Result<()> {
        if self.input_size() != other.input_size() || self.output_size() != other.output_size() {
            return Err(Error::LengthMismatch {
                left: self.input_size() * self.output_size(),
                right: other.input_size() * other.output_size(),
            });
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        Ok(())
    }

    /// CSV with header `x,y,count`, one line per cell.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,count\n");
        for (x, row) in self.counts.iter().enumerate() {
            for (y, c) in row.iter().enumerate() {
                let _ = writeln!(out, "{x},{y},{c}");
            }
        }
        out
    }

    /// Inverse of [`CountMatrix::to_csv`]; cells may appear in any order and
    /// missing cells count as zero.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next().map(str::trim) {
            Some("x,y,count") => {}
            other => return Err(Error::Parse(format!("expected header x,y,count, got {other:?}"))),
        }
        let mut cells = Vec::new();
        for (i, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::Parse(format!("line {}: expected 3 fields", i + 2)));
            }
            let parse = |s: &str| {
                s.parse::<u64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", i + 2)))
            };
            cells.push((parse(fields[0])? as usize, parse(fields[1])? as usize, parse(fields[2])?));
        }
        if cells.is_empty() {
            return Err(Error::Parse("no count rows".into()));
        }
        let inputs = cells.iter().map(|c| c.0).max().unwrap() + 1;
        let outputs = cells.iter().map(|c| c.1).max().unwrap() + 1;
        let mut m = Self::zeros(inputs, outputs);
        for (x, y, c) in cells {
            m.counts[x][y] += c;
        }
        Ok(m)
    }
}

/// Splits `n` senses over the input alphabet: `floor(n/|X|)` each, the
/// remainder going to the lowest indices.
pub fn allocate_inputs(n: u64, input_size: usize) -> Vec<u64> {
    assert!(input_size >= 1, "input alphabet must be nonempty");
    let k = input_size as u64;
    let (base, rem) = (n / k, n % k);
    (0..k).map(|x| base + u64::from(x < rem)).collect()
}

/// Row-normalised counts.
pub fn empirical_channel(c: &CountMatrix) -> Result<Channel> {
    let sends = c.sends_per_input();
    if let Some(x) = sends.iter().position(|&s| s == 0) {
        return Err(Error::EmptyRow(x));
    }
    let rows = c
        .counts()
        .iter()
        .zip(&sends)
        .map(|(row, &s)| row.iter().map(|&v| v as f64 / s as f64).collect())
        .collect();
    Ok(Channel::from_rows_unchecked(rows))
}

/// Plug-in estimate `C(W_hat)` with its solver diagnostics.
pub fn estimate_capacity_result(c: &CountMatrix) -> Result<CapacityResult> {
    capacity(&empirical_channel(c)?, DEFAULT_TOL, DEFAULT_MAX_ITER)
}

/// Plug-in estimate `C(W_hat)` in nats.
pub fn estimate_capacity(c: &CountMatrix) -> Result<f64> {
    Ok(estimate_capacity_result(c)?.capacity)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Radius {
    pub value: f64,
    /// Set when `n beta <= 1` (the log term is not positive) or when the
    /// radius exceeds `ln min(|X|, |Y|)`, so the interval says nothing.
    pub vacuous: bool,
}

/// Half-width of the `1 - alpha` confidence interval on `C(W_hat)` after `n`
/// senses spread uniformly over the inputs.
pub fn confidence_radius(spec: &ConfidenceSpec, n: u64) -> Result<Radius> {
    if n == 0 {
        return Err(Error::BadParameter("confidence radius needs n >= 1".into()));
    }
    let na = spec.n_alpha();
    let nf = n as f64;
    let log_arg = nf * spec.beta();
    let value = 1.25 * na.sqrt() * log_arg.ln() / nf.sqrt() + na / nf;
    let cap_max = (spec.input_size.min(spec.output_size) as f64).ln();
    Ok(Radius { value, vacuous: log_arg <= 1.0 || value > cap_max })
}

/// `C_lin * scale * n_a / eps^2 * ln^2(scale * beta_bar * n_a / eps^2)`, the
/// shape shared by every per-channel pull count (`scale = 4` when each
/// estimate must be accurate to half the target).
pub(crate) fn log_squared_term(n_alpha: f64, beta_bar: f64, eps: f64, scale: f64) -> f64 {
    let base = scale * n_alpha / (eps * eps);
    C_LIN * base * (beta_bar * base).ln().powi(2)
}

/// Smallest `n` (before the final ceiling) for which the radius is at most
/// `eps`: `max{C_lin n_a / eps^2 ln^2(beta_bar n_a / eps^2), 2 n_a / eps}`.
pub fn required_samples_real(spec: &ConfidenceSpec, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::BadEps(eps));
    }
    let na = spec.n_alpha();
    Ok(log_squared_term(na, spec.beta_bar(), eps, 1.0).max(2.0 * na / eps))
}

pub fn required_samples(spec: &ConfidenceSpec, eps: f64) -> Result<u64> {
    Ok(ceil_count(required_samples_real(spec, eps)?))
}

/// Ceiling to a sense count, saturating at `u64::MAX`.
pub(crate) fn ceil_count(x: f64) -> u64 {
    if x >= u64::MAX as f64 {
        u64::MAX
    } else {
        x.ceil().max(0.0) as u64
    }
}

/// L1 deviation of an empirical law from the truth that is exceeded with
/// probability at most `alpha`: `sqrt(4 |Y| ln(1/alpha) / n)`.
pub fn tv_radius(alpha: f64, n: u64, output_size: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::BadAlpha(alpha));
    }
    if n == 0 {
        return Err(Error::BadParameter("tv radius needs n >= 1".into()));
    }
    Ok((4.0 * output_size as f64 * (1.0 / alpha).ln() / n as f64).sqrt())
}

/// `n0 = ceil(15 ln^2(beta/y) / y)`, beyond which `ln^2(beta n)/n <= y`.
/// Valid for `0 < y <= 4 beta / e^2`, the maximum of `ln^2(beta n)/n`.
pub fn sufficiency_check(beta: f64, y: f64) -> Result<u64> {
    if !(beta > 0.0) {
        return Err(Error::BadParameter(format!("beta {beta} must be positive")));
    }
    let max = 4.0 * beta / std::f64::consts::E.powi(2);
    // relative slack so the endpoint 4 beta / e^2 itself is accepted
    if !(y > 0.0 && y <= max * (1.0 + 1e-12)) {
        return Err(Error::BadY { y, max });
    }
    Ok(ceil_count(15.0 * (beta / y).ln().powi(2) / y))
}

/// Known-input variant of `n_alpha`: `2 (3|X| + 2)^2 ln(4/alpha)`.
pub fn n_factor_prime(alpha: f64, input_size: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::BadAlpha(alpha));
    }
    Ok(2.0 * (3.0 * input_size as f64 + 2.0).powi(2) * (4.0 / alpha).ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{E, LN_2};

    fn spec22(alpha: f64) -> ConfidenceSpec {
        ConfidenceSpec::new(alpha, 2, 2).unwrap()
    }

    #[test]
    fn derived_constants() {
        let s = spec22(0.1);
        assert_abs_diff_eq!(s.n_alpha(), 16.0 * 20f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(s.beta(), (E * E / 20f64.ln()).powf(0.2), epsilon = 1e-14);
        assert_abs_diff_eq!(s.beta_bar(), 6.25 * s.beta(), epsilon = 1e-14);
        assert_eq!(s.c_lin(), 93.75);
        // at alpha = 1/2 on a binary channel beta is about 1.40
        assert_abs_diff_eq!(spec22(0.5).beta(), 1.3975, epsilon = 1e-4);
    }

    #[test]
    fn spec_rejects_bad_alpha() {
        assert!(matches!(ConfidenceSpec::new(0.0, 2, 2), Err(Error::BadAlpha(_))));
        assert!(matches!(ConfidenceSpec::new(1.5, 2, 2), Err(Error::BadAlpha(_))));
        assert!(ConfidenceSpec::new(1.0, 2, 2).is_ok());
        assert!(matches!(ConfidenceSpec::new(1.0, 1, 2), Err(Error::Degenerate(_))));
    }

    #[test]
    fn allocation_examples() {
        assert_eq!(allocate_inputs(10, 2), vec![5, 5]);
        assert_eq!(allocate_inputs(7, 3), vec![3, 2, 2]);
        assert_eq!(allocate_inputs(0, 4), vec![0, 0, 0, 0]);
    }

    #[test]
    fn empirical_channel_examples() {
        let c = CountMatrix::new(vec![vec![3, 1], vec![0, 4]]).unwrap();
        assert_eq!(empirical_channel(&c).unwrap().matrix(), vec![vec![0.75, 0.25], vec![0.0, 1.0]]);
        let id = CountMatrix::new(vec![vec![5, 0], vec![0, 5]]).unwrap();
        assert_eq!(empirical_channel(&id).unwrap(), Channel::identity(2).unwrap());
        let empty = CountMatrix::new(vec![vec![2, 2], vec![0, 0]]).unwrap();
        assert_eq!(empirical_channel(&empty), Err(Error::EmptyRow(1)));
    }

    #[test]
    fn estimate_examples() {
        let id = CountMatrix::new(vec![vec![17, 0], vec![0, 17]]).unwrap();
        assert_abs_diff_eq!(estimate_capacity(&id).unwrap(), LN_2, epsilon = 1e-12);
        let flat = CountMatrix::new(vec![vec![1, 1], vec![1, 1]]).unwrap();
        assert_eq!(estimate_capacity(&flat).unwrap(), 0.0);
        let bsc = CountMatrix::new(vec![vec![89, 11], vec![11, 89]]).unwrap();
        assert_abs_diff_eq!(
            estimate_capacity(&bsc).unwrap(),
            crate::channel::bsc_capacity(0.11),
            epsilon = 1e-12
        );
    }

    #[test]
    fn radius_examples() {
        let s = spec22(0.1);
        let r = confidence_radius(&s, 1_000_000).unwrap();
        assert_abs_diff_eq!(r.value, 0.12118, epsilon = 1e-5);
        assert!(!r.vacuous);
        let small = confidence_radius(&s, 100).unwrap();
        assert!(small.value > 1.0 && small.vacuous);
        assert!(confidence_radius(&s, 0).is_err());
    }

    #[test]
    fn radius_decreasing_beyond_peak() {
        let s = spec22(0.1);
        let start = (E * E / s.beta()).ceil() as u64;
        let mut prev = confidence_radius(&s, start).unwrap().value;
        let mut n = start;
        while n < 10_000_000_000 {
            n = n * 3 / 2 + 1;
            let r = confidence_radius(&s, n).unwrap().value;
            assert!(r < prev, "radius not decreasing at n = {n}");
            prev = r;
        }
    }

    #[test]
    fn required_samples_examples() {
        let s = spec22(0.1);
        let n = required_samples(&s, 0.1).unwrap() as f64;
        let expected = 93.75 * 4793.2 * (7.487f64 * 4793.2).ln().powi(2);
        assert!((n / expected - 1.0).abs() < 1e-3, "{n} vs {expected}");
        assert!((n / 4.94e7 - 1.0).abs() < 2e-3);
        assert!(matches!(required_samples(&s, 0.0), Err(Error::BadEps(_))));
    }

    #[test]
    fn required_samples_second_term_governs_for_huge_eps() {
        let s = spec22(0.1);
        let eps = 1e6;
        let n = required_samples_real(&s, eps).unwrap();
        assert_abs_diff_eq!(n, 2.0 * s.n_alpha() / eps, epsilon = 1e-15);
    }

    #[test]
    fn doubling_output_alphabet_more_than_doubles_first_term() {
        let a = ConfidenceSpec::new(0.1, 2, 2).unwrap();
        let b = ConfidenceSpec::new(0.1, 2, 4).unwrap();
        let ta = log_squared_term(a.n_alpha(), a.beta_bar(), 0.1, 1.0);
        let tb = log_squared_term(b.n_alpha(), b.beta_bar(), 0.1, 1.0);
        assert!(tb > 2.0 * ta);
    }

    #[test]
    fn tv_radius_examples() {
        assert_abs_diff_eq!(tv_radius(1.0 / E, 8, 2).unwrap(), 1.0, epsilon = 1e-15);
        let r1 = tv_radius(0.2, 100, 3).unwrap();
        let r4 = tv_radius(0.2, 400, 3).unwrap();
        assert_abs_diff_eq!(r4, r1 / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(tv_radius(0.05, 10_000, 4).unwrap(), 0.06925, epsilon = 5e-5);
        assert!(matches!(tv_radius(1.0, 10, 2), Err(Error::BadAlpha(_))));
    }

    #[test]
    fn sufficiency_examples() {
        let y = 4.0 / (E * E);
        let n0 = sufficiency_check(1.0, y).unwrap();
        // 15 * ln^2(e^2/4) / (4/e^2) = 10.44
        assert_eq!(n0, 11);
        assert!((11f64).ln().powi(2) / 11.0 <= y);
        assert!(matches!(sufficiency_check(1.0, y * 1.01), Err(Error::BadY { .. })));
        assert!(matches!(sufficiency_check(1.0, 0.0), Err(Error::BadY { .. })));
    }

    #[test]
    fn n_factor_prime_examples() {
        assert_abs_diff_eq!(n_factor_prime(0.4, 2).unwrap(), 2.0 * 64.0 * 10f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(n_factor_prime(0.4, 2).unwrap(), 294.7, epsilon = 0.1);
        let ratio = n_factor_prime(0.3, 4).unwrap() / n_factor_prime(0.3, 3).unwrap();
        assert_abs_diff_eq!(ratio, (14.0f64 / 11.0).powi(2), epsilon = 1e-12);
        let near_one = n_factor_prime(1.0 - 1e-12, 2).unwrap();
        assert_abs_diff_eq!(near_one, 2.0 * 64.0 * 4f64.ln(), epsilon = 1e-9);
        assert!(n_factor_prime(1.0, 2).is_err());
    }

    #[test]
    fn count_csv_round_trip() {
        let c = CountMatrix::new(vec![vec![3, 1, 0], vec![0, 4, 9]]).unwrap();
        let text = c.to_csv();
        assert!(text.starts_with("x,y,count\n0,0,3\n"));
        assert_eq!(CountMatrix::from_csv(&text).unwrap(), c);
        assert!(CountMatrix::from_csv("a,b\n").is_err());
    }
}

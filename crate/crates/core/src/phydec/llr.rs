//! Detection math: Jacobian logarithm, marginal and combination L-values.
//!
//! All metrics are `-(y - h^T x)^2` for a BPSK vector `x`. Receivers apply
//! them to samples and gains pre-scaled by `1 / sqrt(2 sigma^2)`, which turns
//! the metric into the exact Gaussian log-likelihood for noise variance
//! `sigma^2`. L-values are `ln P[1] / P[0]`.
//!
//! Hypotheses are indexed by integers `d` whose bit `k` is the coded bit of
//! the `k`-th gain in the slice passed in.

use crate::channel::bpsk_map;
use crate::code::LLR_LIMIT;
use crate::error::{Error, Result};

/// `ln(exp(a) + exp(b))` as `max(a, b) + ln(1 + exp(-|a - b|))`.
#[inline]
pub fn jacln2(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    a.max(b) + (-(a - b).abs()).exp().ln_1p()
}

/// `ln sum_j exp(x_j)`, folded pairwise with [`jacln2`].
pub fn jacln(values: &[f64]) -> Result<f64> {
    let (first, rest) =
        values.split_first().ok_or_else(|| Error::Domain("Jacobian logarithm of an empty list".into()))?;
    Ok(rest.iter().fold(*first, |acc, &x| jacln2(acc, x)))
}

#[inline]
fn parity(x: u64) -> u64 {
    (x.count_ones() & 1) as u64
}

/// Noise-free received value for hypothesis `d`.
#[inline]
fn superposition(gains: &[f64], d: usize) -> f64 {
    gains.iter().enumerate().map(|(k, &h)| h * bpsk_map(((d >> k) & 1) as u8)).sum()
}

/// Marginal L-value of user `user`'s coded bit, with every other user's
/// symbol marginalised over both values.
pub fn llr_separate(y: f64, gains: &[f64], user: usize) -> f64 {
    assert!(user < gains.len(), "user index out of range");
    llr_parity(y, gains, 1 << user)
}

/// L-value of the XOR of all users whose gains are given (at least two).
pub fn llr_combination(y: f64, subset_gains: &[f64]) -> f64 {
    assert!(subset_gains.len() >= 2, "a combination needs at least two users");
    llr_parity(y, subset_gains, (1u64 << subset_gains.len()) - 1)
}

/// L-value of the XOR of the users selected by `target`, marginalising the
/// users outside it. A single-bit target is [`llr_separate`]; the full mask
/// is [`llr_combination`].
pub fn llr_parity(y: f64, gains: &[f64], target: u64) -> f64 {
    let k = gains.len();
    assert!(k < 31, "too many users for exhaustive marginalisation");
    assert!(target != 0 && target >> k == 0, "target must be a nonempty subset");
    let mut ones = Vec::with_capacity(1 << k.saturating_sub(1));
    let mut zeros = Vec::with_capacity(1 << k.saturating_sub(1));
    for d in 0..1usize << k {
        let r = y - superposition(gains, d);
        if parity(d as u64 & target) == 1 {
            ones.push(-r * r);
        } else {
            zeros.push(-r * r);
        }
    }
    jacln(&ones).expect("nonempty") - jacln(&zeros).expect("nonempty")
}

/// Per-position hypothesis metrics for one slot state, reused across every
/// L-value request for that state.
#[derive(Debug, Clone)]
pub struct MetricTable {
    users: usize,
    positions: usize,
    // positions * 2^users metrics, each row shifted so its maximum is 0.
    metrics: Vec<f64>,
    weights: Vec<f64>,
}

impl MetricTable {
    /// `samples` and `gains` already scaled to the unit metric.
    pub fn new(samples: &[f64], gains: &[f64]) -> Self {
        let users = gains.len();
        let dim = 1usize << users;
        let points: Vec<f64> = (0..dim).map(|d| superposition(gains, d)).collect();
        let mut metrics = Vec::with_capacity(samples.len() * dim);
        for &y in samples {
            let start = metrics.len();
            let mut best = f64::NEG_INFINITY;
            for &s in &points {
                let m = -(y - s) * (y - s);
                best = best.max(m);
                metrics.push(m);
            }
            metrics[start..].iter_mut().for_each(|m| *m -= best);
        }
        let weights = metrics.iter().map(|m| m.exp()).collect();
        MetricTable { users, positions: samples.len(), metrics, weights }
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn positions(&self) -> usize {
        self.positions
    }

    pub fn dim(&self) -> usize {
        1 << self.users
    }

    pub fn row(&self, n: usize) -> &[f64] {
        let d = self.dim();
        &self.metrics[n * d..(n + 1) * d]
    }

    fn weight_row(&self, n: usize) -> &[f64] {
        let d = self.dim();
        &self.weights[n * d..(n + 1) * d]
    }

    /// L-values of the XOR of the `target` users at every position.
    pub fn parity_llrs(&self, target: u64) -> Vec<f64> {
        assert!(target != 0 && target >> self.users == 0);
        (0..self.positions)
            .map(|n| {
                let (mut s0, mut s1) = (0.0, 0.0);
                for (d, &w) in self.weight_row(n).iter().enumerate() {
                    if parity(d as u64 & target) == 1 {
                        s1 += w;
                    } else {
                        s0 += w;
                    }
                }
                clamp_ratio(s1, s0)
            })
            .collect()
    }

    /// L-values of the XOR of `target`, restricted to hypotheses consistent
    /// with already decoded combinations. Each constraint is an indicator
    /// over this table's users and the coded bits of that XOR.
    pub fn constrained_parity_llrs(&self, target: u64, constraints: &[(u64, Vec<u8>)]) -> Vec<f64> {
        assert!(target != 0 && target >> self.users == 0);
        assert!(constraints.len() < 64);
        let dim = self.dim();
        let syndromes: Vec<u64> = (0..dim as u64)
            .map(|d| {
                constraints.iter().enumerate().fold(0u64, |acc, (r, (mask, _))| acc | parity(d & mask) << r)
            })
            .collect();
        (0..self.positions)
            .map(|n| {
                let want = constraints
                    .iter()
                    .enumerate()
                    .fold(0u64, |acc, (r, (_, bits))| acc | (bits[n] as u64) << r);
                let (mut s0, mut s1) = (0.0, 0.0);
                for (d, &w) in self.weight_row(n).iter().enumerate() {
                    if syndromes[d] != want {
                        continue;
                    }
                    if parity(d as u64 & target) == 1 {
                        s1 += w;
                    } else {
                        s0 += w;
                    }
                }
                clamp_ratio(s1, s0)
            })
            .collect()
    }

    /// Normalised per-position probability vectors for the joint decoder.
    pub fn probabilities(&self) -> Vec<f64> {
        let dim = self.dim();
        let mut out = self.weights.clone();
        for row in out.chunks_mut(dim) {
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|x| *x /= s);
        }
        out
    }
}

fn clamp_ratio(s1: f64, s0: f64) -> f64 {
    match (s1 > 0.0, s0 > 0.0) {
        (true, true) => (s1.ln() - s0.ln()).clamp(-LLR_LIMIT, LLR_LIMIT),
        (true, false) => LLR_LIMIT,
        (false, true) => -LLR_LIMIT,
        (false, false) => 0.0,
    }
}

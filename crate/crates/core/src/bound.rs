//! Analytical upper bound on frame throughput.
//!
//! The bound models every active user as transmitting in each of the `S`
//! slots with probability `p`. A slot with `K` colliders yields a
//! Binomial(`2^K - 1`, `p̃_K`) number of decoded combinations, where `p̃_K`
//! is the best probability, over subset sizes `i`, of decoding the XOR of
//! the `i` strongest signals against the full collision. Per-slot counts are
//! treated as independent, the frame total as Gaussian with mean `S·ε̄` and
//! variance `S·σ²_ε`, and a frame is counted as recovered when that total
//! reaches the number of active users (optionally weighted by the
//! probability that a random matrix over GF(q) has full rank).
//!
//! `p̃_K` is estimated by Monte Carlo with [`estimate_ptilde`] and can be
//! cached as a plain-text table.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{draw_fading, synthesize_slot};
use crate::code::{decode_soft_detailed, CodeSpec, Message};
use crate::error::{Error, Result};
use crate::gf2m::full_rank_probability;
use crate::phydec::MetricTable;
use crate::rng::{cell_id, trial_rng, Purpose};

/// Monte Carlo estimates of decoding the XOR of the `i` strongest users
/// from a collision of `K`, for `K = 1..=k_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeProbabilityTable {
    pub snr_db: f64,
    /// `entries[K - 1][i - 1] = (estimate, half_width, trials)`.
    entries: Vec<Vec<(f64, f64, u64)>>,
}

/// 95% normal-approximation half-width of a binomial proportion.
pub fn binomial_half_width(p: f64, trials: u64) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    1.96 * (p * (1.0 - p) / trials as f64).sqrt()
}

impl DecodeProbabilityTable {
    /// Build from success counts, `successes[K - 1][i - 1]` out of `trials`.
    pub fn from_counts(snr_db: f64, successes: &[Vec<u64>], trials: u64) -> Result<Self> {
        let entries = successes
            .iter()
            .enumerate()
            .map(|(k, row)| {
                if row.len() != k + 1 {
                    return Err(Error::Table(format!("row for K = {} has {} entries", k + 1, row.len())));
                }
                Ok(row
                    .iter()
                    .map(|&s| {
                        let p = if trials == 0 { 0.0 } else { s as f64 / trials as f64 };
                        (p, binomial_half_width(p, trials), trials)
                    })
                    .collect())
            })
            .collect::<Result<_>>()?;
        Ok(DecodeProbabilityTable { snr_db, entries })
    }

    /// A table with `p̃_K = ptilde[K - 1]` placed at `i = 1` and no sampling
    /// error.
    pub fn from_ptilde(snr_db: f64, ptilde: &[f64]) -> Result<Self> {
        if ptilde.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Table("probabilities must lie in [0, 1]".into()));
        }
        let entries = ptilde
            .iter()
            .enumerate()
            .map(|(k, &p)| (0..=k).map(|i| (if i == 0 { p } else { 0.0 }, 0.0, 0)).collect())
            .collect();
        Ok(DecodeProbabilityTable { snr_db, entries })
    }

    pub fn k_max(&self) -> usize {
        self.entries.len()
    }

    pub fn estimate(&self, k: usize, i: usize) -> f64 {
        self.entries[k - 1][i - 1].0
    }

    pub fn half_width(&self, k: usize, i: usize) -> f64 {
        self.entries[k - 1][i - 1].1
    }

    /// `p̃_K`: the maximum over `i`. Zero for collisions beyond the table,
    /// which the receiver discards.
    pub fn ptilde(&self, k: usize) -> f64 {
        if k == 0 || k > self.k_max() {
            return 0.0;
        }
        self.entries[k - 1].iter().map(|e| e.0).fold(0.0, f64::max)
    }

    /// Half-width of the entry attaining [`Self::ptilde`].
    pub fn ptilde_half_width(&self, k: usize) -> f64 {
        if k == 0 || k > self.k_max() {
            return 0.0;
        }
        let row = &self.entries[k - 1];
        let best = row.iter().map(|e| e.0).fold(0.0, f64::max);
        row.iter().find(|e| e.0 == best).map(|e| e.1).unwrap_or(0.0)
    }

    /// Plain-text form: a comment header and one `K i estimate half_width
    /// trials` line per entry.
    pub fn to_text(&self) -> String {
        let mut s = format!("# snr_db {}\n# K i estimate half_width trials\n", self.snr_db);
        for (k, row) in self.entries.iter().enumerate() {
            for (i, (p, h, t)) in row.iter().enumerate() {
                writeln!(s, "{} {} {:.17e} {:.17e} {}", k + 1, i + 1, p, h, t).unwrap();
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut snr_db = None;
        let mut entries: Vec<Vec<(f64, f64, u64)>> = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut it = rest.split_whitespace();
                if it.next() == Some("snr_db") {
                    let v = it.next().and_then(|v| v.parse().ok());
                    snr_db = Some(v.ok_or_else(|| Error::Table(format!("line {}: bad snr_db", n + 1)))?);
                }
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::Table(format!("line {}: expected `K i estimate half_width trials`", n + 1));
            if f.len() != 5 {
                return Err(bad());
            }
            let k: usize = f[0].parse().map_err(|_| bad())?;
            let i: usize = f[1].parse().map_err(|_| bad())?;
            let p: f64 = f[2].parse().map_err(|_| bad())?;
            let h: f64 = f[3].parse().map_err(|_| bad())?;
            let t: u64 = f[4].parse().map_err(|_| bad())?;
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Table(format!("line {}: estimate {p} outside [0, 1]", n + 1)));
            }
            if k == entries.len() + 1 && i == 1 {
                entries.push(Vec::new());
            }
            if k != entries.len() || i != entries[k - 1].len() + 1 {
                return Err(Error::Table(format!(
                    "line {}: entries out of order at K = {k}, i = {i}",
                    n + 1
                )));
            }
            entries[k - 1].push((p, h, t));
        }
        if entries.last().is_some_and(|row| row.len() != entries.len()) {
            return Err(Error::Table("last row is incomplete".into()));
        }
        let snr_db = snr_db.ok_or_else(|| Error::Table("missing `# snr_db` header".into()))?;
        Ok(DecodeProbabilityTable { snr_db, entries })
    }
}

/// Estimate the decoding probabilities of the XOR of the `i` strongest
/// users in a Rayleigh-faded collision of `K`, for every `K <= k_max` and
/// `i <= K`, with unit noise variance. The other `K - i` users are
/// marginalized as interference. Trials run on the current rayon pool;
/// counts do not depend on scheduling.
pub fn estimate_ptilde(
    k_max: usize,
    snr_db: f64,
    spec: &CodeSpec,
    trials: u64,
    max_iters: usize,
    seed: u64,
) -> Result<DecodeProbabilityTable> {
    if trials == 0 {
        return Err(Error::Domain("need at least one trial".into()));
    }
    if k_max == 0 || k_max > 16 {
        return Err(Error::Domain(format!("k_max {k_max} outside 1..=16")));
    }
    let successes: Vec<Vec<u64>> = (1..=k_max)
        .map(|k| {
            let cell = cell_id(&[0xb0, k as u64, snr_db.to_bits()]);
            (0..trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = trial_rng(seed, cell, t, Purpose::Traffic);
                    let mut noise = trial_rng(seed, cell, t, Purpose::Noise);
                    let real = draw_fading(k, snr_db, 1.0, &mut rng);
                    let msgs: Vec<Message> = (0..k).map(|_| Message::random(spec.k(), &mut rng)).collect();
                    let slot = synthesize_slot(spec, msgs, real, 1.0, &mut noise).expect("shapes match");
                    let mut order: Vec<usize> = (0..k).collect();
                    let g = &slot.realization.gains;
                    order.sort_by(|&a, &b| g[b].total_cmp(&g[a]).then(a.cmp(&b)));
                    let scale = 1.0 / 2f64.sqrt();
                    let y: Vec<f64> = slot.samples.iter().map(|v| v * scale).collect();
                    let h: Vec<f64> = g.iter().map(|v| v * scale).collect();
                    let table = MetricTable::new(&y, &h);
                    let mut target = 0u64;
                    order
                        .iter()
                        .map(|&u| {
                            target |= 1 << u;
                            let out = decode_soft_detailed(&table.parity_llrs(target), spec, max_iters);
                            let ok = out.converged
                                && Some(spec.extract_message(&out.hard)) == slot.truth.combination(target);
                            u64::from(ok)
                        })
                        .collect::<Vec<u64>>()
                })
                .reduce(|| vec![0; k], |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect())
        })
        .collect();
    DecodeProbabilityTable::from_counts(snr_db, &successes, trials)
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

fn ln_binomial_pmf(n: usize, k: usize, p: f64) -> f64 {
    let lc = ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k);
    let term = |count: usize, x: f64| if count == 0 { 0.0 } else { count as f64 * x.ln() };
    lc + term(k, p) + term(n - k, 1.0 - p)
}

/// Mean and variance of the number of combinations decoded in one slot with
/// `n_tx` active users, each present with probability `p`.
pub fn epsilon_moments(n_tx: usize, p: f64, table: &DecodeProbabilityTable) -> (f64, f64) {
    assert!((0.0..=1.0).contains(&p), "p outside [0, 1]");
    let (mut mean, mut second) = (0.0, 0.0);
    for k in 1..=n_tx {
        let pt = table.ptilde(k);
        if pt == 0.0 {
            continue;
        }
        let w = ln_binomial_pmf(n_tx, k, p).exp();
        if w == 0.0 {
            continue;
        }
        let eta = 2f64.powi(k as i32) - 1.0;
        mean += w * eta * pt;
        second += w * (eta * pt * (1.0 - pt) + (eta * pt).powi(2));
    }
    (mean, (second - mean * mean).max(0.0))
}

/// How the Gaussian frame-level weights are used.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GaussianMode {
    /// Weights normalized over `0..=S(2^N - 1)` to a probability mass.
    #[default]
    Renormalized,
    /// The raw density at each integer.
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundConfig {
    pub g_grid: Vec<f64>,
    pub slots: usize,
    pub n_bc: u32,
    /// Per-slot transmission probability; `1 - 2^-n_bc` by default.
    pub p: f64,
    /// Largest admissible Poisson tail mass.
    pub tail_tolerance: f64,
    /// Largest active-user count summed over.
    pub n_tx_limit: usize,
    pub mode: GaussianMode,
}

impl BoundConfig {
    pub fn new(g_grid: Vec<f64>, slots: usize, n_bc: u32) -> Self {
        BoundConfig {
            g_grid,
            slots,
            n_bc,
            p: 1.0 - 2f64.powi(-(n_bc as i32)),
            tail_tolerance: 1e-9,
            n_tx_limit: 1000,
            mode: GaussianMode::Renormalized,
        }
    }

    pub fn q(&self) -> f64 {
        2f64.powi(self.n_bc as i32)
    }
}

/// Bound quantities at one load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundPoint {
    pub g: f64,
    /// Throughput bound, first form: `(1/S) Σ N Pois(N) P(m >= N)`.
    pub phi_ub: f64,
    /// Second printed form: `G Σ Pois(N) P(m >= N)`, reported for comparison.
    pub phi_ub_alt: f64,
    /// First form with each term weighted by the full-rank probability over
    /// GF(q).
    pub phi_ub_field: f64,
    /// Probability of a full-rank frame matrix, including the GF(q) factor.
    pub p_full_rank: f64,
    /// Probability of decoding at least `N^tx` combinations.
    pub p_enough: f64,
    /// Poisson mass left out of the sums.
    pub truncated_tail: f64,
}

/// Weights of the frame total `m` over `0..=upper`, as `(m, weight)`.
fn frame_weights(mean: f64, var: f64, upper: f64, mode: GaussianMode) -> Vec<(f64, f64)> {
    if var <= 1e-300 {
        let m = mean.round().clamp(0.0, upper);
        return vec![(m, 1.0)];
    }
    let sd = var.sqrt();
    let lo = (mean - 40.0 * sd).floor().max(0.0);
    let hi = (mean + 40.0 * sd).ceil().min(upper);
    if lo > hi {
        return Vec::new();
    }
    let norm = 1.0 / (2.0 * std::f64::consts::PI * var).sqrt();
    let mut w: Vec<(f64, f64)> = Vec::with_capacity((hi - lo) as usize + 1);
    let mut m = lo;
    while m <= hi {
        w.push((m, norm * (-(m - mean).powi(2) / (2.0 * var)).exp()));
        m += 1.0;
    }
    if mode == GaussianMode::Renormalized {
        let total: f64 = w.iter().map(|x| x.1).sum();
        if total > 0.0 {
            w.iter_mut().for_each(|x| x.1 /= total);
        }
    }
    w
}

/// Evaluate the bound at every load of `cfg.g_grid`.
pub fn evaluate_bound(cfg: &BoundConfig, table: &DecodeProbabilityTable) -> Result<Vec<BoundPoint>> {
    if cfg.slots == 0 {
        return Err(Error::Domain("frame needs at least one slot".into()));
    }
    if !(0.0..=1.0).contains(&cfg.p) {
        return Err(Error::Domain(format!("p = {} outside [0, 1]", cfg.p)));
    }
    let s = cfg.slots as f64;
    let q = cfg.q();
    let mut per_n: Vec<Option<(f64, f64)>> = Vec::new();
    cfg.g_grid
        .iter()
        .map(|&g| {
            if !(g > 0.0) || !g.is_finite() {
                return Err(Error::Domain(format!("load must be positive, got {g}")));
            }
            let lambda = g * s;
            let (mut enough_mass, mut full_rank_mass, mut phi, mut phi_field) = (0.0, 0.0, 0.0, 0.0);
            let mut mass = (-lambda).exp();
            let mut mean_mass = 0.0;
            let mut n = 0usize;
            // The tail must be small both as probability mass and as mass
            // weighted by N, since the throughput sums N * Pois(N).
            let tail = |mass: f64, mean_mass: f64| (1.0 - mass).max(0.0).max((lambda - mean_mass).max(0.0));
            while tail(mass, mean_mass) > cfg.tail_tolerance {
                n += 1;
                if n > cfg.n_tx_limit {
                    return Err(Error::Truncation {
                        what: format!("Poisson sum at G = {g}"),
                        tail: tail(mass, mean_mass),
                        tolerance: cfg.tail_tolerance,
                    });
                }
                let ln_pois = n as f64 * lambda.ln() - lambda - ln_factorial(n);
                let pois = ln_pois.exp();
                mass += pois;
                mean_mass += n as f64 * pois;
                if per_n.len() < n {
                    per_n.resize(n, None);
                }
                let (p_enough, p_full) = *per_n[n - 1].get_or_insert_with(|| {
                    let (mu, var) = epsilon_moments(n, cfg.p, table);
                    let upper = s * (2f64.powi(n.min(1000) as i32) - 1.0);
                    let (mut enough, mut full) = (0.0, 0.0);
                    for (m, w) in frame_weights(s * mu, s * var, upper, cfg.mode) {
                        if m >= n as f64 {
                            enough += w;
                            full += w * full_rank_probability(n, (m - n as f64) as usize, q);
                        }
                    }
                    (enough, full)
                });
                enough_mass += pois * p_enough;
                full_rank_mass += pois * p_full;
                phi += n as f64 * pois * p_enough;
                phi_field += n as f64 * pois * p_full;
            }
            Ok(BoundPoint {
                g,
                phi_ub: phi / s,
                // The N = 0 term has m = 0 with certainty.
                phi_ub_alt: g * ((-lambda).exp() + enough_mass),
                phi_ub_field: phi_field / s,
                p_full_rank: full_rank_mass,
                p_enough: enough_mass,
                truncated_tail: tail(mass, mean_mass),
            })
        })
        .collect()
}

/// Throughput bound `Φ_UB` per load.
pub fn throughput_upper_bound(cfg: &BoundConfig, table: &DecodeProbabilityTable) -> Result<Vec<f64>> {
    Ok(evaluate_bound(cfg, table)?.into_iter().map(|p| p.phi_ub).collect())
}

/// Full-rank probability per load, with the GF(q) factor (first) and
/// without it (second).
pub fn full_rank_success(cfg: &BoundConfig, table: &DecodeProbabilityTable) -> Result<Vec<(f64, f64)>> {
    Ok(evaluate_bound(cfg, table)?.into_iter().map(|p| (p.p_full_rank, p.p_enough)).collect())
}

#[cfg(test)]
mod tests;

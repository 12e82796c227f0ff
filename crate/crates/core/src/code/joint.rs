//! Joint belief propagation over vector symbols in (F_2)^K.
//!
//! Every codeword position carries a distribution over the `2^K` vectors
//! `d = [c_1, ..., c_K]` of the colliding users' coded bits, indexed by the
//! integer whose bit `k` is user `k`'s bit. A check node constrains the XOR of
//! its incident vector symbols to zero, so its outgoing message is the XOR
//! (group) convolution of the other incoming messages. The convolution is a
//! pointwise product in the Walsh-Hadamard domain, which is where
//! variable-to-check messages are kept.

use super::{CodeSpec, Message};
use crate::error::{Error, Result};

/// Floor applied to every normalised probability.
pub const PROB_FLOOR: f64 = 1e-30;

/// Per-position probability vectors over `2^K` vector symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorSymbolDistribution {
    users: usize,
    positions: usize,
    probs: Vec<f64>,
}

impl VectorSymbolDistribution {
    /// Wrap `positions * 2^users` nonnegative weights (row per position).
    /// Rows are normalised; an all-zero row becomes uniform.
    pub fn new(users: usize, positions: usize, mut probs: Vec<f64>) -> Result<Self> {
        if users == 0 || users > 16 {
            return Err(Error::Domain(format!("collision size {users} outside 1..=16")));
        }
        let dim = 1usize << users;
        if probs.len() != positions * dim {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {positions} positions of dimension {dim}",
                probs.len()
            )));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Domain("weights must be finite and nonnegative".into()));
        }
        for row in probs.chunks_mut(dim) {
            normalize_floor(row);
        }
        Ok(VectorSymbolDistribution { users, positions, probs })
    }

    /// Distribution with all mass on the given symbols (one per position).
    pub fn concentrated(users: usize, symbols: &[usize]) -> Result<Self> {
        let dim = 1usize << users;
        let mut probs = vec![0.0; symbols.len() * dim];
        for (n, &s) in symbols.iter().enumerate() {
            if s >= dim {
                return Err(Error::Domain(format!("symbol {s} outside 0..{dim}")));
            }
            probs[n * dim + s] = 1.0;
        }
        Self::new(users, symbols.len(), probs)
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn dim(&self) -> usize {
        1 << self.users
    }

    pub fn positions(&self) -> usize {
        self.positions
    }

    pub fn row(&self, n: usize) -> &[f64] {
        let d = self.dim();
        &self.probs[n * d..(n + 1) * d]
    }
}

fn normalize_floor(v: &mut [f64]) {
    let sum: f64 = v.iter().sum();
    if !(sum > 0.0) || !sum.is_finite() {
        let u = 1.0 / v.len() as f64;
        v.iter_mut().for_each(|x| *x = u);
        return;
    }
    let mut floored = false;
    for x in v.iter_mut() {
        *x /= sum;
        if *x < PROB_FLOOR {
            *x = PROB_FLOOR;
            floored = true;
        }
    }
    if floored {
        let s: f64 = v.iter().sum();
        v.iter_mut().for_each(|x| *x /= s);
    }
}

/// In-place unnormalised Walsh-Hadamard transform; length must be a power
/// of two. Applying it twice multiplies by the length.
pub(crate) fn wht(v: &mut [f64]) {
    let n = v.len();
    let mut h = 1;
    while h < n {
        for block in v.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

/// XOR convolution of distributions, computed directly in `O(D^2)` per
/// factor. Reference for [`wht_check_update`].
pub fn group_convolution_direct(inputs: &[&[f64]]) -> Vec<f64> {
    let dim = inputs.first().map(|v| v.len()).unwrap_or(1);
    let mut acc = vec![0.0; dim];
    acc[0] = 1.0;
    for inp in inputs {
        let mut next = vec![0.0; dim];
        for (a, &pa) in acc.iter().enumerate() {
            if pa == 0.0 {
                continue;
            }
            for (b, &pb) in inp.iter().enumerate() {
                next[a ^ b] += pa * pb;
            }
        }
        acc = next;
    }
    acc
}

/// Check-node update for one check: for each incident edge, the XOR
/// convolution of all other incoming distributions, via the Walsh-Hadamard
/// transform. Outputs are not normalised.
pub fn wht_check_update(inputs: &[&[f64]]) -> Vec<Vec<f64>> {
    let d = inputs.len();
    let dim = inputs.first().map(|v| v.len()).unwrap_or(1);
    let transformed: Vec<Vec<f64>> = inputs
        .iter()
        .map(|v| {
            let mut t = v.to_vec();
            wht(&mut t);
            t
        })
        .collect();
    (0..d)
        .map(|skip| {
            let mut prod = vec![1.0; dim];
            for (_, t) in transformed.iter().enumerate().filter(|(i, _)| *i != skip) {
                prod.iter_mut().zip(t).for_each(|(p, x)| *p *= x);
            }
            wht(&mut prod);
            prod.iter_mut().for_each(|p| *p /= dim as f64);
            prod
        })
        .collect()
}

/// Result of [`decode_joint`].
#[derive(Debug, Clone)]
pub struct JointDecodeOutput {
    /// One estimated message per user.
    pub messages: Vec<Message>,
    /// Hard-decided vector symbol per position.
    pub symbols: Vec<usize>,
    /// Every user's hard decision satisfies every check.
    pub converged: bool,
    pub iterations: usize,
    /// Normalised posterior vectors, `positions * 2^K`.
    pub posteriors: Vec<f64>,
}

impl JointDecodeOutput {
    /// Hard-decided coded bits of one user.
    pub fn user_bits(&self, user: usize) -> Vec<u8> {
        self.symbols.iter().map(|&s| ((s >> user) & 1) as u8).collect()
    }
}

fn argmax_lowest(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Joint sum-product decoding of `K` users sharing `spec`.
pub fn decode_joint(dist: &VectorSymbolDistribution, spec: &CodeSpec, max_iters: usize) -> JointDecodeOutput {
    assert_eq!(dist.positions(), spec.n(), "one vector per codeword position");
    let dim = dist.dim();
    let users = dist.users();
    let n = spec.n();
    let edges = spec.num_edges();

    // v2c holds Walsh-Hadamard transforms, c2v holds probabilities.
    let mut v2c = vec![0.0; edges * dim];
    let mut c2v = vec![0.0; edges * dim];
    for e in 0..edges {
        let slot = &mut v2c[e * dim..(e + 1) * dim];
        slot.copy_from_slice(dist.row(spec.edge_var(e)));
        wht(slot);
    }

    let mut posteriors = dist.probs.clone();
    let mut symbols: Vec<usize> = (0..n).map(|v| argmax_lowest(dist.row(v))).collect();
    let mut prefix = Vec::new();
    let mut suffix = Vec::new();
    let mut work = vec![0.0; dim];
    let mut converged = false;
    let mut iterations = 0;
    let scale = 1.0 / dim as f64;

    for _ in 0..max_iters {
        iterations += 1;
        for c in 0..spec.num_checks() {
            let range = spec.check_edges(c);
            let d = range.len();
            let base = range.start;
            suffix.clear();
            suffix.resize((d + 1) * dim, 1.0);
            for i in (0..d).rev() {
                let e = base + i;
                for j in 0..dim {
                    suffix[i * dim + j] = suffix[(i + 1) * dim + j] * v2c[e * dim + j];
                }
            }
            prefix.clear();
            prefix.resize(dim, 1.0);
            for i in 0..d {
                let e = base + i;
                for j in 0..dim {
                    work[j] = prefix[j] * suffix[(i + 1) * dim + j];
                }
                wht(&mut work);
                let out = &mut c2v[e * dim..(e + 1) * dim];
                for j in 0..dim {
                    out[j] = (work[j] * scale).max(0.0);
                }
                normalize_floor(out);
                for j in 0..dim {
                    prefix[j] *= v2c[e * dim + j];
                }
            }
        }

        for v in 0..n {
            let list = spec.var_edge_list(v);
            let d = list.len();
            let ch = dist.row(v);
            suffix.clear();
            suffix.resize((d + 1) * dim, 1.0);
            suffix[d * dim..].copy_from_slice(ch);
            for i in (0..d).rev() {
                let e = list[i];
                for j in 0..dim {
                    suffix[i * dim + j] = suffix[(i + 1) * dim + j] * c2v[e * dim + j];
                }
            }
            let post = &mut posteriors[v * dim..(v + 1) * dim];
            post.copy_from_slice(&suffix[..dim]);
            normalize_floor(post);
            symbols[v] = argmax_lowest(post);
            prefix.clear();
            prefix.resize(dim, 1.0);
            for (i, &e) in list.iter().enumerate() {
                for j in 0..dim {
                    work[j] = prefix[j] * suffix[(i + 1) * dim + j];
                }
                normalize_floor(&mut work);
                wht(&mut work);
                v2c[e * dim..(e + 1) * dim].copy_from_slice(&work);
                for j in 0..dim {
                    prefix[j] *= c2v[e * dim + j];
                }
            }
        }

        let satisfied =
            spec.checks().iter().all(|vars| vars.iter().fold(0usize, |acc, &v| acc ^ symbols[v]) == 0);
        if satisfied {
            converged = true;
            break;
        }
    }

    let messages = (0..users)
        .map(|k| {
            let bits: Vec<u8> = symbols.iter().map(|&s| ((s >> k) & 1) as u8).collect();
            spec.extract_message(&bits)
        })
        .collect();
    JointDecodeOutput { messages, symbols, converged, iterations, posteriors }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn wht_is_involutive_up_to_scale() {
        let mut v = vec![0.1, 0.2, 0.3, 0.4, 0.0, 0.5, 0.7, 0.9];
        let orig = v.clone();
        wht(&mut v);
        wht(&mut v);
        for (a, b) in v.iter().zip(&orig) {
            assert!((a / 8.0 - b).abs() < 1e-15);
        }
    }

    #[test]
    fn check_update_matches_direct_convolution() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for users in 1..=4 {
            let dim = 1 << users;
            for degree in 2..=6 {
                let inputs: Vec<Vec<f64>> = (0..degree)
                    .map(|_| {
                        let mut v: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
                        let s: f64 = v.iter().sum();
                        v.iter_mut().for_each(|x| *x /= s);
                        v
                    })
                    .collect();
                let refs: Vec<&[f64]> = inputs.iter().map(Vec::as_slice).collect();
                let fast = wht_check_update(&refs);
                for skip in 0..degree {
                    let others: Vec<&[f64]> =
                        refs.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, v)| *v).collect();
                    let direct = group_convolution_direct(&others);
                    for (a, b) in fast[skip].iter().zip(&direct) {
                        assert!((a - b).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn distribution_rejects_bad_shapes() {
        assert!(VectorSymbolDistribution::new(2, 3, vec![0.25; 11]).is_err());
        assert!(VectorSymbolDistribution::new(0, 1, vec![1.0]).is_err());
        assert!(VectorSymbolDistribution::new(1, 1, vec![-1.0, 2.0]).is_err());
        let d = VectorSymbolDistribution::new(1, 1, vec![0.0, 0.0]).unwrap();
        assert_eq!(d.row(0), &[0.5, 0.5]);
    }

    #[test]
    fn noiseless_two_user_decode() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let code = crate::code::default_code();
        let u1 = Message::random(code.k(), &mut rng);
        let u2 = Message::random(code.k(), &mut rng);
        let c1 = code.encode(&u1).unwrap();
        let c2 = code.encode(&u2).unwrap();
        let symbols: Vec<usize> =
            c1.bits().iter().zip(c2.bits()).map(|(&a, &b)| a as usize | (b as usize) << 1).collect();
        let dist = VectorSymbolDistribution::concentrated(2, &symbols).unwrap();
        let out = decode_joint(&dist, code, 50);
        assert!(out.converged);
        assert_eq!(out.messages, vec![u1, u2]);
    }
}

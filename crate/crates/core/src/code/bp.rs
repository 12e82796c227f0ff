//! Binary sum-product decoding in the log domain.
//!
//! L-values passed in follow the receiver convention `ln P[c=1]/P[c=0]`
//! (positive favours 1). Internally messages are `ln P[0]/P[1]`, the check
//! rule is the tanh product and every message is clamped to `LLR_LIMIT`.

use super::{CodeSpec, Message};

/// Magnitude cap on every L-value; matches a probability floor of 1e-30.
pub const LLR_LIMIT: f64 = 69.077_552_789_821_37;

/// Full state returned by [`decode_soft_detailed`].
#[derive(Debug, Clone)]
pub struct SoftDecodeOutput {
    /// Hard decision on every codeword position.
    pub hard: Vec<u8>,
    /// A-posteriori L-values, `ln P[1]/P[0]`.
    pub posteriors: Vec<f64>,
    /// Hard decisions satisfy every check.
    pub converged: bool,
    /// Iterations run.
    pub iterations: usize,
}

#[inline]
fn clamp(x: f64) -> f64 {
    x.clamp(-LLR_LIMIT, LLR_LIMIT)
}

/// Decode and return the message if a valid codeword is reached within
/// `max_iters` iterations.
pub fn decode_soft(llrs: &[f64], spec: &CodeSpec, max_iters: usize) -> Option<Message> {
    let out = decode_soft_detailed(llrs, spec, max_iters);
    out.converged.then(|| spec.extract_message(&out.hard))
}

pub fn decode_soft_detailed(llrs: &[f64], spec: &CodeSpec, max_iters: usize) -> SoftDecodeOutput {
    assert_eq!(llrs.len(), spec.n(), "one L-value per codeword position");
    let n = spec.n();
    let edges = spec.num_edges();
    let channel: Vec<f64> = llrs.iter().map(|&l| clamp(-l)).collect();
    let mut v2c = vec![0.0; edges];
    let mut c2v = vec![0.0; edges];
    for e in 0..edges {
        v2c[e] = channel[spec.edge_var(e)];
    }
    let mut total = channel.clone();
    let mut hard = vec![0u8; n];
    let mut tanhs = Vec::new();
    let mut suffix = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..max_iters {
        iterations += 1;
        for c in 0..spec.num_checks() {
            let range = spec.check_edges(c);
            tanhs.clear();
            tanhs.extend(range.clone().map(|e| (0.5 * v2c[e]).tanh()));
            let d = tanhs.len();
            suffix.clear();
            suffix.resize(d + 1, 1.0);
            for i in (0..d).rev() {
                suffix[i] = suffix[i + 1] * tanhs[i];
            }
            let mut prefix = 1.0;
            for (i, e) in range.enumerate() {
                let t = prefix * suffix[i + 1];
                c2v[e] = clamp(((1.0 + t) / (1.0 - t)).ln());
                prefix *= tanhs[i];
            }
        }
        for v in 0..n {
            let list = spec.var_edge_list(v);
            let sum = channel[v] + list.iter().map(|&e| c2v[e]).sum::<f64>();
            total[v] = sum;
            for &e in list {
                v2c[e] = clamp(sum - c2v[e]);
            }
            hard[v] = u8::from(sum < 0.0);
        }
        if spec.syndrome_ok(&hard) {
            converged = true;
            break;
        }
    }
    if max_iters == 0 {
        for v in 0..n {
            hard[v] = u8::from(channel[v] < 0.0);
        }
        converged = spec.syndrome_ok(&hard);
    }
    SoftDecodeOutput { hard, posteriors: total.iter().map(|&l| -l).collect(), converged, iterations }
}

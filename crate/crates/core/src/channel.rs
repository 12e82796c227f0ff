//! Symbol-synchronous multiple-access channel with BPSK, Rayleigh block
//! fading and additive Gaussian noise:
//!
//! ```text
//! y_n = sum_k h_k * mu(c_{k,n}) + w_n,    w_n ~ N(0, sigma^2)
//! ```
//!
//! Gains are magnitudes of zero-mean circularly-symmetric complex Gaussians
//! scaled so that `E[h^2]` equals the linear SNR times the noise variance.
//! One gain per user per slot.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::code::{CodeSpec, Codeword, Message};
use crate::error::{Error, Result};

/// BPSK mapping: 0 -> -1, 1 -> +1.
#[inline]
pub fn bpsk_map(bit: u8) -> f64 {
    if bit == 0 {
        -1.0
    } else {
        1.0
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Per-user fading amplitudes of one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub gains: Vec<f64>,
    pub snr_db: f64,
}

impl ChannelRealization {
    pub fn new(gains: Vec<f64>, snr_db: f64) -> Result<Self> {
        if gains.iter().any(|g| !(*g >= 0.0) || !g.is_finite()) {
            return Err(Error::Domain("fading gains must be finite and nonnegative".into()));
        }
        Ok(ChannelRealization { gains, snr_db })
    }

    pub fn users(&self) -> usize {
        self.gains.len()
    }
}

/// Draw `users` i.i.d. Rayleigh amplitudes with `E[h^2] = 10^(snr_db/10) *
/// noise_variance`.
pub fn draw_fading<R: Rng + ?Sized>(
    users: usize,
    snr_db: f64,
    noise_variance: f64,
    rng: &mut R,
) -> ChannelRealization {
    let half_power = 0.5 * db_to_linear(snr_db) * noise_variance;
    let s = half_power.sqrt();
    let gains = (0..users)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            s * re.hypot(im)
        })
        .collect();
    ChannelRealization { gains, snr_db }
}

/// Superimpose the BPSK bursts with their gains and add noise of the given
/// variance drawn from `noise_rng`. A variance of zero draws nothing.
pub fn synthesize_samples<R: Rng + ?Sized>(
    bursts: &[&Codeword],
    gains: &[f64],
    length: usize,
    noise_variance: f64,
    noise_rng: &mut R,
) -> Result<Vec<f64>> {
    if bursts.len() != gains.len() {
        return Err(Error::DimensionMismatch(format!("{} bursts but {} gains", bursts.len(), gains.len())));
    }
    if let Some(b) = bursts.iter().find(|b| b.len() != length) {
        return Err(Error::DimensionMismatch(format!(
            "burst of length {} in a slot of length {length}",
            b.len()
        )));
    }
    let sigma = noise_variance.max(0.0).sqrt();
    let mut y = vec![0.0; length];
    for (burst, &h) in bursts.iter().zip(gains) {
        for (s, &bit) in y.iter_mut().zip(burst.bits()) {
            *s += h * bpsk_map(bit);
        }
    }
    if sigma > 0.0 {
        for s in y.iter_mut() {
            let w: f64 = StandardNormal.sample(noise_rng);
            *s += sigma * w;
        }
    }
    Ok(y)
}

/// Ground truth of a slot, visible only to error detection.
#[derive(Debug, Clone)]
pub struct SlotTruth {
    pub messages: Vec<Message>,
    pub codewords: Vec<Codeword>,
}

impl SlotTruth {
    /// XOR of the indicated users' messages.
    pub fn combination(&self, indicator: u64) -> Option<Message> {
        let mut acc: Option<Message> = None;
        for (k, m) in self.messages.iter().enumerate() {
            if (indicator >> k) & 1 == 1 {
                acc = Some(match acc {
                    None => m.clone(),
                    Some(a) => a.xor(m).ok()?,
                });
            }
        }
        acc
    }
}

/// Everything the receiver sees for one slot, plus the hidden truth.
#[derive(Debug, Clone)]
pub struct SlotObservation {
    pub samples: Vec<f64>,
    pub realization: ChannelRealization,
    /// Noise variance, known to the receiver.
    pub noise_variance: f64,
    pub truth: SlotTruth,
}

impl SlotObservation {
    pub fn users(&self) -> usize {
        self.realization.users()
    }
}

/// Encode each message, superimpose and add noise.
pub fn synthesize_slot<R: Rng + ?Sized>(
    spec: &CodeSpec,
    messages: Vec<Message>,
    realization: ChannelRealization,
    noise_variance: f64,
    noise_rng: &mut R,
) -> Result<SlotObservation> {
    if messages.len() != realization.users() {
        return Err(Error::DimensionMismatch(format!(
            "{} messages but {} gains",
            messages.len(),
            realization.users()
        )));
    }
    let codewords = messages.iter().map(|m| spec.encode(m)).collect::<Result<Vec<_>>>()?;
    let refs: Vec<&Codeword> = codewords.iter().collect();
    let samples = synthesize_samples(&refs, &realization.gains, spec.n(), noise_variance, noise_rng)?;
    Ok(SlotObservation { samples, realization, noise_variance, truth: SlotTruth { messages, codewords } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cw(bits: Vec<u8>) -> Codeword {
        Codeword::new(bits).unwrap()
    }

    #[test]
    fn bpsk_values() {
        assert_eq!(bpsk_map(0), -1.0);
        assert_eq!(bpsk_map(1), 1.0);
        for b in [0u8, 1] {
            assert_eq!(u8::from(bpsk_map(b) > 0.0), b);
        }
    }

    #[test]
    fn empty_collision() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(draw_fading(0, 10.0, 1.0, &mut rng).gains.is_empty());
        let y = synthesize_samples(&[], &[], 1000, 1.0, &mut rng).unwrap();
        let var = y.iter().map(|v| v * v).sum::<f64>() / 1000.0;
        assert!(var > 0.8 && var < 1.2);
    }

    #[test]
    fn noiseless_superposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ones = cw(vec![1; 5]);
        let y = synthesize_samples(&[&ones], &[2.0], 5, 0.0, &mut rng).unwrap();
        assert!(y.iter().all(|&v| v == 2.0));
        let a = cw(vec![0, 1]);
        let b = cw(vec![1, 1]);
        let y = synthesize_samples(&[&a, &b], &[1.0, 1.0], 2, 0.0, &mut rng).unwrap();
        assert_eq!(y, vec![0.0, 2.0]);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = cw(vec![0, 1, 1]);
        assert!(synthesize_samples(&[&a], &[1.0], 2, 1.0, &mut rng).is_err());
        assert!(synthesize_samples(&[&a], &[1.0, 2.0], 3, 1.0, &mut rng).is_err());
    }

    #[test]
    fn superposition_is_linear_under_replayed_noise() {
        let a = cw(vec![0, 1, 1, 0, 1]);
        let b = cw(vec![1, 1, 0, 0, 1]);
        let g = [0.7, 1.9];
        let y2 = synthesize_samples(&[&a, &b], &g, 5, 1.0, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let y1 = synthesize_samples(&[&a], &g[..1], 5, 1.0, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        for n in 0..5 {
            let expect = y1[n] + g[1] * bpsk_map(b.bits()[n]);
            assert!((y2[n] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn truth_combinations() {
        let m1 = Message::new(vec![1, 0, 1]).unwrap();
        let m2 = Message::new(vec![1, 1, 0]).unwrap();
        let t = SlotTruth { messages: vec![m1.clone(), m2.clone()], codewords: vec![] };
        assert_eq!(t.combination(0b01), Some(m1));
        assert_eq!(t.combination(0b11), Some(Message::new(vec![0, 1, 1]).unwrap()));
        assert_eq!(t.combination(0), None);
    }
}

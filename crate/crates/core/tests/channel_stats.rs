//! Statistical checks of the channel model.

use plnc_aloha::channel::{bpsk_map, draw_fading, synthesize_samples};
use plnc_aloha::code::Codeword;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn fading_power_matches_snr() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let gains = draw_fading(1_000_000, 10.0, 1.0, &mut rng).gains;
    let mean_sq = gains.iter().map(|h| h * h).sum::<f64>() / gains.len() as f64;
    assert!((mean_sq - 10.0).abs() < 0.1, "{mean_sq}");
}

#[test]
fn fading_amplitudes_are_rayleigh() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let omega = 10f64.powf(0.5);
    let mut gains = draw_fading(20_000, 5.0, 1.0, &mut rng).gains;
    gains.sort_by(f64::total_cmp);
    let n = gains.len() as f64;
    let cdf = |x: f64| 1.0 - (-x * x / omega).exp();
    let d = gains
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);
    // Asymptotic Kolmogorov-Smirnov critical value at the 1% level.
    let critical = 1.628 / n.sqrt();
    assert!(d < critical, "D = {d}, critical {critical}");
}

#[test]
fn noise_has_unit_variance() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let y = synthesize_samples(&[], &[], 1_000_000, 1.0, &mut rng).unwrap();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / y.len() as f64;
    assert!((var - 1.0).abs() < 0.01, "{var}");
    assert!(mean.abs() < 0.01);
}

#[test]
fn superposition_is_linear_with_replayed_noise() {
    let mut bits_rng = ChaCha8Rng::seed_from_u64(4);
    let len = 500;
    let words: Vec<Codeword> = (0..3)
        .map(|_| Codeword::new((0..len).map(|_| bits_rng.random_range(0..2u8)).collect()).unwrap())
        .collect();
    let gains = [0.4, 1.7, 2.9];
    let refs: Vec<&Codeword> = words.iter().collect();
    let full = synthesize_samples(&refs, &gains, len, 0.5, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
    let noise = synthesize_samples(&[], &[], len, 0.5, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
    for n in 0..len {
        let signal: f64 = words.iter().zip(&gains).map(|(w, h)| h * bpsk_map(w.bits()[n])).sum();
        assert!((full[n] - signal - noise[n]).abs() < 1e-12);
    }
}

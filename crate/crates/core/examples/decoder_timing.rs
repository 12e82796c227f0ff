//! Rough per-decode timing of the binary and joint decoders at 5 dB below
//! the waterfall (non-converging, full iteration count).

use std::time::Instant;

use plnc_aloha::code::{decode_joint, decode_soft_detailed, default_code, VectorSymbolDistribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let code = default_code();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let llrs: Vec<f64> = (0..code.n()).map(|_| rng.random_range(-0.5..0.5)).collect();
    let t = Instant::now();
    let reps = 50;
    for _ in 0..reps {
        std::hint::black_box(decode_soft_detailed(&llrs, code, 50));
    }
    println!("binary: {:.3} ms/decode", t.elapsed().as_secs_f64() * 1e3 / reps as f64);
    for users in 1..=7 {
        let dim = 1 << users;
        let probs: Vec<f64> = (0..code.n() * dim).map(|_| rng.random::<f64>()).collect();
        let dist = VectorSymbolDistribution::new(users, code.n(), probs).unwrap();
        let reps = if users > 5 { 2 } else { 5 };
        let t = Instant::now();
        for _ in 0..reps {
            std::hint::black_box(decode_joint(&dist, code, 50));
        }
        println!("joint K={users}: {:.3} ms/decode", t.elapsed().as_secs_f64() * 1e3 / reps as f64);
    }
}

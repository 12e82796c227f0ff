use super::*;
use crate::code::qc_peg_code;

fn table(p: &[f64]) -> DecodeProbabilityTable {
    DecodeProbabilityTable::from_ptilde(15.0, p).unwrap()
}

/// E[eps] and E[eps^2] by enumerating which of `n` users are present.
fn moments_by_enumeration(n: usize, p: f64, t: &DecodeProbabilityTable) -> (f64, f64) {
    let (mut m1, mut m2) = (0.0, 0.0);
    for present in 0u32..1 << n {
        let k = present.count_ones() as usize;
        let w = p.powi(k as i32) * (1.0 - p).powi((n - k) as i32);
        let eta = ((1u64 << k) - 1) as f64;
        let pt = t.ptilde(k);
        let mean = eta * pt;
        m1 += w * mean;
        m2 += w * (eta * pt * (1.0 - pt) + mean * mean);
    }
    (m1, m2 - m1 * m1)
}

#[test]
fn moments_single_user() {
    let t = table(&[0.7]);
    let (m, v) = epsilon_moments(1, 1.0, &t);
    assert!((m - 0.7).abs() < 1e-15);
    assert!((v - 0.7 * 0.3).abs() < 1e-15);
    assert_eq!(epsilon_moments(3, 0.4, &table(&[0.0; 3])), (0.0, 0.0));
}

#[test]
fn moments_match_enumeration() {
    let t = table(&[0.9, 0.6, 0.3, 0.25, 0.1]);
    for n in 1..=6 {
        for p in [0.1, 0.5, 0.8, 1.0 - 1.0 / 256.0] {
            let (m, v) = epsilon_moments(n, p, &t);
            let (em, ev) = moments_by_enumeration(n, p, &t);
            assert!((m - em).abs() < 1e-10 * em.max(1.0), "{n} {p}");
            assert!((v - ev).abs() < 1e-9 * ev.max(1.0), "{n} {p}");
        }
    }
    let (m, _) = epsilon_moments(2, 0.5, &table(&[1.0, 1.0]));
    // One user w.p. 1/2 (1 combination), both w.p. 1/4 (3 combinations).
    assert!((m - (0.5 + 0.75)).abs() < 1e-15);
}

#[test]
fn zero_table_gives_zero_bound() {
    let cfg = BoundConfig::new(vec![0.2, 1.0, 2.0], 10, 8);
    for p in evaluate_bound(&cfg, &table(&[0.0; 7])).unwrap() {
        assert_eq!(p.phi_ub, 0.0);
        assert_eq!(p.p_full_rank, 0.0);
        assert_eq!(p.p_enough, 0.0);
    }
}

#[test]
fn perfect_table_approaches_load() {
    let cfg = BoundConfig::new(vec![0.02, 0.05], 50, 8);
    let t = table(&[1.0; 16]);
    for p in evaluate_bound(&cfg, &t).unwrap() {
        assert!((p.phi_ub - p.g).abs() < 1e-3 * p.g, "{p:?}");
        assert!(p.truncated_tail <= 1e-9);
    }
}

#[test]
fn perfect_table_saturates() {
    let cfg = BoundConfig::new((1..=30).map(|i| i as f64 * 0.1).collect(), 10, 8);
    let phi = throughput_upper_bound(&cfg, &table(&[1.0; 7])).unwrap();
    let peak = phi.iter().cloned().fold(0.0, f64::max);
    let argmax = phi.iter().position(|&x| x == peak).unwrap();
    assert!(phi[..=argmax].windows(2).all(|w| w[1] >= w[0]));
    assert!(phi.iter().all(|&x| x >= 0.0));
}

#[test]
fn field_factor_orders_the_bounds() {
    let t = table(&[0.95, 0.6, 0.3, 0.15, 0.05, 0.02, 0.01]);
    let grid: Vec<f64> = vec![0.1, 0.3, 0.5, 0.8, 1.2];
    let mut small = BoundConfig::new(grid.clone(), 10, 1);
    let mut large = BoundConfig::new(grid.clone(), 10, 8);
    // Same traffic model, different field.
    small.p = 0.6;
    large.p = 0.6;
    let a = evaluate_bound(&small, &t).unwrap();
    let b = evaluate_bound(&large, &t).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!(x.p_full_rank <= x.p_enough + 1e-15);
        assert!(y.p_full_rank <= y.p_enough + 1e-15);
        assert!(x.p_full_rank < y.p_full_rank, "{x:?} {y:?}");
        assert!(x.phi_ub_field < y.phi_ub_field);
        assert!(y.phi_ub_field <= y.phi_ub + 1e-15);
        assert_eq!(x.p_enough, y.p_enough);
    }
    let mut huge = BoundConfig::new(grid, 10, 16);
    huge.p = 0.6;
    for (h, y) in evaluate_bound(&huge, &t).unwrap().iter().zip(&b) {
        assert!((h.p_full_rank - h.p_enough).abs() < 1e-4);
        assert!(h.p_full_rank >= y.p_full_rank);
    }
}

#[test]
fn raw_mode_differs_only_by_normalization() {
    let t = table(&[0.9, 0.5, 0.2]);
    let mut cfg = BoundConfig::new(vec![0.3], 10, 8);
    let renorm = evaluate_bound(&cfg, &t).unwrap()[0];
    cfg.mode = GaussianMode::Raw;
    let raw = evaluate_bound(&cfg, &t).unwrap()[0];
    assert!(raw.phi_ub > 0.0 && renorm.phi_ub > 0.0);
    assert!((raw.phi_ub - renorm.phi_ub).abs() < 0.2 * renorm.phi_ub);
    assert!(raw.phi_ub_alt.is_finite());
}

#[test]
fn truncation_is_refused() {
    let mut cfg = BoundConfig::new(vec![2.0], 10, 8);
    cfg.n_tx_limit = 10;
    let err = evaluate_bound(&cfg, &table(&[0.5; 7])).unwrap_err();
    assert!(matches!(err, Error::Truncation { .. }));
    assert!(evaluate_bound(&BoundConfig::new(vec![-1.0], 10, 8), &table(&[0.5])).is_err());
}

#[test]
fn table_text_round_trip() {
    let t = DecodeProbabilityTable::from_counts(12.5, &[vec![7], vec![3, 9], vec![0, 1, 10]], 10).unwrap();
    assert_eq!(t.ptilde(2), 0.9);
    assert_eq!(t.ptilde(3), 1.0);
    assert_eq!(t.ptilde(4), 0.0);
    assert!((t.half_width(1, 1) - 1.96 * (0.7f64 * 0.3 / 10.0).sqrt()).abs() < 1e-15);
    let back = DecodeProbabilityTable::from_text(&t.to_text()).unwrap();
    assert_eq!(back, t);
}

#[test]
fn malformed_tables_are_rejected() {
    assert!(DecodeProbabilityTable::from_text("1 1 0.5 0.1 10\n").is_err());
    assert!(DecodeProbabilityTable::from_text("# snr_db 3\n1 1 0.5 0.1\n").is_err());
    assert!(DecodeProbabilityTable::from_text("# snr_db 3\n1 1 1.5 0.1 10\n").is_err());
    assert!(DecodeProbabilityTable::from_text("# snr_db 3\n1 1 0.5 0.1 10\n2 2 0.5 0.1 10\n").is_err());
    assert!(DecodeProbabilityTable::from_text("# snr_db 3\n1 1 0.5 0.1 10\n2 1 0.5 0.1 10\n").is_err());
    assert!(DecodeProbabilityTable::from_counts(0.0, &[vec![1, 2]], 5).is_err());
    assert!(DecodeProbabilityTable::from_ptilde(0.0, &[1.2]).is_err());
}

#[test]
fn ptilde_extremes() {
    let spec = qc_peg_code(8, 1).unwrap();
    let high = estimate_ptilde(2, 60.0, &spec, 40, 50, 1).unwrap();
    assert_eq!(high.estimate(1, 1), 1.0);
    assert_eq!(high.ptilde(1), 1.0);
    let low = estimate_ptilde(2, -30.0, &spec, 40, 50, 1).unwrap();
    assert_eq!(low.ptilde(1), 0.0);
    assert_eq!(low.ptilde(2), 0.0);
    assert!(estimate_ptilde(2, 0.0, &spec, 0, 50, 1).is_err());
}

#[test]
fn ptilde_is_deterministic() {
    let spec = qc_peg_code(8, 1).unwrap();
    let a = estimate_ptilde(3, 8.0, &spec, 30, 50, 9).unwrap();
    let b = estimate_ptilde(3, 8.0, &spec, 30, 50, 9).unwrap();
    assert_eq!(a, b);
}

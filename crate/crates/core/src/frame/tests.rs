use super::*;
use crate::code::qc_peg_code;
use crate::phydec::{DecodedCombination, WorkCounters};
use proptest::prelude::{any, prop, prop_assert, prop_assert_eq, proptest};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn field(m: u32) -> FieldSpec {
    FieldSpec::new(m).unwrap()
}

/// Four users over two slots: users 0 and 1 in both, user 2 only in slot 0,
/// user 3 only in slot 1.
fn example_plan(f: &FieldSpec, alphas: [u16; 6], rng: &mut ChaCha8Rng) -> FramePlan {
    let [a11, a21, a31, a12, a22, a42] = alphas.map(FieldElement);
    let msg = |rng: &mut ChaCha8Rng| Message::random(8 * f.degree() as usize, rng);
    let users = vec![
        UserPlan { message: msg(rng), replicas: vec![(0, a11), (1, a12)] },
        UserPlan { message: msg(rng), replicas: vec![(0, a21), (1, a22)] },
        UserPlan { message: msg(rng), replicas: vec![(0, a31)] },
        UserPlan { message: msg(rng), replicas: vec![(1, a42)] },
    ];
    FramePlan { slots: 2, field: f.clone(), policy: RepetitionPolicy::Fixed(2), users }
}

/// Slot results carrying the true XOR of precoded messages for each
/// indicator.
fn genie_results(plan: &FramePlan, per_slot: &[&[u64]]) -> Vec<SlotDecodeResult> {
    per_slot
        .iter()
        .enumerate()
        .map(|(slot, indicators)| {
            let users = plan.slot_users(slot);
            let combos = indicators
                .iter()
                .map(|&ind| {
                    let mut acc = Message::zeros(plan.users[0].message.len());
                    for (k, &i) in users.iter().enumerate() {
                        if (ind >> k) & 1 == 1 {
                            let u = &plan.users[i];
                            let p = precode(&u.message, u.alpha(slot).unwrap(), &plan.field).unwrap();
                            acc = acc.xor(&p.to_message(&plan.field)).unwrap();
                        }
                    }
                    DecodedCombination { indicator: ind, payload: acc }
                })
                .collect();
            SlotDecodeResult::new(Strategy::SndJd, users.len(), combos, WorkCounters::default())
        })
        .collect()
}

const EXAMPLE: [&[u64]; 2] = [&[0b011, 0b101], &[0b011, 0b110]];

#[test]
fn example_matrix_structure() {
    let f = field(4);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let plan = example_plan(&f, [3, 5, 7, 9, 11, 13], &mut rng);
    let results = genie_results(&plan, &EXAMPLE);
    let sys = assemble_system(&plan, &results).unwrap();
    let expect =
        FieldMatrix::from_rows(&f, 4, &[[3, 5, 0, 0], [3, 0, 7, 0], [9, 11, 0, 0], [0, 11, 0, 13]]).unwrap();
    assert_eq!(sys.a_t, expect);
    verify_system(&plan, &sys).unwrap();
    let out = solve_frame(sys, &plan, results).unwrap();
    // 3*11 != 5*9 in GF(16), so the system is full rank.
    assert_eq!(out.rank, 4);
    assert_eq!(out.recovered_count(), 4);
    for (i, m) in &out.recovered {
        assert_eq!(*m, plan.users[*i].message);
    }
}

#[test]
fn example_is_rank_deficient_over_gf2() {
    let f = field(1);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let plan = example_plan(&f, [1; 6], &mut rng);
    let results = genie_results(&plan, &EXAMPLE);
    let out = solve_frame(assemble_system(&plan, &results).unwrap(), &plan, results).unwrap();
    assert_eq!(out.rank, 3);
    assert_eq!(out.recovered_count(), 0);
    assert_eq!(out.lost, 4);
}

#[test]
fn example_singular_coefficients_lose_users() {
    // a11 * a22 == a21 * a12 makes the 2x2 core singular.
    let f = field(4);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let plan = example_plan(&f, [1, 1, 6, 2, 2, 4], &mut rng);
    let results = genie_results(&plan, &EXAMPLE);
    let out = solve_frame(assemble_system(&plan, &results).unwrap(), &plan, results).unwrap();
    assert_eq!(out.rank, 3);
    assert!(out.recovered_count() < 4);
}

#[test]
fn duplicate_rows_are_dropped() {
    let f = field(4);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let plan = example_plan(&f, [3, 5, 7, 9, 11, 13], &mut rng);
    let results = genie_results(&plan, &[&[0b011, 0b011, 0b101], &[]]);
    let sys = assemble_system(&plan, &results).unwrap();
    assert_eq!(sys.equations(), 2);
    assert_eq!(sys.origins, vec![(0, 0b011), (0, 0b101)]);
}

#[test]
fn unknown_user_is_an_error() {
    let f = field(4);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let plan = example_plan(&f, [3, 5, 7, 9, 11, 13], &mut rng);
    let mut results = genie_results(&plan, &[&[0b001], &[]]);
    results[0].combinations[0].indicator = 0b1000;
    assert!(matches!(assemble_system(&plan, &results), Err(Error::UnknownUser { slot: 0, user: 3 })));
    assert!(assemble_system(&plan, &results[..1]).is_err());
}

#[test]
fn empty_system() {
    let f = field(4);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let plan = example_plan(&f, [3, 5, 7, 9, 11, 13], &mut rng);
    let results = genie_results(&plan, &[&[], &[]]);
    let sys = assemble_system(&plan, &results).unwrap();
    assert_eq!(sys.equations(), 0);
    let out = solve_frame(sys, &plan, results).unwrap();
    assert_eq!((out.recovered_count(), out.lost), (0, 4));
}

#[test]
fn single_user_single_slot() {
    let f = field(8);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let alpha = FieldElement(0x53);
    let plan = FramePlan {
        slots: 1,
        field: f.clone(),
        policy: RepetitionPolicy::Fixed(1),
        users: vec![UserPlan { message: Message::random(16, &mut rng), replicas: vec![(0, alpha)] }],
    };
    let results = genie_results(&plan, &[&[0b1]]);
    let sys = assemble_system(&plan, &results).unwrap();
    assert_eq!(sys.a_t.get(0, 0), alpha);
    let inv = f.inv(alpha).unwrap();
    let direct: Vec<FieldElement> = sys.b[0].iter().map(|&s| f.mul(inv, s)).collect();
    let out = solve_frame(sys, &plan, results).unwrap();
    assert_eq!(out.recovered[&0], symbols_to_message(&direct, &f));
    assert_eq!(out.recovered[&0], plan.users[0].message);
}

#[test]
fn precode_examples() {
    let f = field(4);
    // symbols (1, 2, 3), little-endian within each 4-bit group
    let u = Message::new(vec![1, 0, 0, 0, 0, 1, 0, 0, 1, 1, 0, 0]).unwrap();
    let p = precode(&u, FieldElement(2), &f).unwrap();
    assert_eq!(p.symbols, vec![FieldElement(2), FieldElement(4), FieldElement(6)]);
    assert_eq!(precode(&u, FieldElement::ONE, &f).unwrap().to_message(&f), u);
    assert_eq!(unprecode(&p, FieldElement(2), &f).unwrap(), u);
    assert!(precode(&u, FieldElement::ZERO, &f).is_err());
    assert!(precode(&u, FieldElement(16), &f).is_err());
    assert!(precode(&Message::zeros(10), FieldElement(2), &f).is_err());
}

proptest! {
    #[test]
    fn precoding_inverts(bits in prop::collection::vec(0u8..2, 24), m in prop::sample::select(vec![1u32, 2, 3, 4, 6, 8, 12]), a in 1u16..4096) {
        let f = field(m);
        let alpha = FieldElement(1 + (a - 1) % (f.order() as u16 - 1).max(1));
        let u = Message::new(bits).unwrap();
        let p = precode(&u, alpha, &f).unwrap();
        prop_assert_eq!(p.to_message(&f).len(), u.len());
        prop_assert_eq!(unprecode(&p, alpha, &f).unwrap(), u);
    }

    #[test]
    fn extra_rows_never_lower_rank(seed in 0u64..1000, keep in prop::collection::vec(any::<bool>(), 8)) {
        let f = field(4);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let plan = generate_traffic(0.6, 4, 8, RepetitionPolicy::Fixed(2), &f, &mut rng).unwrap();
        let all: Vec<Vec<u64>> = (0..4).map(|s| {
            let k = plan.slot_users(s).len().min(3);
            (1..1u64 << k).collect()
        }).collect();
        let subset: Vec<Vec<u64>> = all.iter().enumerate()
            .map(|(s, v)| v.iter().copied().filter(|&x| keep[(s + x as usize) % 8]).collect())
            .collect();
        let refs = |v: &Vec<Vec<u64>>| -> Vec<SlotDecodeResult> {
            let slices: Vec<&[u64]> = v.iter().map(|x| x.as_slice()).collect();
            genie_results(&plan, &slices)
        };
        let full = assemble_system(&plan, &refs(&all)).unwrap();
        let part = assemble_system(&plan, &refs(&subset)).unwrap();
        verify_system(&plan, &full).unwrap();
        prop_assert!(full.a_t.rank() >= part.a_t.rank());
        let out = solve_frame(full, &plan, refs(&all)).unwrap();
        if out.rank == plan.n_tx() {
            prop_assert_eq!(out.recovered_count(), plan.n_tx());
        }
    }
}

#[test]
fn traffic_mean_and_placement() {
    let f = field(1);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let frames = 100_000;
    let mut total = 0;
    for _ in 0..frames {
        let plan = generate_traffic(1.0, 10, 1, RepetitionPolicy::Fixed(2), &f, &mut rng).unwrap();
        total += plan.n_tx();
        for u in &plan.users {
            assert_eq!(u.replicas.len(), 2);
            assert!(u.replicas[0].0 < u.replicas[1].0);
            assert!(u.replicas.iter().all(|&(_, a)| a == FieldElement::ONE));
        }
    }
    let mean = total as f64 / frames as f64;
    assert!((mean - 10.0).abs() < 0.1, "{mean}");
}

#[test]
fn bernoulli_placement_and_coefficients() {
    let f = field(8);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut count = 0;
    let mut slots = 0;
    for _ in 0..2000 {
        let plan = generate_traffic(0.5, 10, 8, RepetitionPolicy::Bernoulli(0.3), &f, &mut rng).unwrap();
        for u in &plan.users {
            count += 1;
            slots += u.replicas.len();
            assert!(u.replicas.windows(2).all(|w| w[0].0 < w[1].0));
            assert!(u.replicas.iter().all(|&(_, a)| !a.is_zero()));
        }
    }
    let p = slots as f64 / (10 * count) as f64;
    assert!((p - 0.3).abs() < 0.01, "{p}");
}

#[test]
fn traffic_errors() {
    let f = field(1);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    assert!(generate_traffic(1.0, 3, 8, RepetitionPolicy::Fixed(4), &f, &mut rng).is_err());
    assert!(generate_traffic(0.0, 3, 8, RepetitionPolicy::Fixed(1), &f, &mut rng).is_err());
    assert!(generate_traffic(1.0, 3, 8, RepetitionPolicy::Bernoulli(1.5), &f, &mut rng).is_err());
}

#[test]
fn metrics_accounting() {
    let spec = qc_peg_code(8, 1).unwrap();
    let f = field(4);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut outcomes = Vec::new();
    for _ in 0..30 {
        let plan = generate_traffic(0.3, 10, spec.k(), RepetitionPolicy::Fixed(2), &f, &mut rng).unwrap();
        let obs =
            transmit_frame(&plan, &spec, 40.0, 1.0, &mut rng, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let filter = SlotFilter { k_max: 7, singletons_only: false };
        let out =
            decode_frame(&plan, &obs, &spec, &[Strategy::SndJd], &DecoderOptions::default(), filter).unwrap();
        outcomes.extend(out);
    }
    let r = compute_metrics(&outcomes, spec.rate()).unwrap();
    assert!(r.plr_defined);
    assert!((r.sum_rate - spec.rate() * r.phi).abs() < 1e-12);
    assert!((r.phi - r.g_realized * (1.0 - r.plr)).abs() < 1e-12);
    // Light load at high SNR: essentially everything comes through.
    assert!(r.plr < 0.02, "{}", r.plr);
    assert!((r.energy_eff - 2.0 / (1.0 - r.plr)).abs() < 1e-9);
}

#[test]
fn metrics_edge_cases() {
    assert!(compute_metrics(&[], 0.5).is_err());
    let f = field(1);
    let plan = FramePlan { slots: 10, field: f.clone(), policy: RepetitionPolicy::Fixed(2), users: vec![] };
    let results: Vec<SlotDecodeResult> = (0..10).map(|_| SlotDecodeResult::empty(Strategy::Jd, 0)).collect();
    let out = solve_frame(assemble_system(&plan, &results).unwrap(), &plan, results).unwrap();
    let r = compute_metrics(&[out], 0.5).unwrap();
    assert_eq!(r.phi, 0.0);
    assert_eq!(r.plr, 0.0);
    assert!(!r.plr_defined);
    assert!(r.energy_eff.is_infinite());
}

#[test]
fn blocked_collisions_count_as_transmitted() {
    let spec = qc_peg_code(8, 1).unwrap();
    let f = field(1);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let plan = generate_traffic(8.0, 1, spec.k(), RepetitionPolicy::Fixed(1), &f, &mut rng).unwrap();
    assert!(plan.n_tx() > 1);
    let obs = transmit_frame(&plan, &spec, 30.0, 1.0, &mut rng, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
    let filter = SlotFilter { k_max: 1, singletons_only: false };
    let out =
        decode_frame(&plan, &obs, &spec, &[Strategy::SndJd], &DecoderOptions::default(), filter).unwrap();
    assert_eq!(out[0].lost, plan.n_tx());
    assert_eq!(out[0].system.equations(), 0);
}

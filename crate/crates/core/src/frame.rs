//! Frame-level machinery: traffic, replica placement, precoding over
//! GF(2^n_bc), assembly of the frame equation system and partial recovery.
//!
//! Each active user sends replicas of one message in several slots of the
//! frame. Before channel coding, the message is regrouped into `n_bc`-bit
//! field symbols (little-endian within a group) and every symbol is
//! multiplied by a per-replica coefficient `alpha`. A decoded XOR of
//! precoded messages in slot `j` is then the field equation
//! `sum_i alpha_ij * u_i = b`, and stacking the equations of all slots gives
//! a linear system whose uniquely determined unknowns are the recovered
//! messages.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::channel::{draw_fading, synthesize_slot, SlotObservation};
use crate::code::{CodeSpec, Message};
use crate::error::{Error, Result};
use crate::gf2m::{gauss_solve_partial, FieldElement, FieldMatrix, FieldSpec};
use crate::phydec::{decode_slot_multi, DecoderOptions, Genie, SlotDecodeResult, Strategy};

/// Where an active user places its replicas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepetitionPolicy {
    /// Exactly `d` distinct slots, uniformly at random.
    Fixed(usize),
    /// Each slot independently with probability `p`, at most one replica
    /// per slot.
    Bernoulli(f64),
}

impl Default for RepetitionPolicy {
    fn default() -> Self {
        RepetitionPolicy::Fixed(2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserPlan {
    pub message: Message,
    /// `(slot, alpha)` per replica, in increasing slot order.
    pub replicas: Vec<(usize, FieldElement)>,
}

impl UserPlan {
    pub fn alpha(&self, slot: usize) -> Option<FieldElement> {
        self.replicas.iter().find(|(s, _)| *s == slot).map(|&(_, a)| a)
    }
}

#[derive(Debug, Clone)]
pub struct FramePlan {
    pub slots: usize,
    pub field: FieldSpec,
    pub policy: RepetitionPolicy,
    pub users: Vec<UserPlan>,
}

impl FramePlan {
    /// Number of active users `N^tx`.
    pub fn n_tx(&self) -> usize {
        self.users.len()
    }

    pub fn replicas_sent(&self) -> usize {
        self.users.iter().map(|u| u.replicas.len()).sum()
    }

    /// Users transmitting in `slot`, in increasing user order. Position `k`
    /// in this list is bit `k` of the slot's combination indicators.
    pub fn slot_users(&self, slot: usize) -> Vec<usize> {
        (0..self.users.len()).filter(|&i| self.users[i].alpha(slot).is_some()).collect()
    }
}

/// Draw one frame of traffic: a Poisson number of users with mean `g *
/// slots`, each with a random `message_len`-bit message, replica slots per
/// `policy` and nonzero coefficients uniform over `field`.
pub fn generate_traffic<R: Rng + ?Sized>(
    g: f64,
    slots: usize,
    message_len: usize,
    policy: RepetitionPolicy,
    field: &FieldSpec,
    rng: &mut R,
) -> Result<FramePlan> {
    if !(g > 0.0) || !g.is_finite() {
        return Err(Error::Traffic(format!("load must be positive, got {g}")));
    }
    if slots == 0 || message_len == 0 {
        return Err(Error::Traffic("frame needs at least one slot and one message bit".into()));
    }
    match policy {
        RepetitionPolicy::Fixed(d) if d == 0 || d > slots => {
            return Err(Error::Traffic(format!("cannot place {d} replicas in {slots} slots")));
        }
        RepetitionPolicy::Bernoulli(p) if !(0.0..=1.0).contains(&p) => {
            return Err(Error::Traffic(format!("replica probability {p} outside [0, 1]")));
        }
        _ => {}
    }
    let mean = g * slots as f64;
    let n: f64 = Poisson::new(mean).map_err(|e| Error::Traffic(e.to_string()))?.sample(rng);
    let nonzero = field.order() - 1;
    let users = (0..n as usize)
        .map(|_| {
            let message = Message::random(message_len, rng);
            let mut chosen: Vec<usize> = match policy {
                RepetitionPolicy::Fixed(d) => sample(rng, slots, d).into_vec(),
                RepetitionPolicy::Bernoulli(p) => (0..slots).filter(|_| rng.random_bool(p)).collect(),
            };
            chosen.sort_unstable();
            let replicas =
                chosen.into_iter().map(|s| (s, FieldElement(rng.random_range(1..=nonzero) as u16))).collect();
            UserPlan { message, replicas }
        })
        .collect();
    Ok(FramePlan { slots, field: field.clone(), policy, users })
}

/// Regroup message bits into field symbols, little-endian within each group.
pub fn message_to_symbols(u: &Message, field: &FieldSpec) -> Result<Vec<FieldElement>> {
    let m = field.degree() as usize;
    if u.len() % m != 0 {
        return Err(Error::DimensionMismatch(format!(
            "message length {} is not a multiple of the symbol width {m}",
            u.len()
        )));
    }
    Ok(u.bits()
        .chunks(m)
        .map(|g| FieldElement(g.iter().enumerate().fold(0u16, |acc, (b, &bit)| acc | (bit as u16) << b)))
        .collect())
}

pub fn symbols_to_message(symbols: &[FieldElement], field: &FieldSpec) -> Message {
    let m = field.degree() as usize;
    let bits = symbols.iter().flat_map(|s| (0..m).map(move |b| ((s.0 >> b) & 1) as u8)).collect();
    Message::new(bits).expect("bits are 0 or 1")
}

/// A message as field symbols, each multiplied by the replica coefficient.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrecodedMessage {
    pub symbols: Vec<FieldElement>,
}

impl PrecodedMessage {
    /// The bits handed to the channel encoder.
    pub fn to_message(&self, field: &FieldSpec) -> Message {
        symbols_to_message(&self.symbols, field)
    }
}

pub fn precode(u: &Message, alpha: FieldElement, field: &FieldSpec) -> Result<PrecodedMessage> {
    if alpha.is_zero() || !field.contains(alpha) {
        return Err(Error::Domain(format!("precoding coefficient {alpha} must be a nonzero field element")));
    }
    let symbols = message_to_symbols(u, field)?.into_iter().map(|s| field.mul(alpha, s)).collect();
    Ok(PrecodedMessage { symbols })
}

/// Undo [`precode`].
pub fn unprecode(p: &PrecodedMessage, alpha: FieldElement, field: &FieldSpec) -> Result<Message> {
    let inv = field.inv(alpha)?;
    let symbols: Vec<FieldElement> = p.symbols.iter().map(|&s| field.mul(inv, s)).collect();
    Ok(symbols_to_message(&symbols, field))
}

/// The frame system `A^T u = b`: one row per decoded combination, one
/// column per active user.
#[derive(Debug, Clone)]
pub struct FrameSystem {
    pub a_t: FieldMatrix,
    pub b: Vec<Vec<FieldElement>>,
    /// `(slot, indicator)` that produced each row.
    pub origins: Vec<(usize, u64)>,
}

impl FrameSystem {
    /// The coefficient matrix `A` (users by equations).
    pub fn a(&self) -> FieldMatrix {
        self.a_t.transpose()
    }

    pub fn equations(&self) -> usize {
        self.a_t.rows()
    }
}

/// Stack every decoded combination of the frame into field equations.
/// Identical `(slot, indicator)` pairs enter once.
pub fn assemble_system(plan: &FramePlan, slot_results: &[SlotDecodeResult]) -> Result<FrameSystem> {
    if slot_results.len() != plan.slots {
        return Err(Error::DimensionMismatch(format!(
            "{} slot results for a frame of {} slots",
            slot_results.len(),
            plan.slots
        )));
    }
    let field = &plan.field;
    let mut a_t = FieldMatrix::zeros(field, 0, plan.n_tx());
    let mut b = Vec::new();
    let mut origins = Vec::new();
    let mut seen = BTreeSet::new();
    for (slot, result) in slot_results.iter().enumerate() {
        let users = plan.slot_users(slot);
        for combo in &result.combinations {
            if !seen.insert((slot, combo.indicator)) {
                continue;
            }
            let mut row = vec![FieldElement::ZERO; plan.n_tx()];
            for k in combo.users() {
                let user = *users.get(k).ok_or(Error::UnknownUser { slot, user: k })?;
                row[user] = plan.users[user].alpha(slot).expect("user is in the slot");
            }
            a_t.push_row(&row)?;
            b.push(message_to_symbols(&combo.payload, field)?);
            origins.push((slot, combo.indicator));
        }
    }
    Ok(FrameSystem { a_t, b, origins })
}

/// Check every row against the true messages.
pub fn verify_system(plan: &FramePlan, system: &FrameSystem) -> Result<()> {
    let field = &plan.field;
    let truth: Vec<Vec<FieldElement>> =
        plan.users.iter().map(|u| message_to_symbols(&u.message, field)).collect::<Result<_>>()?;
    for r in 0..system.equations() {
        let mut acc = vec![FieldElement::ZERO; system.b[r].len()];
        for (i, &a) in system.a_t.row(r).iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (x, &u) in acc.iter_mut().zip(&truth[i]) {
                *x = field.add(*x, field.mul(a, u));
            }
        }
        if acc != system.b[r] {
            let (slot, indicator) = system.origins[r];
            return Err(Error::Inconsistent(format!(
                "row {r} (slot {slot}, indicator {indicator:#b}) does not match the transmitted messages"
            )));
        }
    }
    Ok(())
}

/// Per-frame ledger for one receiver.
#[derive(Debug, Clone)]
pub struct FrameOutcome {
    pub slots: usize,
    pub n_tx: usize,
    pub replicas_sent: usize,
    pub system: FrameSystem,
    pub rank: usize,
    /// Recovered messages by user index.
    pub recovered: BTreeMap<usize, Message>,
    pub lost: usize,
    /// Innovative combinations summed over the frame's slots.
    pub innovative: usize,
    pub slot_results: Vec<SlotDecodeResult>,
}

impl FrameOutcome {
    pub fn recovered_count(&self) -> usize {
        self.recovered.len()
    }

    pub fn counts(&self) -> FrameCounts {
        FrameCounts {
            slots: self.slots,
            transmitted: self.n_tx,
            recovered: self.recovered_count(),
            replicas: self.replicas_sent,
            innovative: self.innovative,
        }
    }
}

/// The counters of one frame that the metrics are computed from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameCounts {
    pub slots: usize,
    pub transmitted: usize,
    pub recovered: usize,
    pub replicas: usize,
    pub innovative: usize,
}

/// Solve the frame system for every uniquely determined user.
pub fn solve_frame(
    system: FrameSystem,
    plan: &FramePlan,
    slot_results: Vec<SlotDecodeResult>,
) -> Result<FrameOutcome> {
    let n_tx = plan.n_tx();
    let (recovered, rank) = if system.equations() == 0 {
        (BTreeMap::new(), 0)
    } else {
        let sol = gauss_solve_partial(&system.a_t, &system.b)?;
        if sol.inconsistent {
            return Err(Error::Inconsistent("frame system has no solution".into()));
        }
        let recovered = sol
            .values
            .into_iter()
            .map(|(i, symbols)| (i, symbols_to_message(&symbols, &plan.field)))
            .collect();
        (recovered, sol.rank)
    };
    let innovative = slot_results.iter().map(|r| r.innovative_count).sum();
    Ok(FrameOutcome {
        slots: plan.slots,
        n_tx,
        replicas_sent: plan.replicas_sent(),
        lost: n_tx - recovered.len(),
        rank,
        recovered,
        system,
        innovative,
        slot_results,
    })
}

/// Build the received slots of a frame. Fading is drawn from `fading_rng`
/// and noise from `noise_rng`, slot by slot.
pub fn transmit_frame<R1: Rng + ?Sized, R2: Rng + ?Sized>(
    plan: &FramePlan,
    spec: &CodeSpec,
    snr_db: f64,
    noise_variance: f64,
    fading_rng: &mut R1,
    noise_rng: &mut R2,
) -> Result<Vec<SlotObservation>> {
    (0..plan.slots)
        .map(|slot| {
            let users = plan.slot_users(slot);
            let messages = users
                .iter()
                .map(|&i| {
                    let u = &plan.users[i];
                    Ok(precode(&u.message, u.alpha(slot).expect("in slot"), &plan.field)?
                        .to_message(&plan.field))
                })
                .collect::<Result<Vec<_>>>()?;
            let realization = draw_fading(users.len(), snr_db, noise_variance, fading_rng);
            synthesize_slot(spec, messages, realization, noise_variance, noise_rng)
        })
        .collect()
}

/// Which slots a receiver attempts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotFilter {
    /// Collisions larger than this are discarded.
    pub k_max: usize,
    /// Only collision-free slots are decoded (slotted ALOHA).
    pub singletons_only: bool,
}

/// Decode every slot of a frame with each strategy and solve the resulting
/// systems. One outcome per strategy, in the order given.
pub fn decode_frame(
    plan: &FramePlan,
    observations: &[SlotObservation],
    spec: &CodeSpec,
    strategies: &[Strategy],
    opts: &DecoderOptions,
    filter: SlotFilter,
) -> Result<Vec<FrameOutcome>> {
    let mut per_strategy: Vec<Vec<SlotDecodeResult>> = vec![Vec::with_capacity(plan.slots); strategies.len()];
    for obs in observations {
        let k = obs.users();
        let skip = k == 0 || k > filter.k_max || (filter.singletons_only && k != 1);
        let results = if skip {
            strategies.iter().map(|&s| SlotDecodeResult::empty(s, k)).collect()
        } else {
            decode_slot_multi(obs, spec, strategies, opts, &Genie::new(&obs.truth))
        };
        for (acc, r) in per_strategy.iter_mut().zip(results) {
            acc.push(r);
        }
    }
    per_strategy
        .into_iter()
        .map(|results| {
            let system = assemble_system(plan, &results)?;
            verify_system(plan, &system)?;
            let outcome = solve_frame(system, plan, results)?;
            for (i, m) in &outcome.recovered {
                if *m != plan.users[*i].message {
                    return Err(Error::Inconsistent(format!("user {i} recovered incorrectly")));
                }
            }
            Ok(outcome)
        })
        .collect()
}

/// Aggregate metrics over many frames of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub frames: usize,
    pub slots: usize,
    pub transmitted: usize,
    pub recovered: usize,
    pub replicas: usize,
    /// Realized load: transmitted packets per slot.
    pub g_realized: f64,
    /// Recovered packets per slot.
    pub phi: f64,
    pub sum_rate: f64,
    /// Lost over transmitted; 0 when nothing was transmitted.
    pub plr: f64,
    pub plr_defined: bool,
    /// Replicas sent per recovered packet; infinite when nothing was recovered.
    pub energy_eff: f64,
    /// Innovative combinations per slot.
    pub innov_mean: f64,
    /// 95% half-widths over frames.
    pub ci_phi: f64,
    pub ci_sum_rate: f64,
    pub ci_plr: f64,
    pub ci_innov: f64,
}

/// Normal-approximation 95% half-width of the mean of `xs`.
pub fn mean_half_width(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    1.96 * (var / n as f64).sqrt()
}

pub fn compute_metrics(outcomes: &[FrameOutcome], rate: f64) -> Result<MetricsReport> {
    let counts: Vec<FrameCounts> = outcomes.iter().map(FrameOutcome::counts).collect();
    metrics_from_counts(&counts, rate)
}

pub fn metrics_from_counts(frames: &[FrameCounts], rate: f64) -> Result<MetricsReport> {
    if frames.is_empty() {
        return Err(Error::Domain("no frames to summarize".into()));
    }
    let total = |f: fn(&FrameCounts) -> usize| -> usize { frames.iter().map(f).sum() };
    let slots = total(|c| c.slots);
    let transmitted = total(|c| c.transmitted);
    let recovered = total(|c| c.recovered);
    let replicas = total(|c| c.replicas);
    let innovative = total(|c| c.innovative);
    let lost = transmitted - recovered;

    let phi = recovered as f64 / slots as f64;
    let plr_defined = transmitted > 0;
    let plr = if plr_defined { lost as f64 / transmitted as f64 } else { 0.0 };
    let energy_eff = if recovered > 0 { replicas as f64 / recovered as f64 } else { f64::INFINITY };

    let per_frame = |f: &dyn Fn(&FrameCounts) -> f64| -> Vec<f64> { frames.iter().map(f).collect() };
    let ci_phi = mean_half_width(&per_frame(&|c| c.recovered as f64 / c.slots as f64));
    let ci_innov = mean_half_width(&per_frame(&|c| c.innovative as f64 / c.slots as f64));
    // Ratio estimator: linearize lost_f - plr * n_f around the pooled ratio.
    let ci_plr = if plr_defined {
        let resid = per_frame(&|c| (c.transmitted - c.recovered) as f64 - plr * c.transmitted as f64);
        mean_half_width(&resid) / (transmitted as f64 / frames.len() as f64)
    } else {
        0.0
    };

    Ok(MetricsReport {
        frames: frames.len(),
        slots,
        transmitted,
        recovered,
        replicas,
        g_realized: transmitted as f64 / slots as f64,
        phi,
        sum_rate: rate * phi,
        plr,
        plr_defined,
        energy_eff,
        innov_mean: innovative as f64 / slots as f64,
        ci_phi,
        ci_sum_rate: rate * ci_phi,
        ci_plr,
        ci_innov,
    })
}

#[cfg(test)]
mod tests;

//! Slot-level receivers.
//!
//! Five strategies turn one [`SlotObservation`] into a set of decoded
//! combinations, each an indicator over the colliding users plus the XOR of
//! their messages:
//!
//! | strategy | detection | decoding | combinations |
//! |---|---|---|---|
//! | `Separate` | marginal L-values | binary BP per user | singletons |
//! | `Sic` | marginal L-values | binary BP, cancel successes | singletons |
//! | `SndSic` | as `Sic`, then XOR L-values | binary BP per subset | any subset |
//! | `Jd` | vector-symbol probabilities | joint BP | singletons |
//! | `SndJd` | as `Jd` | joint BP, XOR estimates | any subset |
//!
//! Decoded payloads are accepted only if an [`ErrorDetector`] confirms them.
//! The shipped detector is [`Genie`], which compares against the slot's
//! ground truth.

mod llr;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use llr::{jacln, jacln2, llr_combination, llr_parity, llr_separate, MetricTable};

use crate::channel::{bpsk_map, SlotObservation, SlotTruth};
use crate::code::{decode_joint, decode_soft_detailed, CodeSpec, Message, VectorSymbolDistribution};
use crate::error::{Error, Result};
use crate::gf2m::{Gf2Matrix, Gf2Span};

/// Receiver-side noise variance used when the channel is noiseless, so the
/// metric stays finite.
const MIN_METRIC_VARIANCE: f64 = 1e-3;

/// The slot-level decoding strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "separate")]
    Separate,
    #[serde(rename = "sic")]
    Sic,
    #[serde(rename = "snd-sic")]
    SndSic,
    #[serde(rename = "jd")]
    Jd,
    #[serde(rename = "snd-jd")]
    SndJd,
}

impl Strategy {
    pub const ALL: [Strategy; 5] =
        [Strategy::Separate, Strategy::Sic, Strategy::SndSic, Strategy::Jd, Strategy::SndJd];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Separate => "separate",
            Strategy::Sic => "sic",
            Strategy::SndSic => "snd-sic",
            Strategy::Jd => "jd",
            Strategy::SndJd => "snd-jd",
        }
    }

    /// Whether the strategy exploits XOR combinations (and so precoding).
    pub fn uses_combinations(self) -> bool {
        matches!(self, Strategy::SndSic | Strategy::SndJd)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown strategy {s:?}")))
    }
}

/// Receiver options shared by all strategies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecoderOptions {
    pub max_iters: usize,
    /// Constrained retry pass of `SndSic` after combinations are decoded.
    pub refinement: bool,
    /// Maximum number of refinement rounds.
    pub refine_rounds: usize,
}

impl Default for DecoderOptions {
    fn default() -> Self {
        DecoderOptions { max_iters: crate::code::DEFAULT_MAX_ITERS, refinement: true, refine_rounds: 1 }
    }
}

/// One accepted equation: the XOR of the indicated users' messages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodedCombination {
    /// Bit `k` set when slot-local user `k` participates.
    pub indicator: u64,
    pub payload: Message,
}

impl DecodedCombination {
    pub fn users(&self) -> impl Iterator<Item = usize> + '_ {
        (0..64).filter(move |k| (self.indicator >> k) & 1 == 1)
    }

    pub fn is_singleton(&self) -> bool {
        self.indicator.count_ones() == 1
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WorkCounters {
    /// Belief-propagation runs (binary or joint).
    pub decode_attempts: usize,
    /// Total BP iterations over all runs.
    pub bp_iterations: usize,
    /// Combination attempts made with XOR L-values (`SndSic` only).
    pub combination_attempts: usize,
    /// Subsets skipped because decoded rows already implied them.
    pub skipped_dependent: usize,
}

impl std::ops::AddAssign for WorkCounters {
    fn add_assign(&mut self, o: Self) {
        self.decode_attempts += o.decode_attempts;
        self.bp_iterations += o.bp_iterations;
        self.combination_attempts += o.combination_attempts;
        self.skipped_dependent += o.skipped_dependent;
    }
}

#[derive(Debug, Clone)]
pub struct SlotDecodeResult {
    pub strategy: Strategy,
    pub users: usize,
    pub combinations: Vec<DecodedCombination>,
    /// Stacked indicators over GF(2), one row per combination.
    pub a_slot: Gf2Matrix,
    pub innovative_count: usize,
    pub work: WorkCounters,
}

impl SlotDecodeResult {
    pub fn new(
        strategy: Strategy,
        users: usize,
        combinations: Vec<DecodedCombination>,
        work: WorkCounters,
    ) -> Self {
        let mut a_slot = Gf2Matrix::new(users.max(1));
        if users > 0 {
            for c in &combinations {
                a_slot.push_mask(c.indicator);
            }
        }
        let innovative_count = a_slot.rank();
        SlotDecodeResult { strategy, users, combinations, a_slot, innovative_count, work }
    }

    /// An empty result for a slot that was not decoded.
    pub fn empty(strategy: Strategy, users: usize) -> Self {
        Self::new(strategy, users, Vec::new(), WorkCounters::default())
    }
}

/// Rank of the stacked indicators over GF(2).
pub fn innovative_count(result: &SlotDecodeResult) -> usize {
    result.a_slot.rank()
}

/// Hook for validating a decoded payload before it is accepted.
pub trait ErrorDetector {
    fn accept(&self, indicator: u64, payload: &Message) -> bool;
}

/// Ideal error detection by comparison with the transmitted messages.
pub struct Genie<'a> {
    truth: &'a SlotTruth,
}

impl<'a> Genie<'a> {
    pub fn new(truth: &'a SlotTruth) -> Self {
        Genie { truth }
    }
}

impl ErrorDetector for Genie<'_> {
    fn accept(&self, indicator: u64, payload: &Message) -> bool {
        self.truth.combination(indicator).as_ref() == Some(payload)
    }
}

/// Sample/gain scale that turns `-(y - h^T x)^2` into the Gaussian
/// log-likelihood.
fn metric_scale(noise_variance: f64) -> f64 {
    1.0 / (2.0 * noise_variance.max(MIN_METRIC_VARIANCE)).sqrt()
}

/// Working state shared by the binary-decoder strategies.
struct Receiver<'a> {
    slot: &'a SlotObservation,
    spec: &'a CodeSpec,
    opts: &'a DecoderOptions,
    detector: &'a dyn ErrorDetector,
    scale: f64,
    work: WorkCounters,
}

impl<'a> Receiver<'a> {
    fn new(
        slot: &'a SlotObservation,
        spec: &'a CodeSpec,
        opts: &'a DecoderOptions,
        detector: &'a dyn ErrorDetector,
    ) -> Self {
        Receiver {
            slot,
            spec,
            opts,
            detector,
            scale: metric_scale(slot.noise_variance),
            work: WorkCounters::default(),
        }
    }

    fn table(&self, samples: &[f64], users: &[usize]) -> MetricTable {
        let y: Vec<f64> = samples.iter().map(|v| v * self.scale).collect();
        let h: Vec<f64> = users.iter().map(|&u| self.slot.realization.gains[u] * self.scale).collect();
        MetricTable::new(&y, &h)
    }

    /// Run binary BP on `llrs` and validate against `indicator`.
    fn attempt(&mut self, llrs: &[f64], indicator: u64) -> Option<Message> {
        let out = decode_soft_detailed(llrs, self.spec, self.opts.max_iters);
        self.work.decode_attempts += 1;
        self.work.bp_iterations += out.iterations;
        if !out.converged {
            return None;
        }
        let msg = self.spec.extract_message(&out.hard);
        self.detector.accept(indicator, &msg).then_some(msg)
    }

    fn by_descending_gain(&self) -> Vec<usize> {
        let gains = &self.slot.realization.gains;
        let mut order: Vec<usize> = (0..gains.len()).collect();
        order.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]).then(a.cmp(&b)));
        order
    }

    fn separate(&mut self) -> Vec<DecodedCombination> {
        let order = self.by_descending_gain();
        let all: Vec<usize> = (0..order.len()).collect();
        let table = self.table(&self.slot.samples, &all);
        let mut out = Vec::new();
        for u in order {
            let llrs = table.parity_llrs(1 << u);
            if let Some(payload) = self.attempt(&llrs, 1 << u) {
                out.push(DecodedCombination { indicator: 1 << u, payload });
            }
        }
        out
    }

    /// Successive interference cancellation. Returns the decoded singletons,
    /// the residual samples and the undecoded users in descending gain order.
    fn sic(&mut self) -> (Vec<DecodedCombination>, Vec<f64>, Vec<usize>) {
        let mut remaining = self.by_descending_gain();
        let mut residual = self.slot.samples.clone();
        let mut out = Vec::new();
        'outer: while !remaining.is_empty() {
            let table = self.table(&residual, &remaining);
            for local in 0..remaining.len() {
                let u = remaining[local];
                let llrs = table.parity_llrs(1 << local);
                if let Some(payload) = self.attempt(&llrs, 1 << u) {
                    let cw = self.spec.encode_bits(payload.bits());
                    let h = self.slot.realization.gains[u];
                    for (y, &b) in residual.iter_mut().zip(&cw) {
                        *y -= h * bpsk_map(b);
                    }
                    out.push(DecodedCombination { indicator: 1 << u, payload });
                    remaining.remove(local);
                    continue 'outer;
                }
            }
            break;
        }
        (out, residual, remaining)
    }

    /// Combination stage after SIC, on the residual users.
    fn seek(&mut self, residual: &[f64], remaining: &[usize]) -> Vec<DecodedCombination> {
        let k1 = remaining.len();
        if k1 < 2 {
            return Vec::new();
        }
        let gains = &self.slot.realization.gains;
        let table = self.table(residual, remaining);
        let to_slot = |local: u64| -> u64 {
            (0..k1).filter(|&i| (local >> i) & 1 == 1).fold(0, |acc, i| acc | 1 << remaining[i])
        };
        let ordered = |min_size: u32| -> Vec<u64> {
            let mut subsets: Vec<u64> = (1..1u64 << k1).filter(|s| s.count_ones() >= min_size).collect();
            let weight =
                |s: u64| -> f64 { (0..k1).filter(|&i| (s >> i) & 1 == 1).map(|i| gains[remaining[i]]).sum() };
            subsets.sort_by(|&a, &b| {
                a.count_ones().cmp(&b.count_ones()).then(weight(b).total_cmp(&weight(a))).then(a.cmp(&b))
            });
            subsets
        };

        let mut span = Gf2Span::new();
        let mut constraints: Vec<(u64, Vec<u8>)> = Vec::new();
        let mut out = Vec::new();
        for subset in ordered(2) {
            if span.contains(subset) {
                self.work.skipped_dependent += 1;
                continue;
            }
            let llrs = table.parity_llrs(subset);
            self.work.combination_attempts += 1;
            let indicator = to_slot(subset);
            if let Some(payload) = self.attempt(&llrs, indicator) {
                span.insert(subset);
                constraints.push((subset, self.spec.encode_bits(payload.bits())));
                out.push(DecodedCombination { indicator, payload });
            }
        }

        if self.opts.refinement && !constraints.is_empty() {
            for _ in 0..self.opts.refine_rounds {
                let mut progress = false;
                for subset in ordered(1) {
                    if span.rank() == k1 {
                        break;
                    }
                    if span.contains(subset) {
                        self.work.skipped_dependent += 1;
                        continue;
                    }
                    let llrs = table.constrained_parity_llrs(subset, &constraints);
                    let indicator = to_slot(subset);
                    if let Some(payload) = self.attempt(&llrs, indicator) {
                        span.insert(subset);
                        constraints.push((subset, self.spec.encode_bits(payload.bits())));
                        out.push(DecodedCombination { indicator, payload });
                        progress = true;
                    }
                }
                if !progress || span.rank() == k1 {
                    break;
                }
            }
        }
        out
    }
}

/// Joint decoding of all colliding users, shared by `Jd` and `SndJd`.
fn joint_estimates(
    slot: &SlotObservation,
    spec: &CodeSpec,
    opts: &DecoderOptions,
) -> (Vec<Message>, WorkCounters) {
    let users = slot.users();
    let scale = metric_scale(slot.noise_variance);
    let y: Vec<f64> = slot.samples.iter().map(|v| v * scale).collect();
    let h: Vec<f64> = slot.realization.gains.iter().map(|g| g * scale).collect();
    let table = MetricTable::new(&y, &h);
    let dist = VectorSymbolDistribution::new(users, spec.n(), table.probabilities())
        .expect("table rows match the code length");
    let out = decode_joint(&dist, spec, opts.max_iters);
    let work = WorkCounters { decode_attempts: 1, bp_iterations: out.iterations, ..Default::default() };
    (out.messages, work)
}

fn accept_subsets(
    estimates: &[Message],
    detector: &dyn ErrorDetector,
    singletons_only: bool,
) -> Vec<DecodedCombination> {
    let k = estimates.len();
    let mut subsets: Vec<u64> =
        if singletons_only { (0..k).map(|i| 1u64 << i).collect() } else { (1..1u64 << k).collect() };
    subsets.sort_by_key(|s| (s.count_ones(), *s));
    subsets
        .into_iter()
        .filter_map(|s| {
            let payload =
                crate::code::xor_messages((0..k).filter(|i| (s >> i) & 1 == 1).map(|i| &estimates[i]))
                    .expect("equal lengths");
            detector.accept(s, &payload).then_some(DecodedCombination { indicator: s, payload })
        })
        .collect()
}

/// Decode one slot with several strategies, sharing work where one strategy
/// extends another (`SndSic` extends `Sic`, `SndJd` reuses `Jd`'s joint
/// decode). Results are returned in the order requested.
pub fn decode_slot_multi(
    slot: &SlotObservation,
    spec: &CodeSpec,
    strategies: &[Strategy],
    opts: &DecoderOptions,
    detector: &dyn ErrorDetector,
) -> Vec<SlotDecodeResult> {
    let users = slot.users();
    if users == 0 {
        return strategies.iter().map(|&s| SlotDecodeResult::empty(s, 0)).collect();
    }
    assert!(users < 64, "collision too large");
    let wants = |s: Strategy| strategies.contains(&s);

    let mut separate = None;
    if wants(Strategy::Separate) {
        let mut rx = Receiver::new(slot, spec, opts, detector);
        let combos = rx.separate();
        separate = Some(SlotDecodeResult::new(Strategy::Separate, users, combos, rx.work));
    }

    let (mut sic, mut snd_sic) = (None, None);
    if wants(Strategy::Sic) || wants(Strategy::SndSic) {
        let mut rx = Receiver::new(slot, spec, opts, detector);
        let (singles, residual, remaining) = rx.sic();
        let sic_work = rx.work;
        sic = Some(SlotDecodeResult::new(Strategy::Sic, users, singles.clone(), sic_work));
        if wants(Strategy::SndSic) {
            let mut combos = singles;
            combos.extend(rx.seek(&residual, &remaining));
            snd_sic = Some(SlotDecodeResult::new(Strategy::SndSic, users, combos, rx.work));
        }
    }

    let (mut jd, mut snd_jd) = (None, None);
    if wants(Strategy::Jd) || wants(Strategy::SndJd) {
        let (estimates, work) = joint_estimates(slot, spec, opts);
        if wants(Strategy::Jd) {
            jd = Some(SlotDecodeResult::new(
                Strategy::Jd,
                users,
                accept_subsets(&estimates, detector, true),
                work,
            ));
        }
        if wants(Strategy::SndJd) {
            snd_jd = Some(SlotDecodeResult::new(
                Strategy::SndJd,
                users,
                accept_subsets(&estimates, detector, false),
                work,
            ));
        }
    }

    strategies
        .iter()
        .map(|s| {
            match s {
                Strategy::Separate => separate.clone(),
                Strategy::Sic => sic.clone(),
                Strategy::SndSic => snd_sic.clone(),
                Strategy::Jd => jd.clone(),
                Strategy::SndJd => snd_jd.clone(),
            }
            .expect("computed above")
        })
        .collect()
}

/// Decode one slot with one strategy and genie error detection.
pub fn decode_slot(
    slot: &SlotObservation,
    spec: &CodeSpec,
    strategy: Strategy,
    opts: &DecoderOptions,
) -> SlotDecodeResult {
    let genie = Genie::new(&slot.truth);
    decode_slot_multi(slot, spec, &[strategy], opts, &genie).remove(0)
}

pub fn decode_separate(slot: &SlotObservation, spec: &CodeSpec, opts: &DecoderOptions) -> SlotDecodeResult {
    decode_slot(slot, spec, Strategy::Separate, opts)
}

pub fn decode_sic(slot: &SlotObservation, spec: &CodeSpec, opts: &DecoderOptions) -> SlotDecodeResult {
    decode_slot(slot, spec, Strategy::Sic, opts)
}

pub fn decode_snd_sic(slot: &SlotObservation, spec: &CodeSpec, opts: &DecoderOptions) -> SlotDecodeResult {
    decode_slot(slot, spec, Strategy::SndSic, opts)
}

pub fn decode_jd(slot: &SlotObservation, spec: &CodeSpec, opts: &DecoderOptions) -> SlotDecodeResult {
    decode_slot(slot, spec, Strategy::Jd, opts)
}

pub fn decode_snd_jd(slot: &SlotObservation, spec: &CodeSpec, opts: &DecoderOptions) -> SlotDecodeResult {
    decode_slot(slot, spec, Strategy::SndJd, opts)
}

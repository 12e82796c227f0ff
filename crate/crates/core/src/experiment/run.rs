//! Seeded Monte Carlo sweeps.
//!
//! Every trial draws from its own random streams, keyed by the master seed,
//! the grid point's values and the trial index (see [`crate::rng`]). Trials
//! are collected in index order and reduced sequentially, so results do not
//! depend on the number of worker threads.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, Scheme};
use crate::bound::{estimate_ptilde, evaluate_bound, BoundConfig, BoundPoint, DecodeProbabilityTable};
use crate::channel::{draw_fading, synthesize_slot};
use crate::code::{CodeSpec, Message};
use crate::error::{Error, Result};
use crate::frame::{
    decode_frame, generate_traffic, mean_half_width, metrics_from_counts, transmit_frame, FrameCounts,
    MetricsReport, RepetitionPolicy, SlotFilter,
};
use crate::gf2m::FieldSpec;
use crate::phydec::{decode_slot_multi, Genie, Strategy};
use crate::rng::{cell_id, trial_rng, Purpose};

/// Run `f` on a pool of `workers` threads (0 picks the rayon default).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

fn receivers(cfg: &ExperimentConfig) -> Vec<Strategy> {
    cfg.strategies
        .iter()
        .filter_map(|s| match s {
            Scheme::Receiver(r) => Some(*r),
            Scheme::Aloha => None,
        })
        .collect()
}

/// One frame-level result: a scheme at one `(snr, G)` point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub scheme: Scheme,
    pub snr_db: f64,
    pub g: f64,
    pub metrics: MetricsReport,
    pub trials: u64,
    pub seed: u64,
}

/// Counters of every scheme for one trial, in configuration order.
fn frame_trial(
    cfg: &ExperimentConfig,
    spec: &CodeSpec,
    field: &FieldSpec,
    snr_db: f64,
    g: f64,
    cell: u64,
    trial: u64,
) -> Result<Vec<FrameCounts>> {
    let opts = cfg.decoder_options();
    let rx = receivers(cfg);
    let mut by_receiver = Vec::new();
    if !rx.is_empty() {
        let mut rng = trial_rng(cfg.seed, cell, trial, Purpose::Traffic);
        let mut noise = trial_rng(cfg.seed, cell, trial, Purpose::Noise);
        let plan = generate_traffic(g, cfg.slots, spec.k(), cfg.policy(), field, &mut rng)?;
        let obs = transmit_frame(&plan, spec, snr_db, cfg.noise_variance, &mut rng, &mut noise)?;
        let filter = SlotFilter { k_max: cfg.k_max, singletons_only: false };
        by_receiver =
            decode_frame(&plan, &obs, spec, &rx, &opts, filter)?.iter().map(|o| o.counts()).collect();
    }
    let mut aloha = None;
    if cfg.strategies.contains(&Scheme::Aloha) {
        let mut rng = trial_rng(cfg.seed, cell, trial, Purpose::Baseline);
        let mut noise = trial_rng(cfg.seed, cell, trial, Purpose::BaselineNoise);
        let plan = generate_traffic(g, cfg.slots, spec.k(), RepetitionPolicy::Fixed(1), field, &mut rng)?;
        let obs = transmit_frame(&plan, spec, snr_db, cfg.noise_variance, &mut rng, &mut noise)?;
        let filter = SlotFilter { k_max: 1, singletons_only: true };
        aloha = Some(decode_frame(&plan, &obs, spec, &[Strategy::Separate], &opts, filter)?[0].counts());
    }
    let mut rx_iter = by_receiver.into_iter();
    Ok(cfg
        .strategies
        .iter()
        .map(|s| match s {
            Scheme::Receiver(_) => rx_iter.next().expect("one outcome per receiver"),
            Scheme::Aloha => aloha.expect("baseline simulated"),
        })
        .collect())
}

/// Frame-level sweep over every `(snr, G)` point and scheme.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let spec = cfg.load_code()?;
    let field = FieldSpec::new(cfg.n_bc)?;
    let mut rows = Vec::new();
    for &snr_db in &cfg.snr_db {
        for &g in &cfg.g {
            let cell = cell_id(&[0xf4a3e, snr_db.to_bits(), g.to_bits()]);
            let trials: Vec<Vec<FrameCounts>> = (0..cfg.trials)
                .into_par_iter()
                .map(|t| frame_trial(cfg, &spec, &field, snr_db, g, cell, t))
                .collect::<Result<_>>()?;
            for (i, &scheme) in cfg.strategies.iter().enumerate() {
                let counts: Vec<FrameCounts> = trials.iter().map(|t| t[i]).collect();
                let metrics = metrics_from_counts(&counts, spec.rate())?;
                rows.push(ResultRow { scheme, snr_db, g, metrics, trials: cfg.trials, seed: cfg.seed });
            }
        }
    }
    Ok(rows)
}

/// Innovative packets of one strategy at one `(K, snr)` point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotStudyRow {
    pub strategy: Strategy,
    pub k: usize,
    pub snr_db: f64,
    pub innov_mean: f64,
    pub ci_innov: f64,
    /// Mean belief-propagation runs per slot.
    pub decode_attempts: f64,
    /// Mean XOR-combination attempts per slot.
    pub combination_attempts: f64,
    pub trials: u64,
    pub seed: u64,
}

/// Slot-level study: for each collision size and SNR, the mean rank of the
/// decoded combinations of every strategy, all strategies seeing the same
/// slots.
pub fn run_slot_study(cfg: &ExperimentConfig) -> Result<Vec<SlotStudyRow>> {
    cfg.validate()?;
    let spec = cfg.load_code()?;
    let rx = receivers(cfg);
    if rx.is_empty() {
        return Err(Error::Config("slot study needs at least one slot receiver".into()));
    }
    let opts = cfg.decoder_options();
    let mut rows = Vec::new();
    for &k in &cfg.slot_k {
        for &snr_db in &cfg.snr_db {
            let cell = cell_id(&[0x5107, k as u64, snr_db.to_bits()]);
            let per_trial: Vec<Vec<(usize, usize, usize)>> = (0..cfg.trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = trial_rng(cfg.seed, cell, t, Purpose::Traffic);
                    let mut noise = trial_rng(cfg.seed, cell, t, Purpose::Noise);
                    let real = draw_fading(k, snr_db, cfg.noise_variance, &mut rng);
                    let msgs = (0..k).map(|_| Message::random(spec.k(), &mut rng)).collect();
                    let slot = synthesize_slot(&spec, msgs, real, cfg.noise_variance, &mut noise)?;
                    Ok(decode_slot_multi(&slot, &spec, &rx, &opts, &Genie::new(&slot.truth))
                        .into_iter()
                        .map(|r| (r.innovative_count, r.work.decode_attempts, r.work.combination_attempts))
                        .collect())
                })
                .collect::<Result<_>>()?;
            let n = cfg.trials as f64;
            for (i, &strategy) in rx.iter().enumerate() {
                let innov: Vec<f64> = per_trial.iter().map(|t| t[i].0 as f64).collect();
                rows.push(SlotStudyRow {
                    strategy,
                    k,
                    snr_db,
                    innov_mean: innov.iter().sum::<f64>() / n,
                    ci_innov: mean_half_width(&innov),
                    decode_attempts: per_trial.iter().map(|t| t[i].1 as f64).sum::<f64>() / n,
                    combination_attempts: per_trial.iter().map(|t| t[i].2 as f64).sum::<f64>() / n,
                    trials: cfg.trials,
                    seed: cfg.seed,
                });
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub snr_db: f64,
    pub point: BoundPoint,
    pub n_bc: u32,
    pub p: f64,
    pub slots: usize,
}

/// The bound at every `(snr, G)` point, with the estimated tables.
#[derive(Debug, Clone)]
pub struct BoundStudy {
    pub rows: Vec<BoundRow>,
    pub tables: Vec<DecodeProbabilityTable>,
    /// Cache files read or written, one per SNR.
    pub cache_files: Vec<Option<PathBuf>>,
}

fn cache_path(cfg: &ExperimentConfig, spec: &CodeSpec, snr_db: f64) -> Option<PathBuf> {
    cfg.bound_cache.as_ref().map(|dir| {
        dir.join(format!(
            "ptilde_{}_snr{}_k{}_n{}_it{}_s{}.txt",
            spec.fingerprint(),
            snr_db,
            cfg.k_max,
            cfg.ptilde_trials,
            cfg.max_iters,
            cfg.seed
        ))
    })
}

/// Estimate (or load) the decoding-probability table for one SNR.
pub fn ptilde_table(
    cfg: &ExperimentConfig,
    spec: &CodeSpec,
    snr_db: f64,
) -> Result<(DecodeProbabilityTable, Option<PathBuf>)> {
    let path = cache_path(cfg, spec, snr_db);
    if let Some(p) = path.as_ref().filter(|p| p.exists()) {
        let table = DecodeProbabilityTable::from_text(&std::fs::read_to_string(p)?)?;
        return Ok((table, path));
    }
    let table = estimate_ptilde(cfg.k_max, snr_db, spec, cfg.ptilde_trials, cfg.max_iters, cfg.seed)?;
    if let Some(p) = &path {
        if let Some(dir) = p.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(p, table.to_text())?;
    }
    Ok((table, path))
}

pub fn run_bound(cfg: &ExperimentConfig) -> Result<BoundStudy> {
    cfg.validate()?;
    let spec = cfg.load_code()?;
    let mut study = BoundStudy { rows: Vec::new(), tables: Vec::new(), cache_files: Vec::new() };
    for &snr_db in &cfg.snr_db {
        let (table, path) = ptilde_table(cfg, &spec, snr_db)?;
        let mut bc = BoundConfig::new(cfg.g.clone(), cfg.slots, cfg.n_bc);
        bc.p = cfg.bernoulli_p();
        for point in evaluate_bound(&bc, &table)? {
            study.rows.push(BoundRow { snr_db, point, n_bc: cfg.n_bc, p: bc.p, slots: cfg.slots });
        }
        study.tables.push(table);
        study.cache_files.push(path);
    }
    Ok(study)
}

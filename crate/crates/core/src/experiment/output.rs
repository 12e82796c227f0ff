//! CSV tables and JSON metadata sidecars.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::json;

use super::config::ExperimentConfig;
use super::run::{BoundStudy, ResultRow, SlotStudyRow};
use crate::code::CodeSpec;
use crate::error::Result;

pub const RESULT_HEADER: &str = "strategy,snr_db,G,g_realized,phi,sum_rate,plr,plr_defined,energy_eff,\
innov_mean,ci_phi,ci_sum_rate,ci_plr,ci_innov,trials,seed";

pub const SLOT_HEADER: &str =
    "strategy,K,snr_db,innov_mean,ci_innov,decode_attempts,combination_attempts,trials,seed";

pub const BOUND_HEADER: &str = "snr_db,G,phi_ub,phi_ub_alt,phi_ub_field,p_full_rank,p_enough,n_bc,p,S";

pub fn results_csv(rows: &[ResultRow]) -> String {
    let mut s = format!("{RESULT_HEADER}\n");
    for r in rows {
        let m = &r.metrics;
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.scheme,
            r.snr_db,
            r.g,
            m.g_realized,
            m.phi,
            m.sum_rate,
            m.plr,
            m.plr_defined,
            m.energy_eff,
            m.innov_mean,
            m.ci_phi,
            m.ci_sum_rate,
            m.ci_plr,
            m.ci_innov,
            r.trials,
            r.seed
        )
        .unwrap();
    }
    s
}

pub fn slot_study_csv(rows: &[SlotStudyRow]) -> String {
    let mut s = format!("{SLOT_HEADER}\n");
    for r in rows {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.strategy,
            r.k,
            r.snr_db,
            r.innov_mean,
            r.ci_innov,
            r.decode_attempts,
            r.combination_attempts,
            r.trials,
            r.seed
        )
        .unwrap();
    }
    s
}

pub fn bound_csv(study: &BoundStudy) -> String {
    let mut s = format!("{BOUND_HEADER}\n");
    for r in &study.rows {
        let b = &r.point;
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            r.snr_db,
            b.g,
            b.phi_ub,
            b.phi_ub_alt,
            b.phi_ub_field,
            b.p_full_rank,
            b.p_enough,
            r.n_bc,
            r.p,
            r.slots
        )
        .unwrap();
    }
    s
}

/// Metadata written next to a CSV: the configuration, the code and the
/// column list.
pub fn sidecar(
    verb: &str,
    cfg: &ExperimentConfig,
    spec: &CodeSpec,
    header: &str,
    extra: serde_json::Value,
) -> serde_json::Value {
    json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "verb": verb,
        "columns": header.split(',').collect::<Vec<_>>(),
        "config": cfg,
        "code": { "n": spec.n(), "k": spec.k(), "rate": spec.rate(), "fingerprint": spec.fingerprint() },
        "extra": extra,
    })
}

pub fn bound_extra(study: &BoundStudy) -> serde_json::Value {
    json!({
        "gaussian_approximation": "frame-level combination count approximated as Gaussian; accuracy for small S is not quantified",
        "ptilde": study.tables.iter().zip(&study.cache_files).map(|(t, f)| json!({
            "snr_db": t.snr_db,
            "ptilde": (1..=t.k_max()).map(|k| t.ptilde(k)).collect::<Vec<_>>(),
            "half_width": (1..=t.k_max()).map(|k| t.ptilde_half_width(k)).collect::<Vec<_>>(),
            "cache": f,
        })).collect::<Vec<_>>(),
    })
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

/// Write the CSV and its sidecar.
pub fn write_outputs(csv_path: &Path, csv: &str, meta: &serde_json::Value) -> Result<PathBuf> {
    if let Some(dir) = csv_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(csv_path, csv)?;
    let side = sidecar_path(csv_path);
    let mut text = serde_json::to_string_pretty(meta).expect("metadata serializes");
    text.push('\n');
    std::fs::write(&side, text)?;
    Ok(side)
}

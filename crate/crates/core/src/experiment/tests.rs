use super::*;
use crate::phydec::Strategy;

fn small(extra: &str) -> ExperimentConfig {
    let base = "code = \"qc-peg:8:1\"\nS = 10\nn_bc = 4\ntrials = 20\nseed = 7\nmax_iters = 30\n";
    let mut table: toml::Table = base.parse().unwrap();
    table.extend(extra.parse::<toml::Table>().unwrap());
    ExperimentConfig::from_toml(&table.to_string(), &[]).unwrap()
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let cfg = small("G = [0.3, 1.0]\nsnr_db = [10.0]\n");
    let one = with_workers(1, || run_experiment(&cfg)).unwrap().unwrap();
    let three = with_workers(3, || run_experiment(&cfg)).unwrap().unwrap();
    assert_eq!(results_csv(&one), results_csv(&three));
    assert_eq!(one.len(), 2 * cfg.strategies.len());
}

#[test]
fn accounting_identities_hold_on_every_row() {
    let cfg = small("G = [0.5, 1.5]\nsnr_db = [12.0]\n");
    for r in run_experiment(&cfg).unwrap() {
        let m = &r.metrics;
        assert!((m.sum_rate - 0.5 * m.phi).abs() < 1e-12);
        assert!((m.phi - m.g_realized * (1.0 - m.plr)).abs() < 1e-12, "{r:?}");
    }
}

#[test]
fn light_noiseless_load_is_fully_recovered() {
    let mut cfg = small("G = [0.01]\nsnr_db = [60.0]\ntrials = 40\n");
    cfg.strategies = vec![Scheme::Receiver(Strategy::SndJd)];
    let r = &run_experiment(&cfg).unwrap()[0];
    assert!(r.metrics.transmitted > 0);
    assert_eq!(r.metrics.plr, 0.0);
    assert_eq!(r.metrics.phi, r.metrics.g_realized);
}

#[test]
fn aloha_matches_classical_throughput() {
    let mut cfg = small("G = [0.1, 0.25]\nsnr_db = [40.0]\ntrials = 600\n");
    cfg.strategies = vec![Scheme::Aloha];
    for r in run_experiment(&cfg).unwrap() {
        let expect = r.g * (-r.g).exp();
        let m = &r.metrics;
        assert!(
            (m.phi - expect).abs() <= 3.0 * m.ci_phi,
            "G = {}: {} vs {expect} ± {}",
            r.g,
            m.phi,
            m.ci_phi
        );
        assert!(m.energy_eff >= 1.0);
    }
}

#[test]
fn slot_study_at_very_low_snr_finds_nothing() {
    let cfg = small("snr_db = [-20.0]\nslot_k = [2]\ntrials = 20\nstrategies = [\"separate\", \"snd-jd\"]\n");
    let rows = run_slot_study(&cfg).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.innov_mean <= 0.1));
    let csv = slot_study_csv(&rows);
    assert!(csv.starts_with(SLOT_HEADER));
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn aloha_only_cannot_run_slot_study() {
    let cfg = small("strategies = [\"aloha\"]\n");
    assert!(run_slot_study(&cfg).is_err());
}

#[test]
fn bound_uses_and_fills_the_cache() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg =
        small("G = [0.1, 0.3]\nsnr_db = [15.0]\nrepetition = \"bernoulli\"\nptilde_trials = 30\nk_max = 3\n");
    cfg.bound_cache = Some(dir.path().to_path_buf());
    let first = run_bound(&cfg).unwrap();
    let file = first.cache_files[0].clone().unwrap();
    assert!(file.exists());
    let second = run_bound(&cfg).unwrap();
    assert_eq!(bound_csv(&first), bound_csv(&second));
    assert_eq!(first.rows.len(), 2);
    let meta = sidecar("bound", &cfg, &cfg.load_code().unwrap(), BOUND_HEADER, bound_extra(&first));
    assert_eq!(meta["extra"]["ptilde"][0]["ptilde"].as_array().unwrap().len(), 3);
}

#[test]
fn outputs_are_written_with_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small("G = [0.2]\nsnr_db = [10.0]\ntrials = 3\n");
    cfg.out = dir.path().join("sub/run.csv");
    let rows = run_experiment(&cfg).unwrap();
    let csv = results_csv(&rows);
    let meta = sidecar("simulate", &cfg, &cfg.load_code().unwrap(), RESULT_HEADER, serde_json::Value::Null);
    let side = write_outputs(&cfg.out, &csv, &meta).unwrap();
    assert_eq!(std::fs::read_to_string(&cfg.out).unwrap(), csv);
    let back: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(side).unwrap()).unwrap();
    assert_eq!(back["config"]["S"], 10);
    assert_eq!(back["code"]["n"], 192);
    assert_eq!(back["columns"][0], "strategy");
}

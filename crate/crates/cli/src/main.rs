use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use plnc_aloha::experiment::{
    bound_csv, bound_extra, results_csv, run_bound, run_experiment, run_slot_study, sidecar, slot_study_csv,
    with_workers, write_outputs, ExperimentConfig, BOUND_HEADER, RESULT_HEADER, SLOT_HEADER,
};

/// Monte Carlo experiments for slotted ALOHA with physical-layer network
/// coding and multiuser detection.
#[derive(Parser)]
#[command(name = "plnc-aloha", version)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Frame-level sweep over SNR and load for every configured scheme.
    Simulate(Common),
    /// Innovative packets per slot versus SNR for fixed collision sizes.
    SlotStudy(Common),
    /// Analytical throughput bound with estimated decoding probabilities.
    Bound(Common),
    /// Check a configuration and print it with all defaults filled in.
    ValidateConfig(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file; defaults are used when omitted.
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Output CSV path; metadata goes next to it with a .json extension.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Trials per grid point.
    #[arg(long)]
    trials: Option<u64>,
    /// Override a config key, e.g. `--set 'G=[0.5,1.0]'`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut overrides = Vec::new();
        for o in &self.overrides {
            let Some((k, v)) = o.split_once('=') else {
                bail!("override {o:?} is not of the form KEY=VALUE");
            };
            overrides.push((k.trim().to_string(), v.trim().to_string()));
        }
        if let Some(s) = self.seed {
            overrides.push(("seed".into(), s.to_string()));
        }
        if let Some(t) = self.trials {
            overrides.push(("trials".into(), t.to_string()));
        }
        if let Some(p) = &self.out {
            overrides.push(("out".into(), toml_string(&p.to_string_lossy())));
        }
        let cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path, &overrides)
                .with_context(|| format!("loading {}", path.display()))?,
            None => ExperimentConfig::from_toml("", &overrides)?,
        };
        Ok(cfg)
    }
}

fn toml_string(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.verb {
        Verb::ValidateConfig(c) => {
            let cfg = c.load()?;
            cfg.load_code()?;
            print!("{}", cfg.to_toml());
        }
        Verb::Simulate(c) => {
            let cfg = c.load()?;
            let spec = cfg.load_code()?;
            let rows = with_workers(c.workers, || run_experiment(&cfg))??;
            let meta = sidecar("simulate", &cfg, &spec, RESULT_HEADER, serde_json::Value::Null);
            let side = write_outputs(&cfg.out, &results_csv(&rows), &meta)?;
            println!("wrote {} rows to {} ({})", rows.len(), cfg.out.display(), side.display());
        }
        Verb::SlotStudy(c) => {
            let cfg = c.load()?;
            let spec = cfg.load_code()?;
            let rows = with_workers(c.workers, || run_slot_study(&cfg))??;
            let meta = sidecar("slot-study", &cfg, &spec, SLOT_HEADER, serde_json::Value::Null);
            let side = write_outputs(&cfg.out, &slot_study_csv(&rows), &meta)?;
            println!("wrote {} rows to {} ({})", rows.len(), cfg.out.display(), side.display());
        }
        Verb::Bound(c) => {
            let cfg = c.load()?;
            let spec = cfg.load_code()?;
            let study = with_workers(c.workers, || run_bound(&cfg))??;
            let meta = sidecar("bound", &cfg, &spec, BOUND_HEADER, bound_extra(&study));
            let side = write_outputs(&cfg.out, &bound_csv(&study), &meta)?;
            println!("wrote {} rows to {} ({})", study.rows.len(), cfg.out.display(), side.display());
        }
    }
    Ok(())
}

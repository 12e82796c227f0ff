//! Experiment configuration, read from TOML. Unknown keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::code::{default_code, load_code, qc_peg_code, CodeSpec};
use crate::error::{Error, Result};
use crate::frame::RepetitionPolicy;
use crate::gf2m::MAX_DEGREE;
use crate::phydec::{DecoderOptions, Strategy};

/// A receiver evaluated at frame level: one of the slot strategies, or the
/// slotted-ALOHA reference (one replica, collision-free slots only).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    Receiver(Strategy),
    Aloha,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Receiver(s) => s.name(),
            Scheme::Aloha => "aloha",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "aloha" {
            return Ok(Scheme::Aloha);
        }
        s.parse().map(Scheme::Receiver)
    }
}

impl Serialize for Scheme {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Scheme {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepetitionKind {
    Fixed,
    Bernoulli,
}

/// All experiment parameters. Field names are the config keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Average SNR points in dB.
    pub snr_db: Vec<f64>,
    /// Offered loads in packets per slot.
    #[serde(rename = "G")]
    pub g: Vec<f64>,
    /// Slots per frame.
    #[serde(rename = "S")]
    pub slots: usize,
    /// Precoding field is GF(2^n_bc).
    pub n_bc: u32,
    pub repetition: RepetitionKind,
    /// Replicas per user for the fixed policy.
    pub d: usize,
    /// Per-slot probability for the Bernoulli policy; `1 - 2^-n_bc` if unset.
    pub p: Option<f64>,
    /// Larger collisions are not decoded.
    pub k_max: usize,
    pub strategies: Vec<Scheme>,
    /// `default`, `qc-peg:<lifting>:<seed>`, or a path to an alist file.
    pub code: String,
    /// Frames (or slots, for the slot study) per grid point.
    pub trials: u64,
    pub seed: u64,
    pub out: PathBuf,
    /// Collision sizes for the slot study.
    pub slot_k: Vec<usize>,
    pub max_iters: usize,
    pub refinement: bool,
    pub refine_rounds: usize,
    /// Trials per collision size when estimating the bound's decoding
    /// probabilities.
    pub ptilde_trials: u64,
    /// Directory where estimated probability tables are cached.
    pub bound_cache: Option<PathBuf>,
    pub noise_variance: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            snr_db: vec![15.0],
            g: (1..=10).map(|i| f64::from(i) * 0.25).collect(),
            slots: 10,
            n_bc: 8,
            repetition: RepetitionKind::Fixed,
            d: 2,
            p: None,
            k_max: 7,
            strategies: vec![
                Scheme::Receiver(Strategy::Separate),
                Scheme::Receiver(Strategy::Sic),
                Scheme::Receiver(Strategy::SndSic),
                Scheme::Receiver(Strategy::Jd),
                Scheme::Receiver(Strategy::SndJd),
                Scheme::Aloha,
            ],
            code: "default".into(),
            trials: 1000,
            seed: 1,
            out: PathBuf::from("results.csv"),
            slot_k: vec![2, 4],
            max_iters: crate::code::DEFAULT_MAX_ITERS,
            refinement: true,
            refine_rounds: 1,
            ptilde_trials: 10_000,
            bound_cache: None,
            noise_variance: 1.0,
        }
    }
}

/// Parse `text` as a TOML value, falling back to a bare string.
fn parse_value(text: &str) -> toml::Value {
    format!("v = {text}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(text.to_string()))
}

impl ExperimentConfig {
    /// Parse a config file's text, apply `key=value` overrides (values in
    /// TOML syntax) and validate.
    pub fn from_toml(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut table: toml::Table =
            text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for (k, v) in overrides {
            table.insert(k.clone(), parse_value(v));
        }
        let cfg: ExperimentConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| !s.is_finite()) {
            return bad("snr_db must be a nonempty list of finite values".into());
        }
        if self.g.is_empty() || self.g.iter().any(|g| !(*g > 0.0) || !g.is_finite()) {
            return bad("G must be a nonempty list of positive loads".into());
        }
        if self.slots == 0 {
            return bad("S must be at least 1".into());
        }
        if self.n_bc == 0 || self.n_bc > MAX_DEGREE {
            return bad(format!("n_bc must lie in 1..={MAX_DEGREE}"));
        }
        if self.repetition == RepetitionKind::Fixed && (self.d == 0 || self.d > self.slots) {
            return bad(format!("d = {} must lie in 1..=S", self.d));
        }
        if let Some(p) = self.p {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("p = {p} outside [0, 1]"));
            }
        }
        if self.k_max == 0 || self.k_max > 16 {
            return bad("k_max must lie in 1..=16".into());
        }
        if self.strategies.is_empty() {
            return bad("strategies must not be empty".into());
        }
        if self.trials == 0 || self.ptilde_trials == 0 {
            return bad("trials and ptilde_trials must be at least 1".into());
        }
        if self.slot_k.is_empty() || self.slot_k.iter().any(|&k| k == 0 || k > 16) {
            return bad("slot_k must be a nonempty list in 1..=16".into());
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        if !(self.noise_variance > 0.0) || !self.noise_variance.is_finite() {
            return bad("noise_variance must be positive".into());
        }
        Ok(())
    }

    /// The per-slot transmission probability of the Bernoulli policy.
    pub fn bernoulli_p(&self) -> f64 {
        self.p.unwrap_or(1.0 - 2f64.powi(-(self.n_bc as i32)))
    }

    pub fn policy(&self) -> RepetitionPolicy {
        match self.repetition {
            RepetitionKind::Fixed => RepetitionPolicy::Fixed(self.d),
            RepetitionKind::Bernoulli => RepetitionPolicy::Bernoulli(self.bernoulli_p()),
        }
    }

    pub fn decoder_options(&self) -> DecoderOptions {
        DecoderOptions {
            max_iters: self.max_iters,
            refinement: self.refinement,
            refine_rounds: self.refine_rounds,
        }
    }

    /// Load the configured channel code and check that its message length
    /// splits into `n_bc`-bit symbols.
    pub fn load_code(&self) -> Result<CodeSpec> {
        let spec = if self.code == "default" {
            default_code().clone()
        } else if let Some(rest) = self.code.strip_prefix("qc-peg:") {
            let parts: Vec<&str> = rest.split(':').collect();
            let parsed = match parts.as_slice() {
                [z, s] => z.parse().ok().zip(s.parse().ok()),
                _ => None,
            };
            let (z, s) = parsed.ok_or_else(|| Error::Config(format!("bad code spec {:?}", self.code)))?;
            qc_peg_code(z, s)?
        } else {
            load_code(&std::fs::read_to_string(&self.code)?)?
        };
        if spec.k() % self.n_bc as usize != 0 {
            return Err(Error::Config(format!(
                "message length {} is not a multiple of n_bc = {}",
                spec.k(),
                self.n_bc
            )));
        }
        Ok(spec)
    }
}

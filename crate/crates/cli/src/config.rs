//! Run settings merged from built-in defaults, an optional TOML file and
//! command-line flags, in increasing priority.

use std::path::Path;

use clap::{Args, ValueEnum};
use quantune::generate::{GenConfig, Start, DEFAULT_MAX_RETRIES};
use quantune::sim::NoiseModel;
use quantune::voice::{SynthParams, Vowel};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StartMode {
    First,
    Random,
}

/// Settings shared by every subcommand. Flags left out fall back to the
/// config file, then to the defaults.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Settings {
    /// Context length n; rules of orders 1..=n are learned
    #[arg(short = 'n', long)]
    pub order: Option<usize>,
    /// Generative rounds, one event each
    #[arg(long)]
    pub rounds: Option<usize>,
    /// Measurements per circuit
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Per-qubit readout flip probability
    #[arg(long)]
    pub noise_p: Option<f64>,
    /// Accept wrong measurements that still lead somewhere
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub tolerate: Option<bool>,
    #[arg(long)]
    pub max_retries: Option<u32>,
    #[arg(long, value_enum)]
    pub start: Option<StartMode>,
    /// Beats per minute
    #[arg(long)]
    pub tempo: Option<f64>,
    /// One of a, e, i, o, u
    #[arg(long)]
    pub vowel: Option<String>,
    #[arg(long)]
    pub duration_scale: Option<f64>,
    /// Also write a bar chart of the round statistics
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub plot: Option<bool>,
}

impl Settings {
    pub fn load(path: &Path) -> Result<Settings, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io("config", path, e))?;
        toml::from_str(&text).map_err(|e| CliError::new("config", format!("{}: {e}", path.display())))
    }

    /// `self` wins wherever it is set.
    pub fn over(self, base: Settings) -> Settings {
        Settings {
            order: self.order.or(base.order),
            rounds: self.rounds.or(base.rounds),
            shots: self.shots.or(base.shots),
            seed: self.seed.or(base.seed),
            noise_p: self.noise_p.or(base.noise_p),
            tolerate: self.tolerate.or(base.tolerate),
            max_retries: self.max_retries.or(base.max_retries),
            start: self.start.or(base.start),
            tempo: self.tempo.or(base.tempo),
            vowel: self.vowel.or(base.vowel),
            duration_scale: self.duration_scale.or(base.duration_scale),
            plot: self.plot.or(base.plot),
        }
    }

    pub fn order(&self) -> usize {
        self.order.unwrap_or(1)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn plot(&self) -> bool {
        self.plot.unwrap_or(false)
    }

    pub fn gen_config(&self) -> Result<GenConfig, CliError> {
        let noise = match self.noise_p {
            None => NoiseModel::NONE,
            Some(p) => NoiseModel::bit_flip(p).map_err(|e| CliError::new("config", e.to_string()))?,
        };
        Ok(GenConfig {
            rounds: self.rounds.unwrap_or(50),
            order: self.order(),
            shots: self.shots.unwrap_or(1),
            start: match self.start.unwrap_or(StartMode::First) {
                StartMode::First => Start::FirstOfInput,
                StartMode::Random => Start::Random,
            },
            noise,
            tolerate_wrong: self.tolerate.unwrap_or(false),
            max_retries: self.max_retries.unwrap_or(DEFAULT_MAX_RETRIES),
            seed: self.seed(),
        })
    }

    pub fn synth_params(&self, ppqn: u16) -> Result<SynthParams, CliError> {
        let vowel = match &self.vowel {
            None => Vowel::A,
            Some(v) => v.parse().map_err(|e: quantune::voice::SynthError| CliError::new("config", e.to_string()))?,
        };
        let mut params = SynthParams::for_vowel(vowel);
        params.ppqn = ppqn;
        params.seed = self.seed();
        if let Some(t) = self.tempo {
            params.tempo_bpm = t;
        }
        if let Some(s) = self.duration_scale {
            params.duration_scale = s;
        }
        params.validate().map_err(|e| CliError::new("config", e.to_string()))?;
        Ok(params)
    }
}

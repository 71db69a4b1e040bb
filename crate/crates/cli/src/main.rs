mod config;
mod plot;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use quantune::codec::Code;
use quantune::generate::generate;
use quantune::midi::{self, MidiSequence};
use quantune::rules::{Context, Model};
use quantune::sim::{self, run, NoiseModel};
use quantune::stateprep::prepare_state;
use quantune::{pipeline, voice};
use thiserror::Error;

use config::Settings;

const RULES_FILE: &str = "rules.json";
const TUNE_FILE: &str = "tune.mid";
const STATS_FILE: &str = "stats.csv";
const PLOT_FILE: &str = "stats.svg";
const WAV_FILE: &str = "tune.wav";

#[derive(Debug, Error)]
#[error("{stage}: {detail}")]
pub struct CliError {
    stage: &'static str,
    detail: String,
}

impl CliError {
    pub fn new(stage: &'static str, detail: impl fmt::Display) -> Self {
        CliError { stage, detail: detail.to_string() }
    }

    pub fn io(stage: &'static str, path: &Path, err: std::io::Error) -> Self {
        CliError::new(stage, format!("{}: {err}", path.display()))
    }
}

#[derive(Parser)]
#[command(name = "quantune", version, about = "Learn tunes from MIDI, regenerate them through simulated circuits, sing them")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// TOML file with default settings; flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[command(flatten)]
    settings: Settings,
}

impl Common {
    fn settings(&self) -> Result<Settings, CliError> {
        let base = match &self.config {
            Some(path) => Settings::load(path)?,
            None => Settings::default(),
        };
        Ok(self.settings.clone().over(base))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Learn rules of orders 1..=n from one or more MIDI files
    Learn {
        #[arg(required = true)]
        midi: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Generate a tune and round statistics from a rules file
    Generate {
        rules: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Render a monophonic MIDI file as a sung vowel
    Sing {
        midi: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Learn, generate and sing in one go
    Run {
        #[arg(required = true)]
        midi: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Write the circuit and shot counts for one context of a rules file
    Circuit {
        rules: PathBuf,
        /// Context codes as bit strings, oldest first, e.g. "001" or "000 001"
        #[arg(long)]
        context: String,
        #[command(flatten)]
        common: Common,
    },
}

fn write(path: &Path, bytes: impl AsRef<[u8]>, stage: &'static str) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::io(stage, path, e))
}

fn read_midi(path: &Path, stage: &'static str) -> Result<MidiSequence, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(stage, path, e))?;
    midi::parse_smf(&bytes).map_err(|e| CliError::new(stage, format!("{}: {e}", path.display())))
}

fn learn(paths: &[PathBuf], settings: &Settings) -> Result<Model, CliError> {
    let seqs = paths.iter().map(|p| read_midi(p, "learn")).collect::<Result<Vec<_>, _>>()?;
    // per-file extraction first so a failure names its file
    for (seq, path) in seqs.iter().zip(paths) {
        midi::extract_monophonic(seq).map_err(|e| CliError::new("learn", format!("{}: {e}", path.display())))?;
    }
    pipeline::learn(&seqs, settings.order()).map_err(|e| CliError::new("learn", e))
}

fn load_rules(path: &Path) -> Result<Model, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io("generate", path, e))?;
    Model::from_json(&text).map_err(|e| CliError::new("generate", format!("{}: {e}", path.display())))
}

fn generate_files(model: &Model, settings: &Settings, out: &Path) -> Result<Vec<u8>, CliError> {
    let cfg = settings.gen_config()?;
    let g = generate(model, &cfg).map_err(|e| CliError::new("generate", e))?;
    let mid = pipeline::tune_to_midi(model, &g.codes).map_err(|e| CliError::new("generate", e))?;
    write(&out.join(TUNE_FILE), &mid, "generate")?;
    write(&out.join(STATS_FILE), g.stats.to_csv(model.qubits()), "generate")?;
    if settings.plot() {
        write(&out.join(PLOT_FILE), plot::stats_svg(&g.stats), "generate")?;
    }
    Ok(mid)
}

fn sing(seq: &MidiSequence, settings: &Settings, out: &Path) -> Result<(), CliError> {
    let events = midi::extract_monophonic(seq).map_err(|e| CliError::new("sing", e))?;
    let params = settings.synth_params(seq.ppqn)?;
    let samples = voice::render(&events, &params).map_err(|e| CliError::new("sing", e))?;
    write(&out.join(WAV_FILE), voice::write_wav(&samples, params.sample_rate), "sing")
}

fn parse_context(text: &str, qubits: u32) -> Result<Context, CliError> {
    text.split_whitespace()
        .map(|bits| {
            if bits.len() != qubits as usize {
                return Err(CliError::new("circuit", format!("'{bits}' is not a {qubits}-bit code")));
            }
            u16::from_str_radix(bits, 2)
                .map(Code)
                .map_err(|_| CliError::new("circuit", format!("'{bits}' is not binary")))
        })
        .collect::<Result<_, _>>()
        .map(Context)
}

fn circuit(model: &Model, context: &str, settings: &Settings, out: &Path) -> Result<(), CliError> {
    let qubits = model.qubits();
    let ctx = parse_context(context, qubits)?;
    let set = model
        .rules
        .get(ctx.order())
        .ok_or_else(|| CliError::new("circuit", format!("no rules of order {}", ctx.order())))?;
    let dist = set.distribution(&ctx).map_err(|e| CliError::new("circuit", e))?;
    let c = prepare_state(&dist.to_state_target(qubits), qubits).map_err(|e| CliError::new("circuit", e))?;
    let noise = match settings.noise_p {
        Some(p) => NoiseModel::bit_flip(p).map_err(|e| CliError::new("circuit", e))?,
        None => NoiseModel::NONE,
    };
    let counts = sim::sample(&run(&c), settings.shots.unwrap_or(1000), settings.seed(), noise);
    write(&out.join("circuit.txt"), c.to_string(), "circuit")?;
    write(&out.join("counts.csv"), counts.to_csv(qubits), "circuit")
}

fn prepare_out(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io("output", dir, e))
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Learn { midi, common } => {
            let settings = common.settings()?;
            let model = learn(&midi, &settings)?;
            prepare_out(&common.out_dir)?;
            write(&common.out_dir.join(RULES_FILE), model.to_json(), "learn")
        }
        Command::Generate { rules, common } => {
            let settings = common.settings()?;
            let model = load_rules(&rules)?;
            prepare_out(&common.out_dir)?;
            generate_files(&model, &settings, &common.out_dir).map(|_| ())
        }
        Command::Sing { midi, common } => {
            let settings = common.settings()?;
            let seq = read_midi(&midi, "sing")?;
            prepare_out(&common.out_dir)?;
            sing(&seq, &settings, &common.out_dir)
        }
        Command::Run { midi, common } => {
            let settings = common.settings()?;
            let model = learn(&midi, &settings)?;
            prepare_out(&common.out_dir)?;
            write(&common.out_dir.join(RULES_FILE), model.to_json(), "learn")?;
            let bytes = generate_files(&model, &settings, &common.out_dir)?;
            let seq = midi::parse_smf(&bytes).map_err(|e| CliError::new("sing", e))?;
            sing(&seq, &settings, &common.out_dir)
        }
        Command::Circuit { rules, context, common } => {
            let settings = common.settings()?;
            let model = load_rules(&rules)?;
            prepare_out(&common.out_dir)?;
            circuit(&model, &context, &settings, &common.out_dir)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

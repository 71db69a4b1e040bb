//! Browser bindings: build a state-preparation circuit, generate a tune from
//! the bundled extract, and render it as audio samples.
//!
//! The `*_json` functions hold the logic and run natively; the exported
//! wrappers only convert errors for JavaScript.

use quantune::generate::{generate, GenConfig, Start};
use quantune::midi::{self, NoteEvent};
use quantune::rules::Model;
use quantune::sim::{run, NoiseModel};
use quantune::stateprep::prepare_state;
use quantune::voice::{self, SynthParams, Vowel};
use quantune::{pipeline, Code};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const MISSION_MID: &[u8] = include_bytes!("../../../data/mission.mid");

#[derive(Serialize)]
struct Prepared {
    qubits: u32,
    circuit: String,
    x: usize,
    ry: usize,
    cx: usize,
    probabilities: Vec<f64>,
}

/// Circuit for a list of non-negative weights, padded to a power of two
/// and normalized.
pub fn prepare_json(weights: &[f64]) -> Result<String, String> {
    if weights.is_empty() || weights.iter().any(|w| !(*w >= 0.0)) {
        return Err("weights must be non-negative numbers".into());
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err("weights must not all be zero".into());
    }
    let qubits = quantune::codec::qubits_for(weights.len());
    let mut target: Vec<f64> = weights.iter().map(|w| (w / total).sqrt()).collect();
    target.resize(1 << qubits, 0.0);
    let circuit = prepare_state(&target, qubits).map_err(|e| e.to_string())?;
    let count = circuit.gate_count();
    let out = Prepared {
        qubits,
        x: count.x,
        ry: count.ry,
        cx: count.cx,
        probabilities: run(&circuit).probabilities(),
        circuit: circuit.to_string(),
    };
    Ok(serde_json::to_string(&out).expect("serializable"))
}

#[derive(Serialize)]
struct Tune {
    codes: Vec<String>,
    events: Vec<NoteEvent>,
    names: Vec<String>,
    good: usize,
    skipped: usize,
    noisy: usize,
    dead_end: usize,
    csv: String,
}

fn mission_model(order: usize) -> Result<Model, String> {
    let seq = midi::parse_smf(MISSION_MID).map_err(|e| e.to_string())?;
    pipeline::learn(&[seq], order).map_err(|e| e.to_string())
}

/// Generates a tune from rules learned on the bundled extract.
pub fn generate_json(
    order: usize,
    rounds: usize,
    shots: u64,
    noise_p: f64,
    tolerate: bool,
    random_start: bool,
    seed: u64,
) -> Result<String, String> {
    if !(1..=3).contains(&order) {
        return Err("order must be 1, 2 or 3".into());
    }
    let model = mission_model(order)?;
    let config = GenConfig {
        rounds,
        order,
        shots,
        start: if random_start { Start::Random } else { Start::FirstOfInput },
        noise: NoiseModel::bit_flip(noise_p).map_err(|e| e.to_string())?,
        tolerate_wrong: tolerate,
        seed,
        ..GenConfig::default()
    };
    let g = generate(&model, &config).map_err(|e| e.to_string())?;
    let events = pipeline::decode_tune(&model, &g.codes).map_err(|e| e.to_string())?;
    let k = model.qubits();
    let out = Tune {
        codes: g.codes.iter().map(|c: &Code| c.bits(k)).collect(),
        names: events.iter().map(|e| e.pitch.to_string()).collect(),
        events,
        good: g.stats.good,
        skipped: g.stats.skipped,
        noisy: g.stats.noisy,
        dead_end: g.stats.dead_end,
        csv: g.stats.to_csv(k),
    };
    Ok(serde_json::to_string(&out).expect("serializable"))
}

/// Renders events (as produced by `generate_json`) to mono samples at
/// 44.1 kHz with the bundled extract's tick resolution.
pub fn render_samples(events_json: &str, vowel: &str, tempo_bpm: f64, seed: u64) -> Result<Vec<f32>, String> {
    let events: Vec<NoteEvent> = serde_json::from_str(events_json).map_err(|e| e.to_string())?;
    let vowel: Vowel = vowel.parse().map_err(|e: voice::SynthError| e.to_string())?;
    let params = SynthParams { tempo_bpm, seed, ..SynthParams::for_vowel(vowel) };
    voice::render(&events, &params).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn prepare(weights: &[f64]) -> Result<String, JsError> {
    prepare_json(weights).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = generateTune)]
pub fn generate_tune(
    order: usize,
    rounds: usize,
    shots: u32,
    noise_p: f64,
    tolerate: bool,
    random_start: bool,
    seed: u32,
) -> Result<String, JsError> {
    generate_json(order, rounds, u64::from(shots), noise_p, tolerate, random_start, u64::from(seed))
        .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn render(events_json: &str, vowel: &str, tempo_bpm: f64, seed: u32) -> Result<Vec<f32>, JsError> {
    render_samples(events_json, vowel, tempo_bpm, u64::from(seed)).map_err(|e| JsError::new(&e))
}

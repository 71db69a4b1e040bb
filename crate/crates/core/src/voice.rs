//! Formant singing voice: a band-limited pulse train plus aspiration noise,
//! shaped by a cascade of two-pole resonators, and a PCM WAV writer.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::midi::{NoteEvent, Pitch};
use crate::sim::stream_rng;

pub const DEFAULT_SAMPLE_RATE: u32 = 44_100;
pub const PEAK_LEVEL: f32 = 0.9;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("formant {frequency} Hz / {bandwidth} Hz does not fit sample rate {sample_rate}")]
    BadFormant { frequency: f64, bandwidth: f64, sample_rate: u32 },
    #[error("invalid synth parameter: {0}")]
    BadParam(&'static str),
    #[error("unknown vowel {0:?}")]
    UnknownVowel(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Formant {
    pub frequency: f64,
    pub bandwidth: f64,
    pub gain: f64,
}

impl Formant {
    pub const fn new(frequency: f64, bandwidth: f64) -> Self {
        Formant { frequency, bandwidth, gain: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Vowel {
    #[default]
    A,
    E,
    I,
    O,
    U,
}

impl Vowel {
    pub const ALL: [Vowel; 5] = [Vowel::A, Vowel::E, Vowel::I, Vowel::O, Vowel::U];

    /// First three formants of an adult voice.
    pub fn formants(self) -> Vec<Formant> {
        let (f, bw): ([f64; 3], [f64; 3]) = match self {
            Vowel::A => ([700.0, 1220.0, 2600.0], [130.0, 70.0, 160.0]),
            Vowel::E => ([530.0, 1840.0, 2480.0], [60.0, 100.0, 120.0]),
            Vowel::I => ([270.0, 2290.0, 3010.0], [60.0, 90.0, 100.0]),
            Vowel::O => ([570.0, 840.0, 2410.0], [70.0, 80.0, 100.0]),
            Vowel::U => ([300.0, 870.0, 2240.0], [60.0, 80.0, 100.0]),
        };
        f.iter().zip(bw).map(|(&f, bw)| Formant::new(f, bw)).collect()
    }
}

impl fmt::Display for Vowel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Vowel::A => "a",
            Vowel::E => "e",
            Vowel::I => "i",
            Vowel::O => "o",
            Vowel::U => "u",
        })
    }
}

impl FromStr for Vowel {
    type Err = SynthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Vowel::ALL
            .into_iter()
            .find(|v| v.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| SynthError::UnknownVowel(s.into()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub sample_rate: u32,
    pub formants: Vec<Formant>,
    pub vowel: Vowel,
    pub tempo_bpm: f64,
    pub ppqn: u16,
    pub attack_ms: f64,
    pub release_ms: f64,
    pub vibrato_rate_hz: f64,
    pub vibrato_depth_cents: f64,
    /// Share of aspiration noise in the excitation, 0..=1.
    pub noise_mix: f64,
    /// Multiplies every event's tick length before rendering.
    pub duration_scale: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams::for_vowel(Vowel::A)
    }
}

impl SynthParams {
    pub fn for_vowel(vowel: Vowel) -> Self {
        SynthParams {
            sample_rate: DEFAULT_SAMPLE_RATE,
            formants: vowel.formants(),
            vowel,
            tempo_bpm: 120.0,
            ppqn: 960,
            attack_ms: 15.0,
            release_ms: 40.0,
            vibrato_rate_hz: 5.5,
            vibrato_depth_cents: 20.0,
            noise_mix: 0.04,
            duration_scale: 1.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let nyquist = f64::from(self.sample_rate) / 2.0;
        if self.sample_rate == 0 || self.ppqn == 0 {
            return Err(SynthError::BadParam("sample rate and ppqn must be positive"));
        }
        if !(self.tempo_bpm > 0.0) || !(self.duration_scale > 0.0) {
            return Err(SynthError::BadParam("tempo and duration scale must be positive"));
        }
        if !(self.vibrato_depth_cents >= 0.0) || !(self.vibrato_rate_hz >= 0.0) {
            return Err(SynthError::BadParam("vibrato must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.noise_mix) {
            return Err(SynthError::BadParam("noise mix must be within 0..=1"));
        }
        if !(self.attack_ms >= 0.0) || !(self.release_ms >= 0.0) {
            return Err(SynthError::BadParam("envelope times must be non-negative"));
        }
        if self.formants.is_empty() {
            return Err(SynthError::BadParam("at least one formant"));
        }
        for f in &self.formants {
            if !(f.frequency > 0.0 && f.frequency < nyquist && f.bandwidth > 0.0) {
                return Err(SynthError::BadFormant {
                    frequency: f.frequency,
                    bandwidth: f.bandwidth,
                    sample_rate: self.sample_rate,
                });
            }
        }
        Ok(())
    }

    pub fn event_seconds(&self, ticks: u32) -> f64 {
        f64::from(ticks) * self.duration_scale / f64::from(self.ppqn) * 60.0 / self.tempo_bpm
    }

    pub fn event_samples(&self, ticks: u32) -> usize {
        (self.event_seconds(ticks) * f64::from(self.sample_rate)).round() as usize
    }
}

/// Equal temperament, A4 = 440 Hz. `None` for a rest.
pub fn event_frequency(event: &NoteEvent) -> Option<f64> {
    match event.pitch {
        Pitch::Silence => None,
        Pitch::Midi(n) => Some(440.0 * 2f64.powf((f64::from(n) - 69.0) / 12.0)),
    }
}

/// Coefficients `(A, B, C)` of `y[t] = A x[t] + B y[t-1] + C y[t-2]`.
pub fn resonator_coeffs(frequency: f64, bandwidth: f64, sample_rate: f64) -> (f64, f64, f64) {
    let r = (-PI * bandwidth / sample_rate).exp();
    let c = -r * r;
    let b = 2.0 * r * (2.0 * PI * frequency / sample_rate).cos();
    (1.0 - b - c, b, c)
}

#[derive(Debug, Clone)]
struct Resonator {
    a: f64,
    b: f64,
    c: f64,
    y1: f64,
    y2: f64,
    gain: f64,
}

impl Resonator {
    fn new(f: &Formant, sample_rate: f64) -> Self {
        let (a, b, c) = resonator_coeffs(f.frequency, f.bandwidth, sample_rate);
        Resonator { a, b, c, y1: 0.0, y2: 0.0, gain: f.gain }
    }

    fn step(&mut self, x: f64) -> f64 {
        let y = self.a * x + self.b * self.y1 + self.c * self.y2;
        self.y2 = self.y1;
        self.y1 = y;
        y * self.gain
    }
}

/// Sum of the first `harmonics` cosines at `phase`, scaled to peak 1.
fn blit(phase: f64, harmonics: usize) -> f64 {
    let h = harmonics as f64;
    let half = (phase / 2.0).sin();
    if half.abs() < 1e-9 {
        return 1.0;
    }
    ((h + 0.5) * phase).sin() / (2.0 * half) / h - 0.5 / h
}

fn render_note(freq: f64, len: usize, params: &SynthParams, index: usize, out: &mut Vec<f64>) {
    let sr = f64::from(params.sample_rate);
    let depth = params.vibrato_depth_cents / 1200.0;
    let top = freq * 2f64.powf(depth);
    let harmonics = ((sr / 2.0) / top).floor().max(1.0) as usize;
    let mut rng = stream_rng(params.seed, index as u64);
    let mut filters: Vec<Resonator> = params.formants.iter().map(|f| Resonator::new(f, sr)).collect();

    let mut attack = (params.attack_ms / 1000.0 * sr).round() as usize;
    let mut release = (params.release_ms / 1000.0 * sr).round() as usize;
    if attack + release > len {
        let scale = len as f64 / (attack + release) as f64;
        attack = (attack as f64 * scale).floor() as usize;
        release = (release as f64 * scale).floor() as usize;
    }

    let mut phase = 0.0f64;
    for t in 0..len {
        let time = t as f64 / sr;
        let f = if depth > 0.0 {
            freq * 2f64.powf(depth * (2.0 * PI * params.vibrato_rate_hz * time).sin())
        } else {
            freq
        };
        let pulse = blit(phase, harmonics);
        phase = (phase + 2.0 * PI * f / sr) % (2.0 * PI);
        let noise = if params.noise_mix > 0.0 { rng.gen_range(-1.0..1.0) } else { 0.0 };
        let mut x = (1.0 - params.noise_mix) * pulse + params.noise_mix * noise;
        for r in filters.iter_mut() {
            x = r.step(x);
        }
        let env = if t < attack {
            t as f64 / attack as f64
        } else if t >= len - release {
            (len - t) as f64 / release as f64
        } else {
            1.0
        };
        out.push(x * env);
    }
}

/// Renders events back to back without peak normalization. Rests are
/// exact zeros.
pub fn render_raw(events: &[NoteEvent], params: &SynthParams) -> Result<Vec<f64>, SynthError> {
    params.validate()?;
    let total: usize = events.iter().map(|e| params.event_samples(e.duration)).sum();
    let mut out = Vec::with_capacity(total);
    for (i, ev) in events.iter().enumerate() {
        let len = params.event_samples(ev.duration);
        match event_frequency(ev) {
            None => out.resize(out.len() + len, 0.0),
            Some(f) => render_note(f, len, params, i, &mut out),
        }
    }
    Ok(out)
}

/// Renders and scales the peak to 0.9 of full scale.
pub fn render(events: &[NoteEvent], params: &SynthParams) -> Result<Vec<f32>, SynthError> {
    let raw = render_raw(events, params)?;
    let peak = raw.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let scale = if peak > 0.0 { f64::from(PEAK_LEVEL) / peak } else { 0.0 };
    Ok(raw.into_iter().map(|x| (x * scale) as f32).collect())
}

/// Mono 16-bit PCM RIFF/WAVE.
pub fn write_wav(samples: &[f32], sample_rate: u32) -> Vec<u8> {
    let data_len = (samples.len() * 2) as u32;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &s in samples {
        let q = (f64::from(s).clamp(-1.0, 1.0) * 32767.0).round() as i16;
        out.extend_from_slice(&q.to_le_bytes());
    }
    out
}

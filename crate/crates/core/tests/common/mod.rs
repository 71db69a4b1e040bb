#![allow(dead_code)]

use std::collections::HashSet;

use quantune::codec::Code;
use quantune::midi::NoteEvent;
use quantune::pipeline;
use quantune::rules::Model;
use rustfft::{num_complex::Complex, FftPlanner};

pub const MISSION_MID: &[u8] = include_bytes!("../../../../data/mission.mid");

/// The twelve-event extract, read off the score by hand.
pub fn mission_events() -> Vec<NoteEvent> {
    vec![
        NoteEvent::note(70, 480),
        NoteEvent::note(67, 480),
        NoteEvent::note(62, 2880),
        NoteEvent::note(70, 480),
        NoteEvent::note(67, 480),
        NoteEvent::note(61, 2880),
        NoteEvent::note(70, 480),
        NoteEvent::note(67, 480),
        NoteEvent::note(60, 2880),
        NoteEvent::note(58, 480),
        NoteEvent::note(60, 960),
        NoteEvent::rest(2400),
    ]
}

pub fn mission_model(order: usize) -> Model {
    pipeline::learn_events(&[mission_events()], 960, order).unwrap()
}

pub fn codes(v: &[u16]) -> Vec<Code> {
    v.iter().map(|&c| Code(c)).collect()
}

/// Every (n+1)-window of the training sequences, by plain enumeration.
pub fn training_ngrams(seqs: &[Vec<Code>], n: usize) -> HashSet<Vec<Code>> {
    let mut set = HashSet::new();
    for s in seqs {
        if s.len() > n {
            for i in 0..s.len() - n {
                set.insert(s[i..=i + n].to_vec());
            }
        }
    }
    set
}

/// Fundamental by normalized autocorrelation with parabolic refinement.
pub fn autocorr_f0(x: &[f32], sr: f64, fmin: f64, fmax: f64) -> f64 {
    let x: Vec<f64> = x.iter().map(|&v| f64::from(v)).collect();
    let min_lag = (sr / fmax).floor() as usize;
    let max_lag = (sr / fmin).ceil() as usize;
    let r = |lag: usize| -> f64 { (0..x.len() - lag).map(|i| x[i] * x[i + lag]).sum::<f64>() };
    let vals: Vec<f64> = (min_lag - 1..=max_lag + 1).map(r).collect();
    // first local maximum close to the global one, so subharmonics lose
    let top = vals.iter().cloned().fold(f64::MIN, f64::max);
    let best = (1..vals.len() - 1)
        .find(|&i| vals[i] >= 0.9 * top && vals[i] >= vals[i - 1] && vals[i] >= vals[i + 1])
        .expect("autocorrelation peak");
    let (a, b, c) = (vals[best - 1], vals[best], vals[best + 1]);
    let shift = 0.5 * (a - c) / (a - 2.0 * b + c);
    sr / ((min_lag - 1 + best) as f64 + shift)
}

pub fn magnitude_spectrum(x: &[f64]) -> Vec<f64> {
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf[..x.len() / 2].iter().map(|c| c.norm()).collect()
}

/// Log-magnitude envelope by cepstral liftering; returns (bin width Hz, envelope).
pub fn cepstral_envelope(x: &[f32], sr: f64, lifter: usize) -> (f64, Vec<f64>) {
    let n = x.len();
    let hann: Vec<f64> = (0..n)
        .map(|i| f64::from(x[i]) * (0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos()))
        .collect();
    let mut spec: Vec<Complex<f64>> = hann.iter().map(|&v| Complex::new(v, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut spec);
    let mut ceps: Vec<Complex<f64>> = spec.iter().map(|c| Complex::new((c.norm() + 1e-12).ln(), 0.0)).collect();
    planner.plan_fft_inverse(n).process(&mut ceps);
    for (i, c) in ceps.iter_mut().enumerate() {
        if i >= lifter && i <= n - lifter {
            *c = Complex::new(0.0, 0.0);
        }
    }
    planner.plan_fft_forward(n).process(&mut ceps);
    let env = ceps[..n / 2].iter().map(|c| c.re / n as f64).collect();
    (sr / n as f64, env)
}

/// Frequencies of local maxima of `env` within `[lo, hi]` Hz.
pub fn local_maxima(bin_hz: f64, env: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    (1..env.len() - 1)
        .filter(|&i| env[i] > env[i - 1] && env[i] >= env[i + 1])
        .map(|i| i as f64 * bin_hz)
        .filter(|&f| f >= lo && f <= hi)
        .collect()
}

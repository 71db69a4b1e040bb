//! Dense state-vector simulation, shot sampling, and measurement noise.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::circuit::{Circuit, Gate};

#[derive(Debug, Error, PartialEq)]
pub enum NoiseError {
    #[error("bit-flip probability {0} outside [0, 1)")]
    BadProbability(f64),
}

/// Deterministic generator for one stream of a seeded run.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    qubits: u32,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// |0…0⟩
    pub fn zero(qubits: u32) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1usize << qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        StateVector { qubits, amps }
    }

    pub fn qubits(&self) -> u32 {
        self.qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn apply(&mut self, gate: &Gate) {
        match *gate {
            Gate::X { target } => {
                let bit = 1usize << target;
                for i in 0..self.amps.len() {
                    if i & bit == 0 {
                        self.amps.swap(i, i | bit);
                    }
                }
            }
            Gate::Ry { target, angle } => {
                let bit = 1usize << target;
                let (s, c) = (angle / 2.0).sin_cos();
                for i in 0..self.amps.len() {
                    if i & bit == 0 {
                        let a0 = self.amps[i];
                        let a1 = self.amps[i | bit];
                        self.amps[i] = a0 * c - a1 * s;
                        self.amps[i | bit] = a0 * s + a1 * c;
                    }
                }
            }
            Gate::Cx { control, target } => {
                let cbit = 1usize << control;
                let tbit = 1usize << target;
                for i in 0..self.amps.len() {
                    if i & cbit != 0 && i & tbit == 0 {
                        self.amps.swap(i, i | tbit);
                    }
                }
            }
        }
    }
}

/// Applies the gates in order to |0…0⟩.
pub fn run(circuit: &Circuit) -> StateVector {
    let mut state = StateVector::zero(circuit.qubits());
    for g in circuit.gates() {
        state.apply(g);
    }
    state
}

/// Independent bit flips on each measured bit.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseModel {
    bit_flip_p: f64,
}

impl NoiseModel {
    pub const NONE: NoiseModel = NoiseModel { bit_flip_p: 0.0 };

    pub fn bit_flip(p: f64) -> Result<Self, NoiseError> {
        if !(0.0..1.0).contains(&p) {
            return Err(NoiseError::BadProbability(p));
        }
        Ok(NoiseModel { bit_flip_p: p })
    }

    pub fn p(&self) -> f64 {
        self.bit_flip_p
    }

    pub fn is_silent(&self) -> bool {
        self.bit_flip_p == 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ShotCounts {
    counts: BTreeMap<usize, u64>,
    shots: u64,
}

impl ShotCounts {
    pub fn from_counts(counts: impl IntoIterator<Item = (usize, u64)>) -> Self {
        let mut out = ShotCounts::default();
        for (k, n) in counts {
            if n > 0 {
                *out.counts.entry(k).or_insert(0) += n;
                out.shots += n;
            }
        }
        out
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn get(&self, outcome: usize) -> u64 {
        self.counts.get(&outcome).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.counts.iter().map(|(&k, &n)| (k, n))
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// `outcome,bits,count` rows.
    pub fn to_csv(&self, qubits: u32) -> String {
        let mut s = String::from("outcome,bits,count\n");
        for (k, n) in self.iter() {
            s.push_str(&format!("{k},{:0w$b},{n}\n", k, w = qubits as usize));
        }
        s
    }
}

/// Draws `shots` measurements of the full register.
pub fn sample_with<R: Rng + ?Sized>(state: &StateVector, shots: u64, noise: NoiseModel, rng: &mut R) -> ShotCounts {
    assert!(shots >= 1, "at least one shot");
    let mut cumulative = Vec::with_capacity(state.amps.len());
    let mut acc = 0.0;
    for a in &state.amps {
        acc += a.norm_sqr();
        cumulative.push(acc);
    }
    let total = acc;
    let last_nonzero = state.amps.iter().rposition(|a| a.norm_sqr() > 0.0).unwrap_or(0);

    let mut counts = ShotCounts::default();
    for _ in 0..shots {
        let u = rng.gen::<f64>() * total;
        let mut outcome = cumulative.partition_point(|&c| c <= u).min(last_nonzero);
        if !noise.is_silent() {
            for q in 0..state.qubits {
                if rng.gen_bool(noise.bit_flip_p) {
                    outcome ^= 1 << q;
                }
            }
        }
        *counts.counts.entry(outcome).or_insert(0) += 1;
    }
    counts.shots = shots;
    counts
}

pub fn sample(state: &StateVector, shots: u64, seed: u64, noise: NoiseModel) -> ShotCounts {
    sample_with(state, shots, noise, &mut stream_rng(seed, 0))
}

/// Most frequent outcome; ties broken uniformly with `rng`.
pub fn majority_with<R: Rng + ?Sized>(counts: &ShotCounts, rng: &mut R) -> usize {
    let best = counts.counts.values().copied().max().expect("non-empty counts");
    let tied: Vec<usize> = counts.iter().filter(|&(_, n)| n == best).map(|(k, _)| k).collect();
    if tied.len() == 1 {
        tied[0]
    } else {
        tied[rng.gen_range(0..tied.len())]
    }
}

pub fn majority(counts: &ShotCounts, seed: u64) -> usize {
    majority_with(counts, &mut stream_rng(seed, 0))
}

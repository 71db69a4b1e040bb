//! Preparation of real, non-negative amplitude vectors with a binary tree of
//! uniformly controlled RY rotations.
//!
//! Level `l` of the tree acts on qubit `k-1-l` and is controlled by the `l`
//! qubits above it. For a prefix `p` of those higher bits the level applies
//!
//! ```text
//! theta_p = 2 * atan2(|a_{p,1}|, |a_{p,0}|)
//! ```
//!
//! where `a_{p,b}` is the slice of the target under prefix `p` with the
//! current qubit set to `b`. A multiplexed rotation with `l` controls is
//! emitted as `2^l` plain RY gates interleaved with `2^l` CX gates whose
//! controls walk a Gray-code cycle; the plain angles are the Walsh-Hadamard
//! transform of the `theta_p`, read out in Gray-code order and scaled by
//! `2^-l`.

use thiserror::Error;

use crate::circuit::{Circuit, CircuitError};

/// Rotations smaller than this are dropped.
pub const ANGLE_EPS: f64 = 1e-12;

/// Allowed deviation of the target's norm from 1.
pub const NORM_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum PrepError {
    #[error("target has {len} entries, expected 2^{qubits}")]
    WrongLength { len: usize, qubits: u32 },
    #[error("target norm {0} is not 1")]
    NotNormalized(f64),
    #[error("target entry {index} is negative ({value})")]
    NegativeAmplitude { index: usize, value: f64 },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

fn validate(target: &[f64], qubits: u32) -> Result<(), PrepError> {
    if qubits >= usize::BITS || target.len() != 1usize << qubits {
        return Err(PrepError::WrongLength { len: target.len(), qubits });
    }
    if let Some((index, &value)) = target.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
        return Err(PrepError::NegativeAmplitude { index, value });
    }
    let norm = target.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(PrepError::NotNormalized(norm));
    }
    Ok(())
}

/// Rotation angles of every tree level, root first. Level `l` holds `2^l`
/// angles indexed by the prefix of higher qubits.
pub fn level_angles(target: &[f64], qubits: u32) -> Result<Vec<Vec<f64>>, PrepError> {
    validate(target, qubits)?;
    let mut levels = Vec::with_capacity(qubits as usize);
    // squared norms of the blocks at the current depth, starting from leaves
    let mut weights: Vec<f64> = target.iter().map(|v| v * v).collect();
    for _ in 0..qubits {
        let half = weights.len() / 2;
        let mut angles = Vec::with_capacity(half);
        let mut parents = Vec::with_capacity(half);
        for p in 0..half {
            let (w0, w1) = (weights[2 * p], weights[2 * p + 1]);
            angles.push(2.0 * w1.sqrt().atan2(w0.sqrt()));
            parents.push(w0 + w1);
        }
        levels.push(angles);
        weights = parents;
    }
    // built leaf level first; leaf pairs differ in qubit 0, which is the last level
    levels.reverse();
    Ok(levels)
}

fn gray(i: usize) -> usize {
    i ^ (i >> 1)
}

fn walsh_hadamard(v: &mut [f64]) {
    let mut h = 1;
    while h < v.len() {
        for i in (0..v.len()).step_by(2 * h) {
            for j in i..i + h {
                let (a, b) = (v[j], v[j + h]);
                v[j] = a + b;
                v[j + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// Angles of the plain RY gates in emission order.
pub fn multiplexor_angles(thetas: &[f64]) -> Vec<f64> {
    let mut w = thetas.to_vec();
    walsh_hadamard(&mut w);
    let scale = 1.0 / thetas.len() as f64;
    (0..thetas.len()).map(|i| w[gray(i)] * scale).collect()
}

fn push_multiplexor(circuit: &mut Circuit, target: u32, thetas: &[f64]) -> Result<(), CircuitError> {
    use crate::circuit::Gate;

    let alphas = multiplexor_angles(thetas);
    if alphas[1..].iter().all(|a| a.abs() < ANGLE_EPS) {
        // every branch rotates by the same angle; the CX ladder cancels out
        if alphas[0].abs() >= ANGLE_EPS {
            circuit.push(Gate::Ry { target, angle: alphas[0] })?;
        }
        return Ok(());
    }
    let n = alphas.len();
    for (i, &alpha) in alphas.iter().enumerate() {
        if alpha.abs() >= ANGLE_EPS {
            circuit.push(Gate::Ry { target, angle: alpha })?;
        }
        let changed = gray(i) ^ gray((i + 1) % n);
        let control = target + 1 + changed.trailing_zeros();
        circuit.push(Gate::Cx { control, target })?;
    }
    Ok(())
}

/// Builds a circuit taking |0…0⟩ to `target`. Basis-state targets get X
/// gates only.
pub fn prepare_state(target: &[f64], qubits: u32) -> Result<Circuit, PrepError> {
    let levels = level_angles(target, qubits)?;
    let mut circuit = Circuit::new(qubits)?;

    let mut nonzero = target.iter().enumerate().filter(|(_, v)| **v > 0.0);
    if let (Some((index, _)), None) = (nonzero.next(), nonzero.next()) {
        for q in 0..qubits {
            if index >> q & 1 == 1 {
                circuit.x(q);
            }
        }
        return Ok(circuit);
    }

    for (level, thetas) in levels.iter().enumerate() {
        let target_qubit = qubits - 1 - level as u32;
        push_multiplexor(&mut circuit, target_qubit, thetas)?;
    }
    Ok(circuit)
}

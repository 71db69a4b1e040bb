//! Gate lists over {X, RY, CX} and their text dump.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Dense simulation cap.
pub const MAX_QUBITS: u32 = 20;

#[derive(Debug, Error, PartialEq)]
pub enum CircuitError {
    #[error("{0} qubits exceeds the limit of {MAX_QUBITS}")]
    TooManyQubits(u32),
    #[error("gate {gate} does not fit a {qubits}-qubit register")]
    BadGate { gate: Gate, qubits: u32 },
    #[error("circuit dump line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    X { target: u32 },
    Ry { target: u32, angle: f64 },
    Cx { control: u32, target: u32 },
}

impl Gate {
    fn fits(&self, qubits: u32) -> bool {
        match *self {
            Gate::X { target } => target < qubits,
            Gate::Ry { target, angle } => target < qubits && angle.is_finite(),
            Gate::Cx { control, target } => control < qubits && target < qubits && control != target,
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Gate::X { target } => write!(f, "x {target}"),
            Gate::Ry { target, angle } => write!(f, "ry {target} {angle:?}"),
            Gate::Cx { control, target } => write!(f, "cx {control} {target}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GateCount {
    pub x: usize,
    pub ry: usize,
    pub cx: usize,
}

/// Qubit 0 is the least significant bit of a measured value.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    qubits: u32,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(qubits: u32) -> Result<Self, CircuitError> {
        if qubits > MAX_QUBITS {
            return Err(CircuitError::TooManyQubits(qubits));
        }
        Ok(Circuit { qubits, gates: Vec::new() })
    }

    pub fn push(&mut self, gate: Gate) -> Result<(), CircuitError> {
        if !gate.fits(self.qubits) {
            return Err(CircuitError::BadGate { gate, qubits: self.qubits });
        }
        self.gates.push(gate);
        Ok(())
    }

    pub fn x(&mut self, target: u32) -> &mut Self {
        self.push(Gate::X { target }).expect("x gate in range");
        self
    }

    pub fn ry(&mut self, target: u32, angle: f64) -> &mut Self {
        self.push(Gate::Ry { target, angle }).expect("ry gate in range");
        self
    }

    pub fn cx(&mut self, control: u32, target: u32) -> &mut Self {
        self.push(Gate::Cx { control, target }).expect("cx gate in range");
        self
    }

    pub fn qubits(&self) -> u32 {
        self.qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn gate_count(&self) -> GateCount {
        self.gates.iter().fold(GateCount::default(), |mut n, g| {
            match g {
                Gate::X { .. } => n.x += 1,
                Gate::Ry { .. } => n.ry += 1,
                Gate::Cx { .. } => n.cx += 1,
            }
            n
        })
    }
}

/// `qubits <k>` followed by one gate per line.
impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "qubits {}", self.qubits)?;
        for g in &self.gates {
            writeln!(f, "{g}")?;
        }
        Ok(())
    }
}

impl FromStr for Circuit {
    type Err = CircuitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |line: usize, msg: &str| CircuitError::Parse { line, msg: msg.into() };
        let mut lines = s.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, head) = lines.next().ok_or_else(|| err(1, "empty dump"))?;
        let qubits = head
            .strip_prefix("qubits ")
            .and_then(|k| k.trim().parse().ok())
            .ok_or_else(|| err(1, "expected `qubits <k>`"))?;
        let mut c = Circuit::new(qubits)?;
        for (i, line) in lines {
            let lineno = i + 1;
            let parts: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| s.parse::<u32>().map_err(|_| err(lineno, "bad qubit index"));
            let gate = match parts.as_slice() {
                ["x", t] => Gate::X { target: num(t)? },
                ["ry", t, a] => Gate::Ry {
                    target: num(t)?,
                    angle: a.parse().map_err(|_| err(lineno, "bad angle"))?,
                },
                ["cx", c, t] => Gate::Cx { control: num(c)?, target: num(t)? },
                _ => return Err(err(lineno, "unknown gate")),
            };
            c.push(gate)?;
        }
        Ok(c)
    }
}

//! Runtime dispatch over the two simulation backends.

use serde::{Deserialize, Serialize};

use crate::clifford::Gate;
use crate::dense::{Angle, CMatrix, DenseGate, InputLabel, StateVector};
use crate::error::{Error, Result};
use crate::pauli::PauliString;
use crate::rng::Randomness;
use crate::stabilizer::StabilizerState;

/// Backend selection for a session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    /// Stabilizer unless the session needs non-stabilizer states or unitaries.
    #[default]
    Auto,
    #[serde(alias = "stab")]
    Stabilizer,
    Dense,
}

/// Quantum state shared by client and server during one session.
#[derive(Debug, Clone, PartialEq)]
pub enum Register {
    Stabilizer(StabilizerState),
    Dense(StateVector),
}

impl Register {
    pub fn empty(dense: bool) -> Result<Self> {
        Ok(if dense {
            Register::Dense(StateVector::zero(0)?)
        } else {
            Register::Stabilizer(StabilizerState::prepare_product(&[]))
        })
    }

    pub fn k(&self) -> usize {
        match self {
            Register::Stabilizer(s) => s.k(),
            Register::Dense(s) => s.k(),
        }
    }

    pub fn is_dense(&self) -> bool {
        matches!(self, Register::Dense(_))
    }

    pub fn as_dense(&self) -> Option<&StateVector> {
        match self {
            Register::Dense(s) => Some(s),
            Register::Stabilizer(_) => None,
        }
    }

    pub fn as_stabilizer(&self) -> Option<&StabilizerState> {
        match self {
            Register::Stabilizer(s) => Some(s),
            Register::Dense(_) => None,
        }
    }

    /// Appends a fresh qubit as the highest backend wire.
    pub fn append(&mut self, label: InputLabel) -> Result<usize> {
        match self {
            Register::Stabilizer(s) => {
                let l = label
                    .stabilizer()
                    .ok_or_else(|| Error::Unsupported(format!("preparing {label} on the stabilizer backend")))?;
                s.append_qubit(l);
            }
            Register::Dense(s) => s.append_qubit(label)?,
        }
        Ok(self.k() - 1)
    }

    pub fn apply_gate(&mut self, g: &Gate) -> Result<()> {
        match self {
            Register::Stabilizer(s) => s.apply_gate(g),
            Register::Dense(s) => s.apply_clifford(g),
        }
    }

    /// `Z(θ)` or `Z†(θ)`; a power of `S`, so both backends support it.
    pub fn apply_zrot(&mut self, q: usize, angle: Angle, dagger: bool) -> Result<()> {
        match self {
            Register::Stabilizer(s) => {
                let a = if dagger { angle.neg() } else { angle };
                for _ in 0..a.quarter_turns() {
                    s.apply_gate(&Gate::S { q })?;
                }
                Ok(())
            }
            Register::Dense(s) => s.apply_gate(&DenseGate::Zrot { q, angle, dagger }),
        }
    }

    /// Applies `p` (on `wires.len()` qubits) to the listed backend wires.
    pub fn apply_pauli_on(&mut self, wires: &[usize], p: &PauliString) -> Result<()> {
        let full = p.embed(self.k(), wires)?;
        match self {
            Register::Stabilizer(s) => s.apply_pauli(&full),
            Register::Dense(s) => s.apply_pauli(&full),
        }
    }

    pub fn apply_unitary(&mut self, wires: &[usize], u: &CMatrix) -> Result<()> {
        match self {
            Register::Dense(s) => s.apply_unitary(wires, u),
            Register::Stabilizer(_) => Err(Error::Unsupported("arbitrary unitaries on the stabilizer backend".into())),
        }
    }

    pub fn measure(&mut self, q: usize, rng: &mut dyn Randomness) -> Result<bool> {
        match self {
            Register::Stabilizer(s) => Ok(s.measure_z(q, rng)?.outcome),
            Register::Dense(s) => s.measure(q, rng),
        }
    }
}

//! Rewrites a Clifford+T circuit so every non-Pauli phase becomes a T on the
//! last wire: `S = TT` and `H = H·TT·H·TT·H·TT·H` up to global phase.

use crate::clifford::{CliffordCircuit, CliffordStructure, Gate};
use crate::error::{check_index, Result};

/// Gate of the source circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompileGate {
    Clifford(Gate),
    T(usize),
}

enum Step {
    Clifford(Gate),
    T(usize),
}

/// Literal rewrite of `circuit` on `n` wires into a structure whose T gates
/// all act on wire `n` (0-based `n - 1`), routed there by SWAP conjugation.
pub fn broadbent_compile(n: usize, circuit: &[CompileGate]) -> Result<CliffordStructure> {
    let mut steps = Vec::new();
    for g in circuit {
        match *g {
            CompileGate::T(q) => {
                check_index(q, n)?;
                steps.push(Step::T(q));
            }
            CompileGate::Clifford(gate) => {
                gate.validate(n)?;
                match gate {
                    Gate::S { q } => steps.extend([Step::T(q), Step::T(q)]),
                    Gate::H { q } => {
                        steps.push(Step::Clifford(gate));
                        for _ in 0..3 {
                            steps.extend([Step::T(q), Step::T(q), Step::Clifford(Gate::H { q })]);
                        }
                    }
                    other => steps.push(Step::Clifford(other)),
                }
            }
        }
    }
    let last = n - 1;
    let mut layers = Vec::new();
    let mut current = CliffordCircuit::new(n);
    for step in steps {
        match step {
            Step::Clifford(g) => current.push(g)?,
            Step::T(q) if q == last => layers.push(std::mem::replace(&mut current, CliffordCircuit::new(n))),
            Step::T(q) => {
                current.push(Gate::Swap { a: q, b: last })?;
                layers.push(std::mem::replace(&mut current, CliffordCircuit::new(n)));
                current.push(Gate::Swap { a: q, b: last })?;
            }
        }
    }
    layers.push(current);
    CliffordStructure::new(n, layers)
}

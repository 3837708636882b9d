//! Stabilizer-state simulation with destabilizers.
//!
//! Rows are exact-phase Pauli strings. Stabilizer rows stay Hermitian with a
//! sign; destabilizer signs carry no meaning and are kept normalized.

use crate::clifford::{CliffordCircuit, CliffordTableau, Gate};
use crate::error::{check_dim, check_index, Error, Result};
use crate::pauli::{PauliString, SinglePauliLabel};
use crate::rng::Randomness;

/// Pure stabilizer state on `k` qubits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StabilizerState {
    stabilizers: Vec<PauliString>,
    destabilizers: Vec<PauliString>,
}

/// Outcome of a Z-basis measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Measurement {
    pub outcome: bool,
    pub deterministic: bool,
}

impl StabilizerState {
    /// `|0…0⟩` on `k` qubits.
    pub fn zero(k: usize) -> Self {
        Self::prepare_product(&vec![SinglePauliLabel::PLUS_Z; k])
    }

    /// Product of single-qubit stabilizer states.
    pub fn prepare_product(labels: &[SinglePauliLabel]) -> Self {
        let k = labels.len();
        let mut stabilizers = Vec::with_capacity(k);
        let mut destabilizers = Vec::with_capacity(k);
        for (j, l) in labels.iter().enumerate() {
            stabilizers.push(l.stabilizer(k, j).expect("in range"));
            let partner = match l.axis {
                crate::pauli::Axis::Z => PauliString::x_on(k, &[j]),
                _ => PauliString::z_on(k, &[j]),
            };
            destabilizers.push(partner.expect("in range"));
        }
        Self { stabilizers, destabilizers }
    }

    /// Builds a state from explicit generators, checking every invariant.
    pub fn from_generators(stabilizers: Vec<PauliString>, destabilizers: Vec<PauliString>) -> Result<Self> {
        check_dim(stabilizers.len(), destabilizers.len())?;
        let st = Self { stabilizers, destabilizers };
        st.check_invariants()?;
        Ok(st)
    }

    pub fn k(&self) -> usize {
        self.stabilizers.len()
    }

    pub fn stabilizers(&self) -> &[PauliString] {
        &self.stabilizers
    }

    pub fn destabilizers(&self) -> &[PauliString] {
        &self.destabilizers
    }

    /// Commutation structure, Hermiticity and dimension checks.
    pub fn check_invariants(&self) -> Result<()> {
        let k = self.k();
        for p in self.stabilizers.iter().chain(&self.destabilizers) {
            check_dim(k, p.k())?;
        }
        for (i, s) in self.stabilizers.iter().enumerate() {
            if !s.is_hermitian() {
                return Err(Error::Contract(format!("stabilizer generator {s} has an imaginary sign")));
            }
            for (j, t) in self.stabilizers.iter().enumerate().skip(i + 1) {
                if s.anticommutes_unchecked(t) {
                    return Err(Error::Contract(format!("stabilizers {i} and {j} anticommute")));
                }
            }
            for (j, d) in self.destabilizers.iter().enumerate() {
                if s.anticommutes_unchecked(d) != (i == j) {
                    return Err(Error::Contract(format!("destabilizer {j} pairs incorrectly with stabilizer {i}")));
                }
            }
        }
        for (i, d) in self.destabilizers.iter().enumerate() {
            for (j, e) in self.destabilizers.iter().enumerate().skip(i + 1) {
                if d.anticommutes_unchecked(e) {
                    return Err(Error::Contract(format!("destabilizers {i} and {j} anticommute")));
                }
            }
        }
        Ok(())
    }

    pub fn apply_gate(&mut self, g: &Gate) -> Result<()> {
        g.validate(self.k())?;
        for p in self.stabilizers.iter_mut().chain(self.destabilizers.iter_mut()) {
            p.conjugate_by_gate(g);
        }
        Ok(())
    }

    pub fn apply_circuit(&mut self, c: &CliffordCircuit) -> Result<()> {
        check_dim(self.k(), c.k())?;
        for g in c.gates() {
            self.apply_gate(g)?;
        }
        Ok(())
    }

    pub fn apply_tableau(&mut self, tab: &CliffordTableau) -> Result<()> {
        check_dim(self.k(), tab.k())?;
        for p in self.stabilizers.iter_mut().chain(self.destabilizers.iter_mut()) {
            *p = tab.conjugate_pauli(p)?;
        }
        for d in &mut self.destabilizers {
            d.normalize_sign();
        }
        Ok(())
    }

    /// `P ρ P†`: flips the sign of every generator that anticommutes with `p`.
    pub fn apply_pauli(&mut self, p: &PauliString) -> Result<()> {
        check_dim(self.k(), p.k())?;
        for s in &mut self.stabilizers {
            if s.anticommutes_unchecked(p) {
                s.negate();
            }
        }
        Ok(())
    }

    /// Appends a fresh qubit in the given stabilizer state as the last wire.
    pub fn append_qubit(&mut self, label: SinglePauliLabel) {
        let k = self.k() + 1;
        for p in self.stabilizers.iter_mut().chain(self.destabilizers.iter_mut()) {
            *p = p.extended(k).expect("wider");
        }
        let fresh = StabilizerState::prepare_product(&[label]);
        let wire = [k - 1];
        self.stabilizers.push(fresh.stabilizers[0].embed(k, &wire).expect("in range"));
        self.destabilizers.push(fresh.destabilizers[0].embed(k, &wire).expect("in range"));
    }

    /// Sign of `±Z_q` if it lies in the stabilizer group.
    pub fn deterministic_z(&self, q: usize) -> Option<bool> {
        if self.stabilizers.iter().any(|s| s.x_bit(q)) {
            return None;
        }
        let k = self.k();
        let mut acc = PauliString::identity(k);
        for (d, s) in self.destabilizers.iter().zip(&self.stabilizers) {
            if d.x_bit(q) {
                acc.mul_assign_unchecked(s);
            }
        }
        debug_assert!(acc.same_bits(&PauliString::z_on(k, &[q]).expect("in range")));
        Some(acc.is_negative())
    }

    /// Z-basis measurement of qubit `q` with collapse.
    pub fn measure_z(&mut self, q: usize, rng: &mut dyn Randomness) -> Result<Measurement> {
        check_index(q, self.k())?;
        if let Some(outcome) = self.deterministic_z(q) {
            return Ok(Measurement { outcome, deterministic: true });
        }
        let k = self.k();
        let p = self.stabilizers.iter().position(|s| s.x_bit(q)).expect("random branch");
        let pivot = self.stabilizers[p].clone();
        for i in 0..k {
            if i != p && self.stabilizers[i].x_bit(q) {
                self.stabilizers[i].mul_assign_unchecked(&pivot);
            }
            if i != p && self.destabilizers[i].x_bit(q) {
                self.destabilizers[i].mul_assign_unchecked(&pivot);
                self.destabilizers[i].normalize_sign();
            }
        }
        let outcome = rng.outcome(0.5);
        let mut z = PauliString::z_on(k, &[q]).expect("in range");
        if outcome {
            z.negate();
        }
        self.destabilizers[p] = pivot;
        self.stabilizers[p] = z;
        Ok(Measurement { outcome, deterministic: false })
    }

    /// True iff `p`, with its sign, belongs to the stabilizer group.
    pub fn is_stabilized_by(&self, p: &PauliString) -> Result<bool> {
        check_dim(self.k(), p.k())?;
        if self.stabilizers.iter().any(|s| s.anticommutes_unchecked(p)) {
            return Ok(false);
        }
        let mut acc = PauliString::identity(self.k());
        for (d, s) in self.destabilizers.iter().zip(&self.stabilizers) {
            if d.anticommutes_unchecked(p) {
                acc.mul_assign_unchecked(s);
            }
        }
        Ok(acc.same_bits(p) && acc.phase() == p.phase())
    }
}

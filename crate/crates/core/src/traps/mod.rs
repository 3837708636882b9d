//! Traps: back-propagated output parities, product-state inputs that fix
//! them, detection analysis, compatibility and merging.

mod compile;
mod merge;

use std::collections::BTreeSet;
use std::fmt;

use rayon::prelude::*;

use crate::clifford::{assemble_g, CliffordStructure};
use crate::dense::InputLabel;
use crate::error::{check_dim, check_index, Error, Result};
use crate::pauli::{enumerate_paulis, pauli_from_index, Factor, PauliString, SinglePauliLabel, ENUMERATION_CAP};
use crate::protocol::{InjectionChoice, MbdqcClient};
use crate::rng::Randomness;
use crate::stabilizer::StabilizerState;

pub use compile::{broadbent_compile, CompileGate};
pub use merge::{merge_traps, solve_joint_input, CompatibilityGraph, MergeStrategy, TrapGroup, EXACT_MERGE_CAP};

/// A set of output indices whose parity is fixed to 0 by its input.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Trap {
    /// Output indices, 0-based and sorted.
    pub q: Vec<usize>,
    /// `G† Z_Q G` with sign.
    pub stabilizer: PauliString,
    /// Input preparations: `n` register labels then `t` injected labels.
    pub input_labels: Vec<SinglePauliLabel>,
}

impl Trap {
    /// Trap on `q` for `structure`.
    pub fn new(structure: &CliffordStructure, q: &[usize]) -> Result<Self> {
        let stabilizer = backpropagate(structure, q)?;
        let input_labels = synthesize_input(&stabilizer)?;
        Ok(Self { q: normalize_q(q, structure.width())?, stabilizer, input_labels })
    }

    /// Trap with a given stabilizer; inputs come from [`synthesize_input`].
    pub fn from_stabilizer(q: &[usize], stabilizer: PauliString) -> Result<Self> {
        let input_labels = synthesize_input(&stabilizer)?;
        Ok(Self { q: normalize_q(q, stabilizer.k())?, stabilizer, input_labels })
    }

    pub fn k(&self) -> usize {
        self.stabilizer.k()
    }

    /// `Z_Q` on the `n + t` outputs.
    pub fn z_q(&self) -> PauliString {
        PauliString::z_on(self.k(), &self.q).expect("indices validated")
    }

    /// Parity of `bits` over `Q`.
    pub fn parity(&self, bits: &[bool]) -> bool {
        parity(&self.q, bits)
    }

    /// Magic-free client that runs this trap on `structure`.
    pub fn client(&self, structure: &CliffordStructure) -> Result<MbdqcClient> {
        magic_free_client(structure, &self.input_labels)
    }

    /// Checks that the product input is stabilized by the stabilizer.
    pub fn check_invariants(&self) -> Result<()> {
        check_dim(self.k(), self.input_labels.len())?;
        let st = StabilizerState::prepare_product(&self.input_labels);
        if !st.is_stabilized_by(&self.stabilizer)? {
            return Err(Error::Contract(format!("trap input does not satisfy {}", self.stabilizer)));
        }
        Ok(())
    }
}

impl fmt::Display for Trap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let q: Vec<String> = self.q.iter().map(|i| (i + 1).to_string()).collect();
        let labels: Vec<String> = self.input_labels.iter().map(ToString::to_string).collect();
        write!(f, "Q={{{}}} S={} input=[{}]", q.join(","), self.stabilizer, labels.join(","))
    }
}

fn normalize_q(q: &[usize], k: usize) -> Result<Vec<usize>> {
    if q.is_empty() {
        return Err(Error::InvalidParams("trap index set Q is empty".into()));
    }
    let set: BTreeSet<usize> = q.iter().copied().collect();
    for &i in &set {
        check_index(i, k)?;
    }
    Ok(set.into_iter().collect())
}

pub(crate) fn parity(q: &[usize], bits: &[bool]) -> bool {
    q.iter().fold(false, |acc, &i| acc ^ bits[i])
}

/// Magic-free client with product input `labels` (`n` register then `t` injected).
pub fn magic_free_client(structure: &CliffordStructure, labels: &[SinglePauliLabel]) -> Result<MbdqcClient> {
    check_dim(structure.width(), labels.len())?;
    let n = structure.n();
    let rho = labels[..n].iter().map(|&l| InputLabel::Stabilizer(l)).collect();
    let inj = labels[n..].iter().map(|&l| InjectionChoice::Stabilizer(l)).collect();
    MbdqcClient::new(structure.clone(), rho, inj)
}

/// `Ŝ_Q = G† Z_Q G` for the total magic-free Clifford `G` of `structure`.
pub fn backpropagate(structure: &CliffordStructure, q: &[usize]) -> Result<PauliString> {
    let k = structure.width();
    let q = normalize_q(q, k)?;
    assemble_g(structure).conjugate_pauli_inverse(&PauliString::z_on(k, &q)?)
}

/// Product of single-qubit stabilizer states fixed by `stab`. Identity
/// factors get `+Z`; a minus sign lands on the last non-identity factor.
pub fn synthesize_input(stab: &PauliString) -> Result<Vec<SinglePauliLabel>> {
    if stab.is_identity_up_to_phase() {
        return Err(Error::InvalidParams("cannot synthesize an input for a multiple of the identity".into()));
    }
    if !stab.is_hermitian() {
        return Err(Error::InvalidParams(format!("{stab} is not Hermitian")));
    }
    let mut labels: Vec<SinglePauliLabel> = stab
        .factors()
        .into_iter()
        .map(|f| match f {
            Factor::I => SinglePauliLabel::PLUS_Z,
            other => SinglePauliLabel::new(axis_of(other), false),
        })
        .collect();
    if stab.is_negative() {
        let last = *stab.support().last().expect("non-identity");
        labels[last].negative = true;
    }
    Ok(labels)
}

pub(crate) fn axis_of(f: Factor) -> crate::pauli::Axis {
    match f {
        Factor::X => crate::pauli::Axis::X,
        Factor::Y => crate::pauli::Axis::Y,
        _ => crate::pauli::Axis::Z,
    }
}

/// True when `e` flips the parity over `Q`: an odd number of X or Y factors on `Q`.
pub fn detects(trap: &Trap, e: &PauliString) -> Result<bool> {
    check_dim(trap.k(), e.k())?;
    Ok(detects_q(&trap.q, e))
}

fn detects_q(q: &[usize], e: &PauliString) -> bool {
    q.iter().filter(|&&i| e.x_bit(i)).count() % 2 == 1
}

/// Outcome of one stabilizer-backend trap run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrapOutcome {
    pub parity: bool,
    pub outcomes: Vec<bool>,
}

/// Runs `G` on the trap input, applies `deviation` before the measurements
/// and returns the parity over `Q`.
pub fn simulate_trap(
    structure: &CliffordStructure,
    trap: &Trap,
    deviation: Option<&PauliString>,
    rng: &mut dyn Randomness,
) -> Result<TrapOutcome> {
    check_dim(structure.width(), trap.k())?;
    let mut st = StabilizerState::prepare_product(&trap.input_labels);
    st.apply_circuit(&structure.flatten())?;
    if let Some(e) = deviation {
        st.apply_pauli(e)?;
    }
    let outcomes: Vec<bool> = (0..trap.k()).map(|q| Ok(st.measure_z(q, rng)?.outcome)).collect::<Result<_>>()?;
    Ok(TrapOutcome { parity: trap.parity(&outcomes), outcomes })
}

/// Traps of one structure.
#[derive(Debug, Clone, PartialEq)]
pub struct TrapFamily {
    pub structure: CliffordStructure,
    pub traps: Vec<Trap>,
}

impl TrapFamily {
    /// Family from explicit index sets.
    pub fn from_sets(structure: &CliffordStructure, sets: &[Vec<usize>]) -> Result<Self> {
        let traps = sets.iter().map(|q| Trap::new(structure, q)).collect::<Result<_>>()?;
        Ok(Self { structure: structure.clone(), traps })
    }

    pub fn len(&self) -> usize {
        self.traps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traps.is_empty()
    }

    /// One test configuration per trap.
    pub fn singleton_groups(&self) -> Vec<TrapGroup> {
        self.traps.iter().enumerate().map(|(i, t)| TrapGroup::single(i, t)).collect()
    }
}

/// One trap per output index.
pub fn singleton_family(structure: &CliffordStructure) -> Result<TrapFamily> {
    let sets: Vec<Vec<usize>> = (0..structure.width()).map(|q| vec![q]).collect();
    TrapFamily::from_sets(structure, &sets)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoverageMode {
    /// Enumerates every harmful Pauli (width at most the enumeration cap).
    Exhaustive,
    /// Holds structurally when every singleton index set is present.
    SingletonProof,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coverage {
    pub covered: bool,
    /// First harmful deviation no trap detects.
    pub witness: Option<PauliString>,
}

/// Whether every harmful Pauli is detected by at least one trap.
pub fn covers_all_harmful(family: &TrapFamily, mode: CoverageMode) -> Result<Coverage> {
    let k = family.structure.width();
    match mode {
        CoverageMode::SingletonProof => {
            let singles: BTreeSet<usize> =
                family.traps.iter().filter(|t| t.q.len() == 1).map(|t| t.q[0]).collect();
            Ok(Coverage { covered: singles.len() == k, witness: None })
        }
        CoverageMode::Exhaustive => {
            if k > ENUMERATION_CAP {
                return Err(Error::Capacity { what: "coverage enumeration qubits", got: k, cap: ENUMERATION_CAP });
            }
            let witness = (1..1usize << (2 * k)).into_par_iter().find_first(|&m| {
                let e = pauli_from_index(k, m);
                e.is_harmful() && !family.traps.iter().any(|t| detects_q(&t.q, &e))
            });
            let witness = witness.map(|m| pauli_from_index(k, m));
            Ok(Coverage { covered: witness.is_none(), witness })
        }
    }
}

/// Deviations the family misses, in enumeration order.
pub fn undetected_harmful(family: &TrapFamily) -> Result<Vec<PauliString>> {
    Ok(enumerate_paulis(family.structure.width(), false)?
        .into_iter()
        .filter(|e| e.is_harmful() && !family.traps.iter().any(|t| detects_q(&t.q, e)))
        .collect())
}

/// Per-index commutation of two stabilizers.
pub fn compatible_stabilizers(a: &PauliString, b: &PauliString) -> Result<bool> {
    check_dim(a.k(), b.k())?;
    Ok((0..a.k()).all(|i| a.factor_at(i).expect("in range").commutes_with(b.factor_at(i).expect("in range"))))
}

/// Traps can share a run when their stabilizers commute on every index.
pub fn compatible(t1: &Trap, t2: &Trap) -> Result<bool> {
    compatible_stabilizers(&t1.stabilizer, &t2.stabilizer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Sampled;

    #[test]
    fn identity_structure_backpropagates_to_z() {
        let s = CliffordStructure::identity(1, 0);
        assert_eq!(backpropagate(&s, &[0]).unwrap().to_string(), "+Z");
    }

    #[test]
    fn injected_output_maps_to_ancilla() {
        let s = CliffordStructure::identity(1, 1);
        assert_eq!(backpropagate(&s, &[0]).unwrap().to_string(), "+IZ");
    }

    #[test]
    fn empty_q_is_rejected() {
        let s = CliffordStructure::identity(1, 0);
        assert!(backpropagate(&s, &[]).is_err());
    }

    #[test]
    fn sign_absorbed_by_last_factor() {
        let labels = synthesize_input(&"-X".parse().unwrap()).unwrap();
        assert_eq!(labels, vec![SinglePauliLabel::MINUS_X]);
        let labels = synthesize_input(&"-ZXY".parse().unwrap()).unwrap();
        assert_eq!(labels, vec![SinglePauliLabel::PLUS_Z, SinglePauliLabel::PLUS_X, SinglePauliLabel::MINUS_Y]);
        assert!(synthesize_input(&"-II".parse().unwrap()).is_err());
    }

    #[test]
    fn even_overlap_is_a_blind_spot() {
        let s = CliffordStructure::identity(2, 0);
        let fam = TrapFamily::from_sets(&s, &[vec![0, 1]]).unwrap();
        let trap = &fam.traps[0];
        assert!(!detects(trap, &"+XX".parse().unwrap()).unwrap());
        assert!(detects(trap, &"+XI".parse().unwrap()).unwrap());
        let out = simulate_trap(&s, trap, Some(&"+XX".parse().unwrap()), &mut Sampled::from_seed(1)).unwrap();
        assert!(!out.parity);
        let cov = covers_all_harmful(&fam, CoverageMode::Exhaustive).unwrap();
        assert!(!cov.covered);
        assert_eq!(cov.witness.unwrap().to_string(), "+XX");
    }

    #[test]
    fn compatibility_is_per_index() {
        let p = |s: &str| s.parse::<PauliString>().unwrap();
        assert!(compatible_stabilizers(&p("+XI"), &p("+IZ")).unwrap());
        assert!(!compatible_stabilizers(&p("+XX"), &p("+ZZ")).unwrap());
        assert!(p("+XX").commutes(&p("+ZZ")).unwrap());
        assert!(compatible_stabilizers(&p("+XX"), &p("+XI")).unwrap());
    }
}

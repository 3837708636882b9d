#![allow(dead_code)]

use mbdqc::clifford::{CliffordCircuit, CliffordStructure, Gate};
use mbdqc::dense::{pauli_matrix, CMatrix, InputLabel, StateVector};
use mbdqc::pauli::SinglePauliLabel;
use mbdqc::protocol::InjectionChoice;
use mbdqc::rng::enumerate_branches;
use mbdqc::stabilizer::StabilizerState;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_gate(k: usize, rng: &mut dyn RngCore) -> Gate {
    let q = rng.gen_range(0..k);
    let pick = if k > 1 { rng.gen_range(0..7) } else { rng.gen_range(0..5) };
    match pick {
        0 => Gate::H { q },
        1 => Gate::S { q },
        2 => Gate::X { q },
        3 => Gate::Y { q },
        4 => Gate::Z { q },
        5 | 6 => {
            let mut other = rng.gen_range(0..k - 1);
            if other >= q {
                other += 1;
            }
            if pick == 5 {
                Gate::Cnot { control: q, target: other }
            } else {
                Gate::Swap { a: q, b: other }
            }
        }
        _ => unreachable!(),
    }
}

pub fn random_circuit(k: usize, len: usize, rng: &mut dyn RngCore) -> CliffordCircuit {
    CliffordCircuit::from_gates(k, (0..len).map(|_| random_gate(k, rng)).collect()).unwrap()
}

pub fn random_structure(n: usize, t: usize, len: usize, rng: &mut dyn RngCore) -> CliffordStructure {
    CliffordStructure::new(n, (0..=t).map(|_| random_circuit(n, len, rng)).collect()).unwrap()
}

pub fn random_label(rng: &mut dyn RngCore) -> SinglePauliLabel {
    SinglePauliLabel::ALL[rng.gen_range(0..6)]
}

pub fn random_stabilizer_inputs(n: usize, rng: &mut dyn RngCore) -> Vec<InputLabel> {
    (0..n).map(|_| InputLabel::Stabilizer(random_label(rng))).collect()
}

pub fn random_injections(t: usize, rng: &mut dyn RngCore) -> Vec<InjectionChoice> {
    (0..t).map(|_| InjectionChoice::Stabilizer(random_label(rng))).collect()
}

pub fn lbl(s: &str) -> InputLabel {
    s.parse().unwrap()
}

pub fn circuit(k: usize, gates: Vec<Gate>) -> CliffordCircuit {
    CliffordCircuit::from_gates(k, gates).unwrap()
}

/// `Π (I + S_j) / 2` over the stabilizer generators.
pub fn stabilizer_density(st: &StabilizerState) -> CMatrix {
    let d = 1usize << st.k();
    let mut rho = CMatrix::identity(d, d);
    for s in st.stabilizers() {
        rho = &rho * (CMatrix::identity(d, d) + pauli_matrix(s)) * mbdqc::dense::C64::new(0.5, 0.0);
    }
    rho
}

/// Compares one random Clifford instance on both backends: full density
/// matrix, exact outcome distribution and determinism flags.
pub fn cross_backend_case(k: usize, len: usize, rng: &mut dyn RngCore) -> Result<(), String> {
    let labels: Vec<SinglePauliLabel> = (0..k).map(|_| random_label(rng)).collect();
    let c = random_circuit(k, len, rng);
    let mut st = StabilizerState::prepare_product(&labels);
    st.apply_circuit(&c).map_err(|e| e.to_string())?;
    st.check_invariants().map_err(|e| e.to_string())?;
    let inputs: Vec<InputLabel> = labels.iter().map(|&l| InputLabel::Stabilizer(l)).collect();
    let mut psi = StateVector::prepare(&inputs).map_err(|e| e.to_string())?;
    psi.apply_circuit(&c).map_err(|e| e.to_string())?;

    let dense_rho = psi.density_matrix();
    let gap = (dense_rho.matrix() - stabilizer_density(&st)).norm();
    if gap > 1e-10 {
        return Err(format!("density mismatch {gap} for {labels:?} {c:?}"));
    }
    let branches = enumerate_branches(&[], |r| {
        let mut s = st.clone();
        (0..k).map(|q| Ok(s.measure_z(q, r)?.outcome)).collect::<mbdqc::Result<Vec<bool>>>()
    })
    .map_err(|e| e.to_string())?;
    let mut stab_dist = vec![0.0; 1 << k];
    for (w, bits) in branches {
        let idx = bits.iter().enumerate().fold(0usize, |acc, (q, &b)| acc | (usize::from(b) << q));
        stab_dist[idx] += w;
    }
    let dense_dist = psi.z_distribution();
    for (a, b) in stab_dist.iter().zip(&dense_dist) {
        if (a - b).abs() > 1e-12 {
            return Err(format!("distribution mismatch {stab_dist:?} vs {dense_dist:?}"));
        }
    }
    for q in 0..k {
        let det = st.deterministic_z(q);
        let p1 = psi.prob_one(q).map_err(|e| e.to_string())?;
        let dense_det = if p1 < 1e-12 {
            Some(false)
        } else if p1 > 1.0 - 1e-12 {
            Some(true)
        } else {
            None
        };
        if det != dense_det {
            return Err(format!("determinism mismatch on qubit {q}: {det:?} vs p1 = {p1}"));
        }
    }
    Ok(())
}

mod common;

use std::collections::HashSet;

use common::*;
use mbdqc::clifford::*;
use mbdqc::dense::{circuit_unitary, pauli_matrix, CMatrix};
use mbdqc::pauli::*;
use proptest::prelude::*;
use rand::Rng;

fn p(s: &str) -> PauliString {
    s.parse().unwrap()
}

fn close(a: &CMatrix, b: &CMatrix) -> bool {
    (a - b).norm() < 1e-10
}

fn random_pauli(k: usize, rng: &mut impl Rng) -> PauliString {
    pauli_from_index(k, rng.gen_range(0..1usize << (2 * k))).with_phase(rng.gen_range(0..4))
}

#[test]
fn multiply_examples_match_matrices() {
    assert_eq!(PauliString::identity(2).multiply(&p("+XZ")).unwrap(), p("+XZ"));
    let xz = p("+X").multiply(&p("+Z")).unwrap();
    assert!(close(&pauli_matrix(&xz), &(pauli_matrix(&p("+X")) * pauli_matrix(&p("+Z")))));
    assert_eq!(xz.to_string(), "-iY");
    let sq = p("+XZ").multiply(&p("+XZ")).unwrap();
    assert!(sq.is_identity_up_to_phase());
    assert_eq!(sq.phase(), 0);
    assert!(close(&pauli_matrix(&sq), &CMatrix::identity(4, 4)));
}

#[test]
fn commutation_examples() {
    assert!(p("+Z").commutes(&p("+Z")).unwrap());
    assert!(!p("+Z").commutes(&p("+X")).unwrap());
    assert!(p("+XX").commutes(&p("+ZZ")).unwrap());
}

#[test]
fn harmfulness_and_factors() {
    assert!(!p("+ZZ").is_harmful());
    assert!(p("+XI").is_harmful());
    assert!(!PauliString::identity(3).is_harmful());
    assert_eq!(p("+XZ").factor_at(0).unwrap(), Factor::X);
    assert_eq!(p("+XZ").factor_at(1).unwrap(), Factor::Z);
    assert_eq!(p("+IYI").factor_at(2).unwrap(), Factor::I);
    assert!(p("+XZ").factor_at(2).is_err());
}

#[test]
fn enumeration_order_and_counts() {
    let one: Vec<String> = enumerate_paulis(1, true).unwrap().iter().map(|q| q.factor_string()).collect();
    assert_eq!(one, ["I", "X", "Z", "Y"]);
    let two = enumerate_paulis(2, true).unwrap();
    assert_eq!(two.len(), 16);
    assert_eq!(two.iter().map(|q| q.factor_string()).collect::<HashSet<_>>().len(), 16);
    let three = enumerate_paulis(3, true).unwrap();
    assert_eq!(three.len(), 64);
    // Independent per-qubit product construction.
    let mut rebuilt = HashSet::new();
    for a in ["I", "X", "Z", "Y"] {
        for b in ["I", "X", "Z", "Y"] {
            for c in ["I", "X", "Z", "Y"] {
                rebuilt.insert(format!("{a}{b}{c}"));
            }
        }
    }
    for q in &three {
        let s = q.factor_string();
        assert!(rebuilt.contains(&s));
        assert_eq!(q.is_harmful(), s.contains('X') || s.contains('Y'));
    }
    assert!(enumerate_paulis(11, false).is_err());
}

#[test]
fn commutation_agrees_with_matrices_exhaustively() {
    for k in 1..=2 {
        let all = enumerate_paulis(k, true).unwrap();
        for a in &all {
            for b in &all {
                let (ma, mb) = (pauli_matrix(a), pauli_matrix(b));
                let zero = (&ma * &mb - &mb * &ma).norm() < 1e-12;
                assert_eq!(a.commutes(b).unwrap(), zero, "{a} {b}");
            }
        }
    }
    let mut rng = seeded(1);
    for _ in 0..1000 {
        let k = rng.gen_range(1..=6);
        let (a, b) = (random_pauli(k, &mut rng), random_pauli(k, &mut rng));
        let (ma, mb) = (pauli_matrix(&a), pauli_matrix(&b));
        assert_eq!(a.commutes(&b).unwrap(), (&ma * &mb - &mb * &ma).norm() < 1e-9);
    }
}

#[test]
fn tableau_examples() {
    let id = tableau_from_circuit(&CliffordCircuit::new(2));
    assert_eq!(id, CliffordTableau::identity(2));
    let h = tableau_from_circuit(&circuit(1, vec![Gate::H { q: 0 }]));
    assert_eq!(h.x_image(0).to_string(), "+Z");
    assert_eq!(h.z_image(0).to_string(), "+X");
    let cx = tableau_from_circuit(&circuit(2, vec![Gate::Cnot { control: 1, target: 0 }]));
    assert_eq!(cx.x_image(1).to_string(), "+XX");
    assert_eq!(cx.z_image(0).to_string(), "+ZZ");
    assert_eq!(conjugate_pauli(&h, &p("+X")).unwrap().to_string(), "+Z");
}

#[test]
fn conjugation_matches_dense_oracle() {
    let mut rng = seeded(2);
    for _ in 0..100 {
        let c = random_circuit(3, 10, &mut rng);
        let tab = tableau_from_circuit(&c);
        tab.check_symplectic().unwrap();
        let u = circuit_unitary(&c).unwrap();
        let q = random_pauli(3, &mut rng);
        let image = tab.conjugate_pauli(&q).unwrap();
        assert!(close(&pauli_matrix(&image), &(&u * pauli_matrix(&q) * u.adjoint())), "{c:?} {q}");
        let pre = tab.conjugate_pauli_inverse(&q).unwrap();
        assert!(close(&pauli_matrix(&pre), &(u.adjoint() * pauli_matrix(&q) * &u)));
    }
}

#[test]
fn key_update_examples() {
    let h = tableau_from_circuit(&circuit(1, vec![Gate::H { q: 0 }]));
    let z = update_keys(&h, &[false], &[false]).unwrap();
    assert_eq!((z.a, z.r), (vec![false], vec![false]));
    let u = update_keys(&h, &[true], &[false]).unwrap();
    assert_eq!((u.a, u.r), (vec![false], vec![true]));
}

#[test]
fn gadget_is_cnot_then_swap() {
    let f = injection_gadget(1, 1).unwrap();
    assert_eq!(f.gates().len(), 2);
    assert_eq!(f.k(), 2);
    tableau_from_circuit(&f).check_symplectic().unwrap();
    let u = circuit_unitary(&f).unwrap();
    // Basis index = input bit + 2 * ancilla bit.
    for input in 0..2usize {
        for anc in 0..2usize {
            let col = input + 2 * anc;
            let data = input ^ anc;
            let row = anc + 2 * data;
            assert!((u[(row, col)].re - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn assembled_g_examples() {
    assert_eq!(assemble_g(&CliffordStructure::identity(1, 0)), CliffordTableau::identity(1));
    let g = assemble_g(&CliffordStructure::identity(1, 1));
    assert_eq!(g.conjugate_pauli_inverse(&p("+ZI")).unwrap().to_string(), "+IZ");
    let u = circuit_unitary(&CliffordStructure::identity(1, 1).flatten()).unwrap();
    let dense = u.adjoint() * pauli_matrix(&p("+ZI")) * &u;
    assert!(close(&dense, &pauli_matrix(&p("+IZ"))));

    let mut rng = seeded(3);
    let s = random_structure(2, 2, 5, &mut rng);
    assert_eq!(assemble_g(&s), tableau_from_circuit(&s.flatten()));
    let gadgets = injection_gadget(1, 2)
        .unwrap()
        .widened(4)
        .unwrap()
        .then(&injection_gadget(2, 2).unwrap())
        .unwrap();
    assert_eq!(assemble_g(&CliffordStructure::identity(2, 2)), tableau_from_circuit(&gadgets));
}

#[test]
fn gadget_index_must_be_positive() {
    assert!(injection_gadget(0, 1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn multiply_is_associative_and_matches_matrices(seed in any::<u64>(), k in 1usize..=3) {
        let mut rng = seeded(seed);
        let (a, b, c) = (random_pauli(k, &mut rng), random_pauli(k, &mut rng), random_pauli(k, &mut rng));
        let left = a.multiply(&b).unwrap().multiply(&c).unwrap();
        let right = a.multiply(&b.multiply(&c).unwrap()).unwrap();
        prop_assert_eq!(&left, &right);
        let dense = pauli_matrix(&a) * pauli_matrix(&b) * pauli_matrix(&c);
        prop_assert!(close(&pauli_matrix(&left), &dense));
    }

    #[test]
    fn squares_are_scalar(seed in any::<u64>(), k in 1usize..=8) {
        let mut rng = seeded(seed);
        let a = random_pauli(k, &mut rng);
        prop_assert!(a.multiply(&a).unwrap().is_identity_up_to_phase());
    }

    #[test]
    fn conjugation_preserves_commutation(seed in any::<u64>(), k in 1usize..=5) {
        let mut rng = seeded(seed);
        let tab = tableau_from_circuit(&random_circuit(k, 12, &mut rng));
        let (a, b) = (random_pauli(k, &mut rng), random_pauli(k, &mut rng));
        let (ca, cb) = (tab.conjugate_pauli(&a).unwrap(), tab.conjugate_pauli(&b).unwrap());
        prop_assert_eq!(a.commutes(&b).unwrap(), ca.commutes(&cb).unwrap());
    }

    #[test]
    fn inverse_round_trip_is_exact(seed in any::<u64>(), k in 1usize..=5) {
        let mut rng = seeded(seed);
        let c = random_circuit(k, 12, &mut rng);
        let a = random_pauli(k, &mut rng);
        let there = tableau_from_circuit(&c).conjugate_pauli(&a).unwrap();
        let back = tableau_from_circuit(&c.inverse()).conjugate_pauli(&there).unwrap();
        prop_assert_eq!(&back, &a);
        let tab = tableau_from_circuit(&c);
        prop_assert_eq!(tab.inverse().conjugate_pauli(&there).unwrap(), a);
        tab.inverse().check_symplectic().unwrap();
    }

    #[test]
    fn key_updates_compose(seed in any::<u64>(), k in 1usize..=4) {
        let mut rng = seeded(seed);
        let c1 = random_circuit(k, 8, &mut rng);
        let c2 = random_circuit(k, 8, &mut rng);
        let a: Vec<bool> = (0..k).map(|_| rng.gen()).collect();
        let r: Vec<bool> = (0..k).map(|_| rng.gen()).collect();
        let first = update_keys(&tableau_from_circuit(&c1), &a, &r).unwrap();
        let second = update_keys(&tableau_from_circuit(&c2), &first.a, &first.r).unwrap();
        let joint = update_keys(&tableau_from_circuit(&c1.then(&c2).unwrap()), &a, &r).unwrap();
        prop_assert_eq!(&second.a, &joint.a);
        prop_assert_eq!(&second.r, &joint.r);
        prop_assert_eq!((first.phase + second.phase) % 4, joint.phase);
    }
}

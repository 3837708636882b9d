mod common;

use common::*;
use mbdqc::clifford::{CliffordStructure, Gate};
use mbdqc::dense::{circuit_unitary, pauli_matrix, DenseGate, StateVector};
use mbdqc::pauli::{enumerate_paulis, PauliString};
use mbdqc::protocol::{
    ideal_computation_state, run_session, InjectionChoice, MbdqcClient, ServerBehavior, SessionOptions,
};
use mbdqc::rng::Sampled;
use mbdqc::stabilizer::StabilizerState;
use mbdqc::traps::*;
use proptest::prelude::*;
use rand::Rng;

fn p(s: &str) -> PauliString {
    s.parse().unwrap()
}

fn random_q(k: usize, rng: &mut impl Rng) -> Vec<usize> {
    loop {
        let q: Vec<usize> = (0..k).filter(|_| rng.gen_bool(0.4)).collect();
        if !q.is_empty() {
            return q;
        }
    }
}

fn random_pauli(k: usize, rng: &mut impl Rng) -> PauliString {
    mbdqc::pauli::pauli_from_index(k, rng.gen_range(0..1usize << (2 * k)))
}

#[test]
fn backpropagation_matches_dense_conjugation() {
    let mut rng = seeded(31);
    for _ in 0..50 {
        let s = random_structure(3, 2, 6, &mut rng);
        let q = [1, 3];
        let stab = backpropagate(&s, &q).unwrap();
        let u = circuit_unitary(&s.flatten()).unwrap();
        let z = pauli_matrix(&PauliString::z_on(5, &q).unwrap());
        assert!((pauli_matrix(&stab) - u.adjoint() * z * &u).norm() < 1e-10, "{stab}");
    }
}

#[test]
fn backpropagation_is_multiplicative_on_disjoint_sets() {
    let mut rng = seeded(32);
    for _ in 0..50 {
        let s = random_structure(2, 2, 6, &mut rng);
        let a = backpropagate(&s, &[0, 2]).unwrap();
        let b = backpropagate(&s, &[1]).unwrap();
        assert_eq!(backpropagate(&s, &[0, 1, 2]).unwrap(), a.multiply(&b).unwrap());
    }
}

#[test]
fn synthesized_inputs_are_stabilized() {
    let stab = p("-ZXY");
    let labels = synthesize_input(&stab).unwrap();
    let st = StabilizerState::prepare_product(&labels);
    assert!(st.is_stabilized_by(&stab).unwrap());
    let trap = Trap::from_stabilizer(&[0], stab).unwrap();
    trap.check_invariants().unwrap();
    assert!(synthesize_input(&p("+II")).is_err());

    let mut rng = seeded(33);
    for _ in 0..100 {
        let s = random_structure(2, 2, 8, &mut rng);
        let trap = Trap::new(&s, &random_q(4, &mut rng)).unwrap();
        trap.check_invariants().unwrap();
    }
}

#[test]
fn detection_matches_simulation() {
    let mut rng = seeded(34);
    let mut src = Sampled::from_seed(34);
    for _ in 0..1000 {
        let n = rng.gen_range(1..=3);
        let t = rng.gen_range(0..=2);
        let s = random_structure(n, t, 6, &mut rng);
        let trap = Trap::new(&s, &random_q(n + t, &mut rng)).unwrap();
        let e = random_pauli(n + t, &mut rng);
        let out = simulate_trap(&s, &trap, Some(&e), &mut src).unwrap();
        assert_eq!(out.parity, detects(&trap, &e).unwrap(), "{trap} {e}");
        assert!(!simulate_trap(&s, &trap, None, &mut src).unwrap().parity);
    }
}

#[test]
fn detection_exhaustive_small_width() {
    let mut rng = seeded(35);
    let mut src = Sampled::from_seed(35);
    for (n, t) in [(1, 0), (1, 1), (2, 1), (2, 2)] {
        let s = random_structure(n, t, 6, &mut rng);
        let k = n + t;
        for mask in 1..1usize << k {
            let q: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).collect();
            let trap = Trap::new(&s, &q).unwrap();
            for e in enumerate_paulis(k, true).unwrap() {
                let out = simulate_trap(&s, &trap, Some(&e), &mut src).unwrap();
                let x_count = q.iter().filter(|&&i| e.x_bit(i)).count();
                assert_eq!(out.parity, x_count % 2 == 1);
                assert_eq!(detects(&trap, &e).unwrap(), x_count % 2 == 1);
            }
        }
    }
}

#[test]
fn singleton_family_examples() {
    let fam = singleton_family(&CliffordStructure::identity(1, 0)).unwrap();
    assert_eq!(fam.len(), 1);
    assert_eq!(fam.traps[0].stabilizer.to_string(), "+Z");
    assert_eq!(fam.traps[0].to_string(), "Q={1} S=+Z input=[+Z]");
    let fam = singleton_family(&CliffordStructure::identity(2, 1)).unwrap();
    assert_eq!(fam.len(), 3);
}

#[test]
fn honest_protocol_passes_every_trap() {
    let mut rng = seeded(36);
    for _ in 0..20 {
        let (n, t) = (rng.gen_range(1..=2), rng.gen_range(0..=2));
        let s = random_structure(n, t, 6, &mut rng);
        let fam = singleton_family(&s).unwrap();
        for (seed, trap) in fam.traps.iter().enumerate() {
            let client = trap.client(&s).unwrap();
            let mut src = Sampled::from_seed(seed as u64);
            let run = run_session(&client, &ServerBehavior::Honest, &SessionOptions::default(), &mut src).unwrap();
            assert!(!trap.parity(&run.output), "{trap}");
        }
    }
}

#[test]
fn protocol_deviation_detection_matches_analysis() {
    let mut rng = seeded(37);
    for _ in 0..100 {
        let (n, t) = (rng.gen_range(1..=2), rng.gen_range(0..=2));
        let s = random_structure(n, t, 6, &mut rng);
        let trap = Trap::new(&s, &random_q(n + t, &mut rng)).unwrap();
        let e = random_pauli(n + t, &mut rng);
        let behavior = ServerBehavior::pre_measurement(&e, n, t).unwrap();
        let run = run_session(&trap.client(&s).unwrap(), &behavior, &SessionOptions::default(), &mut Sampled::from_seed(1))
            .unwrap();
        assert_eq!(trap.parity(&run.output), detects(&trap, &e).unwrap(), "{trap} {e}");
    }
}

#[test]
fn coverage_examples() {
    let s = CliffordStructure::identity(1, 1);
    let fam = singleton_family(&s).unwrap();
    assert!(covers_all_harmful(&fam, CoverageMode::Exhaustive).unwrap().covered);
    assert!(covers_all_harmful(&fam, CoverageMode::SingletonProof).unwrap().covered);
    assert!(undetected_harmful(&fam).unwrap().is_empty());

    let pair = TrapFamily::from_sets(&s, &[vec![0, 1]]).unwrap();
    let cov = covers_all_harmful(&pair, CoverageMode::Exhaustive).unwrap();
    assert!(!cov.covered);
    assert_eq!(cov.witness.unwrap().to_string(), "+XX");
    let missed: Vec<String> = undetected_harmful(&pair).unwrap().iter().map(|e| e.factor_string()).collect();
    assert_eq!(missed.len(), 4);
    for e in ["XX", "XY", "YX", "YY"] {
        assert!(missed.contains(&e.to_string()));
    }
    assert!(!covers_all_harmful(&pair, CoverageMode::SingletonProof).unwrap().covered);
}

#[test]
fn compatibility_examples() {
    assert!(compatible_stabilizers(&p("+ZI"), &p("+IZ")).unwrap());
    assert!(!compatible_stabilizers(&p("+XI"), &p("+ZI")).unwrap());
    assert!(compatible_stabilizers(&p("+XX"), &p("+XI")).unwrap());
    // Commuting as operators is not enough.
    assert!(p("+XX").commutes(&p("+ZZ")).unwrap());
    assert!(!compatible_stabilizers(&p("+XX"), &p("+ZZ")).unwrap());
}

#[test]
fn triangle_needs_three_groups() {
    let g = CompatibilityGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
    assert_eq!(g.greedy_coloring().iter().max().unwrap() + 1, 3);
    assert_eq!(g.exact_coloring().unwrap().iter().max().unwrap() + 1, 3);
    assert!(!g.is_bipartite());
}

fn check_groups(fam: &TrapFamily, groups: &[TrapGroup]) {
    let graph = CompatibilityGraph::from_traps(&fam.traps).unwrap();
    let mut seen = vec![false; fam.len()];
    for g in groups {
        assert!(graph.is_independent(&g.members));
        let st = StabilizerState::prepare_product(&g.input_labels);
        for (&m, q) in g.members.iter().zip(&g.checks) {
            assert!(!seen[m]);
            seen[m] = true;
            assert_eq!(q, &fam.traps[m].q);
            assert!(st.is_stabilized_by(&fam.traps[m].stabilizer).unwrap());
        }
    }
    assert!(seen.iter().all(|&s| s));
}

#[test]
fn merged_groups_are_valid_and_exact_is_minimal() {
    let mut rng = seeded(38);
    let mut src = Sampled::from_seed(38);
    for _ in 0..30 {
        let s = random_structure(2, 2, 6, &mut rng);
        let sets: Vec<Vec<usize>> = (1..16usize)
            .filter(|m| m.count_ones() <= 2)
            .map(|m| (0..4).filter(|i| m >> i & 1 == 1).collect())
            .collect();
        let fam = TrapFamily::from_sets(&s, &sets).unwrap();
        let greedy = merge_traps(&fam, MergeStrategy::GreedyLargestFirst).unwrap();
        let exact = merge_traps(&fam, MergeStrategy::ExactSmall).unwrap();
        check_groups(&fam, &greedy);
        check_groups(&fam, &exact);
        assert!(exact.len() <= greedy.len());
        for g in &exact {
            let run = run_session(&g.client(&s).unwrap(), &ServerBehavior::Honest, &SessionOptions::default(), &mut src)
                .unwrap();
            assert!(!g.failed(&run.output));
        }
    }
}

#[test]
fn exact_merge_respects_cap() {
    let s = CliffordStructure::identity(2, 2);
    let sets: Vec<Vec<usize>> = (1..16usize).map(|m| (0..4).filter(|i| m >> i & 1 == 1).collect()).collect();
    let fam = TrapFamily::from_sets(&s, &sets).unwrap();
    assert!(merge_traps(&fam, MergeStrategy::ExactSmall).is_err());
    let groups = merge_traps(&fam, MergeStrategy::GreedyLargestFirst).unwrap();
    check_groups(&fam, &groups);
}

fn direct_state(n: usize, circuit: &[CompileGate], rho: &[mbdqc::dense::InputLabel]) -> StateVector {
    let mut st = StateVector::prepare(rho).unwrap();
    for g in circuit {
        match *g {
            CompileGate::Clifford(gate) => st.apply_clifford(&gate).unwrap(),
            CompileGate::T(q) => st.apply_gate(&DenseGate::T { q, dagger: false }).unwrap(),
        }
    }
    assert_eq!(st.amplitudes().len(), 1 << n);
    st
}

fn random_source(n: usize, len: usize, rng: &mut impl Rng) -> Vec<CompileGate> {
    (0..len)
        .map(|_| if rng.gen_bool(0.3) { CompileGate::T(rng.gen_range(0..n)) } else { CompileGate::Clifford(random_gate(n, rng)) })
        .collect()
}

#[test]
fn compiled_structure_is_unitarily_equivalent() {
    let mut rng = seeded(39);
    for _ in 0..30 {
        let n = rng.gen_range(1..=3);
        let src = random_source(n, 6, &mut rng);
        let s = broadbent_compile(n, &src).unwrap();
        let expected_t: usize = src
            .iter()
            .map(|g| match g {
                CompileGate::T(_) => 1,
                CompileGate::Clifford(Gate::S { .. }) => 2,
                CompileGate::Clifford(Gate::H { .. }) => 6,
                _ => 0,
            })
            .sum();
        assert_eq!(s.t(), expected_t);
        let rho = random_stabilizer_inputs(n, &mut rng);
        let client = MbdqcClient::new(s.clone(), rho.clone(), vec![InjectionChoice::T; s.t()]).unwrap();
        let compiled = ideal_computation_state(&client).unwrap();
        let direct = direct_state(n, &src, &rho);
        assert!(compiled.pure_trace_distance(&direct).unwrap() < 1e-9);
    }
}

#[test]
fn compiled_incompatibility_graphs() {
    // Exploratory: how often singleton families of compiled circuits merge
    // into two groups.
    let mut rng = seeded(40);
    let mut bipartite = 0;
    let total = 20;
    for _ in 0..total {
        let src = random_source(2, 3, &mut rng);
        let s = broadbent_compile(2, &src).unwrap();
        if s.width() > EXACT_MERGE_CAP {
            continue;
        }
        let fam = singleton_family(&s).unwrap();
        let graph = CompatibilityGraph::from_traps(&fam.traps).unwrap();
        if graph.is_bipartite() {
            bipartite += 1;
        }
    }
    println!("bipartite singleton graphs: {bipartite}/{total}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn traps_stay_silent_under_harmless_deviations(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let (n, t) = (rng.gen_range(1..=3), rng.gen_range(0..=2));
        let s = random_structure(n, t, 6, &mut rng);
        let trap = Trap::new(&s, &random_q(n + t, &mut rng)).unwrap();
        let mut e = PauliString::identity(n + t);
        for i in 0..n + t {
            if rng.gen() {
                e.set_factor(i, mbdqc::pauli::Factor::Z);
            }
        }
        let out = simulate_trap(&s, &trap, Some(&e), &mut Sampled::from_seed(seed)).unwrap();
        prop_assert!(!out.parity);
    }

    #[test]
    fn joint_inputs_satisfy_compatible_sets(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let s = random_structure(2, 1, 6, &mut rng);
        let fam = singleton_family(&s).unwrap();
        for g in merge_traps(&fam, MergeStrategy::GreedyLargestFirst).unwrap() {
            let st = StabilizerState::prepare_product(&g.input_labels);
            for &m in &g.members {
                prop_assert!(st.is_stabilized_by(&fam.traps[m].stabilizer).unwrap());
            }
        }
    }
}

mod common;

use std::collections::HashMap;

use common::*;
use mbdqc::bounds::{eps_cor, eps_rob};
use mbdqc::clifford::{CliffordStructure, Gate};
use mbdqc::pauli::PauliString;
use mbdqc::protocol::{InjectionChoice, MbdqcClient, NoiseKind, ServerBehavior};
use mbdqc::traps::singleton_family;
use mbdqc::verifier::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn p(s: &str) -> PauliString {
    s.parse().unwrap()
}

fn config(rho: &str, flip: bool, t: usize, params: VerificationParams, adversary: Adversary) -> VerifyConfig {
    let mut s = CliffordStructure::identity(1, t);
    if flip {
        let mut layers = s.layers().to_vec();
        layers[0] = circuit(1, vec![Gate::X { q: 0 }]);
        s = CliffordStructure::new(1, layers).unwrap();
    }
    let groups = singleton_family(&s).unwrap().singleton_groups();
    let computation = MbdqcClient::new(s, vec![lbl(rho)], vec![InjectionChoice::T; t]).unwrap();
    VerifyConfig { computation, z_star: Some(flip), params, groups, adversary }
}

fn params(d: usize, s: usize, w: usize, seed: u64) -> VerificationParams {
    VerificationParams { d, s, w, seed }
}

#[test]
fn trivial_plan() {
    let plan = plan_rounds(&params(1, 0, 0, 0), 0, &mut seeded(1)).unwrap();
    assert_eq!(plan.sigma, vec![0]);
    assert!(plan.trap_choice.is_empty());
    assert_eq!(plan.slots(1), vec![RoundKind::Computation]);
}

#[test]
fn parameter_contracts() {
    assert!(params(0, 1, 0, 0).validate().is_err());
    assert!(params(1, 1, 2, 0).validate().is_err());
    assert!(plan_rounds(&params(1, 2, 1, 0), 0, &mut seeded(1)).is_err());
    assert_eq!(params(3, 4, 1, 0).rounds(), 7);
}

#[test]
fn plans_are_uniform() {
    let trials = 24_000;
    let mut counts: HashMap<(Vec<usize>, Vec<usize>), u64> = HashMap::new();
    let mut rng = seeded(2);
    for _ in 0..trials {
        let plan = plan_rounds(&params(2, 2, 1, 0), 2, &mut rng).unwrap();
        *counts.entry((plan.sigma, plan.trap_choice)).or_default() += 1;
    }
    // 4! permutations times 2^2 trap choices.
    let cells = 96.0;
    assert_eq!(counts.len(), 96);
    let expected = trials as f64 / cells;
    let stat: f64 = counts.values().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let p_value = 1.0 - ChiSquared::new(cells - 1.0).unwrap().cdf(stat);
    assert!(p_value > 1e-3, "chi-square {stat}, p = {p_value}");
}

#[test]
fn plans_are_deterministic() {
    let a = plan_rounds(&params(5, 7, 2, 0), 3, &mut seeded(3)).unwrap();
    let b = plan_rounds(&params(5, 7, 2, 0), 3, &mut seeded(3)).unwrap();
    assert_eq!(a, b);
    let kinds = a.slots(5);
    assert_eq!(kinds.iter().filter(|k| **k == RoundKind::Computation).count(), 5);
}

#[test]
fn honest_noiseless_runs_accept_correctly() {
    for flip in [false, true] {
        for t in [0, 1] {
            let cfg = config("+Z", flip, t, params(5, 5, 1, 4), Adversary::default());
            let stats = monte_carlo(&cfg, 50).unwrap();
            assert_eq!(stats.accept_count, 50);
            assert_eq!(stats.accept_and_wrong_count, 0);
            assert!(stats.records.iter().all(|r| r.verdict == Verdict::Accept(flip) && r.trap_failures == 0));
            assert_eq!(stats.trap_failure_histogram[0], 50);
        }
    }
}

#[test]
fn flipping_every_round_is_rejected() {
    let behavior = ServerBehavior::pre_measurement(&p("+X"), 1, 0).unwrap();
    let cfg = config("+Z", false, 0, params(5, 5, 1, 5), Adversary::PerRound(behavior));
    let stats = monte_carlo(&cfg, 50).unwrap();
    assert_eq!(stats.accept_count, 0);
    assert!(stats.records.iter().all(|r| r.verdict == Verdict::Reject));
}

#[test]
fn zero_threshold_always_rejects() {
    let cfg = config("+Z", false, 0, params(3, 0, 0, 6), Adversary::default());
    let stats = monte_carlo(&cfg, 20).unwrap();
    assert_eq!(stats.accept_count, 0);
}

#[test]
fn biased_computation_stays_within_correctness_bound() {
    let trials = 4000;
    let cfg = config("bias:0.2", false, 0, params(15, 5, 1, 7), Adversary::default());
    let stats = monte_carlo(&cfg, trials).unwrap();
    assert_eq!(stats.accept_count, trials);
    let bound = eps_cor(15, 0.2).unwrap();
    let rate = stats.accept_and_wrong_rate();
    assert!(rate.within(bound, 3.0, trials), "{rate:?} vs {bound}");
    assert!(rate.value > 0.0);
}

#[test]
fn noisy_server_stays_within_robustness_bound() {
    let trials = 2000;
    let noise = ServerBehavior::NoisyHonest { p_err: 0.05, kind: NoiseKind::FixedPauli(p("+X")) };
    let cfg = config("+Z", false, 0, params(21, 40, 10, 8), Adversary::PerRound(noise));
    let stats = monte_carlo(&cfg, trials).unwrap();
    let bound = eps_rob(21, 40, 10, 0.0, 0.05).unwrap();
    assert!(stats.reject_rate().within(bound.reject, 3.0, trials), "{:?} vs {bound:?}", stats.reject_rate());
    assert!(stats.accept_and_wrong_rate().within(bound.wrong, 3.0, trials));
}

#[test]
fn sweep_rows_respect_envelope() {
    let cfg = config("+Z", false, 1, params(10, 10, 2, 9), Adversary::default());
    let rows = adversary_sweep(&cfg, &[0, 10, 20], &p("+XI"), 0.0, 300).unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0].accept_and_wrong.value, 0.0);
    for r in &rows {
        assert!(r.accept_and_wrong.within(r.envelope, 3.0, r.trials), "{r:?}");
    }
    assert!(rows[2].accept.value < rows[0].accept.value);
    // Full attack survives only when at most one test lands on the blind trap:
    // (1 + s) / 2^s.
    assert!(rows[2].accept.value < 0.05);
}

#[test]
fn fixed_attack_counts_attacked_rounds() {
    let cfg = config("+Z", false, 1, params(4, 4, 1, 10), Adversary::FixedAttack { e: p("+XI"), m: 3 });
    let stats = monte_carlo(&cfg, 20).unwrap();
    assert!(stats.records.iter().all(|r| r.attacked_rounds == 3));
    let bad = VerifyConfig { adversary: Adversary::FixedAttack { e: p("+XI"), m: 9 }, ..cfg.clone() };
    assert!(monte_carlo(&bad, 1).is_err());
    let wrong_width = VerifyConfig { adversary: Adversary::FixedAttack { e: p("+X"), m: 1 }, ..cfg };
    assert!(monte_carlo(&wrong_width, 1).is_err());
}

#[test]
fn runs_replay_exactly() {
    let noise = ServerBehavior::NoisyHonest { p_err: 0.3, kind: NoiseKind::UniformHarmful };
    let cfg = config("bias:0.3", false, 1, params(5, 6, 2, 11), Adversary::PerRound(noise));
    let a = monte_carlo(&cfg, 40).unwrap();
    let b = monte_carlo(&cfg, 40).unwrap();
    assert_eq!(a, b);
    let single = run_verified_dqc(&cfg, 17).unwrap();
    assert_eq!(single, a.records[17]);
    let other = VerifyConfig { params: params(5, 6, 2, 12), ..cfg };
    assert_ne!(monte_carlo(&other, 40).unwrap().records, a.records);
}

#[test]
fn rate_helpers() {
    let r = Rate::from_counts(25, 100);
    assert_eq!(r.value, 0.25);
    assert!((r.stderr - (0.25f64 * 0.75 / 100.0).sqrt()).abs() < 1e-15);
    let zero = Rate::from_counts(0, 100);
    assert!(zero.within(0.0, 3.0, 100));
    assert!(!Rate::from_counts(50, 100).within(0.1, 3.0, 100));
}

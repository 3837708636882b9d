//! Verified delegation: interleaved computation and trap rounds, threshold
//! check, majority vote, and a seeded Monte-Carlo harness.

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{security_error, BoundParams, GridOptions};
use crate::error::{Error, Result};
use crate::pauli::PauliString;
use crate::protocol::{run_session, MbdqcClient, OutputMode, ServerBehavior, SessionOptions};
use crate::rng::{below, derive_rng, Sampled};
use crate::traps::TrapGroup;

/// Round counts and threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationParams {
    /// Computation rounds.
    pub d: usize,
    /// Test rounds.
    pub s: usize,
    /// Reject once this many test rounds fail.
    pub w: usize,
    pub seed: u64,
}

impl VerificationParams {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InvalidParams("d must be at least 1".into()));
        }
        if self.w > self.s {
            return Err(Error::InvalidParams(format!("w = {} exceeds s = {}", self.w, self.s)));
        }
        Ok(())
    }

    /// Total rounds `N = d + s`.
    pub fn rounds(&self) -> usize {
        self.d + self.s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RoundKind {
    Computation,
    /// Test round running the group with this index.
    Test(usize),
}

/// Assignment of logical rounds to physical slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundPlan {
    /// Physical slot of each logical round; logical rounds `0..d` compute,
    /// `d..N` test.
    pub sigma: Vec<usize>,
    /// Group index of each test round, in logical order.
    pub trap_choice: Vec<usize>,
}

impl RoundPlan {
    /// Kind of each physical slot.
    pub fn slots(&self, d: usize) -> Vec<RoundKind> {
        let mut kinds = vec![RoundKind::Computation; self.sigma.len()];
        for (j, &choice) in self.trap_choice.iter().enumerate() {
            kinds[self.sigma[d + j]] = RoundKind::Test(choice);
        }
        kinds
    }
}

/// Uniform permutation and uniform test choices.
pub fn plan_rounds(params: &VerificationParams, family_size: usize, rng: &mut dyn rand::RngCore) -> Result<RoundPlan> {
    params.validate()?;
    if family_size == 0 && params.s > 0 {
        return Err(Error::InvalidParams("trap family is empty".into()));
    }
    let mut sigma: Vec<usize> = (0..params.rounds()).collect();
    sigma.shuffle(rng);
    let trap_choice = (0..params.s).map(|_| below(rng, family_size)).collect();
    Ok(RoundPlan { sigma, trap_choice })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Accept(bool),
    Reject,
}

impl Verdict {
    pub fn accepted(&self) -> bool {
        matches!(self, Verdict::Accept(_))
    }

    pub fn decision(&self) -> Option<bool> {
        match self {
            Verdict::Accept(z) => Some(*z),
            Verdict::Reject => None,
        }
    }
}

/// Server strategy across the rounds of one trial.
#[derive(Debug, Clone, PartialEq)]
pub enum Adversary {
    /// The same behavior in every round.
    PerRound(ServerBehavior),
    /// Applies `e` before the measurements in `m` physical rounds chosen
    /// uniformly, independently of the plan.
    FixedAttack { e: PauliString, m: usize },
}

impl Default for Adversary {
    fn default() -> Self {
        Adversary::PerRound(ServerBehavior::Honest)
    }
}

/// Everything one verified delegation needs.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    /// Computation-mode client; its first output bit is the vote.
    pub computation: MbdqcClient,
    /// Known correct decision, if any.
    pub z_star: Option<bool>,
    pub params: VerificationParams,
    /// Test configurations to choose from.
    pub groups: Vec<TrapGroup>,
    pub adversary: Adversary,
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.computation.output_mode() == OutputMode::Mixed {
            return Err(Error::MixedInjectionModes);
        }
        if self.groups.is_empty() && self.params.s > 0 {
            return Err(Error::InvalidParams("trap family is empty".into()));
        }
        let k = self.computation.structure.width();
        for g in &self.groups {
            if g.input_labels.len() != k {
                return Err(Error::Dimension { expected: k, got: g.input_labels.len() });
            }
        }
        if let Adversary::FixedAttack { e, m } = &self.adversary {
            if e.k() != k {
                return Err(Error::Dimension { expected: k, got: e.k() });
            }
            if *m > self.params.rounds() {
                return Err(Error::InvalidParams(format!("attack on {m} of {} rounds", self.params.rounds())));
            }
        }
        Ok(())
    }
}

/// Outcome of one trial.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub verdict: Verdict,
    pub trap_failures: usize,
    /// Accepted with a decision other than `z_star`.
    pub wrong: Option<bool>,
    pub attacked_rounds: usize,
    /// Physical slots whose test failed.
    pub failed_slots: Vec<usize>,
}

/// Runs trial `trial` of the verified protocol.
pub fn run_verified_dqc(config: &VerifyConfig, trial: u64) -> Result<TrialRecord> {
    config.validate()?;
    let p = &config.params;
    let n_rounds = p.rounds();
    let plan = plan_rounds(p, config.groups.len(), &mut derive_rng(p.seed, "plan", trial, 0))?;
    let slots = plan.slots(p.d);
    let structure = &config.computation.structure;
    let (n, t) = (structure.n(), structure.t());

    let mut attacked = vec![false; n_rounds];
    let attack_behavior = match &config.adversary {
        Adversary::FixedAttack { e, m } => {
            for slot in sample(&mut derive_rng(p.seed, "attack", trial, 0), n_rounds, *m) {
                attacked[slot] = true;
            }
            Some(ServerBehavior::pre_measurement(e, n, t)?)
        }
        Adversary::PerRound(_) => None,
    };

    let test_clients: Vec<MbdqcClient> =
        config.groups.iter().map(|g| g.client(structure)).collect::<Result<_>>()?;
    let opts = SessionOptions::default();
    let mut ones = 0usize;
    let mut failed_slots = Vec::new();
    for (slot, kind) in slots.iter().enumerate() {
        let behavior = match (&config.adversary, &attack_behavior) {
            (Adversary::PerRound(b), _) => b,
            (_, Some(b)) if attacked[slot] => b,
            _ => &ServerBehavior::Honest,
        };
        let mut rng = Sampled::new(derive_rng(p.seed, "round", trial, slot as u64));
        match *kind {
            RoundKind::Computation => {
                let run = run_session(&config.computation, behavior, &opts, &mut rng)?;
                ones += usize::from(run.output[0]);
            }
            RoundKind::Test(g) => {
                let run = run_session(&test_clients[g], behavior, &opts, &mut rng)?;
                if config.groups[g].failed(&run.output) {
                    failed_slots.push(slot);
                }
            }
        }
    }
    let trap_failures = failed_slots.len();
    let verdict = if trap_failures >= p.w { Verdict::Reject } else { Verdict::Accept(2 * ones > p.d) };
    let wrong = config.z_star.map(|z| verdict.decision().is_some_and(|y| y != z));
    Ok(TrialRecord {
        trial,
        verdict,
        trap_failures,
        wrong,
        attacked_rounds: attacked.iter().filter(|&&a| a).count(),
        failed_slots,
    })
}

/// Aggregated counts over trials.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunStats {
    pub trials: u64,
    pub accept_count: u64,
    pub accept_and_wrong_count: u64,
    /// Entry `f` counts trials with `f` failed test rounds.
    pub trap_failure_histogram: Vec<u64>,
    pub records: Vec<TrialRecord>,
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub value: f64,
    pub stderr: f64,
}

impl Rate {
    pub fn from_counts(hits: u64, trials: u64) -> Self {
        if trials == 0 {
            return Self { value: 0.0, stderr: 0.0 };
        }
        let p = hits as f64 / trials as f64;
        Self { value: p, stderr: (p * (1.0 - p) / trials as f64).sqrt() }
    }

    /// True when the rate is at most `bound` plus `sigmas` standard errors.
    /// A zero-variance estimate gets the binomial floor `1/trials` as its error.
    pub fn within(&self, bound: f64, sigmas: f64, trials: u64) -> bool {
        let se = self.stderr.max(1.0 / trials.max(1) as f64);
        self.value <= bound + sigmas * se
    }
}

impl RunStats {
    pub fn from_records(records: Vec<TrialRecord>, s: usize) -> Self {
        let mut hist = vec![0u64; s + 1];
        let mut accept = 0;
        let mut wrong = 0;
        for r in &records {
            hist[r.trap_failures.min(s)] += 1;
            if r.verdict.accepted() {
                accept += 1;
            }
            if r.wrong == Some(true) {
                wrong += 1;
            }
        }
        Self {
            trials: records.len() as u64,
            accept_count: accept,
            accept_and_wrong_count: wrong,
            trap_failure_histogram: hist,
            records,
        }
    }

    pub fn accept_rate(&self) -> Rate {
        Rate::from_counts(self.accept_count, self.trials)
    }

    pub fn reject_rate(&self) -> Rate {
        Rate::from_counts(self.trials - self.accept_count, self.trials)
    }

    pub fn accept_and_wrong_rate(&self) -> Rate {
        Rate::from_counts(self.accept_and_wrong_count, self.trials)
    }
}

/// Runs `trials` independent trials; the result depends only on the config.
pub fn monte_carlo(config: &VerifyConfig, trials: u64) -> Result<RunStats> {
    config.validate()?;
    if trials == 0 {
        return Err(Error::InvalidParams("trials must be at least 1".into()));
    }
    let records: Vec<TrialRecord> =
        (0..trials).into_par_iter().map(|i| run_verified_dqc(config, i)).collect::<Result<_>>()?;
    Ok(RunStats::from_records(records, config.params.s))
}

/// One row of an adversary sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub m: usize,
    pub trials: u64,
    pub accept: Rate,
    pub accept_and_wrong: Rate,
    /// Analytic security error for the configuration.
    pub envelope: f64,
}

/// Attacks `m` rounds with `e` for every `m` in `m_grid` and compares the
/// accept-and-wrong rate with the analytic envelope at error `c`.
pub fn adversary_sweep(
    config: &VerifyConfig,
    m_grid: &[usize],
    e: &PauliString,
    c: f64,
    trials: u64,
) -> Result<Vec<SweepRow>> {
    let p = &config.params;
    let bound = BoundParams { d: p.d, s: p.s, w: p.w, k: config.computation.structure.width(), c, p_err: 0.0 };
    let envelope = security_error(&bound, GridOptions::default())?.p_d;
    m_grid
        .iter()
        .map(|&m| {
            let cfg = VerifyConfig { adversary: Adversary::FixedAttack { e: e.clone(), m }, ..config.clone() };
            let stats = monte_carlo(&cfg, trials)?;
            Ok(SweepRow {
                m,
                trials,
                accept: stats.accept_rate(),
                accept_and_wrong: stats.accept_and_wrong_rate(),
                envelope,
            })
        })
        .collect()
}

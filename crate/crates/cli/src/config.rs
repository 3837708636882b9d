//! Experiment configuration: TOML text in, validated [`ExperimentConfig`] out.

use std::fmt;

use mbdqc::clifford::{CliffordCircuit, CliffordStructure, Gate};
use mbdqc::dense::InputLabel;
use mbdqc::pauli::PauliString;
use mbdqc::protocol::{output_mode, BackendKind, InjectionChoice, MbdqcClient, NoiseKind, OutputMode, ServerBehavior};
use mbdqc::traps::MergeStrategy;
use mbdqc::verifier::{Adversary, VerificationParams};
use serde::Deserialize;

pub const CONFIG_SCHEMA: &str = "mbdqc-config/v1";

/// One problem found while validating a config.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    /// Dotted path of the offending field, or `line L, column C` for syntax errors.
    pub location: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema: Option<String>,
    seed: Option<u64>,
    trials: Option<u64>,
    backend: Option<BackendKind>,
    structure: RawStructure,
    #[serde(default)]
    input: RawInput,
    verify: Option<RawVerify>,
    #[serde(default)]
    family: RawFamily,
    #[serde(default)]
    behavior: RawBehavior,
    #[serde(default)]
    bounds: RawBounds,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStructure {
    n: usize,
    #[serde(default)]
    t: usize,
    /// `t + 1` gate lists; omitted means all identity.
    layers: Option<Vec<Vec<RawGate>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGate {
    gate: String,
    /// 1-based wires.
    targets: Vec<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInput {
    rho: Option<Vec<String>>,
    injections: Option<RawInjections>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawInjections {
    Mode(String),
    Labels(Vec<String>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVerify {
    d: usize,
    s: usize,
    w: usize,
    z_star: Option<u8>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFamily {
    kind: Option<String>,
    sets: Option<Vec<Vec<usize>>>,
    strategy: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBehavior {
    kind: Option<String>,
    pauli: Option<String>,
    p_err: Option<f64>,
    noise: Option<String>,
    rate: Option<f64>,
    m: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBounds {
    c: Option<f64>,
    p_err: Option<f64>,
    k: Option<usize>,
}

/// Which traps the test rounds draw from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FamilySpec {
    Singleton,
    /// 0-based index sets, one trap each.
    Explicit(Vec<Vec<usize>>),
    /// Base sets (singletons when `None`) merged into joint test runs.
    Merged { sets: Option<Vec<Vec<usize>>>, strategy: MergeStrategy },
}

/// Server strategy from the `[behavior]` table.
#[derive(Debug, Clone, PartialEq)]
pub enum BehaviorSpec {
    Honest,
    Pauli(PauliString),
    Noisy { p_err: f64, kind: NoiseKind },
    Attack { e: PauliString, m: usize },
}

/// Validated experiment definition.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub trials: u64,
    pub backend: BackendKind,
    pub structure: CliffordStructure,
    pub rho: Vec<InputLabel>,
    pub injections: Vec<InjectionChoice>,
    pub verify: VerificationParams,
    pub z_star: Option<bool>,
    pub family: FamilySpec,
    pub behavior: BehaviorSpec,
    pub c: f64,
    pub p_err: f64,
    pub k: usize,
    /// Original text, echoed into results.
    pub source: String,
}

impl ExperimentConfig {
    pub fn client(&self) -> mbdqc::Result<MbdqcClient> {
        MbdqcClient::new(self.structure.clone(), self.rho.clone(), self.injections.clone())
    }

    /// Behavior for a single session; a fixed attack hits every session.
    pub fn session_behavior(&self) -> mbdqc::Result<ServerBehavior> {
        let (n, t) = (self.structure.n(), self.structure.t());
        Ok(match &self.behavior {
            BehaviorSpec::Honest => ServerBehavior::Honest,
            BehaviorSpec::Pauli(e) | BehaviorSpec::Attack { e, .. } => ServerBehavior::pre_measurement(e, n, t)?,
            BehaviorSpec::Noisy { p_err, kind } => ServerBehavior::NoisyHonest { p_err: *p_err, kind: kind.clone() },
        })
    }

    pub fn adversary(&self) -> mbdqc::Result<Adversary> {
        Ok(match &self.behavior {
            BehaviorSpec::Attack { e, m } => Adversary::FixedAttack { e: e.clone(), m: *m },
            _ => Adversary::PerRound(self.session_behavior()?),
        })
    }
}

struct Issues(Vec<ConfigIssue>);

impl Issues {
    fn push(&mut self, location: impl Into<String>, message: impl fmt::Display) {
        self.0.push(ConfigIssue { location: location.into(), message: message.to_string() });
    }
}

fn syntax_issue(text: &str, err: &toml::de::Error) -> ConfigIssue {
    let location = match err.span() {
        Some(span) => {
            let before = &text[..span.start.min(text.len())];
            let line = before.matches('\n').count() + 1;
            let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
            format!("line {line}, column {column}")
        }
        None => "config".to_string(),
    };
    ConfigIssue { location, message: err.message().to_string() }
}

fn parse_gate(raw: &RawGate, n: usize, at: &str, issues: &mut Issues) -> Option<Gate> {
    let arity = match raw.gate.as_str() {
        "h" | "s" | "x" | "y" | "z" => 1,
        "cnot" | "swap" => 2,
        other => {
            issues.push(format!("{at}.gate"), format!("unknown gate {other:?} (expected h, s, x, y, z, cnot, swap)"));
            return None;
        }
    };
    if raw.targets.len() != arity {
        issues.push(format!("{at}.targets"), format!("{} takes {arity} wire(s), got {}", raw.gate, raw.targets.len()));
        return None;
    }
    let mut wires = Vec::with_capacity(arity);
    for (j, &w) in raw.targets.iter().enumerate() {
        if w == 0 || w > n {
            issues.push(format!("{at}.targets[{j}]"), format!("wire {w} outside 1..={n}"));
            return None;
        }
        wires.push(w - 1);
    }
    if arity == 2 && wires[0] == wires[1] {
        issues.push(format!("{at}.targets"), "two-qubit gate on a single wire");
        return None;
    }
    Some(match raw.gate.as_str() {
        "h" => Gate::H { q: wires[0] },
        "s" => Gate::S { q: wires[0] },
        "x" => Gate::X { q: wires[0] },
        "y" => Gate::Y { q: wires[0] },
        "z" => Gate::Z { q: wires[0] },
        "cnot" => Gate::Cnot { control: wires[0], target: wires[1] },
        _ => Gate::Swap { a: wires[0], b: wires[1] },
    })
}

fn parse_sets(sets: &[Vec<usize>], k: usize, at: &str, issues: &mut Issues) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for (i, set) in sets.iter().enumerate() {
        if set.is_empty() {
            issues.push(format!("{at}[{i}]"), "empty index set");
            continue;
        }
        let mut q = Vec::new();
        for &w in set {
            if w == 0 || w > k {
                issues.push(format!("{at}[{i}]"), format!("index {w} outside 1..={k}"));
            } else {
                q.push(w - 1);
            }
        }
        out.push(q);
    }
    out
}

fn parse_pauli(text: Option<&str>, k: usize, at: &str, issues: &mut Issues) -> Option<PauliString> {
    let Some(text) = text else {
        issues.push(at, "missing Pauli string");
        return None;
    };
    match text.parse::<PauliString>() {
        Ok(e) if e.k() == k => Some(e),
        Ok(e) => {
            issues.push(at, format!("Pauli string has {} factors, expected n + t = {k}", e.k()));
            None
        }
        Err(err) => {
            issues.push(at, err);
            None
        }
    }
}

/// Parses and validates `text`; every problem is reported, nothing is
/// partially accepted.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, Vec<ConfigIssue>> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| vec![syntax_issue(text, &e)])?;
    let mut issues = Issues(Vec::new());

    match raw.schema.as_deref() {
        None | Some(CONFIG_SCHEMA) => {}
        Some(other) => issues.push("schema", format!("unsupported schema {other:?} (expected {CONFIG_SCHEMA:?})")),
    }

    let (n, t) = (raw.structure.n, raw.structure.t);
    if n == 0 {
        issues.push("structure.n", "n must be at least 1");
    }
    let k = n + t;
    let mut layers = Vec::new();
    match &raw.structure.layers {
        None => layers = vec![CliffordCircuit::new(n); t + 1],
        Some(raw_layers) => {
            if raw_layers.len() != t + 1 {
                issues.push("structure.layers", format!("expected t + 1 = {} layers, got {}", t + 1, raw_layers.len()));
            }
            for (i, layer) in raw_layers.iter().enumerate() {
                let mut c = CliffordCircuit::new(n);
                for (j, g) in layer.iter().enumerate() {
                    if let Some(gate) = parse_gate(g, n, &format!("structure.layers[{i}][{j}]"), &mut issues) {
                        if let Err(err) = c.push(gate) {
                            issues.push(format!("structure.layers[{i}][{j}]"), err);
                        }
                    }
                }
                layers.push(c);
            }
        }
    }

    let rho: Vec<InputLabel> = match &raw.input.rho {
        None => vec![InputLabel::Stabilizer(mbdqc::pauli::SinglePauliLabel::PLUS_Z); n],
        Some(labels) => {
            if labels.len() != n {
                issues.push("input.rho", format!("expected n = {n} labels, got {}", labels.len()));
            }
            labels
                .iter()
                .enumerate()
                .filter_map(|(i, l)| match l.parse::<InputLabel>() {
                    Ok(v) => Some(v),
                    Err(err) => {
                        issues.push(format!("input.rho[{i}]"), err);
                        None
                    }
                })
                .collect()
        }
    };

    let injections: Vec<InjectionChoice> = match &raw.input.injections {
        None => vec![InjectionChoice::T; t],
        Some(RawInjections::Mode(m)) if m == "computation" => vec![InjectionChoice::T; t],
        Some(RawInjections::Mode(m)) => {
            issues.push("input.injections", format!("unknown mode {m:?} (expected \"computation\" or a label list)"));
            Vec::new()
        }
        Some(RawInjections::Labels(labels)) => {
            if labels.len() != t {
                issues.push("input.injections", format!("expected t = {t} labels, got {}", labels.len()));
            }
            labels
                .iter()
                .enumerate()
                .filter_map(|(i, l)| {
                    if l == "T" {
                        return Some(InjectionChoice::T);
                    }
                    match l.parse() {
                        Ok(label) => Some(InjectionChoice::Stabilizer(label)),
                        Err(err) => {
                            issues.push(format!("input.injections[{i}]"), err);
                            None
                        }
                    }
                })
                .collect()
        }
    };
    if output_mode(&injections) == OutputMode::Mixed {
        issues.push("input.injections", "mixed injection modes (use all T or all stabilizer labels)");
    }
    if injections.iter().all(|a| !a.is_t()) && t > 0 && rho.iter().any(|l| !l.is_stabilizer()) {
        issues.push("input.rho", "magic-free runs need stabilizer inputs");
    }

    let seed = raw.seed.unwrap_or(0);
    let (verify, z_star) = match &raw.verify {
        None => (VerificationParams { d: 1, s: 0, w: 0, seed }, None),
        Some(v) => {
            if v.d == 0 {
                issues.push("verify.d", "d must be at least 1");
            }
            if v.w > v.s {
                issues.push("verify.w", format!("w = {} exceeds s = {}", v.w, v.s));
            }
            let z = match v.z_star {
                None => None,
                Some(0) => Some(false),
                Some(1) => Some(true),
                Some(other) => {
                    issues.push("verify.z_star", format!("expected 0 or 1, got {other}"));
                    None
                }
            };
            (VerificationParams { d: v.d, s: v.s, w: v.w, seed }, z)
        }
    };

    let sets = raw.family.sets.as_ref().map(|s| parse_sets(s, k, "family.sets", &mut issues));
    let family = match raw.family.kind.as_deref().unwrap_or("singleton") {
        "singleton" => FamilySpec::Singleton,
        "explicit" => match sets.clone() {
            Some(s) if !s.is_empty() => FamilySpec::Explicit(s),
            _ => {
                issues.push("family.sets", "explicit family needs at least one index set");
                FamilySpec::Singleton
            }
        },
        "merged" => {
            let strategy = match raw.family.strategy.as_deref().unwrap_or("greedy") {
                "greedy" => MergeStrategy::GreedyLargestFirst,
                "exact" => MergeStrategy::ExactSmall,
                other => {
                    issues.push("family.strategy", format!("unknown strategy {other:?} (expected greedy or exact)"));
                    MergeStrategy::GreedyLargestFirst
                }
            };
            FamilySpec::Merged { sets: sets.clone(), strategy }
        }
        other => {
            issues.push("family.kind", format!("unknown family {other:?} (expected singleton, explicit, merged)"));
            FamilySpec::Singleton
        }
    };

    let b = &raw.behavior;
    let probability = |v: Option<f64>, at: &str, issues: &mut Issues| -> f64 {
        match v {
            Some(p) if (0.0..=1.0).contains(&p) => p,
            Some(p) => {
                issues.push(at, format!("{p} outside [0, 1]"));
                0.0
            }
            None => {
                issues.push(at, "missing probability");
                0.0
            }
        }
    };
    let behavior = match b.kind.as_deref().unwrap_or("honest") {
        "honest" => BehaviorSpec::Honest,
        "pauli" => parse_pauli(b.pauli.as_deref(), k, "behavior.pauli", &mut issues)
            .map_or(BehaviorSpec::Honest, BehaviorSpec::Pauli),
        "noisy" => {
            let p_err = probability(b.p_err, "behavior.p_err", &mut issues);
            let kind = match b.noise.as_deref().unwrap_or("uniform") {
                "uniform" => NoiseKind::UniformHarmful,
                "fixed" => parse_pauli(b.pauli.as_deref(), k, "behavior.pauli", &mut issues)
                    .map_or(NoiseKind::UniformHarmful, NoiseKind::FixedPauli),
                "depolarizing" => NoiseKind::PerQubitDepolarizing(probability(b.rate, "behavior.rate", &mut issues)),
                other => {
                    issues.push("behavior.noise", format!("unknown noise {other:?} (expected uniform, fixed, depolarizing)"));
                    NoiseKind::UniformHarmful
                }
            };
            BehaviorSpec::Noisy { p_err, kind }
        }
        "attack" => {
            let m = b.m.unwrap_or(0);
            if m > verify.rounds() {
                issues.push("behavior.m", format!("attack on {m} of {} rounds", verify.rounds()));
            }
            parse_pauli(b.pauli.as_deref(), k, "behavior.pauli", &mut issues)
                .map_or(BehaviorSpec::Honest, |e| BehaviorSpec::Attack { e, m })
        }
        other => {
            issues.push("behavior.kind", format!("unknown behavior {other:?} (expected honest, pauli, noisy, attack)"));
            BehaviorSpec::Honest
        }
    };

    let c = raw.bounds.c.unwrap_or(0.0);
    if !(0.0..0.5).contains(&c) {
        issues.push("bounds.c", format!("c = {c} outside [0, 1/2)"));
    }
    let p_err = raw.bounds.p_err.unwrap_or(0.0);
    if !(0.0..=1.0).contains(&p_err) {
        issues.push("bounds.p_err", format!("{p_err} outside [0, 1]"));
    }
    let bound_k = raw.bounds.k.unwrap_or(k);
    if bound_k == 0 {
        issues.push("bounds.k", "k must be at least 1");
    }
    let trials = raw.trials.unwrap_or(1000);
    if trials == 0 {
        issues.push("trials", "trials must be at least 1");
    }

    if !issues.0.is_empty() {
        return Err(issues.0);
    }
    let structure = CliffordStructure::new(n, layers).map_err(|e| vec![ConfigIssue { location: "structure".into(), message: e.to_string() }])?;
    Ok(ExperimentConfig {
        seed,
        trials,
        backend: raw.backend.unwrap_or_default(),
        structure,
        rho,
        injections,
        verify,
        z_star,
        family,
        behavior,
        c,
        p_err,
        k: bound_k,
        source: text.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_identity_config_parses() {
        let cfg = parse_config("[structure]\nn = 1\n").unwrap();
        assert_eq!(cfg.structure, CliffordStructure::identity(1, 0));
        assert_eq!(cfg.verify.rounds(), 1);
    }

    #[test]
    fn mixed_injections_are_rejected() {
        let err = parse_config("[structure]\nn = 1\nt = 2\n[input]\ninjections = [\"T\", \"+Z\"]\n").unwrap_err();
        assert!(err.iter().any(|i| i.message.contains("mixed injection modes")), "{err:?}");
    }

    #[test]
    fn threshold_above_test_rounds_is_rejected() {
        let err = parse_config("[structure]\nn = 1\n[verify]\nd = 1\ns = 2\nw = 3\n").unwrap_err();
        assert_eq!(err[0].location, "verify.w");
    }

    #[test]
    fn every_issue_is_reported() {
        let text = "[structure]\nn = 2\nlayers = [[{ gate = \"cz\", targets = [1, 2] }, { gate = \"h\", targets = [3] }]]\n[input]\nrho = [\"+Q\"]\n";
        let err = parse_config(text).unwrap_err();
        let locations: Vec<&str> = err.iter().map(|i| i.location.as_str()).collect();
        assert_eq!(
            locations,
            ["structure.layers[0][0].gate", "structure.layers[0][1].targets[0]", "input.rho", "input.rho[0]"]
        );
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = parse_config("[structure]\nn = \n").unwrap_err();
        assert!(err[0].location.starts_with("line 2"), "{err:?}");
        let err = parse_config("[structure]\nn = 1\nbogus = 3\n").unwrap_err();
        assert!(err[0].message.contains("bogus"));
    }

    #[test]
    fn wires_are_one_based() {
        let cfg = parse_config("[structure]\nn = 2\nlayers = [[{ gate = \"cnot\", targets = [2, 1] }]]\n").unwrap();
        assert_eq!(cfg.structure.layers()[0].gates(), &[Gate::Cnot { control: 1, target: 0 }]);
    }
}

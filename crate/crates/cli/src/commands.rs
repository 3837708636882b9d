//! Subcommand implementations. Each returns the bundle to write, a short
//! human-readable report and, for checks, the failure reason if any.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use mbdqc::bounds::{eps_cor, security_error, BoundParams, DeltaConvention, GridOptions, SecurityBreakdown};
use mbdqc::dense::{haar_unitary, operator_norm, pauli_matrix, pauli_twirl_check, DensityMatrix, C64};
use mbdqc::pauli::{enumerate_paulis, ENUMERATION_CAP};
use mbdqc::protocol::{
    client_message_count, ideal_distribution, live_wires, pauli_reduction_check, run_session, server_view,
    view_distance, BackendKind, DeviationPoint, InjectionChoice, MbdqcClient, OutputMode, ServerBehavior,
    SessionOptions, REDUCTION_TOLERANCE,
};
use mbdqc::rng::{derive_rng, Sampled};
use mbdqc::traps::{
    covers_all_harmful, merge_traps, singleton_family, CompatibilityGraph, CoverageMode, MergeStrategy, TrapFamily,
    TrapGroup, EXACT_MERGE_CAP,
};
use mbdqc::verifier::{monte_carlo, Rate, VerifyConfig};
use serde::Serialize;
use serde_json::json;

use crate::config::{ExperimentConfig, FamilySpec};
use crate::error::{CliError, CliResult};
use crate::output::{envelope, Bundle};

/// Trace distance under which two server views count as identical.
pub const BLINDNESS_TOLERANCE: f64 = 1e-9;
/// Norm under which twirl terms count as equal.
pub const TWIRL_TOLERANCE: f64 = 1e-9;
/// Transcripts dumped in full by `simulate`.
const TRANSCRIPT_DUMPS: u64 = 5;
/// Width up to which `simulate` also reports the exact ideal distribution.
const IDEAL_WIDTH_CAP: usize = 12;

/// Flags shared by all subcommands.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: Option<ExperimentConfig>,
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub backend: Option<BackendKind>,
    pub convention: DeltaConvention,
}

impl Context {
    fn config(&self, command: &str) -> CliResult<&ExperimentConfig> {
        self.config.as_ref().ok_or_else(|| CliError::Usage(format!("{command} needs --config")))
    }

    fn seed(&self) -> u64 {
        self.seed.or(self.config.as_ref().map(|c| c.seed)).unwrap_or(0)
    }

    fn trials(&self, default: u64) -> u64 {
        self.trials.or(self.config.as_ref().map(|c| c.trials)).unwrap_or(default)
    }

    fn source(&self) -> Option<&str> {
        self.config.as_ref().map(|c| c.source.as_str())
    }
}

pub struct Outcome {
    pub bundle: Bundle,
    pub report: String,
    pub failure: Option<String>,
}

fn bits(b: &[bool]) -> String {
    b.iter().map(|&x| if x { '1' } else { '0' }).collect()
}

#[derive(Serialize)]
struct OutcomeCount {
    count: u64,
    rate: Rate,
}

pub fn simulate(ctx: &Context) -> CliResult<Outcome> {
    let cfg = ctx.config("simulate")?;
    let client = cfg.client()?;
    let behavior = cfg.session_behavior()?;
    let opts = SessionOptions { backend: ctx.backend.unwrap_or(cfg.backend), ..SessionOptions::default() };
    let (seed, trials) = (ctx.seed(), ctx.trials(1000));
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut transcripts = String::new();
    for trial in 0..trials {
        let mut rng = Sampled::new(derive_rng(seed, "simulate", trial, 0));
        let run = run_session(&client, &behavior, &opts, &mut rng)?;
        *counts.entry(bits(&run.output)).or_default() += 1;
        if trial < TRANSCRIPT_DUMPS {
            let _ = writeln!(transcripts, "# trial {trial} output {}", bits(&run.output));
            transcripts.push_str(&run.transcript.dump());
        }
    }
    let outcomes: BTreeMap<&String, OutcomeCount> =
        counts.iter().map(|(k, &c)| (k, OutcomeCount { count: c, rate: Rate::from_counts(c, trials) })).collect();
    let ideal = if client.structure.width() <= IDEAL_WIDTH_CAP && behavior == ServerBehavior::Honest {
        Some(ideal_distribution(&client)?.into_iter().map(|(k, p)| (bits(&k), p)).collect::<BTreeMap<_, _>>())
    } else {
        None
    };
    let mode = match client.output_mode() {
        OutputMode::Computation => "computation",
        OutputMode::MagicFree => "magic-free",
        OutputMode::Mixed => "mixed",
    };
    let result = json!({
        "n": client.structure.n(),
        "t": client.structure.t(),
        "mode": mode,
        "trials": trials,
        "outcomes": outcomes,
        "ideal": ideal,
    });
    let mut report = format!("simulate: {trials} sessions ({mode} mode)\n");
    for (k, c) in &counts {
        let r = Rate::from_counts(*c, trials);
        let _ = writeln!(report, "  {k}: {:.4} ± {:.4}", r.value, r.stderr);
    }
    Ok(Outcome {
        bundle: Bundle {
            summary: envelope("simulate", seed, ctx.source(), result)?,
            transcripts: Some(transcripts),
            ..Bundle::default()
        },
        report,
        failure: None,
    })
}

fn family_and_groups(cfg: &ExperimentConfig) -> CliResult<(TrapFamily, Vec<TrapGroup>)> {
    Ok(match &cfg.family {
        FamilySpec::Singleton => {
            let fam = singleton_family(&cfg.structure)?;
            let groups = fam.singleton_groups();
            (fam, groups)
        }
        FamilySpec::Explicit(sets) => {
            let fam = TrapFamily::from_sets(&cfg.structure, sets)?;
            let groups = fam.singleton_groups();
            (fam, groups)
        }
        FamilySpec::Merged { sets, strategy } => {
            let fam = match sets {
                Some(s) => TrapFamily::from_sets(&cfg.structure, s)?,
                None => singleton_family(&cfg.structure)?,
            };
            let groups = merge_traps(&fam, *strategy)?;
            (fam, groups)
        }
    })
}

fn trap_table(fam: &TrapFamily, groups: &[TrapGroup]) -> String {
    let mut s = String::new();
    for (i, t) in fam.traps.iter().enumerate() {
        let _ = writeln!(s, "trap {} {t}", i + 1);
    }
    for (i, g) in groups.iter().enumerate() {
        let members: Vec<String> = g.members.iter().map(|m| (m + 1).to_string()).collect();
        let labels: Vec<String> = g.input_labels.iter().map(ToString::to_string).collect();
        let _ = writeln!(s, "group {} traps={{{}}} input=[{}]", i + 1, members.join(","), labels.join(","));
    }
    s
}

fn bound_params(cfg: &ExperimentConfig, d: usize, s: usize, w: usize) -> BoundParams {
    BoundParams { d, s, w, k: cfg.k, c: cfg.c, p_err: cfg.p_err }
}

pub fn verify(ctx: &Context) -> CliResult<Outcome> {
    let cfg = ctx.config("verify")?;
    let client = cfg.client()?;
    let (seed, trials) = (ctx.seed(), ctx.trials(1000));
    let (fam, groups) = family_and_groups(cfg)?;
    let z_star = match cfg.z_star {
        Some(z) => Some(z),
        None if client.output_mode() == OutputMode::Computation && client.structure.n() <= IDEAL_WIDTH_CAP => {
            let p1: f64 = ideal_distribution(&client)?.iter().filter(|(k, _)| k[0]).map(|(_, p)| p).sum();
            if (p1 - 0.5).abs() < 1e-12 {
                None
            } else {
                Some(p1 > 0.5)
            }
        }
        None => None,
    };
    let params = mbdqc::verifier::VerificationParams { seed, ..cfg.verify };
    let vc = VerifyConfig { computation: client, z_star, params, groups: groups.clone(), adversary: cfg.adversary()? };
    let stats = monte_carlo(&vc, trials)?;
    let bound = security_error(
        &bound_params(cfg, params.d, params.s, params.w),
        GridOptions { convention: ctx.convention, ..GridOptions::default() },
    )?;
    let result = json!({
        "d": params.d,
        "s": params.s,
        "w": params.w,
        "trials": trials,
        "z_star": z_star.map(u8::from),
        "accept_rate": stats.accept_rate(),
        "reject_rate": stats.reject_rate(),
        "accept_and_wrong_rate": stats.accept_and_wrong_rate(),
        "trap_failure_histogram": stats.trap_failure_histogram,
        "groups": groups.len(),
        "eps_cor": eps_cor(params.d, cfg.c)?,
        "security": bound,
    });
    let a = stats.accept_rate();
    let aw = stats.accept_and_wrong_rate();
    let report = format!(
        "verify: {trials} trials, accept {:.4} ± {:.4}, accept-and-wrong {:.4} ± {:.4}, security bound {:.3e}\n",
        a.value, a.stderr, aw.value, aw.stderr, bound.p_d
    );
    Ok(Outcome {
        bundle: Bundle {
            summary: envelope("verify", seed, ctx.source(), result)?,
            runs: Some(stats.records),
            traps: Some(trap_table(&fam, &groups)),
            transcripts: None,
        },
        report,
        failure: None,
    })
}

pub fn traps(ctx: &Context) -> CliResult<Outcome> {
    let cfg = ctx.config("traps")?;
    let (fam, groups) = family_and_groups(cfg)?;
    let k = cfg.structure.width();
    let mode = if k <= ENUMERATION_CAP { CoverageMode::Exhaustive } else { CoverageMode::SingletonProof };
    let coverage = covers_all_harmful(&fam, mode)?;
    let graph = CompatibilityGraph::from_traps(&fam.traps)?;
    let greedy = merge_traps(&fam, MergeStrategy::GreedyLargestFirst)?.len();
    let exact = if fam.len() <= EXACT_MERGE_CAP { Some(merge_traps(&fam, MergeStrategy::ExactSmall)?.len()) } else { None };
    let result = json!({
        "traps": fam.len(),
        "coverage_mode": format!("{mode:?}"),
        "covers_all_harmful": coverage.covered,
        "witness": coverage.witness.map(|w| w.to_string()),
        "incompatible_pairs": graph.edges().len(),
        "bipartite": graph.is_bipartite(),
        "groups": groups.len(),
        "greedy_groups": greedy,
        "exact_groups": exact,
    });
    let report = format!(
        "traps: {} traps, {} groups, covers all harmful deviations: {}\n",
        fam.len(),
        groups.len(),
        coverage.covered
    );
    Ok(Outcome {
        bundle: Bundle {
            summary: envelope("traps", ctx.seed(), ctx.source(), result)?,
            traps: Some(trap_table(&fam, &groups)),
            ..Bundle::default()
        },
        report,
        failure: None,
    })
}

/// Overrides for the `bounds` subcommand.
#[derive(Debug, Clone, Copy, Default)]
pub struct BoundFlags {
    pub d: Option<usize>,
    pub s: Option<usize>,
    pub w: Option<usize>,
    pub k: Option<usize>,
    pub c: Option<f64>,
    pub p_err: Option<f64>,
}

fn bound_table(b: &SecurityBreakdown) -> String {
    let mut s = String::new();
    let p = &b.params;
    let _ = writeln!(s, "bounds: d={} s={} w={} k={} c={} ({} margin)", p.d, p.s, p.w, p.k, p.c, convention_name(b.convention));
    let rows = [
        ("alpha", b.alpha),
        ("delta", b.delta),
        ("delta (other convention)", b.delta_alternative),
        ("phi", b.phi),
        ("eps(phi)", b.eps_phi),
        ("nu(phi)", b.nu_phi),
        ("grid p_d", b.grid_p_d),
        ("p_d", b.p_d),
        ("-log2 p_d", b.neg_log2_p_d),
    ];
    for (name, v) in rows {
        let _ = writeln!(s, "  {name:<26}{v:.6e}");
    }
    if let Some(d) = &b.diagnostic {
        let _ = writeln!(s, "  note: {d}");
    }
    s
}

pub fn bounds(ctx: &Context, flags: BoundFlags) -> CliResult<Outcome> {
    let cfg = ctx.config.as_ref();
    let need = |v: Option<usize>, from_cfg: Option<usize>, name: &str| {
        v.or(from_cfg).ok_or_else(|| CliError::Usage(format!("bounds needs --{name} or a config")))
    };
    let params = BoundParams {
        d: need(flags.d, cfg.map(|c| c.verify.d), "d")?,
        s: need(flags.s, cfg.map(|c| c.verify.s), "s")?,
        w: need(flags.w, cfg.map(|c| c.verify.w), "w")?,
        k: need(flags.k, cfg.map(|c| c.k), "k")?,
        c: flags.c.or(cfg.map(|c| c.c)).unwrap_or(0.0),
        p_err: flags.p_err.or(cfg.map(|c| c.p_err)).unwrap_or(0.0),
    };
    let b = security_error(&params, GridOptions { convention: ctx.convention, ..GridOptions::default() })?;
    let report = bound_table(&b);
    let result = json!({ "security": b, "eps_cor": eps_cor(params.d, params.c)? });
    Ok(Outcome {
        bundle: Bundle { summary: envelope("bounds", ctx.seed(), ctx.source(), result)?, ..Bundle::default() },
        report,
        failure: None,
    })
}

pub fn twirl_check(ctx: &Context, qubits: usize) -> CliResult<Outcome> {
    if !(1..=2).contains(&qubits) {
        return Err(CliError::Usage(format!("twirl-check supports 1 or 2 qubits, got {qubits}")));
    }
    let seed = ctx.seed();
    let mut rng = derive_rng(seed, "twirl", 0, 0);
    let dim = 1usize << qubits;
    let mut rho = DensityMatrix::zeros(qubits);
    for j in 0..3 {
        let u = haar_unitary(dim, &mut rng);
        let v = u.column(0).into_owned();
        rho.add_scaled((j + 1) as f64 / 6.0, &DensityMatrix::from_matrix(&v * v.adjoint())?)?;
    }
    let all = enumerate_paulis(qubits, true)?;
    let scale = C64::new(4f64.powi(qubits as i32), 0.0);
    let (mut off, mut diag) = (0.0f64, 0.0f64);
    for e1 in &all {
        for e2 in &all {
            let m = pauli_twirl_check(e1, e2, &rho)?;
            if e1 == e2 {
                let em = pauli_matrix(e1);
                diag = diag.max(operator_norm(&(m - (&em * rho.matrix() * em.adjoint()) * scale)));
            } else {
                off = off.max(operator_norm(&m));
            }
        }
    }
    let passed = off < TWIRL_TOLERANCE && diag < TWIRL_TOLERANCE;
    let result = json!({
        "qubits": qubits,
        "pairs": all.len() * all.len(),
        "max_off_diagonal_norm": off,
        "max_diagonal_error": diag,
        "tolerance": TWIRL_TOLERANCE,
        "passed": passed,
    });
    Ok(Outcome {
        bundle: Bundle { summary: envelope("twirl-check", seed, ctx.source(), result)?, ..Bundle::default() },
        report: format!("twirl-check: off-diagonal {off:.2e}, diagonal error {diag:.2e}\n"),
        failure: (!passed).then(|| format!("twirl terms off by {:.2e}", off.max(diag))),
    })
}

pub fn blindness_check(ctx: &Context) -> CliResult<Outcome> {
    let cfg = ctx.config("blindness-check")?;
    let t = cfg.structure.t();
    let mut clients = vec![
        ("computation".to_string(), MbdqcClient::new(cfg.structure.clone(), cfg.rho.clone(), vec![InjectionChoice::T; t])?),
    ];
    if cfg.injections.iter().any(|a| !a.is_t()) {
        clients.push(("config".to_string(), cfg.client()?));
    }
    for (i, trap) in singleton_family(&cfg.structure)?.traps.iter().enumerate() {
        clients.push((format!("trap {}", i + 1), trap.client(&cfg.structure)?));
    }
    let steps = client_message_count(&clients[0].1)?;
    let mut worst = 0.0f64;
    let mut per_step = Vec::with_capacity(steps);
    for step in 1..=steps {
        let base = server_view(&clients[0].1, step)?;
        let mut step_worst = 0.0f64;
        for (_, other) in &clients[1..] {
            step_worst = step_worst.max(view_distance(&base, &server_view(other, step)?)?);
        }
        per_step.push(step_worst);
        worst = worst.max(step_worst);
    }
    let passed = worst < BLINDNESS_TOLERANCE;
    let result = json!({
        "configurations": clients.iter().map(|(name, _)| name.clone()).collect::<Vec<_>>(),
        "steps": steps,
        "max_trace_distance_per_step": per_step,
        "max_trace_distance": worst,
        "tolerance": BLINDNESS_TOLERANCE,
        "passed": passed,
    });
    Ok(Outcome {
        bundle: Bundle { summary: envelope("blindness-check", ctx.seed(), ctx.source(), result)?, ..Bundle::default() },
        report: format!(
            "blindness-check: {} configurations, {steps} steps, max trace distance {worst:.2e}\n",
            clients.len()
        ),
        failure: (!passed).then(|| format!("server views differ by {worst:.2e}")),
    })
}

pub fn reduction_check(ctx: &Context) -> CliResult<Outcome> {
    let cfg = ctx.config("reduction-check")?;
    let client = cfg.client()?;
    let (n, t) = (cfg.structure.n(), cfg.structure.t());
    let seed = ctx.seed();
    let count = ctx.trials.unwrap_or(20);
    let mut points = vec![DeviationPoint::BeforeFinalMeasurement];
    points.extend((1..=t).map(DeviationPoint::BeforeInjectionMeasurement));
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for j in 0..count {
        let point = points[j as usize % points.len()];
        let w_priv = (j % 2) as usize;
        let live = live_wires(point, n).len();
        let u = haar_unitary(1 << (live + w_priv), &mut derive_rng(seed, "reduction", j, 0));
        let rep = pauli_reduction_check(&client, point, &u, w_priv)?;
        let d = rep.client_distance.max(rep.joint_distance);
        worst = worst.max(d);
        rows.push(json!({ "point": format!("{point:?}"), "w_priv": w_priv, "trace_distance": d }));
    }
    let passed = worst < REDUCTION_TOLERANCE;
    let result = json!({
        "unitaries": count,
        "rows": rows,
        "max_trace_distance": worst,
        "tolerance": REDUCTION_TOLERANCE,
        "passed": passed,
    });
    Ok(Outcome {
        bundle: Bundle { summary: envelope("reduction-check", seed, ctx.source(), result)?, ..Bundle::default() },
        report: format!("reduction-check: {count} unitaries, max trace distance {worst:.2e}\n"),
        failure: (!passed).then(|| format!("reduction off by {worst:.2e}")),
    })
}

fn convention_name(c: DeltaConvention) -> &'static str {
    match c {
        DeltaConvention::Range => "range",
        DeltaConvention::Quotient => "quotient",
    }
}

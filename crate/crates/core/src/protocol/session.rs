//! Client and server state machines for one delegated session.
//!
//! A session runs `t` blind injections followed by blind measurement of the
//! `n` register wires. With back-and-forth, the register travels back to the
//! client and is re-padded before every layer; without it, the client sends
//! the register once plus one ancilla per injection.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::clifford::{injection_gadget, CliffordCircuit, CliffordStructure, Gate};
use crate::dense::{Angle, DensityMatrix, InputLabel, StateVector};
use crate::error::{check_dim, Error, Result};
use crate::pauli::{PauliString, SinglePauliLabel};
use crate::rng::Randomness;

use super::backend::{BackendKind, Register};
use super::behavior::{live_wires, DeviationPoint, ServerBehavior};
use super::transcript::{Direction, ProtocolMessage, SessionTranscript};

/// State injected by the client: `|T⟩` or one of the six stabilizer states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InjectionChoice {
    T,
    Stabilizer(SinglePauliLabel),
}

impl InjectionChoice {
    pub const ALL: [InjectionChoice; 7] = [
        InjectionChoice::T,
        InjectionChoice::Stabilizer(SinglePauliLabel::PLUS_X),
        InjectionChoice::Stabilizer(SinglePauliLabel::MINUS_X),
        InjectionChoice::Stabilizer(SinglePauliLabel::PLUS_Y),
        InjectionChoice::Stabilizer(SinglePauliLabel::MINUS_Y),
        InjectionChoice::Stabilizer(SinglePauliLabel::PLUS_Z),
        InjectionChoice::Stabilizer(SinglePauliLabel::MINUS_Z),
    ];

    pub fn is_t(&self) -> bool {
        matches!(self, InjectionChoice::T)
    }

    pub fn label(&self) -> InputLabel {
        match self {
            InjectionChoice::T => InputLabel::T,
            InjectionChoice::Stabilizer(l) => InputLabel::Stabilizer(*l),
        }
    }
}

impl std::fmt::Display for InjectionChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.label())
    }
}

impl std::str::FromStr for InjectionChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.parse::<InputLabel>()? {
            InputLabel::T => Ok(InjectionChoice::T),
            InputLabel::Stabilizer(l) => Ok(InjectionChoice::Stabilizer(l)),
            InputLabel::Biased(_) => Err(Error::Parse(format!("{s:?} is not an injectable state"))),
        }
    }
}

/// Client pad `X^a Z^r`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct KeyState {
    pub a: Vec<bool>,
    pub r: Vec<bool>,
}

impl KeyState {
    pub fn new(a: Vec<bool>, r: Vec<bool>) -> Result<Self> {
        check_dim(a.len(), r.len())?;
        Ok(Self { a, r })
    }

    pub fn k(&self) -> usize {
        self.a.len()
    }

    pub fn pauli(&self) -> PauliString {
        PauliString::from_bits(&self.a, &self.r, 0).expect("equal lengths")
    }

    pub fn truncated(&self, k: usize) -> Self {
        Self { a: self.a[..k].to_vec(), r: self.r[..k].to_vec() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelMode {
    /// Register returned and re-sent around every layer.
    BackAndForth,
    /// Register sent once; only ancillas follow.
    #[default]
    NoBackAndForth,
}

/// Which output the session produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputMode {
    /// Every injection is `|T⟩`; output is the `n` register bits.
    Computation,
    /// Every injection is a stabilizer state; output is `x ‖ b'`.
    MagicFree,
    /// Exploratory mix with no correctness contract.
    Mixed,
}

/// Mode implied by the injection list; `t = 0` counts as computation.
pub fn output_mode(injections: &[InjectionChoice]) -> OutputMode {
    let t_count = injections.iter().filter(|a| a.is_t()).count();
    if t_count == injections.len() {
        OutputMode::Computation
    } else if t_count == 0 {
        OutputMode::MagicFree
    } else {
        OutputMode::Mixed
    }
}

/// Everything the client decides before a session.
#[derive(Debug, Clone, PartialEq)]
pub struct MbdqcClient {
    pub structure: CliffordStructure,
    pub rho: Vec<InputLabel>,
    pub injections: Vec<InjectionChoice>,
    pub mode: ChannelMode,
}

impl MbdqcClient {
    pub fn new(structure: CliffordStructure, rho: Vec<InputLabel>, injections: Vec<InjectionChoice>) -> Result<Self> {
        let c = Self { structure, rho, injections, mode: ChannelMode::NoBackAndForth };
        c.validate()?;
        Ok(c)
    }

    pub fn with_mode(mut self, mode: ChannelMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_dim(self.structure.n(), self.rho.len())?;
        if self.injections.len() != self.structure.t() {
            return Err(Error::InvalidParams(format!(
                "{} injection choices for t = {}",
                self.injections.len(),
                self.structure.t()
            )));
        }
        for l in &self.rho {
            l.amplitudes()?;
        }
        Ok(())
    }

    pub fn output_mode(&self) -> OutputMode {
        output_mode(&self.injections)
    }

    /// True when every prepared state is a stabilizer state.
    pub fn is_stabilizer(&self) -> bool {
        self.rho.iter().all(InputLabel::is_stabilizer) && self.injections.iter().all(|a| !a.is_t())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionOptions {
    pub backend: BackendKind,
    /// When false, the session stops after `C_{t+1}` and returns the still
    /// encrypted register.
    pub measure_final: bool,
    pub allow_mixed: bool,
    /// Stop right after the client's `m`-th message and snapshot the server.
    pub stop_after_client_message: Option<usize>,
}

impl Default for SessionOptions {
    fn default() -> Self {
        Self { backend: BackendKind::Auto, measure_final: true, allow_mixed: false, stop_after_client_message: None }
    }
}

/// What the server holds right after a client message.
#[derive(Debug, Clone, PartialEq)]
pub struct ServerSnapshot {
    pub angles: Vec<Angle>,
    /// Logical wires held, in order; work wires follow as `usize::MAX`.
    pub wires: Vec<usize>,
    pub state: DensityMatrix,
}

/// Full result of a session.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionRun {
    /// Decoded output: `x` in computation mode, `x ‖ b'` otherwise.
    pub output: Vec<bool>,
    pub x: Vec<bool>,
    pub b_prime: Vec<bool>,
    /// Final client pad on all `n + t` logical wires.
    pub keys: KeyState,
    pub register: Register,
    /// Backend index of each logical wire.
    pub wire_map: Vec<usize>,
    pub work_wires: Vec<usize>,
    pub transcript: SessionTranscript,
    pub snapshot: Option<ServerSnapshot>,
    /// True when noise or a deviation was actually applied.
    pub deviated: bool,
}

impl SessionRun {
    /// Decrypted register state after a run with `measure_final = false`.
    pub fn decrypted_register(&self, n: usize) -> Result<StateVector> {
        let st = self
            .register
            .as_dense()
            .ok_or_else(|| Error::Unsupported("register extraction on the stabilizer backend".into()))?;
        let keep: Vec<usize> = self.wire_map[..n].to_vec();
        let mut reg = st.extract(&keep)?;
        reg.apply_pauli(&self.keys.truncated(n).pauli())?;
        Ok(reg)
    }
}

const UNALLOCATED: usize = usize::MAX;

struct Engine<'a> {
    client: &'a MbdqcClient,
    behavior: &'a ServerBehavior,
    opts: &'a SessionOptions,
    n: usize,
    t: usize,
    reg: Register,
    wire: Vec<usize>,
    work: Vec<usize>,
    pad: PauliString,
    holds_register: bool,
    angles: Vec<Angle>,
    transcript: SessionTranscript,
    client_messages: usize,
    deviations: Option<BTreeMap<DeviationPoint, PauliString>>,
    deviated: bool,
}

impl<'a> Engine<'a> {
    fn backend_wires(&self, logical: &[usize]) -> Result<Vec<usize>> {
        logical
            .iter()
            .map(|&q| match self.wire[q] {
                UNALLOCATED => Err(Error::Contract(format!("wire {} not yet received by the server", q + 1))),
                b => Ok(b),
            })
            .collect()
    }

    fn server_gate(&mut self, g: &Gate) -> Result<()> {
        let wire = &self.wire;
        let mapped = g.remapped(|q| wire[q]);
        self.reg.apply_gate(&mapped)
    }

    fn server_circuit(&mut self, c: &CliffordCircuit) -> Result<()> {
        for g in c.gates() {
            self.server_gate(g)?;
        }
        Ok(())
    }

    fn client_update(&mut self, c: &CliffordCircuit) {
        for g in c.gates() {
            self.pad.conjugate_by_gate(g);
        }
    }

    /// Records a client message; true when the session must stop here.
    fn send(&mut self, layer: usize, msg: ProtocolMessage) -> bool {
        self.transcript.push(layer, Direction::ClientToServer, msg);
        self.client_messages += 1;
        self.opts.stop_after_client_message == Some(self.client_messages)
    }

    fn reply(&mut self, layer: usize, msg: ProtocolMessage) {
        self.transcript.push(layer, Direction::ServerToClient, msg);
    }

    /// Fresh pad on the listed logical wires, applied physically.
    fn encrypt(&mut self, wires: &[usize], rng: &mut dyn Randomness) -> Result<()> {
        let mut p = PauliString::identity(wires.len());
        for (j, &q) in wires.iter().enumerate() {
            let a = rng.secret_bit();
            let r = rng.secret_bit();
            p.set_x_bit(j, a);
            p.set_z_bit(j, r);
            self.pad.set_x_bit(q, self.pad.x_bit(q) ^ a);
            self.pad.set_z_bit(q, self.pad.z_bit(q) ^ r);
        }
        let backend = self.backend_wires(wires)?;
        self.reg.apply_pauli_on(&backend, &p)
    }

    fn deviate(&mut self, point: DeviationPoint) -> Result<()> {
        if let Some(e) = self.deviations.as_ref().and_then(|m| m.get(&point)).cloned() {
            let support = e.support();
            if !support.is_empty() {
                let backend = self.backend_wires(&support)?;
                self.reg.apply_pauli_on(&backend, &e.restrict(&support)?)?;
                self.deviated = true;
            }
        }
        if let ServerBehavior::UnitaryDeviation { point: p, unitary, w_priv } = self.behavior {
            if *p == point {
                while self.work.len() < *w_priv {
                    let idx = self.reg.append(InputLabel::Stabilizer(SinglePauliLabel::PLUS_Z))?;
                    self.work.push(idx);
                }
                let mut wires = self.backend_wires(&live_wires(point, self.n))?;
                wires.extend_from_slice(&self.work);
                self.reg.apply_unitary(&wires, unitary)?;
                self.deviated = true;
            }
        }
        Ok(())
    }

    fn snapshot(&self) -> Result<ServerSnapshot> {
        let st = self
            .reg
            .as_dense()
            .ok_or_else(|| Error::Unsupported("server snapshots on the stabilizer backend".into()))?;
        let mut logical = Vec::new();
        let mut backend = Vec::new();
        for q in 0..self.n + self.t {
            let held = if q < self.n { self.holds_register } else { self.wire[q] != UNALLOCATED };
            if held {
                logical.push(q);
                backend.push(self.wire[q]);
            }
        }
        for &w in &self.work {
            logical.push(usize::MAX);
            backend.push(w);
        }
        Ok(ServerSnapshot { angles: self.angles.clone(), wires: logical, state: st.reduced_density(&backend)? })
    }

    fn finish(self, x: Vec<bool>, b_prime: Vec<bool>, snapshot: Option<ServerSnapshot>) -> SessionRun {
        let x_dec: Vec<bool> = x.iter().enumerate().map(|(q, &b)| b ^ self.pad.x_bit(q)).collect();
        let mut output = x_dec.clone();
        if self.client.output_mode() != OutputMode::Computation {
            for (a, &b) in self.client.injections.iter().zip(&b_prime) {
                if !a.is_t() {
                    output.push(b);
                }
            }
        }
        SessionRun {
            output,
            x: x_dec,
            b_prime,
            keys: KeyState { a: self.pad.x_bits(), r: self.pad.z_bits() },
            register: self.reg,
            wire_map: self.wire,
            work_wires: self.work,
            transcript: self.transcript,
            snapshot,
            deviated: self.deviated,
        }
    }

    fn stop(self, b_prime: Vec<bool>) -> Result<SessionRun> {
        let snap = self.snapshot()?;
        Ok(self.finish(Vec::new(), b_prime, Some(snap)))
    }
}

fn wants_dense(client: &MbdqcClient, behavior: &ServerBehavior, opts: &SessionOptions) -> bool {
    !client.is_stabilizer() || behavior.needs_dense() || opts.stop_after_client_message.is_some()
}

/// Runs one session of the composed protocol.
pub fn run_session(
    client: &MbdqcClient,
    behavior: &ServerBehavior,
    opts: &SessionOptions,
    rng: &mut dyn Randomness,
) -> Result<SessionRun> {
    client.validate()?;
    let (n, t) = (client.structure.n(), client.structure.t());
    behavior.validate(n, t)?;
    if client.output_mode() == OutputMode::Mixed && !opts.allow_mixed {
        return Err(Error::MixedInjectionModes);
    }
    let dense = match opts.backend {
        BackendKind::Dense => true,
        BackendKind::Auto => wants_dense(client, behavior, opts),
        BackendKind::Stabilizer => {
            if wants_dense(client, behavior, opts) {
                return Err(Error::Unsupported("this session on the stabilizer backend".into()));
            }
            false
        }
    };
    let deviations = behavior.realize(n, t, rng.noise())?;

    let mut e = Engine {
        client,
        behavior,
        opts,
        n,
        t,
        reg: Register::empty(dense)?,
        wire: vec![UNALLOCATED; n + t],
        work: Vec::new(),
        pad: PauliString::identity(n + t),
        holds_register: false,
        angles: Vec::new(),
        transcript: SessionTranscript::default(),
        client_messages: 0,
        deviations,
        deviated: false,
    };
    let register: Vec<usize> = (0..n).collect();

    for (q, l) in client.rho.iter().enumerate() {
        e.wire[q] = e.reg.append(*l)?;
    }
    e.encrypt(&register, rng)?;
    e.holds_register = true;
    let mut b_prime = Vec::with_capacity(t);
    if e.send(1, ProtocolMessage::RegisterPayload { wires: register.clone() }) {
        return e.stop(b_prime);
    }

    for i in 1..=t {
        let anc = n + i - 1;
        if client.mode == ChannelMode::BackAndForth && i > 1 {
            e.reply(i, ProtocolMessage::RegisterReturn { wires: register.clone() });
            e.holds_register = false;
            e.encrypt(&register, rng)?;
            e.holds_register = true;
            if e.send(i, ProtocolMessage::RegisterPayload { wires: register.clone() }) {
                return e.stop(b_prime);
            }
        }

        let choice = client.injections[i - 1];
        let a = rng.secret_bit();
        let r = rng.secret_bit();
        let lo = rng.secret_bit();
        let theta = Angle::from_bits(lo, rng.secret_bit());
        let idx = e.reg.append(choice.label())?;
        e.wire[anc] = idx;
        e.reg.apply_zrot(idx, theta, false)?;
        let mut p = PauliString::identity(1);
        p.set_x_bit(0, a);
        p.set_z_bit(0, r);
        e.reg.apply_pauli_on(&[idx], &p)?;
        e.pad.set_x_bit(anc, a);
        e.pad.set_z_bit(anc, r);
        if e.send(i, ProtocolMessage::AncillaPayload { wire: anc }) {
            return e.stop(b_prime);
        }

        let layer = client.structure.layer(i).widened(n + t)?;
        let gadget = injection_gadget(i, n)?.widened(n + t)?;
        e.server_circuit(&layer)?;
        e.server_circuit(&gadget)?;
        e.deviate(DeviationPoint::BeforeInjectionMeasurement(i))?;
        let b = e.reg.measure(e.wire[anc], rng)?;
        e.reply(i, ProtocolMessage::OutcomeBit(b));

        e.client_update(&layer);
        e.client_update(&gadget);
        let bp = b ^ e.pad.x_bit(anc);
        let phi = if choice.is_t() { Angle::new(bp as i64) } else { Angle::ZERO };
        let mut delta = phi.add(theta);
        if e.pad.x_bit(n - 1) {
            delta = delta.neg();
        }
        e.angles.push(delta);
        e.transcript.client_log.theta.push(theta);
        e.transcript.client_log.deltas.push(delta);
        e.transcript.client_log.b_prime.push(bp);
        b_prime.push(bp);
        if e.send(i, ProtocolMessage::AngleMessage(delta)) {
            return e.stop(b_prime);
        }
        let target = e.wire[n - 1];
        e.reg.apply_zrot(target, delta, true)?;
        if choice.is_t() {
            e.pad.set_x_bit(n - 1, e.pad.x_bit(n - 1) ^ bp);
        }
        e.transcript.client_log.keys_per_layer.push((e.pad.x_bits(), e.pad.z_bits()));
        if client.mode == ChannelMode::NoBackAndForth && e.send(i, ProtocolMessage::KeepRegisters) {
            return e.stop(b_prime);
        }
    }

    let last = t + 1;
    if client.mode == ChannelMode::BackAndForth && t > 0 {
        e.reply(last, ProtocolMessage::RegisterReturn { wires: register.clone() });
        e.holds_register = false;
        e.encrypt(&register, rng)?;
        e.holds_register = true;
        if e.send(last, ProtocolMessage::RegisterPayload { wires: register.clone() }) {
            return e.stop(b_prime);
        }
    }
    let layer = client.structure.layer(last).widened(n + t)?;
    e.server_circuit(&layer)?;
    e.client_update(&layer);
    e.transcript.client_log.keys_per_layer.push((e.pad.x_bits(), e.pad.z_bits()));
    if !opts.measure_final {
        return Ok(e.finish(Vec::new(), b_prime, None));
    }
    e.deviate(DeviationPoint::BeforeFinalMeasurement)?;
    let mut x = Vec::with_capacity(n);
    for q in 0..n {
        let w = e.wire[q];
        x.push(e.reg.measure(w, rng)?);
    }
    e.reply(last, ProtocolMessage::OutcomeString(x.clone()));
    Ok(e.finish(x, b_prime, None))
}

/// Decoded output and transcript of one composed session.
#[derive(Debug, Clone, PartialEq)]
pub struct MbdqcOutput {
    pub output: Vec<bool>,
    pub transcript: SessionTranscript,
}

/// Composed delegation with default options.
pub fn run_mbdqc(client: &MbdqcClient, behavior: &ServerBehavior, rng: &mut dyn Randomness) -> Result<MbdqcOutput> {
    let run = run_session(client, behavior, &SessionOptions::default(), rng)?;
    Ok(MbdqcOutput { output: run.output, transcript: run.transcript })
}

/// One hidden-magic-gate session on a fresh input.
#[derive(Debug, Clone, PartialEq)]
pub struct InjectionInput {
    pub c: CliffordCircuit,
    pub a: InjectionChoice,
    /// Index that names the classical register `n + i` holding `b'`.
    pub i: usize,
    pub rho: Vec<InputLabel>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InjectionRun {
    /// Encrypted register state; decrypt with `keys`.
    pub register: Register,
    pub wire_map: Vec<usize>,
    /// Pad on the `n` register wires.
    pub keys: KeyState,
    /// Decoded outcome, reported when the injection was a stabilizer state.
    pub b_prime: Option<bool>,
    /// 1-based label of the classical register that stores `b'`.
    pub classical_register: usize,
    pub transcript: SessionTranscript,
    run: SessionRun,
}

impl InjectionRun {
    /// Register state with the pad removed.
    pub fn decrypted_register(&self) -> Result<StateVector> {
        self.run.decrypted_register(self.keys.k())
    }
}

/// Blind state injection: applies `C`, then the gadget, and returns the
/// register with `T` applied to wire `n` (or the stabilizer post-measurement
/// state with `b'`).
pub fn blind_state_injection(
    input: &InjectionInput,
    behavior: &ServerBehavior,
    backend: BackendKind,
    rng: &mut dyn Randomness,
) -> Result<InjectionRun> {
    if input.i == 0 {
        return Err(Error::InvalidParams("injection index starts at 1".into()));
    }
    let n = input.c.k();
    let structure = CliffordStructure::new(n, vec![input.c.clone(), CliffordCircuit::new(n)])?;
    let client = MbdqcClient::new(structure, input.rho.clone(), vec![input.a])?;
    let opts = SessionOptions { backend, measure_final: false, ..SessionOptions::default() };
    let run = run_session(&client, behavior, &opts, rng)?;
    Ok(InjectionRun {
        register: run.register.clone(),
        wire_map: run.wire_map.clone(),
        keys: run.keys.truncated(n),
        b_prime: if input.a.is_t() { None } else { run.b_prime.first().copied() },
        classical_register: n + input.i,
        transcript: run.transcript.clone(),
        run,
    })
}

/// Blind measurement of `C[ρ]` in the computational basis.
pub fn blind_measurements(
    c: &CliffordCircuit,
    rho: &[InputLabel],
    behavior: &ServerBehavior,
    rng: &mut dyn Randomness,
) -> Result<(Vec<bool>, SessionTranscript)> {
    let structure = CliffordStructure::new(c.k(), vec![c.clone()])?;
    let client = MbdqcClient::new(structure, rho.to_vec(), Vec::new())?;
    let out = run_mbdqc(&client, behavior, rng)?;
    Ok((out.output, out.transcript))
}

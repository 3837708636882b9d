//! Direct simulation of the ideal resources (honest branch only).

use std::collections::BTreeMap;

use crate::clifford::{injection_gadget, CliffordCircuit};
use crate::dense::{DenseGate, InputLabel, StateVector};
use crate::error::{Error, Result};
use crate::rng::{enumerate_branches, enumerate_exact, Randomness};
use crate::stabilizer::StabilizerState;

use super::behavior::ServerBehavior;
use super::session::{run_session, InjectionChoice, MbdqcClient, OutputMode, SessionOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResourceKind {
    /// `T_n ∘ C[ρ]`, or the post-measurement state of `F ∘ C[ρ ⊗ ρ_A]`.
    HiddenMagicGate,
    /// Z-measurement of `C[ρ]`.
    BlindMeasurements,
    /// Z-measurement of `C_{t+1} T_n ⋯ C_1[ρ]` or of `G[ρ ⊗ ρ_A]`.
    MagicBlindDqc,
}

/// Output of an ideal resource.
#[derive(Debug, Clone, PartialEq)]
pub struct IdealOutput {
    /// Classical output (measurement resources).
    pub bits: Vec<bool>,
    /// Register state on `n` wires (hidden-magic gate).
    pub state: Option<StateVector>,
    /// Classical register `n + i` for stabilizer injections.
    pub b: Option<bool>,
}

/// Samples the ideal resource for `client`. The hidden-magic gate uses layer
/// `C_1` and the first injection; blind measurements use `C_1` alone.
pub fn ideal_resource_oracle(kind: ResourceKind, client: &MbdqcClient, rng: &mut dyn Randomness) -> Result<IdealOutput> {
    client.validate()?;
    match kind {
        ResourceKind::HiddenMagicGate => {
            let a = *client
                .injections
                .first()
                .ok_or_else(|| Error::InvalidParams("hidden-magic gate needs one injection".into()))?;
            let (state, b) = hidden_magic_gate(client.structure.layer(1), a, &client.rho, rng)?;
            Ok(IdealOutput { bits: Vec::new(), state: Some(state), b })
        }
        ResourceKind::BlindMeasurements => {
            let mut st = StateVector::prepare(&client.rho)?;
            st.apply_circuit(client.structure.layer(1))?;
            let bits = (0..client.structure.n()).map(|q| st.measure(q, rng)).collect::<Result<_>>()?;
            Ok(IdealOutput { bits, state: None, b: None })
        }
        ResourceKind::MagicBlindDqc => Ok(IdealOutput { bits: magic_blind_dqc(client, rng)?, state: None, b: None }),
    }
}

fn hidden_magic_gate(
    c: &CliffordCircuit,
    a: InjectionChoice,
    rho: &[InputLabel],
    rng: &mut dyn Randomness,
) -> Result<(StateVector, Option<bool>)> {
    let n = c.k();
    let mut st = StateVector::prepare(rho)?;
    st.apply_circuit(c)?;
    match a {
        InjectionChoice::T => {
            st.apply_gate(&DenseGate::T { q: n - 1, dagger: false })?;
            Ok((st, None))
        }
        InjectionChoice::Stabilizer(l) => {
            st.append_qubit(InputLabel::Stabilizer(l))?;
            st.apply_circuit(&injection_gadget(1, n)?)?;
            let b = st.measure(n, rng)?;
            let keep: Vec<usize> = (0..n).collect();
            Ok((st.extract(&keep)?, Some(b)))
        }
    }
}

/// State of the `n` register wires right before the final measurement of a
/// computation-mode client.
pub fn ideal_computation_state(client: &MbdqcClient) -> Result<StateVector> {
    if client.output_mode() != OutputMode::Computation {
        return Err(Error::InvalidParams("ideal computation state needs all-T injections".into()));
    }
    let n = client.structure.n();
    let mut st = StateVector::prepare(&client.rho)?;
    for (i, layer) in client.structure.layers().iter().enumerate() {
        st.apply_circuit(layer)?;
        if i < client.structure.t() {
            st.apply_gate(&DenseGate::T { q: n - 1, dagger: false })?;
        }
    }
    Ok(st)
}

fn magic_blind_dqc(client: &MbdqcClient, rng: &mut dyn Randomness) -> Result<Vec<bool>> {
    let n = client.structure.n();
    match client.output_mode() {
        OutputMode::Computation => {
            let mut st = ideal_computation_state(client)?;
            (0..n).map(|q| st.measure(q, rng)).collect()
        }
        OutputMode::MagicFree => {
            let k = client.structure.width();
            let mut labels = Vec::with_capacity(k);
            for l in &client.rho {
                labels.push(l.stabilizer().ok_or_else(|| Error::Unsupported("non-stabilizer input in magic-free mode".into()))?);
            }
            for a in &client.injections {
                if let InjectionChoice::Stabilizer(l) = a {
                    labels.push(*l);
                }
            }
            let mut st = StabilizerState::prepare_product(&labels);
            st.apply_circuit(&client.structure.flatten())?;
            (0..k).map(|q| Ok(st.measure_z(q, rng)?.outcome)).collect()
        }
        OutputMode::Mixed => Err(Error::MixedInjectionModes),
    }
}

/// Exact output distribution of the ideal resource.
pub fn ideal_distribution(client: &MbdqcClient) -> Result<BTreeMap<Vec<bool>, f64>> {
    let runs = enumerate_branches(&[], |rng| magic_blind_dqc(client, rng))?;
    Ok(accumulate(runs))
}

/// Exact decoded output distribution of the protocol, averaged over every
/// key, angle and measurement branch.
pub fn protocol_distribution(
    client: &MbdqcClient,
    behavior: &ServerBehavior,
    opts: &SessionOptions,
) -> Result<BTreeMap<Vec<bool>, f64>> {
    let runs = enumerate_exact(|rng| Ok(run_session(client, behavior, opts, rng)?.output))?;
    Ok(accumulate(runs))
}

pub(crate) fn accumulate(runs: Vec<(f64, Vec<bool>)>) -> BTreeMap<Vec<bool>, f64> {
    let mut dist = BTreeMap::new();
    for (w, bits) in runs {
        *dist.entry(bits).or_insert(0.0) += w;
    }
    dist
}

/// Largest pointwise gap between two distributions.
pub fn distribution_gap(p: &BTreeMap<Vec<bool>, f64>, q: &BTreeMap<Vec<bool>, f64>) -> f64 {
    p.keys()
        .chain(q.keys())
        .map(|k| (p.get(k).copied().unwrap_or(0.0) - q.get(k).copied().unwrap_or(0.0)).abs())
        .fold(0.0, f64::max)
}

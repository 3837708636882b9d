//! Exact key-averaged view of the server.

use std::collections::BTreeMap;

use crate::dense::{trace_norm_hermitian, Angle, DensityMatrix};
use crate::error::{Error, Result};
use crate::rng::{enumerate_exact, Sampled};

use super::behavior::ServerBehavior;
use super::session::{run_session, MbdqcClient, SessionOptions};

/// Classical-quantum state the server holds at one step: one block per
/// sequence of received angles, each block the weighted density matrix of the
/// wires the server holds.
#[derive(Debug, Clone, PartialEq)]
pub struct ServerView {
    /// Public information: the Clifford structure and channel mode.
    pub public: String,
    pub step: usize,
    pub blocks: BTreeMap<Vec<Angle>, DensityMatrix>,
}

impl ServerView {
    pub fn total_weight(&self) -> f64 {
        self.blocks.values().map(|m| m.trace().re).sum()
    }

    /// The view as one density matrix: the angle register is appended as two
    /// qubits per angle, each block placed on its diagonal angle state.
    pub fn to_density(&self) -> Result<DensityMatrix> {
        let mut iter = self.blocks.iter();
        let (a0, m0) = iter.next().ok_or_else(|| Error::Contract("empty server view".into()))?;
        let embed = |angles: &[Angle], m: &DensityMatrix| {
            let bits: Vec<bool> = angles.iter().flat_map(|a| [a.quarter_turns() & 1 == 1, a.quarter_turns() & 2 == 2]).collect();
            m.tensor(&DensityMatrix::basis(&bits))
        };
        let mut acc = embed(a0, m0);
        for (a, m) in iter {
            let e = embed(a, m);
            acc.add_scaled(1.0, &e)?;
        }
        Ok(acc)
    }
}

/// Number of client-to-server messages in an honest session of `client`.
pub fn client_message_count(client: &MbdqcClient) -> Result<usize> {
    let run = run_session(client, &ServerBehavior::Honest, &SessionOptions::default(), &mut Sampled::from_seed(0))?;
    Ok(run.transcript.client_messages())
}

/// Exact server view right after the client's `step`-th message (1-based),
/// averaged over all keys, angle secrets and honest measurement branches.
pub fn server_view(client: &MbdqcClient, step: usize) -> Result<ServerView> {
    let total = client_message_count(client)?;
    if step == 0 || step > total {
        return Err(Error::InvalidParams(format!("step {step} outside 1..={total}")));
    }
    let opts = SessionOptions { stop_after_client_message: Some(step), ..SessionOptions::default() };
    let runs = enumerate_exact(|rng| {
        let run = run_session(client, &ServerBehavior::Honest, &opts, rng)?;
        run.snapshot.ok_or_else(|| Error::Contract("session ended before the requested step".into()))
    })?;
    let mut blocks: BTreeMap<Vec<Angle>, DensityMatrix> = BTreeMap::new();
    for (w, snap) in runs {
        let k = snap.state.k();
        let entry = blocks.entry(snap.angles).or_insert_with(|| DensityMatrix::zeros(k));
        entry.add_scaled(w, &snap.state)?;
    }
    let public = format!("{} mode={:?}", client.structure.digest(), client.mode);
    Ok(ServerView { public, step, blocks })
}

/// Trace distance between two views; 1 when the public information differs.
pub fn view_distance(a: &ServerView, b: &ServerView) -> Result<f64> {
    if a.public != b.public || a.step != b.step {
        return Ok(1.0);
    }
    let mut total = 0.0;
    for key in a.blocks.keys().chain(b.blocks.keys().filter(|k| !a.blocks.contains_key(*k))) {
        match (a.blocks.get(key), b.blocks.get(key)) {
            (Some(x), Some(y)) => {
                if x.k() != y.k() {
                    return Ok(1.0);
                }
                total += trace_norm_hermitian(&(x.matrix() - y.matrix()));
            }
            (Some(x), None) | (None, Some(x)) => total += x.trace().re,
            (None, None) => {}
        }
    }
    Ok(total / 2.0)
}

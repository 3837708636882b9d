//! Empirical check that an arbitrary server deviation acts on the client's
//! outputs like a mixture of Pauli deviations.

use std::collections::BTreeMap;

use crate::dense::{i_pow, pauli_matrix, trace_norm_hermitian, CMatrix, DensityMatrix, C64};
use crate::error::{Error, Result};
use crate::pauli::{enumerate_paulis, PauliString};
use crate::rng::enumerate_exact;

use super::behavior::{live_wires, DeviationPoint, ServerBehavior};
use super::session::{run_session, MbdqcClient, SessionOptions};

/// Tolerance used by [`ReductionReport::passed`].
pub const REDUCTION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionReport {
    /// Weight `p_E = ‖M_E|0⟩‖²` of each Pauli on the live wires, in
    /// enumeration order, zero weights omitted.
    pub coefficients: Vec<(PauliString, f64)>,
    /// Trace distance between the exact and predicted client outputs.
    pub client_distance: f64,
    /// Same, jointly with the server's work register.
    pub joint_distance: f64,
}

impl ReductionReport {
    pub fn passed(&self) -> bool {
        self.client_distance < REDUCTION_TOLERANCE && self.joint_distance < REDUCTION_TOLERANCE
    }

    pub fn weight_of(&self, e: &str) -> f64 {
        let target: PauliString = match e.parse() {
            Ok(p) => p,
            Err(_) => return 0.0,
        };
        self.coefficients.iter().filter(|(p, _)| p.same_bits(&target)).map(|(_, w)| w).sum()
    }
}

/// `M_E = Tr_L[(E† ⊗ I) U] / 2^ℓ`, with the `ℓ` live wires on the low bits.
pub fn pauli_component(u: &CMatrix, e: &PauliString, w_priv: usize) -> CMatrix {
    let l = e.k();
    let dl = 1usize << l;
    let dw = 1usize << w_priv;
    let em = pauli_matrix(e);
    let mut m = CMatrix::zeros(dw, dw);
    for wo in 0..dw {
        for wi in 0..dw {
            let mut acc = C64::new(0.0, 0.0);
            for d in 0..dl {
                for dp in 0..dl {
                    let ed = em[(dp, d)].conj();
                    if ed != C64::new(0.0, 0.0) {
                        acc += ed * u[(dp + dl * wo, d + dl * wi)];
                    }
                }
            }
            m[(wo, wi)] = acc / dl as f64;
        }
    }
    m
}

type Joint = BTreeMap<Vec<bool>, DensityMatrix>;

fn add_block(joint: &mut Joint, bits: Vec<bool>, w: f64, m: &DensityMatrix) -> Result<()> {
    let k = m.k();
    joint.entry(bits).or_insert_with(|| DensityMatrix::zeros(k)).add_scaled(w, m)
}

/// Compares the exact key-averaged outcome of a run where the server applies
/// `unitary` at `point` against the Pauli mixture predicted from `unitary`.
///
/// `unitary` acts on the live wires at `point` (register wires, then the
/// wire about to be measured) followed by `w_priv` work wires.
pub fn pauli_reduction_check(
    client: &MbdqcClient,
    point: DeviationPoint,
    unitary: &CMatrix,
    w_priv: usize,
) -> Result<ReductionReport> {
    let (n, t) = (client.structure.n(), client.structure.t());
    let behavior = ServerBehavior::UnitaryDeviation { point, unitary: unitary.clone(), w_priv };
    behavior.validate(n, t)?;
    let live = live_wires(point, n);
    let opts = SessionOptions::default();

    let runs = enumerate_exact(|rng| {
        let run = run_session(client, &behavior, &opts, rng)?;
        let st = run.register.as_dense().ok_or_else(|| Error::Contract("dense backend expected".into()))?;
        Ok((run.output, st.reduced_density(&run.work_wires)?))
    })?;
    let mut exact = Joint::new();
    for (w, (bits, work)) in runs {
        add_block(&mut exact, bits, w, &work)?;
    }

    let mut coefficients = Vec::new();
    let mut predicted = Joint::new();
    for e in enumerate_paulis(live.len(), true)? {
        let m = pauli_component(unitary, &e, w_priv);
        let col: Vec<C64> = (0..m.nrows()).map(|r| m[(r, 0)]).collect();
        let p_e: f64 = col.iter().map(|c| c.norm_sqr()).sum();
        if p_e < 1e-15 {
            continue;
        }
        coefficients.push((e.clone(), p_e));
        let v = nalgebra::DVector::from_column_slice(&col) / C64::new(p_e.sqrt(), 0.0);
        let work = DensityMatrix::from_matrix(&v * v.adjoint())?;
        let full = e.embed(n + t, &live)?;
        let mut map = BTreeMap::new();
        map.insert(point, full);
        let dev = ServerBehavior::PauliDeviation(map);
        let dist = enumerate_exact(|rng| Ok(run_session(client, &dev, &opts, rng)?.output))?;
        for (w, bits) in dist {
            add_block(&mut predicted, bits, w * p_e, &work)?;
        }
    }

    let mut client_gap = 0.0;
    let mut joint_gap = 0.0;
    let keys: Vec<&Vec<bool>> = exact.keys().chain(predicted.keys().filter(|k| !exact.contains_key(*k))).collect();
    for key in keys {
        match (exact.get(key), predicted.get(key)) {
            (Some(a), Some(b)) => {
                client_gap += (a.trace().re - b.trace().re).abs();
                joint_gap += trace_norm_hermitian(&(a.matrix() - b.matrix()));
            }
            (Some(a), None) | (None, Some(a)) => {
                client_gap += a.trace().re;
                joint_gap += a.trace().re;
            }
            (None, None) => {}
        }
    }
    Ok(ReductionReport { coefficients, client_distance: client_gap / 2.0, joint_distance: joint_gap / 2.0 })
}

/// `exp(-i angle P)` for a Pauli `P` on `k` qubits.
pub fn pauli_rotation(p: &PauliString, angle: f64) -> CMatrix {
    let d = 1usize << p.k();
    let hermitian = p.clone().with_phase((p.y_count() % 4) as u8);
    let pm = pauli_matrix(&hermitian);
    CMatrix::identity(d, d) * C64::new(angle.cos(), 0.0) - pm * (i_pow(1) * angle.sin())
}

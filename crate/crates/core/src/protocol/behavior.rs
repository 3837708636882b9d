//! Server behaviors: honest, Pauli-deviating, unitary-deviating and noisy.

use std::collections::BTreeMap;

use rand::RngCore;

use crate::dense::CMatrix;
use crate::error::{Error, Result};
use crate::pauli::{Factor, PauliString};
use crate::rng::{below, unit};

/// Place in the server's schedule where a deviation acts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DeviationPoint {
    /// Just before measuring the wire of injection `i` (1-based).
    BeforeInjectionMeasurement(usize),
    /// Just before the final Z-measurement of the `n` register wires.
    BeforeFinalMeasurement,
}

/// Noise applied by an otherwise honest server on a noisy round.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseKind {
    /// One uniformly random harmful Pauli on all `n + t` wires.
    UniformHarmful,
    /// The same Pauli every noisy round.
    FixedPauli(PauliString),
    /// Independent depolarizing noise with rate `p` on each wire.
    PerQubitDepolarizing(f64),
}

/// How the server treats each session.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum ServerBehavior {
    #[default]
    Honest,
    /// Pauli applied at each listed point. Every string spans all `n + t`
    /// logical wires; factors on wires not yet received are rejected.
    PauliDeviation(BTreeMap<DeviationPoint, PauliString>),
    /// Unitary on the live wires at `point` plus `w_priv` private work wires
    /// (initialized to `|0⟩`). Live wires come first in the matrix index,
    /// in logical order, followed by the work wires. Dense backend only.
    UnitaryDeviation { point: DeviationPoint, unitary: CMatrix, w_priv: usize },
    /// With probability `p_err` per session, applies noise of `kind` just
    /// before the measurements.
    NoisyHonest { p_err: f64, kind: NoiseKind },
}

impl ServerBehavior {
    /// Deviation `e` on the `n + t` outputs, split across measurement points.
    pub fn pre_measurement(e: &PauliString, n: usize, t: usize) -> Result<Self> {
        Ok(ServerBehavior::PauliDeviation(split_pre_measurement(e, n, t)?))
    }

    pub fn needs_dense(&self) -> bool {
        matches!(self, ServerBehavior::UnitaryDeviation { .. })
    }

    pub fn validate(&self, n: usize, t: usize) -> Result<()> {
        match self {
            ServerBehavior::Honest => Ok(()),
            ServerBehavior::PauliDeviation(map) => {
                for (point, e) in map {
                    validate_point(*point, t)?;
                    if e.k() != n + t {
                        return Err(Error::Dimension { expected: n + t, got: e.k() });
                    }
                    let live = live_wires(*point, n);
                    if let Some(q) = e.support().into_iter().find(|q| !live.contains(q)) {
                        return Err(Error::InvalidParams(format!("deviation at {point:?} touches wire {} which is not live", q + 1)));
                    }
                }
                Ok(())
            }
            ServerBehavior::UnitaryDeviation { point, unitary, w_priv } => {
                validate_point(*point, t)?;
                let live = live_wires(*point, n).len();
                let dim = 1usize << (live + w_priv);
                if unitary.nrows() != dim || unitary.ncols() != dim {
                    return Err(Error::Dimension { expected: live + w_priv, got: unitary.nrows().trailing_zeros() as usize });
                }
                Ok(())
            }
            ServerBehavior::NoisyHonest { p_err, kind } => {
                if !(0.0..=1.0).contains(p_err) {
                    return Err(Error::InvalidParams(format!("p_err {p_err} outside [0, 1]")));
                }
                match kind {
                    NoiseKind::FixedPauli(e) if e.k() != n + t => Err(Error::Dimension { expected: n + t, got: e.k() }),
                    NoiseKind::PerQubitDepolarizing(p) if !(0.0..=1.0).contains(p) => {
                        Err(Error::InvalidParams(format!("depolarizing rate {p} outside [0, 1]")))
                    }
                    _ => Ok(()),
                }
            }
        }
    }

    /// Resolves per-session noise into concrete Pauli deviations.
    pub(crate) fn realize(&self, n: usize, t: usize, rng: &mut dyn RngCore) -> Result<Option<BTreeMap<DeviationPoint, PauliString>>> {
        match self {
            ServerBehavior::PauliDeviation(map) => Ok(Some(map.clone())),
            ServerBehavior::NoisyHonest { p_err, kind } => {
                if unit(rng) >= *p_err {
                    return Ok(None);
                }
                let k = n + t;
                let e = match kind {
                    NoiseKind::FixedPauli(e) => e.clone(),
                    NoiseKind::UniformHarmful => uniform_harmful(k, rng),
                    NoiseKind::PerQubitDepolarizing(p) => {
                        let mut e = PauliString::identity(k);
                        for q in 0..k {
                            if unit(rng) < *p {
                                e.set_factor(q, [Factor::X, Factor::Y, Factor::Z][below(rng, 3)]);
                            }
                        }
                        e
                    }
                };
                Ok(Some(split_pre_measurement(&e, n, t)?))
            }
            _ => Ok(None),
        }
    }
}

fn validate_point(point: DeviationPoint, t: usize) -> Result<()> {
    match point {
        DeviationPoint::BeforeInjectionMeasurement(i) if i == 0 || i > t => {
            Err(Error::InvalidParams(format!("deviation point for injection {i} outside 1..={t}")))
        }
        _ => Ok(()),
    }
}

/// Logical wires that still carry quantum data at `point`.
pub fn live_wires(point: DeviationPoint, n: usize) -> Vec<usize> {
    let mut w: Vec<usize> = (0..n).collect();
    if let DeviationPoint::BeforeInjectionMeasurement(i) = point {
        w.push(n + i - 1);
    }
    w
}

/// Splits an output deviation `e` on `n + t` wires: the factor on wire
/// `n+i` moves to injection `i`, the first `n` factors to the final layer.
pub fn split_pre_measurement(e: &PauliString, n: usize, t: usize) -> Result<BTreeMap<DeviationPoint, PauliString>> {
    if e.k() != n + t {
        return Err(Error::Dimension { expected: n + t, got: e.k() });
    }
    let mut map = BTreeMap::new();
    for i in 1..=t {
        let w = n + i - 1;
        let f = e.factor(w);
        if f != Factor::I {
            map.insert(DeviationPoint::BeforeInjectionMeasurement(i), PauliString::single(n + t, w, f)?);
        }
    }
    let mut fin = PauliString::identity(n + t);
    for q in 0..n {
        fin.set_factor(q, e.factor(q));
    }
    if !fin.is_identity_up_to_phase() {
        map.insert(DeviationPoint::BeforeFinalMeasurement, fin);
    }
    Ok(map)
}

/// Uniform sample over the `4^k − 2^k` harmful Paulis.
pub fn uniform_harmful(k: usize, rng: &mut dyn RngCore) -> PauliString {
    loop {
        let mut e = PauliString::identity(k);
        for q in 0..k {
            let d = below(rng, 4);
            e.set_factor(q, [Factor::I, Factor::X, Factor::Z, Factor::Y][d]);
        }
        if e.is_harmful() {
            return e;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn split_moves_factors_to_points() {
        let e: PauliString = "XZY".parse().unwrap();
        let map = split_pre_measurement(&e, 1, 2).unwrap();
        assert_eq!(map[&DeviationPoint::BeforeFinalMeasurement].factor_string(), "XII");
        assert_eq!(map[&DeviationPoint::BeforeInjectionMeasurement(1)].factor_string(), "IZI");
        assert_eq!(map[&DeviationPoint::BeforeInjectionMeasurement(2)].factor_string(), "IIY");
    }

    #[test]
    fn uniform_harmful_is_harmful() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            assert!(uniform_harmful(3, &mut rng).is_harmful());
        }
    }

    #[test]
    fn validate_catches_bad_points() {
        let b = ServerBehavior::pre_measurement(&"X".parse().unwrap(), 1, 0).unwrap();
        b.validate(1, 0).unwrap();
        let mut map = BTreeMap::new();
        map.insert(DeviationPoint::BeforeInjectionMeasurement(2), PauliString::identity(2));
        assert!(ServerBehavior::PauliDeviation(map).validate(1, 1).is_err());
    }
}

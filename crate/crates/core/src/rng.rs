//! Seeded random streams and exact branch enumeration.
//!
//! Every consumer of randomness goes through [`Randomness`]. A sampled source
//! draws from a ChaCha stream; an enumerating source replays fixed secret
//! bits and walks every measurement branch so callers can compute exact
//! averages with the same code path that runs Monte-Carlo trials.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Counter-free stream type used throughout.
pub type SessionRng = ChaCha8Rng;

/// Probabilities below this are treated as impossible branches.
pub const BRANCH_EPS: f64 = 1e-12;

/// Largest number of secret bits an exact enumeration may range over.
pub const SECRET_BIT_CAP: usize = 24;

/// Stream for `(master seed, purpose label, trial, round)`.
pub fn derive_rng(master: u64, label: &str, trial: u64, round: u64) -> SessionRng {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update((label.len() as u64).to_le_bytes());
    h.update(label.as_bytes());
    h.update(trial.to_le_bytes());
    h.update(round.to_le_bytes());
    let digest = h.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(seed)
}

/// Source of client secrets, measurement outcomes and server-side noise.
pub trait Randomness {
    /// One uniformly random secret key bit.
    fn secret_bit(&mut self) -> bool;

    /// Outcome of a measurement whose `1` branch has probability `p_one`.
    fn outcome(&mut self, p_one: f64) -> bool;

    /// Stream for server-side choices that are not part of the protocol.
    fn noise(&mut self) -> &mut dyn RngCore;
}

/// Draws everything from one seeded stream.
#[derive(Debug, Clone)]
pub struct Sampled {
    rng: SessionRng,
}

impl Sampled {
    pub fn new(rng: SessionRng) -> Self {
        Self { rng }
    }

    pub fn from_seed(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl Randomness for Sampled {
    fn secret_bit(&mut self) -> bool {
        self.rng.gen()
    }

    fn outcome(&mut self, p_one: f64) -> bool {
        if p_one <= 0.0 {
            false
        } else if p_one >= 1.0 {
            true
        } else {
            self.rng.gen::<f64>() < p_one
        }
    }

    fn noise(&mut self) -> &mut dyn RngCore {
        &mut self.rng
    }
}

#[derive(Debug, Clone, Copy)]
struct BranchPoint {
    choice: bool,
    alternative_open: bool,
}

/// Replays fixed secret bits and one measurement branch path.
#[derive(Debug)]
pub struct Enumerated {
    secrets: Vec<bool>,
    secrets_used: usize,
    prefix: Vec<bool>,
    path: Vec<BranchPoint>,
    weight: f64,
    noise: SessionRng,
}

impl Enumerated {
    fn new(secrets: Vec<bool>, prefix: Vec<bool>) -> Self {
        Self {
            secrets,
            secrets_used: 0,
            prefix,
            path: Vec::new(),
            weight: 1.0,
            noise: ChaCha8Rng::seed_from_u64(0),
        }
    }

    /// Probability of the branch path taken so far.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Next unexplored path in depth-first order.
    fn next_prefix(&self) -> Option<Vec<bool>> {
        let j = self.path.iter().rposition(|b| !b.choice && b.alternative_open)?;
        let mut p: Vec<bool> = self.path[..j].iter().map(|b| b.choice).collect();
        p.push(true);
        Some(p)
    }
}

impl Randomness for Enumerated {
    fn secret_bit(&mut self) -> bool {
        let b = self.secrets.get(self.secrets_used).copied().unwrap_or(false);
        self.secrets_used += 1;
        b
    }

    fn outcome(&mut self, p_one: f64) -> bool {
        let j = self.path.len();
        let p_one = p_one.clamp(0.0, 1.0);
        let one_possible = p_one > BRANCH_EPS;
        let zero_possible = p_one < 1.0 - BRANCH_EPS;
        let choice = match self.prefix.get(j) {
            Some(&c) => c,
            None => !zero_possible,
        };
        self.path.push(BranchPoint { choice, alternative_open: !choice && one_possible });
        self.weight *= if choice { p_one } else { 1.0 - p_one };
        choice
    }

    fn noise(&mut self) -> &mut dyn RngCore {
        &mut self.noise
    }
}

/// Runs `f` once per secret assignment and measurement branch and returns
/// every result with its exact probability.
///
/// The number of secret bits is discovered by a dry run and must not depend
/// on the secrets or outcomes. Results are in a fixed order.
pub fn enumerate_exact<T>(
    mut f: impl FnMut(&mut dyn Randomness) -> Result<T>,
) -> Result<Vec<(f64, T)>> {
    let mut dry = Enumerated::new(Vec::new(), Vec::new());
    f(&mut dry)?;
    let m = dry.secrets_used;
    if m > SECRET_BIT_CAP {
        return Err(Error::Capacity { what: "enumerated secret bits", got: m, cap: SECRET_BIT_CAP });
    }
    let key_weight = 1.0 / (1u64 << m) as f64;
    let mut out = Vec::new();
    for assignment in 0..(1u64 << m) {
        let secrets: Vec<bool> = (0..m).map(|b| (assignment >> b) & 1 == 1).collect();
        let mut prefix = Vec::new();
        loop {
            let mut src = Enumerated::new(secrets.clone(), prefix);
            let value = f(&mut src)?;
            if src.secrets_used != m {
                return Err(Error::Contract(format!(
                    "secret bit count varies between runs ({} vs {m})",
                    src.secrets_used
                )));
            }
            if src.weight > 0.0 {
                out.push((key_weight * src.weight, value));
            }
            match src.next_prefix() {
                Some(p) => prefix = p,
                None => break,
            }
        }
    }
    Ok(out)
}

/// Runs `f` on every measurement branch for one fixed secret assignment.
pub fn enumerate_branches<T>(
    secrets: &[bool],
    mut f: impl FnMut(&mut dyn Randomness) -> Result<T>,
) -> Result<Vec<(f64, T)>> {
    let mut out = Vec::new();
    let mut prefix = Vec::new();
    loop {
        let mut src = Enumerated::new(secrets.to_vec(), prefix);
        let value = f(&mut src)?;
        if src.weight > 0.0 {
            out.push((src.weight, value));
        }
        match src.next_prefix() {
            Some(p) => prefix = p,
            None => break,
        }
    }
    Ok(out)
}

/// Uniform index below `n` from a noise stream.
pub fn below(rng: &mut dyn RngCore, n: usize) -> usize {
    rng.gen_range(0..n)
}

/// Uniform `[0, 1)` sample from a noise stream.
pub fn unit(rng: &mut dyn RngCore) -> f64 {
    rng.gen()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_streams_are_stable_and_distinct() {
        let a = derive_rng(7, "trial", 1, 2).next_u64();
        assert_eq!(a, derive_rng(7, "trial", 1, 2).next_u64());
        assert_ne!(a, derive_rng(7, "trial", 1, 3).next_u64());
        assert_ne!(a, derive_rng(7, "trail", 1, 2).next_u64());
    }

    #[test]
    fn enumeration_weights_sum_to_one() {
        let res = enumerate_exact(|r| {
            let k = r.secret_bit();
            let o1 = r.outcome(0.25);
            let o2 = if o1 { r.outcome(0.5) } else { false };
            Ok((k, o1, o2))
        })
        .unwrap();
        let total: f64 = res.iter().map(|(w, _)| w).sum();
        assert!((total - 1.0).abs() < 1e-15);
        assert_eq!(res.len(), 2 * 3);
        let p_both: f64 = res.iter().filter(|(_, v)| v.1 && v.2).map(|(w, _)| w).sum();
        assert!((p_both - 0.125).abs() < 1e-15);
    }

    #[test]
    fn impossible_branches_are_pruned() {
        let res = enumerate_branches(&[], |r| Ok(r.outcome(0.0))).unwrap();
        assert_eq!(res, vec![(1.0, false)]);
        let res = enumerate_branches(&[], |r| Ok(r.outcome(1.0))).unwrap();
        assert_eq!(res, vec![(1.0, true)]);
    }

    #[test]
    fn secret_cap_enforced() {
        let err = enumerate_exact(|r| {
            for _ in 0..25 {
                r.secret_bit();
            }
            Ok(())
        });
        assert!(matches!(err, Err(Error::Capacity { .. })));
    }
}

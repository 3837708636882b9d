//! Pauli operators in the bitstring representation.
//!
//! A string on `k` qubits stores the operator `i^phase · X^x Z^z`, where the
//! per-qubit product is taken X first, then Z. The factor `(x, z) = (1, 1)` is
//! therefore `XZ = -iY`; text forms report the phase relative to true Pauli
//! `Y` factors.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{check_dim, check_index, Error, Result};

/// Largest qubit count accepted by [`enumerate_paulis`].
pub const ENUMERATION_CAP: usize = 10;

/// Single-qubit tensor factor, ignoring global phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Factor {
    I,
    X,
    Y,
    Z,
}

impl Factor {
    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Factor::I,
            (true, false) => Factor::X,
            (false, true) => Factor::Z,
            (true, true) => Factor::Y,
        }
    }

    pub fn bits(self) -> (bool, bool) {
        match self {
            Factor::I => (false, false),
            Factor::X => (true, false),
            Factor::Z => (false, true),
            Factor::Y => (true, true),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Factor::I => 'I',
            Factor::X => 'X',
            Factor::Y => 'Y',
            Factor::Z => 'Z',
        }
    }

    /// True when two single-qubit factors commute.
    pub fn commutes_with(self, other: Factor) -> bool {
        self == Factor::I || other == Factor::I || self == other
    }
}

/// Axis of a single-qubit stabilizer state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn factor(self) -> Factor {
        match self {
            Axis::X => Factor::X,
            Axis::Y => Factor::Y,
            Axis::Z => Factor::Z,
        }
    }
}

/// One of the six single-qubit stabilizer states, named by its signed stabilizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SinglePauliLabel {
    pub axis: Axis,
    pub negative: bool,
}

impl SinglePauliLabel {
    pub const PLUS_X: Self = Self::new(Axis::X, false);
    pub const MINUS_X: Self = Self::new(Axis::X, true);
    pub const PLUS_Y: Self = Self::new(Axis::Y, false);
    pub const MINUS_Y: Self = Self::new(Axis::Y, true);
    pub const PLUS_Z: Self = Self::new(Axis::Z, false);
    pub const MINUS_Z: Self = Self::new(Axis::Z, true);

    pub const ALL: [Self; 6] = [
        Self::PLUS_X,
        Self::MINUS_X,
        Self::PLUS_Y,
        Self::MINUS_Y,
        Self::PLUS_Z,
        Self::MINUS_Z,
    ];

    pub const fn new(axis: Axis, negative: bool) -> Self {
        Self { axis, negative }
    }

    /// Computational basis state `|bit⟩`.
    pub const fn basis(bit: bool) -> Self {
        Self::new(Axis::Z, bit)
    }

    /// The signed stabilizer of this state placed on qubit `i` of `k`.
    pub fn stabilizer(self, k: usize, i: usize) -> Result<PauliString> {
        let mut p = PauliString::single(k, i, self.axis.factor())?;
        if self.negative {
            p.negate();
        }
        Ok(p)
    }
}

impl fmt::Display for SinglePauliLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = if self.negative { '-' } else { '+' };
        write!(f, "{s}{}", self.axis.factor().as_char())
    }
}

impl FromStr for SinglePauliLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let label = match s.trim() {
            "+X" | "X" => Self::PLUS_X,
            "-X" => Self::MINUS_X,
            "+Y" | "Y" => Self::PLUS_Y,
            "-Y" => Self::MINUS_Y,
            "+Z" | "Z" | "0" => Self::PLUS_Z,
            "-Z" | "1" => Self::MINUS_Z,
            other => return Err(Error::Parse(format!("unknown stabilizer label {other:?}"))),
        };
        Ok(label)
    }
}

impl Serialize for SinglePauliLabel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for SinglePauliLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn words(k: usize) -> usize {
    k.div_ceil(64).max(1)
}

fn get(v: &[u64], i: usize) -> bool {
    (v[i / 64] >> (i % 64)) & 1 == 1
}

fn put(v: &mut [u64], i: usize, b: bool) {
    let m = 1u64 << (i % 64);
    if b {
        v[i / 64] |= m;
    } else {
        v[i / 64] &= !m;
    }
}

fn dot(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(p, q)| (p & q).count_ones()).sum()
}

/// A `k`-qubit Pauli operator `i^phase · X^x Z^z` with exact phase.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    k: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    phase: u8,
}

impl PauliString {
    pub fn identity(k: usize) -> Self {
        Self { k, x: vec![0; words(k)], z: vec![0; words(k)], phase: 0 }
    }

    /// Pauli `f` on qubit `i`, identity elsewhere, with phase chosen so a `Y`
    /// factor is the Hermitian Pauli `Y`.
    pub fn single(k: usize, i: usize, f: Factor) -> Result<Self> {
        check_index(i, k)?;
        let mut p = Self::identity(k);
        p.set_factor(i, f);
        Ok(p)
    }

    /// `Z` on every listed qubit.
    pub fn z_on(k: usize, qubits: &[usize]) -> Result<Self> {
        let mut p = Self::identity(k);
        for &q in qubits {
            check_index(q, k)?;
            let b = !get(&p.z, q);
            put(&mut p.z, q, b);
        }
        Ok(p)
    }

    /// `X` on every listed qubit.
    pub fn x_on(k: usize, qubits: &[usize]) -> Result<Self> {
        let mut p = Self::identity(k);
        for &q in qubits {
            check_index(q, k)?;
            let b = !get(&p.x, q);
            put(&mut p.x, q, b);
        }
        Ok(p)
    }

    /// Builds `i^phase X^x Z^z` from explicit bit vectors.
    pub fn from_bits(x: &[bool], z: &[bool], phase: u8) -> Result<Self> {
        check_dim(x.len(), z.len())?;
        let mut p = Self::identity(x.len());
        for (i, (&a, &b)) in x.iter().zip(z).enumerate() {
            put(&mut p.x, i, a);
            put(&mut p.z, i, b);
        }
        p.phase = phase % 4;
        Ok(p)
    }

    /// Tensor product of Hermitian Pauli factors, qubit 0 first.
    pub fn from_factors(factors: &[Factor]) -> Self {
        let mut p = Self::identity(factors.len());
        for (i, &f) in factors.iter().enumerate() {
            p.set_factor(i, f);
        }
        p
    }

    /// Overwrites the factor at `i`, keeping the operator's sign relative to
    /// Hermitian factors. Panics when `i >= k`.
    pub fn set_factor(&mut self, i: usize, f: Factor) {
        let old_y = self.factor(i) == Factor::Y;
        let (a, b) = f.bits();
        put(&mut self.x, i, a);
        put(&mut self.z, i, b);
        let new_y = f == Factor::Y;
        self.phase = (self.phase + new_y as u8 + 4 - old_y as u8) % 4;
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Exponent of `i` in the bitstring form `i^phase X^x Z^z`.
    pub fn phase(&self) -> u8 {
        self.phase
    }

    pub fn with_phase(mut self, phase: u8) -> Self {
        self.phase = phase % 4;
        self
    }

    pub fn x_bit(&self, i: usize) -> bool {
        get(&self.x, i)
    }

    pub fn z_bit(&self, i: usize) -> bool {
        get(&self.z, i)
    }

    pub(crate) fn set_x_bit(&mut self, i: usize, b: bool) {
        put(&mut self.x, i, b);
    }

    pub(crate) fn set_z_bit(&mut self, i: usize, b: bool) {
        put(&mut self.z, i, b);
    }

    pub(crate) fn add_phase(&mut self, m: u8) {
        self.phase = (self.phase + m) % 4;
    }

    pub fn x_bits(&self) -> Vec<bool> {
        (0..self.k).map(|i| self.x_bit(i)).collect()
    }

    pub fn z_bits(&self) -> Vec<bool> {
        (0..self.k).map(|i| self.z_bit(i)).collect()
    }

    /// Factor at `i` without bounds checking beyond the slice access.
    pub(crate) fn factor(&self, i: usize) -> Factor {
        Factor::from_bits(self.x_bit(i), self.z_bit(i))
    }

    /// Tensor factor at qubit `i`, ignoring global phase.
    pub fn factor_at(&self, i: usize) -> Result<Factor> {
        check_index(i, self.k)?;
        Ok(self.factor(i))
    }

    pub fn factors(&self) -> Vec<Factor> {
        (0..self.k).map(|i| self.factor(i)).collect()
    }

    /// Number of `Y` factors.
    pub fn y_count(&self) -> u32 {
        dot(&self.x, &self.z)
    }

    /// Number of non-identity factors.
    pub fn weight(&self) -> usize {
        self.x.iter().zip(&self.z).map(|(a, b)| (a | b).count_ones() as usize).sum()
    }

    /// Qubits carrying a non-identity factor.
    pub fn support(&self) -> Vec<usize> {
        (0..self.k).filter(|&i| self.factor(i) != Factor::I).collect()
    }

    /// True when the bit vectors are all zero (any phase).
    pub fn is_identity_up_to_phase(&self) -> bool {
        self.x.iter().chain(&self.z).all(|&w| w == 0)
    }

    pub fn same_bits(&self, other: &Self) -> bool {
        self.k == other.k && self.x == other.x && self.z == other.z
    }

    /// Phase exponent relative to the tensor product of Hermitian factors.
    pub fn display_phase(&self) -> u8 {
        ((self.phase as u32 + 4 * self.k as u32 - self.y_count()) % 4) as u8
    }

    pub fn is_hermitian(&self) -> bool {
        self.display_phase() % 2 == 0
    }

    /// True when the Hermitian form carries a minus sign.
    pub fn is_negative(&self) -> bool {
        self.display_phase() == 2
    }

    pub fn negate(&mut self) {
        self.phase = (self.phase + 2) % 4;
    }

    pub fn negated(mut self) -> Self {
        self.negate();
        self
    }

    /// Forces the Hermitian form with a plus sign.
    pub(crate) fn normalize_sign(&mut self) {
        self.phase = (self.y_count() % 4) as u8;
    }

    /// Group product `self · other`, tracked exactly.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        check_dim(self.k, other.k)?;
        Ok(self.mul_unchecked(other))
    }

    pub(crate) fn mul_unchecked(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.mul_assign_unchecked(other);
        out
    }

    /// `self ← self · other`.
    pub(crate) fn mul_assign_unchecked(&mut self, other: &Self) {
        // Z^b X^c = (-1)^{b·c} X^c Z^b
        let swaps = dot(&self.z, &other.x);
        self.phase = ((self.phase as u32 + other.phase as u32 + 2 * swaps) % 4) as u8;
        for (a, b) in self.x.iter_mut().zip(&other.x) {
            *a ^= b;
        }
        for (a, b) in self.z.iter_mut().zip(&other.z) {
            *a ^= b;
        }
    }

    pub(crate) fn anticommutes_unchecked(&self, other: &Self) -> bool {
        (dot(&self.x, &other.z) + dot(&self.z, &other.x)) % 2 == 1
    }

    /// Symplectic test: true iff `x_p·z_q ⊕ z_p·x_q = 0`.
    pub fn commutes(&self, other: &Self) -> Result<bool> {
        check_dim(self.k, other.k)?;
        Ok(!self.anticommutes_unchecked(other))
    }

    /// True iff some factor is `X` or `Y`, i.e. it can flip a Z-basis outcome.
    pub fn is_harmful(&self) -> bool {
        self.x.iter().any(|&w| w != 0)
    }

    /// Copy with the qubits listed in `wires` taken from `self` in order.
    pub fn restrict(&self, wires: &[usize]) -> Result<Self> {
        let mut out = Self::identity(wires.len());
        for (j, &w) in wires.iter().enumerate() {
            check_index(w, self.k)?;
            put(&mut out.x, j, self.x_bit(w));
            put(&mut out.z, j, self.z_bit(w));
        }
        out.phase = self.phase;
        Ok(out)
    }

    /// Places qubit `j` of `self` on wire `wires[j]` of a `k`-qubit string.
    pub fn embed(&self, k: usize, wires: &[usize]) -> Result<Self> {
        check_dim(self.k, wires.len())?;
        let mut out = Self::identity(k);
        for (j, &w) in wires.iter().enumerate() {
            check_index(w, k)?;
            put(&mut out.x, w, self.x_bit(j));
            put(&mut out.z, w, self.z_bit(j));
        }
        out.phase = self.phase;
        Ok(out)
    }

    /// Identity-extended copy on `k ≥ self.k` qubits.
    pub fn extended(&self, k: usize) -> Result<Self> {
        if k < self.k {
            return Err(Error::Dimension { expected: self.k, got: k });
        }
        let wires: Vec<usize> = (0..self.k).collect();
        self.embed(k, &wires)
    }

    /// Compact form without sign, e.g. `XIZY`.
    pub fn factor_string(&self) -> String {
        (0..self.k).map(|i| self.factor(i).as_char()).collect()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.display_phase() {
            0 => "+",
            1 => "+i",
            2 => "-",
            _ => "-i",
        };
        write!(f, "{prefix}{}", self.factor_string())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Parses `[+|-][i]FACTORS`, e.g. `+XIZY`, `-iZ`, `XX`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (neg, rest) = match s.strip_prefix('-') {
            Some(r) => (true, r),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        let (imag, body) = match rest.strip_prefix('i') {
            Some(r) => (true, r),
            None => (false, rest),
        };
        if body.is_empty() {
            return Err(Error::Parse(format!("empty Pauli string {s:?}")));
        }
        let factors = body
            .chars()
            .map(|c| match c {
                'I' | '_' => Ok(Factor::I),
                'X' => Ok(Factor::X),
                'Y' => Ok(Factor::Y),
                'Z' => Ok(Factor::Z),
                other => Err(Error::Parse(format!("bad Pauli factor {other:?} in {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let mut p = PauliString::from_factors(&factors);
        p.add_phase(2 * neg as u8 + imag as u8);
        Ok(p)
    }
}

impl Serialize for PauliString {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// All `4^k` phase-0 bitstring Paulis in a fixed order.
///
/// Element `m` takes base-4 digit `(m >> 2j) & 3` as `x + 2z` on qubit `j`, so
/// for one qubit the order is `I, X, Z, XZ`.
pub fn enumerate_paulis(k: usize, include_identity: bool) -> Result<Vec<PauliString>> {
    if k > ENUMERATION_CAP {
        return Err(Error::Capacity { what: "Pauli enumeration qubits", got: k, cap: ENUMERATION_CAP });
    }
    let total = 1usize << (2 * k);
    let start = usize::from(!include_identity);
    Ok((start..total).map(|m| pauli_from_index(k, m)).collect())
}

/// The `m`-th element of the [`enumerate_paulis`] order.
pub fn pauli_from_index(k: usize, m: usize) -> PauliString {
    let mut p = PauliString::identity(k);
    for j in 0..k {
        let d = (m >> (2 * j)) & 3;
        put(&mut p.x, j, d & 1 == 1);
        put(&mut p.z, j, d & 2 == 2);
    }
    p
}

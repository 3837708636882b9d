//! Dense statevector and density-matrix backend.
//!
//! Basis index bit `j` is qubit `j` (little-endian), so an operator on qubits
//! `0..k` is `M_{k-1} ⊗ ⋯ ⊗ M_0` in Kronecker order.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::clifford::{CliffordCircuit, Gate};
use crate::error::{check_dim, check_index, Error, Result};
use crate::pauli::{enumerate_paulis, Axis, PauliString, SinglePauliLabel};
use crate::rng::{enumerate_exact, Randomness};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Default statevector qubit cap.
pub const DENSE_CAP: usize = 14;

/// Default density-matrix qubit cap.
pub const DENSITY_CAP: usize = 6;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// `i^m`.
pub fn i_pow(m: u8) -> C64 {
    match m % 4 {
        0 => ONE,
        1 => I,
        2 => -ONE,
        _ => -I,
    }
}

/// Multiple of `π/2`, stored as quarter turns mod 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Angle(u8);

impl Angle {
    pub const ZERO: Angle = Angle(0);
    pub const HALF_PI: Angle = Angle(1);
    pub const PI: Angle = Angle(2);
    pub const THREE_HALF_PI: Angle = Angle(3);

    pub fn new(quarter_turns: i64) -> Self {
        Angle(quarter_turns.rem_euclid(4) as u8)
    }

    pub fn quarter_turns(self) -> u8 {
        self.0
    }

    pub fn neg(self) -> Self {
        Angle((4 - self.0) % 4)
    }

    pub fn add(self, other: Angle) -> Self {
        Angle((self.0 + other.0) % 4)
    }

    /// Angle from two bits, low bit first.
    pub fn from_bits(lo: bool, hi: bool) -> Self {
        Angle(lo as u8 + 2 * hi as u8)
    }

    /// Radians in `[0, 2π)`.
    pub fn radians(self) -> f64 {
        self.0 as f64 * std::f64::consts::FRAC_PI_2
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}pi/2", self.0)
    }
}

/// Single-qubit preparation accepted by the dense backend.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InputLabel {
    Stabilizer(SinglePauliLabel),
    /// `|T⟩ = T|+⟩`.
    T,
    /// `√(1−p)|0⟩ + √p|1⟩`, a Z-measurement that yields 1 with probability `p`.
    Biased(f64),
}

impl InputLabel {
    pub fn is_stabilizer(&self) -> bool {
        matches!(self, InputLabel::Stabilizer(_))
    }

    pub fn stabilizer(&self) -> Option<SinglePauliLabel> {
        match self {
            InputLabel::Stabilizer(l) => Some(*l),
            _ => None,
        }
    }

    /// Amplitudes `(⟨0|ψ⟩, ⟨1|ψ⟩)`.
    pub fn amplitudes(&self) -> Result<[C64; 2]> {
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        Ok(match *self {
            InputLabel::Stabilizer(l) => match (l.axis, l.negative) {
                (Axis::Z, false) => [ONE, ZERO],
                (Axis::Z, true) => [ZERO, ONE],
                (Axis::X, false) => [h, h],
                (Axis::X, true) => [h, -h],
                (Axis::Y, false) => [h, I * h],
                (Axis::Y, true) => [h, -I * h],
            },
            InputLabel::T => [h, C64::from_polar(FRAC_1_SQRT_2, std::f64::consts::FRAC_PI_4)],
            InputLabel::Biased(p) => {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidParams(format!("bias {p} outside [0, 1]")));
                }
                [C64::new((1.0 - p).sqrt(), 0.0), C64::new(p.sqrt(), 0.0)]
            }
        })
    }
}

impl From<SinglePauliLabel> for InputLabel {
    fn from(l: SinglePauliLabel) -> Self {
        InputLabel::Stabilizer(l)
    }
}

impl fmt::Display for InputLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputLabel::Stabilizer(l) => write!(f, "{l}"),
            InputLabel::T => write!(f, "T"),
            InputLabel::Biased(p) => write!(f, "bias:{p}"),
        }
    }
}

impl FromStr for InputLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "T" {
            return Ok(InputLabel::T);
        }
        if let Some(p) = s.strip_prefix("bias:") {
            let p: f64 = p.parse().map_err(|_| Error::Parse(format!("bad bias {p:?}")))?;
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Parse(format!("bias {p} outside [0, 1]")));
            }
            return Ok(InputLabel::Biased(p));
        }
        Ok(InputLabel::Stabilizer(s.parse()?))
    }
}

impl Serialize for InputLabel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for InputLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Gate applicable to a statevector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DenseGate {
    Clifford(Gate),
    T { q: usize, dagger: bool },
    /// `Z(θ) = diag(1, e^{iθ})`, or its adjoint.
    Zrot { q: usize, angle: Angle, dagger: bool },
}

/// Normalized `2^k` amplitude vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    k: usize,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn zero(k: usize) -> Result<Self> {
        if k > DENSE_CAP {
            return Err(Error::Capacity { what: "dense qubits", got: k, cap: DENSE_CAP });
        }
        let mut amps = vec![ZERO; 1 << k];
        amps[0] = ONE;
        Ok(Self { k, amps })
    }

    /// Product state, qubit `j` prepared as `labels[j]`.
    pub fn prepare(labels: &[InputLabel]) -> Result<Self> {
        let mut st = Self::zero(0)?;
        for l in labels {
            st.append_qubit(*l)?;
        }
        Ok(st)
    }

    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let len = amps.len();
        if !len.is_power_of_two() {
            return Err(Error::InvalidParams(format!("amplitude count {len} is not a power of two")));
        }
        let k = len.trailing_zeros() as usize;
        if k > DENSE_CAP {
            return Err(Error::Capacity { what: "dense qubits", got: k, cap: DENSE_CAP });
        }
        let st = Self { k, amps };
        if (st.norm_sqr() - 1.0).abs() > 1e-9 {
            return Err(Error::Contract(format!("state norm² {} is not 1", st.norm_sqr())));
        }
        Ok(st)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Tensors a fresh qubit onto the high end.
    pub fn append_qubit(&mut self, label: InputLabel) -> Result<()> {
        if self.k + 1 > DENSE_CAP {
            return Err(Error::Capacity { what: "dense qubits", got: self.k + 1, cap: DENSE_CAP });
        }
        let [a0, a1] = label.amplitudes()?;
        let mut amps = Vec::with_capacity(self.amps.len() * 2);
        amps.extend(self.amps.iter().map(|&a| a * a0));
        amps.extend(self.amps.iter().map(|&a| a * a1));
        self.amps = amps;
        self.k += 1;
        Ok(())
    }

    /// Applies the 2×2 matrix `[[m00, m01], [m10, m11]]` to qubit `q`.
    pub fn apply_single(&mut self, q: usize, m: [[C64; 2]; 2]) -> Result<()> {
        check_index(q, self.k)?;
        let bit = 1usize << q;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let (a, b) = (self.amps[i], self.amps[i | bit]);
                self.amps[i] = m[0][0] * a + m[0][1] * b;
                self.amps[i | bit] = m[1][0] * a + m[1][1] * b;
            }
        }
        Ok(())
    }

    fn apply_phase_on_one(&mut self, q: usize, ph: C64) -> Result<()> {
        check_index(q, self.k)?;
        let bit = 1usize << q;
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & bit != 0 {
                *a *= ph;
            }
        }
        Ok(())
    }

    pub fn apply_clifford(&mut self, g: &Gate) -> Result<()> {
        g.validate(self.k)?;
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        match *g {
            Gate::H { q } => self.apply_single(q, [[h, h], [h, -h]]),
            Gate::S { q } => self.apply_phase_on_one(q, I),
            Gate::X { q } => self.apply_single(q, [[ZERO, ONE], [ONE, ZERO]]),
            Gate::Y { q } => self.apply_single(q, [[ZERO, -I], [I, ZERO]]),
            Gate::Z { q } => self.apply_phase_on_one(q, -ONE),
            Gate::Cnot { control, target } => {
                let (c, t) = (1usize << control, 1usize << target);
                for i in 0..self.amps.len() {
                    if i & c != 0 && i & t == 0 {
                        self.amps.swap(i, i | t);
                    }
                }
                Ok(())
            }
            Gate::Swap { a, b } => {
                let (ba, bb) = (1usize << a, 1usize << b);
                for i in 0..self.amps.len() {
                    if i & ba != 0 && i & bb == 0 {
                        self.amps.swap(i, (i & !ba) | bb);
                    }
                }
                Ok(())
            }
        }
    }

    pub fn apply_gate(&mut self, g: &DenseGate) -> Result<()> {
        match *g {
            DenseGate::Clifford(ref c) => self.apply_clifford(c),
            DenseGate::T { q, dagger } => {
                let sign = if dagger { -1.0 } else { 1.0 };
                self.apply_phase_on_one(q, C64::from_polar(1.0, sign * std::f64::consts::FRAC_PI_4))
            }
            DenseGate::Zrot { q, angle, dagger } => {
                let a = if dagger { angle.neg() } else { angle };
                self.apply_phase_on_one(q, i_pow(a.quarter_turns()))
            }
        }
    }

    pub fn apply_circuit(&mut self, c: &CliffordCircuit) -> Result<()> {
        check_dim(self.k, c.k())?;
        for g in c.gates() {
            self.apply_clifford(g)?;
        }
        Ok(())
    }

    /// `|ψ⟩ ← P|ψ⟩` including the phase of `p`.
    pub fn apply_pauli(&mut self, p: &PauliString) -> Result<()> {
        check_dim(self.k, p.k())?;
        let (xm, zm) = masks(p);
        let ph = i_pow(p.phase());
        let mut out = vec![ZERO; self.amps.len()];
        for (c, &a) in self.amps.iter().enumerate() {
            let sign = if (zm & c).count_ones() % 2 == 1 { -ph } else { ph };
            out[c ^ xm] = sign * a;
        }
        self.amps = out;
        Ok(())
    }

    /// Applies a unitary on `wires`; wire `wires[j]` is bit `j` of the matrix index.
    pub fn apply_unitary(&mut self, wires: &[usize], u: &CMatrix) -> Result<()> {
        let m = wires.len();
        check_dim(1 << m, u.nrows())?;
        check_dim(1 << m, u.ncols())?;
        for &w in wires {
            check_index(w, self.k)?;
        }
        let mask: usize = wires.iter().map(|&w| 1usize << w).sum();
        let spread = |j: usize| -> usize {
            wires.iter().enumerate().map(|(b, &w)| ((j >> b) & 1) << w).sum()
        };
        let offsets: Vec<usize> = (0..1 << m).map(spread).collect();
        let mut buf = vec![ZERO; 1 << m];
        for base in 0..self.amps.len() {
            if base & mask != 0 {
                continue;
            }
            for (j, &o) in offsets.iter().enumerate() {
                buf[j] = self.amps[base | o];
            }
            for (i, &o) in offsets.iter().enumerate() {
                let mut acc = ZERO;
                for (j, &v) in buf.iter().enumerate() {
                    acc += u[(i, j)] * v;
                }
                self.amps[base | o] = acc;
            }
        }
        Ok(())
    }

    /// Probability that qubit `q` reads 1.
    pub fn prob_one(&self, q: usize) -> Result<f64> {
        check_index(q, self.k)?;
        let bit = 1usize << q;
        Ok(self.amps.iter().enumerate().filter(|(i, _)| i & bit != 0).map(|(_, a)| a.norm_sqr()).sum())
    }

    /// Born-rule measurement of qubit `q` with collapse.
    pub fn measure(&mut self, q: usize, rng: &mut dyn Randomness) -> Result<bool> {
        let p1 = self.prob_one(q)?;
        let outcome = rng.outcome(p1);
        let p = if outcome { p1 } else { 1.0 - p1 };
        if p <= 0.0 {
            return Err(Error::Contract(format!("measurement branch with zero probability on wire {}", q + 1)));
        }
        let bit = 1usize << q;
        let scale = 1.0 / p.sqrt();
        for (i, a) in self.amps.iter_mut().enumerate() {
            if ((i & bit) != 0) == outcome {
                *a *= scale;
            } else {
                *a = ZERO;
            }
        }
        Ok(outcome)
    }

    /// `|amplitude|²` over the computational basis.
    pub fn z_distribution(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        check_dim(self.k, other.k)?;
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn density_matrix(&self) -> DensityMatrix {
        let v = nalgebra::DVector::from_column_slice(&self.amps);
        DensityMatrix { k: self.k, m: &v * v.adjoint() }
    }

    /// Reduced state of `keep`; kept wire `keep[j]` becomes bit `j`.
    pub fn reduced_density(&self, keep: &[usize]) -> Result<DensityMatrix> {
        if keep.len() > DENSITY_CAP {
            return Err(Error::Capacity { what: "density-matrix qubits", got: keep.len(), cap: DENSITY_CAP });
        }
        for &w in keep {
            check_index(w, self.k)?;
        }
        let d = 1usize << keep.len();
        let mask: usize = keep.iter().map(|&w| 1usize << w).sum();
        let compress = |i: usize| -> usize {
            keep.iter().enumerate().map(|(b, &w)| ((i >> w) & 1) << b).sum()
        };
        let mut m = CMatrix::zeros(d, d);
        let rest = (0..self.amps.len()).filter(|i| i & mask == 0);
        let spread: Vec<usize> = (0..d)
            .map(|j| keep.iter().enumerate().map(|(b, &w)| ((j >> b) & 1) << w).sum())
            .collect();
        for base in rest {
            for (r, &sr) in spread.iter().enumerate() {
                let ar = self.amps[base | sr];
                if ar == ZERO {
                    continue;
                }
                for (c, &sc) in spread.iter().enumerate() {
                    m[(r, c)] += ar * self.amps[base | sc].conj();
                }
            }
        }
        debug_assert!(spread.iter().enumerate().all(|(j, &s)| compress(s) == j));
        Ok(DensityMatrix { k: keep.len(), m })
    }

    /// State of the `keep` wires when every other wire sits in a definite
    /// basis state. Kept wire `keep[j]` becomes qubit `j`.
    pub fn extract(&self, keep: &[usize]) -> Result<StateVector> {
        for &w in keep {
            check_index(w, self.k)?;
        }
        let mask: usize = keep.iter().map(|&w| 1usize << w).sum();
        let peak = (0..self.amps.len())
            .max_by(|&i, &j| self.amps[i].norm_sqr().total_cmp(&self.amps[j].norm_sqr()))
            .unwrap_or(0);
        let rest = peak & !mask;
        let spread: Vec<usize> = (0..1usize << keep.len())
            .map(|j| keep.iter().enumerate().map(|(b, &w)| ((j >> b) & 1) << w).sum())
            .collect();
        let amps: Vec<C64> = spread.iter().map(|&s| self.amps[rest | s]).collect();
        let kept: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (kept - 1.0).abs() > 1e-9 {
            return Err(Error::Contract("discarded wires are not in a definite basis state".into()));
        }
        Ok(StateVector { k: keep.len(), amps })
    }

    /// Trace distance between two pure states, stable near zero.
    pub fn pure_trace_distance(&self, other: &StateVector) -> Result<f64> {
        let ov = self.inner(other)?;
        let phase = if ov.norm() > 0.0 { ov / ov.norm() } else { ONE };
        let d2: f64 = self.amps.iter().zip(&other.amps).map(|(a, b)| (a * phase - b).norm_sqr()).sum();
        let d = d2.sqrt();
        Ok(d * (1.0 - d2 / 4.0).max(0.0).sqrt())
    }
}

fn masks(p: &PauliString) -> (usize, usize) {
    let mut xm = 0usize;
    let mut zm = 0usize;
    for j in 0..p.k() {
        xm |= (p.x_bit(j) as usize) << j;
        zm |= (p.z_bit(j) as usize) << j;
    }
    (xm, zm)
}

/// `2^k × 2^k` density operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    k: usize,
    m: CMatrix,
}

impl DensityMatrix {
    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        let d = m.nrows();
        if d != m.ncols() || !d.is_power_of_two() {
            return Err(Error::InvalidParams(format!("{}x{} is not a qubit operator", m.nrows(), m.ncols())));
        }
        Ok(Self { k: d.trailing_zeros() as usize, m })
    }

    pub fn zeros(k: usize) -> Self {
        Self { k, m: CMatrix::zeros(1 << k, 1 << k) }
    }

    pub fn maximally_mixed(k: usize) -> Self {
        let d = 1usize << k;
        Self { k, m: CMatrix::identity(d, d) * C64::new(1.0 / d as f64, 0.0) }
    }

    /// Diagonal state `|bits⟩⟨bits|`, bit `j` on qubit `j`.
    pub fn basis(bits: &[bool]) -> Self {
        let k = bits.len();
        let idx: usize = bits.iter().enumerate().map(|(j, &b)| (b as usize) << j).sum();
        let mut m = CMatrix::zeros(1 << k, 1 << k);
        m[(idx, idx)] = ONE;
        Self { k, m }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    /// `self += w · other`.
    pub fn add_scaled(&mut self, w: f64, other: &DensityMatrix) -> Result<()> {
        check_dim(self.k, other.k)?;
        self.m += &other.m * C64::new(w, 0.0);
        Ok(())
    }

    /// `self ⊗ other` with `other` on the high qubits.
    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix { k: self.k + other.k, m: other.m.kronecker(&self.m) }
    }

    /// Hermiticity, unit trace, and positivity at `k ≤ 4`.
    pub fn check_invariants(&self) -> Result<()> {
        let herm = (&self.m - self.m.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max);
        if herm > 1e-9 {
            return Err(Error::Contract(format!("density matrix not Hermitian (deviation {herm:e})")));
        }
        let tr = self.trace();
        if (tr - ONE).norm() > 1e-9 {
            return Err(Error::Contract(format!("density matrix trace {tr} is not 1")));
        }
        if self.k <= 4 {
            let min = hermitian_eigenvalues(&self.m).into_iter().fold(f64::INFINITY, f64::min);
            if min < -1e-7 {
                return Err(Error::Contract(format!("density matrix has eigenvalue {min:e}")));
            }
        }
        Ok(())
    }
}

/// Eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    h.symmetric_eigen().eigenvalues.iter().copied().collect()
}

/// `(1/2) ‖m1 − m2‖₁`.
pub fn trace_distance(m1: &DensityMatrix, m2: &DensityMatrix) -> Result<f64> {
    check_dim(m1.k, m2.k)?;
    Ok(trace_norm_hermitian(&(&m1.m - &m2.m)) / 2.0)
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm_hermitian(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m).iter().map(|l| l.abs()).sum()
}

/// Largest singular value.
pub fn operator_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.iter().copied().fold(0.0, f64::max)
}

/// Matrix of `i^phase X^x Z^z`.
pub fn pauli_matrix(p: &PauliString) -> CMatrix {
    let d = 1usize << p.k();
    let (xm, zm) = masks(p);
    let ph = i_pow(p.phase());
    let mut m = CMatrix::zeros(d, d);
    for c in 0..d {
        let sign = if (zm & c).count_ones() % 2 == 1 { -ph } else { ph };
        m[(c ^ xm, c)] = sign;
    }
    m
}

/// Unitary of a Clifford circuit, built column by column from basis states.
pub fn circuit_unitary(c: &CliffordCircuit) -> Result<CMatrix> {
    let d = 1usize << c.k();
    let mut u = CMatrix::zeros(d, d);
    for col in 0..d {
        let mut amps = vec![ZERO; d];
        amps[col] = ONE;
        let mut st = StateVector { k: c.k(), amps };
        st.apply_circuit(c)?;
        for (row, a) in st.amps.iter().enumerate() {
            u[(row, col)] = *a;
        }
    }
    Ok(u)
}

/// Exact average of `builder(a, r, θ)` over all pads on `k` qubits and all
/// `n_angles` angle secrets.
pub fn key_averaged_view(
    k: usize,
    n_angles: usize,
    builder: impl Fn(&[bool], &[bool], &[Angle]) -> Result<DensityMatrix>,
) -> Result<DensityMatrix> {
    let samples = enumerate_exact(|rng| {
        let a: Vec<bool> = (0..k).map(|_| rng.secret_bit()).collect();
        let r: Vec<bool> = (0..k).map(|_| rng.secret_bit()).collect();
        let th: Vec<Angle> = (0..n_angles)
            .map(|_| {
                let lo = rng.secret_bit();
                Angle::from_bits(lo, rng.secret_bit())
            })
            .collect();
        builder(&a, &r, &th)
    })?;
    let mut iter = samples.into_iter();
    let (w0, first) = iter.next().ok_or_else(|| Error::Contract("empty enumeration".into()))?;
    let mut acc = DensityMatrix::zeros(first.k);
    acc.add_scaled(w0, &first)?;
    for (w, m) in iter {
        acc.add_scaled(w, &m)?;
    }
    Ok(acc)
}

/// Haar-random unitary of dimension `dim`, from the QR factorization of a
/// complex Gaussian matrix with the phases of `R`'s diagonal removed.
pub fn haar_unitary(dim: usize, rng: &mut dyn rand::RngCore) -> CMatrix {
    use rand::Rng;
    use rand_distr::StandardNormal;
    let g = CMatrix::from_fn(dim, dim, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut u = q;
    for j in 0..dim {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..dim {
            u[(i, j)] *= ph;
        }
    }
    u
}

/// Qubit cap for [`pauli_twirl_check`].
pub const TWIRL_CAP: usize = 3;

/// `Σ_Q Q†E₁Q ρ Q†E₂†Q` over all `4^k` Paulis `Q`.
pub fn pauli_twirl_check(e1: &PauliString, e2: &PauliString, rho: &DensityMatrix) -> Result<CMatrix> {
    check_dim(e1.k(), e2.k())?;
    check_dim(e1.k(), rho.k)?;
    if rho.k > TWIRL_CAP {
        return Err(Error::Capacity { what: "twirl qubits", got: rho.k, cap: TWIRL_CAP });
    }
    let m1 = pauli_matrix(e1);
    let m2 = pauli_matrix(e2).adjoint();
    let mut acc = CMatrix::zeros(rho.m.nrows(), rho.m.ncols());
    for q in enumerate_paulis(rho.k, true)? {
        let qm = pauli_matrix(&q);
        let qd = qm.adjoint();
        acc += &qd * &m1 * &qm * &rho.m * &qd * &m2 * &qm;
    }
    Ok(acc)
}

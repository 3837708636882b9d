//! Clifford circuits, tableaux and the injection structure `G`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, check_index, Error, Result};
use crate::pauli::PauliString;

/// Gate from the set `{H, S, CNOT, SWAP, X, Y, Z}`. Indices are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "UPPERCASE")]
pub enum Gate {
    H { q: usize },
    S { q: usize },
    X { q: usize },
    Y { q: usize },
    Z { q: usize },
    Cnot { control: usize, target: usize },
    Swap { a: usize, b: usize },
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::H { q } | Gate::S { q } | Gate::X { q } | Gate::Y { q } | Gate::Z { q } => vec![q],
            Gate::Cnot { control, target } => vec![control, target],
            Gate::Swap { a, b } => vec![a, b],
        }
    }

    /// Same gate with every index sent through `map`.
    pub fn remapped(&self, map: impl Fn(usize) -> usize) -> Gate {
        match *self {
            Gate::H { q } => Gate::H { q: map(q) },
            Gate::S { q } => Gate::S { q: map(q) },
            Gate::X { q } => Gate::X { q: map(q) },
            Gate::Y { q } => Gate::Y { q: map(q) },
            Gate::Z { q } => Gate::Z { q: map(q) },
            Gate::Cnot { control, target } => Gate::Cnot { control: map(control), target: map(target) },
            Gate::Swap { a, b } => Gate::Swap { a: map(a), b: map(b) },
        }
    }

    /// Checks the index range and distinctness of two-qubit gates.
    pub fn validate(&self, k: usize) -> Result<()> {
        let qs = self.qubits();
        for &q in &qs {
            check_index(q, k)?;
        }
        if qs.len() == 2 && qs[0] == qs[1] {
            return Err(Error::Contract(format!("two-qubit gate {self} acts twice on wire {}", qs[0] + 1)));
        }
        Ok(())
    }

    /// Gates whose product is the inverse of `self`.
    pub fn inverse(&self) -> Vec<Gate> {
        match *self {
            Gate::S { q } => vec![Gate::S { q }; 3],
            g => vec![g],
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Gate::H { q } => write!(f, "H {}", q + 1),
            Gate::S { q } => write!(f, "S {}", q + 1),
            Gate::X { q } => write!(f, "X {}", q + 1),
            Gate::Y { q } => write!(f, "Y {}", q + 1),
            Gate::Z { q } => write!(f, "Z {}", q + 1),
            Gate::Cnot { control, target } => write!(f, "CNOT {} {}", control + 1, target + 1),
            Gate::Swap { a, b } => write!(f, "SWAP {} {}", a + 1, b + 1),
        }
    }
}

impl PauliString {
    /// In-place conjugation `P ← g P g†`. Indices must already be valid.
    pub(crate) fn conjugate_by_gate(&mut self, g: &Gate) {
        match *g {
            Gate::H { q } => {
                let (x, z) = (self.x_bit(q), self.z_bit(q));
                self.set_x_bit(q, z);
                self.set_z_bit(q, x);
                if x && z {
                    self.add_phase(2);
                }
            }
            Gate::S { q } => {
                let x = self.x_bit(q);
                if x {
                    self.set_z_bit(q, !self.z_bit(q));
                    self.add_phase(1);
                }
            }
            Gate::X { q } => {
                if self.z_bit(q) {
                    self.add_phase(2);
                }
            }
            Gate::Z { q } => {
                if self.x_bit(q) {
                    self.add_phase(2);
                }
            }
            Gate::Y { q } => {
                if self.x_bit(q) != self.z_bit(q) {
                    self.add_phase(2);
                }
            }
            Gate::Cnot { control, target } => {
                let xc = self.x_bit(control);
                let zt = self.z_bit(target);
                if xc {
                    self.set_x_bit(target, !self.x_bit(target));
                }
                if zt {
                    self.set_z_bit(control, !self.z_bit(control));
                }
            }
            Gate::Swap { a, b } => {
                let (xa, za, xb, zb) = (self.x_bit(a), self.z_bit(a), self.x_bit(b), self.z_bit(b));
                self.set_x_bit(a, xb);
                self.set_z_bit(a, zb);
                self.set_x_bit(b, xa);
                self.set_z_bit(b, za);
            }
        }
    }
}

/// Ordered gate list on `k` qubits; the first gate is applied first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CliffordCircuit {
    k: usize,
    gates: Vec<Gate>,
}

impl CliffordCircuit {
    pub fn new(k: usize) -> Self {
        Self { k, gates: Vec::new() }
    }

    pub fn from_gates(k: usize, gates: Vec<Gate>) -> Result<Self> {
        for g in &gates {
            g.validate(k)?;
        }
        Ok(Self { k, gates })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, g: Gate) -> Result<()> {
        g.validate(self.k)?;
        self.gates.push(g);
        Ok(())
    }

    /// Appends `other` after `self`.
    pub fn then(&self, other: &CliffordCircuit) -> Result<Self> {
        check_dim(self.k, other.k)?;
        let mut gates = self.gates.clone();
        gates.extend_from_slice(&other.gates);
        Ok(Self { k: self.k, gates })
    }

    /// Same gates on a wider register.
    pub fn widened(&self, k: usize) -> Result<Self> {
        if k < self.k {
            return Err(Error::Dimension { expected: self.k, got: k });
        }
        Ok(Self { k, gates: self.gates.clone() })
    }

    pub fn inverse(&self) -> Self {
        let gates = self.gates.iter().rev().flat_map(|g| g.inverse()).collect();
        Self { k: self.k, gates }
    }
}

/// Conjugation action of a Clifford: images of every `X_j` and `Z_j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CliffordTableau {
    x_images: Vec<PauliString>,
    z_images: Vec<PauliString>,
}

impl CliffordTableau {
    pub fn identity(k: usize) -> Self {
        let x_images = (0..k).map(|j| PauliString::x_on(k, &[j]).expect("in range")).collect();
        let z_images = (0..k).map(|j| PauliString::z_on(k, &[j]).expect("in range")).collect();
        Self { x_images, z_images }
    }

    /// Builds a tableau from images, checking the symplectic conditions.
    pub fn from_images(x_images: Vec<PauliString>, z_images: Vec<PauliString>) -> Result<Self> {
        check_dim(x_images.len(), z_images.len())?;
        let k = x_images.len();
        for p in x_images.iter().chain(&z_images) {
            check_dim(k, p.k())?;
            if !p.is_hermitian() {
                return Err(Error::Contract(format!("generator image {p} is not Hermitian")));
            }
        }
        let tab = Self { x_images, z_images };
        tab.check_symplectic()?;
        Ok(tab)
    }

    pub fn k(&self) -> usize {
        self.x_images.len()
    }

    pub fn x_image(&self, j: usize) -> &PauliString {
        &self.x_images[j]
    }

    pub fn z_image(&self, j: usize) -> &PauliString {
        &self.z_images[j]
    }

    /// Verifies `{X'_j, Z'_j} = 0` and that every other generator pair commutes.
    pub fn check_symplectic(&self) -> Result<()> {
        let k = self.k();
        let all: Vec<&PauliString> = self.x_images.iter().chain(&self.z_images).collect();
        for a in 0..2 * k {
            for b in a + 1..2 * k {
                let expect_anti = b == a + k;
                if all[a].anticommutes_unchecked(all[b]) != expect_anti {
                    return Err(Error::Contract(format!(
                        "symplectic condition fails between generator images {} and {}",
                        all[a], all[b]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Applies gate `g` after the current map.
    pub fn apply_gate(&mut self, g: &Gate) -> Result<()> {
        g.validate(self.k())?;
        for p in self.x_images.iter_mut().chain(self.z_images.iter_mut()) {
            p.conjugate_by_gate(g);
        }
        Ok(())
    }

    /// `C P C†` including sign.
    pub fn conjugate_pauli(&self, p: &PauliString) -> Result<PauliString> {
        check_dim(self.k(), p.k())?;
        let mut out = PauliString::identity(self.k()).with_phase(p.phase());
        for j in 0..self.k() {
            if p.x_bit(j) {
                out.mul_assign_unchecked(&self.x_images[j]);
            }
        }
        for j in 0..self.k() {
            if p.z_bit(j) {
                out.mul_assign_unchecked(&self.z_images[j]);
            }
        }
        Ok(out)
    }

    /// `C† P C` including sign.
    pub fn conjugate_pauli_inverse(&self, p: &PauliString) -> Result<PauliString> {
        check_dim(self.k(), p.k())?;
        let k = self.k();
        // Q = C† P C anticommutes with Z_l iff P anticommutes with C Z_l C†.
        let x: Vec<bool> = (0..k).map(|l| p.anticommutes_unchecked(&self.z_images[l])).collect();
        let z: Vec<bool> = (0..k).map(|l| p.anticommutes_unchecked(&self.x_images[l])).collect();
        let q0 = PauliString::from_bits(&x, &z, 0)?;
        let image = self.conjugate_pauli(&q0)?;
        debug_assert!(image.same_bits(p));
        let phase = (p.phase() + 4 - image.phase()) % 4;
        Ok(q0.with_phase(phase))
    }

    /// Tableau of `C†`.
    pub fn inverse(&self) -> Self {
        let k = self.k();
        let x_images = (0..k)
            .map(|j| self.conjugate_pauli_inverse(&PauliString::x_on(k, &[j]).expect("in range")).expect("same k"))
            .collect();
        let z_images = (0..k)
            .map(|j| self.conjugate_pauli_inverse(&PauliString::z_on(k, &[j]).expect("in range")).expect("same k"))
            .collect();
        Self { x_images, z_images }
    }

    /// Tableau of `other ∘ self` (apply `self` first).
    pub fn then(&self, other: &CliffordTableau) -> Result<Self> {
        check_dim(self.k(), other.k())?;
        let map = |p: &PauliString| other.conjugate_pauli(p).expect("same k");
        Ok(Self {
            x_images: self.x_images.iter().map(map).collect(),
            z_images: self.z_images.iter().map(map).collect(),
        })
    }

    /// Line-oriented dump used by golden tests: `X1 -> +ZI` per generator.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for j in 0..self.k() {
            s.push_str(&format!("X{} -> {}\n", j + 1, self.x_images[j]));
        }
        for j in 0..self.k() {
            s.push_str(&format!("Z{} -> {}\n", j + 1, self.z_images[j]));
        }
        s
    }
}

/// Conjugation action of a circuit (first gate applied first).
pub fn tableau_from_circuit(c: &CliffordCircuit) -> CliffordTableau {
    let mut tab = CliffordTableau::identity(c.k());
    for g in c.gates() {
        for p in tab.x_images.iter_mut().chain(tab.z_images.iter_mut()) {
            p.conjugate_by_gate(g);
        }
    }
    tab
}

/// `tab · P` through [`CliffordTableau::conjugate_pauli`].
pub fn conjugate_pauli(tab: &CliffordTableau, p: &PauliString) -> Result<PauliString> {
    tab.conjugate_pauli(p)
}

/// Result of pushing a pad `X^a Z^r` through a Clifford.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyUpdate {
    pub a: Vec<bool>,
    pub r: Vec<bool>,
    /// Exponent `m` with `C X^a Z^r C† = i^m X^{a'} Z^{r'}`.
    pub phase: u8,
}

/// Pad update `(a', r') = C(a, r)`.
pub fn update_keys(tab: &CliffordTableau, a: &[bool], r: &[bool]) -> Result<KeyUpdate> {
    check_dim(tab.k(), a.len())?;
    check_dim(tab.k(), r.len())?;
    let image = tab.conjugate_pauli(&PauliString::from_bits(a, r, 0)?)?;
    Ok(KeyUpdate { a: image.x_bits(), r: image.z_bits(), phase: image.phase() })
}

/// Magic-state-injection gadget `F_i` on `n + i` qubits: CNOT with the
/// ancilla `n+i-1` as control and data wire `n-1` as target, then SWAP.
pub fn injection_gadget(i: usize, n: usize) -> Result<CliffordCircuit> {
    if i == 0 || n == 0 {
        return Err(Error::InvalidParams(format!("injection gadget needs i >= 1 and n >= 1 (got i={i}, n={n})")));
    }
    let anc = n + i - 1;
    CliffordCircuit::from_gates(
        n + i,
        vec![Gate::Cnot { control: anc, target: n - 1 }, Gate::Swap { a: anc, b: n - 1 }],
    )
}

/// Public layer sequence `C_1 .. C_{t+1}`, each on the `n` register wires.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CliffordStructure {
    n: usize,
    t: usize,
    layers: Vec<CliffordCircuit>,
}

impl CliffordStructure {
    pub fn new(n: usize, layers: Vec<CliffordCircuit>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParams("structure needs n >= 1".into()));
        }
        if layers.is_empty() {
            return Err(Error::InvalidParams("structure needs at least one layer".into()));
        }
        for layer in &layers {
            check_dim(n, layer.k())?;
        }
        Ok(Self { n, t: layers.len() - 1, layers })
    }

    /// `t + 1` empty layers.
    pub fn identity(n: usize, t: usize) -> Self {
        Self { n, t, layers: vec![CliffordCircuit::new(n); t + 1] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// Total wire count `n + t`.
    pub fn width(&self) -> usize {
        self.n + self.t
    }

    pub fn layers(&self) -> &[CliffordCircuit] {
        &self.layers
    }

    /// Layer `C_i` for 1-based `i`.
    pub fn layer(&self, i: usize) -> &CliffordCircuit {
        &self.layers[i - 1]
    }

    /// `G = C_{t+1} F_t C_t ⋯ F_1 C_1` as one gate list on `n + t` wires.
    pub fn flatten(&self) -> CliffordCircuit {
        let k = self.width();
        let mut gates = Vec::new();
        for (idx, layer) in self.layers.iter().enumerate() {
            gates.extend_from_slice(layer.gates());
            if idx < self.t {
                let f = injection_gadget(idx + 1, self.n).expect("n >= 1");
                gates.extend_from_slice(f.gates());
            }
        }
        CliffordCircuit { k, gates }
    }

    /// Stable text form of the public structure.
    pub fn digest(&self) -> String {
        let mut s = format!("n={} t={}", self.n, self.t);
        for (i, layer) in self.layers.iter().enumerate() {
            s.push_str(&format!(" | C{}:", i + 1));
            for g in layer.gates() {
                s.push_str(&format!(" {g};"));
            }
        }
        s
    }
}

/// Tableau of the total magic-free Clifford `G` on `n + t` wires.
pub fn assemble_g(s: &CliffordStructure) -> CliffordTableau {
    tableau_from_circuit(&s.flatten())
}

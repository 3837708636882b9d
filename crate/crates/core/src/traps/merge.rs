//! Incompatibility graph, coloring and joint inputs for merged test runs.

use crate::clifford::CliffordStructure;
use crate::error::{check_dim, Error, Result};
use crate::pauli::{Factor, PauliString, SinglePauliLabel};
use crate::protocol::MbdqcClient;

use super::{axis_of, compatible, magic_free_client, parity, Trap, TrapFamily};

/// Largest family accepted by exact coloring.
pub const EXACT_MERGE_CAP: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MergeStrategy {
    /// Largest degree first, lowest index on ties.
    #[default]
    GreedyLargestFirst,
    /// Branch and bound; returns a minimum coloring.
    ExactSmall,
}

/// Traps that run together in one test round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrapGroup {
    /// Indices into the family.
    pub members: Vec<usize>,
    /// Index set `Q` of each member, 0-based.
    pub checks: Vec<Vec<usize>>,
    /// Joint product input on `n + t` wires.
    pub input_labels: Vec<SinglePauliLabel>,
}

impl TrapGroup {
    pub fn single(index: usize, trap: &Trap) -> Self {
        Self { members: vec![index], checks: vec![trap.q.clone()], input_labels: trap.input_labels.clone() }
    }

    /// Parity of each member over `bits`.
    pub fn parities(&self, bits: &[bool]) -> Vec<bool> {
        self.checks.iter().map(|q| parity(q, bits)).collect()
    }

    /// A group fails when any member parity is 1.
    pub fn failed(&self, bits: &[bool]) -> bool {
        self.checks.iter().any(|q| parity(q, bits))
    }

    pub fn client(&self, structure: &CliffordStructure) -> Result<MbdqcClient> {
        magic_free_client(structure, &self.input_labels)
    }
}

/// Vertices are traps; edges join incompatible pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompatibilityGraph {
    adj: Vec<Vec<bool>>,
}

impl CompatibilityGraph {
    pub fn from_traps(traps: &[Trap]) -> Result<Self> {
        let v = traps.len();
        let mut adj = vec![vec![false; v]; v];
        for i in 0..v {
            for j in i + 1..v {
                let e = !compatible(&traps[i], &traps[j])?;
                adj[i][j] = e;
                adj[j][i] = e;
            }
        }
        Ok(Self { adj })
    }

    /// Graph with explicit edges.
    pub fn from_edges(v: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj = vec![vec![false; v]; v];
        for &(a, b) in edges {
            if a >= v || b >= v || a == b {
                return Err(Error::InvalidParams(format!("bad edge ({a}, {b}) on {v} vertices")));
            }
            adj[a][b] = true;
            adj[b][a] = true;
        }
        Ok(Self { adj })
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a][b]
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let v = self.vertex_count();
        (0..v).flat_map(|i| (i + 1..v).map(move |j| (i, j))).filter(|&(i, j)| self.adj[i][j]).collect()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].iter().filter(|&&e| e).count()
    }

    pub fn is_independent(&self, set: &[usize]) -> bool {
        set.iter().enumerate().all(|(i, &a)| set[i + 1..].iter().all(|&b| !self.adj[a][b]))
    }

    pub fn is_bipartite(&self) -> bool {
        let v = self.vertex_count();
        let mut side: Vec<Option<bool>> = vec![None; v];
        for start in 0..v {
            if side[start].is_some() {
                continue;
            }
            side[start] = Some(false);
            let mut stack = vec![start];
            while let Some(u) = stack.pop() {
                let su = side[u].expect("assigned");
                for w in 0..v {
                    if !self.adj[u][w] {
                        continue;
                    }
                    match side[w] {
                        None => {
                            side[w] = Some(!su);
                            stack.push(w);
                        }
                        Some(sw) if sw == su => return false,
                        _ => {}
                    }
                }
            }
        }
        true
    }

    /// Greedy coloring, largest degree first with lowest index on ties.
    pub fn greedy_coloring(&self) -> Vec<usize> {
        let v = self.vertex_count();
        let mut order: Vec<usize> = (0..v).collect();
        order.sort_by_key(|&u| (std::cmp::Reverse(self.degree(u)), u));
        let mut color = vec![usize::MAX; v];
        for &u in &order {
            let mut c = 0;
            while (0..v).any(|w| self.adj[u][w] && color[w] == c) {
                c += 1;
            }
            color[u] = c;
        }
        color
    }

    /// Minimum coloring by branch and bound.
    pub fn exact_coloring(&self) -> Result<Vec<usize>> {
        let v = self.vertex_count();
        if v > EXACT_MERGE_CAP {
            return Err(Error::Capacity { what: "exact coloring vertices", got: v, cap: EXACT_MERGE_CAP });
        }
        let mut best = self.greedy_coloring();
        let mut best_count = color_count(&best);
        let mut order: Vec<usize> = (0..v).collect();
        order.sort_by_key(|&u| (std::cmp::Reverse(self.degree(u)), u));
        let mut color = vec![usize::MAX; v];
        self.branch(&order, 0, 0, &mut color, &mut best, &mut best_count);
        Ok(best)
    }

    fn branch(
        &self,
        order: &[usize],
        pos: usize,
        used: usize,
        color: &mut Vec<usize>,
        best: &mut Vec<usize>,
        best_count: &mut usize,
    ) {
        if used >= *best_count {
            return;
        }
        if pos == order.len() {
            *best = color.clone();
            *best_count = used;
            return;
        }
        let u = order[pos];
        for c in 0..=used.min(*best_count - 1) {
            if (0..order.len()).any(|w| self.adj[u][w] && color[w] == c) {
                continue;
            }
            color[u] = c;
            self.branch(order, pos + 1, used.max(c + 1), color, best, best_count);
            color[u] = usize::MAX;
        }
    }
}

pub(crate) fn color_count(colors: &[usize]) -> usize {
    colors.iter().map(|&c| c + 1).max().unwrap_or(0)
}

/// Partitions the family into pairwise compatible groups with joint inputs.
pub fn merge_traps(family: &TrapFamily, strategy: MergeStrategy) -> Result<Vec<TrapGroup>> {
    let graph = CompatibilityGraph::from_traps(&family.traps)?;
    let colors = match strategy {
        MergeStrategy::GreedyLargestFirst => graph.greedy_coloring(),
        MergeStrategy::ExactSmall => graph.exact_coloring()?,
    };
    let mut classes: Vec<Vec<usize>> = vec![Vec::new(); color_count(&colors)];
    for (v, &c) in colors.iter().enumerate() {
        classes[c].push(v);
    }
    classes.sort_by_key(|m| m[0]);
    classes
        .into_iter()
        .map(|members| {
            let stabs: Vec<&PauliString> = members.iter().map(|&m| &family.traps[m].stabilizer).collect();
            let input_labels = solve_joint_input(&stabs)?;
            let checks = members.iter().map(|&m| family.traps[m].q.clone()).collect();
            Ok(TrapGroup { members, checks, input_labels })
        })
        .collect()
}

/// Product input fixed by every stabilizer in `stabs`. Per qubit the axis is
/// the common non-identity factor; signs solve a GF(2) system with one
/// equation per stabilizer. Free signs default to `+`, untouched qubits to `+Z`.
pub fn solve_joint_input(stabs: &[&PauliString]) -> Result<Vec<SinglePauliLabel>> {
    let first = stabs.first().ok_or_else(|| Error::InvalidParams("no stabilizers to merge".into()))?;
    let k = first.k();
    let mut axis: Vec<Factor> = vec![Factor::I; k];
    for s in stabs {
        check_dim(k, s.k())?;
        if s.is_identity_up_to_phase() || !s.is_hermitian() {
            return Err(Error::InvalidParams(format!("{s} cannot be a trap stabilizer")));
        }
        for (i, f) in s.factors().into_iter().enumerate() {
            if f == Factor::I {
                continue;
            }
            if axis[i] != Factor::I && axis[i] != f {
                return Err(Error::SignInfeasible(format!(
                    "factors {} and {} clash on qubit {}",
                    axis[i].as_char(),
                    f.as_char(),
                    i + 1
                )));
            }
            axis[i] = f;
        }
    }
    // Rows: coefficient bits over qubits plus the right-hand side.
    let mut rows: Vec<(Vec<bool>, bool)> =
        stabs.iter().map(|s| ((0..k).map(|i| s.x_bit(i) || s.z_bit(i)).collect(), s.is_negative())).collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..k {
        let Some(p) = (r..rows.len()).find(|&i| rows[i].0[col]) else { continue };
        rows.swap(r, p);
        let (pivot_bits, pivot_rhs) = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && row.0[col] {
                for c in 0..k {
                    row.0[c] ^= pivot_bits[c];
                }
                row.1 ^= pivot_rhs;
            }
        }
        pivots.push(col);
        r += 1;
    }
    if rows[r..].iter().any(|(_, rhs)| *rhs) {
        return Err(Error::SignInfeasible("dependent stabilizers demand conflicting signs".into()));
    }
    let mut neg = vec![false; k];
    for (row, &col) in rows.iter().zip(&pivots) {
        neg[col] = row.1;
    }
    Ok((0..k)
        .map(|i| match axis[i] {
            Factor::I => SinglePauliLabel::PLUS_Z,
            f => SinglePauliLabel::new(axis_of(f), neg[i]),
        })
        .collect())
}

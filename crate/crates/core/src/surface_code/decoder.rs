//! Matching decoder over the space-time detection graph.
//!
//! Graph edges are not written down by hand. Every single X or Z fault at
//! every noise location is pushed through the Clifford part of the circuit
//! with a Pauli frame; the detectors it flips become an edge (or a boundary
//! edge) and the residual data error becomes that edge's correction. This
//! picks up the diagonal edges created by mid-circuit ancilla faults
//! without special cases.
//!
//! Z-check detectors carry X corrections and X-check detectors carry Z
//! corrections. All edges have unit weight.

use std::collections::{BTreeMap, VecDeque};

use super::layout::{CheckType, CodeLayout, Gate, N_DATA, N_QUBITS, N_STABILIZERS, TICKS_PER_ROUND};
use crate::error::{Error, Result};
use crate::pauli::Pauli;

/// Largest event count matched exactly; above it a greedy pass is used.
pub const EXACT_MATCHING_CAP: usize = 20;

const CHECKS_PER_TYPE: usize = N_STABILIZERS / 2;
const UNREACHABLE: u32 = u32::MAX / 4;

/// Measurement outcomes of every round; bit `i` set means stabilizer `i`
/// read `-1`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SyndromeRecord {
    pub rounds: Vec<u8>,
    pub perfect: u8,
}

impl SyndromeRecord {
    /// Round 0 against the all-`+1` reference, then consecutive XORs, ending
    /// with the perfect round against the last faulty one.
    pub fn detection_events(&self) -> Vec<u8> {
        let mut prev = 0u8;
        self.rounds
            .iter()
            .chain(std::iter::once(&self.perfect))
            .map(|&r| {
                let e = r ^ prev;
                prev = r;
                e
            })
            .collect()
    }
}

/// Data-qubit Pauli correction as bit masks over qubits 0–8.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct PauliCorrection {
    pub x_support: u16,
    pub z_support: u16,
}

impl PauliCorrection {
    pub fn to_pauli(&self) -> crate::pauli::PauliString {
        crate::pauli::PauliString::new(u64::from(self.x_support), u64::from(self.z_support))
    }

    pub fn is_empty(&self) -> bool {
        self.x_support == 0 && self.z_support == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
struct Frame {
    x: u32,
    z: u32,
}

impl Frame {
    fn apply(&mut self, gate: &Gate) {
        match *gate {
            Gate::Prep { qubit } | Gate::Unprep { qubit } => {
                let (bx, bz) = (self.x >> qubit & 1, self.z >> qubit & 1);
                self.x = (self.x & !(1 << qubit)) | bz << qubit;
                self.z = (self.z & !(1 << qubit)) | bx << qubit;
            }
            Gate::Cnot { control, target } => {
                self.x ^= (self.x >> control & 1) << target;
                self.z ^= (self.z >> target & 1) << control;
            }
        }
    }
}

/// Effect of one Pauli fault on the measurement record and the data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaultEffect {
    pub flips: Vec<u8>,
    pub perfect_flips: u8,
    pub data_x: u16,
    pub data_z: u16,
}

impl FaultEffect {
    pub fn detection_events(&self) -> Vec<u8> {
        SyndromeRecord { rounds: self.flips.clone(), perfect: self.perfect_flips }.detection_events()
    }
}

/// Propagates `pauli` on `qubit`, inserted after the noise of `tick` in
/// `round`, through the rest of an `n_rounds` experiment.
pub fn propagate_fault(layout: &CodeLayout, n_rounds: usize, round: usize, tick: usize, qubit: usize, pauli: Pauli) -> FaultEffect {
    let mut frame = Frame::default();
    let mut flips = vec![0u8; n_rounds];
    for (r, flip) in flips.iter_mut().enumerate() {
        for t in 0..TICKS_PER_ROUND {
            for g in &layout.schedule[t] {
                frame.apply(g);
            }
            if (r, t) == (round, tick) {
                let (x, z) = pauli.bits();
                frame.x ^= u32::from(x) << qubit;
                frame.z ^= u32::from(z) << qubit;
            }
        }
        for (i, s) in layout.stabilizers.iter().enumerate() {
            *flip |= ((frame.x >> s.ancilla & 1) as u8) << i;
        }
        let anc_mask = ((1u32 << N_QUBITS) - 1) ^ ((1u32 << N_DATA) - 1);
        frame.x &= !anc_mask;
        frame.z &= !anc_mask;
    }
    let data_x = frame.x as u16;
    let data_z = frame.z as u16;
    let perfect_flips = layout.stabilizers.iter().enumerate().fold(0u8, |acc, (i, s)| {
        let mask = s.data_mask();
        let hit = match s.kind {
            CheckType::X => data_z & mask,
            CheckType::Z => data_x & mask,
        };
        acc | ((hit.count_ones() % 2) as u8) << i
    });
    FaultEffect { flips, perfect_flips, data_x, data_z }
}

/// One check type's detection graph with all-pairs shortest paths.
#[derive(Debug, Clone)]
struct MatchingGraph {
    n_nodes: usize,
    /// `dist[u][v]`; index `n_nodes` is the boundary.
    dist: Vec<Vec<u32>>,
    frame: Vec<Vec<u16>>,
    n_edges: usize,
}

impl MatchingGraph {
    fn build(n_nodes: usize, edges: &BTreeMap<(usize, usize), u16>) -> Self {
        let boundary = n_nodes;
        let mut adj: Vec<Vec<(usize, u16)>> = vec![Vec::new(); n_nodes + 1];
        for (&(u, v), &f) in edges {
            adj[u].push((v, f));
            adj[v].push((u, f));
        }
        let mut dist = vec![vec![UNREACHABLE; n_nodes + 1]; n_nodes + 1];
        let mut frame = vec![vec![0u16; n_nodes + 1]; n_nodes + 1];
        for src in 0..n_nodes {
            let (d, f) = (&mut dist[src], &mut frame[src]);
            d[src] = 0;
            let mut queue = VecDeque::from([src]);
            while let Some(u) = queue.pop_front() {
                // paths end at the boundary; they never pass through it
                if u == boundary {
                    continue;
                }
                for &(v, ef) in &adj[u] {
                    if d[v] == UNREACHABLE {
                        d[v] = d[u] + 1;
                        f[v] = f[u] ^ ef;
                        queue.push_back(v);
                    }
                }
            }
        }
        Self { n_nodes, dist, frame, n_edges: edges.len() }
    }

    /// Minimum-weight matching of `events` (node ids) to each other or the
    /// boundary; returns the XOR of the path corrections.
    fn match_events(&self, events: &[usize]) -> Result<u16> {
        let b = self.n_nodes;
        for &e in events {
            if self.dist[e][b] >= UNREACHABLE {
                return Err(Error::Internal(format!("detector {e} cannot reach the boundary")));
            }
        }
        if events.len() > EXACT_MATCHING_CAP {
            return Ok(self.match_greedy(events));
        }
        let m = events.len();
        let full = (1usize << m) - 1;
        let mut cost = vec![u32::MAX; 1 << m];
        let mut choice = vec![(0usize, usize::MAX); 1 << m];
        cost[0] = 0;
        for mask in 1..=full {
            let i = mask.trailing_zeros() as usize;
            let rest = mask & !(1 << i);
            let mut best = cost[rest].saturating_add(self.dist[events[i]][b]);
            let mut pick = (i, usize::MAX);
            let mut others = rest;
            while others != 0 {
                let j = others.trailing_zeros() as usize;
                others &= others - 1;
                let c = cost[rest & !(1 << j)].saturating_add(self.dist[events[i]][events[j]]);
                if c < best {
                    best = c;
                    pick = (i, j);
                }
            }
            cost[mask] = best;
            choice[mask] = pick;
        }
        let mut correction = 0u16;
        let mut mask = full;
        while mask != 0 {
            let (i, j) = choice[mask];
            if j == usize::MAX {
                correction ^= self.frame[events[i]][b];
                mask &= !(1 << i);
            } else {
                correction ^= self.frame[events[i]][events[j]];
                mask &= !(1 << i) & !(1 << j);
            }
        }
        Ok(correction)
    }

    fn match_greedy(&self, events: &[usize]) -> u16 {
        let b = self.n_nodes;
        let mut open: Vec<usize> = events.to_vec();
        let mut correction = 0u16;
        while let Some(u) = open.pop() {
            let mut best = (self.dist[u][b], usize::MAX);
            for (k, &v) in open.iter().enumerate() {
                if self.dist[u][v] < best.0 {
                    best = (self.dist[u][v], k);
                }
            }
            if best.1 == usize::MAX {
                correction ^= self.frame[u][b];
            } else {
                let v = open.swap_remove(best.1);
                correction ^= self.frame[u][v];
            }
        }
        correction
    }
}

#[derive(Debug, Clone)]
pub struct Decoder {
    n_rounds: usize,
    x_checks: MatchingGraph,
    z_checks: MatchingGraph,
    hyperedges: usize,
}

impl Decoder {
    pub fn new(layout: &CodeLayout, n_rounds: usize) -> Result<Self> {
        if n_rounds == 0 {
            return Err(Error::InvalidParameter("at least one faulty round is required".into()));
        }
        let layers = n_rounds + 1;
        let n_nodes = layers * CHECKS_PER_TYPE;
        let mut x_edges: BTreeMap<(usize, usize), u16> = BTreeMap::new();
        let mut z_edges: BTreeMap<(usize, usize), u16> = BTreeMap::new();
        let mut hyperedges = 0;
        for round in 0..n_rounds {
            for tick in 0..TICKS_PER_ROUND {
                for qubit in 0..N_QUBITS {
                    for pauli in [Pauli::X, Pauli::Z] {
                        let effect = propagate_fault(layout, n_rounds, round, tick, qubit, pauli);
                        let events = effect.detection_events();
                        for (kind, edges, frame) in
                            [(CheckType::X, &mut x_edges, effect.data_z), (CheckType::Z, &mut z_edges, effect.data_x)]
                        {
                            let offset = if kind == CheckType::X { 0 } else { CHECKS_PER_TYPE };
                            let nodes: Vec<usize> = events
                                .iter()
                                .enumerate()
                                .flat_map(|(l, &e)| {
                                    (0..CHECKS_PER_TYPE).filter(move |j| e >> (j + offset) & 1 == 1).map(move |j| l * CHECKS_PER_TYPE + j)
                                })
                                .collect();
                            let key = match nodes.as_slice() {
                                [] => continue,
                                [u] => (*u, n_nodes),
                                [u, v] => (*u, *v),
                                _ => {
                                    hyperedges += 1;
                                    continue;
                                }
                            };
                            edges.entry(key).or_insert(frame);
                        }
                    }
                }
            }
        }
        Ok(Self {
            n_rounds,
            x_checks: MatchingGraph::build(n_nodes, &x_edges),
            z_checks: MatchingGraph::build(n_nodes, &z_edges),
            hyperedges,
        })
    }

    pub fn n_rounds(&self) -> usize {
        self.n_rounds
    }

    /// `(X-check edges, Z-check edges)`.
    pub fn edge_counts(&self) -> (usize, usize) {
        (self.x_checks.n_edges, self.z_checks.n_edges)
    }

    /// Single faults whose detectors could not be represented by one edge.
    pub fn hyperedge_count(&self) -> usize {
        self.hyperedges
    }

    pub fn decode(&self, record: &SyndromeRecord) -> Result<PauliCorrection> {
        if record.rounds.len() != self.n_rounds {
            return Err(Error::DimensionMismatch(format!(
                "record has {} faulty rounds, decoder expects {}",
                record.rounds.len(),
                self.n_rounds
            )));
        }
        let events = record.detection_events();
        let collect = |offset: usize| -> Vec<usize> {
            events
                .iter()
                .enumerate()
                .flat_map(|(l, &e)| (0..CHECKS_PER_TYPE).filter(move |j| e >> (j + offset) & 1 == 1).map(move |j| l * CHECKS_PER_TYPE + j))
                .collect()
        };
        let z_support = self.x_checks.match_events(&collect(0))?;
        let x_support = self.z_checks.match_events(&collect(CHECKS_PER_TYPE))?;
        Ok(PauliCorrection { x_support, z_support })
    }
}

//! Distance-3 rotated surface code geometry and its syndrome schedule.
//!
//! Data qubit `q = 3r + c` sits at `(x, y) = (2c + 1, 2r + 1)`; each check
//! sits at the centre of its plaquette and touches the data qubits on its
//! diagonal corners. Qubits 9–12 are the X-check ancillas, 13–16 the Z-check
//! ancillas.
//!
//! ```text
//!         X2
//!    0 ─── 1 ─── 2
//! Z2 │  X0 │  Z0 │
//!    3 ─── 4 ─── 5
//!    │  Z1 │  X1 │ Z3
//!    6 ─── 7 ─── 8
//!      X3
//! ```

use std::fmt::Write as _;
use std::sync::OnceLock;

use crate::pauli::{Pauli, PauliString};

pub const N_DATA: usize = 9;
pub const N_ANCILLA: usize = 8;
pub const N_QUBITS: usize = N_DATA + N_ANCILLA;
pub const N_STABILIZERS: usize = 8;
pub const TICKS_PER_ROUND: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CheckType {
    X,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Corner {
    NW,
    NE,
    SW,
    SE,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stabilizer {
    pub name: &'static str,
    pub kind: CheckType,
    pub ancilla: usize,
    pub coord: (i32, i32),
    /// `(corner, data qubit)` in schedule order.
    pub corners: Vec<(Corner, usize)>,
    pub pauli: PauliString,
}

impl Stabilizer {
    pub fn data(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.corners.iter().map(|&(_, q)| q).collect();
        d.sort_unstable();
        d
    }

    pub fn data_mask(&self) -> u16 {
        self.corners.iter().fold(0, |m, &(_, q)| m | 1 << q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    /// `exp(-i(π/4)σ_y)`: `|0⟩ → |+⟩`.
    Prep { qubit: usize },
    /// `exp(+i(π/4)σ_y)`: `|±⟩ → |0⟩, |1⟩`.
    Unprep { qubit: usize },
    Cnot { control: usize, target: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodeLayout {
    pub data_coords: [(i32, i32); N_DATA],
    /// X checks first (indices 0–3), then Z checks (4–7).
    pub stabilizers: Vec<Stabilizer>,
    pub logical_x: PauliString,
    pub logical_z: PauliString,
    pub schedule: Vec<Vec<Gate>>,
}

const X_ORDER: [Corner; 4] = [Corner::NW, Corner::NE, Corner::SW, Corner::SE];
const Z_ORDER: [Corner; 4] = [Corner::NW, Corner::SW, Corner::NE, Corner::SE];

impl CodeLayout {
    /// Shared instance.
    pub fn get() -> &'static CodeLayout {
        static LAYOUT: OnceLock<CodeLayout> = OnceLock::new();
        LAYOUT.get_or_init(CodeLayout::rotated_d3)
    }

    pub fn rotated_d3() -> Self {
        let data_coords: [(i32, i32); N_DATA] = std::array::from_fn(|q| (2 * (q % 3) as i32 + 1, 2 * (q / 3) as i32 + 1));
        let checks: [(&'static str, CheckType, (i32, i32)); N_STABILIZERS] = [
            ("X0", CheckType::X, (2, 2)),
            ("X1", CheckType::X, (4, 4)),
            ("X2", CheckType::X, (4, 0)),
            ("X3", CheckType::X, (2, 6)),
            ("Z0", CheckType::Z, (4, 2)),
            ("Z1", CheckType::Z, (2, 4)),
            ("Z2", CheckType::Z, (0, 2)),
            ("Z3", CheckType::Z, (6, 4)),
        ];
        let find = |xy: (i32, i32)| data_coords.iter().position(|&d| d == xy);
        let stabilizers: Vec<Stabilizer> = checks
            .iter()
            .enumerate()
            .map(|(i, &(name, kind, (ax, ay)))| {
                let order = if kind == CheckType::X { X_ORDER } else { Z_ORDER };
                let corners: Vec<(Corner, usize)> = order
                    .iter()
                    .filter_map(|&c| {
                        let (dx, dy) = match c {
                            Corner::NW => (-1, -1),
                            Corner::NE => (1, -1),
                            Corner::SW => (-1, 1),
                            Corner::SE => (1, 1),
                        };
                        find((ax + dx, ay + dy)).map(|q| (c, q))
                    })
                    .collect();
                let p = if kind == CheckType::X { Pauli::X } else { Pauli::Z };
                let support: Vec<usize> = corners.iter().map(|&(_, q)| q).collect();
                Stabilizer { name, kind, ancilla: N_DATA + i, coord: (ax, ay), corners, pauli: PauliString::uniform(&support, p) }
            })
            .collect();

        let mut schedule = vec![Vec::new(); TICKS_PER_ROUND];
        for s in &stabilizers {
            let order = if s.kind == CheckType::X { X_ORDER } else { Z_ORDER };
            if s.kind == CheckType::X {
                schedule[0].push(Gate::Prep { qubit: s.ancilla });
                schedule[TICKS_PER_ROUND - 1].push(Gate::Unprep { qubit: s.ancilla });
            }
            for &(corner, q) in &s.corners {
                let tick = 1 + order.iter().position(|&c| c == corner).expect("corner in order");
                schedule[tick].push(match s.kind {
                    CheckType::X => Gate::Cnot { control: s.ancilla, target: q },
                    CheckType::Z => Gate::Cnot { control: q, target: s.ancilla },
                });
            }
        }

        Self {
            data_coords,
            stabilizers,
            logical_x: PauliString::uniform(&[0, 3, 6], Pauli::X),
            logical_z: PauliString::uniform(&[0, 1, 2], Pauli::Z),
            schedule,
        }
    }

    pub fn stabilizer_for_ancilla(&self, ancilla: usize) -> &Stabilizer {
        &self.stabilizers[ancilla - N_DATA]
    }

    /// Ticks of the first and last CNOT touching `qubit`.
    pub fn cnot_span(&self, qubit: usize) -> Option<(usize, usize)> {
        let ticks: Vec<usize> = self
            .schedule
            .iter()
            .enumerate()
            .filter(|(_, gates)| {
                gates.iter().any(|g| matches!(g, Gate::Cnot { control, target } if *control == qubit || *target == qubit))
            })
            .map(|(t, _)| t)
            .collect();
        Some((*ticks.first()?, *ticks.last()?))
    }

    /// Human-readable tables of coordinates, supports, and per-tick gates.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# qubits");
        let _ = writeln!(out, "{:<6} {:<8} {:<6} y", "qubit", "role", "x");
        for (q, &(x, y)) in self.data_coords.iter().enumerate() {
            let _ = writeln!(out, "{q:<6} {:<8} {x:<6} {y}", "data");
        }
        for s in &self.stabilizers {
            let _ = writeln!(out, "{:<6} {:<8} {:<6} {}", s.ancilla, format!("anc-{}", s.name), s.coord.0, s.coord.1);
        }
        let _ = writeln!(out, "\n# stabilizers");
        let _ = writeln!(out, "{:<5} {:<5} {:<8} support", "name", "type", "ancilla");
        for s in &self.stabilizers {
            let kind = if s.kind == CheckType::X { "X" } else { "Z" };
            let support: Vec<String> = s.data().iter().map(|q| q.to_string()).collect();
            let _ = writeln!(out, "{:<5} {:<5} {:<8} {}", s.name, kind, s.ancilla, support.join(","));
        }
        let _ = writeln!(out, "logical X: {}", self.logical_x.to_string_len(N_DATA));
        let _ = writeln!(out, "logical Z: {}", self.logical_z.to_string_len(N_DATA));
        let _ = writeln!(out, "\n# schedule ({} ticks per round; noise on all {N_QUBITS} qubits after every tick)", self.schedule.len());
        for (t, gates) in self.schedule.iter().enumerate() {
            let names: Vec<String> = gates
                .iter()
                .map(|g| match *g {
                    Gate::Prep { qubit } => format!("RY+({qubit})"),
                    Gate::Unprep { qubit } => format!("RY-({qubit})"),
                    Gate::Cnot { control, target } => format!("CX({control},{target})"),
                })
                .collect();
            let _ = writeln!(out, "tick {t}: {}", names.join(" "));
        }
        let _ = writeln!(out, "then: measure Z on ancillas 9-16, reset to |0>");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn supports() {
        let l = CodeLayout::get();
        let supports: Vec<Vec<usize>> = l.stabilizers.iter().map(|s| s.data()).collect();
        assert_eq!(
            supports,
            vec![
                vec![0, 1, 3, 4],
                vec![4, 5, 7, 8],
                vec![1, 2],
                vec![6, 7],
                vec![1, 2, 4, 5],
                vec![3, 4, 6, 7],
                vec![0, 3],
                vec![5, 8],
            ]
        );
    }

    #[test]
    fn stabilizer_group_algebra() {
        let l = CodeLayout::get();
        for a in &l.stabilizers {
            for b in &l.stabilizers {
                assert!(a.pauli.commutes_with(&b.pauli), "{} vs {}", a.name, b.name);
            }
            assert!(a.pauli.commutes_with(&l.logical_x));
            assert!(a.pauli.commutes_with(&l.logical_z));
        }
        assert!(!l.logical_x.commutes_with(&l.logical_z));
        assert_eq!(l.logical_x.weight(), 3);
        assert_eq!(l.logical_z.weight(), 3);
    }

    fn in_stabilizer_group(p: PauliString, l: &CodeLayout) -> bool {
        (0u32..1 << N_STABILIZERS).any(|m| {
            let g = l
                .stabilizers
                .iter()
                .enumerate()
                .filter(|(i, _)| m >> i & 1 == 1)
                .fold(PauliString::IDENTITY, |acc, (_, s)| acc * s.pauli);
            g == p
        })
    }

    #[test]
    fn low_weight_errors_are_detected_or_trivial() {
        let l = CodeLayout::get();
        let paulis = [Pauli::X, Pauli::Y, Pauli::Z];
        let detected = |p: &PauliString| l.stabilizers.iter().any(|s| !s.pauli.commutes_with(p));
        for q1 in 0..N_DATA {
            for &p1 in &paulis {
                let e1 = PauliString::single(q1, p1);
                assert!(detected(&e1));
                for q2 in q1 + 1..N_DATA {
                    for &p2 in &paulis {
                        let e2 = e1 * PauliString::single(q2, p2);
                        assert!(detected(&e2) || in_stabilizer_group(e2, l), "{e2}");
                    }
                }
            }
        }
        assert!(!detected(&l.logical_x) && !in_stabilizer_group(l.logical_x, l));
    }

    #[test]
    fn schedule_shape() {
        let l = CodeLayout::get();
        assert_eq!(l.schedule.len(), TICKS_PER_ROUND);
        for gates in &l.schedule {
            let mut used = 0u32;
            for g in gates {
                let qs = match *g {
                    Gate::Prep { qubit } | Gate::Unprep { qubit } => vec![qubit],
                    Gate::Cnot { control, target } => vec![control, target],
                };
                for q in qs {
                    assert_eq!(used >> q & 1, 0, "qubit {q} used twice in one tick");
                    used |= 1 << q;
                }
            }
        }
        let cnots: usize = l.schedule.iter().flatten().filter(|g| matches!(g, Gate::Cnot { .. })).count();
        assert_eq!(cnots, 24);
        // boundary checks use their corner slots
        assert_eq!(l.cnot_span(11), Some((3, 4)));
        assert_eq!(l.cnot_span(12), Some((1, 2)));
        assert_eq!(l.cnot_span(15), Some((3, 4)));
        assert_eq!(l.cnot_span(16), Some((1, 2)));
        assert_eq!(l.cnot_span(9), Some((1, 4)));
    }

    #[test]
    fn hook_errors_are_perpendicular_to_logicals() {
        // the last two data qubits of each weight-4 X check lie in one row,
        // and those of each Z check lie in one column
        let l = CodeLayout::get();
        for s in l.stabilizers.iter().filter(|s| s.corners.len() == 4) {
            let (a, b) = (s.corners[2].1, s.corners[3].1);
            match s.kind {
                CheckType::X => assert_eq!(a / 3, b / 3, "{}", s.name),
                CheckType::Z => assert_eq!(a % 3, b % 3, "{}", s.name),
            }
        }
    }

    #[test]
    fn dump_mentions_everything() {
        let text = CodeLayout::get().dump();
        assert!(text.contains("X0    X     9        0,1,3,4"));
        assert!(text.contains("tick 1: "));
        assert!(text.contains("CX(9,0)"));
        assert!(text.contains("logical X: XIIXIIXII"));
    }
}

//! State-vector execution of syndrome rounds.
//!
//! Between rounds only the nine data qubits are stored. Within a round an
//! ancilla is tensored in just before its first CNOT and measured out right
//! after its last one, so at most 15 qubits are live. Local operations on a
//! qubit (basis changes, noise rotations, injected Paulis) are multiplied
//! into a pending 2×2 matrix and only applied to the register when the qubit
//! next takes part in a CNOT or a measurement.

use num_complex::Complex64;
use rand::Rng;

use super::layout::{CodeLayout, Gate, N_DATA, N_QUBITS, TICKS_PER_ROUND};
use crate::error::{Error, Result};
use crate::pauli::Pauli;
use crate::statevector::StateVector;

type Mat = [[Complex64; 2]; 2];

const ID: Mat = [[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)], [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]];

/// Angles for one round: `TICKS_PER_ROUND × N_QUBITS`, row-major by tick.
pub const ROUND_ANGLES: usize = TICKS_PER_ROUND * N_QUBITS;

fn mul(a: &Mat, b: &Mat) -> Mat {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][0] * b[0][j] + a[i][1] * b[1][j]))
}

fn ry(theta: f64) -> Mat {
    let (s, c) = theta.sin_cos();
    [[Complex64::new(c, 0.0), Complex64::new(-s, 0.0)], [Complex64::new(s, 0.0), Complex64::new(c, 0.0)]]
}

fn pauli_mat(p: Pauli) -> Mat {
    let (o, l, i) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0));
    match p {
        Pauli::I => ID,
        Pauli::X => [[o, l], [l, o]],
        Pauli::Y => [[o, -i], [i, o]],
        Pauli::Z => [[l, o], [o, -l]],
    }
}

/// A Pauli inserted after the noise of `tick` on `qubit`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InjectedFault {
    pub tick: usize,
    pub qubit: usize,
    pub pauli: Pauli,
}

/// Nine-qubit data register plus the local operations not yet applied to it.
#[derive(Debug, Clone)]
pub struct CodeState {
    state: StateVector<f64>,
    pending: [Mat; N_DATA],
}

impl CodeState {
    pub fn new(data: StateVector<f64>) -> Result<Self> {
        if data.n_qubits() != N_DATA {
            return Err(Error::DimensionMismatch(format!("expected {N_DATA} data qubits, got {}", data.n_qubits())));
        }
        Ok(Self { state: data, pending: [ID; N_DATA] })
    }

    /// Applies every pending local operation.
    pub fn flush(&mut self) {
        for q in 0..N_DATA {
            flush_into(&mut self.state, q, &mut self.pending[q]);
        }
    }

    pub fn state(&mut self) -> &mut StateVector<f64> {
        self.flush();
        &mut self.state
    }

    pub fn into_state(mut self) -> StateVector<f64> {
        self.flush();
        self.state
    }
}

fn as_real(m: &Mat) -> Option<[[f64; 2]; 2]> {
    m.iter().flatten().all(|z| z.im == 0.0).then(|| [[m[0][0].re, m[0][1].re], [m[1][0].re, m[1][1].re]])
}

fn flush_into(state: &mut StateVector<f64>, pos: usize, m: &mut Mat) {
    if *m == ID {
        return;
    }
    match as_real(m) {
        Some(r) => state.apply_real_1q(pos, &r),
        None => state.apply_1q_unchecked(pos, m),
    }
    *m = ID;
}

/// Local operations on `qubit` during `tick`: its single-qubit gate, the
/// noise rotation, then any injected fault.
fn local_ops(layout: &CodeLayout, tick: usize, qubit: usize, angles: &[f64], fault: Option<InjectedFault>) -> Mat {
    let mut m = ID;
    for g in &layout.schedule[tick] {
        match *g {
            Gate::Prep { qubit: q } if q == qubit => m = mul(&ry(std::f64::consts::FRAC_PI_4), &m),
            Gate::Unprep { qubit: q } if q == qubit => m = mul(&ry(-std::f64::consts::FRAC_PI_4), &m),
            _ => {}
        }
    }
    let theta = angles[tick * N_QUBITS + qubit];
    if theta != 0.0 {
        m = mul(&ry(theta), &m);
    }
    if let Some(f) = fault {
        if f.tick == tick && f.qubit == qubit {
            m = mul(&pauli_mat(f.pauli), &m);
        }
    }
    m
}

fn cnot_spans(layout: &CodeLayout) -> [(usize, usize); N_QUBITS] {
    std::array::from_fn(|q| layout.cnot_span(q).unwrap_or((usize::MAX, usize::MAX)))
}

/// Runs one faulty round and returns the eight outcomes (bit `i` set when
/// stabilizer `i` reads `-1`). `angles` holds [`ROUND_ANGLES`] noise angles.
pub fn run_syndrome_round<R: Rng + ?Sized>(code: &mut CodeState, angles: &[f64], rng: &mut R) -> Result<u8> {
    run_round(code, angles, None, rng)
}

/// As [`run_syndrome_round`], optionally inserting one Pauli fault.
pub fn run_round<R: Rng + ?Sized>(code: &mut CodeState, angles: &[f64], fault: Option<InjectedFault>, rng: &mut R) -> Result<u8> {
    if angles.len() != ROUND_ANGLES {
        return Err(Error::DimensionMismatch(format!("round needs {ROUND_ANGLES} angles, got {}", angles.len())));
    }
    if let Some(a) = angles.iter().find(|a| !a.is_finite()) {
        return Err(Error::Domain(format!("noise angle must be finite (got {a})")));
    }
    let layout = CodeLayout::get();
    let spans = cnot_spans(layout);
    let mut pend = [ID; N_QUBITS];
    pend[..N_DATA].copy_from_slice(&code.pending);
    let mut pos: [Option<usize>; N_QUBITS] = std::array::from_fn(|q| (q < N_DATA).then_some(q));
    let mut done = [false; N_QUBITS];
    let mut outcomes = 0u8;
    let state = &mut code.state;

    for tick in 0..TICKS_PER_ROUND {
        for g in &layout.schedule[tick] {
            if let Gate::Cnot { control, target } = *g {
                for q in [control, target] {
                    if pos[q].is_none() {
                        state.push_qubit(pend[q][0][0], pend[q][1][0])?;
                        pos[q] = Some(state.n_qubits() - 1);
                        pend[q] = ID;
                    }
                }
                let (pc, pt) = (pos[control].expect("live"), pos[target].expect("live"));
                match (as_real(&pend[control]), as_real(&pend[target])) {
                    (Some(uc), Some(ut)) => state.apply_cnot_after_real(pc, pt, &uc, &ut)?,
                    _ => state.apply_cnot_after(pc, pt, &pend[control], &pend[target])?,
                }
                pend[control] = ID;
                pend[target] = ID;
            }
        }
        for q in 0..N_QUBITS {
            if !done[q] {
                pend[q] = mul(&local_ops(layout, tick, q, angles, fault), &pend[q]);
            }
        }
        for (i, s) in layout.stabilizers.iter().enumerate() {
            let a = s.ancilla;
            if spans[a].1 != tick {
                continue;
            }
            for later in tick + 1..TICKS_PER_ROUND {
                pend[a] = mul(&local_ops(layout, later, a, angles, fault), &pend[a]);
            }
            let p = pos[a].expect("ancilla joined before its last CNOT");
            let outcome = match as_real(&pend[a]) {
                Some(m) => state.measure_and_remove_after_real(p, &m, rng)?,
                None => state.measure_and_remove_after(p, &pend[a], rng)?,
            };
            pend[a] = ID;
            if outcome == -1 {
                outcomes |= 1 << i;
            }
            pos[a] = None;
            done[a] = true;
            for other in pos.iter_mut().flatten() {
                if *other > p {
                    *other -= 1;
                }
            }
        }
    }
    debug_assert_eq!(state.n_qubits(), N_DATA);
    code.pending.copy_from_slice(&pend[..N_DATA]);
    Ok(outcomes)
}

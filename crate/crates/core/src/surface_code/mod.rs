//! Distance-3 rotated surface code: encoding, noisy syndrome rounds, a final
//! noiseless round, matching decoder, correction, and logical fidelity.
//!
//! Stabilizer outcomes are packed into a `u8`: bits 0–3 are the X checks
//! `X0..X3`, bits 4–7 the Z checks `Z0..Z3`, and a set bit means `-1`.

pub mod circuit;
pub mod decoder;
pub mod layout;

use std::sync::OnceLock;

use num_complex::Complex64;
use rand::Rng;

pub use circuit::{run_round, run_syndrome_round, CodeState, InjectedFault, ROUND_ANGLES};
pub use decoder::{propagate_fault, Decoder, FaultEffect, PauliCorrection, SyndromeRecord, EXACT_MATCHING_CAP};
pub use layout::{CheckType, CodeLayout, Gate, Stabilizer, N_ANCILLA, N_DATA, N_QUBITS, N_STABILIZERS, TICKS_PER_ROUND};

use crate::error::{Error, Result};
use crate::statevector::{StateVector, BRANCH_GUARD};

/// `(|0_L⟩, |1_L⟩)` on the data qubits.
fn logical_basis() -> &'static (StateVector<f64>, StateVector<f64>) {
    static BASIS: OnceLock<(StateVector<f64>, StateVector<f64>)> = OnceLock::new();
    BASIS.get_or_init(|| {
        let layout = CodeLayout::get();
        let mut zero = StateVector::zero(N_DATA).expect("nine qubits fit");
        for s in &layout.stabilizers {
            zero.project_pauli(&s.pauli, 1).expect("|0…0⟩ overlaps the code space");
        }
        let mut one = zero.clone();
        one.apply_pauli(&layout.logical_x).expect("logical X acts on data qubits");
        (zero, one)
    })
}

/// `cos α |0_L⟩ + e^{iβ} sin α |1_L⟩` on the nine data qubits.
pub fn encode_data(alpha: f64, beta: f64) -> StateVector<f64> {
    let (zero, one) = logical_basis();
    let a = Complex64::new(alpha.cos(), 0.0);
    let b = Complex64::from_polar(alpha.sin(), beta);
    let amps = zero.amplitudes().iter().zip(one.amplitudes()).map(|(z, o)| z * a + o * b).collect();
    StateVector::from_amplitudes(amps).expect("logical states are orthonormal")
}

/// The encoded state on all 17 qubits, ancillas in `|0⟩`.
pub fn encode(alpha: f64, beta: f64) -> Result<StateVector<f64>> {
    let data = encode_data(alpha, beta);
    let mut amps = data.amplitudes().to_vec();
    amps.resize(1 << N_QUBITS, Complex64::new(0.0, 0.0));
    StateVector::from_amplitudes(amps).map_err(|e| Error::Internal(format!("encoding failed: {e}")))
}

/// Noiseless projective measurement of the eight stabilizers, in index order.
/// Works on the 9-qubit data register or the full 17-qubit register.
pub fn perfect_syndrome<R: Rng + ?Sized>(state: &mut StateVector<f64>, rng: &mut R) -> Result<u8> {
    let layout = CodeLayout::get();
    let mut outcomes = 0u8;
    for (i, s) in layout.stabilizers.iter().enumerate() {
        let p_plus = ((1.0 + state.expectation(&s.pauli)?) / 2.0).clamp(0.0, 1.0);
        let minus = rng.random::<f64>() >= p_plus;
        let chosen = if minus { 1.0 - p_plus } else { p_plus };
        if chosen < BRANCH_GUARD {
            return Err(Error::NumericalGuard(chosen));
        }
        state.project_pauli(&s.pauli, if minus { -1 } else { 1 })?;
        if minus {
            outcomes |= 1 << i;
        }
    }
    Ok(outcomes)
}

pub fn apply_correction(state: &mut StateVector<f64>, correction: &PauliCorrection) -> Result<()> {
    state.apply_pauli(&correction.to_pauli())
}

/// `|⟨encode(α, β)|ψ⟩|²` for a 9- or 17-qubit register.
pub fn logical_fidelity(state: &StateVector<f64>, alpha: f64, beta: f64) -> Result<f64> {
    match state.n_qubits() {
        N_DATA => encode_data(alpha, beta).overlap_sq(state),
        N_QUBITS => encode(alpha, beta)?.overlap_sq(state),
        n => Err(Error::DimensionMismatch(format!("expected {N_DATA} or {N_QUBITS} qubits, got {n}"))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutcome {
    pub record: SyndromeRecord,
    pub correction: PauliCorrection,
    pub fidelity: f64,
}

/// A fault placed in a specific round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScheduledFault {
    pub round: usize,
    pub fault: InjectedFault,
}

/// Encode, `n_rounds` noisy rounds, one perfect round, decode, correct.
#[derive(Debug, Clone)]
pub struct SurfaceCode {
    decoder: Decoder,
}

impl SurfaceCode {
    pub fn new(n_rounds: usize) -> Result<Self> {
        Ok(Self { decoder: Decoder::new(CodeLayout::get(), n_rounds)? })
    }

    pub fn n_rounds(&self) -> usize {
        self.decoder.n_rounds()
    }

    pub fn decoder(&self) -> &Decoder {
        &self.decoder
    }

    /// Noise angles for the whole run: `n_rounds · ROUND_ANGLES` entries.
    pub fn angles_len(&self) -> usize {
        self.n_rounds() * ROUND_ANGLES
    }

    pub fn run<R: Rng + ?Sized>(
        &self,
        alpha: f64,
        beta: f64,
        angles: &[f64],
        fault: Option<ScheduledFault>,
        rng: &mut R,
    ) -> Result<PipelineOutcome> {
        if angles.len() != self.angles_len() {
            return Err(Error::DimensionMismatch(format!("expected {} angles, got {}", self.angles_len(), angles.len())));
        }
        let mut code = CodeState::new(encode_data(alpha, beta))?;
        let mut rounds = Vec::with_capacity(self.n_rounds());
        for (r, chunk) in angles.chunks_exact(ROUND_ANGLES).enumerate() {
            let injected = fault.filter(|f| f.round == r).map(|f| f.fault);
            rounds.push(run_round(&mut code, chunk, injected, rng)?);
        }
        let mut state = code.into_state();
        let perfect = perfect_syndrome(&mut state, rng)?;
        let record = SyndromeRecord { rounds, perfect };
        let correction = self.decoder.decode(&record)?;
        apply_correction(&mut state, &correction)?;
        let fidelity = logical_fidelity(&state, alpha, beta)?;
        Ok(PipelineOutcome { record, correction, fidelity })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;
    use crate::pauli::{Pauli, PauliString};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn z_checks_adjacent_to(q: usize) -> u8 {
        CodeLayout::get()
            .stabilizers
            .iter()
            .enumerate()
            .filter(|(_, s)| s.kind == CheckType::Z && s.data().contains(&q))
            .fold(0, |acc, (i, _)| acc | 1 << i)
    }

    #[test]
    fn encode_examples() {
        let layout = CodeLayout::get();
        let zero = encode(0.0, 0.0).unwrap();
        assert_eq!(zero.n_qubits(), 17);
        for s in &layout.stabilizers {
            assert!((zero.expectation(&s.pauli).unwrap() - 1.0).abs() < 1e-12);
        }
        for a in N_DATA..N_QUBITS {
            assert_eq!(zero.prob_one(a).unwrap(), 0.0);
        }
        assert!((zero.expectation(&layout.logical_z).unwrap() - 1.0).abs() < 1e-12);
        let one = encode_data(std::f64::consts::FRAC_PI_2, 0.0);
        assert!((one.expectation(&layout.logical_z).unwrap() + 1.0).abs() < 1e-12);
        let plus = encode_data(std::f64::consts::FRAC_PI_4, 0.0);
        assert!((plus.expectation(&layout.logical_x).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn clean_round_reads_all_plus() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut code = CodeState::new(encode_data(0.4, 1.1)).unwrap();
        for _ in 0..3 {
            assert_eq!(run_syndrome_round(&mut code, &[0.0; ROUND_ANGLES], &mut rng).unwrap(), 0);
        }
        let fid = logical_fidelity(&code.into_state(), 0.4, 1.1).unwrap();
        assert!((fid - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_data_x_flips_adjacent_z_checks() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for q in 0..N_DATA {
            let mut data = encode_data(0.9, 2.0);
            data.apply_x(q).unwrap();
            let mut code = CodeState::new(data.clone()).unwrap();
            let round = run_syndrome_round(&mut code, &[0.0; ROUND_ANGLES], &mut rng).unwrap();
            assert_eq!(round, z_checks_adjacent_to(q), "qubit {q}");
            assert_eq!(perfect_syndrome(&mut data, &mut rng).unwrap(), z_checks_adjacent_to(q));
        }
    }

    #[test]
    fn perfect_syndrome_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut fresh = encode_data(1.3, 0.2);
        assert_eq!(perfect_syndrome(&mut fresh, &mut rng).unwrap(), 0);
        let mut full = encode(1.3, 0.2).unwrap();
        assert_eq!(perfect_syndrome(&mut full, &mut rng).unwrap(), 0);
        // a coherent error gives random outcomes, but a second pass repeats the first
        let mut noisy = encode_data(1.3, 0.2);
        noisy.rotate_y(4, 0.6).unwrap();
        noisy.rotate_y(0, 0.5).unwrap();
        for seed in 0..20 {
            let mut s = noisy.clone();
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            let first = perfect_syndrome(&mut s, &mut r).unwrap();
            assert_eq!(perfect_syndrome(&mut s, &mut r).unwrap(), first);
        }
    }

    fn gaussian_angles(n: usize, sigma: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let normal = Normal::new(0.0, sigma).unwrap();
        (0..n).map(|_| normal.sample(rng)).collect()
    }

    #[test]
    fn lazy_rounds_match_full_register_simulation() {
        let mut gen = ChaCha8Rng::seed_from_u64(99);
        for case in 0..40u64 {
            let (alpha, beta) = (gen.random::<f64>() * TAU, gen.random::<f64>() * TAU);
            let angles = gaussian_angles(3 * ROUND_ANGLES, 0.35, &mut gen);
            let fault = (case % 3 == 0).then(|| InjectedFault {
                tick: gen.random_range(0..TICKS_PER_ROUND),
                qubit: gen.random_range(0..N_QUBITS),
                pauli: [Pauli::X, Pauli::Y, Pauli::Z][gen.random_range(0..3)],
            });
            let mut lazy = CodeState::new(encode_data(alpha, beta)).unwrap();
            let mut full = encode(alpha, beta).unwrap();
            let mut r1 = ChaCha8Rng::seed_from_u64(case);
            let mut r2 = ChaCha8Rng::seed_from_u64(case);
            for chunk in angles.chunks_exact(ROUND_ANGLES) {
                let a = run_round(&mut lazy, chunk, fault, &mut r1).unwrap();
                let b = circuit::reference::run_round_naive(&mut full, chunk, fault, &mut r2).unwrap();
                assert_eq!(a, b, "case {case}");
            }
            let lazy = lazy.into_state();
            for (x, y) in lazy.amplitudes().iter().zip(full.amplitudes()) {
                assert!((x - y).norm() < 1e-10, "case {case}");
            }
            assert!(full.amplitudes()[1 << N_DATA..].iter().all(|z| z.norm() < 1e-12));
        }
    }

    #[test]
    fn rounds_are_deterministic() {
        let mut gen = ChaCha8Rng::seed_from_u64(5);
        let angles = gaussian_angles(ROUND_ANGLES, 0.4, &mut gen);
        let run = |seed| {
            let mut code = CodeState::new(encode_data(0.3, 0.7)).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..3).map(|_| run_syndrome_round(&mut code, &angles, &mut rng).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(run(17), run(17));
    }

    #[test]
    fn rejects_bad_angle_slices() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut code = CodeState::new(encode_data(0.0, 0.0)).unwrap();
        assert!(matches!(run_syndrome_round(&mut code, &[0.0; 10], &mut rng), Err(Error::DimensionMismatch(_))));
        let mut bad = [0.0; ROUND_ANGLES];
        bad[3] = f64::NAN;
        assert!(matches!(run_syndrome_round(&mut code, &bad, &mut rng), Err(Error::Domain(_))));
    }

    #[test]
    fn noiseless_pipeline_is_perfect() {
        let code = SurfaceCode::new(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let zeros = vec![0.0; code.angles_len()];
        for _ in 0..100 {
            let (a, b) = (rng.random::<f64>() * TAU, rng.random::<f64>() * TAU);
            let out = code.run(a, b, &zeros, None, &mut rng).unwrap();
            assert!((out.fidelity - 1.0).abs() < 1e-9);
            assert!(out.correction.is_empty());
        }
    }

    #[test]
    fn single_fault_sweep_on_state_vectors() {
        let code = SurfaceCode::new(3).unwrap();
        let zeros = vec![0.0; code.angles_len()];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for round in 0..3 {
            for tick in 0..TICKS_PER_ROUND {
                for qubit in 0..N_QUBITS {
                    for pauli in [Pauli::X, Pauli::Y, Pauli::Z] {
                        let fault = ScheduledFault { round, fault: InjectedFault { tick, qubit, pauli } };
                        let out = code.run(0.3, 0.7, &zeros, Some(fault), &mut rng).unwrap();
                        assert!((out.fidelity - 1.0).abs() < 1e-9, "{fault:?}: {}", out.fidelity);
                    }
                }
            }
        }
    }

    #[test]
    fn uncorrected_logical_flip_is_orthogonal() {
        let mut one = encode_data(0.0, 0.0);
        one.apply_pauli(&CodeLayout::get().logical_x).unwrap();
        assert!(logical_fidelity(&one, 0.0, 0.0).unwrap() < 1e-20);
        // any α: |⟨ψ|X_L|ψ⟩|² = sin²(2α) cos²β
        let (a, b) = (0.4, 0.9);
        let mut s = encode_data(a, b);
        s.apply_pauli(&CodeLayout::get().logical_x).unwrap();
        let want = (2.0 * a).sin().powi(2) * b.cos().powi(2);
        assert!((logical_fidelity(&s, a, b).unwrap() - want).abs() < 1e-12);
        assert!(logical_fidelity(&StateVector::zero(3).unwrap(), 0.0, 0.0).is_err());
        let _ = PauliString::IDENTITY;
    }
}

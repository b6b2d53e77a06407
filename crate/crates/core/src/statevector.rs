//! Dense state vectors with little-endian qubit order: qubit `q` is bit `q`
//! of the amplitude index.
//!
//! Gates are applied in place by walking amplitude pairs (or quadruples for
//! two-qubit gates) with bit-mask strides; no operator matrix is ever built.

use num_complex::Complex;
use num_traits::Float;
use rand::Rng;

use crate::error::{Error, Result};
use crate::pauli::PauliString;

pub const DEFAULT_MAX_QUBITS: usize = 20;

/// Branches below this probability are refused by measurement and projection.
pub const BRANCH_GUARD: f64 = 1e-15;

pub type Matrix2<T> = [[Complex<T>; 2]; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T> {
    n_qubits: usize,
    amps: Vec<Complex<T>>,
}

fn lit<T: Float>(x: f64) -> T {
    T::from(x).expect("literal representable in scalar type")
}

/// Calls `f(a0, a1)` for every amplitude pair differing only in bit `q`.
fn for_each_pair<C>(amps: &mut [C], q: usize, mut f: impl FnMut(&mut C, &mut C)) {
    for chunk in amps.chunks_exact_mut(2 << q) {
        let (lo, hi) = chunk.split_at_mut(1 << q);
        for (a, b) in lo.iter_mut().zip(hi) {
            f(a, b);
        }
    }
}

/// Calls `f(a00, a01, a10, a11)` for every amplitude quad over bits
/// `lo < hi`; the first index digit is bit `hi`, the second bit `lo`.
fn for_each_quad<C>(amps: &mut [C], lo: usize, hi: usize, mut f: impl FnMut(&mut C, &mut C, &mut C, &mut C)) {
    debug_assert!(lo < hi);
    for chunk in amps.chunks_exact_mut(2 << hi) {
        let (h0, h1) = chunk.split_at_mut(1 << hi);
        for (c0, c1) in h0.chunks_exact_mut(2 << lo).zip(h1.chunks_exact_mut(2 << lo)) {
            let (a00, a01) = c0.split_at_mut(1 << lo);
            let (a10, a11) = c1.split_at_mut(1 << lo);
            for (((w, x), y), z) in a00.iter_mut().zip(a01).zip(a10).zip(a11) {
                f(w, x, y, z);
            }
        }
    }
}

/// Maps each quad through `f`, which takes and returns amplitudes indexed
/// by (control bit, target bit).
#[inline(always)]
fn cnot_sweep<C: Copy>(amps: &mut [C], control: usize, target: usize, f: impl Fn(C, C, C, C) -> (C, C, C, C)) {
    if control > target {
        for_each_quad(amps, target, control, |a00, a01, a10, a11| {
            (*a00, *a01, *a10, *a11) = f(*a00, *a01, *a10, *a11);
        });
    } else {
        for_each_quad(amps, control, target, |a00, a10, a01, a11| {
            (*a00, *a01, *a10, *a11) = f(*a00, *a01, *a10, *a11);
        });
    }
}

impl<T: Float> StateVector<T> {
    /// `|0…0⟩` on `n_qubits` qubits (at most [`DEFAULT_MAX_QUBITS`]).
    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        Self::basis_with_limit(n_qubits, index, DEFAULT_MAX_QUBITS)
    }

    pub fn basis_with_limit(n_qubits: usize, index: usize, max_qubits: usize) -> Result<Self> {
        if n_qubits > max_qubits {
            return Err(Error::InvalidParameter(format!("{n_qubits} qubits exceeds the limit of {max_qubits}")));
        }
        let len = 1usize << n_qubits;
        if index >= len {
            return Err(Error::InvalidParameter(format!("basis index {index} out of range for {n_qubits} qubits")));
        }
        let mut amps = vec![Complex::new(T::zero(), T::zero()); len];
        amps[index] = Complex::new(T::one(), T::zero());
        Ok(Self { n_qubits, amps })
    }

    /// Wraps amplitudes whose length is a power of two and whose norm is 1
    /// within `1e-10`.
    pub fn from_amplitudes(amps: Vec<Complex<T>>) -> Result<Self> {
        if !amps.len().is_power_of_two() {
            return Err(Error::DimensionMismatch(format!("{} amplitudes is not a power of two", amps.len())));
        }
        let n_qubits = amps.len().trailing_zeros() as usize;
        if n_qubits > DEFAULT_MAX_QUBITS {
            return Err(Error::InvalidParameter(format!("{n_qubits} qubits exceeds the limit of {DEFAULT_MAX_QUBITS}")));
        }
        let state = Self { n_qubits, amps };
        let dev = (state.norm_sq() - T::one()).abs().to_f64().unwrap_or(f64::INFINITY);
        if !(dev <= 1e-10) {
            return Err(Error::InvalidParameter(format!("state norm deviates from 1 by {dev:e}")));
        }
        Ok(state)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amps
    }

    pub fn norm_sq(&self) -> T {
        self.amps.iter().fold(T::zero(), |acc, a| acc + a.norm_sqr())
    }

    pub fn normalize(&mut self) {
        let scale = T::one() / self.norm_sq().sqrt();
        for a in &mut self.amps {
            *a = *a * scale;
        }
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n_qubits {
            return Err(Error::InvalidParameter(format!("qubit {q} out of range for {} qubits", self.n_qubits)));
        }
        Ok(())
    }

    /// Applies a 2×2 unitary (checked to `1e-12`) to qubit `q`.
    pub fn apply_1q(&mut self, q: usize, u: &Matrix2<T>) -> Result<()> {
        self.check_qubit(q)?;
        let dev = unitarity_deviation(u);
        if !(dev <= 1e-12_f64.max(64.0 * T::epsilon().to_f64().unwrap_or(0.0))) {
            return Err(Error::NonUnitary(dev));
        }
        self.apply_1q_unchecked(q, u);
        Ok(())
    }

    pub fn apply_1q_unchecked(&mut self, q: usize, u: &Matrix2<T>) {
        for_each_pair(&mut self.amps, q, |a, b| {
            let (x, y) = (*a, *b);
            *a = u[0][0] * x + u[0][1] * y;
            *b = u[1][0] * x + u[1][1] * y;
        });
    }

    /// Real 2×2 matrix on qubit `q`, e.g. Y rotations.
    pub fn apply_real_1q(&mut self, q: usize, m: &[[T; 2]; 2]) {
        for_each_pair(&mut self.amps, q, |a, b| {
            let (x, y) = (*a, *b);
            *a = x * m[0][0] + y * m[0][1];
            *b = x * m[1][0] + y * m[1][1];
        });
    }

    /// `exp(-iθσ_y)` on qubit `q`: `[[cos θ, -sin θ], [sin θ, cos θ]]`.
    /// The full angle sits in the exponent, so a flip occurs with
    /// probability `sin²θ`.
    pub fn rotate_y(&mut self, q: usize, theta: T) -> Result<()> {
        self.check_qubit(q)?;
        if !theta.is_finite() {
            return Err(Error::Domain(format!("rotation angle must be finite (got {:?})", theta.to_f64())));
        }
        if theta != T::zero() {
            self.apply_real_1q(q, &ry_matrix(theta));
        }
        Ok(())
    }

    pub fn apply_x(&mut self, q: usize) -> Result<()> {
        self.apply_pauli(&PauliString::single(q, crate::pauli::Pauli::X))
    }

    pub fn apply_z(&mut self, q: usize) -> Result<()> {
        self.apply_pauli(&PauliString::single(q, crate::pauli::Pauli::Z))
    }

    pub fn apply_h(&mut self, q: usize) -> Result<()> {
        self.check_qubit(q)?;
        let r = T::one() / lit::<T>(2.0).sqrt();
        self.apply_real_1q(q, &[[r, r], [r, -r]]);
        Ok(())
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_cnot(control, target)?;
        if control > target {
            for_each_quad(&mut self.amps, target, control, |_, _, c1t0, c1t1| std::mem::swap(c1t0, c1t1));
        } else {
            for_each_quad(&mut self.amps, control, target, |_, c1t0, _, c1t1| std::mem::swap(c1t0, c1t1));
        }
        Ok(())
    }

    /// `P|ψ⟩` for a Hermitian Pauli string.
    pub fn apply_pauli(&mut self, p: &PauliString) -> Result<()> {
        self.check_span(p)?;
        let (x, z) = (p.x as usize, p.z as usize);
        let phase = y_phase::<T>((p.x & p.z).count_ones());
        let sign = |i: usize| if (i & z).count_ones() % 2 == 1 { -T::one() } else { T::one() };
        if x == 0 {
            for (i, a) in self.amps.iter_mut().enumerate() {
                *a = *a * phase * sign(i);
            }
            return Ok(());
        }
        let pivot = 1usize << (usize::BITS - 1 - x.leading_zeros());
        for i in 0..self.amps.len() {
            if i & pivot != 0 {
                continue;
            }
            let j = i ^ x;
            let (ai, aj) = (self.amps[i], self.amps[j]);
            self.amps[j] = ai * phase * sign(i);
            self.amps[i] = aj * phase * sign(j);
        }
        Ok(())
    }

    fn check_span(&self, p: &PauliString) -> Result<()> {
        if p.span() > self.n_qubits {
            return Err(Error::DimensionMismatch(format!(
                "Pauli string touches qubit {} of a {}-qubit state",
                p.span() - 1,
                self.n_qubits
            )));
        }
        Ok(())
    }

    /// `⟨ψ|P|ψ⟩`.
    pub fn expectation(&self, p: &PauliString) -> Result<T> {
        let mut image = self.clone();
        image.apply_pauli(p)?;
        Ok(self.inner(&image)?.re)
    }

    /// Probability that measuring qubit `q` gives bit 1.
    pub fn prob_one(&self, q: usize) -> Result<T> {
        self.check_qubit(q)?;
        let m = 1usize << q;
        Ok(self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & m != 0)
            .fold(T::zero(), |acc, (_, a)| acc + a.norm_sqr()))
    }

    /// Born-rule Z measurement of qubit `q`, returning `+1` or `-1`.
    pub fn measure_z<R: Rng + ?Sized>(&mut self, q: usize, rng: &mut R) -> Result<i8> {
        let bit = self.sample_z_bit(q, rng)?;
        self.collapse(q, bit);
        Ok(if bit { -1 } else { 1 })
    }

    fn check_cnot(&self, control: usize, target: usize) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(Error::Domain(format!("CNOT control and target are both qubit {control}")));
        }
        Ok(())
    }

    fn sample_z_bit<R: Rng + ?Sized>(&self, q: usize, rng: &mut R) -> Result<bool> {
        let p1 = self.prob_one(q)?.to_f64().unwrap_or(f64::NAN) / self.norm_sq().to_f64().unwrap_or(f64::NAN);
        let bit = rng.random::<f64>() < p1;
        let chosen = if bit { p1 } else { 1.0 - p1 };
        if !(chosen >= BRANCH_GUARD) {
            return Err(Error::NumericalGuard(chosen));
        }
        Ok(bit)
    }

    fn collapse(&mut self, q: usize, bit: bool) {
        let m = 1usize << q;
        for (i, a) in self.amps.iter_mut().enumerate() {
            if (i & m != 0) != bit {
                *a = Complex::new(T::zero(), T::zero());
            }
        }
        self.normalize();
    }

    /// Measures qubit `q` in Z and drops it from the register; higher
    /// qubits shift down by one.
    pub fn measure_and_remove<R: Rng + ?Sized>(&mut self, q: usize, rng: &mut R) -> Result<i8> {
        let one = Complex::new(T::one(), T::zero());
        let zero = Complex::new(T::zero(), T::zero());
        self.measure_and_remove_after(q, &[[one, zero], [zero, one]], rng)
    }

    /// As [`measure_and_remove`](Self::measure_and_remove), applying `u` to
    /// qubit `q` first. Two sweeps over the register; `u` is trusted to be
    /// unitary.
    pub fn measure_and_remove_after<R: Rng + ?Sized>(&mut self, q: usize, u: &Matrix2<T>, rng: &mut R) -> Result<i8> {
        self.check_qubit(q)?;
        let row = |r: usize| move |a: Complex<T>, b: Complex<T>| u[r][0] * a + u[r][1] * b;
        self.measure_rows(q, row(0), row(1), rng)
    }

    /// Real-matrix version of
    /// [`measure_and_remove_after`](Self::measure_and_remove_after).
    pub fn measure_and_remove_after_real<R: Rng + ?Sized>(&mut self, q: usize, m: &[[T; 2]; 2], rng: &mut R) -> Result<i8> {
        self.check_qubit(q)?;
        let row = |r: usize| move |a: Complex<T>, b: Complex<T>| a * m[r][0] + b * m[r][1];
        self.measure_rows(q, row(0), row(1), rng)
    }

    #[inline(always)]
    fn measure_rows<R: Rng + ?Sized>(
        &mut self,
        q: usize,
        row0: impl Fn(Complex<T>, Complex<T>) -> Complex<T>,
        row1: impl Fn(Complex<T>, Complex<T>) -> Complex<T>,
        rng: &mut R,
    ) -> Result<i8> {
        let (mut s0, mut s1) = (T::zero(), T::zero());
        for chunk in self.amps.chunks_exact(2 << q) {
            let (lo, hi) = chunk.split_at(1 << q);
            for (&a, &b) in lo.iter().zip(hi) {
                s0 = s0 + row0(a, b).norm_sqr();
                s1 = s1 + row1(a, b).norm_sqr();
            }
        }
        let total = (s0 + s1).to_f64().unwrap_or(f64::NAN);
        let p1 = s1.to_f64().unwrap_or(f64::NAN) / total;
        let bit = rng.random::<f64>() < p1;
        let chosen = if bit { p1 } else { 1.0 - p1 };
        if !(chosen >= BRANCH_GUARD) {
            return Err(Error::NumericalGuard(chosen));
        }
        let scale = T::one() / (if bit { s1 } else { s0 }).sqrt();
        let mut kept = Vec::with_capacity(self.amps.len() / 2);
        for chunk in self.amps.chunks_exact(2 << q) {
            let (lo, hi) = chunk.split_at(1 << q);
            if bit {
                kept.extend(lo.iter().zip(hi).map(|(&a, &b)| row1(a, b) * scale));
            } else {
                kept.extend(lo.iter().zip(hi).map(|(&a, &b)| row0(a, b) * scale));
            }
        }
        self.amps = kept;
        self.n_qubits -= 1;
        Ok(if bit { -1 } else { 1 })
    }

    /// `CNOT(control, target) · (u_c ⊗ u_t)` in a single sweep.
    pub fn apply_cnot_after(&mut self, control: usize, target: usize, uc: &Matrix2<T>, ut: &Matrix2<T>) -> Result<()> {
        self.check_cnot(control, target)?;
        let step = |a00: Complex<T>, a01: Complex<T>, a10: Complex<T>, a11: Complex<T>| {
            // indices are (control, target)
            let (b00, b01) = (ut[0][0] * a00 + ut[0][1] * a01, ut[1][0] * a00 + ut[1][1] * a01);
            let (b10, b11) = (ut[0][0] * a10 + ut[0][1] * a11, ut[1][0] * a10 + ut[1][1] * a11);
            let c00 = uc[0][0] * b00 + uc[0][1] * b10;
            let c01 = uc[0][0] * b01 + uc[0][1] * b11;
            let c10 = uc[1][0] * b00 + uc[1][1] * b10;
            let c11 = uc[1][0] * b01 + uc[1][1] * b11;
            (c00, c01, c11, c10)
        };
        cnot_sweep(&mut self.amps, control, target, step);
        Ok(())
    }

    /// Real-matrix version of [`apply_cnot_after`](Self::apply_cnot_after).
    pub fn apply_cnot_after_real(&mut self, control: usize, target: usize, uc: &[[T; 2]; 2], ut: &[[T; 2]; 2]) -> Result<()> {
        self.check_cnot(control, target)?;
        let step = |a00: Complex<T>, a01: Complex<T>, a10: Complex<T>, a11: Complex<T>| {
            let (b00, b01) = (a00 * ut[0][0] + a01 * ut[0][1], a00 * ut[1][0] + a01 * ut[1][1]);
            let (b10, b11) = (a10 * ut[0][0] + a11 * ut[0][1], a10 * ut[1][0] + a11 * ut[1][1]);
            let c00 = b00 * uc[0][0] + b10 * uc[0][1];
            let c01 = b01 * uc[0][0] + b11 * uc[0][1];
            let c10 = b00 * uc[1][0] + b10 * uc[1][1];
            let c11 = b01 * uc[1][0] + b11 * uc[1][1];
            (c00, c01, c11, c10)
        };
        cnot_sweep(&mut self.amps, control, target, step);
        Ok(())
    }

    /// Appends a qubit in state `a0|0⟩ + a1|1⟩` as the new highest index.
    pub fn push_qubit(&mut self, a0: Complex<T>, a1: Complex<T>) -> Result<()> {
        if self.n_qubits + 1 > DEFAULT_MAX_QUBITS {
            return Err(Error::InvalidParameter(format!("{} qubits exceeds the limit of {DEFAULT_MAX_QUBITS}", self.n_qubits + 1)));
        }
        let mut grown = Vec::with_capacity(2 * self.amps.len());
        grown.extend(self.amps.iter().map(|&a| a * a0));
        grown.extend(self.amps.iter().map(|&a| a * a1));
        self.amps = grown;
        self.n_qubits += 1;
        Ok(())
    }

    /// Applies `(I + sign·P)/2`, renormalises, and returns the squared norm
    /// of the projected vector.
    pub fn project_pauli(&mut self, p: &PauliString, sign: i8) -> Result<T> {
        if sign != 1 && sign != -1 {
            return Err(Error::InvalidParameter(format!("projection sign must be +1 or -1 (got {sign})")));
        }
        let mut image = self.clone();
        image.apply_pauli(p)?;
        let s = if sign == 1 { T::one() } else { -T::one() };
        let half = lit::<T>(0.5);
        let projected: Vec<Complex<T>> = self
            .amps
            .iter()
            .zip(&image.amps)
            .map(|(a, b)| (*a + *b * s) * half)
            .collect();
        let prob = projected.iter().fold(T::zero(), |acc, a| acc + a.norm_sqr());
        if !(prob.to_f64().unwrap_or(0.0) >= BRANCH_GUARD) {
            return Err(Error::CannotProject(prob.to_f64().unwrap_or(f64::NAN)));
        }
        self.amps = projected;
        self.normalize();
        Ok(prob)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Result<Complex<T>> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch(format!("{} vs {} qubits", self.n_qubits, other.n_qubits)));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| acc + a.conj() * b))
    }

    /// `|⟨self|other⟩|²`.
    pub fn overlap_sq(&self, other: &Self) -> Result<T> {
        Ok(self.inner(other)?.norm_sqr())
    }
}

pub fn ry_matrix<T: Float>(theta: T) -> [[T; 2]; 2] {
    let (s, c) = theta.sin_cos();
    [[c, -s], [s, c]]
}

fn y_phase<T: Float>(count: u32) -> Complex<T> {
    match count % 4 {
        0 => Complex::new(T::one(), T::zero()),
        1 => Complex::new(T::zero(), T::one()),
        2 => Complex::new(-T::one(), T::zero()),
        _ => Complex::new(T::zero(), -T::one()),
    }
}

/// `max |U†U - I|` entrywise.
pub fn unitarity_deviation<T: Float>(u: &Matrix2<T>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let dot = u[0][i].conj() * u[0][j] + u[1][i].conj() * u[1][j];
            let target = if i == j { T::one() } else { T::zero() };
            let dev = (dot - Complex::new(target, T::zero())).norm().to_f64().unwrap_or(f64::INFINITY);
            worst = worst.max(if dev.is_nan() { f64::INFINITY } else { dev });
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::Pauli;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

    type C = Complex<f64>;
    type Sv = StateVector<f64>;

    fn c(re: f64, im: f64) -> C {
        Complex::new(re, im)
    }

    fn random_state(n: usize, rng: &mut ChaCha8Rng) -> Sv {
        let mut amps: Vec<C> = (0..1 << n).map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|a| *a /= norm);
        Sv::from_amplitudes(amps).unwrap()
    }

    fn random_unitary(rng: &mut ChaCha8Rng) -> Matrix2<f64> {
        // e^{iφ} [[a, -b*], [b, a*]] with |a|²+|b|² = 1
        let (t, p1, p2, g) = (rng.random::<f64>() * 3.0, rng.random::<f64>() * 6.0, rng.random::<f64>() * 6.0, rng.random::<f64>() * 6.0);
        let a = C::from_polar(t.cos(), p1);
        let b = C::from_polar(t.sin(), p2);
        let ph = C::from_polar(1.0, g);
        [[ph * a, -ph * b.conj()], [ph * b, ph * a.conj()]]
    }

    fn dagger(u: &Matrix2<f64>) -> Matrix2<f64> {
        [[u[0][0].conj(), u[1][0].conj()], [u[0][1].conj(), u[1][1].conj()]]
    }

    // Dense-matrix oracle: full 2^n × 2^n operators built by Kronecker products.
    type Dense = Vec<Vec<C>>;

    fn kron(a: &Dense, b: &Dense) -> Dense {
        let (ra, rb) = (a.len(), b.len());
        let mut out = vec![vec![c(0.0, 0.0); ra * rb]; ra * rb];
        for i in 0..ra {
            for j in 0..ra {
                for k in 0..rb {
                    for l in 0..rb {
                        out[i * rb + k][j * rb + l] = a[i][j] * b[k][l];
                    }
                }
            }
        }
        out
    }

    fn eye(n: usize) -> Dense {
        (0..n).map(|i| (0..n).map(|j| c(if i == j { 1.0 } else { 0.0 }, 0.0)).collect()).collect()
    }

    /// Operator `u` on qubit `q` of `n`; qubit n-1 is the leftmost factor.
    fn embed(u: &Matrix2<f64>, q: usize, n: usize) -> Dense {
        let m: Dense = u.iter().map(|row| row.to_vec()).collect();
        (0..n).rev().fold(eye(1), |acc, k| kron(&acc, &if k == q { m.clone() } else { eye(2) }))
    }

    fn dense_cnot(control: usize, target: usize, n: usize) -> Dense {
        let dim = 1 << n;
        let mut out = vec![vec![c(0.0, 0.0); dim]; dim];
        for i in 0..dim {
            let j = if i >> control & 1 == 1 { i ^ (1 << target) } else { i };
            out[j][i] = c(1.0, 0.0);
        }
        out
    }

    fn apply_dense(m: &Dense, v: &[C]) -> Vec<C> {
        m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    fn assert_close(a: &[C], b: &[C], tol: f64) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).norm() < tol, "{x} vs {y}");
        }
    }

    fn pauli_matrix(p: Pauli) -> Matrix2<f64> {
        match p {
            Pauli::I => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]],
            Pauli::X => [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]],
            Pauli::Y => [[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]],
            Pauli::Z => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]],
        }
    }

    #[test]
    fn basic_gates() {
        let mut s = Sv::zero(1).unwrap();
        let id = pauli_matrix(Pauli::I);
        s.apply_1q(0, &id).unwrap();
        assert_eq!(s, Sv::zero(1).unwrap());
        s.apply_x(0).unwrap();
        assert_eq!(s, Sv::basis(1, 1).unwrap());
        let mut h = Sv::zero(1).unwrap();
        h.apply_h(0).unwrap();
        h.apply_h(0).unwrap();
        assert_close(h.amplitudes(), Sv::zero(1).unwrap().amplitudes(), 1e-12);
    }

    #[test]
    fn rotation_convention() {
        let mut s = Sv::zero(1).unwrap();
        s.rotate_y(0, 0.0).unwrap();
        assert_eq!(s, Sv::zero(1).unwrap());
        s.rotate_y(0, FRAC_PI_2).unwrap();
        assert!((s.overlap_sq(&Sv::basis(1, 1).unwrap()).unwrap() - 1.0).abs() < 1e-15);
        let mut t = Sv::zero(1).unwrap();
        t.rotate_y(0, 0.3).unwrap();
        assert!((t.prob_one(0).unwrap() - 0.3f64.sin().powi(2)).abs() < 1e-15);
        assert!(matches!(t.rotate_y(0, f64::NAN), Err(Error::Domain(_))));
        assert!(t.rotate_y(0, 1e9).is_ok());
    }

    #[test]
    fn cnot_examples() {
        let mut s = Sv::basis(2, 0b10).unwrap();
        s.apply_cnot(1, 0).unwrap();
        assert_eq!(s, Sv::basis(2, 0b11).unwrap());
        let mut z = Sv::zero(2).unwrap();
        z.apply_cnot(1, 0).unwrap();
        assert_eq!(z, Sv::zero(2).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = random_state(3, &mut rng);
        let mut twice = r.clone();
        twice.apply_cnot(2, 0).unwrap();
        twice.apply_cnot(2, 0).unwrap();
        assert_eq!(twice, r);
        assert!(matches!(twice.apply_cnot(1, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn non_unitary_rejected() {
        let mut s = Sv::zero(1).unwrap();
        let bad = [[c(1.0, 0.0), c(0.1, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]];
        assert!(matches!(s.apply_1q(0, &bad), Err(Error::NonUnitary(_))));
    }

    #[test]
    fn kernels_match_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for n in 1..=4 {
            for _ in 0..10 {
                let s = random_state(n, &mut rng);
                let q = rng.random_range(0..n);
                let u = random_unitary(&mut rng);
                let mut fast = s.clone();
                fast.apply_1q(q, &u).unwrap();
                assert_close(fast.amplitudes(), &apply_dense(&embed(&u, q, n), s.amplitudes()), 1e-12);

                let theta = rng.random::<f64>() * 10.0 - 5.0;
                let mut ry = s.clone();
                ry.rotate_y(q, theta).unwrap();
                let m = ry_matrix(theta);
                let rc = [[c(m[0][0], 0.0), c(m[0][1], 0.0)], [c(m[1][0], 0.0), c(m[1][1], 0.0)]];
                assert_close(ry.amplitudes(), &apply_dense(&embed(&rc, q, n), s.amplitudes()), 1e-12);

                if n >= 2 {
                    let ctl = rng.random_range(0..n);
                    let tgt = (ctl + 1 + rng.random_range(0..n - 1)) % n;
                    let mut cx = s.clone();
                    cx.apply_cnot(ctl, tgt).unwrap();
                    assert_close(cx.amplitudes(), &apply_dense(&dense_cnot(ctl, tgt, n), s.amplitudes()), 1e-12);
                }

                let p = PauliString::new(rng.random_range(0..1u64 << n), rng.random_range(0..1u64 << n));
                let dense_p = (0..n).fold(eye(1 << n), |acc, k| {
                    let e = embed(&pauli_matrix(p.get(k)), k, n);
                    (0..1 << n).map(|i| (0..1 << n).map(|j| (0..1 << n).map(|l| e[i][l] * acc[l][j]).sum()).collect()).collect()
                });
                let mut fp = s.clone();
                fp.apply_pauli(&p).unwrap();
                assert_close(fp.amplitudes(), &apply_dense(&dense_p, s.amplitudes()), 1e-12);

                let mut proj = s.clone();
                if let Ok(prob) = proj.project_pauli(&p, 1) {
                    let pv = apply_dense(&dense_p, s.amplitudes());
                    let raw: Vec<C> = s.amplitudes().iter().zip(&pv).map(|(a, b)| (a + b) * 0.5).collect();
                    let norm: f64 = raw.iter().map(|a| a.norm_sqr()).sum();
                    assert!((prob - norm).abs() < 1e-12);
                    let want: Vec<C> = raw.iter().map(|a| a / norm.sqrt()).collect();
                    assert_close(proj.amplitudes(), &want, 1e-12);
                }
            }
        }
    }

    #[test]
    fn norm_preserved_over_long_random_circuit() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 6;
        let mut s = random_state(n, &mut rng);
        for _ in 0..1000 {
            match rng.random_range(0..3) {
                0 => s.apply_1q(rng.random_range(0..n), &random_unitary(&mut rng)).unwrap(),
                1 => s.rotate_y(rng.random_range(0..n), rng.random::<f64>() * 100.0).unwrap(),
                _ => {
                    let a = rng.random_range(0..n);
                    s.apply_cnot(a, (a + 1 + rng.random_range(0..n - 1)) % n).unwrap()
                }
            }
        }
        assert!((s.norm_sq() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn unitary_then_inverse_restores() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s = random_state(5, &mut rng);
        let mut t = s.clone();
        let gates: Vec<(usize, Matrix2<f64>)> = (0..50).map(|_| (rng.random_range(0..5), random_unitary(&mut rng))).collect();
        for (q, u) in &gates {
            t.apply_1q(*q, u).unwrap();
        }
        for (q, u) in gates.iter().rev() {
            t.apply_1q(*q, &dagger(u)).unwrap();
        }
        assert_close(t.amplitudes(), s.amplitudes(), 1e-10);
    }

    #[test]
    fn measurement() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut s = Sv::zero(1).unwrap();
        for _ in 0..100 {
            assert_eq!(s.measure_z(0, &mut rng).unwrap(), 1);
        }
        // |+⟩: χ² with one degree of freedom, 99.9% critical value 10.83
        let shots = 100_000;
        let mut ones = 0;
        for _ in 0..shots {
            let mut p = Sv::zero(1).unwrap();
            p.apply_h(0).unwrap();
            let first = p.measure_z(0, &mut rng).unwrap();
            assert_eq!(p.measure_z(0, &mut rng).unwrap(), first);
            if first == -1 {
                ones += 1;
            }
        }
        let e = shots as f64 / 2.0;
        let chi2 = 2.0 * (ones as f64 - e).powi(2) / e;
        assert!(chi2 < 10.83, "χ² = {chi2}");
    }

    #[test]
    fn measurement_guard() {
        // a branch with probability 1e-20 can only be chosen by a draw below it,
        // so force it through a stub rng that always returns 0
        struct Zeros;
        impl rand::RngCore for Zeros {
            fn next_u32(&mut self) -> u32 {
                0
            }
            fn next_u64(&mut self) -> u64 {
                0
            }
            fn fill_bytes(&mut self, dst: &mut [u8]) {
                dst.fill(0);
            }
        }
        let mut s = Sv::zero(1).unwrap();
        s.rotate_y(0, 1e-10).unwrap();
        assert!(matches!(s.measure_z(0, &mut Zeros), Err(Error::NumericalGuard(_))));
    }

    #[test]
    fn projection_examples() {
        let z = PauliString::single(0, Pauli::Z);
        let x = PauliString::single(0, Pauli::X);
        let mut s = Sv::zero(1).unwrap();
        assert_eq!(s.project_pauli(&z, 1).unwrap(), 1.0);
        let prob = s.project_pauli(&x, 1).unwrap();
        assert!((prob - 0.5).abs() < 1e-15);
        assert_close(s.amplitudes(), &[c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)], 1e-15);
        let again = s.project_pauli(&x, 1).unwrap();
        assert!((again - 1.0).abs() < 1e-15);
        assert!(matches!(s.project_pauli(&x, -1), Err(Error::CannotProject(_))));
    }

    #[test]
    fn overlaps() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = random_state(4, &mut rng);
        assert!((s.overlap_sq(&s).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(Sv::basis(2, 1).unwrap().overlap_sq(&Sv::basis(2, 2).unwrap()).unwrap(), 0.0);
        let mut plus = Sv::zero(1).unwrap();
        plus.apply_h(0).unwrap();
        assert!((plus.overlap_sq(&Sv::zero(1).unwrap()).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(s.overlap_sq(&Sv::zero(2).unwrap()), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn push_and_remove_qubits() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let s = random_state(3, &mut rng);
        let mut t = s.clone();
        t.push_qubit(c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        assert_eq!(t.n_qubits(), 4);
        assert_eq!(&t.amplitudes()[..8], s.amplitudes());
        assert_eq!(t.measure_and_remove(3, &mut rng).unwrap(), 1);
        assert_close(t.amplitudes(), s.amplitudes(), 1e-15);

        // remove a middle qubit holding |1⟩
        let mut u = Sv::basis(3, 0b010).unwrap();
        u.apply_h(0).unwrap();
        assert_eq!(u.measure_and_remove(1, &mut rng).unwrap(), -1);
        let mut want = Sv::zero(2).unwrap();
        want.apply_h(0).unwrap();
        assert_close(u.amplitudes(), want.amplitudes(), 1e-15);
    }

    #[test]
    fn works_in_single_precision() {
        let mut s = StateVector::<f32>::zero(2).unwrap();
        s.apply_h(0).unwrap();
        s.apply_cnot(0, 1).unwrap();
        let zz = PauliString::uniform(&[0, 1], Pauli::Z);
        assert!((s.expectation(&zz).unwrap() - 1.0).abs() < 1e-6);
    }
}

//! Hermitian Pauli strings as x/z bit masks (`Y` sets both bits).

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }
}

/// A tensor product of `I, X, Y, Z` on up to 64 qubits. Qubit `q` is bit `q`
/// of both masks. The sign is always `+1`; `Y` means the Hermitian `Y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct PauliString {
    pub x: u64,
    pub z: u64,
}

impl PauliString {
    pub const IDENTITY: Self = Self { x: 0, z: 0 };

    pub fn new(x: u64, z: u64) -> Self {
        Self { x, z }
    }

    pub fn single(qubit: usize, p: Pauli) -> Self {
        let (x, z) = p.bits();
        Self { x: u64::from(x) << qubit, z: u64::from(z) << qubit }
    }

    /// The same Pauli on every listed qubit.
    pub fn uniform(qubits: &[usize], p: Pauli) -> Self {
        qubits.iter().fold(Self::IDENTITY, |acc, &q| acc * Self::single(q, p))
    }

    pub fn get(&self, qubit: usize) -> Pauli {
        Pauli::from_bits(self.x >> qubit & 1 == 1, self.z >> qubit & 1 == 1)
    }

    pub fn support(&self) -> u64 {
        self.x | self.z
    }

    pub fn weight(&self) -> u32 {
        self.support().count_ones()
    }

    pub fn is_identity(&self) -> bool {
        self.support() == 0
    }

    pub fn commutes_with(&self, other: &Self) -> bool {
        ((self.x & other.z) ^ (self.z & other.x)).count_ones().is_multiple_of(2)
    }

    /// Highest qubit index touched, plus one.
    pub fn span(&self) -> usize {
        64 - self.support().leading_zeros() as usize
    }

    pub fn to_string_len(&self, n_qubits: usize) -> String {
        (0..n_qubits)
            .map(|q| match self.get(q) {
                Pauli::I => 'I',
                Pauli::X => 'X',
                Pauli::Y => 'Y',
                Pauli::Z => 'Z',
            })
            .collect()
    }
}

/// Product up to phase.
impl std::ops::Mul for PauliString {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self { x: self.x ^ rhs.x, z: self.z ^ rhs.z }
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_string_len(self.span().max(1)))
    }
}

/// Parses `"XIZY"`; the first character is qubit 0.
impl FromStr for PauliString {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s.chars().count() > 64 {
            return Err(Error::InvalidParameter("Pauli strings are limited to 64 qubits".into()));
        }
        s.chars().enumerate().try_fold(Self::IDENTITY, |acc, (q, c)| {
            let p = match c {
                'I' | '_' => Pauli::I,
                'X' => Pauli::X,
                'Y' => Pauli::Y,
                'Z' => Pauli::Z,
                other => return Err(Error::InvalidParameter(format!("'{other}' is not a Pauli"))),
            };
            Ok(acc * Self::single(q, p))
        })
    }
}

pub mod error;
pub mod scalar;
pub mod precise;
pub mod special;
pub mod distributions;
pub mod analytic;
pub mod pauli;
pub mod statevector;
pub mod surface_code;
pub mod schwarma;
pub mod experiment;

pub use error::{Error, Result};
pub use scalar::Real;
pub use precise::Precise;

/// State vector over `f64`, the type every simulation path uses.
pub type StateVector64 = statevector::StateVector<f64>;
/// 2×2 complex gate over `f64`.
pub type Matrix2f = statevector::Matrix2<f64>;
/// Smallest bigfloat tier used by the correlated analytic sum.
pub type Precise128 = Precise<128>;
pub type Precise256 = Precise<256>;
pub type Precise512 = Precise<512>;
pub type Precise1024 = Precise<1024>;

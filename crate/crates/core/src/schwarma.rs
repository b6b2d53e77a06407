//! Time-correlated rotation angles from a moving-average filter over i.i.d.
//! innovations.
//!
//! `θ_k = Σ_j b_j x_{k-j}` per qubit, with no autoregressive part. White noise
//! is the single-tap filter `b_0 = 1`; DC noise draws one innovation per qubit
//! and reuses it at every tick. The exponential moving average uses
//! `b_j ∝ 2^{-j/T_h}` for `j = 0..=q`, `q = 10⌈T_h⌉`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{DistributionSpec, Family};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    White,
    Dc,
    Ema,
}

impl std::fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NoiseKind::White => "white",
            NoiseKind::Dc => "dc",
            NoiseKind::Ema => "ema",
        })
    }
}

/// Serialized noise descriptor: `{"mode": "ema", "T_h": 4, "innovations": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub mode: NoiseKind,
    #[serde(rename = "T_h", default, skip_serializing_if = "Option::is_none")]
    pub half_life: Option<f64>,
    pub innovations: DistributionSpec,
}

impl NoiseSpec {
    pub fn white(innovations: DistributionSpec) -> Self {
        Self { mode: NoiseKind::White, half_life: None, innovations }
    }

    pub fn dc(innovations: DistributionSpec) -> Self {
        Self { mode: NoiseKind::Dc, half_life: None, innovations }
    }

    pub fn ema(half_life: f64, innovations: DistributionSpec) -> Self {
        Self { mode: NoiseKind::Ema, half_life: Some(half_life), innovations }
    }

    pub fn with_sigma(&self, sigma: f64) -> Self {
        Self { innovations: self.innovations.with_sigma(sigma), ..self.clone() }
    }

    /// Every problem with the descriptor, prefixed with the field path.
    pub fn problems(&self) -> Vec<String> {
        let mut out: Vec<String> = self.innovations.problems().into_iter().map(|p| format!("innovations: {p}")).collect();
        match (self.mode, self.half_life) {
            (NoiseKind::Ema, None) => out.push("T_h: required for ema mode".into()),
            (NoiseKind::Ema, Some(t)) if !(t > 0.0 && t.is_finite()) => out.push(format!("T_h: must be positive and finite (got {t})")),
            (NoiseKind::Ema, Some(t)) if t > MAX_HALF_LIFE => out.push(format!("T_h: at most {MAX_HALF_LIFE} (got {t})")),
            (NoiseKind::White | NoiseKind::Dc, Some(_)) => out.push(format!("T_h: only meaningful for ema mode, not {}", self.mode)),
            _ => {}
        }
        if self.mode == NoiseKind::Ema && self.innovations.family == Family::StudentT {
            out.push("innovations: ema filtering needs a stable family (gaussian or stable), not student".into());
        }
        out
    }

    pub fn model(&self) -> Result<ArmaModel> {
        match self.mode {
            NoiseKind::White => Ok(ArmaModel::white(self.innovations)),
            NoiseKind::Dc => Ok(ArmaModel::dc(self.innovations)),
            NoiseKind::Ema => {
                let t = self.half_life.ok_or_else(|| Error::InvalidParameter("ema mode requires T_h".into()))?;
                ArmaModel::build_ema(t, self.innovations)
            }
        }
    }
}

/// Keeps the filter (and its burn-in) a sane size.
pub const MAX_HALF_LIFE: f64 = 1.0e4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    White,
    Dc,
    Ema { half_life: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmaModel {
    /// Always empty here.
    pub ar_coeffs: Vec<f64>,
    pub ma_coeffs: Vec<f64>,
    pub innovations: DistributionSpec,
    pub mode: Mode,
}

/// `b_j = N·2^{-j/T_h}`, `j = 0..=10⌈T_h⌉`, normalized to sum to one.
pub fn ema_weights(half_life: f64) -> Result<Vec<f64>> {
    if !(half_life > 0.0 && half_life.is_finite()) {
        return Err(Error::Domain(format!("half-life must be positive and finite (got {half_life})")));
    }
    if half_life > MAX_HALF_LIFE {
        return Err(Error::InvalidParameter(format!("half-life at most {MAX_HALF_LIFE} (got {half_life})")));
    }
    let q = 10 * half_life.ceil() as usize;
    let decay = -std::f64::consts::LN_2 / half_life;
    let raw: Vec<f64> = (0..=q).map(|j| (decay * j as f64).exp()).collect();
    let norm: f64 = raw.iter().rev().sum();
    Ok(raw.into_iter().map(|w| w / norm).collect())
}

impl ArmaModel {
    pub fn white(innovations: DistributionSpec) -> Self {
        Self { ar_coeffs: vec![], ma_coeffs: vec![1.0], innovations, mode: Mode::White }
    }

    /// The `q → ∞` limit, realized as one draw per qubit held for all ticks.
    pub fn dc(innovations: DistributionSpec) -> Self {
        Self { ar_coeffs: vec![], ma_coeffs: vec![], innovations, mode: Mode::Dc }
    }

    pub fn build_ema(half_life: f64, innovations: DistributionSpec) -> Result<Self> {
        let ma_coeffs = ema_weights(half_life)?;
        Ok(Self { ar_coeffs: vec![], ma_coeffs, innovations, mode: Mode::Ema { half_life } })
    }

    /// MA order `q` (number of past innovations each output depends on).
    pub fn order(&self) -> usize {
        self.ma_coeffs.len().saturating_sub(1)
    }

    fn check(&self) -> Result<()> {
        self.innovations.validate()?;
        if matches!(self.mode, Mode::Ema { .. }) && self.innovations.family == Family::StudentT {
            return Err(Error::Unsupported(
                "Student's t is not closed under linear combination; use white or dc noise".into(),
            ));
        }
        Ok(())
    }

    /// Angle matrix laid out tick-major: entry `k * n_qubits + l` is
    /// `θ_k^(l)`. Each qubit has its own innovation sequence; EMA output is
    /// preceded by `q` burn-in innovations so tick 0 is already stationary.
    pub fn generate<R: Rng + ?Sized>(&self, n_ticks: usize, n_qubits: usize, rng: &mut R) -> Result<Vec<f64>> {
        self.check()?;
        let sampler = self.innovations.sampler()?;
        let mut out = vec![0.0; n_ticks * n_qubits];
        match self.mode {
            Mode::White => sampler.fill(rng, &mut out),
            Mode::Dc => {
                for l in 0..n_qubits {
                    let theta = sampler.sample(rng);
                    for k in 0..n_ticks {
                        out[k * n_qubits + l] = theta;
                    }
                }
            }
            Mode::Ema { .. } => {
                let q = self.order();
                let mut x = vec![0.0; n_ticks + q];
                for l in 0..n_qubits {
                    sampler.fill(rng, &mut x);
                    // x[q + k] is the innovation at tick k
                    for k in 0..n_ticks {
                        out[k * n_qubits + l] = self.ma_coeffs.iter().enumerate().map(|(j, b)| b * x[q + k - j]).sum();
                    }
                }
            }
        }
        Ok(out)
    }

    /// Per-tick marginal law. For a stable law the filtered scale is
    /// `σ (Σ |b_j|^α)^{1/α}` (α = 2 for Gaussian); white and DC pass through.
    pub fn marginal_spec(&self) -> DistributionSpec {
        match self.mode {
            Mode::White | Mode::Dc => self.innovations,
            Mode::Ema { .. } => {
                let alpha = match self.innovations.family {
                    Family::Gaussian => 2.0,
                    Family::Stable => self.innovations.alpha.unwrap_or(2.0),
                    // never generated; report the innovation law unchanged
                    Family::StudentT => return self.innovations,
                };
                let s: f64 = self.ma_coeffs.iter().map(|b| b.abs().powf(alpha)).sum();
                self.innovations.with_sigma(self.innovations.sigma * s.powf(1.0 / alpha))
            }
        }
    }
}

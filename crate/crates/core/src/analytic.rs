//! Code-capacity logical error rates for an `n`-qubit code that corrects
//! every error of weight at most `w = (d-1)/2` and nothing heavier.
//!
//! Each qubit is rotated by an angle `θ` about a common axis and flips with
//! probability `sin²(θ/2)`. Two limits are covered:
//!
//! * uncorrelated: every qubit draws its own `θ`, so flips are Bernoulli
//!   with `s = (1 - f(1))/2`;
//! * perfectly correlated: one `θ` is shared by all qubits, which makes the
//!   failure probability a signed integer combination of `f(0), …, f(n)`.
//!
//! The correlated sum cancels catastrophically for small `σ`, so it is
//! evaluated in [`Precise`] arithmetic at a caller-chosen precision.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::precise::{Precise, PRECISION_TIERS};
use crate::scalar::Real;
use crate::special::binomial;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerfectCodeModel {
    pub distance: u32,
    pub n_qubits: u32,
    pub spec: DistributionSpec,
}

impl PerfectCodeModel {
    /// Distance-`d` model at the Knill–Laflamme size `n = 4w + 1`.
    pub fn new(distance: u32, spec: DistributionSpec) -> Result<Self> {
        let model = Self { distance, n_qubits: distance.saturating_mul(2).saturating_sub(1), spec };
        model.validate()?;
        Ok(model)
    }

    pub fn with_n_qubits(self, n_qubits: u32) -> Result<Self> {
        let model = Self { n_qubits, ..self };
        model.validate()?;
        Ok(model)
    }

    pub fn correctable_weight(&self) -> u32 {
        (self.distance - 1) / 2
    }

    pub fn validate(&self) -> Result<()> {
        if self.distance == 0 || self.distance.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!("distance must be odd and >= 1 (got {})", self.distance)));
        }
        if self.n_qubits <= self.correctable_weight() {
            return Err(Error::InvalidParameter(format!(
                "n_qubits = {} cannot host weight-{} corrections",
                self.n_qubits,
                self.correctable_weight()
            )));
        }
        if self.n_qubits > 62 {
            return Err(Error::InvalidParameter(format!("n_qubits = {} exceeds the supported 62", self.n_qubits)));
        }
        self.spec.validate()
    }
}

/// `Σ_{k=w+1}^{n} C(n,k) c^{n-k} s^k`, the probability of more than `w`
/// independent flips.
pub fn logical_error_uncorrelated(model: &PerfectCodeModel) -> Result<f64> {
    model.validate()?;
    let s = model.spec.physical_error_prob()?;
    Ok(binomial_tail(model.n_qubits, model.correctable_weight(), s))
}

fn binomial_tail(n: u32, w: u32, s: f64) -> f64 {
    let c = 1.0 - s;
    (w + 1..=n)
        .map(|k| binomial(n, k) as f64 * c.powi((n - k) as i32) * s.powi(k as i32))
        .sum()
}

/// Integer weights `D_t`, `t = 0..=n`, with
/// `Σ_{k≤w} C(n,k) cos^{2(n-k)}(θ/2) sin^{2k}(θ/2) = 4^{-n} Σ_t D_t cos(tθ)`.
///
/// With `z = e^{iθ}` the summand is `4^{-n} (-1)^k z^{-n} (1+z)^{2(n-k)} (1-z)^{2k}`;
/// the coefficient of `z^{j}` lands on `t = |j - n|`.
pub fn correlated_weights(n_qubits: u32, correctable_weight: u32) -> Result<Vec<i128>> {
    let n = n_qubits as usize;
    let overflow = || Error::InvalidParameter(format!("coefficients overflow i128 at n = {n_qubits}"));
    let mut weights = vec![0i128; n + 1];
    for k in 0..=correctable_weight.min(n_qubits) as usize {
        let mut poly = vec![0i128; 2 * n + 1];
        poly[0] = 1;
        let mut degree = 0;
        for step in 0..2 * n {
            let sign = if step < 2 * (n - k) { 1 } else { -1 };
            for j in (1..=degree + 1).rev() {
                poly[j] = poly[j].checked_add(sign * poly[j - 1]).ok_or_else(overflow)?;
            }
            degree += 1;
        }
        let scale = i128::try_from(binomial(n_qubits, k as u32)).map_err(|_| overflow())?;
        let scale = if k % 2 == 0 { scale } else { -scale };
        for (j, a) in poly.iter().enumerate() {
            let t = j.abs_diff(n);
            weights[t] = a.checked_mul(scale).and_then(|v| weights[t].checked_add(v)).ok_or_else(overflow)?;
        }
    }
    Ok(weights)
}

/// Correlated failure probability `4^{-n} Σ_{t≥1} D_t (1 - f(t))` in scalar `T`.
/// Uses `Σ_t D_t = 4^n`, which removes the leading `1 - …`.
pub fn logical_error_correlated_in<T: Real>(model: &PerfectCodeModel) -> Result<T> {
    model.validate()?;
    let n = model.n_qubits;
    let weights = correlated_weights(n, model.correctable_weight())?;
    let mut acc = T::zero();
    for (t, &d) in weights.iter().enumerate().skip(1) {
        if d != 0 {
            acc = acc + T::from_i128(d) * model.spec.cf_complement(&T::from_u64(t as u64));
        }
    }
    Ok(acc / T::from_i128(1i128 << (2 * n)))
}

/// Smallest supported tier holding at least `bits` bits.
pub fn precision_tier(bits: u32) -> Result<u32> {
    if bits < PRECISION_TIERS[0] {
        return Err(Error::InvalidParameter(format!("working precision must be >= {} bits (got {bits})", PRECISION_TIERS[0])));
    }
    PRECISION_TIERS
        .iter()
        .copied()
        .find(|&tier| tier >= bits)
        .ok_or_else(|| Error::InvalidParameter(format!("working precision above {} bits is not supported", PRECISION_TIERS[6])))
}

fn correlated_at_tier(model: &PerfectCodeModel, tier: u32) -> Result<f64> {
    Ok(match tier {
        128 => logical_error_correlated_in::<Precise<128>>(model)?.to_f64(),
        192 => logical_error_correlated_in::<Precise<192>>(model)?.to_f64(),
        256 => logical_error_correlated_in::<Precise<256>>(model)?.to_f64(),
        384 => logical_error_correlated_in::<Precise<384>>(model)?.to_f64(),
        512 => logical_error_correlated_in::<Precise<512>>(model)?.to_f64(),
        768 => logical_error_correlated_in::<Precise<768>>(model)?.to_f64(),
        1024 => logical_error_correlated_in::<Precise<1024>>(model)?.to_f64(),
        other => return Err(Error::Internal(format!("no precision tier {other}"))),
    })
}

/// `4^{-n} Σ_t |D_t (1 - f(t))|`: the scale against which rounding in the
/// cancelling sum is measured.
fn correlated_magnitude(model: &PerfectCodeModel) -> Result<f64> {
    let n = model.n_qubits;
    let weights = correlated_weights(n, model.correctable_weight())?;
    let mut total = 0.0;
    for (t, &d) in weights.iter().enumerate().skip(1) {
        if d != 0 {
            total += (d as f64).abs() * model.spec.char_fn_complement(t as f64)?.abs();
        }
    }
    Ok(total * (-2.0 * f64::from(n)).exp2())
}

/// Correlated failure probability at `working_precision_bits` (rounded up to
/// the next tier). Fails with [`Error::PrecisionInsufficient`] when the
/// result leaves `[0, 1]` or is smaller than the rounding noise of the
/// cancelling sum.
pub fn logical_error_correlated(model: &PerfectCodeModel, working_precision_bits: u32) -> Result<f64> {
    let tier = precision_tier(working_precision_bits)?;
    let value = correlated_at_tier(model, tier)?;
    // a few hundred roundings of terms no larger than the absolute sum
    let noise = correlated_magnitude(model)? * (-f64::from(tier - 8)).exp2();
    if !(value >= -noise && value <= 1.0 + noise) || (noise > 0.0 && value.abs() <= noise) {
        return Err(Error::PrecisionInsufficient { bits: tier, value });
    }
    Ok(value.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelatedEstimate {
    pub value: f64,
    /// Tier at which two consecutive evaluations first agreed.
    pub bits: u32,
}

/// Raises precision tier by tier until two consecutive results agree to
/// `1e-10` relative.
pub fn logical_error_correlated_auto(model: &PerfectCodeModel) -> Result<CorrelatedEstimate> {
    let mut previous: Option<f64> = None;
    let mut last_value = f64::NAN;
    for &tier in PRECISION_TIERS.iter() {
        match logical_error_correlated(model, tier) {
            Ok(value) => {
                if let Some(prev) = previous {
                    if (value - prev).abs() <= 1e-10 * value.abs() {
                        return Ok(CorrelatedEstimate { value, bits: tier });
                    }
                }
                previous = Some(value);
                last_value = value;
            }
            Err(Error::PrecisionInsufficient { value, .. }) => {
                previous = None;
                last_value = value;
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::PrecisionInsufficient { bits: PRECISION_TIERS[PRECISION_TIERS.len() - 1], value: last_value })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
}

/// Failure probability for one shared angle `θ`.
pub fn correlated_failure_given_angle(n_qubits: u32, correctable_weight: u32, theta: f64) -> f64 {
    let half = 0.5 * theta;
    let s = half.sin().powi(2);
    let c = half.cos().powi(2);
    (correctable_weight + 1..=n_qubits)
        .map(|k| binomial(n_qubits, k) as f64 * c.powi((n_qubits - k) as i32) * s.powi(k as i32))
        .sum()
}

/// Monte Carlo estimate of the correlated failure probability: one angle per
/// trial, bounded integrand, so heavy tails are harmless.
pub fn correlated_mc_oracle<R: Rng + ?Sized>(model: &PerfectCodeModel, trials: u64, rng: &mut R) -> Result<McEstimate> {
    model.validate()?;
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let sampler = model.spec.sampler()?;
    let (n, w) = (model.n_qubits, model.correctable_weight());
    let mut acc = Moments::default();
    for _ in 0..trials {
        acc.push(correlated_failure_given_angle(n, w, sampler.sample(rng)));
    }
    Ok(acc.estimate())
}

/// Parallel variant: chunk `i` draws from ChaCha8 stream `i` of `seed`, so
/// the result does not depend on the thread count.
pub fn correlated_mc_oracle_par(model: &PerfectCodeModel, trials: u64, seed: u64) -> Result<McEstimate> {
    const CHUNK: u64 = 1 << 16;
    model.validate()?;
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let sampler = model.spec.sampler()?;
    let (n, w) = (model.n_qubits, model.correctable_weight());
    let chunks: Vec<Moments> = (0..trials.div_ceil(CHUNK))
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            let mut acc = Moments::default();
            for _ in 0..CHUNK.min(trials - chunk * CHUNK) {
                acc.push(correlated_failure_given_angle(n, w, sampler.sample(&mut rng)));
            }
            acc
        })
        .collect();
    Ok(chunks.into_iter().fold(Moments::default(), Moments::merge).estimate())
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: u64,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    fn merge(self, other: Self) -> Self {
        Self { count: self.count + other.count, sum: self.sum + other.sum, sum_sq: self.sum_sq + other.sum_sq }
    }

    fn estimate(&self) -> McEstimate {
        let n = self.count as f64;
        let mean = self.sum / n;
        let var = if self.count > 1 { ((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
        McEstimate { mean, std_error: (var / n).sqrt(), trials: self.count }
    }
}

/// Least-squares power law `y ≈ coefficient · x^exponent`, fitted in log-log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub coefficient: f64,
    /// Exponents fitted to the lower and upper halves of the grid.
    pub exponent_lower: f64,
    pub exponent_upper: f64,
}

impl PowerLawFit {
    /// Relative spread of the half-grid exponents.
    pub fn exponent_drift(&self) -> f64 {
        (self.exponent_lower - self.exponent_upper).abs() / self.exponent.abs()
    }

    pub fn is_stable(&self) -> bool {
        self.exponent_drift() < 0.01
    }
}

/// Slope and intercept of `ln y` against `ln x`.
pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidParameter("power-law fit needs two or more paired points".into()));
    }
    if let Some(bad) = xs.iter().chain(ys).find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::Domain(format!("power-law fit needs positive finite values (got {bad})")));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let m = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("power-law fit needs distinct x values".into()));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Fits the leading power of `σ` from values on `sigma_grid`. The grid must
/// span at least one decade; [`PowerLawFit::is_stable`] reports whether it
/// sat in the asymptotic regime.
pub fn fit_leading_order(sigma_grid: &[f64], values: &[f64]) -> Result<PowerLawFit> {
    if sigma_grid.len() < 4 {
        return Err(Error::InvalidParameter("leading-order fit needs at least four grid points".into()));
    }
    let (lo, hi) = sigma_grid
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &s| (lo.min(s), hi.max(s)));
    if !(hi >= 10.0 * lo * (1.0 - 1e-12)) {
        return Err(Error::InvalidParameter(format!("sigma grid must span a decade (got {lo:e}..{hi:e})")));
    }
    let (exponent, intercept) = fit_power_law(sigma_grid, values)?;
    let half = sigma_grid.len().div_ceil(2);
    let split = sigma_grid.len() - half;
    let (exponent_lower, _) = fit_power_law(&sigma_grid[..half], &values[..half])?;
    let (exponent_upper, _) = fit_power_law(&sigma_grid[split..], &values[split..])?;
    Ok(PowerLawFit { exponent, coefficient: intercept.exp(), exponent_lower, exponent_upper })
}

/// `count` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi / lo).ln() / (count - 1) as f64;
            (0..count).map(|i| lo * (step * i as f64).exp()).collect()
        }
    }
}

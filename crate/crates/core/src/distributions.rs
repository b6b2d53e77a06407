//! Symmetric, zero-centred rotation-angle distributions.
//!
//! Each family is pinned to its characteristic function:
//!
//! | family    | `f(t)`                                                     |
//! |-----------|------------------------------------------------------------|
//! | Gaussian  | `exp(-σ² t² / 2)`                                          |
//! | Student t | `x^{ν/2} K_{ν/2}(x) / (2^{ν/2-1} Γ(ν/2))`, `x = σ√ν |t|`   |
//! | Stable    | `exp(-|σ t|^α)`                                            |
//!
//! Samplers are checked against these forms through the empirical
//! characteristic function `⟨cos(tθ)⟩`, which is bounded and therefore
//! converges for every tail index.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::precise::Precise;
use crate::scalar::Real;
use crate::special::{ln_gamma_half, student_t_reduced_cf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Gaussian,
    #[serde(rename = "student", alias = "studentt", alias = "student_t")]
    StudentT,
    Stable,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Family::Gaussian => "gaussian",
            Family::StudentT => "student",
            Family::Stable => "stable",
        })
    }
}

/// A family plus its parameters. `nu` is used only by Student's t and
/// `alpha` only by the stable family; supplying either for another family
/// is rejected by [`DistributionSpec::validate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionSpec {
    pub family: Family,
    /// Defaults to 1 when omitted.
    #[serde(default = "unit_scale")]
    pub sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

fn unit_scale() -> f64 {
    1.0
}

impl DistributionSpec {
    pub fn gaussian(sigma: f64) -> Self {
        Self { family: Family::Gaussian, sigma, nu: None, alpha: None }
    }

    pub fn student_t(nu: u32, sigma: f64) -> Self {
        Self { family: Family::StudentT, sigma, nu: Some(nu), alpha: None }
    }

    pub fn stable(alpha: f64, sigma: f64) -> Self {
        Self { family: Family::Stable, sigma, nu: None, alpha: Some(alpha) }
    }

    /// Cauchy as Student's t with one degree of freedom.
    pub fn cauchy(sigma: f64) -> Self {
        Self::student_t(1, sigma)
    }

    pub fn with_sigma(self, sigma: f64) -> Self {
        Self { sigma, ..self }
    }

    /// Every problem with these parameters, in field order.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            out.push(format!("sigma must be finite and >= 0 (got {})", self.sigma));
        }
        match self.family {
            Family::StudentT => match self.nu {
                None => out.push("student requires nu".into()),
                Some(0) => out.push("nu must be >= 1".into()),
                Some(_) => {}
            },
            _ if self.nu.is_some() => out.push(format!("nu is not a parameter of {}", self.family)),
            _ => {}
        }
        match self.family {
            Family::Stable => match self.alpha {
                None => out.push("stable requires alpha".into()),
                Some(a) if !(a > 0.0 && a <= 2.0) => out.push(format!("alpha must lie in (0, 2] (got {a})")),
                Some(_) => {}
            },
            _ if self.alpha.is_some() => out.push(format!("alpha is not a parameter of {}", self.family)),
            _ => {}
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(problems.join("; ")))
        }
    }

    fn nu_unchecked(&self) -> u32 {
        self.nu.unwrap_or(1)
    }

    fn alpha_unchecked(&self) -> f64 {
        self.alpha.unwrap_or(2.0)
    }

    /// `f(t)` evaluated in any [`Real`] scalar. Parameters must be valid.
    pub fn cf<T: Real>(&self, t: &T) -> T {
        let st = T::from_f64(self.sigma) * t.abs();
        match self.family {
            Family::Gaussian => {
                let half = T::one() / (T::one() + T::one());
                (-(st.clone() * st) * half).exp()
            }
            Family::Stable => (-st.powf(&T::from_f64(self.alpha_unchecked()))).exp(),
            Family::StudentT => {
                let nu = self.nu_unchecked();
                let x = st * T::from_u64(u64::from(nu)).sqrt();
                student_t_reduced_cf(nu, &x)
            }
        }
    }

    /// `1 - f(t)` in scalar `T`. Gaussian and stable use `expm1`; Student's t
    /// subtracts directly, so the caller picks `T` with enough bits.
    pub fn cf_complement<T: Real>(&self, t: &T) -> T {
        let st = T::from_f64(self.sigma) * t.abs();
        match self.family {
            Family::Gaussian => {
                let half = T::one() / (T::one() + T::one());
                -(-(st.clone() * st) * half).exp_m1()
            }
            Family::Stable => -(-st.powf(&T::from_f64(self.alpha_unchecked()))).exp_m1(),
            Family::StudentT => T::one() - self.cf(t),
        }
    }

    pub fn char_fn(&self, t: f64) -> Result<f64> {
        self.validate()?;
        if !t.is_finite() {
            return Err(Error::Domain(format!("t must be finite (got {t})")));
        }
        Ok(self.cf(&t))
    }

    /// `1 - f(t)` to full `f64` relative accuracy.
    pub fn char_fn_complement(&self, t: f64) -> Result<f64> {
        self.validate()?;
        if !t.is_finite() {
            return Err(Error::Domain(format!("t must be finite (got {t})")));
        }
        Ok(match self.family {
            Family::StudentT => self.cf_complement(&Precise::<128>::from_f64(t)).to_f64(),
            _ => self.cf_complement(&t),
        })
    }

    pub fn pdf(&self, theta: f64) -> Result<f64> {
        self.validate()?;
        if self.sigma == 0.0 {
            return Err(Error::Domain("density is singular at sigma = 0".into()));
        }
        let s = self.sigma;
        let gauss = |std: f64| (-0.5 * (theta / std).powi(2)).exp() / (std * (2.0 * PI).sqrt());
        match self.family {
            Family::Gaussian => Ok(gauss(s)),
            Family::StudentT => {
                let nu = self.nu_unchecked();
                let nf = f64::from(nu);
                let log_norm = ln_gamma_half::<f64>(nu + 1) - ln_gamma_half::<f64>(nu) - 0.5 * (nf * PI).ln() - s.ln();
                let z = theta / s;
                Ok((log_norm - 0.5 * (nf + 1.0) * (z * z / nf).ln_1p()).exp())
            }
            Family::Stable => match self.alpha_unchecked() {
                a if a == 2.0 => Ok(gauss(s * std::f64::consts::SQRT_2)),
                a if a == 1.0 => Ok(s / (PI * (s * s + theta * theta))),
                a => Err(Error::Unsupported(format!("stable density has no closed form at alpha = {a}"))),
            },
        }
    }

    /// Validated sampler for repeated draws.
    pub fn sampler(&self) -> Result<Sampler> {
        self.validate()?;
        let kind = if self.sigma == 0.0 {
            SamplerKind::Zero
        } else {
            match self.family {
                Family::Gaussian => SamplerKind::Gaussian,
                Family::StudentT => {
                    let nu = self.nu_unchecked();
                    let chi = ChiSquared::new(f64::from(nu))
                        .map_err(|e| Error::InvalidParameter(format!("chi-square({nu}): {e}")))?;
                    SamplerKind::StudentT { nu: f64::from(nu), chi }
                }
                Family::Stable => match self.alpha_unchecked() {
                    a if a == 1.0 => SamplerKind::Cauchy,
                    alpha => SamplerKind::Stable { alpha },
                },
            }
        };
        Ok(Sampler { sigma: self.sigma, kind })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        Ok(self.sampler()?.sample(rng))
    }

    /// `(1 - f(1)) / 2`, the probability that a rotation flips the qubit.
    pub fn physical_error_prob(&self) -> Result<f64> {
        Ok(0.5 * self.char_fn_complement(1.0)?)
    }

    /// `1 - F² = (3/8)(1 - f(2))`: infidelity of one noisy `exp(-iθσ_y)`
    /// averaged over uniformly drawn input states.
    pub fn physical_infidelity(&self) -> Result<f64> {
        Ok(0.375 * self.char_fn_complement(2.0)?)
    }
}

#[derive(Debug, Clone)]
enum SamplerKind {
    Zero,
    Gaussian,
    StudentT { nu: f64, chi: ChiSquared<f64> },
    Cauchy,
    Stable { alpha: f64 },
}

#[derive(Debug, Clone)]
pub struct Sampler {
    sigma: f64,
    kind: SamplerKind,
}

impl Sampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let unit = match &self.kind {
            SamplerKind::Zero => return 0.0,
            SamplerKind::Gaussian => StandardNormal.sample(rng),
            SamplerKind::StudentT { nu, chi } => {
                let z: f64 = StandardNormal.sample(rng);
                z / (chi.sample(rng) / nu).sqrt()
            }
            SamplerKind::Cauchy => (PI * (rng.random::<f64>() - 0.5)).tan(),
            SamplerKind::Stable { alpha } => cms_symmetric(*alpha, rng),
        };
        self.sigma * unit
    }

    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for slot in out {
            *slot = self.sample(rng);
        }
    }
}

impl Distribution<f64> for Sampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        Sampler::sample(self, rng)
    }
}

/// Chambers–Mallows–Stuck, symmetric case; unit scale in `exp(-|t|^α)`.
fn cms_symmetric<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let v = PI * (rng.random::<f64>() - 0.5);
    let w: f64 = Exp1.sample(rng);
    let av = alpha * v;
    av.sin() / v.cos().powf(1.0 / alpha) * ((v - av).cos() / w).powf((1.0 - alpha) / alpha)
}

/// Empirical `⟨cos(tθ)⟩` with its standard error.
pub fn empirical_cf(samples: &[f64], t: f64) -> (f64, f64) {
    let n = samples.len() as f64;
    let (sum, sum_sq) = samples.iter().fold((0.0, 0.0), |(s, q), &x| {
        let c = (t * x).cos();
        (s + c, q + c * c)
    });
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn all_families(sigma: f64) -> Vec<DistributionSpec> {
        vec![
            DistributionSpec::gaussian(sigma),
            DistributionSpec::student_t(1, sigma),
            DistributionSpec::student_t(2, sigma),
            DistributionSpec::student_t(5, sigma),
            DistributionSpec::stable(0.7, sigma),
            DistributionSpec::stable(1.5, sigma),
            DistributionSpec::stable(2.0, sigma),
        ]
    }

    #[test]
    fn cf_examples() {
        assert_eq!(DistributionSpec::gaussian(1.0).char_fn(0.0).unwrap(), 1.0);
        let g = DistributionSpec::gaussian(1.0).char_fn(1.0).unwrap();
        assert!((g - 0.606_530_659_712_633_4).abs() < 1e-15);
        let c = DistributionSpec::cauchy(1.0).char_fn(1.0).unwrap();
        assert!((c - 0.367_879_441_171_442_3).abs() < 1e-15);
        let s1 = DistributionSpec::stable(1.0, 1.0).char_fn(1.0).unwrap();
        assert!((s1 - c).abs() < 1e-15);
    }

    #[test]
    fn stable_two_is_scaled_gaussian() {
        let s = 0.37;
        let st = DistributionSpec::stable(2.0, s);
        let g = DistributionSpec::gaussian(s * 2f64.sqrt());
        for i in 0..=100 {
            let t = f64::from(i) / 10.0;
            assert!((st.char_fn(t).unwrap() - g.char_fn(t).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn cf_bounds_and_symmetry() {
        for spec in all_families(0.8) {
            for i in 0..60 {
                let t = f64::from(i) * 0.25;
                let f = spec.char_fn(t).unwrap();
                assert!((-1e-15..=1.0 + 1e-15).contains(&f), "{spec:?} t={t}: {f}");
                assert_eq!(f, spec.char_fn(-t).unwrap());
            }
            assert_eq!(spec.char_fn(0.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn student_approaches_gaussian() {
        let sigma = 0.6;
        let t201 = DistributionSpec::student_t(201, sigma);
        let g = DistributionSpec::gaussian(sigma);
        let worst = (0..=400)
            .map(|i| f64::from(i) / 100.0)
            .map(|t| (t201.char_fn(t).unwrap() - g.char_fn(t).unwrap()).abs())
            .fold(0.0, f64::max);
        assert!(worst < 0.01, "max deviation {worst}");
    }

    #[test]
    fn validation() {
        assert!(DistributionSpec::gaussian(-1.0).validate().is_err());
        assert!(DistributionSpec::gaussian(f64::NAN).validate().is_err());
        assert!(DistributionSpec::student_t(0, 1.0).validate().is_err());
        assert!(DistributionSpec::stable(0.0, 1.0).validate().is_err());
        assert!(DistributionSpec::stable(2.1, 1.0).validate().is_err());
        let mut mixed = DistributionSpec::gaussian(1.0);
        mixed.alpha = Some(1.0);
        assert!(matches!(mixed.char_fn(1.0), Err(Error::InvalidParameter(_))));
        let nothing = DistributionSpec { family: Family::Stable, sigma: -1.0, nu: None, alpha: None };
        assert_eq!(nothing.problems().len(), 2);
    }

    #[test]
    fn serde_record_shape() {
        let spec: DistributionSpec = serde_json::from_str(r#"{"family":"student","sigma":0.1,"nu":3}"#).unwrap();
        assert_eq!(spec, DistributionSpec::student_t(3, 0.1));
        let text = serde_json::to_string(&DistributionSpec::stable(1.5, 0.2)).unwrap();
        assert_eq!(text, r#"{"family":"stable","sigma":0.2,"alpha":1.5}"#);
        assert!(serde_json::from_str::<DistributionSpec>(r#"{"family":"gaussian","sigma":1,"mu":0}"#).is_err());
    }

    #[test]
    fn pdf_examples() {
        let c = DistributionSpec::cauchy(1.0).pdf(0.0).unwrap();
        assert!((c - 1.0 / PI).abs() < 1e-15);
        let g = DistributionSpec::gaussian(2.0).pdf(0.0).unwrap();
        assert!((g - 0.199_471_140_200_716_35).abs() < 1e-15);
        // ν = 3 tail ~ θ^{-4}
        let t3 = DistributionSpec::student_t(3, 1.0);
        let ratio = t3.pdf(2e4).unwrap() / t3.pdf(1e4).unwrap();
        assert!((ratio - 1.0 / 16.0).abs() < 1e-6);
        assert!(matches!(DistributionSpec::stable(1.5, 1.0).pdf(0.0), Err(Error::Unsupported(_))));
        assert!((DistributionSpec::stable(1.0, 0.5).pdf(0.3).unwrap() - DistributionSpec::cauchy(0.5).pdf(0.3).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn pdf_integrates_to_one() {
        // midpoint rule after θ = σ tan(u), which maps the real line to (-π/2, π/2)
        for spec in [
            DistributionSpec::gaussian(0.7),
            DistributionSpec::student_t(1, 0.7),
            DistributionSpec::student_t(4, 0.7),
            DistributionSpec::stable(2.0, 0.7),
        ] {
            let m = 200_000;
            let h = PI / f64::from(m);
            let total: f64 = (0..m)
                .map(|i| {
                    let u = -PI / 2.0 + (f64::from(i) + 0.5) * h;
                    let theta = spec.sigma * u.tan();
                    spec.pdf(theta).unwrap() * spec.sigma / u.cos().powi(2) * h
                })
                .sum();
            assert!((total - 1.0).abs() < 1e-6, "{spec:?}: {total}");
        }
    }

    #[test]
    fn pdf_matches_cf_through_fourier_inversion() {
        // f(θ) = (1/π) ∫_0^∞ cf(t) cos(tθ) dt for the Student ν = 2 case
        let spec = DistributionSpec::student_t(2, 1.0);
        let theta = 0.4;
        let h = 1e-3;
        let inv: f64 = (0..40_000)
            .map(|i| {
                let t = (f64::from(i) + 0.5) * h;
                spec.char_fn(t).unwrap() * (t * theta).cos() * h
            })
            .sum::<f64>()
            / PI;
        assert!((inv - spec.pdf(theta).unwrap()).abs() < 1e-6, "{inv}");
    }

    #[test]
    fn zero_sigma_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for spec in all_families(0.0) {
            for _ in 0..100 {
                assert_eq!(spec.sample(&mut rng).unwrap(), 0.0);
            }
            assert_eq!(spec.physical_error_prob().unwrap(), 0.0);
            assert_eq!(spec.physical_infidelity().unwrap(), 0.0);
        }
    }

    #[test]
    fn empirical_cf_matches_for_every_family() {
        let n = 1_000_000;
        let mut rng = ChaCha8Rng::seed_from_u64(20_26);
        let mut specs = all_families(1.0);
        specs.push(DistributionSpec::student_t(5, 0.3));
        specs.push(DistributionSpec::stable(1.0, 1.0));
        for spec in specs {
            let sampler = spec.sampler().unwrap();
            let mut xs = vec![0.0; n];
            sampler.fill(&mut rng, &mut xs);
            for t in [0.5, 1.0, 2.0] {
                let (m, se) = empirical_cf(&xs, t);
                let f = spec.char_fn(t).unwrap();
                assert!((m - f).abs() < 4.0 * se.max(1e-12), "{spec:?} t={t}: {m} vs {f} (se {se})");
            }
        }
    }

    #[test]
    fn cauchy_empirical_cf_example() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let sampler = DistributionSpec::stable(1.0, 1.0).sampler().unwrap();
        let mut xs = vec![0.0; 1_000_000];
        sampler.fill(&mut rng, &mut xs);
        let (m, _) = empirical_cf(&xs, 1.0);
        assert!((m - (-1f64).exp()).abs() < 0.002);
    }

    #[test]
    fn sampling_is_deterministic() {
        let spec = DistributionSpec::stable(1.3, 0.4);
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..10).map(|_| spec.sample(&mut rng).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(draw(3), draw(3));
        assert_ne!(draw(3), draw(4));
    }

    #[test]
    fn physical_maps() {
        let g = DistributionSpec::gaussian(0.1);
        assert!((g.physical_error_prob().unwrap() - 0.002_493_760_403_658_843_6).abs() < 1e-15);
        assert!((g.physical_error_prob().unwrap() / 0.0025 - 1.0).abs() < 3e-3);
        assert!((g.physical_infidelity().unwrap() - 0.375 * (-(-0.02f64).exp_m1())).abs() < 1e-17);
        assert!((g.physical_infidelity().unwrap() - 0.007_425_4).abs() < 1e-7);
        // Cauchy: σ/2 + O(σ²)
        let c = DistributionSpec::cauchy(1e-4).physical_error_prob().unwrap();
        assert!((c / 5e-5 - 1.0).abs() < 2e-4);
        for spec in all_families(1e4) {
            assert!((spec.physical_infidelity().unwrap() - 0.375).abs() < 1e-3, "{spec:?}");
        }
    }

    #[test]
    fn student_complement_keeps_relative_accuracy() {
        // 1 - (1+x)e^{-x} = x²/2 - x³/3 + ...
        let x: f64 = 1e-7;
        let spec = DistributionSpec::student_t(3, x / 3f64.sqrt());
        let got = spec.char_fn_complement(1.0).unwrap();
        let want = x * x / 2.0 - x * x * x / 3.0;
        assert!((got / want - 1.0).abs() < 1e-12, "{got:e} vs {want:e}");
    }

    #[test]
    fn physical_maps_monotone_in_sigma() {
        for base in all_families(1.0) {
            let mut last = (0.0, 0.0);
            for i in 1..=60 {
                let spec = base.with_sigma(1e-3 * 1.15f64.powi(i));
                let cur = (spec.physical_error_prob().unwrap(), spec.physical_infidelity().unwrap());
                assert!(cur.0 >= last.0 && cur.1 >= last.1, "{spec:?}");
                last = cur;
            }
        }
    }
}

//! Special functions: exact binomials, log-gamma at half-integers, and the
//! modified Bessel function of the second kind `K_v`.
//!
//! `K_v` has two routes. Half-integer orders use the terminating closed form;
//! every other real order uses the trapezoid rule on
//! `K_v(x) = ∫_0^∞ exp(-x cosh u) cosh(v u) du`, which converges
//! geometrically because the integrand is analytic in a strip. Both routes
//! are generic over [`Real`] so they run at extended precision too.

use crate::scalar::Real;

/// Exact `C(n, k)`; `0` when `k > n`. Panics on `u128` overflow.
pub fn binomial(n: u32, k: u32) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc
            .checked_mul(u128::from(n - i))
            .expect("binomial coefficient overflows u128")
            / u128::from(i + 1);
    }
    acc
}

/// `ln Γ(m/2)` for a positive integer `m`.
pub fn ln_gamma_half<T: Real>(m: u32) -> T {
    assert!(m > 0, "Γ(0) is undefined");
    if m.is_multiple_of(2) {
        // Γ(k) = (k-1)!
        (1..m / 2).fold(T::zero(), |acc, j| acc + T::from_u64(u64::from(j)).ln())
    } else {
        // Γ(j + 1/2) = sqrt(π) Π_{i=1..j} (2i-1)/2
        let half = T::one() / (T::one() + T::one());
        let base = T::pi().ln() * half.clone();
        (1..=(m - 1) / 2).fold(base, |acc, i| {
            acc + (T::from_u64(u64::from(2 * i - 1)) * half.clone()).ln()
        })
    }
}

/// `K_{r - 1/2}(x)` for `r >= 1`, `x > 0`, via the terminating series.
pub fn bessel_k_half_integer<T: Real>(r: u32, x: &T) -> T {
    assert!(r >= 1, "order index must be >= 1");
    assert!(*x > T::zero(), "K_v needs x > 0");
    let two = T::one() + T::one();
    let inv_2x = T::one() / (two.clone() * x.clone());
    // a_k = (r-1+k)! / (k! (r-1-k)!), summed in Horner form over (2x)^{-1}
    let mut coeffs = Vec::with_capacity(r as usize);
    let mut a = T::one();
    coeffs.push(a.clone());
    for k in 0..r.saturating_sub(1) {
        a = a * T::from_u64(u64::from((r + k) * (r - 1 - k))) / T::from_u64(u64::from(k + 1));
        coeffs.push(a.clone());
    }
    let series = coeffs
        .into_iter()
        .rev()
        .fold(T::zero(), |acc, c| acc * inv_2x.clone() + c);
    (T::pi() / (two * x.clone())).sqrt() * (-x.clone()).exp() * series
}

/// Trapezoid evaluation of the `K_v` integral, returned as
/// `(sum, log_scale)` with `K_v(x) = sum · exp(log_scale)` so that large
/// orders at small arguments do not overflow `f64`.
///
/// `twice_order` is `2v`; integer and half-integer orders are therefore
/// represented exactly in every scalar type.
pub fn bessel_k_quadrature_parts<T: Real>(twice_order: u32, x: &T) -> (T, T) {
    let xf = x.to_f64();
    assert!(xf > 0.0, "K_v needs x > 0");
    let v = f64::from(twice_order) / 2.0;
    let target = f64::from(T::precision_bits() + 10) * std::f64::consts::LN_2 + 5.0;
    // strip half-width π/4: error ~ (K_v(x cos π/4)/K_v(x)) · exp(-π²/(2h))
    let strip_penalty = 0.5 * v * std::f64::consts::LN_2 + (1.0 - std::f64::consts::FRAC_1_SQRT_2) * xf;
    let h = std::f64::consts::PI.powi(2) / (2.0 * (target + strip_penalty));

    let log_integrand = |u: f64| -xf * u.cosh() + v * u;
    let peak = if v > 0.0 { (v / xf).asinh() } else { 0.0 };
    let log_peak = log_integrand(peak);

    let h_t = T::from_f64(h);
    let log_peak_t = T::from_f64(log_peak);
    let vt = T::from_u64(u64::from(twice_order)) / (T::one() + T::one());
    let half = T::one() / (T::one() + T::one());

    let mut sum = T::zero();
    let mut k: u64 = 0;
    loop {
        let u = k as f64 * h;
        if u > peak && log_integrand(u) - log_peak < -target {
            break;
        }
        assert!(k < 1_000_000, "K_v quadrature failed to terminate (x = {xf}, v = {v})");
        let u_t = h_t.clone() * T::from_u64(k);
        let e_u = u_t.exp();
        let e_neg_u = T::one() / e_u.clone();
        let cosh_u = (e_u.clone() + e_neg_u.clone()) * half.clone();
        // cosh(v u) = e^{v u} (1 + e^{-2 v u}) / 2
        let tail = e_neg_u.powi(twice_order);
        let log_term = -x.clone() * cosh_u + vt.clone() * u_t - log_peak_t.clone();
        let term = log_term.exp() * (T::one() + tail) * half.clone();
        sum = if k == 0 { sum + term * half.clone() } else { sum + term };
        k += 1;
    }
    (sum * h_t, log_peak_t)
}

/// `K_v(x)` for `v = twice_order / 2` by quadrature.
pub fn bessel_k<T: Real>(twice_order: u32, x: &T) -> T {
    let (sum, log_scale) = bessel_k_quadrature_parts(twice_order, x);
    sum * log_scale.exp()
}

/// Student's t characteristic function in its reduced argument
/// `x = σ √ν |t|`:
/// `f = x^{ν/2} K_{ν/2}(x) / (2^{ν/2 - 1} Γ(ν/2))`.
///
/// Odd `ν` uses the closed form `e^{-x} Σ_j c_j x^j`; even `ν` goes through
/// the quadrature.
pub fn student_t_reduced_cf<T: Real>(nu: u32, x: &T) -> T {
    assert!(nu >= 1, "degrees of freedom must be >= 1");
    assert!(*x >= T::zero(), "reduced argument must be non-negative");
    if x.is_zero() {
        return T::one();
    }
    if nu % 2 == 1 {
        student_t_reduced_cf_odd(nu, x)
    } else {
        student_t_reduced_cf_quadrature(nu, x)
    }
}

fn student_t_reduced_cf_odd<T: Real>(nu: u32, x: &T) -> T {
    let r = nu.div_ceil(2);
    // c_0 = 1, c_{j+1} = c_j · 2 (r-1-j) / ((2r-2-j)(j+1))
    let mut coeffs = Vec::with_capacity(r as usize);
    let mut c = T::one();
    coeffs.push(c.clone());
    for j in 0..r - 1 {
        c = c * T::from_u64(u64::from(2 * (r - 1 - j)))
            / T::from_u64(u64::from((2 * r - 2 - j) * (j + 1)));
        coeffs.push(c.clone());
    }
    if x.to_f64() <= 30.0 {
        let poly = coeffs.into_iter().rev().fold(T::zero(), |acc, c| acc * x.clone() + c);
        (-x.clone()).exp() * poly
    } else {
        let ln_x = x.ln();
        coeffs.into_iter().enumerate().fold(T::zero(), |acc, (j, c)| {
            acc + (c.ln() + ln_x.clone() * T::from_u64(j as u64) - x.clone()).exp()
        })
    }
}

/// Quadrature route for any `ν`; exposed so odd `ν` can be cross-checked.
pub fn student_t_reduced_cf_quadrature<T: Real>(nu: u32, x: &T) -> T {
    if x.is_zero() {
        return T::one();
    }
    let (sum, log_scale) = bessel_k_quadrature_parts(nu, x);
    let v = T::from_u64(u64::from(nu)) / (T::one() + T::one());
    let log_norm = v.clone() * x.ln() - (v - T::one()) * T::ln_2() - ln_gamma_half::<T>(nu);
    sum * (log_norm + log_scale).exp()
}

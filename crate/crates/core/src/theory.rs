//! Closed-form moments, normalizations and convergence-rate bounds.
//!
//! Everything that is a rational function of `n` and `m` is returned as an
//! exact [`BigRational`]; only standardizations and the Kolmogorov bounds
//! (which involve square roots) are `f64`.
//!
//! Several published expressions are kept verbatim next to their audited
//! counterparts. In particular the inversion covariance is provided both as
//! printed (`cov_printed`, positive for `m >= 1`) and with the sign that the
//! exhaustive enumeration confirms (`cov_corrected`); the total variance is
//! provided both as printed and as assembled from the components.

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel;
use crate::ratio::{self, int, ratio, to_f64};
use crate::shuffle::ShuffleSpec;

fn nn1(n: u64) -> BigRational {
    let n = n as i64;
    int(n) * int(n - 1)
}

fn choose2(n: u64) -> BigRational {
    nn1(n) / int(2)
}

/// `E[I] = n(n-1)/4`, independent of `m`.
pub fn mean_inversions(n: u64) -> BigRational {
    nn1(n) / int(4)
}

/// Mean, variance components and total variance of the inversion count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InversionMomentReport {
    pub n: u64,
    pub m: u32,
    #[serde(with = "ratio::as_string")]
    pub mean: BigRational,
    #[serde(with = "ratio::as_string")]
    pub var_a: BigRational,
    #[serde(with = "ratio::as_string")]
    pub var_c: BigRational,
    #[serde(with = "ratio::as_string")]
    pub cov_printed: BigRational,
    #[serde(with = "ratio::as_string")]
    pub cov_corrected: BigRational,
    #[serde(with = "ratio::as_string")]
    pub var_total_printed: BigRational,
    /// `var_a + 2 cov_corrected + var_c`.
    #[serde(with = "ratio::as_string")]
    pub var_total_from_components: BigRational,
}

pub fn var_pair_order(n: u64, m: u32) -> BigRational {
    let piles_sq = 4 * (m as i64) * (m as i64);
    nn1(n) * int(2 * n as i64 + 5) / int(72) * ratio(piles_sq - 1, piles_sq)
}

pub fn var_equal_even(n: u64, m: u32) -> BigRational {
    let m = m as i64;
    nn1(n) * int(2 * n as i64 + 4 * m - 5) / int(32 * m * m)
}

/// `-n(n-1)(1-2m)/(32m^2)`, exactly as published.
pub fn cov_printed(n: u64, m: u32) -> BigRational {
    let m = m as i64;
    -(nn1(n) * int(1 - 2 * m)) / int(32 * m * m)
}

/// `-n(n-1)(2m-1)/(32m^2)`.
pub fn cov_corrected(n: u64, m: u32) -> BigRational {
    let m = m as i64;
    -(nn1(n) * int(2 * m - 1)) / int(32 * m * m)
}

/// `n(n-1)(2m^2 n + 4n + 5m^2 + 18m - 17)/(72 m^2)`, exactly as published.
pub fn var_total_printed(n: u64, m: u32) -> BigRational {
    let (n_, m) = (n as i64, m as i64);
    nn1(n) * int(2 * m * m * n_ + 4 * n_ + 5 * m * m + 18 * m - 17) / int(72 * m * m)
}

pub fn inversion_moments(n: u64, m: u32) -> InversionMomentReport {
    let var_a = var_pair_order(n, m);
    let var_c = var_equal_even(n, m);
    let cov_corrected = cov_corrected(n, m);
    let var_total_from_components = &var_a + &var_c + &cov_corrected * int(2);
    InversionMomentReport {
        n,
        m,
        mean: mean_inversions(n),
        var_a,
        var_c,
        cov_printed: cov_printed(n, m),
        cov_corrected,
        var_total_printed: var_total_printed(n, m),
        var_total_from_components,
    }
}

/// Published variance of inversions of a uniformly random unimodal
/// permutation, `(n+1)n(n-1)/12`. Kept for audit; see the m = 1 oracle.
pub fn unimodal_variance_claimed(n: u64) -> BigRational {
    let n_ = n as i64;
    int(n_ + 1) * nn1(n) / int(12)
}

/// `zeta_1^2 = (m^2 + 2)/(36 m^2)`.
pub fn zeta1_sq(m: u32) -> BigRational {
    let m = m as i64;
    ratio(m * m + 2, 36 * m * m)
}

/// Affine map `z = (value - center)/scale` to a standard scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub center: f64,
    pub scale: f64,
}

impl Standardizer {
    pub fn new(center: f64, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite() && center.is_finite()) {
            return Err(Error::Domain(format!(
                "standardizer needs finite center and positive scale, got ({center}, {scale})"
            )));
        }
        Ok(Standardizer { center, scale })
    }

    #[inline]
    pub fn apply(&self, value: f64) -> f64 {
        (value - self.center) / self.scale
    }
}

/// `sqrt(n)(I - C(n,2)/2) / (2 zeta_1 C(n,2))` as a standardizer.
pub fn inversion_standardizer(n: u64, m: u32) -> Result<Standardizer> {
    if n < 2 {
        return Err(Error::Domain(format!(
            "inversion standardization needs n >= 2, got {n}"
        )));
    }
    let pairs = to_f64(&choose2(n));
    let zeta1 = to_f64(&zeta1_sq(m)).sqrt();
    Standardizer::new(pairs / 2.0, 2.0 * zeta1 * pairs / (n as f64).sqrt())
}

pub fn standardize_inversions(value: f64, n: u64, m: u32) -> Result<f64> {
    Ok(inversion_standardizer(n, m)?.apply(value))
}

/// The two-term U-statistic Kolmogorov bound
/// `6.1 E|h1|^3 /(sqrt(n) zeta1^3) + (1+sqrt2)(r-1) sigma /(sqrt(r(n-r+1)) zeta1)`.
pub fn chen_shao_bound(n: u64, r: u64, zeta1: f64, sigma: f64, third_moment: f64) -> Result<f64> {
    if r < 2 || n <= r {
        return Err(Error::Domain(format!("need n > r >= 2, got n = {n}, r = {r}")));
    }
    let valid = zeta1 > 0.0 && sigma >= 0.0 && third_moment >= 0.0;
    if !valid {
        return Err(Error::Domain(format!(
            "need zeta1 > 0, sigma >= 0, third moment >= 0; got {zeta1}, {sigma}, {third_moment}"
        )));
    }
    let n_f = n as f64;
    let r_f = r as f64;
    let first = 6.1 * third_moment / (n_f.sqrt() * zeta1.powi(3));
    let second = (1.0 + 2f64.sqrt()) * (r_f - 1.0) * sigma
        / ((r_f * (n_f - r_f + 1.0)).sqrt() * zeta1);
    Ok(first + second)
}

/// Which value of `E|h1|^3` to feed into the inversion bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThirdMoment {
    /// `(5/2)^3 = 15.625`, from `|h1| <= 5/2`.
    #[default]
    Bound,
    /// The exact rational `E|h1|^3`.
    Exact,
}

/// The U-statistic bound instantiated for inversions: `r = 2`,
/// `sigma = 1/2`, `zeta1 = sqrt(zeta1_sq(m))`.
pub fn inversion_kd_bound(n: u64, m: u32, third: ThirdMoment) -> Result<f64> {
    let third_moment = match third {
        ThirdMoment::Bound => kernel::H1_THIRD_MOMENT_BOUND,
        ThirdMoment::Exact => to_f64(&kernel::h1_third_abs_moment_exact(m)),
    };
    let sigma = to_f64(&kernel::kernel_variance()).sqrt();
    chen_shao_bound(n, 2, to_f64(&zeta1_sq(m)).sqrt(), sigma, third_moment)
}

/// `C = 6.1 * 15.625 * 6^3 + 3(1 + sqrt 2)`, the uniform constant in
/// `d_K <= C / sqrt(n)`.
pub fn kd_bound_constant() -> f64 {
    6.1 * 15.625 * 216.0 + 3.0 * (1.0 + 2f64.sqrt())
}

/// `C / sqrt(n)`.
pub fn uniform_kd_bound(n: u64) -> f64 {
    kd_bound_constant() / (n as f64).sqrt()
}

/// Smallest `n` with `C / sqrt(n) < 1`.
pub fn kd_bound_nontrivial_threshold() -> u64 {
    let c = kd_bound_constant();
    (c * c).floor() as u64 + 1
}

/// Descent mean `(n-1)/2` and the quoted variance `(n+1)/12 + (n-2)/(6m^2)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DescentMoments {
    #[serde(with = "ratio::as_string")]
    pub mean: BigRational,
    #[serde(with = "ratio::as_string")]
    pub var_fdh: BigRational,
}

pub fn descent_moments(n: u64, m: u32) -> DescentMoments {
    let (n, m) = (n as i64, m as i64);
    DescentMoments {
        mean: ratio(n - 1, 2),
        var_fdh: ratio(n + 1, 12) + ratio(n - 2, 6 * m * m),
    }
}

/// `(d - n/2)/sqrt(n/4)` as a standardizer.
pub fn descent_standardizer(n: u64) -> Result<Standardizer> {
    if n < 1 {
        return Err(Error::Domain("descent standardization needs n >= 1".into()));
    }
    let n = n as f64;
    Standardizer::new(n / 2.0, (n / 4.0).sqrt())
}

pub fn standardize_descents(value: f64, n: u64) -> Result<f64> {
    Ok(descent_standardizer(n)?.apply(value))
}

/// `(4m - 1)/sqrt(n)`: the shift between standardized descents and the
/// standardized binomial coupling variable.
pub fn slutsky_error(n: u64, m: u32) -> f64 {
    (4.0 * m as f64 - 1.0) / (n as f64).sqrt()
}

/// Limiting variance `(m^2+2)/(3m^2)` stated for standardized descents.
/// Compared against data, never assumed.
pub fn limit_var_descents_claimed(m: u32) -> BigRational {
    let m = m as i64;
    ratio(m * m + 2, 3 * m * m)
}

/// Limiting variance implied by the binomial coupling (`|d - B| <= 4m-1`,
/// `Var B = n/4`).
pub fn limit_var_descents_coupling() -> BigRational {
    int(1)
}

/// Probability that a card lands in an even pile; `1/2` when uniform.
pub fn even_pile_probability(spec: &ShuffleSpec) -> BigRational {
    (1..=spec.m()).map(|k| spec.pile_probability(2 * k)).sum()
}

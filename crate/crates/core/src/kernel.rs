//! The order-2 U-statistic kernel behind the inversion CLT.
//!
//! Each card carries a point `z = (x, u)` with `x` its pile letter and `u` an
//! auxiliary continuous uniform. The kernel
//!
//! ```text
//! h(a, b) = [x_a > x_b][u_a < u_b] + [x_a < x_b][u_a > u_b] + [x_a = x_b even] - 1/2
//! ```
//!
//! is symmetric, takes values in `{-1/2, +1/2}`, and its projection
//! `h1(z) = E[h(z, Z)]` is linear in `u` for each letter, so its moments are
//! exact rationals.

use num_rational::BigRational;
use num_traits::Signed;

use crate::error::{Error, Result};
use crate::ratio::{int, ratio};

/// Upper bound on `E|h1|^3` from `|h1| <= 5/2`.
pub const H1_THIRD_MOMENT_BOUND: f64 = 15.625;

/// `|h1(z)| <= 5/2` for every point and every `m`.
pub const H1_ABS_BOUND: f64 = 2.5;

/// A kernel argument `(x, u)` with `x` in `[1, 2m]` and `u` in `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelPoint {
    x: u32,
    u: f64,
}

impl KernelPoint {
    pub fn new(x: u32, u: f64, m: u32) -> Result<Self> {
        if m == 0 || x == 0 || x > 2 * m {
            return Err(Error::InvalidKernelInput(format!(
                "letter {x} outside [1, {}]",
                2 * m
            )));
        }
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::InvalidKernelInput(format!("u = {u} outside (0, 1)")));
        }
        Ok(KernelPoint { x, u })
    }

    /// Endpoints `u = 0` and `u = 1` are allowed; `h1` is evaluated on the
    /// closed interval.
    fn closed(x: u32, u: f64, m: u32) -> Result<Self> {
        if m == 0 || x == 0 || x > 2 * m {
            return Err(Error::InvalidKernelInput(format!(
                "letter {x} outside [1, {}]",
                2 * m
            )));
        }
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::InvalidKernelInput(format!("u = {u} outside [0, 1]")));
        }
        Ok(KernelPoint { x, u })
    }

    pub fn x(&self) -> u32 {
        self.x
    }

    pub fn u(&self) -> f64 {
        self.u
    }
}

/// The symmetric kernel `h`. Ties in `u` between distinct letters have
/// probability zero under the model and are rejected.
pub fn kernel_h(a: &KernelPoint, b: &KernelPoint, m: u32) -> Result<f64> {
    let piles = 2 * m;
    if a.x > piles || b.x > piles {
        return Err(Error::InvalidKernelInput(format!(
            "letters {} and {} not both in [1, {piles}]",
            a.x, b.x
        )));
    }
    if a.x != b.x && a.u == b.u {
        return Err(Error::InvalidKernelInput(format!(
            "tied u = {} for distinct letters {} and {}",
            a.u, a.x, b.x
        )));
    }
    let hit = (a.x > b.x && a.u < b.u)
        || (a.x < b.x && a.u > b.u)
        || (a.x == b.x && a.x.is_multiple_of(2));
    Ok(if hit { 0.5 } else { -0.5 })
}

/// `h1(z) = ((x-1)/(2m))(1-u) + ((2m-x)/(2m))u + [x even]/(2m) - 1/2`.
pub fn h1(z: &KernelPoint, m: u32) -> f64 {
    let piles = 2.0 * m as f64;
    let x = z.x as f64;
    let even = if z.x.is_multiple_of(2) { 1.0 } else { 0.0 };
    (x - 1.0) / piles * (1.0 - z.u) + (piles - x) / piles * z.u + even / piles - 0.5
}

/// Evaluates `h1` at `u` in the closed interval `[0, 1]`.
pub fn h1_at(x: u32, u: f64, m: u32) -> Result<f64> {
    Ok(h1(&KernelPoint::closed(x, u, m)?, m))
}

/// `h1(x, u) = intercept + slope * u` for a fixed letter.
fn h1_line(x: u32, m: u32) -> (BigRational, BigRational) {
    let piles = 2 * m as i64;
    let x = x as i64;
    let even = (x % 2 == 0) as i64;
    let intercept = ratio(x - 1 + even, piles) - ratio(1, 2);
    let slope = ratio(piles - 2 * x + 1, piles);
    (intercept, slope)
}

fn average_over_letters(m: u32, per_letter: impl Fn(&BigRational, &BigRational) -> BigRational) -> BigRational {
    let total: BigRational = (1..=2 * m)
        .map(|x| {
            let (a, b) = h1_line(x, m);
            per_letter(&a, &b)
        })
        .sum();
    total / int(2 * m as i64)
}

/// `E[h1(Z)]`, exactly. Zero for every `m`.
pub fn h1_mean_exact(m: u32) -> BigRational {
    average_over_letters(m, |a, b| a + b / int(2))
}

/// `E[h1(Z)^2]`, exactly.
pub fn h1_second_moment_exact(m: u32) -> BigRational {
    average_over_letters(m, |a, b| a * a + a * b + b * b / int(3))
}

/// `E|h1(Z)|^3`, exactly, by splitting each letter's line at its root.
pub fn h1_third_abs_moment_exact(m: u32) -> BigRational {
    average_over_letters(m, |a, b| {
        // slope is an odd multiple of 1/(2m), never zero
        let end = a + b;
        let a4 = pow4(a);
        let end4 = pow4(&end);
        let four_b = (b * int(4)).abs();
        let crosses = (a.is_negative() && end.is_positive()) || (a.is_positive() && end.is_negative());
        if crosses {
            (a4 + end4) / four_b
        } else {
            (end4 - a4).abs() / four_b
        }
    })
}

fn pow4(v: &BigRational) -> BigRational {
    let sq = v * v;
    &sq * &sq
}

/// `Var h(Z1, Z2)`: the kernel is `+-1/2` with mean zero.
pub fn kernel_variance() -> BigRational {
    ratio(1, 4)
}

/// Exact `E[h(Z1, Z2)]` from the letter distribution (u-order is a fair coin
/// for distinct letters).
pub fn kernel_mean_exact(m: u32) -> BigRational {
    let piles = 2 * m as i64;
    let pairs = piles * piles;
    let distinct = pairs - piles;
    let equal_even = m as i64;
    // distinct letters hit with probability 1/2, equal even letters always
    let hit = ratio(distinct, 2 * pairs) + ratio(equal_even, pairs);
    hit - ratio(1, 2)
}

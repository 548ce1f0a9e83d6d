//! Exact decisions for inequalities whose right side involves square roots.
//!
//! Every comparison squares both sides so that only rational arithmetic is
//! needed. Inputs on the left are non-negative.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

pub fn int<T: Into<BigInt>>(n: T) -> BigRational {
    BigRational::from_integer(n.into())
}

/// `n` for integers, `n/d` otherwise.
pub fn format_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// `x <= sqrt(a)`.
pub fn le_sqrt(x: &BigRational, a: &BigRational) -> bool {
    debug_assert!(!x.is_negative());
    x * x <= *a
}

/// `x <= sqrt(a) + sqrt(b)`, with `a, b >= 0`.
pub fn le_sqrt_sum(x: &BigRational, a: &BigRational, b: &BigRational) -> bool {
    debug_assert!(!x.is_negative());
    // x^2 <= a + b + 2 sqrt(ab)
    let u = x * x - a - b;
    if !u.is_positive() {
        return true;
    }
    &u * &u <= int(4) * a * b
}

/// `x <= sqrt((1 + sqrt 2) c)`, with `c >= 0`.
pub fn le_sqrt_one_plus_sqrt2(x: &BigRational, c: &BigRational) -> bool {
    debug_assert!(!x.is_negative());
    // x^2 - c <= sqrt(2) c
    let u = x * x - c;
    if !u.is_positive() {
        return true;
    }
    &u * &u <= int(2) * c * c
}

/// `lhs / rhs` for reporting, 0 when `lhs` is 0.
pub fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else {
        lhs / rhs
    }
}

pub fn abs(r: BigRational) -> BigRational {
    if r.is_negative() {
        -r
    } else {
        r
    }
}

pub fn is_zero(r: &BigRational) -> bool {
    r.is_zero()
}

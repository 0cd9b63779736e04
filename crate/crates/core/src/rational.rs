//! Exact rational coefficients.
//!
//! All core arithmetic runs over arbitrary-precision rationals; floats appear
//! only in the Riccati ODE cross-check.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// The coefficient field: arbitrary-precision rationals, always reduced,
/// denominator positive.
pub type Rat = BigRational;

/// Rational from an integer.
pub fn rat_i(p: i64) -> Rat {
    Rat::from_integer(BigInt::from(p))
}

/// Rational p/q. Panics when q = 0.
pub fn rat(p: i64, q: i64) -> Rat {
    Rat::new(BigInt::from(p), BigInt::from(q))
}

/// 1/k! as a rational.
pub fn inv_factorial(k: u32) -> Rat {
    let mut f = BigInt::one();
    for i in 2..=k as u64 {
        f *= BigInt::from(i);
    }
    Rat::new(BigInt::one(), f)
}

/// k! as a rational.
pub fn factorial(k: u32) -> Rat {
    let mut f = BigInt::one();
    for i in 2..=k as u64 {
        f *= BigInt::from(i);
    }
    Rat::from_integer(f)
}

/// Binomial coefficient C(n, k) as a rational.
pub fn binomial(n: u32, k: u32) -> Rat {
    if k > n {
        return Rat::zero();
    }
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..k as u64 {
        num *= BigInt::from(n as u64 - i);
        den *= BigInt::from(i + 1);
    }
    Rat::new(num, den)
}

/// Canonical display `p` or `p/q`.
pub fn display(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Rational to nearest f64 (for ODE cross-checks and reporting only).
pub fn to_f64(r: &Rat) -> f64 {
    // Scale down large entries to stay in f64 range; desk-scale values are tiny.
    let n = r.numer();
    let d = r.denom();
    let nf = bigint_to_f64(n);
    let df = bigint_to_f64(d);
    nf / df
}

fn bigint_to_f64(b: &BigInt) -> f64 {
    let s = b.to_string();
    s.parse::<f64>().unwrap_or(if b.is_negative() {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    })
}

//! Exact integer and rational combinatorics.
//!
//! Everything in this module is arbitrary precision; nothing rounds. The
//! binomial coefficient uses the vanishing convention needed by the residue
//! calculus: `C(n, k) = 0` whenever `n < k`, including every negative `n`.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{invalid, Result};

/// Arbitrary-precision rational, kept in lowest terms with a positive
/// denominator by construction.
pub type Rational = num_rational::BigRational;

/// Rational from an integer.
pub fn rat_int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Rational `num / den`. Panics if `den == 0`.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Binomial coefficient `C(n, k)` with the vanishing convention.
///
/// For `0 <= n < k` the value is 0, and every negative `n` also yields 0.
/// Negative `k` is rejected: no caller has a meaning for it.
pub fn binomial(n: i64, k: i64) -> Result<BigInt> {
    if k < 0 {
        return Err(invalid(format!("binomial: negative k = {k}")));
    }
    if n < k {
        return Ok(BigInt::zero());
    }
    // C(n, k) = C(n, n - k); evaluate the shorter product.
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 1..=k {
        // Each partial product is itself a binomial coefficient, so the
        // division below is exact.
        acc = acc * BigInt::from(n - k + i) / BigInt::from(i);
    }
    Ok(acc)
}

/// `n!` as a big integer.
pub fn factorial(n: u64) -> BigInt {
    let mut acc = BigInt::one();
    for i in 2..=n {
        acc *= BigInt::from(i);
    }
    acc
}

/// Double factorial `n!!` with the empty-product convention
/// `(-1)!! = 0!! = 1`. Arguments below -1 are rejected.
pub fn double_factorial(n: i64) -> Result<BigInt> {
    if n < -1 {
        return Err(invalid(format!("double_factorial: n = {n} < -1")));
    }
    let mut acc = BigInt::one();
    let mut i = n;
    while i > 1 {
        acc *= BigInt::from(i);
        i -= 2;
    }
    Ok(acc)
}

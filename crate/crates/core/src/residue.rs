//! Exact evaluation of the contour integrals
//!
//! ```text
//!   I(r, E) = 2^E / (2*pi*i) * integral of
//!             u^r * exp(2t / (u^2 - 1)) / ((u - 1)^(K+E) * (u + 1)^E) du
//! ```
//!
//! at `t = 0`, taken around a contour enclosing every finite pole: `u = 1`,
//! `u = -1` when `E > 0`, and `u = 0` when `r < 0`. Negative `r` only arises
//! transiently from [`recursion_split`]; enclosing the origin keeps both the
//! split identity and the degree-based vanishing law exact in that regime.
//!
//! Residues are computed by exact power-series arithmetic over [`Rational`],
//! so every value is an exact rational number (in fact an integer times a
//! power of two over one).

use std::cell::RefCell;
use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::combinatorics::Rational;
use crate::error::{invalid, Result};

/// One contour integral `I(r, E)` in ambient determinant size `K`.
///
/// `power` is the numerator exponent `r`, `derivs` the number of
/// t-derivatives already applied (the `E` in the pole orders), and `size`
/// the ambient matrix dimension `K >= 1` fixing the base pole order at
/// `u = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IntegralSpec {
    pub power: i64,
    pub derivs: u32,
    pub size: u32,
}

impl IntegralSpec {
    pub fn new(power: i64, derivs: u32, size: u32) -> Result<Self> {
        if size == 0 {
            return Err(invalid("IntegralSpec: size K must be >= 1"));
        }
        Ok(Self {
            power,
            derivs,
            size,
        })
    }

    /// Degree of the integrand as a rational function of `u`:
    /// `r - K - 2E`. The integral vanishes exactly when this is <= -2.
    pub fn degree(&self) -> i64 {
        self.power - self.size as i64 - 2 * self.derivs as i64
    }
}

/// Generalized binomial coefficient `C(p, i)` for integer `p` of either
/// sign: the series coefficient `p (p-1) ... (p-i+1) / i!`.
fn gen_binomial(p: i64, i: u32) -> Rational {
    let mut num = BigInt::one();
    for t in 0..i as i64 {
        num *= BigInt::from(p - t);
    }
    let mut den = BigInt::one();
    for t in 1..=i as i64 {
        den *= BigInt::from(t);
    }
    Rational::new(num, den)
}

/// `c^e` for nonzero integer `c` and integer exponent of either sign.
fn int_pow(c: i64, e: i64) -> Rational {
    debug_assert!(c != 0);
    let p = BigInt::from(c).pow(e.unsigned_abs() as u32);
    if e >= 0 {
        Rational::from_integer(p)
    } else {
        Rational::new(BigInt::one(), p)
    }
}

/// Coefficient of `v^m` in `(c1 + v)^p1 * (c2 + v)^p2`, expanded around
/// `v = 0` with `c1, c2` nonzero.
fn product_series_coeff(c1: i64, p1: i64, c2: i64, p2: i64, m: i64) -> Rational {
    debug_assert!(m >= 0);
    let mut acc = Rational::zero();
    for i in 0..=m {
        let a = gen_binomial(p1, i as u32);
        if a.is_zero() {
            continue;
        }
        let b = gen_binomial(p2, (m - i) as u32);
        if b.is_zero() {
            continue;
        }
        acc += a * int_pow(c1, p1 - i) * b * int_pow(c2, p2 - (m - i));
    }
    acc
}

/// Exact value of `I(r, E)` at `t = 0`.
///
/// The value is `2^E` times the sum of the integrand's residues at `u = 1`,
/// at `u = -1` (present when `E > 0`), and at `u = 0` (present when `r < 0`).
/// For `E = 0` this reduces to `binomial(r, K - 1)` under the vanishing
/// convention, and it is exactly zero whenever `degree() <= -2`.
pub fn integral_value_t0(spec: IntegralSpec) -> Rational {
    let r = spec.power;
    let e = spec.derivs as i64;
    let k = spec.size as i64;

    // Residue at u = 1: coefficient of v^(K+E-1) in (1+v)^r (2+v)^(-E).
    let mut sum = product_series_coeff(1, r, 2, -e, k + e - 1);

    // Residue at u = -1: coefficient of v^(E-1) in (-1+v)^r (-2+v)^(-(K+E)).
    if e > 0 {
        sum += product_series_coeff(-1, r, -2, -(k + e), e - 1);
    }

    // Residue at u = 0: coefficient of v^(-r-1) in (-1+v)^(-(K+E)) (1+v)^(-E).
    if r < 0 {
        sum += product_series_coeff(-1, -(k + e), 1, -e, -r - 1);
    }

    Rational::from_integer(BigInt::one() << spec.derivs) * sum
}

/// Split one derivative off the integrand:
/// `I(r, E) = 2 * I(r-2, E-1) + I(r-2, E)`.
///
/// Returns the pair `(I(r-2, E-1), I(r-2, E))`; the caller owns the factor
/// of two on the first component. Errors when `E = 0`.
pub fn recursion_split(spec: IntegralSpec) -> Result<(IntegralSpec, IntegralSpec)> {
    if spec.derivs == 0 {
        return Err(invalid("recursion_split: E must be >= 1"));
    }
    Ok((
        IntegralSpec {
            power: spec.power - 2,
            derivs: spec.derivs - 1,
            size: spec.size,
        },
        IntegralSpec {
            power: spec.power - 2,
            derivs: spec.derivs,
            size: spec.size,
        },
    ))
}

/// The t-derivative of `I(r, E)` is `I(r, E+1)`: differentiating the
/// exponential kernel deepens both poles by one and doubles the prefactor.
pub fn t_derivative(spec: IntegralSpec) -> IntegralSpec {
    IntegralSpec {
        power: spec.power,
        derivs: spec.derivs + 1,
        size: spec.size,
    }
}

thread_local! {
    static VALUE_CACHE: RefCell<HashMap<IntegralSpec, Rational>> = RefCell::new(HashMap::new());
}

/// Memoized [`integral_value_t0`]; the determinant engine re-reads the same
/// handful of specs across thousands of expansion terms.
pub(crate) fn integral_value_t0_cached(spec: IntegralSpec) -> Rational {
    VALUE_CACHE.with(|cache| {
        if let Some(v) = cache.borrow().get(&spec) {
            return v.clone();
        }
        let v = integral_value_t0(spec);
        cache.borrow_mut().insert(spec, v.clone());
        v
    })
}

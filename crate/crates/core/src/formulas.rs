//! Closed-form reference values for the sampled moments.
//!
//! Three layers live here. The bottom layer evaluates z(x) = 1/(1 - e^{-x})
//! and its logarithmic derivatives, with a Laurent expansion taking over
//! near the pole at x = 0. The middle layer is the exact finite-N machinery:
//! `weighted_product_moment` computes the Haar average of a product of
//! weighted log-derivatives over even orthogonal matrices for any set of
//! distinct shifts, and `exact_moment_so_even` specializes it to the first
//! and second moments at a single shift. The top layer,
//! `asymptotic_moment` and `compare`, packages the large-N growth laws and
//! lines them up against Monte Carlo estimates.

use num_complex::Complex64;
use num_traits::ToPrimitive;

use crate::combinatorics::{double_factorial, factorial};
use crate::ensembles::Ensemble;
use crate::error::{domain, invalid, Result};
use crate::moments::{estimate_moment, MomentEstimate, ScaledPoint};

/// Radius below which z(x) switches to its Laurent expansion.
const LAURENT_RADIUS: f64 = 1e-4;

/// z(x) with its first two logarithmic derivatives.
///
/// dlog is z'(x)/z(x) and dlog_prime its derivative. The identities
/// z'/z = 1 - z and (z'/z)' = z(z - 1) tie all three fields together;
/// each is computed in a cancellation-free form rather than chained.
#[derive(Clone, Copy, Debug)]
pub struct ZFunctionValue {
    pub x: f64,
    pub z: f64,
    pub dlog: f64,
    pub dlog_prime: f64,
}

/// Complex-argument counterpart of [`ZFunctionValue`].
#[derive(Clone, Copy, Debug)]
pub struct ZFunctionValueComplex {
    pub x: Complex64,
    pub z: Complex64,
    pub dlog: Complex64,
    pub dlog_prime: Complex64,
}

// Laurent coefficients: z(x) = 1/x + 1/2 + x/12 - x^3/720 + x^5/30240 - ...
// At |x| = 1e-4 the first dropped term is below 1e-29 of the leading one.
fn z_laurent(x: f64) -> f64 {
    let x2 = x * x;
    1.0 / x + 0.5 + x * (1.0 / 12.0 + x2 * (-1.0 / 720.0 + x2 / 30240.0))
}

/// Evaluate z, z'/z and (z'/z)' at a real x.
///
/// Errors when x = 0 (the pole). Relative accuracy is better than 1e-12
/// across both branches: z uses the Laurent expansion inside
/// `LAURENT_RADIUS` and -1/expm1(-x) outside, while z'/z = -1/expm1(x)
/// and (z'/z)' = -z * (z'/z) avoid subtractive cancellation at every x.
pub fn z_eval(x: f64) -> Result<ZFunctionValue> {
    if x == 0.0 {
        return Err(domain("z(x) has a pole at x = 0"));
    }
    if !x.is_finite() {
        return Err(invalid("argument of z must be finite"));
    }
    let z = if x.abs() < LAURENT_RADIUS {
        z_laurent(x)
    } else {
        -1.0 / (-x).exp_m1()
    };
    let dlog = -1.0 / x.exp_m1();
    Ok(ZFunctionValue { x, z, dlog, dlog_prime: -z * dlog })
}

// exp(w) - 1 without cancellation: a Taylor tail for small |w|.
fn expm1_complex(w: Complex64) -> Complex64 {
    if w.norm() < 0.5 {
        let mut term = w;
        let mut acc = w;
        for n in 2..24 {
            term *= w / (n as f64);
            acc += term;
        }
        acc
    } else {
        w.exp() - Complex64::new(1.0, 0.0)
    }
}

/// Complex-argument version of [`z_eval`].
///
/// The pole check covers only x = 0; staying off the other poles at
/// nonzero multiples of 2 pi i is the caller's responsibility.
pub fn z_eval_complex(x: Complex64) -> Result<ZFunctionValueComplex> {
    if x.re == 0.0 && x.im == 0.0 {
        return Err(domain("z(x) has a pole at x = 0"));
    }
    if !x.re.is_finite() || !x.im.is_finite() {
        return Err(invalid("argument of z must be finite"));
    }
    let z = if x.norm() < LAURENT_RADIUS {
        let x2 = x * x;
        1.0 / x
            + 0.5
            + x * (1.0 / 12.0 + x2 * (-1.0 / 720.0 + x2 / 30240.0))
    } else {
        -1.0 / expm1_complex(-x)
    };
    let dlog = -1.0 / expm1_complex(x);
    Ok(ZFunctionValueComplex { x, z, dlog, dlog_prime: -z * dlog })
}

fn z_at(x: f64) -> Result<f64> {
    Ok(z_eval(x)?.z)
}

fn dlog_at(x: f64) -> Result<f64> {
    Ok(z_eval(x)?.dlog)
}

/// Exact Haar average, over 2N x 2N special orthogonal matrices, of the
/// product of -e^{-alpha} L'/L(e^{-alpha}) across a set of distinct
/// positive shifts alpha.
///
/// The value is a sum over subsets D of the shift set. Each subset carries
/// the weight (-1)^|D| e^{-2N sum(D)} times a product of z factors, and
/// multiplies a sum over partitions of the remaining shifts into blocks of
/// size at most two, singletons contributing a z'/z combination and pairs
/// contributing a (z'/z)' term.
///
/// Shifts must be distinct (coincident points need a confluent limit,
/// taken separately for the low moments in [`exact_moment_so_even`]) and
/// there may be at most N of them.
pub fn weighted_product_moment(alphas: &[f64], n: u32) -> Result<f64> {
    let m = alphas.len();
    if m == 0 {
        return Err(invalid("need at least one shift"));
    }
    if m > n as usize {
        return Err(domain("more shifts than the matrix half-dimension"));
    }
    for (i, &a) in alphas.iter().enumerate() {
        if !(a.is_finite() && a > 0.0) {
            return Err(invalid("shifts must be positive and finite"));
        }
        if alphas[..i].contains(&a) {
            return Err(domain(
                "coincident shifts require a confluent limit, not this formula",
            ));
        }
    }

    let nn = f64::from(n);
    let mut total = 0.0;
    for mask in 0u32..(1 << m) {
        let mut d = Vec::with_capacity(m);
        let mut rest = Vec::with_capacity(m);
        for (i, &a) in alphas.iter().enumerate() {
            if mask & (1 << i) != 0 {
                d.push(a);
            } else {
                rest.push(a);
            }
        }

        let sum_d: f64 = d.iter().sum();
        let sign = if d.len() % 2 == 1 { -1.0 } else { 1.0 };
        let mut weight = sign * (-2.0 * nn * sum_d).exp();
        for &delta in &d {
            weight *= z_at(2.0 * delta)?;
        }
        for i in 0..d.len() {
            for j in (i + 1)..d.len() {
                let (p, q) = (d[i], d[j]);
                weight *= z_at(p + q)? * z_at(-p - q)?
                    / (z_at(q - p)? * z_at(p - q)?);
            }
        }

        total += weight * block_partition_sum(&rest, &d)?;
    }
    Ok(total)
}

// Sum over partitions of `points` into blocks of size <= 2 of the product
// of per-block factors. Recursion on the first element keeps every
// partition counted exactly once.
fn block_partition_sum(points: &[f64], d: &[f64]) -> Result<f64> {
    let Some((&first, tail)) = points.split_first() else {
        return Ok(1.0);
    };
    let mut acc = singleton_factor(first, d)? * block_partition_sum(tail, d)?;
    for (i, &partner) in tail.iter().enumerate() {
        let mut remaining = tail.to_vec();
        remaining.remove(i);
        acc += pair_factor(first, partner)? * block_partition_sum(&remaining, d)?;
    }
    Ok(acc)
}

fn singleton_factor(alpha: f64, d: &[f64]) -> Result<f64> {
    let mut acc = -dlog_at(2.0 * alpha)?;
    for &delta in d {
        acc += dlog_at(alpha - delta)? - dlog_at(alpha + delta)?;
    }
    Ok(acc)
}

fn pair_factor(alpha: f64, beta: f64) -> Result<f64> {
    Ok(z_eval(alpha + beta)?.dlog_prime)
}

/// Exact first or second moment of L'/L(e^{-alpha}) over SO(2N).
///
/// Only k = 1 and k = 2 have closed forms here; the second moment is the
/// confluent limit of the two-shift product average. The weighting by
/// powers of -e^{-alpha} used in `weighted_product_moment` is undone in
/// this one place, so callers get the bare moment.
pub fn exact_moment_so_even(k: u32, point: ScaledPoint) -> Result<f64> {
    let alpha = point.alpha();
    let nn = f64::from(point.n);
    let zv = z_eval(2.0 * alpha)?;
    let damp = (-2.0 * nn * alpha).exp();
    match k {
        1 => {
            let weighted = -zv.dlog - damp * zv.z;
            Ok(-alpha.exp() * weighted)
        }
        2 => {
            let z_prime = -zv.dlog_prime;
            let weighted = zv.dlog_prime
                + zv.dlog * zv.dlog
                + damp * zv.z * (-1.0 + 4.0 * zv.dlog + 2.0 * nn)
                - 2.0 * damp * z_prime;
            Ok((2.0 * alpha).exp() * weighted)
        }
        _ => Err(invalid("closed forms cover k = 1 and k = 2 only")),
    }
}

/// Large-N value of a moment, as a leading term plus, where known, a
/// next-to-leading correction.
#[derive(Clone, Copy, Debug)]
pub struct MomentFormulaResult {
    pub ensemble: Ensemble,
    pub k: u32,
    pub n: u32,
    pub a: f64,
    pub leading: f64,
    pub next_to_leading: Option<f64>,
    pub formula: &'static str,
}

impl MomentFormulaResult {
    /// Leading term plus any next-to-leading correction.
    pub fn value(&self) -> f64 {
        self.leading + self.next_to_leading.unwrap_or(0.0)
    }
}

fn ratio_to_f64(num: num_bigint::BigInt) -> Result<f64> {
    num.to_f64().ok_or_else(|| invalid("coefficient overflows f64"))
}

/// Asymptotic K-th moment of L'/L(e^{-a/N}) for the given ensemble.
///
/// Valid in the regime where a is small and N is large. A
/// next-to-leading term is populated exactly where a sharper expansion
/// exists: the first two unitary symplectic moments and every odd
/// orthogonal moment (whose two stated terms are returned split).
pub fn asymptotic_moment(
    ensemble: Ensemble,
    k: u32,
    point: ScaledPoint,
) -> Result<MomentFormulaResult> {
    if k == 0 {
        return Err(invalid("moment order must be at least 1"));
    }
    if k > 64 {
        return Err(invalid("moment order too large for these formulas"));
    }
    let nn = f64::from(point.n);
    let a = point.a;
    let ki = k as i32;
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };

    let (leading, next_to_leading, formula) = match ensemble {
        Ensemble::SOEven => {
            if k == 1 {
                (-nn, None, "so-even-first")
            } else {
                let coeff = ratio_to_f64(double_factorial(2 * i64::from(k) - 3)?)?
                    / ratio_to_f64(factorial(u64::from(k) - 1))?;
                let lead = sign * 2.0 * nn.powi(ki) / a.powi(ki - 1) * coeff;
                (lead, None, "so-even-general")
            }
        }
        Ensemble::USp => match k {
            1 => (nn, Some(-a * nn), "usp-first"),
            2 => (nn * nn, Some(-2.0 * a * nn * nn), "usp-second"),
            3 => (2.0 / 3.0 * nn.powi(3), None, "usp-third"),
            _ => {
                let coeff = ratio_to_f64(double_factorial(2 * i64::from(k) - 5)?)?
                    / ratio_to_f64(factorial(u64::from(k) - 1))?;
                let lead = sign * (2.0 / 3.0) * nn.powi(ki) / a.powi(ki - 3) * coeff;
                (lead, None, "usp-general")
            }
        },
        Ensemble::SOOdd => {
            let lead = sign * (nn / a).powi(ki);
            let nlo = -sign * f64::from(k) * nn.powi(ki) / a.powi(ki - 1);
            (lead, Some(nlo), "so-odd-two-term")
        }
    };

    Ok(MomentFormulaResult {
        ensemble,
        k,
        n: point.n,
        a,
        leading,
        next_to_leading,
        formula,
    })
}

/// A Monte Carlo estimate set against its closed-form references.
#[derive(Clone, Copy, Debug)]
pub struct ComparisonRecord {
    pub monte_carlo: MomentEstimate,
    pub asymptotic: MomentFormulaResult,
    /// Exact finite-N value, where one is implemented (even orthogonal,
    /// k = 1 or 2).
    pub exact: Option<f64>,
    pub mc_over_asymptotic: f64,
    pub z_vs_asymptotic: f64,
    pub z_vs_exact: Option<f64>,
}

/// Estimate the K-th moment by sampling and line it up against the
/// asymptotic formula and, when available, the exact finite-N value.
pub fn compare(
    ensemble: Ensemble,
    k: u32,
    point: ScaledPoint,
    samples: u64,
    seed: u64,
) -> Result<ComparisonRecord> {
    let monte_carlo = estimate_moment(ensemble, k, point, samples, seed)?;
    let asymptotic = asymptotic_moment(ensemble, k, point)?;
    let exact = if ensemble == Ensemble::SOEven && (k == 1 || k == 2) {
        Some(exact_moment_so_even(k, point)?)
    } else {
        None
    };
    let reference = asymptotic.value();
    let mc_over_asymptotic = monte_carlo.mean / reference;
    let z_vs_asymptotic = (monte_carlo.mean - reference) / monte_carlo.std_error;
    let z_vs_exact = exact.map(|e| (monte_carlo.mean - e) / monte_carlo.std_error);
    Ok(ComparisonRecord {
        monte_carlo,
        asymptotic,
        exact,
        mc_over_asymptotic,
        z_vs_asymptotic,
        z_vs_exact,
    })
}

//! Exact determinant calculus for matrices of contour-integral entries.
//!
//! A `MatrixSpec` of size `K` carries column powers `n_j`, row offsets `h_i`
//! and column derivative orders `e_j`; its `(i, j)` entry is the integral
//! with power `2*n_j + h_i`, derivative order `e_j` and size parameter `K`.
//! Everything here is exact rational arithmetic: determinants, their
//! t-derivatives at 0 (expanded column-by-column with multinomial weights),
//! and the degree bookkeeping that decides which of those vanish.
//!
//! The `verify_*` functions each check one closed-form determinant identity
//! used by the moment formulas and return both sides so callers can print
//! them.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::combinatorics::{binomial, double_factorial, factorial, rat_int, Rational};
use crate::error::{invalid, Result};
use crate::residue::{integral_value_t0_cached, IntegralSpec};

/// Matrix of contour integrals, stored with rows sorted by offset.
///
/// Row order only affects the determinant's sign, so construction sorts the
/// offsets and remembers the permutation sign. Duplicate offsets are allowed
/// (two equal rows force every determinant below to vanish, which the
/// elimination detects on its own).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatrixSpec {
    col_powers: Vec<i64>,
    row_offsets: Vec<i64>,
    col_derivs: Vec<u32>,
    sign: i8,
}

impl MatrixSpec {
    /// Spec with strictly increasing row offsets.
    pub fn new(col_powers: Vec<i64>, row_offsets: Vec<i64>, col_derivs: Vec<u32>) -> Result<Self> {
        if !row_offsets.windows(2).all(|w| w[0] < w[1]) {
            return Err(invalid("row offsets must be strictly increasing"));
        }
        Self::normalized(col_powers, row_offsets, col_derivs)
    }

    /// Spec with arbitrary row offsets; rows are sorted and the permutation
    /// sign recorded, so determinants refer to the given row order.
    pub fn normalized(
        col_powers: Vec<i64>,
        mut row_offsets: Vec<i64>,
        col_derivs: Vec<u32>,
    ) -> Result<Self> {
        let k = col_powers.len();
        if k == 0 {
            return Err(invalid("matrix size must be at least 1"));
        }
        if row_offsets.len() != k || col_derivs.len() != k {
            return Err(invalid("powers, offsets and derivative orders must have equal length"));
        }
        let mut sign = 1i8;
        // insertion sort; each adjacent swap is one transposition
        for i in 1..k {
            let mut p = i;
            while p > 0 && row_offsets[p - 1] > row_offsets[p] {
                row_offsets.swap(p - 1, p);
                sign = -sign;
                p -= 1;
            }
        }
        Ok(Self { col_powers, row_offsets, col_derivs, sign })
    }

    /// Size-`k` base matrix from the even orthogonal expansion: powers
    /// `2j + i - 2`, no derivatives.
    pub fn so_even_base(k: usize) -> Result<Self> {
        Self::base_with_offset(k, -2)
    }

    /// Size-`k` base matrix from the symplectic expansion: powers
    /// `2j + i - 3`, no derivatives.
    pub fn usp_base(k: usize) -> Result<Self> {
        Self::base_with_offset(k, -3)
    }

    fn base_with_offset(k: usize, shift: i64) -> Result<Self> {
        if k == 0 {
            return Err(invalid("matrix size must be at least 1"));
        }
        let powers = (1..=k as i64).collect();
        let offsets = (1..=k as i64).map(|i| i + shift).collect();
        Self::new(powers, offsets, vec![0; k])
    }

    /// Adds `shifts` to the offsets of the last `shifts.len()` rows and
    /// renormalizes. Shifted rows may collide or pass each other; both are
    /// handled (equal rows, sign flip).
    pub fn with_row_shifts(&self, shifts: &[i64]) -> Result<Self> {
        let k = self.size();
        if shifts.len() > k {
            return Err(invalid("more shifts than rows"));
        }
        let mut offsets = self.row_offsets.clone();
        let base = k - shifts.len();
        for (r, s) in shifts.iter().enumerate() {
            offsets[base + r] += s;
        }
        let mut out = Self::normalized(self.col_powers.clone(), offsets, self.col_derivs.clone())?;
        out.sign *= self.sign;
        Ok(out)
    }

    pub fn size(&self) -> usize {
        self.col_powers.len()
    }

    /// Offsets in the stored (sorted) row order.
    pub fn row_offsets(&self) -> &[i64] {
        &self.row_offsets
    }

    pub fn col_powers(&self) -> &[i64] {
        &self.col_powers
    }

    pub fn col_derivs(&self) -> &[u32] {
        &self.col_derivs
    }

    /// Sign relating the constructed row order to the sorted one.
    pub fn normalization_sign(&self) -> i8 {
        self.sign
    }

    /// Entry `(i, j)` of the sorted representative, 0-based.
    pub fn entry(&self, i: usize, j: usize) -> Rational {
        self.entry_with_extra(i, j, 0)
    }

    fn entry_with_extra(&self, i: usize, j: usize, extra: u32) -> Rational {
        let spec = IntegralSpec::new(
            2 * self.col_powers[j] + self.row_offsets[i],
            self.col_derivs[j] + extra,
            self.size() as u32,
        )
        .expect("size >= 1");
        integral_value_t0_cached(spec)
    }

    /// Degree of column `j`: the largest entry degree in the column.
    pub fn column_degree(&self, j: usize) -> i64 {
        let k = self.size() as i64;
        let top = *self.row_offsets.last().expect("size >= 1");
        2 * self.col_powers[j] + top - k - 2 * i64::from(self.col_derivs[j])
    }

    pub fn column_degrees(&self) -> Vec<i64> {
        (0..self.size()).map(|j| self.column_degree(j)).collect()
    }

    /// Sum of the column degrees.
    pub fn matrix_degree(&self) -> i64 {
        self.column_degrees().iter().sum()
    }

    /// Column degree through the second-largest offset.
    pub fn secondary_column_degree(&self, j: usize) -> Result<i64> {
        let k = self.size();
        if k < 2 {
            return Err(invalid("secondary degree needs at least two rows"));
        }
        let second = self.row_offsets[k - 2];
        Ok(2 * self.col_powers[j] + second - k as i64 - 2 * i64::from(self.col_derivs[j]))
    }

    pub fn secondary_matrix_degree(&self) -> Result<i64> {
        (0..self.size()).map(|j| self.secondary_column_degree(j)).sum()
    }

    /// Determinant at t = 0.
    pub fn det_t0(&self) -> Rational {
        rat_int(i64::from(self.sign)) * self.det_with_extra(&vec![0; self.size()])
    }

    /// `order`-th t-derivative of the determinant at t = 0.
    ///
    /// Differentiating an entry raises its derivative order by one, so the
    /// derivative of the determinant expands over compositions of `order`
    /// into per-column orders, weighted by `order! / prod E_j!`.
    pub fn dt_derivative_det(&self, order: u32) -> Result<Rational> {
        if order > 16 {
            return Err(invalid("derivative order above 16 not supported"));
        }
        let k = self.size();
        let order_fact = factorial(u64::from(order));
        let mut extra = vec![0u32; k];
        let mut total = Rational::zero();
        self.add_composition_terms(order, 0, &mut extra, &order_fact, &mut total);
        Ok(rat_int(i64::from(self.sign)) * total)
    }

    fn add_composition_terms(
        &self,
        remaining: u32,
        j: usize,
        extra: &mut Vec<u32>,
        order_fact: &BigInt,
        total: &mut Rational,
    ) {
        if j + 1 == self.size() {
            extra[j] = remaining;
            let mut denom = BigInt::one();
            for &e in extra.iter() {
                denom *= factorial(u64::from(e));
            }
            let weight = Rational::new(order_fact.clone(), denom);
            *total += weight * self.det_with_extra(extra);
            extra[j] = 0;
            return;
        }
        for v in 0..=remaining {
            extra[j] = v;
            self.add_composition_terms(remaining - v, j + 1, extra, order_fact, total);
        }
        extra[j] = 0;
    }

    fn det_with_extra(&self, extra: &[u32]) -> Rational {
        let k = self.size() as i64;
        let top = *self.row_offsets.last().expect("size >= 1");
        for (j, &ex) in extra.iter().enumerate() {
            // column degree <= -2 zeroes every entry in the column
            let deg = 2 * self.col_powers[j] + top - k - 2 * i64::from(self.col_derivs[j] + ex);
            if deg <= -2 {
                return Rational::zero();
            }
        }
        let rows: Vec<Vec<Rational>> = (0..self.size())
            .map(|i| (0..self.size()).map(|j| self.entry_with_extra(i, j, extra[j])).collect())
            .collect();
        det(&rows)
    }
}

/// Determinant by rational Gaussian elimination.
pub fn det(rows: &[Vec<Rational>]) -> Rational {
    let n = rows.len();
    assert!(rows.iter().all(|r| r.len() == n), "matrix must be square");
    let mut m = rows.to_vec();
    let mut acc = Rational::one();
    let mut negate = false;
    for c in 0..n {
        let Some(p) = (c..n).find(|&r| !m[r][c].is_zero()) else {
            return Rational::zero();
        };
        if p != c {
            m.swap(p, c);
            negate = !negate;
        }
        let pivot = m[c][c].clone();
        acc *= &pivot;
        for r in (c + 1)..n {
            if m[r][c].is_zero() {
                continue;
            }
            let f = &m[r][c] / &pivot;
            let (head, tail) = m.split_at_mut(r);
            for (dst, src) in tail[0][c..].iter_mut().zip(&head[c][c..]) {
                *dst -= &f * src;
            }
        }
    }
    if negate {
        -acc
    } else {
        acc
    }
}

/// One checked identity: a determinant value and the closed form it must
/// equal, both exact.
#[derive(Clone, Debug)]
pub struct IdentityCheck {
    pub label: String,
    pub computed: Rational,
    pub expected: Rational,
}

impl IdentityCheck {
    pub fn holds(&self) -> bool {
        self.computed == self.expected
    }
}

impl std::fmt::Display for IdentityCheck {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}: computed {} expected {} [{}]",
            self.label,
            self.computed,
            self.expected,
            if self.holds() { "ok" } else { "MISMATCH" }
        )
    }
}

fn neg_two_pow(m: u64) -> Rational {
    Rational::from_integer(BigInt::from(-2).pow(m as u32))
}

fn check_size(k: usize) -> Result<()> {
    if k == 0 {
        Err(invalid("size must be at least 1"))
    } else {
        Ok(())
    }
}

/// det [ C(2j + i - 2, k - 1) ]_{i,j=1..k} = (-2)^(k(k-1)/2).
pub fn verify_even_binomial_det(k: usize) -> Result<IdentityCheck> {
    check_size(k)?;
    let rows: Vec<Vec<Rational>> = (1..=k as i64)
        .map(|i| {
            (1..=k as i64)
                .map(|j| Ok(Rational::from_integer(binomial(2 * j + i - 2, k as i64 - 1)?)))
                .collect::<Result<_>>()
        })
        .collect::<Result<_>>()?;
    Ok(IdentityCheck {
        label: format!("even binomial determinant, size {k}"),
        computed: det(&rows),
        expected: neg_two_pow((k * (k - 1) / 2) as u64),
    })
}

/// det [ C(2j - m, n - i) ]_{i,j=1..n} = (-2)^(n(n-1)/2) for m in 0..=2.
pub fn verify_shifted_binomial_det(n: usize, m: i64) -> Result<IdentityCheck> {
    check_size(n)?;
    if !(0..=2).contains(&m) {
        return Err(invalid("column shift must be 0, 1 or 2"));
    }
    let rows: Vec<Vec<Rational>> = (1..=n as i64)
        .map(|i| {
            (1..=n as i64)
                .map(|j| Ok(Rational::from_integer(binomial(2 * j - m, n as i64 - i)?)))
                .collect::<Result<_>>()
        })
        .collect::<Result<_>>()?;
    Ok(IdentityCheck {
        label: format!("shifted binomial determinant, size {n}, shift {m}"),
        computed: det(&rows),
        expected: neg_two_pow((n * (n - 1) / 2) as u64),
    })
}

/// Upper triangular-plus-one-subdiagonal matrix of inverse factorials:
/// T_{i,j} = 1/(j + 1 - i)! when j + 1 >= i, else 0.
pub fn inverse_factorial_toeplitz_det(k: usize) -> Result<Rational> {
    check_size(k)?;
    let rows: Vec<Vec<Rational>> = (1..=k as i64)
        .map(|i| {
            (1..=k as i64)
                .map(|j| {
                    if j + 1 - i >= 0 {
                        Rational::new(BigInt::one(), factorial((j + 1 - i) as u64))
                    } else {
                        Rational::zero()
                    }
                })
                .collect()
        })
        .collect();
    Ok(det(&rows))
}

/// det T = 1/k! for the inverse-factorial matrix above.
pub fn verify_inverse_factorial_toeplitz(k: usize) -> Result<IdentityCheck> {
    Ok(IdentityCheck {
        label: format!("inverse factorial determinant, size {k}"),
        computed: inverse_factorial_toeplitz_det(k)?,
        expected: Rational::new(BigInt::one(), factorial(k as u64)),
    })
}

/// Parity of the top row offset in `verify_row_multiplicity`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OffsetParity {
    /// top offset k - 1
    Odd,
    /// top offset k
    Even,
}

/// For consecutive offsets ending at k-1 or k, the k-th derivative of the
/// determinant collapses to 2^k times a binomial determinant.
pub fn verify_row_multiplicity(k: usize, parity: OffsetParity) -> Result<IdentityCheck> {
    check_size(k)?;
    let top = match parity {
        OffsetParity::Odd => k as i64 - 1,
        OffsetParity::Even => k as i64,
    };
    let offsets: Vec<i64> = (1..=k as i64).map(|i| top - (k as i64 - i)).collect();
    let spec = MatrixSpec::new((1..=k as i64).collect(), offsets.clone(), vec![0; k])?;
    let computed = spec.dt_derivative_det(k as u32)?;

    let rows: Vec<Vec<Rational>> = offsets
        .iter()
        .map(|h| {
            (1..=k as i64)
                .map(|j| Ok(Rational::from_integer(binomial(2 * j + h - 2, k as i64 - 1)?)))
                .collect::<Result<_>>()
        })
        .collect::<Result<_>>()?;
    let expected = Rational::from_integer(BigInt::from(2).pow(k as u32)) * det(&rows);

    Ok(IdentityCheck {
        label: format!("row multiplicity collapse, size {k}, parity {parity:?}"),
        computed,
        expected,
    })
}

/// Leading-coefficient determinant from the even orthogonal moment: k-th
/// derivative of det of the base matrix with its last row offset raised by
/// one equals (-1)^((k^2-k)/2) * 2^((k^2-k+2)/2) * (2k-3)!! / (k-1)!.
pub fn verify_so_even_leading(k: usize) -> Result<IdentityCheck> {
    check_size(k)?;
    let spec = MatrixSpec::so_even_base(k)?.with_row_shifts(&[1])?;
    let computed = spec.dt_derivative_det(k as u32)?;
    let kk = k as i64;
    let sign = if (kk * kk - kk) / 2 % 2 == 0 { 1 } else { -1 };
    let expected = rat_int(sign)
        * Rational::from_integer(BigInt::from(2).pow(((kk * kk - kk + 2) / 2) as u32))
        * Rational::new(double_factorial(2 * kk - 3)?, factorial(k as u64 - 1));
    Ok(IdentityCheck {
        label: format!("even orthogonal leading determinant, size {k}"),
        computed,
        expected,
    })
}

/// det of the symplectic base with its last row offset raised by one equals
/// k * (-2)^(k(k-1)/2).
pub fn verify_unit_row_shift_det(k: usize) -> Result<IdentityCheck> {
    check_size(k)?;
    let spec = MatrixSpec::usp_base(k)?.with_row_shifts(&[1])?;
    Ok(IdentityCheck {
        label: format!("unit row shift determinant, size {k}"),
        computed: spec.det_t0(),
        expected: rat_int(k as i64) * neg_two_pow((k * (k - 1) / 2) as u64),
    })
}

/// k-th derivative at 0 of det of the symplectic base with last-three-row
/// shifts (0, 1, 2).
pub fn third_order_det(k: usize) -> Result<Rational> {
    if k < 3 {
        return Err(invalid("third order term needs size at least 3"));
    }
    MatrixSpec::usp_base(k)?.with_row_shifts(&[0, 1, 2])?.dt_derivative_det(k as u32)
}

/// Closed form for `third_order_det`:
/// (-1)^(k(k-5)/2) * 2^((k^2-k+2)/2) * (2k-5)!! / (k-1)!.
pub fn third_order_closed_form(k: usize) -> Result<Rational> {
    if k < 3 {
        return Err(invalid("third order term needs size at least 3"));
    }
    let kk = k as i64;
    let sign = if (kk * (kk - 5) / 2).rem_euclid(2) == 0 { 1 } else { -1 };
    Ok(rat_int(sign)
        * Rational::from_integer(BigInt::from(2).pow(((kk * kk - kk + 2) / 2) as u32))
        * Rational::new(double_factorial(2 * kk - 5)?, factorial(k as u64 - 1)))
}

pub fn verify_third_order(k: usize) -> Result<IdentityCheck> {
    Ok(IdentityCheck {
        label: format!("third order shift determinant, size {k}"),
        computed: third_order_det(k)?,
        expected: third_order_closed_form(k)?,
    })
}

/// One row of `shift_table`.
#[derive(Clone, Debug)]
pub struct ShiftTableRow {
    pub shifts: [i64; 3],
    /// k-th derivative at 0 of the shifted determinant
    pub value: Rational,
    /// whether the expansion bookkeeping says this term drops out
    pub expected_zero: bool,
}

/// All ways to spend three offset increments on the last three rows of the
/// symplectic base, with the k-th derivative of each resulting determinant.
/// Only (0,1,2) and its row exchange (0,3,0) survive; k >= 4 so the shifted
/// rows stay clear of the others.
pub fn shift_table(k: usize) -> Result<Vec<ShiftTableRow>> {
    if k < 4 {
        return Err(invalid("shift table needs size at least 4"));
    }
    let base = MatrixSpec::usp_base(k)?;
    let mut out = Vec::new();
    for s1 in (0..=3).rev() {
        for s2 in (0..=3 - s1).rev() {
            let s3 = 3 - s1 - s2;
            let shifts = [s1, s2, s3];
            let value = base.with_row_shifts(&shifts)?.dt_derivative_det(k as u32)?;
            let expected_zero = !(shifts == [0, 1, 2] || shifts == [0, 3, 0]);
            out.push(ShiftTableRow { shifts, value, expected_zero });
        }
    }
    Ok(out)
}

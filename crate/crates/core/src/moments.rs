//! The logarithmic derivative of the characteristic polynomial at a real
//! point inside the unit circle, and Monte Carlo moments of it.
//!
//! Evaluation sits deep in the s -> 1- regime, so everything is phrased in
//! the offset s - 1 = expm1(-a/N): each angle contributes
//! (2(s-1) + 2w) / ((s-1)^2 + 2sw) with w = 1 - cos(theta) = 2 sin^2(theta/2),
//! which is cancellation-free for small angles and small offsets. Odd
//! orthogonal matrices add the fixed-eigenvalue pole -1/(1-s).
//!
//! The Monte Carlo engine draws samples in fixed blocks of 1024, one RNG
//! stream per block, and merges per-block compensated sums in block order:
//! estimates are bit-identical for a given seed regardless of thread count.

use rayon::prelude::*;

use crate::ensembles::{sample_with, EigenSample, Ensemble, RngStream};
use crate::error::{invalid, Result};

/// Evaluation point e^{-a/N} described by its scaled coordinate a = N*alpha.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledPoint {
    pub n: u32,
    pub a: f64,
}

impl ScaledPoint {
    pub fn new(n: u32, a: f64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("need at least one angle pair"));
        }
        if !a.is_finite() || a <= 0.0 {
            return Err(invalid("scaled coordinate a must be positive and finite"));
        }
        Ok(Self { n, a })
    }

    pub fn alpha(self) -> f64 {
        self.a / f64::from(self.n)
    }

    pub fn s(self) -> f64 {
        (-self.alpha()).exp()
    }

    /// s - 1, computed without cancellation.
    pub fn offset(self) -> f64 {
        (-self.alpha()).exp_m1()
    }

    /// The fixed-eigenvalue pole -1/(1-s) of odd orthogonal matrices.
    pub fn pole_term(self) -> f64 {
        1.0 / self.offset()
    }
}

/// One Monte Carlo moment with its statistical uncertainty.
#[derive(Clone, Copy, Debug)]
pub struct MomentEstimate {
    pub k: u32,
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
    pub point: ScaledPoint,
    pub ensemble: Ensemble,
    pub seed: u64,
}

fn angle_terms(angles: &[f64], offset: f64, s: f64) -> f64 {
    let mut acc = 0.0;
    for &theta in angles {
        let half = (0.5 * theta).sin();
        let w = 2.0 * half * half;
        acc += (2.0 * offset + 2.0 * w) / (offset * offset + 2.0 * s * w);
    }
    acc
}

/// Log-derivative of the characteristic polynomial at s in (0, 1).
pub fn logderiv(sample: &EigenSample, s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(invalid("evaluation point must satisfy 0 < s < 1"));
    }
    let offset = s - 1.0;
    let mut value = angle_terms(&sample.angles, offset, s);
    if sample.ensemble == Ensemble::SOOdd {
        value += 1.0 / offset;
    }
    Ok(value)
}

/// Same, at a scaled point, with the offset taken through expm1.
pub fn logderiv_scaled(sample: &EigenSample, point: ScaledPoint) -> f64 {
    let offset = point.offset();
    let mut value = angle_terms(&sample.angles, offset, point.s());
    if sample.ensemble == Ensemble::SOOdd {
        value += 1.0 / offset;
    }
    value
}

const BLOCK_SAMPLES: u64 = 1024;
const MAX_MOMENT: u32 = 8;

#[derive(Clone, Copy, Default)]
struct Compensated {
    sum: f64,
    c: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(self) -> f64 {
        self.sum + self.c
    }
}

/// Sums of x^p for p = 1..=max_power over `samples` Haar draws, x the mapped
/// value of each draw. Blocks of 1024 samples run in parallel on stream ids
/// equal to their block index; merge order is fixed, so the result depends
/// only on (seed, samples).
fn power_sums<F>(
    ensemble: Ensemble,
    point: ScaledPoint,
    samples: u64,
    seed: u64,
    max_power: usize,
    map: F,
) -> Result<Vec<f64>>
where
    F: Fn(&EigenSample) -> f64 + Sync,
{
    let blocks = samples.div_ceil(BLOCK_SAMPLES);
    let per_block: Vec<Result<Vec<Compensated>>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = RngStream::new(seed, b).rng();
            let count = BLOCK_SAMPLES.min(samples - b * BLOCK_SAMPLES);
            let mut sums = vec![Compensated::default(); max_power];
            for _ in 0..count {
                let draw = sample_with(ensemble, point.n, &mut rng)?;
                let x = map(&draw);
                let mut pw = x;
                for s in sums.iter_mut() {
                    s.add(pw);
                    pw *= x;
                }
            }
            Ok(sums)
        })
        .collect();

    let mut totals = vec![Compensated::default(); max_power];
    for block in per_block {
        for (t, b) in totals.iter_mut().zip(block?) {
            t.add(b.total());
        }
    }
    Ok(totals.into_iter().map(Compensated::total).collect())
}

fn validate_counts(k_max: u32, k_min: u32, samples: u64) -> Result<()> {
    if k_max < k_min {
        return Err(invalid(format!("moment order must be at least {k_min}")));
    }
    if k_max > MAX_MOMENT {
        return Err(invalid("moment orders above 8 are not supported"));
    }
    if samples < 100 {
        return Err(invalid("need at least 100 samples"));
    }
    Ok(())
}

fn estimate_from_sums(
    sums: &[f64],
    k: u32,
    samples: u64,
    point: ScaledPoint,
    ensemble: Ensemble,
    seed: u64,
) -> MomentEstimate {
    let n = samples as f64;
    let mean = sums[k as usize - 1] / n;
    let second = sums[2 * k as usize - 1] / n;
    let var = ((second - mean * mean) * n / (n - 1.0)).max(0.0);
    MomentEstimate { k, mean, std_error: (var / n).sqrt(), samples, point, ensemble, seed }
}

/// Monte Carlo K-th moment of the log-derivative.
pub fn estimate_moment(
    ensemble: Ensemble,
    k: u32,
    point: ScaledPoint,
    samples: u64,
    seed: u64,
) -> Result<MomentEstimate> {
    Ok(estimate_moments_upto(ensemble, k, point, samples, seed)?
        .pop()
        .expect("k >= 1"))
}

/// Moments of orders 1..=k_max from a single sweep of samples.
pub fn estimate_moments_upto(
    ensemble: Ensemble,
    k_max: u32,
    point: ScaledPoint,
    samples: u64,
    seed: u64,
) -> Result<Vec<MomentEstimate>> {
    validate_counts(k_max, 1, samples)?;
    let sums = power_sums(ensemble, point, samples, seed, 2 * k_max as usize, |draw| {
        logderiv_scaled(draw, point)
    })?;
    Ok((1..=k_max)
        .map(|k| estimate_from_sums(&sums, k, samples, point, ensemble, seed))
        .collect())
}

/// Monte Carlo K-th moment of the pole-subtracted log-derivative over odd
/// orthogonal matrices: the fixed-eigenvalue pole -1/(1-s) is dropped before
/// raising to the K-th power (exactly, not by numerical subtraction).
pub fn estimate_pole_subtracted_moment(
    k: u32,
    point: ScaledPoint,
    samples: u64,
    seed: u64,
) -> Result<MomentEstimate> {
    if k == 0 {
        // zeroth moment of anything is exactly 1
        return Ok(MomentEstimate {
            k,
            mean: 1.0,
            std_error: 0.0,
            samples,
            point,
            ensemble: Ensemble::SOOdd,
            seed,
        });
    }
    validate_counts(k, 1, samples)?;
    let sums = power_sums(Ensemble::SOOdd, point, samples, seed, 2 * k as usize, |draw| {
        angle_terms(&draw.angles, point.offset(), point.s())
    })?;
    Ok(estimate_from_sums(&sums, k, samples, point, Ensemble::SOOdd, seed))
}

/// Monte Carlo mean of ((1/N) logderiv - 1)^2 over the symplectic ensemble.
pub fn scaled_variance_usp(point: ScaledPoint, samples: u64, seed: u64) -> Result<f64> {
    validate_counts(1, 1, samples)?;
    let inv_n = 1.0 / f64::from(point.n);
    let sums = power_sums(Ensemble::USp, point, samples, seed, 1, |draw| {
        let dev = inv_n * logderiv_scaled(draw, point) - 1.0;
        dev * dev
    })?;
    Ok(sums[0] / samples as f64)
}

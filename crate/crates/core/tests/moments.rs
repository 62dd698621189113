use logdet_core::ensembles::{sample_with, EigenSample, Ensemble, RngStream};
use logdet_core::moments::{
    estimate_moment, estimate_moments_upto, estimate_pole_subtracted_moment, logderiv,
    logderiv_scaled, scaled_variance_usp, ScaledPoint,
};
use std::f64::consts::PI;

fn fake_sample(ensemble: Ensemble, angles: Vec<f64>) -> EigenSample {
    EigenSample { ensemble, n: angles.len() as u32, angles }
}

#[test]
fn single_angle_limits() {
    // theta = pi/2, s -> 1-: the term tends to 1
    let s = 1.0 - 1e-8;
    let one = fake_sample(Ensemble::SOEven, vec![PI / 2.0]);
    assert!((logderiv(&one, s).unwrap() - 1.0).abs() < 1e-6);

    // fixed s, theta -> 0: the term tends to 2/(s-1)
    let tiny = fake_sample(Ensemble::SOEven, vec![1e-8]);
    let v = logderiv(&tiny, 0.9).unwrap();
    assert!((v - 2.0 / (0.9 - 1.0)).abs() < 1e-5, "{v}");
}

#[test]
fn odd_orthogonal_pole_dominates() {
    let n = 12;
    let s = 1.0 - 1e-8;
    let sample = fake_sample(Ensemble::SOOdd, vec![PI / 2.0; n]);
    let v = logderiv(&sample, s).unwrap();
    let pole = -1.0 / (1.0 - s);
    assert!((v - pole - n as f64).abs() < 1e-4 * n as f64, "{v} vs {pole}");
}

#[test]
fn fixed_matrix_limit_recovers_pair_count() {
    // angles bounded away from zero: value -> N as s -> 1-
    let angles: Vec<f64> = (0..10).map(|i| 0.3 + 0.25 * i as f64).collect();
    let sample = fake_sample(Ensemble::SOEven, angles);
    let v = logderiv(&sample, 1.0 - 1e-9).unwrap();
    assert!((v - 10.0).abs() / 10.0 < 1e-4, "{v}");
}

#[test]
fn scaled_evaluation_matches_direct() {
    let point = ScaledPoint::new(50, 0.1).unwrap();
    let mut rng = RngStream::new(9, 0).rng();
    let draw = sample_with(Ensemble::SOEven, 50, &mut rng).unwrap();
    let direct = logderiv(&draw, point.s()).unwrap();
    let scaled = logderiv_scaled(&draw, point);
    assert!((direct - scaled).abs() < 1e-9 * scaled.abs().max(1.0));
}

#[test]
fn evaluation_point_validation() {
    let sample = fake_sample(Ensemble::SOEven, vec![1.0]);
    assert!(logderiv(&sample, 1.0).is_err());
    assert!(logderiv(&sample, 0.0).is_err());
    assert!(logderiv(&sample, 1.5).is_err());
    assert!(ScaledPoint::new(0, 0.1).is_err());
    assert!(ScaledPoint::new(5, 0.0).is_err());
    assert!(ScaledPoint::new(5, f64::NAN).is_err());
}

#[test]
fn estimator_validation() {
    let point = ScaledPoint::new(5, 0.1).unwrap();
    assert!(estimate_moment(Ensemble::SOEven, 0, point, 1000, 1).is_err());
    assert!(estimate_moment(Ensemble::SOEven, 9, point, 1000, 1).is_err());
    assert!(estimate_moment(Ensemble::SOEven, 1, point, 50, 1).is_err());
}

#[test]
fn sign_structure_at_scaled_point() {
    // symplectic values are almost never negative at 1e4 samples; even
    // orthogonal values go negative already at this sample size
    let point = ScaledPoint::new(20, 0.1).unwrap();
    let mut rng = RngStream::new(77, 0).rng();
    let mut usp_negative = 0u32;
    for _ in 0..10_000 {
        let draw = sample_with(Ensemble::USp, 20, &mut rng).unwrap();
        if logderiv_scaled(&draw, point) < 0.0 {
            usp_negative += 1;
        }
    }
    assert!(usp_negative < 100, "negative fraction {}%", usp_negative as f64 / 100.0);

    let mut rng = RngStream::new(78, 0).rng();
    let mut so_negative = 0u32;
    for _ in 0..10_000 {
        let draw = sample_with(Ensemble::SOEven, 20, &mut rng).unwrap();
        if logderiv_scaled(&draw, point) < 0.0 {
            so_negative += 1;
        }
    }
    assert!(so_negative > 0);
}

#[test]
fn estimates_are_thread_count_invariant() {
    let point = ScaledPoint::new(5, 0.2).unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| estimate_moment(Ensemble::USp, 2, point, 2500, 31).unwrap())
    };
    let single = run(1);
    let quad = run(4);
    assert_eq!(single.mean.to_bits(), quad.mean.to_bits());
    assert_eq!(single.std_error.to_bits(), quad.std_error.to_bits());
}

#[test]
fn single_sweep_matches_individual_estimates() {
    let point = ScaledPoint::new(5, 0.2).unwrap();
    let both = estimate_moments_upto(Ensemble::SOEven, 2, point, 1100, 17).unwrap();
    let first = estimate_moment(Ensemble::SOEven, 1, point, 1100, 17).unwrap();
    assert_eq!(both[0].mean.to_bits(), first.mean.to_bits());
    assert_eq!(both.len(), 2);
    assert_eq!(both[1].k, 2);
}

#[test]
fn pole_subtraction_shifts_first_moment_exactly() {
    let point = ScaledPoint::new(10, 0.1).unwrap();
    let full = estimate_moment(Ensemble::SOOdd, 1, point, 2000, 5).unwrap();
    let sub = estimate_pole_subtracted_moment(1, point, 2000, 5).unwrap();
    let shift = full.mean - sub.mean;
    assert!(
        (shift - point.pole_term()).abs() < 1e-9 * point.pole_term().abs(),
        "shift {shift} vs pole {}",
        point.pole_term()
    );
}

#[test]
fn zeroth_pole_subtracted_moment_is_one() {
    let point = ScaledPoint::new(10, 0.1).unwrap();
    let est = estimate_pole_subtracted_moment(0, point, 500, 1).unwrap();
    assert_eq!(est.mean, 1.0);
    assert_eq!(est.std_error, 0.0);
}

#[test]
fn scaled_variance_is_small_and_positive() {
    let point = ScaledPoint::new(10, 0.1).unwrap();
    let v = scaled_variance_usp(point, 500, 3).unwrap();
    assert!(v > 0.0 && v < 0.5, "{v}");
}

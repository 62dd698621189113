//! Haar sampling on SO(2N), SO(2N+1) and USp(2N), with eigenangle
//! extraction.
//!
//! Orthogonal matrices come from sign-normalized QR of a Gaussian matrix,
//! conditioned on determinant +1 by rejection. Unitary symplectic matrices
//! come from a structure-preserving Gram-Schmidt: columns are built in
//! quaternionic pairs (q, -J conj q), which keeps the result exactly in the
//! symplectic group and its spectrum in conjugate pairs.
//!
//! Eigenvalues of these matrices lie on the unit circle in pairs e^{+-i
//! theta}; the angles are recovered from the symmetric (or Hermitian) part,
//! whose spectrum is {cos theta} with multiplicity two, plus a lone +1 for
//! odd orthogonal matrices. Angles within 1e-12 of 0 or pi are clamped
//! inward by 1e-12 so downstream evaluation never sits exactly on a pole;
//! this affects probability-zero events only.

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{domain, invalid, Result};

type C64 = Complex<f64>;

/// Matrix group sampled from, named by its eigenangle structure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Ensemble {
    /// SO(2N): N conjugate angle pairs
    SOEven,
    /// SO(2N+1): N pairs plus a fixed eigenvalue +1
    SOOdd,
    /// USp(2N): N conjugate angle pairs
    USp,
}

impl Ensemble {
    pub fn matrix_dim(self, n: u32) -> usize {
        match self {
            Ensemble::SOEven | Ensemble::USp => 2 * n as usize,
            Ensemble::SOOdd => 2 * n as usize + 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Ensemble::SOEven => "so-even",
            Ensemble::SOOdd => "so-odd",
            Ensemble::USp => "usp",
        }
    }
}

/// Reproducible generator handle: same (seed, stream) gives the same draws.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Eigenangles of one sampled matrix: theta_n in (0, pi), one per
/// conjugate pair. The implicit +1 eigenvalue of SO(2N+1) is not stored.
#[derive(Clone, Debug)]
pub struct EigenSample {
    pub ensemble: Ensemble,
    pub n: u32,
    pub angles: Vec<f64>,
}

/// Dense matrix behind a sample, for group-membership diagnostics.
#[derive(Clone, Debug)]
pub enum MaterializedMatrix {
    Real(DMatrix<f64>),
    Complex(DMatrix<C64>),
}

/// One sample's eigenangles from a fresh stream.
pub fn sample(ensemble: Ensemble, n: u32, stream: RngStream) -> Result<EigenSample> {
    sample_with(ensemble, n, &mut stream.rng())
}

/// One sample's eigenangles, advancing the supplied generator.
pub fn sample_with<R: Rng + ?Sized>(ensemble: Ensemble, n: u32, rng: &mut R) -> Result<EigenSample> {
    let angles = match materialize_with(ensemble, n, rng)? {
        MaterializedMatrix::Real(x) => {
            let sym = (&x + x.transpose()) * 0.5;
            paired_angles(
                sym.symmetric_eigenvalues().as_slice().to_vec(),
                ensemble == Ensemble::SOOdd,
                n as usize,
            )?
        }
        MaterializedMatrix::Complex(x) => {
            let herm = (&x + x.adjoint()) * C64::new(0.5, 0.0);
            paired_angles(herm.symmetric_eigenvalues().as_slice().to_vec(), false, n as usize)?
        }
    };
    Ok(EigenSample { ensemble, n, angles })
}

/// The sampled group element itself, from a fresh stream.
pub fn materialize(ensemble: Ensemble, n: u32, stream: RngStream) -> Result<MaterializedMatrix> {
    materialize_with(ensemble, n, &mut stream.rng())
}

/// The sampled group element itself, advancing the supplied generator.
pub fn materialize_with<R: Rng + ?Sized>(
    ensemble: Ensemble,
    n: u32,
    rng: &mut R,
) -> Result<MaterializedMatrix> {
    if n == 0 {
        return Err(invalid("need at least one angle pair"));
    }
    let dim = ensemble.matrix_dim(n);
    Ok(match ensemble {
        Ensemble::SOEven | Ensemble::SOOdd => {
            MaterializedMatrix::Real(special_orthogonal(dim, rng))
        }
        Ensemble::USp => MaterializedMatrix::Complex(unitary_symplectic(n as usize, rng)),
    })
}

fn gaussian_matrix<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(dim, dim, |_, _| rng.sample(StandardNormal))
}

/// Haar on O(dim): QR of a Gaussian matrix with R's diagonal signs folded
/// into Q, making the factorization unique.
fn haar_orthogonal<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<f64> {
    let qr = gaussian_matrix(dim, rng).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            for i in 0..dim {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// Haar on SO(dim): condition on determinant +1 by rejection (acceptance
/// probability 1/2).
fn special_orthogonal<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<f64> {
    loop {
        let q = haar_orthogonal(dim, rng);
        if q.determinant() > 0.0 {
            return q;
        }
    }
}

/// The antiunitary pairing v -> J conj(v), with J the standard skew form.
fn quaternionic_partner(v: &DVector<C64>, n: usize) -> DVector<C64> {
    DVector::from_fn(2 * n, |i, _| {
        if i < n {
            v[i + n].conj()
        } else {
            -v[i - n].conj()
        }
    })
}

/// Haar on USp(2n) via Gram-Schmidt over quaternionic column pairs.
///
/// Each accepted unit column q is stored together with -Jconj(q); a fresh
/// Gaussian column is projected out against all stored columns (twice, for
/// orthogonality at the 1e-10 level) before normalization. The pairing makes
/// the assembled matrix satisfy both X^H X = I and X^T J X = J.
fn unitary_symplectic<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<C64> {
    let dim = 2 * n;
    let one = C64::new(1.0, 0.0);
    let mut firsts: Vec<DVector<C64>> = Vec::with_capacity(n);
    let mut partners: Vec<DVector<C64>> = Vec::with_capacity(n);
    while firsts.len() < n {
        let mut v = DVector::from_fn(dim, |_, _| {
            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        for _ in 0..2 {
            for q in firsts.iter().chain(partners.iter()) {
                let coeff = q.dotc(&v);
                v.axpy(-coeff, q, one);
            }
        }
        let norm = v.norm();
        // fresh Gaussian columns are almost surely far from the span
        v.unscale_mut(norm);
        let partner = quaternionic_partner(&v, n).scale(-1.0);
        firsts.push(v);
        partners.push(partner);
    }
    let mut x = DMatrix::zeros(dim, dim);
    for j in 0..n {
        x.set_column(j, &firsts[j]);
        x.set_column(n + j, &partners[j]);
    }
    x
}

/// Recovers angles from the spectrum of the symmetric/Hermitian part:
/// {cos theta} each twice, preceded (odd orthogonal) by a lone +1.
fn paired_angles(mut cosines: Vec<f64>, drop_unit: bool, pairs: usize) -> Result<Vec<f64>> {
    cosines.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
    let mut next = 0;
    if drop_unit {
        if (cosines[0] - 1.0).abs() > 1e-8 {
            return Err(domain("odd orthogonal sample lacks its +1 eigenvalue"));
        }
        next = 1;
    }
    debug_assert_eq!(cosines.len() - next, 2 * pairs);
    let mut angles = Vec::with_capacity(pairs);
    for p in 0..pairs {
        let a = cosines[next + 2 * p];
        let b = cosines[next + 2 * p + 1];
        if (a - b).abs() > 1e-8 {
            return Err(domain("conjugate eigenvalue pairing failed"));
        }
        let theta = (0.5 * (a + b)).clamp(-1.0, 1.0).acos();
        angles.push(theta.clamp(1e-12, std::f64::consts::PI - 1e-12));
    }
    Ok(angles)
}

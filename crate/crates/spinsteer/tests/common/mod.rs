//! Shared test fixtures: an independent series-summation matrix exponential
//! used as the oracle for the library's eigendecomposition route, plus seeded
//! random generators for group elements and algebra elements.

#![allow(dead_code)]

use nalgebra::{Complex, DMatrix};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spinsteer::matrix::SquareMatrix;

pub type C64 = Complex<f64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Scaling-and-squaring Taylor summation. Deliberately avoids the library's
/// eigendecomposition so the two routes share no code.
pub fn series_expm(a: &SquareMatrix, t: f64) -> SquareMatrix {
    let n = a.dim();
    let at: DMatrix<C64> = a.raw().map(|z| z * Complex::new(t, 0.0));
    let norm = at.norm();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = at.map(|z| z / Complex::new(2f64.powi(squarings), 0.0));
    let mut term: DMatrix<C64> = DMatrix::identity(n, n);
    let mut sum: DMatrix<C64> = DMatrix::identity(n, n);
    for j in 1..=60u32 {
        term = (&term * &scaled).map(|z| z / Complex::new(f64::from(j), 0.0));
        sum += &term;
        if term.norm() < 1e-20 {
            break;
        }
    }
    let mut result = sum;
    for _ in 0..squarings {
        result = &result * &result;
    }
    SquareMatrix::from_raw(result).expect("series oracle preserves dimension")
}

pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; avoids log(0) by nudging the uniform off zero.
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Random traceless skew-Hermitian 2x2: span of -iS_x, -iS_y, -iS_z.
pub fn random_su2_algebra(rng: &mut ChaCha8Rng, scale: f64) -> SquareMatrix {
    let (a, b, c) = (
        scale * gaussian(rng),
        scale * gaussian(rng),
        scale * gaussian(rng),
    );
    su2_algebra_from_coeffs(a, b, c)
}

/// a*(-i S_x) + b*(-i S_y) + c*(-i S_z).
pub fn su2_algebra_from_coeffs(a: f64, b: f64, c: f64) -> SquareMatrix {
    let i = Complex::new(0.0, 1.0);
    let h = 0.5;
    let rows = [
        [-i * c * h, -i * a * h - b * h],
        [-i * a * h + b * h, i * c * h],
    ];
    SquareMatrix::from_fn(2, |r, s| rows[r][s]).unwrap()
}

/// Random skew-Hermitian of any supported dimension (not traceless in general).
pub fn random_skew_hermitian(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> SquareMatrix {
    let h = DMatrix::<C64>::from_fn(dim, dim, |_, _| {
        Complex::new(gaussian(rng), gaussian(rng))
    });
    let herm = (&h + h.adjoint()).map(|z| z * Complex::new(0.5 * scale, 0.0));
    let skew = herm.map(|z| z * Complex::new(0.0, -1.0));
    SquareMatrix::from_raw(skew).unwrap()
}

/// Haar-distributed SU(2) via a random unit quaternion.
pub fn haar_su2(rng: &mut ChaCha8Rng) -> SquareMatrix {
    let (mut a, mut b, mut c, mut d) = (
        gaussian(rng),
        gaussian(rng),
        gaussian(rng),
        gaussian(rng),
    );
    let n = (a * a + b * b + c * c + d * d).sqrt();
    a /= n;
    b /= n;
    c /= n;
    d /= n;
    let z = Complex::new(a, b);
    let w = Complex::new(c, d);
    SquareMatrix::from_fn(2, |r, s| match (r, s) {
        (0, 0) => z,
        (0, 1) => w,
        (1, 0) => -w.conj(),
        _ => z.conj(),
    })
    .unwrap()
}

/// Haar-distributed SU(n) for n = 2,3,4: QR of a complex Ginibre matrix with
/// the R-diagonal phase fix, then a global det-normalizing phase.
pub fn haar_sun(rng: &mut ChaCha8Rng, n: usize) -> SquareMatrix {
    let g = DMatrix::<C64>::from_fn(n, n, |_, _| Complex::new(gaussian(rng), gaussian(rng)));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    let det = q.determinant();
    let fix = Complex::from_polar(1.0, -det.arg() / n as f64);
    SquareMatrix::from_raw(q.map(|z| z * fix)).unwrap()
}

/// Haar-distributed SO(3) via a random unit quaternion.
pub fn haar_so3(rng: &mut ChaCha8Rng) -> SquareMatrix {
    let (mut w, mut x, mut y, mut z) = (
        gaussian(rng),
        gaussian(rng),
        gaussian(rng),
        gaussian(rng),
    );
    let n = (w * w + x * x + y * y + z * z).sqrt();
    w /= n;
    x /= n;
    y /= n;
    z /= n;
    let m = [
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - z * w),
            2.0 * (x * z + y * w),
        ],
        [
            2.0 * (x * y + z * w),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - x * w),
        ],
        [
            2.0 * (x * z - y * w),
            2.0 * (y * z + x * w),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ];
    SquareMatrix::from_fn(3, |r, s| Complex::new(m[r][s], 0.0)).unwrap()
}

/// Random 3x3 real skew-symmetric (so(3) element) with axis length in
/// [lo, hi].
pub fn random_so3_algebra(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> SquareMatrix {
    let mut v = [gaussian(rng), gaussian(rng), gaussian(rng)];
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt().max(1e-12);
    let len = lo + (hi - lo) * rng.random::<f64>();
    for c in &mut v {
        *c *= len / n;
    }
    let m = [
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ];
    SquareMatrix::from_fn(3, |r, s| Complex::new(m[r][s], 0.0)).unwrap()
}

pub fn assert_close(a: &SquareMatrix, b: &SquareMatrix, tol: f64, what: &str) {
    let d = a.dist(b);
    assert!(
        d <= tol,
        "{what}: distance {d:.3e} exceeds tolerance {tol:.1e}"
    );
}

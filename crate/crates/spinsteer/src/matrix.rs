//! Dense complex matrices of dimension 2, 3, or 4 and the handful of exact
//! operations the decompositions are built from.
//!
//! The exponential of a skew-Hermitian generator goes through the Hermitian
//! eigendecomposition of iA, so the result is unitary to roundoff for any t,
//! with no step/scaling error to track. The SU(2) logarithm returns the
//! principal branch (eigenphase magnitudes at most pi) and flags the -I branch
//! point where the rotation axis is not unique.

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Square complex matrix, dimension locked to 2, 3, or 4 at construction.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct SquareMatrix {
    data: DMatrix<C64>,
}

impl std::fmt::Debug for SquareMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "SquareMatrix(dim {})", self.dim())?;
        for i in 0..self.dim() {
            write!(f, "  [")?;
            for j in 0..self.dim() {
                let z = self.data[(i, j)];
                write!(f, " {:+.6}{:+.6}i", z.re, z.im)?;
            }
            writeln!(f, " ]")?;
        }
        Ok(())
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if (2..=4).contains(&dim) {
        Ok(())
    } else {
        Err(Error::UnsupportedDim(dim))
    }
}

impl SquareMatrix {
    pub fn from_raw(data: DMatrix<C64>) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(Error::NotSquare {
                rows: data.nrows(),
                cols: data.ncols(),
            });
        }
        check_dim(data.nrows())?;
        Ok(SquareMatrix { data })
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> C64) -> Result<Self> {
        check_dim(dim)?;
        Ok(SquareMatrix {
            data: DMatrix::from_fn(dim, dim, f),
        })
    }

    /// Real-entry constructor, mostly for SO(3) work.
    pub fn from_real_fn(dim: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        Self::from_fn(dim, |i, j| Complex::new(f(i, j), 0.0))
    }

    /// The identity. Panics on an unsupported dimension: that is a programming
    /// error, not a data error.
    pub fn identity(dim: usize) -> Self {
        check_dim(dim).expect("identity: dim must be 2, 3, or 4");
        SquareMatrix {
            data: DMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        check_dim(dim).expect("zeros: dim must be 2, 3, or 4");
        SquareMatrix {
            data: DMatrix::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn raw(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[(i, j)]
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimMismatch(self.dim(), other.dim()));
        }
        Ok(SquareMatrix {
            data: &self.data * &other.data,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimMismatch(self.dim(), other.dim()));
        }
        Ok(SquareMatrix {
            data: &self.data + &other.data,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimMismatch(self.dim(), other.dim()));
        }
        Ok(SquareMatrix {
            data: &self.data - &other.data,
        })
    }

    pub fn scale(&self, s: f64) -> Self {
        SquareMatrix {
            data: self.data.map(|z| z * Complex::new(s, 0.0)),
        }
    }

    pub fn scale_c(&self, s: C64) -> Self {
        SquareMatrix {
            data: self.data.map(|z| z * s),
        }
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    pub fn dagger(&self) -> Self {
        SquareMatrix {
            data: self.data.adjoint(),
        }
    }

    pub fn transpose(&self) -> Self {
        SquareMatrix {
            data: self.data.transpose(),
        }
    }

    pub fn trace(&self) -> C64 {
        self.data.trace()
    }

    pub fn determinant(&self) -> C64 {
        self.data.determinant()
    }

    pub fn frob_norm(&self) -> f64 {
        self.data.norm()
    }

    pub fn dist(&self, other: &Self) -> f64 {
        (&self.data - &other.data).norm()
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        let ab = self.mul(other)?;
        let ba = other.mul(self)?;
        ab.sub(&ba)
    }

    /// Kronecker product, restricted to 2x2 factors (the only case the spin
    /// models need; anything larger would leave the supported dimensions).
    pub fn kron(&self, other: &Self) -> Result<Self> {
        if self.dim() != 2 || other.dim() != 2 {
            return Err(Error::KronDim(self.dim(), other.dim()));
        }
        SquareMatrix::from_fn(4, |i, j| {
            self.data[(i / 2, j / 2)] * other.data[(i % 2, j % 2)]
        })
    }

    pub fn unitary_deviation(&self) -> f64 {
        let n = self.dim();
        let prod = &self.data * self.data.adjoint();
        (prod - DMatrix::<C64>::identity(n, n)).norm()
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitary_deviation() <= tol
    }

    pub fn is_special(&self, tol: f64) -> bool {
        (self.determinant() - Complex::new(1.0, 0.0)).norm() <= tol
    }

    pub fn skew_hermitian_deviation(&self) -> f64 {
        (&self.data + self.data.adjoint()).norm()
    }

    /// Relative check: the deviation is compared against max(1, ||A||).
    pub fn is_skew_hermitian(&self, tol: f64) -> bool {
        self.skew_hermitian_deviation() <= tol * self.frob_norm().max(1.0)
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.data.iter().all(|z| z.im.abs() <= tol)
    }

    pub fn is_real_skew(&self, tol: f64) -> bool {
        self.is_real(tol)
            && (&self.data + self.data.transpose()).norm() <= tol * self.frob_norm().max(1.0)
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.dist(&SquareMatrix::identity(self.dim())) <= tol
    }
}

/// Spin matrices S_x, S_y, S_z (Pauli matrices over 2): axis 0, 1, 2.
pub fn spin(axis: usize) -> SquareMatrix {
    let i = Complex::new(0.0, 1.0);
    let h = Complex::new(0.5, 0.0);
    let z = Complex::new(0.0, 0.0);
    let rows = match axis {
        0 => [[z, h], [h, z]],
        1 => [[z, -i * h], [i * h, z]],
        2 => [[h, z], [z, -h]],
        _ => panic!("spin axis must be 0, 1, or 2"),
    };
    SquareMatrix::from_fn(2, |r, c| rows[r][c]).unwrap()
}

/// Trace inner product Tr(A B*). Real when both arguments are skew-Hermitian.
/// Dimensions must agree (checked with a debug assertion; the hot paths call
/// this in tight loops).
pub fn inner_product(a: &SquareMatrix, b: &SquareMatrix) -> C64 {
    debug_assert_eq!(a.dim(), b.dim(), "inner_product dimension mismatch");
    (a.raw() * b.raw().adjoint()).trace()
}

/// e^{A t} for skew-Hermitian A, via the Hermitian eigendecomposition of iA.
/// Exactly unitary up to roundoff for any t, including very large ones.
pub fn expm(a: &SquareMatrix, t: f64) -> Result<SquareMatrix> {
    let dev = a.skew_hermitian_deviation();
    if dev > 1e-11 * a.frob_norm().max(1.0) {
        return Err(Error::NotSkewHermitian(dev));
    }
    let n = a.dim();
    let i = Complex::new(0.0, 1.0);
    let h = a.raw().map(|z| z * i);
    // Symmetrize so the eigensolver sees an exactly Hermitian input.
    let h = (&h + h.adjoint()).map(|z| z * Complex::new(0.5, 0.0));
    let se = h.symmetric_eigen();
    let mut phases = DMatrix::<C64>::zeros(n, n);
    for k in 0..n {
        phases[(k, k)] = Complex::from_polar(1.0, -se.eigenvalues[k] * t);
    }
    let v = &se.eigenvectors;
    SquareMatrix::from_raw(v * phases * v.adjoint())
}

/// Principal SU(2) logarithm.
#[derive(Debug, Clone)]
pub struct Su2Log {
    pub log: SquareMatrix,
    /// True at the -I branch point, where the rotation axis is arbitrary; the
    /// returned log uses the +z axis by convention.
    pub degenerate: bool,
}

/// Principal logarithm on SU(2): returns traceless skew-Hermitian L with
/// e^L = X and eigenphase magnitudes at most pi.
pub fn logm_su2(x: &SquareMatrix) -> Result<Su2Log> {
    if x.dim() != 2 {
        return Err(Error::UnsupportedDim(x.dim()));
    }
    let udev = x.unitary_deviation();
    if udev > 1e-9 {
        return Err(Error::NotUnitary(udev));
    }
    let sdev = (x.determinant() - Complex::new(1.0, 0.0)).norm();
    if sdev > 1e-9 {
        return Err(Error::NotSpecial(sdev));
    }

    // X = cos(t/2) I - i sin(t/2) (n.sigma). The cosine comes from the trace;
    // the sine must come from the traceless part's norm, because acos(trace)
    // alone loses half the significant digits near the +-I branch points.
    let cos_half = (x.trace().re / 2.0).clamp(-1.0, 1.0);
    let deviation = skew_traceless_part(x);
    let sin_half = deviation.frob_norm() / 2f64.sqrt();
    let half_theta = sin_half.atan2(cos_half);

    if sin_half < 1e-14 {
        if cos_half > 0.0 {
            // X within roundoff of +I: the log is (uniquely) ~0; the traceless
            // skew part is the log to O(theta^3).
            return Ok(Su2Log {
                log: deviation,
                degenerate: false,
            });
        }
        // X within roundoff of -I: axis undefined; pick +z.
        let pi = std::f64::consts::PI;
        let log = SquareMatrix::from_fn(2, |r, c| {
            if r == c {
                Complex::new(0.0, if r == 0 { -pi } else { pi })
            } else {
                Complex::new(0.0, 0.0)
            }
        })?;
        return Ok(Su2Log {
            log,
            degenerate: true,
        });
    }

    // The axis direction loses relative accuracy as sin -> 0 but the product
    // sin * axis does not, so the roundtrip stays tight all the way to the
    // 1e-14 cutoff: |L| = half_theta * sqrt(2) is exact by construction and
    // only the axis inherits the deviation's roundoff.
    let l = deviation.scale(half_theta / sin_half);
    Ok(Su2Log {
        log: l,
        degenerate: false,
    })
}

/// Project onto traceless skew-Hermitian matrices: (M - M*)/2 minus its trace
/// part. Idempotent; removes roundoff-level structure violations.
fn skew_traceless_part(m: &SquareMatrix) -> SquareMatrix {
    let n = m.dim();
    let skew = m.sub(&m.dagger()).unwrap().scale(0.5);
    let tr = skew.trace() / Complex::new(n as f64, 0.0);
    SquareMatrix::from_fn(n, |i, j| {
        if i == j {
            skew.get(i, j) - tr
        } else {
            skew.get(i, j)
        }
    })
    .unwrap()
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    dim: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl TryFrom<MatrixJson> for SquareMatrix {
    type Error = Error;

    fn try_from(j: MatrixJson) -> Result<Self> {
        check_dim(j.dim)?;
        let shape_ok = |rows: &Vec<Vec<f64>>| {
            rows.len() == j.dim && rows.iter().all(|r| r.len() == j.dim)
        };
        if !shape_ok(&j.re) || !shape_ok(&j.im) {
            return Err(Error::SingularInput(format!(
                "matrix JSON: re/im must both be {0}x{0} row-major",
                j.dim
            )));
        }
        SquareMatrix::from_fn(j.dim, |r, c| Complex::new(j.re[r][c], j.im[r][c]))
    }
}

impl From<SquareMatrix> for MatrixJson {
    fn from(m: SquareMatrix) -> Self {
        let dim = m.dim();
        let grid = |f: fn(&C64) -> f64| {
            (0..dim)
                .map(|r| (0..dim).map(|c| f(&m.get(r, c))).collect())
                .collect()
        };
        MatrixJson {
            dim,
            re: grid(|z| z.re),
            im: grid(|z| z.im),
        }
    }
}

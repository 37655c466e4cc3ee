//! Factorization of SU(3) elements into plane rotations and a diagonal
//! phase factor.
//!
//! Any special unitary 3x3 matrix splits as
//!
//! ```text
//! U = D(alpha) * U12(theta1, sigma1) * U13(theta2, sigma2) * U23(theta3, sigma3)
//! ```
//!
//! where `Upq` acts as a complex Givens rotation in the (p, q) coordinate
//! plane and `D` is a determinant-one diagonal phase matrix. The parameters
//! are extracted by right-multiplying with factor inverses, each step
//! zeroing one strictly-lower entry; the order (2,1), (2,0), (1,0) leaves a
//! diagonal remainder without refilling previously cleared entries.

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;

/// Euler-angle data for the plane-rotation factorization of an SU(3)
/// element: three plane angles in `[0, pi/2]`, three phases, and three
/// diagonal phases summing to zero.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MurnaghanParams {
    /// Plane angles for the (1,2), (1,3), (2,3) factors, in that order.
    pub thetas: [f64; 3],
    /// Phases for the same factors.
    pub sigmas: [f64; 3],
    /// Diagonal phases; the third is the exact negated sum of the first two.
    pub alphas: [f64; 3],
}

impl MurnaghanParams {
    /// Rebuild the SU(3) element in the declared factor order.
    pub fn reconstruct(&self) -> SquareMatrix {
        diag_factor(self.alphas)
            .mul(&rotation_factor(0, 1, self.thetas[0], self.sigmas[0]))
            .unwrap()
            .mul(&rotation_factor(0, 2, self.thetas[1], self.sigmas[1]))
            .unwrap()
            .mul(&rotation_factor(1, 2, self.thetas[2], self.sigmas[2]))
            .unwrap()
    }
}

/// The complex Givens rotation in the (p, q) plane (0-indexed, p < q):
/// diagonal entries `cos(theta)` at p and q, off-diagonal pair
/// `-sin(theta) e^{-i sigma}` at (p, q) and `sin(theta) e^{i sigma}` at
/// (q, p), identity elsewhere.
pub fn rotation_factor(p: usize, q: usize, theta: f64, sigma: f64) -> SquareMatrix {
    assert!(p < q && q < 3, "plane indices must satisfy p < q < 3");
    let (s, c) = theta.sin_cos();
    SquareMatrix::from_fn(3, |r, col| {
        if (r, col) == (p, p) || (r, col) == (q, q) {
            Complex::new(c, 0.0)
        } else if (r, col) == (p, q) {
            -Complex::from_polar(s, -sigma)
        } else if (r, col) == (q, p) {
            Complex::from_polar(s, sigma)
        } else if r == col {
            Complex::new(1.0, 0.0)
        } else {
            Complex::new(0.0, 0.0)
        }
    })
    .unwrap()
}

/// The diagonal phase factor `diag(e^{i a1}, e^{i a2}, e^{i a3})`.
pub fn diag_factor(alphas: [f64; 3]) -> SquareMatrix {
    SquareMatrix::from_fn(3, |r, c| {
        if r == c {
            Complex::from_polar(1.0, alphas[r])
        } else {
            Complex::new(0.0, 0.0)
        }
    })
    .unwrap()
}

/// Zero entry (row, p) of `m` by right-multiplying with the inverse of a
/// (p, q) plane factor, returning the (theta, sigma) that does it.
fn eliminate(m: &mut SquareMatrix, row: usize, p: usize, q: usize) -> (f64, f64) {
    let a = m.get(row, p);
    let b = m.get(row, q);
    let theta = a.norm().atan2(b.norm());
    let sigma = if theta == 0.0 { 0.0 } else { a.arg() - b.arg() };
    let inv = rotation_factor(p, q, theta, sigma).dagger();
    *m = m.mul(&inv).unwrap();
    (theta, sigma)
}

/// Factor a special unitary 3x3 matrix into plane rotations and a diagonal
/// phase. The reconstruction `D * U12 * U13 * U23` reproduces the input at
/// working precision.
pub fn murnaghan_decompose(u: &SquareMatrix) -> Result<MurnaghanParams> {
    if u.dim() != 3 {
        return Err(Error::DimMismatch(u.dim(), 3));
    }
    let dev = u.unitary_deviation();
    if dev > 1e-8 {
        return Err(Error::NotUnitary(dev));
    }
    let det_err = (u.determinant() - Complex::new(1.0, 0.0)).norm();
    if det_err > 1e-8 {
        return Err(Error::NotSpecial(det_err));
    }

    let mut m = u.clone();
    // Clear the bottom row first, then the middle row; each elimination
    // only mixes columns whose cleared entries are already zero.
    let (theta3, sigma3) = eliminate(&mut m, 2, 1, 2);
    let (theta2, sigma2) = eliminate(&mut m, 2, 0, 2);
    let (theta1, sigma1) = eliminate(&mut m, 1, 0, 1);

    let a1 = m.get(0, 0).arg();
    let a2 = m.get(1, 1).arg();
    Ok(MurnaghanParams {
        thetas: [theta1, theta2, theta3],
        sigmas: [sigma1, sigma2, sigma3],
        alphas: [a1, a2, -(a1 + a2)],
    })
}

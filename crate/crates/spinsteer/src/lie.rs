//! Real-span Lie closures for controllability rank decisions.
//!
//! The algebras here are real vector spaces of skew-Hermitian matrices (real
//! skew-symmetric ones included), so orthogonalization runs over the real
//! coefficient field with the trace inner product Tr(A B*), which is real on
//! such pairs. Modified Gram-Schmidt with one reorthogonalization pass keeps
//! the basis orthonormal to roundoff; a candidate is accepted as a new
//! direction only if its post-projection residual exceeds rank_tol times its
//! normalized size, so near-dependent brackets never inflate the dimension.

use crate::error::{Error, Result};
use crate::matrix::{inner_product, SquareMatrix};
use crate::NumericPolicy;

/// Orthonormal basis of a bracket-closed real span.
#[derive(Debug, Clone)]
pub struct LieBasis {
    elements: Vec<SquareMatrix>,
    space_dim: usize,
}

impl LieBasis {
    pub(crate) fn empty(space_dim: usize) -> Self {
        LieBasis {
            elements: Vec::new(),
            space_dim,
        }
    }

    /// Number of independent directions.
    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    /// Matrix dimension the algebra acts on.
    pub fn space_dim(&self) -> usize {
        self.space_dim
    }

    pub fn element(&self, i: usize) -> &SquareMatrix {
        &self.elements[i]
    }

    pub fn elements(&self) -> &[SquareMatrix] {
        &self.elements
    }

    /// Real projection coefficients of m onto the basis.
    pub fn project(&self, m: &SquareMatrix) -> Vec<f64> {
        self.elements
            .iter()
            .map(|e| inner_product(m, e).re)
            .collect()
    }

    /// Norm of the component of m orthogonal to the span. Two projection
    /// passes so the answer is meaningful even at 1e-13 scales.
    pub fn residual(&self, m: &SquareMatrix) -> f64 {
        let mut r = m.clone();
        for _ in 0..2 {
            for e in &self.elements {
                let c = inner_product(&r, e).re;
                if c != 0.0 {
                    r = r.sub(&e.scale(c)).expect("basis dims agree");
                }
            }
        }
        r.frob_norm()
    }

    pub fn contains(&self, m: &SquareMatrix, tol: f64) -> bool {
        self.residual(m) <= tol * m.frob_norm().max(1.0)
    }

    /// Try to extend the basis with a new direction. Returns true if the
    /// candidate contributed one.
    pub(crate) fn try_insert(&mut self, candidate: &SquareMatrix, rank_tol: f64) -> bool {
        let pre = candidate.frob_norm();
        if pre <= 0.0 {
            return false;
        }
        let mut r = candidate.scale(1.0 / pre);
        for _ in 0..2 {
            for e in &self.elements {
                let c = inner_product(&r, e).re;
                if c != 0.0 {
                    r = r.sub(&e.scale(c)).expect("basis dims agree");
                }
            }
        }
        let rn = r.frob_norm();
        if rn > rank_tol {
            self.elements.push(r.scale(1.0 / rn));
            true
        } else {
            false
        }
    }
}

/// Smallest bracket-closed real span containing the generators.
///
/// Generators must share a dimension and be skew-Hermitian (real
/// skew-symmetric inputs qualify). Errors if the list is empty or spans
/// nothing.
pub fn lie_closure(generators: &[SquareMatrix], policy: &NumericPolicy) -> Result<LieBasis> {
    let first = generators
        .first()
        .ok_or_else(|| Error::SingularInput("lie_closure: no generators".into()))?;
    let space_dim = first.dim();
    let mut basis = LieBasis::empty(space_dim);
    for g in generators {
        if g.dim() != space_dim {
            return Err(Error::DimMismatch(space_dim, g.dim()));
        }
        if !g.is_skew_hermitian(policy.algebra_tol.max(1e-11)) {
            return Err(Error::NotSkewHermitian(g.skew_hermitian_deviation()));
        }
        basis.try_insert(g, policy.rank_tol);
    }
    if basis.dim() == 0 {
        return Err(Error::SingularInput(
            "lie_closure: generators span nothing".into(),
        ));
    }

    // Worklist closure; dimension is bounded by dim(u(n)) = n^2 <= 16, so the
    // quadratic sweep is trivial.
    let max_dim = space_dim * space_dim;
    loop {
        let n = basis.dim();
        let mut grew = false;
        'pairs: for i in 0..n {
            for j in (i + 1)..n {
                let br = basis.elements[i]
                    .commutator(&basis.elements[j])
                    .expect("closure dims agree");
                if br.frob_norm() < 1e-13 {
                    continue;
                }
                if basis.try_insert(&br, policy.rank_tol) {
                    grew = true;
                    if basis.dim() == max_dim {
                        break 'pairs;
                    }
                }
            }
        }
        if !grew || basis.dim() == max_dim {
            break;
        }
    }
    Ok(basis)
}

mod common;

use common::*;
use nalgebra::Complex;
use spinsteer::lie::lie_closure;
use spinsteer::matrix::{inner_product, spin, SquareMatrix};
use spinsteer::NumericPolicy;

fn minus_i_pauli(k: usize) -> SquareMatrix {
    spin(k).scale_c(Complex::new(0.0, -1.0))
}

#[test]
fn two_spin_axes_close_to_full_su2() {
    let policy = NumericPolicy::default();
    let basis = lie_closure(&[minus_i_pauli(0), minus_i_pauli(1)], &policy).unwrap();
    assert_eq!(basis.dim(), 3, "[S_x, S_y] generates S_z");
}

#[test]
fn single_generator_spans_one_dimension() {
    let policy = NumericPolicy::default();
    let basis = lie_closure(&[minus_i_pauli(2)], &policy).unwrap();
    assert_eq!(basis.dim(), 1);
}

#[test]
fn proportional_generators_are_not_double_counted() {
    let policy = NumericPolicy::default();
    let b = minus_i_pauli(1);
    let basis = lie_closure(&[b.clone(), b.scale(2.5)], &policy).unwrap();
    assert_eq!(basis.dim(), 1);
}

#[test]
fn su4_generators_close_to_dim_15() {
    // kron products of -iS_k with identity plus one coupling term generate
    // all of su(4).
    let policy = NumericPolicy::default();
    let id = SquareMatrix::identity(2);
    let mut gens = Vec::new();
    for k in 0..3 {
        gens.push(minus_i_pauli(k).kron(&id).unwrap());
        gens.push(id.kron(&minus_i_pauli(k)).unwrap());
    }
    let i = Complex::new(0.0, 1.0);
    let zz = spin(2).kron(&spin(2)).unwrap().scale_c(-i);
    gens.push(zz);
    let basis = lie_closure(&gens, &policy).unwrap();
    assert_eq!(basis.dim(), 15);
}

#[test]
fn closure_basis_is_orthonormal_and_skew_hermitian() {
    let mut rng = rng(0x11e_0001);
    let policy = NumericPolicy::default();
    let gens: Vec<_> = (0..3)
        .map(|_| random_skew_hermitian(&mut rng, 3, 1.0))
        .collect();
    let basis = lie_closure(&gens, &policy).unwrap();
    for i in 0..basis.dim() {
        assert!(basis.element(i).is_skew_hermitian(1e-11));
        for j in 0..basis.dim() {
            let ip = inner_product(basis.element(i), basis.element(j)).re;
            let want = if i == j { 1.0 } else { 0.0 };
            assert!(
                (ip - want).abs() < 1e-11,
                "basis orthonormality at ({i},{j}): {ip}"
            );
        }
    }
}

#[test]
fn closure_is_bracket_closed() {
    let mut rng = rng(0x11e_0002);
    let policy = NumericPolicy::default();
    let gens: Vec<_> = (0..2)
        .map(|_| random_skew_hermitian(&mut rng, 4, 1.0))
        .collect();
    let basis = lie_closure(&gens, &policy).unwrap();
    for i in 0..basis.dim() {
        for j in 0..basis.dim() {
            let br = basis.element(i).commutator(basis.element(j)).unwrap();
            let res = basis.residual(&br);
            assert!(
                res < 1e-9 * br.frob_norm().max(1.0),
                "bracket ({i},{j}) escapes the closure: residual {res:.3e}"
            );
        }
    }
}

#[test]
fn contains_and_residual_agree() {
    let policy = NumericPolicy::default();
    let basis = lie_closure(&[minus_i_pauli(0), minus_i_pauli(1)], &policy).unwrap();
    let inside = minus_i_pauli(2).scale(0.7);
    let outside = SquareMatrix::identity(2).scale_c(Complex::new(0.0, -1.0));
    assert!(basis.contains(&inside, 1e-10));
    assert!(!basis.contains(&outside, 1e-10));
    assert!(basis.residual(&inside) < 1e-12);
    assert!((basis.residual(&outside) - outside.frob_norm()).abs() < 1e-12);
}

#[test]
fn closure_rejects_empty_and_zero_input() {
    let policy = NumericPolicy::default();
    assert!(lie_closure(&[], &policy).is_err());
    let z = SquareMatrix::zeros(2);
    assert!(lie_closure(&[z], &policy).is_err());
}

#[test]
fn projection_coefficients_reconstruct_member() {
    let mut rng = rng(0x11e_0003);
    let policy = NumericPolicy::default();
    let basis = lie_closure(
        &[minus_i_pauli(0), minus_i_pauli(1), minus_i_pauli(2)],
        &policy,
    )
    .unwrap();
    let x = random_su2_algebra(&mut rng, 2.0);
    let coeffs = basis.project(&x);
    let mut rebuilt = SquareMatrix::zeros(2);
    for (c, e) in coeffs.iter().zip((0..basis.dim()).map(|i| basis.element(i))) {
        rebuilt = rebuilt.add(&e.scale(*c)).unwrap();
    }
    assert_close(&rebuilt, &x, 1e-12, "projection reconstructs algebra member");
}

mod common;

use common::*;
use rand::Rng;
use spinsteer::matrix::{expm, SquareMatrix};
use spinsteer::schedule::Gen;
use spinsteer::so3::{
    admissible_block_angle, canonicalize_so3, euler_so3, exp_z2_entries, factor_small_rotation,
    factorize_so3, so3_axis,
};
use spinsteer::su2::psi_angle;
use spinsteer::NumericPolicy;

const PI: f64 = std::f64::consts::PI;
const TAU: f64 = std::f64::consts::TAU;

/// Generator of rotations in the 1-2 coordinate plane.
fn gen12() -> SquareMatrix {
    SquareMatrix::from_real_fn(3, |r, c| match (r, c) {
        (0, 1) => 1.0,
        (1, 0) => -1.0,
        _ => 0.0,
    })
    .unwrap()
}

fn gen23() -> SquareMatrix {
    SquareMatrix::from_real_fn(3, |r, c| match (r, c) {
        (1, 2) => 1.0,
        (2, 1) => -1.0,
        _ => 0.0,
    })
    .unwrap()
}

fn euler_rebuild(alpha: f64, beta: f64, gamma: f64) -> SquareMatrix {
    expm(&gen12(), alpha)
        .unwrap()
        .mul(&expm(&gen23(), beta).unwrap())
        .unwrap()
        .mul(&expm(&gen12(), gamma).unwrap())
        .unwrap()
}

fn entries_to_matrix(e: [[f64; 3]; 3]) -> SquareMatrix {
    SquareMatrix::from_real_fn(3, |r, c| e[r][c]).unwrap()
}

#[test]
fn euler_so3_reconstructs_haar_rotations() {
    let mut rng = rng(0x503_0001);
    for _ in 0..300 {
        let x = haar_so3(&mut rng);
        let e = euler_so3(&x).unwrap();
        assert!((0.0..TAU).contains(&e.alpha));
        assert!((0.0..TAU).contains(&e.gamma));
        assert!((0.0..=PI).contains(&e.beta));
        let back = euler_rebuild(e.alpha, e.beta, e.gamma);
        assert_close(&back, &x, 1e-12, "SO(3) Euler reconstruction");
    }
}

#[test]
fn euler_so3_degenerate_plane_rotations() {
    // beta = 0: rotation purely in the 1-2 plane.
    let x = euler_rebuild(2.4, 0.0, 0.0);
    let e = euler_so3(&x).unwrap();
    assert!(e.beta < 1e-12);
    assert_eq!(e.gamma, 0.0);
    assert_close(&euler_rebuild(e.alpha, e.beta, e.gamma), &x, 1e-13, "beta=0");

    // beta = pi.
    let x = euler_rebuild(1.1, PI, 0.0);
    let e = euler_so3(&x).unwrap();
    assert!((e.beta - PI).abs() < 1e-12);
    assert_eq!(e.gamma, 0.0);
    assert_close(&euler_rebuild(e.alpha, e.beta, e.gamma), &x, 1e-13, "beta=pi");

    // Tiny but nonzero tilt must still reconstruct tightly.
    let x = euler_rebuild(0.4, 1e-12, 2.2);
    let e = euler_so3(&x).unwrap();
    assert_close(
        &euler_rebuild(e.alpha, e.beta, e.gamma),
        &x,
        1e-10,
        "nearly planar",
    );
}

#[test]
fn euler_so3_rejects_non_rotation_input() {
    let m = SquareMatrix::identity(3).scale(1.1);
    assert!(euler_so3(&m).is_err());
    // Reflection: orthogonal but det = -1.
    let r = SquareMatrix::from_real_fn(3, |i, j| {
        if i == j {
            if i == 0 {
                -1.0
            } else {
                1.0
            }
        } else {
            0.0
        }
    })
    .unwrap();
    assert!(euler_so3(&r).is_err());
}

#[test]
fn axis_reads_off_skew_entries() {
    let mut rng = rng(0x503_0002);
    for _ in 0..50 {
        let z = random_so3_algebra(&mut rng, 0.2, 3.0);
        let w = so3_axis(&z).unwrap();
        // z v = w x v for the basis vectors.
        for (j, basis) in [(0, [1.0, 0.0, 0.0]), (1, [0.0, 1.0, 0.0]), (2, [0.0, 0.0, 1.0])] {
            let cross = [
                w[1] * basis[2] - w[2] * basis[1],
                w[2] * basis[0] - w[0] * basis[2],
                w[0] * basis[1] - w[1] * basis[0],
            ];
            for i in 0..3 {
                assert!((z.get(i, j).re - cross[i]).abs() < 1e-13);
            }
        }
    }
}

#[test]
fn canonical_frame_rotates_pair_to_normal_form() {
    let mut rng = rng(0x503_0003);
    let policy = NumericPolicy::default();
    let mut kept = 0;
    while kept < 200 {
        let z1 = random_so3_algebra(&mut rng, 0.3, 3.0);
        let z2 = random_so3_algebra(&mut rng, 0.3, 3.0);
        let pair = match canonicalize_so3(&z1, &z2, &policy) {
            Ok(p) => p,
            Err(_) => continue,
        };
        kept += 1;
        let t = &pair.t_canon;
        assert!(t.is_real(1e-12));
        assert!(t.is_unitary(1e-12));
        assert!((t.determinant().re - 1.0).abs() < 1e-12);

        // T Z1 T^t = scale1 * gen12.
        let f1 = t.mul(&z1).unwrap().mul(&t.transpose()).unwrap();
        assert_close(
            &f1,
            &gen12().scale(pair.scale1),
            1e-12,
            "Z1 normal form",
        );

        // T Z2 T^t = rho*d * gen12 + d * gen23 with d > 0.
        let f2 = t.mul(&z2).unwrap().mul(&t.transpose()).unwrap();
        let d = f2.get(1, 2).re;
        assert!(d > 0.0, "tilt coefficient must be positive");
        assert!(f2.get(0, 2).norm() < 1e-12, "no 1-3 component remains");
        let a = f2.get(0, 1).re;
        assert!((pair.rho - a / d).abs() < 1e-10);
        assert!((pair.scale2 - a.hypot(d)).abs() < 1e-10);

        // psi agrees with the trace inner-product angle of the raw pair.
        let psi_ip = psi_angle(&z1, &z2).unwrap();
        assert!((pair.psi() - psi_ip).abs() < 1e-10);
    }
}

#[test]
fn canonical_frame_rejects_parallel_axes() {
    let policy = NumericPolicy::default();
    let z1 = gen12().scale(1.4);
    let z2 = gen12().scale(-0.3);
    assert!(canonicalize_so3(&z1, &z2, &policy).is_err());
}

#[test]
fn closed_form_exponential_matches_expm_on_grid() {
    // 50 x 50 grid in (rho, angle): the closed form against the spectral
    // exponential of d(rho gen12 + gen23) with the angle phi = eta * d * t.
    for i in 0..50 {
        let rho = -10.0 + 20.0 * (i as f64) / 49.0;
        let eta = (1.0 + rho * rho).sqrt();
        let z = gen12().scale(rho).add(&gen23()).unwrap();
        for j in 0..50 {
            let phi = TAU * (j as f64) / 49.0;
            let direct = entries_to_matrix(exp_z2_entries(rho, phi));
            let via_expm = expm(&z, phi / eta).unwrap();
            assert_close(&direct, &via_expm, 1e-12, "closed-form exponential");
        }
    }
}

#[test]
fn admissibility_matches_half_angle_form() {
    // cos(beta/m) >= 2 psi^2 - 1 and cos^2(beta/2m) >= psi^2 are the same
    // condition; check the fp versions agree away from the knife edge.
    let mut rng = rng(0x503_0004);
    for _ in 0..100 {
        let psi = 2.0 * rng.random::<f64>() - 1.0;
        let beta = PI * rng.random::<f64>();
        let m = 1 + (rng.random::<f64>() * 7.0) as u32;
        let whole = admissible_block_angle(psi, beta / m as f64);
        let half = (beta / (2.0 * m as f64)).cos().powi(2) >= psi * psi;
        let margin = (beta / m as f64).cos() - (2.0 * psi * psi - 1.0);
        if margin.abs() > 1e-9 {
            assert_eq!(whole, half, "forms disagree at margin {margin}");
        }
    }
}

#[test]
fn small_rotation_block_reproduces_tilt_rotation() {
    let mut rng = rng(0x503_0005);
    for _ in 0..200 {
        let rho = 8.0 * (rng.random::<f64>() - 0.5);
        let psi = rho / (1.0 + rho * rho).sqrt();
        // Draw an admissible block angle with margin.
        let limit = (2.0 * psi * psi - 1.0).min(1.0 - 1e-9);
        let max_angle = limit.acos();
        let angle = max_angle * rng.random::<f64>();
        let (x, phi2, y) = factor_small_rotation(rho, angle).unwrap();
        assert!((0.0..TAU).contains(&x));
        assert!((0.0..TAU).contains(&y));
        assert!((0.0..=PI + 1e-15).contains(&phi2));
        let block = expm(&gen12(), x)
            .unwrap()
            .mul(&entries_to_matrix(exp_z2_entries(rho, phi2)))
            .unwrap()
            .mul(&expm(&gen12(), y).unwrap())
            .unwrap();
        let want = expm(&gen23(), angle).unwrap();
        assert_close(&block, &want, 1e-12, "three-factor block");
    }
}

#[test]
fn small_rotation_rejects_inadmissible_angles() {
    // rho = 2 -> psi^2 = 0.8: angles beyond acos(0.6) are unreachable in one
    // block.
    let bad = 0.6f64.acos() + 0.1;
    assert!(factor_small_rotation(2.0, bad).is_err());
}

#[test]
fn factorization_reconstructs_rotation_targets() {
    let mut rng = rng(0x503_0006);
    let policy = NumericPolicy::default();
    let mut kept = 0;
    while kept < 500 {
        let z1 = random_so3_algebra(&mut rng, 0.3, 3.0);
        let z2 = random_so3_algebra(&mut rng, 0.3, 3.0);
        if canonicalize_so3(&z1, &z2, &policy).is_err() {
            continue;
        }
        kept += 1;
        let xf = haar_so3(&mut rng);
        let fact = factorize_so3(&z1, &z2, &xf, &policy).unwrap();
        let prod = fact.sequence.product().unwrap();
        assert_close(&prod, &xf, 1e-9, "SO(3) factorization product");
        assert!(fact.sequence.residual < 1e-9);
        assert_close(
            &fact.sequence.audit_product().unwrap(),
            &prod,
            1e-10,
            "audit product",
        );

        // Alternating word length after merging is 2m+1.
        assert!(fact.sequence.factor_count() <= 2 * fact.m as usize + 1);
        for step in &fact.sequence.steps {
            assert!(step.t >= 0.0);
            match step.gen {
                Gen::Z1 => {}
                Gen::Z2 => assert!(step.t <= PI / fact.sequence.frame.as_ref().unwrap().lambda2 + 1e-12),
                other => panic!("unexpected generator {other:?}"),
            }
        }

        // m is minimal for the admissibility condition.
        if fact.m > 1 {
            let pair = canonicalize_so3(&z1, &z2, &policy).unwrap();
            assert!(
                !admissible_block_angle(pair.psi(), fact.euler.beta / (fact.m - 1) as f64),
                "m = {} is not minimal",
                fact.m
            );
        }
    }
}

#[test]
fn factorization_rejects_bad_inputs() {
    let mut rng = rng(0x503_0007);
    let policy = NumericPolicy::default();
    let z1 = random_so3_algebra(&mut rng, 0.5, 2.0);
    let z2 = random_so3_algebra(&mut rng, 0.5, 2.0);
    // Non-orthogonal target.
    let bad = SquareMatrix::identity(3).scale(1.2);
    assert!(factorize_so3(&z1, &z2, &bad, &policy).is_err());
    // Proportional pair.
    let xf = haar_so3(&mut rng);
    assert!(factorize_so3(&z1, &z1.scale(0.7), &xf, &policy).is_err());
    // Wrong dimension.
    let z_small = spinsteer::matrix::spin(2);
    assert!(factorize_so3(&z_small, &z_small, &xf, &policy).is_err());
}

#[test]
fn factorization_handles_planar_targets() {
    // Target that is exactly a rotation about the Z1 canonical axis: the
    // Euler tilt vanishes and the word collapses to Z1 legs only.
    let mut rng = rng(0x503_0008);
    let policy = NumericPolicy::default();
    let z1 = random_so3_algebra(&mut rng, 0.5, 2.0);
    let z2 = random_so3_algebra(&mut rng, 0.5, 2.0);
    let xf = expm(&z1, 1.234).unwrap();
    let fact = factorize_so3(&z1, &z2, &xf, &policy).unwrap();
    assert!(fact.euler.beta < 1e-9);
    assert_close(
        &fact.sequence.product().unwrap(),
        &xf,
        1e-10,
        "planar target",
    );
}

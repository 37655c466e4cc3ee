mod common;

use std::f64::consts::PI;

use rand::Rng;
use spinsteer::matrix::{expm, SquareMatrix};
use spinsteer::schedule::{Modulation, PulseSchedule, PulseSegment};
use spinsteer::sim::{simulate, SimSystem};
use spinsteer::twospin::SpinSystem;
use spinsteer::{Error, NumericPolicy};

fn ising(gamma: f64, j: f64, uz: f64, m: f64) -> SpinSystem {
    SpinSystem::new(gamma, gamma, j, uz, m, [0.0, 0.0, 1.0]).unwrap()
}

/// Exact propagator of one modulated segment on a homonuclear system whose
/// modulation frequency equals gamma * uz. Moving to the frame rotating with
/// the z bias turns the drive into a constant transverse field, so the
/// segment propagator is a product of two exact exponentials.
fn rotating_frame_segment(sys: &SpinSystem, dt: f64, m: &Modulation) -> SquareMatrix {
    assert_eq!(m.sign_uy, 1.0);
    let bz = sys.b(2);
    let fixed = sys
        .a()
        .add(&sys.b(0).scale(m.kbar * m.phase.cos()))
        .unwrap()
        .add(&sys.b(1).scale(m.kbar * m.phase.sin()))
        .unwrap();
    expm(&bz, sys.uz() * dt)
        .unwrap()
        .mul(&expm(&fixed, dt).unwrap())
        .unwrap()
}

#[test]
fn empty_schedule_is_identity() {
    let a = spinsteer::matrix::spin(2).scale_c(nalgebra::Complex::new(0.0, -1.0));
    let b = spinsteer::matrix::spin(1).scale_c(nalgebra::Complex::new(0.0, -1.0));
    let sys = SimSystem::Su2 { a, b };
    let policy = NumericPolicy::default();
    let id = SquareMatrix::identity(2);

    let res = simulate(&sys, &PulseSchedule::default(), None, &policy).unwrap();
    assert!(res.endpoint.dist(&id) == 0.0);
    assert!(res.residual_to_target.is_none());
    assert!(res.unitarity_drift < 1e-15);
    assert!(res.segments.is_empty());

    let res = simulate(&sys, &PulseSchedule::default(), Some(&id), &policy).unwrap();
    assert!(res.residual_to_target.unwrap() < 1e-15);
}

#[test]
fn constant_segments_match_direct_products() {
    let mut rng = common::rng(0x51301);
    let policy = NumericPolicy::default();
    for _ in 0..50 {
        let a = common::random_su2_algebra(&mut rng, 1.0);
        let b = common::random_su2_algebra(&mut rng, 1.0);
        let mut schedule = PulseSchedule::default();
        let mut direct = SquareMatrix::identity(2);
        for _ in 0..6 {
            let dt = 0.1 + 0.9 * rng.random::<f64>();
            let ux = -2.0 + 4.0 * rng.random::<f64>();
            schedule.segments.push(PulseSegment::Const { dt, ux, uy: 0.0 });
            let g = a.add(&b.scale(ux)).unwrap();
            direct = expm(&g, dt).unwrap().mul(&direct).unwrap();
        }
        let sys = SimSystem::Su2 {
            a: a.clone(),
            b: b.clone(),
        };
        let res = simulate(&sys, &schedule, Some(&direct), &policy).unwrap();
        assert!(res.endpoint.dist(&direct) < 1e-12);
        assert!(res.residual_to_target.unwrap() < 1e-12);
        assert!(res.unitarity_drift < 1e-12);
        assert_eq!(res.segments.len(), 6);
        let logged_end = res.segments.last().unwrap().time;
        assert!((logged_end - schedule.total_time()).abs() < 1e-12);
    }
}

#[test]
fn one_spin_rejects_unsupported_segments() {
    let a = spinsteer::matrix::spin(2).scale_c(nalgebra::Complex::new(0.0, -1.0));
    let b = spinsteer::matrix::spin(1).scale_c(nalgebra::Complex::new(0.0, -1.0));
    let sys = SimSystem::Su2 { a, b };
    let policy = NumericPolicy::default();

    let with_uy = PulseSchedule {
        segments: vec![PulseSegment::Const {
            dt: 1.0,
            ux: 0.5,
            uy: 0.25,
        }],
    };
    assert!(matches!(
        simulate(&sys, &with_uy, None, &policy),
        Err(Error::InvalidSchedule(_))
    ));

    let modulated = PulseSchedule {
        segments: vec![PulseSegment::Modulated {
            dt: 1.0,
            modulation: Modulation {
                kbar: 0.5,
                omega: 1.0,
                phase: 0.0,
                sign_uy: 1.0,
            },
        }],
    };
    assert!(matches!(
        simulate(&sys, &modulated, None, &policy),
        Err(Error::InvalidSchedule(_))
    ));
}

#[test]
fn modulated_two_spin_matches_rotating_frame_route() {
    let mut rng = common::rng(0x51302);
    let sys = ising(0.9, 1.7, 2.3, 5.0);
    let sim_sys = SimSystem::TwoSpin(sys.clone());
    let policy = NumericPolicy::default();
    let omega = sys.gamma1() * sys.uz();

    let mut schedule = PulseSchedule::default();
    let mut exact = SquareMatrix::identity(4);
    let mut start = 0.0;
    for _ in 0..5 {
        let dt = 0.3 + 1.2 * rng.random::<f64>();
        let kbar = 0.2 + 1.0 * rng.random::<f64>();
        // Segment-local phase continuing a global drive cos(omega t + phi0).
        let phi0 = 2.0 * PI * rng.random::<f64>();
        let modulation = Modulation {
            kbar,
            omega,
            phase: omega * start + phi0,
            sign_uy: 1.0,
        };
        exact = rotating_frame_segment(&sys, dt, &modulation)
            .mul(&exact)
            .unwrap();
        schedule.segments.push(PulseSegment::Modulated { dt, modulation });
        start += dt;
    }

    let res = simulate(&sim_sys, &schedule, Some(&exact), &policy).unwrap();
    assert!(
        res.residual_to_target.unwrap() < 5e-9,
        "residual {}",
        res.residual_to_target.unwrap()
    );
    // Drift accumulates roughly linearly in the total step count.
    assert!(res.unitarity_drift < 1e-10, "drift {}", res.unitarity_drift);
}

#[test]
fn magnus_preserves_unitarity_over_long_drives() {
    // Each integrator step exponentiates a skew-Hermitian average, so the
    // propagator stays unitary to rounding no matter how long the drive runs.
    let sys = ising(1.1, 2.0, 3.0, 5.0);
    let sim_sys = SimSystem::TwoSpin(sys.clone());
    let policy = NumericPolicy::default();
    let omega = sys.gamma1() * sys.uz();
    let dt = 100.0 * PI / omega; // 50 modulation cycles
    let schedule = PulseSchedule {
        segments: vec![PulseSegment::Modulated {
            dt,
            modulation: Modulation {
                kbar: 0.8,
                omega,
                phase: 0.4,
                sign_uy: 1.0,
            },
        }],
    };
    let res = simulate(&sim_sys, &schedule, None, &policy).unwrap();
    assert!(res.unitarity_drift < 1e-9, "drift {}", res.unitarity_drift);
}

#[test]
fn tightening_tolerance_improves_accuracy() {
    let sys = ising(0.7, 1.3, 1.9, 5.0);
    let sim_sys = SimSystem::TwoSpin(sys.clone());
    let omega = sys.gamma1() * sys.uz();
    let modulation = Modulation {
        kbar: 0.9,
        omega,
        phase: 1.1,
        sign_uy: 1.0,
    };
    let dt = 7.5;
    let exact = rotating_frame_segment(&sys, dt, &modulation);
    let schedule = PulseSchedule {
        segments: vec![PulseSegment::Modulated { dt, modulation }],
    };

    let loose = NumericPolicy {
        sim_tol: 1e-4,
        ..NumericPolicy::default()
    };
    let tight = NumericPolicy {
        sim_tol: 1e-12,
        ..NumericPolicy::default()
    };
    let res_loose = simulate(&sim_sys, &schedule, Some(&exact), &loose).unwrap();
    let res_tight = simulate(&sim_sys, &schedule, Some(&exact), &tight).unwrap();
    let err_loose = res_loose.residual_to_target.unwrap();
    let err_tight = res_tight.residual_to_target.unwrap();
    assert!(err_tight <= err_loose);
    assert!(err_tight < 1e-10, "tight residual {err_tight}");
}

#[test]
fn zero_frequency_modulation_equals_constant_segment() {
    let sys = ising(0.8, 1.5, 0.0, 5.0);
    let sim_sys = SimSystem::TwoSpin(sys.clone());
    let policy = NumericPolicy::default();
    let kbar = 0.7;
    let phase = 0.9;
    let dt = 2.4;

    let modulated = PulseSchedule {
        segments: vec![PulseSegment::Modulated {
            dt,
            modulation: Modulation {
                kbar,
                omega: 0.0,
                phase,
                sign_uy: 1.0,
            },
        }],
    };
    let constant = PulseSchedule {
        segments: vec![PulseSegment::Const {
            dt,
            ux: kbar * phase.cos(),
            uy: kbar * phase.sin(),
        }],
    };
    let a = simulate(&sim_sys, &modulated, None, &policy).unwrap();
    let b = simulate(&sim_sys, &constant, None, &policy).unwrap();
    assert!(a.endpoint.dist(&b.endpoint) < 1e-12);
}

#[test]
fn target_dimension_mismatch_is_rejected() {
    let a = spinsteer::matrix::spin(2).scale_c(nalgebra::Complex::new(0.0, -1.0));
    let b = spinsteer::matrix::spin(1).scale_c(nalgebra::Complex::new(0.0, -1.0));
    let sys = SimSystem::Su2 { a, b };
    let policy = NumericPolicy::default();
    let target = SquareMatrix::identity(4);
    assert!(matches!(
        simulate(&sys, &PulseSchedule::default(), Some(&target), &policy),
        Err(Error::DimMismatch(_, _))
    ));
}

//! Rotation-group analogue of the alternating factorization: steer
//! X' = (Z1 or Z2) X on SO(3) through a word e^{Z1 a} (e^{Z1 x} e^{Z2 t}
//! e^{Z1 y})^m e^{Z1 g}.
//!
//! A rotation frame T aligns the Z1 axis with the third coordinate axis and
//! drops the tilted generator into the 2-3 plane:
//!
//!   T Z1 T^t = l1 G12,   T Z2 T^t = d (rho G12 + G23),   d > 0,
//!
//! where G12, G23 generate rotations in the 1-2 and 2-3 coordinate planes.
//! The target's Euler angles (alpha, beta, gamma) in that frame and the closed
//! form for e^{(rho G12 + G23) t} give every duration explicitly. A block can
//! realize a tilt rotation by angle b iff cos(b) >= 2 psi^2 - 1 with
//! psi = rho / sqrt(1 + rho^2), which fixes the minimal block count m.

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;
use crate::schedule::{normalize_steps, FactorSequence, FactorStep, FrameMeta, Gen};
use crate::su2::wrap;
use crate::NumericPolicy;

const PI: f64 = std::f64::consts::PI;
const TAU: f64 = std::f64::consts::TAU;

fn check_so3_algebra(z: &SquareMatrix) -> Result<()> {
    if z.dim() != 3 {
        return Err(Error::UnsupportedDim(z.dim()));
    }
    if !z.is_real_skew(1e-11) {
        let dev = (z.raw() + z.raw().transpose()).norm()
            + z.raw().iter().map(|c| c.im.abs()).sum::<f64>();
        return Err(Error::NotRealSkew(dev));
    }
    Ok(())
}

/// Axis vector w of a real skew generator: z v = w x v.
pub fn so3_axis(z: &SquareMatrix) -> Result<[f64; 3]> {
    check_so3_algebra(z)?;
    Ok([z.get(2, 1).re, z.get(0, 2).re, z.get(1, 0).re])
}

/// Generator pair in canonical position. `t_canon` is the frame rotation,
/// `scale1`, `scale2` the rotation rates of the generators, and `rho` the
/// tilt ratio of the framed Z2 (its 1-2 over 2-3 plane coefficients).
#[derive(Debug, Clone)]
pub struct So3Pair {
    pub z1: SquareMatrix,
    pub z2: SquareMatrix,
    pub t_canon: SquareMatrix,
    pub rho: f64,
    pub scale1: f64,
    pub scale2: f64,
}

impl So3Pair {
    /// Cosine of the angle between the generators, rho / sqrt(1 + rho^2).
    pub fn psi(&self) -> f64 {
        self.rho / (1.0 + self.rho * self.rho).sqrt()
    }
}

pub fn canonicalize_so3(
    z1: &SquareMatrix,
    z2: &SquareMatrix,
    policy: &NumericPolicy,
) -> Result<So3Pair> {
    check_so3_algebra(z1)?;
    check_so3_algebra(z2)?;
    let w1 = so3_axis(z1)?;
    let scale1 = (w1[0] * w1[0] + w1[1] * w1[1] + w1[2] * w1[2]).sqrt();
    if scale1 < 1e-12 {
        return Err(Error::SingularInput("Z1 vanishes".into()));
    }
    let v3 = [w1[0] / scale1, w1[1] / scale1, w1[2] / scale1];

    // Any unit vector orthogonal to the axis: project out the smallest
    // component's basis vector, which is at least 1/sqrt(3) away from v3.
    let j = (0..3)
        .min_by(|&a, &b| v3[a].abs().partial_cmp(&v3[b].abs()).unwrap())
        .unwrap();
    let mut v1 = [0.0; 3];
    v1[j] = 1.0;
    for i in 0..3 {
        v1[i] -= v3[j] * v3[i];
    }
    let n1 = (v1[0] * v1[0] + v1[1] * v1[1] + v1[2] * v1[2]).sqrt();
    for c in &mut v1 {
        *c /= n1;
    }
    let cross = |a: [f64; 3], b: [f64; 3]| {
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    };
    let mut v2 = cross(v3, v1);
    let mut v3 = v3;

    let build = |v1: [f64; 3], v2: [f64; 3], v3: [f64; 3]| {
        let rows = [v1, v2, v3];
        SquareMatrix::from_real_fn(3, |r, c| rows[r][c]).expect("dim 3 is supported")
    };
    let mut t1 = build(v1, v2, v3);
    // Orient the frame so the framed Z1 is +scale1 G12; flipping both v2 and
    // v3 keeps the frame right-handed.
    if t1.mul(z1)?.mul(&t1.transpose())?.get(0, 1).re < 0.0 {
        for i in 0..3 {
            v2[i] = -v2[i];
            v3[i] = -v3[i];
        }
        t1 = build(v1, v2, v3);
    }

    // Rotate within the 1-2 plane to kill the framed Z2's 1-3 component.
    let g = t1.mul(z2)?.mul(&t1.transpose())?;
    let a = g.get(0, 1).re;
    let b = g.get(0, 2).re;
    let c = g.get(1, 2).re;
    let r = b.hypot(c);
    if r <= policy.rank_tol * z2.frob_norm().max(1e-3) {
        return Err(Error::ProportionalGenerators(format!(
            "Z2 shares the Z1 axis (tilt part {r:.3e})"
        )));
    }
    let (sin_t, cos_t) = (-b / r, c / r);
    let t2 = SquareMatrix::from_real_fn(3, |rr, cc| match (rr, cc) {
        (0, 0) | (1, 1) => cos_t,
        (0, 1) => sin_t,
        (1, 0) => -sin_t,
        (2, 2) => 1.0,
        _ => 0.0,
    })?;
    let t_canon = t2.mul(&t1)?;

    let mut rho = a / r;
    if rho.abs() < 1e-12 {
        rho = 0.0;
    }
    Ok(So3Pair {
        z1: z1.clone(),
        z2: z2.clone(),
        t_canon,
        rho,
        scale1,
        scale2: a.hypot(r),
    })
}

/// Euler angles on SO(3): X = e^{G12 alpha} e^{G23 beta} e^{G12 gamma} with
/// alpha, gamma in [0, 2pi) and beta in [0, pi].
#[derive(Debug, Clone, Copy)]
pub struct EulerSo3 {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

pub fn euler_so3(x: &SquareMatrix) -> Result<EulerSo3> {
    if x.dim() != 3 {
        return Err(Error::UnsupportedDim(x.dim()));
    }
    let udev = x.unitary_deviation();
    if !x.is_real(1e-9) || udev > 1e-9 {
        return Err(Error::NotRealOrthogonal(udev));
    }
    let det = x.determinant();
    let sdev = (det - Complex::new(1.0, 0.0)).norm();
    if sdev > 1e-9 {
        return Err(Error::NotSpecial(sdev));
    }
    let e = |i: usize, j: usize| x.get(i, j).re;
    let sb = e(0, 2).hypot(e(1, 2));
    let beta = sb.atan2(e(2, 2));
    if sb < 1e-14 {
        // Rotation fixing the third axis (or reversing it): gamma absorbs
        // into alpha.
        let alpha = if e(2, 2) > 0.0 {
            e(0, 1).atan2(e(0, 0))
        } else {
            (-e(0, 1)).atan2(e(0, 0))
        };
        return Ok(EulerSo3 {
            alpha: wrap(alpha, TAU),
            beta,
            gamma: 0.0,
        });
    }
    Ok(EulerSo3 {
        alpha: wrap(e(0, 2).atan2(e(1, 2)), TAU),
        beta,
        gamma: wrap(e(2, 0).atan2(-e(2, 1)), TAU),
    })
}

/// Closed form for the tilted exponential: entries of
/// e^{(rho G12 + G23) phi / eta}, a rotation by angle phi about the tilted
/// axis, with eta = sqrt(1 + rho^2).
pub fn exp_z2_entries(rho: f64, phi: f64) -> [[f64; 3]; 3] {
    let eta2 = 1.0 + rho * rho;
    let eta = eta2.sqrt();
    let (s, c) = phi.sin_cos();
    let v = 1.0 - c;
    [
        [1.0 - v * rho * rho / eta2, s * rho / eta, v * rho / eta2],
        [-s * rho / eta, c, s / eta],
        [v * rho / eta2, -s / eta, 1.0 - v / eta2],
    ]
}

/// Whether one alternating block can realize a tilt rotation by `angle`:
/// cos(angle) >= 2 psi^2 - 1. Used verbatim by the block-count loop so
/// minimality is judged by the same fp comparison.
pub fn admissible_block_angle(psi: f64, angle: f64) -> bool {
    angle.cos() >= 2.0 * psi * psi - 1.0
}

/// Angles (x, phi, y) with e^{G12 x} E(rho, phi) e^{G12 y} = e^{G23 angle},
/// E the closed-form tilted rotation. x, y land in [0, 2pi), phi in [0, pi].
///
/// phi comes from matching the (3,3) entry, cos(phi) = (1 + rho^2)
/// cos(angle) - rho^2; x and y then align the third column and row, which
/// pins the whole rotation whenever sin(angle) != 0 and does no harm when it
/// is zero.
pub fn factor_small_rotation(rho: f64, angle: f64) -> Result<(f64, f64, f64)> {
    if !(-1e-12..=PI + 1e-12).contains(&angle) {
        return Err(Error::Precondition(format!(
            "block angle {angle} outside [0, pi]"
        )));
    }
    let eta2 = 1.0 + rho * rho;
    let arg = eta2 * angle.cos() - rho * rho;
    if arg < -1.0 - 1e-12 {
        return Err(Error::Precondition(format!(
            "angle {angle} inadmissible for tilt ratio rho = {rho}"
        )));
    }
    let phi = arg.clamp(-1.0, 1.0).acos();
    let en = exp_z2_entries(rho, phi);
    // atan2(0, 0) would be fine, but atan2(-0, -0) is -pi; the degenerate
    // columns mean "no constraint", which is angle zero.
    let x = if en[0][2] == 0.0 && en[1][2] == 0.0 {
        0.0
    } else {
        (-en[0][2]).atan2(en[1][2])
    };
    let y = if en[2][0] == 0.0 && en[2][1] == 0.0 {
        0.0
    } else {
        (-en[2][0]).atan2(-en[2][1])
    };
    Ok((wrap(x, TAU), phi, wrap(y, TAU)))
}

/// Alternating factorization of a rotation target.
#[derive(Debug, Clone)]
pub struct So3Factorization {
    /// Number of tilt blocks; at most 2m+1 factors after merging.
    pub m: u32,
    /// Euler angles of the target in the canonical frame.
    pub euler: EulerSo3,
    /// Leading Z1 angle inside each block.
    pub x: f64,
    /// Rotation angle of each Z2 leg.
    pub phi2: f64,
    /// Trailing Z1 angle inside each block.
    pub y: f64,
    pub sequence: FactorSequence,
}

/// Factor a rotation target over the pair (Z1, Z2):
///
///   X = e^{Z1 a'} (e^{Z1 x'} e^{Z2 t2} e^{Z1 y'})^m e^{Z1 g'},
///
/// with m minimal for the block admissibility condition. Steps are stored
/// chronologically; the pruned word has at most 2m+1 factors.
pub fn factorize_so3(
    z1: &SquareMatrix,
    z2: &SquareMatrix,
    xf: &SquareMatrix,
    policy: &NumericPolicy,
) -> Result<So3Factorization> {
    let pair = canonicalize_so3(z1, z2, policy)?;
    let t = &pair.t_canon;
    let x_canon = t.mul(xf)?.mul(&t.transpose())?;
    let euler = euler_so3(&x_canon)?;
    let psi = pair.psi();

    let mut m: u32 = 1;
    while !admissible_block_angle(psi, euler.beta / f64::from(m)) {
        m += 1;
        if m > 100_000_000 {
            return Err(Error::Verification(
                "block count diverged; generators nearly share an axis".into(),
            ));
        }
    }
    let (x, phi2, y) = factor_small_rotation(pair.rho, euler.beta / f64::from(m))?;

    let l1 = pair.scale1;
    let l2 = pair.scale2;
    let step = |gen: Gen, t: f64| FactorStep { gen, t, kbar: None };
    let mut audit = Vec::with_capacity(3 * m as usize + 2);
    audit.push(step(Gen::Z1, euler.gamma / l1));
    for _ in 0..m {
        audit.push(step(Gen::Z1, y / l1));
        audit.push(step(Gen::Z2, phi2 / l2));
        audit.push(step(Gen::Z1, x / l1));
    }
    audit.push(step(Gen::Z1, euler.alpha / l1));

    let mut sequence = FactorSequence {
        steps: normalize_steps(&audit),
        audit_steps: audit,
        bindings: vec![(Gen::Z1, z1.clone()), (Gen::Z2, z2.clone())],
        frame: Some(FrameMeta {
            transform: pair.t_canon.clone(),
            lambda1: l1,
            lambda2: l2,
            psi,
        }),
        residual: 0.0,
    };
    sequence.residual = sequence.product()?.dist(xf);
    Ok(So3Factorization {
        m,
        euler,
        x,
        phi2,
        y,
        sequence,
    })
}

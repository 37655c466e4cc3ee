//! Single-spin decompositions for X' = (A + B u) X on SU(2), |u| <= M.
//!
//! With Z1 := A + M B and Z2 := A - M B, a canonical frame W turns the pair
//! into W Z1 W* = -i 2 lambda1 S_z and W Z2 W* = -i (c S_z + d S_y), d > 0.
//! In that frame a target factors as
//!
//!   X = e^{Z1 a'} (e^{Z1 t1} e^{Z2 t2} e^{Z1 t3})^m e^{Z1 g'},
//!
//! an alternating bang-bang word whose length 2m+1 is within one factor of
//! the Lowenthal count s(psi), the minimal generic factor count for the pair
//! angle psi = <Z1,Z2>/(|Z1||Z2|). The duration formulas are closed-form in
//! (lambda1, lambda2, psi) and the generalized Euler angles of the target; no
//! iteration or optimization is involved, so endpoints are exact to roundoff.
//!
//! Proportional pairs (A = c B) fall back to a single-segment schedule from
//! the principal logarithm, the only reachable directions being e^{mu B}.

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::matrix::{inner_product, logm_su2, spin, SquareMatrix};
use crate::schedule::{
    normalize_steps, FactorSequence, FactorStep, FrameMeta, Gen, PulseSchedule, PulseSegment,
};
use crate::NumericPolicy;

const PI: f64 = std::f64::consts::PI;
const TAU: f64 = std::f64::consts::TAU;

/// Wrap into [0, period), mapping the rounded-up boundary to 0.
pub(crate) fn wrap(x: f64, period: f64) -> f64 {
    let r = x.rem_euclid(period);
    if r >= period {
        0.0
    } else {
        r
    }
}

fn minus_i_spin(axis: usize) -> SquareMatrix {
    spin(axis).scale_c(Complex::new(0.0, -1.0))
}

/// One-spin steering problem: drift A, control direction B, bound |u| <= M.
#[derive(Debug, Clone)]
pub struct Su2Problem {
    a: SquareMatrix,
    b: SquareMatrix,
    m_bound: f64,
}

impl Su2Problem {
    pub fn new(a: SquareMatrix, b: SquareMatrix, m_bound: f64) -> Result<Self> {
        for (name, m) in [("A", &a), ("B", &b)] {
            if m.dim() != 2 {
                return Err(Error::UnsupportedDim(m.dim()));
            }
            if !m.is_skew_hermitian(1e-11) {
                return Err(Error::NotSkewHermitian(m.skew_hermitian_deviation()));
            }
            if m.trace().norm() > 1e-11 * m.frob_norm().max(1.0) {
                return Err(Error::SingularInput(format!(
                    "{name} must be traceless (su(2))"
                )));
            }
        }
        if b.frob_norm() < 1e-12 {
            return Err(Error::SingularInput("control direction B vanishes".into()));
        }
        if !(m_bound > 0.0 && m_bound.is_finite()) {
            return Err(Error::SingularInput(format!(
                "control bound M = {m_bound} must be positive and finite"
            )));
        }
        Ok(Su2Problem { a, b, m_bound })
    }

    pub fn a(&self) -> &SquareMatrix {
        &self.a
    }

    pub fn b(&self) -> &SquareMatrix {
        &self.b
    }

    pub fn m_bound(&self) -> f64 {
        self.m_bound
    }

    /// Z1 = A + M B, the generator while the control rails high.
    pub fn z1(&self) -> SquareMatrix {
        self.a.add(&self.b.scale(self.m_bound)).expect("dims agree")
    }

    /// Z2 = A - M B.
    pub fn z2(&self) -> SquareMatrix {
        self.a.sub(&self.b.scale(self.m_bound)).expect("dims agree")
    }

    pub fn control_authority(&self) -> f64 {
        control_authority(&self.a, &self.b)
    }
}

/// k = sqrt(<A,A>/<B,B>): the control value at which the two bang generators
/// have equal norm and psi vanishes. Requires B != 0.
pub fn control_authority(a: &SquareMatrix, b: &SquareMatrix) -> f64 {
    let aa = inner_product(a, a).re;
    let bb = inner_product(b, b).re;
    (aa / bb).sqrt()
}

/// Signed cosine of the angle between two generators. Errors when they are
/// (anti)parallel to within 1e-12, where the alternating factorization
/// degenerates.
pub fn psi_angle(z1: &SquareMatrix, z2: &SquareMatrix) -> Result<f64> {
    let n1 = z1.frob_norm();
    let n2 = z2.frob_norm();
    if n1 < 1e-12 || n2 < 1e-12 {
        return Err(Error::ProportionalGenerators(
            "a bang generator vanishes".into(),
        ));
    }
    let psi = inner_product(z1, z2).re / (n1 * n2);
    if psi.abs() >= 1.0 - 1e-12 {
        return Err(Error::ProportionalGenerators(format!(
            "|psi| = {} is too close to 1",
            psi.abs()
        )));
    }
    Ok(psi)
}

/// psi as a function of the control rail M for the pair (A + MB, A - MB):
///
///   psi(M) = (k - M)(k + M) / sqrt((k^2 + M^2)^2 - 4 M^2 h^2),
///
/// h = <A,B>/<B,B>. The factored numerator makes psi(k) exactly zero when M
/// equals the control authority bitwise. Returns +-1 at a proportional pair's
/// degenerate corner (M = k, |h| = k).
pub fn psi_of_control(a: &SquareMatrix, b: &SquareMatrix, m: f64) -> f64 {
    let bb = inner_product(b, b).re;
    let h = inner_product(a, b).re / bb;
    let k = control_authority(a, b);
    let num = (k - m) * (k + m);
    let den2 = (k * k + m * m).powi(2) - 4.0 * m * m * h * h;
    let den = den2.max(0.0).sqrt();
    if den == 0.0 {
        return if num == 0.0 { 1.0 } else { num.signum() };
    }
    num / den
}

/// Lowenthal factor count s(psi): the least n such that every element of
/// SU(2) is a product of n alternating exponentials of the two generators,
/// for almost every pair with cosine psi. s = 3 at psi = 0 and grows without
/// bound as |psi| -> 1:
///
///   s = f + 2 for the unique f >= 2 with cos(pi/f) < |psi| <= cos(pi/(f+1)).
pub fn lowenthal_order(psi: f64) -> Result<u32> {
    let p = psi.abs();
    if p >= 1.0 {
        return Err(Error::ProportionalGenerators(format!(
            "|psi| = {p} admits no finite factor count"
        )));
    }
    if p <= 1e-12 {
        return Ok(3);
    }
    // Candidate from the closed form, then an exact walk on the fp cosine
    // comparisons so lattice-boundary values land in the right bracket.
    let q = PI / p.acos();
    let mut f = ((q - 1e-12).ceil() as i64 - 1).max(2) as u32;
    while (PI / f64::from(f + 1)).cos() < p {
        f += 1;
    }
    while f > 2 && (PI / f64::from(f)).cos() >= p {
        f -= 1;
    }
    Ok(f + 2)
}

/// Frame in which Z1 is a pure z rotation and Z2 tilts in the z-y plane:
/// W Z1 W* = -i 2 lambda1 S_z, W Z2 W* = -i (c S_z + d S_y), d > 0. Unique up
/// to a global phase, which conjugation cancels, so every consumer sees the
/// same normal form.
#[derive(Debug, Clone)]
pub struct CanonicalFrame {
    pub w: SquareMatrix,
    /// Eigenphase magnitude of Z1 (|Z1| = sqrt(2) lambda1).
    pub lambda1: f64,
    /// Eigenphase magnitude of Z2.
    pub lambda2: f64,
    /// <Z1,Z2>/(|Z1||Z2|) = c / (2 lambda2).
    pub psi: f64,
    /// Coefficient of -i S_z in the framed Z2.
    pub c: f64,
    /// Coefficient of -i S_y in the framed Z2; always positive.
    pub d: f64,
}

impl CanonicalFrame {
    pub(crate) fn meta(&self) -> FrameMeta {
        FrameMeta {
            transform: self.w.clone(),
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            psi: self.psi,
        }
    }
}

pub fn canonical_frame(
    z1: &SquareMatrix,
    z2: &SquareMatrix,
    policy: &NumericPolicy,
) -> Result<CanonicalFrame> {
    for m in [z1, z2] {
        if m.dim() != 2 {
            return Err(Error::UnsupportedDim(m.dim()));
        }
        if !m.is_skew_hermitian(1e-10) {
            return Err(Error::NotSkewHermitian(m.skew_hermitian_deviation()));
        }
        if m.trace().norm() > 1e-10 * m.frob_norm().max(1.0) {
            return Err(Error::SingularInput(
                "canonical frame needs traceless generators".into(),
            ));
        }
    }
    let n1 = z1.frob_norm();
    if n1 < 1e-12 {
        return Err(Error::SingularInput("Z1 vanishes".into()));
    }

    // Rows of T1 are the eigenvector duals of Z1, ordered so the +lambda1
    // eigenvector of iZ1 comes first: T1 Z1 T1* = -i diag(lambda1, -lambda1).
    let i = Complex::new(0.0, 1.0);
    let h = z1.raw().map(|z| z * i);
    let h = (&h + h.adjoint()).map(|z| z * Complex::new(0.5, 0.0));
    let se = h.symmetric_eigen();
    let (hi, lo) = if se.eigenvalues[0] >= se.eigenvalues[1] {
        (0, 1)
    } else {
        (1, 0)
    };
    let lambda1 = se.eigenvalues[hi];
    if lambda1 <= 1e-12 {
        return Err(Error::SingularInput("Z1 has no spectral gap".into()));
    }
    let v = &se.eigenvectors;
    let t1 = SquareMatrix::from_fn(2, |r, c| {
        let col = if r == 0 { hi } else { lo };
        v[(c, col)].conj()
    })?;

    // T1 Z2 T1* = -i (a S_y + b S_x + c S_z); rotate the x-y part onto S_y.
    let framed = t1.mul(z2)?.mul(&t1.dagger())?;
    let coeff = |axis: usize| 2.0 * inner_product(&framed, &minus_i_spin(axis)).re;
    let b_x = coeff(0);
    let a_y = coeff(1);
    let c_z = coeff(2);
    let r = a_y.hypot(b_x);
    if r <= policy.rank_tol * z2.frob_norm().max(1e-3) {
        return Err(Error::ProportionalGenerators(format!(
            "Z2 is parallel to Z1 (transverse part {r:.3e})"
        )));
    }
    let phase = Complex::new(a_y, b_x) / Complex::new(r, 0.0);
    let t2 = SquareMatrix::from_fn(2, |rr, cc| match (rr, cc) {
        (0, 0) => Complex::new(1.0, 0.0),
        (1, 1) => phase,
        _ => Complex::new(0.0, 0.0),
    })?;
    let w = t2.mul(&t1)?;
    let lambda2 = r.hypot(c_z) / 2.0;
    let psi = c_z / (2.0 * lambda2);
    Ok(CanonicalFrame {
        w,
        lambda1,
        lambda2,
        psi,
        c: c_z,
        d: r,
    })
}

/// Generalized Euler angles: X = e^{-i S_z alpha} e^{-i S_y beta}
/// e^{-i S_z gamma} with alpha, gamma in [0, 4pi) and beta in [0, pi].
#[derive(Debug, Clone, Copy)]
pub struct EulerTriple {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

/// Extract Euler angles from an SU(2) element. beta comes from
/// atan2(|X_21|, |X_11|), accurate at both degenerate axes; the snap
/// threshold for the axis-degenerate branches is 1e-14 so nearly-diagonal
/// targets still reconstruct at 1e-10.
pub fn euler_extract(x: &SquareMatrix) -> Result<EulerTriple> {
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
    let x11 = x.get(0, 0);
    let x21 = x.get(1, 0);
    let x22 = x.get(1, 1);
    let beta = 2.0 * x21.norm().atan2(x11.norm());
    let two_tau = 2.0 * TAU;
    if x21.norm() < 1e-14 {
        // Diagonal: only alpha + gamma is determined; put it all in alpha.
        return Ok(EulerTriple {
            alpha: wrap(-2.0 * x11.arg(), two_tau),
            beta,
            gamma: 0.0,
        });
    }
    if x11.norm() < 1e-14 {
        // Antidiagonal: only alpha - gamma is determined.
        return Ok(EulerTriple {
            alpha: wrap(2.0 * x21.arg(), two_tau),
            beta,
            gamma: 0.0,
        });
    }
    let p = x22.arg();
    let q = x21.arg();
    Ok(EulerTriple {
        alpha: wrap(p + q, two_tau),
        beta,
        gamma: wrap(p - q, two_tau),
    })
}

/// Alternating factorization of one target.
#[derive(Debug, Clone)]
pub struct Theorem2Factorization {
    /// Number of middle blocks; 2m+1 alternating factors after merging.
    pub m: u32,
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    /// Correction phase; zero exactly when psi = 0.
    pub phi: f64,
    /// Euler angles of the target in the canonical frame.
    pub euler: EulerTriple,
    pub sequence: FactorSequence,
}

/// Factor a target over the alternating pair (Z1, Z2):
///
///   X = e^{Z1 alpha/(2 l1)} (e^{Z1 t1} e^{Z2 t2} e^{Z1 t3})^m e^{Z1 gamma/(2 l1)}
///
/// with m minimal such that cos^2(beta/2m) >= psi^2. Durations are stored
/// chronologically (gamma leg first). |psi| below 1e-12 is snapped to zero,
/// which makes the orthogonal-pair schedule exactly the three-factor Euler
/// form.
pub fn factorize_theorem2(
    z1: &SquareMatrix,
    z2: &SquareMatrix,
    xf: &SquareMatrix,
    policy: &NumericPolicy,
) -> Result<Theorem2Factorization> {
    let frame = canonical_frame(z1, z2, policy)?;
    let xw = frame.w.mul(xf)?.mul(&frame.w.dagger())?;
    let euler = euler_extract(&xw)?;
    let mut psi = frame.psi;
    if psi.abs() < 1e-12 {
        psi = 0.0;
    }

    let beta = euler.beta;
    let p2 = psi * psi;
    let mut m: u32 = 1;
    while (beta / (2.0 * f64::from(m))).cos().powi(2) < p2 {
        m += 1;
        if m > 100_000_000 {
            return Err(Error::Verification(
                "factor count diverged; generators nearly proportional".into(),
            ));
        }
    }

    let c2 = (beta / (2.0 * f64::from(m))).cos().powi(2);
    let t2 = (((c2 - p2) / (1.0 - p2)).clamp(0.0, 1.0))
        .sqrt()
        .acos()
        / frame.lambda2;
    let lt2 = frame.lambda2 * t2;
    let phi = (-psi * lt2.sin()).atan2(lt2.cos());
    let t1 = (if phi >= 0.0 { phi } else { TAU + phi }) / (2.0 * frame.lambda1);
    let t3 = t1;
    let leg_a = euler.alpha / (2.0 * frame.lambda1);
    let leg_g = euler.gamma / (2.0 * frame.lambda1);

    let step = |gen: Gen, t: f64| FactorStep { gen, t, kbar: None };
    let mut audit = Vec::with_capacity(3 * m as usize + 2);
    audit.push(step(Gen::Z1, leg_g));
    for _ in 0..m {
        audit.push(step(Gen::Z1, t3));
        audit.push(step(Gen::Z2, t2));
        audit.push(step(Gen::Z1, t1));
    }
    audit.push(step(Gen::Z1, leg_a));

    let mut sequence = FactorSequence {
        steps: normalize_steps(&audit),
        audit_steps: audit,
        bindings: vec![(Gen::Z1, z1.clone()), (Gen::Z2, z2.clone())],
        frame: Some(frame.meta()),
        residual: 0.0,
    };
    sequence.residual = sequence.product()?.dist(xf);
    Ok(Theorem2Factorization {
        m,
        t1,
        t2,
        t3,
        phi,
        euler,
        sequence,
    })
}

/// Bang-bang schedule at rail amplitude `amp` for the pair (A + amp B,
/// A - amp B). Segments follow the audit order of the factorization, so the
/// control word reads +...+-+...+ chronologically.
fn bang_schedule(
    a: &SquareMatrix,
    b: &SquareMatrix,
    amp: f64,
    xf: &SquareMatrix,
    policy: &NumericPolicy,
) -> Result<PulseSchedule> {
    let z1 = a.add(&b.scale(amp))?;
    let z2 = a.sub(&b.scale(amp))?;
    let fact = factorize_theorem2(&z1, &z2, xf, policy)?;
    let segments = fact
        .sequence
        .audit_steps
        .iter()
        .filter(|s| s.t != 0.0)
        .map(|s| PulseSegment::Const {
            dt: s.t,
            ux: if s.gen == Gen::Z1 { amp } else { -amp },
            uy: 0.0,
        })
        .collect();
    Ok(PulseSchedule { segments })
}

/// Steer with controls +-k, the amplitude that makes psi vanish: the
/// three-factor Euler schedule. Needs A != 0 and k within the control bound.
pub fn steer_theorem1(
    problem: &Su2Problem,
    xf: &SquareMatrix,
    policy: &NumericPolicy,
) -> Result<PulseSchedule> {
    let k = problem.control_authority();
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::Precondition(
            "equal-norm steering needs a nonzero drift A".into(),
        ));
    }
    if k > problem.m_bound * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!(
            "control authority k = {k} exceeds the bound M = {}",
            problem.m_bound
        )));
    }
    bang_schedule(&problem.a, &problem.b, k, xf, policy)
}

/// Steer an arbitrary target with bang-bang controls at the effective rail
/// min(M, k); proportional pairs fall back to the log-projection schedule.
pub fn steer_theorem3(
    problem: &Su2Problem,
    xf: &SquareMatrix,
    policy: &NumericPolicy,
) -> Result<PulseSchedule> {
    let k = problem.control_authority();
    let amp = if k.is_finite() && k > 0.0 {
        problem.m_bound.min(k)
    } else {
        problem.m_bound
    };
    match bang_schedule(&problem.a, &problem.b, amp, xf, policy) {
        Ok(s) => Ok(s),
        Err(Error::ProportionalGenerators(_)) | Err(Error::SingularInput(_)) => {
            steer_proportional(problem, xf, policy)
        }
        Err(e) => Err(e),
    }
}

/// Proportional pair (A = c B): the reachable set is the one-parameter
/// subgroup of B, so project the principal log onto B and evolve once with a
/// railed control. Unreachable targets (log not parallel to B) error.
pub fn steer_proportional(
    problem: &Su2Problem,
    xf: &SquareMatrix,
    policy: &NumericPolicy,
) -> Result<PulseSchedule> {
    let a = &problem.a;
    let b = &problem.b;
    let bb = inner_product(b, b).re;
    let c = inner_product(a, b).re / bb;
    let off = a.sub(&b.scale(c))?.frob_norm();
    if off > policy.rank_tol * a.frob_norm().max(1.0) {
        return Err(Error::Precondition(format!(
            "generators are not proportional (off-axis part {off:.3e})"
        )));
    }
    let lg = logm_su2(xf)?;
    let s = inner_product(&lg.log, b).re / bb;
    let resid = lg.log.sub(&b.scale(s))?.frob_norm();
    if resid > policy.rank_tol * lg.log.frob_norm().max(1.0) {
        return Err(Error::Unreachable(format!(
            "target leaves the one-parameter subgroup of B (residual {resid:.3e})"
        )));
    }
    let lambda_b = b.frob_norm() / 2f64.sqrt();
    let period = TAU / lambda_b;
    let s_pos = wrap(s, period);
    if s_pos == 0.0 {
        return Ok(PulseSchedule::default());
    }
    let m = problem.m_bound;
    let (u, t) = if c + m > 0.0 {
        (m, s_pos / (c + m))
    } else {
        (-m, (s_pos - period) / (c - m))
    };
    Ok(PulseSchedule {
        segments: vec![PulseSegment::Const { dt: t, ux: u, uy: 0.0 }],
    })
}

/// Stretch a schedule to an exact total duration without moving its endpoint:
/// append [evolve at +amp for tbar] steer(Y1) [evolve at +amp for tbar]
/// steer(Y2), where Y1, Y2 conjugate the frame's z rotation to its inverse
/// (a pi turn about the framed y axis), so the two padded evolutions cancel.
pub fn pad_to_time(
    problem: &Su2Problem,
    schedule: &PulseSchedule,
    t_target: f64,
    policy: &NumericPolicy,
) -> Result<PulseSchedule> {
    let k = problem.control_authority();
    let amp = if k.is_finite() && k > 0.0 {
        problem.m_bound.min(k)
    } else {
        problem.m_bound
    };
    let z1 = problem.a.add(&problem.b.scale(amp))?;
    let z2 = problem.a.sub(&problem.b.scale(amp))?;
    let frame = canonical_frame(&z1, &z2, policy)?;

    // C1 = e^{i S_y pi}, C2 = e^{-i S_y pi}: C2 e^{Z t} C1 = e^{-Z t} for the
    // framed Z1, which is what cancels the two padding evolutions.
    let c1 = SquareMatrix::from_real_fn(2, |r, c| match (r, c) {
        (0, 1) => 1.0,
        (1, 0) => -1.0,
        _ => 0.0,
    })?;
    let c2 = c1.dagger();
    let y1 = frame.w.dagger().mul(&c1)?.mul(&frame.w)?;
    let y2 = frame.w.dagger().mul(&c2)?.mul(&frame.w)?;
    let s1 = steer_theorem3(problem, &y1, policy)?;
    let s2 = steer_theorem3(problem, &y2, policy)?;

    let need = schedule.total_time() + s1.total_time() + s2.total_time();
    let tbar = (t_target - need) / 2.0;
    if tbar < -1e-12 * t_target.abs().max(1.0) {
        return Err(Error::Precondition(format!(
            "deadline {t_target} is below the minimum {need} for this target"
        )));
    }
    let tbar = tbar.max(0.0);

    let mut segments = schedule.segments.clone();
    segments.push(PulseSegment::Const {
        dt: tbar,
        ux: amp,
        uy: 0.0,
    });
    segments.extend(s1.segments);
    segments.push(PulseSegment::Const {
        dt: tbar,
        ux: amp,
        uy: 0.0,
    });
    segments.extend(s2.segments);
    let out = PulseSchedule { segments }.pruned();

    let err = (out.total_time() - t_target).abs();
    if err > 1e-12 * t_target.abs().max(1.0) {
        return Err(Error::Verification(format!(
            "padded total misses the deadline by {err:.3e}"
        )));
    }
    Ok(out)
}

//! Two coupled spin-1/2 systems under a shared transverse field:
//!
//!   X' = (A + Bx ux + By uy + Bz uz) X,   X in SU(4),
//!
//! with exchange drift A = -i J (a1 I1x I2x + a2 I1y I2y + a3 I1z I2z) and
//! collective controls Bk = -i (g1 I1k + g2 I2k). The isotropic part
//! D = -i J (I1.I2) is central for the whole control algebra, so it factors
//! out of every reachability question; what remains is steered inside the
//! fixed frame below.
//!
//! The frame T (a Bell-type basis) simultaneously diagonalizes the exchange
//! family and compresses homonuclear controls into a real 3x3 block:
//!
//!   T D T* = -i (J/4) diag(-3, 1, 1, 1),
//!   T Bk T* = g x (real skew in the lower 3x3 block),
//!
//! which exposes the product structure SU(2)-collective x SU(3)-block used by
//! the schedule synthesizer.

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lie::{lie_closure, LieBasis};
use crate::matrix::{expm, spin, SquareMatrix};
use crate::NumericPolicy;

const PI: f64 = std::f64::consts::PI;

/// Two-spin control system. Immutable once constructed; the frame identities
/// are verified during construction, so a value of this type always carries a
/// consistent operator set.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "SpinSystemParams", into = "SpinSystemParams")]
pub struct SpinSystem {
    gamma1: f64,
    gamma2: f64,
    j: f64,
    uz: f64,
    m_bound: f64,
    abc: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SpinSystemParams {
    gamma1: f64,
    gamma2: f64,
    j: f64,
    uz: f64,
    m_bound: f64,
    abc: [f64; 3],
}

impl TryFrom<SpinSystemParams> for SpinSystem {
    type Error = Error;
    fn try_from(p: SpinSystemParams) -> Result<Self> {
        SpinSystem::new(p.gamma1, p.gamma2, p.j, p.uz, p.m_bound, p.abc)
    }
}

impl From<SpinSystem> for SpinSystemParams {
    fn from(s: SpinSystem) -> Self {
        SpinSystemParams {
            gamma1: s.gamma1,
            gamma2: s.gamma2,
            j: s.j,
            uz: s.uz,
            m_bound: s.m_bound,
            abc: s.abc,
        }
    }
}

/// One-spin operator acting on slot 0 or 1 of the pair.
fn spin_op(slot: usize, axis: usize) -> SquareMatrix {
    let s = spin(axis);
    let id = SquareMatrix::identity(2);
    match slot {
        0 => s.kron(&id).expect("2x2 inputs"),
        _ => id.kron(&s).expect("2x2 inputs"),
    }
}

/// S_axis (x) S_axis, the exchange component along one axis.
fn exchange(axis: usize) -> SquareMatrix {
    let s = spin(axis);
    s.kron(&s).expect("2x2 inputs")
}

impl SpinSystem {
    pub fn new(
        gamma1: f64,
        gamma2: f64,
        j: f64,
        uz: f64,
        m_bound: f64,
        abc: [f64; 3],
    ) -> Result<Self> {
        for (name, v) in [
            ("gamma1", gamma1),
            ("gamma2", gamma2),
            ("j", j),
            ("uz", uz),
            ("m_bound", m_bound),
            ("abc[0]", abc[0]),
            ("abc[1]", abc[1]),
            ("abc[2]", abc[2]),
        ] {
            if !v.is_finite() {
                return Err(Error::SingularInput(format!("{name} must be finite")));
            }
        }
        if gamma1 == 0.0 && gamma2 == 0.0 {
            return Err(Error::SingularInput(
                "both field couplings vanish; the system has no controls".into(),
            ));
        }
        if m_bound <= 0.0 {
            return Err(Error::SingularInput(format!(
                "control bound M = {m_bound} must be positive"
            )));
        }
        let sys = SpinSystem {
            gamma1,
            gamma2,
            j,
            uz,
            m_bound,
            abc,
        };
        sys.verify_frame()?;
        Ok(sys)
    }

    pub fn gamma1(&self) -> f64 {
        self.gamma1
    }

    pub fn gamma2(&self) -> f64 {
        self.gamma2
    }

    pub fn j(&self) -> f64 {
        self.j
    }

    pub fn uz(&self) -> f64 {
        self.uz
    }

    pub fn m_bound(&self) -> f64 {
        self.m_bound
    }

    pub fn abc(&self) -> [f64; 3] {
        self.abc
    }

    pub fn is_homonuclear(&self) -> bool {
        (self.gamma1 - self.gamma2).abs()
            <= 1e-12 * self.gamma1.abs().max(self.gamma2.abs()).max(1.0)
    }

    pub fn is_ising(&self) -> bool {
        self.abc[0] == 0.0 && self.abc[1] == 0.0 && self.abc[2] == 1.0
    }

    /// Exchange drift -i J sum_k abc[k] S_k (x) S_k.
    pub fn a(&self) -> SquareMatrix {
        let mut sum = SquareMatrix::zeros(4);
        for k in 0..3 {
            if self.abc[k] != 0.0 {
                sum = sum
                    .add(&exchange(k).scale(self.abc[k]))
                    .expect("dims agree");
            }
        }
        sum.scale_c(Complex::new(0.0, -self.j))
    }

    /// Collective control direction -i (g1 I1k + g2 I2k).
    pub fn b(&self, axis: usize) -> SquareMatrix {
        spin_op(0, axis)
            .scale(self.gamma1)
            .add(&spin_op(1, axis).scale(self.gamma2))
            .expect("dims agree")
            .scale_c(Complex::new(0.0, -1.0))
    }

    /// Isotropic exchange -i J (I1.I2), central for drift and controls alike.
    pub fn d_iso(&self) -> SquareMatrix {
        exchange(0)
            .add(&exchange(1))
            .expect("dims agree")
            .add(&exchange(2))
            .expect("dims agree")
            .scale_c(Complex::new(0.0, -self.j))
    }

    fn coupling_component(&self, axis: usize) -> SquareMatrix {
        let others: [usize; 2] = match axis {
            0 => [1, 2],
            1 => [0, 2],
            _ => [0, 1],
        };
        exchange(axis)
            .scale(2.0)
            .sub(&exchange(others[0]))
            .expect("dims agree")
            .sub(&exchange(others[1]))
            .expect("dims agree")
            .scale_c(Complex::new(0.0, -self.j / 3.0))
    }

    /// Traceless z component of the exchange family: for an Ising system the
    /// drift splits as A = D/3 + a1. Eigenphases {0, J/3, -J/6, -J/6}.
    pub fn a1(&self) -> SquareMatrix {
        self.coupling_component(2)
    }

    /// y component; a1 + a2 + a3 = 0 and the family commutes.
    pub fn a2(&self) -> SquareMatrix {
        self.coupling_component(1)
    }

    /// x component.
    pub fn a3(&self) -> SquareMatrix {
        self.coupling_component(0)
    }

    /// The fixed Bell-type frame. Hard-coded; its defining identities are
    /// re-verified on construction.
    pub fn frame_t(&self) -> SquareMatrix {
        frame_matrix()
    }

    fn verify_frame(&self) -> Result<()> {
        let t = frame_matrix();
        if !t.is_unitary(1e-12) {
            return Err(Error::Verification("frame matrix is not unitary".into()));
        }
        let conj = |m: &SquareMatrix| {
            t.mul(m)
                .expect("dims agree")
                .mul(&t.dagger())
                .expect("dims agree")
        };
        let scale = self.j.abs().max(1.0);
        let diag = |v: [f64; 4]| {
            SquareMatrix::from_fn(4, |r, c| {
                if r == c {
                    Complex::new(0.0, -self.j / 4.0 * v[r])
                } else {
                    Complex::new(0.0, 0.0)
                }
            })
            .expect("dim 4 is supported")
        };
        if conj(&self.d_iso()).dist(&diag([-3.0, 1.0, 1.0, 1.0])) > 1e-11 * scale {
            return Err(Error::Verification(
                "frame does not diagonalize the isotropic exchange".into(),
            ));
        }
        if self.is_ising() {
            if conj(&self.a()).dist(&diag([-1.0, -1.0, 1.0, 1.0])) > 1e-11 * scale
                || conj(&self.a1()).dist(&diag([0.0, -4.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0]))
                    > 1e-11 * scale
            {
                return Err(Error::Verification(
                    "frame does not diagonalize the Ising exchange".into(),
                ));
            }
        }
        if self.is_homonuclear() {
            let g = self.gamma1;
            let gs = g.abs().max(1.0);
            // Bx -> g S23, By -> -g S24, Bz -> g S34 (1-indexed planes).
            let placements: [(usize, (usize, usize), f64); 3] =
                [(0, (1, 2), g), (1, (1, 3), -g), (2, (2, 3), g)];
            for (axis, (r, c), val) in placements {
                let want = SquareMatrix::from_real_fn(4, |i, k| {
                    if (i, k) == (r, c) {
                        val
                    } else if (i, k) == (c, r) {
                        -val
                    } else {
                        0.0
                    }
                })?;
                if conj(&self.b(axis)).dist(&want) > 1e-11 * gs {
                    return Err(Error::Verification(format!(
                        "frame does not block-compress control axis {axis}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Dynamical algebra class of {A + Bz uz, Bx, By}.
    pub fn classify(&self, policy: &NumericPolicy) -> Result<ControlClass> {
        let drift = self.a().add(&self.b(2).scale(self.uz))?;
        let gens = vec![drift, self.b(0), self.b(1)];
        let basis = lie_closure(&gens, policy)?;
        Ok(match basis.dim() {
            15 => ControlClass::FullyControllable,
            9 => ControlClass::CollectiveWithCoupling,
            4 => ControlClass::CollectiveIsotropic,
            d => ControlClass::Other(d),
        })
    }

    /// Orthogonal split of the coupled homonuclear algebra: k is the
    /// collective rotation algebra, p the exchange orbit under it, and the
    /// pair satisfies [k,k] in k, [k,p] in p, [p,p] in k.
    pub fn cartan_split(&self, policy: &NumericPolicy) -> Result<CartanSplit> {
        if !self.is_homonuclear() {
            return Err(Error::Precondition(
                "the collective split needs equal field couplings".into(),
            ));
        }
        if self.j == 0.0 {
            return Err(Error::Precondition(
                "the exchange orbit is empty without coupling".into(),
            ));
        }
        let k = lie_closure(&[self.b(0), self.b(1), self.b(2)], policy)?;
        if k.dim() != 3 {
            return Err(Error::Verification(format!(
                "collective algebra has dimension {}, expected 3",
                k.dim()
            )));
        }
        let mut p = LieBasis::empty(4);
        p.try_insert(&self.a1(), policy.rank_tol);
        let mut fresh = vec![self.a1()];
        while let Some(m) = fresh.pop() {
            for kb in k.elements() {
                let br = kb.commutator(&m)?;
                if p.try_insert(&br, policy.rank_tol) {
                    fresh.push(p.element(p.dim() - 1).clone());
                }
            }
        }
        if p.dim() != 5 {
            return Err(Error::Verification(format!(
                "exchange orbit has dimension {}, expected 5",
                p.dim()
            )));
        }
        let split = CartanSplit { k, p };
        split.verify(policy)?;
        Ok(split)
    }

    /// Assemble e^{D t/3} K1 e^{a1 t1 + a2 t2 + a3 t3} K2 with t = t1+t2+t3:
    /// the normal form of any evolution of total duration t whose collective
    /// legs are K1, K2. The exchange family commutes, so the middle factor is
    /// a single exponential.
    pub fn kak_element(
        &self,
        k1: &SquareMatrix,
        alphas: [f64; 3],
        k2: &SquareMatrix,
    ) -> Result<SquareMatrix> {
        for (m, name) in [(k1, "K1"), (k2, "K2")] {
            if m.dim() != 4 {
                return Err(Error::UnsupportedDim(m.dim()));
            }
            if !m.is_unitary(1e-9) {
                return Err(Error::NotUnitary(m.unitary_deviation()));
            }
            let _ = name;
        }
        for a in alphas {
            if !(a.is_finite() && a >= -1e-12) {
                return Err(Error::Precondition(format!(
                    "exchange durations must be nonnegative, got {a}"
                )));
            }
        }
        let total: f64 = alphas.iter().sum();
        let mid = self
            .a1()
            .scale(alphas[0])
            .add(&self.a2().scale(alphas[1]))?
            .add(&self.a3().scale(alphas[2]))?;
        let head = expm(&self.d_iso(), total / 3.0)?;
        head.mul(k1)?.mul(&expm(&mid, 1.0)?)?.mul(k2)
    }

    /// Reachability pattern test at large times. For lab duration
    /// t >= 36 pi / |J| the reachable set of the homonuclear Ising system is
    /// exactly e^{D t/3} x (collective-frame SU(3) block), so membership
    /// reduces to: strip the central factor, move to the frame, and check the
    /// block pattern to `policy.membership_tol`.
    pub fn member_large_time(
        &self,
        xf: &SquareMatrix,
        t_lab: f64,
        policy: &NumericPolicy,
    ) -> Result<bool> {
        if self.j == 0.0 {
            return Err(Error::Precondition("no exchange coupling".into()));
        }
        let t_min = 36.0 * PI / self.j.abs();
        if t_lab < t_min - 1e-9 {
            return Err(Error::Precondition(format!(
                "membership pattern is only exact for t >= {t_min:.6}, got {t_lab}"
            )));
        }
        if xf.dim() != 4 {
            return Err(Error::UnsupportedDim(xf.dim()));
        }
        if !xf.is_unitary(1e-9) {
            return Err(Error::NotUnitary(xf.unitary_deviation()));
        }
        let stripped = expm(&self.d_iso(), -t_lab / 3.0)?.mul(xf)?;
        let t = frame_matrix();
        let s = t.mul(&stripped)?.mul(&t.dagger())?;

        let tol = policy.membership_tol;
        if (s.get(0, 0) - Complex::new(1.0, 0.0)).norm() > tol {
            return Ok(false);
        }
        for i in 1..4 {
            if s.get(0, i).norm() > tol || s.get(i, 0).norm() > tol {
                return Ok(false);
            }
        }
        // Lower block must be special unitary; unitarity follows from s, so
        // only the determinant phase is at stake.
        let e = |i: usize, j: usize| s.get(i + 1, j + 1);
        let det = e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1))
            - e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0))
            + e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0));
        Ok((det - Complex::new(1.0, 0.0)).norm() <= tol)
    }
}

/// How much of su(4) the controls reach.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ControlClass {
    /// Distinct field couplings: the full 15-dimensional algebra.
    FullyControllable,
    /// Equal couplings with anisotropic exchange: central direction plus an
    /// 8-dimensional block, 9 in total.
    CollectiveWithCoupling,
    /// Equal couplings with isotropic exchange: central direction plus the
    /// 3-dimensional collective algebra.
    CollectiveIsotropic,
    Other(usize),
}

impl ControlClass {
    pub fn algebra_dim(&self) -> usize {
        match self {
            ControlClass::FullyControllable => 15,
            ControlClass::CollectiveWithCoupling => 9,
            ControlClass::CollectiveIsotropic => 4,
            ControlClass::Other(d) => *d,
        }
    }
}

/// Collective rotations k and exchange directions p with the symmetric-space
/// bracket relations.
#[derive(Debug, Clone)]
pub struct CartanSplit {
    pub k: LieBasis,
    pub p: LieBasis,
}

impl CartanSplit {
    fn verify(&self, policy: &NumericPolicy) -> Result<()> {
        let tol = policy.algebra_tol.max(1e-10);
        let check = |target: &LieBasis, br: &SquareMatrix, what: &str| -> Result<()> {
            if target.residual(br) > tol * br.frob_norm().max(1.0) {
                return Err(Error::Verification(format!(
                    "bracket relation {what} fails"
                )));
            }
            Ok(())
        };
        for i in 0..self.k.dim() {
            for j in 0..self.k.dim() {
                check(&self.k, &self.k.element(i).commutator(self.k.element(j))?, "[k,k] in k")?;
            }
            for j in 0..self.p.dim() {
                check(&self.p, &self.k.element(i).commutator(self.p.element(j))?, "[k,p] in p")?;
            }
        }
        for i in 0..self.p.dim() {
            for j in 0..self.p.dim() {
                check(&self.k, &self.p.element(i).commutator(self.p.element(j))?, "[p,p] in k")?;
            }
        }
        Ok(())
    }
}

/// The hard-coded frame.
fn frame_matrix() -> SquareMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let z = Complex::new(0.0, 0.0);
    let r = |x: f64| Complex::new(x * h, 0.0);
    let im = |x: f64| Complex::new(0.0, x * h);
    let rows = [
        [z, im(1.0), im(-1.0), z],
        [z, r(1.0), r(1.0), z],
        [im(-1.0), z, z, im(-1.0)],
        [r(-1.0), z, z, r(1.0)],
    ];
    SquareMatrix::from_fn(4, |i, j| rows[i][j]).expect("dim 4 is supported")
}

/// Factor a collective rotation K = L (x) L back to L in SU(2), up to the
/// shared sign. Fails when K is not a Kronecker square.
pub fn collective_factor(k: &SquareMatrix) -> Result<SquareMatrix> {
    if k.dim() != 4 {
        return Err(Error::UnsupportedDim(k.dim()));
    }
    if !k.is_unitary(1e-9) {
        return Err(Error::NotUnitary(k.unitary_deviation()));
    }
    // K splits into 2x2 blocks L[i][j] * L; scale out of the largest one.
    let block = |bi: usize, bj: usize| {
        SquareMatrix::from_fn(2, |r, c| k.get(2 * bi + r, 2 * bj + c)).expect("dim 2")
    };
    let (mut bi, mut bj, mut best) = (0, 0, -1.0);
    for i in 0..2 {
        for j in 0..2 {
            let n = block(i, j).frob_norm();
            if n > best {
                best = n;
                bi = i;
                bj = j;
            }
        }
    }
    let b = block(bi, bj);
    // b = L[bi][bj] L, so b[bi][bj] = L[bi][bj]^2.
    let corner = b.get(bi, bj);
    if corner.norm() < 1e-12 {
        return Err(Error::SingularInput(
            "dominant block has a vanishing matching entry".into(),
        ));
    }
    let root = corner.sqrt();
    let l = b.scale_c(Complex::new(1.0, 0.0) / root);
    // Polish the determinant phase so l lands in SU(2).
    let det = l.determinant();
    if det.norm() < 1e-12 {
        return Err(Error::SingularInput("factor candidate is singular".into()));
    }
    let phase = Complex::from_polar((1.0 / det.norm()).sqrt(), -det.arg() / 2.0);
    let l = l.scale_c(phase);
    let back = l.kron(&l)?;
    if back.dist(k) > 1e-10 * k.frob_norm().max(1.0) {
        return Err(Error::Verification(
            "input is not a collective rotation L (x) L".into(),
        ));
    }
    Ok(l)
}

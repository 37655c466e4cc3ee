//! Control-schedule synthesis for one- and two-spin bilinear systems.
//!
//! The library steers right-invariant systems X' = (A + sum_k B_k u_k) X on
//! SU(2), SO(3), and SU(4) to arbitrary group targets with piecewise-constant
//! (or phase-modulated) controls, by explicit Lie-group factorizations rather
//! than numerical optimization. Every schedule it emits can be replayed through
//! the built-in simulator and checked against the target to roundoff-level
//! accuracy.
//!
//! Layout:
//! - [`matrix`]: dense complex matrices of dimension 2..4, exact exponentials
//!   of skew-Hermitian generators, the SU(2) logarithm, Kronecker products.
//! - [`lie`]: real-span Lie closures and orthonormal bases, for controllability
//!   rank decisions.
//! - [`schedule`]: factor sequences (group-level plans) and pulse schedules
//!   (time-domain control programs), with their JSON forms.
//! - [`su2`]: single-spin decompositions: generalized Euler angles, the
//!   canonical frame, minimal-factor-count switching schedules, exact
//!   total-time padding.
//! - [`so3`]: the rotation-group analogue.
//! - [`twospin`]: the two-spin Ising model, its diagonalizing coordinate
//!   change, controllability classes, and Cartan/KAK structure.
//! - [`sim`]: forward simulation (exact per constant segment, 4th-order Magnus
//!   for modulated segments) and schedule verification.
//! - [`synth`]: end-to-end synthesis for the homonuclear two-spin system,
//!   producing lab-frame schedules with exact total-time bookkeeping.

pub mod error;
pub mod lie;
pub mod matrix;
pub mod schedule;
pub mod sim;
pub mod so3;
pub mod su2;
pub mod synth;
pub mod twospin;

pub use error::{Error, Result};

/// Tolerance policy threaded through rank decisions, identity checks, and
/// simulation acceptance. One instance per pipeline; the defaults are used by
/// every test in the acceptance suite.
#[derive(Debug, Clone, Copy)]
pub struct NumericPolicy {
    /// Rank / linear-independence decisions (Lie closure, frame construction).
    pub rank_tol: f64,
    /// Algebraic identity checks on constructed objects (conjugation tables,
    /// orthonormality).
    pub algebra_tol: f64,
    /// Step-doubling acceptance for the modulated-segment integrator.
    pub sim_tol: f64,
    /// Subgroup-membership and block-form checks.
    pub membership_tol: f64,
}

impl Default for NumericPolicy {
    fn default() -> Self {
        NumericPolicy {
            rank_tol: 1e-9,
            algebra_tol: 1e-11,
            sim_tol: 1e-10,
            membership_tol: 1e-8,
        }
    }
}

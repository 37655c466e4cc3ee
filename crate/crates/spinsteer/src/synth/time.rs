//! Exact duration bookkeeping for synthesized schedules.
//!
//! Every block the synthesizer emits has a duration of the form
//! `n * pi/36 + r`: steering windows and conjugation legs live on the
//! `pi/36` lattice (quarter turns, pi windows, and thirds thereof), while
//! free-evolution legs contribute small real remainders. Tracking the two
//! parts separately keeps the lattice part exact under addition and
//! subtraction, so the grand total of a schedule with hundreds of factors
//! matches its declared value to the last few ulps instead of drifting.

use std::ops::{Add, Sub};

/// A duration `n36 * (pi/36) + rem`, with the lattice part held exactly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PiTime {
    /// Number of `pi/36` lattice units.
    pub n36: i64,
    /// Real remainder off the lattice.
    pub rem: f64,
}

impl PiTime {
    pub const ZERO: PiTime = PiTime { n36: 0, rem: 0.0 };

    /// A duration of exactly `n` lattice units of `pi/36`.
    pub fn from_pi_over_36(n: i64) -> Self {
        PiTime { n36: n, rem: 0.0 }
    }

    /// A duration with no lattice part.
    pub fn from_real(rem: f64) -> Self {
        PiTime { n36: 0, rem }
    }

    /// Numeric value in scaled-time units.
    pub fn value(self) -> f64 {
        (self.n36 as f64) * (std::f64::consts::PI / 36.0) + self.rem
    }

    /// Exact third where the lattice permits, folding any indivisible
    /// lattice residue into the float remainder.
    pub fn div3(self) -> Self {
        let q = self.n36.div_euclid(3);
        let r = self.n36.rem_euclid(3);
        PiTime {
            n36: q,
            rem: (r as f64) * (std::f64::consts::PI / 36.0) / 3.0 + self.rem / 3.0,
        }
    }
}

impl Add for PiTime {
    type Output = PiTime;
    fn add(self, other: PiTime) -> PiTime {
        PiTime {
            n36: self.n36 + other.n36,
            rem: self.rem + other.rem,
        }
    }
}

impl Sub for PiTime {
    type Output = PiTime;
    fn sub(self, other: PiTime) -> PiTime {
        PiTime {
            n36: self.n36 - other.n36,
            rem: self.rem - other.rem,
        }
    }
}

/// Neumaier compensated accumulator for long sums of segment durations.
///
/// Straight summation of tens of thousands of floats loses low bits exactly
/// where the schedule totals are asserted to twelve digits; carrying the
/// running compensation term restores them at negligible cost.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

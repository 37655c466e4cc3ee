//! Plans at two levels of abstraction.
//!
//! A [`FactorSequence`] is a group-level plan: an ordered list of
//! (generator, duration) factors whose exponentials multiply to the target.
//! Steps are stored in chronological order, so for a right-invariant system
//! the matrix product runs last-step-first:
//! X = exp(g_n t_n) ... exp(g_2 t_2) exp(g_1 t_1).
//!
//! A [`PulseSchedule`] is the time-domain program: constant or
//! phase-modulated control values per segment, ready for a simulator or an
//! instrument. Schedules carry no generator matrices; the system definition
//! supplies those at replay time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{expm, SquareMatrix};

/// Generator slots a factor step can reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gen {
    Z1,
    Z2,
    A1,
    Bx,
    By,
    Bz,
    Drift,
}

/// One chronological factor. `kbar` is only present on driven steps whose
/// effective generator is A1 + kbar * B_gen (the two-spin reduced picture);
/// plain steps exponentiate their named generator directly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FactorStep {
    pub gen: Gen,
    pub t: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kbar: Option<f64>,
}

/// Frame metadata attached to a factor sequence: the coordinate change the
/// durations were computed in, and the normalization rates of the two
/// generators in that frame.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameMeta {
    pub transform: SquareMatrix,
    pub lambda1: f64,
    pub lambda2: f64,
    pub psi: f64,
}

/// Self-contained factor plan: chronological steps, the unmerged structural
/// form for audits, and the generator bindings needed to replay the product.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FactorSequence {
    pub steps: Vec<FactorStep>,
    pub audit_steps: Vec<FactorStep>,
    pub bindings: Vec<(Gen, SquareMatrix)>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub frame: Option<FrameMeta>,
    /// Frobenius distance of the replayed product from the target the
    /// sequence was built for.
    pub residual: f64,
}

impl FactorSequence {
    pub fn binding(&self, g: Gen) -> Result<&SquareMatrix> {
        self.bindings
            .iter()
            .find(|(tag, _)| *tag == g)
            .map(|(_, m)| m)
            .ok_or_else(|| Error::InvalidSchedule(format!("no binding for generator {g:?}")))
    }

    /// Effective generator of one step: the bound matrix, or A1 + kbar * B
    /// for driven steps.
    pub fn effective_generator(&self, step: &FactorStep) -> Result<SquareMatrix> {
        let base = self.binding(step.gen)?;
        match step.kbar {
            None => Ok(base.clone()),
            Some(k) => self.binding(Gen::A1)?.add(&base.scale(k)),
        }
    }

    fn product_of(&self, steps: &[FactorStep]) -> Result<SquareMatrix> {
        let dim = self
            .bindings
            .first()
            .map(|(_, m)| m.dim())
            .ok_or_else(|| Error::InvalidSchedule("sequence has no bindings".into()))?;
        let mut x = SquareMatrix::identity(dim);
        for step in steps {
            let g = self.effective_generator(step)?;
            x = expm(&g, step.t)?.mul(&x)?;
        }
        Ok(x)
    }

    /// Product over the pruned steps, chronological (left-multiplied).
    pub fn product(&self) -> Result<SquareMatrix> {
        self.product_of(&self.steps)
    }

    /// Product over the unmerged audit steps; must agree with `product`.
    pub fn audit_product(&self) -> Result<SquareMatrix> {
        self.product_of(&self.audit_steps)
    }

    pub fn total_time(&self) -> f64 {
        self.steps.iter().map(|s| s.t).sum()
    }

    pub fn factor_count(&self) -> usize {
        self.steps.len()
    }
}

/// Merge chronologically adjacent steps with the same generator and drive,
/// then drop zero-duration steps. Merging can create new adjacency, so the
/// pass repeats until stable.
pub fn normalize_steps(steps: &[FactorStep]) -> Vec<FactorStep> {
    let mut out: Vec<FactorStep> = Vec::with_capacity(steps.len());
    for s in steps {
        if s.t == 0.0 {
            continue;
        }
        match out.last_mut() {
            Some(last) if last.gen == s.gen && last.kbar == s.kbar => {
                last.t += s.t;
                if last.t == 0.0 {
                    out.pop();
                }
            }
            _ => out.push(s.clone()),
        }
    }
    out
}

/// Phase-modulated drive: u_x = kbar cos(omega xi + phase),
/// u_y = sign_uy * kbar sin(omega xi + phase) over segment-local time xi.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Modulation {
    pub kbar: f64,
    pub omega: f64,
    pub phase: f64,
    pub sign_uy: f64,
}

/// One schedule segment. Serialized as {"dt", "mod": {...}} for modulated
/// segments and {"dt", "ux", "uy"} for constant ones.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PulseSegment {
    Modulated {
        dt: f64,
        #[serde(rename = "mod")]
        modulation: Modulation,
    },
    Const {
        dt: f64,
        ux: f64,
        #[serde(default)]
        uy: f64,
    },
}

impl PulseSegment {
    pub fn dt(&self) -> f64 {
        match self {
            PulseSegment::Modulated { dt, .. } | PulseSegment::Const { dt, .. } => *dt,
        }
    }

    /// Largest control magnitude the segment can reach.
    pub fn peak_control(&self) -> f64 {
        match self {
            PulseSegment::Modulated { modulation, .. } => modulation.kbar.abs(),
            PulseSegment::Const { ux, uy, .. } => ux.hypot(*uy),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PulseSchedule {
    pub segments: Vec<PulseSegment>,
}

impl PulseSchedule {
    pub fn total_time(&self) -> f64 {
        self.segments.iter().map(|s| s.dt()).sum()
    }

    pub fn peak_control(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| s.peak_control())
            .fold(0.0, f64::max)
    }

    /// True when every control value stays within the bound.
    pub fn respects_bound(&self, m: f64, slack: f64) -> bool {
        self.peak_control() <= m + slack
    }

    pub fn validate(&self) -> Result<()> {
        for (i, s) in self.segments.iter().enumerate() {
            let dt = s.dt();
            if !dt.is_finite() || dt < 0.0 {
                return Err(Error::InvalidSchedule(format!(
                    "segment {i}: duration {dt} must be finite and nonnegative"
                )));
            }
            if !s.peak_control().is_finite() {
                return Err(Error::InvalidSchedule(format!(
                    "segment {i}: control values must be finite"
                )));
            }
        }
        Ok(())
    }

    /// Drop zero-duration segments (produced by degenerate factor angles).
    pub fn pruned(mut self) -> Self {
        self.segments.retain(|s| s.dt() != 0.0);
        self
    }
}

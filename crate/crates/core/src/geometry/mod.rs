//! Curves in parameter space: the unregularized phase boundary, level sets of
//! `√q₀` and `Δ` in the `(α, r)` plane, and level sets of `√q₀` in the
//! `(η, r)` plane.
//!
//! Level sets are traced by pseudo-arclength continuation of the reduced
//! system with one order parameter pinned, so turning points are followed
//! rather than jumped over.

mod boundary;
mod continuation;
mod width;

use serde::{Deserialize, Serialize};

use crate::error::CurveError;
use crate::saddle::ReducedSolution;

pub use boundary::{trace_phase_boundary, BoundaryOptions};
pub use continuation::{trace, trace_iso_delta, trace_iso_q0, trace_r_of_eta};
pub use width::{lower_branch_slope, transition_width};

/// Max-abs residual of the reduced system accepted by the continuation
/// corrector.
pub const CORRECTOR_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    PhaseBoundary,
    IsoQ0,
    IsoDelta,
    ROfEta,
}

impl CurveKind {
    pub fn name(&self) -> &'static str {
        match self {
            CurveKind::PhaseBoundary => "phase_boundary",
            CurveKind::IsoQ0 => "iso_q0",
            CurveKind::IsoDelta => "iso_delta",
            CurveKind::ROfEta => "r_of_eta",
        }
    }
}

/// What to trace. `range` bounds the swept coordinate: `α` for the
/// phase boundary and the `(α, r)` contours, `η` for `r_of_eta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveSpec {
    pub kind: CurveKind,
    /// Target `√q₀` (iso_q0, r_of_eta) or `Δ` (iso_delta).
    pub level: Option<f64>,
    /// Fixed `α` (r_of_eta only).
    pub alpha: Option<f64>,
    /// Fixed `η` (contours only; the phase boundary is at `η = 0`).
    pub eta: Option<f64>,
    pub range: (f64, f64),
    /// Largest continuation step, in arclength of the internal coordinates.
    pub max_step: f64,
    pub min_step: f64,
    /// Tracing stops when `r` leaves `(0, r_max]`.
    pub r_max: f64,
}

impl CurveSpec {
    fn base(kind: CurveKind, range: (f64, f64)) -> Self {
        Self { kind, level: None, alpha: None, eta: None, range, max_step: 0.1, min_step: 1e-7, r_max: 1e3 }
    }

    pub fn phase_boundary(alpha_range: (f64, f64)) -> Self {
        Self { eta: Some(0.0), ..Self::base(CurveKind::PhaseBoundary, alpha_range) }
    }

    pub fn iso_q0(level_sqrt_q0: f64, eta: f64, alpha_range: (f64, f64)) -> Self {
        Self { level: Some(level_sqrt_q0), eta: Some(eta), ..Self::base(CurveKind::IsoQ0, alpha_range) }
    }

    pub fn iso_delta(level_delta: f64, eta: f64, alpha_range: (f64, f64)) -> Self {
        Self { level: Some(level_delta), eta: Some(eta), ..Self::base(CurveKind::IsoDelta, alpha_range) }
    }

    pub fn r_of_eta(alpha: f64, level_sqrt_q0: f64, eta_range: (f64, f64)) -> Self {
        Self { level: Some(level_sqrt_q0), alpha: Some(alpha), ..Self::base(CurveKind::ROfEta, eta_range) }
    }

    pub fn with_steps(mut self, min_step: f64, max_step: f64) -> Self {
        self.min_step = min_step;
        self.max_step = max_step;
        self
    }

    pub fn validate(&self) -> Result<(), CurveError> {
        let bad = |m: String| Err(CurveError::InvalidSpec(m));
        let (lo, hi) = self.range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return bad(format!("empty range [{lo}, {hi}]"));
        }
        if !(self.min_step > 0.0 && self.min_step <= self.max_step) {
            return bad(format!("need 0 < min_step <= max_step, got {} and {}", self.min_step, self.max_step));
        }
        if !(self.r_max > 0.0) {
            return bad(format!("r_max must be positive, got {}", self.r_max));
        }
        let unit = |a: f64| a > 0.0 && a < 1.0;
        match self.kind {
            CurveKind::PhaseBoundary => {
                if !(unit(lo) && unit(hi)) {
                    return bad("alpha range must lie in (0, 1)".into());
                }
            }
            CurveKind::IsoQ0 | CurveKind::IsoDelta => {
                if !(unit(lo) && unit(hi)) {
                    return bad("alpha range must lie in (0, 1)".into());
                }
                match self.eta {
                    Some(e) if e >= 0.0 && e.is_finite() => {}
                    _ => return bad("contours need a fixed eta >= 0".into()),
                }
            }
            CurveKind::ROfEta => {
                if !(lo > 0.0) {
                    return bad("eta range must be positive".into());
                }
                match self.alpha {
                    Some(a) if unit(a) => {}
                    _ => return bad("r_of_eta needs a fixed alpha in (0, 1)".into()),
                }
            }
        }
        match (self.kind, self.level) {
            (CurveKind::PhaseBoundary, _) => Ok(()),
            (CurveKind::IsoDelta, Some(l)) if l > 0.0 => Ok(()),
            (CurveKind::IsoQ0 | CurveKind::ROfEta, Some(l)) if l > 1.0 => Ok(()),
            (_, l) => bad(format!("level {l:?} out of range for {}", self.kind.name())),
        }
    }
}

/// Position of a point on a traced curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// Only one branch was traced.
    Single,
    /// Before the first turning point (data-dominated).
    Lower,
    /// After the first turning point (bias-dominated).
    Upper,
    Boundary,
}

impl Branch {
    pub fn label(&self) -> &'static str {
        match self {
            Branch::Single => "single",
            Branch::Lower => "lower",
            Branch::Upper => "upper",
            Branch::Boundary => "boundary",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// Swept coordinate: `α`, or `η` for `r_of_eta`.
    pub x: f64,
    pub r: f64,
    pub solution: ReducedSolution,
    pub branch: Branch,
    pub turning: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", content = "reason", rename_all = "snake_case")]
pub enum CurveStatus {
    Complete,
    Truncated(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveResult {
    pub spec: CurveSpec,
    pub points: Vec<CurvePoint>,
    /// Indices of points closest to a reversal of the swept coordinate.
    pub turning_points: Vec<usize>,
    pub status: CurveStatus,
}

impl CurveResult {
    pub fn is_complete(&self) -> bool {
        self.status == CurveStatus::Complete
    }

    pub fn branch(&self, b: Branch) -> impl Iterator<Item = &CurvePoint> {
        self.points.iter().filter(move |p| p.branch == b)
    }
}

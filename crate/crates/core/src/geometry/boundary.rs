use log::debug;
use serde::{Deserialize, Serialize};

use crate::error::CurveError;
use crate::saddle::{solve_at_level, LevelTarget, ReducedSolution};

use super::{Branch, CurvePoint, CurveResult, CurveSpec, CurveStatus};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryOptions {
    /// Divergence thresholds on `q₀`, in increasing order with a constant
    /// ratio; the boundary is extrapolated from the three crossings.
    pub thresholds: [f64; 3],
    /// Initial number of grid points in `α`.
    pub grid: usize,
    /// Grid intervals whose `r` values differ by more than this are bisected.
    pub max_gap: f64,
    pub max_points: usize,
}

impl Default for BoundaryOptions {
    fn default() -> Self {
        Self { thresholds: [1e6, 1e7, 1e8], grid: 17, max_gap: 0.02, max_points: 200 }
    }
}

/// `r` where `q₀` first reaches `q`, at `η = 0`.
fn crossing(alpha: f64, q: f64) -> Result<Option<ReducedSolution>, CurveError> {
    Ok(solve_at_level(alpha, 0.0, LevelTarget::SqrtQ0(q.sqrt()), 0.5)?)
}

/// Extrapolate `r_c` from crossings at geometrically spaced thresholds,
/// assuming `r_c − r(Q)` decays like a power of `Q`.
fn extrapolate(r: [f64; 3]) -> f64 {
    let (d1, d2) = (r[1] - r[0], r[2] - r[1]);
    if d1 > 0.0 && d2 > 0.0 && d2 < d1 {
        let rho = d2 / d1;
        r[2] + d2 * rho / (1.0 - rho)
    } else {
        r[2]
    }
}

/// Boundary point at one `α`, or `None` when the divergence thresholds
/// cannot be resolved below `r = 1/2`.
fn boundary_at(alpha: f64, opts: &BoundaryOptions) -> Result<Option<CurvePoint>, CurveError> {
    let mut rs = [0.0; 3];
    let mut last = None;
    for (k, q) in opts.thresholds.iter().enumerate() {
        match crossing(alpha, *q)? {
            Some(sol) => {
                rs[k] = sol.params.r;
                last = Some(sol);
            }
            None => return Ok(None),
        }
    }
    let sol = last.unwrap();
    let r_c = extrapolate(rs).min(0.5);
    debug!("alpha = {alpha}: crossings {rs:?}, r_c = {r_c}");
    Ok(Some(CurvePoint { x: alpha, r: r_c, solution: sol, branch: Branch::Boundary, turning: false }))
}

/// The `η = 0` phase boundary `r_c(α)` on an adaptive grid over
/// `alpha_range`.
///
/// Each point stores the extrapolated `r_c` together with the solution at
/// the largest threshold. Close to `α = 1` the boundary becomes flat at
/// `r = 1/2` to all orders; where the thresholds can no longer be resolved
/// the curve stops and is marked truncated.
pub fn trace_phase_boundary(
    alpha_range: (f64, f64),
    opts: &BoundaryOptions,
) -> Result<CurveResult, CurveError> {
    let spec = CurveSpec::phase_boundary(alpha_range);
    spec.validate()?;
    if opts.grid < 2 || !(opts.thresholds[0] > 1.0 && opts.thresholds[0] < opts.thresholds[1] && opts.thresholds[1] < opts.thresholds[2]) {
        return Err(CurveError::InvalidSpec("boundary options need >= 2 grid points and increasing thresholds".into()));
    }
    let (lo, hi) = alpha_range;
    let mut alphas: Vec<f64> = (0..opts.grid).map(|i| lo + (hi - lo) * i as f64 / (opts.grid - 1) as f64).collect();
    let mut points: Vec<Option<CurvePoint>> =
        alphas.iter().map(|&a| boundary_at(a, opts)).collect::<Result<_, _>>()?;

    loop {
        let mut inserted = false;
        let mut i = 0;
        while i + 1 < alphas.len() && alphas.len() < opts.max_points {
            let split = match (&points[i], &points[i + 1]) {
                (Some(a), Some(b)) => (a.r - b.r).abs() > opts.max_gap,
                _ => false,
            } && alphas[i + 1] - alphas[i] > 1e-4;
            if split {
                let mid = 0.5 * (alphas[i] + alphas[i + 1]);
                points.insert(i + 1, boundary_at(mid, opts)?);
                alphas.insert(i + 1, mid);
                inserted = true;
                i += 2;
            } else {
                i += 1;
            }
        }
        if !inserted || alphas.len() >= opts.max_points {
            break;
        }
    }

    let resolved: Vec<CurvePoint> = points.iter().map_while(|p| *p).collect();
    let status = if resolved.len() < points.len() {
        let at = alphas[resolved.len()];
        CurveStatus::Truncated(format!("divergence not resolvable below r = 1/2 from alpha = {at}"))
    } else {
        CurveStatus::Complete
    };
    if resolved.is_empty() {
        return Err(CurveError::LevelUnreachable(opts.thresholds[0].sqrt()));
    }
    Ok(CurveResult { spec, points: resolved, turning_points: Vec::new(), status })
}

use crate::error::CurveError;

use super::{Branch, CurveKind, CurveResult};

/// `d ln r / d ln η` between consecutive points of one branch, attached to
/// the segment midpoints `(ln η, ln r)`.
fn slopes(curve: &CurveResult, branch: Branch) -> Vec<(f64, f64, f64)> {
    let pts: Vec<_> = curve.branch(branch).collect();
    pts.windows(2)
        .filter_map(|w| {
            let (a, b) = (w[0], w[1]);
            let dx = b.x.ln() - a.x.ln();
            let dy = b.r.ln() - a.r.ln();
            (dx != 0.0).then(|| (0.5 * (a.x.ln() + b.x.ln()), 0.5 * (a.r.ln() + b.r.ln()), dy / dx))
        })
        .collect()
}

/// Largest `|d ln r / d ln η|` on the lower branch over `η ≤ eta_max`.
pub fn lower_branch_slope(curve: &CurveResult, eta_max: f64) -> Option<f64> {
    slopes(curve, Branch::Lower)
        .iter()
        .filter(|s| s.0 <= eta_max.ln())
        .map(|s| s.2.abs())
        .reduce(f64::max)
}

/// Ratio `r_upper / r_lower` of the trade-off zone of an `r_of_eta`
/// curve: the stretch around the turning point where the curve is neither
/// flat in `η` nor flat in `r`. Walking away from the turning point, the
/// zone ends on the lower branch where `|d ln r / d ln η|` falls below 1/2,
/// and on the upper branch where `|d ln η / d ln r|` rises above 1/2.
pub fn transition_width(curve: &CurveResult) -> Result<f64, CurveError> {
    if curve.spec.kind != CurveKind::ROfEta {
        return Err(CurveError::InvalidSpec("transition width needs an r_of_eta curve".into()));
    }
    let Some(&turn) = curve.turning_points.first() else {
        return Err(CurveError::NoTurningPoint);
    };
    let r_turn = curve.points[turn].r;
    let endpoint = |branch: Branch, limit: f64, name: &'static str| -> Result<f64, CurveError> {
        let mut s = slopes(curve, branch);
        // Order segments from the turning point outwards.
        s.sort_by(|a, b| (a.1 - r_turn.ln()).abs().total_cmp(&(b.1 - r_turn.ln()).abs()));
        let steep = |x: &(f64, f64, f64)| x.2.abs() >= limit;
        s.windows(2)
            .find(|w| steep(&w[0]) && !steep(&w[1]))
            .map(|w| {
                let (a, b) = (w[0], w[1]);
                let t = (a.2.abs() - limit) / (a.2.abs() - b.2.abs());
                (a.1 + t * (b.1 - a.1)).exp()
            })
            .ok_or(CurveError::ZoneNotFound(name))
    };
    Ok(endpoint(Branch::Upper, 2.0, "upper")? / endpoint(Branch::Lower, 0.5, "lower")?)
}

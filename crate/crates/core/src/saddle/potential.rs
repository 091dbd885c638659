use crate::error::SaddleError;

use super::{OrderParams, ProblemParams};

/// Moments of the single-site minimizer over the standard normal field `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianAverages {
    pub mean_w: f64,
    pub mean_wz: f64,
    pub mean_w2: f64,
}

fn curvature(op: &OrderParams, eta: f64) -> Result<f64, SaddleError> {
    let c = op.delta_hat + eta;
    if !(c > 0.0) {
        return Err(SaddleError::NonConvexPotential(c));
    }
    Ok(c)
}

fn field_amplitude(op: &OrderParams) -> f64 {
    (-2.0 * op.q0_hat).max(0.0).sqrt()
}

/// Minimizer of `V(w, z) = (Δ̂ + η)w² − λw − zw√(−2q̂₀)`.
pub fn wstar(z: f64, op: &OrderParams, eta: f64) -> Result<f64, SaddleError> {
    let c = curvature(op, eta)?;
    Ok((op.lambda + z * field_amplitude(op)) / (2.0 * c))
}

/// `⟨w*⟩`, `⟨w* z⟩` and `⟨w*²⟩` in closed form. The minimizer is affine in
/// `z`, so only the first two Gaussian moments enter.
pub fn gaussian_averages(op: &OrderParams, eta: f64) -> Result<GaussianAverages, SaddleError> {
    let c = curvature(op, eta)?;
    let b = field_amplitude(op);
    let mean_w = op.lambda / (2.0 * c);
    let slope = b / (2.0 * c);
    Ok(GaussianAverages {
        mean_w,
        mean_wz: slope,
        mean_w2: mean_w * mean_w + slope * slope,
    })
}

/// Reconstruct `(λ, q̂₀, Δ̂)` from `(q₀, Δ, ε)` using the budget, susceptibility
/// and second-moment conditions:
/// `Δ̂ = 1/(2Δ) − η`, `λ = 1/Δ`, `q̂₀ = −(q₀ − 1)/(2Δ²)`.
pub fn eliminate_conjugates(
    q0: f64,
    delta: f64,
    epsilon: f64,
    p: &ProblemParams,
) -> Result<OrderParams, SaddleError> {
    if !(q0 > 0.0 && delta > 0.0) {
        return Err(SaddleError::DomainError { q0, delta });
    }
    if q0 < 1.0 {
        return Err(SaddleError::InfeasibleLift(q0));
    }
    Ok(OrderParams {
        lambda: 1.0 / delta,
        epsilon,
        q0,
        delta,
        q0_hat: -(q0 - 1.0) / (2.0 * delta * delta),
        delta_hat: 0.5 / delta - p.eta,
    })
}

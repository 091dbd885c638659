//! The free energy and its six stationarity conditions, with the
//! `s`-integrals done by adaptive quadrature. This is the reference path
//! that the closed-form reduced system is checked against.

use std::f64::consts::PI;

use crate::error::SaddleError;
use crate::quadrature::integrate_split;
use crate::special_fn::{g, g_prime};

use super::potential::gaussian_averages;
use super::{OrderParams, ProblemParams};

const S_RANGE: f64 = 12.0;
const ABS_TOL: f64 = 1e-12;
const REL_TOL: f64 = 1e-14;
/// Required accuracy of each `s`-integral.
const REQUIRED_TOL: f64 = 1e-10;

/// Residuals (left minus right side) of the six stationarity equations, in
/// the order: budget, `ε`, `q₀`, `Δ`, `q̂₀`, `Δ̂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullResiduals(pub [f64; 6]);

impl FullResiduals {
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn check_physical(op: &OrderParams, eta: f64) -> Result<(), SaddleError> {
    if !(op.q0 > 0.0 && op.delta > 0.0) {
        return Err(SaddleError::DomainError { q0: op.q0, delta: op.delta });
    }
    if op.q0_hat > 0.0 {
        return Err(SaddleError::InvalidParams(format!("q0_hat = {} > 0", op.q0_hat)));
    }
    if !(op.delta_hat + eta > 0.0) {
        return Err(SaddleError::NonConvexPotential(op.delta_hat + eta));
    }
    Ok(())
}

/// `∫ ds e^{−s²} h(s) f(ε/Δ + s√(2q₀)/Δ)`, split where the argument of `f`
/// crosses the knots of `g`.
fn knot_integral(
    op: &OrderParams,
    weight: impl Fn(f64) -> f64,
    f: impl Fn(f64) -> f64,
) -> Result<f64, SaddleError> {
    let slope = (2.0 * op.q0).sqrt() / op.delta;
    let offset = op.epsilon / op.delta;
    let knots = [-offset / slope, (-1.0 - offset) / slope];
    let integrand = |s: f64| (-s * s).exp() * weight(s) * f(offset + s * slope);
    match integrate_split(integrand, -S_RANGE, S_RANGE, &knots, ABS_TOL, REL_TOL) {
        Ok(r) => Ok(r.value),
        Err(r) if r.error <= REQUIRED_TOL => Ok(r.value),
        Err(r) => Err(SaddleError::QuadratureFailure(r.error)),
    }
}

/// Evaluate the six stationarity equations at an arbitrary physical point.
pub fn full_residuals(op: &OrderParams, p: &ProblemParams) -> Result<FullResiduals, SaddleError> {
    check_physical(op, p.eta)?;
    let (alpha, r) = (p.alpha, p.r);
    let avg = gaussian_averages(op, p.eta)?;
    let sqrt_pi = PI.sqrt();

    let int_gp = knot_integral(op, |_| 1.0, g_prime)?;
    let int_sgp = knot_integral(op, |s| s, g_prime)?;
    let int_g = knot_integral(op, |_| 1.0, g)?;

    let budget = 1.0 - avg.mean_w;
    let eps_eq = (1.0 - alpha) + int_gp / (2.0 * sqrt_pi);
    let q0_eq = op.delta_hat - int_sgp / (2.0 * r * (2.0 * PI * op.q0).sqrt());
    let delta_eq = -op.q0_hat - 2.0 * op.delta_hat * op.q0 / op.delta
        + int_g / (2.0 * r * sqrt_pi)
        + (1.0 - alpha) / r * op.epsilon / op.delta;
    let field = (-2.0 * op.q0_hat).sqrt();
    let response = if field > 0.0 {
        avg.mean_wz / field
    } else {
        // ⟨w* z⟩/√(−2q̂₀) → 1/(2(Δ̂ + η)) as the field vanishes.
        0.5 / (op.delta_hat + p.eta)
    };
    let q0_hat_eq = op.delta - response;
    let delta_hat_eq = op.q0 - avg.mean_w2;

    Ok(FullResiduals([budget, eps_eq, q0_eq, delta_eq, q0_hat_eq, delta_hat_eq]))
}

/// The replica free energy per asset at an arbitrary physical point, with the
/// `g`-integral done by quadrature and `⟨min_w V⟩` in closed form.
pub fn free_energy(op: &OrderParams, p: &ProblemParams) -> Result<f64, SaddleError> {
    check_physical(op, p.eta)?;
    let c = op.delta_hat + p.eta;
    let min_v = -(op.lambda * op.lambda - 2.0 * op.q0_hat) / (4.0 * c);
    let int_g = knot_integral(op, |_| 1.0, g)?;
    Ok(op.lambda + (1.0 - p.alpha) * op.epsilon / p.r
        - op.delta * op.q0_hat
        - op.delta_hat * op.q0
        + min_v
        + op.delta / (2.0 * p.r * PI.sqrt()) * int_g)
}

//! Closed-form reduced system in `(q₀, Δ, ε)`.
//!
//! With `u = ε/√q₀` and `v = (Δ + ε)/√q₀` (the images of the two knots of
//! `g` under the Gaussian change of variables), the `s`-integrals of the
//! `ε`, `q₀` and `Δ` stationarity equations evaluate to
//!
//! ```text
//! (1/2√π) ∫ e^{−s²} g′     = (√q₀/Δ)[Ψ(v) − Ψ(u)] − 1
//! (1/2√π) ∫ e^{−s²} s g′   = (√(2q₀)/Δ)[Φ(v) − Φ(u)] / 2
//! (1/2√π) ∫ e^{−s²} g      = (q₀/Δ²)[W(v) − W(u)] − 1/2 − ε/Δ
//! ```
//!
//! Substituting the eliminated conjugates gives the three equations
//!
//! ```text
//! e1:  r(1 − 2ηΔ) − [Φ(v) − Φ(u)]                                   = 0
//! e2:  α − (√q₀/Δ)[Ψ(v) − Ψ(u)]                                     = 0
//! e3:  r(1 + q₀)/(2q₀) + Δ²/(2q₀) + αεΔ/q₀ − 2ηrΔ − [W(v) − W(u)]   = 0
//! ```
//!
//! `e3` is the `Δ` equation multiplied by `rΔ²/q₀`, which keeps all three
//! residuals O(1) as `q₀` diverges. The derivation is written out in
//! `docs/reduced-system.md`.

use crate::error::SaddleError;
use crate::special_fn::{normal_density, phi, phi_diff, psi, w_fn};

use super::ProblemParams;

/// Residuals of the reduced equations, in the order `(e1, e2, e3)` above.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals3 {
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
}

impl Residuals3 {
    pub fn max_abs(&self) -> f64 {
        self.e1.abs().max(self.e2.abs()).max(self.e3.abs())
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.e1, self.e2, self.e3]
    }
}

struct Args {
    s: f64,
    u: f64,
    v: f64,
    d_phi: f64,
    d_psi: f64,
    d_w: f64,
}

fn args(q0: f64, delta: f64, epsilon: f64) -> Args {
    let s = q0.sqrt();
    let u = epsilon / s;
    let v = (delta + epsilon) / s;
    Args {
        s,
        u,
        v,
        d_phi: phi_diff(u, v),
        d_psi: psi(v) - psi(u),
        d_w: w_fn(v) - w_fn(u),
    }
}

fn check_domain(q0: f64, delta: f64) -> Result<(), SaddleError> {
    if q0 > 0.0 && delta > 0.0 && q0.is_finite() && delta.is_finite() {
        Ok(())
    } else {
        Err(SaddleError::DomainError { q0, delta })
    }
}

pub fn reduced_residuals(
    q0: f64,
    delta: f64,
    epsilon: f64,
    p: &ProblemParams,
) -> Result<Residuals3, SaddleError> {
    check_domain(q0, delta)?;
    let ProblemParams { alpha, r, eta } = *p;
    let a = args(q0, delta, epsilon);
    Ok(Residuals3 {
        e1: r * (1.0 - 2.0 * eta * delta) - a.d_phi,
        e2: alpha - a.s / delta * a.d_psi,
        e3: r * (1.0 + q0) / (2.0 * q0) + delta * delta / (2.0 * q0) + alpha * epsilon * delta / q0
            - 2.0 * eta * r * delta
            - a.d_w,
    })
}

/// Jacobian of `(e1, e2, e3)` with respect to `(α, r, η, q₀, Δ, ε)`.
pub fn reduced_jacobian(
    q0: f64,
    delta: f64,
    epsilon: f64,
    p: &ProblemParams,
) -> Result<[[f64; 6]; 3], SaddleError> {
    check_domain(q0, delta)?;
    let ProblemParams { alpha, r, eta } = *p;
    let a = args(q0, delta, epsilon);
    let (s, u, v) = (a.s, a.u, a.v);
    let (dens_u, dens_v) = (normal_density(u), normal_density(v));
    let (cdf_u, cdf_v) = (phi(u), phi(v));
    let (psi_u, psi_v) = (psi(u), psi(v));

    let e1 = [
        0.0,
        1.0 - 2.0 * eta * delta,
        -2.0 * r * delta,
        (v * dens_v - u * dens_u) / (2.0 * q0),
        -2.0 * r * eta - dens_v / s,
        (dens_u - dens_v) / s,
    ];
    let e2 = [
        1.0,
        0.0,
        0.0,
        -a.d_psi / (2.0 * s * delta) + s / delta * (v * cdf_v - u * cdf_u) / (2.0 * q0),
        s / (delta * delta) * a.d_psi - cdf_v / delta,
        -a.d_phi / delta,
    ];
    let e3 = [
        epsilon * delta / q0,
        (1.0 + q0) / (2.0 * q0) - 2.0 * eta * delta,
        -2.0 * r * delta,
        -(r + delta * delta + 2.0 * alpha * epsilon * delta) / (2.0 * q0 * q0)
            + (v * psi_v - u * psi_u) / (2.0 * q0),
        delta / q0 + alpha * epsilon / q0 - 2.0 * eta * r - psi_v / s,
        alpha * delta / q0 - a.d_psi / s,
    ];
    Ok([e1, e2, e3])
}

/// Free energy per asset at a point of the reduced manifold, i.e. the full
/// free energy with the conjugates eliminated and the `g`-integral in closed
/// form:
///
/// `F = (1 − q₀)/(2Δ) + ηq₀ − αε/r − Δ/(2r) + (q₀/(rΔ))[W(v) − W(u)]`.
///
/// At a root of the reduced system this collapses to `1/Δ − ηq₀`.
pub fn free_energy_reduced(q0: f64, delta: f64, epsilon: f64, p: &ProblemParams) -> f64 {
    let ProblemParams { alpha, r, eta } = *p;
    let a = args(q0, delta, epsilon);
    (1.0 - q0) / (2.0 * delta) + eta * q0 - alpha * epsilon / r - delta / (2.0 * r)
        + q0 / (r * delta) * a.d_w
}

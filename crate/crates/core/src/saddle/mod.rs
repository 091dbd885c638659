//! Replica saddle point of the regularized Expected Shortfall problem.
//!
//! Six order parameters `(λ, ε, q₀, Δ, q̂₀, Δ̂)` make the free energy
//! stationary. Three of them (`λ`, `q̂₀`, `Δ̂`) are eliminated in closed form
//! because the single-site potential is quadratic in `w`; what remains is a
//! three-equation system in `(q₀, Δ, ε)`, see [`reduced`].

mod full;
mod newton;
mod potential;
mod reduced;
mod solve;

use serde::{Deserialize, Serialize};

use crate::error::SaddleError;

pub use full::{free_energy, full_residuals, FullResiduals};
pub use potential::{eliminate_conjugates, gaussian_averages, wstar, GaussianAverages};
pub use reduced::{free_energy_reduced, reduced_jacobian, reduced_residuals, Residuals3};
pub use solve::{
    level_crossings, observables, solve_at_level, solve_reduced, solve_reduced_with, LevelTarget, Observables,
    SolverOptions,
};

pub(crate) use newton::{lu_solve, newton_solve, NewtonOptions};
pub(crate) use solve::{
    decode_into, encode_from, eval_encoded, params_of, solve_free, Coord, State,
};
pub use solve::{OVERFLOW_GUARD, ROOT_TOL};

/// External control point of the theory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    /// Confidence level of the Expected Shortfall, in `(0, 1)`.
    pub alpha: f64,
    /// Aspect ratio `N/T`.
    pub r: f64,
    /// Amplitude of the ℓ2 regularizer.
    pub eta: f64,
}

impl ProblemParams {
    pub fn new(alpha: f64, r: f64, eta: f64) -> Result<Self, SaddleError> {
        let p = Self { alpha, r, eta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), SaddleError> {
        if !(self.alpha.is_finite() && self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(SaddleError::InvalidParams(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if !(self.r.is_finite() && self.r > 0.0) {
            return Err(SaddleError::InvalidParams(format!("r must be positive, got {}", self.r)));
        }
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return Err(SaddleError::InvalidParams(format!(
                "eta must be non-negative, got {}",
                self.eta
            )));
        }
        Ok(())
    }
}

/// The six replica order parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderParams {
    pub lambda: f64,
    pub epsilon: f64,
    pub q0: f64,
    pub delta: f64,
    pub q0_hat: f64,
    pub delta_hat: f64,
}

/// A converged root of the reduced system together with derived observables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedSolution {
    pub params: ProblemParams,
    pub q0: f64,
    pub delta: f64,
    pub epsilon: f64,
    /// Max-abs residual of the reduced system at the root.
    pub residual_norm: f64,
    /// Free energy per asset, including the regularizer contribution.
    pub free_energy: f64,
    /// `r·F/(1 − α)`: the optimal in-sample cost per unit `(1 − α)T`.
    pub es_in_sample: f64,
    /// In-sample ES with the regularizer contribution `η·q₀` removed from `F`.
    pub es_in_cvar: f64,
    /// `√q₀ − 1`.
    pub rel_error: f64,
}

impl ReducedSolution {
    pub(crate) fn from_root(
        params: ProblemParams,
        q0: f64,
        delta: f64,
        epsilon: f64,
        residual_norm: f64,
    ) -> Self {
        let free_energy = free_energy_reduced(q0, delta, epsilon, &params);
        let scale = params.r / (1.0 - params.alpha);
        Self {
            params,
            q0,
            delta,
            epsilon,
            residual_norm,
            free_energy,
            es_in_sample: scale * free_energy,
            es_in_cvar: scale * (free_energy - params.eta * q0),
            rel_error: q0.sqrt() - 1.0,
        }
    }

    /// Six-parameter form via [`eliminate_conjugates`].
    pub fn order_params(&self) -> Result<OrderParams, SaddleError> {
        eliminate_conjugates(self.q0, self.delta, self.epsilon, &self.params)
    }
}

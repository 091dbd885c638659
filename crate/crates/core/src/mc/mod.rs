//! Finite-size Monte Carlo oracle: sample Gaussian return matrices, solve the
//! regularized Expected Shortfall program exactly, and average the quantities
//! the replica theory predicts.
//!
//! Returns are drawn with variance `1/N` so that a portfolio with
//! `Σ w_i = N` has `O(1)` risk, which is the scaling of the replica theory.

mod ipm;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::McError;
use crate::special_fn::{normal_density, normal_quantile};

pub use ipm::{solve_program, solve_program_with, IpmOptions, MCInstance, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCConfig {
    pub n_assets: usize,
    pub n_obs: usize,
    pub alpha: f64,
    pub eta: f64,
    pub n_samples: usize,
    pub seed: u64,
    /// Field amplitude of the susceptibility finite difference.
    pub shift_xi: f64,
}

impl MCConfig {
    pub fn new(n_assets: usize, n_obs: usize, alpha: f64, eta: f64, n_samples: usize, seed: u64) -> Self {
        Self { n_assets, n_obs, alpha, eta, n_samples, seed, shift_xi: 1e-6 }
    }

    pub fn r(&self) -> f64 {
        self.n_assets as f64 / self.n_obs as f64
    }

    pub fn validate(&self) -> Result<(), McError> {
        let bad = |m: String| Err(McError::InvalidConfig(m));
        if self.n_assets < 2 || self.n_obs < 2 {
            return bad(format!("need N >= 2 and T >= 2, got N = {}, T = {}", self.n_assets, self.n_obs));
        }
        if self.n_samples < 1 {
            return bad("need at least one replication".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return bad(format!("eta must be non-negative, got {}", self.eta));
        }
        if !(self.shift_xi > 0.0 && self.shift_xi.is_finite()) {
            return bad(format!("shift_xi must be positive, got {}", self.shift_xi));
        }
        Ok(())
    }
}

/// Standard normal `N × T` matrix for replication `rep_index`. The stream
/// depends only on `(seed, rep_index)`.
pub fn sample_instance(cfg: &MCConfig, rep_index: u64) -> DMatrix<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    rng.set_stream(rep_index);
    DMatrix::from_fn(cfg.n_assets, cfg.n_obs, |_, _| StandardNormal.sample(&mut rng))
}

/// Returns of replication `rep_index` in the scaling of the theory
/// (variance `1/N`).
pub fn scaled_returns(cfg: &MCConfig, rep_index: u64) -> DMatrix<f64> {
    sample_instance(cfg, rep_index) / (cfg.n_assets as f64).sqrt()
}

/// ES at level `α` of the true optimal portfolio `w = 1`: the ES of a
/// centred unit Gaussian.
pub fn gaussian_es(alpha: f64) -> f64 {
    normal_density(normal_quantile(alpha)) / (1.0 - alpha)
}

/// Out-of-sample ES of weights `w` under the true distribution (centred
/// Gaussian returns with variance `1/N`), in closed form.
pub fn out_of_sample_es(weights: &DVector<f64>, alpha: f64) -> f64 {
    (weights.norm_squared() / weights.len() as f64).sqrt() * gaussian_es(alpha)
}

/// Mean and standard error over replications.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    /// Standard error of the mean; `NaN` for a single replication.
    pub se: f64,
    pub n: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let se = if n > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            f64::NAN
        };
        Self { mean, se, n }
    }

    /// `(mean − reference)/se`.
    pub fn z_score(&self, reference: f64) -> f64 {
        (self.mean - reference) / self.se
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCSummary {
    pub config: MCConfig,
    /// `(1/N)‖w‖²`.
    pub q0_hat: Estimate,
    /// Out-of-sample ES over the true optimum, `√((1/N)‖w‖²)` per instance.
    pub es_ratio_hat: Estimate,
    /// Finite-difference weight response to a random field.
    pub delta_hat: Estimate,
    pub eps_hat: Estimate,
    /// `((1 − α)Tε + Σu)/((1 − α)T)`: in-sample ES of the optimum.
    pub es_in_hat: Estimate,
    /// Full optimal cost over `(1 − α)T`, regularizer included.
    pub cost_hat: Estimate,
    /// Fraction of replications where the program was bounded.
    pub feasible_fraction: f64,
    /// Replications where the `±ξ` solves sat on different faces.
    pub face_changes: usize,
}

/// Centred `±1` pattern used as the susceptibility probe field.
fn probe(cfg: &MCConfig, rep_index: u64) -> DVector<f64> {
    use rand::seq::SliceRandom;
    let n = cfg.n_assets;
    let mut signs: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed ^ 0x5eed_f1e1d);
    rng.set_stream(rep_index);
    signs.shuffle(&mut rng);
    let mean = signs.iter().sum::<f64>() / n as f64;
    DVector::from_iterator(n, signs.into_iter().map(|s| s - mean))
}

struct Replication {
    q0: f64,
    es_ratio: f64,
    eps: f64,
    es_in: f64,
    cost: f64,
    delta: Option<(f64, bool)>,
}

/// Weight response to the probe field `ξσ`: `(1/N)Σσ_i Δw_i / (2ξ·(1/N)Σσ_i²)`.
/// Also reports whether the two solves landed on different faces.
fn response(
    x: &DMatrix<f64>,
    cfg: &MCConfig,
    rep_index: u64,
    xi: f64,
) -> Result<(f64, bool), McError> {
    let sigma = probe(cfg, rep_index);
    let opts = IpmOptions::default();
    let plus = solve_program_with(x, cfg.alpha, cfg.eta, Some(&(&sigma * xi)), &opts)?;
    let minus = solve_program_with(x, cfg.alpha, cfg.eta, Some(&(&sigma * -xi)), &opts)?;
    let dw = (&plus.weights - &minus.weights) / (2.0 * xi);
    let changed = plus.support() != minus.support();
    Ok((sigma.dot(&dw) / sigma.norm_squared(), changed))
}

fn replicate(cfg: &MCConfig, rep_index: u64, with_delta: bool) -> Result<Replication, McError> {
    let x = scaled_returns(cfg, rep_index);
    let inst = solve_program(&x, cfg.alpha, cfg.eta)?;
    let norm = (1.0 - cfg.alpha) * cfg.n_obs as f64;
    let delta = if with_delta { Some(response(&x, cfg, rep_index, cfg.shift_xi)?) } else { None };
    Ok(Replication {
        q0: inst.q0(),
        es_ratio: out_of_sample_es(&inst.weights, cfg.alpha) / gaussian_es(cfg.alpha),
        eps: inst.eps_star,
        es_in: inst.cvar_part / norm,
        cost: inst.objective / norm,
        delta,
    })
}

fn run(cfg: &MCConfig, with_delta: bool) -> Result<Vec<Replication>, McError> {
    cfg.validate()?;
    let results: Vec<Result<Replication, McError>> =
        (0..cfg.n_samples as u64).into_par_iter().map(|k| replicate(cfg, k, with_delta)).collect();
    let mut out = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Ok(rep) => out.push(rep),
            Err(McError::Unbounded) => {}
            Err(e) => return Err(e),
        }
    }
    if out.is_empty() {
        return Err(McError::AllUnbounded);
    }
    Ok(out)
}

fn check_faces(changed: usize, total: usize) -> Result<(), McError> {
    if 2 * changed > total {
        return Err(McError::ShiftTooLarge { changed, total });
    }
    Ok(())
}

/// Run `n_samples` replications (in parallel; results do not depend on the
/// number of threads) and average. Unbounded replications are counted in
/// `feasible_fraction` and otherwise skipped.
pub fn estimate_summary(cfg: &MCConfig) -> Result<MCSummary, McError> {
    let reps = run(cfg, true)?;
    let col = |f: &dyn Fn(&Replication) -> f64| Estimate::from_samples(&reps.iter().map(f).collect::<Vec<_>>());
    let face_changes = reps.iter().filter(|r| r.delta.is_some_and(|d| d.1)).count();
    check_faces(face_changes, reps.len())?;
    Ok(MCSummary {
        config: *cfg,
        q0_hat: col(&|r| r.q0),
        es_ratio_hat: col(&|r| r.es_ratio),
        delta_hat: col(&|r| r.delta.map_or(f64::NAN, |d| d.0)),
        eps_hat: col(&|r| r.eps),
        es_in_hat: col(&|r| r.es_in),
        cost_hat: col(&|r| r.cost),
        feasible_fraction: reps.len() as f64 / cfg.n_samples as f64,
        face_changes,
    })
}

/// Susceptibility alone: mean weight response to a centred random field of
/// amplitude `shift_xi`, by central differences on common random numbers.
pub fn estimate_susceptibility(cfg: &MCConfig) -> Result<Estimate, McError> {
    cfg.validate()?;
    let results: Vec<Result<(f64, bool), McError>> = (0..cfg.n_samples as u64)
        .into_par_iter()
        .map(|k| response(&scaled_returns(cfg, k), cfg, k, cfg.shift_xi))
        .collect();
    let mut values = Vec::new();
    let mut changed = 0;
    for r in results {
        match r {
            Ok((v, c)) => {
                values.push(v);
                changed += c as usize;
            }
            Err(McError::Unbounded) => {}
            Err(e) => return Err(e),
        }
    }
    if values.is_empty() {
        return Err(McError::AllUnbounded);
    }
    check_faces(changed, values.len())?;
    Ok(Estimate::from_samples(&values))
}

/// Fraction of bounded replications, without solving for the summary.
pub fn feasible_fraction(cfg: &MCConfig) -> Result<f64, McError> {
    match run(cfg, false) {
        Ok(reps) => Ok(reps.len() as f64 / cfg.n_samples as f64),
        Err(McError::AllUnbounded) => Ok(0.0),
        Err(e) => Err(e),
    }
}

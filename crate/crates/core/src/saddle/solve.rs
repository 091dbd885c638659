use log::debug;
use serde::{Deserialize, Serialize};

use crate::error::SaddleError;
use crate::special_fn::{normal_density, normal_quantile};

use super::newton::{newton_solve, NewtonOptions};
use super::reduced::{reduced_jacobian, reduced_residuals};
use super::{ProblemParams, ReducedSolution};

/// Iterates with `q₀` or `Δ` beyond this are treated as divergent.
pub const OVERFLOW_GUARD: f64 = 1e12;
/// Residual max-norm required of every returned root.
pub const ROOT_TOL: f64 = 1e-10;

/// Coordinates of the extended state `(α, r, η, q₀, Δ, ε)`. Positive
/// coordinates are solved for in log form, `q₀` as `ln(q₀ − 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Coord {
    Alpha = 0,
    R = 1,
    Eta = 2,
    Q0 = 3,
    Delta = 4,
    Epsilon = 5,
}

impl Coord {
    pub(crate) fn encode(self, x: f64) -> f64 {
        match self {
            Coord::Alpha | Coord::Epsilon => x,
            Coord::R | Coord::Eta | Coord::Delta => x.ln(),
            Coord::Q0 => (x - 1.0).ln(),
        }
    }

    pub(crate) fn decode(self, y: f64) -> f64 {
        match self {
            Coord::Alpha | Coord::Epsilon => y,
            Coord::R | Coord::Eta | Coord::Delta => y.exp(),
            Coord::Q0 => 1.0 + y.exp(),
        }
    }

    fn dx_dy(self, x: f64) -> f64 {
        match self {
            Coord::Alpha | Coord::Epsilon => 1.0,
            Coord::R | Coord::Eta | Coord::Delta => x,
            Coord::Q0 => x - 1.0,
        }
    }
}

pub(crate) type State = [f64; 6];

pub(crate) fn params_of(x: &State) -> ProblemParams {
    ProblemParams { alpha: x[0], r: x[1], eta: x[2] }
}

/// Residuals and the Jacobian columns of the given encoded coordinates.
pub(crate) fn eval_encoded<const K: usize>(
    x: &State,
    free: &[Coord; K],
) -> Option<([f64; 3], [[f64; K]; 3])> {
    let (alpha, r, eta, q0, delta) = (x[0], x[1], x[2], x[3], x[4]);
    let in_domain = alpha > 0.0
        && alpha < 1.0
        && r > 0.0
        && eta >= 0.0
        && q0 >= 1.0
        && delta > 0.0
        && q0 <= OVERFLOW_GUARD
        && delta <= OVERFLOW_GUARD
        && x.iter().all(|v| v.is_finite());
    if !in_domain {
        return None;
    }
    let p = params_of(x);
    let res = reduced_residuals(q0, delta, x[5], &p).ok()?.as_array();
    let jac = reduced_jacobian(q0, delta, x[5], &p).ok()?;
    let mut out = [[0.0; K]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (k, c) in free.iter().enumerate() {
            row[k] = jac[i][*c as usize] * c.dx_dy(x[*c as usize]);
        }
    }
    res.iter().all(|v| v.is_finite()).then_some((res, out))
}

pub(crate) fn decode_into(base: &State, free: &[Coord], y: &[f64]) -> State {
    let mut x = *base;
    for (c, v) in free.iter().zip(y) {
        x[*c as usize] = c.decode(*v);
    }
    x
}

pub(crate) fn encode_from<const K: usize>(x: &State, free: &[Coord; K]) -> [f64; K] {
    free.map(|c| c.encode(x[c as usize]))
}

/// Newton on three free coordinates with the other three held fixed.
pub(crate) fn solve_free(
    guess: &State,
    free: [Coord; 3],
    max_iter: usize,
) -> Option<(State, f64, usize)> {
    let opts = NewtonOptions { max_iter, tol: ROOT_TOL * 1e-2, max_step: 1.5 };
    let f = |y: &[f64; 3]| {
        let x = decode_into(guess, &free, y);
        eval_encoded(&x, &free)
    };
    let y0 = encode_from(guess, &free);
    if !y0.iter().all(|v| v.is_finite()) {
        return None;
    }
    let out = newton_solve(f, y0, opts)?;
    Some((decode_into(guess, &free, &out.x), out.residual, out.iterations))
}

/// Options for [`solve_reduced_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Smallest aspect ratio used for the self-start.
    pub r_start: f64,
    /// Initial step in `ln r` of the self-start continuation.
    pub initial_step: f64,
    /// Steps below this in `ln r` abort the continuation.
    pub min_step: f64,
    pub max_newton_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { r_start: 1e-3, initial_step: 0.5, min_step: 1e-11, max_newton_iter: 40 }
    }
}

const FREE: [Coord; 3] = [Coord::Q0, Coord::Delta, Coord::Epsilon];

/// Large-`T` start: `ε ≈ z_α`, `Δ ≈ r/φ(z_α)`, `q₀ ≈ 1 + r`.
fn small_r_guess(alpha: f64, r: f64, eta: f64) -> State {
    let z = normal_quantile(alpha);
    let delta = r / normal_density(z);
    let q0 = 1.0 + r;
    [alpha, r, eta, q0, delta * q0.sqrt(), z * q0.sqrt()]
}

fn self_start(alpha: f64, eta: f64, r: f64, opts: &SolverOptions) -> Option<State> {
    let mut r0 = r.min(opts.r_start);
    for _ in 0..6 {
        let guess = small_r_guess(alpha, r0, eta);
        if let Some((x, _, _)) = solve_free(&guess, FREE, opts.max_newton_iter) {
            return Some(x);
        }
        r0 *= 0.1;
    }
    None
}

/// Why a march in `r` ended.
pub(crate) enum MarchEnd {
    /// Reached the target aspect ratio.
    Reached(State),
    /// The stop predicate fired between `prev` and `hit`.
    Stopped { prev: State, hit: State },
}

/// Continue a root in `ln r` at fixed `(α, η)` from `start` to `r_target`,
/// with a secant predictor and adaptive steps.
pub(crate) fn march_in_r(
    start: State,
    r_target: f64,
    opts: &SolverOptions,
    mut stop: impl FnMut(&State) -> bool,
) -> Result<MarchEnd, SaddleError> {
    let (alpha, eta) = (start[0], start[2]);
    let target = r_target.ln();
    let mut current = start;
    let mut previous: Option<State> = None;
    let mut step = opts.initial_step;
    let direction = if target >= start[1].ln() { 1.0 } else { -1.0 };
    let mut evals = 0usize;
    while (target - current[1].ln()) * direction > 0.0 {
        evals += 1;
        if evals > 20_000 {
            return Err(SaddleError::NoConvergence("continuation step budget exhausted".into()));
        }
        let ln_r = current[1].ln();
        let next_ln_r = if direction > 0.0 {
            (ln_r + step).min(target)
        } else {
            (ln_r - step).max(target)
        };
        let mut guess = current;
        guess[1] = next_ln_r.exp();
        if let Some(prev) = previous {
            let span = ln_r - prev[1].ln();
            if span.abs() > 0.0 {
                let t = (next_ln_r - ln_r) / span;
                let yc = encode_from(&current, &FREE);
                let yp = encode_from(&prev, &FREE);
                let y: Vec<f64> = yc.iter().zip(&yp).map(|(c, p)| c + t * (c - p)).collect();
                guess = decode_into(&guess, &FREE, &y);
            }
        }
        match solve_free(&guess, FREE, opts.max_newton_iter) {
            Some((x, _, iters)) => {
                previous = Some(current);
                if stop(&x) {
                    return Ok(MarchEnd::Stopped { prev: current, hit: x });
                }
                current = x;
                if iters <= 4 {
                    step = (step * 1.6).min(1.0);
                }
            }
            None => {
                step *= 0.5;
                if step < opts.min_step {
                    let (q0, delta) = (current[3], current[4]);
                    debug!("continuation stalled at r = {}, q0 = {q0:e}", current[1]);
                    if eta == 0.0 && q0 > 1e4 {
                        return Err(SaddleError::InfeasibleRegion { alpha, r: r_target });
                    }
                    return Err(SaddleError::NoConvergence(format!(
                        "continuation in r stalled at r = {} (q0 = {q0:e}, delta = {delta:e})",
                        current[1]
                    )));
                }
            }
        }
        if eta == 0.0 && (current[3] > OVERFLOW_GUARD * 1e-2 || current[4] > OVERFLOW_GUARD * 1e-2) {
            return Err(SaddleError::InfeasibleRegion { alpha, r: r_target });
        }
    }
    Ok(MarchEnd::Reached(current))
}

fn finish(x: &State, p: &ProblemParams) -> Result<ReducedSolution, SaddleError> {
    let res = reduced_residuals(x[3], x[4], x[5], p)?.max_abs();
    if !(res <= ROOT_TOL) {
        return Err(SaddleError::NoConvergence(format!("residual {res:e} above tolerance")));
    }
    Ok(ReducedSolution::from_root(*p, x[3], x[4], x[5], res))
}

/// Solve the reduced system at `p` with default options.
pub fn solve_reduced(
    p: &ProblemParams,
    init: Option<(f64, f64, f64)>,
) -> Result<ReducedSolution, SaddleError> {
    solve_reduced_with(p, init, &SolverOptions::default())
}

/// Solve the reduced system at `p`. With an initial guess `(q₀, Δ, ε)` a
/// direct Newton solve is tried first; otherwise (or if that fails) the root
/// is continued in `r` from the large-`T` limit.
pub fn solve_reduced_with(
    p: &ProblemParams,
    init: Option<(f64, f64, f64)>,
    opts: &SolverOptions,
) -> Result<ReducedSolution, SaddleError> {
    p.validate()?;
    if let Some((q0, delta, epsilon)) = init {
        if q0 > 1.0 && delta > 0.0 {
            let guess = [p.alpha, p.r, p.eta, q0, delta, epsilon];
            if let Some((x, _, _)) = solve_free(&guess, FREE, opts.max_newton_iter) {
                return finish(&x, p);
            }
        }
    }
    let start = self_start(p.alpha, p.eta, p.r, opts)
        .ok_or_else(|| SaddleError::NoConvergence("self-start failed".into()))?;
    match march_in_r(start, p.r, opts, |_| false)? {
        MarchEnd::Reached(x) | MarchEnd::Stopped { hit: x, .. } => finish(&x, p),
    }
}

/// Observable that a level-set solve pins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LevelTarget {
    /// Target value of `√q₀`.
    SqrtQ0(f64),
    /// Target value of `Δ`.
    Delta(f64),
}

impl LevelTarget {
    pub(crate) fn coord(&self) -> Coord {
        match self {
            LevelTarget::SqrtQ0(_) => Coord::Q0,
            LevelTarget::Delta(_) => Coord::Delta,
        }
    }

    /// Value of the pinned coordinate in the state vector.
    pub(crate) fn state_value(&self) -> f64 {
        match *self {
            LevelTarget::SqrtQ0(l) => l * l,
            LevelTarget::Delta(l) => l,
        }
    }

    pub fn level(&self) -> f64 {
        match *self {
            LevelTarget::SqrtQ0(l) | LevelTarget::Delta(l) => l,
        }
    }

    pub fn observe(&self, sol: &ReducedSolution) -> f64 {
        match self {
            LevelTarget::SqrtQ0(_) => sol.q0.sqrt(),
            LevelTarget::Delta(_) => sol.delta,
        }
    }
}

/// Smallest `r ≤ r_max` at fixed `(α, η)` where the observable reaches the
/// level, found by marching `r` upward from the large-`T` limit until the
/// level is crossed and then solving with the level pinned. Returns
/// `Ok(None)` if the level is not reached below `r_max`.
pub fn solve_at_level(
    alpha: f64,
    eta: f64,
    target: LevelTarget,
    r_max: f64,
) -> Result<Option<ReducedSolution>, SaddleError> {
    Ok(level_crossings(alpha, eta, target, r_max, 1)?.into_iter().next())
}

/// Up to `max_count` successive crossings of the level in increasing `r`
/// at fixed `(α, η)`. With `η > 0`, `q₀(r)` returns to 1 as `r → ∞`, so a
/// reachable `√q₀` level is usually crossed twice.
pub fn level_crossings(
    alpha: f64,
    eta: f64,
    target: LevelTarget,
    r_max: f64,
    max_count: usize,
) -> Result<Vec<ReducedSolution>, SaddleError> {
    ProblemParams::new(alpha, r_max, eta)?;
    let opts = SolverOptions::default();
    let level = target.coord() as usize;
    let pinned = target.state_value();
    let start = self_start(alpha, eta, opts.r_start.min(r_max), &opts)
        .ok_or_else(|| SaddleError::NoConvergence("self-start failed".into()))?;
    let mut found = Vec::new();
    if start[level] >= pinned {
        return Ok(found);
    }
    let mut current = start;
    let mut above = false;
    while found.len() < max_count {
        let crossing = march_in_r(current, r_max, &opts, |x| (x[level] >= pinned) != above);
        let (prev, hit) = match crossing {
            Ok(MarchEnd::Stopped { prev, hit }) => (prev, hit),
            Ok(MarchEnd::Reached(_)) => break,
            Err(SaddleError::InfeasibleRegion { .. }) if eta == 0.0 => break,
            Err(e) if !found.is_empty() => {
                debug!("no further crossing: {e}");
                break;
            }
            Err(e) => return Err(e),
        };
        found.push(polish_crossing(&prev, &hit, target)?);
        current = hit;
        above = !above;
    }
    Ok(found)
}

fn polish_crossing(prev: &State, hit: &State, target: LevelTarget) -> Result<ReducedSolution, SaddleError> {
    let level_coord = target.coord();
    let pinned = target.state_value();
    let free = match target {
        LevelTarget::SqrtQ0(_) => [Coord::R, Coord::Delta, Coord::Epsilon],
        LevelTarget::Delta(_) => [Coord::R, Coord::Q0, Coord::Epsilon],
    };
    // Interpolate the crossing in the encoded level coordinate.
    let (a, b) = (level_coord.encode(prev[level_coord as usize]), level_coord.encode(hit[level_coord as usize]));
    let t = if (b - a).abs() > 0.0 { (level_coord.encode(pinned) - a) / (b - a) } else { 1.0 };
    let mut guess = *prev;
    for c in [Coord::R, Coord::Q0, Coord::Delta, Coord::Epsilon] {
        let (ya, yb) = (c.encode(prev[c as usize]), c.encode(hit[c as usize]));
        guess[c as usize] = c.decode(ya + t * (yb - ya));
    }
    guess[level_coord as usize] = pinned;
    let (x, _, _) = solve_free(&guess, free, 60)
        .ok_or_else(|| SaddleError::NoConvergence("level polish failed".into()))?;
    finish(&x, &params_of(&x))
}

/// Named projections of a converged solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    /// `√q₀ − 1`, the relative out-of-sample estimation error of ES.
    pub rel_error: f64,
    /// `Δ`.
    pub susceptibility: f64,
    /// `ε`, the in-sample VaR estimate.
    pub var_in: f64,
    /// `rF/(1 − α)`.
    pub es_in: f64,
}

pub fn observables(sol: &ReducedSolution) -> Observables {
    Observables {
        rel_error: sol.rel_error,
        susceptibility: sol.delta,
        var_in: sol.epsilon,
        es_in: sol.es_in_sample,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::saddle::{eliminate_conjugates, full_residuals};

    #[test]
    fn self_start_converges_at_moderate_r() {
        let p = ProblemParams::new(0.9, 0.25, 0.01).unwrap();
        let sol = solve_reduced(&p, None).unwrap();
        assert!(sol.residual_norm <= ROOT_TOL);
        assert!(sol.q0 > 1.0 && sol.delta > 0.0);
        assert!((sol.rel_error - (sol.q0.sqrt() - 1.0)).abs() < 1e-15);
        assert!((sol.es_in_sample - p.r * sol.free_energy / (1.0 - p.alpha)).abs() < 1e-12);
    }

    #[test]
    fn free_energy_collapses_at_root() {
        let p = ProblemParams::new(0.8, 0.3, 0.07).unwrap();
        let sol = solve_reduced(&p, None).unwrap();
        assert!((sol.free_energy - (1.0 / sol.delta - p.eta * sol.q0)).abs() < 1e-9);
    }

    #[test]
    fn warm_start_reproduces_self_start() {
        let p = ProblemParams::new(0.95, 0.2, 0.02).unwrap();
        let a = solve_reduced(&p, None).unwrap();
        let b = solve_reduced(&p, Some((a.q0 * 1.1, a.delta * 0.9, a.epsilon + 0.1))).unwrap();
        assert!((a.q0 - b.q0).abs() < 1e-10 * a.q0);
        assert!((a.delta - b.delta).abs() < 1e-10 * a.delta);
    }

    #[test]
    fn rejects_invalid_params() {
        for (a, r, e) in [(0.0, 0.1, 0.0), (1.0, 0.1, 0.0), (0.9, 0.0, 0.0), (0.9, 0.1, -1.0)] {
            let p = ProblemParams { alpha: a, r, eta: e };
            assert!(matches!(solve_reduced(&p, None), Err(SaddleError::InvalidParams(_))));
        }
    }

    #[test]
    fn infeasible_above_boundary_without_regularizer() {
        let p = ProblemParams::new(0.975, 0.6, 0.0).unwrap();
        assert!(matches!(solve_reduced(&p, None), Err(SaddleError::InfeasibleRegion { .. })));
    }

    #[test]
    fn lifted_root_satisfies_full_system() {
        let p = ProblemParams::new(0.7, 0.3, 0.0).unwrap();
        let sol = solve_reduced(&p, None).unwrap();
        let op = eliminate_conjugates(sol.q0, sol.delta, sol.epsilon, &p).unwrap();
        assert!(full_residuals(&op, &p).unwrap().max_abs() < 1e-8);
    }

    #[test]
    fn level_solve_hits_target() {
        let sol = solve_at_level(0.975, 0.0, LevelTarget::SqrtQ0(1.05), 0.5).unwrap().unwrap();
        assert!((sol.q0.sqrt() - 1.05).abs() < 1e-9);
        let sol = solve_at_level(0.9, 0.1, LevelTarget::Delta(1.0), 50.0).unwrap().unwrap();
        assert!((sol.delta - 1.0).abs() < 1e-9);
    }

    #[test]
    fn observables_project_fields() {
        let p = ProblemParams::new(0.9, 0.2, 0.01).unwrap();
        let sol = solve_reduced(&p, None).unwrap();
        let o = observables(&sol);
        assert_eq!(o.susceptibility, sol.delta);
        assert_eq!(o.var_in, sol.epsilon);
        assert_eq!(o.es_in, sol.es_in_sample);
        let trivial = ReducedSolution { q0: 1.0, rel_error: 0.0, ..sol };
        assert_eq!(observables(&trivial).rel_error, 0.0);
    }

    #[test]
    fn anchor_level_at_high_confidence() {
        let sol = solve_at_level(0.975, 0.0, LevelTarget::SqrtQ0(1.05), 0.5).unwrap().unwrap();
        assert!((sol.params.r - 100.0 / 7200.0).abs() < 0.1 * 100.0 / 7200.0, "r = {}", sol.params.r);
    }

    #[test]
    fn regularized_solution_above_old_boundary() {
        let p = ProblemParams::new(0.975, 1.0, 0.05).unwrap();
        let sol = solve_reduced(&p, None).unwrap();
        assert!(sol.q0.is_finite() && sol.delta.is_finite() && sol.q0 < 1e3);
    }

    #[test]
    fn q0_diverges_below_boundary() {
        let sol = solve_at_level(0.975, 0.0, LevelTarget::SqrtQ0(1e3), 0.5).unwrap().unwrap();
        assert!(sol.q0 >= 1e6 * (1.0 - 1e-9) && sol.params.r < 0.5);
        let below = solve_reduced(&ProblemParams::new(0.975, sol.params.r * 0.99, 0.0).unwrap(), None)
            .unwrap();
        assert!(below.q0 < sol.q0);
    }

    #[test]
    fn q0_nonincreasing_in_eta() {
        for (alpha, r) in [(0.9, 0.2), (0.975, 0.3), (0.7, 0.1)] {
            let mut last = f64::INFINITY;
            for eta in [0.0, 0.001, 0.01, 0.05, 0.1, 0.3] {
                let sol = solve_reduced(&ProblemParams::new(alpha, r, eta).unwrap(), None).unwrap();
                assert!(sol.q0 <= last * (1.0 + 1e-12), "alpha {alpha} r {r} eta {eta}");
                last = sol.q0;
            }
        }
    }

    #[test]
    fn root_is_stationary_point_of_free_energy() {
        let p = ProblemParams::new(0.9, 0.25, 0.05).unwrap();
        let sol = solve_reduced(&p, None).unwrap();
        let op = sol.order_params().unwrap();
        assert_eq!(op.lambda, 1.0 / sol.delta);
        let h = 1e-5;
        for k in 0..6 {
            let f = |step: f64| {
                let mut x = op;
                match k {
                    0 => x.lambda += step,
                    1 => x.epsilon += step,
                    2 => x.q0 += step,
                    3 => x.delta += step,
                    4 => x.q0_hat += step,
                    _ => x.delta_hat += step,
                }
                crate::saddle::free_energy(&x, &p).unwrap()
            };
            let grad = (f(h) - f(-h)) / (2.0 * h);
            assert!(grad.abs() < 1e-6, "component {k}: {grad:e}");
        }
    }
}

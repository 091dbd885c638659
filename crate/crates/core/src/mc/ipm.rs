//! Primal-dual interior point method for
//!
//! ```text
//! min  η‖w‖² + (1 − α)Tε + Σ_t u_t
//! s.t. x_t·w + ε + u_t ≥ 0,  u_t ≥ 0,  Σ_i w_i = N
//! ```
//!
//! followed by an active-set polish that solves the KKT system of the
//! identified face exactly.

use log::trace;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::McError;

/// Where a scenario sits relative to the VaR threshold at the optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// `x_t·w + ε > 0`, `u_t = 0`.
    Above,
    /// `x_t·w + ε = 0`.
    Kink,
    /// `u_t = −(x_t·w + ε) > 0`.
    Tail,
}

/// One solved instance.
#[derive(Debug, Clone, PartialEq)]
pub struct MCInstance {
    /// `N × T`, column `t` is the return vector of scenario `t`.
    pub returns: DMatrix<f64>,
    pub weights: DVector<f64>,
    pub eps_star: f64,
    pub slacks: DVector<f64>,
    /// Multipliers of `x_t·w + ε + u_t ≥ 0`, in `[0, 1]`.
    pub duals: DVector<f64>,
    pub budget_multiplier: f64,
    pub scenarios: Vec<Scenario>,
    /// Full cost including the regularizer.
    pub objective: f64,
    /// `(1 − α)Tε + Σu`, the cost without the regularizer.
    pub cvar_part: f64,
    pub duality_gap: f64,
    pub iterations: usize,
    /// Whether the active-set polish replaced the interior point iterate.
    pub polished: bool,
}

impl MCInstance {
    pub fn n_assets(&self) -> usize {
        self.returns.nrows()
    }

    pub fn n_obs(&self) -> usize {
        self.returns.ncols()
    }

    /// `(1/N)‖w‖²`.
    pub fn q0(&self) -> f64 {
        self.weights.norm_squared() / self.n_assets() as f64
    }

    /// Indices of tail and kink scenarios.
    pub fn support(&self) -> (Vec<usize>, Vec<usize>) {
        let pick = |k| (0..self.scenarios.len()).filter(|&t| self.scenarios[t] == k).collect();
        (pick(Scenario::Tail), pick(Scenario::Kink))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IpmOptions {
    pub max_iter: usize,
    /// Relative tolerance on the duality gap.
    pub tol: f64,
    /// Relative tolerance on primal and dual residuals.
    pub feas_tol: f64,
    /// Iterate norm beyond which a decreasing objective is taken as unbounded.
    pub divergence_norm: f64,
    pub polish: bool,
}

impl Default for IpmOptions {
    fn default() -> Self {
        Self { max_iter: 200, tol: 1e-10, feas_tol: 1e-9, divergence_norm: 1e8, polish: true }
    }
}

fn max_step(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    v.iter().zip(dv.iter()).filter(|(_, d)| **d < 0.0).map(|(x, d)| -x / d).fold(1.0, f64::min)
}

struct Direction {
    dw: DVector<f64>,
    de: f64,
    du: DVector<f64>,
    ds: DVector<f64>,
    dl: f64,
    dm: DVector<f64>,
    dn: DVector<f64>,
}

struct Residuals {
    rw: DVector<f64>,
    re: f64,
    ru: DVector<f64>,
    rs: DVector<f64>,
    rb: f64,
}

/// Solve the program. `field`, when given, adds `−Σ_i field_i w_i` to the
/// cost; this is the same as shifting the returns of asset `i` by
/// `field_i/((1 − α)T)` in every scenario and moving `ε` accordingly.
pub fn solve_program_with(
    returns: &DMatrix<f64>,
    alpha: f64,
    eta: f64,
    field: Option<&DVector<f64>>,
    opts: &IpmOptions,
) -> Result<MCInstance, McError> {
    let (n, t) = returns.shape();
    if n == 0 || t == 0 {
        return Err(McError::InvalidConfig("empty return matrix".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0 && eta >= 0.0 && eta.is_finite()) {
        return Err(McError::InvalidConfig(format!("alpha = {alpha}, eta = {eta}")));
    }
    let x = returns;
    let nf = n as f64;
    let c_eps = (1.0 - alpha) * t as f64;
    let zero_field = DVector::zeros(n);
    let field = field.unwrap_or(&zero_field);

    let mut w = DVector::from_element(n, 1.0);
    let mut eps = 0.0;
    let mut u = DVector::from_element(t, 1.0);
    let mut s = DVector::from_element(t, 1.0);
    let mut lam = 0.0;
    let mut mu = DVector::from_element(t, 1.0 - alpha);
    let mut nu = DVector::from_element(t, alpha);
    let ones_n = DVector::from_element(n, 1.0);

    let objective = |w: &DVector<f64>, eps: f64, u: &DVector<f64>| {
        eta * w.norm_squared() - field.dot(w) + c_eps * eps + u.sum()
    };
    let residuals = |w: &DVector<f64>, eps: f64, u: &DVector<f64>, s: &DVector<f64>, lam: f64, mu: &DVector<f64>, nu: &DVector<f64>| {
        let mut rs = s - x.tr_mul(w) - u;
        rs.add_scalar_mut(-eps);
        Residuals {
            rw: w * (2.0 * eta) - field - x * mu - &ones_n * lam,
            re: c_eps - mu.sum(),
            ru: DVector::from_element(t, 1.0) - mu - nu,
            rs,
            rb: w.sum() - nf,
        }
    };

    let mut last_obj = f64::INFINITY;
    let mut best = None;
    let mut growing = 0;
    for iter in 0..opts.max_iter {
        let r = residuals(&w, eps, &u, &s, lam, &mu, &nu);
        let gap = s.dot(&mu) + u.dot(&nu);
        let obj = objective(&w, eps, &u);
        let scale = 1.0 + obj.abs();
        let primal = r.rs.amax().max(r.rb.abs() / nf);
        let dual = r.rw.amax().max(r.re.abs() / t as f64).max(r.ru.amax());
        trace!("ipm {iter}: obj {obj:.12e} gap {gap:.3e} primal {primal:.3e} dual {dual:.3e}");
        let primal = primal / (1.0 + w.amax());
        let dual = dual / (1.0 + c_eps);
        if gap <= opts.tol * scale && primal <= opts.feas_tol && dual <= opts.feas_tol {
            let inst = assemble(x, alpha, eta, field, w, eps, u, mu, lam, gap, iter);
            return Ok(if opts.polish { polish_face(&inst, alpha, eta, field).unwrap_or(inst) } else { inst });
        }
        // Near the solution the reduced matrix is badly conditioned and the
        // residuals can stall; remember the best iterate in case they do.
        let merit = (gap / (opts.tol * scale)).max(primal / opts.feas_tol).max(dual / opts.feas_tol);
        if best.as_ref().is_none_or(|b: &(f64, _)| merit < b.0) {
            best = Some((merit, (w.clone(), eps, u.clone(), mu.clone(), lam, gap, iter)));
        }
        let size = w.amax().max(eps.abs());
        if size > opts.divergence_norm {
            if obj < last_obj {
                return Err(McError::Unbounded);
            }
        }
        if size > 10.0 * opts.divergence_norm {
            growing += 1;
            if growing > 5 {
                return Err(McError::Unbounded);
            }
        }
        last_obj = obj;

        // Reduced Newton matrix K = 2ηI + X (D − d dᵀ/δ) Xᵀ.
        let d1 = mu.component_div(&s);
        let d2 = nu.component_div(&u);
        let d = d1.component_mul(&d2).component_div(&(&d1 + &d2));
        let delta_sum = d.sum();
        let mut xs = x.clone();
        for (mut col, dt) in xs.column_iter_mut().zip(d.iter()) {
            col *= dt.sqrt();
        }
        let xd = x * &d;
        let mut k = DMatrix::<f64>::identity(n, n) * (2.0 * eta);
        k.gemm(1.0, &xs, &xs.transpose(), 1.0);
        k.ger(-1.0 / delta_sum, &xd, &xd, 1.0);
        let chol = match k.clone().cholesky() {
            Some(c) => c,
            None => {
                let jitter = 1e-13 * (1.0 + k.diagonal().amax());
                let mut kj = k;
                for i in 0..n {
                    kj[(i, i)] += jitter;
                }
                kj.cholesky().ok_or_else(|| McError::SolverFailure(format!("singular Newton matrix at iteration {iter}")))?
            }
        };
        let y2 = chol.solve(&ones_n);

        let solve_dir = |rc1: &DVector<f64>, rc2: &DVector<f64>| -> Direction {
            // g and h as in the elimination of (u, s, μ, ν).
            let s_inv_rc1 = rc1.component_div(&s);
            let u_inv_rc2 = rc2.component_div(&u);
            let g = d1.component_mul(&r.rs) - &r.ru - &s_inv_rc1 - &u_inv_rc2;
            let d12 = &d1 + &d2;
            let h = -&s_inv_rc1 + d1.component_mul(&r.rs) - d1.component_mul(&g).component_div(&d12);
            let h_sum = h.sum();
            let rhs = -&r.rw + x * &h - &xd * ((h_sum - r.re) / delta_sum);
            let y1 = chol.solve(&rhs);
            let dl = (-r.rb - y1.sum()) / y2.sum();
            let dw = y1 + &y2 * dl;
            let de = (h_sum - r.re - xd.dot(&dw)) / delta_sum;
            let mut a = x.tr_mul(&dw);
            a.add_scalar_mut(de);
            let du = (-d1.component_mul(&a) + &g).component_div(&d12);
            let ds = &a + &du - &r.rs;
            let dm = -&s_inv_rc1 - d1.component_mul(&ds);
            let dn = -&u_inv_rc2 - d2.component_mul(&du);
            Direction { dw, de, du, ds, dl, dm, dn }
        };
        let step_len = |dir: &Direction| {
            max_step(&s, &dir.ds).min(max_step(&u, &dir.du)).min(max_step(&mu, &dir.dm)).min(max_step(&nu, &dir.dn))
        };

        let tau = gap / (2 * t) as f64;
        let aff = solve_dir(&s.component_mul(&mu), &u.component_mul(&nu));
        let a_aff = step_len(&aff);
        let gap_aff = (&s + &aff.ds * a_aff).dot(&(&mu + &aff.dm * a_aff))
            + (&u + &aff.du * a_aff).dot(&(&nu + &aff.dn * a_aff));
        let sigma = (gap_aff / gap).powi(3).clamp(0.0, 1.0);
        let rc1 = s.component_mul(&mu) + aff.ds.component_mul(&aff.dm) - DVector::from_element(t, sigma * tau);
        let rc2 = u.component_mul(&nu) + aff.du.component_mul(&aff.dn) - DVector::from_element(t, sigma * tau);
        let dir = solve_dir(&rc1, &rc2);
        let step = (0.995 * step_len(&dir)).min(1.0);

        w += &dir.dw * step;
        eps += dir.de * step;
        u += &dir.du * step;
        s += &dir.ds * step;
        lam += dir.dl * step;
        mu += &dir.dm * step;
        nu += &dir.dn * step;
        if !(w.iter().all(|v| v.is_finite()) && eps.is_finite()) {
            return Err(McError::SolverFailure("non-finite iterate".into()));
        }
    }
    let size = w.amax().max(eps.abs());
    if eta == 0.0 && size > 1e3 {
        return Err(McError::Unbounded);
    }
    if let Some((merit, (w, eps, u, mu, lam, gap, iter))) = best {
        if merit <= 100.0 {
            let inst = assemble(x, alpha, eta, field, w, eps, u, mu, lam, gap, iter);
            return Ok(if opts.polish { polish_face(&inst, alpha, eta, field).unwrap_or(inst) } else { inst });
        }
    }
    Err(McError::SolverFailure(format!("no convergence in {} iterations", opts.max_iter)))
}

/// Solve the program without an external field.
pub fn solve_program(returns: &DMatrix<f64>, alpha: f64, eta: f64) -> Result<MCInstance, McError> {
    solve_program_with(returns, alpha, eta, None, &IpmOptions::default())
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    x: &DMatrix<f64>,
    alpha: f64,
    eta: f64,
    field: &DVector<f64>,
    w: DVector<f64>,
    eps: f64,
    u_ipm: DVector<f64>,
    mu: DVector<f64>,
    lam: f64,
    gap: f64,
    iterations: usize,
) -> MCInstance {
    let t = x.ncols();
    let c_eps = (1.0 - alpha) * t as f64;
    let mut margin = x.tr_mul(&w);
    margin.add_scalar_mut(eps);
    // Slacks at their optimal value for the given (w, ε).
    let u = margin.map(|m| (-m).max(0.0));
    let scenarios = (0..t)
        .map(|k| {
            let (s_k, u_k) = (margin[k] + u_ipm[k], u_ipm[k]);
            if s_k > mu[k] {
                Scenario::Above
            } else if u_k > 1.0 - mu[k] {
                Scenario::Tail
            } else {
                Scenario::Kink
            }
        })
        .collect();
    let cvar_part = c_eps * eps + u.sum();
    MCInstance {
        returns: x.clone(),
        objective: eta * w.norm_squared() - field.dot(&w) + cvar_part,
        weights: w,
        eps_star: eps,
        slacks: u,
        duals: mu,
        budget_multiplier: lam,
        scenarios,
        cvar_part,
        duality_gap: gap,
        iterations,
        polished: false,
    }
}

/// Solve the equality-constrained problem on the face given by the scenario
/// labels, and accept it if it is primal and dual feasible.
fn polish_face(inst: &MCInstance, alpha: f64, eta: f64, field: &DVector<f64>) -> Option<MCInstance> {
    let x = &inst.returns;
    let (n, t) = x.shape();
    let (tail, kink) = inst.support();
    let m = kink.len();
    // Unknowns: w (n), ε, λ, kink multipliers (m).
    let dim = n + 2 + m;
    let mut a = DMatrix::<f64>::zeros(dim, dim);
    let mut b = DVector::<f64>::zeros(dim);
    let tail_sum: DVector<f64> = tail.iter().fold(DVector::zeros(n), |acc, &k| acc + x.column(k));
    for i in 0..n {
        a[(i, i)] = 2.0 * eta;
        a[(i, n + 1)] = -1.0;
        for (j, &k) in kink.iter().enumerate() {
            a[(i, n + 2 + j)] = -x[(i, k)];
        }
        b[i] = tail_sum[i] + field[i];
    }
    // ε row: (1 − α)T − |tail| − Σ m = 0.
    for j in 0..m {
        a[(n, n + 2 + j)] = 1.0;
    }
    b[n] = (1.0 - alpha) * t as f64 - tail.len() as f64;
    // Budget.
    for i in 0..n {
        a[(n + 1, i)] = 1.0;
    }
    b[n + 1] = n as f64;
    // Kink equalities x_k·w + ε = 0.
    for (j, &k) in kink.iter().enumerate() {
        for i in 0..n {
            a[(n + 2 + j, i)] = x[(i, k)];
        }
        a[(n + 2 + j, n)] = 1.0;
    }
    let sol = a.lu().solve(&b)?;
    let w = sol.rows(0, n).into_owned();
    let eps = sol[n];
    let lam = sol[n + 1];
    let tol = 1e-9;
    let mut margin = x.tr_mul(&w);
    margin.add_scalar_mut(eps);
    let mut duals = DVector::zeros(t);
    for (k, sc) in inst.scenarios.iter().enumerate() {
        match sc {
            Scenario::Above if margin[k] < -tol => return None,
            Scenario::Tail if margin[k] > tol => return None,
            Scenario::Tail => duals[k] = 1.0,
            _ => {}
        }
    }
    for (j, &k) in kink.iter().enumerate() {
        let mk = sol[n + 2 + j];
        if !(-tol..=1.0 + tol).contains(&mk) {
            return None;
        }
        duals[k] = mk.clamp(0.0, 1.0);
    }
    let u = margin.map(|v| (-v).max(0.0));
    let cvar_part = (1.0 - alpha) * t as f64 * eps + u.sum();
    let objective = eta * w.norm_squared() - field.dot(&w) + cvar_part;
    // Accept only if it does not lose against the interior point iterate.
    if objective > inst.objective + 1e-9 * (1.0 + inst.objective.abs()) {
        return None;
    }
    Some(MCInstance {
        weights: w,
        eps_star: eps,
        slacks: u,
        duals,
        budget_multiplier: lam,
        objective,
        cvar_part,
        duality_gap: 0.0,
        polished: true,
        ..inst.clone()
    })
}

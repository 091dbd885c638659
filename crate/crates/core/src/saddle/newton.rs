//! Small dense Newton solver with backtracking, and a Levenberg–Marquardt
//! fallback for steps where the Jacobian is singular or gives no descent.

/// Residual and Jacobian at a point, or `None` outside the domain.
pub(crate) type Eval<const N: usize> = Option<([f64; N], [[f64; N]; N])>;

#[derive(Debug, Clone, Copy)]
pub(crate) struct NewtonOptions {
    pub max_iter: usize,
    /// Residual max-norm accepted as converged.
    pub tol: f64,
    /// Cap on the max-norm of a single Newton step in the unknowns.
    pub max_step: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { max_iter: 60, tol: 1e-12, max_step: 2.0 }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct NewtonOutcome<const N: usize> {
    pub x: [f64; N],
    pub residual: f64,
    pub iterations: usize,
}

fn max_abs<const N: usize>(v: &[f64; N]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn merit<const N: usize>(v: &[f64; N]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Solve `A x = b` by Gaussian elimination with partial pivoting.
pub(crate) fn lu_solve<const N: usize>(mut a: [[f64; N]; N], mut b: [f64; N]) -> Option<[f64; N]> {
    let scale = a.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    if !(scale > 0.0) || !scale.is_finite() {
        return None;
    }
    for col in 0..N {
        let pivot = (col..N).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() <= 1e-14 * scale {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..N {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..N {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = [0.0; N];
    for row in (0..N).rev() {
        let mut acc = b[row];
        for k in row + 1..N {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

fn clip_step<const N: usize>(mut dx: [f64; N], max_step: f64) -> [f64; N] {
    let m = max_abs(&dx);
    if m > max_step {
        dx.iter_mut().for_each(|v| *v *= max_step / m);
    }
    dx
}

fn add<const N: usize>(x: &[f64; N], dx: &[f64; N], t: f64) -> [f64; N] {
    let mut y = *x;
    for i in 0..N {
        y[i] += t * dx[i];
    }
    y
}

/// Damped Newton from `x0`. Iterates until the residual stops improving at
/// roundoff level, then reports success if it is within `opts.tol`.
pub(crate) fn newton_solve<const N: usize, F>(
    mut f: F,
    x0: [f64; N],
    opts: NewtonOptions,
) -> Option<NewtonOutcome<N>>
where
    F: FnMut(&[f64; N]) -> Eval<N>,
{
    let mut x = x0;
    let (mut fx, mut jac) = f(&x)?;
    let mut iterations = 0;
    // Iterations needed to first meet the tolerance; a few more polish the
    // root towards roundoff.
    let mut converged_at = None;
    while iterations < opts.max_iter {
        let norm = max_abs(&fx);
        if norm <= opts.tol {
            converged_at.get_or_insert(iterations);
        }
        if norm <= opts.tol * 1e-3 || converged_at.is_some_and(|k| iterations >= k + 2) {
            break;
        }
        iterations += 1;
        let neg = fx.map(|v| -v);
        let step = match lu_solve(jac, neg) {
            Some(dx) => Some(clip_step(dx, opts.max_step)),
            None => lm_step(&jac, &fx, 1e-6).map(|dx| clip_step(dx, opts.max_step)),
        };
        let Some(dx) = step else { break };
        let m0 = merit(&fx);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let y = add(&x, &dx, t);
            if let Some((fy, jy)) = f(&y) {
                if fy.iter().all(|v| v.is_finite()) && merit(&fy) < (1.0 - 1e-4 * t) * m0 {
                    accepted = Some((y, fy, jy));
                    break;
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((y, fy, jy)) => {
                x = y;
                fx = fy;
                jac = jy;
            }
            None => {
                // No descent from the Newton direction: try a regularized step.
                if let Some((y, fy, jy)) = lm_search(&mut f, &x, &fx, &jac, opts.max_step) {
                    x = y;
                    fx = fy;
                    jac = jy;
                } else {
                    break;
                }
            }
        }
    }
    let residual = max_abs(&fx);
    let iterations = converged_at.unwrap_or(iterations);
    (residual <= opts.tol).then_some(NewtonOutcome { x, residual, iterations })
}

/// `(JᵀJ + μ·diag(JᵀJ)) dx = −Jᵀf`.
fn lm_step<const N: usize>(jac: &[[f64; N]; N], fx: &[f64; N], mu: f64) -> Option<[f64; N]> {
    let mut a = [[0.0; N]; N];
    let mut g = [0.0; N];
    for i in 0..N {
        for j in 0..N {
            a[i][j] = (0..N).map(|k| jac[k][i] * jac[k][j]).sum();
        }
        g[i] = -(0..N).map(|k| jac[k][i] * fx[k]).sum::<f64>();
    }
    for i in 0..N {
        a[i][i] += mu * a[i][i].max(1e-12);
    }
    lu_solve(a, g)
}

fn lm_search<const N: usize, F>(
    f: &mut F,
    x: &[f64; N],
    fx: &[f64; N],
    jac: &[[f64; N]; N],
    max_step: f64,
) -> Option<([f64; N], [f64; N], [[f64; N]; N])>
where
    F: FnMut(&[f64; N]) -> Eval<N>,
{
    let m0 = merit(fx);
    let mut mu = 1e-3;
    for _ in 0..20 {
        if let Some(dx) = lm_step(jac, fx, mu) {
            let y = add(x, &clip_step(dx, max_step), 1.0);
            if let Some((fy, jy)) = f(&y) {
                if fy.iter().all(|v| v.is_finite()) && merit(&fy) < m0 {
                    return Some((y, fy, jy));
                }
            }
        }
        mu *= 10.0;
    }
    None
}

//! Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails. Runs as part of `cargo test`; on its own with
//! `cargo test --release --test acceptance`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use replica_es::geometry::{
    trace_iso_delta, trace_iso_q0, trace_phase_boundary, trace_r_of_eta, transition_width, Branch,
    BoundaryOptions, CurveResult,
};
use replica_es::mc::{estimate_summary, gaussian_es, scaled_returns, solve_program, MCConfig, MCSummary};
use replica_es::saddle::{full_residuals, solve_at_level, solve_reduced, LevelTarget, ProblemParams, ReducedSolution};
use replica_es::special_fn::{g, g_prime, normal_quantile, phi, psi, w_fn};

type Check = Result<String, String>;

struct Report {
    failed: usize,
}

impl Report {
    fn run(&mut self, id: u32, title: &str, budget: Duration, f: impl FnOnce() -> Check) {
        let t = Instant::now();
        let res = f();
        let el = t.elapsed();
        let (ok, detail) = match res {
            Ok(d) if el <= budget => (true, d),
            Ok(d) => (false, format!("{d}; over time budget {budget:?}")),
            Err(d) => (false, d),
        };
        if !ok {
            self.failed += 1;
        }
        println!(
            "criterion {id:>2} {} {title}: {detail} [{:.2}s]",
            if ok { "PASS" } else { "FAIL" },
            el.as_secs_f64()
        );
    }
}

fn ensure(cond: bool, msg: String) -> Result<String, String> {
    if cond {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn params(alpha: f64, r: f64, eta: f64) -> ProblemParams {
    ProblemParams::new(alpha, r, eta).unwrap()
}

fn boundary_at(b: &CurveResult, alpha: f64) -> f64 {
    b.points
        .windows(2)
        .find(|w| w[0].x <= alpha && alpha <= w[1].x)
        .map(|w| w[0].r + (alpha - w[0].x) / (w[1].x - w[0].x) * (w[1].r - w[0].r))
        .unwrap()
}

/// `r` on branch `b` at swept value `x`, by linear interpolation.
fn r_at(c: &CurveResult, b: Branch, x: f64) -> Option<f64> {
    let pts: Vec<_> = c.branch(b).collect();
    pts.windows(2).find_map(|w| {
        let (lo, hi) = if w[0].x <= w[1].x { (w[0], w[1]) } else { (w[1], w[0]) };
        (lo.x <= x && x <= hi.x && hi.x > lo.x).then(|| lo.r + (x - lo.x) / (hi.x - lo.x) * (hi.r - lo.r))
    })
}

/// Out-of-sample ES of a Gaussian portfolio with standard deviation `s`,
/// from the threshold form `ε + E[(L − ε)⁺]/(1 − α)` at `ε = s z_α`.
fn gaussian_portfolio_es(s: f64, alpha: f64) -> f64 {
    let eps = s * normal_quantile(alpha);
    eps + s * psi(-eps / s) / (1.0 - alpha)
}

struct McPoint {
    label: &'static str,
    summary: Result<MCSummary, String>,
    replica: ReducedSolution,
}

fn mc_point(label: &'static str, n: usize, t: usize, alpha: f64, eta: f64) -> McPoint {
    let cfg = MCConfig::new(n, t, alpha, eta, 100, 1);
    McPoint {
        label,
        summary: estimate_summary(&cfg).map_err(|e| e.to_string()),
        replica: solve_reduced(&params(alpha, cfg.r(), eta), None).unwrap(),
    }
}

fn within_3se(name: &str, mean: f64, se: f64, reference: f64) -> (bool, String) {
    let z = (mean - reference) / se;
    (z.abs() <= 3.0, format!("{name} {mean:.5}±{se:.5} vs {reference:.5} (z {z:+.2})"))
}

fn main() -> ExitCode {
    let mut rep = Report { failed: 0 };
    let sec = Duration::from_secs;

    rep.run(1, "sqrt(q0) = 1.05 at alpha 0.975, eta 0", sec(1), || {
        let sol = solve_at_level(0.975, 0.0, LevelTarget::SqrtQ0(1.05), 1e3).map_err(|e| e.to_string())?;
        let r = sol.ok_or("level not reached")?.params.r;
        let want = 100.0 / 7200.0;
        ensure((r - want).abs() <= 0.1 * want, format!("r = {r:.6}, expected {want:.6} ± 10%"))
    });

    let mut boundary = None;
    rep.run(2, "phase boundary reaches 0.5 as alpha -> 1", sec(60), || {
        let b = trace_phase_boundary((0.6, 0.999), &BoundaryOptions::default()).map_err(|e| e.to_string())?;
        let last = *b.points.last().ok_or("empty boundary")?;
        let monotone = b.points.windows(2).all(|w| w[1].r >= w[0].r - 1e-12);
        let msg = format!("r_c({}) = {:.10}, monotone {monotone}", last.x, last.r);
        boundary = Some(b);
        ensure(last.x == 0.999 && (0.45..=0.5).contains(&last.r) && monotone, msg)
    });
    let r_c = boundary.as_ref().map(|b| boundary_at(b, 0.975));

    rep.run(3, "q0 diverges below the feasibility loss point", sec(60), || {
        let r_c = r_c.ok_or("no boundary")?;
        let at = |r: f64| solve_reduced(&params(0.975, r, 0.0), None);
        let (mut lo, mut hi) = (0.1, 0.9);
        if at(lo).is_err() || at(hi).is_ok() {
            return Err("bisection interval does not bracket feasibility loss".into());
        }
        let mut q0 = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            match at(mid) {
                Ok(s) => {
                    lo = mid;
                    q0 = s.q0;
                    if q0 > 1e6 {
                        break;
                    }
                }
                Err(_) => hi = mid,
            }
        }
        ensure(q0 > 1e6 && lo < r_c, format!("q0 = {q0:.3e} at r = {lo:.12} < r_c = {r_c:.12}"))
    });

    rep.run(4, "regularizer removes the transition", sec(1), || {
        let s = solve_reduced(&params(0.975, 1.0, 0.05), None).map_err(|e| e.to_string())?;
        ensure(
            s.q0.is_finite() && s.delta.is_finite() && 1.0 > r_c.unwrap_or(0.5),
            format!("q0 = {:.6}, delta = {:.6} at r = 1, eta = 0.05", s.q0, s.delta),
        )
    });

    rep.run(5, "reduced roots satisfy the full stationarity conditions", sec(300), || {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let mut worst: f64 = 0.0;
        for _ in 0..50 {
            let alpha = rng.gen_range(0.6..0.99);
            let eta = if rng.gen_bool(0.2) { 0.0 } else { 10f64.powf(rng.gen_range(-3.0..0.0)) };
            let r = if eta == 0.0 { rng.gen_range(0.01..0.35) } else { 10f64.powf(rng.gen_range(-2.0..0.5)) };
            let p = params(alpha, r, eta);
            let sol = solve_reduced(&p, None).map_err(|e| format!("{p:?}: {e}"))?;
            let op = sol.order_params().map_err(|e| e.to_string())?;
            let res = full_residuals(&op, &p).map_err(|e| e.to_string())?.max_abs();
            worst = worst.max(res);
        }
        ensure(worst <= 1e-8, format!("max residual over 50 draws {worst:.2e}"))
    });

    let mut points = vec![];
    rep.run(6, "Monte Carlo q0, delta, eps within 3 SE of replica", sec(900), || {
        points = vec![
            mc_point("N200 T1000 a0.9 eta0.01", 200, 1000, 0.9, 0.01),
            mc_point("N300 T300 a0.9 eta0.05", 300, 300, 0.9, 0.05),
            mc_point("N300 T300 a0.975 eta0.05", 300, 300, 0.975, 0.05),
        ];
        let mut all = true;
        let mut parts = vec![];
        for p in &points {
            let s = p.summary.as_ref().map_err(|e| format!("{}: {e}", p.label))?;
            let checks = [
                within_3se("q0", s.q0_hat.mean, s.q0_hat.se, p.replica.q0),
                within_3se("delta", s.delta_hat.mean, s.delta_hat.se, p.replica.delta),
                within_3se("eps", s.eps_hat.mean, s.eps_hat.se, p.replica.epsilon),
            ];
            all &= checks.iter().all(|c| c.0);
            parts.push(format!("{}: {}", p.label, checks.map(|c| c.1).join(", ")));
        }
        ensure(all, parts.join("; "))
    });

    rep.run(7, "out-of-sample ES ratio equals sqrt(q0)", sec(300), || {
        let cfg = MCConfig::new(50, 200, 0.9, 0.05, 20, 5);
        let mut worst: f64 = 0.0;
        for k in 0..cfg.n_samples as u64 {
            let inst = solve_program(&scaled_returns(&cfg, k), cfg.alpha, cfg.eta).map_err(|e| e.to_string())?;
            let s = (inst.weights.norm_squared() / cfg.n_assets as f64).sqrt();
            let ratio = gaussian_portfolio_es(s, cfg.alpha) / gaussian_es(cfg.alpha);
            worst = worst.max((ratio - inst.q0().sqrt()).abs());
        }
        let mut all = worst <= 1e-12;
        let mut parts = vec![format!("max per-instance |ratio - sqrt(q0)| {worst:.1e}")];
        for p in &points {
            let s = p.summary.as_ref().map_err(|e| format!("{}: {e}", p.label))?;
            let (ok, msg) = within_3se("ratio", s.es_ratio_hat.mean, s.es_ratio_hat.se, p.replica.q0.sqrt());
            all &= ok;
            parts.push(format!("{}: {msg}", p.label));
        }
        ensure(all, parts.join("; "))
    });

    rep.run(8, "in-sample ES matches the Monte Carlo objective", sec(1), || {
        let mut all = true;
        let mut parts = vec![];
        for p in &points {
            let s = p.summary.as_ref().map_err(|e| format!("{}: {e}", p.label))?;
            let cvar = within_3se("cvar part", s.es_in_hat.mean, s.es_in_hat.se, p.replica.es_in_cvar);
            let cost = within_3se("full cost", s.cost_hat.mean, s.cost_hat.se, p.replica.es_in_sample);
            let mixed = (s.es_in_hat.mean - p.replica.es_in_sample) / s.es_in_hat.se;
            all &= cvar.0 && cost.0;
            parts.push(format!("{}: {}, {} (rF/(1-a) vs cvar part z {mixed:+.1}, informational)", p.label, cvar.1, cost.1));
        }
        ensure(all, parts.join("; "))
    });

    rep.run(9, "r(eta) turning point and transition width", sec(300), || {
        let r_c = r_c.ok_or("no boundary")?;
        let c = trace_r_of_eta(0.975, 1.05, (1e-4, 10.0)).map_err(|e| e.to_string())?;
        let &turn = c.turning_points.first().ok_or("no turning point")?;
        let tp = c.points[turn];
        let eta = 0.9 * tp.x;
        let (lo, hi) = (r_at(&c, Branch::Lower, eta), r_at(&c, Branch::Upper, eta));
        let width = transition_width(&c).map_err(|e| e.to_string())?;
        let msg = format!(
            "turning at eta {:.5}, r {:.5} <= r_c {r_c:.5}; at eta {eta:.5} r = {lo:.5?} and {hi:.5?}; width {width:.3}",
            tp.x, tp.r
        );
        ensure(lo.zip(hi).is_some_and(|(a, b)| a < b) && tp.r <= r_c && width <= 10.0, msg)
    });

    rep.run(10, "special-function derivative chains and knot continuity", sec(1), || {
        let h = 1e-4;
        let mut worst: f64 = 0.0;
        for i in 0..=1200 {
            let x = -6.0 + 0.01 * i as f64;
            let d_psi = (psi(x + h) - psi(x - h)) / (2.0 * h);
            let d_w = (w_fn(x + h) - w_fn(x - h)) / (2.0 * h);
            worst = worst.max((d_psi - phi(x)).abs()).max((d_w - psi(x)).abs());
        }
        let mut jump: f64 = 0.0;
        for k in [-1.0, 0.0] {
            let (a, b) = (k - 1e-12, k + 1e-12);
            jump = jump.max((g(a) - g(b)).abs()).max((g_prime(a) - g_prime(b)).abs());
        }
        ensure(worst <= 1e-8 && jump <= 1e-10, format!("max FD error {worst:.1e}, max knot jump {jump:.1e}"))
    });

    rep.run(11, "monotonicity in eta and contour nesting", sec(300), || {
        let etas = [0.0, 1e-3, 0.01, 0.05, 0.1, 0.3, 1.0];
        for alpha in [0.7, 0.9, 0.975] {
            for r in [0.05, 0.2, 0.35] {
                let q: Vec<f64> = etas
                    .iter()
                    .map(|&e| solve_reduced(&params(alpha, r, e), None).map(|s| s.q0))
                    .collect::<Result<_, _>>()
                    .map_err(|e| e.to_string())?;
                if q.windows(2).any(|w| w[1] > w[0] * (1.0 + 1e-12)) {
                    return Err(format!("q0 increases with eta at alpha {alpha}, r {r}: {q:?}"));
                }
            }
        }
        let alphas = [0.65, 0.75, 0.85, 0.95, 0.99];
        let q0_curves = [1.05, 1.1, 1.2, 1.5, 2.0]
            .iter()
            .map(|&l| trace_iso_q0(l, 0.0, (0.6, 0.995)))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        let delta_curves = [0.0, 0.01, 0.03, 0.1, 0.3]
            .iter()
            .map(|&eta| trace_iso_delta(1.0, eta, (0.6, 0.995)))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        let ordered = |curves: &[CurveResult], b: Branch| {
            alphas.iter().all(|&a| {
                let rs: Vec<_> = curves.iter().map(|c| r_at(c, b, a)).collect();
                rs.iter().all(Option::is_some) && rs.windows(2).all(|w| w[0] < w[1])
            })
        };
        let nested = ordered(&q0_curves, Branch::Single);
        let shifted = ordered(&delta_curves, Branch::Single);
        ensure(
            nested && shifted,
            format!("q0 nonincreasing in eta on 9 points; iso-q0 nested {nested}; delta = 1 contour shifts up with eta {shifted}"),
        )
    });

    if rep.failed == 0 {
        println!("acceptance: all 11 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} criteria fail", rep.failed);
        ExitCode::FAILURE
    }
}

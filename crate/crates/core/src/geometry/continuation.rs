use log::debug;

use crate::error::CurveError;
use crate::saddle::{
    decode_into, encode_from, eval_encoded, lu_solve, newton_solve, params_of, reduced_residuals,
    level_crossings, solve_free, Coord, LevelTarget, NewtonOptions, ReducedSolution, State,
};

use super::{Branch, CORRECTOR_TOL, CurveKind, CurvePoint, CurveResult, CurveSpec, CurveStatus};

const MAX_POINTS: usize = 20_000;
const R_MIN: f64 = 1e-8;

/// A level set as a one-dimensional manifold in four encoded coordinates.
struct Frame {
    /// Free coordinates; the first is the swept one.
    free: [Coord; 4],
    base: State,
    target: LevelTarget,
}

impl Frame {
    fn new(spec: &CurveSpec) -> Self {
        let level = spec.level.unwrap_or(f64::NAN);
        let (free, target) = match spec.kind {
            CurveKind::IsoQ0 | CurveKind::PhaseBoundary => {
                ([Coord::Alpha, Coord::R, Coord::Delta, Coord::Epsilon], LevelTarget::SqrtQ0(level))
            }
            CurveKind::IsoDelta => {
                ([Coord::Alpha, Coord::R, Coord::Q0, Coord::Epsilon], LevelTarget::Delta(level))
            }
            CurveKind::ROfEta => {
                ([Coord::Eta, Coord::R, Coord::Delta, Coord::Epsilon], LevelTarget::SqrtQ0(level))
            }
        };
        let mut base = [spec.alpha.unwrap_or(0.5), 1.0, spec.eta.unwrap_or(0.0), 2.0, 1.0, 0.0];
        base[target.coord() as usize] = target.state_value();
        Self { free, base, target }
    }

    fn swept(&self) -> usize {
        self.free[0] as usize
    }

    fn state(&self, y: &[f64; 4]) -> State {
        decode_into(&self.base, &self.free, y)
    }

    fn encode(&self, x: &State) -> [f64; 4] {
        encode_from(x, &self.free)
    }

    fn eval(&self, y: &[f64; 4]) -> Option<([f64; 3], [[f64; 4]; 3])> {
        eval_encoded(&self.state(y), &self.free)
    }

    /// Unit tangent of the level set at `y`, oriented along `previous`.
    fn tangent(&self, y: &[f64; 4], previous: &[f64; 4]) -> Option<[f64; 4]> {
        let (_, jac) = self.eval(y)?;
        let a = [jac[0], jac[1], jac[2], *previous];
        let t = lu_solve(a, [0.0, 0.0, 0.0, 1.0])?;
        let norm = t.iter().map(|v| v * v).sum::<f64>().sqrt();
        let sign = if dot(&t, previous) < 0.0 { -1.0 } else { 1.0 };
        Some(t.map(|v| sign * v / norm))
    }

    /// Newton on the level set plus the arclength constraint through `pred`.
    fn correct(&self, pred: &[f64; 4], t: &[f64; 4]) -> Option<([f64; 4], usize)> {
        let f = |z: &[f64; 4]| {
            let (res, jac) = self.eval(z)?;
            let along = (0..4).map(|k| t[k] * (z[k] - pred[k])).sum::<f64>();
            Some(([res[0], res[1], res[2], along], [jac[0], jac[1], jac[2], *t]))
        };
        let opts = NewtonOptions { max_iter: 12, tol: CORRECTOR_TOL, max_step: 1.0 };
        newton_solve(f, *pred, opts).map(|o| (o.x, o.iterations))
    }

    /// Root with the swept coordinate pinned to `value`.
    fn pin(&self, guess: &State, value: f64) -> Option<State> {
        let mut g = *guess;
        g[self.swept()] = value;
        let rest = [self.free[1], self.free[2], self.free[3]];
        solve_free(&g, rest, 40).map(|(x, _, _)| x)
    }
}

fn dot(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    (0..4).map(|k| a[k] * b[k]).sum()
}

fn to_solution(x: &State) -> ReducedSolution {
    let p = params_of(x);
    let res = reduced_residuals(x[3], x[4], x[5], &p).map(|r| r.max_abs()).unwrap_or(f64::NAN);
    ReducedSolution::from_root(p, x[3], x[4], x[5], res)
}

struct Walk {
    states: Vec<State>,
    truncated: Option<String>,
}

fn walk(frame: &Frame, spec: &CurveSpec, start: &State, direction: f64) -> Walk {
    let swept = frame.swept();
    let (lo, hi) = spec.range;
    let mut states = vec![*start];
    let mut y = frame.encode(start);
    let mut h = spec.max_step.min(0.1 * (frame.free[0].encode(hi) - frame.free[0].encode(lo)).abs());
    let mut truncated = None;
    let mut t = match frame.tangent(&y, &[direction, 0.0, 0.0, 0.0]) {
        Some(t) => t,
        None => {
            return Walk { states, truncated: Some("singular tangent at the start".into()) }
        }
    };
    while states.len() < MAX_POINTS {
        let pred: [f64; 4] = std::array::from_fn(|k| y[k] + h * t[k]);
        let corr = frame.correct(&pred, &t);
        let Some((z, iters)) = corr else {
            h *= 0.5;
            if h < spec.min_step {
                truncated = Some(format!("step fell below {} near {}", spec.min_step, states.last().unwrap()[swept]));
                break;
            }
            continue;
        };
        let x = frame.state(&z);
        let Some(t_new) = frame.tangent(&z, &t) else {
            h *= 0.5;
            if h < spec.min_step {
                truncated = Some("singular tangent".into());
                break;
            }
            continue;
        };
        if x[swept] < lo || x[swept] > hi {
            let edge = if x[swept] < lo { lo } else { hi };
            if let Some(end) = frame.pin(&x, edge) {
                states.push(end);
            }
            break;
        }
        if x[1] > spec.r_max || x[1] < R_MIN {
            break;
        }
        states.push(x);
        y = z;
        t = t_new;
        if iters > 5 {
            h = (0.5 * h).max(spec.min_step);
        } else if iters <= 2 {
            h = (2.0 * h).min(spec.max_step);
        }
    }
    if states.len() >= MAX_POINTS {
        truncated = Some("point budget exhausted".into());
    }
    Walk { states, truncated }
}

/// Level crossings in `r` at the first swept value where the level is
/// reached, smallest `r` first.
fn start_points(frame: &Frame, spec: &CurveSpec) -> Result<Vec<State>, CurveError> {
    let (lo, hi) = spec.range;
    let level = frame.target.level();
    let n = 24;
    let (a, b) = (frame.free[0].encode(lo), frame.free[0].encode(hi));
    for i in 0..=n {
        let s = frame.free[0].decode(a + (b - a) * i as f64 / n as f64);
        let found = match spec.kind {
            CurveKind::ROfEta => level_crossings(spec.alpha.unwrap(), s, frame.target, spec.r_max, 2)?,
            _ => level_crossings(s, spec.eta.unwrap_or(0.0), frame.target, spec.r_max, 2)?,
        };
        if !found.is_empty() {
            debug!("{} starts at swept = {s}: r = {:?}", spec.kind.name(), found.iter().map(|f| f.params.r).collect::<Vec<_>>());
            return Ok(found.iter().map(|sol| {
                let p = sol.params;
                [p.alpha, p.r, p.eta, sol.q0, sol.delta, sol.epsilon]
            }).collect());
        }
    }
    Err(CurveError::LevelUnreachable(level))
}

/// Whether the polyline passes through `x` (same swept value, `r` within a
/// relative `1e-4`).
fn passes_through(states: &[State], swept: usize, x: &State) -> bool {
    states.windows(2).any(|w| {
        let (a, b) = (w[0], w[1]);
        let (sa, sb) = (a[swept] - x[swept], b[swept] - x[swept]);
        if sa * sb > 0.0 || sa == sb {
            return false;
        }
        let t = sa / (sa - sb);
        let ln_r = a[1].ln() + t * (b[1].ln() - a[1].ln());
        (ln_r - x[1].ln()).abs() < 1e-4
    })
}

/// One connected piece of the level set, traced both ways from `start`.
struct Component {
    states: Vec<State>,
    start_index: usize,
    truncated: Option<String>,
}

fn component(frame: &Frame, spec: &CurveSpec, start: &State) -> Component {
    let back = walk(frame, spec, start, -1.0);
    let fwd = walk(frame, spec, start, 1.0);
    let mut states: Vec<State> = back.states.iter().rev().copied().collect();
    states.extend_from_slice(&fwd.states[1..]);
    let start = states[back.states.len() - 1];
    // A walk that clamps to the range edge at its first step repeats the start.
    states.dedup_by(|b, a| a.iter().zip(b.iter()).all(|(x, y)| (x - y).abs() <= 1e-12 * (1.0 + x.abs())));
    let start_index = states.iter().position(|x| *x == start).unwrap_or(0);
    Component { states, start_index, truncated: back.truncated.or(fwd.truncated) }
}

/// Trace a level-set curve (`iso_q0`, `iso_delta` or `r_of_eta`).
///
/// Starts are the level crossings in `r` at the first swept value where
/// the level is reached. The curve is continued both ways from the
/// smallest-`r` start; the piece containing it is the lower branch and
/// branches alternate at each turning point. A second crossing not on that
/// piece (the two branches join outside the range) is traced as a separate
/// upper piece, emitted after the first.
pub fn trace(spec: &CurveSpec) -> Result<CurveResult, CurveError> {
    spec.validate()?;
    if spec.kind == CurveKind::PhaseBoundary {
        return Err(CurveError::InvalidSpec("use trace_phase_boundary for the boundary".into()));
    }
    let frame = Frame::new(spec);
    let swept = frame.swept();
    let starts = start_points(&frame, spec)?;
    let first = component(&frame, spec, &starts[0]);
    let second = starts[1..]
        .iter()
        .find(|s| !passes_through(&first.states, swept, s))
        .map(|s| component(&frame, spec, s));

    let turning_in = |states: &[State]| -> Vec<usize> {
        (1..states.len().saturating_sub(1))
            .filter(|&i| (states[i][swept] - states[i - 1][swept]) * (states[i + 1][swept] - states[i][swept]) < 0.0)
            .collect()
    };
    let turns = turning_in(&first.states);
    // Branches alternate at each turning point; the turning point itself is
    // counted with the branch before it.
    let segment = |i: usize| turns.iter().filter(|&&k| k < i).count();
    let two_branches = !turns.is_empty() || second.is_some();
    let mut points: Vec<CurvePoint> = first
        .states
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let branch = if !two_branches {
                Branch::Single
            } else if segment(i) == segment(first.start_index) {
                Branch::Lower
            } else {
                Branch::Upper
            };
            point(x, swept, branch, turns.contains(&i))
        })
        .collect();
    let mut turning_points = turns.clone();
    let mut truncated = first.truncated;
    if let Some(c) = second {
        let offset = points.len();
        let t2 = turning_in(&c.states);
        points.extend(c.states.iter().enumerate().map(|(i, x)| point(x, swept, Branch::Upper, t2.contains(&i))));
        turning_points.extend(t2.iter().map(|i| i + offset));
        truncated = truncated.or(c.truncated);
    }
    let status = match truncated {
        Some(reason) => CurveStatus::Truncated(reason),
        None => CurveStatus::Complete,
    };
    Ok(CurveResult { spec: *spec, points, turning_points, status })
}

fn point(x: &State, swept: usize, branch: Branch, turning: bool) -> CurvePoint {
    CurvePoint { x: x[swept], r: x[1], solution: to_solution(x), branch, turning }
}

pub fn trace_iso_q0(level_sqrt_q0: f64, eta: f64, alpha_range: (f64, f64)) -> Result<CurveResult, CurveError> {
    trace(&CurveSpec::iso_q0(level_sqrt_q0, eta, alpha_range))
}

pub fn trace_iso_delta(level_delta: f64, eta: f64, alpha_range: (f64, f64)) -> Result<CurveResult, CurveError> {
    trace(&CurveSpec::iso_delta(level_delta, eta, alpha_range))
}

pub fn trace_r_of_eta(alpha: f64, level_sqrt_q0: f64, eta_range: (f64, f64)) -> Result<CurveResult, CurveError> {
    trace(&CurveSpec::r_of_eta(alpha, level_sqrt_q0, eta_range))
}

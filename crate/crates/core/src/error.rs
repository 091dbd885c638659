use thiserror::Error;

/// Errors raised by the saddle-point machinery.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SaddleError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("potential is not strictly convex (delta_hat + eta = {0})")]
    NonConvexPotential(f64),
    #[error("cannot lift q0 = {0} < 1: conjugate q0_hat would be positive")]
    InfeasibleLift(f64),
    #[error("reduced system evaluated outside its domain (q0 = {q0}, delta = {delta})")]
    DomainError { q0: f64, delta: f64 },
    #[error("adaptive quadrature did not reach tolerance (estimated error {0:e})")]
    QuadratureFailure(f64),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("infeasible region: estimation error diverges at alpha = {alpha}, r = {r}")]
    InfeasibleRegion { alpha: f64, r: f64 },
}

/// Errors raised by curve tracing.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurveError {
    #[error("invalid curve specification: {0}")]
    InvalidSpec(String),
    #[error("level {0} is not reached inside the requested range")]
    LevelUnreachable(f64),
    #[error("curve has no turning point")]
    NoTurningPoint,
    #[error("transition zone endpoints not found on {0} branch")]
    ZoneNotFound(&'static str),
    #[error(transparent)]
    Saddle(#[from] SaddleError),
}

/// Errors raised by the Monte Carlo oracle.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum McError {
    #[error("invalid Monte Carlo configuration: {0}")]
    InvalidConfig(String),
    #[error("program is unbounded below (apparent arbitrage)")]
    Unbounded,
    #[error("every replication was unbounded")]
    AllUnbounded,
    #[error("interior point solver failed: {0}")]
    SolverFailure(String),
    #[error("finite-difference shift too large: active sets differ in {changed} of {total} replications")]
    ShiftTooLarge { changed: usize, total: usize },
}

/// Errors of a command-line run. Each maps to a fixed process exit code.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum RunError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Saddle(#[from] SaddleError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Mc(#[from] McError),
    #[error("cannot write {path}: {message}")]
    Io { path: String, message: String },
}

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 2;
    pub const NO_CONVERGENCE: i32 = 3;
    pub const INFEASIBLE_REGION: i32 = 4;
    pub const LEVEL_UNREACHABLE: i32 = 5;
    pub const UNBOUNDED: i32 = 6;
    pub const SHIFT_TOO_LARGE: i32 = 7;
    pub const IO: i32 = 8;
    /// Output was written but at least one curve is truncated.
    pub const TRUNCATED: i32 = 9;
    pub const NO_TURNING_POINT: i32 = 10;
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Usage(_) => exit::USAGE,
            RunError::Io { .. } => exit::IO,
            RunError::Saddle(e) | RunError::Curve(CurveError::Saddle(e)) => match e {
                SaddleError::InvalidParams(_) => exit::USAGE,
                SaddleError::InfeasibleRegion { .. } => exit::INFEASIBLE_REGION,
                _ => exit::NO_CONVERGENCE,
            },
            RunError::Curve(e) => match e {
                CurveError::InvalidSpec(_) => exit::USAGE,
                CurveError::LevelUnreachable(_) => exit::LEVEL_UNREACHABLE,
                CurveError::NoTurningPoint | CurveError::ZoneNotFound(_) => exit::NO_TURNING_POINT,
                CurveError::Saddle(_) => unreachable!(),
            },
            RunError::Mc(e) => match e {
                McError::InvalidConfig(_) => exit::USAGE,
                McError::Unbounded | McError::AllUnbounded => exit::UNBOUNDED,
                McError::SolverFailure(_) => exit::NO_CONVERGENCE,
                McError::ShiftTooLarge { .. } => exit::SHIFT_TOO_LARGE,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_are_distinct_per_class() {
        let cases = [
            (RunError::Usage("x".into()), exit::USAGE),
            (SaddleError::NoConvergence("x".into()).into(), exit::NO_CONVERGENCE),
            (SaddleError::InfeasibleRegion { alpha: 0.9, r: 0.6 }.into(), exit::INFEASIBLE_REGION),
            (CurveError::Saddle(SaddleError::InfeasibleRegion { alpha: 0.9, r: 0.6 }).into(), exit::INFEASIBLE_REGION),
            (CurveError::LevelUnreachable(2.0).into(), exit::LEVEL_UNREACHABLE),
            (CurveError::NoTurningPoint.into(), exit::NO_TURNING_POINT),
            (McError::AllUnbounded.into(), exit::UNBOUNDED),
            (McError::ShiftTooLarge { changed: 3, total: 4 }.into(), exit::SHIFT_TOO_LARGE),
            (McError::InvalidConfig("x".into()).into(), exit::USAGE),
            (RunError::Io { path: "p".into(), message: "m".into() }, exit::IO),
        ];
        for (err, code) in cases {
            assert_eq!(err.exit_code(), code, "{err}");
        }
    }
}

//! Monte Carlo averages over random instances next to the replica values.
//! Pass a thread count to check that results do not depend on it.

use replica_es::mc::{estimate_summary, MCConfig};
use replica_es::saddle::{solve_reduced, ProblemParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    if let Some(n) = std::env::args().nth(1) {
        rayon::ThreadPoolBuilder::new().num_threads(n.parse()?).build_global()?;
    }
    let cfg = MCConfig::new(100, 400, 0.9, 0.05, 40, 7);
    let s = estimate_summary(&cfg)?;
    let th = solve_reduced(&ProblemParams::new(cfg.alpha, cfg.r(), cfg.eta)?, None)?;
    for (name, est, replica) in [
        ("q0", s.q0_hat, th.q0),
        ("delta", s.delta_hat, th.delta),
        ("eps", s.eps_hat, th.epsilon),
        ("es_in", s.es_in_hat, th.es_in_cvar),
        ("cost", s.cost_hat, th.es_in_sample),
    ] {
        println!("{name:>6}: {:.6} +- {:.6}  replica {:.6}  z {:+.2}", est.mean, est.se, replica, est.z_score(replica));
    }
    println!("feasible fraction {}", s.feasible_fraction);
    Ok(())
}

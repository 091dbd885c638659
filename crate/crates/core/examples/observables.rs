//! Derived quantities along a ray in r: estimation error, susceptibility,
//! in-sample VaR and ES. Warm starts carry the root from one r to the next.

use replica_es::saddle::{observables, solve_reduced, ProblemParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (alpha, eta) = (0.95, 0.05);
    let mut guess = None;
    println!("{:>8} {:>14} {:>14} {:>14} {:>14}", "r", "sqrt(q0)-1", "delta", "var_in", "es_in");
    for k in 0..=20 {
        let r = 0.01 * 10f64.powf(k as f64 / 10.0);
        let sol = solve_reduced(&ProblemParams::new(alpha, r, eta)?, guess)?;
        guess = Some((sol.q0, sol.delta, sol.epsilon));
        let o = observables(&sol);
        println!("{r:>8.4} {:>14.6e} {:>14.6} {:>14.6} {:>14.6}", o.rel_error, o.susceptibility, o.var_in, o.es_in);
    }
    Ok(())
}

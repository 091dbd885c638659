//! Solve the replica equations at one control point and print the order
//! parameters, the eliminated conjugates and the residual.
//!
//!     cargo run --example solve_point -- 0.975 0.1 0.01

use replica_es::saddle::{solve_reduced, ProblemParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse()).collect::<Result<_, _>>()?;
    let (alpha, r, eta) = match args[..] {
        [a, r, e] => (a, r, e),
        [] => (0.975, 0.1, 0.01),
        _ => return Err("usage: solve_point ALPHA R ETA".into()),
    };
    let sol = solve_reduced(&ProblemParams::new(alpha, r, eta)?, None)?;
    let full = sol.order_params()?;
    println!("alpha = {alpha}, r = {r}, eta = {eta}");
    println!("  q0     = {:.12}", sol.q0);
    println!("  delta  = {:.12}", sol.delta);
    println!("  eps    = {:.12}", sol.epsilon);
    println!("  lambda = {:.12}  q0_hat = {:.12}  delta_hat = {:.12}", full.lambda, full.q0_hat, full.delta_hat);
    println!("  residual {:.1e}", sol.residual_norm);
    Ok(())
}

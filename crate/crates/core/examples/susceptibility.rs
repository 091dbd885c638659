//! Finite-instance susceptibility from the response to a small random field,
//! at two field strengths. The answer should not depend on the strength.

use replica_es::mc::{estimate_susceptibility, MCConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for xi in [1e-6, 1e-7] {
        let mut cfg = MCConfig::new(60, 240, 0.9, 0.1, 20, 3);
        cfg.shift_xi = xi;
        let d = estimate_susceptibility(&cfg)?;
        println!("xi = {xi:e}: delta = {:.6} +- {:.6}", d.mean, d.se);
    }
    Ok(())
}

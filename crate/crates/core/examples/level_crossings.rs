//! Where along r does sqrt(q0) hit a given value? With a regularizer the
//! error rises and then falls back to zero as r grows, so the level is
//! crossed twice.

use replica_es::saddle::{level_crossings, LevelTarget};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for eta in [0.0, 0.01, 0.05] {
        let hits = level_crossings(0.975, eta, LevelTarget::SqrtQ0(1.1), 1e6, 2)?;
        let rs: Vec<String> = hits.iter().map(|s| format!("{:.6}", s.params.r)).collect();
        println!("eta = {eta:<5} sqrt(q0) = 1.1 at r = [{}]", rs.join(", "));
    }
    Ok(())
}

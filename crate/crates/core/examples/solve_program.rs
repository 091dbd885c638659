//! One regularized ES program solved directly: weights, threshold and which
//! scenarios end up in the tail.

use replica_es::mc::{sample_instance, scaled_returns, solve_program, MCConfig, Scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = MCConfig::new(10, 50, 0.9, 0.1, 1, 42);
    let x = scaled_returns(&cfg, 0);
    assert_eq!(x.shape(), sample_instance(&cfg, 0).shape());
    let inst = solve_program(&x, cfg.alpha, cfg.eta)?;
    let count = |s: Scenario| inst.scenarios.iter().filter(|&&k| k == s).count();
    let w: Vec<String> = inst.weights.iter().map(|v| format!("{v:.4}")).collect();
    println!("weights  [{}]", w.join(", "));
    println!("sum w = {:.12}, q0 = {:.6}, eps = {:.6}", inst.weights.sum(), inst.q0(), inst.eps_star);
    println!("objective {:.10} (gap {:.1e}, {} iterations, polished {})", inst.objective, inst.duality_gap, inst.iterations, inst.polished);
    println!("scenarios: {} above, {} on the kink, {} in the tail", count(Scenario::Above), count(Scenario::Kink), count(Scenario::Tail));
    Ok(())
}

//! Critical ratio r_c(alpha) above which the unregularized problem has no
//! solution.

use replica_es::geometry::{trace_phase_boundary, BoundaryOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let b = trace_phase_boundary((0.6, 0.999), &BoundaryOptions::default())?;
    for p in b.points.iter().step_by(4) {
        println!("alpha = {:.4}  r_c = {:.8}", p.x, p.r);
    }
    Ok(())
}

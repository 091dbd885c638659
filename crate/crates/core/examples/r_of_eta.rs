//! r(eta) at fixed alpha and error level: the turning point and the width of
//! the zone where both data and regularizer matter.

use replica_es::geometry::{lower_branch_slope, trace_r_of_eta, transition_width};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for level in [1.01, 1.05, 1.10] {
        let c = trace_r_of_eta(0.975, level, (1e-4, 10.0))?;
        let turn = c.points[*c.turning_points.first().ok_or("no turning point")?];
        println!(
            "sqrt(q0) = {level}: turning at eta = {:.4}, r = {:.4}; width {:.3}; lower slope below 1e-3: {:.3}",
            turn.x,
            turn.r,
            transition_width(&c)?,
            lower_branch_slope(&c, 1e-3).unwrap_or(f64::NAN)
        );
    }
    Ok(())
}

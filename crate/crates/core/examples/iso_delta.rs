//! The delta = 1 contour moves up as the regularizer grows.

use replica_es::geometry::trace_iso_delta;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for eta in [0.0, 0.01, 0.1, 0.3] {
        let c = trace_iso_delta(1.0, eta, (0.6, 0.995))?;
        let near = |a: f64| c.points.iter().min_by(|p, q| (p.x - a).abs().total_cmp(&(q.x - a).abs())).unwrap();
        println!("eta = {eta:<4}  r(0.7) ~ {:.4}  r(0.95) ~ {:.4}", near(0.7).r, near(0.95).r);
    }
    Ok(())
}

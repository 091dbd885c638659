//! Contour of constant estimation error in the (alpha, r) plane, printed as
//! one line per branch.

use replica_es::geometry::{trace_iso_q0, Branch};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let curve = trace_iso_q0(1.05, 0.05, (0.6, 0.995))?;
    println!("{} points, status {:?}", curve.points.len(), curve.status);
    for b in [Branch::Single, Branch::Lower, Branch::Upper] {
        let pts: Vec<_> = curve.branch(b).collect();
        if let (Some(first), Some(last)) = (pts.first(), pts.last()) {
            println!(
                "{:>6}: {} points, alpha {:.4} -> {:.4}, r {:.5} -> {:.5}",
                b.label(),
                pts.len(),
                first.x,
                last.x,
                first.r,
                last.r
            );
        }
    }
    Ok(())
}

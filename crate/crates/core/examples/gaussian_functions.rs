//! The Gaussian integral chain Phi, Psi, W and the potential g, with a
//! numerical check that W' = Psi and Psi' = Phi.

use replica_es::special_fn::{g, normal_quantile, phi, psi, w_fn};

fn main() {
    let h = 1e-5;
    println!("{:>6} {:>22} {:>22} {:>22} {:>8} {:>10}", "x", "Phi", "Psi", "W", "g", "d err");
    for x in [-30.0, -8.0, -2.0, -0.5, 0.0, 0.5, 2.0, 8.0] {
        let d_w = (w_fn(x + h) - w_fn(x - h)) / (2.0 * h);
        let d_psi = (psi(x + h) - psi(x - h)) / (2.0 * h);
        let err = (d_w - psi(x)).abs().max((d_psi - phi(x)).abs());
        println!("{x:>6} {:>22.15e} {:>22.15e} {:>22.15e} {:>8.3} {err:>10.1e}", phi(x), psi(x), w_fn(x), g(x));
    }
    for p in [0.9, 0.975, 0.999] {
        println!("quantile({p}) = {:.15}", normal_quantile(p));
    }
}

//! Piecewise potential measure `g` and the Gaussian integral family
//! `Φ`, `Ψ`, `W` that the reduced saddle-point equations are written in.
//!
//! The three Gaussian functions form a derivative chain, `Ψ' = Φ` and
//! `W' = Ψ`, with
//!
//! ```text
//! Φ(x) = P(Z ≤ x)
//! Ψ(x) = E[(x − Z)⁺]      = xΦ(x) + φ(x)
//! W(x) = E[((x − Z)⁺)²]/2 = ((x² + 1)/2)Φ(x) + (x/2)φ(x)
//! ```
//!
//! for a standard normal `Z` with density `φ`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// `1/√(2π)`.
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Below this argument the Gaussian factor of `Ψ` and `W` underflows.
const TAIL_CUTOFF: f64 = -25.0;

/// Piecewise potential measure: `0` for `x ≥ 0`, `x²` on `[−1, 0]`,
/// `−2x − 1` below `−1`. It is C¹ everywhere.
pub fn g(x: f64) -> f64 {
    if x >= 0.0 {
        0.0
    } else if x >= -1.0 {
        x * x
    } else {
        -2.0 * x - 1.0
    }
}

/// Derivative of [`g`].
pub fn g_prime(x: f64) -> f64 {
    if x >= 0.0 {
        0.0
    } else if x >= -1.0 {
        2.0 * x
    } else {
        -2.0
    }
}

/// Standard normal density.
pub fn normal_density(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal CDF `Φ`, evaluated through `erfc` so that the left tail
/// keeps full relative precision.
pub fn phi(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail `1 − Φ(x)` without cancellation.
pub fn phi_upper(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// `Φ(hi) − Φ(lo)`, computed on whichever side of the origin avoids
/// cancellation when both arguments sit in the same tail.
pub fn phi_diff(lo: f64, hi: f64) -> f64 {
    if lo >= 0.0 {
        phi_upper(lo) - phi_upper(hi)
    } else {
        phi(hi) - phi(lo)
    }
}

/// `Ψ(x) = xΦ(x) + φ(x)`, the first integral of `Φ`.
pub fn psi(x: f64) -> f64 {
    if x < TAIL_CUTOFF {
        return 0.0;
    }
    if x > 0.0 {
        // Ψ(x) = x + Ψ(−x) keeps the small correction exact for large x.
        return x + (normal_density(x) - x * phi_upper(x));
    }
    x * phi(x) + normal_density(x)
}

/// `W(x) = ((x² + 1)/2)Φ(x) + (x/2)φ(x)`, the first integral of `Ψ`.
pub fn w_fn(x: f64) -> f64 {
    if x < TAIL_CUTOFF {
        return 0.0;
    }
    if x > 0.0 {
        // W(x) = (x² + 1)/2 − W(−x)
        let reflected = 0.5 * (x * x + 1.0) * phi_upper(x) - 0.5 * x * normal_density(x);
        return 0.5 * (x * x + 1.0) - reflected;
    }
    0.5 * (x * x + 1.0) * phi(x) + 0.5 * x * normal_density(x)
}

/// Standard normal quantile. Acklam's rational approximation followed by two
/// Halley refinements against [`phi`].
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    let p_low = 0.024_25;
    let mut x = if p < p_low {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - p_low {
        let q = p - 0.5;
        let t = q * q;
        (((((A[0] * t + A[1]) * t + A[2]) * t + A[3]) * t + A[4]) * t + A[5]) * q
            / (((((B[0] * t + B[1]) * t + B[2]) * t + B[3]) * t + B[4]) * t + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    for _ in 0..2 {
        let err = if x > 0.0 {
            (1.0 - p) - phi_upper(x)
        } else {
            phi(x) - p
        };
        let u = err * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
        x -= u / (1.0 + 0.5 * x * u);
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Composite Simpson on a truncated range: an independent route to `Φ`.
    fn phi_by_quadrature(x: f64) -> f64 {
        let lo = -40.0_f64;
        let n = 200_000;
        let h = (x - lo) / n as f64;
        let mut acc = normal_density(lo) + normal_density(x);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * normal_density(lo + i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn g_branches() {
        assert_eq!(g(0.5), 0.0);
        assert_eq!(g(-0.5), 0.25);
        assert_eq!(g(-1.0), 1.0);
        assert!((g(-1.0 - 1e-9) - (1.0 + 2e-9)).abs() < 1e-15);
        assert_eq!(g_prime(1.0), 0.0);
        assert_eq!(g_prime(-0.25), -0.5);
        assert_eq!(g_prime(-3.0), -2.0);
    }

    #[test]
    fn g_knot_continuity() {
        for knot in [-1.0, 0.0] {
            for delta in [1e-6, 1e-8, 1e-10] {
                assert!((g(knot - delta) - g(knot + delta)).abs() <= 4.0 * delta + 1e-15);
                // g'' is bounded by 2, so g' moves by at most 2·2δ across a knot.
                assert!((g_prime(knot - delta) - g_prime(knot + delta)).abs() <= 4.0 * delta);
            }
        }
    }

    #[test]
    fn phi_values() {
        assert_eq!(phi(0.0), 0.5);
        assert!((phi(1.959_964) - 0.975).abs() < 1e-6);
        assert!((phi(1.959_964) - phi_by_quadrature(1.959_964)).abs() < 1e-12);
        assert_eq!(phi(f64::NEG_INFINITY), 0.0);
        assert_eq!(phi(f64::INFINITY), 1.0);
    }

    #[test]
    fn phi_relative_accuracy_against_quadrature() {
        for &x in &[-8.0, -6.5, -4.0, -1.3, 0.7, 3.0, 8.0] {
            let reference = phi_by_quadrature(x);
            assert!(
                ((phi(x) - reference) / reference).abs() < 1e-12,
                "x = {x}: {} vs {reference}",
                phi(x)
            );
        }
    }

    #[test]
    fn psi_and_w_values() {
        assert!((psi(0.0) - INV_SQRT_2PI).abs() < 1e-16);
        assert!(psi(-10.0) < 1e-20 && psi(-10.0) > 0.0);
        assert_eq!(w_fn(0.0), 0.25);
        assert!(w_fn(-8.0) < 1e-13 && w_fn(-8.0) >= 0.0);
        assert_eq!(psi(-30.0), 0.0);
        assert_eq!(w_fn(-30.0), 0.0);
    }

    #[test]
    fn derivative_chain() {
        let h = 1e-5;
        let mut x = -6.0;
        while x <= 6.0 {
            let dpsi = (psi(x + h) - psi(x - h)) / (2.0 * h);
            let dw = (w_fn(x + h) - w_fn(x - h)) / (2.0 * h);
            assert!((dpsi - phi(x)).abs() <= 1e-8, "Ψ' at {x}");
            assert!((dw - psi(x)).abs() <= 1e-8, "W' at {x}");
            x += 0.05;
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &p in &[1e-10, 0.01, 0.3, 0.5, 0.9, 0.975, 0.999, 1.0 - 1e-9] {
            let z = normal_quantile(p);
            let back = if z > 0.0 { 1.0 - phi_upper(z) } else { phi(z) };
            assert!((back - p).abs() < 1e-14 * p.max(1e-3), "p = {p}");
        }
        assert!((normal_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-12);
    }

    #[test]
    fn phi_diff_matches_direct_difference() {
        assert!((phi_diff(-0.3, 1.2) - (phi(1.2) - phi(-0.3))).abs() < 1e-16);
        // Deep right tail: direct difference would be exactly zero.
        let d = phi_diff(10.0, 10.5);
        assert!(d > 0.0 && (d - (phi_upper(10.0) - phi_upper(10.5))).abs() < 1e-30);
    }

    proptest! {
        #[test]
        fn ranges_hold(x in -30.0f64..30.0) {
            let p = phi(x);
            prop_assert!((0.0..=1.0).contains(&p));
            prop_assert!(psi(x) >= 0.0);
            prop_assert!(w_fn(x) >= 0.0);
            prop_assert!(psi(x) >= x.max(0.0) - 1e-12);
        }

        #[test]
        fn reflection(x in -8.0f64..8.0) {
            prop_assert!((phi(x) + phi(-x) - 1.0).abs() < 1e-15);
        }
    }
}

//! Fixed-order Gauss–Legendre quadrature for the per-segment flow integrals.

use std::sync::OnceLock;

const ORDER: usize = 16;

/// Longest interval integrated by a single rule application; longer
/// intervals are split into equal pieces.
pub const MAX_SEGMENT: f64 = 2.0;

/// Nodes and weights of the 16-point rule on [-1, 1], computed once by
/// Newton iteration on the Legendre polynomial from Chebyshev initial
/// guesses (converges to machine precision in a handful of steps).
pub fn gl16() -> &'static [(f64, f64); ORDER] {
    static NODES: OnceLock<[(f64, f64); ORDER]> = OnceLock::new();
    NODES.get_or_init(|| {
        let mut out = [(0.0, 0.0); ORDER];
        let n = ORDER;
        for (i, slot) in out.iter_mut().enumerate() {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre_with_derivative(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let (_, dp) = legendre_with_derivative(n, x);
            *slot = (x, 2.0 / ((1.0 - x * x) * dp * dp));
        }
        out
    })
}

/// (P_n(x), P_n'(x)) by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0f64;
    let mut p = x;
    for k in 2..=n {
        let kf = k as f64;
        let next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = next;
    }
    let dp = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, dp)
}

/// ∫_a^b f, splitting into equal pieces of length at most `MAX_SEGMENT`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let pieces = ((b - a).abs() / MAX_SEGMENT).ceil().max(1.0) as usize;
    let h = (b - a) / pieces as f64;
    let mut total = 0.0;
    for p in 0..pieces {
        let lo = a + p as f64 * h;
        let hi = lo + h;
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        let mut acc = 0.0;
        for &(x, w) in gl16() {
            acc += w * f(mid + half * x);
        }
        total += acc * half;
    }
    total
}

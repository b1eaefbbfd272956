//! Adaptive composite Gauss–Legendre quadrature.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::scalar::Scalar;

const ORDER: usize = 10;
const MAX_DEPTH: u32 = 40;

/// Nodes and weights of the `ORDER`-point rule on `[-1, 1]`.
fn rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre_rule(ORDER))
}

/// Gauss–Legendre nodes and weights by Newton iteration on `P_n`.
pub fn gauss_legendre_rule(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

fn panel<T: Scalar>(f: &impl Fn(T) -> T, a: T, b: T) -> T {
    let half = (b - a) * T::lit(0.5);
    let mid = (a + b) * T::lit(0.5);
    let s: T = rule()
        .iter()
        .map(|&(x, w)| T::lit(w) * f(mid + half * T::lit(x)))
        .sum();
    s * half
}

fn refine<T: Scalar>(f: &impl Fn(T) -> T, a: T, b: T, whole: T, tol: T, depth: u32) -> T {
    let mid = (a + b) * T::lit(0.5);
    let left = panel(f, a, mid);
    let right = panel(f, mid, b);
    let both = left + right;
    if (both - whole).abs() <= tol || depth >= MAX_DEPTH {
        return both;
    }
    let half_tol = tol * T::lit(0.5);
    refine(f, a, mid, left, half_tol, depth + 1) + refine(f, mid, b, right, half_tol, depth + 1)
}

/// `∫_a^b f` to absolute tolerance `tol` (bisection until halves agree).
pub fn integrate<T: Scalar>(f: impl Fn(T) -> T, a: T, b: T, tol: T) -> T {
    if a == b {
        return T::zero();
    }
    let tol = tol.max(T::epsilon() * T::lit(16.0));
    let whole = panel(&f, a, b);
    refine(&f, a, b, whole, tol, 0)
}

/// Integral over `[a, b]` split at the given interior break points, where
/// the integrand may have kinks or jumps.
pub fn integrate_with_breaks<T: Scalar>(f: impl Fn(T) -> T, a: T, b: T, breaks: &[T], tol: T) -> T {
    let mut pts: Vec<T> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup();
    let mut edges = Vec::with_capacity(pts.len() + 2);
    edges.push(a);
    edges.extend(pts);
    edges.push(b);
    let pieces = T::from_usize(edges.len() - 1).unwrap();
    edges
        .windows(2)
        .map(|w| integrate(&f, w[0], w[1], tol / pieces))
        .sum()
}

//! Adaptive composite Gauss-Legendre quadrature for smooth complex-valued
//! integrands on finite intervals.

use num_complex::Complex64 as C64;
use std::sync::OnceLock;

/// Relative accuracy target used by the decoherence integrals.
pub const REL_TOL: f64 = 1e-9;
/// Absolute floor below which differences are not chased.
pub const ABS_FLOOR: f64 = 1e-12;

const NODES: usize = 15;
const MAX_DEPTH: usize = 40;

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// Legendre polynomial.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for k in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0f64, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[k] = -x;
        nodes[n - 1 - k] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[k] = w;
        weights[n - 1 - k] = w;
    }
    (nodes, weights)
}

fn base_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(NODES))
}

fn panel<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64) -> C64 {
    let (nodes, weights) = base_rule();
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = C64::new(0.0, 0.0);
    for (x, w) in nodes.iter().zip(weights) {
        acc += *w * f(mid + half * x);
    }
    acc * half
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: C64,
    pub error_estimate: f64,
}

#[derive(Debug, thiserror::Error)]
#[error("quadrature failed to converge: error estimate {error_estimate:.3e} over [{a}, {b}]")]
pub struct QuadError {
    pub a: f64,
    pub b: f64,
    pub error_estimate: f64,
}

fn refine<F: Fn(f64) -> C64>(
    f: &F,
    a: f64,
    b: f64,
    whole: C64,
    tol: f64,
    depth: usize,
) -> Result<QuadResult, QuadError> {
    let mid = 0.5 * (a + b);
    let left = panel(f, a, mid);
    let right = panel(f, mid, b);
    let err = (left + right - whole).norm();
    if err <= tol || err <= ABS_FLOOR {
        return Ok(QuadResult { value: left + right, error_estimate: err });
    }
    if depth >= MAX_DEPTH {
        return Err(QuadError { a, b, error_estimate: err });
    }
    let l = refine(f, a, mid, left, 0.5 * tol, depth + 1)?;
    let r = refine(f, mid, b, right, 0.5 * tol, depth + 1)?;
    Ok(QuadResult {
        value: l.value + r.value,
        error_estimate: l.error_estimate + r.error_estimate,
    })
}

/// Integrate a smooth complex integrand over [a, b] to relative accuracy
/// [`REL_TOL`] with absolute floor [`ABS_FLOOR`].
pub fn adaptive_gauss<F: Fn(f64) -> C64>(f: F, a: f64, b: f64) -> Result<QuadResult, QuadError> {
    if a == b {
        return Ok(QuadResult { value: C64::new(0.0, 0.0), error_estimate: 0.0 });
    }
    let first = panel(&f, a, b);
    let tol = (REL_TOL * first.norm()).max(ABS_FLOOR);
    refine(&f, a, b, first, tol, 0)
}

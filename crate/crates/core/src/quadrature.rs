//! One-dimensional quadrature used by transforms, envelopes and weights.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Composite Simpson rule on `[a, b]` with `n` subintervals (rounded up to even).
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    if a == b {
        return 0.0;
    }
    let n = (n.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Simpson rule on each grid cell `[t_i, t_{i+1}]`, accumulated from the right:
/// entry `i` is `∫_{t_i}^{t_last} f`.
pub fn tail_integrals<F: Fn(f64) -> f64>(f: F, nodes: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; nodes.len()];
    for i in (0..nodes.len().saturating_sub(1)).rev() {
        let (a, b) = (nodes[i], nodes[i + 1]);
        let cell = (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
        out[i] = out[i + 1] + cell;
    }
    out
}

/// Same as [`tail_integrals`] but accumulated from the left: entry `i` is `∫_{t_0}^{t_i} f`.
pub fn head_integrals<F: Fn(f64) -> f64>(f: F, nodes: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; nodes.len()];
    for i in 1..nodes.len() {
        let (a, b) = (nodes[i - 1], nodes[i]);
        let cell = (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
        out[i] = out[i - 1] + cell;
    }
    out
}

/// Adaptive Simpson with Richardson correction. `tol` is absolute on the
/// whole interval; at most `budget` integrand evaluations are spent.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
    budget: usize,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut evals = 3usize;
    let value = recurse(&f, a, b, fa, fm, fb, whole, tol, 50, &mut evals, budget)?;
    Ok(value)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    evals: &mut usize,
    budget: usize,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    *evals += 2;
    if *evals > budget {
        return Err(Error::QuadratureFailure { budget });
    }
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol || (m - a).abs() <= f64::EPSILON * m.abs() {
        return Ok(left + right + delta / 15.0);
    }
    let l = recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, evals, budget)?;
    let r = recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, evals, budget)?;
    Ok(l + r)
}

const GL_ORDER: usize = 16;

fn gauss_legendre_rule() -> &'static ([f64; GL_ORDER], [f64; GL_ORDER]) {
    static RULE: OnceLock<([f64; GL_ORDER], [f64; GL_ORDER])> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_ORDER;
        let mut x = [0.0; GL_ORDER];
        let mut w = [0.0; GL_ORDER];
        for i in 0..n {
            // Newton on P_n from the Chebyshev-like initial guess.
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let mut p0 = 1.0;
                let mut p1 = z;
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
                let step = p1 / dp;
                z -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            x[i] = z;
            w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        }
        (x, w)
    })
}

/// 16-point Gauss–Legendre rule on `[a, b]`.
pub fn gauss_legendre<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (x, w) = gauss_legendre_rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    x.iter().zip(w.iter()).map(|(xi, wi)| wi * f(mid + half * xi)).sum::<f64>() * half
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn simpson_is_exact_on_cubics() {
        let v = simpson(|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 2);
        assert_relative_eq!(v, 4.0 - 4.0 + 2.0, epsilon = 1e-14);
    }

    #[test]
    fn cumulative_integrals() {
        let nodes: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        let tail = tail_integrals(|_| 2.0, &nodes);
        assert_relative_eq!(tail[0], 2.0, epsilon = 1e-14);
        assert_eq!(tail[10], 0.0);
        let head = head_integrals(|x| x, &nodes);
        assert_relative_eq!(head[10], 0.5, epsilon = 1e-14);
    }

    #[test]
    fn adaptive_simpson_on_exponential() {
        let v = adaptive_simpson(f64::exp, 0.0, 3.0, 1e-12, 100_000).unwrap();
        assert_relative_eq!(v, 3f64.exp() - 1.0, max_relative = 1e-12);
    }

    #[test]
    fn adaptive_simpson_budget() {
        let err = adaptive_simpson(|x: f64| (1.0 / x).sin(), 1e-6, 1.0, 1e-15, 50).unwrap_err();
        assert_eq!(err, Error::QuadratureFailure { budget: 50 });
    }

    #[test]
    fn gauss_legendre_polynomial_exactness() {
        // exact up to degree 31
        let v = gauss_legendre(|x| x.powi(30), -1.0, 1.0);
        assert_relative_eq!(v, 2.0 / 31.0, max_relative = 1e-13);
        let v = gauss_legendre(f64::ln, 1.0, 2.0);
        assert_relative_eq!(v, 2.0 * 2f64.ln() - 1.0, max_relative = 1e-14);
    }
}

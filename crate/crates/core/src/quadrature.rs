//! Adaptive Gauss–Legendre quadrature on finite intervals.
//!
//! Each panel is integrated with a fixed-order Gauss–Legendre rule and
//! compared against the sum over its two halves. Panels that disagree by
//! more than their share of the tolerance are bisected. If the recursion
//! depth is exhausted the integral is recomputed on a fixed composite grid
//! (doubled once to estimate the error) before giving up.

use std::sync::OnceLock;

use crate::error::{Error, Result};

const ORDER: usize = 20;
const MAX_DEPTH: u32 = 40;
const FALLBACK_PANELS: usize = 4096;

/// Nodes and weights of the `ORDER`-point rule on [-1, 1].
fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(ORDER))
}

/// Gauss–Legendre nodes and weights by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess for the i-th root, counted from +1.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let (nodes, weights) = rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    nodes
        .iter()
        .zip(weights)
        .map(|(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

fn composite<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let lo = a + i as f64 * h;
            panel(f, lo, lo + h)
        })
        .sum()
}

/// Integrates `f` over `[a, b]` to relative tolerance `rel_tol`.
///
/// `initial_panels` seeds the adaptive scheme with a uniform partition so
/// that narrow features are not missed by the first coarse estimate.
pub fn integrate<F>(f: F, a: f64, b: f64, rel_tol: f64, initial_panels: usize) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::invalid("integration limits", "must be finite"));
    }
    if a == b {
        return Ok(0.0);
    }
    let panels = initial_panels.max(1);
    let h = (b - a) / panels as f64;
    let seeds: Vec<(f64, f64, f64)> = (0..panels)
        .map(|i| {
            let lo = a + i as f64 * h;
            let hi = if i + 1 == panels { b } else { lo + h };
            (lo, hi, panel(&f, lo, hi))
        })
        .collect();
    let coarse: f64 = seeds.iter().map(|s| s.2).sum();
    if !coarse.is_finite() {
        return Err(Error::QuadratureNonConvergence {
            lo: a,
            hi: b,
            estimate: coarse,
            error: f64::INFINITY,
        });
    }
    let scale = seeds.iter().map(|s| s.2.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
    let budget = rel_tol * scale;

    let mut total = 0.0;
    let mut converged = true;
    for &(lo, hi, whole) in &seeds {
        let share = budget * (hi - lo) / (b - a);
        match refine(&f, lo, hi, whole, share, 0) {
            Some(v) => total += v,
            None => {
                converged = false;
                break;
            }
        }
    }
    if converged {
        return Ok(total);
    }

    let coarse = composite(&f, a, b, FALLBACK_PANELS);
    let fine = composite(&f, a, b, 2 * FALLBACK_PANELS);
    let error = (fine - coarse).abs();
    if error <= rel_tol * fine.abs().max(f64::MIN_POSITIVE) && fine.is_finite() {
        Ok(fine)
    } else {
        Err(Error::QuadratureNonConvergence {
            lo: a,
            hi: b,
            estimate: fine,
            error,
        })
    }
}

fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Option<f64> {
    let mid = 0.5 * (a + b);
    let left = panel(f, a, mid);
    let right = panel(f, mid, b);
    let halves = left + right;
    if !halves.is_finite() {
        return None;
    }
    if (halves - whole).abs() <= tol {
        return Some(halves);
    }
    if depth >= MAX_DEPTH {
        return None;
    }
    let l = refine(f, a, mid, left, 0.5 * tol, depth + 1)?;
    let r = refine(f, mid, b, right, 0.5 * tol, depth + 1)?;
    Some(l + r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_and_weights_are_consistent() {
        let (x, w) = gauss_legendre(ORDER);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        for pair in x.windows(2) {
            assert!(pair[0] < pair[1]);
        }
        // exact for x^38
        let moment: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(38)).sum();
        assert!((moment - 2.0 / 39.0).abs() < 1e-14);
    }

    #[test]
    fn integrates_smooth_functions() {
        let v = integrate(f64::sin, 0.0, std::f64::consts::PI, 1e-12, 1).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        let v = integrate(|x| (-x * x).exp(), -10.0, 10.0, 1e-12, 4).unwrap();
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn handles_sharp_peak() {
        let w = 1e-4;
        let f = |x: f64| w / ((x - 0.3) * (x - 0.3) + w * w);
        let v = integrate(f, 0.0, 1.0, 1e-10, 2).unwrap();
        let exact = (0.7f64 / w).atan() + (0.3f64 / w).atan();
        assert!((v - exact).abs() / exact < 1e-9);
    }

    #[test]
    fn zero_integrand_is_zero() {
        assert_eq!(integrate(|_| 0.0, 1.0, 2.0, 1e-9, 3).unwrap(), 0.0);
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        let err = integrate(|x| 1.0 / x, 0.0, 1.0, 1e-9, 1);
        assert!(matches!(err, Err(Error::QuadratureNonConvergence { .. })));
        let err = integrate(|_| f64::NAN, 0.0, 1.0, 1e-9, 1);
        assert!(matches!(err, Err(Error::QuadratureNonConvergence { .. })));
    }
}

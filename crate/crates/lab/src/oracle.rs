//! Reference computations that share no code with the solver: explicit
//! kernel formulas, dense linear algebra and plain scalar integrators.

use nalgebra::{DMatrix, SymmetricEigen};
use std::f64::consts::PI;

/// One-dimensional Gaussian density with standard deviation `sigma`.
pub fn gaussian(z: f64, sigma: f64) -> f64 {
    (-(z * z) / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * PI).sqrt())
}

/// Nodes and composite trapezoid weights of `[lo, hi]` with `n` nodes.
pub fn trapezoid(lo: f64, hi: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let h = (hi - lo) / (n - 1) as f64;
    let nodes = (0..n).map(|i| lo + i as f64 * h).collect();
    let weights = (0..n).map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h }).collect();
    (nodes, weights)
}

/// Largest eigenvalue of `u ↦ ∫ κ(y-x) u(y) dy + a(x) u(x)` on an interval,
/// discretized by the trapezoid rule, from a dense symmetric eigensolve of
/// `W^{1/2} (K + diag a) W^{-1/2}`.
pub fn dense_principal_eigenvalue(nodes: &[f64], weights: &[f64], a: &[f64], density: impl Fn(f64) -> f64) -> f64 {
    let n = nodes.len();
    let s = DMatrix::from_fn(n, n, |i, j| {
        let k = weights[i].sqrt() * density(nodes[j] - nodes[i]) * weights[j].sqrt();
        if i == j {
            k + a[i]
        } else {
            k
        }
    });
    SymmetricEigen::new(s).eigenvalues.max()
}

/// `inf_{ball} Σ_{j=0}^{terms} (K^j u0)/j!` with `K` applied by explicit
/// double sums over the given nodes and weights.
pub fn iterated_sum_infimum(
    nodes: &[f64],
    weights: &[f64],
    density: impl Fn(f64) -> f64,
    u0: &[f64],
    ball: &[usize],
    terms: usize,
) -> f64 {
    let n = nodes.len();
    let mut term = u0.to_vec();
    let mut sum = u0.to_vec();
    for j in 1..=terms {
        let next: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|k| density(nodes[k] - nodes[i]) * weights[k] * term[k]).sum::<f64>() / j as f64)
            .collect();
        for (s, t) in sum.iter_mut().zip(&next) {
            *s += t;
        }
        term = next;
    }
    ball.iter().map(|&i| sum[i]).fold(f64::INFINITY, f64::min)
}

/// Classical RK4 for a scalar ODE with fixed step `dt` from `s` to `t`.
pub fn scalar_rk4(f: impl Fn(f64, f64) -> f64, u0: f64, s: f64, t: f64, dt: f64) -> f64 {
    let n = ((t - s) / dt).round().max(1.0) as usize;
    let h = (t - s) / n as f64;
    let mut u = u0;
    for k in 0..n {
        let t = s + k as f64 * h;
        let k1 = f(t, u);
        let k2 = f(t + 0.5 * h, u + 0.5 * h * k1);
        let k3 = f(t + 0.5 * h, u + 0.5 * h * k2);
        let k4 = f(t + h, u + h * k3);
        u += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    u
}

/// Values at `times` of the positive entire solution of the scalar logistic
/// equation `u' = u (a(t) - u)`, by pullback from `depth` time units before
/// the first requested time.
pub fn scalar_logistic_pullback(a: impl Fn(f64) -> f64, times: &[f64], depth: f64, dt: f64, start: f64) -> Vec<f64> {
    let f = |t: f64, u: f64| u * (a(t) - u);
    let mut u = scalar_rk4(f, start, times[0] - depth, times[0], dt);
    let mut out = vec![u];
    for w in times.windows(2) {
        u = scalar_rk4(f, u, w[0], w[1], dt);
        out.push(u);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_integrates_linear_exactly() {
        let (x, w) = trapezoid(0.0, 2.0, 11);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| x * w).sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn rk4_exponential() {
        let u = scalar_rk4(|_, u| -u, 1.0, 0.0, 1.0, 1e-3);
        assert!((u - (-1.0f64).exp()).abs() < 1e-13);
    }

    #[test]
    fn dense_eigenvalue_of_diagonal_shift() {
        let (x, w) = trapezoid(0.0, 1.0, 5);
        let lam = dense_principal_eigenvalue(&x, &w, &[0.5; 5], |_| 0.0);
        assert!((lam - 0.5).abs() < 1e-14);
    }
}

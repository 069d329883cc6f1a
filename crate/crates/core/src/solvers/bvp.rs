use super::solve_tridiagonal;
use crate::heterogeneity::uniform_grid_1d;
use crate::{Error, Result};

/// `λ u'' − k(x) u = f(x)` on `[0,1]`, `u(0) = u(1) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BvpParams {
    pub lambda: f64,
    pub nodes: usize,
}

impl Default for BvpParams {
    fn default() -> Self {
        BvpParams { lambda: 0.01, nodes: 1001 }
    }
}

fn stencil_rows(xs: &[f64], k: &dyn Fn(f64) -> f64, f: &dyn Fn(f64) -> f64, lambda: f64) -> [Vec<f64>; 4] {
    let h = xs[1] - xs[0];
    let c = h * h / 12.0;
    let g: Vec<f64> = xs.iter().map(|&x| k(x) / lambda).collect();
    let s: Vec<f64> = xs.iter().map(|&x| f(x) / lambda).collect();
    let m = xs.len() - 2;
    let mut lower = vec![0.0; m];
    let mut diag = vec![0.0; m];
    let mut upper = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    for r in 0..m {
        let i = r + 1;
        lower[r] = 1.0 - c * g[i - 1];
        diag[r] = -2.0 * (1.0 + 5.0 * c * g[i]);
        upper[r] = 1.0 - c * g[i + 1];
        rhs[r] = c * (s[i - 1] + 10.0 * s[i] + s[i + 1]);
    }
    [lower, diag, upper, rhs]
}

/// Numerov's fourth-order three-point scheme; returns nodes and values.
pub fn solve_dr_bvp(
    k: impl Fn(f64) -> f64,
    f: impl Fn(f64) -> f64,
    p: BvpParams,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if p.nodes < 3 {
        return Err(Error::usage("boundary-value grid needs at least 3 nodes"));
    }
    let xs = uniform_grid_1d(0.0, 1.0, p.nodes);
    let [lower, diag, upper, rhs] = stencil_rows(&xs, &k, &f, p.lambda);
    let inner = solve_tridiagonal(&lower, &diag, &upper, &rhs)?;
    let mut u = vec![0.0; p.nodes];
    u[1..p.nodes - 1].copy_from_slice(&inner);
    Ok((xs, u))
}

/// Residual of `u` under the same discrete operator, per interior node.
pub fn apply_numerov(
    xs: &[f64],
    u: &[f64],
    k: impl Fn(f64) -> f64,
    f: impl Fn(f64) -> f64,
    lambda: f64,
) -> Vec<f64> {
    let [lower, diag, upper, rhs] = stencil_rows(xs, &k, &f, lambda);
    (0..rhs.len())
        .map(|r| lower[r] * u[r] + diag[r] * u[r + 1] + upper[r] * u[r + 2] - rhs[r])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::{inverse_dr_k, observed_orders};
    use std::f64::consts::PI;

    #[test]
    fn zero_source() {
        let (_, u) = solve_dr_bvp(inverse_dr_k, |_| 0.0, BvpParams::default()).unwrap();
        assert!(u.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn discrete_residual_vanishes() {
        let f = |x: f64| (2.0 * PI * x).sin();
        let (xs, u) = solve_dr_bvp(inverse_dr_k, f, BvpParams::default()).unwrap();
        let res = apply_numerov(&xs, &u, inverse_dr_k, f, 0.01);
        assert!(res.iter().all(|r| r.abs() < 1e-10));
        assert_eq!((u[0], u[1000]), (0.0, 0.0));
    }

    #[test]
    fn pure_diffusion_matches_closed_form() {
        let (xs, u) = solve_dr_bvp(|_| 0.0, |x| (2.0 * PI * x).sin(), BvpParams::default()).unwrap();
        for (x, v) in xs.iter().zip(&u) {
            let exact = -(2.0 * PI * x).sin() / (4.0 * PI * PI * 0.01);
            assert!((v - exact).abs() < 1e-6);
        }
    }

    /// Max-norm errors against `u = x(1−x)e^x` with the decaying k.
    pub(crate) fn manufactured_errors(sizes: &[usize]) -> Vec<f64> {
        let lam = 0.01;
        let exact = |x: f64| x * (1.0 - x) * x.exp();
        let second = |x: f64| -x * (3.0 + x) * x.exp();
        let f = move |x: f64| lam * second(x) - inverse_dr_k(x) * exact(x);
        sizes
            .iter()
            .map(|&n| {
                let (xs, u) = solve_dr_bvp(inverse_dr_k, f, BvpParams { lambda: lam, nodes: n }).unwrap();
                xs.iter().zip(&u).map(|(x, v)| (v - exact(*x)).abs()).fold(0.0, f64::max)
            })
            .collect()
    }

    #[test]
    fn fourth_order_on_manufactured_solution() {
        let orders = observed_orders(&manufactured_errors(&[11, 21, 41, 81]));
        for o in orders {
            assert!((o - 4.0).abs() < 0.3, "observed order {o}");
        }
    }
}

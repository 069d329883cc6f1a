use super::{solve_tridiagonal, SolverReport, SpaceTimeSolution};
use crate::heterogeneity::uniform_grid_1d;
use crate::{Error, Result};

/// `u_t = D u_xx + k u² + s(x, t)` on `[0,1] × [0, t_end]`, zero initial and
/// boundary values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrTimeParams {
    pub d: f64,
    pub k: f64,
    pub nx: usize,
    pub nt: usize,
    pub t_end: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for DrTimeParams {
    fn default() -> Self {
        DrTimeParams { d: 0.01, k: 0.01, nx: 101, nt: 101, t_end: 1.0, tol: 1e-10, max_iter: 200 }
    }
}

/// Crank–Nicolson diffusion with a trapezoidal reaction/source, the implicit
/// half of the reaction resolved by fixed-point iteration.
pub fn solve_dr_time<S>(source: S, p: DrTimeParams) -> Result<SolverReport<SpaceTimeSolution>>
where
    S: Fn(f64, f64) -> f64,
{
    if p.nx < 3 || p.nt < 2 || !(p.t_end > 0.0) {
        return Err(Error::usage("diffusion-reaction grid needs nx >= 3, nt >= 2, t_end > 0"));
    }
    let xs = uniform_grid_1d(0.0, 1.0, p.nx);
    let times = uniform_grid_1d(0.0, p.t_end, p.nt);
    let h = 1.0 / (p.nx - 1) as f64;
    let dt = p.t_end / (p.nt - 1) as f64;
    let m = p.nx - 2;
    let r = p.d * dt / (2.0 * h * h);
    let lower = vec![-r; m];
    let diag = vec![1.0 + 2.0 * r; m];
    let upper = vec![-r; m];

    let mut u = vec![vec![0.0; p.nx]];
    let mut max_inner = 0;
    let mut last_corr: f64 = 0.0;
    for n in 0..p.nt - 1 {
        let (t0, t1) = (times[n], times[n + 1]);
        let prev = &u[n];
        let base: Vec<f64> = (1..=m)
            .map(|i| {
                r * prev[i - 1] + (1.0 - 2.0 * r) * prev[i] + r * prev[i + 1]
                    + 0.5 * dt * (p.k * prev[i] * prev[i] + source(xs[i], t0) + source(xs[i], t1))
            })
            .collect();
        let mut w: Vec<f64> = prev[1..=m].to_vec();
        let mut converged = false;
        for it in 1..=p.max_iter {
            let rhs: Vec<f64> = base.iter().zip(&w).map(|(b, wi)| b + 0.5 * dt * p.k * wi * wi).collect();
            let next = solve_tridiagonal(&lower, &diag, &upper, &rhs)?;
            let corr = next.iter().zip(&w).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
            w = next;
            max_inner = max_inner.max(it);
            last_corr = corr;
            if !corr.is_finite() {
                return Err(Error::numerical(format!("diffusion-reaction blew up at t = {t1}")));
            }
            if corr <= p.tol {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::numerical(format!(
                "fixed-point iteration did not converge at t = {t1} (last correction {last_corr:e})"
            )));
        }
        let mut row = vec![0.0; p.nx];
        row[1..=m].copy_from_slice(&w);
        u.push(row);
    }
    Ok(SolverReport {
        solution: SpaceTimeSolution { xs, times, u },
        steps: p.nt - 1,
        max_inner_iterations: max_inner,
        residual: last_corr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::observed_orders;
    use std::f64::consts::PI;

    #[test]
    fn zero_source_gives_zero() {
        let rep = solve_dr_time(|_, _| 0.0, DrTimeParams::default()).unwrap();
        assert!(rep.solution.u.iter().flatten().all(|&v| v.abs() < 1e-10));
    }

    #[test]
    fn initial_and_boundary_values() {
        let rep = solve_dr_time(|x, _| (3.0 * x).sin() + 0.5, DrTimeParams::default()).unwrap();
        let s = &rep.solution;
        assert!(s.u[0].iter().all(|&v| v == 0.0));
        assert!(s.u.iter().all(|row| row[0] == 0.0 && row[100] == 0.0));
        assert_eq!(s.u.len(), 101);
    }

    #[test]
    fn linear_variant_is_odd_in_source() {
        let p = DrTimeParams { k: 0.0, ..Default::default() };
        let a = solve_dr_time(|x, _| (5.0 * x).cos(), p).unwrap().solution;
        let b = solve_dr_time(|x, _| -(5.0 * x).cos(), p).unwrap().solution;
        for (ra, rb) in a.u.iter().zip(&b.u) {
            for (x, y) in ra.iter().zip(rb) {
                assert!((x + y).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn steady_forcing_matches_fourier_mode() {
        let p = DrTimeParams { k: 0.0, ..Default::default() };
        let s = solve_dr_time(|x, _| (PI * x).sin(), p).unwrap().solution;
        let lam = p.d * PI * PI;
        for (t, row) in s.times.iter().zip(&s.u) {
            for (x, u) in s.xs.iter().zip(row) {
                let exact = (PI * x).sin() * (1.0 - (-lam * t).exp()) / lam;
                assert!((u - exact).abs() < 1e-4, "t={t} x={x}");
            }
        }
    }

    /// Manufactured solution `u = t sin(πx)` with the full nonlinear term.
    pub(crate) fn manufactured_errors(sizes: &[usize]) -> Vec<f64> {
        let p0 = DrTimeParams::default();
        let source = move |x: f64, t: f64| {
            let s = (PI * x).sin();
            s + p0.d * PI * PI * t * s - p0.k * t * t * s * s
        };
        sizes
            .iter()
            .map(|&n| {
                let p = DrTimeParams { nx: n, nt: n, ..p0 };
                let sol = solve_dr_time(source, p).unwrap().solution;
                let last = sol.u.last().unwrap();
                sol.xs.iter().zip(last).map(|(x, u)| (u - (PI * x).sin()).abs()).fold(0.0, f64::max)
            })
            .collect()
    }

    #[test]
    fn second_order_on_manufactured_solution() {
        let orders = observed_orders(&manufactured_errors(&[11, 21, 41, 81]));
        for o in orders {
            assert!((o - 2.0).abs() < 0.3, "observed order {o}");
        }
    }
}

use super::{SolverReport, SpaceTimeSolution};
use crate::heterogeneity::uniform_grid_1d;
use crate::{Error, Result};

/// Viscous Burgers `u_t + u u_x = ν u_xx` on the periodic unit interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurgersParams {
    pub nu: f64,
    /// Periodic nodes `x_i = i / nx`.
    pub nx: usize,
    /// Output times, equispaced on `[0, t_end]` including both ends.
    pub nt: usize,
    pub t_end: f64,
    pub safety: f64,
    /// Fixed step; chosen from the stability limits when `None`.
    pub dt: Option<f64>,
}

impl Default for BurgersParams {
    fn default() -> Self {
        BurgersParams { nu: 0.1, nx: 100, nt: 101, t_end: 1.0, safety: 0.5, dt: None }
    }
}

fn rhs(u: &[f64], nu: f64, h: f64, out: &mut [f64]) {
    let n = u.len();
    for i in 0..n {
        let (l, r) = (u[(i + n - 1) % n], u[(i + 1) % n]);
        out[i] = -(r * r - l * l) / (4.0 * h) + nu * (r - 2.0 * u[i] + l) / (h * h);
    }
}

/// Central differences in conservative form, classical RK4 in time.
pub fn solve_burgers(init: &[f64], p: BurgersParams) -> Result<SolverReport<SpaceTimeSolution>> {
    let n = init.len();
    if n != p.nx || n < 3 || p.nt < 2 {
        return Err(Error::usage("Burgers initial data must have nx >= 3 values and nt >= 2"));
    }
    let h = 1.0 / n as f64;
    let umax = init.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let limit = (h * h / (2.0 * p.nu)).min(if umax > 0.0 { h / umax } else { f64::INFINITY });
    let dt_out = p.t_end / (p.nt - 1) as f64;
    let dt_target = match p.dt {
        Some(dt) if dt > limit => {
            return Err(Error::numerical(format!("time step {dt:e} exceeds the stability limit {limit:e}")))
        }
        Some(dt) => dt,
        None => p.safety * limit,
    };
    let sub = (dt_out / dt_target).ceil().max(1.0) as usize;
    let dt = dt_out / sub as f64;

    let mut u = init.to_vec();
    let mut rows = vec![u.clone()];
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    let mut steps = 0;
    for _ in 1..p.nt {
        for _ in 0..sub {
            rhs(&u, p.nu, h, &mut k1);
            for i in 0..n {
                tmp[i] = u[i] + 0.5 * dt * k1[i];
            }
            rhs(&tmp, p.nu, h, &mut k2);
            for i in 0..n {
                tmp[i] = u[i] + 0.5 * dt * k2[i];
            }
            rhs(&tmp, p.nu, h, &mut k3);
            for i in 0..n {
                tmp[i] = u[i] + dt * k3[i];
            }
            rhs(&tmp, p.nu, h, &mut k4);
            for i in 0..n {
                u[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            steps += 1;
            let now = u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if !now.is_finite() || now * dt > h {
                return Err(Error::numerical("Burgers solution left the advective stability region"));
            }
        }
        rows.push(u.clone());
    }
    let xs = (0..n).map(|i| i as f64 * h).collect();
    let times = uniform_grid_1d(0.0, p.t_end, p.nt);
    Ok(SolverReport {
        solution: SpaceTimeSolution { xs, times, u: rows },
        steps,
        max_inner_iterations: 1,
        residual: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::observed_orders;
    use std::f64::consts::PI;

    fn wave(n: usize) -> Vec<f64> {
        (0..n).map(|i| 0.3 + (2.0 * PI * i as f64 / n as f64).sin()).collect()
    }

    #[test]
    fn constant_stays_constant() {
        let s = solve_burgers(&vec![0.7; 100], BurgersParams::default()).unwrap().solution;
        assert!(s.u.iter().flatten().all(|&v| (v - 0.7).abs() < 1e-14));
    }

    #[test]
    fn mean_conserved_and_energy_decays() {
        let s = solve_burgers(&wave(100), BurgersParams::default()).unwrap().solution;
        let mean = |r: &Vec<f64>| r.iter().sum::<f64>() / r.len() as f64;
        let energy = |r: &Vec<f64>| r.iter().map(|v| v * v).sum::<f64>().sqrt();
        let m0 = mean(&s.u[0]);
        for w in s.u.windows(2) {
            assert!((mean(&w[1]) - m0).abs() < 1e-8);
            assert!(energy(&w[1]) <= energy(&w[0]) + 1e-12);
        }
        let sup = |r: &Vec<f64>| r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(sup(s.u.last().unwrap()) < sup(&s.u[0]));
    }

    #[test]
    fn refuses_unstable_step() {
        let p = BurgersParams { dt: Some(0.01), ..Default::default() };
        assert!(matches!(solve_burgers(&wave(100), p), Err(Error::Numerical(_))));
    }

    /// Differences between successive halvings, on the coarsest nodes.
    pub(crate) fn self_convergence_diffs(sizes: &[usize]) -> Vec<f64> {
        let sols: Vec<Vec<f64>> = sizes
            .iter()
            .map(|&n| {
                let p = BurgersParams { nx: n, nt: 2, t_end: 0.5, ..Default::default() };
                solve_burgers(&wave(n), p).unwrap().solution.u.pop().unwrap()
            })
            .collect();
        let base = sizes[0];
        sols.windows(2)
            .zip(sizes.windows(2))
            .map(|(s, n)| {
                let (sa, sb) = (n[0] / base, n[1] / base);
                (0..base).map(|i| (s[0][i * sa] - s[1][i * sb]).abs()).fold(0.0, f64::max)
            })
            .collect()
    }

    #[test]
    fn second_order_self_convergence() {
        let orders = observed_orders(&self_convergence_diffs(&[32, 64, 128, 256]));
        for o in orders {
            assert!((o - 2.0).abs() < 0.3, "observed order {o}");
        }
    }
}

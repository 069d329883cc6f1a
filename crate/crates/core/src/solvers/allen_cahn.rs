use std::f64::consts::PI;

use super::{solve_tridiagonal, SolverReport, SpaceTimeSolution};
use crate::heterogeneity::uniform_grid_1d;
use crate::{Error, Result};

/// `u_t = d u_xx + 5(u − u³)` on `[−1,1] × [0, t_end]`, `u(x,0) = x² cos(πx)`,
/// `u(±1,t) = −1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllenCahnParams {
    pub d: f64,
    pub nodes: usize,
    pub dt: f64,
    pub t_end: f64,
    /// Stored snapshots, equispaced including `t = 0` and `t_end`.
    pub snapshots: usize,
}

impl Default for AllenCahnParams {
    fn default() -> Self {
        AllenCahnParams { d: 0.001, nodes: 512, dt: 1e-4, t_end: 1.0, snapshots: 101 }
    }
}

/// Implicit diffusion, explicit reaction.
pub fn solve_allen_cahn(p: AllenCahnParams) -> Result<SolverReport<SpaceTimeSolution>> {
    if p.nodes < 3 || p.snapshots < 2 || !(p.dt > 0.0) {
        return Err(Error::usage("Allen-Cahn grid needs >= 3 nodes, >= 2 snapshots, dt > 0"));
    }
    let xs = uniform_grid_1d(-1.0, 1.0, p.nodes);
    let h = 2.0 / (p.nodes - 1) as f64;
    let per_snap = p.t_end / (p.snapshots - 1) as f64;
    let sub = (per_snap / p.dt).round().max(1.0) as usize;
    let dt = per_snap / sub as f64;
    let m = p.nodes - 2;
    let r = p.d * dt / (h * h);
    let lower = vec![-r; m];
    let diag = vec![1.0 + 2.0 * r; m];
    let upper = vec![-r; m];

    let mut u: Vec<f64> = xs.iter().map(|x| x * x * (PI * x).cos()).collect();
    u[0] = -1.0;
    u[p.nodes - 1] = -1.0;
    let mut rows = vec![u.clone()];
    let mut steps = 0;
    for _ in 1..p.snapshots {
        for _ in 0..sub {
            let mut rhs: Vec<f64> = (1..=m).map(|i| u[i] + dt * 5.0 * (u[i] - u[i].powi(3))).collect();
            rhs[0] += r * u[0];
            rhs[m - 1] += r * u[p.nodes - 1];
            let next = solve_tridiagonal(&lower, &diag, &upper, &rhs)?;
            u[1..=m].copy_from_slice(&next);
            steps += 1;
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical("Allen-Cahn solution became non-finite"));
        }
        rows.push(u.clone());
    }
    let times = uniform_grid_1d(0.0, p.t_end, p.snapshots);
    Ok(SolverReport {
        solution: SpaceTimeSolution { xs, times, u: rows },
        steps,
        max_inner_iterations: 1,
        residual: 0.0,
    })
}

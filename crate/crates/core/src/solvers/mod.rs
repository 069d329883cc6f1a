//! Classical numerical references: adaptive Runge–Kutta, finite-difference
//! PDE solvers and closed-form solutions.

mod allen_cahn;
mod analytic;
mod burgers;
mod bvp;
mod dr_time;
mod rk45;

pub use allen_cahn::{solve_allen_cahn, AllenCahnParams};
pub use analytic::{analytic_solution, gramacy, helmholtz2d_u, inverse_dr_k, poisson1d_u, schaffer, AnalyticFn, HELMHOLTZ_K0};
pub use burgers::{solve_burgers, BurgersParams};
pub use bvp::{apply_numerov, solve_dr_bvp, BvpParams};
pub use dr_time::{solve_dr_time, DrTimeParams};
pub use rk45::{antiderivative, rk45, Rk45Options};

use std::io::Write;

use crate::{Error, Result};

/// Solution on a tensor grid `times × xs`, row `k` holding time `times[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeSolution {
    pub xs: Vec<f64>,
    pub times: Vec<f64>,
    pub u: Vec<Vec<f64>>,
}

impl SpaceTimeSolution {
    pub fn at(&self, k: usize, i: usize) -> f64 {
        self.u[k][i]
    }

    /// Writes `t,x,u` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "x", "u"])?;
        for (t, row) in self.times.iter().zip(&self.u) {
            for (x, u) in self.xs.iter().zip(row) {
                out.write_record([t.to_string(), x.to_string(), u.to_string()])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Solver output plus diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport<T> {
    pub solution: T,
    pub steps: usize,
    /// Largest inner-iteration count of any step (1 for direct schemes).
    pub max_inner_iterations: usize,
    /// Norm of the final discrete residual or correction.
    pub residual: f64,
}

/// Thomas algorithm for `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]`.
pub(crate) fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut piv = diag[0];
    if piv.abs() < 1e-300 {
        return Err(Error::numerical("singular tridiagonal system"));
    }
    c[0] = upper[0] / piv;
    d[0] = rhs[0] / piv;
    for i in 1..n {
        piv = diag[i] - lower[i] * c[i - 1];
        if piv.abs() < 1e-300 {
            return Err(Error::numerical("singular tridiagonal system"));
        }
        c[i] = if i + 1 < n { upper[i] / piv } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / piv;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

/// `log2(e_coarse / e_fine)` for successive errors of a halving study.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

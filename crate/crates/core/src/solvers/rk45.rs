//! Dormand–Prince 5(4) with the classic continuous extension.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct Rk45Options {
    pub atol: f64,
    pub rtol: f64,
    pub h0: f64,
    /// Upper bound on the step length; keeps the dense-output interpolant
    /// (one order below the stepper) at the stepper's accuracy.
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for Rk45Options {
    fn default() -> Self {
        Rk45Options { atol: 1e-10, rtol: 1e-10, h0: 1e-3, max_step: f64::INFINITY, max_steps: 1_000_000 }
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// Integrates `y' = f(x, y)` from `(x0, y0)` and returns `y` at each of the
/// ascending `queries` (all `≥ x0`) via dense output.
pub fn rk45<F>(f: F, x0: f64, y0: &[f64], queries: &[f64], opts: Rk45Options) -> Result<Vec<Vec<f64>>>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    if queries.windows(2).any(|w| w[1] < w[0]) || queries.first().is_some_and(|&q| q < x0) {
        return Err(Error::usage("rk45 queries must be ascending and not before x0"));
    }
    let dim = y0.len();
    let mut out = Vec::with_capacity(queries.len());
    let mut q = 0;
    while q < queries.len() && queries[q] == x0 {
        out.push(y0.to_vec());
        q += 1;
    }
    let Some(&x_end) = queries.last() else { return Ok(out) };
    let (mut x, mut y) = (x0, y0.to_vec());
    let mut h = opts.h0.min(x_end - x0).max(f64::MIN_POSITIVE);
    let mut k = vec![vec![0.0; dim]; 7];
    k[0] = f(x, &y);
    let mut steps = 0;
    while q < queries.len() {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::numerical("rk45 exceeded its step budget"));
        }
        if h < 1e-14 * x.abs().max(1.0) {
            return Err(Error::numerical(format!("rk45 step size underflow at x = {x}")));
        }
        h = h.min(x_end - x).min(opts.max_step);
        for s in 1..7 {
            let ys: Vec<f64> = (0..dim).map(|d| y[d] + h * (0..s).map(|j| A[s][j] * k[j][d]).sum::<f64>()).collect();
            k[s] = f(x + C[s] * h, &ys);
        }
        // the seventh stage is evaluated at the fifth-order solution
        let y_new: Vec<f64> = (0..dim).map(|d| y[d] + h * (0..6).map(|j| A[6][j] * k[j][d]).sum::<f64>()).collect();
        let mut err = 0.0;
        for d in 0..dim {
            let e = h * (0..7).map(|j| E[j] * k[j][d]).sum::<f64>();
            let sc = opts.atol + opts.rtol * y[d].abs().max(y_new[d].abs());
            err += (e / sc).powi(2);
        }
        let err = (err / dim.max(1) as f64).sqrt();
        if !err.is_finite() {
            return Err(Error::numerical("rk45 produced a non-finite error estimate"));
        }
        if err <= 1.0 {
            let x_new = x + h;
            while q < queries.len() && queries[q] <= x_new {
                let theta = (queries[q] - x) / h;
                let th1 = 1.0 - theta;
                let v = (0..dim)
                    .map(|d| {
                        let r1 = y[d];
                        let r2 = y_new[d] - y[d];
                        let r3 = h * k[0][d] - r2;
                        let r4 = r2 - h * k[6][d] - r3;
                        let r5 = h * (0..7).map(|j| D[j] * k[j][d]).sum::<f64>();
                        r1 + theta * (r2 + th1 * (r3 + theta * (r4 + th1 * r5)))
                    })
                    .collect();
                out.push(v);
                q += 1;
            }
            x = x_new;
            y = y_new;
            k[0] = k[6].clone();
        }
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= fac;
    }
    Ok(out)
}

/// `u(x) = ∫₀ˣ v` at the ascending `queries`.
pub fn antiderivative<V: Fn(f64) -> f64>(v: V, queries: &[f64]) -> Result<Vec<f64>> {
    let sol = rk45(|x, _| vec![v(x)], 0.0, &[0.0], queries, Rk45Options::default())?;
    Ok(sol.into_iter().map(|y| y[0]).collect())
}

use super::{AutodiffError, Tape, Var};

/// `∂²f/∂x_i∂x_j`, computed by recording the first reverse sweep on the tape
/// and sweeping it again.
pub fn second_derivative<F>(f: F, x: &[f64], i: usize, j: usize) -> Result<f64, AutodiffError>
where
    F: for<'t> Fn(&'t Tape, &[Var<'t>]) -> Var<'t>,
{
    let tape = Tape::new();
    let xs = tape.vars(x);
    let y = f(&tape, &xs);
    let gi = tape.gradient_graph(y, &[xs[i]])?[0];
    Ok(tape.gradient(gi, &[xs[j]])?[0])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdOrder {
    First,
    Second,
}

/// Autodiff derivatives next to their central-difference estimates.
///
/// For [`FdOrder::First`] the entries are the gradient components; for
/// [`FdOrder::Second`] they are the Hessian entries in row-major order.
#[derive(Debug, Clone)]
pub struct FdReport {
    pub autodiff: Vec<f64>,
    pub finite_diff: Vec<f64>,
    pub rel_err: Vec<f64>,
    pub max_rel_err: f64,
}

/// Relative errors use `max(|ad|, |fd|, 1e-3)` as the denominator, so that
/// derivatives that vanish analytically are compared in absolute terms.
pub fn finite_diff_check<F>(f: F, x: &[f64], order: FdOrder, h: f64) -> Result<FdReport, AutodiffError>
where
    F: for<'t> Fn(&'t Tape, &[Var<'t>]) -> Var<'t>,
{
    assert!(h > 0.0, "finite-difference step must be positive");
    let eval = |p: &[f64]| -> f64 {
        let tape = Tape::new();
        let xs = tape.vars(p);
        f(&tape, &xs).value()
    };
    let n = x.len();
    let shifted = |moves: &[(usize, f64)]| -> f64 {
        let mut p = x.to_vec();
        for &(k, d) in moves {
            p[k] += d;
        }
        eval(&p)
    };

    let tape = Tape::new();
    let xs = tape.vars(x);
    let y = f(&tape, &xs);

    let (autodiff, finite_diff) = match order {
        FdOrder::First => {
            let ad = tape.gradient(y, &xs)?;
            let fd = (0..n)
                .map(|k| (shifted(&[(k, h)]) - shifted(&[(k, -h)])) / (2.0 * h))
                .collect();
            (ad, fd)
        }
        FdOrder::Second => {
            let grads = tape.gradient_graph(y, &xs)?;
            let mut ad = Vec::with_capacity(n * n);
            for g in &grads {
                ad.extend(tape.gradient(*g, &xs)?);
            }
            let f0 = eval(x);
            let mut fd = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    let v = if i == j {
                        (shifted(&[(i, h)]) - 2.0 * f0 + shifted(&[(i, -h)])) / (h * h)
                    } else {
                        (shifted(&[(i, h), (j, h)]) - shifted(&[(i, h), (j, -h)]) - shifted(&[(i, -h), (j, h)])
                            + shifted(&[(i, -h), (j, -h)]))
                            / (4.0 * h * h)
                    };
                    fd.push(v);
                }
            }
            (ad, fd)
        }
    };

    let rel_err: Vec<f64> = autodiff
        .iter()
        .zip(&finite_diff)
        .map(|(a, d): (&f64, &f64)| (a - d).abs() / a.abs().max(d.abs()).max(1e-3))
        .collect();
    let max_rel_err = rel_err.iter().cloned().fold(0.0, f64::max);
    Ok(FdReport { autodiff, finite_diff, rel_err, max_rel_err })
}

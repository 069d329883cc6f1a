use std::f64::consts::PI;

use crate::{Error, Result};

/// Gramacy & Lee function translated to `[−1,1]`.
pub fn gramacy(x: f64) -> f64 {
    (x + 0.5).powi(4) - (10.0 * PI * x).sin() / (2.0 * x + 3.0)
}

/// Schaffer function (N. 2).
pub fn schaffer(x: f64, y: f64) -> f64 {
    let r2 = x * x + y * y;
    0.5 + ((x * x - y * y).sin().powi(2) - 0.5) / (1.0 + 0.001 * r2).powi(2)
}

pub fn poisson1d_u(x: f64) -> f64 {
    x + (1..=4).map(|i| (i as f64 * x).sin() / i as f64).sum::<f64>() + (8.0 * x).sin() / 8.0
}

pub const HELMHOLTZ_K0: f64 = 4.0 * PI;

pub fn helmholtz2d_u(x: f64, y: f64) -> f64 {
    (HELMHOLTZ_K0 * x).sin() * (HELMHOLTZ_K0 * y).sin()
}

/// Reaction rate of the inverse diffusion-reaction problem.
pub fn inverse_dr_k(x: f64) -> f64 {
    0.1 + (-0.5 * (x - 0.5).powi(2) / (0.15 * 0.15)).exp()
}

pub type AnalyticFn = fn(&[f64]) -> f64;

/// Closed-form evaluators by name, taking a coordinate slice.
pub fn analytic_solution(name: &str) -> Result<AnalyticFn> {
    Ok(match name {
        "poisson1d_u" => |p| poisson1d_u(p[0]),
        "helmholtz2d_u" => |p| helmholtz2d_u(p[0], p[1]),
        "inverse_dr_k" => |p| inverse_dr_k(p[0]),
        "gramacy" => |p| gramacy(p[0]),
        "schaffer" => |p| schaffer(p[0], p[1]),
        _ => return Err(Error::usage(format!("unknown analytic solution {name:?}"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(gramacy(0.0), 0.0625);
        assert_eq!(schaffer(0.0, 0.0), 0.0);
        assert_eq!(poisson1d_u(0.0), 0.0);
        assert!((poisson1d_u(PI) - PI).abs() < 1e-14);
        assert!((inverse_dr_k(0.5) - 1.1).abs() < 1e-15);
        assert_eq!(analytic_solution("inverse_dr_k").unwrap()(&[0.5]), inverse_dr_k(0.5));
        assert!(analytic_solution("nope").is_err());
    }
}

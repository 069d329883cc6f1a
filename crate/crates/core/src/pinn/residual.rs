//! Hard-constraint output transforms and pointwise PDE residuals.
//!
//! Every transform has the form `û = g + h·N` with fixed `g`, `h`; the
//! residuals take the jet of `û` so they can be fed either a network or a
//! closed-form solution.

use std::f64::consts::PI;

use super::Jet;
use crate::autodiff::Scalar;
use crate::solvers::HELMHOLTZ_K0;

pub const ALLEN_CAHN_D: f64 = 0.001;
pub const INVERSE_DR_LAMBDA: f64 = 0.01;

/// Value, gradient and pure second derivatives of a fixed function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fixed<const D: usize> {
    pub value: f64,
    pub grad: [f64; D],
    pub hess_diag: [f64; D],
}

/// `û = g + h·N` with the product rule applied per input direction.
pub fn lift<S: Scalar, const D: usize>(g: Fixed<D>, h: Fixed<D>, n: &Jet<S, D>) -> Jet<S, D> {
    let mut grad = n.grad;
    let mut hess = n.hess_diag;
    for d in 0..D {
        grad[d] = n.value * h.grad[d] + n.grad[d] * h.value + g.grad[d];
        hess[d] = n.value * h.hess_diag[d] + n.grad[d] * (2.0 * h.grad[d]) + n.hess_diag[d] * h.value + g.hess_diag[d];
    }
    Jet { value: n.value * h.value + g.value, grad, hess_diag: hess }
}

/// `û(x) = x + x(π − x)·N(x)`.
pub fn poisson_1d_lift(x: f64) -> (Fixed<1>, Fixed<1>) {
    (
        Fixed { value: x, grad: [1.0], hess_diag: [0.0] },
        Fixed { value: x * (PI - x), grad: [PI - 2.0 * x], hess_diag: [-2.0] },
    )
}

/// `û(x, y) = x(1−x)·y(1−y)·N(x, y)`.
pub fn helmholtz_2d_lift(p: [f64; 2]) -> (Fixed<2>, Fixed<2>) {
    let [x, y] = p;
    let (bx, by) = (x * (1.0 - x), y * (1.0 - y));
    let (dx, dy) = (1.0 - 2.0 * x, 1.0 - 2.0 * y);
    (
        Fixed { value: 0.0, grad: [0.0; 2], hess_diag: [0.0; 2] },
        Fixed { value: bx * by, grad: [dx * by, bx * dy], hess_diag: [-2.0 * by, -2.0 * bx] },
    )
}

/// `û(x, t) = x²cos(πx) + t(1 − x²)·N(x, t)`.
pub fn allen_cahn_lift(p: [f64; 2]) -> (Fixed<2>, Fixed<2>) {
    let [x, t] = p;
    let (c, s) = ((PI * x).cos(), (PI * x).sin());
    (
        Fixed {
            value: x * x * c,
            grad: [2.0 * x * c - PI * x * x * s, 0.0],
            hess_diag: [2.0 * c - 4.0 * PI * x * s - PI * PI * x * x * c, 0.0],
        },
        Fixed { value: t * (1.0 - x * x), grad: [-2.0 * x * t, 1.0 - x * x], hess_diag: [-2.0 * t, 0.0] },
    )
}

/// `û(x) = x(1 − x)·N(x)`.
pub fn inverse_dr_lift(x: f64) -> (Fixed<1>, Fixed<1>) {
    (
        Fixed { value: 0.0, grad: [0.0], hess_diag: [0.0] },
        Fixed { value: x * (1.0 - x), grad: [1.0 - 2.0 * x], hess_diag: [-2.0] },
    )
}

pub fn poisson_1d_source(x: f64) -> f64 {
    (1..=4).map(|i| i as f64 * (i as f64 * x).sin()).sum::<f64>() + 8.0 * (8.0 * x).sin()
}

/// `−u_xx − f`.
pub fn residual_poisson_1d<S: Scalar>(x: f64, u: &Jet<S, 1>) -> S {
    -u.hess_diag[0] - poisson_1d_source(x)
}

/// `−u_xx − u_yy − k0²u − k0² sin(k0 x) sin(k0 y)`.
pub fn residual_helmholtz_2d<S: Scalar>(p: [f64; 2], u: &Jet<S, 2>) -> S {
    let k2 = HELMHOLTZ_K0 * HELMHOLTZ_K0;
    let f = k2 * (HELMHOLTZ_K0 * p[0]).sin() * (HELMHOLTZ_K0 * p[1]).sin();
    -u.hess_diag[0] - u.hess_diag[1] - u.value * k2 - f
}

/// `u_t − d·u_xx − 5(u − u³)` with inputs ordered `(x, t)`.
pub fn residual_allen_cahn<S: Scalar>(u: &Jet<S, 2>) -> S {
    let v = u.value;
    u.grad[1] - u.hess_diag[0] * ALLEN_CAHN_D - (v - v * v * v) * 5.0
}

/// `λ·u_xx − k·u − sin(2πx)`.
pub fn residual_inverse_dr<S: Scalar>(x: f64, u: &Jet<S, 1>, k: S) -> S {
    u.hess_diag[0] * INVERSE_DR_LAMBDA - k * u.value - (2.0 * PI * x).sin()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixed_jet<const D: usize>(f: Fixed<D>) -> Jet<f64, D> {
        Jet { value: f.value, grad: f.grad, hess_diag: f.hess_diag }
    }

    #[test]
    fn zero_network_reduces_to_g() {
        let n = Jet::<f64, 1>::constant(0.0, 0.0);
        let (g, h) = poisson_1d_lift(1.3);
        let u = lift(g, h, &n);
        assert_eq!((u.value, u.grad[0], u.hess_diag[0]), (1.3, 1.0, 0.0));
        assert_eq!(residual_poisson_1d(1.3, &u), -poisson_1d_source(1.3));

        let (g, h) = helmholtz_2d_lift([0.3, 0.8]);
        let u = lift(g, h, &Jet::<f64, 2>::constant(0.0, 0.0));
        let k2 = HELMHOLTZ_K0 * HELMHOLTZ_K0;
        let f = k2 * (HELMHOLTZ_K0 * 0.3).sin() * (HELMHOLTZ_K0 * 0.8).sin();
        assert_eq!(residual_helmholtz_2d([0.3, 0.8], &u), -f);
    }

    #[test]
    fn lift_derivatives_match_finite_differences() {
        // û for N(x, t) = sin(x + 2t): compare derivatives against central differences.
        let n_at = |x: f64, t: f64| (x + 2.0 * t).sin();
        let u_at = |x: f64, t: f64| {
            let (g, h) = allen_cahn_lift([x, t]);
            g.value + h.value * n_at(x, t)
        };
        let (x, t) = (0.37, 0.61);
        let s = (x + 2.0 * t).sin();
        let c = (x + 2.0 * t).cos();
        let n = Jet { value: s, grad: [c, 2.0 * c], hess_diag: [-s, -4.0 * s] };
        let (g, h) = allen_cahn_lift([x, t]);
        let u = lift(g, h, &n);
        let e = 1e-4;
        let ux = (u_at(x + e, t) - u_at(x - e, t)) / (2.0 * e);
        let ut = (u_at(x, t + e) - u_at(x, t - e)) / (2.0 * e);
        let uxx = (u_at(x + e, t) - 2.0 * u_at(x, t) + u_at(x - e, t)) / (e * e);
        assert!((u.grad[0] - ux).abs() < 1e-7);
        assert!((u.grad[1] - ut).abs() < 1e-7);
        assert!((u.hess_diag[0] - uxx).abs() < 1e-5);
    }

    #[test]
    fn allen_cahn_initial_and_boundary_values() {
        for x in [-1.0, -0.4, 0.0, 0.9, 1.0] {
            let (g, h) = allen_cahn_lift([x, 0.0]);
            assert_eq!(h.value, 0.0);
            assert!((g.value - x * x * (PI * x).cos()).abs() < 1e-15);
        }
        for t in [0.0, 0.5, 1.0] {
            for x in [-1.0, 1.0] {
                let (g, h) = allen_cahn_lift([x, t]);
                assert_eq!(h.value, 0.0);
                assert!((g.value + 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn allen_cahn_zero_network_at_t0_is_finite() {
        let (g, h) = allen_cahn_lift([0.25, 0.0]);
        let u = lift(g, h, &Jet::<f64, 2>::constant(0.0, 0.0));
        let r = residual_allen_cahn(&u);
        let v = g.value;
        // N ≡ 0 gives u_t = 0.
        let expect = -ALLEN_CAHN_D * g.hess_diag[0] - 5.0 * (v - v * v * v);
        assert!(r.is_finite());
        assert!((r - expect).abs() < 1e-15);
    }

    #[test]
    fn inverse_dr_boundary_is_zero() {
        for x in [0.0, 1.0] {
            let (g, h) = inverse_dr_lift(x);
            let u = lift(g, h, &Jet::<f64, 1>::constant(0.0, 5.0));
            assert_eq!(u.value, 0.0);
        }
        let j = fixed_jet(inverse_dr_lift(0.5).1);
        assert_eq!(j.value, 0.25);
    }
}

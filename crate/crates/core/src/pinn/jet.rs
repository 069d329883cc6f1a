use crate::autodiff::Scalar;
use crate::nn::{Activation, MlpSpec};
use crate::{Error, Result};

/// A value with its gradient and pure second derivatives `∂²/∂x_d²` with
/// respect to the network input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet<S, const D: usize> {
    pub value: S,
    pub grad: [S; D],
    pub hess_diag: [S; D],
}

impl<S: Scalar, const D: usize> Jet<S, D> {
    /// A constant: zero derivatives.
    pub fn constant(like: S, v: f64) -> Self {
        let z = like.lift(0.0);
        Jet { value: like.lift(v), grad: [z; D], hess_diag: [z; D] }
    }
}

fn activate<S: Scalar, const D: usize>(act: Activation, z: Jet<S, D>) -> Jet<S, D> {
    let (a, s1, s2) = match act {
        Activation::Tanh => {
            let a = z.value.tanh();
            let s1 = -(a * a) + 1.0;
            (a, s1, a * s1 * -2.0)
        }
        Activation::Sin => {
            let a = z.value.sin();
            (a, z.value.cos(), -a)
        }
        Activation::Relu => {
            let on = if z.value.value() > 0.0 { 1.0 } else { 0.0 };
            (z.value.relu(), z.value.lift(on), z.value.lift(0.0))
        }
    };
    let mut grad = z.grad;
    let mut hess = z.hess_diag;
    for d in 0..D {
        grad[d] = s1 * z.grad[d];
        hess[d] = s2 * z.grad[d] * z.grad[d] + s1 * z.hess_diag[d];
    }
    Jet { value: a, grad, hess_diag: hess }
}

/// Forward pass propagating value, input gradient and pure second
/// derivatives through every layer. Returns one jet per network output.
pub fn mlp_jet<S: Scalar, const D: usize>(spec: &MlpSpec, params: &[S], x: &[f64; D]) -> Result<Vec<Jet<S, D>>> {
    if spec.input_width() != D {
        return Err(Error::usage(format!("network expects {} inputs, got {D}", spec.input_width())));
    }
    if params.len() != spec.num_params() {
        return Err(Error::usage(format!(
            "network expects {} parameters, got {}",
            spec.num_params(),
            params.len()
        )));
    }
    let zero = params[0].lift(0.0);
    let last = spec.layer_count() - 1;

    // First layer: input derivatives are unit vectors, so z_d = W[:, d].
    let (wr, br) = spec.layer_ranges(0);
    let (w, b) = (&params[wr], &params[br]);
    let xs: Vec<S> = x.iter().map(|&v| zero.lift(v)).collect();
    let mut act: Vec<Jet<S, D>> = (0..spec.layer_widths[1])
        .map(|j| {
            let row = &w[j * D..(j + 1) * D];
            let mut grad = [zero; D];
            grad.copy_from_slice(row);
            let z = Jet { value: S::affine(row, &xs, b[j]), grad, hess_diag: [zero; D] };
            if last > 0 {
                activate(spec.activation, z)
            } else {
                z
            }
        })
        .collect();

    let mut values: Vec<S> = Vec::new();
    let mut grads: Vec<Vec<S>> = vec![Vec::new(); D];
    let mut hess: Vec<Vec<S>> = vec![Vec::new(); D];
    for l in 1..=last {
        let (wr, br) = spec.layer_ranges(l);
        let fan_in = spec.layer_widths[l];
        let (w, b) = (&params[wr], &params[br]);
        values.clear();
        values.extend(act.iter().map(|a| a.value));
        for d in 0..D {
            grads[d].clear();
            grads[d].extend(act.iter().map(|a| a.grad[d]));
            hess[d].clear();
            hess[d].extend(act.iter().map(|a| a.hess_diag[d]));
        }
        act = (0..spec.layer_widths[l + 1])
            .map(|j| {
                let row = &w[j * fan_in..(j + 1) * fan_in];
                let mut g = [zero; D];
                let mut h = [zero; D];
                for d in 0..D {
                    g[d] = S::affine(row, &grads[d], zero);
                    h[d] = S::affine(row, &hess[d], zero);
                }
                let z = Jet { value: S::affine(row, &values, b[j]), grad: g, hess_diag: h };
                if l < last {
                    activate(spec.activation, z)
                } else {
                    z
                }
            })
            .collect();
    }
    Ok(act)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{second_derivative, Tape};
    use crate::nn::{forward, init_glorot};

    #[test]
    fn jet_matches_tape_derivatives() {
        for act in [Activation::Tanh, Activation::Sin] {
            let spec = MlpSpec::new(vec![2, 5, 4, 1], act, 3).unwrap();
            let p = init_glorot(&spec);
            let x = [0.3, -0.7];
            let jet = &mlp_jet::<f64, 2>(&spec, p.flat(), &x).unwrap()[0];
            assert!((jet.value - forward(&spec, p.flat(), &x).unwrap()[0]).abs() < 1e-14);

            for d in 0..2 {
                let tape = Tape::new();
                let xs = tape.vars(&x);
                let ps = tape.vars(p.flat());
                let y = forward(&spec, &ps, &xs).unwrap()[0];
                let g = tape.gradient(y, &xs).unwrap();
                assert!((jet.grad[d] - g[d]).abs() < 1e-12, "{act:?} grad {d}");
                let h = second_derivative(
                    |t, xs| {
                        let ps = t.vars(p.flat());
                        forward(&spec, &ps, xs).unwrap()[0]
                    },
                    &x,
                    d,
                    d,
                )
                .unwrap();
                assert!((jet.hess_diag[d] - h).abs() < 1e-11, "{act:?} hess {d}");
            }
        }
    }

    #[test]
    fn single_layer_is_affine() {
        let spec = MlpSpec::new(vec![1, 1], Activation::Tanh, 0).unwrap();
        let jet = &mlp_jet::<f64, 1>(&spec, &[2.0, 1.0], &[3.0]).unwrap()[0];
        assert_eq!((jet.value, jet.grad[0], jet.hess_diag[0]), (7.0, 2.0, 0.0));
    }

    #[test]
    fn input_width_checked() {
        let spec = MlpSpec::new(vec![2, 3, 1], Activation::Tanh, 0).unwrap();
        let p = init_glorot(&spec);
        assert!(mlp_jet::<f64, 1>(&spec, p.flat(), &[0.0]).is_err());
    }
}

use std::ops::{Add, Div, Mul, Neg, Sub};

use super::Var;

/// Arithmetic shared by plain `f64` and tape variables, so that network
/// forward passes, hard-constraint transforms and PDE residuals are written
/// once and evaluated either way.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn value(&self) -> f64;
    /// A constant living in the same context as `self`.
    fn lift(&self, c: f64) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn tanh(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn relu(self) -> Self;
    fn powi(self, n: i32) -> Self;

    /// `Σ w_k·x_k + bias`.
    fn affine(weights: &[Self], inputs: &[Self], bias: Self) -> Self {
        weights.iter().zip(inputs).fold(bias, |acc, (&w, &x)| acc + w * x)
    }

    fn softplus(self) -> Self {
        (self.exp() + 1.0).ln()
    }
}

impl Scalar for f64 {
    fn value(&self) -> f64 {
        *self
    }
    fn lift(&self, c: f64) -> Self {
        c
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn relu(self) -> Self {
        self.max(0.0)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    fn affine(weights: &[f64], inputs: &[f64], bias: f64) -> f64 {
        // Same accumulation order as the tape's dot node.
        let mut s = 0.0;
        for (w, x) in weights.iter().zip(inputs) {
            s += w * x;
        }
        s + bias
    }
}

impl<'t> Scalar for Var<'t> {
    fn value(&self) -> f64 {
        Var::value(self)
    }
    fn lift(&self, c: f64) -> Self {
        self.tape().constant(c)
    }
    fn sin(self) -> Self {
        Var::sin(self)
    }
    fn cos(self) -> Self {
        Var::cos(self)
    }
    fn tanh(self) -> Self {
        Var::tanh(self)
    }
    fn exp(self) -> Self {
        Var::exp(self)
    }
    fn ln(self) -> Self {
        Var::ln(self)
    }
    fn relu(self) -> Self {
        Var::relu(self)
    }
    fn powi(self, n: i32) -> Self {
        Var::powi(self, n)
    }
    fn affine(weights: &[Self], inputs: &[Self], bias: Self) -> Self {
        bias.tape().affine(weights, inputs, bias)
    }
}

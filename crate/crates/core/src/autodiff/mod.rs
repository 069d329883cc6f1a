//! Scalar reverse-mode automatic differentiation.
//!
//! A [`Tape`] records scalar operations; [`Var`] handles point into it.
//! First-order gradients come from a numeric reverse sweep, and the sweep
//! can also be recorded onto the tape ([`Tape::gradient_graph`]) so that
//! PDE residuals can use `u_xx` and still be differentiated with respect to
//! network parameters.

mod check;
mod scalar;
mod tape;

pub use check::{finite_diff_check, second_derivative, FdOrder, FdReport};
pub use scalar::Scalar;
pub use tape::{OpKind, Tape, Var};

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum AutodiffError {
    #[error("non-finite value {value} produced by `{op}` from inputs {inputs:?}")]
    NonFinite { op: &'static str, inputs: Vec<f64>, value: f64 },

    #[error("variable belongs to a different tape")]
    ForeignTape,

    #[error("`{op}` cannot take {got} operands")]
    Arity { op: &'static str, got: usize },
}

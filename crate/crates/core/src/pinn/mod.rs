//! Regression and physics-informed problems bound to client shards.
//!
//! PDE problems enforce boundary and initial conditions through output
//! transforms `û = g + h·N`; the loss is the mean squared residual (plus an
//! observation term for the inverse problem).

mod jet;
mod problem;
mod regression;
pub mod residual;

pub use jet::{mlp_jet, Jet};
pub use problem::{
    allen_cahn_collocation, allen_cahn_problem, helmholtz2d_collocation, helmholtz2d_problem, inverse_dr_problem,
    inverse_dr_reference, pinn_total_loss, poisson1d_collocation, poisson1d_problem, PdeKind, PinnModel,
    PinnObjective, PinnProblem, PinnShard,
};
pub use regression::{
    gramacy_dataset, gramacy_problem, regression_loss, schaffer_dataset, schaffer_problem, RegressionObjective,
    RegressionProblem,
};

use crate::{Error, Result};

/// `‖pred − reference‖₂ / ‖reference‖₂`.
pub fn l2_relative_error(pred: &[f64], reference: &[f64]) -> Result<f64> {
    if pred.len() != reference.len() {
        return Err(Error::usage(format!("{} predictions vs {} reference values", pred.len(), reference.len())));
    }
    let norm = reference.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::usage("relative error against a zero reference"));
    }
    let diff = pred.iter().zip(reference).map(|(p, r)| (p - r) * (p - r)).sum::<f64>().sqrt();
    Ok(diff / norm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l2_relative_examples() {
        let u = [0.6, -0.8, 0.0];
        assert_eq!(l2_relative_error(&u, &u).unwrap(), 0.0);
        let twice: Vec<f64> = u.iter().map(|v| 2.0 * v).collect();
        assert!((l2_relative_error(&twice, &u).unwrap() - 1.0).abs() < 1e-15);
        // unit-norm u shifted by a constant ε
        let eps = 1e-3;
        let shifted: Vec<f64> = u.iter().map(|v| v + eps).collect();
        assert!((l2_relative_error(&shifted, &u).unwrap() - eps * 3f64.sqrt()).abs() < 1e-15);
        assert!(l2_relative_error(&[1.0], &[0.0]).is_err());
    }
}

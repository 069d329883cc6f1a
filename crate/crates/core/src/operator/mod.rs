//! DeepONet: `G(v)(ξ) = Σ_k b_k(v)·t_k(ξ) + b0`.
//!
//! The branch network reads the input function at fixed sensors, the trunk
//! network reads the query coordinate. Parameters are flattened as
//! `branch | trunk | b0` so federation treats the model as one vector.

mod data;
mod problem;

pub use data::{
    build_antiderivative_dataset, build_burgers_dataset, build_dr_dataset, periodize, OperatorDataset, OperatorKind,
    SensorGrid,
};
pub use problem::{
    communication_sweep, operator_error, CommSweepPoint, DeepOnetObjective, DeepOnetProblem, OperatorErrorReport,
    OperatorSetup,
};

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::autodiff::Scalar;
use crate::nn::{forward, init_glorot, Activation, MlpBatch, MlpSpec, ParamLayout};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeepOnetSpec {
    pub branch: MlpSpec,
    /// The trunk output passes through the activation.
    pub trunk: MlpSpec,
}

impl DeepOnetSpec {
    pub fn new(branch: MlpSpec, trunk: MlpSpec) -> Result<Self> {
        if branch.output_width() != trunk.output_width() {
            return Err(Error::usage(format!(
                "branch width {} and trunk width {} differ",
                branch.output_width(),
                trunk.output_width()
            )));
        }
        Ok(DeepOnetSpec { branch, trunk })
    }

    /// `depth` hidden layers of `width` in both nets and `p = width`.
    pub fn uniform(sensors: usize, query_dim: usize, width: usize, depth: usize, act: Activation, seed: u64) -> Result<Self> {
        Self::new(
            MlpSpec::uniform(sensors, width, depth, width, act, seed)?,
            MlpSpec::uniform(query_dim, width, depth, width, act, seed)?,
        )
    }

    pub fn p(&self) -> usize {
        self.branch.output_width()
    }

    pub fn num_params(&self) -> usize {
        self.branch.num_params() + self.trunk.num_params() + 1
    }

    fn split<'a, S>(&self, params: &'a [S]) -> Result<(&'a [S], &'a [S], &'a S)> {
        if params.len() != self.num_params() {
            return Err(Error::usage(format!("DeepONet expects {} parameters, got {}", self.num_params(), params.len())));
        }
        let nb = self.branch.num_params();
        let (branch, rest) = params.split_at(nb);
        let (trunk, b0) = rest.split_at(self.trunk.num_params());
        Ok((branch, trunk, &b0[0]))
    }

    /// Glorot weights for both nets (trunk on an offset seed), `b0 = 0`.
    pub fn init_params(&self, seed: u64) -> Vec<f64> {
        let mut p = init_glorot(&MlpSpec { seed, ..self.branch.clone() }).into_flat();
        p.extend(init_glorot(&MlpSpec { seed: seed ^ 0x7472_756e, ..self.trunk.clone() }).into_flat());
        p.push(0.0);
        p
    }

    pub fn layout(&self) -> ParamLayout {
        let mut layout = self.branch.layout("branch_");
        layout.extend_shifted(&self.trunk.layout("trunk_"), self.branch.num_params());
        let last = self.num_params() - 1;
        layout.push("b0".into(), last..last + 1);
        layout
    }
}

/// Single prediction, generic so that it can be recorded on a tape.
pub fn deeponet_forward<S: Scalar>(spec: &DeepOnetSpec, params: &[S], sensor_values: &[S], xi: &[S]) -> Result<S> {
    let (pb, pt, b0) = spec.split(params)?;
    let b = forward(&spec.branch, pb, sensor_values)?;
    let t: Vec<S> = forward(&spec.trunk, pt, xi)?.into_iter().map(|z| spec.trunk.activation.apply(z)).collect();
    Ok(b.iter().zip(&t).fold(*b0, |acc, (&bk, &tk)| acc + bk * tk))
}

/// Predictions for every (function, query) pair: `F × Q`.
pub fn deeponet_predict(spec: &DeepOnetSpec, params: &[f64], inputs: ArrayView2<'_, f64>, queries: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let (pb, pt, b0) = spec.split(params)?;
    check_widths(spec, inputs, queries)?;
    let b = MlpBatch::new(&spec.branch).forward(pb, inputs);
    let t = MlpBatch::with_output_activation(&spec.trunk).forward(pt, queries);
    Ok(b.output().dot(&t.output().t()) + *b0)
}

fn check_widths(spec: &DeepOnetSpec, inputs: ArrayView2<'_, f64>, queries: ArrayView2<'_, f64>) -> Result<()> {
    if inputs.ncols() != spec.branch.input_width() || queries.ncols() != spec.trunk.input_width() {
        return Err(Error::usage(format!(
            "DeepONet expects {} sensors and {}-D queries, got {} and {}",
            spec.branch.input_width(),
            spec.trunk.input_width(),
            inputs.ncols(),
            queries.ncols()
        )));
    }
    Ok(())
}

/// Mean squared error over all `F × Q` pairs and its gradient.
pub fn deeponet_loss_grad(
    spec: &DeepOnetSpec,
    params: &[f64],
    inputs: ArrayView2<'_, f64>,
    queries: ArrayView2<'_, f64>,
    targets: ArrayView2<'_, f64>,
) -> Result<(f64, Vec<f64>)> {
    let (pb, pt, b0) = spec.split(params)?;
    check_widths(spec, inputs, queries)?;
    if targets.dim() != (inputs.nrows(), queries.nrows()) {
        return Err(Error::usage("targets must be functions × queries"));
    }
    let branch = MlpBatch::new(&spec.branch);
    let trunk = MlpBatch::with_output_activation(&spec.trunk);
    let bc = branch.forward(pb, inputs);
    let tc = trunk.forward(pt, queries);
    let diff = bc.output().dot(&tc.output().t()) + *b0 - targets;
    let count = diff.len() as f64;
    let loss = diff.iter().map(|d| d * d).sum::<f64>() / count;
    let d_pred = diff.mapv(|d| 2.0 * d / count);
    let d_branch = d_pred.dot(tc.output());
    let d_trunk = d_pred.t().dot(bc.output());
    let mut grad = vec![0.0; params.len()];
    let nb = spec.branch.num_params();
    let nt = spec.trunk.num_params();
    branch.backward(pb, &bc, d_branch, &mut grad[..nb], None);
    trunk.backward(pt, &tc, d_trunk, &mut grad[nb..nb + nt], None);
    grad[nb + nt] = d_pred.sum();
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{finite_diff_check, FdOrder, Tape};

    fn small(act: Activation) -> DeepOnetSpec {
        DeepOnetSpec::uniform(4, 1, 5, 2, act, 3).unwrap()
    }

    #[test]
    fn scalar_examples() {
        // p = 1 with relu so the trunk output can be set to 3 directly
        let spec = DeepOnetSpec::new(
            MlpSpec::new(vec![1, 1], Activation::Relu, 0).unwrap(),
            MlpSpec::new(vec![1, 1], Activation::Relu, 0).unwrap(),
        )
        .unwrap();
        // branch: w = 2, b = 0 with sensor 1; trunk: w = 0, b = 3; b0 = 1
        let params = [2.0, 0.0, 0.0, 3.0, 1.0];
        assert_eq!(deeponet_forward(&spec, &params, &[1.0], &[0.5]).unwrap(), 7.0);
        let zero_branch = [0.0, 0.0, 0.0, 3.0, 1.0];
        assert_eq!(deeponet_forward(&spec, &zero_branch, &[1.0], &[0.5]).unwrap(), 1.0);
        assert!(deeponet_forward(&spec, &params, &[1.0, 2.0], &[0.5]).is_err());
    }

    #[test]
    fn batched_matches_pointwise_and_tape() {
        for act in [Activation::Tanh, Activation::Relu] {
            let spec = small(act);
            let mut params = spec.init_params(1);
            *params.last_mut().unwrap() = 0.3;
            let inputs = Array2::from_shape_fn((3, 4), |(i, j)| ((i * 4 + j) as f64 * 0.7).sin());
            let queries = Array2::from_shape_fn((5, 1), |(i, _)| i as f64 * 0.2);
            let targets = Array2::from_shape_fn((3, 5), |(i, j)| (i as f64 - j as f64) * 0.1);
            let pred = deeponet_predict(&spec, &params, inputs.view(), queries.view()).unwrap();
            let (loss, grad) = deeponet_loss_grad(&spec, &params, inputs.view(), queries.view(), targets.view()).unwrap();

            let tape = Tape::new();
            let ps = tape.vars(&params);
            let mut acc = tape.constant(0.0);
            for i in 0..3 {
                let v = tape.vars(&inputs.row(i).to_vec());
                for j in 0..5 {
                    let q = tape.vars(&queries.row(j).to_vec());
                    let y = deeponet_forward(&spec, &ps, &v, &q).unwrap();
                    assert!((y.value() - pred[[i, j]]).abs() < 1e-13);
                    let d = y - targets[[i, j]];
                    acc = acc + d * d;
                }
            }
            let l = acc / 15.0;
            assert!((l.value() - loss).abs() < 1e-13);
            let tg = tape.gradient(l, &ps).unwrap();
            for (a, b) in grad.iter().zip(&tg) {
                assert!((a - b).abs() < 1e-12, "{act:?}");
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let spec = small(Activation::Tanh);
        let params = spec.init_params(4);
        let v = [0.1, -0.4, 0.8, 0.3];
        let report = finite_diff_check(
            |t, ps| {
                let vs: Vec<_> = v.iter().map(|&x| t.constant(x)).collect();
                let q = [t.constant(0.35)];
                deeponet_forward(&spec, ps, &vs, &q).unwrap()
            },
            &params,
            FdOrder::First,
            1e-5,
        )
        .unwrap();
        assert!(report.max_rel_err < 1e-5, "{}", report.max_rel_err);
    }

    #[test]
    fn linear_in_branch_outputs() {
        // Scaling the branch output layer by c scales (prediction − b0) by c.
        let spec = small(Activation::Tanh);
        let mut params = spec.init_params(2);
        *params.last_mut().unwrap() = 0.7;
        let v = [0.2, 0.4, -0.1, 0.9];
        let base = deeponet_forward(&spec, &params, &v, &[0.6]).unwrap() - 0.7;
        let (w, b) = spec.branch.layer_ranges(spec.branch.layer_count() - 1);
        for i in w.start..b.end {
            params[i] *= 4.0;
        }
        let scaled = deeponet_forward(&spec, &params, &v, &[0.6]).unwrap() - 0.7;
        assert!((scaled - 4.0 * base).abs() < 1e-12 * base.abs().max(1.0));
    }

    #[test]
    fn layout_covers_all_params() {
        let spec = small(Activation::Relu);
        let layout = spec.layout();
        assert_eq!(layout.len(), spec.num_params());
        assert_eq!(layout.blocks.last().unwrap().0, "b0");
    }
}

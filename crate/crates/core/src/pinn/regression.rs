use ndarray::Array2;

use super::l2_relative_error;
use crate::federation::{LossGrad, Objective, Problem};
use crate::heterogeneity::{hammersley, partition_1d, partition_2d_x, uniform_grid_1d, uniform_grid_2d, Dataset, Shard};
use crate::nn::{init_glorot, MlpBatch, MlpSpec, ParamLayout};
use crate::solvers::{gramacy, schaffer};
use crate::{Error, Result};

fn to_matrix(points: &[Vec<f64>]) -> Result<Array2<f64>> {
    let dim = points.first().map_or(0, |p| p.len());
    Array2::from_shape_vec((points.len(), dim), points.concat())
        .map_err(|e| Error::usage(format!("ragged point set: {e}")))
}

/// Mean squared error of a plain network against labels.
#[derive(Debug, Clone)]
pub struct RegressionObjective {
    spec: MlpSpec,
    x: Array2<f64>,
    y: Array2<f64>,
}

impl RegressionObjective {
    pub fn new(spec: MlpSpec, data: &Dataset) -> Result<Self> {
        let labels = data.labels.as_ref().ok_or_else(|| Error::usage("regression needs a labeled shard"))?;
        if data.is_empty() {
            return Err(Error::usage("regression shard is empty"));
        }
        if data.dim() != spec.input_width() {
            return Err(Error::usage(format!("points have dimension {}, network expects {}", data.dim(), spec.input_width())));
        }
        let x = to_matrix(&data.points)?;
        let y = Array2::from_shape_vec((labels.len(), 1), labels.clone()).expect("one label per point");
        Ok(RegressionObjective { spec, x, y })
    }
}

impl Objective for RegressionObjective {
    fn num_samples(&self) -> usize {
        self.x.nrows()
    }

    fn loss_grad(&self, params: &[f64], sample_norms: bool) -> Result<LossGrad> {
        if params.len() != self.spec.num_params() {
            return Err(Error::usage("parameter vector does not match the network"));
        }
        let (loss, grad, max_norm) = MlpBatch::new(&self.spec).mse_loss_grad(params, self.x.view(), self.y.view(), sample_norms);
        Ok(LossGrad { loss, grad, max_sample_grad_norm: max_norm })
    }
}

/// MSE of `forward(params, x)` against the shard labels.
pub fn regression_loss(spec: &MlpSpec, params: &[f64], shard: &Dataset) -> Result<f64> {
    Ok(RegressionObjective::new(spec.clone(), shard)?.loss_grad(params, false)?.loss)
}

/// Function regression over client shards with an L2-relative test error.
#[derive(Debug, Clone)]
pub struct RegressionProblem {
    name: String,
    spec: MlpSpec,
    shards: Vec<Shard>,
    test_x: Array2<f64>,
    test_y: Vec<f64>,
}

impl RegressionProblem {
    pub fn new(name: &str, spec: MlpSpec, shards: Vec<Shard>, test: &Dataset) -> Result<Self> {
        if shards.is_empty() {
            return Err(Error::usage("at least one shard is required"));
        }
        for s in &shards {
            RegressionObjective::new(spec.clone(), &s.dataset())?;
        }
        let test_y = test.labels.clone().ok_or_else(|| Error::usage("test set needs labels"))?;
        Ok(RegressionProblem { name: name.to_string(), spec, shards, test_x: to_matrix(&test.points)?, test_y })
    }

    pub fn shards(&self) -> &[Shard] {
        &self.shards
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn predict(&self, params: &[f64], points: &[Vec<f64>]) -> Result<Vec<f64>> {
        let x = to_matrix(points)?;
        Ok(MlpBatch::new(&self.spec).forward(params, x.view()).output().column(0).to_vec())
    }
}

impl Problem for RegressionProblem {
    fn name(&self) -> &str {
        &self.name
    }

    fn init_params(&self, seed: u64) -> Vec<f64> {
        init_glorot(&MlpSpec { seed, ..self.spec.clone() }).into_flat()
    }

    fn layout(&self) -> ParamLayout {
        self.spec.layout("")
    }

    fn client_objectives(&self) -> Vec<Box<dyn Objective>> {
        self.shards
            .iter()
            .map(|s| Box::new(RegressionObjective::new(self.spec.clone(), &s.dataset()).unwrap()) as Box<dyn Objective>)
            .collect()
    }

    fn pooled_objective(&self) -> Box<dyn Objective> {
        let all = crate::heterogeneity::union(&self.shards);
        Box::new(RegressionObjective::new(self.spec.clone(), &all).unwrap())
    }

    fn test_error(&self, params: &[f64]) -> Result<f64> {
        let out = MlpBatch::new(&self.spec).forward(params, self.test_x.view());
        l2_relative_error(&out.output().column(0).to_vec(), &self.test_y)
    }
}

/// 200 equispaced points on `[−1, 1]` labeled by the Gramacy & Lee function.
pub fn gramacy_dataset() -> Dataset {
    Dataset::labeled_by(uniform_grid_1d(-1.0, 1.0, 200).into_iter().map(|x| vec![x]).collect(), |p| gramacy(p[0]))
}

/// 1000 Hammersley points on `[0, 1]²` labeled by the Schaffer function.
pub fn schaffer_dataset() -> Dataset {
    Dataset::labeled_by(hammersley(1000, 2).expect("2D Hammersley"), |p| schaffer(p[0], p[1]))
}

pub fn gramacy_problem(spec: MlpSpec, n_total: usize, clients: usize) -> Result<RegressionProblem> {
    let shards = partition_1d(&gramacy_dataset(), n_total, clients)?;
    let test = Dataset::labeled_by(uniform_grid_1d(-1.0, 1.0, 1000).into_iter().map(|x| vec![x]).collect(), |p| gramacy(p[0]));
    RegressionProblem::new("gramacy", spec, shards, &test)
}

pub fn schaffer_problem(spec: MlpSpec, n_total: usize, clients: usize) -> Result<RegressionProblem> {
    let shards = partition_2d_x(&schaffer_dataset(), n_total, clients)?;
    let test = Dataset::labeled_by(uniform_grid_2d((0.0, 1.0), (0.0, 1.0), 50, 50), |p| schaffer(p[0], p[1]));
    RegressionProblem::new("schaffer", spec, shards, &test)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Activation;

    #[test]
    fn perfect_fit_has_zero_loss() {
        // one linear layer y = 2x + 1
        let spec = MlpSpec::new(vec![1, 1], Activation::Tanh, 0).unwrap();
        let data = Dataset::labeled_by(vec![vec![0.0], vec![0.5], vec![-1.0]], |p| 2.0 * p[0] + 1.0);
        assert_eq!(regression_loss(&spec, &[2.0, 1.0], &data).unwrap(), 0.0);
        let unlabeled = Dataset::unlabeled(vec![vec![0.0]]).unwrap();
        assert!(regression_loss(&spec, &[2.0, 1.0], &unlabeled).is_err());
    }

    #[test]
    fn targets() {
        let g = gramacy_dataset();
        assert_eq!(g.len(), 200);
        assert_eq!((g.points[0][0], g.points[199][0]), (-1.0, 1.0));
        assert_eq!(gramacy(0.0), 0.0625);
        assert_eq!(schaffer(0.0, 0.0), 0.0);
        let s = schaffer_dataset();
        assert_eq!(s.len(), 1000);
        assert!(s.points.iter().all(|p| p.iter().all(|v| (0.0..1.0).contains(v))));
    }

    #[test]
    fn problem_shards_and_test_error() {
        let spec = MlpSpec::uniform(1, 8, 2, 1, Activation::Tanh, 0).unwrap();
        let p = gramacy_problem(spec, 2, 2).unwrap();
        assert_eq!(p.shards().iter().map(|s| s.len()).collect::<Vec<_>>(), vec![100, 100]);
        assert!(p.shards()[0].points.iter().all(|x| x[0] < 0.0));
        let params = p.init_params(1);
        let err = p.test_error(&params).unwrap();
        assert!(err.is_finite() && err > 0.0);
        assert_eq!(p.client_objectives().len(), 2);
        assert_eq!(p.pooled_objective().num_samples(), 200);
    }
}

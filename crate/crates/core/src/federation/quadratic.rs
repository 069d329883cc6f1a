use super::{LossGrad, Objective, Problem};
use crate::nn::ParamLayout;
use crate::Result;

/// `L(θ) = (1/N) Σ_i (θ − c_i)²` for a single scalar parameter.
#[derive(Debug, Clone)]
pub struct QuadraticObjective {
    centers: Vec<f64>,
}

impl QuadraticObjective {
    pub fn new(centers: Vec<f64>) -> Self {
        QuadraticObjective { centers }
    }
}

impl Objective for QuadraticObjective {
    fn num_samples(&self) -> usize {
        self.centers.len()
    }

    fn loss_grad(&self, params: &[f64], sample_norms: bool) -> Result<LossGrad> {
        let n = self.centers.len() as f64;
        let t = params[0];
        let loss = self.centers.iter().map(|c| (t - c) * (t - c)).sum::<f64>() / n;
        let grad = vec![self.centers.iter().map(|c| 2.0 * (t - c)).sum::<f64>() / n];
        let max_sample_grad_norm =
            sample_norms.then(|| self.centers.iter().map(|c| (2.0 * (t - c)).abs()).fold(0.0, f64::max));
        Ok(LossGrad { loss, grad, max_sample_grad_norm })
    }
}

/// Scalar toy problem: each client holds a set of target values and the
/// model is one number. The test error is `|θ − mean(all targets)|`.
#[derive(Debug, Clone)]
pub struct QuadraticProblem {
    clients: Vec<Vec<f64>>,
    init: f64,
}

impl QuadraticProblem {
    pub fn new(clients: Vec<Vec<f64>>, init: f64) -> Self {
        QuadraticProblem { clients, init }
    }
}

impl Problem for QuadraticProblem {
    fn name(&self) -> &str {
        "quadratic"
    }

    fn init_params(&self, seed: u64) -> Vec<f64> {
        vec![self.init + seed as f64 * 0.125]
    }

    fn layout(&self) -> ParamLayout {
        let mut l = ParamLayout::default();
        l.push("theta".into(), 0..1);
        l
    }

    fn client_objectives(&self) -> Vec<Box<dyn Objective>> {
        self.clients.iter().map(|c| Box::new(QuadraticObjective::new(c.clone())) as Box<dyn Objective>).collect()
    }

    fn pooled_objective(&self) -> Box<dyn Objective> {
        Box::new(QuadraticObjective::new(self.clients.concat()))
    }

    fn test_error(&self, params: &[f64]) -> Result<f64> {
        let all = self.clients.concat();
        let mean = all.iter().sum::<f64>() / all.len() as f64;
        Ok((params[0] - mean).abs())
    }
}

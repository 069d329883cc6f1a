use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::data::{build_antiderivative_dataset, build_burgers_dataset, build_dr_dataset, OperatorDataset, OperatorKind, SensorGrid};
use super::{deeponet_loss_grad, deeponet_predict, DeepOnetSpec};
use crate::federation::{run_training, FederationConfig, LossGrad, Objective, Problem};
use crate::heterogeneity::{sample_chebyshev, uniform_grid_1d, ChebyshevSpaceSpec};
use crate::nn::ParamLayout;
use crate::rng::{stream, Stream};
use crate::solvers::{BurgersParams, DrTimeParams};
use crate::{Error, Result};

/// Dense MSE of one client's operator dataset. Per-sample norms are not
/// tracked.
#[derive(Debug, Clone)]
pub struct DeepOnetObjective {
    spec: Arc<DeepOnetSpec>,
    data: OperatorDataset,
}

impl DeepOnetObjective {
    pub fn new(spec: Arc<DeepOnetSpec>, data: OperatorDataset) -> Result<Self> {
        if data.num_functions() == 0 || data.num_queries() == 0 {
            return Err(Error::usage("operator shard is empty"));
        }
        if data.sensors.len() != spec.branch.input_width() || data.queries.ncols() != spec.trunk.input_width() {
            return Err(Error::usage("operator shard does not match the DeepONet input widths"));
        }
        Ok(DeepOnetObjective { spec, data })
    }
}

impl Objective for DeepOnetObjective {
    fn num_samples(&self) -> usize {
        self.data.num_functions() * self.data.num_queries()
    }

    fn loss_grad(&self, params: &[f64], _sample_norms: bool) -> Result<LossGrad> {
        let d = &self.data;
        let (loss, grad) = deeponet_loss_grad(&self.spec, params, d.inputs.view(), d.queries.view(), d.targets.view())?;
        Ok(LossGrad { loss, grad, max_sample_grad_norm: None })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorErrorReport {
    /// Mean L2-relative error over functions with a nonzero target.
    pub mean: f64,
    pub per_function: Vec<Option<f64>>,
    pub skipped: usize,
}

/// Per-function `‖û − u‖₂ / ‖u‖₂` on the query grid, averaged.
pub fn operator_error(spec: &DeepOnetSpec, params: &[f64], test: &OperatorDataset) -> Result<OperatorErrorReport> {
    if test.num_functions() == 0 {
        return Err(Error::usage("operator test set is empty"));
    }
    let pred = deeponet_predict(spec, params, test.inputs.view(), test.queries.view())?;
    let per_function: Vec<Option<f64>> = pred
        .rows()
        .into_iter()
        .zip(test.targets.rows())
        .map(|(p, u)| {
            let norm = u.dot(&u).sqrt();
            (norm > 0.0).then(|| (&p - &u).mapv(|d| d * d).sum().sqrt() / norm)
        })
        .collect();
    let kept: Vec<f64> = per_function.iter().flatten().copied().collect();
    let skipped = per_function.len() - kept.len();
    if skipped > 0 {
        log::warn!("{skipped} test functions with zero target skipped");
    }
    if kept.is_empty() {
        return Err(Error::usage("every test function has a zero target"));
    }
    Ok(OperatorErrorReport { mean: kept.iter().sum::<f64>() / kept.len() as f64, per_function, skipped })
}

/// How an operator problem's data is generated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorSetup {
    pub kind: OperatorKind,
    /// Chebyshev basis size `M`.
    pub m: usize,
    /// Active terms per client window.
    pub n: usize,
    pub clients: usize,
    /// Total training functions, split evenly over clients.
    pub train_functions: usize,
    pub test_functions: usize,
    pub sensors: usize,
    /// Antiderivative query count on `[0, 1]`.
    pub queries: usize,
    /// Mesh thinning for the space-time problems.
    pub query_stride: usize,
    pub seed: u64,
}

impl OperatorSetup {
    pub fn defaults(kind: OperatorKind) -> Self {
        let (train, test) = match kind {
            OperatorKind::Antiderivative => (200, 1000),
            OperatorKind::Dr => (500, 1000),
            OperatorKind::Burgers => (200, 500),
        };
        OperatorSetup {
            kind,
            m: ChebyshevSpaceSpec::DEFAULT_M,
            n: ChebyshevSpaceSpec::DEFAULT_M,
            clients: 2,
            train_functions: train,
            test_functions: test,
            sensors: 50,
            queries: 100,
            query_stride: 1,
            seed: 0,
        }
    }

    pub fn sensor_grid(&self) -> Result<SensorGrid> {
        match self.kind {
            OperatorKind::Burgers => SensorGrid::periodic(self.sensors),
            _ => SensorGrid::uniform(self.sensors),
        }
    }

    fn build(&self, functions: &[crate::heterogeneity::ChebyshevFunction], sensors: &SensorGrid) -> Result<OperatorDataset> {
        match self.kind {
            OperatorKind::Antiderivative => {
                build_antiderivative_dataset(functions, sensors, &uniform_grid_1d(0.0, 1.0, self.queries))
            }
            OperatorKind::Dr => build_dr_dataset(functions, sensors, DrTimeParams::default(), self.query_stride),
            OperatorKind::Burgers => build_burgers_dataset(functions, sensors, BurgersParams::default(), self.query_stride),
        }
    }
}

/// Federated DeepONet training over Chebyshev-window client shards.
#[derive(Debug, Clone)]
pub struct DeepOnetProblem {
    spec: Arc<DeepOnetSpec>,
    clients: Vec<OperatorDataset>,
    test: OperatorDataset,
}

impl DeepOnetProblem {
    pub fn new(spec: DeepOnetSpec, clients: Vec<OperatorDataset>, test: OperatorDataset) -> Result<Self> {
        if clients.is_empty() {
            return Err(Error::usage("at least one client dataset is required"));
        }
        let spec = Arc::new(spec);
        for c in &clients {
            DeepOnetObjective::new(spec.clone(), c.clone())?;
        }
        DeepOnetObjective::new(spec.clone(), test.clone())?;
        Ok(DeepOnetProblem { spec, clients, test })
    }

    /// Client `k` draws `train_functions / K` functions from its window on
    /// its own sampling stream; the test set comes from the full space.
    pub fn generate(spec: DeepOnetSpec, setup: &OperatorSetup) -> Result<Self> {
        if setup.clients == 0 || setup.train_functions < setup.clients {
            return Err(Error::usage("need at least one training function per client"));
        }
        let sensors = setup.sensor_grid()?;
        let per_client = setup.train_functions / setup.clients;
        let clients = (0..setup.clients)
            .map(|k| {
                let window = ChebyshevSpaceSpec::for_client(setup.m, setup.n, k, setup.clients)?;
                let fs = sample_chebyshev(&window, &mut stream(setup.seed, Stream::Sampling, k as u32), per_client);
                setup.build(&fs, &sensors)
            })
            .collect::<Result<Vec<_>>>()?;
        let test_fs = sample_chebyshev(
            &ChebyshevSpaceSpec::full(setup.m),
            &mut stream(setup.seed, Stream::TestSampling, 0),
            setup.test_functions,
        );
        Self::new(spec, clients, setup.build(&test_fs, &sensors)?)
    }

    pub fn spec(&self) -> &DeepOnetSpec {
        &self.spec
    }

    pub fn clients(&self) -> &[OperatorDataset] {
        &self.clients
    }

    pub fn test_set(&self) -> &OperatorDataset {
        &self.test
    }

    /// Sensor-value vectors per client, the point clouds compared by W1.
    pub fn client_points(&self) -> Vec<Vec<Vec<f64>>> {
        self.clients.iter().map(|c| c.input_points()).collect()
    }

    pub fn error_report(&self, params: &[f64]) -> Result<OperatorErrorReport> {
        operator_error(&self.spec, params, &self.test)
    }
}

impl Problem for DeepOnetProblem {
    fn name(&self) -> &str {
        self.test.kind.name()
    }

    fn init_params(&self, seed: u64) -> Vec<f64> {
        self.spec.init_params(seed)
    }

    fn layout(&self) -> ParamLayout {
        self.spec.layout()
    }

    fn client_objectives(&self) -> Vec<Box<dyn Objective>> {
        self.clients
            .iter()
            .map(|c| Box::new(DeepOnetObjective::new(self.spec.clone(), c.clone()).unwrap()) as Box<dyn Objective>)
            .collect()
    }

    fn pooled_objective(&self) -> Box<dyn Objective> {
        let parts: Vec<&OperatorDataset> = self.clients.iter().collect();
        let pooled = OperatorDataset::concat(&parts).expect("clients share sensors and queries");
        Box::new(DeepOnetObjective::new(self.spec.clone(), pooled).unwrap())
    }

    fn test_error(&self, params: &[f64]) -> Result<f64> {
        Ok(self.error_report(params)?.mean)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommSweepPoint {
    pub local_epochs: usize,
    pub rounds: usize,
    pub test_error: f64,
    #[serde(skip)]
    pub params: Vec<f64>,
}

/// Federated runs with `rounds = total_iters / E` for every `E`, sharing
/// seed and data.
pub fn communication_sweep(
    problem: &dyn Problem,
    local_epochs: &[usize],
    total_iters: usize,
    base: &FederationConfig,
) -> Result<Vec<CommSweepPoint>> {
    if let Some(&e) = local_epochs.iter().find(|&&e| e == 0 || total_iters % e != 0) {
        return Err(Error::usage(format!("E = {e} does not divide the {total_iters} total iterations")));
    }
    local_epochs
        .iter()
        .map(|&e| {
            let config = FederationConfig { local_epochs: e, rounds: total_iters / e, ..*base };
            let run = run_training(&config, problem)?;
            let test_error = match run.final_test_error() {
                Some(v) => v,
                None => problem.test_error(&run.params)?,
            };
            Ok(CommSweepPoint { local_epochs: e, rounds: config.rounds, test_error, params: run.params })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::federation::{client_weights, run_centralized_twin, run_extrapolation, ClientOpt};
    use crate::nn::Activation;

    fn tiny_setup() -> OperatorSetup {
        OperatorSetup {
            train_functions: 8,
            test_functions: 6,
            sensors: 6,
            queries: 7,
            ..OperatorSetup::defaults(OperatorKind::Antiderivative)
        }
    }

    fn tiny_problem(n: usize) -> DeepOnetProblem {
        let spec = DeepOnetSpec::uniform(6, 1, 8, 2, Activation::Relu, 0).unwrap();
        DeepOnetProblem::generate(spec, &OperatorSetup { n, ..tiny_setup() }).unwrap()
    }

    #[test]
    fn operator_error_examples() {
        let p = tiny_problem(10);
        let spec = p.spec().clone();
        let test = p.test_set().clone();
        // zero network output: branch weights zero, b0 zero
        let zero = vec![0.0; spec.num_params()];
        let r = operator_error(&spec, &zero, &test).unwrap();
        assert!((r.mean - 1.0).abs() < 1e-15);
        assert_eq!(r.skipped, 0);

        // independent per-sample accumulation
        let params = spec.init_params(5);
        let r = operator_error(&spec, &params, &test).unwrap();
        let mut total = 0.0;
        for f in 0..test.num_functions() {
            let (mut num, mut den) = (0.0, 0.0);
            for q in 0..test.num_queries() {
                let y = super::super::deeponet_forward(
                    &spec,
                    &params,
                    &test.inputs.row(f).to_vec(),
                    &test.queries.row(q).to_vec(),
                )
                .unwrap();
                let u = test.targets[[f, q]];
                num += (y - u) * (y - u);
                den += u * u;
            }
            total += (num / den).sqrt();
        }
        assert!((r.mean - total / test.num_functions() as f64).abs() < 1e-12);
    }

    #[test]
    fn perfect_prediction_and_zero_targets() {
        let p = tiny_problem(10);
        let mut test = p.test_set().clone();
        let pred = deeponet_predict(p.spec(), &p.spec().init_params(1), test.inputs.view(), test.queries.view()).unwrap();
        test.targets = pred;
        assert_eq!(operator_error(p.spec(), &p.spec().init_params(1), &test).unwrap().mean, 0.0);
        test.targets.row_mut(0).fill(0.0);
        let r = operator_error(p.spec(), &p.spec().init_params(1), &test).unwrap();
        assert_eq!((r.skipped, r.per_function[0]), (1, None));
    }

    #[test]
    fn client_windows_and_determinism() {
        let a = tiny_problem(2);
        let b = tiny_problem(2);
        assert_eq!(a.clients(), b.clients());
        assert_eq!(a.clients().len(), 2);
        assert_eq!(a.clients()[0].num_functions(), 4);
        // window T0..T1 is affine in x, so u is quadratic with u(0) = 0
        let c = &a.clients()[0];
        for f in 0..c.num_functions() {
            let v = c.inputs.row(f);
            let slope = (v[1] - v[0]) / 0.2;
            for (q, x) in c.queries.column(0).iter().enumerate() {
                let u = v[0] * x + 0.5 * slope * x * x;
                assert!((c.targets[[f, q]] - u).abs() < 1e-9);
            }
        }
        assert_eq!(a.client_points()[1].len(), 4);
    }

    #[test]
    fn single_client_is_centralized() {
        let spec = DeepOnetSpec::uniform(6, 1, 8, 2, Activation::Tanh, 0).unwrap();
        let p = DeepOnetProblem::generate(spec, &OperatorSetup { clients: 1, ..tiny_setup() }).unwrap();
        let config = FederationConfig { rounds: 4, local_epochs: 3, ..Default::default() };
        let fed = run_training(&config, &p).unwrap();
        let cen = run_centralized_twin(&config, &p).unwrap();
        assert_eq!(fed.params, cen.params);
    }

    #[test]
    fn sweep_schedule_checks() {
        let p = tiny_problem(10);
        let base = FederationConfig { client_opt: ClientOpt::Sgd, lr: 1e-2, ..Default::default() };
        assert!(communication_sweep(&p, &[3], 10, &base).is_err());
        assert!(communication_sweep(&p, &[0], 10, &base).is_err());

        // E = total: one round equals averaging independently trained clients
        let points = communication_sweep(&p, &[1, 10], 10, &base).unwrap();
        assert_eq!((points[0].rounds, points[1].rounds), (10, 1));
        let solo = run_extrapolation(&FederationConfig { rounds: 1, local_epochs: 10, ..base }, &p).unwrap();
        let sizes: Vec<usize> = p.client_objectives().iter().map(|o| o.num_samples()).collect();
        let w = client_weights(&sizes).unwrap();
        for (i, v) in points[1].params.iter().enumerate() {
            let avg: f64 = solo.iter().zip(&w).map(|(r, wk)| wk * r.params[i]).sum();
            assert!((v - avg).abs() < 1e-12);
        }

        // E = 1: aggregation after every step, so each round is one epoch
        let run = run_training(&FederationConfig { rounds: 10, local_epochs: 1, ..base }, &p).unwrap();
        assert_eq!(run.params, points[0].params);
        assert_eq!(run.history.len(), 10);
    }
}

//! FedAvg with pluggable client optimizers, the centralized twin, and
//! weight-divergence instrumentation.

mod divergence;
mod quadratic;

pub use divergence::{
    check_divergence_bound, relative_divergence, run_divergence, weight_divergence, BoundReport, BoundRow,
    DivergenceEntry, DivergenceTrace, LayerDivergence,
};
pub use quadratic::{QuadraticObjective, QuadraticProblem};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::nn::{combine, sgd_step, AdamConfig, AdamState, ParamLayout};
use crate::{Error, Result};

/// Loss, gradient and optionally the largest per-sample gradient norm
/// `max_i ‖∇ℓ_i‖` for a loss of the form `(1/N) Σ ℓ_i (+ extra terms)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad {
    pub loss: f64,
    pub grad: Vec<f64>,
    pub max_sample_grad_norm: Option<f64>,
}

/// A differentiable training loss over one client's data.
pub trait Objective: Send + Sync {
    fn num_samples(&self) -> usize;
    fn loss_grad(&self, params: &[f64], sample_norms: bool) -> Result<LossGrad>;
}

/// A learning task bound to its client shards.
pub trait Problem: Send + Sync {
    fn name(&self) -> &str;
    fn init_params(&self, seed: u64) -> Vec<f64>;
    /// Named parameter blocks for per-layer divergence.
    fn layout(&self) -> ParamLayout;
    fn client_objectives(&self) -> Vec<Box<dyn Objective>>;
    /// Objective on the union of all client data, in client order.
    fn pooled_objective(&self) -> Box<dyn Objective>;
    /// Global test error (L2 relative unless stated otherwise).
    fn test_error(&self, params: &[f64]) -> Result<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClientOpt {
    Adam,
    Sgd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    /// `Σ (N_k/N) θ_k`.
    Direct,
    /// `θ + Σ (N_k/N) Δ_k`.
    Delta,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FederationConfig {
    pub local_epochs: usize,
    pub rounds: usize,
    pub lr: f64,
    pub client_opt: ClientOpt,
    pub adam: AdamConfig,
    /// Zero client Adam moments at every broadcast.
    pub reset_adam: bool,
    /// Fraction of clients per round; only full participation is supported.
    pub participation: f64,
    pub aggregation: Aggregation,
    pub seed: u64,
    /// Record per-sample gradient norms (needed for the divergence bound).
    pub track_sample_norms: bool,
    /// Evaluate the server test error every this many rounds (and at the end).
    pub eval_every: usize,
}

impl Default for FederationConfig {
    fn default() -> Self {
        FederationConfig {
            local_epochs: 1,
            rounds: 1,
            lr: 1e-3,
            client_opt: ClientOpt::Adam,
            adam: AdamConfig::default(),
            reset_adam: false,
            participation: 1.0,
            aggregation: Aggregation::Direct,
            seed: 0,
            track_sample_norms: false,
            eval_every: 0,
        }
    }
}

impl FederationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.local_epochs == 0 {
            return Err(Error::usage("local epochs must be at least 1"));
        }
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return Err(Error::usage("learning rate must be positive"));
        }
        if self.participation != 1.0 {
            return Err(Error::usage("only full participation (C = 1) is supported"));
        }
        Ok(())
    }

    pub fn total_epochs(&self) -> usize {
        self.rounds * self.local_epochs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OptState {
    Adam(AdamState),
    Sgd,
}

impl OptState {
    pub fn new(kind: ClientOpt, len: usize, adam: AdamConfig) -> Self {
        match kind {
            ClientOpt::Adam => OptState::Adam(AdamState::new(len, adam)),
            ClientOpt::Sgd => OptState::Sgd,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) -> Result<()> {
        match self {
            OptState::Adam(s) => s.step(params, grads, lr),
            OptState::Sgd => sgd_step(params, grads, lr),
        }
    }

    pub fn reset(&mut self) {
        if let OptState::Adam(s) = self {
            s.reset();
        }
    }
}

/// A client's private training state.
pub struct ClientState {
    pub client_id: usize,
    pub params: Vec<f64>,
    pub opt: OptState,
    pub objective: Box<dyn Objective>,
}

impl ClientState {
    pub fn new(client_id: usize, objective: Box<dyn Objective>, params: Vec<f64>, opt: OptState) -> Self {
        ClientState { client_id, params, opt, objective }
    }
}

/// Result of one client's local epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalUpdate {
    pub delta: Vec<f64>,
    /// Loss at the start of the last local epoch.
    pub loss: f64,
    pub max_sample_grad_norm: Option<f64>,
}

/// Copies the server parameters into every client.
pub fn broadcast(server: &[f64], clients: &mut [ClientState], reset_opt: bool) {
    for c in clients {
        c.params.clear();
        c.params.extend_from_slice(server);
        if reset_opt {
            c.opt.reset();
        }
    }
}

fn max_opt(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// `E` full-batch optimizer steps on the client's own loss.
pub fn local_update(client: &mut ClientState, epochs: usize, lr: f64, sample_norms: bool) -> Result<LocalUpdate> {
    let start = client.params.clone();
    let mut loss = f64::NAN;
    let mut max_norm = None;
    for _ in 0..epochs {
        let lg = client.objective.loss_grad(&client.params, sample_norms)?;
        if !lg.loss.is_finite() {
            return Err(Error::numerical(format!("client {} loss became non-finite", client.client_id)));
        }
        loss = lg.loss;
        max_norm = max_opt(max_norm, lg.max_sample_grad_norm);
        client
            .opt
            .step(&mut client.params, &lg.grad, lr)
            .map_err(|e| Error::numerical(format!("client {}: {e}", client.client_id)))?;
    }
    let delta = client.params.iter().zip(&start).map(|(p, s)| p - s).collect();
    Ok(LocalUpdate { delta, loss, max_sample_grad_norm: max_norm })
}

/// Dataset-size weights `N_k / N`.
pub fn client_weights(sizes: &[usize]) -> Result<Vec<f64>> {
    let total: usize = sizes.iter().sum();
    if total == 0 {
        return Err(Error::usage("aggregation needs at least one sample"));
    }
    Ok(sizes.iter().map(|&n| n as f64 / total as f64).collect())
}

/// New server parameters from client results, reduced in client order.
pub fn aggregate(server: &[f64], locals: &[&[f64]], sizes: &[usize], form: Aggregation) -> Result<Vec<f64>> {
    if locals.len() != sizes.len() || locals.is_empty() {
        return Err(Error::usage("one dataset size per client is required"));
    }
    if locals.iter().any(|l| l.len() != server.len()) {
        return Err(Error::usage("client parameter shapes differ from the server"));
    }
    let w = client_weights(sizes)?;
    match form {
        Aggregation::Direct => combine(locals, &w),
        Aggregation::Delta => {
            let mut out = server.to_vec();
            for (l, wk) in locals.iter().zip(&w) {
                for ((o, x), s) in out.iter_mut().zip(l.iter()).zip(server) {
                    *o += wk * (x - s);
                }
            }
            Ok(out)
        }
    }
}

/// Per-round record of a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundMetrics {
    /// Rounds completed (1-based).
    pub round: usize,
    pub test_error: Option<f64>,
    /// Training loss per client (one entry for centralized runs).
    pub client_losses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingRun {
    pub params: Vec<f64>,
    pub history: Vec<RoundMetrics>,
    /// Parameters after every round, starting with the initialization.
    pub snapshots: Vec<Vec<f64>>,
    pub max_sample_grad_norm: Option<f64>,
}

impl TrainingRun {
    pub fn final_test_error(&self) -> Option<f64> {
        self.history.iter().rev().find_map(|m| m.test_error)
    }
}

fn should_eval(config: &FederationConfig, round: usize) -> bool {
    round == config.rounds || (config.eval_every > 0 && round % config.eval_every == 0)
}

/// Rounds of broadcast → parallel local updates → aggregation.
pub fn run_training(config: &FederationConfig, problem: &dyn Problem) -> Result<TrainingRun> {
    config.validate()?;
    let mut server = problem.init_params(config.seed);
    let objectives = problem.client_objectives();
    if objectives.is_empty() {
        return Err(Error::usage("federated training needs at least one client"));
    }
    let sizes: Vec<usize> = objectives.iter().map(|o| o.num_samples()).collect();
    let mut clients: Vec<ClientState> = objectives
        .into_iter()
        .enumerate()
        .map(|(k, o)| ClientState::new(k, o, server.clone(), OptState::new(config.client_opt, server.len(), config.adam)))
        .collect();
    let mut history = Vec::with_capacity(config.rounds);
    let mut snapshots = vec![server.clone()];
    let mut max_norm = None;
    for round in 1..=config.rounds {
        broadcast(&server, &mut clients, config.reset_adam);
        let updates: Vec<Result<LocalUpdate>> = clients
            .par_iter_mut()
            .map(|c| local_update(c, config.local_epochs, config.lr, config.track_sample_norms))
            .collect();
        let updates = updates.into_iter().collect::<Result<Vec<_>>>()?;
        for u in &updates {
            max_norm = max_opt(max_norm, u.max_sample_grad_norm);
        }
        let locals: Vec<&[f64]> = clients.iter().map(|c| c.params.as_slice()).collect();
        server = aggregate(&server, &locals, &sizes, config.aggregation)?;
        if server.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical(format!("server parameters non-finite after round {round}")));
        }
        let test_error = if should_eval(config, round) { Some(problem.test_error(&server)?) } else { None };
        history.push(RoundMetrics { round, test_error, client_losses: updates.iter().map(|u| u.loss).collect() });
        snapshots.push(server.clone());
    }
    Ok(TrainingRun { params: server, history, snapshots, max_sample_grad_norm: max_norm })
}

/// Training on the pooled data for `rounds × E` epochs, same initialization
/// and optimizer, with snapshots aligned to federated rounds.
pub fn run_centralized_twin(config: &FederationConfig, problem: &dyn Problem) -> Result<TrainingRun> {
    config.validate()?;
    let init = problem.init_params(config.seed);
    let opt = OptState::new(config.client_opt, init.len(), config.adam);
    let mut client = ClientState::new(0, problem.pooled_objective(), init.clone(), opt);
    let mut history = Vec::with_capacity(config.rounds);
    let mut snapshots = vec![init];
    let mut max_norm = None;
    for round in 1..=config.rounds {
        let u = local_update(&mut client, config.local_epochs, config.lr, config.track_sample_norms)?;
        max_norm = max_opt(max_norm, u.max_sample_grad_norm);
        let test_error = if should_eval(config, round) { Some(problem.test_error(&client.params)?) } else { None };
        history.push(RoundMetrics { round, test_error, client_losses: vec![u.loss] });
        snapshots.push(client.params.clone());
    }
    Ok(TrainingRun { params: client.params, history, snapshots, max_sample_grad_norm: max_norm })
}

/// Each client trains alone for `rounds × E` epochs without aggregation and
/// is evaluated on the global test set.
pub fn run_extrapolation(config: &FederationConfig, problem: &dyn Problem) -> Result<Vec<TrainingRun>> {
    config.validate()?;
    let init = problem.init_params(config.seed);
    let single = FederationConfig { rounds: 1, local_epochs: config.total_epochs().max(1), ..*config };
    let runs: Vec<Result<TrainingRun>> = problem
        .client_objectives()
        .into_par_iter()
        .enumerate()
        .map(|(k, obj)| {
            let opt = OptState::new(config.client_opt, init.len(), config.adam);
            let mut client = ClientState::new(k, obj, init.clone(), opt);
            let epochs = if config.total_epochs() == 0 { 0 } else { single.local_epochs };
            let u = local_update(&mut client, epochs, config.lr, false)?;
            let err = problem.test_error(&client.params)?;
            Ok(TrainingRun {
                params: client.params.clone(),
                history: vec![RoundMetrics { round: 1, test_error: Some(err), client_losses: vec![u.loss] }],
                snapshots: vec![init.clone(), client.params],
                max_sample_grad_norm: None,
            })
        })
        .collect();
    runs.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad(centers: &[f64]) -> Box<dyn Objective> {
        Box::new(QuadraticObjective::new(centers.to_vec()))
    }

    #[test]
    fn broadcast_copies_exactly() {
        let server = vec![0.1, -0.0, 3.5];
        let mut clients: Vec<ClientState> = (0..3)
            .map(|k| ClientState::new(k, quad(&[1.0]), vec![9.0; 3], OptState::Sgd))
            .collect();
        broadcast(&server, &mut clients, true);
        for c in &clients {
            assert!(c.params.iter().zip(&server).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }

    #[test]
    fn round_trip_identity() {
        let server = vec![0.3, -1.7, 1e-300];
        let mut clients: Vec<ClientState> =
            (0..2).map(|k| ClientState::new(k, quad(&[1.0]), vec![], OptState::Sgd)).collect();
        broadcast(&server, &mut clients, false);
        for c in clients.iter_mut() {
            let u = local_update(c, 0, 0.1, false).unwrap();
            assert!(u.delta.iter().all(|&d| d == 0.0));
        }
        let locals: Vec<&[f64]> = clients.iter().map(|c| c.params.as_slice()).collect();
        for form in [Aggregation::Direct, Aggregation::Delta] {
            let out = aggregate(&server, &locals, &[3, 5], form).unwrap();
            assert!(out.iter().zip(&server).all(|(a, b)| a.to_bits() == b.to_bits()), "{form:?}");
        }
    }

    #[test]
    fn local_update_examples() {
        // (θ−1)², θ0 = 0, η = 0.1, one SGD step → Δ = 0.2
        let mut c = ClientState::new(0, quad(&[1.0]), vec![0.0], OptState::Sgd);
        assert_eq!(local_update(&mut c, 1, 0.1, false).unwrap().delta, vec![0.2]);
        // gradient constant 1 (θ − c with loss (θ−c)² has grad 2(θ−c); pick c = θ − 0.5)
        let mut c = ClientState::new(0, quad(&[-0.5]), vec![0.0], OptState::new(ClientOpt::Adam, 1, AdamConfig::default()));
        let d = local_update(&mut c, 1, 1e-3, false).unwrap().delta[0];
        assert!((d + 1e-3).abs() < 1e-10);
        let mut c = ClientState::new(0, quad(&[0.0]), vec![0.0], OptState::Sgd);
        assert_eq!(local_update(&mut c, 5, 0.1, false).unwrap().delta, vec![0.0]);
    }

    #[test]
    fn aggregate_examples() {
        let s = [5.0];
        assert_eq!(aggregate(&s, &[&[0.0], &[2.0]], &[4, 4], Aggregation::Direct).unwrap(), vec![1.0]);
        assert_eq!(aggregate(&s, &[&[5.0], &[5.0]], &[1, 9], Aggregation::Delta).unwrap(), vec![5.0]);
        assert!(aggregate(&s, &[&[0.0]], &[0], Aggregation::Direct).is_err());
    }

    #[test]
    fn aggregation_forms_agree_bitwise_on_dyadic_values() {
        let server = [0.5, -0.25, 2.0];
        let a = [0.75, 0.0, 1.5];
        let b = [0.25, -0.5, 3.0];
        let d = aggregate(&server, &[&a, &b], &[1, 3], Aggregation::Direct).unwrap();
        let e = aggregate(&server, &[&a, &b], &[1, 3], Aggregation::Delta).unwrap();
        assert!(d.iter().zip(&e).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn aggregation_forms_agree_to_rounding() {
        let server: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).sin()).collect();
        let a: Vec<f64> = server.iter().map(|x| x + 0.013 * x.cos()).collect();
        let b: Vec<f64> = server.iter().map(|x| x - 0.007 * (2.0 * x).sin()).collect();
        let d = aggregate(&server, &[&a, &b], &[7, 13], Aggregation::Direct).unwrap();
        let e = aggregate(&server, &[&a, &b], &[7, 13], Aggregation::Delta).unwrap();
        for (x, y) in d.iter().zip(&e) {
            assert!((x - y).abs() <= 1e-15 * x.abs().max(1.0));
        }
    }

    #[test]
    fn zero_rounds_returns_initial_params() {
        let p = QuadraticProblem::new(vec![vec![1.0], vec![3.0]], 0.5);
        let cfg = FederationConfig { rounds: 0, ..Default::default() };
        let run = run_training(&cfg, &p).unwrap();
        assert_eq!(run.params, p.init_params(0));
        assert!(run.history.is_empty());
    }

    #[test]
    fn single_client_matches_centralized_bitwise() {
        for opt in [ClientOpt::Adam, ClientOpt::Sgd] {
            for seed in 0..3 {
                let p = QuadraticProblem::new(vec![vec![1.0, 2.0, -0.5]], 0.1);
                let cfg = FederationConfig { rounds: 7, local_epochs: 3, lr: 0.05, client_opt: opt, seed, ..Default::default() };
                let f = run_training(&cfg, &p).unwrap();
                let c = run_centralized_twin(&cfg, &p).unwrap();
                assert_eq!(f.snapshots.len(), 8);
                for (a, b) in f.snapshots.iter().zip(&c.snapshots) {
                    assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
                }
            }
        }
    }

    #[test]
    fn twin_loss_decreases_on_convex_problem() {
        let p = QuadraticProblem::new(vec![vec![1.0], vec![3.0]], 0.0);
        let cfg = FederationConfig { rounds: 20, local_epochs: 2, lr: 0.05, client_opt: ClientOpt::Sgd, ..Default::default() };
        let run = run_centralized_twin(&cfg, &p).unwrap();
        let losses: Vec<f64> = run.history.iter().map(|m| m.client_losses[0]).collect();
        assert!(losses.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(run.snapshots.len(), 21);
    }

    #[test]
    fn deterministic_across_runs() {
        let p = QuadraticProblem::new(vec![vec![1.0, 1.5], vec![3.0], vec![-2.0, 0.0, 0.5]], 0.3);
        let cfg = FederationConfig { rounds: 10, local_epochs: 4, lr: 0.01, ..Default::default() };
        let a = run_training(&cfg, &p).unwrap();
        let b = run_training(&cfg, &p).unwrap();
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn extrapolation_clients_fit_their_own_data() {
        let p = QuadraticProblem::new(vec![vec![1.0], vec![3.0]], 0.0);
        let cfg = FederationConfig { rounds: 200, local_epochs: 1, lr: 0.1, client_opt: ClientOpt::Sgd, ..Default::default() };
        let runs = run_extrapolation(&cfg, &p).unwrap();
        assert!((runs[0].params[0] - 1.0).abs() < 1e-9);
        assert!((runs[1].params[0] - 3.0).abs() < 1e-9);
        let fed = run_training(&cfg, &p).unwrap();
        assert!((fed.params[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn config_validation() {
        assert!(FederationConfig { participation: 0.5, ..Default::default() }.validate().is_err());
        assert!(FederationConfig { local_epochs: 0, ..Default::default() }.validate().is_err());
        assert!(FederationConfig { lr: 0.0, ..Default::default() }.validate().is_err());
    }
}

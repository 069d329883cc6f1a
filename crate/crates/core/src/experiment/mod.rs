//! Reproducible experiment runs, sweeps and their result files.
//!
//! Every run is driven by a fully materialized [`ExperimentConfig`]; the
//! `fedsciml` binary only parses flags into one of the [`commands`] and
//! hands it to [`commands::execute`].

pub mod commands;
mod manifest;
mod results;

pub use manifest::{input_hash, RunManifest};
pub use results::{
    write_comm_rows, write_run_rows, write_sweep_rows, CommSweepRow, LayerColumn, Mode, RunRow, SweepRow, SCHEMA_VERSION,
};

use serde::{Deserialize, Serialize};

use crate::federation::{Aggregation, ClientOpt, FederationConfig, Problem};
use crate::heterogeneity::Shard;
use crate::nn::{Activation, AdamConfig, MlpSpec};
use crate::operator::{DeepOnetProblem, DeepOnetSpec, OperatorKind, OperatorSetup};
use crate::pinn::{
    allen_cahn_problem, gramacy_problem, helmholtz2d_problem, inverse_dr_problem, poisson1d_problem, schaffer_problem,
};
use crate::transport::{mean_pairwise_w1, DiscreteDistribution};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemId {
    Gramacy,
    Schaffer,
    Poisson1d,
    Helmholtz2d,
    AllenCahn,
    InverseDr,
    Antiderivative,
    Dr,
    Burgers,
}

impl ProblemId {
    pub const ALL: [ProblemId; 9] = [
        ProblemId::Gramacy,
        ProblemId::Schaffer,
        ProblemId::Poisson1d,
        ProblemId::Helmholtz2d,
        ProblemId::AllenCahn,
        ProblemId::InverseDr,
        ProblemId::Antiderivative,
        ProblemId::Dr,
        ProblemId::Burgers,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProblemId::Gramacy => "gramacy",
            ProblemId::Schaffer => "schaffer",
            ProblemId::Poisson1d => "poisson1d",
            ProblemId::Helmholtz2d => "helmholtz2d",
            ProblemId::AllenCahn => "allen-cahn",
            ProblemId::InverseDr => "inverse-dr",
            ProblemId::Antiderivative => "antiderivative",
            ProblemId::Dr => "dr",
            ProblemId::Burgers => "burgers",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == name)
            .ok_or_else(|| Error::usage(format!("unknown problem {name:?}")))
    }

    pub fn operator_kind(self) -> Option<OperatorKind> {
        match self {
            ProblemId::Antiderivative => Some(OperatorKind::Antiderivative),
            ProblemId::Dr => Some(OperatorKind::Dr),
            ProblemId::Burgers => Some(OperatorKind::Burgers),
            _ => None,
        }
    }
}

impl std::fmt::Display for ProblemId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Architecture and budget of one row of the training-settings table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub width: usize,
    /// Hidden layers.
    pub depth: usize,
    pub activation: Activation,
    pub local_epochs: usize,
    /// Communication rounds.
    pub global_epochs: usize,
}

pub fn table_defaults(problem: ProblemId) -> TableRow {
    use Activation::*;
    let (width, depth, activation, global_epochs) = match problem {
        ProblemId::Gramacy | ProblemId::Schaffer => (64, 3, Tanh, 3000),
        ProblemId::Poisson1d => (20, 3, Tanh, 1000),
        ProblemId::Helmholtz2d => (64, 3, Sin, 2000),
        ProblemId::AllenCahn => (64, 3, Sin, 10000),
        ProblemId::InverseDr => (20, 3, Tanh, 20000),
        ProblemId::Antiderivative => (40, 2, Relu, 10000),
        ProblemId::Dr => (100, 3, Relu, 10000),
        ProblemId::Burgers => (64, 2, Relu, 10000),
    };
    TableRow { width, depth, activation, local_epochs: 5, global_epochs }
}

/// Largest point cloud fed to the exact EMD per client.
pub const DEFAULT_W1_CAP: usize = 500;

/// Everything needed to rebuild a run bit for bit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub problem: ProblemId,
    /// Partition blocks (function and PINN problems) or active Chebyshev
    /// terms per client (operator problems).
    pub n: usize,
    pub clients: usize,
    pub width: usize,
    pub depth: usize,
    pub activation: Activation,
    pub local_epochs: usize,
    pub rounds: usize,
    pub lr: f64,
    pub client_opt: ClientOpt,
    pub adam: AdamConfig,
    pub reset_adam: bool,
    pub aggregation: Aggregation,
    pub seed: u64,
    /// Factor already applied to the table's round count.
    pub budget_scale: f64,
    pub w1_cap: Option<usize>,
    pub operator: Option<OperatorSetup>,
}

impl ExperimentConfig {
    /// Table defaults with `lr = 1e-3`, Adam clients and direct averaging.
    pub fn new(problem: ProblemId, n: usize, clients: usize) -> Self {
        let row = table_defaults(problem);
        let operator = problem.operator_kind().map(|k| OperatorSetup { n, clients, ..OperatorSetup::defaults(k) });
        ExperimentConfig {
            problem,
            n,
            clients,
            width: row.width,
            depth: row.depth,
            activation: row.activation,
            local_epochs: row.local_epochs,
            rounds: row.global_epochs,
            lr: 1e-3,
            client_opt: ClientOpt::Adam,
            adam: AdamConfig::default(),
            reset_adam: false,
            aggregation: Aggregation::Direct,
            seed: 0,
            budget_scale: 1.0,
            w1_cap: Some(DEFAULT_W1_CAP),
            operator,
        }
    }

    /// Scales the table round count, keeping at least one round.
    pub fn with_budget_scale(mut self, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::usage("budget scale must be positive"));
        }
        self.rounds = ((table_defaults(self.problem).global_epochs as f64 * scale).round() as usize).max(1);
        self.budget_scale = scale;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_clients(mut self, clients: usize) -> Self {
        self.clients = clients;
        if let Some(op) = &mut self.operator {
            op.clients = clients;
        }
        self
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        if let Some(op) = &mut self.operator {
            op.n = n;
        }
        self
    }

    pub fn federation(&self) -> FederationConfig {
        FederationConfig {
            local_epochs: self.local_epochs,
            rounds: self.rounds,
            lr: self.lr,
            client_opt: self.client_opt,
            adam: self.adam,
            reset_adam: self.reset_adam,
            participation: 1.0,
            aggregation: self.aggregation,
            seed: self.seed,
            track_sample_norms: false,
            eval_every: 0,
        }
    }

    fn mlp(&self, input: usize) -> Result<MlpSpec> {
        MlpSpec::uniform(input, self.width, self.depth, 1, self.activation, self.seed)
    }
}

/// A constructed problem plus what the result files need from it.
pub struct BuiltProblem {
    pub problem: Box<dyn Problem>,
    /// Points defining each client's distribution, for W1.
    pub client_points: Vec<Vec<Vec<f64>>>,
    /// Client shards as written by `partition` (labels for regression).
    pub shards: Vec<Shard>,
    /// Layer widths of every sub-network, for checkpoints.
    pub layer_widths: Vec<usize>,
    pub activation: Activation,
}

fn unlabeled_shards(points: &[Vec<Vec<f64>>]) -> Vec<Shard> {
    points
        .iter()
        .enumerate()
        .map(|(client_id, p)| Shard { client_id, points: p.clone(), labels: None, spec: None, blocks: Vec::new() })
        .collect()
}

/// The DeepONet problem of an operator config.
pub fn build_operator_problem(config: &ExperimentConfig) -> Result<DeepOnetProblem> {
    let base = config.operator.ok_or_else(|| Error::usage(format!("{} is not an operator problem", config.problem)))?;
    let setup = OperatorSetup { n: config.n, clients: config.clients, seed: config.seed, ..base };
    let spec = DeepOnetSpec::uniform(
        setup.sensors,
        base.kind.query_dim(),
        config.width,
        config.depth,
        config.activation,
        config.seed,
    )?;
    DeepOnetProblem::generate(spec, &setup)
}

pub fn build_problem(config: &ExperimentConfig) -> Result<BuiltProblem> {
    let (n, k) = (config.n, config.clients);
    let activation = config.activation;
    match config.problem {
        ProblemId::Gramacy | ProblemId::Schaffer => {
            let p = if config.problem == ProblemId::Gramacy {
                gramacy_problem(config.mlp(1)?, n, k)?
            } else {
                schaffer_problem(config.mlp(2)?, n, k)?
            };
            let shards = p.shards().to_vec();
            let client_points = shards.iter().map(|s| s.points.clone()).collect();
            let layer_widths = p.spec().layer_widths.clone();
            Ok(BuiltProblem { problem: Box::new(p), client_points, shards, layer_widths, activation })
        }
        ProblemId::Poisson1d | ProblemId::Helmholtz2d | ProblemId::AllenCahn | ProblemId::InverseDr => {
            let p = match config.problem {
                ProblemId::Poisson1d => poisson1d_problem(config.mlp(1)?, n, k)?,
                ProblemId::Helmholtz2d => helmholtz2d_problem(config.mlp(2)?, n, k)?,
                ProblemId::AllenCahn => allen_cahn_problem(config.mlp(2)?, n, k)?,
                _ => inverse_dr_problem(config.mlp(1)?, config.mlp(1)?, n, k)?,
            };
            let model = p.model();
            let mut layer_widths = model.u.layer_widths.clone();
            if let Some(kn) = &model.k {
                layer_widths.extend(&kn.layer_widths);
            }
            let client_points = p.client_points();
            let shards = unlabeled_shards(&client_points);
            Ok(BuiltProblem { problem: Box::new(p), client_points, shards, layer_widths, activation })
        }
        ProblemId::Antiderivative | ProblemId::Dr | ProblemId::Burgers => {
            let p = build_operator_problem(config)?;
            let mut layer_widths = p.spec().branch.layer_widths.clone();
            layer_widths.extend(&p.spec().trunk.layer_widths);
            let client_points = p.client_points();
            let shards = unlabeled_shards(&client_points);
            Ok(BuiltProblem { problem: Box::new(p), client_points, shards, layer_widths, activation })
        }
    }
}

/// W1 between two clients, mean pairwise W1 for more. Clouds larger than
/// `cap` are subsampled on the `Subsample` stream of `seed`.
pub fn heterogeneity_w1(client_points: &[Vec<Vec<f64>>], cap: Option<usize>, seed: u64) -> Result<f64> {
    let dists = client_points
        .iter()
        .enumerate()
        .map(|(k, pts)| DiscreteDistribution::from_points(pts, cap, seed, k as u32))
        .collect::<Result<Vec<_>>>()?;
    mean_pairwise_w1(&dists)
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        // ties share their mean rank
        let mean = (i + j) as f64 / 2.0 + 1.0;
        for &t in &idx[i..=j] {
            r[t] = mean;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation (Pearson correlation of average ranks).
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::usage("Spearman needs two equal-length series of at least two values"));
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = ra.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma) * (x - ma)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb) * (y - mb)).sum();
    if va == 0.0 || vb == 0.0 {
        return Err(Error::numerical("Spearman correlation of a constant series"));
    }
    Ok(cov / (va * vb).sqrt())
}

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::residual::{
    allen_cahn_lift, helmholtz_2d_lift, inverse_dr_lift, lift, poisson_1d_lift, residual_allen_cahn,
    residual_helmholtz_2d, residual_inverse_dr, residual_poisson_1d, Fixed, INVERSE_DR_LAMBDA,
};
use super::{l2_relative_error, mlp_jet};
use crate::autodiff::{Scalar, Tape};
use crate::federation::{LossGrad, Objective, Problem};
use crate::heterogeneity::{
    hammersley, partition_1d, partition_2d_x, partition_2d_xy, uniform_grid_1d, uniform_grid_2d, Dataset,
};
use crate::nn::{forward, init_glorot, MlpSpec, ParamLayout};
use crate::solvers::{
    helmholtz2d_u, inverse_dr_k, poisson1d_u, solve_allen_cahn, solve_dr_bvp, AllenCahnParams, BvpParams,
};
use crate::{Error, Result};

/// The physics-informed problems, addressable by CLI name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PdeKind {
    Poisson1d,
    Helmholtz2d,
    AllenCahn,
    InverseDr,
}

impl PdeKind {
    pub fn name(self) -> &'static str {
        match self {
            PdeKind::Poisson1d => "poisson1d",
            PdeKind::Helmholtz2d => "helmholtz2d",
            PdeKind::AllenCahn => "allen-cahn",
            PdeKind::InverseDr => "inverse-dr",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [PdeKind::Poisson1d, PdeKind::Helmholtz2d, PdeKind::AllenCahn, PdeKind::InverseDr]
            .into_iter()
            .find(|k| k.name() == name)
    }

    pub fn input_dim(self) -> usize {
        match self {
            PdeKind::Poisson1d | PdeKind::InverseDr => 1,
            PdeKind::Helmholtz2d | PdeKind::AllenCahn => 2,
        }
    }

    pub fn is_inverse(self) -> bool {
        self == PdeKind::InverseDr
    }
}

/// Networks of a PINN: the solution network and, for the inverse problem,
/// the reaction-rate network. Parameters are flattened `u` first.
#[derive(Debug, Clone, PartialEq)]
pub struct PinnModel {
    pub kind: PdeKind,
    pub u: MlpSpec,
    pub k: Option<MlpSpec>,
}

fn point2(x: &[f64]) -> [f64; 2] {
    [x[0], x[1]]
}

impl PinnModel {
    pub fn new(kind: PdeKind, u: MlpSpec, k: Option<MlpSpec>) -> Result<Self> {
        if u.input_width() != kind.input_dim() || u.output_width() != 1 {
            return Err(Error::usage(format!(
                "{} needs a {}-input, 1-output solution network",
                kind.name(),
                kind.input_dim()
            )));
        }
        match (&k, kind.is_inverse()) {
            (Some(ks), true) if ks.input_width() == 1 && ks.output_width() == 1 => {}
            (None, false) => {}
            _ => return Err(Error::usage("only the inverse problem takes a 1-input, 1-output k network")),
        }
        Ok(PinnModel { kind, u, k })
    }

    pub fn num_params(&self) -> usize {
        self.u.num_params() + self.k.as_ref().map_or(0, |k| k.num_params())
    }

    fn split<'a, S>(&self, params: &'a [S]) -> Result<(&'a [S], &'a [S])> {
        if params.len() != self.num_params() {
            return Err(Error::usage(format!("expected {} parameters, got {}", self.num_params(), params.len())));
        }
        Ok(params.split_at(self.u.num_params()))
    }

    pub fn init_params(&self, seed: u64) -> Vec<f64> {
        let mut p = init_glorot(&MlpSpec { seed, ..self.u.clone() }).into_flat();
        if let Some(k) = &self.k {
            p.extend(init_glorot(&MlpSpec { seed: seed ^ 0x6b6b_6b6b, ..k.clone() }).into_flat());
        }
        p
    }

    pub fn layout(&self) -> ParamLayout {
        if self.k.is_none() {
            return self.u.layout("");
        }
        let mut layout = self.u.layout("u_");
        layout.extend_shifted(&self.k.as_ref().unwrap().layout("k_"), self.u.num_params());
        layout
    }

    /// Pointwise PDE residual of the constrained network.
    pub fn residual<S: Scalar>(&self, params: &[S], x: &[f64]) -> Result<S> {
        let (pu, pk) = self.split(params)?;
        Ok(match self.kind {
            PdeKind::Poisson1d => {
                let n = mlp_jet::<S, 1>(&self.u, pu, &[x[0]])?[0];
                let (g, h) = poisson_1d_lift(x[0]);
                residual_poisson_1d(x[0], &lift(g, h, &n))
            }
            PdeKind::Helmholtz2d => {
                let p = point2(x);
                let n = mlp_jet::<S, 2>(&self.u, pu, &p)?[0];
                let (g, h) = helmholtz_2d_lift(p);
                residual_helmholtz_2d(p, &lift(g, h, &n))
            }
            PdeKind::AllenCahn => {
                let p = point2(x);
                let n = mlp_jet::<S, 2>(&self.u, pu, &p)?[0];
                let (g, h) = allen_cahn_lift(p);
                residual_allen_cahn(&lift(g, h, &n))
            }
            PdeKind::InverseDr => {
                let n = mlp_jet::<S, 1>(&self.u, pu, &[x[0]])?[0];
                let (g, h) = inverse_dr_lift(x[0]);
                let k = self.reaction(pk, x[0])?;
                residual_inverse_dr(x[0], &lift(g, h, &n), k)
            }
        })
    }

    fn reaction<S: Scalar>(&self, pk: &[S], x: f64) -> Result<S> {
        let spec = self.k.as_ref().ok_or_else(|| Error::usage("problem has no k network"))?;
        let xs = [pk[0].lift(x)];
        Ok(forward(spec, pk, &xs)?[0].softplus())
    }

    /// Constrained solution `û(x)`.
    pub fn predict_u<S: Scalar>(&self, params: &[S], x: &[f64]) -> Result<S> {
        let (pu, _) = self.split(params)?;
        let xs: Vec<S> = x.iter().map(|&v| pu[0].lift(v)).collect();
        let n = forward(&self.u, pu, &xs)?[0];
        let (g, h) = self.fixed_values(x);
        Ok(n * h + g)
    }

    /// Values of `g` and `h` at `x`.
    fn fixed_values(&self, x: &[f64]) -> (f64, f64) {
        fn v<const D: usize>((g, h): (Fixed<D>, Fixed<D>)) -> (f64, f64) {
            (g.value, h.value)
        }
        match self.kind {
            PdeKind::Poisson1d => v(poisson_1d_lift(x[0])),
            PdeKind::Helmholtz2d => v(helmholtz_2d_lift(point2(x))),
            PdeKind::AllenCahn => v(allen_cahn_lift(point2(x))),
            PdeKind::InverseDr => v(inverse_dr_lift(x[0])),
        }
    }

    /// Inferred reaction rate `softplus(N_k(x))`.
    pub fn predict_k(&self, params: &[f64], x: f64) -> Result<f64> {
        let (_, pk) = self.split(params)?;
        self.reaction(pk, x)
    }

    /// `û` with a network output supplied directly, for transform checks.
    pub fn constrained_value(&self, x: &[f64], n: f64) -> f64 {
        let (g, h) = self.fixed_values(x);
        g + h * n
    }
}

/// One client's training points. Observations are `(point, u value)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PinnShard {
    pub collocation: Vec<Vec<f64>>,
    pub observations: Vec<(Vec<f64>, f64)>,
}

/// Mean squared residual plus observation MSE, evaluated without a tape.
pub fn pinn_total_loss(model: &PinnModel, params: &[f64], shard: &PinnShard) -> Result<f64> {
    if shard.collocation.is_empty() {
        return Err(Error::usage("a PINN loss needs at least one collocation point"));
    }
    let mut loss = 0.0;
    for x in &shard.collocation {
        let r = model.residual(params, x)?;
        loss += r * r;
    }
    loss /= shard.collocation.len() as f64;
    if !shard.observations.is_empty() {
        let mut data = 0.0;
        for (x, y) in &shard.observations {
            let d = model.predict_u(params, x)? - y;
            data += d * d;
        }
        loss += data / shard.observations.len() as f64;
    }
    Ok(loss)
}

/// Per-point tapes so that every squared residual yields its own gradient.
#[derive(Debug, Clone)]
pub struct PinnObjective {
    model: Arc<PinnModel>,
    shard: PinnShard,
    weight: usize,
}

impl PinnObjective {
    pub fn new(model: Arc<PinnModel>, shard: PinnShard) -> Result<Self> {
        if shard.collocation.is_empty() {
            return Err(Error::usage("a PINN loss needs at least one collocation point"));
        }
        let weight = if model.kind.is_inverse() { shard.observations.len() } else { shard.collocation.len() };
        Ok(PinnObjective { model, shard, weight })
    }
}

impl Objective for PinnObjective {
    /// Partitioned data count: observations for the inverse problem,
    /// collocation points otherwise.
    fn num_samples(&self) -> usize {
        self.weight
    }

    fn loss_grad(&self, params: &[f64], sample_norms: bool) -> Result<LossGrad> {
        let tape = Tape::new();
        let mut grad = vec![0.0; params.len()];
        let mut loss = 0.0;
        let mut max_norm: f64 = 0.0;
        let nr = self.shard.collocation.len() as f64;
        let no = self.shard.observations.len() as f64;
        let terms = self
            .shard
            .collocation
            .iter()
            .map(|x| (x, None, nr))
            .chain(self.shard.observations.iter().map(|(x, y)| (x, Some(*y), no)));
        for (x, target, count) in terms {
            tape.clear();
            let ps = tape.vars(params);
            let e = match target {
                None => self.model.residual(&ps, x)?,
                Some(y) => self.model.predict_u(&ps, x)? - y,
            };
            let l = e * e;
            let g = tape.gradient(l, &ps)?;
            loss += l.value() / count;
            for (a, gi) in grad.iter_mut().zip(&g) {
                *a += gi / count;
            }
            if sample_norms {
                max_norm = max_norm.max(g.iter().map(|v| v * v).sum::<f64>().sqrt());
            }
        }
        if !loss.is_finite() {
            return Err(Error::numerical("PINN loss became non-finite"));
        }
        Ok(LossGrad { loss, grad, max_sample_grad_norm: sample_norms.then_some(max_norm) })
    }
}

/// A physics-informed problem bound to client shards and a reference test set.
#[derive(Debug, Clone)]
pub struct PinnProblem {
    model: Arc<PinnModel>,
    shards: Vec<PinnShard>,
    test_points: Vec<Vec<f64>>,
    test_u: Vec<f64>,
    test_k: Option<Vec<f64>>,
}

impl PinnProblem {
    pub fn new(
        model: PinnModel,
        shards: Vec<PinnShard>,
        test_points: Vec<Vec<f64>>,
        test_u: Vec<f64>,
        test_k: Option<Vec<f64>>,
    ) -> Result<Self> {
        if shards.is_empty() {
            return Err(Error::usage("at least one shard is required"));
        }
        if shards.iter().any(|s| s.collocation.is_empty()) {
            return Err(Error::usage("every client needs collocation points"));
        }
        if model.kind.is_inverse() && shards.iter().any(|s| s.observations.is_empty()) {
            return Err(Error::usage("every inverse-problem client needs observations"));
        }
        if test_points.len() != test_u.len() {
            return Err(Error::usage("one reference value per test point is required"));
        }
        Ok(PinnProblem { model: Arc::new(model), shards, test_points, test_u, test_k })
    }

    pub fn model(&self) -> &PinnModel {
        &self.model
    }

    pub fn shards(&self) -> &[PinnShard] {
        &self.shards
    }

    /// Points that define each client's data distribution (used for W1).
    pub fn client_points(&self) -> Vec<Vec<Vec<f64>>> {
        self.shards
            .iter()
            .map(|s| {
                if self.model.kind.is_inverse() {
                    s.observations.iter().map(|(x, _)| x.clone()).collect()
                } else {
                    s.collocation.clone()
                }
            })
            .collect()
    }

    pub fn test_points(&self) -> &[Vec<f64>] {
        &self.test_points
    }

    /// Reference solution at [`Self::test_points`].
    pub fn test_reference(&self) -> &[f64] {
        &self.test_u
    }

    pub fn predict(&self, params: &[f64]) -> Result<Vec<f64>> {
        self.test_points.iter().map(|x| self.model.predict_u(params, x)).collect()
    }

    /// L2 relative error of the inferred reaction rate (inverse problem only).
    pub fn k_error(&self, params: &[f64]) -> Result<f64> {
        let reference = self.test_k.as_ref().ok_or_else(|| Error::usage("problem has no reaction-rate reference"))?;
        let pred = self.test_points.iter().map(|x| self.model.predict_k(params, x[0])).collect::<Result<Vec<_>>>()?;
        l2_relative_error(&pred, reference)
    }

    fn pooled_shard(&self) -> PinnShard {
        let collocation = if self.model.kind.is_inverse() {
            // residual points are replicated to every client
            self.shards[0].collocation.clone()
        } else {
            self.shards.iter().flat_map(|s| s.collocation.iter().cloned()).collect()
        };
        let observations = self.shards.iter().flat_map(|s| s.observations.iter().cloned()).collect();
        PinnShard { collocation, observations }
    }
}

impl Problem for PinnProblem {
    fn name(&self) -> &str {
        self.model.kind.name()
    }

    fn init_params(&self, seed: u64) -> Vec<f64> {
        self.model.init_params(seed)
    }

    fn layout(&self) -> ParamLayout {
        self.model.layout()
    }

    fn client_objectives(&self) -> Vec<Box<dyn Objective>> {
        self.shards
            .iter()
            .map(|s| Box::new(PinnObjective::new(self.model.clone(), s.clone()).unwrap()) as Box<dyn Objective>)
            .collect()
    }

    fn pooled_objective(&self) -> Box<dyn Objective> {
        Box::new(PinnObjective::new(self.model.clone(), self.pooled_shard()).unwrap())
    }

    fn test_error(&self, params: &[f64]) -> Result<f64> {
        l2_relative_error(&self.predict(params)?, &self.test_u)
    }
}

fn collocation_shards(shards: Vec<crate::heterogeneity::Shard>) -> Vec<PinnShard> {
    shards.into_iter().map(|s| PinnShard { collocation: s.points, observations: Vec::new() }).collect()
}

/// 32 equispaced collocation points on `[0, π]`.
pub fn poisson1d_collocation() -> Vec<Vec<f64>> {
    uniform_grid_1d(0.0, PI, 32).into_iter().map(|x| vec![x]).collect()
}

pub fn poisson1d_problem(u: MlpSpec, n_total: usize, clients: usize) -> Result<PinnProblem> {
    let model = PinnModel::new(PdeKind::Poisson1d, u, None)?;
    let shards = partition_1d(&Dataset::unlabeled(poisson1d_collocation())?, n_total, clients)?;
    let test: Vec<Vec<f64>> = uniform_grid_1d(0.0, PI, 1000).into_iter().map(|x| vec![x]).collect();
    let test_u = test.iter().map(|p| poisson1d_u(p[0])).collect();
    PinnProblem::new(model, collocation_shards(shards), test, test_u, None)
}

/// 24 × 24 grid on `[0, 1]²` (12 points per wavelength).
pub fn helmholtz2d_collocation() -> Vec<Vec<f64>> {
    uniform_grid_2d((0.0, 1.0), (0.0, 1.0), 24, 24)
}

/// `n` cells per axis in the xy-partition.
pub fn helmholtz2d_problem(u: MlpSpec, n: usize, clients: usize) -> Result<PinnProblem> {
    let model = PinnModel::new(PdeKind::Helmholtz2d, u, None)?;
    let shards = partition_2d_xy(&Dataset::unlabeled(helmholtz2d_collocation())?, n, clients)?;
    let test = uniform_grid_2d((0.0, 1.0), (0.0, 1.0), 100, 100);
    let test_u = test.iter().map(|p| helmholtz2d_u(p[0], p[1])).collect();
    PinnProblem::new(model, collocation_shards(shards), test, test_u, None)
}

/// 8000 Hammersley interior points, 400 boundary points (200 per side) and
/// 800 initial points, as `(x, t)` on `[−1, 1] × [0, 1]`.
pub fn allen_cahn_collocation() -> Result<Vec<Vec<f64>>> {
    let mut pts: Vec<Vec<f64>> = hammersley(8000, 2)?.into_iter().map(|p| vec![2.0 * p[1] - 1.0, p[0]]).collect();
    for t in uniform_grid_1d(0.0, 1.0, 200) {
        pts.push(vec![-1.0, t]);
        pts.push(vec![1.0, t]);
    }
    pts.extend(uniform_grid_1d(-1.0, 1.0, 800).into_iter().map(|x| vec![x, 0.0]));
    Ok(pts)
}

/// Reference from the finite-difference solver on every 8th node and every
/// 5th snapshot.
pub fn allen_cahn_problem(u: MlpSpec, n_total: usize, clients: usize) -> Result<PinnProblem> {
    let model = PinnModel::new(PdeKind::AllenCahn, u, None)?;
    let shards = partition_2d_x(&Dataset::unlabeled(allen_cahn_collocation()?)?, n_total, clients)?;
    let reference = solve_allen_cahn(AllenCahnParams::default())?.solution;
    let mut test = Vec::new();
    let mut test_u = Vec::new();
    for (k, &t) in reference.times.iter().enumerate().step_by(5) {
        for (i, &x) in reference.xs.iter().enumerate().step_by(8) {
            test.push(vec![x, t]);
            test_u.push(reference.u[k][i]);
        }
    }
    PinnProblem::new(model, collocation_shards(shards), test, test_u, None)
}

/// Nodes of the reference boundary-value solution; observation points
/// `i/23` fall exactly on nodes.
const INVERSE_DR_NODES: usize = 23 * 50 + 1;

/// Reference solution of the inverse diffusion-reaction problem on
/// [`INVERSE_DR_NODES`] nodes.
pub fn inverse_dr_reference() -> Result<(Vec<f64>, Vec<f64>)> {
    solve_dr_bvp(
        inverse_dr_k,
        |x| (2.0 * PI * x).sin(),
        BvpParams { lambda: INVERSE_DR_LAMBDA, nodes: INVERSE_DR_NODES },
    )
}

/// 24 observations of `u` partitioned across clients, 10 residual points
/// replicated to every client.
pub fn inverse_dr_problem(u: MlpSpec, k: MlpSpec, n_total: usize, clients: usize) -> Result<PinnProblem> {
    let model = PinnModel::new(PdeKind::InverseDr, u, Some(k))?;
    let (xs, us) = inverse_dr_reference()?;
    let obs = Dataset::new((0..24).map(|i| vec![xs[50 * i]]).collect(), Some((0..24).map(|i| us[50 * i]).collect()))?;
    let residual_pts: Vec<Vec<f64>> = uniform_grid_1d(0.0, 1.0, 10).into_iter().map(|x| vec![x]).collect();
    let shards = partition_1d(&obs, n_total, clients)?
        .into_iter()
        .map(|s| PinnShard {
            collocation: residual_pts.clone(),
            observations: s.points.into_iter().zip(s.labels.unwrap()).collect(),
        })
        .collect();
    let test: Vec<Vec<f64>> = xs.iter().step_by(10).map(|&x| vec![x]).collect();
    let test_u = us.iter().step_by(10).copied().collect();
    let test_k = Some(test.iter().map(|p| inverse_dr_k(p[0])).collect());
    PinnProblem::new(model, shards, test, test_u, test_k)
}

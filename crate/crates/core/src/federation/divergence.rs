//! Weight divergence between a federated run and its centralized twin.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{run_centralized_twin, run_training, ClientOpt, FederationConfig, Problem};
use crate::nn::ParamLayout;
use crate::{Error, Result};

/// Below this norm the relative divergence is undefined.
const MIN_REL_NORM: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerDivergence {
    pub name: String,
    pub absolute: f64,
    pub relative: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceEntry {
    pub round: usize,
    pub absolute: f64,
    pub relative: Option<f64>,
    pub per_layer: Vec<LayerDivergence>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceTrace {
    pub client_opt: ClientOpt,
    pub lr: f64,
    pub local_epochs: usize,
    /// One entry per round boundary, starting at round 0.
    pub entries: Vec<DivergenceEntry>,
    /// `M̂`: largest per-sample gradient norm seen in either run.
    pub max_sample_grad_norm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub round: usize,
    pub observed: f64,
    pub bound: f64,
    pub margin: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub m_hat: f64,
    pub rows: Vec<BoundRow>,
    pub satisfied: bool,
}

fn norm(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|x| x * x).sum::<f64>().sqrt()
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    norm(a.iter().zip(b).map(|(x, y)| x - y))
}

/// `‖θ_fed − θ_cen‖ / ‖θ_cen‖`.
pub fn relative_divergence(fed: &[f64], cen: &[f64]) -> Result<f64> {
    if fed.len() != cen.len() {
        return Err(Error::usage("parameter vectors differ in length"));
    }
    let base = norm(cen.iter().copied());
    if base <= MIN_REL_NORM {
        return Err(Error::numerical("relative divergence undefined for zero-norm centralized parameters"));
    }
    Ok(diff_norm(fed, cen) / base)
}

/// Whole-model and per-block Euclidean divergence.
pub fn weight_divergence(round: usize, fed: &[f64], cen: &[f64], layout: &ParamLayout) -> Result<DivergenceEntry> {
    if fed.len() != cen.len() {
        return Err(Error::usage(format!("parameter lengths differ: {} vs {}", fed.len(), cen.len())));
    }
    if layout.len() > fed.len() {
        return Err(Error::usage("parameter layout exceeds the parameter vector"));
    }
    let per_layer = layout
        .blocks
        .iter()
        .map(|(name, r)| {
            let (f, c) = (&fed[r.clone()], &cen[r.clone()]);
            LayerDivergence { name: name.clone(), absolute: diff_norm(f, c), relative: relative_divergence(f, c).ok() }
        })
        .collect();
    Ok(DivergenceEntry {
        round,
        absolute: diff_norm(fed, cen),
        relative: relative_divergence(fed, cen).ok(),
        per_layer,
    })
}

/// Runs the federated model and its same-init twin, recording per-sample
/// gradient norms, and compares them at every round boundary.
pub fn run_divergence(config: &FederationConfig, problem: &dyn Problem) -> Result<DivergenceTrace> {
    let cfg = FederationConfig { track_sample_norms: true, ..*config };
    let fed = run_training(&cfg, problem)?;
    let cen = run_centralized_twin(&cfg, problem)?;
    let layout = problem.layout();
    let entries = fed
        .snapshots
        .iter()
        .zip(&cen.snapshots)
        .enumerate()
        .map(|(l, (f, c))| weight_divergence(l, f, c, &layout))
        .collect::<Result<Vec<_>>>()?;
    let m_hat = match (fed.max_sample_grad_norm, cen.max_sample_grad_norm) {
        (Some(a), Some(b)) => Some(a.max(b)),
        (a, b) => a.or(b),
    };
    Ok(DivergenceTrace {
        client_opt: config.client_opt,
        lr: config.lr,
        local_epochs: config.local_epochs,
        entries,
        max_sample_grad_norm: m_hat,
    })
}

/// Checks `ε_WD^{l,E} ≤ 2 η M̂ E l` at every recorded round.
pub fn check_divergence_bound(trace: &DivergenceTrace) -> Result<BoundReport> {
    if trace.client_opt != ClientOpt::Sgd {
        return Err(Error::usage(
            "the divergence bound assumes plain SGD clients and an SGD twin; rerun with --client-opt sgd",
        ));
    }
    let m_hat = trace
        .max_sample_grad_norm
        .ok_or_else(|| Error::usage("trace has no per-sample gradient norms; the bound needs M̂"))?;
    let rows: Vec<BoundRow> = trace
        .entries
        .iter()
        .map(|e| {
            let bound = 2.0 * trace.lr * m_hat * trace.local_epochs as f64 * e.round as f64;
            BoundRow {
                round: e.round,
                observed: e.absolute,
                bound,
                margin: bound - e.absolute,
                satisfied: e.absolute <= bound,
            }
        })
        .collect();
    let satisfied = rows.iter().all(|r| r.satisfied);
    Ok(BoundReport { m_hat, rows, satisfied })
}

impl DivergenceTrace {
    /// Columns: round, divergence_abs, divergence_rel, then `abs_<layer>` and
    /// `rel_<layer>` per block. Undefined relative values are empty.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["round".to_string(), "divergence_abs".into(), "divergence_rel".into()];
        if let Some(first) = self.entries.first() {
            for l in &first.per_layer {
                header.push(format!("abs_{}", l.name));
                header.push(format!("rel_{}", l.name));
            }
        }
        out.write_record(&header)?;
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        for e in &self.entries {
            let mut rec = vec![e.round.to_string(), format!("{:e}", e.absolute), opt(e.relative)];
            for l in &e.per_layer {
                rec.push(format!("{:e}", l.absolute));
                rec.push(opt(l.relative));
            }
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }
}

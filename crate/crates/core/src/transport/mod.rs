//! Exact 1-Wasserstein distances between discrete distributions.

mod simplex;

pub use simplex::emd;

use rand::seq::index::sample;

use crate::rng::{stream, Stream};
use crate::{Error, Result};

/// Weighted point cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    support: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(support: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::usage("distribution support is empty"));
        }
        if support.len() != weights.len() {
            return Err(Error::usage("support and weight lengths differ"));
        }
        let dim = support[0].len();
        if dim == 0 || support.iter().any(|p| p.len() != dim) {
            return Err(Error::usage("support points must share a positive dimension"));
        }
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::usage("weights must be finite and non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::usage(format!("weights sum to {total}, not 1")));
        }
        Ok(DiscreteDistribution { support, weights })
    }

    /// Empirical measure with mass `1/n` on each point.
    pub fn uniform(support: Vec<Vec<f64>>) -> Result<Self> {
        let n = support.len().max(1);
        Self::new(support, vec![1.0 / n as f64; n])
    }

    /// Empirical measure of `points`, uniformly subsampled to at most `cap`
    /// points using substream `index` of `seed`.
    pub fn from_points(points: &[Vec<f64>], cap: Option<usize>, seed: u64, index: u32) -> Result<Self> {
        match cap {
            Some(c) if c > 0 && points.len() > c => {
                let mut rng = stream(seed, Stream::Subsample, index);
                let mut pick = sample(&mut rng, points.len(), c).into_vec();
                pick.sort_unstable();
                Self::uniform(pick.into_iter().map(|i| points[i].clone()).collect())
            }
            _ => Self::uniform(points.to_vec()),
        }
    }

    pub fn support(&self) -> &[Vec<f64>] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.support[0].len()
    }
}

/// Sparse coupling: `(row, col, mass)` for every basic cell.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize, f64)>,
    pub cost: f64,
}

impl TransportPlan {
    pub fn dense(&self) -> Vec<Vec<f64>> {
        let mut g = vec![vec![0.0; self.cols]; self.rows];
        for &(i, j, f) in &self.entries {
            g[i][j] += f;
        }
        g
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.rows];
        for &(i, _, f) in &self.entries {
            s[i] += f;
        }
        s
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.cols];
        for &(_, j, f) in &self.entries {
            s[j] += f;
        }
        s
    }
}

fn dist(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Euclidean ground costs, row `i` for support point `i` of `mu`.
pub fn cost_matrix(mu: &DiscreteDistribution, nu: &DiscreteDistribution) -> Result<Vec<Vec<f64>>> {
    if mu.dim() != nu.dim() {
        return Err(Error::usage(format!("dimension mismatch: {} vs {}", mu.dim(), nu.dim())));
    }
    Ok(mu.support.iter().map(|p| nu.support.iter().map(|q| dist(p, q)).collect()).collect())
}

pub fn emd_w1(mu: &DiscreteDistribution, nu: &DiscreteDistribution) -> Result<(f64, TransportPlan)> {
    let cost = cost_matrix(mu, nu)?;
    let plan = emd(&mu.weights, &nu.weights, &cost)?;
    Ok((plan.cost, plan))
}

/// W1 for one-dimensional measures as the L1 distance between quantile
/// functions.
pub fn w1_1d_closed_form(mu: &DiscreteDistribution, nu: &DiscreteDistribution) -> Result<f64> {
    if mu.dim() != 1 || nu.dim() != 1 {
        return Err(Error::usage("closed-form W1 needs one-dimensional supports"));
    }
    let sorted = |d: &DiscreteDistribution| {
        let mut v: Vec<(f64, f64)> = d.support.iter().map(|p| p[0]).zip(d.weights.iter().copied()).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v
    };
    let (x, y) = (sorted(mu), sorted(nu));
    let (mut i, mut j) = (0, 0);
    let (mut rx, mut ry) = (x[0].1, y[0].1);
    let mut total = 0.0;
    loop {
        let m = rx.min(ry);
        total += m * (x[i].0 - y[j].0).abs();
        rx -= m;
        ry -= m;
        let adv_x = rx <= ry && i + 1 < x.len();
        let adv_y = ry <= rx && j + 1 < y.len();
        if !adv_x && !adv_y {
            // one side ran out; any leftover is rounding in the totals
            if i + 1 < x.len() {
                i += 1;
                rx = x[i].1;
            } else if j + 1 < y.len() {
                j += 1;
                ry = y[j].1;
            } else {
                break;
            }
            continue;
        }
        if adv_x {
            i += 1;
            rx = x[i].1;
        }
        if adv_y {
            j += 1;
            ry = y[j].1;
        }
    }
    Ok(total)
}

/// Mean pairwise W1 across client distributions. The sum over unordered
/// pairs is scaled by `1/((K−2)(K−1))` for `K ≥ 3`; two clients give the
/// plain W1. Note the constant is not the reciprocal of the pair count.
pub fn mean_pairwise_w1(dists: &[DiscreteDistribution]) -> Result<f64> {
    let k = dists.len();
    if k < 2 {
        return Err(Error::usage("mean pairwise W1 needs at least two distributions"));
    }
    let mut sum = 0.0;
    for a in 0..k {
        for b in a + 1..k {
            sum += emd_w1(&dists[a], &dists[b])?.0;
        }
    }
    Ok(if k == 2 { sum } else { sum / ((k - 2) * (k - 1)) as f64 })
}

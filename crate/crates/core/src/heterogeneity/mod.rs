//! Client dataset generation with controlled covariate shift.

mod chebyshev;
mod io;
mod partition;
mod sampling;

pub use chebyshev::{chebyshev_support, horner_eval, sample_chebyshev, ChebyshevFunction, ChebyshevMode, ChebyshevSpaceSpec};
pub use io::{read_shards_csv, write_shards_csv};
pub use partition::{partition, partition_1d, partition_2d_x, partition_2d_xy, PartitionKind, PartitionSpec};
pub use sampling::{hammersley, star_discrepancy, uniform_grid_1d, uniform_grid_2d, van_der_corput};

use crate::{Error, Result};

/// Points with optional scalar labels, one coordinate vector per point.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub points: Vec<Vec<f64>>,
    pub labels: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(points: Vec<Vec<f64>>, labels: Option<Vec<f64>>) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != points.len() {
                return Err(Error::usage("label count does not match point count"));
            }
        }
        let dim = points.first().map_or(0, |p| p.len());
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::usage("points have mixed dimensions"));
        }
        Ok(Dataset { points, labels })
    }

    /// Unlabelled dataset.
    pub fn unlabeled(points: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(points, None)
    }

    /// Labels every point with `f`.
    pub fn labeled_by(points: Vec<Vec<f64>>, f: impl Fn(&[f64]) -> f64) -> Self {
        let labels = points.iter().map(|p| f(p)).collect();
        Dataset { points, labels: Some(labels) }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, |p| p.len())
    }

    fn select(&self, idx: &[usize]) -> (Vec<Vec<f64>>, Option<Vec<f64>>) {
        let points = idx.iter().map(|&i| self.points[i].clone()).collect();
        let labels = self.labels.as_ref().map(|l| idx.iter().map(|&i| l[i]).collect());
        (points, labels)
    }
}

/// One client's share of a partitioned dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Shard {
    pub client_id: usize,
    pub points: Vec<Vec<f64>>,
    pub labels: Option<Vec<f64>>,
    /// Partition that produced the shard, if any.
    pub spec: Option<PartitionSpec>,
    /// Block (or cell) indices owned by this client.
    pub blocks: Vec<usize>,
}

impl Shard {
    /// A shard holding a whole dataset, e.g. for centralized training.
    pub fn whole(client_id: usize, data: &Dataset) -> Self {
        Shard { client_id, points: data.points.clone(), labels: data.labels.clone(), spec: None, blocks: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dataset(&self) -> Dataset {
        Dataset { points: self.points.clone(), labels: self.labels.clone() }
    }
}

/// Concatenates shards in the given order.
pub fn union(shards: &[Shard]) -> Dataset {
    let points = shards.iter().flat_map(|s| s.points.iter().cloned()).collect();
    let labels = if shards.iter().all(|s| s.labels.is_some()) {
        Some(shards.iter().flat_map(|s| s.labels.as_ref().unwrap().iter().copied()).collect())
    } else {
        None
    };
    Dataset { points, labels }
}

use serde::{Deserialize, Serialize};

use super::{Dataset, Shard};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionKind {
    OneD,
    TwoDX,
    TwoDXy,
}

/// `n_total` is the total number of blocks along the partitioned axis
/// (per axis for [`PartitionKind::TwoDXy`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionSpec {
    pub kind: PartitionKind,
    pub n_total: usize,
    pub clients: usize,
}

impl PartitionSpec {
    pub fn validate(&self) -> Result<()> {
        if self.clients == 0 {
            return Err(Error::usage("at least one client is required"));
        }
        match self.kind {
            PartitionKind::OneD | PartitionKind::TwoDX if self.n_total < self.clients => Err(Error::usage(format!(
                "n_total = {} must be at least the client count {}",
                self.n_total, self.clients
            ))),
            PartitionKind::TwoDXy if self.n_total == 0 => Err(Error::usage("n per axis must be at least 1")),
            _ => Ok(()),
        }
    }
}

pub fn partition(data: &Dataset, spec: PartitionSpec) -> Result<Vec<Shard>> {
    match spec.kind {
        PartitionKind::OneD => partition_1d(data, spec.n_total, spec.clients),
        PartitionKind::TwoDX => partition_2d_x(data, spec.n_total, spec.clients),
        PartitionKind::TwoDXy => partition_2d_xy(data, spec.n_total, spec.clients),
    }
}

/// Block sizes: `len / n` each, the last `len % n` blocks one larger.
fn block_bounds(len: usize, n: usize) -> Vec<(usize, usize)> {
    let base = len / n;
    let rem = len % n;
    let mut start = 0;
    (0..n)
        .map(|j| {
            let size = base + usize::from(j >= n - rem);
            let b = (start, start + size);
            start += size;
            b
        })
        .collect()
}

fn assign_blocks(data: &Dataset, order: &[usize], spec: PartitionSpec) -> Result<Vec<Shard>> {
    spec.validate()?;
    if order.len() < spec.n_total {
        return Err(Error::usage(format!(
            "{} points cannot fill {} blocks",
            order.len(),
            spec.n_total
        )));
    }
    let mut idx: Vec<Vec<usize>> = vec![Vec::new(); spec.clients];
    let mut blocks: Vec<Vec<usize>> = vec![Vec::new(); spec.clients];
    for (j, (lo, hi)) in block_bounds(order.len(), spec.n_total).into_iter().enumerate() {
        let k = j % spec.clients;
        idx[k].extend_from_slice(&order[lo..hi]);
        blocks[k].push(j);
    }
    Ok(build_shards(data, idx, blocks, spec))
}

fn build_shards(data: &Dataset, idx: Vec<Vec<usize>>, blocks: Vec<Vec<usize>>, spec: PartitionSpec) -> Vec<Shard> {
    idx.into_iter()
        .zip(blocks)
        .enumerate()
        .map(|(client_id, (ix, blocks))| {
            let (points, labels) = data.select(&ix);
            Shard { client_id, points, labels, spec: Some(spec), blocks }
        })
        .collect()
}

/// Alternating block partition of points sorted ascending by their first
/// coordinate.
pub fn partition_1d(data: &Dataset, n_total: usize, clients: usize) -> Result<Vec<Shard>> {
    if data.points.windows(2).any(|w| w[0][0] > w[1][0]) {
        return Err(Error::usage("partition_1d expects points sorted by coordinate"));
    }
    let order: Vec<usize> = (0..data.len()).collect();
    assign_blocks(data, &order, PartitionSpec { kind: PartitionKind::OneD, n_total, clients })
}

/// Alternating stripes along `x`, `y` untouched.
pub fn partition_2d_x(data: &Dataset, n_total: usize, clients: usize) -> Result<Vec<Shard>> {
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.sort_by(|&a, &b| data.points[a][0].total_cmp(&data.points[b][0]));
    assign_blocks(data, &order, PartitionSpec { kind: PartitionKind::TwoDX, n_total, clients })
}

/// `n × n` cells over the bounding box, cell `(row, col)` going to client
/// `(row + col) mod K`. Cells are numbered row-major from the bottom-left.
pub fn partition_2d_xy(data: &Dataset, n: usize, clients: usize) -> Result<Vec<Shard>> {
    let spec = PartitionSpec { kind: PartitionKind::TwoDXy, n_total: n, clients };
    spec.validate()?;
    if data.is_empty() {
        return Err(Error::usage("cannot partition an empty dataset"));
    }
    if data.dim() < 2 {
        return Err(Error::usage("xy-partition needs 2D points"));
    }
    let range = |axis: usize| {
        let lo = data.points.iter().map(|p| p[axis]).fold(f64::INFINITY, f64::min);
        let hi = data.points.iter().map(|p| p[axis]).fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    };
    let cell = |v: f64, (lo, hi): (f64, f64)| -> usize {
        if hi <= lo {
            return 0;
        }
        (((v - lo) / (hi - lo) * n as f64).floor() as usize).min(n - 1)
    };
    let (rx, ry) = (range(0), range(1));
    let mut idx: Vec<Vec<usize>> = vec![Vec::new(); clients];
    for (i, p) in data.points.iter().enumerate() {
        let (r, c) = (cell(p[1], ry), cell(p[0], rx));
        idx[(r + c) % clients].push(i);
    }
    let mut blocks: Vec<Vec<usize>> = vec![Vec::new(); clients];
    for r in 0..n {
        for c in 0..n {
            blocks[(r + c) % clients].push(r * n + c);
        }
    }
    if let Some(k) = idx.iter().position(|v| v.is_empty()) {
        return Err(Error::usage(format!("client {k} receives no points with n = {n}")));
    }
    Ok(build_shards(data, idx, blocks, spec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heterogeneity::{hammersley, union, uniform_grid_1d, uniform_grid_2d};
    use proptest::prelude::*;

    fn line(n: usize) -> Dataset {
        Dataset::labeled_by(uniform_grid_1d(0.0, 1.0, n).into_iter().map(|x| vec![x]).collect(), |p| 3.0 * p[0])
    }

    fn xs(s: &Shard) -> Vec<f64> {
        s.points.iter().map(|p| p[0]).collect()
    }

    #[test]
    fn one_block_each() {
        let d = Dataset::unlabeled((0..6).map(|i| vec![i as f64]).collect()).unwrap();
        let s = partition_1d(&d, 2, 2).unwrap();
        assert_eq!(xs(&s[0]), vec![0.0, 1.0, 2.0]);
        assert_eq!(xs(&s[1]), vec![3.0, 4.0, 5.0]);
    }

    #[test]
    fn alternating_blocks() {
        let d = Dataset::unlabeled((0..8).map(|i| vec![i as f64]).collect()).unwrap();
        let s = partition_1d(&d, 4, 2).unwrap();
        assert_eq!(s[0].blocks, vec![0, 2]);
        assert_eq!(s[1].blocks, vec![1, 3]);
        assert_eq!(xs(&s[0]), vec![0.0, 1.0, 4.0, 5.0]);
        assert_eq!(xs(&s[1]), vec![2.0, 3.0, 6.0, 7.0]);
    }

    #[test]
    fn remainder_goes_to_trailing_blocks() {
        let d = Dataset::unlabeled((0..7).map(|i| vec![i as f64]).collect()).unwrap();
        let s = partition_1d(&d, 3, 2).unwrap();
        // block sizes 2, 2, 3
        assert_eq!(xs(&s[0]), vec![0.0, 1.0, 4.0, 5.0, 6.0]);
        assert_eq!(xs(&s[1]), vec![2.0, 3.0]);
    }

    #[test]
    fn labels_travel_with_points() {
        for s in partition_1d(&line(20), 5, 2).unwrap() {
            for (p, l) in s.points.iter().zip(s.labels.as_ref().unwrap()) {
                assert_eq!(*l, 3.0 * p[0]);
            }
        }
    }

    #[test]
    fn usage_errors() {
        let d = line(3);
        assert!(partition_1d(&d, 4, 2).is_err());
        assert!(partition_1d(&d, 1, 2).is_err());
        assert!(partition_1d(&d, 2, 0).is_err());
        let unsorted = Dataset::unlabeled(vec![vec![1.0], vec![0.0]]).unwrap();
        assert!(partition_1d(&unsorted, 1, 1).is_err());
        assert!(partition_2d_xy(&Dataset::unlabeled(vec![]).unwrap(), 1, 1).is_err());
    }

    #[test]
    fn x_partition_halves_and_stripes() {
        let d = Dataset::unlabeled(uniform_grid_2d((0.0, 1.0), (0.0, 1.0), 8, 8)).unwrap();
        let s = partition_2d_x(&d, 2, 2).unwrap();
        assert!(s[0].points.iter().all(|p| p[0] < 0.5));
        assert!(s[1].points.iter().all(|p| p[0] > 0.5));
        let s = partition_2d_x(&d, 4, 2).unwrap();
        let col = |x: f64| (x * 7.0).round() as usize / 2;
        for (k, shard) in s.iter().enumerate() {
            assert!(shard.points.iter().all(|p| col(p[0]) % 2 == k));
            let ys: Vec<f64> = shard.points.iter().map(|p| p[1]).collect();
            assert_eq!(ys.iter().cloned().fold(f64::INFINITY, f64::min), 0.0);
            assert_eq!(ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max), 1.0);
        }
    }

    #[test]
    fn xy_checkerboard() {
        let d = Dataset::unlabeled(hammersley(400, 2).unwrap()).unwrap();
        let one = partition_2d_xy(&d, 1, 1).unwrap();
        assert_eq!(one[0].len(), 400);
        let s = partition_2d_xy(&d, 2, 2).unwrap();
        assert_eq!(s[0].blocks, vec![0, 3]);
        for p in &s[0].points {
            assert!((p[0] < 0.5) == (p[1] < 0.5), "{p:?}");
        }
        let s = partition_2d_xy(&d, 3, 3).unwrap();
        for (k, shard) in s.iter().enumerate() {
            assert_eq!(shard.blocks.len(), 3);
            assert!(shard.blocks.iter().all(|c| (c / 3 + c % 3) % 3 == k));
        }
    }

    proptest! {
        #[test]
        fn partitions_are_complete(n in 1usize..120, n_total in 1usize..40, k in 1usize..5) {
            prop_assume!(n_total >= k && n >= n_total);
            let d = line(n);
            let s = partition_1d(&d, n_total, k).unwrap();
            let mut all: Vec<f64> = union(&s).points.iter().map(|p| p[0]).collect();
            all.sort_by(f64::total_cmp);
            let src: Vec<f64> = d.points.iter().map(|p| p[0]).collect();
            prop_assert_eq!(all, src);
        }

        #[test]
        fn xy_partitions_are_complete(count in 20usize..300, n in 1usize..5, k in 1usize..4) {
            let d = Dataset::unlabeled(hammersley(count, 2).unwrap()).unwrap();
            if let Ok(s) = partition_2d_xy(&d, n, k) {
                prop_assert_eq!(s.iter().map(|x| x.len()).sum::<usize>(), count);
                let mut all = union(&s).points;
                all.sort_by(|a, b| a[0].total_cmp(&b[0]));
                prop_assert_eq!(all, d.points);
            }
        }
    }
}

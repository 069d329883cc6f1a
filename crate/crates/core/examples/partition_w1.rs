//! Partition the 200-point Gramacy grid into n blocks dealt to two clients
//! and print the W1 distance between the client point clouds.

use fedsciml::heterogeneity::{partition_1d, uniform_grid_1d, Dataset};
use fedsciml::transport::{emd_w1, DiscreteDistribution};

fn main() -> fedsciml::Result<()> {
    let grid = Dataset::unlabeled(uniform_grid_1d(0.0, 1.0, 200).into_iter().map(|x| vec![x]).collect())?;
    println!("{:>5} {:>10}", "n", "W1");
    for n in [2, 4, 10, 20, 50, 100, 200] {
        let shards = partition_1d(&grid, n, 2)?;
        let a = DiscreteDistribution::uniform(shards[0].points.clone())?;
        let b = DiscreteDistribution::uniform(shards[1].points.clone())?;
        println!("{n:>5} {:>10.5}", emd_w1(&a, &b)?.0);
    }
    Ok(())
}

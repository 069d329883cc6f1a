//! Exact optimal transport between two small weighted point sets in 2D.

use fedsciml::transport::{emd_w1, DiscreteDistribution};

fn main() -> fedsciml::Result<()> {
    let mu = DiscreteDistribution::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.5, 0.25, 0.25])?;
    let nu = DiscreteDistribution::new(vec![vec![1.0, 1.0], vec![2.0, 0.0]], vec![0.6, 0.4])?;
    let (w1, plan) = emd_w1(&mu, &nu)?;
    println!("W1 = {w1:.6}");
    for (i, j, mass) in plan.entries.iter().filter(|e| e.2 > 0.0) {
        println!("  move {mass:.3} from {:?} to {:?}", mu.support()[*i], nu.support()[*j]);
    }
    Ok(())
}

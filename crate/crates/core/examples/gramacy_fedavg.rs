//! Centralized, per-client and federated training on the Gramacy & Lee
//! regression task for a strongly and a mildly non-iid split.

use fedsciml::experiment::commands::sweep_point;
use fedsciml::experiment::{ExperimentConfig, Mode, ProblemId};

fn main() -> fedsciml::Result<()> {
    let modes = [Mode::Centralized, Mode::Extrapolation, Mode::Federated];
    for n in [2, 100] {
        let config = ExperimentConfig::new(ProblemId::Gramacy, n, 2).with_budget_scale(0.5)?;
        let row = sweep_point(&config, &modes)?;
        println!(
            "n={n:<4} W1={:.4} centralized={:.3e} worst client={:.3e} federated={:.3e}",
            row.w1,
            row.centralized.unwrap(),
            row.extrapolation_worst.unwrap(),
            row.federated.unwrap()
        );
    }
    Ok(())
}

//! Federated DeepONet for the antiderivative operator, clients drawing from
//! shifted Chebyshev windows.

use fedsciml::experiment::commands::sweep_point;
use fedsciml::experiment::{ExperimentConfig, Mode, ProblemId};

fn main() -> fedsciml::Result<()> {
    for n in [2, 10] {
        let mut config = ExperimentConfig::new(ProblemId::Antiderivative, n, 2);
        config.rounds = 300;
        if let Some(op) = &mut config.operator {
            op.test_functions = 100;
        }
        let row = sweep_point(&config, &[Mode::Centralized, Mode::Federated])?;
        println!(
            "n={n:<3} centralized {:.4} federated {:.4}",
            row.centralized.unwrap(),
            row.federated.unwrap()
        );
    }
    Ok(())
}

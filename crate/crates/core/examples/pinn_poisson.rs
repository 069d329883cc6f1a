//! Federated PINN for the 1D Poisson problem with hard boundary constraints.

use fedsciml::experiment::{build_problem, ExperimentConfig, ProblemId};
use fedsciml::federation::run_training;

fn main() -> fedsciml::Result<()> {
    let mut config = ExperimentConfig::new(ProblemId::Poisson1d, 6, 2);
    config.rounds = 300;
    let built = build_problem(&config)?;
    let mut fed = config.federation();
    fed.eval_every = 50;
    let run = run_training(&fed, built.problem.as_ref())?;
    for m in run.history.iter().filter(|m| m.test_error.is_some()) {
        println!("round {:>4}: L2 relative error {:.3e}", m.round, m.test_error.unwrap());
    }
    Ok(())
}

//! Fixed iteration budget split into different numbers of local epochs.

use fedsciml::experiment::commands::comm_sweep_rows;
use fedsciml::experiment::{ExperimentConfig, ProblemId};

fn main() -> fedsciml::Result<()> {
    let config = ExperimentConfig::new(ProblemId::Gramacy, 20, 2);
    for row in comm_sweep_rows(&config, &[1, 10, 100], 1000)? {
        println!("E={:<4} rounds={:<5} error {:.3e}", row.local_epochs, row.rounds, row.l2_rel_error);
    }
    Ok(())
}

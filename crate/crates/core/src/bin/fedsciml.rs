use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fedsciml::experiment::commands::{execute, replay, w1_files, Command, Outcome, ReferenceSolver};
use fedsciml::experiment::{ExperimentConfig, Mode, ProblemId};
use fedsciml::federation::{Aggregation, ClientOpt};
use fedsciml::{Error, Result};

/// Federated scientific machine learning experiments.
///
/// Exit codes: 0 success, 1 I/O or data error, 2 usage error, 3 numerical
/// failure. FEDSCIML_THREADS caps the worker threads.
#[derive(Parser)]
#[command(name = "fedsciml", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Partition a problem's data and report W1 between clients.
    Partition(Common),
    /// Train one model family: centralized, extrapolation or federated.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "federated")]
        mode: ModeArg,
    },
    /// Repeat `run` over several n values and write one CSV.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "centralized,extrapolation,federated")]
        modes: Vec<ModeArg>,
    },
    /// Federated runs with a fixed iteration budget and varying E.
    CommSweep {
        #[command(flatten)]
        common: Common,
        #[arg(long = "e-list", value_delimiter = ',', required = true)]
        e_list: Vec<usize>,
        #[arg(long)]
        total_iters: usize,
    },
    /// Weight divergence against the centralized twin and the growth bound.
    Divergence(Common),
    /// Federated DeepONet training.
    TrainDeeponet {
        #[command(flatten)]
        common: Common,
        /// Also write the client and test operator datasets as CSV.
        #[arg(long)]
        dump_data: bool,
    },
    /// Write a reference solution as CSV.
    Reference {
        #[arg(long, value_enum)]
        solver: SolverArg,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// W1 between the point clouds of two shard CSVs.
    W1 {
        a: PathBuf,
        b: PathBuf,
        /// Write the optimal transport plan here.
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Re-run the command recorded in a manifest.
    Replay {
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    problem: String,
    /// Partition blocks, or active Chebyshev terms for operator problems.
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    clients: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    local_epochs: Option<usize>,
    /// Communication rounds; overrides --budget-scale.
    #[arg(long)]
    rounds: Option<usize>,
    /// Fraction of the default round budget.
    #[arg(long)]
    budget_scale: Option<f64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long, value_enum)]
    client_opt: Option<OptArg>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    /// Zero client Adam moments at every broadcast.
    #[arg(long)]
    reset_adam: bool,
    #[arg(long, value_enum, default_value = "direct")]
    aggregation: AggArg,
    /// Per-client point cap for W1 (0 disables subsampling).
    #[arg(long)]
    w1_cap: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Centralized,
    Extrapolation,
    Federated,
}

#[derive(Clone, Copy, ValueEnum)]
enum OptArg {
    Adam,
    Sgd,
}

#[derive(Clone, Copy, ValueEnum)]
enum AggArg {
    Direct,
    Delta,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    AllenCahn,
    InverseDr,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Centralized => Mode::Centralized,
            ModeArg::Extrapolation => Mode::Extrapolation,
            ModeArg::Federated => Mode::Federated,
        }
    }
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut c = ExperimentConfig::new(ProblemId::from_name(&self.problem)?, self.n, self.clients).with_seed(self.seed);
        if let Some(s) = self.budget_scale {
            c = c.with_budget_scale(s)?;
        }
        if let Some(r) = self.rounds {
            c.rounds = r;
        }
        if let Some(e) = self.local_epochs {
            c.local_epochs = e;
        }
        if let Some(lr) = self.lr {
            c.lr = lr;
        }
        if let Some(o) = self.client_opt {
            c.client_opt = match o {
                OptArg::Adam => ClientOpt::Adam,
                OptArg::Sgd => ClientOpt::Sgd,
            };
        }
        if let Some(w) = self.width {
            c.width = w;
        }
        if let Some(d) = self.depth {
            c.depth = d;
        }
        c.reset_adam = self.reset_adam;
        c.aggregation = match self.aggregation {
            AggArg::Direct => Aggregation::Direct,
            AggArg::Delta => Aggregation::Delta,
        };
        if let Some(cap) = self.w1_cap {
            c.w1_cap = (cap > 0).then_some(cap);
        }
        Ok(c)
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("FEDSCIML_THREADS") {
        let n: usize = v.parse().map_err(|_| Error::usage(format!("FEDSCIML_THREADS={v:?} is not a thread count")))?;
        if n == 0 {
            return Err(Error::usage("FEDSCIML_THREADS must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::usage(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn dispatch(cmd: Cmd) -> Result<Outcome> {
    let (command, out) = match cmd {
        Cmd::Partition(c) => (Command::Partition { config: c.config()? }, c.out),
        Cmd::Run { common, mode } => (Command::Run { config: common.config()?, mode: mode.into() }, common.out),
        Cmd::Sweep { common, n_list, modes } => (
            Command::Sweep { config: common.config()?, n_list, modes: modes.into_iter().map(Mode::from).collect() },
            common.out,
        ),
        Cmd::CommSweep { common, e_list, total_iters } => {
            (Command::CommSweep { config: common.config()?, local_epochs: e_list, total_iters }, common.out)
        }
        Cmd::Divergence(c) => (Command::Divergence { config: c.config()? }, c.out),
        Cmd::TrainDeeponet { common, dump_data } => {
            (Command::TrainDeeponet { config: common.config()?, dump_data }, common.out)
        }
        Cmd::Reference { solver, out } => {
            let solver = match solver {
                SolverArg::AllenCahn => ReferenceSolver::AllenCahn,
                SolverArg::InverseDr => ReferenceSolver::InverseDr,
            };
            (Command::Reference { solver }, out)
        }
        Cmd::W1 { a, b, plan } => {
            let w1 = w1_files(&a, &b, plan.as_ref())?;
            return Ok(Outcome { summary: vec![format!("{w1:e}")], artifacts: plan.iter().map(|p| p.display().to_string()).collect() });
        }
        Cmd::Replay { manifest, out } => return replay(&manifest, &out),
    };
    execute(&command, &out)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match configure_threads().and_then(|_| dispatch(cli.cmd)) {
        Ok(outcome) => {
            for line in outcome.summary {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! The subcommands. Each writes into its own output directory and finishes
//! with a `manifest.json` that [`replay`] can re-execute.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::manifest::{unix_now, RunManifest};
use super::results::{num, write_comm_rows, write_run_rows, write_sweep_rows, LayerColumn};
use super::{
    build_operator_problem, build_problem, heterogeneity_w1, BuiltProblem, CommSweepRow, ExperimentConfig, Mode,
    ProblemId, RunRow, SweepRow, SCHEMA_VERSION,
};
use crate::federation::{
    check_divergence_bound, run_centralized_twin, run_divergence, run_extrapolation, run_training, weight_divergence,
    ClientOpt, TrainingRun,
};
use crate::heterogeneity::{read_shards_csv, union, write_shards_csv};
use crate::nn::{write_checkpoint, Checkpoint};
use crate::operator::communication_sweep;
use crate::pinn::inverse_dr_reference;
use crate::solvers::{inverse_dr_k, solve_allen_cahn, AllenCahnParams};
use crate::transport::{emd_w1, DiscreteDistribution};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceSolver {
    AllenCahn,
    InverseDr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Command {
    Partition { config: ExperimentConfig },
    Run { config: ExperimentConfig, mode: Mode },
    Sweep { config: ExperimentConfig, n_list: Vec<usize>, modes: Vec<Mode> },
    CommSweep { config: ExperimentConfig, local_epochs: Vec<usize>, total_iters: usize },
    Divergence { config: ExperimentConfig },
    TrainDeeponet { config: ExperimentConfig, dump_data: bool },
    Reference { solver: ReferenceSolver },
}

/// Human-readable lines for the terminal plus the files written.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub summary: Vec<String>,
    pub artifacts: Vec<String>,
}

struct Out<'a> {
    dir: &'a Path,
    outcome: Outcome,
}

impl Out<'_> {
    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        self.outcome.artifacts.push(name.to_string());
        Ok(BufWriter::new(File::create(self.dir.join(name))?))
    }

    fn say(&mut self, line: String) {
        self.outcome.summary.push(line);
    }
}

/// Runs `command` into `out_dir` and writes its manifest.
pub fn execute(command: &Command, out_dir: &Path) -> Result<Outcome> {
    std::fs::create_dir_all(out_dir)?;
    let started = unix_now();
    let mut out = Out { dir: out_dir, outcome: Outcome::default() };
    let result = match command {
        Command::Partition { config } => partition(config, &mut out),
        Command::Run { config, mode } => run(config, *mode, &mut out),
        Command::Sweep { config, n_list, modes } => sweep(config, n_list, modes, &mut out),
        Command::CommSweep { config, local_epochs, total_iters } => comm_sweep(config, local_epochs, *total_iters, &mut out),
        Command::Divergence { config } => divergence(config, &mut out),
        Command::TrainDeeponet { config, dump_data } => train_deeponet(config, *dump_data, &mut out),
        Command::Reference { solver } => reference(*solver, &mut out),
    };
    let manifest = RunManifest::new(command.clone(), started, out.outcome.artifacts.clone())?;
    manifest.write(&out_dir.join("manifest.json"))?;
    result?;
    out.outcome.artifacts.push("manifest.json".into());
    Ok(out.outcome)
}

/// Re-executes the command recorded in a manifest.
pub fn replay(manifest: &Path, out_dir: &Path) -> Result<Outcome> {
    let m = RunManifest::read(manifest)?;
    execute(&m.command, out_dir)
}

fn partition(config: &ExperimentConfig, out: &mut Out) -> Result<()> {
    let built = build_problem(config)?;
    let w1 = heterogeneity_w1(&built.client_points, config.w1_cap, config.seed)?;
    write_shards_csv(out.create("shards.csv")?, &built.shards)?;
    let sizes: Vec<usize> = built.shards.iter().map(|s| s.len()).collect();
    let report = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "problem": config.problem,
        "n": config.n,
        "clients": config.clients,
        "sizes": sizes,
        "w1": w1,
    });
    serde_json::to_writer_pretty(out.create("w1.json")?, &report)?;
    out.say(format!("{} n={} K={}: shard sizes {:?}, W1 = {}", config.problem, config.n, config.clients, sizes, num(w1)));
    Ok(())
}

/// Trains in `mode` and returns one run per model (one per client for
/// extrapolation).
pub fn train_mode(built: &BuiltProblem, config: &ExperimentConfig, mode: Mode) -> Result<Vec<TrainingRun>> {
    let fed = config.federation();
    let p = built.problem.as_ref();
    match mode {
        Mode::Centralized => Ok(vec![run_centralized_twin(&fed, p)?]),
        Mode::Extrapolation => run_extrapolation(&fed, p),
        Mode::Federated => Ok(vec![run_training(&fed, p)?]),
    }
}

fn final_error(built: &BuiltProblem, run: &TrainingRun) -> Result<f64> {
    match run.final_test_error() {
        Some(e) => Ok(e),
        None => built.problem.test_error(&run.params),
    }
}

/// Result rows of one mode, plus the trained runs.
pub fn run_rows(config: &ExperimentConfig, mode: Mode) -> Result<(Vec<RunRow>, Vec<TrainingRun>, BuiltProblem)> {
    let built = build_problem(config)?;
    let w1 = heterogeneity_w1(&built.client_points, config.w1_cap, config.seed)?;
    let runs = train_mode(&built, config, mode)?;
    let rows = runs
        .iter()
        .enumerate()
        .map(|(k, r)| {
            Ok(RunRow {
                schema_version: SCHEMA_VERSION,
                problem: config.problem,
                mode,
                n: config.n,
                clients: config.clients,
                client: (mode == Mode::Extrapolation).then_some(k),
                local_epochs: config.local_epochs,
                rounds: config.rounds,
                seed: config.seed,
                w1,
                l2_rel_error: final_error(&built, r)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((rows, runs, built))
}

fn write_history(out: &mut Out, run: &TrainingRun) -> Result<()> {
    let mut w = csv::Writer::from_writer(out.create("history.csv")?);
    let k = run.history.first().map_or(0, |m| m.client_losses.len());
    let mut header = vec!["schema_version".to_string(), "round".into(), "test_error".into()];
    header.extend((0..k).map(|i| format!("loss_{i}")));
    w.write_record(&header)?;
    for m in &run.history {
        let mut rec = vec![SCHEMA_VERSION.to_string(), m.round.to_string(), m.test_error.map_or(String::new(), num)];
        rec.extend(m.client_losses.iter().map(|&l| num(l)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn write_params(out: &mut Out, built: &BuiltProblem, name: &str, params: &[f64]) -> Result<()> {
    let ckpt = Checkpoint { activation: built.activation, layer_widths: built.layer_widths.clone(), values: params.to_vec() };
    write_checkpoint(out.create(name)?, &ckpt)
}

fn run(config: &ExperimentConfig, mode: Mode, out: &mut Out) -> Result<()> {
    let (rows, runs, built) = run_rows(config, mode)?;
    write_run_rows(out.create("results.csv")?, &rows)?;
    if mode == Mode::Extrapolation {
        for (k, r) in runs.iter().enumerate() {
            write_params(out, &built, &format!("params_client{k}.ckpt"), &r.params)?;
        }
    } else {
        write_history(out, &runs[0])?;
        write_params(out, &built, "params.ckpt", &runs[0].params)?;
    }
    for r in &rows {
        let who = r.client.map_or(String::new(), |k| format!(" client {k}"));
        out.say(format!("{:?}{who}: L2 relative error {} (W1 = {})", mode, num(r.l2_rel_error), num(r.w1)).to_lowercase());
    }
    Ok(())
}

/// One sweep row: W1, the requested modes, and the final divergence when
/// both centralized and federated runs are present.
pub fn sweep_point(config: &ExperimentConfig, modes: &[Mode]) -> Result<SweepRow> {
    let built = build_problem(config)?;
    let w1 = heterogeneity_w1(&built.client_points, config.w1_cap, config.seed)?;
    let mut row = SweepRow {
        problem: config.problem,
        n: config.n,
        clients: config.clients,
        seed: config.seed,
        w1,
        centralized: None,
        extrapolation_worst: None,
        extrapolation_mean: None,
        federated: None,
        wd_abs: None,
        wd_rel: None,
        wd_layers: Vec::new(),
    };
    let mut cen_params = None;
    let mut fed_params = None;
    for &mode in modes {
        let runs = train_mode(&built, config, mode)?;
        let errs = runs.iter().map(|r| final_error(&built, r)).collect::<Result<Vec<_>>>()?;
        match mode {
            Mode::Centralized => {
                row.centralized = Some(errs[0]);
                cen_params = Some(runs[0].params.clone());
            }
            Mode::Federated => {
                row.federated = Some(errs[0]);
                fed_params = Some(runs[0].params.clone());
            }
            Mode::Extrapolation => {
                row.extrapolation_worst = errs.iter().copied().reduce(f64::max);
                row.extrapolation_mean = Some(errs.iter().sum::<f64>() / errs.len() as f64);
            }
        }
    }
    if let (Some(f), Some(c)) = (fed_params, cen_params) {
        let e = weight_divergence(config.rounds, &f, &c, &built.problem.layout())?;
        row.wd_abs = Some(e.absolute);
        row.wd_rel = e.relative;
        row.wd_layers = e.per_layer.into_iter().map(|l| LayerColumn { name: l.name, value: l.absolute }).collect();
    }
    Ok(row)
}

fn sweep(config: &ExperimentConfig, n_list: &[usize], modes: &[Mode], out: &mut Out) -> Result<()> {
    if n_list.is_empty() || modes.is_empty() {
        return Err(Error::usage("sweep needs at least one n and one mode"));
    }
    let rows = n_list.iter().map(|&n| sweep_point(&config.with_n(n), modes)).collect::<Result<Vec<_>>>()?;
    write_sweep_rows(out.create("sweep.csv")?, &rows)?;
    for r in &rows {
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), num);
        out.say(format!(
            "n={}: W1 {} centralized {} extrapolation(worst) {} federated {}",
            r.n,
            num(r.w1),
            fmt(r.centralized),
            fmt(r.extrapolation_worst),
            fmt(r.federated)
        ));
    }
    Ok(())
}

/// Final test error per local-epoch count at a fixed iteration budget.
pub fn comm_sweep_rows(config: &ExperimentConfig, local_epochs: &[usize], total_iters: usize) -> Result<Vec<CommSweepRow>> {
    let built = build_problem(config)?;
    let points = communication_sweep(built.problem.as_ref(), local_epochs, total_iters, &config.federation())?;
    Ok(points
        .into_iter()
        .map(|p| CommSweepRow {
            schema_version: SCHEMA_VERSION,
            problem: config.problem,
            n: config.n,
            clients: config.clients,
            seed: config.seed,
            local_epochs: p.local_epochs,
            rounds: p.rounds,
            l2_rel_error: p.test_error,
        })
        .collect())
}

fn comm_sweep(config: &ExperimentConfig, local_epochs: &[usize], total_iters: usize, out: &mut Out) -> Result<()> {
    if local_epochs.is_empty() {
        return Err(Error::usage("communication sweep needs at least one E"));
    }
    let rows = comm_sweep_rows(config, local_epochs, total_iters)?;
    write_comm_rows(out.create("comm_sweep.csv")?, &rows)?;
    for r in &rows {
        out.say(format!("E={} rounds={}: L2 relative error {}", r.local_epochs, r.rounds, num(r.l2_rel_error)));
    }
    Ok(())
}

fn divergence(config: &ExperimentConfig, out: &mut Out) -> Result<()> {
    if config.client_opt != ClientOpt::Sgd {
        return Err(Error::usage(
            "the divergence bound assumes plain gradient steps with a fixed learning rate; rerun with --client-opt sgd",
        ));
    }
    let built = build_problem(config)?;
    let trace = run_divergence(&config.federation(), built.problem.as_ref())?;
    trace.write_csv(out.create("divergence.csv")?)?;
    let report = check_divergence_bound(&trace)?;
    serde_json::to_writer_pretty(out.create("bound.json")?, &report)?;
    let worst = report.rows.iter().filter(|r| r.round > 0).map(|r| r.margin).fold(f64::INFINITY, f64::min);
    out.say(format!(
        "M̂ = {}, {} rounds, smallest margin {}: bound {}",
        num(report.m_hat),
        report.rows.len().saturating_sub(1),
        num(worst),
        if report.satisfied { "holds" } else { "VIOLATED" }
    ));
    if !report.satisfied {
        return Err(Error::numerical("observed divergence exceeds 2ηM̂El"));
    }
    Ok(())
}

fn train_deeponet(config: &ExperimentConfig, dump_data: bool, out: &mut Out) -> Result<()> {
    if config.problem.operator_kind().is_none() {
        return Err(Error::usage(format!("{} is not an operator problem", config.problem)));
    }
    if dump_data {
        let p = build_operator_problem(config)?;
        for (k, c) in p.clients().iter().enumerate() {
            c.write_csv(out.create(&format!("client{k}.csv"))?)?;
        }
        p.test_set().write_csv(out.create("test.csv")?)?;
    }
    run(config, Mode::Federated, out)
}

fn reference(solver: ReferenceSolver, out: &mut Out) -> Result<()> {
    match solver {
        ReferenceSolver::AllenCahn => {
            let report = solve_allen_cahn(AllenCahnParams::default())?;
            report.solution.write_csv(out.create("allen_cahn.csv")?)?;
            out.say(format!(
                "Allen-Cahn: {} nodes x {} snapshots",
                report.solution.xs.len(),
                report.solution.times.len()
            ));
        }
        ReferenceSolver::InverseDr => {
            let (xs, u) = inverse_dr_reference()?;
            let mut w = csv::Writer::from_writer(out.create("inverse_dr.csv")?);
            w.write_record(["x", "u", "k"])?;
            for (x, u) in xs.iter().zip(&u) {
                w.write_record([num(*x), num(*u), num(inverse_dr_k(*x))])?;
            }
            w.flush()?;
            out.say(format!("inverse DR: {} nodes", xs.len()));
        }
    }
    Ok(())
}

fn read_cloud(path: &Path) -> Result<DiscreteDistribution> {
    let shards = read_shards_csv(File::open(path)?)?;
    DiscreteDistribution::uniform(union(&shards).points)
}

/// W1 between the point clouds of two shard CSVs; optionally writes the
/// transport plan as `i,j,mass` rows.
pub fn w1_files(a: &Path, b: &Path, plan: Option<&PathBuf>) -> Result<f64> {
    let (w1, coupling) = emd_w1(&read_cloud(a)?, &read_cloud(b)?)?;
    if let Some(p) = plan {
        let mut w = csv::Writer::from_path(p)?;
        w.write_record(["i", "j", "mass"])?;
        for &(i, j, m) in &coupling.entries {
            if m > 0.0 {
                w.write_record([i.to_string(), j.to_string(), num(m)])?;
            }
        }
        w.flush()?;
    }
    Ok(w1)
}

/// Default config for a problem name, convenient for tests and examples.
pub fn default_config(problem: &str, n: usize, clients: usize) -> Result<ExperimentConfig> {
    Ok(ExperimentConfig::new(ProblemId::from_name(problem)?, n, clients))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(problem: ProblemId, n: usize) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(problem, n, 2);
        c.width = 6;
        c.depth = 1;
        c.rounds = 3;
        c.local_epochs = 2;
        c
    }

    #[test]
    fn partition_gramacy_two_blocks() {
        let dir = tempfile::tempdir().unwrap();
        let o = execute(&Command::Partition { config: tiny(ProblemId::Gramacy, 2) }, dir.path()).unwrap();
        assert!(o.summary[0].contains("[100, 100]"));
        let shards = read_shards_csv(File::open(dir.path().join("shards.csv")).unwrap()).unwrap();
        assert_eq!(shards.iter().map(|s| s.len()).collect::<Vec<_>>(), vec![100, 100]);
        assert!(shards[0].labels.is_some());
        let m = RunManifest::read(&dir.path().join("manifest.json")).unwrap();
        assert_eq!(m.artifacts, vec!["shards.csv", "w1.json"]);
    }

    #[test]
    fn run_extrapolation_rows_per_client() {
        let (rows, runs, _) = run_rows(&tiny(ProblemId::Gramacy, 4), Mode::Extrapolation).unwrap();
        assert_eq!(rows.iter().map(|r| r.client).collect::<Vec<_>>(), vec![Some(0), Some(1)]);
        assert_eq!(runs.len(), 2);
        assert!(rows.iter().all(|r| r.mode == Mode::Extrapolation));
    }

    #[test]
    fn divergence_refuses_adam() {
        let dir = tempfile::tempdir().unwrap();
        let err = execute(&Command::Divergence { config: tiny(ProblemId::Poisson1d, 4) }, dir.path()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("sgd"));
    }

    #[test]
    fn replay_is_bitwise() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let cmd = Command::Sweep { config: tiny(ProblemId::Gramacy, 2), n_list: vec![2, 10], modes: vec![Mode::Centralized, Mode::Federated] };
        execute(&cmd, a.path()).unwrap();
        replay(&a.path().join("manifest.json"), b.path()).unwrap();
        let read = |d: &Path| std::fs::read(d.join("sweep.csv")).unwrap();
        assert_eq!(read(a.path()), read(b.path()));
    }

    #[test]
    fn tampered_manifest_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        execute(&Command::Reference { solver: ReferenceSolver::InverseDr }, dir.path()).unwrap();
        let path = dir.path().join("manifest.json");
        let text = std::fs::read_to_string(&path).unwrap().replace("inverse-dr", "allen-cahn");
        std::fs::write(&path, text).unwrap();
        assert!(RunManifest::read(&path).is_err());
    }
}

//! `mmhev` command-line front end.
//!
//! Every command prints line-delimited JSON on stdout. Exit codes: 0 success,
//! 2 configuration or input error, 3 model/runtime error, 4 partial sweep
//! failure.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use mmhev::drivecycle::{self, DriveCycle};
use mmhev::environment::trace::TraceWriter;
use mmhev::powertrain::synthetic::{self, EfficiencyBowl, WillansEngine};
use mmhev::trainer::{self, ExperimentConfig, Manifest, Policy, TrainMode};
use mmhev::Error;

#[derive(Parser)]
#[command(
    name = "mmhev",
    version,
    about = "Multi-mode PHEV energy management: simulate, train and evaluate DDPG agents"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One greedy rollout with a per-step trace.
    Simulate(SimulateArgs),
    /// Train single- or multi-agent controllers.
    Train(TrainArgs),
    /// Multi-agent training over a grid of independence ratios.
    Sweep(SweepArgs),
    /// Evaluate saved policies at fixed initial SoC values.
    Evaluate(EvaluateArgs),
    /// Render tables and learning curves from existing outputs.
    Report(ReportArgs),
    /// Write a drive cycle as CSV.
    ExportCycle(ExportCycleArgs),
    /// Write the synthetic engine and motor maps as CSV.
    GenMaps(GenMapsArgs),
}

#[derive(Args)]
struct ConfigArg {
    /// Experiment configuration (JSON). Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ConfigArg {
    fn load(&self) -> Result<ExperimentConfig, Error> {
        match &self.config {
            Some(p) => ExperimentConfig::load(p),
            None => Ok(ExperimentConfig::default()),
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Cycle CSV; the evaluation cycle of the configuration when omitted.
    #[arg(long)]
    cycle: Option<PathBuf>,
    /// `zero` or `checkpoint:PATH`.
    #[arg(long, default_value = "zero")]
    policy: String,
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    initial_soc: Option<f64>,
    /// Accepted for interface uniformity; rollouts are deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Single,
    Multi,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    episodes: Option<usize>,
    /// Train only this seed instead of the configured list.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    r_ind: Option<f64>,
    #[arg(long)]
    initial_soc: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long, value_delimiter = ',', default_value = "0,0.2,0.4,0.6,0.8")]
    ratios: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    episodes: Option<usize>,
    /// Maximum number of cells trained concurrently.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Policy checkpoint; repeat to evaluate several (single + multi adds a comparison table).
    #[arg(long, required = true)]
    checkpoint: Vec<PathBuf>,
    #[arg(long)]
    cycle: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    initial_socs: Option<Vec<f64>>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Metrics CSV with raw columns (initial_soc, method, end_soc, fuel_l_per_100km).
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// Sweep or train manifest whose run logs become learning curves.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExportCycleArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Learning-cycle permutation of this episode; canonical order when omitted.
    #[arg(long)]
    episode: Option<u64>,
    /// Permutation seed for `--episode`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenMapsArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    out: PathBuf,
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_input_error() { 2 } else { 3 },
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn emit(v: serde_json::Value) {
    println!("{v}");
}

fn rel(path: &Path, base: &Path) -> String {
    path.strip_prefix(base)
        .unwrap_or(path)
        .display()
        .to_string()
}

fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn load_policy(spec: &str) -> Result<Policy, Error> {
    match spec.split_once(':') {
        None if spec == "zero" => Ok(Policy::Zero),
        Some(("checkpoint", path)) => Policy::load(Path::new(path)),
        _ => Err(Error::Argument(format!(
            "policy must be 'zero' or 'checkpoint:PATH', got '{spec}'"
        ))),
    }
}

fn load_cycle(cfg: &ExperimentConfig, path: &Option<PathBuf>) -> Result<DriveCycle, Error> {
    match path {
        Some(p) => drivecycle::load_cycle(p, cfg.dt),
        None => cfg.evaluation_cycle(),
    }
}

fn simulate(a: SimulateArgs) -> CmdResult {
    let mut cfg = a.config.load()?;
    if let Some(s) = a.initial_soc {
        cfg.initial_soc = s;
        cfg.validate()?;
    }
    let policy = load_policy(&a.policy)?;
    let cycle = load_cycle(&cfg, &a.cycle)?;
    let reward = cfg.reward.resolve(cfg.initial_soc, cfg.r_ind)?;
    let pt = cfg.powertrain()?;
    let summary = match &a.trace {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            let file = File::create(path).map_err(|e| Error::io(path, e))?;
            let mut w = TraceWriter::new(BufWriter::new(file))?;
            let s = trainer::rollout(pt, &cycle, reward, cfg.initial_soc, &policy, Some(&mut w))?;
            w.finish()?;
            s
        }
        None => {
            trainer::rollout::<std::io::Sink>(pt, &cycle, reward, cfg.initial_soc, &policy, None)?
        }
    };
    let fuel_l = if summary.distance_m > 0.0 {
        Some(summary.fuel_l_per_100km()?)
    } else {
        None
    };
    emit(json!({
        "command": "simulate",
        "cycle": cycle.name,
        "policy": policy.method(),
        "steps": summary.steps,
        "distance_m": summary.distance_m,
        "fuel_g": summary.fuel_g,
        "fuel_l_per_100km": fuel_l,
        "soc_initial": summary.soc_initial,
        "soc_end": summary.soc_end,
        "soc_error_pct": summary.soc_error_pct()?,
        "loss_energy_j": summary.loss_energy_j,
        "infeasible_steps": summary.infeasible_steps,
        "terminated_early": summary.terminated_early,
    }));
    Ok(())
}

fn train(a: TrainArgs) -> CmdResult {
    let mut cfg = a.config.load()?;
    if let Some(m) = a.mode {
        cfg.mode = match m {
            ModeArg::Single => TrainMode::Single,
            ModeArg::Multi => TrainMode::Multi,
        };
    }
    if let Some(e) = a.episodes {
        cfg.episodes = e;
    }
    if let Some(s) = a.seed {
        cfg.seeds = vec![s];
    }
    if let Some(r) = a.r_ind {
        cfg.r_ind = r;
    }
    if let Some(s) = a.initial_soc {
        cfg.initial_soc = s;
    }
    cfg.validate()?;
    let mut manifest = Manifest::new("train", &cfg);
    let mut outcomes = Vec::new();
    for &seed in &cfg.seeds {
        let o = trainer::train(&cfg, seed)?;
        let cell = trainer::write_run(
            &a.out,
            &format!("runs/{}_seed_{seed}", cfg.mode.as_str()),
            &cfg,
            &o,
        )?;
        emit(json!({
            "command": "train",
            "mode": cfg.mode.as_str(),
            "seed": seed,
            "r_ind": cfg.r_ind,
            "episodes": cfg.episodes,
            "final_combined_reward": o.log.final_combined_reward(10),
            "files": cell.files,
        }));
        manifest.cells.push(cell);
        outcomes.push(o);
    }
    trainer::write_timing(&a.out, &outcomes.iter().collect::<Vec<_>>())?;
    manifest.write(&a.out)?;
    Ok(())
}

fn sweep(a: SweepArgs) -> CmdResult {
    let mut cfg = a.config.load()?;
    if let Some(s) = a.seeds {
        cfg.seeds = s;
    }
    if let Some(e) = a.episodes {
        cfg.episodes = e;
    }
    cfg.mode = TrainMode::Multi;
    cfg.validate()?;
    let cells = trainer::sweep_rind(&cfg, &a.ratios, a.jobs)?;
    let manifest = trainer::write_sweep(&a.out, &cfg, &cells)?;
    for (cell, entry) in cells.iter().zip(&manifest.cells) {
        emit(json!({
            "command": "sweep",
            "r_ind": entry.r_ind,
            "seed": entry.seed,
            "status": entry.status,
            "error": entry.error,
            "final_combined_reward": cell.outcome.as_ref().ok().map(|o| o.log.final_combined_reward(10)),
        }));
    }
    let failed = manifest.failed_cells();
    if failed > 0 {
        return Err(Failure {
            code: 4,
            message: format!(
                "{failed} of {} sweep cells failed; see manifest.json",
                manifest.cells.len()
            ),
        });
    }
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> CmdResult {
    let mut cfg = a.config.load()?;
    if let Some(s) = a.initial_socs {
        cfg.eval_initial_socs = s;
    }
    cfg.validate()?;
    let cycle = load_cycle(&cfg, &a.cycle)?;
    let pt = cfg.powertrain()?;
    let mut manifest = Manifest::new("evaluate", &cfg);
    let mut by_method: BTreeMap<String, Vec<trainer::MetricsRow>> = BTreeMap::new();
    for path in &a.checkpoint {
        let policy = Policy::load(path)?;
        let rows = trainer::evaluate(
            pt.clone(),
            &policy,
            &cycle,
            &cfg.reward,
            &cfg.eval_initial_socs,
        )?;
        for r in &rows {
            emit(json!({
                "command": "evaluate",
                "checkpoint": path.display().to_string(),
                "initial_soc": r.initial_soc,
                "method": r.method,
                "end_soc": r.end_soc,
                "soc_error_pct": r.soc_error_pct()?,
                "fuel_l_per_100km": r.fuel_l_per_100km,
            }));
        }
        let name = format!("metrics_{}.csv", policy.method());
        if by_method.contains_key(policy.method()) {
            return Err(Error::Argument(format!(
                "two checkpoints of method '{}'",
                policy.method()
            ))
            .into());
        }
        write_text(&a.out.join(&name), &trainer::rows_csv(&rows)?)?;
        manifest
            .outputs
            .insert(format!("metrics_{}", policy.method()), name);
        by_method.insert(policy.method().to_string(), rows);
    }
    if let (Some(s), Some(m)) = (by_method.get("single"), by_method.get("multi")) {
        let table = trainer::compare(s, m)?;
        write_text(&a.out.join("metrics.csv"), &trainer::metrics_csv(&table)?)?;
        write_text(&a.out.join("table.txt"), &trainer::render_table(&table)?)?;
        manifest
            .outputs
            .insert("metrics".into(), "metrics.csv".into());
        manifest.outputs.insert("table".into(), "table.txt".into());
    }
    manifest.write(&a.out)?;
    Ok(())
}

fn report(a: ReportArgs) -> CmdResult {
    if a.metrics.is_none() && a.manifest.is_none() {
        return Err(Error::Argument("report needs --metrics and/or --manifest".into()).into());
    }
    if let Some(path) = &a.metrics {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let rows = trainer::parse_metrics(&text, &path.display().to_string())?;
        let table = trainer::compare_table(&rows)?;
        for c in &table {
            emit(json!({
                "command": "report",
                "initial_soc": c.single.initial_soc,
                "single_end_soc": c.single.end_soc,
                "single_soc_error_pct": c.single.soc_error_pct()?,
                "single_fuel_l_per_100km": c.single.fuel_l_per_100km,
                "multi_end_soc": c.multi.end_soc,
                "multi_soc_error_pct": c.multi.soc_error_pct()?,
                "multi_fuel_l_per_100km": c.multi.fuel_l_per_100km,
                "saving_pct": c.saving_pct()?,
            }));
        }
        if let Some(out) = &a.out {
            write_text(&out.join("table.csv"), &trainer::metrics_csv(&table)?)?;
            write_text(&out.join("table.txt"), &trainer::render_table(&table)?)?;
        }
    }
    if let Some(path) = &a.manifest {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let manifest: Manifest = serde_json::from_str(&text)
            .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut summary = String::from("mode,r_ind,seed,episodes,final10_combined_reward\n");
        for cell in manifest.cells.iter().filter(|c| c.status == "ok") {
            let log_path = base.join(cell.files.get("run_log_json").ok_or_else(|| {
                Error::parse(path.display().to_string(), "cell without run_log_json")
            })?);
            let log_text =
                std::fs::read_to_string(&log_path).map_err(|e| Error::io(&log_path, e))?;
            let log: trainer::RunLog = serde_json::from_str(&log_text)
                .map_err(|e| Error::parse(log_path.display().to_string(), e.to_string()))?;
            let final10 = log.final_combined_reward(10);
            summary.push_str(&format!(
                "{},{},{},{},{final10}\n",
                log.mode.as_str(),
                log.r_ind,
                log.seed,
                log.records.len()
            ));
            let mut curves = Vec::new();
            if let Some(out) = &a.out {
                let stem = format!(
                    "{}_rind_{:.2}_seed_{}",
                    log.mode.as_str(),
                    log.r_ind,
                    log.seed
                );
                let agents: &[usize] = if log.mode == TrainMode::Multi {
                    &[1, 2]
                } else {
                    &[1]
                };
                for &agent in agents {
                    let p = out.join("curves").join(format!("{stem}_agent{agent}.csv"));
                    write_text(&p, &trainer::curve_csv(&log, agent)?)?;
                    curves.push(rel(&p, out));
                }
            }
            emit(json!({
                "command": "report",
                "mode": log.mode.as_str(),
                "r_ind": log.r_ind,
                "seed": log.seed,
                "final10_combined_reward": final10,
                "curves": curves,
            }));
        }
        if let Some(out) = &a.out {
            write_text(&out.join("sweep_summary.csv"), &summary)?;
        }
    }
    Ok(())
}

fn export_cycle(a: ExportCycleArgs) -> CmdResult {
    let cfg = a.config.load()?;
    let cycle = match a.episode {
        Some(ep) => {
            let spec = cfg.composite(a.seed)?;
            drivecycle::build_learning_cycle(&spec, ep)
        }
        None => cfg.evaluation_cycle()?,
    };
    write_text(&a.out, &cycle.to_csv())?;
    emit(json!({
        "command": "export-cycle",
        "name": cycle.name,
        "samples": cycle.len(),
        "duration_s": cycle.duration_s(),
        "distance_m": cycle.distance_m(),
        "out": a.out.display().to_string(),
    }));
    Ok(())
}

fn gen_maps(a: GenMapsArgs) -> CmdResult {
    let cfg = a.config.load()?;
    let v = &cfg.vehicle;
    let willans = WillansEngine::default();
    let fuel = willans.fuel_map(v.engine_speed_range.1, v.eng_torque_max_nm)?;
    let bowl = EfficiencyBowl::default();
    let mg1 = synthetic::default_mg1(v)?;
    let mg2 = synthetic::default_mg2(v)?;
    let files = [
        ("engine_fuel_map.csv", fuel.to_csv(&willans.describe())),
        (
            "mg1_efficiency_map.csv",
            mg1.efficiency_map.to_csv(&bowl.describe(
                "MG1",
                synthetic::MG1_SPEED_MAX_RPM,
                v.mot1_torque_max_nm,
            )),
        ),
        (
            "mg2_efficiency_map.csv",
            mg2.efficiency_map.to_csv(&bowl.describe(
                "MG2",
                synthetic::MG2_SPEED_MAX_RPM,
                v.mot2_torque_max_nm,
            )),
        ),
    ];
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    for (name, text) in files {
        let path = a.out.join(name);
        write_text(&path, &text)?;
        emit(json!({"command": "gen-maps", "file": path.display().to_string()}));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Train(a) => train(a),
        Command::Sweep(a) => sweep(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Report(a) => report(a),
        Command::ExportCycle(a) => export_cycle(a),
        Command::GenMaps(a) => gen_maps(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            emit(json!({"status": "error", "exit_code": f.code, "message": f.message}));
            ExitCode::from(f.code)
        }
    }
}

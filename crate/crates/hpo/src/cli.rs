//! Command-line frontend: space extraction, study execution, metric
//! reports, and the centaur LLM-ratio ablation grid. Every command is a
//! thin shell over the library modules; exit codes are a stable contract
//! (0 success, 1 user/config error, 2 runtime abort).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::centaur::{centaur_report, CentaurConfig, CentaurOptimizer, RATIO_GRID};
use crate::cmaes::{CmaEsOptimizer, DEFAULT_SIGMA0};
use crate::llm::{
    Agent14Optimizer, ChatClient, CodeAgentOptimizer, HttpChatClient, LlamboOptimizer,
    LlamboVariant, LlmEndpointConfig, MockClient, MockKind,
};
use crate::metrics::{aggregate_seeds, diversity, trial_indexed_trace, TRACE_TRIAL_CAP};
use crate::optim::{
    resume_study, run_study, Optimizer, RandomSearch, StudyError, StudySetup,
    SubprocessExecutor, SyntheticExecutor, TrialExecutor,
};
use crate::runner::{load_study, RunnerConfig, StudyLog};
use crate::space::{
    build_search_space, parse_script_hyperparameters, ParamDomain, RangeConfig, SearchSpace,
};
use crate::synthetic::{branin_space, SyntheticObjective, SYNTHETIC_TRIAL_SCRIPT};
use crate::tpe::TpeOptimizer;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// User or configuration problem; exits with code 1.
    #[error("{0}")]
    Config(String),
    /// Runtime abort (runner/optimizer failure); exits with code 2.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

fn study_error(e: StudyError) -> CliError {
    match e {
        StudyError::ResumeMismatch(m) => CliError::Config(format!("resume mismatch: {m}")),
        other => CliError::Runtime(other.to_string()),
    }
}

#[derive(Debug, Parser)]
#[command(name = "hpo", about = "Hyperparameter optimization studies", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract a search space from a training script plus a range sidecar.
    ExtractSpace {
        /// Training script with top-level ALL_CAPS literal assignments.
        #[arg(long)]
        script: PathBuf,
        /// JSON mapping of parameter name to {low, high, log?} or {choices}.
        #[arg(long)]
        ranges: PathBuf,
        /// Where the space definition is written.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one study per seed from a JSON study config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Continue existing study files instead of starting over.
        #[arg(long)]
        resume: bool,
        /// Offline scripted LLM: identity, oracle-sphere, or always-fail.
        #[arg(long, value_name = "NAME")]
        llm_mock: Option<String>,
    },
    /// Summarize every study file in a directory.
    Report {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, value_enum, default_value_t = ReportFormat::Table)]
        format: ReportFormat,
    },
    /// Run the centaur study at several LLM ratios and summarize them.
    AblateRatio {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated ratios in [0,1]; defaults to the standard grid.
        #[arg(long, value_delimiter = ',')]
        ratios: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Table,
    Csv,
}

/// Binary entry point returning the process exit code.
pub fn main_entry() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::ExtractSpace { script, ranges, out } => {
            let table = cmd_extract_space(&script, &ranges, &out)?;
            print!("{table}");
            Ok(())
        }
        Command::Run {
            config,
            resume,
            llm_mock,
        } => cmd_run(&config, resume, llm_mock.as_deref()),
        Command::Report { dir, format } => {
            let text = cmd_report(&dir, format)?;
            print!("{text}");
            Ok(())
        }
        Command::AblateRatio { config, ratios } => {
            let grid = if ratios.is_empty() {
                RATIO_GRID.to_vec()
            } else {
                ratios
            };
            let text = cmd_ablate_ratio(&config, &grid, None)?;
            print!("{text}");
            Ok(())
        }
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

/// Stable serialization of a space definition (pretty JSON + newline).
pub fn space_to_json(space: &SearchSpace) -> String {
    let mut text = serde_json::to_string_pretty(space).expect("space serializes");
    text.push('\n');
    text
}

pub fn space_from_json(text: &str) -> Result<SearchSpace, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid space file: {e}")))
}

/// Human-readable name/kind/range/default table.
pub fn space_table(space: &SearchSpace) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<20} {:<12} {:<28} default",
        "name", "kind", "range"
    );
    for p in &space.params {
        let (kind, range) = match &p.domain {
            ParamDomain::Integer { low, high, log } => (
                if *log { "int (log)" } else { "int" }.to_string(),
                format!("[{low}, {high}]"),
            ),
            ParamDomain::Real { low, high, log } => (
                if *log { "float (log)" } else { "float" }.to_string(),
                format!("[{low}, {high}]"),
            ),
            ParamDomain::Categorical { choices } => {
                ("categorical".to_string(), format!("{{{}}}", choices.join(", ")))
            }
        };
        let _ = writeln!(out, "{:<20} {:<12} {:<28} {}", p.name, kind, range, p.default);
    }
    out
}

/// Extracts hyperparameters from the script, merges the range sidecar,
/// writes the space file, and returns the printed table.
pub fn cmd_extract_space(script: &Path, ranges: &Path, out: &Path) -> Result<String, CliError> {
    let source = read_file(script)?;
    let extracted = parse_script_hyperparameters(&source);
    if extracted.is_empty() {
        eprintln!(
            "warning: no top-level ALL_CAPS literal assignments in {}",
            script.display()
        );
        return Err(CliError::Config(
            "extracted zero hyperparameters".to_string(),
        ));
    }
    let ranges = RangeConfig::from_json(&read_file(ranges)?)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let space =
        build_search_space(&extracted, &ranges).map_err(|e| CliError::Config(e.to_string()))?;
    fs::write(out, space_to_json(&space))
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", out.display())))?;
    Ok(space_table(&space))
}

fn default_penalty() -> f64 {
    crate::DEFAULT_PENALTY
}

fn default_ratio() -> f64 {
    crate::centaur::DEFAULT_LLM_RATIO
}

/// Study configuration file (JSON).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    /// One of: random, cmaes, tpe, agent14, llambo-paper, llambo-optuna,
    /// code-agent, centaur.
    pub method: String,
    /// Space definition file; alternatively `script` + `ranges` extract one.
    #[serde(default)]
    pub space_file: Option<PathBuf>,
    #[serde(default)]
    pub script: Option<PathBuf>,
    #[serde(default)]
    pub ranges: Option<PathBuf>,
    /// Training-time budget; omitted means unlimited.
    #[serde(default)]
    pub budget_seconds: Option<f64>,
    #[serde(default)]
    pub max_trials: Option<u64>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_penalty")]
    pub penalty: f64,
    pub objective: ObjectiveSpec,
    #[serde(default)]
    pub endpoint: Option<LlmEndpointConfig>,
    /// Scripted offline LLM name; the run --llm-mock flag overrides this.
    #[serde(default)]
    pub llm_mock: Option<String>,
    /// Fraction of centaur trials delegated to the LLM.
    #[serde(default = "default_ratio")]
    pub llm_ratio: f64,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ObjectiveSpec {
    /// Built-in objective by name: sphere, infeasible_halfspace, branin.
    Synthetic(String),
    /// Real trials: the base script is rewritten per configuration and run
    /// through the sandboxed subprocess runner.
    Subprocess {
        runner: RunnerConfig,
        base_script: PathBuf,
    },
}

pub fn load_config(path: &Path) -> Result<StudyConfig, CliError> {
    let cfg: StudyConfig = serde_json::from_str(&read_file(path)?)
        .map_err(|e| CliError::Config(format!("invalid study config: {e}")))?;
    if cfg.seeds.is_empty() {
        return Err(CliError::Config("seeds must be non-empty".to_string()));
    }
    if !(0.0..=1.0).contains(&cfg.llm_ratio) {
        return Err(CliError::Config(format!(
            "llm_ratio {} outside [0, 1]",
            cfg.llm_ratio
        )));
    }
    Ok(cfg)
}

/// Paths in the config are resolved relative to the config file itself.
fn resolve(config_path: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        config_path.parent().unwrap_or(Path::new(".")).join(p)
    }
}

fn load_space(cfg: &StudyConfig, config_path: &Path) -> Result<SearchSpace, CliError> {
    if let Some(f) = &cfg.space_file {
        return space_from_json(&read_file(&resolve(config_path, f))?);
    }
    if let (Some(script), Some(ranges)) = (&cfg.script, &cfg.ranges) {
        let source = read_file(&resolve(config_path, script))?;
        let extracted = parse_script_hyperparameters(&source);
        if extracted.is_empty() {
            return Err(CliError::Config(
                "extracted zero hyperparameters".to_string(),
            ));
        }
        let ranges = RangeConfig::from_json(&read_file(&resolve(config_path, ranges))?)
            .map_err(|e| CliError::Config(e.to_string()))?;
        return build_search_space(&extracted, &ranges)
            .map_err(|e| CliError::Config(e.to_string()));
    }
    // no explicit space: the synthetic objectives carry a natural one
    if let ObjectiveSpec::Synthetic(name) = &cfg.objective {
        return match SyntheticObjective::from_name(name) {
            Some(SyntheticObjective::Branin) => Ok(branin_space()),
            Some(_) => Ok(SearchSpace::preset()),
            None => Err(CliError::Config(format!("unknown objective '{name}'"))),
        };
    }
    Err(CliError::Config(
        "config needs space_file or script + ranges".to_string(),
    ))
}

fn make_client(
    cfg: &StudyConfig,
    mock_flag: Option<&str>,
    space: &SearchSpace,
) -> Result<Box<dyn ChatClient>, CliError> {
    let mock = mock_flag.or(cfg.llm_mock.as_deref());
    if let Some(name) = mock {
        let kind = MockKind::from_name(name).ok_or_else(|| {
            CliError::Config(format!(
                "unknown mock '{name}' (expected identity, oracle-sphere, or always-fail)"
            ))
        })?;
        return Ok(Box::new(MockClient::new(kind, space.clone())));
    }
    match &cfg.endpoint {
        Some(ep) => Ok(Box::new(HttpChatClient::new(ep.clone()))),
        None => Err(CliError::Config(format!(
            "method '{}' needs an endpoint or --llm-mock",
            cfg.method
        ))),
    }
}

fn base_source(cfg: &StudyConfig, config_path: &Path) -> Result<String, CliError> {
    match &cfg.objective {
        ObjectiveSpec::Subprocess { base_script, .. } => {
            read_file(&resolve(config_path, base_script))
        }
        ObjectiveSpec::Synthetic(_) => Ok(SYNTHETIC_TRIAL_SCRIPT.to_string()),
    }
}

pub fn build_optimizer(
    cfg: &StudyConfig,
    space: &SearchSpace,
    seed: u64,
    mock_flag: Option<&str>,
    config_path: &Path,
) -> Result<Box<dyn Optimizer>, CliError> {
    Ok(match cfg.method.as_str() {
        "random" => Box::new(RandomSearch::new(space.clone(), seed)),
        "cmaes" => Box::new(CmaEsOptimizer::new(space.clone(), seed, DEFAULT_SIGMA0)),
        "tpe" => Box::new(TpeOptimizer::new(space.clone(), seed)),
        "agent14" => Box::new(Agent14Optimizer::new(
            space.clone(),
            seed,
            make_client(cfg, mock_flag, space)?,
        )),
        "llambo-paper" => Box::new(LlamboOptimizer::new(
            space.clone(),
            seed,
            make_client(cfg, mock_flag, space)?,
            LlamboVariant::Paper,
        )),
        "llambo-optuna" => Box::new(LlamboOptimizer::new(
            space.clone(),
            seed,
            make_client(cfg, mock_flag, space)?,
            LlamboVariant::Optuna,
        )),
        "code-agent" => Box::new(CodeAgentOptimizer::new(
            space.clone(),
            make_client(cfg, mock_flag, space)?,
            base_source(cfg, config_path)?,
        )),
        "centaur" => Box::new(CentaurOptimizer::new(
            space.clone(),
            seed,
            make_client(cfg, mock_flag, space)?,
            CentaurConfig::with_ratio(cfg.llm_ratio),
        )),
        other => return Err(CliError::Config(format!("unknown method '{other}'"))),
    })
}

fn make_executor(
    cfg: &StudyConfig,
    space: &SearchSpace,
    config_path: &Path,
) -> Result<Box<dyn TrialExecutor>, CliError> {
    match &cfg.objective {
        ObjectiveSpec::Synthetic(name) => {
            let objective = SyntheticObjective::from_name(name)
                .ok_or_else(|| CliError::Config(format!("unknown objective '{name}'")))?;
            Ok(Box::new(SyntheticExecutor::new(objective, space.clone())))
        }
        ObjectiveSpec::Subprocess {
            runner,
            base_script,
        } => Ok(Box::new(SubprocessExecutor {
            runner: runner.clone(),
            base_source: read_file(&resolve(config_path, base_script))?,
        })),
    }
}

fn study_path(out_dir: &Path, method: &str, seed: u64, ratio: Option<f64>) -> PathBuf {
    match ratio {
        Some(r) => out_dir.join(format!("{method}_r{r}_seed{seed}.study")),
        None => out_dir.join(format!("{method}_seed{seed}.study")),
    }
}

fn run_one_seed(
    cfg: &StudyConfig,
    space: &SearchSpace,
    seed: u64,
    resume: bool,
    mock_flag: Option<&str>,
    config_path: &Path,
    ratio: Option<f64>,
) -> Result<StudyLog, CliError> {
    let mut cfg = cfg.clone();
    if let Some(r) = ratio {
        cfg.llm_ratio = r;
    }
    let mut optimizer = build_optimizer(&cfg, space, seed, mock_flag, config_path)?;
    let mut executor = make_executor(&cfg, space, config_path)?;
    let out_path = study_path(&cfg.out_dir, &cfg.method, seed, ratio);
    let setup = StudySetup {
        method: cfg.method.clone(),
        seed,
        budget_seconds: cfg.budget_seconds.unwrap_or(f64::INFINITY),
        max_trials: cfg.max_trials,
        penalty: cfg.penalty,
        out_path: Some(out_path.clone()),
        patch_dir: Some(cfg.out_dir.join(format!("patches_seed{seed}"))),
        progress: true,
    };
    let result = if resume && out_path.exists() {
        resume_study(
            optimizer.as_mut(),
            executor.as_mut(),
            space,
            &setup,
        )
    } else {
        run_study(optimizer.as_mut(), executor.as_mut(), space, &setup)
    };
    result.map_err(study_error)
}

pub fn cmd_run(config_path: &Path, resume: bool, mock_flag: Option<&str>) -> Result<(), CliError> {
    let cfg = load_config(config_path)?;
    let space = load_space(&cfg, config_path)?;
    fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", cfg.out_dir.display())))?;
    for &seed in &cfg.seeds {
        println!("== {} seed {seed} ==", cfg.method);
        let log = run_one_seed(&cfg, &space, seed, resume, mock_flag, config_path, None)?;
        let best = log
            .records
            .iter()
            .map(|r| r.objective)
            .fold(f64::INFINITY, f64::min);
        println!(
            "seed {seed}: {} trials, best {best:.6}, train {:.1}s",
            log.records.len(),
            log.cumulative_train_seconds
        );
    }
    Ok(())
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// One Table-style summary row per method.
#[derive(Debug, Clone)]
pub struct ReportRow {
    pub method: String,
    pub n_seeds: usize,
    pub trials_mean: f64,
    pub trials_std: f64,
    pub best_mean: f64,
    pub best_std: f64,
    pub oom_pct: f64,
    pub spread: f64,
    pub pairwise: f64,
    pub step: f64,
    pub cells: f64,
}

/// Loads every `*.study` file in the directory, groups seeds by method, and
/// computes the summary rows plus per-method convergence curves.
pub fn summarize_dir(dir: &Path) -> Result<Vec<ReportRow>, CliError> {
    let logs = load_dir(dir)?;
    let mut rows = Vec::new();
    for (method, logs) in &logs {
        let space = &logs[0].header.space;
        let trials: Vec<f64> = logs.iter().map(|l| l.records.len() as f64).collect();
        let bests: Vec<f64> = logs
            .iter()
            .map(|l| {
                l.records
                    .iter()
                    .map(|r| r.objective)
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let mut oom = Vec::new();
        let mut spread = Vec::new();
        let mut pairwise = Vec::new();
        let mut step = Vec::new();
        let mut cells = Vec::new();
        for log in logs {
            let d = diversity(log, space).map_err(|e| CliError::Config(e.to_string()))?;
            oom.push(d.oom_rate * 100.0);
            spread.push(d.spread);
            pairwise.push(d.pairwise.unwrap_or(0.0));
            step.push(d.step.unwrap_or(0.0));
            cells.push(d.cells as f64);
        }
        let (trials_mean, trials_std) = mean_std(&trials);
        let (best_mean, best_std) = mean_std(&bests);
        rows.push(ReportRow {
            method: method.clone(),
            n_seeds: logs.len(),
            trials_mean,
            trials_std,
            best_mean,
            best_std,
            oom_pct: mean_std(&oom).0,
            spread: mean_std(&spread).0,
            pairwise: mean_std(&pairwise).0,
            step: mean_std(&step).0,
            cells: mean_std(&cells).0,
        });
    }
    Ok(rows)
}

fn load_dir(dir: &Path) -> Result<BTreeMap<String, Vec<StudyLog>>, CliError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "study"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Config(format!(
            "no .study files in {}",
            dir.display()
        )));
    }
    let mut by_method: BTreeMap<String, Vec<StudyLog>> = BTreeMap::new();
    let mut digest: Option<String> = None;
    for path in &paths {
        let log = load_study(path).map_err(|e| {
            CliError::Config(format!("cannot load {}: {e}", path.display()))
        })?;
        match &digest {
            None => digest = Some(log.header.space_digest.clone()),
            Some(d) if *d != log.header.space_digest => {
                return Err(CliError::Config(format!(
                    "mixed space digests: {} does not match the other studies",
                    path.display()
                )))
            }
            Some(_) => {}
        }
        by_method
            .entry(log.header.method.clone())
            .or_default()
            .push(log);
    }
    Ok(by_method)
}

fn format_rows(rows: &[ReportRow], format: ReportFormat) -> String {
    let mut out = String::new();
    match format {
        ReportFormat::Table => {
            let _ = writeln!(
                out,
                "{:<14} {:>5} {:>16} {:>22} {:>6} {:>8} {:>9} {:>8} {:>7}",
                "method", "seeds", "trials", "best", "oom%", "spread", "pairwise", "step", "cells"
            );
            for r in rows {
                let _ = writeln!(
                    out,
                    "{:<14} {:>5} {:>16} {:>22} {:>6.1} {:>8.4} {:>9.4} {:>8.4} {:>7.1}",
                    r.method,
                    r.n_seeds,
                    format!("{:.1} ± {:.1}", r.trials_mean, r.trials_std),
                    format!("{:.6} ± {:.6}", r.best_mean, r.best_std),
                    r.oom_pct,
                    r.spread,
                    r.pairwise,
                    r.step,
                    r.cells
                );
            }
        }
        ReportFormat::Csv => {
            let _ = writeln!(
                out,
                "method,seeds,trials_mean,trials_std,best_mean,best_std,oom_pct,spread,pairwise,step,cells"
            );
            for r in rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    r.method,
                    r.n_seeds,
                    r.trials_mean,
                    r.trials_std,
                    r.best_mean,
                    r.best_std,
                    r.oom_pct,
                    r.spread,
                    r.pairwise,
                    r.step,
                    r.cells
                );
            }
        }
    }
    out
}

/// Summary table plus per-method curve files written next to the studies:
/// `{method}_curve_time.csv` (train-time grid) and `{method}_curve_trials.csv`
/// (trial-indexed, capped).
pub fn cmd_report(dir: &Path, format: ReportFormat) -> Result<String, CliError> {
    let rows = summarize_dir(dir)?;
    let logs = load_dir(dir)?;
    for (method, logs) in &logs {
        let refs: Vec<&StudyLog> = logs.iter().collect();
        let curve =
            aggregate_seeds(&refs).map_err(|e| CliError::Config(e.to_string()))?;
        let mut text = String::from("train_seconds,mean_best,std_best\n");
        for ((t, m), s) in curve
            .grid
            .iter()
            .zip(&curve.mean_best)
            .zip(&curve.std_best)
        {
            let _ = writeln!(text, "{t},{m},{s}");
        }
        fs::write(dir.join(format!("{method}_curve_time.csv")), text)
            .map_err(|e| CliError::Runtime(e.to_string()))?;

        let traces: Vec<Vec<f64>> = logs
            .iter()
            .map(|l| {
                trial_indexed_trace(l, TRACE_TRIAL_CAP)
                    .iter()
                    .map(|p| p.best_so_far)
                    .collect()
            })
            .collect();
        let cap = traces.iter().map(Vec::len).max().unwrap_or(0);
        let mut text = String::from("trial,mean_best,std_best\n");
        for i in 0..cap {
            // shorter seeds carry their final best forward
            let at: Vec<f64> = traces
                .iter()
                .filter(|t| !t.is_empty())
                .map(|t| t[i.min(t.len() - 1)])
                .collect();
            let (m, s) = mean_std(&at);
            let _ = writeln!(text, "{},{m},{s}", i + 1);
        }
        fs::write(dir.join(format!("{method}_curve_trials.csv")), text)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    Ok(format_rows(&rows, format))
}

/// Runs the centaur config once per ratio and seed and returns the ablation
/// summary (best objective, LLM-turn fraction, override rate per ratio).
pub fn cmd_ablate_ratio(
    config_path: &Path,
    ratios: &[f64],
    mock_flag: Option<&str>,
) -> Result<String, CliError> {
    let cfg = load_config(config_path)?;
    if cfg.method != "centaur" {
        return Err(CliError::Config(format!(
            "ablate-ratio needs method centaur, got '{}'",
            cfg.method
        )));
    }
    for &r in ratios {
        if !(0.0..=1.0).contains(&r) {
            return Err(CliError::Config(format!("ratio {r} outside [0, 1]")));
        }
    }
    let space = load_space(&cfg, config_path)?;
    fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", cfg.out_dir.display())))?;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<8} {:>22} {:>10} {:>10}",
        "ratio", "best", "llm_turns", "overrides"
    );
    for &ratio in ratios {
        let mut bests = Vec::new();
        let mut llm_fractions = Vec::new();
        let mut override_rates = Vec::new();
        for &seed in &cfg.seeds {
            let log =
                run_one_seed(&cfg, &space, seed, false, mock_flag, config_path, Some(ratio))?;
            bests.push(
                log.records
                    .iter()
                    .map(|r| r.objective)
                    .fold(f64::INFINITY, f64::min),
            );
            let report = centaur_report(&log);
            llm_fractions.push(report.llm_turn_fraction);
            override_rates.push(report.override_rate);
        }
        let (best_mean, best_std) = mean_std(&bests);
        let _ = writeln!(
            out,
            "{:<8} {:>22} {:>10.3} {:>10.3}",
            ratio,
            format!("{best_mean:.6} ± {best_std:.6}"),
            mean_std(&llm_fractions).0,
            mean_std(&override_rates).0
        );
    }
    Ok(out)
}

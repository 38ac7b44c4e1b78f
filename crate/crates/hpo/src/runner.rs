//! Trial materialization, sandboxed subprocess execution, failure
//! classification, penalty application, and append-only study persistence.
//!
//! A trial communicates its result through a single JSON file whose path is
//! passed via the `HPO_RESULT_FILE` environment variable; stdout/stderr are
//! captured for diagnostics only. Study files are JSON lines: one header
//! line followed by one line per trial, append-only.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::Digest;

use crate::space::{hex_string, Configuration, SearchSpace};

#[derive(Debug, thiserror::Error)]
pub enum RunnerError {
    #[error("no assignment for {0}")]
    NoAssignment(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt study file: {0}")]
    Corrupt(String),
    #[error("study header mismatch: {0}")]
    HeaderMismatch(String),
    #[error("record violates invariants: {0}")]
    BadRecord(String),
}

/// Terminal classification of one trial. Every subprocess termination maps
/// to exactly one of these.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Ok,
    Oom,
    RuntimeError,
    Timeout,
}

impl TrialStatus {
    pub fn is_ok(self) -> bool {
        self == TrialStatus::Ok
    }
}

/// Who produced the evaluated proposal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProposalSource {
    Classical,
    Llm,
    Random,
    Resume,
}

/// What was evaluated: a fixed-space configuration or a code edit, stored
/// as a content hash plus the path of the persisted source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialPayload {
    Config(Configuration),
    Code { sha256: String, patch_path: String },
}

/// One evaluated trial as persisted in the study file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: u64,
    pub method: String,
    pub seed: u64,
    pub proposal_source: ProposalSource,
    pub payload: TrialPayload,
    pub status: TrialStatus,
    pub objective: f64,
    pub train_seconds: f64,
    pub started_at: f64,
    pub ended_at: f64,
    /// For LLM turns: whether the parsed reply differed from the proposal
    /// the model was shown.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overridden: Option<bool>,
}

impl TrialRecord {
    fn check(&self, penalty: f64) -> Result<(), RunnerError> {
        match self.status {
            TrialStatus::Ok => {
                if !(self.objective.is_finite() && self.objective < penalty) {
                    return Err(RunnerError::BadRecord(format!(
                        "trial {}: ok status with objective {}",
                        self.trial_id, self.objective
                    )));
                }
            }
            _ => {
                if self.objective != penalty {
                    return Err(RunnerError::BadRecord(format!(
                        "trial {}: failed status with objective {} != penalty {}",
                        self.trial_id, self.objective, penalty
                    )));
                }
            }
        }
        if self.train_seconds < 0.0 {
            return Err(RunnerError::BadRecord(format!(
                "trial {}: negative train_seconds",
                self.trial_id
            )));
        }
        Ok(())
    }
}

/// Study file header, written as the first line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyHeader {
    pub method: String,
    pub seed: u64,
    pub space_digest: String,
    /// Wall-clock training budget; unlimited budgets are stored as JSON null.
    #[serde(with = "budget_serde")]
    pub budget_seconds: f64,
    pub penalty: f64,
    pub max_trials: Option<u64>,
    pub created_at: f64,
    /// Full space definition, persisted so reports and resumes can decode
    /// the log without a separate space file.
    pub space: SearchSpace,
}

mod budget_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Append-only trial history of one study.
#[derive(Debug, Clone)]
pub struct StudyLog {
    pub header: StudyHeader,
    pub records: Vec<TrialRecord>,
    pub cumulative_train_seconds: f64,
}

/// Serialized shape of a record's digest-relevant fields. Method, proposal
/// source, override flags, and timestamps are excluded so that runs that
/// evaluate the same trial sequence compare equal.
#[derive(Serialize)]
struct DigestFields<'a> {
    trial_id: u64,
    payload: &'a TrialPayload,
    status: TrialStatus,
    objective: f64,
    train_seconds: f64,
}

impl StudyLog {
    pub fn new(header: StudyHeader) -> Self {
        Self {
            header,
            records: Vec::new(),
            cumulative_train_seconds: 0.0,
        }
    }

    /// Appends after checking contiguity and the penalty-coupling invariants.
    pub fn append(&mut self, record: TrialRecord) -> Result<(), RunnerError> {
        let expected = self.records.len() as u64 + 1;
        if record.trial_id != expected {
            return Err(RunnerError::Corrupt(format!(
                "trial id {} where {} expected",
                record.trial_id, expected
            )));
        }
        record.check(self.header.penalty)?;
        self.cumulative_train_seconds += record.train_seconds;
        self.records.push(record);
        Ok(())
    }

    pub fn budget_remaining(&self, budget_seconds: f64) -> f64 {
        budget_seconds - self.cumulative_train_seconds
    }

    /// Content digest over seed, space digest, and each record's trial id,
    /// payload, status, objective, and train seconds.
    pub fn content_digest(&self) -> String {
        let mut h = sha2::Sha256::new();
        h.update(self.header.seed.to_le_bytes());
        h.update(self.header.space_digest.as_bytes());
        for r in &self.records {
            let fields = DigestFields {
                trial_id: r.trial_id,
                payload: &r.payload,
                status: r.status,
                objective: r.objective,
                train_seconds: r.train_seconds,
            };
            h.update(serde_json::to_vec(&fields).expect("record serializes"));
            h.update(b"\n");
        }
        hex_string(&h.finalize())
    }

    pub fn save(&self, path: &Path) -> Result<(), RunnerError> {
        let mut writer = StudyWriter::create(path, self.header.clone())?;
        for r in &self.records {
            writer.append(r)?;
        }
        Ok(())
    }
}

/// Incremental study file writer; flushes after every record so aborted
/// runs leave a loadable prefix behind.
pub struct StudyWriter {
    file: fs::File,
}

impl StudyWriter {
    pub fn create(path: &Path, header: StudyHeader) -> Result<Self, RunnerError> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let mut file = fs::File::create(path)?;
        serde_json::to_writer(&mut file, &header).map_err(io_err)?;
        file.write_all(b"\n")?;
        file.flush()?;
        Ok(Self { file })
    }

    pub fn open_append(path: &Path) -> Result<Self, RunnerError> {
        let file = fs::OpenOptions::new().append(true).open(path)?;
        Ok(Self { file })
    }

    pub fn append(&mut self, record: &TrialRecord) -> Result<(), RunnerError> {
        serde_json::to_writer(&mut self.file, record).map_err(io_err)?;
        self.file.write_all(b"\n")?;
        self.file.flush()?;
        Ok(())
    }
}

fn io_err(e: serde_json::Error) -> RunnerError {
    RunnerError::Corrupt(e.to_string())
}

/// Reconstructs a study log, rejecting id gaps and invariant violations.
pub fn load_study(path: &Path) -> Result<StudyLog, RunnerError> {
    let file = fs::File::open(path)?;
    let mut lines = std::io::BufReader::new(file).lines();
    let header_line = lines
        .next()
        .ok_or_else(|| RunnerError::Corrupt("empty study file".to_string()))??;
    let header: StudyHeader = serde_json::from_str(&header_line)
        .map_err(|e| RunnerError::Corrupt(format!("header: {e}")))?;
    let mut log = StudyLog::new(header);
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: TrialRecord =
            serde_json::from_str(&line).map_err(|e| RunnerError::Corrupt(format!("record: {e}")))?;
        log.append(record)?;
    }
    Ok(log)
}

/// Returns `base_source` with each assignment matching a config parameter
/// rewritten to that parameter's literal; every other byte is preserved.
pub fn materialize_trial_script(
    base_source: &str,
    config: &Configuration,
) -> Result<String, RunnerError> {
    let mut seen: BTreeMap<&str, bool> =
        config.values.keys().map(|k| (k.as_str(), false)).collect();
    let mut out = String::with_capacity(base_source.len());
    for segment in split_keep_newlines(base_source) {
        let (line, newline) = segment;
        out.push_str(&rewrite_line(line, config, &mut seen));
        out.push_str(newline);
    }
    for (name, found) in seen {
        if !found {
            return Err(RunnerError::NoAssignment(name.to_string()));
        }
    }
    Ok(out)
}

fn split_keep_newlines(text: &str) -> Vec<(&str, &str)> {
    let mut out = Vec::new();
    let mut rest = text;
    while !rest.is_empty() {
        match rest.find('\n') {
            Some(i) => {
                out.push((&rest[..i], "\n"));
                rest = &rest[i + 1..];
            }
            None => {
                out.push((rest, ""));
                rest = "";
            }
        }
    }
    out
}

/// Replaces the literal span of a matching top-level assignment, leaving
/// spacing and trailing comments untouched.
fn rewrite_line<'a>(
    line: &'a str,
    config: &Configuration,
    seen: &mut BTreeMap<&str, bool>,
) -> String {
    let Some((name, span)) = literal_span(line) else {
        return line.to_string();
    };
    let Some(value) = config.values.get(name) else {
        return line.to_string();
    };
    if let Some(flag) = seen.get_mut(name) {
        *flag = true;
    }
    format!("{}{}{}", &line[..span.0], value.to_literal(), &line[span.1..])
}

/// Byte span of the literal in a `NAME = literal` line, if the line is a
/// top-level ALL_CAPS literal assignment.
fn literal_span(line: &str) -> Option<(&str, (usize, usize))> {
    let first = line.bytes().next()?;
    if !first.is_ascii_uppercase() {
        return None;
    }
    let name_end = line
        .find(|c: char| !(c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_'))
        .unwrap_or(line.len());
    let name = &line[..name_end];
    let after_name = &line[name_end..];
    let eq = after_name.find('=')?;
    if !after_name[..eq].trim().is_empty() || after_name[eq + 1..].starts_with('=') {
        return None;
    }
    let rhs_offset = name_end + eq + 1;
    let rhs = &line[rhs_offset..];
    let lit_start_in_rhs = rhs.len() - rhs.trim_start().len();
    let lit = rhs.trim_start();
    let lit_len = if let Some(quote) = lit.chars().next().filter(|c| *c == '"' || *c == '\'') {
        let close = lit[1..].find(quote)? + 2;
        let rest = lit[close..].trim();
        if !(rest.is_empty() || rest.starts_with('#')) {
            return None;
        }
        close
    } else {
        let value_part = lit.split('#').next().unwrap_or("").trim_end();
        if value_part.is_empty()
            || !(value_part.parse::<i64>().is_ok() || value_part.parse::<f64>().is_ok())
        {
            return None;
        }
        value_part.len()
    };
    let start = rhs_offset + lit_start_in_rhs;
    Some((name, (start, start + lit_len)))
}

/// Resource limits for one trial.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialLimits {
    pub wall_timeout_seconds: f64,
    pub memory_limit_bytes: u64,
    pub workdir: PathBuf,
}

/// Subprocess runner configuration. The command template is expanded with
/// `{script}`, `{workdir}`, `{result_file}`, and `{memory_limit}` and run
/// through `sh -c`; a hard memory ceiling can be imposed in the template
/// (e.g. via `ulimit`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunnerConfig {
    pub command_template: String,
    pub limits: TrialLimits,
    #[serde(default = "default_oom_exit_codes")]
    pub oom_exit_codes: Vec<i32>,
    #[serde(default = "default_oom_stderr_patterns")]
    pub oom_stderr_patterns: Vec<String>,
}

fn default_oom_exit_codes() -> Vec<i32> {
    // 137 is the shell's encoding of kill-on-memory (SIGKILL).
    vec![137]
}

fn default_oom_stderr_patterns() -> Vec<String> {
    vec!["out of memory".to_string(), "OOM".to_string()]
}

/// Raw outcome of one subprocess trial, before penalty application.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub status: TrialStatus,
    pub objective: Option<f64>,
    pub train_seconds: f64,
    pub stdout: String,
    pub stderr: String,
}

/// Result file schema the trial writes to `$HPO_RESULT_FILE`.
#[derive(Debug, Deserialize)]
struct ResultFile {
    status: String,
    #[serde(default)]
    objective: Option<f64>,
    #[serde(default)]
    train_seconds: Option<f64>,
}

impl RunnerConfig {
    /// Writes the script into the workdir, launches the configured command
    /// under the wall timeout, and classifies the termination.
    pub fn execute_trial(
        &self,
        script: &str,
        trial_id: u64,
        seed: u64,
        extra_env: &BTreeMap<String, String>,
    ) -> Result<TrialOutcome, RunnerError> {
        let workdir = &self.limits.workdir;
        fs::create_dir_all(workdir)?;
        let script_path = workdir.join(format!("trial_{trial_id}.py"));
        let result_path = workdir.join(format!("result_{trial_id}.json"));
        fs::write(&script_path, script)?;
        let _ = fs::remove_file(&result_path);

        let command = self
            .command_template
            .replace("{script}", &script_path.to_string_lossy())
            .replace("{workdir}", &workdir.to_string_lossy())
            .replace("{result_file}", &result_path.to_string_lossy())
            .replace("{memory_limit}", &self.limits.memory_limit_bytes.to_string());

        let stdout_path = workdir.join(format!("stdout_{trial_id}.log"));
        let stderr_path = workdir.join(format!("stderr_{trial_id}.log"));
        let mut cmd = Command::new("sh");
        cmd.arg("-c")
            .arg(&command)
            .current_dir(workdir)
            .env("HPO_RESULT_FILE", &result_path)
            .env("HPO_TRIAL_SEED", seed.to_string())
            .stdin(Stdio::null())
            .stdout(Stdio::from(fs::File::create(&stdout_path)?))
            .stderr(Stdio::from(fs::File::create(&stderr_path)?));
        for (k, v) in extra_env {
            cmd.env(k, v);
        }

        let started = Instant::now();
        let mut child = cmd.spawn()?;
        let deadline = Duration::from_secs_f64(self.limits.wall_timeout_seconds);
        let mut timed_out = false;
        let exit = loop {
            if let Some(status) = child.try_wait()? {
                break status;
            }
            if started.elapsed() >= deadline {
                timed_out = true;
                let _ = child.kill();
                break child.wait()?;
            }
            std::thread::sleep(Duration::from_millis(5));
        };
        let wall = started.elapsed().as_secs_f64();
        let stdout = fs::read_to_string(&stdout_path).unwrap_or_default();
        let stderr = fs::read_to_string(&stderr_path).unwrap_or_default();

        if timed_out {
            return Ok(TrialOutcome {
                status: TrialStatus::Timeout,
                objective: None,
                train_seconds: wall,
                stdout,
                stderr,
            });
        }

        if let Ok(text) = fs::read_to_string(&result_path) {
            if let Ok(result) = serde_json::from_str::<ResultFile>(&text) {
                let train_seconds = result.train_seconds.unwrap_or(wall);
                let status = match result.status.as_str() {
                    "ok" if result.objective.map_or(false, f64::is_finite) => TrialStatus::Ok,
                    "ok" => TrialStatus::RuntimeError,
                    "oom" => TrialStatus::Oom,
                    _ => TrialStatus::RuntimeError,
                };
                let objective = if status == TrialStatus::Ok {
                    result.objective
                } else {
                    None
                };
                return Ok(TrialOutcome {
                    status,
                    objective,
                    train_seconds,
                    stdout,
                    stderr,
                });
            }
        }

        let oom = exit_signals_oom(&exit, &self.oom_exit_codes)
            || self
                .oom_stderr_patterns
                .iter()
                .any(|p| stderr.contains(p.as_str()));
        Ok(TrialOutcome {
            status: if oom {
                TrialStatus::Oom
            } else {
                TrialStatus::RuntimeError
            },
            objective: None,
            train_seconds: wall,
            stdout,
            stderr,
        })
    }
}

#[cfg(unix)]
fn exit_signals_oom(exit: &std::process::ExitStatus, oom_codes: &[i32]) -> bool {
    use std::os::unix::process::ExitStatusExt;
    if exit.signal() == Some(9) {
        return true;
    }
    exit.code().map_or(false, |c| oom_codes.contains(&c))
}

#[cfg(not(unix))]
fn exit_signals_oom(exit: &std::process::ExitStatus, oom_codes: &[i32]) -> bool {
    exit.code().map_or(false, |c| oom_codes.contains(&c))
}

/// Ok outcomes keep their objective; every failure maps to the penalty.
pub fn apply_penalty(outcome: &TrialOutcome, penalty: f64) -> f64 {
    match outcome.status {
        TrialStatus::Ok => outcome.objective.expect("ok outcome carries objective"),
        _ => penalty,
    }
}

pub fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Convenience header constructor capturing the space digest.
pub fn study_header(
    method: &str,
    seed: u64,
    space: &SearchSpace,
    budget_seconds: f64,
    penalty: f64,
    max_trials: Option<u64>,
) -> StudyHeader {
    StudyHeader {
        method: method.to_string(),
        seed,
        space_digest: space.digest(),
        budget_seconds,
        penalty,
        max_trials,
        created_at: unix_now(),
        space: space.clone(),
    }
}

//! The ask/tell optimizer contract, seeded RNG streams, the random-search
//! baseline, and the sequential study loop with resume support.

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_chacha::rand_core::SeedableRng;
use sha2::Digest;

use crate::runner::{
    apply_penalty, load_study, study_header, unix_now, ProposalSource, RunnerError, StudyLog,
    StudyWriter, TrialOutcome, TrialPayload, TrialRecord, TrialStatus,
};
use crate::space::{hex_string, Configuration, SearchSpace, UnitVector};

#[derive(Debug, thiserror::Error)]
pub enum OptimError {
    #[error("protocol error: {0}")]
    Protocol(String),
}

#[derive(Debug, thiserror::Error)]
pub enum StudyError {
    #[error(transparent)]
    Runner(#[from] RunnerError),
    #[error(transparent)]
    Optim(#[from] OptimError),
    #[error("resume mismatch: {0}")]
    ResumeMismatch(String),
}

/// What an optimizer proposes for the next trial.
#[derive(Debug, Clone, PartialEq)]
pub enum ProposalPayload {
    Config(Configuration),
    Source(String),
}

/// One candidate returned by `ask`. `id` is assigned by the protocol guard
/// and must be handed back unchanged to `tell`.
#[derive(Debug, Clone)]
pub struct Proposal {
    pub id: u64,
    pub payload: ProposalPayload,
    pub source_tag: ProposalSource,
    /// For LLM turns: whether the model changed the proposal it was shown.
    pub overridden: Option<bool>,
    /// Set when the proposal itself failed (e.g. unparseable code edit);
    /// the study loop records a penalized trial without executing anything.
    pub failed: bool,
    /// LLM time spent producing this proposal. Tracked for reporting,
    /// never added to cumulative train seconds.
    pub inference_seconds: f64,
}

impl Proposal {
    pub fn config(config: Configuration, source_tag: ProposalSource) -> Self {
        Self {
            id: 0,
            payload: ProposalPayload::Config(config),
            source_tag,
            overridden: None,
            failed: false,
            inference_seconds: 0.0,
        }
    }

    pub fn source(source: String, source_tag: ProposalSource) -> Self {
        Self {
            id: 0,
            payload: ProposalPayload::Source(source),
            source_tag,
            overridden: None,
            failed: false,
            inference_seconds: 0.0,
        }
    }
}

/// Ask/tell optimizer. `ask` must be pure given internal state and its RNG
/// streams; `tell` folds the evaluated objective back in. `observe` feeds a
/// result the optimizer did not propose (the baseline trial, resumes).
pub trait Optimizer {
    fn name(&self) -> &str;
    fn ask(&mut self, history: &[TrialRecord]) -> Proposal;
    fn tell(&mut self, proposal: &Proposal, objective: f64);
    fn observe(&mut self, _payload: &ProposalPayload, _objective: f64) {}
    /// Payload evaluated as trial 1 before any ask.
    fn baseline(&self, space: &SearchSpace) -> ProposalPayload {
        ProposalPayload::Config(space.defaults())
    }
}

/// Enforces strict ask/tell alternation and proposal-id matching around any
/// optimizer.
pub struct ProtocolGuard<'a> {
    inner: &'a mut dyn Optimizer,
    next_id: u64,
    pending: Option<u64>,
}

impl<'a> ProtocolGuard<'a> {
    pub fn new(inner: &'a mut dyn Optimizer, first_id: u64) -> Self {
        Self {
            inner,
            next_id: first_id,
            pending: None,
        }
    }

    pub fn ask(&mut self, history: &[TrialRecord]) -> Result<Proposal, OptimError> {
        if let Some(id) = self.pending {
            return Err(OptimError::Protocol(format!(
                "ask while proposal {id} awaits tell"
            )));
        }
        let mut proposal = self.inner.ask(history);
        proposal.id = self.next_id;
        self.pending = Some(self.next_id);
        self.next_id += 1;
        Ok(proposal)
    }

    pub fn tell(&mut self, proposal: &Proposal, objective: f64) -> Result<(), OptimError> {
        match self.pending {
            None => Err(OptimError::Protocol("tell before any ask".to_string())),
            Some(id) if id != proposal.id => Err(OptimError::Protocol(format!(
                "tell for proposal {} while {} is pending",
                proposal.id, id
            ))),
            Some(_) => {
                self.pending = None;
                self.inner.tell(proposal, objective);
                Ok(())
            }
        }
    }
}

/// Deterministic generator for a named stream: the seed is
/// `SHA-256(study_seed_le_bytes || stream_name)`, so draws from one stream
/// never affect another.
pub fn stream_rng(study_seed: u64, stream: &str) -> ChaCha12Rng {
    let mut h = sha2::Sha256::new();
    h.update(study_seed.to_le_bytes());
    h.update(stream.as_bytes());
    ChaCha12Rng::from_seed(h.finalize().into())
}

/// The framework's named RNG streams.
pub struct RngStreams {
    pub turn_selection: ChaCha12Rng,
    pub sampler: ChaCha12Rng,
    pub llm_fallback: ChaCha12Rng,
}

impl RngStreams {
    pub fn new(study_seed: u64) -> Self {
        Self {
            turn_selection: stream_rng(study_seed, "turn_selection"),
            sampler: stream_rng(study_seed, "sampler"),
            llm_fallback: stream_rng(study_seed, "llm_fallback"),
        }
    }
}

/// Uniform sample: numeric params uniform in their bounds (in ln-space when
/// log-scaled), categoricals uniform over choices. Decoding reuses the
/// space's rounding and clamping rules.
pub fn random_propose(space: &SearchSpace, rng: &mut impl Rng) -> Configuration {
    let coords = (0..space.total_dims()).map(|_| rng.gen::<f64>()).collect();
    space.denormalize(&UnitVector::new(coords))
}

/// Uniform random search over the space.
pub struct RandomSearch {
    space: SearchSpace,
    rng: ChaCha12Rng,
}

impl RandomSearch {
    pub fn new(space: SearchSpace, seed: u64) -> Self {
        Self::on_stream(space, seed, "sampler")
    }

    /// Draws from a specific named stream. Used to cross-check that an LLM
    /// optimizer's random fallback degenerates to random search exactly.
    pub fn on_stream(space: SearchSpace, seed: u64, stream: &str) -> Self {
        Self {
            space,
            rng: stream_rng(seed, stream),
        }
    }
}

impl Optimizer for RandomSearch {
    fn name(&self) -> &str {
        "random"
    }

    fn ask(&mut self, _history: &[TrialRecord]) -> Proposal {
        Proposal::config(random_propose(&self.space, &mut self.rng), ProposalSource::Random)
    }

    fn tell(&mut self, _proposal: &Proposal, _objective: f64) {}
}

/// Evaluates a materialized payload. Implemented by the in-process synthetic
/// adapter and the sandboxed subprocess runner.
pub trait TrialExecutor {
    fn execute(
        &mut self,
        payload: &ProposalPayload,
        trial_id: u64,
        seed: u64,
    ) -> Result<TrialOutcome, RunnerError>;
}

/// Study-loop parameters shared by all methods.
#[derive(Debug, Clone)]
pub struct StudySetup {
    pub method: String,
    pub seed: u64,
    pub budget_seconds: f64,
    pub max_trials: Option<u64>,
    pub penalty: f64,
    pub out_path: Option<PathBuf>,
    /// Where code-edit payloads are persisted; required for code methods
    /// when a study file is written.
    pub patch_dir: Option<PathBuf>,
    pub progress: bool,
}

impl StudySetup {
    pub fn in_memory(method: &str, seed: u64, budget_seconds: f64, max_trials: u64) -> Self {
        Self {
            method: method.to_string(),
            seed,
            budget_seconds,
            max_trials: Some(max_trials),
            penalty: crate::DEFAULT_PENALTY,
            out_path: None,
            patch_dir: None,
            progress: false,
        }
    }
}

struct StudyState {
    log: StudyLog,
    writer: Option<StudyWriter>,
    best: f64,
}

impl StudyState {
    fn record_trial(
        &mut self,
        setup: &StudySetup,
        proposal_source: ProposalSource,
        payload: TrialPayload,
        outcome: &TrialOutcome,
        objective: f64,
        overridden: Option<bool>,
        started_at: f64,
    ) -> Result<(), StudyError> {
        let record = TrialRecord {
            trial_id: self.log.records.len() as u64 + 1,
            method: setup.method.clone(),
            seed: setup.seed,
            proposal_source,
            payload,
            status: outcome.status,
            objective,
            train_seconds: outcome.train_seconds,
            started_at,
            ended_at: unix_now(),
            overridden,
        };
        self.best = self.best.min(objective);
        if setup.progress {
            println!(
                "trial {:>4}  source={:<9} status={:<13} objective={:<12} best={:<12} train={:.1}s",
                record.trial_id,
                format!("{:?}", record.proposal_source).to_lowercase(),
                format!("{:?}", record.status).to_lowercase(),
                format!("{:.6}", record.objective),
                format!("{:.6}", self.best),
                self.log.cumulative_train_seconds + record.train_seconds,
            );
        }
        if let Some(w) = &mut self.writer {
            w.append(&record)?;
        }
        self.log.append(record)?;
        Ok(())
    }
}

fn persist_payload(
    payload: &ProposalPayload,
    trial_id: u64,
    setup: &StudySetup,
) -> Result<TrialPayload, StudyError> {
    match payload {
        ProposalPayload::Config(c) => Ok(TrialPayload::Config(c.clone())),
        ProposalPayload::Source(src) => {
            let mut h = sha2::Sha256::new();
            h.update(src.as_bytes());
            let sha256 = hex_string(&h.finalize());
            let patch_path = match &setup.patch_dir {
                Some(dir) => {
                    std::fs::create_dir_all(dir).map_err(RunnerError::Io)?;
                    let p = dir.join(format!("trial_{trial_id}.py"));
                    std::fs::write(&p, src).map_err(RunnerError::Io)?;
                    p.to_string_lossy().into_owned()
                }
                None => String::new(),
            };
            Ok(TrialPayload::Code { sha256, patch_path })
        }
    }
}

/// Runs one study: trial 1 evaluates the baseline payload, then the loop
/// asks, executes, penalizes, tells, and appends until the training-time
/// budget or the trial cap is exhausted.
pub fn run_study(
    optimizer: &mut dyn Optimizer,
    executor: &mut dyn TrialExecutor,
    space: &SearchSpace,
    setup: &StudySetup,
) -> Result<StudyLog, StudyError> {
    let header = study_header(
        &setup.method,
        setup.seed,
        space,
        setup.budget_seconds,
        setup.penalty,
        setup.max_trials,
    );
    let writer = match &setup.out_path {
        Some(path) => Some(StudyWriter::create(path, header.clone())?),
        None => None,
    };
    let mut state = StudyState {
        log: StudyLog::new(header),
        writer,
        best: f64::INFINITY,
    };

    // All methods start from the same baseline configuration.
    let baseline = optimizer.baseline(space);
    let started = unix_now();
    let outcome = executor.execute(&baseline, 1, setup.seed)?;
    let objective = apply_penalty(&outcome, setup.penalty);
    optimizer.observe(&baseline, objective);
    let payload = persist_payload(&baseline, 1, setup)?;
    state.record_trial(
        setup,
        ProposalSource::Classical,
        payload,
        &outcome,
        objective,
        None,
        started,
    )?;

    let mut guard = ProtocolGuard::new(optimizer, 2);
    run_loop(&mut guard, executor, setup, &mut state)?;
    Ok(state.log)
}

fn run_loop(
    guard: &mut ProtocolGuard,
    executor: &mut dyn TrialExecutor,
    setup: &StudySetup,
    state: &mut StudyState,
) -> Result<(), StudyError> {
    loop {
        if state.log.budget_remaining(setup.budget_seconds) <= 0.0 {
            break;
        }
        if let Some(cap) = setup.max_trials {
            if state.log.records.len() as u64 >= cap {
                break;
            }
        }
        let trial_id = state.log.records.len() as u64 + 1;
        let proposal = guard.ask(&state.log.records)?;
        let started = unix_now();
        let outcome = if proposal.failed {
            // The proposal itself failed (e.g. no code block in the reply);
            // charge a penalized trial without running anything.
            TrialOutcome {
                status: TrialStatus::RuntimeError,
                objective: None,
                train_seconds: 0.0,
                stdout: String::new(),
                stderr: String::new(),
            }
        } else {
            executor.execute(&proposal.payload, trial_id, setup.seed)?
        };
        let objective = apply_penalty(&outcome, setup.penalty);
        guard.tell(&proposal, objective)?;
        let payload = persist_payload(&proposal.payload, trial_id, setup)?;
        state.record_trial(
            setup,
            proposal.source_tag,
            payload,
            &outcome,
            objective,
            proposal.overridden,
            started,
        )?;
    }
    Ok(())
}

/// Resumes a persisted study: re-seeds the optimizer by replaying every
/// record (asks re-draw the RNG streams, tells replay the evaluated
/// payloads), then continues the loop where the file left off.
pub fn resume_study(
    optimizer: &mut dyn Optimizer,
    executor: &mut dyn TrialExecutor,
    space: &SearchSpace,
    setup: &StudySetup,
) -> Result<StudyLog, StudyError> {
    let path = setup
        .out_path
        .as_ref()
        .ok_or_else(|| StudyError::ResumeMismatch("resume requires a study file".to_string()))?;
    let log = load_study(path)?;
    if log.header.space_digest != space.digest() {
        return Err(StudyError::ResumeMismatch(
            "space digest differs from study header".to_string(),
        ));
    }
    if log.header.seed != setup.seed {
        return Err(StudyError::ResumeMismatch(format!(
            "study seed {} differs from configured seed {}",
            log.header.seed, setup.seed
        )));
    }

    let mut guard = ProtocolGuard::new(optimizer, 2);
    for (i, record) in log.records.iter().enumerate() {
        let payload = replay_payload(record)?;
        if i == 0 {
            guard.inner.observe(&payload, record.objective);
            continue;
        }
        let asked = guard.ask(&log.records[..i])?;
        let replayed = Proposal {
            payload,
            ..asked
        };
        guard.tell(&replayed, record.objective)?;
    }

    let writer = StudyWriter::open_append(path)?;
    let mut state = StudyState {
        best: log
            .records
            .iter()
            .map(|r| r.objective)
            .fold(f64::INFINITY, f64::min),
        log,
        writer: Some(writer),
    };
    run_loop(&mut guard, executor, setup, &mut state)?;
    Ok(state.log)
}

fn replay_payload(record: &TrialRecord) -> Result<ProposalPayload, StudyError> {
    match &record.payload {
        TrialPayload::Config(c) => Ok(ProposalPayload::Config(c.clone())),
        TrialPayload::Code { patch_path, .. } => {
            let source = std::fs::read_to_string(patch_path).map_err(RunnerError::Io)?;
            Ok(ProposalPayload::Source(source))
        }
    }
}

/// In-process executor with a fixed, deterministic per-trial training cost;
/// failures complete faster, mirroring fast OOM failures.
pub struct SyntheticExecutor {
    pub objective: crate::synthetic::SyntheticObjective,
    pub space: SearchSpace,
    pub ok_cost_seconds: f64,
    pub fail_cost_seconds: f64,
}

impl SyntheticExecutor {
    pub fn new(objective: crate::synthetic::SyntheticObjective, space: SearchSpace) -> Self {
        Self {
            objective,
            space,
            ok_cost_seconds: 60.0,
            fail_cost_seconds: 5.0,
        }
    }
}

impl TrialExecutor for SyntheticExecutor {
    fn execute(
        &mut self,
        payload: &ProposalPayload,
        _trial_id: u64,
        _seed: u64,
    ) -> Result<TrialOutcome, RunnerError> {
        let evaluated = match payload {
            ProposalPayload::Config(c) => self.objective.evaluate(c, &self.space),
            ProposalPayload::Source(src) => {
                // Code edits are evaluated by re-extracting their knobs.
                let extracted = crate::space::parse_script_hyperparameters(src);
                let config = Configuration::new(
                    extracted
                        .into_iter()
                        .map(|p| (p.name, p.default))
                        .collect(),
                );
                if self.space.validate(&config).is_valid() {
                    self.objective.evaluate(&config, &self.space)
                } else {
                    (TrialStatus::RuntimeError, None)
                }
            }
        };
        let (status, objective) = evaluated;
        Ok(TrialOutcome {
            status,
            objective,
            train_seconds: if status == TrialStatus::Ok {
                self.ok_cost_seconds
            } else {
                self.fail_cost_seconds
            },
            stdout: String::new(),
            stderr: String::new(),
        })
    }
}

/// Sandboxed subprocess executor: fixed-space payloads are materialized
/// against a base script, code payloads run as-is.
pub struct SubprocessExecutor {
    pub runner: crate::runner::RunnerConfig,
    pub base_source: String,
}

impl TrialExecutor for SubprocessExecutor {
    fn execute(
        &mut self,
        payload: &ProposalPayload,
        trial_id: u64,
        seed: u64,
    ) -> Result<TrialOutcome, RunnerError> {
        let script = match payload {
            ProposalPayload::Config(c) => {
                crate::runner::materialize_trial_script(&self.base_source, c)?
            }
            ProposalPayload::Source(src) => src.clone(),
        };
        self.runner
            .execute_trial(&script, trial_id, seed, &BTreeMap::new())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::SyntheticObjective;
    use rand::RngCore;

    fn preset() -> SearchSpace {
        SearchSpace::preset()
    }

    #[test]
    fn random_draws_validate() {
        let space = preset();
        let mut rng = stream_rng(0, "sampler");
        for _ in 0..200 {
            let c = random_propose(&space, &mut rng);
            assert!(space.validate(&c).is_valid());
        }
    }

    #[test]
    fn random_weight_decay_mean_matches_uniform() {
        let space = preset();
        let mut rng = stream_rng(7, "sampler");
        let mean: f64 = (0..10_000)
            .map(|_| {
                random_propose(&space, &mut rng)
                    .get("WEIGHT_DECAY")
                    .unwrap()
                    .as_f64()
                    .unwrap()
            })
            .sum::<f64>()
            / 10_000.0;
        assert!((mean - 0.25).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn random_head_dim_median_matches_log_uniform() {
        let space = preset();
        let mut rng = stream_rng(11, "sampler");
        let mut draws: Vec<f64> = (0..10_000)
            .map(|_| {
                random_propose(&space, &mut rng)
                    .get("HEAD_DIM")
                    .unwrap()
                    .as_f64()
                    .unwrap()
            })
            .collect();
        draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = draws[5_000];
        assert!((104.0..=135.0).contains(&median), "median {median}");
    }

    #[test]
    fn streams_are_independent() {
        let mut a = RngStreams::new(3);
        let mut b = RngStreams::new(3);
        // consume a different number of turn_selection draws in each
        for _ in 0..100 {
            b.turn_selection.next_u64();
        }
        let seq_a: Vec<u64> = (0..10).map(|_| a.sampler.next_u64()).collect();
        let seq_b: Vec<u64> = (0..10).map(|_| b.sampler.next_u64()).collect();
        assert_eq!(seq_a, seq_b);
    }

    #[test]
    fn protocol_guard_enforces_alternation() {
        let space = preset();
        let mut opt = RandomSearch::new(space.clone(), 0);
        let mut guard = ProtocolGuard::new(&mut opt, 2);
        let p = guard.ask(&[]).unwrap();
        assert!(matches!(guard.ask(&[]), Err(OptimError::Protocol(_))));
        let mut wrong = p.clone();
        wrong.id += 1;
        assert!(matches!(guard.tell(&wrong, 1.0), Err(OptimError::Protocol(_))));
        guard.tell(&p, 1.0).unwrap();
        assert!(matches!(guard.tell(&p, 1.0), Err(OptimError::Protocol(_))));
    }

    fn sphere_setup(method: &str, seed: u64, max_trials: u64) -> (SyntheticExecutor, StudySetup) {
        let space = preset();
        (
            SyntheticExecutor::new(SyntheticObjective::Sphere, space),
            StudySetup::in_memory(method, seed, f64::INFINITY, max_trials),
        )
    }

    #[test]
    fn study_starts_from_defaults_and_respects_trial_cap() {
        let space = preset();
        let mut opt = RandomSearch::new(space.clone(), 0);
        let (mut exec, setup) = sphere_setup("random", 0, 5);
        let log = run_study(&mut opt, &mut exec, &space, &setup).unwrap();
        assert_eq!(log.records.len(), 5);
        match &log.records[0].payload {
            TrialPayload::Config(c) => assert_eq!(c, &space.defaults()),
            _ => panic!("baseline should be a config"),
        }
    }

    #[test]
    fn zero_budget_keeps_only_baseline() {
        let space = preset();
        let mut opt = RandomSearch::new(space.clone(), 0);
        let mut exec = SyntheticExecutor::new(SyntheticObjective::Sphere, space.clone());
        let mut setup = StudySetup::in_memory("random", 0, 0.0, 100);
        setup.budget_seconds = 0.0;
        let log = run_study(&mut opt, &mut exec, &space, &setup).unwrap();
        assert_eq!(log.records.len(), 1);
    }

    #[test]
    fn budget_stops_after_it_is_spent() {
        let space = preset();
        let mut opt = RandomSearch::new(space.clone(), 0);
        let mut exec = SyntheticExecutor::new(SyntheticObjective::Sphere, space.clone());
        exec.ok_cost_seconds = 60.0;
        // budget covers exactly 5 ok trials
        let mut setup = StudySetup::in_memory("random", 0, 300.0, 1_000);
        setup.budget_seconds = 300.0;
        let log = run_study(&mut opt, &mut exec, &space, &setup).unwrap();
        assert_eq!(log.records.len(), 5);
    }

    #[test]
    fn same_seed_gives_identical_digests() {
        let space = preset();
        let run = || {
            let mut opt = RandomSearch::new(space.clone(), 42);
            let (mut exec, setup) = sphere_setup("random", 42, 30);
            run_study(&mut opt, &mut exec, &space, &setup)
                .unwrap()
                .content_digest()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn resume_equals_uninterrupted_run() {
        let space = preset();
        let dir = tempfile::tempdir().unwrap();

        let full = {
            let mut opt = RandomSearch::new(space.clone(), 9);
            let (mut exec, mut setup) = sphere_setup("random", 9, 15);
            setup.out_path = Some(dir.path().join("full.study"));
            run_study(&mut opt, &mut exec, &space, &setup).unwrap()
        };

        let partial_path = dir.path().join("partial.study");
        {
            let mut opt = RandomSearch::new(space.clone(), 9);
            let (mut exec, mut setup) = sphere_setup("random", 9, 10);
            setup.out_path = Some(partial_path.clone());
            run_study(&mut opt, &mut exec, &space, &setup).unwrap();
        }
        let resumed = {
            let mut opt = RandomSearch::new(space.clone(), 9);
            let (mut exec, mut setup) = sphere_setup("random", 9, 15);
            setup.out_path = Some(partial_path.clone());
            resume_study(&mut opt, &mut exec, &space, &setup).unwrap()
        };
        assert_eq!(resumed.records.len(), 15);
        assert_eq!(full.content_digest(), resumed.content_digest());
        // the persisted file also matches
        let reloaded = load_study(&partial_path).unwrap();
        assert_eq!(reloaded.content_digest(), full.content_digest());
    }

    #[test]
    fn resume_rejects_space_mismatch() {
        let space = preset();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.study");
        {
            let mut opt = RandomSearch::new(space.clone(), 0);
            let (mut exec, mut setup) = sphere_setup("random", 0, 3);
            setup.out_path = Some(path.clone());
            run_study(&mut opt, &mut exec, &space, &setup).unwrap();
        }
        let other = SearchSpace::new(vec![crate::space::HyperparameterDef {
            name: "X".to_string(),
            domain: crate::space::ParamDomain::Real {
                low: 0.0,
                high: 1.0,
                log: false,
            },
            default: crate::space::ParamValue::Float(0.5),
        }])
        .unwrap();
        let mut opt = RandomSearch::new(other.clone(), 0);
        let mut exec = SyntheticExecutor::new(SyntheticObjective::Sphere, other.clone());
        let mut setup = StudySetup::in_memory("random", 0, f64::INFINITY, 5);
        setup.out_path = Some(path);
        assert!(matches!(
            resume_study(&mut opt, &mut exec, &other, &setup),
            Err(StudyError::ResumeMismatch(_))
        ));
    }

    #[test]
    fn best_so_far_is_non_increasing() {
        let space = preset();
        let mut opt = RandomSearch::new(space.clone(), 5);
        let (mut exec, setup) = sphere_setup("random", 5, 40);
        let log = run_study(&mut opt, &mut exec, &space, &setup).unwrap();
        let mut best = f64::INFINITY;
        for r in &log.records {
            let new_best = best.min(r.objective);
            assert!(new_best <= best);
            best = new_best;
        }
    }
}

//! Hybrid CMA-ES + LLM optimizer: CMA-ES proposes every trial, an
//! r-fraction of trials is shown to the LLM together with the full CMA-ES
//! state (mean, step-size, labeled covariance, history window), and the
//! model may keep or override the proposal. CMA-ES is updated from all
//! evaluated results either way.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::cmaes::{export_state, CmaEs, StateSummary, DEFAULT_SIGMA0};
use crate::llm::{
    format_config_block, format_history, format_top, describe_space, parse_config_response,
    ChatClient, Message, PromptWindow,
};
use crate::optim::{stream_rng, Optimizer, Proposal, ProposalPayload};
use crate::runner::{ProposalSource, StudyLog, TrialRecord};
use crate::space::{Configuration, SearchSpace};

/// Default fraction of trials delegated to the LLM.
pub const DEFAULT_LLM_RATIO: f64 = 0.3;
/// Ablation grid for the LLM ratio.
pub const RATIO_GRID: [f64; 5] = [0.1, 0.2, 0.3, 0.5, 0.8];

#[derive(Debug, Clone, Copy)]
pub struct CentaurConfig {
    /// Probability that a trial is an LLM turn.
    pub llm_ratio: f64,
    pub window: PromptWindow,
}

impl Default for CentaurConfig {
    fn default() -> Self {
        Self {
            llm_ratio: DEFAULT_LLM_RATIO,
            window: PromptWindow::default(),
        }
    }
}

impl CentaurConfig {
    pub fn with_ratio(llm_ratio: f64) -> Self {
        assert!(
            (0.0..=1.0).contains(&llm_ratio),
            "llm ratio must be in [0,1]"
        );
        Self {
            llm_ratio,
            ..Self::default()
        }
    }
}

/// Prompt shown on LLM turns: space, mean configuration, step-size, labeled
/// covariance, top configurations, recent history, and CMA-ES's current
/// proposal (the last fenced block; the model may keep or change it).
pub fn build_state_prompt(
    summary: &StateSummary,
    history: &[TrialRecord],
    space: &SearchSpace,
    config: &CentaurConfig,
    proposal: &Configuration,
) -> Vec<Message> {
    let mut body = String::new();
    body.push_str(&describe_space(space));
    body.push_str(&format!(
        "\nCMA-ES mean (as a configuration): {}\n",
        inline(&summary.mean_config, space)
    ));
    body.push_str(&format!("CMA-ES step size sigma: {}\n", summary.sigma));
    body.push_str("\nCMA-ES covariance matrix C:\n");
    body.push_str(&format_covariance(summary));
    body.push('\n');
    body.push_str(&format_top(history, space, config.window.top_k));
    body.push('\n');
    body.push_str(&format_history(history, space, config.window.last_n));
    body.push_str("\nCMA-ES proposes the following configuration:\n");
    body.push_str(&format_config_block(proposal, space));
    body.push_str(
        "\n\nYou may keep this proposal or change it. Reply with exactly one \
         fenced ```config block covering every hyperparameter.",
    );
    vec![
        Message::system(
            "You are collaborating with CMA-ES on hyperparameter optimization. \
             The objective is minimized; failed trials are recorded with \
             objective 100.",
        ),
        Message::user(body),
    ]
}

fn inline(config: &Configuration, space: &SearchSpace) -> String {
    space
        .params
        .iter()
        .filter_map(|p| config.get(&p.name).map(|v| format!("{}={}", p.name, v)))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Labeled covariance rows, values already rounded for prompting.
pub fn format_covariance(summary: &StateSummary) -> String {
    let mut out = String::from("          ");
    out.push_str(&summary.labels.join(" "));
    out.push('\n');
    for (label, row) in summary.labels.iter().zip(&summary.covariance) {
        let values: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&format!("{label}: {}\n", values.join(" ")));
    }
    out
}

/// The hybrid optimizer of the ask/tell protocol. The CMA proposal is drawn
/// from the sampler stream on every trial — also on LLM turns, where it may
/// be discarded — so stream consumption is identical for every ratio and a
/// non-overriding LLM reproduces pure CMA-ES exactly.
pub struct CentaurOptimizer {
    space: SearchSpace,
    pub cma: CmaEs<f64>,
    client: Box<dyn ChatClient>,
    pub config: CentaurConfig,
    turn_selection: ChaCha12Rng,
    sampler: ChaCha12Rng,
}

impl CentaurOptimizer {
    pub fn new(
        space: SearchSpace,
        seed: u64,
        client: Box<dyn ChatClient>,
        config: CentaurConfig,
    ) -> Self {
        assert!(
            (0.0..=1.0).contains(&config.llm_ratio),
            "llm ratio must be in [0,1]"
        );
        let mean = space
            .normalize(&space.defaults())
            .expect("defaults validate")
            .coords;
        Self {
            space,
            cma: CmaEs::new(mean, DEFAULT_SIGMA0),
            client,
            config,
            turn_selection: stream_rng(seed, "turn_selection"),
            sampler: stream_rng(seed, "sampler"),
        }
    }

    fn fold(&mut self, config: &Configuration, objective: f64) {
        if let Ok(u) = self.space.normalize(config) {
            self.cma.tell(u.coords, objective);
        }
    }
}

impl Optimizer for CentaurOptimizer {
    fn name(&self) -> &str {
        "centaur"
    }

    fn ask(&mut self, history: &[TrialRecord]) -> Proposal {
        // the CMA proposal is always drawn, even when the LLM overrides it
        let u = self.cma.sample(&mut self.sampler);
        let x0 = self.space.denormalize(&crate::space::UnitVector::new(u));
        let turn: f64 = self.turn_selection.gen();
        if turn >= self.config.llm_ratio {
            return Proposal::config(x0, ProposalSource::Classical);
        }

        let summary = export_state(&self.cma, &self.space);
        let mut messages =
            build_state_prompt(&summary, history, &self.space, &self.config, &x0);
        let mut inference = 0.0;
        for attempt in 0..2 {
            match self.client.chat(&messages) {
                Ok(exchange) => {
                    inference += exchange.inference_seconds;
                    match parse_config_response(&exchange.response, &self.space) {
                        Ok(parsed) => {
                            let overridden = parsed != x0;
                            let mut p = Proposal::config(parsed, ProposalSource::Llm);
                            p.overridden = Some(overridden);
                            p.inference_seconds = inference;
                            return p;
                        }
                        Err(e) => {
                            if attempt == 0 {
                                messages.push(Message {
                                    role: "assistant".to_string(),
                                    content: exchange.response,
                                });
                                messages.push(Message::user(format!(
                                    "That reply could not be used ({e}). Reply again with \
                                     one fenced ```config block covering every \
                                     hyperparameter."
                                )));
                            }
                        }
                    }
                }
                Err(_) => break, // endpoint down: degrade to the CMA proposal
            }
        }
        let mut p = Proposal::config(x0, ProposalSource::Classical);
        p.inference_seconds = inference;
        p
    }

    fn tell(&mut self, proposal: &Proposal, objective: f64) {
        if let ProposalPayload::Config(c) = &proposal.payload {
            let c = c.clone();
            self.fold(&c, objective);
        }
    }

    fn observe(&mut self, payload: &ProposalPayload, objective: f64) {
        if let ProposalPayload::Config(c) = payload {
            let c = c.clone();
            self.fold(&c, objective);
        }
    }
}

/// Post-hoc accounting over a centaur study log.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CentaurReport {
    /// Fraction of trials whose proposal came from the LLM.
    pub llm_turn_fraction: f64,
    /// Fraction of LLM turns where the model changed the proposal it was
    /// shown; 0 when there were no LLM turns.
    pub override_rate: f64,
    /// Strict incumbent improvements, counted per proposal source.
    pub improvements_by_source: BTreeMap<String, usize>,
    pub total_improvements: usize,
    /// Set when the log was not produced by a centaur study; all counts are
    /// zero in that case.
    pub warning_not_centaur: bool,
}

pub fn centaur_report(log: &StudyLog) -> CentaurReport {
    if log.header.method != "centaur" {
        return CentaurReport {
            llm_turn_fraction: 0.0,
            override_rate: 0.0,
            improvements_by_source: BTreeMap::new(),
            total_improvements: 0,
            warning_not_centaur: true,
        };
    }
    let total = log.records.len();
    let llm_turns: Vec<&TrialRecord> = log
        .records
        .iter()
        .filter(|r| r.proposal_source == ProposalSource::Llm)
        .collect();
    let overrides = llm_turns
        .iter()
        .filter(|r| r.overridden == Some(true))
        .count();
    let mut improvements_by_source = BTreeMap::new();
    let mut total_improvements = 0;
    let mut best = f64::INFINITY;
    for r in &log.records {
        if r.objective < best {
            best = r.objective;
            total_improvements += 1;
            let key = match r.proposal_source {
                ProposalSource::Classical => "classical",
                ProposalSource::Llm => "llm",
                ProposalSource::Random => "random",
                ProposalSource::Resume => "resume",
            };
            *improvements_by_source.entry(key.to_string()).or_insert(0) += 1;
        }
    }
    CentaurReport {
        llm_turn_fraction: if total == 0 {
            0.0
        } else {
            llm_turns.len() as f64 / total as f64
        },
        override_rate: if llm_turns.is_empty() {
            0.0
        } else {
            overrides as f64 / llm_turns.len() as f64
        },
        improvements_by_source,
        total_improvements,
        warning_not_centaur: false,
    }
}

//! Chat-completion client and the prompt-based optimizers: the fixed-space
//! suggestion agent, the LLAMBO surrogate (paper and optuna variants), and
//! the code-editing agent.
//!
//! All optimizers talk through the [`ChatClient`] trait so studies run
//! offline against scripted responders. Responses carry configurations in a
//! fenced ` ```config ` block of `NAME = value` lines; the last fenced block
//! in the reply wins.

use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::optim::{random_propose, stream_rng, Optimizer, Proposal, ProposalPayload};
use crate::runner::{ProposalSource, TrialPayload, TrialRecord, TrialStatus};
use crate::space::{Configuration, ParamDomain, ParamValue, SearchSpace, UnitVector};

/// Output budget for fixed-space methods.
pub const FIXED_HP_MAX_TOKENS: u32 = 2048;
/// Output budget for the code-editing agent.
pub const CODE_MAX_TOKENS: u32 = 16384;
pub const DEFAULT_TEMPERATURE: f64 = 0.7;
/// Environment variable holding the bearer token.
pub const DEFAULT_TOKEN_ENV: &str = "HPO_LLM_TOKEN";

/// Fence tag opening a configuration block in model replies.
pub const CONFIG_FENCE: &str = "```config";

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("llm_unavailable: {0}")]
    Unavailable(String),
    #[error("llm_error: status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("parse_error: {0}")]
    Parse(String),
}

/// Endpoint settings for a chat-completion server.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LlmEndpointConfig {
    pub base_url: String,
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    #[serde(default = "default_timeout")]
    pub timeout_seconds: f64,
    #[serde(default = "default_retries")]
    pub retries: u32,
    /// Name of the environment variable holding the auth token. The token
    /// itself is read at request time and never logged.
    #[serde(default = "default_token_env")]
    pub token_env: String,
}

fn default_timeout() -> f64 {
    120.0
}

fn default_retries() -> u32 {
    2
}

fn default_token_env() -> String {
    DEFAULT_TOKEN_ENV.to_string()
}

impl LlmEndpointConfig {
    pub fn fixed_hp(base_url: &str, model: &str) -> Self {
        Self {
            base_url: base_url.to_string(),
            model: model.to_string(),
            temperature: DEFAULT_TEMPERATURE,
            max_tokens: FIXED_HP_MAX_TOKENS,
            timeout_seconds: default_timeout(),
            retries: default_retries(),
            token_env: default_token_env(),
        }
    }

    pub fn code(base_url: &str, model: &str) -> Self {
        Self {
            max_tokens: CODE_MAX_TOKENS,
            ..Self::fixed_hp(base_url, model)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: String,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: "system".to_string(),
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: "user".to_string(),
            content: content.into(),
        }
    }
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: &'a [Message],
    temperature: f64,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    content: String,
}

/// One completed request/response round trip.
#[derive(Debug, Clone)]
pub struct LlmExchange {
    pub response: String,
    pub attempts: u32,
    /// Wall time spent waiting on the model. Reported, never billed to the
    /// training-time budget.
    pub inference_seconds: f64,
}

/// Anything that can answer a chat prompt.
pub trait ChatClient {
    fn chat(&mut self, messages: &[Message]) -> Result<LlmExchange, LlmError>;
}

/// Blocking HTTP client speaking the chat-completion convention:
/// POST `{base_url}/chat/completions` with `{model, messages, temperature,
/// max_tokens}`, reading `choices[0].message.content`.
pub struct HttpChatClient {
    pub endpoint: LlmEndpointConfig,
    client: reqwest::blocking::Client,
}

impl HttpChatClient {
    pub fn new(endpoint: LlmEndpointConfig) -> Self {
        let client = reqwest::blocking::Client::builder()
            .timeout(std::time::Duration::from_secs_f64(endpoint.timeout_seconds))
            .build()
            .expect("client builds");
        Self { endpoint, client }
    }
}

impl ChatClient for HttpChatClient {
    fn chat(&mut self, messages: &[Message]) -> Result<LlmExchange, LlmError> {
        let url = format!(
            "{}/chat/completions",
            self.endpoint.base_url.trim_end_matches('/')
        );
        let body = ChatRequest {
            model: &self.endpoint.model,
            messages,
            temperature: self.endpoint.temperature,
            max_tokens: self.endpoint.max_tokens,
        };
        let started = Instant::now();
        let mut attempts = 0;
        let mut last_err: Option<LlmError> = None;
        while attempts <= self.endpoint.retries {
            attempts += 1;
            let mut request = self.client.post(&url).json(&body);
            if let Ok(token) = std::env::var(&self.endpoint.token_env) {
                request = request.bearer_auth(token);
            }
            match request.send() {
                Ok(response) => {
                    let status = response.status();
                    let text = response.text().unwrap_or_default();
                    if status.is_success() {
                        let parsed: ChatResponse = serde_json::from_str(&text)
                            .map_err(|e| LlmError::Parse(format!("response body: {e}")))?;
                        let content = parsed
                            .choices
                            .into_iter()
                            .next()
                            .map(|c| c.message.content)
                            .ok_or_else(|| LlmError::Parse("empty choices".to_string()))?;
                        return Ok(LlmExchange {
                            response: content,
                            attempts,
                            inference_seconds: started.elapsed().as_secs_f64(),
                        });
                    }
                    last_err = Some(LlmError::Status {
                        status: status.as_u16(),
                        body: text,
                    });
                }
                Err(e) => {
                    last_err = Some(LlmError::Unavailable(e.to_string()));
                }
            }
        }
        Err(last_err.unwrap_or_else(|| LlmError::Unavailable("no attempts".to_string())))
    }
}

/// Deterministic responder for tests and offline runs: replies in order,
/// then repeats the final entry. An artificial per-call delay can be
/// reported to verify it never leaks into the training budget.
pub struct ScriptedClient {
    replies: Vec<Result<String, String>>,
    cursor: usize,
    pub inference_seconds_per_call: f64,
    pub calls: u32,
}

impl ScriptedClient {
    pub fn new(replies: Vec<Result<String, String>>) -> Self {
        Self {
            replies,
            cursor: 0,
            inference_seconds_per_call: 0.0,
            calls: 0,
        }
    }

    pub fn always(reply: &str) -> Self {
        Self::new(vec![Ok(reply.to_string())])
    }
}

impl ChatClient for ScriptedClient {
    fn chat(&mut self, _messages: &[Message]) -> Result<LlmExchange, LlmError> {
        self.calls += 1;
        let idx = self.cursor.min(self.replies.len().saturating_sub(1));
        if self.cursor < self.replies.len() {
            self.cursor += 1;
        }
        match self.replies.get(idx) {
            Some(Ok(text)) => Ok(LlmExchange {
                response: text.clone(),
                attempts: 1,
                inference_seconds: self.inference_seconds_per_call,
            }),
            Some(Err(reason)) => Err(LlmError::Unavailable(reason.clone())),
            None => Err(LlmError::Unavailable("no scripted reply".to_string())),
        }
    }
}

/// Bundled mock behaviors selectable from the CLI for offline runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MockKind {
    /// Echoes the last fenced config block it was shown.
    Identity,
    /// Always returns the configuration at normalized 0.7 in every dim.
    OracleSphere,
    /// Every request fails as unavailable.
    AlwaysFail,
}

impl MockKind {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "identity" => Some(Self::Identity),
            "oracle-sphere" => Some(Self::OracleSphere),
            "always-fail" => Some(Self::AlwaysFail),
            _ => None,
        }
    }
}

pub struct MockClient {
    pub kind: MockKind,
    pub space: SearchSpace,
    pub inference_seconds_per_call: f64,
    pub calls: u32,
}

impl MockClient {
    pub fn new(kind: MockKind, space: SearchSpace) -> Self {
        Self {
            kind,
            space,
            inference_seconds_per_call: 0.0,
            calls: 0,
        }
    }
}

impl ChatClient for MockClient {
    fn chat(&mut self, messages: &[Message]) -> Result<LlmExchange, LlmError> {
        self.calls += 1;
        let response = match self.kind {
            MockKind::AlwaysFail => {
                return Err(LlmError::Unavailable("mock endpoint is down".to_string()))
            }
            MockKind::Identity => {
                let prompt: String = messages
                    .iter()
                    .map(|m| m.content.as_str())
                    .collect::<Vec<_>>()
                    .join("\n");
                match last_fenced_block(&prompt) {
                    Some(block) => format!("{CONFIG_FENCE}\n{block}\n```"),
                    None => "no suggestion".to_string(),
                }
            }
            MockKind::OracleSphere => {
                let config = self
                    .space
                    .denormalize(&UnitVector::new(vec![0.7; self.space.total_dims()]));
                format_config_block(&config, &self.space)
            }
        };
        Ok(LlmExchange {
            response,
            attempts: 1,
            inference_seconds: self.inference_seconds_per_call,
        })
    }
}

/// Content of the last complete fenced block in the text, with any language
/// tag on the opening fence stripped.
pub fn last_fenced_block(text: &str) -> Option<String> {
    let mut blocks = Vec::new();
    let mut rest = text;
    loop {
        let open = rest.find("```")?;
        let after_open = &rest[open + 3..];
        let Some(close) = after_open.find("```") else {
            break;
        };
        blocks.push(&after_open[..close]);
        rest = &after_open[close + 3..];
        if !rest.contains("```") {
            break;
        }
    }
    let raw = blocks.last()?;
    // drop the language tag line ("config", "python", ...), if present
    let body = match raw.split_once('\n') {
        Some((first, tail)) if !first.trim().is_empty() && !first.contains('=') => tail,
        _ => raw,
    };
    Some(body.trim_matches('\n').to_string())
}

/// Renders a configuration as the fenced block the prompts ask for.
pub fn format_config_block(config: &Configuration, space: &SearchSpace) -> String {
    let mut out = String::from(CONFIG_FENCE);
    out.push('\n');
    for p in &space.params {
        if let Some(v) = config.get(&p.name) {
            out.push_str(&format!("{} = {}\n", p.name, v));
        }
    }
    out.push_str("```");
    out
}

/// Decodes the last fenced block of a reply into a validated configuration.
/// Numerics are coerced per the parameter's domain; integers accept float
/// text and round to nearest.
pub fn parse_config_response(
    text: &str,
    space: &SearchSpace,
) -> Result<Configuration, LlmError> {
    let block =
        last_fenced_block(text).ok_or_else(|| LlmError::Parse("no fenced block".to_string()))?;
    let mut values = std::collections::BTreeMap::new();
    for line in block.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (name, raw) = line
            .split_once('=')
            .or_else(|| line.split_once(':'))
            .ok_or_else(|| LlmError::Parse(format!("unparseable line: {line}")))?;
        let name = name.trim();
        let raw = raw.trim().trim_matches('"').trim_matches('\'');
        let value = match space.param(name).map(|p| &p.domain) {
            Some(ParamDomain::Integer { .. }) => match raw.parse::<i64>() {
                Ok(i) => ParamValue::Int(i),
                Err(_) => {
                    let f: f64 = raw
                        .parse()
                        .map_err(|_| LlmError::Parse(format!("{name}: expected integer")))?;
                    ParamValue::Int(f.round() as i64)
                }
            },
            Some(ParamDomain::Real { .. }) => ParamValue::Float(
                raw.parse()
                    .map_err(|_| LlmError::Parse(format!("{name}: expected number")))?,
            ),
            Some(ParamDomain::Categorical { .. }) | None => ParamValue::Str(raw.to_string()),
        };
        values.insert(name.to_string(), value);
    }
    let config = Configuration::new(values);
    let report = space.validate(&config);
    if !report.is_valid() {
        return Err(LlmError::Parse(report.to_string()));
    }
    Ok(config)
}

/// History window shared by all prompt-based methods.
#[derive(Debug, Clone, Copy)]
pub struct PromptWindow {
    pub top_k: usize,
    pub last_n: usize,
}

impl Default for PromptWindow {
    fn default() -> Self {
        Self { top_k: 5, last_n: 20 }
    }
}

/// One line of the space description: name, kind, range, scale, default.
pub fn describe_space(space: &SearchSpace) -> String {
    let mut out = String::from("Hyperparameters:\n");
    for p in &space.params {
        let line = match &p.domain {
            ParamDomain::Integer { low, high, log } => format!(
                "- {}: integer in [{low}, {high}]{}, default {}",
                p.name,
                if *log { ", log scale" } else { "" },
                p.default
            ),
            ParamDomain::Real { low, high, log } => format!(
                "- {}: real in [{low}, {high}]{}, default {}",
                p.name,
                if *log { ", log scale" } else { "" },
                p.default
            ),
            ParamDomain::Categorical { choices } => format!(
                "- {}: one of {}, default {}",
                p.name,
                choices.join("/"),
                p.default
            ),
        };
        out.push_str(&line);
        out.push('\n');
    }
    out
}

fn config_inline(config: &Configuration, space: &SearchSpace, skip: Option<&str>) -> String {
    space
        .params
        .iter()
        .filter(|p| Some(p.name.as_str()) != skip)
        .filter_map(|p| config.get(&p.name).map(|v| format!("{}={}", p.name, v)))
        .collect::<Vec<_>>()
        .join(", ")
}

fn record_summary(record: &TrialRecord, space: &SearchSpace) -> String {
    let what = match &record.payload {
        TrialPayload::Config(c) => config_inline(c, space, None),
        TrialPayload::Code { sha256, .. } => format!("code edit {}", &sha256[..12]),
    };
    format!(
        "trial {}: objective {:.6}, status {:?}, {}",
        record.trial_id,
        record.objective,
        record.status,
        what
    )
}

/// The last `last_n` trials, oldest first.
pub fn format_history(history: &[TrialRecord], space: &SearchSpace, last_n: usize) -> String {
    let start = history.len().saturating_sub(last_n);
    let mut out = format!("Last {} trials:\n", history.len() - start);
    for r in &history[start..] {
        out.push_str(&record_summary(r, space));
        out.push('\n');
    }
    out
}

/// The `top_k` best trials by objective, best first.
pub fn format_top(history: &[TrialRecord], space: &SearchSpace, top_k: usize) -> String {
    let mut order: Vec<&TrialRecord> = history.iter().collect();
    order.sort_by(|a, b| a.objective.partial_cmp(&b.objective).unwrap());
    order.truncate(top_k);
    let mut out = format!("Top {} configurations so far:\n", order.len());
    for r in order {
        out.push_str(&record_summary(r, space));
        out.push('\n');
    }
    out
}

/// Prompt for the fixed-space suggestion agent.
pub fn agent14_prompt(
    history: &[TrialRecord],
    space: &SearchSpace,
    window: PromptWindow,
) -> Vec<Message> {
    let mut body = String::new();
    body.push_str(&describe_space(space));
    body.push('\n');
    body.push_str(&format_top(history, space, window.top_k));
    body.push('\n');
    body.push_str(&format_history(history, space, window.last_n));
    body.push_str(
        "\nSuggest the next configuration to evaluate. Reply with exactly one \
         fenced block of the form:\n```config\nNAME = value\n...\n```\n\
         covering every hyperparameter.",
    );
    vec![
        Message::system(
            "You are tuning hyperparameters of a training run. The objective is \
             minimized; failed trials are recorded with objective 100.",
        ),
        Message::user(body),
    ]
}

/// One parse-or-retry exchange: ask, parse, on parse failure explain the
/// error and retry once. Returns the configuration and the total inference
/// time, or the final error.
fn ask_for_config(
    client: &mut dyn ChatClient,
    mut messages: Vec<Message>,
    space: &SearchSpace,
) -> Result<(Configuration, f64), (LlmError, f64)> {
    let mut inference = 0.0;
    for attempt in 0..2 {
        match client.chat(&messages) {
            Ok(exchange) => {
                inference += exchange.inference_seconds;
                match parse_config_response(&exchange.response, space) {
                    Ok(config) => return Ok((config, inference)),
                    Err(e) => {
                        if attempt == 1 {
                            return Err((e, inference));
                        }
                        messages.push(Message {
                            role: "assistant".to_string(),
                            content: exchange.response,
                        });
                        messages.push(Message::user(format!(
                            "That reply could not be used ({e}). Reply again with one \
                             fenced ```config block containing every hyperparameter."
                        )));
                    }
                }
            }
            Err(e) => return Err((e, inference)),
        }
    }
    unreachable!("loop returns")
}

/// Fixed-space suggestion agent: the model sees the space, the recent
/// history, and the best configurations, and proposes the next one. Falls
/// back to a uniform random draw on unusable replies.
pub struct Agent14Optimizer {
    space: SearchSpace,
    client: Box<dyn ChatClient>,
    fallback: ChaCha12Rng,
    pub window: PromptWindow,
}

impl Agent14Optimizer {
    pub fn new(space: SearchSpace, seed: u64, client: Box<dyn ChatClient>) -> Self {
        Self {
            space,
            client,
            fallback: stream_rng(seed, "llm_fallback"),
            window: PromptWindow::default(),
        }
    }
}

impl Optimizer for Agent14Optimizer {
    fn name(&self) -> &str {
        "agent14"
    }

    fn ask(&mut self, history: &[TrialRecord]) -> Proposal {
        let messages = agent14_prompt(history, &self.space, self.window);
        match ask_for_config(self.client.as_mut(), messages, &self.space) {
            Ok((config, inference)) => {
                let mut p = Proposal::config(config, ProposalSource::Llm);
                p.inference_seconds = inference;
                p
            }
            Err((_, inference)) => {
                let mut p = Proposal::config(
                    random_propose(&self.space, &mut self.fallback),
                    ProposalSource::Random,
                );
                p.inference_seconds = inference;
                p
            }
        }
    }

    fn tell(&mut self, _proposal: &Proposal, _objective: f64) {}
}

/// The two published LLAMBO implementations differ in how the surrogate is
/// prompted; both score sampled candidates and keep the best score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LlamboVariant {
    /// Continuous objective labels, all HPs in prompts, failures visible
    /// with the penalty value.
    Paper,
    /// Binary labels at the top-20% threshold, categorical delegated to
    /// random sampling and excluded from prompts, failures hidden.
    Optuna,
}

/// Fraction of successful trials labeled good in the optuna variant.
pub const LLAMBO_GOOD_FRACTION: f64 = 0.2;
/// Candidates scored per ask: perturbations of top configs plus fresh draws.
pub const LLAMBO_PERTURBED: usize = 5;
pub const LLAMBO_FRESH: usize = 5;
const LLAMBO_PERTURB_STD: f64 = 0.1;

/// Exemplar section of the surrogate prompt, per the variant's rules.
pub fn llambo_exemplars(
    history: &[TrialRecord],
    space: &SearchSpace,
    variant: LlamboVariant,
    penalty: f64,
) -> String {
    let skip = match variant {
        LlamboVariant::Paper => None,
        LlamboVariant::Optuna => Some("WINDOW_PATTERN"),
    };
    let configs: Vec<(&TrialRecord, &Configuration)> = history
        .iter()
        .filter_map(|r| match &r.payload {
            TrialPayload::Config(c) => Some((r, c)),
            TrialPayload::Code { .. } => None,
        })
        .collect();
    let mut out = String::from("Observed trials:\n");
    match variant {
        LlamboVariant::Paper => {
            for (r, c) in &configs {
                let label = if r.status == TrialStatus::Ok {
                    r.objective
                } else {
                    penalty
                };
                out.push_str(&format!("- {} -> {:.6}\n", config_inline(c, space, skip), label));
            }
        }
        LlamboVariant::Optuna => {
            let mut ok: Vec<&(&TrialRecord, &Configuration)> = configs
                .iter()
                .filter(|(r, _)| r.status == TrialStatus::Ok)
                .collect();
            ok.sort_by(|a, b| a.0.objective.partial_cmp(&b.0.objective).unwrap());
            let n_good = ((ok.len() as f64 * LLAMBO_GOOD_FRACTION).floor() as usize).max(1);
            let n_good = n_good.min(ok.len());
            let good_ids: std::collections::BTreeSet<u64> =
                ok[..n_good].iter().map(|(r, _)| r.trial_id).collect();
            for (r, c) in &configs {
                if r.status != TrialStatus::Ok {
                    continue; // failures hidden from the surrogate
                }
                let label = if good_ids.contains(&r.trial_id) { 1 } else { 0 };
                out.push_str(&format!("- {} -> {}\n", config_inline(c, space, skip), label));
            }
        }
    }
    out
}

/// Full scoring prompt for one candidate.
pub fn llambo_candidate_prompt(
    history: &[TrialRecord],
    candidate: &Configuration,
    space: &SearchSpace,
    variant: LlamboVariant,
    penalty: f64,
) -> Vec<Message> {
    let skip = match variant {
        LlamboVariant::Paper => None,
        LlamboVariant::Optuna => Some("WINDOW_PATTERN"),
    };
    let question = match variant {
        LlamboVariant::Paper => {
            "Predict the objective value this candidate will reach. Reply with a single number."
        }
        LlamboVariant::Optuna => {
            "Estimate the probability that this candidate lands in the good group. \
             Reply with a single number between 0 and 1."
        }
    };
    let body = format!(
        "{}\n{}\nCandidate: {}\n{}",
        describe_space_filtered(space, skip),
        llambo_exemplars(history, space, variant, penalty),
        config_inline(candidate, space, skip),
        question
    );
    vec![
        Message::system("You are a surrogate model for hyperparameter optimization."),
        Message::user(body),
    ]
}

fn describe_space_filtered(space: &SearchSpace, skip: Option<&str>) -> String {
    match skip {
        None => describe_space(space),
        Some(name) => {
            let filtered = SearchSpace {
                params: space
                    .params
                    .iter()
                    .filter(|p| p.name != name)
                    .cloned()
                    .collect(),
            };
            describe_space(&filtered)
        }
    }
}

/// Last number in the reply text, if any.
pub fn parse_score(text: &str) -> Option<f64> {
    let re = regex::Regex::new(r"-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?").expect("valid pattern");
    re.find_iter(text)
        .last()
        .and_then(|m| m.as_str().parse().ok())
}

/// Candidate-scoring optimizer: samples candidates, asks the model to score
/// each against exemplar trials, and evaluates the best-scored one.
pub struct LlamboOptimizer {
    space: SearchSpace,
    client: Box<dyn ChatClient>,
    pub variant: LlamboVariant,
    sampler: ChaCha12Rng,
    fallback: ChaCha12Rng,
    pub penalty: f64,
}

impl LlamboOptimizer {
    pub fn new(
        space: SearchSpace,
        seed: u64,
        client: Box<dyn ChatClient>,
        variant: LlamboVariant,
    ) -> Self {
        Self {
            space,
            client,
            variant,
            sampler: stream_rng(seed, "sampler"),
            fallback: stream_rng(seed, "llm_fallback"),
            penalty: crate::DEFAULT_PENALTY,
        }
    }

    /// 5 Gaussian perturbations of the top-3 successful configs plus 5
    /// fresh uniform draws; in the optuna variant every candidate's
    /// categorical is re-sampled uniformly.
    fn candidates(&mut self, history: &[TrialRecord]) -> Vec<Configuration> {
        let mut top: Vec<(&TrialRecord, &Configuration)> = history
            .iter()
            .filter_map(|r| match &r.payload {
                TrialPayload::Config(c) if r.status == TrialStatus::Ok => Some((r, c)),
                _ => None,
            })
            .collect();
        top.sort_by(|a, b| a.0.objective.partial_cmp(&b.0.objective).unwrap());
        top.truncate(3);
        let mut out = Vec::with_capacity(LLAMBO_PERTURBED + LLAMBO_FRESH);
        for i in 0..LLAMBO_PERTURBED {
            let candidate = if top.is_empty() {
                random_propose(&self.space, &mut self.sampler)
            } else {
                let base = top[i % top.len()].1;
                let u = self.space.normalize(base).expect("logged config validates");
                let coords: Vec<f64> = u
                    .coords
                    .iter()
                    .map(|&c| {
                        use rand_distr::Distribution;
                        let z: f64 = rand_distr::StandardNormal.sample(&mut self.sampler);
                        (c + LLAMBO_PERTURB_STD * z).clamp(0.0, 1.0)
                    })
                    .collect();
                self.space.denormalize(&UnitVector::new(coords))
            };
            out.push(candidate);
        }
        for _ in 0..LLAMBO_FRESH {
            out.push(random_propose(&self.space, &mut self.sampler));
        }
        if self.variant == LlamboVariant::Optuna {
            if let Some(ParamDomain::Categorical { choices }) =
                self.space.param("WINDOW_PATTERN").map(|p| &p.domain)
            {
                let choices = choices.clone();
                for c in &mut out {
                    let idx = self.sampler.gen_range(0..choices.len());
                    c.values
                        .insert("WINDOW_PATTERN".to_string(), ParamValue::Str(choices[idx].clone()));
                }
            }
        }
        out
    }
}

impl Optimizer for LlamboOptimizer {
    fn name(&self) -> &str {
        match self.variant {
            LlamboVariant::Paper => "llambo-paper",
            LlamboVariant::Optuna => "llambo-optuna",
        }
    }

    fn ask(&mut self, history: &[TrialRecord]) -> Proposal {
        let candidates = self.candidates(history);
        let mut inference = 0.0;
        let mut best: Option<(f64, &Configuration)> = None;
        for candidate in &candidates {
            let messages = llambo_candidate_prompt(
                history,
                candidate,
                &self.space,
                self.variant,
                self.penalty,
            );
            let score = match self.client.chat(&messages) {
                Ok(exchange) => {
                    inference += exchange.inference_seconds;
                    parse_score(&exchange.response)
                }
                Err(_) => None, // unscored candidates drop out
            };
            let Some(score) = score else { continue };
            let better = match (&best, self.variant) {
                (None, _) => true,
                (Some((s, _)), LlamboVariant::Paper) => score < *s,
                (Some((s, _)), LlamboVariant::Optuna) => score > *s,
            };
            if better {
                best = Some((score, candidate));
            }
        }
        let mut proposal = match best {
            Some((_, config)) => Proposal::config(config.clone(), ProposalSource::Llm),
            None => Proposal::config(
                random_propose(&self.space, &mut self.fallback),
                ProposalSource::Random,
            ),
        };
        proposal.inference_seconds = inference;
        proposal
    }

    fn tell(&mut self, _proposal: &Proposal, _objective: f64) {}
}

/// Prompt for the code-editing agent: the full incumbent source plus recent
/// trial summaries.
pub fn code_prompt(
    current_source: &str,
    history: &[TrialRecord],
    space: &SearchSpace,
    last_n: usize,
) -> Vec<Message> {
    let body = format!(
        "Current training script:\n```python\n{}\n```\n\n{}\n\
         Edit the script to reduce the objective. Reply with the complete \
         modified script in one fenced ```python block.",
        current_source,
        format_history(history, space, last_n),
    );
    vec![
        Message::system(
            "You are improving a training script. The objective is minimized; \
             failed runs are recorded with objective 100.",
        ),
        Message::user(body),
    ]
}

/// Code-editing agent: proposes whole-script rewrites; the incumbent source
/// for each prompt is the script of the best trial so far. Replies without
/// a fenced block are retried once, then charged as a failed trial.
pub struct CodeAgentOptimizer {
    space: SearchSpace,
    client: Box<dyn ChatClient>,
    base_source: String,
    /// Evaluated (source, objective) pairs, in trial order.
    evaluated: Vec<(String, f64)>,
    pub window: PromptWindow,
}

impl CodeAgentOptimizer {
    pub fn new(space: SearchSpace, client: Box<dyn ChatClient>, base_source: String) -> Self {
        Self {
            space,
            client,
            base_source,
            evaluated: Vec::new(),
            window: PromptWindow::default(),
        }
    }

    fn incumbent(&self) -> &str {
        self.evaluated
            .iter()
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .map(|(s, _)| s.as_str())
            .unwrap_or(&self.base_source)
    }
}

impl Optimizer for CodeAgentOptimizer {
    fn name(&self) -> &str {
        "code-agent"
    }

    fn baseline(&self, _space: &SearchSpace) -> ProposalPayload {
        ProposalPayload::Source(self.base_source.clone())
    }

    fn ask(&mut self, history: &[TrialRecord]) -> Proposal {
        let incumbent = self.incumbent().to_string();
        let mut messages = code_prompt(&incumbent, history, &self.space, self.window.last_n);
        let mut inference = 0.0;
        for attempt in 0..2 {
            match self.client.chat(&messages) {
                Ok(exchange) => {
                    inference += exchange.inference_seconds;
                    if let Some(source) = last_fenced_block(&exchange.response) {
                        let mut p = Proposal::source(source, ProposalSource::Llm);
                        p.inference_seconds = inference;
                        return p;
                    }
                    if attempt == 0 {
                        messages.push(Message {
                            role: "assistant".to_string(),
                            content: exchange.response,
                        });
                        messages.push(Message::user(
                            "That reply had no fenced code block. Reply with the complete \
                             script in one fenced ```python block.",
                        ));
                    }
                }
                Err(_) => break,
            }
        }
        // the proposal itself failed; the study loop records a penalized
        // runtime_error trial without executing anything
        let mut p = Proposal::source(incumbent, ProposalSource::Llm);
        p.failed = true;
        p.inference_seconds = inference;
        p
    }

    fn tell(&mut self, proposal: &Proposal, objective: f64) {
        if proposal.failed {
            return;
        }
        if let ProposalPayload::Source(src) = &proposal.payload {
            self.evaluated.push((src.clone(), objective));
        }
    }

    fn observe(&mut self, payload: &ProposalPayload, objective: f64) {
        if let ProposalPayload::Source(src) = payload {
            self.evaluated.push((src.clone(), objective));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runner::{ProposalSource, TrialPayload};

    fn preset() -> SearchSpace {
        SearchSpace::preset()
    }

    fn record(space: &SearchSpace, id: u64, objective: f64, status: TrialStatus) -> TrialRecord {
        TrialRecord {
            trial_id: id,
            method: "test".to_string(),
            seed: 0,
            proposal_source: ProposalSource::Classical,
            payload: TrialPayload::Config(space.defaults()),
            status,
            objective,
            train_seconds: 60.0,
            started_at: 0.0,
            ended_at: 0.0,
            overridden: None,
        }
    }

    #[test]
    fn fenced_block_extraction_takes_the_last_block() {
        let text = "thinking\n```config\nA = 1\n```\nmore\n```config\nB = 2\n```\n";
        assert_eq!(last_fenced_block(text).unwrap(), "B = 2");
        assert_eq!(last_fenced_block("no blocks here"), None);
    }

    #[test]
    fn config_block_round_trips_defaults() {
        let space = preset();
        let block = format_config_block(&space.defaults(), &space);
        let parsed = parse_config_response(&block, &space).unwrap();
        assert_eq!(parsed, space.defaults());
    }

    #[test]
    fn parse_rejects_missing_parameter() {
        let space = preset();
        let mut config = space.defaults();
        config.values.remove("SCALAR_LR");
        let block = format_config_block(&config, &space);
        let err = parse_config_response(&block, &space).unwrap_err();
        assert!(err.to_string().contains("SCALAR_LR: missing parameter"));
    }

    #[test]
    fn parse_rejects_out_of_bounds_values() {
        let space = preset();
        let mut config = space.defaults();
        config.values.insert("DEPTH".into(), ParamValue::Int(3));
        let block = format_config_block(&config, &space);
        let err = parse_config_response(&block, &space).unwrap_err();
        assert!(err.to_string().contains("DEPTH: below lower bound 4"));
    }

    #[test]
    fn parse_coerces_float_text_for_integer_params() {
        let space = preset();
        let mut block = format_config_block(&space.defaults(), &space);
        block = block.replace("DEPTH = 8", "DEPTH = 8.0");
        let parsed = parse_config_response(&block, &space).unwrap();
        assert_eq!(parsed.get("DEPTH"), Some(&ParamValue::Int(8)));
    }

    #[test]
    fn agent_proposes_the_mocked_configuration() {
        let space = preset();
        let block = format_config_block(&space.defaults(), &space);
        let client = ScriptedClient::always(&block);
        let mut opt = Agent14Optimizer::new(space.clone(), 0, Box::new(client));
        let p = opt.ask(&[]);
        assert_eq!(p.source_tag, ProposalSource::Llm);
        match p.payload {
            ProposalPayload::Config(c) => assert_eq!(c, space.defaults()),
            _ => panic!("expected config payload"),
        }
    }

    #[test]
    fn agent_falls_back_to_the_dedicated_random_stream() {
        let space = preset();
        let client = ScriptedClient::always("no block at all");
        let mut opt = Agent14Optimizer::new(space.clone(), 7, Box::new(client));
        let p = opt.ask(&[]);
        assert_eq!(p.source_tag, ProposalSource::Random);
        let mut expected_rng = stream_rng(7, "llm_fallback");
        let expected = random_propose(&space, &mut expected_rng);
        match p.payload {
            ProposalPayload::Config(c) => assert_eq!(c, expected),
            _ => panic!("expected config payload"),
        }
    }

    #[test]
    fn agent_retries_once_with_an_error_explanation() {
        let space = preset();
        let good = format_config_block(&space.defaults(), &space);
        let client = ScriptedClient::new(vec![Ok("garbage".to_string()), Ok(good)]);
        let mut opt = Agent14Optimizer::new(space.clone(), 0, Box::new(client));
        let p = opt.ask(&[]);
        assert_eq!(p.source_tag, ProposalSource::Llm);
    }

    #[test]
    fn prompt_window_caps_history_at_twenty() {
        let space = preset();
        let history: Vec<TrialRecord> = (1..=25)
            .map(|i| record(&space, i, i as f64 * 0.01, TrialStatus::Ok))
            .collect();
        let text = format_history(&history, &space, 20);
        let entries = text.lines().filter(|l| l.starts_with("trial ")).count();
        assert_eq!(entries, 20);
        assert!(text.contains("trial 6:"));
        assert!(!text.contains("trial 5:"));
        let top = format_top(&history, &space, 5);
        assert_eq!(top.lines().filter(|l| l.starts_with("trial ")).count(), 5);
    }

    #[test]
    fn optuna_labels_exactly_the_top_fifth() {
        let space = preset();
        let history: Vec<TrialRecord> = (1..=10)
            .map(|i| record(&space, i, i as f64 * 0.1, TrialStatus::Ok))
            .collect();
        let text = llambo_exemplars(&history, &space, LlamboVariant::Optuna, 100.0);
        let ones = text.matches("-> 1").count();
        let zeros = text.matches("-> 0").count();
        assert_eq!(ones, 2);
        assert_eq!(zeros, 8);
    }

    #[test]
    fn optuna_prompts_never_mention_the_categorical() {
        let space = preset();
        let history: Vec<TrialRecord> = (1..=10)
            .map(|i| record(&space, i, i as f64 * 0.1, TrialStatus::Ok))
            .collect();
        let messages = llambo_candidate_prompt(
            &history,
            &space.defaults(),
            &space,
            LlamboVariant::Optuna,
            100.0,
        );
        for m in &messages {
            assert!(!m.content.contains("WINDOW_PATTERN"));
        }
        let paper = llambo_candidate_prompt(
            &history,
            &space.defaults(),
            &space,
            LlamboVariant::Paper,
            100.0,
        );
        assert!(paper.iter().any(|m| m.content.contains("WINDOW_PATTERN")));
    }

    #[test]
    fn failed_trials_visible_only_in_the_paper_variant() {
        let space = preset();
        let mut history: Vec<TrialRecord> = (1..=5)
            .map(|i| record(&space, i, i as f64 * 0.1, TrialStatus::Ok))
            .collect();
        history.push(record(&space, 6, 100.0, TrialStatus::Oom));
        let paper = llambo_exemplars(&history, &space, LlamboVariant::Paper, 100.0);
        assert!(paper.contains("-> 100.000000"));
        let optuna = llambo_exemplars(&history, &space, LlamboVariant::Optuna, 100.0);
        assert!(!optuna.contains("100.000000"));
        assert_eq!(optuna.lines().filter(|l| l.starts_with("- ")).count(), 5);
    }

    #[test]
    fn llambo_picks_minimum_predicted_metric_in_paper_variant() {
        let space = preset();
        // 10 candidates scored 10, 9, ..., 1 — the last (a fresh random
        // draw) gets the minimum
        let replies: Vec<Result<String, String>> =
            (0..10).map(|i| Ok(format!("score: {}", 10 - i))).collect();
        let client = ScriptedClient::new(replies);
        let mut opt =
            LlamboOptimizer::new(space.clone(), 0, Box::new(client), LlamboVariant::Paper);
        let history: Vec<TrialRecord> = (1..=10)
            .map(|i| record(&space, i, i as f64 * 0.1, TrialStatus::Ok))
            .collect();
        let p = opt.ask(&history);
        assert_eq!(p.source_tag, ProposalSource::Llm);
        // reconstruct the candidate list with an identical RNG state
        let dummy = ScriptedClient::always("");
        let mut twin =
            LlamboOptimizer::new(space.clone(), 0, Box::new(dummy), LlamboVariant::Paper);
        let candidates = twin.candidates(&history);
        match p.payload {
            ProposalPayload::Config(c) => assert_eq!(&c, candidates.last().unwrap()),
            _ => panic!("expected config payload"),
        }
    }

    #[test]
    fn llambo_with_dead_endpoint_degenerates_to_random() {
        let space = preset();
        let client = ScriptedClient::new(vec![Err("down".to_string())]);
        let mut opt =
            LlamboOptimizer::new(space.clone(), 3, Box::new(client), LlamboVariant::Optuna);
        let p = opt.ask(&[]);
        assert_eq!(p.source_tag, ProposalSource::Random);
    }

    #[test]
    fn parse_score_takes_the_last_number() {
        assert_eq!(parse_score("the score is 0.25"), Some(0.25));
        assert_eq!(parse_score("maybe 3, final: 1e-3"), Some(0.001));
        assert_eq!(parse_score("no numbers"), None);
    }

    #[test]
    fn code_agent_extracts_the_returned_script() {
        let space = preset();
        let reply = "```python\nDEPTH = 12\n```";
        let client = ScriptedClient::always(reply);
        let mut opt =
            CodeAgentOptimizer::new(space.clone(), Box::new(client), "DEPTH = 8\n".to_string());
        let p = opt.ask(&[]);
        assert!(!p.failed);
        match p.payload {
            ProposalPayload::Source(src) => assert_eq!(src, "DEPTH = 12"),
            _ => panic!("expected source payload"),
        }
    }

    #[test]
    fn code_agent_without_a_block_twice_fails_the_proposal() {
        let space = preset();
        let client = ScriptedClient::always("I think you should increase depth.");
        let mut opt =
            CodeAgentOptimizer::new(space.clone(), Box::new(client), "DEPTH = 8\n".to_string());
        let p = opt.ask(&[]);
        assert!(p.failed);
        assert_eq!(p.source_tag, ProposalSource::Llm);
    }

    #[test]
    fn code_agent_prompts_from_the_best_source_so_far() {
        let space = preset();
        let client = ScriptedClient::always("```python\nDEPTH = 9\n```");
        let mut opt =
            CodeAgentOptimizer::new(space.clone(), Box::new(client), "DEPTH = 8\n".to_string());
        opt.observe(&ProposalPayload::Source("DEPTH = 8\n".to_string()), 2.0);
        let best = Proposal::source("DEPTH = 10\n".to_string(), ProposalSource::Llm);
        opt.tell(&best, 0.5);
        let worse = Proposal::source("DEPTH = 11\n".to_string(), ProposalSource::Llm);
        opt.tell(&worse, 3.0);
        assert_eq!(opt.incumbent(), "DEPTH = 10\n");
    }

    #[test]
    fn identity_mock_echoes_the_shown_block() {
        let space = preset();
        let shown = format_config_block(&space.defaults(), &space);
        let mut client = MockClient::new(MockKind::Identity, space.clone());
        let exchange = client
            .chat(&[Message::user(format!("proposal:\n{shown}"))])
            .unwrap();
        let parsed = parse_config_response(&exchange.response, &space).unwrap();
        assert_eq!(parsed, space.defaults());
    }

    #[test]
    fn oracle_mock_returns_the_sphere_optimum_region() {
        let space = preset();
        let mut client = MockClient::new(MockKind::OracleSphere, space.clone());
        let exchange = client.chat(&[Message::user("anything")]).unwrap();
        let parsed = parse_config_response(&exchange.response, &space).unwrap();
        let coords = space.normalize_continuous(&parsed).unwrap();
        let value = crate::synthetic::sphere(&coords);
        assert!(value < 1e-3, "oracle config scores {value}");
    }

    #[test]
    fn http_client_retries_then_succeeds_and_sends_the_token_contract() {
        use std::io::{Read, Write};
        use std::net::TcpListener;

        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let handle = std::thread::spawn(move || {
            let mut captured = Vec::new();
            let ok_body = serde_json::json!({
                "choices": [{"message": {"role": "assistant", "content": "hello"}}]
            })
            .to_string();
            for i in 0..3 {
                let (mut stream, _) = listener.accept().unwrap();
                let mut buf = vec![0u8; 65536];
                let mut text = String::new();
                loop {
                    let n = stream.read(&mut buf).unwrap();
                    text.push_str(&String::from_utf8_lossy(&buf[..n]));
                    if let Some(pos) = text.find("\r\n\r\n") {
                        let headers = &text[..pos];
                        let need: usize = headers
                            .lines()
                            .find_map(|l| l.to_ascii_lowercase().strip_prefix("content-length:")
                                .map(|v| v.trim().parse().unwrap()))
                            .unwrap_or(0);
                        if text.len() >= pos + 4 + need {
                            break;
                        }
                    }
                }
                captured.push(text);
                let (status, body) = if i < 2 {
                    ("500 Internal Server Error", "busy")
                } else {
                    ("200 OK", ok_body.as_str())
                };
                let response = format!(
                    "HTTP/1.1 {status}\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{}",
                    body.len(),
                    body
                );
                stream.write_all(response.as_bytes()).unwrap();
            }
            captured
        });

        let endpoint = LlmEndpointConfig::fixed_hp(&format!("http://{addr}"), "test-model");
        let mut client = HttpChatClient::new(endpoint);
        let exchange = client.chat(&[Message::user("ping")]).unwrap();
        assert_eq!(exchange.response, "hello");
        assert_eq!(exchange.attempts, 3);

        let captured = handle.join().unwrap();
        assert_eq!(captured.len(), 3);
        let body_start = captured[0].find("\r\n\r\n").unwrap() + 4;
        let body: serde_json::Value = serde_json::from_str(&captured[0][body_start..]).unwrap();
        assert_eq!(body["model"], "test-model");
        assert_eq!(body["temperature"], 0.7);
        assert_eq!(body["max_tokens"], 2048);
        assert_eq!(body["messages"][0]["content"], "ping");
    }

    #[test]
    fn http_client_reports_unavailable_when_nothing_listens() {
        let endpoint = LlmEndpointConfig {
            timeout_seconds: 1.0,
            retries: 1,
            ..LlmEndpointConfig::fixed_hp("http://127.0.0.1:1", "m")
        };
        let mut client = HttpChatClient::new(endpoint);
        assert!(matches!(
            client.chat(&[Message::user("ping")]),
            Err(LlmError::Unavailable(_))
        ));
    }
}

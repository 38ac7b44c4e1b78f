//! Tree-structured Parzen Estimator over the fixed search space.
//!
//! Each ask splits the history into good/bad groups at the γ quantile,
//! fits per-hyperparameter Parzen densities to both, draws candidates from
//! the good model, and keeps the candidate maximizing the l/g density ratio.
//! Densities are per-HP and independent (the space is flat).

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::optim::{random_propose, stream_rng, Optimizer, Proposal, ProposalPayload};
use crate::runner::{ProposalSource, TrialRecord};
use crate::space::{Configuration, ParamDomain, SearchSpace, UnitVector};

pub const DEFAULT_GAMMA: f64 = 0.25;
pub const DEFAULT_N_STARTUP: usize = 10;
pub const DEFAULT_N_CANDIDATES: usize = 24;
/// Floor on the shared kernel bandwidth.
pub const MIN_BANDWIDTH: f64 = 0.05;

/// One evaluated configuration as the TPE sees it.
#[derive(Debug, Clone)]
pub struct Observation {
    pub config: Configuration,
    pub objective: f64,
}

/// Splits observations into (good, bad) index sets: ascending objective,
/// `n_good = max(1, ceil(gamma * n))`, ties by insertion order. Failed
/// trials (objective == penalty) always land in bad unless everything
/// failed.
pub fn tpe_split(
    history: &[Observation],
    gamma: f64,
    penalty: f64,
) -> (Vec<usize>, Vec<usize>) {
    assert!(!history.is_empty(), "history must be non-empty");
    assert!(gamma > 0.0 && gamma < 1.0, "gamma must be in (0,1)");
    let n = history.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        history[a]
            .objective
            .partial_cmp(&history[b].objective)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let n_good = ((gamma * n as f64).ceil() as usize).max(1);
    let n_ok = history.iter().filter(|o| o.objective != penalty).count();
    let n_good = if n_ok == 0 { n_good } else { n_good.min(n_ok) };
    let good = order[..n_good].to_vec();
    let bad = order[n_good..].to_vec();
    (good, bad)
}

/// Per-hyperparameter Parzen density in normalized coordinates.
#[derive(Debug, Clone)]
pub enum ParamModel {
    /// Truncated-Gaussian kernels at the observed values plus one uniform
    /// prior kernel over `[0,1]`, equally weighted.
    Numeric { centers: Vec<f64>, bandwidth: f64 },
    /// Choice probabilities with +1 smoothing; sums to 1 over choices.
    Categorical { probs: Vec<f64> },
}

fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Density of a Gaussian with the given center/width truncated to `[0,1]`.
fn truncated_pdf(x: f64, center: f64, bandwidth: f64) -> f64 {
    let mass = normal_cdf((1.0 - center) / bandwidth) - normal_cdf((0.0 - center) / bandwidth);
    normal_pdf((x - center) / bandwidth) / bandwidth / mass
}

impl ParamModel {
    /// Density at a normalized coordinate. Numeric densities integrate to 1
    /// over `[0,1]`; categorical probabilities sum to 1 over choices.
    pub fn density(&self, u: f64) -> f64 {
        match self {
            ParamModel::Numeric { centers, bandwidth } => {
                let prior = 1.0;
                let kernels: f64 = centers
                    .iter()
                    .map(|&c| truncated_pdf(u, c, *bandwidth))
                    .sum();
                (prior + kernels) / (centers.len() + 1) as f64
            }
            ParamModel::Categorical { probs } => {
                let k = probs.len();
                let idx = ((u * k as f64).floor() as usize).min(k - 1);
                probs[idx]
            }
        }
    }

    /// Draws one normalized coordinate from the mixture.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            ParamModel::Numeric { centers, bandwidth } => {
                let pick = rng.gen_range(0..=centers.len());
                if pick == centers.len() {
                    rng.gen::<f64>()
                } else {
                    let c = centers[pick];
                    // rejection from the untruncated kernel; acceptance is
                    // at least 1/2 for centers inside the box
                    loop {
                        let z: f64 = rng.sample(StandardNormal);
                        let x = c + bandwidth * z;
                        if (0.0..=1.0).contains(&x) {
                            return x;
                        }
                    }
                }
            }
            ParamModel::Categorical { probs } => {
                let mut u = rng.gen::<f64>();
                let k = probs.len();
                for (idx, p) in probs.iter().enumerate() {
                    if u < *p || idx == k - 1 {
                        return (idx as f64 + 0.5) / k as f64;
                    }
                    u -= p;
                }
                unreachable!("probabilities sum to 1")
            }
        }
    }
}

/// Independent per-HP densities fitted to one group of observations.
#[derive(Debug, Clone)]
pub struct ParzenModel {
    pub per_param: Vec<ParamModel>,
}

/// Fits the Parzen model: numeric HPs get truncated-Gaussian kernels at the
/// observed normalized values (bandwidth `max(std * n^(-1/5), 0.05)`) plus a
/// uniform prior kernel; categoricals get +1-smoothed counts. An empty group
/// yields the prior-only model.
pub fn tpe_build(group: &[&Observation], space: &SearchSpace) -> ParzenModel {
    let coords: Vec<Vec<f64>> = group
        .iter()
        .map(|o| space.normalize(&o.config).expect("observation validates").coords)
        .collect();
    let per_param = space
        .params
        .iter()
        .enumerate()
        .map(|(d, p)| match &p.domain {
            ParamDomain::Categorical { choices } => {
                let k = choices.len();
                let mut counts = vec![1.0f64; k];
                for c in &coords {
                    let idx = ((c[d] * k as f64).floor() as usize).min(k - 1);
                    counts[idx] += 1.0;
                }
                let total: f64 = counts.iter().sum();
                ParamModel::Categorical {
                    probs: counts.into_iter().map(|v| v / total).collect(),
                }
            }
            _ => {
                let centers: Vec<f64> = coords.iter().map(|c| c[d]).collect();
                let n = centers.len();
                let bandwidth = if n == 0 {
                    MIN_BANDWIDTH
                } else {
                    let mean = centers.iter().sum::<f64>() / n as f64;
                    let var =
                        centers.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / n as f64;
                    (var.sqrt() * (n as f64).powf(-0.2)).max(MIN_BANDWIDTH)
                };
                ParamModel::Numeric { centers, bandwidth }
            }
        })
        .collect();
    ParzenModel { per_param }
}

/// One TPE proposal: below `n_startup` history entries this is a uniform
/// random draw; otherwise candidates are sampled from the good model and the
/// one maximizing the product of per-HP density ratios l/g wins.
pub fn tpe_propose(
    history: &[Observation],
    space: &SearchSpace,
    rng: &mut impl Rng,
    params: &TpeParams,
) -> (Configuration, ProposalSource) {
    if history.len() < params.n_startup {
        return (random_propose(space, rng), ProposalSource::Random);
    }
    let (good_idx, bad_idx) = tpe_split(history, params.gamma, params.penalty);
    let good: Vec<&Observation> = good_idx.iter().map(|&i| &history[i]).collect();
    let bad: Vec<&Observation> = bad_idx.iter().map(|&i| &history[i]).collect();
    let l = tpe_build(&good, space);
    let g = tpe_build(&bad, space);

    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..params.n_candidates {
        let coords: Vec<f64> = l.per_param.iter().map(|m| m.sample(rng)).collect();
        let score: f64 = coords
            .iter()
            .zip(&l.per_param)
            .zip(&g.per_param)
            .map(|((&u, lm), gm)| lm.density(u).ln() - gm.density(u).ln())
            .sum();
        let replace = match &best {
            None => true,
            Some((s, _)) => score > *s,
        };
        if replace {
            best = Some((score, coords));
        }
    }
    let (_, coords) = best.expect("n_candidates > 0");
    (
        space.denormalize(&UnitVector::new(coords)),
        ProposalSource::Classical,
    )
}

#[derive(Debug, Clone)]
pub struct TpeParams {
    pub gamma: f64,
    pub n_startup: usize,
    pub n_candidates: usize,
    pub penalty: f64,
}

impl Default for TpeParams {
    fn default() -> Self {
        Self {
            gamma: DEFAULT_GAMMA,
            n_startup: DEFAULT_N_STARTUP,
            n_candidates: DEFAULT_N_CANDIDATES,
            penalty: crate::DEFAULT_PENALTY,
        }
    }
}

/// Ask/tell wrapper; rebuilds the density models on every ask.
pub struct TpeOptimizer {
    space: SearchSpace,
    rng: ChaCha12Rng,
    pub params: TpeParams,
    observations: Vec<Observation>,
}

impl TpeOptimizer {
    pub fn new(space: SearchSpace, seed: u64) -> Self {
        Self {
            space,
            rng: stream_rng(seed, "sampler"),
            params: TpeParams::default(),
            observations: Vec::new(),
        }
    }

    fn record(&mut self, payload: &ProposalPayload, objective: f64) {
        if let ProposalPayload::Config(c) = payload {
            self.observations.push(Observation {
                config: c.clone(),
                objective,
            });
        }
    }
}

impl Optimizer for TpeOptimizer {
    fn name(&self) -> &str {
        "tpe"
    }

    fn ask(&mut self, _history: &[TrialRecord]) -> Proposal {
        let (config, source) =
            tpe_propose(&self.observations, &self.space, &mut self.rng, &self.params);
        Proposal::config(config, source)
    }

    fn tell(&mut self, proposal: &Proposal, objective: f64) {
        let payload = proposal.payload.clone();
        self.record(&payload, objective);
    }

    fn observe(&mut self, payload: &ProposalPayload, objective: f64) {
        let payload = payload.clone();
        self.record(&payload, objective);
    }
}

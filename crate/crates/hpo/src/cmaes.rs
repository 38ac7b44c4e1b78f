//! CMA-ES over the normalized unit box, with state export for prompting.
//!
//! The strategy keeps a multivariate Gaussian (mean, step-size, covariance)
//! and adapts it from ranked samples with the standard cumulation constants.
//! Samples are clamped to `[0,1]^d`; individuals are interleaved with the
//! study loop one trial at a time and a generation update fires once
//! `lambda` results have accumulated.

use num_traits::Float;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::optim::{stream_rng, Optimizer, Proposal, ProposalPayload};
use crate::runner::{ProposalSource, TrialRecord};
use crate::space::{Configuration, ParamValue, SearchSpace, UnitVector};

/// Default initial step-size for unit-box domains.
pub const DEFAULT_SIGMA0: f64 = 0.3;

/// Eigenvalues below `max_eig * EIGEN_FLOOR_RATIO` trigger a ridge repair.
const EIGEN_FLOOR_RATIO: f64 = 1e-14;

/// Core CMA-ES state over `[0,1]^d`, generic over the scalar type.
#[derive(Debug, Clone)]
pub struct CmaEs<F: Float = f64> {
    dim: usize,
    lambda: usize,
    mu: usize,
    weights: Vec<F>,
    mu_eff: F,
    c_sigma: F,
    d_sigma: F,
    c_c: F,
    c_1: F,
    c_mu: F,
    chi_n: F,
    pub mean: Vec<F>,
    pub sigma: F,
    pub cov: Vec<Vec<F>>,
    p_sigma: Vec<F>,
    p_c: Vec<F>,
    eigen: Option<Eigen<F>>,
    pub generation: u64,
    pending: Vec<(Vec<F>, F)>,
}

#[derive(Debug, Clone)]
struct Eigen<F> {
    /// Columns are eigenvectors.
    basis: Vec<Vec<F>>,
    /// Square roots of the eigenvalues.
    scale: Vec<F>,
}

fn f<F: Float>(x: f64) -> F {
    F::from(x).unwrap()
}

impl<F: Float> CmaEs<F> {
    /// Standard population size `4 + floor(3 ln d)`.
    pub fn default_lambda(dim: usize) -> usize {
        4 + (3.0 * (dim as f64).ln()).floor() as usize
    }

    pub fn new(initial_mean: Vec<F>, sigma0: F) -> Self {
        let dim = initial_mean.len();
        assert!(dim >= 1, "dimension must be at least 1");
        assert!(sigma0 > F::zero(), "sigma0 must be positive");
        let lambda = Self::default_lambda(dim);
        let mu = lambda / 2;
        // log-rank recombination weights over the top mu, normalized to 1
        let raw: Vec<f64> = (1..=mu)
            .map(|i| ((lambda as f64 + 1.0) / 2.0).ln() - (i as f64).ln())
            .collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<F> = raw.iter().map(|w| f(w / total)).collect();
        let mu_eff = {
            let sum_sq: f64 = raw.iter().map(|w| (w / total).powi(2)).sum();
            f::<F>(1.0 / sum_sq)
        };
        let n = dim as f64;
        let mu_eff_f = mu_eff.to_f64().unwrap();
        let c_sigma = (mu_eff_f + 2.0) / (n + mu_eff_f + 5.0);
        let d_sigma =
            1.0 + 2.0 * (((mu_eff_f - 1.0) / (n + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let c_c = (4.0 + mu_eff_f / n) / (n + 4.0 + 2.0 * mu_eff_f / n);
        let c_1 = 2.0 / ((n + 1.3).powi(2) + mu_eff_f);
        let c_mu = (2.0 * (mu_eff_f - 2.0 + 1.0 / mu_eff_f) / ((n + 2.0).powi(2) + mu_eff_f))
            .min(1.0 - c_1);
        let chi_n = n.sqrt() * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));

        let identity = (0..dim)
            .map(|i| {
                (0..dim)
                    .map(|j| if i == j { F::one() } else { F::zero() })
                    .collect()
            })
            .collect();
        Self {
            dim,
            lambda,
            mu,
            weights,
            mu_eff,
            c_sigma: f(c_sigma),
            d_sigma: f(d_sigma),
            c_c: f(c_c),
            c_1: f(c_1),
            c_mu: f(c_mu),
            chi_n: f(chi_n),
            mean: initial_mean,
            sigma: sigma0,
            cov: identity,
            p_sigma: vec![F::zero(); dim],
            p_c: vec![F::zero(); dim],
            eigen: None,
            generation: 0,
            pending: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda(&self) -> usize {
        self.lambda
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    fn ensure_eigen(&mut self) {
        if self.eigen.is_none() {
            let (mut basis, mut eigvals) = jacobi_eigen(&self.cov);
            let max_eig = eigvals.iter().cloned().fold(F::zero(), F::max);
            let floor = max_eig * f(EIGEN_FLOOR_RATIO);
            let min_eig = eigvals.iter().cloned().fold(F::infinity(), F::min);
            if min_eig < floor {
                // ridge repair: lift every eigenvalue so the smallest meets
                // the floor, and mirror it into C
                let ridge = floor - min_eig;
                for v in &mut eigvals {
                    *v = *v + ridge;
                }
                for i in 0..self.dim {
                    self.cov[i][i] = self.cov[i][i] + ridge;
                }
                let repaired = jacobi_eigen(&self.cov);
                basis = repaired.0;
                eigvals = repaired.1;
            }
            let scale = eigvals
                .iter()
                .map(|&v| v.max(F::zero()).sqrt())
                .collect();
            self.eigen = Some(Eigen { basis, scale });
        }
    }

    /// Raw Gaussian draw `mean + sigma * B * D * z`, before box clamping.
    pub fn sample_raw<R: Rng>(&mut self, rng: &mut R) -> Vec<F>
    where
        StandardNormal: Distribution<F>,
    {
        let dim = self.dim;
        let z: Vec<F> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let sigma = self.sigma;
        let mean = self.mean.clone();
        self.ensure_eigen();
        let eigen = self.eigen.as_ref().expect("just ensured");
        // B * (D .* z)
        let scaled: Vec<F> = (0..dim).map(|j| eigen.scale[j] * z[j]).collect();
        (0..dim)
            .map(|i| {
                let mut v = F::zero();
                for j in 0..dim {
                    v = v + eigen.basis[i][j] * scaled[j];
                }
                mean[i] + sigma * v
            })
            .collect()
    }

    /// Gaussian draw clamped into the unit box.
    pub fn sample<R: Rng>(&mut self, rng: &mut R) -> Vec<F>
    where
        StandardNormal: Distribution<F>,
    {
        self.sample_raw(rng)
            .into_iter()
            .map(|v| v.max(F::zero()).min(F::one()))
            .collect()
    }

    /// Buffers one evaluated sample; fires a generation update once
    /// `lambda` results are pending. Returns true when an update fired.
    pub fn tell(&mut self, x: Vec<F>, objective: F) -> bool {
        assert_eq!(x.len(), self.dim, "dimension mismatch");
        self.pending.push((x, objective));
        if self.pending.len() == self.lambda {
            let generation = std::mem::take(&mut self.pending);
            self.update(&generation);
            true
        } else {
            false
        }
    }

    /// One generation update from exactly `lambda` scored samples.
    /// Ascending objective rank; ties keep insertion order.
    pub fn update(&mut self, scored: &[(Vec<F>, F)]) {
        assert_eq!(scored.len(), self.lambda, "generation size must be lambda");
        let dim = self.dim;
        let mut order: Vec<usize> = (0..scored.len()).collect();
        order.sort_by(|&a, &b| {
            scored[a]
                .1
                .partial_cmp(&scored[b].1)
                .unwrap_or(std::cmp::Ordering::Equal)
        });

        let sigma = self.sigma;
        let old_mean = self.mean.clone();
        // normalized selected steps y_i = (x_i - m) / sigma
        let steps: Vec<Vec<F>> = order[..self.mu]
            .iter()
            .map(|&idx| {
                scored[idx]
                    .0
                    .iter()
                    .zip(&old_mean)
                    .map(|(&x, &m)| (x - m) / sigma)
                    .collect()
            })
            .collect();
        let mut y_w = vec![F::zero(); dim];
        for (w, y) in self.weights.iter().zip(&steps) {
            for i in 0..dim {
                y_w[i] = y_w[i] + *w * y[i];
            }
        }

        for i in 0..dim {
            self.mean[i] = old_mean[i] + sigma * y_w[i];
        }

        // p_sigma uses C^{-1/2} = B D^{-1} B^T from the pre-update covariance
        self.ensure_eigen();
        let inv_sqrt_y_w = {
            let eigen = self.eigen.as_ref().expect("just ensured");
            let mut bt = vec![F::zero(); dim];
            for j in 0..dim {
                let mut v = F::zero();
                for i in 0..dim {
                    v = v + eigen.basis[i][j] * y_w[i];
                }
                bt[j] = if eigen.scale[j] > F::zero() {
                    v / eigen.scale[j]
                } else {
                    F::zero()
                };
            }
            let mut out = vec![F::zero(); dim];
            for i in 0..dim {
                for j in 0..dim {
                    out[i] = out[i] + eigen.basis[i][j] * bt[j];
                }
            }
            out
        };
        let cs = self.c_sigma;
        let decay = F::one() - cs;
        let boost = (cs * (f::<F>(2.0) - cs) * self.mu_eff).sqrt();
        for i in 0..dim {
            self.p_sigma[i] = decay * self.p_sigma[i] + boost * inv_sqrt_y_w[i];
        }
        let p_sigma_norm = self
            .p_sigma
            .iter()
            .map(|&v| v * v)
            .fold(F::zero(), |a, b| a + b)
            .sqrt();

        let gen_f = f::<F>((self.generation + 1) as f64);
        let denom = (F::one() - decay.powf(f::<F>(2.0) * gen_f)).sqrt();
        let h_sigma_threshold =
            (f::<F>(1.4) + f::<F>(2.0) / f::<F>(dim as f64 + 1.0)) * self.chi_n;
        let h_sigma = p_sigma_norm / denom < h_sigma_threshold;

        let cc = self.c_c;
        let pc_decay = F::one() - cc;
        let pc_boost = (cc * (f::<F>(2.0) - cc) * self.mu_eff).sqrt();
        for i in 0..dim {
            let inject = if h_sigma { pc_boost * y_w[i] } else { F::zero() };
            self.p_c[i] = pc_decay * self.p_c[i] + inject;
        }

        // covariance: decay + rank-one + rank-mu
        let c1 = self.c_1;
        let cmu = self.c_mu;
        let stall = if h_sigma {
            F::zero()
        } else {
            c1 * cc * (f::<F>(2.0) - cc)
        };
        let keep = F::one() - c1 - cmu + stall;
        for i in 0..dim {
            for j in 0..dim {
                let mut rank_mu = F::zero();
                for (w, y) in self.weights.iter().zip(&steps) {
                    rank_mu = rank_mu + *w * y[i] * y[j];
                }
                self.cov[i][j] =
                    keep * self.cov[i][j] + c1 * self.p_c[i] * self.p_c[j] + cmu * rank_mu;
            }
        }
        // enforce exact symmetry against drift
        for i in 0..dim {
            for j in 0..i {
                let avg = (self.cov[i][j] + self.cov[j][i]) / f::<F>(2.0);
                self.cov[i][j] = avg;
                self.cov[j][i] = avg;
            }
        }

        let exponent = (cs / self.d_sigma) * (p_sigma_norm / self.chi_n - F::one());
        self.sigma = self.sigma * exponent.min(f::<F>(20.0)).exp();

        self.generation += 1;
        self.eigen = None;
    }

    /// Smallest eigenvalue of the current covariance (after any repair).
    pub fn min_eigenvalue(&mut self) -> F {
        self.ensure_eigen();
        let eigen = self.eigen.as_ref().expect("just ensured");
        eigen
            .scale
            .iter()
            .map(|&s| s * s)
            .fold(F::infinity(), F::min)
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns the
/// eigenvector basis (columns) and eigenvalues.
fn jacobi_eigen<F: Float>(matrix: &[Vec<F>]) -> (Vec<Vec<F>>, Vec<F>) {
    let n = matrix.len();
    let mut a: Vec<Vec<F>> = matrix.to_vec();
    let mut v: Vec<Vec<F>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { F::one() } else { F::zero() })
                .collect()
        })
        .collect();
    let eps = f::<F>(1e-30);
    for _sweep in 0..100 {
        let mut off = F::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off = off + a[i][j] * a[i][j];
            }
        }
        if off <= eps {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() <= f::<F>(1e-300) {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (f::<F>(2.0) * a[p][q]);
                let t = {
                    let sign = if theta >= F::zero() { F::one() } else { -F::one() };
                    sign / (theta.abs() + (theta * theta + F::one()).sqrt())
                };
                let c = F::one() / (t * t + F::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k][p];
                    let vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let eigvals = (0..n).map(|i| a[i][i]).collect();
    (v, eigvals)
}

/// Snapshot of CMA-ES internals in configuration terms, for prompting.
#[derive(Debug, Clone)]
pub struct StateSummary {
    pub mean_config: Configuration,
    pub sigma: f64,
    pub labels: Vec<String>,
    /// Covariance rounded to 4 significant digits, rows/cols in label order.
    pub covariance: Vec<Vec<f64>>,
}

/// Rounds to `digits` significant digits.
pub fn round_significant(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let magnitude = x.abs().log10().floor() as i32;
    let factor = 10f64.powi(digits - 1 - magnitude);
    (x * factor).round() / factor
}

/// Exports mean as a concrete configuration, sigma as a scalar, and the
/// covariance as a labeled matrix rounded for prompting.
pub fn export_state(cma: &CmaEs<f64>, space: &SearchSpace) -> StateSummary {
    let mut mean_config = space.denormalize(&UnitVector::new(cma.mean.clone()));
    for value in mean_config.values.values_mut() {
        if let ParamValue::Float(f) = value {
            *f = round_significant(*f, 4);
        }
    }
    let labels = space.params.iter().map(|p| p.name.clone()).collect();
    let covariance = cma
        .cov
        .iter()
        .map(|row| row.iter().map(|&v| round_significant(v, 4)).collect())
        .collect();
    StateSummary {
        mean_config,
        sigma: round_significant(cma.sigma, 4),
        labels,
        covariance,
    }
}

/// Ask/tell CMA-ES over a search space: samples in normalized coordinates,
/// proposes decoded configurations, and folds every evaluated configuration
/// (its own or injected ones) back into the generation buffer.
pub struct CmaEsOptimizer {
    space: SearchSpace,
    pub cma: CmaEs<f64>,
    rng: ChaCha12Rng,
}

impl CmaEsOptimizer {
    pub fn new(space: SearchSpace, seed: u64, sigma0: f64) -> Self {
        let mean = space
            .normalize(&space.defaults())
            .expect("defaults validate")
            .coords;
        Self {
            space,
            cma: CmaEs::new(mean, sigma0),
            rng: stream_rng(seed, "sampler"),
        }
    }

    fn fold_config(&mut self, config: &Configuration, objective: f64) {
        if let Ok(u) = self.space.normalize(config) {
            self.cma.tell(u.coords, objective);
        }
    }
}

impl Optimizer for CmaEsOptimizer {
    fn name(&self) -> &str {
        "cmaes"
    }

    fn ask(&mut self, _history: &[TrialRecord]) -> Proposal {
        let u = self.cma.sample(&mut self.rng);
        let config = self.space.denormalize(&UnitVector::new(u));
        Proposal::config(config, ProposalSource::Classical)
    }

    fn tell(&mut self, proposal: &Proposal, objective: f64) {
        if let ProposalPayload::Config(c) = &proposal.payload {
            let config = c.clone();
            self.fold_config(&config, objective);
        }
    }

    fn observe(&mut self, payload: &ProposalPayload, objective: f64) {
        if let ProposalPayload::Config(c) = payload {
            let config = c.clone();
            self.fold_config(&config, objective);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::sphere;

    #[test]
    fn lambda_matches_standard_rule() {
        assert_eq!(CmaEs::<f64>::default_lambda(14), 11);
        assert_eq!(CmaEs::<f64>::default_lambda(1), 4);
        assert_eq!(CmaEs::<f64>::default_lambda(2), 6);
    }

    #[test]
    fn init_state_is_identity_at_defaults() {
        let space = SearchSpace::preset();
        let opt = CmaEsOptimizer::new(space.clone(), 0, DEFAULT_SIGMA0);
        let expected = space.normalize(&space.defaults()).unwrap().coords;
        assert_eq!(opt.cma.mean, expected);
        assert_eq!(opt.cma.sigma, 0.3);
        for i in 0..14 {
            for j in 0..14 {
                assert_eq!(opt.cma.cov[i][j], if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn sample_moments_match_sigma() {
        let mut cma: CmaEs<f64> = CmaEs::new(vec![0.5; 4], 0.1);
        let mut rng = stream_rng(0, "sampler");
        let n = 10_000;
        let samples: Vec<Vec<f64>> = (0..n).map(|_| cma.sample_raw(&mut rng)).collect();
        for d in 0..4 {
            let mean: f64 = samples.iter().map(|s| s[d]).sum::<f64>() / n as f64;
            let var: f64 =
                samples.iter().map(|s| (s[d] - mean).powi(2)).sum::<f64>() / n as f64;
            let std = var.sqrt();
            assert!((std - 0.1).abs() < 0.005, "dim {d}: std {std}");
        }
    }

    #[test]
    fn tiny_sigma_samples_collapse_to_mean() {
        let mut cma: CmaEs<f64> = CmaEs::new(vec![0.3; 3], 1e-300);
        let mut rng = stream_rng(1, "sampler");
        let s = cma.sample(&mut rng);
        for v in s {
            assert!((v - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn samples_stay_in_unit_box() {
        let mut cma: CmaEs<f64> = CmaEs::new(vec![0.5; 5], 2.0);
        let mut rng = stream_rng(2, "sampler");
        for _ in 0..1_000 {
            for v in cma.sample(&mut rng) {
                assert!((0.0..=1.0).contains(&v));
            }
        }
    }

    #[test]
    fn recombination_matches_hand_computation() {
        // d=1: lambda=4, mu=2, raw weights ln(2.5)-ln(1), ln(2.5)-ln(2)
        let mut cma: CmaEs<f64> = CmaEs::new(vec![0.5], 0.3);
        assert_eq!(cma.lambda(), 4);
        let w1_raw = 2.5f64.ln();
        let w2_raw = 2.5f64.ln() - 2.0f64.ln();
        let w1 = w1_raw / (w1_raw + w2_raw);
        let w2 = w2_raw / (w1_raw + w2_raw);
        cma.update(&[
            (vec![0.2], 1.0),
            (vec![0.4], 2.0),
            (vec![0.6], 3.0),
            (vec![0.8], 4.0),
        ]);
        let expected = w1 * 0.2 + w2 * 0.4;
        assert!((cma.mean[0] - expected).abs() < 1e-14, "{}", cma.mean[0]);
    }

    #[test]
    fn ties_break_by_insertion_order() {
        let mut cma: CmaEs<f64> = CmaEs::new(vec![0.5], 0.3);
        let w1_raw = 2.5f64.ln();
        let w2_raw = 2.5f64.ln() - 2.0f64.ln();
        let w1 = w1_raw / (w1_raw + w2_raw);
        let w2 = w2_raw / (w1_raw + w2_raw);
        cma.update(&[
            (vec![0.8], 100.0),
            (vec![0.6], 100.0),
            (vec![0.4], 100.0),
            (vec![0.2], 100.0),
        ]);
        let expected = w1 * 0.8 + w2 * 0.6;
        assert!((cma.mean[0] - expected).abs() < 1e-14);
    }

    #[test]
    fn penalty_samples_rank_behind_ok_samples() {
        let mut cma: CmaEs<f64> = CmaEs::new(vec![0.5], 0.3);
        cma.update(&[
            (vec![0.9], 100.0),
            (vec![0.2], 0.5),
            (vec![0.95], 100.0),
            (vec![0.3], 0.7),
        ]);
        // recombination only sees the two ok samples
        let w1_raw = 2.5f64.ln();
        let w2_raw = 2.5f64.ln() - 2.0f64.ln();
        let w1 = w1_raw / (w1_raw + w2_raw);
        let w2 = w2_raw / (w1_raw + w2_raw);
        let expected = w1 * 0.2 + w2 * 0.3;
        assert!((cma.mean[0] - expected).abs() < 1e-14);
    }

    #[test]
    fn rank_invariance_under_increasing_transform() {
        let gen: Vec<(Vec<f64>, f64)> = vec![
            (vec![0.2, 0.8], 0.9),
            (vec![0.4, 0.1], 0.2),
            (vec![0.6, 0.5], 1.4),
            (vec![0.9, 0.3], 0.4),
            (vec![0.1, 0.6], 0.7),
            (vec![0.7, 0.7], 2.0),
        ];
        let transformed: Vec<(Vec<f64>, f64)> = gen
            .iter()
            .map(|(x, y)| (x.clone(), 3.0 * y + 7.0))
            .collect();
        let mut a: CmaEs<f64> = CmaEs::new(vec![0.5; 2], 0.3);
        let mut b = a.clone();
        a.update(&gen);
        b.update(&transformed);
        assert_eq!(a.mean, b.mean);
        assert_eq!(a.sigma.to_bits(), b.sigma.to_bits());
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(a.cov[i][j].to_bits(), b.cov[i][j].to_bits());
            }
        }
    }

    #[test]
    fn covariance_stays_positive_definite_under_random_updates() {
        use rand::Rng;
        let mut cma: CmaEs<f64> = CmaEs::new(vec![0.5; 6], 0.3);
        let mut rng = stream_rng(3, "sampler");
        for _ in 0..1_000 {
            let gen: Vec<(Vec<f64>, f64)> = (0..cma.lambda())
                .map(|_| {
                    let x = cma.sample(&mut rng);
                    let y = if rng.gen_bool(0.3) {
                        100.0
                    } else {
                        rng.gen_range(0.0..2.0)
                    };
                    (x, y)
                })
                .collect();
            cma.update(&gen);
        }
        assert!(cma.min_eigenvalue() > 1e-12);
    }

    #[test]
    fn exported_state_round_trips_defaults() {
        let space = SearchSpace::preset();
        let opt = CmaEsOptimizer::new(space.clone(), 0, DEFAULT_SIGMA0);
        let summary = export_state(&opt.cma, &space);
        assert_eq!(summary.mean_config, space.defaults());
        assert_eq!(summary.labels.len(), 14);
        assert_eq!(summary.sigma, 0.3);
        for i in 0..14 {
            for j in 0..14 {
                assert_eq!(summary.covariance[i][j], if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn exported_matrix_is_symmetric_after_updates() {
        let space = SearchSpace::preset();
        let mut opt = CmaEsOptimizer::new(space.clone(), 4, DEFAULT_SIGMA0);
        let mut rng = stream_rng(4, "objective");
        use rand::Rng;
        for _ in 0..50 {
            let x = opt.cma.sample(&mut rng);
            let y = rng.gen_range(0.0..2.0);
            opt.cma.tell(x, y);
        }
        let summary = export_state(&opt.cma, &space);
        for i in 0..14 {
            for j in 0..14 {
                assert_eq!(summary.covariance[i][j], summary.covariance[j][i]);
            }
        }
    }

    #[test]
    fn converges_on_small_sphere() {
        let mut cma: CmaEs<f64> = CmaEs::new(vec![0.2; 5], 0.3);
        let mut rng = stream_rng(5, "sampler");
        let mut best = f64::INFINITY;
        for _ in 0..400 {
            let gen: Vec<(Vec<f64>, f64)> = (0..cma.lambda())
                .map(|_| {
                    let x = cma.sample(&mut rng);
                    let y = sphere(&x);
                    best = best.min(y);
                    (x, y)
                })
                .collect();
            cma.update(&gen);
        }
        assert!(best < 1e-8, "best {best}");
    }

    #[test]
    fn round_significant_keeps_four_digits() {
        assert_eq!(round_significant(0.123456, 4), 0.1235);
        assert_eq!(round_significant(123456.0, 4), 123500.0);
        assert_eq!(round_significant(0.0, 4), 0.0);
        assert_eq!(round_significant(-0.0012345, 4), -0.001235);
        assert_eq!(round_significant(0.6000000000000001, 4), 0.6);
    }
}

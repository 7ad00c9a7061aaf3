//! Derandomized (μ, λ) evolution strategy with isotropic mutations.
//!
//! Each generation samples λ offspring x_k = x + σ·z_k with z_k standard
//! normal, ranks them by fitness, recombines the best μ with weights
//! summing to one, and adapts the single global step size σ by cumulative
//! step-size adaptation on the isotropic evolution path. No covariance
//! matrix is learned. Offspring evaluations may run in parallel; sampling
//! and ranking are sequential and seeded, so traces are reproducible.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::RngSeed;
use crate::par;

/// Strategy parameters. [`EsConfig::default_for_dim`] fills in standard
/// choices; every field can be overridden before the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsConfig {
    pub dim: usize,
    /// Offspring per generation.
    pub lambda: usize,
    /// Parents kept for recombination.
    pub mu: usize,
    /// Recombination weights, non-increasing, summing to 1.
    pub weights: Vec<f64>,
    /// Initial global step size.
    pub sigma0: f64,
    /// Evaluation budget.
    pub max_evals: u64,
    /// Stop as soon as the best fitness drops to or below this value.
    pub target_fitness: f64,
    pub seed: RngSeed,
}

impl EsConfig {
    /// Standard defaults: λ = 4 + ⌊3 ln d⌋, μ = ⌊λ/2⌋, logarithmic
    /// recombination weights, σ₀ = 0.3, budget 10⁵·√d evaluations,
    /// target 1e-8.
    pub fn default_for_dim(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Param("dimension must be at least 1".into()));
        }
        let lambda = 4 + (3.0 * (dim as f64).ln()).floor() as usize;
        let mu = lambda / 2;
        let raw: Vec<f64> = (1..=mu)
            .map(|k| (mu as f64 + 0.5).ln() - (k as f64).ln())
            .collect();
        let total: f64 = raw.iter().sum();
        let weights = raw.into_iter().map(|w| w / total).collect();
        Ok(EsConfig {
            dim,
            lambda,
            mu,
            weights,
            sigma0: 0.3,
            max_evals: (1e5 * (dim as f64).sqrt()).round() as u64,
            target_fitness: 1e-8,
            seed: RngSeed(0),
        })
    }

    pub fn with_seed(mut self, seed: RngSeed) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Param("dimension must be at least 1".into()));
        }
        if self.mu < 1 || self.mu > self.lambda {
            return Err(Error::Param(format!(
                "need 1 <= mu <= lambda, got mu = {}, lambda = {}",
                self.mu, self.lambda
            )));
        }
        if self.weights.len() != self.mu {
            return Err(Error::Param(format!(
                "{} weights for mu = {}",
                self.weights.len(),
                self.mu
            )));
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Param(format!("weights sum to {sum}, expected 1")));
        }
        if self.weights.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::Param("weights must be non-increasing".into()));
        }
        if !(self.sigma0 > 0.0) {
            return Err(Error::Param("sigma0 must be positive".into()));
        }
        Ok(())
    }

    /// Variance-effective selection mass 1/Σw².
    pub fn mu_eff(&self) -> f64 {
        1.0 / self.weights.iter().map(|w| w * w).sum::<f64>()
    }
}

/// Convergence record of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EsTrace {
    /// Best-so-far fitness after each generation; non-increasing.
    pub best_fitness_per_generation: Vec<f64>,
    pub evaluations_used: u64,
    pub best_x: Vec<f64>,
}

/// Outcome of a minimization run.
#[derive(Debug, Clone)]
pub struct EsResult {
    pub best_x: Vec<f64>,
    pub best_f: f64,
    pub trace: EsTrace,
}

/// Minimizes `f` starting from `x0`. The fitness must be total and finite
/// on its domain; any non-finite value aborts the run with a diagnostic.
pub fn es_minimize<F>(f: F, x0: &[f64], cfg: &EsConfig) -> Result<EsResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    if x0.len() != cfg.dim {
        return Err(Error::Dimension(format!(
            "x0 has length {}, config dim is {}",
            x0.len(),
            cfg.dim
        )));
    }
    let dim = cfg.dim;
    let mu_eff = cfg.mu_eff();
    let dim_f = dim as f64;
    let c_sigma = (mu_eff + 2.0) / (dim_f + mu_eff + 5.0);
    let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (dim_f + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
    // E‖N(0, I_d)‖
    let chi_n = dim_f.sqrt() * (1.0 - 1.0 / (4.0 * dim_f) + 1.0 / (21.0 * dim_f * dim_f));

    let mut rng = cfg.seed.rng();
    let normal = StandardNormal;
    let mut mean = x0.to_vec();
    let mut sigma = cfg.sigma0;
    let mut path = vec![0.0f64; dim];

    let mut evaluations: u64 = 0;
    let mut best_x = x0.to_vec();
    let mut best_f = f(x0);
    evaluations += 1;
    if !best_f.is_finite() {
        return Err(Error::NonFiniteFitness { evaluations });
    }

    let mut trace = EsTrace {
        best_fitness_per_generation: Vec::new(),
        evaluations_used: evaluations,
        best_x: best_x.clone(),
    };

    while best_f > cfg.target_fitness && evaluations < cfg.max_evals {
        // Sequential sampling keeps the trace independent of thread count.
        let steps: Vec<Vec<f64>> = (0..cfg.lambda)
            .map(|_| (0..dim).map(|_| normal.sample(&mut rng)).collect())
            .collect();
        let offspring: Vec<Vec<f64>> = steps
            .iter()
            .map(|z| {
                mean.iter()
                    .zip(z)
                    .map(|(m, zi)| m + sigma * zi)
                    .collect()
            })
            .collect();

        let fitnesses = par::map_indexed(cfg.lambda, |k| f(&offspring[k]));
        evaluations += cfg.lambda as u64;
        if let Some(bad) = fitnesses.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteFitness {
                evaluations: evaluations - (cfg.lambda - bad) as u64 + 1,
            });
        }

        let mut order: Vec<usize> = (0..cfg.lambda).collect();
        order.sort_by(|&a, &b| fitnesses[a].total_cmp(&fitnesses[b]).then(a.cmp(&b)));

        if fitnesses[order[0]] < best_f {
            best_f = fitnesses[order[0]];
            best_x = offspring[order[0]].clone();
        }
        trace.best_fitness_per_generation.push(best_f);

        let mut new_mean = vec![0.0f64; dim];
        let mut z_w = vec![0.0f64; dim];
        for (rank, &k) in order.iter().take(cfg.mu).enumerate() {
            let w = cfg.weights[rank];
            for i in 0..dim {
                new_mean[i] += w * offspring[k][i];
                z_w[i] += w * steps[k][i];
            }
        }
        mean = new_mean;

        let path_gain = (c_sigma * (2.0 - c_sigma) * mu_eff).sqrt();
        for i in 0..dim {
            path[i] = (1.0 - c_sigma) * path[i] + path_gain * z_w[i];
        }
        let path_norm = path.iter().map(|p| p * p).sum::<f64>().sqrt();
        sigma *= ((c_sigma / d_sigma) * (path_norm / chi_n - 1.0)).exp();
        sigma = sigma.clamp(1e-300, 1e300);
    }

    trace.evaluations_used = evaluations;
    trace.best_x = best_x.clone();
    Ok(EsResult {
        best_x,
        best_f,
        trace,
    })
}

//! Synthetic dynamic networks with known ground truth.
//!
//! Group memberships evolve as independent Markov chains with a common
//! kernel holding `pi` on the diagonal; edges are Bernoulli draws from an
//! affiliation matrix (`theta0` within groups, `eps0` between) whose
//! entries receive an independent uniform perturbation per realization.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::ConfigError;
use crate::graph::{DynamicNetwork, Partition};

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub num_nodes: usize,
    pub num_times: usize,
    pub num_groups: usize,
    /// Diagonal mass of the transition kernel.
    pub pi: f64,
    /// Within-group connection probability before perturbation.
    pub theta0: f64,
    /// Between-group connection probability before perturbation.
    pub eps0: f64,
    /// Scale of the uniform perturbation added to every affiliation entry.
    pub perturb_scale: f64,
    pub directed: bool,
    pub rng_seed: u64,
}

impl SimConfig {
    pub fn study(pi: f64, theta0: f64, rng_seed: u64) -> Self {
        Self {
            num_nodes: 50,
            num_times: 4,
            num_groups: 4,
            pi,
            theta0,
            eps0: 0.1,
            perturb_scale: 0.1,
            directed: false,
            rng_seed,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.num_nodes == 0 || self.num_times == 0 {
            return Err(ConfigError::ProbOutOfRange { name: "dimensions", value: 0.0 });
        }
        if self.num_groups == 0 {
            return Err(ConfigError::NoGroups);
        }
        if !(self.pi > 0.0 && self.pi <= 1.0) {
            return Err(ConfigError::PiOutOfRange(self.pi));
        }
        if self.num_groups == 1 && self.pi < 1.0 {
            return Err(ConfigError::SingleGroupNeedsUnitPi);
        }
        for (name, value) in [("theta0", self.theta0), ("eps0", self.eps0)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ConfigError::ProbOutOfRange { name, value });
            }
        }
        if self.perturb_scale < 0.0 {
            return Err(ConfigError::ProbOutOfRange {
                name: "perturb_scale",
                value: self.perturb_scale,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub network: DynamicNetwork,
    pub truth: Partition,
    /// Realized connection probabilities after perturbation and clamping.
    pub theta_real: Vec<Vec<f64>>,
    pub pi_matrix: Vec<Vec<f64>>,
}

/// Generates one realization of the model under `cfg`.
pub fn simulate(cfg: &SimConfig) -> Result<SimOutput, ConfigError> {
    cfg.validate()?;
    let n = cfg.num_nodes;
    let tt = cfg.num_times;
    let k = cfg.num_groups;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);

    let nu = if k == 1 { 0.0 } else { (1.0 - cfg.pi) / (k - 1) as f64 };
    let pi_matrix: Vec<Vec<f64>> = (0..k)
        .map(|g| (0..k).map(|h| if g == h { cfg.pi } else { nu }).collect())
        .collect();

    // Initial allocations from the uniform stationary distribution, then
    // one independent chain per node.
    let mut labels = vec![0u32; tt * n];
    for slot in labels.iter_mut().take(n) {
        *slot = rng.random_range(0..k) as u32;
    }
    for t in 1..tt {
        for i in 0..n {
            let prev = labels[(t - 1) * n + i] as usize;
            let mut u: f64 = rng.random();
            let mut next = k - 1;
            for (h, &p) in pi_matrix[prev].iter().enumerate() {
                if u < p {
                    next = h;
                    break;
                }
                u -= p;
            }
            labels[t * n + i] = next as u32;
        }
    }

    // Affiliation matrix with an independent uniform perturbation per
    // entry; undirected output perturbs the upper triangle and mirrors it.
    let mut theta_real = vec![vec![0.0; k]; k];
    #[allow(clippy::needless_range_loop)]
    for g in 0..k {
        let lo = if cfg.directed { 0 } else { g };
        for h in lo..k {
            let base = if g == h { cfg.theta0 } else { cfg.eps0 };
            let u: f64 = rng.random_range(-1.0..=1.0);
            let v = (base + cfg.perturb_scale * u).clamp(0.0, 1.0);
            theta_real[g][h] = v;
            if !cfg.directed {
                theta_real[h][g] = v;
            }
        }
    }

    let mut rows = Vec::new();
    for t in 0..tt {
        for i in 0..n {
            let zi = labels[t * n + i] as usize;
            let j_start = if cfg.directed { 0 } else { i + 1 };
            for j in j_start..n {
                if i == j {
                    continue;
                }
                let zj = labels[t * n + j] as usize;
                if rng.random::<f64>() < theta_real[zi][zj] {
                    rows.push((t, i, j));
                }
            }
        }
    }

    let network = DynamicNetwork::from_edge_list(&rows, n, tt, cfg.directed)
        .expect("generated edges within bounds");
    let truth = Partition::from_flat(labels, tt, n, k).expect("generated labels within capacity");
    Ok(SimOutput { network, truth, theta_real, pi_matrix })
}

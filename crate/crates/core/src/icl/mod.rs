//! Exact integrated completed likelihood for the Markovian block model.
//!
//! The objective decomposes into a Beta-Bernoulli marginal likelihood over
//! block edge counts and a Dirichlet-Multinomial marginal prior over label
//! transition counts, plus an empirical initial-state term. Everything is
//! evaluated in log space through log-gamma.

mod delta;
mod stats;

pub use delta::{candidate_targets, delta_move, MoveDelta, MoveEvaluator};
pub(crate) use delta::icl_state;
pub use stats::{apply_move, build_stats, BlockStats};

use statrs::function::gamma::ln_gamma;

use crate::error::{ConfigError, GraphError};
use crate::graph::{DynamicNetwork, Partition};

/// Beta shapes for block edge rates and the symmetric Dirichlet
/// concentration for transition rows. Defaults are the flat choice
/// a = b = delta = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparameters {
    pub a: f64,
    pub b: f64,
    pub delta: f64,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self { a: 1.0, b: 1.0, delta: 1.0 }
    }
}

impl Hyperparameters {
    pub fn new(a: f64, b: f64, delta: f64) -> Result<Self, ConfigError> {
        if a <= 0.0 || b <= 0.0 || delta <= 0.0 {
            return Err(ConfigError::NonPositiveHyper { a, b, delta });
        }
        Ok(Self { a, b, delta })
    }
}

/// Decomposed objective value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IclValue {
    pub log_lik: f64,
    pub log_prior: f64,
    pub total: f64,
}

/// Contribution of one block: zero when no pair is possible, otherwise the
/// log Beta-Bernoulli compound mass of `eta` edges among `n` pairs.
#[inline]
pub(crate) fn block_term(eta: i64, n: i64, a: f64, b: f64, const_c: f64) -> f64 {
    debug_assert!(eta >= 0 && eta <= n, "block counts out of range: {eta}/{n}");
    if n == 0 {
        return 0.0;
    }
    const_c + ln_gamma(a + eta as f64) + ln_gamma(b + (n - eta) as f64)
        - ln_gamma(a + b + n as f64)
}

#[inline]
pub(crate) fn likelihood_const(h: &Hyperparameters) -> f64 {
    ln_gamma(h.a + h.b) - ln_gamma(h.a) - ln_gamma(h.b)
}

/// Log marginal likelihood of the network given the allocations: sum over
/// block pairs (unordered pairs in undirected mode) of the Beta-Bernoulli
/// compound mass. Blocks with no possible pair contribute exactly zero, so
/// the sum is insensitive to empty groups.
pub fn log_marginal_likelihood(stats: &BlockStats, h: &Hyperparameters) -> f64 {
    let c = likelihood_const(h);
    let k = stats.k_up();
    let mut total = 0.0;
    for g in 0..k {
        let lo = if stats.directed() { 0 } else { g };
        for hh in lo..k {
            total += block_term(stats.eta(g, hh), stats.npairs(g, hh), h.a, h.b, c);
        }
    }
    total
}

/// Log of the collapsed transition factor with Dirichlet dimension
/// `num_active`: for each group row, a Dirichlet-Multinomial over switch
/// counts. Rows with no outgoing switch contribute exactly zero.
pub fn log_transition_term(stats: &BlockStats, h: &Hyperparameters, num_active: usize) -> f64 {
    if num_active == 0 {
        return 0.0;
    }
    let kd = num_active as f64 * h.delta;
    let lg_d = ln_gamma(h.delta);
    let lg_kd = ln_gamma(kd);
    let k = stats.k_up();
    let mut total = 0.0;
    for g in 0..k {
        for hh in 0..k {
            let r = stats.trans(g, hh);
            if r > 0 {
                total += ln_gamma(h.delta + r as f64) - lg_d;
            }
        }
        let row = stats.trans_row_sum(g);
        if row > 0 {
            total -= ln_gamma(kd + row as f64) - lg_kd;
        }
    }
    total
}

/// Finite part and number of impossible assignments of the initial-state
/// term. Any first-frame node sitting in a group never occupied later has
/// empirical weight zero; each such group counts as one infinity source.
pub(crate) fn initial_term_parts(p: &Partition, num_active: usize) -> (f64, u32) {
    let n = p.num_nodes() as f64;
    if p.num_times() == 1 {
        // Single snapshot: empirical weights are undefined, fall back to a
        // uniform distribution over non-empty groups.
        return (-n * (num_active.max(1) as f64).ln(), 0);
    }
    let denom = n * (p.num_times() as f64 - 1.0);
    let mut finite = -n * denom.ln();
    let mut inf = 0u32;
    for g in 0..p.k_up() {
        let first = p.first_count(g);
        if first == 0 {
            continue;
        }
        let later = p.later_count(g);
        if later == 0 {
            inf += 1;
        } else {
            finite += first as f64 * (later as f64).ln();
        }
    }
    (finite, inf)
}

/// Log probability of the first-frame allocations under the empirical
/// multinomial; `-inf` when some starting group is never occupied again.
pub fn log_initial_term(p: &Partition, num_active: usize) -> f64 {
    let (finite, inf) = initial_term_parts(p, num_active);
    if inf > 0 {
        f64::NEG_INFINITY
    } else {
        finite
    }
}

/// Log marginal prior of the allocations: initial-state term plus the
/// collapsed transition factor, with Dirichlet dimension `num_active`.
pub fn log_marginal_prior(
    stats: &BlockStats,
    h: &Hyperparameters,
    p: &Partition,
    num_active: usize,
) -> f64 {
    log_initial_term(p, num_active) + log_transition_term(stats, h, num_active)
}

/// The exact integrated completed likelihood of a partition: a pure
/// function of (network, partition, hyperparameters). The Dirichlet
/// dimension is the number of currently non-empty groups.
pub fn icl(
    net: &DynamicNetwork,
    p: &Partition,
    h: &Hyperparameters,
) -> Result<IclValue, GraphError> {
    let stats = build_stats(net, p)?;
    Ok(icl_from_stats(&stats, p, h))
}

/// Same as [`icl`] for prebuilt statistics.
pub fn icl_from_stats(stats: &BlockStats, p: &Partition, h: &Hyperparameters) -> IclValue {
    let k = p.num_active();
    let log_lik = log_marginal_likelihood(stats, h);
    let log_prior = log_marginal_prior(stats, h, p, k);
    IclValue { log_lik, log_prior, total: log_lik + log_prior }
}

/// Posterior mean transition matrix over the listed groups; rows sum to 1.
pub fn posterior_mean_transitions(
    stats: &BlockStats,
    h: &Hyperparameters,
    active: &[u32],
) -> Vec<Vec<f64>> {
    let k = active.len();
    let kd = k as f64 * h.delta;
    active
        .iter()
        .map(|&g| {
            let row = stats.trans_row_sum(g as usize) as f64;
            active
                .iter()
                .map(|&hh| (h.delta + stats.trans(g as usize, hh as usize) as f64) / (kd + row))
                .collect()
        })
        .collect()
}

/// Posterior mean connection matrix over the listed groups. Entries whose
/// possible-pair count falls below `min_pairs` cannot be estimated and are
/// returned as `None`.
pub fn posterior_mean_connections(
    stats: &BlockStats,
    h: &Hyperparameters,
    active: &[u32],
    min_pairs: i64,
) -> Vec<Vec<Option<f64>>> {
    active
        .iter()
        .map(|&g| {
            active
                .iter()
                .map(|&hh| {
                    let n = stats.npairs(g as usize, hh as usize);
                    if n < min_pairs {
                        None
                    } else {
                        let e = stats.eta(g as usize, hh as usize) as f64;
                        Some((h.a + e) / (h.a + h.b + n as f64))
                    }
                })
                .collect()
        })
        .collect()
}

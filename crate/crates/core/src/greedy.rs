//! Greedy maximization of the integrated completed likelihood.
//!
//! The search sweeps over all (frame, node) pairs in a fresh shuffled
//! order, reallocating each to its best group by delta evaluation, until a
//! full sweep brings no improvement. A hierarchical merge pass then tries
//! every group pair, restarting after each accepted merge. `fit` runs the
//! whole pipeline once per (strategy, restart) and keeps the best result;
//! runs are independent and execute in parallel when the `parallel`
//! feature is enabled.

use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::error::{ConfigError, GraphError};
use crate::graph::{check_dims, DynamicNetwork, Partition};
use crate::icl::{
    apply_move, build_stats, candidate_targets, icl, icl_state, Hyperparameters, IclValue,
    MoveDelta, MoveEvaluator,
};
use crate::init::{build_init, InitConfig, InitStrategy};
use crate::{derive_seed, map_indexed};

#[derive(Debug, Error)]
pub enum FitError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Knobs of a single greedy run.
#[derive(Debug, Clone)]
pub struct GreedyConfig {
    /// Safety cap on sweeps; normal runs stop on their own far earlier.
    pub max_sweeps: usize,
    /// Strict-improvement tolerance for accepting moves and for the
    /// sweep-level stopping test.
    pub tol: f64,
    /// Record the objective after every sweep.
    pub collect_trace: bool,
}

impl Default for GreedyConfig {
    fn default() -> Self {
        Self { max_sweeps: 200, tol: 1e-10, collect_trace: false }
    }
}

/// Outcome of a greedy run, a merge pass, or a whole fit.
#[derive(Debug, Clone)]
pub struct FitResult {
    /// Compacted optimal partition.
    pub partition: Partition,
    /// Fresh objective of `partition`.
    pub icl: IclValue,
    /// Completed greedy sweeps.
    pub sweeps: usize,
    /// Accepted reallocations (plus accepted merges for pipeline results).
    pub moves_accepted: usize,
    /// Objective after each sweep, when requested; non-decreasing.
    pub trace: Option<Vec<f64>>,
    /// Per-run records, populated by [`fit`].
    pub runs: Vec<RunRecord>,
}

/// One (strategy, restart) entry of the fit log.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub strategy: &'static str,
    pub restart: usize,
    pub seed: u64,
    pub k_up: usize,
    pub icl_total: f64,
    pub num_groups: usize,
    pub sweeps: usize,
    pub moves_accepted: usize,
    pub merges_accepted: usize,
    pub wall_secs: f64,
}

/// Repeated shuffled sweeps of single-node reallocations, each to the
/// argmax over every admissible group (empty ones included, so groups can
/// be created). Stops when a sweep fails to improve the objective by more
/// than `cfg.tol`; deterministic given (net, init, h, seed).
pub fn greedy_icl(
    net: &DynamicNetwork,
    init: &Partition,
    h: &Hyperparameters,
    rng_seed: u64,
    cfg: &GreedyConfig,
) -> Result<FitResult, GraphError> {
    check_dims(net, init)?;
    let mut p = init.clone();
    let mut stats = build_stats(net, &p)?;
    let mut evaluator = MoveEvaluator::new(h.clone(), p.k_up());
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);

    let mut order: Vec<(u32, u32)> = (0..p.num_times() as u32)
        .flat_map(|t| (0..p.num_nodes() as u32).map(move |i| (t, i)))
        .collect();

    let mut state = icl_state(&stats, &p, h);
    let mut trace = cfg.collect_trace.then(|| vec![state.total()]);
    let mut sweeps = 0;
    let mut moves_accepted = 0;
    let mut targets: Vec<u32> = Vec::new();

    while sweeps < cfg.max_sweeps {
        order.shuffle(&mut rng);
        for &(t, i) in &order {
            let (t, i) = (t as usize, i as usize);
            let current = p.label(t, i);
            evaluator.scan(net, &p, t, i);
            candidate_targets(&p, &mut targets);
            let mut best: Option<(usize, MoveDelta)> = None;
            for &g in &targets {
                let g = g as usize;
                if g == current {
                    continue;
                }
                let d = evaluator.delta_scanned(&stats, &p, t, i, g);
                match best {
                    Some((_, b)) if !d.better_than(&b) => {}
                    _ => best = Some((g, d)),
                }
            }
            if let Some((g, d)) = best {
                if d.improves(cfg.tol) {
                    apply_move(&mut stats, net, &mut p, t, i, g);
                    moves_accepted += 1;
                }
            }
        }
        sweeps += 1;
        let fresh = icl_state(&stats, &p, h);
        if let Some(tr) = trace.as_mut() {
            tr.push(fresh.total());
        }
        let improved = fresh.improved_over(&state, cfg.tol);
        state = fresh;
        if !improved {
            break;
        }
    }

    let partition = p.compacted();
    let icl_value = icl(net, &partition, h)?;
    Ok(FitResult {
        partition,
        icl: icl_value,
        sweeps,
        moves_accepted,
        trace,
        runs: Vec::new(),
    })
}

/// Hierarchical merge pass: evaluates every unordered group pair on folded
/// statistics, accepts a merge only on strict improvement, and restarts
/// the scan after each acceptance.
pub fn merge_step(
    net: &DynamicNetwork,
    p: &Partition,
    h: &Hyperparameters,
) -> Result<FitResult, GraphError> {
    check_dims(net, p)?;
    let tol = GreedyConfig::default().tol;
    let mut cur = p.compacted();
    let mut stats = build_stats(net, &cur)?;
    let mut state = icl_state(&stats, &cur, h);
    let mut merges = 0;
    let mut passes = 0;

    'restart: loop {
        passes += 1;
        let k = cur.num_active();
        for kept in 0..k {
            for absorbed in (kept + 1)..k {
                let folded = stats.merged(kept, absorbed);
                let mut merged = cur.clone();
                for t in 0..merged.num_times() {
                    for i in 0..merged.num_nodes() {
                        if merged.label(t, i) == absorbed {
                            merged.set_label(t, i, kept);
                        }
                    }
                }
                let cand = icl_state(&folded, &merged, h);
                if cand.improved_over(&state, tol) {
                    cur = merged.compacted();
                    stats = build_stats(net, &cur)?;
                    state = icl_state(&stats, &cur, h);
                    merges += 1;
                    continue 'restart;
                }
            }
        }
        break;
    }

    let icl_value = icl(net, &cur, h)?;
    Ok(FitResult {
        partition: cur,
        icl: icl_value,
        sweeps: passes,
        moves_accepted: merges,
        trace: None,
        runs: Vec::new(),
    })
}

/// Configuration of a complete fit: which initializations to run, how many
/// restarts each, and the shared model settings.
#[derive(Debug, Clone)]
pub struct FitConfig {
    pub strategies: Vec<InitStrategy>,
    pub restarts: usize,
    pub k_up_override: Option<usize>,
    pub hyper: Hyperparameters,
    pub greedy: GreedyConfig,
    pub kmeans_max_iter: usize,
    pub standardize_rows: bool,
    pub rng_seed: u64,
}

impl FitConfig {
    pub fn new(strategies: Vec<InitStrategy>, rng_seed: u64) -> Self {
        Self {
            strategies,
            restarts: 1,
            k_up_override: None,
            hyper: Hyperparameters::default(),
            greedy: GreedyConfig::default(),
            kmeans_max_iter: 100,
            standardize_rows: false,
            rng_seed,
        }
    }
}

/// Runs greedy search plus merge once per (strategy, restart) pair and
/// returns the highest-objective result, with one record per run. Ties go
/// to the earliest run, so the outcome does not depend on scheduling.
pub fn fit(net: &DynamicNetwork, cfg: &FitConfig) -> Result<FitResult, FitError> {
    if cfg.strategies.is_empty() {
        return Err(ConfigError::UnknownStrategy(String::new()).into());
    }
    if cfg.restarts == 0 {
        return Err(ConfigError::UnknownStrategy("restarts must be >= 1".into()).into());
    }
    let n_runs = cfg.strategies.len() * cfg.restarts;
    let outcomes: Vec<Result<(FitResult, RunRecord), GraphError>> =
        map_indexed(n_runs, |run_idx| {
            let strategy = cfg.strategies[run_idx / cfg.restarts];
            let restart = run_idx % cfg.restarts;
            let run_seed = derive_seed(cfg.rng_seed, run_idx as u64 + 1);
            let started = Instant::now();
            let init = build_init(
                net,
                &InitConfig {
                    strategy,
                    rng_seed: run_seed,
                    kmeans_max_iter: cfg.kmeans_max_iter,
                    standardize_rows: cfg.standardize_rows,
                    k_override: cfg.k_up_override,
                },
            );
            let k_up = init.k_up();
            let greedy_seed = derive_seed(run_seed, 0xa11c_e5ed);
            let g = greedy_icl(net, &init, &cfg.hyper, greedy_seed, &cfg.greedy)?;
            let m = merge_step(net, &g.partition, &cfg.hyper)?;
            let record = RunRecord {
                strategy: strategy.name(),
                restart,
                seed: run_seed,
                k_up,
                icl_total: m.icl.total,
                num_groups: m.partition.num_active(),
                sweeps: g.sweeps,
                moves_accepted: g.moves_accepted + m.moves_accepted,
                merges_accepted: m.moves_accepted,
                wall_secs: started.elapsed().as_secs_f64(),
            };
            let mut trace = g.trace;
            if let Some(tr) = trace.as_mut() {
                tr.push(m.icl.total);
            }
            let combined = FitResult {
                partition: m.partition,
                icl: m.icl,
                sweeps: g.sweeps,
                moves_accepted: g.moves_accepted + m.moves_accepted,
                trace,
                runs: Vec::new(),
            };
            Ok((combined, record))
        });

    let mut best: Option<FitResult> = None;
    let mut records = Vec::with_capacity(n_runs);
    for outcome in outcomes {
        let (result, record) = outcome?;
        records.push(record);
        best = Some(match best {
            None => result,
            Some(cur) if result.icl.total > cur.icl.total => result,
            Some(cur) => cur,
        });
    }
    let mut best = best.expect("at least one run");
    best.runs = records;
    Ok(best)
}

//! Starting partitions for the greedy search.
//!
//! Three strategies run k-means on a matrix derived from the observed
//! adjacency structure (aggregated counts, frames side by side, frames
//! stacked) and one draws labels uniformly. The number of centres is drawn
//! uniformly from half to three quarters of the row count, so the search
//! starts well above the expected number of groups and prunes down.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::ConfigError;
use crate::graph::{DynamicNetwork, Partition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InitStrategy {
    Aggregated,
    Colbind,
    Rowbind,
    Random,
}

impl InitStrategy {
    pub const ALL: [InitStrategy; 4] = [
        InitStrategy::Aggregated,
        InitStrategy::Colbind,
        InitStrategy::Rowbind,
        InitStrategy::Random,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            InitStrategy::Aggregated => "aggregated",
            InitStrategy::Colbind => "colbind",
            InitStrategy::Rowbind => "rowbind",
            InitStrategy::Random => "random",
        }
    }

    pub fn parse(s: &str) -> Result<InitStrategy, ConfigError> {
        match s {
            "aggregated" => Ok(InitStrategy::Aggregated),
            "colbind" => Ok(InitStrategy::Colbind),
            "rowbind" => Ok(InitStrategy::Rowbind),
            "random" => Ok(InitStrategy::Random),
            other => Err(ConfigError::UnknownStrategy(other.to_string())),
        }
    }
}

/// Expands strategy names into a deduplicated list; `all` stands for the
/// four concrete strategies.
pub fn parse_strategies(names: &[String]) -> Result<Vec<InitStrategy>, ConfigError> {
    let mut out = Vec::new();
    for name in names {
        if name == "all" {
            for s in InitStrategy::ALL {
                if !out.contains(&s) {
                    out.push(s);
                }
            }
        } else {
            let s = InitStrategy::parse(name)?;
            if !out.contains(&s) {
                out.push(s);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct InitConfig {
    pub strategy: InitStrategy,
    pub rng_seed: u64,
    pub kmeans_max_iter: usize,
    pub standardize_rows: bool,
    /// Overrides the strategy-drawn capacity when set.
    pub k_override: Option<usize>,
}

impl InitConfig {
    pub fn new(strategy: InitStrategy, rng_seed: u64) -> Self {
        Self {
            strategy,
            rng_seed,
            kmeans_max_iter: 100,
            standardize_rows: false,
            k_override: None,
        }
    }
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd iterations with k-means++ seeding and Euclidean distance, run to
/// an assignment fixpoint or `max_iter`. Empty clusters are repaired by
/// moving in the point farthest from its own centroid. Deterministic for a
/// fixed seed.
pub fn kmeans(
    points: &[Vec<f64>],
    k: usize,
    rng_seed: u64,
    max_iter: usize,
) -> Result<Vec<usize>, ConfigError> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(ConfigError::BadK { k, n });
    }
    let d = points[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);

    // k-means++ seeding: next centre drawn proportionally to the squared
    // distance from the nearest centre chosen so far.
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..n)].clone());
    let mut best_d2 = vec![f64::INFINITY; n];
    while centroids.len() < k {
        let last = centroids.last().unwrap();
        let mut sum = 0.0;
        for (p, dd) in points.iter().zip(best_d2.iter_mut()) {
            let dist = sq_dist(p, last);
            if dist < *dd {
                *dd = dist;
            }
            sum += *dd;
        }
        let pick = if sum > 0.0 {
            let mut u = rng.random::<f64>() * sum;
            let mut chosen = n - 1;
            for (i, &dd) in best_d2.iter().enumerate() {
                if u < dd {
                    chosen = i;
                    break;
                }
                u -= dd;
            }
            chosen
        } else {
            // Remaining points coincide with existing centres.
            rng.random_range(0..n)
        };
        centroids.push(points[pick].clone());
    }

    let mut assign = vec![usize::MAX; n];
    for _ in 0..max_iter {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let mut best = 0;
            let mut bd = f64::INFINITY;
            for (c, cent) in centroids.iter().enumerate() {
                let dd = sq_dist(p, cent);
                if dd < bd {
                    bd = dd;
                    best = c;
                }
            }
            if assign[i] != best {
                assign[i] = best;
                changed = true;
            }
        }

        let mut sizes = vec![0usize; k];
        for &a in &assign {
            sizes[a] += 1;
        }
        for empty in 0..k {
            if sizes[empty] > 0 {
                continue;
            }
            let mut far = None;
            let mut far_d = -1.0;
            for (i, p) in points.iter().enumerate() {
                if sizes[assign[i]] < 2 {
                    continue;
                }
                let dd = sq_dist(p, &centroids[assign[i]]);
                if dd > far_d {
                    far_d = dd;
                    far = Some(i);
                }
            }
            if let Some(i) = far {
                sizes[assign[i]] -= 1;
                assign[i] = empty;
                sizes[empty] = 1;
                changed = true;
            }
        }

        if !changed {
            break;
        }

        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for (i, p) in points.iter().enumerate() {
            counts[assign[i]] += 1;
            for (s, x) in sums[assign[i]].iter_mut().zip(p) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for s in sums[c].iter_mut() {
                    *s /= counts[c] as f64;
                }
                centroids[c] = std::mem::take(&mut sums[c]);
            }
        }
    }
    Ok(assign)
}

/// Uniform draw from `[floor(scale/2), floor(3*scale/4)]`, clamped to stay
/// a valid number of centres.
fn draw_k(rng: &mut ChaCha8Rng, scale: usize) -> usize {
    let lo = (scale / 2).max(1);
    let hi = (scale * 3 / 4).max(lo);
    rng.random_range(lo..=hi)
}

fn standardize(rows: &mut [Vec<f64>]) {
    for row in rows.iter_mut() {
        let n = row.len() as f64;
        let mean = row.iter().sum::<f64>() / n;
        let var = row.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        let sd = var.sqrt();
        if sd > 0.0 {
            for x in row.iter_mut() {
                *x = (*x - mean) / sd;
            }
        } else {
            for x in row.iter_mut() {
                *x -= mean;
            }
        }
    }
}

/// Adjacency row of node `i` at frame `t` as 0/1 features. Undirected
/// networks expose all incident edges in the row.
fn frame_row(net: &DynamicNetwork, t: usize, i: usize) -> Vec<f64> {
    let mut row = vec![0.0; net.num_nodes()];
    for &j in net.out_neighbors(t, i) {
        row[j as usize] = 1.0;
    }
    row
}

fn kmeans_labels(
    mut rows: Vec<Vec<f64>>,
    k: usize,
    cfg: &InitConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    if cfg.standardize_rows {
        standardize(&mut rows);
    }
    let k_run = k.min(rows.len());
    kmeans(&rows, k_run, rng.random(), cfg.kmeans_max_iter)
        .expect("centre count clamped to row count")
}

/// Builds the starting partition for one strategy.
pub fn build_init(net: &DynamicNetwork, cfg: &InitConfig) -> Partition {
    let n = net.num_nodes();
    let tt = net.num_times();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    match cfg.strategy {
        InitStrategy::Aggregated => {
            let k = cfg.k_override.unwrap_or_else(|| draw_k(&mut rng, n));
            let mut rows = vec![vec![0.0; n]; n];
            for t in 0..tt {
                for (i, j) in net.frame_edges(t) {
                    rows[i as usize][j as usize] += 1.0;
                    if !net.directed() {
                        rows[j as usize][i as usize] += 1.0;
                    }
                }
            }
            let labels = kmeans_labels(rows, k, cfg, &mut rng);
            let flat: Vec<u32> = (0..tt)
                .flat_map(|_| labels.iter().map(|&g| g as u32))
                .collect();
            Partition::from_flat(flat, tt, n, k).expect("kmeans labels within capacity")
        }
        InitStrategy::Colbind => {
            let k = cfg.k_override.unwrap_or_else(|| draw_k(&mut rng, n));
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|i| {
                    let mut row = Vec::with_capacity(tt * n);
                    for t in 0..tt {
                        row.extend(frame_row(net, t, i));
                    }
                    row
                })
                .collect();
            let labels = kmeans_labels(rows, k, cfg, &mut rng);
            let flat: Vec<u32> = (0..tt)
                .flat_map(|_| labels.iter().map(|&g| g as u32))
                .collect();
            Partition::from_flat(flat, tt, n, k).expect("kmeans labels within capacity")
        }
        InitStrategy::Rowbind => {
            let k = cfg.k_override.unwrap_or_else(|| draw_k(&mut rng, tt * n));
            let rows: Vec<Vec<f64>> = (0..tt * n)
                .map(|r| frame_row(net, r / n, r % n))
                .collect();
            let labels = kmeans_labels(rows, k, cfg, &mut rng);
            let flat: Vec<u32> = labels.iter().map(|&g| g as u32).collect();
            Partition::from_flat(flat, tt, n, k).expect("kmeans labels within capacity")
        }
        InitStrategy::Random => {
            let k = cfg.k_override.unwrap_or_else(|| draw_k(&mut rng, tt * n));
            let flat: Vec<u32> = (0..tt * n).map(|_| rng.random_range(0..k) as u32).collect();
            Partition::from_flat(flat, tt, n, k).expect("random labels within capacity")
        }
    }
}

pub fn init_aggregated(net: &DynamicNetwork, rng_seed: u64) -> Partition {
    build_init(net, &InitConfig::new(InitStrategy::Aggregated, rng_seed))
}

pub fn init_colbind(net: &DynamicNetwork, rng_seed: u64) -> Partition {
    build_init(net, &InitConfig::new(InitStrategy::Colbind, rng_seed))
}

pub fn init_rowbind(net: &DynamicNetwork, rng_seed: u64) -> Partition {
    build_init(net, &InitConfig::new(InitStrategy::Rowbind, rng_seed))
}

pub fn init_random(net: &DynamicNetwork, rng_seed: u64) -> Partition {
    build_init(net, &InitConfig::new(InitStrategy::Random, rng_seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::nmi;

    fn ring_network(n: usize, tt: usize) -> DynamicNetwork {
        let mut rows = Vec::new();
        for t in 0..tt {
            for i in 0..n {
                rows.push((t, i, (i + 1) % n));
            }
        }
        DynamicNetwork::from_edge_list(&rows, n, tt, true).unwrap()
    }

    #[test]
    fn kmeans_k_equals_n_gives_singletons() {
        let points: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64 * 10.0, 0.0]).collect();
        let labels = kmeans(&points, 6, 1, 100).unwrap();
        let mut seen = labels.clone();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 6);
        // Within-cluster cost is zero: every point is its own centroid.
        for (i, p) in points.iter().enumerate() {
            for (j, q) in points.iter().enumerate() {
                if labels[i] == labels[j] {
                    assert_eq!(p, q);
                }
            }
        }
    }

    #[test]
    fn kmeans_k_one_single_label() {
        let points: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64]).collect();
        let labels = kmeans(&points, 1, 3, 100).unwrap();
        assert!(labels.iter().all(|&l| l == 0));
    }

    #[test]
    fn kmeans_rejects_k_above_n() {
        assert!(kmeans(&[vec![0.0]], 2, 0, 10).is_err());
    }

    #[test]
    fn kmeans_separated_blobs_recovered() {
        let mut points = Vec::new();
        let mut truth = Vec::new();
        for i in 0..20 {
            let jitter = (i as f64 * 0.013).sin() * 0.05;
            points.push(vec![0.0 + jitter, 0.1 * (i % 5) as f64 * 0.01]);
            truth.push(0u32);
            points.push(vec![100.0 - jitter, 0.1 * (i % 3) as f64 * 0.01]);
            truth.push(1u32);
        }
        let labels = kmeans(&points, 2, 7, 100).unwrap();
        let labels32: Vec<u32> = labels.iter().map(|&l| l as u32).collect();
        assert!((nmi(&labels32, &truth).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn aggregated_labels_constant_over_time() {
        let net = ring_network(12, 3);
        let p = init_aggregated(&net, 5);
        for t in 0..3 {
            for i in 0..12 {
                assert_eq!(p.label(t, i), p.label(0, i));
            }
        }
    }

    #[test]
    fn aggregated_k_range() {
        let net = ring_network(50, 2);
        for seed in 0..40 {
            let p = init_aggregated(&net, seed);
            assert!((25..=37).contains(&p.k_up()), "k_up {}", p.k_up());
        }
    }

    #[test]
    fn aggregated_empty_network_still_valid() {
        let net = DynamicNetwork::from_edge_list(&[], 10, 3, false).unwrap();
        let p = init_aggregated(&net, 2);
        assert_eq!(p.num_times(), 3);
        for t in 0..3 {
            for i in 0..10 {
                assert_eq!(p.label(t, i), p.label(0, i));
                assert!(p.label(t, i) < p.k_up());
            }
        }
    }

    #[test]
    fn colbind_constant_over_time_and_k_range() {
        let net = ring_network(50, 3);
        let p = init_colbind(&net, 9);
        assert!((25..=37).contains(&p.k_up()));
        for t in 0..3 {
            for i in 0..50 {
                assert_eq!(p.label(t, i), p.label(0, i));
            }
        }
    }

    #[test]
    fn rowbind_k_range_and_frame_rows() {
        let net = ring_network(50, 4);
        for seed in 0..10 {
            let p = init_rowbind(&net, seed);
            assert!((100..=150).contains(&p.k_up()), "k_up {}", p.k_up());
        }
        // Stacked row (t, i) is exactly the frame-t adjacency row of i.
        let row = frame_row(&net, 2, 7);
        for (j, &v) in row.iter().enumerate() {
            assert_eq!(v == 1.0, net.has_edge(2, 7, j));
        }
    }

    #[test]
    fn rowbind_labels_can_differ_across_frames() {
        // Frame 0 is a ring, frame 1 is empty: the same node has different
        // connectivity rows, so some label changes over time.
        let mut rows = Vec::new();
        for i in 0..20 {
            rows.push((0, i, (i + 1) % 20));
        }
        let net = DynamicNetwork::from_edge_list(&rows, 20, 2, true).unwrap();
        let differs = (0..20u64).any(|seed| {
            let p = init_rowbind(&net, seed);
            (0..20).any(|i| p.label(0, i) != p.label(1, i))
        });
        assert!(differs);
    }

    #[test]
    fn random_labels_in_range_and_deterministic() {
        let net = ring_network(25, 4);
        let p1 = init_random(&net, 42);
        let p2 = init_random(&net, 42);
        assert_eq!(p1.flatten(), p2.flatten());
        assert!((50..=75).contains(&p1.k_up()));
        assert!(p1.flatten().iter().all(|&g| (g as usize) < p1.k_up()));
        let p3 = init_random(&net, 43);
        assert!(p1.k_up() != p3.k_up() || p1.flatten() != p3.flatten());
    }

    #[test]
    fn random_labels_roughly_uniform() {
        // 10^4 labels binned into 10 equal ranges; chi-squared against the
        // uniform expectation with a generous cut for 9 degrees of freedom.
        let net = ring_network(100, 100);
        let mut cfg = InitConfig::new(InitStrategy::Random, 77);
        cfg.k_override = Some(5000);
        let p = build_init(&net, &cfg);
        let mut bins = [0usize; 10];
        for &g in p.flatten() {
            bins[(g as usize * 10) / 5000] += 1;
        }
        let expect = 10_000.0 / 10.0;
        let chi2: f64 = bins
            .iter()
            .map(|&c| (c as f64 - expect) * (c as f64 - expect) / expect)
            .sum();
        assert!(chi2 < 35.0, "chi2 {chi2}, bins {bins:?}");
    }

    #[test]
    fn strategies_deterministic_under_seed() {
        let net = ring_network(16, 3);
        for s in InitStrategy::ALL {
            let a = build_init(&net, &InitConfig::new(s, 99));
            let b = build_init(&net, &InitConfig::new(s, 99));
            assert_eq!(a.flatten(), b.flatten(), "strategy {}", s.name());
            assert_eq!(a.k_up(), b.k_up());
        }
    }

    #[test]
    fn parse_strategy_names() {
        assert_eq!(
            parse_strategies(&["all".to_string()]).unwrap(),
            InitStrategy::ALL.to_vec()
        );
        assert_eq!(
            parse_strategies(&["colbind".to_string(), "colbind".to_string()]).unwrap(),
            vec![InitStrategy::Colbind]
        );
        assert!(parse_strategies(&["spectral".to_string()]).is_err());
    }
}

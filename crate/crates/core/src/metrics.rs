//! Partition scoring and descriptive summaries.

use crate::error::{ConfigError, GraphError};
use crate::graph::{check_dims, DynamicNetwork, Partition};
use crate::icl::{
    build_stats, icl_from_stats, posterior_mean_connections, posterior_mean_transitions,
    Hyperparameters, IclValue,
};

/// Remaps arbitrary labels to 0..k-1 and returns counts per class.
fn relabel(labels: &[u32]) -> (Vec<usize>, Vec<usize>) {
    let mut map = std::collections::HashMap::new();
    let mut ids = Vec::with_capacity(labels.len());
    let mut counts = Vec::new();
    for &l in labels {
        let next = map.len();
        let id = *map.entry(l).or_insert(next);
        if id == counts.len() {
            counts.push(0);
        }
        counts[id] += 1;
        ids.push(id);
    }
    (ids, counts)
}

fn entropy(counts: &[usize], n: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Normalized mutual information between two flat label vectors:
/// I(U,V) / sqrt(H(U) H(V)) with natural logarithms. Two degenerate
/// single-cluster partitions score 1; if exactly one side has zero entropy
/// the score is 0. Time-indexed partitions should be concatenated
/// frame-wise before calling.
pub fn nmi(a: &[u32], b: &[u32]) -> Result<f64, ConfigError> {
    if a.len() != b.len() {
        return Err(ConfigError::LengthMismatch(a.len(), b.len()));
    }
    let n = a.len() as f64;
    if a.is_empty() {
        return Ok(1.0);
    }
    let (ia, ca) = relabel(a);
    let (ib, cb) = relabel(b);
    let (ka, kb) = (ca.len(), cb.len());
    let h_a = entropy(&ca, n);
    let h_b = entropy(&cb, n);
    if h_a == 0.0 && h_b == 0.0 {
        return Ok(1.0);
    }
    if h_a == 0.0 || h_b == 0.0 {
        return Ok(0.0);
    }
    let mut joint = vec![0usize; ka * kb];
    for (&u, &v) in ia.iter().zip(&ib) {
        joint[u * kb + v] += 1;
    }
    let mut mi = 0.0;
    for u in 0..ka {
        for v in 0..kb {
            let c = joint[u * kb + v];
            if c > 0 {
                let p = c as f64 / n;
                mi += p * ((n * c as f64) / (ca[u] as f64 * cb[v] as f64)).ln();
            }
        }
    }
    Ok((mi / (h_a * h_b).sqrt()).clamp(0.0, 1.0))
}

/// Descriptive statistics of a fitted partition. Groups are reported in
/// compact order (first appearance), with K columns for K non-empty groups.
#[derive(Debug, Clone)]
pub struct SummaryReport {
    /// K^(t): non-empty groups at each frame.
    pub nonempty_per_frame: Vec<usize>,
    /// T x K group sizes.
    pub group_sizes: Vec<Vec<usize>>,
    /// Mean frame-local out-degree over the (node, frame) members of each group.
    pub avg_out_degree: Vec<f64>,
    /// Mean frame-local in-degree over the (node, frame) members of each group.
    pub avg_in_degree: Vec<f64>,
    /// Posterior mean transition probabilities, K x K.
    pub transition_means: Vec<Vec<f64>>,
    /// Posterior mean connection probabilities, K x K; None where too few
    /// pairs were available to estimate.
    pub connection_means: Vec<Vec<Option<f64>>>,
    pub icl: IclValue,
}

/// Computes all summary fields for a (network, partition) pair. The
/// partition is compacted internally so columns correspond to the K
/// non-empty groups.
pub fn summarize(
    net: &DynamicNetwork,
    p: &Partition,
    h: &Hyperparameters,
    mask_threshold: i64,
) -> Result<SummaryReport, GraphError> {
    check_dims(net, p)?;
    let c = p.compacted();
    let k = c.num_active();
    let stats = build_stats(net, &c)?;
    let active: Vec<u32> = (0..k as u32).collect();

    let group_sizes: Vec<Vec<usize>> = (0..c.num_times())
        .map(|t| (0..k).map(|g| c.occupancy(t, g)).collect())
        .collect();

    let mut out_sum = vec![0f64; k];
    let mut in_sum = vec![0f64; k];
    for t in 0..c.num_times() {
        for i in 0..c.num_nodes() {
            let g = c.label(t, i);
            out_sum[g] += net.out_neighbors(t, i).len() as f64;
            in_sum[g] += net.in_neighbors(t, i).len() as f64;
        }
    }
    let avg_out_degree: Vec<f64> =
        (0..k).map(|g| out_sum[g] / c.total_occupancy(g) as f64).collect();
    let avg_in_degree: Vec<f64> =
        (0..k).map(|g| in_sum[g] / c.total_occupancy(g) as f64).collect();

    Ok(SummaryReport {
        nonempty_per_frame: c.nonempty_per_frame(),
        group_sizes,
        avg_out_degree,
        avg_in_degree,
        transition_means: posterior_mean_transitions(&stats, h, &active),
        connection_means: posterior_mean_connections(&stats, h, &active, mask_threshold),
        icl: icl_from_stats(&stats, &c, h),
    })
}

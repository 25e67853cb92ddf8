//! Sufficient statistics for a (network, partition) pair.
//!
//! Everything the objective needs is held in three K_up x K_up integer
//! matrices: observed block edges, possible block pairs, and Markov
//! transition counts. They are built in one pass and maintained
//! incrementally under single-node reallocations.

use crate::error::GraphError;
use crate::graph::{check_dims, DynamicNetwork, Partition};

/// Block-level counts; in undirected mode only cells with g <= h are used.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockStats {
    k_up: usize,
    num_times: usize,
    num_nodes: usize,
    directed: bool,
    /// Observed edges between group pairs, aggregated over time.
    eta: Vec<i64>,
    /// Possible edges between group pairs, aggregated over time.
    npairs: Vec<i64>,
    /// Transition counts: trans[g][h] = number of switches g -> h.
    trans: Vec<i64>,
    /// Row sums of `trans`.
    trans_row: Vec<i64>,
}

impl BlockStats {
    pub fn k_up(&self) -> usize {
        self.k_up
    }

    pub fn num_times(&self) -> usize {
        self.num_times
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn directed(&self) -> bool {
        self.directed
    }

    #[inline]
    pub(crate) fn idx(&self, g: usize, h: usize) -> usize {
        if self.directed || g <= h {
            g * self.k_up + h
        } else {
            h * self.k_up + g
        }
    }

    /// Observed edge count of block (g, h); undirected blocks are unordered.
    pub fn eta(&self, g: usize, h: usize) -> i64 {
        self.eta[self.idx(g, h)]
    }

    /// Possible edge count of block (g, h).
    pub fn npairs(&self, g: usize, h: usize) -> i64 {
        self.npairs[self.idx(g, h)]
    }

    /// Number of observed switches from group g to group h.
    pub fn trans(&self, g: usize, h: usize) -> i64 {
        self.trans[g * self.k_up + h]
    }

    /// Total number of switches out of group g.
    pub fn trans_row_sum(&self, g: usize) -> i64 {
        self.trans_row[g]
    }

    pub(crate) fn eta_raw(&self) -> &[i64] {
        &self.eta
    }

    pub(crate) fn npairs_raw(&self) -> &[i64] {
        &self.npairs
    }

    pub(crate) fn trans_raw(&self) -> &[i64] {
        &self.trans
    }

    /// Folds group `absorbed` into group `kept`, producing the statistics of
    /// the merged partition without touching any labels. Counts aggregate
    /// exactly because all three matrices are additive over group unions.
    pub fn merged(&self, kept: usize, absorbed: usize) -> BlockStats {
        assert_ne!(kept, absorbed);
        let k = self.k_up;
        let map = |g: usize| if g == absorbed { kept } else { g };
        let mut out = BlockStats {
            k_up: k,
            num_times: self.num_times,
            num_nodes: self.num_nodes,
            directed: self.directed,
            eta: vec![0; k * k],
            npairs: vec![0; k * k],
            trans: vec![0; k * k],
            trans_row: vec![0; k],
        };
        for g in 0..k {
            for h in 0..k {
                if !self.directed && g > h {
                    continue;
                }
                let src = g * k + h;
                let dst = out.idx(map(g), map(h));
                out.eta[dst] += self.eta[src];
                out.npairs[dst] += self.npairs[src];
            }
        }
        for g in 0..k {
            for h in 0..k {
                let r = self.trans[g * k + h];
                out.trans[map(g) * k + map(h)] += r;
            }
            out.trans_row[map(g)] += self.trans_row[g];
        }
        out
    }
}

/// Populates all statistics with a single pass over edges and allocations.
pub fn build_stats(net: &DynamicNetwork, p: &Partition) -> Result<BlockStats, GraphError> {
    check_dims(net, p)?;
    let k = p.k_up();
    let tt = p.num_times();
    let directed = net.directed();
    let mut stats = BlockStats {
        k_up: k,
        num_times: tt,
        num_nodes: p.num_nodes(),
        directed,
        eta: vec![0; k * k],
        npairs: vec![0; k * k],
        trans: vec![0; k * k],
        trans_row: vec![0; k],
    };

    for t in 0..tt {
        for (i, j) in net.frame_edges(t) {
            let g = p.label(t, i as usize);
            let h = p.label(t, j as usize);
            let idx = stats.idx(g, h);
            stats.eta[idx] += 1;
        }
    }

    // npairs from occupancies; only groups present in the frame contribute.
    let mut present: Vec<usize> = Vec::with_capacity(k);
    for t in 0..tt {
        present.clear();
        present.extend((0..k).filter(|&g| p.occupancy(t, g) > 0));
        for (ai, &g) in present.iter().enumerate() {
            let og = p.occupancy(t, g) as i64;
            if directed {
                for &h in &present {
                    let oh = p.occupancy(t, h) as i64;
                    stats.npairs[g * k + h] += og * oh - if g == h { og } else { 0 };
                }
            } else {
                stats.npairs[g * k + g] += og * (og - 1) / 2;
                for &h in &present[ai + 1..] {
                    let oh = p.occupancy(t, h) as i64;
                    let idx = stats.idx(g, h);
                    stats.npairs[idx] += og * oh;
                }
            }
        }
    }

    for t in 1..tt {
        for i in 0..p.num_nodes() {
            let g = p.label(t - 1, i);
            let h = p.label(t, i);
            stats.trans[g * k + h] += 1;
            stats.trans_row[g] += 1;
        }
    }
    Ok(stats)
}

/// Reassigns node `i` at frame `t` to `g_new`, updating the partition and
/// every statistic so that the result equals a fresh [`build_stats`] call.
pub fn apply_move(
    stats: &mut BlockStats,
    net: &DynamicNetwork,
    p: &mut Partition,
    t: usize,
    i: usize,
    g_new: usize,
) {
    let z = p.label(t, i);
    let w = g_new;
    if z == w {
        return;
    }
    let k = stats.k_up;

    // Edge counts: every edge incident to (t, i) changes block.
    if stats.directed {
        for &j in net.out_neighbors(t, i) {
            let h = p.label(t, j as usize);
            stats.eta[z * k + h] -= 1;
            stats.eta[w * k + h] += 1;
        }
        for &j in net.in_neighbors(t, i) {
            let h = p.label(t, j as usize);
            stats.eta[h * k + z] -= 1;
            stats.eta[h * k + w] += 1;
        }
    } else {
        for &j in net.out_neighbors(t, i) {
            let h = p.label(t, j as usize);
            let from = stats.idx(z, h);
            let to = stats.idx(w, h);
            stats.eta[from] -= 1;
            stats.eta[to] += 1;
        }
    }

    // Possible-pair counts at frame t, using occupancies before the move.
    let oz = p.occupancy(t, z) as i64;
    let ow = p.occupancy(t, w) as i64;
    for g in 0..k {
        if g == z || g == w {
            continue;
        }
        let og = p.occupancy(t, g) as i64;
        if og == 0 {
            continue;
        }
        if stats.directed {
            stats.npairs[z * k + g] -= og;
            stats.npairs[g * k + z] -= og;
            stats.npairs[w * k + g] += og;
            stats.npairs[g * k + w] += og;
        } else {
            let zi = stats.idx(z, g);
            let wi = stats.idx(w, g);
            stats.npairs[zi] -= og;
            stats.npairs[wi] += og;
        }
    }
    if stats.directed {
        stats.npairs[z * k + z] -= 2 * (oz - 1);
        stats.npairs[w * k + w] += 2 * ow;
        stats.npairs[z * k + w] += oz - ow - 1;
        stats.npairs[w * k + z] += oz - ow - 1;
    } else {
        stats.npairs[z * k + z] -= oz - 1;
        stats.npairs[w * k + w] += ow;
        let zw = stats.idx(z, w);
        stats.npairs[zw] += oz - ow - 1;
    }

    // Transition counts around frame t.
    if t > 0 {
        let prev = p.label(t - 1, i);
        stats.trans[prev * k + z] -= 1;
        stats.trans[prev * k + w] += 1;
    }
    if t + 1 < stats.num_times {
        let next = p.label(t + 1, i);
        stats.trans[z * k + next] -= 1;
        stats.trans[w * k + next] += 1;
        stats.trans_row[z] -= 1;
        stats.trans_row[w] += 1;
    }

    p.set_label(t, i, w);
}

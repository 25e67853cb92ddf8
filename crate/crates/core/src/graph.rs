//! Storage and validation of dynamic binary networks and time-indexed
//! hard partitions.
//!
//! A [`DynamicNetwork`] is a sequence of sparse binary snapshots over a
//! fixed node set; a [`Partition`] assigns every node a group label at
//! every time frame. Networks are immutable after construction;
//! partitions are cheap to clone and mutate.

use std::collections::HashSet;

use crate::error::GraphError;

/// Sparse T-frame binary network over a fixed node set.
///
/// Edges are stored once per frame in a hash set plus per-node adjacency
/// lists so neighborhood scans cost O(degree). In undirected mode an edge
/// is a single unordered pair `(min, max)` and the out/in lists coincide.
#[derive(Debug, Clone)]
pub struct DynamicNetwork {
    num_nodes: usize,
    num_times: usize,
    directed: bool,
    /// Per-frame edge sets; undirected pairs normalized to i < j.
    frames: Vec<HashSet<(u32, u32)>>,
    /// out[t][i] = targets of edges leaving i at frame t (neighbors if undirected).
    out_adj: Vec<Vec<Vec<u32>>>,
    /// in_adj[t][i] = sources of edges entering i at frame t (same as out if undirected).
    in_adj: Vec<Vec<Vec<u32>>>,
    total_edges: usize,
}

impl DynamicNetwork {
    /// Builds a network from `(t, i, j)` triples, deduplicating repeated
    /// edges. In undirected mode `(i, j)` and `(j, i)` collapse to one pair.
    /// Row numbers in errors are 1-based positions in `rows`.
    pub fn from_edge_list(
        rows: &[(usize, usize, usize)],
        num_nodes: usize,
        num_times: usize,
        directed: bool,
    ) -> Result<Self, GraphError> {
        if num_nodes == 0 || num_times == 0 {
            return Err(GraphError::EmptyDimension);
        }
        let mut frames: Vec<HashSet<(u32, u32)>> = vec![HashSet::new(); num_times];
        for (idx, &(t, i, j)) in rows.iter().enumerate() {
            let row = idx + 1;
            if t >= num_times {
                return Err(GraphError::TimeOutOfRange { row, time: t, num_times });
            }
            if i >= num_nodes {
                return Err(GraphError::NodeOutOfRange { row, node: i, num_nodes });
            }
            if j >= num_nodes {
                return Err(GraphError::NodeOutOfRange { row, node: j, num_nodes });
            }
            if i == j {
                return Err(GraphError::SelfEdge { row, time: t, node: i });
            }
            let pair = if directed || i < j {
                (i as u32, j as u32)
            } else {
                (j as u32, i as u32)
            };
            frames[t].insert(pair);
        }

        let mut out_adj = vec![vec![Vec::new(); num_nodes]; num_times];
        let mut in_adj = vec![vec![Vec::new(); num_nodes]; num_times];
        let mut total_edges = 0;
        for (t, set) in frames.iter().enumerate() {
            total_edges += set.len();
            for &(i, j) in set.iter() {
                out_adj[t][i as usize].push(j);
                in_adj[t][j as usize].push(i);
                if !directed {
                    out_adj[t][j as usize].push(i);
                    in_adj[t][i as usize].push(j);
                }
            }
        }
        for t in 0..num_times {
            for i in 0..num_nodes {
                out_adj[t][i].sort_unstable();
                in_adj[t][i].sort_unstable();
            }
        }

        Ok(Self {
            num_nodes,
            num_times,
            directed,
            frames,
            out_adj,
            in_adj,
            total_edges,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_times(&self) -> usize {
        self.num_times
    }

    pub fn directed(&self) -> bool {
        self.directed
    }

    /// Total number of edges summed over frames (M).
    pub fn total_edges(&self) -> usize {
        self.total_edges
    }

    pub fn num_frame_edges(&self, t: usize) -> usize {
        self.frames[t].len()
    }

    pub fn has_edge(&self, t: usize, i: usize, j: usize) -> bool {
        let pair = if self.directed || i < j {
            (i as u32, j as u32)
        } else {
            (j as u32, i as u32)
        };
        self.frames[t].contains(&pair)
    }

    /// Targets of edges leaving `i` at frame `t`; neighbors when undirected.
    pub fn out_neighbors(&self, t: usize, i: usize) -> &[u32] {
        &self.out_adj[t][i]
    }

    /// Sources of edges entering `i` at frame `t`; neighbors when undirected.
    pub fn in_neighbors(&self, t: usize, i: usize) -> &[u32] {
        &self.in_adj[t][i]
    }

    /// Edges of frame `t` in sorted order (undirected pairs as i < j).
    pub fn frame_edges(&self, t: usize) -> Vec<(u32, u32)> {
        let mut edges: Vec<(u32, u32)> = self.frames[t].iter().copied().collect();
        edges.sort_unstable();
        edges
    }

    /// All edges as sorted `(t, i, j)` triples; the canonical serialized form.
    pub fn edge_list(&self) -> Vec<(usize, usize, usize)> {
        let mut rows = Vec::with_capacity(self.total_edges);
        for t in 0..self.num_times {
            for (i, j) in self.frame_edges(t) {
                rows.push((t, i as usize, j as usize));
            }
        }
        rows
    }
}

/// Hard clustering of every node at every frame, with capacity `k_up`.
///
/// Occupancy counts, per-group totals and the set of non-empty groups are
/// maintained on every label write, so queries used by the ICL engine are
/// O(1).
#[derive(Debug, Clone)]
pub struct Partition {
    num_times: usize,
    num_nodes: usize,
    k_up: usize,
    /// Row-major: labels[t * num_nodes + i].
    labels: Vec<u32>,
    /// Row-major: occupancy[t * k_up + g].
    occupancy: Vec<u32>,
    /// total_occ[g] = sum of occupancy over frames.
    total_occ: Vec<u32>,
    /// Sorted indices of groups with total_occ > 0.
    active: Vec<u32>,
}

impl Partition {
    /// All-zeros partition (every node in group 0 at every frame).
    pub fn zeros(num_times: usize, num_nodes: usize, k_up: usize) -> Result<Self, GraphError> {
        Self::from_flat(vec![0; num_times * num_nodes], num_times, num_nodes, k_up)
    }

    /// Builds a partition from a T-row label matrix.
    pub fn from_rows(rows: &[Vec<usize>], k_up: usize) -> Result<Self, GraphError> {
        let num_times = rows.len();
        if num_times == 0 {
            return Err(GraphError::EmptyDimension);
        }
        let num_nodes = rows[0].len();
        for (t, row) in rows.iter().enumerate() {
            if row.len() != num_nodes {
                return Err(GraphError::RaggedLabels {
                    row: t,
                    got: row.len(),
                    expected: num_nodes,
                });
            }
        }
        let flat: Vec<u32> = rows.iter().flatten().map(|&g| g as u32).collect();
        Self::from_flat(flat, num_times, num_nodes, k_up)
    }

    /// Builds a partition from flat row-major labels (frame-major order).
    pub fn from_flat(
        labels: Vec<u32>,
        num_times: usize,
        num_nodes: usize,
        k_up: usize,
    ) -> Result<Self, GraphError> {
        if num_times == 0 || num_nodes == 0 || k_up == 0 {
            return Err(GraphError::EmptyDimension);
        }
        assert_eq!(labels.len(), num_times * num_nodes, "label buffer size");
        for t in 0..num_times {
            for i in 0..num_nodes {
                let g = labels[t * num_nodes + i] as usize;
                if g >= k_up {
                    return Err(GraphError::LabelOutOfRange {
                        time: t,
                        node: i,
                        label: g,
                        k_up,
                    });
                }
            }
        }
        let mut occupancy = vec![0u32; num_times * k_up];
        let mut total_occ = vec![0u32; k_up];
        for t in 0..num_times {
            for i in 0..num_nodes {
                let g = labels[t * num_nodes + i] as usize;
                occupancy[t * k_up + g] += 1;
                total_occ[g] += 1;
            }
        }
        let active = (0..k_up as u32).filter(|&g| total_occ[g as usize] > 0).collect();
        Ok(Self {
            num_times,
            num_nodes,
            k_up,
            labels,
            occupancy,
            total_occ,
            active,
        })
    }

    pub fn num_times(&self) -> usize {
        self.num_times
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn k_up(&self) -> usize {
        self.k_up
    }

    pub fn label(&self, t: usize, i: usize) -> usize {
        self.labels[t * self.num_nodes + i] as usize
    }

    /// Group size at a single frame.
    pub fn occupancy(&self, t: usize, g: usize) -> usize {
        self.occupancy[t * self.k_up + g] as usize
    }

    /// Group size aggregated over all frames.
    pub fn total_occupancy(&self, g: usize) -> usize {
        self.total_occ[g] as usize
    }

    /// Group size at the first frame.
    pub fn first_count(&self, g: usize) -> usize {
        self.occupancy[g] as usize
    }

    /// Group size summed over frames after the first; drives the empirical
    /// initial-state weights.
    pub fn later_count(&self, g: usize) -> usize {
        self.total_occ[g] as usize - self.occupancy[g] as usize
    }

    /// Sorted indices of groups that are non-empty somewhere.
    pub fn active_groups(&self) -> &[u32] {
        &self.active
    }

    /// Number of non-empty groups (K).
    pub fn num_active(&self) -> usize {
        self.active.len()
    }

    /// Number of non-empty groups at each frame (K^(t)).
    pub fn nonempty_per_frame(&self) -> Vec<usize> {
        (0..self.num_times)
            .map(|t| {
                (0..self.k_up)
                    .filter(|&g| self.occupancy[t * self.k_up + g] > 0)
                    .count()
            })
            .collect()
    }

    /// Reassigns node `i` at frame `t`, keeping all derived counts in sync.
    pub fn set_label(&mut self, t: usize, i: usize, g_new: usize) {
        debug_assert!(g_new < self.k_up);
        let idx = t * self.num_nodes + i;
        let g_old = self.labels[idx] as usize;
        if g_old == g_new {
            return;
        }
        self.labels[idx] = g_new as u32;
        self.occupancy[t * self.k_up + g_old] -= 1;
        self.occupancy[t * self.k_up + g_new] += 1;
        self.total_occ[g_old] -= 1;
        self.total_occ[g_new] += 1;
        if self.total_occ[g_old] == 0 {
            if let Ok(pos) = self.active.binary_search(&(g_old as u32)) {
                self.active.remove(pos);
            }
        }
        if self.total_occ[g_new] == 1 {
            if let Err(pos) = self.active.binary_search(&(g_new as u32)) {
                self.active.insert(pos, g_new as u32);
            }
        }
    }

    /// Flat labels in time-concatenated order, the form NMI scoring expects.
    pub fn flatten(&self) -> &[u32] {
        &self.labels
    }

    /// Renumbers non-empty groups to 0..K-1 in order of first appearance
    /// (scanning frames, then nodes) and tightens the capacity to K.
    pub fn compacted(&self) -> Partition {
        let mut remap = vec![u32::MAX; self.k_up];
        let mut next = 0u32;
        let mut labels = Vec::with_capacity(self.labels.len());
        for &g in &self.labels {
            if remap[g as usize] == u32::MAX {
                remap[g as usize] = next;
                next += 1;
            }
            labels.push(remap[g as usize]);
        }
        Partition::from_flat(labels, self.num_times, self.num_nodes, next.max(1) as usize)
            .expect("relabeling preserves validity")
    }

    /// Same labels with a different capacity; fails if a label exceeds it.
    pub fn with_capacity(&self, k_up: usize) -> Result<Partition, GraphError> {
        Partition::from_flat(self.labels.clone(), self.num_times, self.num_nodes, k_up)
    }
}

/// Checks that a network and a partition describe the same node set and
/// time span.
pub fn check_dims(net: &DynamicNetwork, p: &Partition) -> Result<(), GraphError> {
    if net.num_nodes() != p.num_nodes() || net.num_times() != p.num_times() {
        return Err(GraphError::DimensionMismatch {
            net_times: net.num_times(),
            net_nodes: net.num_nodes(),
            part_times: p.num_times(),
            part_nodes: p.num_nodes(),
        });
    }
    Ok(())
}

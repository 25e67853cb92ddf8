//! Model-based clustering for discrete-time dynamic networks.
//!
//! Nodes of a binary dynamic network are clustered under a block model
//! whose group memberships evolve as Markov chains. All model parameters
//! are integrated out analytically, leaving an exactly computable
//! objective (the integrated completed likelihood) that a greedy search
//! maximizes over hard partitions; the number of groups falls out of the
//! optimal partition. The crate also ships the matching synthetic-network
//! generator, k-means-based initializers, NMI scoring, descriptive
//! summaries, and CSV/JSON input-output used by the command-line tool.
//!
//! Independent fitting runs execute in parallel through rayon by default;
//! disabling the `parallel` feature falls back to sequential execution
//! with identical results.

pub mod error;
pub mod graph;
pub mod greedy;
pub mod icl;
pub mod init;
pub mod io;
pub mod metrics;
pub mod sim;

pub use error::{ConfigError, GraphError, IoError};
pub use graph::{DynamicNetwork, Partition};
pub use icl::{BlockStats, Hyperparameters, IclValue};

/// Maps `f` over `0..n`, in parallel when the `parallel` feature is on.
/// Output order matches input order either way, so callers stay
/// deterministic.
#[cfg(feature = "parallel")]
pub fn map_indexed<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, f: F) -> Vec<T> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

/// Sequential fallback with the same contract.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F: Fn(usize) -> T>(n: usize, f: F) -> Vec<T> {
    (0..n).map(f).collect()
}

/// Whether this build executes independent runs on a thread pool.
pub fn parallel_enabled() -> bool {
    cfg!(feature = "parallel")
}

/// Derives an independent stream seed from a base seed and a run index.
/// SplitMix-style mixing keeps streams decorrelated and deterministic.
pub fn derive_seed(base: u64, salt: u64) -> u64 {
    let mut x = base ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

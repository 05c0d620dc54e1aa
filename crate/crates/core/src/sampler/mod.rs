//! Benchmark dataset generation from two large KGs with a reference
//! alignment.
//!
//! [`ids_sample`] deletes aligned entity pairs round by round, sizing each
//! degree bucket's deletions so the sample's degree distribution tracks the
//! source, until both graphs reach the target size. [`ras_sample`] and
//! [`prs_sample`] are the naive baselines; [`densify_v2`] produces the
//! denser source used for V2 datasets.

mod baselines;
mod densify;
mod ids;
mod js;
mod pagerank;

pub use baselines::{prs_sample, ras_sample};
pub use densify::{densify_v2, DensifyOutcome};
pub use ids::{ids_sample, SamplerConfig};
pub use js::js_divergence;
pub use pagerank::{pagerank, pagerank_adjacency, PageRankScores, DEFAULT_DAMPING, DEFAULT_TOLERANCE};

use std::collections::HashSet;

use crate::kg::{AlignmentSet, KnowledgeGraph};

/// Output of a sampling run.
#[derive(Clone, Debug)]
pub struct Sample {
    pub kg1: KnowledgeGraph,
    pub kg2: KnowledgeGraph,
    pub links: AlignmentSet,
    /// JS divergence of each side against its (filtered) source, when computed.
    pub js: Option<[f64; 2]>,
    pub attempts: usize,
    pub rounds: usize,
}

/// Keeps only reference pairs whose ends exist, and restricts each graph to
/// entities occurring in those pairs.
pub fn filter_by_reference(
    kg1: &KnowledgeGraph,
    kg2: &KnowledgeGraph,
    reference: &AlignmentSet,
) -> (KnowledgeGraph, KnowledgeGraph, AlignmentSet) {
    let links = reference.filter(|a| kg1.contains_entity(a), |b| kg2.contains_entity(b));
    let left: HashSet<&str> = links.sources().collect();
    let right: HashSet<&str> = links.targets().collect();
    let f1 = kg1.restrict(|e| left.contains(e));
    let f2 = kg2.restrict(|e| right.contains(e));
    (f1, f2, links)
}

/// Restricts both graphs to the given pairs.
pub(crate) fn restrict_to_pairs(
    kg1: &KnowledgeGraph,
    kg2: &KnowledgeGraph,
    links: AlignmentSet,
) -> (KnowledgeGraph, KnowledgeGraph, AlignmentSet) {
    let left: HashSet<&str> = links.sources().collect();
    let right: HashSet<&str> = links.targets().collect();
    let r1 = kg1.restrict(|e| left.contains(e));
    let r2 = kg2.restrict(|e| right.contains(e));
    (r1, r2, links)
}

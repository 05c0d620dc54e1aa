//! Embedding-based entity alignment between two knowledge graphs.
//!
//! The crate is organised along the alignment pipeline:
//!
//! - [`kg`]: knowledge-graph data model, dataset layout on disk, folds and
//!   structural statistics.
//! - [`sampler`]: benchmark dataset generation (iterative degree-based
//!   sampling plus the random and PageRank baselines).
//! - [`embedding`]: scoring functions and encoders with analytic gradients.
//! - [`training`]: combination modes, learning strategies and the
//!   optimisation loop.
//! - [`inference`]: similarity metrics, CSLS and alignment strategies.
//! - [`evaluation`]: ranking and set metrics, cross-validation and
//!   embedding-geometry diagnostics.

pub mod embedding;
pub mod error;
pub mod evaluation;
pub mod inference;
pub mod kg;
pub mod rng;
pub mod sampler;
pub mod synthetic;
pub mod training;

pub use error::{Error, Result};
pub use kg::{AlignmentSet, DatasetBundle, DegreeDistribution, Fold, GraphStats, KnowledgeGraph};

//! Scoring functions and encoders with analytic gradients.
//!
//! All parameters live in an [`EmbeddingSpace`]. Functions here are pure:
//! they read a snapshot and return values and gradients, leaving updates to
//! the trainer.

mod attr;
mod energy;
mod gcn;
mod grad;
mod literal;
mod loss;
mod negative;
mod path;
mod space;
#[cfg(test)]
pub(crate) mod testing;

pub use attr::{attr_correlation_loss, attr_correlation_prob, attr_nll_grad, attribute_cooccurrence};
pub use energy::{transe_energy, transe_energy_grad, Norm};
pub use gcn::{
    gcn_backward, gcn_forward, gcn_forward_cached, Activation, GcnCache, GcnLayer, NormalizedAdjacency,
    DEFAULT_DEPTH,
};
pub use grad::{Gradients, SparseGrad};
pub use literal::{char_vocabulary, CharOp, LiteralEncoder, UNKNOWN_CHAR};
pub use loss::{energy_loss, triple_loss, EnergyLoss, LossConfig, LossKind, RowTriple, Sampling};
pub use negative::{NegativeSampler, MAX_ATTEMPTS};
pub use path::{mine_paths, path_compose, path_loss, PathGrad, PathOp};
pub use space::{dot, l2, mat_vec, EmbeddingSpace, Index, Side, Table};

/// Half-width of the uniform initialization interval, `6 / sqrt(dim)`.
pub fn init_bound(dim: usize) -> f64 {
    6.0 / (dim as f64).sqrt()
}

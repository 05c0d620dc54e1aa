//! From embeddings to predicted alignment: similarity metrics, CSLS
//! rescoring, ranking tables and three matching strategies.

mod matching;
mod ranking;
mod similarity;

pub use matching::{
    align, greedy_align, hungarian_max, mwgm_align, stable_match, stable_match_symmetric, InferenceConfig, Strategy,
    DEFAULT_EXACT_BOUND,
};
pub use ranking::{PredictedAlignment, Prediction, RankingTable};
pub use similarity::{base_similarity, csls, similarity, Metric, SimilarityConfig, DEFAULT_CSLS_K};

use crate::embedding::{EmbeddingSpace, Side};
use crate::error::Result;

/// Ranking table between the given KG1 and KG2 entities in `space`.
pub fn ranking_table(
    space: &EmbeddingSpace,
    sources: &[String],
    targets: &[String],
    cfg: &SimilarityConfig,
) -> Result<RankingTable> {
    let src = space.aligned_matrix(Side::Kg1, sources)?;
    let tgt = space.aligned_matrix(Side::Kg2, targets)?;
    RankingTable::new(sources.to_vec(), targets.to_vec(), similarity(&src, &tgt, cfg)?)
}

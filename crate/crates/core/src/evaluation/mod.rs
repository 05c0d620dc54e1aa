//! Ranking and set metrics, five-fold cross-validation and diagnostics of
//! the embedding geometry.

mod geometry;
mod metrics;

pub use geometry::{geometry_report, GeometryReport};
pub use metrics::{is_exhaustive, metrics_csv, rank_metrics, set_metrics, CrossValidation, MetricsReport, RankMetrics, SetMetrics, DEFAULT_HITS};

use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingSpace;
use crate::error::{Error, Result};
use crate::inference::{align, ranking_table, PredictedAlignment, RankingTable};
use crate::kg::{AlignmentSet, DatasetBundle, Fold};
use crate::training::{train, RunConfig, TrainOutput};

/// Which KG2 entities compete as candidates for a test source.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CandidateScope {
    /// Targets of the test pairs only.
    #[default]
    Test,
    /// Every KG2 entity.
    All,
}

impl std::str::FromStr for CandidateScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "test" => Ok(Self::Test),
            "all" => Ok(Self::All),
            _ => Err(Error::Config(format!("unknown candidate scope {s:?} (expected test or all)"))),
        }
    }
}

/// Ranking table of the test sources against the chosen candidates.
pub fn test_ranking(
    space: &EmbeddingSpace,
    bundle: &DatasetBundle,
    test: &AlignmentSet,
    scope: CandidateScope,
    cfg: &RunConfig,
) -> Result<RankingTable> {
    let sources: Vec<String> = test.sources().map(String::from).collect();
    let targets: Vec<String> = match scope {
        CandidateScope::Test => test.targets().map(String::from).collect(),
        CandidateScope::All => bundle.kg2.entities().to_vec(),
    };
    ranking_table(space, &sources, &targets, &cfg.inference.similarity)
}

/// Rank metrics of `space` on `test`, plus set metrics of the predicted
/// alignment under the configured strategy.
pub fn evaluate(
    space: &EmbeddingSpace,
    bundle: &DatasetBundle,
    test: &AlignmentSet,
    scope: CandidateScope,
    cfg: &RunConfig,
) -> Result<(MetricsReport, PredictedAlignment)> {
    let rt = test_ranking(space, bundle, test, scope, cfg)?;
    let rank = rank_metrics(&rt, test, &DEFAULT_HITS)?;
    let predicted = align(&rt, &cfg.inference)?;
    let set = set_metrics(&predicted.to_alignment(), test);
    Ok((
        MetricsReport {
            fold: None,
            rank,
            set: Some(set),
        },
        predicted,
    ))
}

/// Trains and evaluates one fold.
pub fn run_fold(
    bundle: &DatasetBundle,
    fold: &Fold,
    cfg: &RunConfig,
    scope: CandidateScope,
) -> Result<(MetricsReport, TrainOutput)> {
    let out = train(bundle, fold, &cfg.training, cfg.self_training.as_ref())?;
    let (report, _) = evaluate(&out.space, bundle, &fold.test, scope, cfg)?;
    Ok((report, out))
}

/// Runs every fold of the bundle and aggregates mean and standard
/// deviation. A failing fold aborts with its 1-based index attached.
pub fn cross_validate(bundle: &DatasetBundle, cfg: &RunConfig, scope: CandidateScope) -> Result<CrossValidation> {
    cfg.validate()?;
    let folds = bundle
        .folds
        .as_ref()
        .ok_or_else(|| Error::Validation("dataset has no folds".into()))?;
    let mut reports = Vec::with_capacity(folds.len());
    for (i, fold) in folds.iter().enumerate() {
        let wrap = |e| Error::Fold {
            fold: i + 1,
            source: Box::new(e),
        };
        let (mut report, _) = run_fold(bundle, fold, cfg, scope).map_err(wrap)?;
        report.fold = Some(i + 1);
        log::info!("fold {}: Hits@1 {:.4}", i + 1, report.rank.hits[&1]);
        reports.push(report);
    }
    CrossValidation::aggregate(reports)
}

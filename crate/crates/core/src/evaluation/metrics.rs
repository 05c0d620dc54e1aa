use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::RankingTable;
use crate::kg::AlignmentSet;

/// Default cut-offs reported for Hits@m.
pub const DEFAULT_HITS: [usize; 3] = [1, 5, 10];

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RankMetrics {
    /// Hits@m for each requested m.
    pub hits: BTreeMap<usize, f64>,
    pub mr: f64,
    pub mrr: f64,
    pub count: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SetMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Metrics of one fold (or one aggregate row).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub fold: Option<usize>,
    pub rank: RankMetrics,
    pub set: Option<SetMetrics>,
}

/// Hits@m, mean rank and mean reciprocal rank of the true targets. Ranks
/// are 1-based and tied candidates share the worst rank.
pub fn rank_metrics(rt: &RankingTable, truth: &AlignmentSet, ms: &[usize]) -> Result<RankMetrics> {
    let mut missing = Vec::new();
    let mut ranks = Vec::with_capacity(truth.len());
    for (s, t) in truth.iter() {
        match (rt.source_index(s), rt.target_index(t)) {
            (Some(i), Some(j)) => ranks.push(rt.rank_of(i, j)),
            (None, _) => missing.push(format!("source {s}")),
            (_, None) => missing.push(format!("target {t}")),
        }
    }
    if !missing.is_empty() {
        return Err(Error::Validation(format!(
            "truth entities missing from the ranking table: {}",
            missing.join(", ")
        )));
    }
    if ranks.is_empty() {
        return Err(Error::Empty("no truth pairs to evaluate".into()));
    }
    let n = ranks.len() as f64;
    let hits = ms
        .iter()
        .map(|&m| (m, ranks.iter().filter(|&&r| r <= m).count() as f64 / n))
        .collect();
    Ok(RankMetrics {
        hits,
        mr: ranks.iter().sum::<usize>() as f64 / n,
        mrr: ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / n,
        count: ranks.len(),
    })
}

/// Precision, recall and F1 of exact pair matches. An empty prediction
/// scores zero on all three.
pub fn set_metrics(pred: &AlignmentSet, truth: &AlignmentSet) -> SetMetrics {
    let truth_set = truth.to_set();
    let pred_set = pred.to_set();
    let correct = pred_set.intersection(&truth_set).count() as f64;
    if pred_set.is_empty() || truth_set.is_empty() || correct == 0.0 {
        return SetMetrics::default();
    }
    let precision = correct / pred_set.len() as f64;
    let recall = correct / truth_set.len() as f64;
    SetMetrics {
        precision,
        recall,
        f1: 2.0 * precision * recall / (precision + recall),
    }
}

/// Per-fold reports with mean and population standard deviation.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub folds: Vec<MetricsReport>,
    pub mean: MetricsReport,
    pub std: MetricsReport,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl CrossValidation {
    pub fn aggregate(folds: Vec<MetricsReport>) -> Result<Self> {
        if folds.is_empty() {
            return Err(Error::Empty("no folds to aggregate".into()));
        }
        let column = |f: &dyn Fn(&MetricsReport) -> f64| mean_std(&folds.iter().map(f).collect::<Vec<_>>());
        let mut mean = MetricsReport::default();
        let mut std = MetricsReport::default();
        for &m in folds[0].rank.hits.keys() {
            let (a, b) = column(&|r| r.rank.hits.get(&m).copied().unwrap_or(f64::NAN));
            mean.rank.hits.insert(m, a);
            std.rank.hits.insert(m, b);
        }
        (mean.rank.mr, std.rank.mr) = column(&|r| r.rank.mr);
        (mean.rank.mrr, std.rank.mrr) = column(&|r| r.rank.mrr);
        mean.rank.count = folds.iter().map(|r| r.rank.count).sum::<usize>() / folds.len();
        if folds.iter().all(|r| r.set.is_some()) {
            let get = |f: fn(&SetMetrics) -> f64| column(&|r: &MetricsReport| f(r.set.as_ref().unwrap()));
            let (p, sp) = get(|s| s.precision);
            let (rc, sr) = get(|s| s.recall);
            let (f, sf) = get(|s| s.f1);
            mean.set = Some(SetMetrics { precision: p, recall: rc, f1: f });
            std.set = Some(SetMetrics { precision: sp, recall: sr, f1: sf });
        }
        Ok(Self { folds, mean, std })
    }

    /// One row per fold, then `mean` and `std` rows.
    pub fn to_csv(&self) -> String {
        let mut rows: Vec<(String, &MetricsReport)> = self
            .folds
            .iter()
            .map(|r| (r.fold.map_or_else(String::new, |k| k.to_string()), r))
            .collect();
        rows.push(("mean".into(), &self.mean));
        rows.push(("std".into(), &self.std));
        metrics_csv(&rows)
    }
}

/// Labelled metric rows as CSV. Hits columns follow the first row's cut-offs.
pub fn metrics_csv(rows: &[(String, &MetricsReport)]) -> String {
    let ms: Vec<usize> = rows.first().map(|r| r.1.rank.hits.keys().copied().collect()).unwrap_or_default();
    let mut out = String::from("fold");
    for m in &ms {
        write!(out, ",hits@{m}").unwrap();
    }
    out.push_str(",mr,mrr,precision,recall,f1\n");
    for (label, r) in rows {
        out.push_str(label);
        for m in &ms {
            write!(out, ",{:.6}", r.rank.hits.get(m).copied().unwrap_or(f64::NAN)).unwrap();
        }
        write!(out, ",{:.6},{:.6}", r.rank.mr, r.rank.mrr).unwrap();
        match &r.set {
            Some(s) => writeln!(out, ",{:.6},{:.6},{:.6}", s.precision, s.recall, s.f1).unwrap(),
            None => out.push_str(",,,\n"),
        }
    }
    out
}

/// Whether every truth source has exactly one prediction.
pub fn is_exhaustive(pred: &AlignmentSet, truth: &AlignmentSet) -> bool {
    let sources: HashSet<&str> = pred.sources().collect();
    pred.len() == truth.len() && truth.sources().all(|s| sources.contains(s))
}

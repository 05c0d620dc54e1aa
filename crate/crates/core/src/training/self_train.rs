use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::config::{Editing, SelfTrainConfig};
use crate::embedding::{EmbeddingSpace, Side};
use crate::error::Result;
use crate::evaluation::{set_metrics, SetMetrics};
use crate::inference::{base_similarity, Metric};
use crate::kg::AlignmentSet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentedPair {
    pub source: String,
    pub target: String,
    pub similarity: f64,
}

/// Outcome of one proposal round.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProposalLog {
    pub proposed: usize,
    pub augmented: usize,
    /// Quality of the augmented pairs against withheld truth, if given.
    pub quality: Option<SetMetrics>,
}

/// Proposes mutual nearest neighbours (cosine at least the threshold)
/// between unaligned `sources` and `targets`, and merges them into
/// `prior`. With one-to-one repair, pairs sharing an entity are resolved
/// in favour of the higher current similarity, which can evict earlier
/// augmented pairs. Seed pairs are never candidates, so never evicted.
pub fn self_train_augment(
    space: &EmbeddingSpace,
    sources: &[String],
    targets: &[String],
    prior: &[AugmentedPair],
    truth: Option<&AlignmentSet>,
    cfg: &SelfTrainConfig,
) -> Result<(Vec<AugmentedPair>, ProposalLog)> {
    if sources.is_empty() || targets.is_empty() {
        return Ok((prior.to_vec(), ProposalLog::default()));
    }
    let src = space.aligned_matrix(Side::Kg1, sources)?;
    let tgt = space.aligned_matrix(Side::Kg2, targets)?;
    let mut cos = base_similarity(&src, &tgt, Metric::Cosine)?;
    // Coincident vectors score exactly 1 regardless of rounding.
    for (i, a) in src.rows().into_iter().enumerate() {
        for (j, b) in tgt.rows().into_iter().enumerate() {
            if a == b && a.iter().any(|&x| x != 0.0) {
                cos[[i, j]] = 1.0;
            }
        }
    }
    let (n, m) = cos.dim();
    let argmax = |vals: &mut dyn Iterator<Item = f64>| -> usize {
        let mut best = (0, f64::NEG_INFINITY);
        for (k, v) in vals.enumerate() {
            if v > best.1 {
                best = (k, v);
            }
        }
        best.0
    };
    let row_best: Vec<usize> = (0..n).map(|i| argmax(&mut cos.row(i).iter().copied())).collect();
    let col_best: Vec<usize> = (0..m).map(|j| argmax(&mut cos.column(j).iter().copied())).collect();
    let proposals: Vec<AugmentedPair> = (0..n)
        .filter(|&i| col_best[row_best[i]] == i && cos[[i, row_best[i]]] >= cfg.threshold)
        .map(|i| AugmentedPair {
            source: sources[i].clone(),
            target: targets[row_best[i]].clone(),
            similarity: cos[[i, row_best[i]]],
        })
        .collect();

    let s_idx: HashMap<&str, usize> = sources.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let t_idx: HashMap<&str, usize> = targets.iter().enumerate().map(|(j, t)| (t.as_str(), j)).collect();
    let rescored = prior.iter().map(|p| {
        let similarity = match (s_idx.get(p.source.as_str()), t_idx.get(p.target.as_str())) {
            (Some(&i), Some(&j)) => cos[[i, j]],
            _ => p.similarity,
        };
        AugmentedPair { similarity, ..p.clone() }
    });

    let mut all: Vec<AugmentedPair> = rescored.chain(proposals.iter().cloned()).collect();
    let merged = match cfg.editing {
        Editing::None => {
            let mut seen = HashSet::new();
            all.retain(|p| seen.insert((p.source.clone(), p.target.clone())));
            all
        }
        Editing::OneToOneRepair => {
            all.sort_by(|a, b| {
                b.similarity
                    .total_cmp(&a.similarity)
                    .then_with(|| (&a.source, &a.target).cmp(&(&b.source, &b.target)))
            });
            let mut used_s = HashSet::new();
            let mut used_t = HashSet::new();
            let mut kept: Vec<AugmentedPair> = all
                .into_iter()
                .filter(|p| {
                    if used_s.contains(&p.source) || used_t.contains(&p.target) {
                        return false;
                    }
                    used_s.insert(p.source.clone());
                    used_t.insert(p.target.clone());
                    true
                })
                .collect();
            kept.sort_by(|a, b| (&a.source, &a.target).cmp(&(&b.source, &b.target)));
            kept
        }
    };
    let quality = truth.map(|t| {
        let pred: AlignmentSet = merged.iter().map(|p| (p.source.clone(), p.target.clone())).collect();
        set_metrics(&pred, t)
    });
    let log = ProposalLog {
        proposed: proposals.len(),
        augmented: merged.len(),
        quality,
    };
    Ok((merged, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{Index, Table};

    fn space(v1: &[[f64; 2]], v2: &[[f64; 2]]) -> (EmbeddingSpace, Vec<String>, Vec<String>) {
        let mut data = Vec::new();
        let mut idx = [Index::new(), Index::new()];
        let mut names = [Vec::new(), Vec::new()];
        for (side, vs) in [v1, v2].into_iter().enumerate() {
            for (k, v) in vs.iter().enumerate() {
                let name = format!("{}{k}", if side == 0 { "a" } else { "x" });
                idx[side].insert(name.clone(), data.len() / 2);
                names[side].push(name);
                data.extend_from_slice(v);
            }
        }
        let s = EmbeddingSpace::new(2, Table::from_vec(2, data).unwrap(), idx, Table::zeros(1, 2), [Index::new(), Index::new()]);
        let [n1, n2] = names;
        (s, n1, n2)
    }

    #[test]
    fn threshold_one_only_coincident() {
        let (s, a, x) = space(&[[1.0, 0.0], [0.0, 1.0]], &[[1.0, 0.0], [0.1, 1.0]]);
        let cfg = SelfTrainConfig { threshold: 1.0, ..SelfTrainConfig::default() };
        let (aug, log) = self_train_augment(&s, &a, &x, &[], None, &cfg).unwrap();
        assert_eq!(log.proposed, 1);
        assert_eq!((aug[0].source.as_str(), aug[0].target.as_str()), ("a0", "x0"));
    }

    #[test]
    fn repair_keeps_more_similar_pair() {
        // a0 was augmented with x0 earlier; now a1 is the mutual nearest
        // neighbour of x0 and more similar.
        let (s, a, x) = space(&[[1.0, 1.0], [1.0, 0.05]], &[[1.0, 0.0]]);
        let prior = [AugmentedPair { source: "a0".into(), target: "x0".into(), similarity: 0.9 }];
        let cfg = SelfTrainConfig { threshold: 0.5, ..SelfTrainConfig::default() };
        let (aug, _) = self_train_augment(&s, &a, &x, &prior, None, &cfg).unwrap();
        assert_eq!(aug.len(), 1);
        assert_eq!(aug[0].source, "a1");
        let none = SelfTrainConfig { editing: Editing::None, ..cfg };
        let (aug, _) = self_train_augment(&s, &a, &x, &prior, None, &none).unwrap();
        assert_eq!(aug.len(), 2);
    }

    #[test]
    fn perfect_embeddings_have_precision_one() {
        let (s, a, x) = space(&[[1.0, 0.0], [0.0, 1.0], [-1.0, 0.2]], &[[1.0, 0.0], [0.0, 1.0], [-1.0, 0.2]]);
        let truth: AlignmentSet = a.iter().cloned().zip(x.iter().cloned()).collect();
        let (aug, log) = self_train_augment(&s, &a, &x, &[], Some(&truth), &SelfTrainConfig::default()).unwrap();
        assert_eq!(aug.len(), 3);
        assert_eq!(log.quality.unwrap().precision, 1.0);
    }
}

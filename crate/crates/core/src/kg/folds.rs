use std::collections::HashSet;

use rand::seq::SliceRandom;

use super::AlignmentSet;
use crate::error::{Error, Result};
use crate::rng;

pub const FOLD_COUNT: usize = 5;

/// One cross-validation split of the reference alignment.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Fold {
    pub train: AlignmentSet,
    pub valid: AlignmentSet,
    pub test: AlignmentSet,
}

impl Fold {
    /// The three parts must be pairwise disjoint and cover `links` exactly.
    pub fn check_partition(&self, links: &AlignmentSet) -> Result<()> {
        let all = links.to_set();
        let mut seen = HashSet::new();
        for (name, part) in [("train", &self.train), ("valid", &self.valid), ("test", &self.test)] {
            for p in part.iter() {
                if !all.contains(&p) {
                    return Err(Error::Validation(format!(
                        "{name} pair ({}, {}) is not a reference link",
                        p.0, p.1
                    )));
                }
                if !seen.insert(p) {
                    return Err(Error::Validation(format!(
                        "pair ({}, {}) appears in more than one split",
                        p.0, p.1
                    )));
                }
            }
        }
        if seen.len() != all.len() {
            return Err(Error::Validation(format!(
                "splits cover {} of {} links",
                seen.len(),
                all.len()
            )));
        }
        Ok(())
    }
}

/// Five folds: links are shuffled by `seed` and cut into five disjoint
/// blocks of 20%. Fold k trains on block k; of the remaining 80%, the first
/// 10% of the total becomes validation and the rest (70%) test.
pub fn make_folds(links: &AlignmentSet, seed: u64) -> Result<Vec<Fold>> {
    let n = links.len();
    if n < 10 {
        return Err(Error::Validation(format!(
            "need at least 10 links to form folds, got {n}"
        )));
    }
    let mut shuffled = links.pairs().to_vec();
    shuffled.shuffle(&mut rng::seeded(seed));

    let bounds: Vec<usize> = (0..=FOLD_COUNT).map(|k| k * n / FOLD_COUNT).collect();
    let valid_len = (n as f64 * 0.1).round() as usize;

    Ok((0..FOLD_COUNT)
        .map(|k| {
            let train = shuffled[bounds[k]..bounds[k + 1]].to_vec();
            let rest: Vec<_> = shuffled[..bounds[k]]
                .iter()
                .chain(&shuffled[bounds[k + 1]..])
                .cloned()
                .collect();
            let (valid, test) = rest.split_at(valid_len.min(rest.len()));
            Fold {
                train: AlignmentSet::new(train),
                valid: AlignmentSet::new(valid.to_vec()),
                test: AlignmentSet::new(test.to_vec()),
            }
        })
        .collect())
}

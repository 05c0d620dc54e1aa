use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::kg::AlignmentSet;

/// Similarities from every source to every candidate target.
///
/// Sources and targets are kept in lexicographic order, so ties between
/// equally similar targets always resolve to the smaller identifier.
#[derive(Clone, Debug, PartialEq)]
pub struct RankingTable {
    sources: Vec<String>,
    targets: Vec<String>,
    scores: Array2<f64>,
}

fn sort_perm(ids: &[String]) -> Result<Vec<usize>> {
    let mut perm: Vec<usize> = (0..ids.len()).collect();
    perm.sort_by(|&a, &b| ids[a].cmp(&ids[b]));
    if let Some(w) = perm.windows(2).find(|w| ids[w[0]] == ids[w[1]]) {
        return Err(Error::Validation(format!("duplicate identifier {}", ids[w[0]])));
    }
    Ok(perm)
}

impl RankingTable {
    pub fn new(sources: Vec<String>, targets: Vec<String>, scores: Array2<f64>) -> Result<Self> {
        if scores.dim() != (sources.len(), targets.len()) {
            return Err(Error::Validation(format!(
                "score matrix is {:?} but there are {} sources and {} targets",
                scores.dim(),
                sources.len(),
                targets.len()
            )));
        }
        if scores.iter().any(|x| x.is_nan()) {
            return Err(Error::Validation("similarity matrix contains NaN".into()));
        }
        let (ps, pt) = (sort_perm(&sources)?, sort_perm(&targets)?);
        let scores = Array2::from_shape_fn(scores.raw_dim(), |(i, j)| scores[[ps[i], pt[j]]]);
        Ok(Self {
            sources: ps.iter().map(|&i| sources[i].clone()).collect(),
            targets: pt.iter().map(|&j| targets[j].clone()).collect(),
            scores,
        })
    }

    pub fn sources(&self) -> &[String] {
        &self.sources
    }

    pub fn targets(&self) -> &[String] {
        &self.targets
    }

    pub fn scores(&self) -> &Array2<f64> {
        &self.scores
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty() || self.targets.is_empty()
    }

    pub fn score(&self, i: usize, j: usize) -> f64 {
        self.scores[[i, j]]
    }

    pub fn source_index(&self, id: &str) -> Option<usize> {
        self.sources.binary_search_by(|s| s.as_str().cmp(id)).ok()
    }

    pub fn target_index(&self, id: &str) -> Option<usize> {
        self.targets.binary_search_by(|s| s.as_str().cmp(id)).ok()
    }

    /// Target indices of source `i`, most similar first.
    pub fn ranked(&self, i: usize) -> Vec<usize> {
        let row = self.scores.row(i);
        let mut order: Vec<usize> = (0..self.targets.len()).collect();
        order.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
        order
    }

    /// The first `k` entries of [`RankingTable::ranked`].
    pub fn top(&self, i: usize, k: usize) -> Vec<usize> {
        let row = self.scores.row(i);
        let cmp = |a: &usize, b: &usize| row[*b].total_cmp(&row[*a]).then(a.cmp(b));
        let mut order: Vec<usize> = (0..self.targets.len()).collect();
        if k < order.len() {
            if k == 0 {
                return Vec::new();
            }
            order.select_nth_unstable_by(k - 1, cmp);
            order.truncate(k);
        }
        order.sort_by(cmp);
        order
    }

    /// Rank-1 target of source `i`.
    pub fn best(&self, i: usize) -> usize {
        let row = self.scores.row(i);
        let mut best = 0;
        for j in 1..row.len() {
            if row[j] > row[best] {
                best = j;
            }
        }
        best
    }

    /// 1-based rank of target `j` for source `i`, counting every target
    /// scored at least as high (ties take the worst rank).
    pub fn rank_of(&self, i: usize, j: usize) -> usize {
        let s = self.scores[[i, j]];
        self.scores.row(i).iter().filter(|&&x| x >= s).count()
    }

    /// The same table seen from the targets.
    pub fn transpose(&self) -> RankingTable {
        RankingTable {
            sources: self.targets.clone(),
            targets: self.sources.clone(),
            scores: self.scores.t().to_owned(),
        }
    }
}

/// A predicted pair with its similarity.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub source: String,
    pub target: String,
    pub score: f64,
}

/// Predicted alignment, sorted by source then target.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PredictedAlignment {
    pub predictions: Vec<Prediction>,
}

impl PredictedAlignment {
    pub(crate) fn from_indices(rt: &RankingTable, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut predictions: Vec<Prediction> = pairs
            .into_iter()
            .map(|(i, j)| Prediction {
                source: rt.sources[i].clone(),
                target: rt.targets[j].clone(),
                score: rt.scores[[i, j]],
            })
            .collect();
        predictions.sort_by(|a, b| (&a.source, &a.target).cmp(&(&b.source, &b.target)));
        Self { predictions }
    }

    pub fn len(&self) -> usize {
        self.predictions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictions.is_empty()
    }

    pub fn to_alignment(&self) -> AlignmentSet {
        self.predictions
            .iter()
            .map(|p| (p.source.clone(), p.target.clone()))
            .collect()
    }

    pub fn is_one_to_one(&self) -> bool {
        let mut s = HashSet::new();
        let mut t = HashSet::new();
        self.predictions
            .iter()
            .all(|p| s.insert(p.source.as_str()) && t.insert(p.target.as_str()))
    }

    /// Tab-separated `source, target, similarity` lines.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for p in &self.predictions {
            writeln!(out, "{}\t{}\t{}", p.source, p.target, p.score).unwrap();
        }
        out
    }

    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_tsv())?;
        Ok(())
    }

    /// Reads `source, target[, similarity]` lines.
    pub fn read_tsv(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        let mut seen = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let parse_err = |message: String| Error::Parse {
                path: path.to_path_buf(),
                line: n + 1,
                message,
            };
            let score = match fields.len() {
                2 => f64::NAN,
                3 => fields[2]
                    .parse()
                    .map_err(|_| parse_err(format!("bad similarity `{}`", fields[2])))?,
                k => return Err(parse_err(format!("expected 2 or 3 fields, found {k}"))),
            };
            seen.insert((fields[0].to_string(), fields[1].to_string()), score);
        }
        Ok(Self {
            predictions: seen
                .into_iter()
                .map(|((source, target), score)| Prediction { source, target, score })
                .collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn ids(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn reorders_lexicographically() {
        let rt = RankingTable::new(ids(&["b", "a"]), ids(&["y", "x"]), array![[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert_eq!(rt.sources(), ["a", "b"]);
        assert_eq!(rt.targets(), ["x", "y"]);
        assert_eq!(rt.score(0, 0), 4.0);
        assert_eq!(rt.score(1, 1), 1.0);
    }

    #[test]
    fn ties_prefer_smaller_target_and_rank_pessimistically() {
        let rt = RankingTable::new(ids(&["s"]), ids(&["c", "a", "b"]), array![[0.5, 0.5, 0.1]]).unwrap();
        assert_eq!(rt.ranked(0), vec![0, 2, 1]);
        assert_eq!(rt.best(0), 0);
        assert_eq!(rt.top(0, 1), vec![0]);
        assert_eq!(rt.rank_of(0, 0), 2);
        assert_eq!(rt.rank_of(0, 2), 2);
        assert_eq!(rt.rank_of(0, 1), 3);
    }

    #[test]
    fn rejects_bad_shapes_and_duplicates() {
        assert!(RankingTable::new(ids(&["a"]), ids(&["x"]), array![[1.0, 2.0]]).is_err());
        assert!(RankingTable::new(ids(&["a", "a"]), ids(&["x"]), array![[1.0], [2.0]]).is_err());
        assert!(RankingTable::new(ids(&["a"]), ids(&["x"]), array![[f64::NAN]]).is_err());
    }

    #[test]
    fn tsv_round_trip() {
        let rt = RankingTable::new(ids(&["a", "b"]), ids(&["x", "y"]), array![[0.25, 0.5], [1.0, -2.0]]).unwrap();
        let p = PredictedAlignment::from_indices(&rt, [(1, 0), (0, 1)]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pred.tsv");
        p.write_tsv(&path).unwrap();
        assert_eq!(PredictedAlignment::read_tsv(&path).unwrap(), p);
        assert!(p.is_one_to_one());
    }
}

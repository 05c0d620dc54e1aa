use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::ranking::{PredictedAlignment, RankingTable};
use crate::error::{Error, Result};

/// Largest problem side solved exactly by [`mwgm_align`] by default.
pub const DEFAULT_EXACT_BOUND: usize = 2000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    #[default]
    Greedy,
    Stable,
    Mwgm,
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(Strategy::Greedy),
            "stable" => Ok(Strategy::Stable),
            "mwgm" => Ok(Strategy::Mwgm),
            other => Err(Error::Config(format!("unknown strategy `{other}`"))),
        }
    }
}

/// Maps every source to its rank-1 target. Several sources may share one.
pub fn greedy_align(rt: &RankingTable) -> PredictedAlignment {
    if rt.targets().is_empty() {
        return PredictedAlignment::default();
    }
    PredictedAlignment::from_indices(rt, (0..rt.sources().len()).map(|i| (i, rt.best(i))))
}

/// Source-proposing deferred acceptance. `rt_tgt` holds the targets'
/// preferences over the sources and must cover exactly the same entities
/// as `rt_src`, with roles swapped.
pub fn stable_match(rt_src: &RankingTable, rt_tgt: &RankingTable) -> Result<PredictedAlignment> {
    if rt_src.sources() != rt_tgt.targets() || rt_src.targets() != rt_tgt.sources() {
        return Err(Error::Validation(
            "stable matching needs both rankings over the same source and target sets".into(),
        ));
    }
    let (n, m) = (rt_src.sources().len(), rt_src.targets().len());
    // prefer[j][i]: position of source i in target j's list (lower is better).
    let mut prefer = vec![vec![0usize; n]; m];
    for (j, row) in prefer.iter_mut().enumerate() {
        for (pos, i) in rt_tgt.ranked(j).into_iter().enumerate() {
            row[i] = pos;
        }
    }
    let lists: Vec<Vec<usize>> = (0..n).map(|i| rt_src.ranked(i)).collect();
    let mut next = vec![0usize; n];
    let mut holder: Vec<Option<usize>> = vec![None; m];
    let mut free: VecDeque<usize> = (0..n).collect();
    while let Some(i) = free.pop_front() {
        let Some(&j) = lists[i].get(next[i]) else { continue };
        next[i] += 1;
        match holder[j] {
            None => holder[j] = Some(i),
            Some(cur) if prefer[j][i] < prefer[j][cur] => {
                holder[j] = Some(i);
                free.push_back(cur);
            }
            Some(_) => free.push_back(i),
        }
    }
    Ok(PredictedAlignment::from_indices(
        rt_src,
        holder.iter().enumerate().filter_map(|(j, h)| h.map(|i| (i, j))),
    ))
}

/// Stable matching with the targets ranking sources by the same scores.
pub fn stable_match_symmetric(rt: &RankingTable) -> Result<PredictedAlignment> {
    stable_match(rt, &rt.transpose())
}

/// Maximum-weight bipartite matching: exact when both sides are at most
/// `exact_bound`, otherwise the greedy heuristic that repeatedly commits
/// the most similar pair among unmatched entities.
pub fn mwgm_align(rt: &RankingTable, exact_bound: usize) -> PredictedAlignment {
    let (n, m) = rt.scores().dim();
    if n == 0 || m == 0 {
        return PredictedAlignment::default();
    }
    let pairs = if n.max(m) <= exact_bound {
        hungarian_max(rt.scores())
    } else {
        greedy_global(rt)
    };
    PredictedAlignment::from_indices(rt, pairs)
}

/// Exact maximum-weight assignment of `min(rows, cols)` pairs
/// (Kuhn-Munkres with potentials, `O(n^2 m)`).
pub fn hungarian_max(weights: &Array2<f64>) -> Vec<(usize, usize)> {
    let (r, c) = weights.dim();
    if r == 0 || c == 0 {
        return Vec::new();
    }
    if r > c {
        let mut t: Vec<(usize, usize)> = hungarian_max(&weights.t().to_owned())
            .into_iter()
            .map(|(j, i)| (i, j))
            .collect();
        t.sort_unstable();
        return t;
    }
    let (n, m) = (r, c);
    let cost = |i: usize, j: usize| -weights[[i - 1, j - 1]];
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out: Vec<(usize, usize)> = (1..=m).filter(|&j| p[j] != 0).map(|j| (p[j] - 1, j - 1)).collect();
    out.sort_unstable();
    out
}

#[derive(PartialEq)]
struct Candidate {
    score: f64,
    source: usize,
    target: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.score
            .total_cmp(&other.score)
            .then(other.source.cmp(&self.source))
            .then(other.target.cmp(&self.target))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const SHORTLIST: usize = 64;

fn greedy_global(rt: &RankingTable) -> Vec<(usize, usize)> {
    let (n, m) = rt.scores().dim();
    let mut lists: Vec<Vec<usize>> = (0..n).map(|i| rt.top(i, SHORTLIST)).collect();
    let mut pos = vec![0usize; n];
    let mut taken = vec![false; m];
    let mut heap: BinaryHeap<Candidate> = (0..n)
        .map(|i| Candidate {
            score: rt.score(i, lists[i][0]),
            source: i,
            target: lists[i][0],
        })
        .collect();
    let mut out = Vec::new();
    while let Some(c) = heap.pop() {
        if !taken[c.target] {
            taken[c.target] = true;
            out.push((c.source, c.target));
            continue;
        }
        let i = c.source;
        pos[i] += 1;
        if pos[i] == lists[i].len() {
            if lists[i].len() == m {
                continue;
            }
            let free: Vec<usize> = rt.ranked(i).into_iter().filter(|&j| !taken[j]).collect();
            if free.is_empty() {
                continue;
            }
            lists[i] = free;
            pos[i] = 0;
        }
        let j = lists[i][pos[i]];
        heap.push(Candidate {
            score: rt.score(i, j),
            source: i,
            target: j,
        });
    }
    out.sort_unstable();
    out
}

/// Inference settings for turning a ranking table into predictions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InferenceConfig {
    pub similarity: super::SimilarityConfig,
    pub strategy: Strategy,
    pub exact_bound: usize,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            similarity: super::SimilarityConfig::default(),
            strategy: Strategy::Greedy,
            exact_bound: DEFAULT_EXACT_BOUND,
        }
    }
}

/// Applies the configured strategy.
pub fn align(rt: &RankingTable, cfg: &InferenceConfig) -> Result<PredictedAlignment> {
    match cfg.strategy {
        Strategy::Greedy => Ok(greedy_align(rt)),
        Strategy::Stable => stable_match_symmetric(rt),
        Strategy::Mwgm => Ok(mwgm_align(rt, cfg.exact_bound)),
    }
}

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{filter_by_reference, js_divergence, pagerank, Sample, DEFAULT_TOLERANCE};
use crate::error::{Error, Result};
use crate::kg::{degree_distribution, AlignmentSet, DegreeDistribution, KnowledgeGraph};
use crate::rng::{self, KgRng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    /// Entities per KG in the output.
    pub target_size: usize,
    /// Base step size: entities deleted per side per round, shared out
    /// across degree buckets.
    pub mu: usize,
    /// Upper bound on the JS divergence of each side against its source.
    pub epsilon: f64,
    /// Additional full runs allowed after the first one fails the JS check.
    pub max_restarts: usize,
    pub rng_seed: u64,
    pub damping: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            target_size: 15_000,
            mu: 100,
            epsilon: 0.05,
            max_restarts: 5,
            rng_seed: 0,
            damping: super::DEFAULT_DAMPING,
        }
    }
}

impl SamplerConfig {
    pub fn new(target_size: usize) -> Self {
        Self {
            target_size,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.target_size < 1 {
            return Err(Error::Config("target size must be at least 1".into()));
        }
        if self.mu < 1 {
            return Err(Error::Config("mu must be at least 1".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Config(format!("epsilon {} outside (0, 1)", self.epsilon)));
        }
        Ok(())
    }
}

/// Iterative degree-based sampling.
///
/// Both graphs are first restricted to entities of the reference alignment;
/// their degree distributions `Q1`, `Q2` are the targets. Each round, for
/// each side and each degree bucket `x`, `round(mu * (P(x) + P(x) - Q(x)))`
/// aligned pairs are deleted, where `P` is the current distribution: a
/// proportional share of `mu`, pushed up where the bucket is
/// over-represented and down where it is under-represented. Within
/// a bucket, entities are drawn without replacement with weight
/// `1 / PageRank`, so influential entities tend to stay. Both sides plan
/// from the same round-start snapshot.
///
/// A deletion is skipped if it would leave a surviving neighbour without
/// any triple on either side; when that rule blocks a whole round, the
/// round falls back to unrestricted deletion. The last round is truncated
/// so each graph ends with exactly `target_size` entities. If either side's
/// JS divergence then exceeds `epsilon`, the run restarts on a fresh random
/// stream.
pub fn ids_sample(
    kg1: &KnowledgeGraph,
    kg2: &KnowledgeGraph,
    reference: &AlignmentSet,
    cfg: &SamplerConfig,
) -> Result<Sample> {
    cfg.validate()?;
    reference.check_one_to_one()?;
    let (f1, f2, links) = filter_by_reference(kg1, kg2, reference);
    if links.len() <= cfg.target_size {
        return Err(Error::Validation(format!(
            "reference alignment has {} usable pairs; need more than the target size {}",
            links.len(),
            cfg.target_size
        )));
    }
    let q = [degree_distribution(&f1)?, degree_distribution(&f2)?];

    let mut best_js = f64::INFINITY;
    let attempts = cfg.max_restarts + 1;
    for attempt in 0..attempts {
        let mut rng = rng::stream(cfg.rng_seed, attempt as u64);
        let (s1, s2, out_links, rounds) = run_once(&f1, &f2, &links, &q, cfg, &mut rng)?;
        let js = [
            js_divergence(&q[0], &degree_distribution(&s1)?)?,
            js_divergence(&q[1], &degree_distribution(&s2)?)?,
        ];
        log::debug!(
            "IDS attempt {} finished after {rounds} rounds: JS = {:.4} / {:.4}",
            attempt + 1,
            js[0],
            js[1]
        );
        if js[0] <= cfg.epsilon && js[1] <= cfg.epsilon {
            return Ok(Sample {
                kg1: s1,
                kg2: s2,
                links: out_links,
                js: Some(js),
                attempts: attempt + 1,
                rounds,
            });
        }
        best_js = best_js.min(js[0].max(js[1]));
    }
    Err(Error::SamplingExhausted { attempts, best_js })
}

/// Deletion plan for one degree bucket of one side.
struct Stream {
    side: usize,
    quota: usize,
    order: Vec<usize>,
}

fn plan_side(
    side: usize,
    kg: &KnowledgeGraph,
    q: &DegreeDistribution,
    cfg: &SamplerConfig,
    rng: &mut KgRng,
) -> Result<Vec<Stream>> {
    let p = degree_distribution(kg)?;
    let pr = pagerank(kg, cfg.damping, DEFAULT_TOLERANCE)?;
    let mut buckets: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (e, &d) in kg.degrees().iter().enumerate() {
        buckets.entry(d).or_default().push(e);
    }
    let planned: Vec<(f64, usize, Vec<usize>)> = buckets
        .into_iter()
        .map(|(x, members)| {
            let raw = cfg.mu as f64 * (2.0 * p.get(x) - q.get(x));
            let quota = ((raw + 0.5).floor().max(0.0) as usize).min(members.len());
            (raw, quota, members)
        })
        .collect();
    // Guarantee progress when every share rounds down to zero.
    let forced = if planned.iter().all(|b| b.1 == 0) {
        planned
            .iter()
            .enumerate()
            .max_by(|a, b| a.1 .0.total_cmp(&b.1 .0).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
    } else {
        None
    };
    let mut streams = Vec::new();
    for (i, (_, quota, members)) in planned.into_iter().enumerate() {
        let quota = if forced == Some(i) { 1 } else { quota };
        if quota == 0 {
            continue;
        }
        let weights: Vec<f64> = members.iter().map(|&e| 1.0 / pr.score[e]).collect();
        let order = rng::weighted_order(rng, &weights)
            .into_iter()
            .map(|i| members[i])
            .collect();
        streams.push(Stream { side, quota, order });
    }
    Ok(streams)
}

struct RoundState<'a> {
    nbrs: [Vec<Vec<(usize, usize)>>; 2],
    pair_of: [Vec<usize>; 2],
    pairs: &'a [(usize, usize)],
}

impl RoundState<'_> {
    fn entity(&self, side: usize, pair: usize) -> usize {
        if side == 0 {
            self.pairs[pair].0
        } else {
            self.pairs[pair].1
        }
    }

    /// Deleting `e` leaves every surviving neighbour with at least one triple.
    fn is_safe(&self, side: usize, e: usize, alive_deg: &[usize], gone: &[bool]) -> bool {
        self.nbrs[side][e]
            .iter()
            .all(|&(u, m)| gone[self.pair_of[side][u]] || alive_deg[u] > m)
    }

    fn select(&self, streams: &[Stream], degrees: [&[usize]; 2], budget: usize, safe: bool) -> Vec<bool> {
        let mut alive_deg = [degrees[0].to_vec(), degrees[1].to_vec()];
        let mut gone = vec![false; self.pairs.len()];
        let mut count = 0;
        'streams: for s in streams {
            let mut taken = 0;
            for &e in &s.order {
                if count == budget {
                    break 'streams;
                }
                if taken == s.quota {
                    break;
                }
                let k = self.pair_of[s.side][e];
                if gone[k] {
                    continue;
                }
                if safe
                    && !(0..2).all(|j| self.is_safe(j, self.entity(j, k), &alive_deg[j], &gone))
                {
                    continue;
                }
                gone[k] = true;
                for (j, deg) in alive_deg.iter_mut().enumerate() {
                    for &(u, m) in &self.nbrs[j][self.entity(j, k)] {
                        deg[u] -= m;
                    }
                }
                taken += 1;
                count += 1;
            }
        }
        gone
    }
}

fn run_once(
    f1: &KnowledgeGraph,
    f2: &KnowledgeGraph,
    links: &AlignmentSet,
    q: &[DegreeDistribution; 2],
    cfg: &SamplerConfig,
    rng: &mut KgRng,
) -> Result<(KnowledgeGraph, KnowledgeGraph, AlignmentSet, usize)> {
    let mut ds = [f1.clone(), f2.clone()];
    let mut pairs: Vec<(String, String)> = links.pairs().to_vec();
    let mut rounds = 0;

    while pairs.len() > cfg.target_size {
        rounds += 1;
        let idx: Vec<(usize, usize)> = pairs
            .iter()
            .map(|(a, b)| (ds[0].entity_id(a).unwrap(), ds[1].entity_id(b).unwrap()))
            .collect();
        let mut pair_of = [vec![usize::MAX; ds[0].num_entities()], vec![usize::MAX; ds[1].num_entities()]];
        for (k, &(a, b)) in idx.iter().enumerate() {
            pair_of[0][a] = k;
            pair_of[1][b] = k;
        }

        let mut streams = plan_side(0, &ds[0], &q[0], cfg, rng)?;
        streams.extend(plan_side(1, &ds[1], &q[1], cfg, rng)?);
        streams.shuffle(rng);

        let state = RoundState {
            nbrs: [ds[0].weighted_neighbors(), ds[1].weighted_neighbors()],
            pair_of,
            pairs: &idx,
        };
        let budget = pairs.len() - cfg.target_size;
        let degrees = [ds[0].degrees(), ds[1].degrees()];
        let mut gone = state.select(&streams, degrees, budget, true);
        if !gone.iter().any(|&g| g) {
            gone = state.select(&streams, degrees, budget, false);
        }

        let mut masks = [vec![true; ds[0].num_entities()], vec![true; ds[1].num_entities()]];
        for (k, &(a, b)) in idx.iter().enumerate() {
            if gone[k] {
                masks[0][a] = false;
                masks[1][b] = false;
            }
        }
        pairs = pairs
            .into_iter()
            .zip(&gone)
            .filter(|(_, &g)| !g)
            .map(|(p, _)| p)
            .collect();
        ds = [ds[0].restrict_mask(&masks[0]), ds[1].restrict_mask(&masks[1])];
    }
    let [s1, s2] = ds;
    Ok((s1, s2, AlignmentSet::new(pairs), rounds))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::graph_stats;
    use crate::synthetic::{power_law_pair, SyntheticConfig};
    use std::collections::HashSet;

    fn pair(n: usize, seed: u64) -> (KnowledgeGraph, KnowledgeGraph, AlignmentSet) {
        let s = power_law_pair(&SyntheticConfig {
            entities: n,
            seed,
            ..SyntheticConfig::default()
        });
        (s.kg1, s.kg2, s.links)
    }

    #[test]
    fn config_validation() {
        assert!(SamplerConfig { mu: 0, ..SamplerConfig::new(5) }.validate().is_err());
        assert!(SamplerConfig { epsilon: 1.0, ..SamplerConfig::new(5) }.validate().is_err());
        assert!(SamplerConfig::new(0).validate().is_err());
        SamplerConfig::new(5).validate().unwrap();
    }

    #[test]
    fn reference_must_exceed_target() {
        let (k1, k2, l) = pair(50, 1);
        let err = ids_sample(&k1, &k2, &l, &SamplerConfig::new(50)).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn two_hundred_to_one_hundred() {
        // A 100-entity sample cannot represent the 0.5% degree buckets of
        // the heavy tail, so the bound is looser than the default.
        let (k1, k2, l) = pair(200, 4);
        let cfg = SamplerConfig {
            mu: 5,
            epsilon: 0.1,
            rng_seed: 1,
            ..SamplerConfig::new(100)
        };
        let s = ids_sample(&k1, &k2, &l, &cfg).unwrap();
        assert_eq!(s.kg1.num_entities(), 100);
        assert_eq!(s.kg2.num_entities(), 100);
        assert_eq!(s.links.len(), 100);
        assert!(s.links.is_one_to_one());
        let js = s.js.unwrap();
        assert!(js[0] <= 0.1 && js[1] <= 0.1, "{js:?}");
        for kg in [&s.kg1, &s.kg2] {
            assert_eq!(graph_stats(kg, None).unwrap().isolated_pct, 0.0);
        }
        // Every output entity is aligned.
        let left: HashSet<&str> = s.links.sources().collect();
        assert!(s.kg1.entities().iter().all(|e| left.contains(e.as_str())));
        // Output triples are a subset of the input.
        let input: HashSet<(&str, &str, &str)> = k1.named_rel_triples().collect();
        assert!(s.kg1.named_rel_triples().all(|t| input.contains(&t)));
    }

    #[test]
    fn six_hundred_to_three_hundred_within_default_bound() {
        let (k1, k2, l) = pair(600, 5);
        let cfg = SamplerConfig {
            mu: 20,
            ..SamplerConfig::new(300)
        };
        let s = ids_sample(&k1, &k2, &l, &cfg).unwrap();
        let js = s.js.unwrap();
        assert!(js[0] <= 0.05 && js[1] <= 0.05, "{js:?}");
        for kg in [&s.kg1, &s.kg2] {
            assert_eq!(graph_stats(kg, None).unwrap().isolated_pct, 0.0);
        }
    }

    #[test]
    fn one_deletion_boundary() {
        let (k1, k2, l) = pair(60, 2);
        let cfg = SamplerConfig {
            mu: 1,
            epsilon: 0.5,
            ..SamplerConfig::new(59)
        };
        let s = ids_sample(&k1, &k2, &l, &cfg).unwrap();
        assert_eq!(s.kg1.num_entities(), 59);
        assert_eq!(s.kg2.num_entities(), 59);
        assert_eq!(s.rounds, 1);
    }

    #[test]
    fn deterministic_given_seed() {
        let (k1, k2, l) = pair(150, 9);
        let cfg = SamplerConfig {
            mu: 4,
            epsilon: 0.5,
            rng_seed: 77,
            ..SamplerConfig::new(80)
        };
        let a = ids_sample(&k1, &k2, &l, &cfg).unwrap();
        let b = ids_sample(&k1, &k2, &l, &cfg).unwrap();
        assert_eq!(a.kg1, b.kg1);
        assert_eq!(a.links, b.links);
    }

    #[test]
    fn exhausted_restarts_report_best_js() {
        let (k1, k2, l) = pair(120, 3);
        let cfg = SamplerConfig {
            mu: 50,
            epsilon: 1e-9,
            max_restarts: 1,
            ..SamplerConfig::new(20)
        };
        match ids_sample(&k1, &k2, &l, &cfg) {
            Err(Error::SamplingExhausted { attempts, best_js }) => {
                assert_eq!(attempts, 2);
                assert!(best_js > 0.0 && best_js <= 1.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}

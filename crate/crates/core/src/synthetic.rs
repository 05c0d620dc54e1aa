//! Synthetic aligned KG pairs for tests, benchmarks and demos.
//!
//! Graphs grow by preferential attachment with triad closure (Holme-Kim),
//! which yields a heavy-tailed degree distribution with non-trivial
//! clustering. The number of edges a new entity brings is geometric, so
//! about half of all entities end up with degree one or two, as in
//! real-world KGs. The second graph is a relabelled copy of the first,
//! optionally with a fraction of its triples removed.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::kg::{AlignmentSet, KnowledgeGraph};
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub entities: usize,
    /// Expected average degree; new entities attach `avg_degree / 2` edges on average.
    pub avg_degree: f64,
    /// Probability that a follow-up edge closes a triangle.
    pub triad_prob: f64,
    pub relations: usize,
    /// Fraction of KG2 triples dropped (0 gives isomorphic graphs).
    pub noise: f64,
    /// Attribute triples per entity, literals shared by aligned entities.
    pub attributes_per_entity: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            entities: 200,
            avg_degree: 6.0,
            triad_prob: 0.6,
            relations: 8,
            noise: 0.0,
            attributes_per_entity: 0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticPair {
    pub kg1: KnowledgeGraph,
    pub kg2: KnowledgeGraph,
    pub links: AlignmentSet,
}

/// Geometric variate on `1, 2, ...` with the given mean.
fn geometric(mean: f64, rng: &mut impl Rng) -> usize {
    let p = 1.0 / mean.max(1.0);
    if p >= 1.0 {
        return 1;
    }
    let u: f64 = rng.random_range(f64::EPSILON..1.0);
    1 + (u.ln() / (1.0 - p).ln()).floor() as usize
}

/// Undirected edge list of a Holme-Kim graph on `n` vertices.
fn holme_kim(n: usize, avg_degree: f64, triad_prob: f64, rng: &mut impl Rng) -> Vec<(usize, usize)> {
    let half = (avg_degree / 2.0).max(1.0);
    let core = (half.ceil() as usize + 1).min(n);
    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut endpoints: Vec<usize> = Vec::new();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let add = |a: usize, b: usize, edges: &mut BTreeSet<(usize, usize)>, endpoints: &mut Vec<usize>, adj: &mut Vec<Vec<usize>>| {
        let key = (a.min(b), a.max(b));
        if a != b && edges.insert(key) {
            endpoints.extend([a, b]);
            adj[a].push(b);
            adj[b].push(a);
            true
        } else {
            false
        }
    };
    for a in 0..core {
        for b in a + 1..core {
            add(a, b, &mut edges, &mut endpoints, &mut adj);
        }
    }
    for v in core..n {
        let m = geometric(half, rng).clamp(1, v);
        let mut last: Option<usize> = None;
        let mut added = 0;
        let mut tries = 0;
        while added < m && tries < 50 * m {
            tries += 1;
            let target = match last {
                Some(u) if rng.random::<f64>() < triad_prob && !adj[u].is_empty() => {
                    adj[u][rng.random_range(0..adj[u].len())]
                }
                _ => endpoints[rng.random_range(0..endpoints.len())],
            };
            if add(v, target, &mut edges, &mut endpoints, &mut adj) {
                added += 1;
                last = Some(target);
            }
        }
    }
    edges.into_iter().collect()
}

pub fn power_law_pair(cfg: &SyntheticConfig) -> SyntheticPair {
    let mut rng = rng::seeded(cfg.seed);
    let n = cfg.entities;
    let edges = holme_kim(n, cfg.avg_degree, cfg.triad_prob, &mut rng);

    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let name1 = |i: usize| format!("kg1/e{i}");
    let name2 = |i: usize| format!("kg2/e{}", perm[i]);

    let relations = cfg.relations.max(1);
    let mut rel1 = Vec::with_capacity(edges.len());
    let mut rel2 = Vec::with_capacity(edges.len());
    for &(a, b) in &edges {
        let (h, t) = if rng.random::<bool>() { (a, b) } else { (b, a) };
        let r = rng.random_range(0..relations);
        rel1.push((name1(h), format!("kg1/r{r}"), name1(t)));
        if rng.random::<f64>() >= cfg.noise {
            rel2.push((name2(h), format!("kg2/r{r}"), name2(t)));
        }
    }

    let mut attr1 = Vec::new();
    let mut attr2 = Vec::new();
    for i in 0..n {
        for a in 0..cfg.attributes_per_entity {
            let value = format!("\"v{}-{}\"", i, a);
            attr1.push((name1(i), format!("kg1/a{a}"), value.clone()));
            attr2.push((name2(i), format!("kg2/a{a}"), value));
        }
    }

    let kg1 = KnowledgeGraph::from_parts((0..n).map(name1), rel1, attr1);
    let kg2 = KnowledgeGraph::from_parts((0..n).map(name2), rel2, attr2);
    let links = (0..n).map(|i| (name1(i), name2(i))).collect();
    SyntheticPair { kg1, kg2, links }
}

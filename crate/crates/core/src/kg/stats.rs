use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::KnowledgeGraph;
use crate::error::{Error, Result};
use crate::sampler::js_divergence;

/// Proportion of entities per degree.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DegreeDistribution {
    prop: BTreeMap<usize, f64>,
}

impl DegreeDistribution {
    /// Normalises raw per-degree counts. Zero counts are dropped.
    pub fn from_counts<I: IntoIterator<Item = (usize, usize)>>(counts: I) -> Result<Self> {
        let mut acc: BTreeMap<usize, usize> = BTreeMap::new();
        for (d, c) in counts {
            if c > 0 {
                *acc.entry(d).or_default() += c;
            }
        }
        let total: usize = acc.values().sum();
        if total == 0 {
            return Err(Error::Empty("degree distribution has no mass".into()));
        }
        Ok(Self {
            prop: acc
                .into_iter()
                .map(|(d, c)| (d, c as f64 / total as f64))
                .collect(),
        })
    }

    /// Wraps explicit proportions without normalising them.
    pub fn from_proportions<I: IntoIterator<Item = (usize, f64)>>(prop: I) -> Self {
        Self {
            prop: prop.into_iter().collect(),
        }
    }

    pub fn get(&self, degree: usize) -> f64 {
        self.prop.get(&degree).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.prop.iter().map(|(&d, &p)| (d, p))
    }

    pub fn total(&self) -> f64 {
        self.prop.values().sum()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.total() - 1.0).abs() <= tol && self.prop.values().all(|&p| p >= 0.0)
    }

    pub fn max_degree(&self) -> Option<usize> {
        self.prop.keys().next_back().copied()
    }
}

pub fn degree_distribution(kg: &KnowledgeGraph) -> Result<DegreeDistribution> {
    if kg.is_empty() {
        return Err(Error::Empty("knowledge graph has no entities".into()));
    }
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &d in kg.degrees() {
        *counts.entry(d).or_default() += 1;
    }
    DegreeDistribution::from_counts(counts)
}

/// Structural summary of one graph, as reported for sampled datasets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub entities: usize,
    pub rel_triples: usize,
    pub avg_degree: f64,
    /// Percentage (0 to 100) of entities without relation triples.
    pub isolated_pct: f64,
    pub clustering_coef: f64,
    pub js_vs_source: Option<f64>,
}

impl GraphStats {
    pub const CSV_HEADER: &'static str =
        "kg,entities,rel_triples,avg_degree,js_vs_source,isolated_pct,clustering_coef";

    pub fn csv_row(&self, label: &str) -> String {
        let mut row = format!("{label},{},{},{:.6},", self.entities, self.rel_triples, self.avg_degree);
        if let Some(js) = self.js_vs_source {
            let _ = write!(row, "{js:.6}");
        }
        let _ = write!(row, ",{:.6},{:.6}", self.isolated_pct, self.clustering_coef);
        row
    }
}

pub fn graph_stats(kg: &KnowledgeGraph, source_dist: Option<&DegreeDistribution>) -> Result<GraphStats> {
    if kg.is_empty() {
        return Err(Error::Empty("knowledge graph has no entities".into()));
    }
    let n = kg.num_entities() as f64;
    let isolated = kg.degrees().iter().filter(|&&d| d == 0).count() as f64;
    let js_vs_source = match source_dist {
        Some(q) => Some(js_divergence(q, &degree_distribution(kg)?)?),
        None => None,
    };
    Ok(GraphStats {
        entities: kg.num_entities(),
        rel_triples: kg.rel_triples().len(),
        avg_degree: kg.average_degree(),
        isolated_pct: 100.0 * isolated / n,
        clustering_coef: average_clustering(&kg.undirected_neighbors()),
        js_vs_source,
    })
}

/// Mean local clustering coefficient; vertices with fewer than two
/// neighbours contribute zero.
pub(crate) fn average_clustering(adj: &[Vec<usize>]) -> f64 {
    if adj.is_empty() {
        return 0.0;
    }
    let total: f64 = adj
        .iter()
        .map(|nbrs| {
            let k = nbrs.len();
            if k < 2 {
                return 0.0;
            }
            let mut links = 0usize;
            for (i, &u) in nbrs.iter().enumerate() {
                for &v in &nbrs[i + 1..] {
                    if adj[u].binary_search(&v).is_ok() {
                        links += 1;
                    }
                }
            }
            2.0 * links as f64 / (k * (k - 1)) as f64
        })
        .sum();
    total / adj.len() as f64
}

//! Knowledge graphs, alignment sets and the on-disk dataset layout.

mod folds;
mod io;
mod stats;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use crate::error::{Error, Result};

pub use folds::{make_folds, Fold, FOLD_COUNT};
pub use io::{
    load_dataset, load_dataset_with_report, read_attr_triples, read_links, read_rel_triples,
    write_alignment, write_dataset, write_kg_files, LoadReport,
};
pub use stats::{degree_distribution, graph_stats, DegreeDistribution, GraphStats};

/// A relation triple over interned entity and relation indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub head: usize,
    pub relation: usize,
    pub tail: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AttrTriple {
    pub entity: usize,
    pub attribute: usize,
    pub value: String,
}

/// An immutable knowledge graph. Entities, relations and attributes are
/// interned in lexicographic order, so index order equals string order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct KnowledgeGraph {
    entities: Vec<String>,
    entity_ids: HashMap<String, usize>,
    relations: Vec<String>,
    attributes: Vec<String>,
    rel_triples: Vec<Triple>,
    attr_triples: Vec<AttrTriple>,
    degree: Vec<usize>,
}

fn intern(names: BTreeSet<String>) -> (Vec<String>, HashMap<String, usize>) {
    let names: Vec<String> = names.into_iter().collect();
    let ids = names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.clone(), i))
        .collect();
    (names, ids)
}

impl KnowledgeGraph {
    /// Builds a graph from named triples. Entities mentioned by any triple
    /// are added to `entities`; duplicate triples are dropped.
    pub fn from_parts<E, R, A>(entities: E, rel_triples: R, attr_triples: A) -> Self
    where
        E: IntoIterator<Item = String>,
        R: IntoIterator<Item = (String, String, String)>,
        A: IntoIterator<Item = (String, String, String)>,
    {
        let rel: BTreeSet<(String, String, String)> = rel_triples.into_iter().collect();
        let attr: BTreeSet<(String, String, String)> = attr_triples.into_iter().collect();

        let mut entity_names: BTreeSet<String> = entities.into_iter().collect();
        let mut relation_names = BTreeSet::new();
        let mut attribute_names = BTreeSet::new();
        for (h, r, t) in &rel {
            entity_names.insert(h.clone());
            entity_names.insert(t.clone());
            relation_names.insert(r.clone());
        }
        for (e, a, _) in &attr {
            entity_names.insert(e.clone());
            attribute_names.insert(a.clone());
        }

        let (entities, entity_ids) = intern(entity_names);
        let (relations, relation_ids) = intern(relation_names);
        let (attributes, attribute_ids) = intern(attribute_names);

        let rel_triples: Vec<Triple> = rel
            .iter()
            .map(|(h, r, t)| Triple {
                head: entity_ids[h],
                relation: relation_ids[r],
                tail: entity_ids[t],
            })
            .collect();
        let attr_triples = attr
            .into_iter()
            .map(|(e, a, value)| AttrTriple {
                entity: entity_ids[&e],
                attribute: attribute_ids[&a],
                value,
            })
            .collect();

        let degree = compute_degrees(entities.len(), &rel_triples);
        Self {
            entities,
            entity_ids,
            relations,
            attributes,
            rel_triples,
            attr_triples,
            degree,
        }
    }

    pub fn from_triples<R>(rel_triples: R) -> Self
    where
        R: IntoIterator<Item = (String, String, String)>,
    {
        Self::from_parts(std::iter::empty(), rel_triples, std::iter::empty())
    }

    pub fn num_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn entities(&self) -> &[String] {
        &self.entities
    }

    pub fn entity_id(&self, name: &str) -> Option<usize> {
        self.entity_ids.get(name).copied()
    }

    pub fn entity_name(&self, id: usize) -> &str {
        &self.entities[id]
    }

    pub fn contains_entity(&self, name: &str) -> bool {
        self.entity_ids.contains_key(name)
    }

    pub fn relations(&self) -> &[String] {
        &self.relations
    }

    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    pub fn rel_triples(&self) -> &[Triple] {
        &self.rel_triples
    }

    pub fn attr_triples(&self) -> &[AttrTriple] {
        &self.attr_triples
    }

    /// Relation triples as `(head, relation, tail)` names, in canonical order.
    pub fn named_rel_triples(&self) -> impl Iterator<Item = (&str, &str, &str)> + '_ {
        self.rel_triples.iter().map(|t| {
            (
                self.entities[t.head].as_str(),
                self.relations[t.relation].as_str(),
                self.entities[t.tail].as_str(),
            )
        })
    }

    pub fn named_attr_triples(&self) -> impl Iterator<Item = (&str, &str, &str)> + '_ {
        self.attr_triples.iter().map(|t| {
            (
                self.entities[t.entity].as_str(),
                self.attributes[t.attribute].as_str(),
                t.value.as_str(),
            )
        })
    }

    /// Number of relation triples mentioning the entity; a self-loop counts once.
    pub fn degree(&self, id: usize) -> usize {
        self.degree[id]
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degree
    }

    pub fn average_degree(&self) -> f64 {
        if self.entities.is_empty() {
            return 0.0;
        }
        self.degree.iter().sum::<usize>() as f64 / self.entities.len() as f64
    }

    /// Neighbour lists of the undirected simple projection (no labels, no
    /// self-loops, no parallel edges), each sorted ascending.
    pub fn undirected_neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); self.entities.len()];
        for t in &self.rel_triples {
            if t.head != t.tail {
                adj[t.head].insert(t.tail);
                adj[t.tail].insert(t.head);
            }
        }
        adj.into_iter().map(|s| s.into_iter().collect()).collect()
    }

    /// Neighbours with the number of triples connecting them, self-loops
    /// excluded. Used for incremental degree bookkeeping.
    pub fn weighted_neighbors(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj: Vec<BTreeMap<usize, usize>> = vec![BTreeMap::new(); self.entities.len()];
        for t in &self.rel_triples {
            if t.head != t.tail {
                *adj[t.head].entry(t.tail).or_default() += 1;
                *adj[t.tail].entry(t.head).or_default() += 1;
            }
        }
        adj.into_iter().map(|m| m.into_iter().collect()).collect()
    }

    /// Sub-graph induced by the entities for which `keep` holds. Relation
    /// triples survive when both ends survive; relations and attributes no
    /// longer used are dropped.
    pub fn restrict<F>(&self, mut keep: F) -> KnowledgeGraph
    where
        F: FnMut(&str) -> bool,
    {
        let mask: Vec<bool> = self.entities.iter().map(|e| keep(e)).collect();
        self.restrict_mask(&mask)
    }

    pub fn restrict_mask(&self, mask: &[bool]) -> KnowledgeGraph {
        assert_eq!(mask.len(), self.entities.len());
        let entities = self
            .entities
            .iter()
            .zip(mask)
            .filter(|(_, &k)| k)
            .map(|(e, _)| e.clone());
        let rel = self
            .rel_triples
            .iter()
            .filter(|t| mask[t.head] && mask[t.tail])
            .map(|t| {
                (
                    self.entities[t.head].clone(),
                    self.relations[t.relation].clone(),
                    self.entities[t.tail].clone(),
                )
            });
        let attr = self
            .attr_triples
            .iter()
            .filter(|t| mask[t.entity])
            .map(|t| {
                (
                    self.entities[t.entity].clone(),
                    self.attributes[t.attribute].clone(),
                    t.value.clone(),
                )
            });
        KnowledgeGraph::from_parts(entities, rel, attr)
    }
}

fn compute_degrees(n: usize, triples: &[Triple]) -> Vec<usize> {
    let mut degree = vec![0; n];
    for t in triples {
        degree[t.head] += 1;
        if t.tail != t.head {
            degree[t.tail] += 1;
        }
    }
    degree
}

/// Ordered pairs of (KG1 entity, KG2 entity).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AlignmentSet {
    pairs: Vec<(String, String)>,
}

impl AlignmentSet {
    pub fn new(pairs: Vec<(String, String)>) -> Self {
        Self { pairs }
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    pub fn into_pairs(self) -> Vec<(String, String)> {
        self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.pairs.iter().map(|(a, b)| (a.as_str(), b.as_str()))
    }

    pub fn sources(&self) -> impl Iterator<Item = &str> {
        self.pairs.iter().map(|(a, _)| a.as_str())
    }

    pub fn targets(&self) -> impl Iterator<Item = &str> {
        self.pairs.iter().map(|(_, b)| b.as_str())
    }

    pub fn to_set(&self) -> HashSet<(&str, &str)> {
        self.iter().collect()
    }

    /// True when no entity on either side occurs in two pairs.
    pub fn is_one_to_one(&self) -> bool {
        let mut left = HashSet::new();
        let mut right = HashSet::new();
        self.iter().all(|(a, b)| left.insert(a) && right.insert(b))
    }

    /// Fails with the list of entities occurring in more than one pair.
    pub fn check_one_to_one(&self) -> Result<()> {
        let mut left: HashMap<&str, usize> = HashMap::new();
        let mut right: HashMap<&str, usize> = HashMap::new();
        for (a, b) in self.iter() {
            *left.entry(a).or_default() += 1;
            *right.entry(b).or_default() += 1;
        }
        let mut offenders: Vec<&str> = left
            .iter()
            .chain(right.iter())
            .filter(|(_, &c)| c > 1)
            .map(|(e, _)| *e)
            .collect();
        if offenders.is_empty() {
            return Ok(());
        }
        offenders.sort_unstable();
        offenders.dedup();
        Err(Error::Validation(format!(
            "alignment is not 1-to-1; repeated entities: {}",
            offenders.join(", ")
        )))
    }

    /// Every pair must resolve to existing entities of `kg1` and `kg2`.
    pub fn validate_against(&self, kg1: &KnowledgeGraph, kg2: &KnowledgeGraph) -> Result<()> {
        let mut dangling: Vec<String> = Vec::new();
        for (a, b) in self.iter() {
            if !kg1.contains_entity(a) {
                dangling.push(format!("{a} (KG1)"));
            }
            if !kg2.contains_entity(b) {
                dangling.push(format!("{b} (KG2)"));
            }
        }
        if dangling.is_empty() {
            Ok(())
        } else {
            dangling.sort();
            dangling.dedup();
            Err(Error::Validation(format!(
                "alignment references unknown entities: {}",
                dangling.join(", ")
            )))
        }
    }

    /// Pairs whose two ends both satisfy the given predicates, order preserved.
    pub fn filter<F, G>(&self, mut left: F, mut right: G) -> AlignmentSet
    where
        F: FnMut(&str) -> bool,
        G: FnMut(&str) -> bool,
    {
        AlignmentSet::new(
            self.pairs
                .iter()
                .filter(|(a, b)| left(a) && right(b))
                .cloned()
                .collect(),
        )
    }

    pub fn sorted(&self) -> AlignmentSet {
        let mut pairs = self.pairs.clone();
        pairs.sort();
        AlignmentSet::new(pairs)
    }

    pub fn source_map(&self) -> HashMap<&str, &str> {
        self.iter().collect()
    }
}

impl FromIterator<(String, String)> for AlignmentSet {
    fn from_iter<I: IntoIterator<Item = (String, String)>>(iter: I) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

/// Two KGs, their reference alignment and optional cross-validation folds.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DatasetBundle {
    pub kg1: KnowledgeGraph,
    pub kg2: KnowledgeGraph,
    pub links: AlignmentSet,
    pub folds: Option<Vec<Fold>>,
}

impl DatasetBundle {
    /// Checks that links are 1-to-1 and resolve in both graphs, and that each
    /// fold partitions the links.
    pub fn validate(&self) -> Result<()> {
        self.links.check_one_to_one()?;
        self.links.validate_against(&self.kg1, &self.kg2)?;
        if let Some(folds) = &self.folds {
            for (i, fold) in folds.iter().enumerate() {
                fold.check_partition(&self.links)
                    .map_err(|e| Error::Fold {
                        fold: i + 1,
                        source: Box::new(e),
                    })?;
            }
        }
        Ok(())
    }

    pub fn fold(&self, k: usize) -> Result<&Fold> {
        let folds = self
            .folds
            .as_ref()
            .ok_or_else(|| Error::Validation("dataset has no folds".into()))?;
        if k == 0 || k > folds.len() {
            return Err(Error::Validation(format!(
                "fold {k} out of range 1..={}",
                folds.len()
            )));
        }
        Ok(&folds[k - 1])
    }
}

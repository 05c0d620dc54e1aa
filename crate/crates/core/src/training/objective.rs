use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::Rng;

use super::config::{Interaction, ModelKind, TrainingConfig};
use crate::embedding::{
    attribute_cooccurrence, char_vocabulary, init_bound, mine_paths, EmbeddingSpace, Index, RowTriple, Side, Table,
};
use crate::error::{Error, Result};
use crate::kg::{AlignmentSet, KnowledgeGraph, Triple};

/// An attribute triple over table rows, keeping the literal text.
#[derive(Clone, Debug, PartialEq)]
pub struct RowAttr {
    pub side: Side,
    pub entity: usize,
    pub attribute: usize,
    pub value: String,
}

/// Everything the trainer optimizes, laid out over table rows.
#[derive(Clone, Debug)]
pub struct Objective {
    pub space: EmbeddingSpace,
    /// Relation triples with the side whose entities corrupt them.
    pub triples: Vec<(Side, RowTriple)>,
    /// Triples added by swapping seed entities.
    pub swapped: usize,
    /// Seed pairs as (KG1 row, KG2 row); empty under sharing, where each
    /// pair already occupies one row.
    pub seeds: Vec<(usize, usize)>,
    pub shared_rows: usize,
    pub pools: [Vec<usize>; 2],
    /// Two-hop relation paths `(r1, r2, r3)` over relation rows.
    pub paths: Vec<(usize, usize, usize)>,
    pub attr_pairs: Vec<((usize, usize), usize)>,
    pub attr_triples: Vec<RowAttr>,
    /// Undirected row adjacency for graph convolution.
    pub neighbors: Vec<Vec<usize>>,
}

fn side_kg<'a>(side: Side, kg1: &'a KnowledgeGraph, kg2: &'a KnowledgeGraph) -> &'a KnowledgeGraph {
    match side {
        Side::Kg1 => kg1,
        Side::Kg2 => kg2,
    }
}

/// Row layout and training data for one fold's seed alignment.
pub fn build_objective(
    kg1: &KnowledgeGraph,
    kg2: &KnowledgeGraph,
    seed: &AlignmentSet,
    cfg: &TrainingConfig,
    rng: &mut impl Rng,
) -> Result<Objective> {
    cfg.validate()?;
    if seed.is_empty() {
        return Err(Error::Empty("seed alignment is empty".into()));
    }
    seed.check_one_to_one()?;
    seed.validate_against(kg1, kg2)?;

    // Entity rows: KG1 first, then KG2; shared seed pairs reuse the KG1 row.
    let share = cfg.interaction == Interaction::Sharing;
    let partner: HashMap<&str, &str> = seed.iter().map(|(a, b)| (b, a)).collect();
    let mut entity_index: [Index; 2] = [Index::new(), Index::new()];
    for (i, e) in kg1.entities().iter().enumerate() {
        entity_index[0].insert(e.clone(), i);
    }
    let mut rows = kg1.num_entities();
    let mut shared_rows = 0;
    let mut row2 = vec![0; kg2.num_entities()];
    for (i, e) in kg2.entities().iter().enumerate() {
        let r = match partner.get(e.as_str()) {
            Some(a) if share => {
                shared_rows += 1;
                entity_index[0][*a]
            }
            _ => {
                rows += 1;
                rows - 1
            }
        };
        row2[i] = r;
        entity_index[1].insert(e.clone(), r);
    }
    let row_of = |side: Side, id: usize| -> usize {
        match side {
            Side::Kg1 => id,
            Side::Kg2 => row2[id],
        }
    };

    let r1 = kg1.relations().len();
    let mut relation_index: [Index; 2] = [Index::new(), Index::new()];
    for (i, r) in kg1.relations().iter().enumerate() {
        relation_index[0].insert(r.clone(), i);
    }
    for (i, r) in kg2.relations().iter().enumerate() {
        relation_index[1].insert(r.clone(), r1 + i);
    }
    let rel_row = |side: Side, id: usize| if side == Side::Kg1 { id } else { r1 + id };

    let bound = init_bound(cfg.dim);
    let mut entities = Table::uniform(rows, cfg.dim, bound, rng);
    if cfg.normalize {
        entities.normalize_all();
    }
    let relations = Table::uniform(r1 + kg2.relations().len(), cfg.dim, bound, rng);
    let mut space = EmbeddingSpace::new(cfg.dim, entities, entity_index, relations, relation_index);
    space.normalized = cfg.normalize;

    let mut triples = Vec::new();
    let mut row_triples: [Vec<Triple>; 2] = [Vec::new(), Vec::new()];
    for side in Side::BOTH {
        for t in side_kg(side, kg1, kg2).rel_triples() {
            let rt = Triple {
                head: row_of(side, t.head),
                relation: rel_row(side, t.relation),
                tail: row_of(side, t.tail),
            };
            row_triples[side.index()].push(rt);
            triples.push((
                side,
                RowTriple {
                    head: rt.head,
                    relation: rt.relation,
                    tail: rt.tail,
                },
            ));
        }
    }

    let mut swapped = 0;
    if cfg.interaction == Interaction::Swapping {
        let mut swap: [HashMap<usize, usize>; 2] = [HashMap::new(), HashMap::new()];
        for (a, b) in seed.iter() {
            let (ra, rb) = (space.entity_index[0][a], space.entity_index[1][b]);
            swap[0].insert(ra, rb);
            swap[1].insert(rb, ra);
        }
        let existing: BTreeSet<RowTriple> = triples.iter().map(|t| t.1).collect();
        let mut extra = BTreeSet::new();
        for &(side, t) in &triples {
            let map = &swap[side.index()];
            if let Some(&h) = map.get(&t.head) {
                extra.insert((side, RowTriple { head: h, ..t }));
            }
            if let Some(&tl) = map.get(&t.tail) {
                extra.insert((side, RowTriple { tail: tl, ..t }));
            }
        }
        for (side, t) in extra {
            if !existing.contains(&t) {
                triples.push((side, t));
                swapped += 1;
            }
        }
    }

    let seeds = if share {
        Vec::new()
    } else {
        seed.iter()
            .map(|(a, b)| (space.entity_index[0][a], space.entity_index[1][b]))
            .collect()
    };
    if cfg.interaction == Interaction::Transformation {
        let mut m = vec![0.0; cfg.dim * cfg.dim];
        for i in 0..cfg.dim {
            m[i * cfg.dim + i] = 1.0;
        }
        space.transform = Some(m);
    }

    let pools = [
        space.entity_index[0].values().copied().collect::<BTreeSet<_>>().into_iter().collect(),
        space.entity_index[1].values().copied().collect::<BTreeSet<_>>().into_iter().collect(),
    ];

    let paths = if cfg.model == ModelKind::Path {
        let mut all = mine_paths(&row_triples[0], cfg.max_paths);
        all.extend(mine_paths(&row_triples[1], cfg.max_paths.saturating_sub(all.len())));
        all
    } else {
        Vec::new()
    };

    let mut attr_pairs = Vec::new();
    let mut attr_triples = Vec::new();
    if cfg.attributes || cfg.literals {
        let a1 = kg1.attributes().len();
        let mut attribute_index: [Index; 2] = [Index::new(), Index::new()];
        for (i, a) in kg1.attributes().iter().enumerate() {
            attribute_index[0].insert(a.clone(), i);
        }
        for (i, a) in kg2.attributes().iter().enumerate() {
            attribute_index[1].insert(a.clone(), a1 + i);
        }
        let total = a1 + kg2.attributes().len();
        space.attributes = Some(Table::uniform(total, cfg.dim, bound, rng));
        space.attribute_index = attribute_index;
        let attr_row = |side: Side, id: usize| if side == Side::Kg1 { id } else { a1 + id };
        for side in Side::BOTH {
            let kg = side_kg(side, kg1, kg2);
            if cfg.attributes {
                let pairs: BTreeMap<(usize, usize), usize> = attribute_cooccurrence(kg);
                attr_pairs.extend(
                    pairs
                        .into_iter()
                        .map(|((x, y), c)| ((attr_row(side, x), attr_row(side, y)), c)),
                );
            }
            if cfg.literals {
                attr_triples.extend(kg.attr_triples().iter().map(|a| RowAttr {
                    side,
                    entity: row_of(side, a.entity),
                    attribute: attr_row(side, a.attribute),
                    value: a.value.clone(),
                }));
            }
        }
        if cfg.literals {
            space.char_index = char_vocabulary(attr_triples.iter().map(|a| a.value.as_str()));
            space.chars = Some(Table::uniform(space.char_index.len() + 1, cfg.dim, bound, rng));
        }
    }

    let mut neighbors = vec![BTreeSet::new(); space.entities.rows()];
    for &(_, t) in &triples {
        if t.head != t.tail {
            neighbors[t.head].insert(t.tail);
            neighbors[t.tail].insert(t.head);
        }
    }

    Ok(Objective {
        space,
        triples,
        swapped,
        seeds,
        shared_rows,
        pools,
        paths,
        attr_pairs,
        attr_triples,
        neighbors: neighbors.into_iter().map(|s| s.into_iter().collect()).collect(),
    })
}

/// Per-row entity gradients.
pub type RowGrads = Vec<(usize, Vec<f64>)>;

/// `sum ||M e1 - e2||^2` over `pairs` with gradients for M (row-major) and
/// both entity rows.
pub fn transformation_loss(
    space: &EmbeddingSpace,
    pairs: &[(usize, usize)],
) -> (f64, Vec<f64>, RowGrads) {
    let d = space.dim;
    let m = space.transform.as_ref().expect("transformation mode has a matrix");
    let mut gm = vec![0.0; d * d];
    let mut rows = Vec::new();
    let mut total = 0.0;
    for &(a, b) in pairs {
        let e1 = space.entities.row(a);
        let e2 = space.entities.row(b);
        let r: Vec<f64> = crate::embedding::mat_vec(m, e1, d)
            .iter()
            .zip(e2)
            .map(|(x, y)| x - y)
            .collect();
        total += r.iter().map(|x| x * x).sum::<f64>();
        for i in 0..d {
            for j in 0..d {
                gm[i * d + j] += 2.0 * r[i] * e1[j];
            }
        }
        let mut g1 = vec![0.0; d];
        for i in 0..d {
            for j in 0..d {
                g1[j] += 2.0 * m[i * d + j] * r[i];
            }
        }
        rows.push((a, g1));
        rows.push((b, r.iter().map(|x| -2.0 * x).collect()));
    }
    (total, gm, rows)
}

/// `sum ||e1 - e2||_2` over `pairs` with gradients for both entity rows.
pub fn calibration_loss(space: &EmbeddingSpace, pairs: &[(usize, usize)]) -> (f64, RowGrads) {
    let mut rows = Vec::new();
    let mut total = 0.0;
    for &(a, b) in pairs {
        let diff: Vec<f64> = space
            .entities
            .row(a)
            .iter()
            .zip(space.entities.row(b))
            .map(|(x, y)| x - y)
            .collect();
        let n = crate::embedding::l2(&diff);
        total += n;
        if n > 0.0 {
            let g: Vec<f64> = diff.iter().map(|x| x / n).collect();
            rows.push((b, g.iter().map(|x| -x).collect()));
            rows.push((a, g));
        }
    }
    (total, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::testing::{central_diff, rel_err};
    use crate::rng;

    fn graphs() -> (KnowledgeGraph, KnowledgeGraph) {
        let t = |h: &str, r: &str, tl: &str| (h.to_string(), r.to_string(), tl.to_string());
        let kg1 = KnowledgeGraph::from_parts(
            ["a", "b", "c"].map(String::from),
            [t("a", "r", "b"), t("c", "r", "a")],
            Vec::new(),
        );
        let kg2 = KnowledgeGraph::from_parts(
            ["x", "y", "z"].map(String::from),
            [t("x", "s", "y"), t("y", "s", "z")],
            Vec::new(),
        );
        (kg1, kg2)
    }

    fn seed(pairs: &[(&str, &str)]) -> AlignmentSet {
        pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    fn cfg(interaction: Interaction) -> TrainingConfig {
        TrainingConfig {
            interaction,
            dim: 5,
            ..TrainingConfig::default()
        }
    }

    #[test]
    fn sharing_merges_seed_rows() {
        let (k1, k2) = graphs();
        let o = build_objective(&k1, &k2, &seed(&[("a", "x")]), &cfg(Interaction::Sharing), &mut rng::seeded(0)).unwrap();
        assert_eq!(o.space.entity_row(Side::Kg1, "a"), o.space.entity_row(Side::Kg2, "x"));
        assert_eq!(o.space.entities.rows(), 6 - 1);
        assert_eq!(o.shared_rows, 1);
        assert!(o.seeds.is_empty());
        assert!((o.space.max_entity_norm_error()) < 1e-9);
    }

    #[test]
    fn swapping_adds_two_per_direction() {
        let (k1, k2) = graphs();
        let o = build_objective(&k1, &k2, &seed(&[("a", "y")]), &cfg(Interaction::Swapping), &mut rng::seeded(0)).unwrap();
        // a occurs in 2 KG1 triples, y in 2 KG2 triples.
        assert_eq!(o.swapped, 4);
        assert_eq!(o.triples.len(), 4 + 4);
        let y = o.space.entity_row(Side::Kg2, "y").unwrap();
        let b = o.space.entity_row(Side::Kg1, "b").unwrap();
        assert!(o.triples.iter().any(|&(_, t)| t.head == y && t.tail == b));
    }

    #[test]
    fn empty_seed_rejected() {
        let (k1, k2) = graphs();
        let err = build_objective(&k1, &k2, &AlignmentSet::default(), &cfg(Interaction::Calibration), &mut rng::seeded(0));
        assert!(err.is_err());
    }

    #[test]
    fn identity_transform_zero_loss() {
        let (k1, k2) = graphs();
        let mut o =
            build_objective(&k1, &k2, &seed(&[("a", "x"), ("b", "y")]), &cfg(Interaction::Transformation), &mut rng::seeded(0)).unwrap();
        for &(a, b) in &o.seeds.clone() {
            let v = o.space.entities.row(a).to_vec();
            o.space.entities.row_mut(b).copy_from_slice(&v);
        }
        let (loss, _, _) = transformation_loss(&o.space, &o.seeds);
        assert!(loss.abs() < 1e-12);
    }

    #[test]
    fn alignment_gradients_match_finite_differences() {
        let (k1, k2) = graphs();
        let s = seed(&[("a", "x"), ("c", "z")]);
        let mut o = build_objective(&k1, &k2, &s, &cfg(Interaction::Transformation), &mut rng::seeded(1)).unwrap();
        let mut r = rng::seeded(2);
        o.space.transform = Some((0..25).map(|_| r.random_range(-1.0..1.0)).collect());
        let (_, gm, rows) = transformation_loss(&o.space, &o.seeds);
        let fd_m = central_diff(o.space.transform.as_ref().unwrap(), |x| {
            let mut sp = o.space.clone();
            sp.transform = Some(x.to_vec());
            transformation_loss(&sp, &o.seeds).0
        });
        assert!(rel_err(&gm, &fd_m) < 1e-6);
        let dense = |rows: &[(usize, Vec<f64>)], n: usize| {
            let mut g = vec![0.0; n * 5];
            for (r, v) in rows {
                for k in 0..5 {
                    g[r * 5 + k] += v[k];
                }
            }
            g
        };
        let n = o.space.entities.rows();
        let fd_e = central_diff(o.space.entities.as_slice(), |x| {
            let mut sp = o.space.clone();
            sp.entities = Table::from_vec(5, x.to_vec()).unwrap();
            transformation_loss(&sp, &o.seeds).0
        });
        assert!(rel_err(&dense(&rows, n), &fd_e) < 1e-6);
        let (_, crow) = calibration_loss(&o.space, &o.seeds);
        let fd_c = central_diff(o.space.entities.as_slice(), |x| {
            let mut sp = o.space.clone();
            sp.entities = Table::from_vec(5, x.to_vec()).unwrap();
            calibration_loss(&sp, &o.seeds).0
        });
        assert!(rel_err(&dense(&crow, n), &fd_c) < 1e-6);
    }
}

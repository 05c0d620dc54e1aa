use std::collections::BTreeSet;

use rand::seq::SliceRandom;

use super::filter_by_reference;
use crate::error::{Error, Result};
use crate::kg::{AlignmentSet, KnowledgeGraph};
use crate::rng;

/// Entities at or below this degree are deletion candidates.
pub const LOW_DEGREE: usize = 5;

#[derive(Clone, Debug)]
pub struct DensifyOutcome {
    pub kg1: KnowledgeGraph,
    pub kg2: KnowledgeGraph,
    pub links: AlignmentSet,
    pub start_avg_degree: [f64; 2],
    pub final_avg_degree: [f64; 2],
}

struct Side {
    nbrs: Vec<Vec<(usize, usize)>>,
    deg: Vec<usize>,
    deg_sum: usize,
    alive: usize,
}

impl Side {
    fn new(kg: &KnowledgeGraph) -> Self {
        Self {
            nbrs: kg.weighted_neighbors(),
            deg: kg.degrees().to_vec(),
            deg_sum: kg.degrees().iter().sum(),
            alive: kg.num_entities(),
        }
    }

    fn avg(&self) -> f64 {
        if self.alive == 0 {
            0.0
        } else {
            self.deg_sum as f64 / self.alive as f64
        }
    }

    fn delete(&mut self, e: usize, dead: &dyn Fn(usize) -> bool) {
        let mut removed = self.deg[e];
        for &(u, m) in &self.nbrs[e] {
            if !dead(u) {
                self.deg[u] -= m;
                removed += m;
            }
        }
        self.deg[e] = 0;
        self.deg_sum -= removed;
        self.alive -= 1;
    }
}

/// Densifies a source pair for V2 datasets: aligned pairs whose entity has
/// degree at most 5 on a side still below target are deleted uniformly at
/// random until each graph's average degree is at least twice its value
/// after reference filtering.
pub fn densify_v2(
    kg1: &KnowledgeGraph,
    kg2: &KnowledgeGraph,
    reference: &AlignmentSet,
    seed: u64,
) -> Result<DensifyOutcome> {
    reference.check_one_to_one()?;
    let (f1, f2, links) = filter_by_reference(kg1, kg2, reference);
    if links.is_empty() {
        return Err(Error::Empty("no reference pairs resolve in both graphs".into()));
    }
    let idx: Vec<[usize; 2]> = links
        .iter()
        .map(|(a, b)| [f1.entity_id(a).unwrap(), f2.entity_id(b).unwrap()])
        .collect();
    let mut pair_of = [vec![0; f1.num_entities()], vec![0; f2.num_entities()]];
    for (k, p) in idx.iter().enumerate() {
        pair_of[0][p[0]] = k;
        pair_of[1][p[1]] = k;
    }
    let mut sides = [Side::new(&f1), Side::new(&f2)];
    let start = [sides[0].avg(), sides[1].avg()];
    let target = [2.0 * start[0], 2.0 * start[1]];
    let mut gone = vec![false; idx.len()];
    let mut rng = rng::seeded(seed);

    let unsatisfied = |sides: &[Side; 2]| -> Vec<usize> {
        (0..2).filter(|&j| sides[j].avg() < target[j]).collect()
    };

    loop {
        let open = unsatisfied(&sides);
        if open.is_empty() {
            break;
        }
        let mut candidates: Vec<usize> = open
            .iter()
            .flat_map(|&j| {
                let sides = &sides;
                let gone = &gone;
                let pair_of = &pair_of;
                (0..sides[j].deg.len())
                    .filter(move |&e| !gone[pair_of[j][e]] && sides[j].deg[e] <= LOW_DEGREE)
                    .map(move |e| pair_of[j][e])
            })
            .collect::<BTreeSet<usize>>()
            .into_iter()
            .collect();
        if candidates.is_empty() {
            let achieved = open
                .iter()
                .map(|&j| if start[j] > 0.0 { sides[j].avg() / start[j] } else { 1.0 })
                .fold(f64::INFINITY, f64::min);
            return Err(Error::DensifyStalled {
                achieved,
                target: 2.0,
            });
        }
        candidates.shuffle(&mut rng);
        for k in candidates {
            let open = unsatisfied(&sides);
            if open.is_empty() {
                break;
            }
            if gone[k] || !open.iter().any(|&j| sides[j].deg[idx[k][j]] <= LOW_DEGREE) {
                continue;
            }
            gone[k] = true;
            for (j, side) in sides.iter_mut().enumerate() {
                let dead = |u: usize| gone[pair_of[j][u]];
                side.delete(idx[k][j], &dead);
            }
        }
    }

    let kept: AlignmentSet = links
        .pairs()
        .iter()
        .zip(&gone)
        .filter(|(_, &g)| !g)
        .map(|(p, _)| p.clone())
        .collect();
    let (kg1, kg2, links) = super::restrict_to_pairs(&f1, &f2, kept);
    let final_avg_degree = [kg1.average_degree(), kg2.average_degree()];
    Ok(DensifyOutcome {
        kg1,
        kg2,
        links,
        start_avg_degree: start,
        final_avg_degree,
    })
}

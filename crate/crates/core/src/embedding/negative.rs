use std::collections::{HashMap, HashSet};

use rand::Rng;
use rayon::prelude::*;

use super::loss::{RowTriple, Sampling};
use super::Table;
use crate::error::{Error, Result};

/// Attempts before a possibly-true corruption is accepted.
pub const MAX_ATTEMPTS: usize = 100;

/// Corrupts triples of one KG by replacing the head or the tail.
#[derive(Clone, Debug)]
pub struct NegativeSampler {
    pool: Vec<usize>,
    positives: HashSet<RowTriple>,
    sampling: Sampling,
    neighbors: HashMap<usize, Vec<usize>>,
    /// Corruptions accepted after exhausting [`MAX_ATTEMPTS`].
    pub fallbacks: usize,
}

impl NegativeSampler {
    /// `pool` holds the entity rows of the KG, `positives` its true triples.
    pub fn new(pool: Vec<usize>, positives: &[RowTriple], sampling: Sampling) -> Result<Self> {
        let mut pool = pool;
        pool.sort_unstable();
        pool.dedup();
        if pool.len() < 2 {
            return Err(Error::Validation("negative sampling needs at least 2 entities".into()));
        }
        Ok(Self {
            pool,
            positives: positives.iter().copied().collect(),
            sampling,
            neighbors: HashMap::new(),
            fallbacks: 0,
        })
    }

    pub fn pool(&self) -> &[usize] {
        &self.pool
    }

    /// Size of the truncated candidate set.
    pub fn truncation_size(&self) -> usize {
        match self.sampling {
            Sampling::Uniform => self.pool.len(),
            Sampling::Truncated { tau } => {
                ((tau * self.pool.len() as f64).ceil() as usize).clamp(1, self.pool.len() - 1)
            }
        }
    }

    /// Recomputes nearest-neighbour sets from the current entity table.
    /// No-op for uniform sampling.
    pub fn refresh(&mut self, entities: &Table) {
        if matches!(self.sampling, Sampling::Uniform) {
            return;
        }
        let k = self.truncation_size();
        let pool = &self.pool;
        self.neighbors = pool
            .par_iter()
            .map(|&e| (e, nearest(entities, pool, e, k)))
            .collect();
    }

    pub fn neighbors(&self, row: usize) -> Option<&[usize]> {
        self.neighbors.get(&row).map(Vec::as_slice)
    }

    fn candidate(&self, replaced: usize, rng: &mut impl Rng) -> usize {
        match self.neighbors.get(&replaced) {
            Some(nn) if !matches!(self.sampling, Sampling::Uniform) => nn[rng.random_range(0..nn.len())],
            _ => self.pool[rng.random_range(0..self.pool.len())],
        }
    }

    /// Draws `count` corruptions of `triple`.
    pub fn sample(&mut self, triple: RowTriple, count: usize, rng: &mut impl Rng) -> Vec<RowTriple> {
        (0..count).map(|_| self.corrupt(triple, rng)).collect()
    }

    fn corrupt(&mut self, triple: RowTriple, rng: &mut impl Rng) -> RowTriple {
        let mut last = triple;
        for _ in 0..MAX_ATTEMPTS {
            let head = rng.random::<bool>();
            let replaced = if head { triple.head } else { triple.tail };
            let e = self.candidate(replaced, rng);
            last = if head {
                RowTriple { head: e, ..triple }
            } else {
                RowTriple { tail: e, ..triple }
            };
            if !self.positives.contains(&last) {
                return last;
            }
        }
        self.fallbacks += 1;
        last
    }
}

/// The `k` rows of `pool` closest to `e` in Euclidean distance, excluding
/// `e` itself. Ties break by row.
fn nearest(entities: &Table, pool: &[usize], e: usize, k: usize) -> Vec<usize> {
    let x = entities.row(e);
    let mut scored: Vec<(f64, usize)> = pool
        .iter()
        .filter(|&&o| o != e)
        .map(|&o| {
            let d: f64 = x.iter().zip(entities.row(o)).map(|(a, b)| (a - b).powi(2)).sum();
            (d, o)
        })
        .collect();
    let k = k.min(scored.len());
    if k < scored.len() {
        scored.select_nth_unstable_by(k, |a, b| a.partial_cmp(b).unwrap());
        scored.truncate(k);
    }
    scored.sort_by(|a, b| a.partial_cmp(b).unwrap());
    scored.into_iter().map(|(_, o)| o).collect()
}

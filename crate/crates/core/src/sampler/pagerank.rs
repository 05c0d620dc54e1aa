use crate::error::{Error, Result};
use crate::kg::KnowledgeGraph;

pub const DEFAULT_DAMPING: f64 = 0.85;
pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const MAX_ITERATIONS: usize = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub struct PageRankScores {
    /// Indexed like the graph's entities.
    pub score: Vec<f64>,
    pub damping: f64,
    pub iterations: usize,
    pub delta: f64,
}

/// PageRank on the undirected simple projection with uniform teleport.
/// Mass sitting on isolated vertices is redistributed uniformly.
pub fn pagerank(kg: &KnowledgeGraph, damping: f64, tol: f64) -> Result<PageRankScores> {
    if kg.is_empty() {
        return Err(Error::Empty("PageRank on an empty graph".into()));
    }
    pagerank_adjacency(&kg.undirected_neighbors(), damping, tol)
}

pub fn pagerank_adjacency(adj: &[Vec<usize>], damping: f64, tol: f64) -> Result<PageRankScores> {
    let n = adj.len();
    if n == 0 {
        return Err(Error::Empty("PageRank on an empty graph".into()));
    }
    if !(0.0..1.0).contains(&damping) {
        return Err(Error::Config(format!("damping {damping} outside [0, 1)")));
    }
    let nf = n as f64;
    let mut score = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    let mut share = vec![0.0; n];
    let mut delta = f64::INFINITY;
    for it in 1..=MAX_ITERATIONS {
        let mut dangling = 0.0;
        for (i, nbrs) in adj.iter().enumerate() {
            if nbrs.is_empty() {
                dangling += score[i];
                share[i] = 0.0;
            } else {
                share[i] = score[i] / nbrs.len() as f64;
            }
        }
        let base = (1.0 - damping) / nf + damping * dangling / nf;
        for (i, nbrs) in adj.iter().enumerate() {
            next[i] = base + damping * nbrs.iter().map(|&j| share[j]).sum::<f64>();
        }
        // Renormalise against floating-point drift.
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= total);
        delta = score.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut score, &mut next);
        if delta < tol {
            return Ok(PageRankScores {
                score,
                damping,
                iterations: it,
                delta,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITERATIONS,
        delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::test_graphs::*;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    /// Solves (I - d G) p = (1 - d)/n directly, G being the column-stochastic
    /// transition matrix with uniform columns for isolated vertices.
    fn dense_oracle(adj: &[Vec<usize>], d: f64) -> Vec<f64> {
        let n = adj.len();
        let mut g = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            if adj[j].is_empty() {
                for i in 0..n {
                    g[(i, j)] = 1.0 / n as f64;
                }
            } else {
                for &i in &adj[j] {
                    g[(i, j)] += 1.0 / adj[j].len() as f64;
                }
            }
        }
        let a = DMatrix::<f64>::identity(n, n) - g * d;
        let b = DVector::<f64>::from_element(n, (1.0 - d) / n as f64);
        a.lu().solve(&b).unwrap().iter().copied().collect()
    }

    #[test]
    fn two_nodes_split_evenly() {
        let pr = pagerank(&from_edges(&[("a", "b")]), DEFAULT_DAMPING, DEFAULT_TOLERANCE).unwrap();
        assert!((pr.score[0] - 0.5).abs() < 1e-12 && (pr.score[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn star_center_dominates() {
        let kg = star3();
        let pr = pagerank(&kg, DEFAULT_DAMPING, DEFAULT_TOLERANCE).unwrap();
        let hub = kg.entity_id("hub").unwrap();
        let leaves: Vec<f64> = ["x", "y", "z"].iter().map(|e| pr.score[kg.entity_id(e).unwrap()]).collect();
        assert!(leaves.iter().all(|&l| l < pr.score[hub]));
        assert!((leaves[0] - leaves[1]).abs() < 1e-12 && (leaves[1] - leaves[2]).abs() < 1e-12);
    }

    #[test]
    fn path4_matches_dense_solution() {
        let kg = from_edges(&[("a", "b"), ("b", "c"), ("c", "d")]);
        let pr = pagerank(&kg, DEFAULT_DAMPING, DEFAULT_TOLERANCE).unwrap();
        let oracle = dense_oracle(&kg.undirected_neighbors(), DEFAULT_DAMPING);
        for (a, b) in pr.score.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn isolated_vertices_keep_positive_mass() {
        let adj = vec![vec![1], vec![0], vec![]];
        let pr = pagerank_adjacency(&adj, DEFAULT_DAMPING, DEFAULT_TOLERANCE).unwrap();
        assert!(pr.score.iter().all(|&s| s > 0.0));
        let oracle = dense_oracle(&adj, DEFAULT_DAMPING);
        for (a, b) in pr.score.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn empty_graph_errors() {
        assert!(pagerank_adjacency(&[], 0.85, 1e-8).is_err());
    }

    fn arb_adj() -> impl Strategy<Value = Vec<Vec<usize>>> {
        (2usize..50).prop_flat_map(|n| {
            proptest::collection::vec((0..n, 0..n), 0..(3 * n)).prop_map(move |edges| {
                let mut adj = vec![std::collections::BTreeSet::new(); n];
                for (a, b) in edges {
                    if a != b {
                        adj[a].insert(b);
                        adj[b].insert(a);
                    }
                }
                adj.into_iter().map(|s| s.into_iter().collect()).collect()
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn sums_to_one_and_matches_dense(adj in arb_adj()) {
            let pr = pagerank_adjacency(&adj, DEFAULT_DAMPING, DEFAULT_TOLERANCE).unwrap();
            prop_assert!((pr.score.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(pr.score.iter().all(|&s| s > 0.0));
            let oracle = dense_oracle(&adj, DEFAULT_DAMPING);
            for (a, b) in pr.score.iter().zip(&oracle) {
                prop_assert!((a - b).abs() < 1e-6);
            }
        }
    }
}

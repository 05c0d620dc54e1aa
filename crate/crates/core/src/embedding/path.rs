use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::space::check_dims;
use crate::error::Result;
use crate::kg::Triple;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathOp {
    #[default]
    Sum,
    Product,
}

/// Composes two relation vectors into a path vector.
pub fn path_compose(r1: &[f64], r2: &[f64], op: PathOp) -> Result<Vec<f64>> {
    check_dims(r1, r2)?;
    Ok(match op {
        PathOp::Sum => r1.iter().zip(r2).map(|(a, b)| a + b).collect(),
        PathOp::Product => r1.iter().zip(r2).map(|(a, b)| a * b).collect(),
    })
}

/// Gradients of a path term with respect to its three relations.
#[derive(Clone, Debug, PartialEq)]
pub struct PathGrad {
    pub value: f64,
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
    pub r3: Vec<f64>,
}

/// `||comb(r1, r2) - r3||_2` and its gradients.
pub fn path_loss(r1: &[f64], r2: &[f64], r3: &[f64], op: PathOp) -> Result<PathGrad> {
    let comb = path_compose(r1, r2, op)?;
    check_dims(&comb, r3)?;
    let residual: Vec<f64> = comb.iter().zip(r3).map(|(a, b)| a - b).collect();
    let value = super::l2(&residual);
    let unit: Vec<f64> = if value > 0.0 {
        residual.iter().map(|x| x / value).collect()
    } else {
        vec![0.0; residual.len()]
    };
    let (g1, g2) = match op {
        PathOp::Sum => (unit.clone(), unit.clone()),
        PathOp::Product => (
            unit.iter().zip(r2).map(|(u, b)| u * b).collect(),
            unit.iter().zip(r1).map(|(u, a)| u * a).collect(),
        ),
    };
    let g3 = unit.iter().map(|u| -u).collect();
    Ok(PathGrad { value, r1: g1, r2: g2, r3: g3 })
}

/// Relation triples `(r1, r2, r3)` such that some `(a, r1, b)`, `(b, r2, c)`
/// and `(a, r3, c)` all hold. Returns at most `limit` distinct triples in
/// sorted order.
pub fn mine_paths(triples: &[Triple], limit: usize) -> Vec<(usize, usize, usize)> {
    let mut out_edges: HashMap<usize, Vec<(usize, usize)>> = HashMap::new();
    let mut direct: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for t in triples {
        out_edges.entry(t.head).or_default().push((t.relation, t.tail));
        direct.entry((t.head, t.tail)).or_default().push(t.relation);
    }
    let mut found = BTreeSet::new();
    if limit == 0 {
        return Vec::new();
    }
    let mut heads: Vec<usize> = out_edges.keys().copied().collect();
    heads.sort_unstable();
    'outer: for a in heads {
        for &(r1, b) in &out_edges[&a] {
            let Some(next) = out_edges.get(&b) else { continue };
            for &(r2, c) in next {
                if let Some(rs) = direct.get(&(a, c)) {
                    for &r3 in rs {
                        found.insert((r1, r2, r3));
                        if found.len() >= limit {
                            break 'outer;
                        }
                    }
                }
            }
        }
    }
    found.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::testing::{central_diff, rand_vec, rel_err};
    use crate::rng;

    #[test]
    fn compose_examples() {
        assert_eq!(path_compose(&[1.0, 2.0], &[3.0, 4.0], PathOp::Sum).unwrap(), vec![4.0, 6.0]);
        assert_eq!(path_compose(&[1.0, 2.0], &[3.0, 4.0], PathOp::Product).unwrap(), vec![3.0, 8.0]);
        assert!(path_compose(&[1.0], &[1.0, 2.0], PathOp::Sum).is_err());
    }

    #[test]
    fn sum_is_order_independent() {
        let (a, b, c) = ([0.5, -1.0], [2.0, 0.25], [-3.0, 1.0]);
        let left = path_compose(&path_compose(&a, &b, PathOp::Sum).unwrap(), &c, PathOp::Sum).unwrap();
        let right = path_compose(&a, &path_compose(&c, &b, PathOp::Sum).unwrap(), PathOp::Sum).unwrap();
        assert_eq!(left, right);
    }

    #[test]
    fn path_loss_gradients() {
        let mut r = rng::seeded(3);
        for op in [PathOp::Sum, PathOp::Product] {
            for _ in 0..20 {
                let (a, b, c) = (rand_vec(&mut r, 5), rand_vec(&mut r, 5), rand_vec(&mut r, 5));
                let g = path_loss(&a, &b, &c, op).unwrap();
                let f1 = central_diff(&a, |x| path_loss(x, &b, &c, op).unwrap().value);
                let f2 = central_diff(&b, |x| path_loss(&a, x, &c, op).unwrap().value);
                let f3 = central_diff(&c, |x| path_loss(&a, &b, x, op).unwrap().value);
                assert!(rel_err(&g.r1, &f1) < 1e-5);
                assert!(rel_err(&g.r2, &f2) < 1e-5);
                assert!(rel_err(&g.r3, &f3) < 1e-5);
            }
        }
    }

    #[test]
    fn mines_closed_two_hop() {
        let t = |head, relation, tail| Triple { head, relation, tail };
        let triples = [t(0, 0, 1), t(1, 1, 2), t(0, 2, 2), t(2, 0, 3)];
        assert_eq!(mine_paths(&triples, 10), vec![(0, 1, 2)]);
        assert!(mine_paths(&triples, 0).is_empty());
    }
}

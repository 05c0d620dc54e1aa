use std::collections::BTreeMap;

use rand::Rng;

use super::grad::SparseGrad;
use super::space::check_dims;
use super::{dot, Table};
use crate::error::Result;
use crate::kg::KnowledgeGraph;

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Probability that two attributes are correlated, `sigmoid(a1 . a2)`.
pub fn attr_correlation_prob(a1: &[f64], a2: &[f64]) -> Result<f64> {
    check_dims(a1, a2)?;
    Ok(sigmoid(dot(a1, a2)))
}

/// `-ln sigmoid(sign * a1 . a2)` with gradients for both vectors.
/// `positive` selects `sign = 1`, otherwise `-1`.
pub fn attr_nll_grad(a1: &[f64], a2: &[f64], positive: bool) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    check_dims(a1, a2)?;
    let sign = if positive { 1.0 } else { -1.0 };
    let z = sign * dot(a1, a2);
    let value = if z < -30.0 { -z } else { (-z).exp().ln_1p() };
    let coeff = -sign * (1.0 - sigmoid(z));
    let g1 = a2.iter().map(|x| coeff * x).collect();
    let g2 = a1.iter().map(|x| coeff * x).collect();
    Ok((value, g1, g2))
}

/// Unordered attribute pairs used together on an entity, with counts.
pub fn attribute_cooccurrence(kg: &KnowledgeGraph) -> BTreeMap<(usize, usize), usize> {
    let mut per_entity: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for a in kg.attr_triples() {
        per_entity.entry(a.entity).or_default().push(a.attribute);
    }
    let mut pairs = BTreeMap::new();
    for mut attrs in per_entity.into_values() {
        attrs.sort_unstable();
        attrs.dedup();
        for i in 0..attrs.len() {
            for j in i + 1..attrs.len() {
                *pairs.entry((attrs[i], attrs[j])).or_insert(0) += 1;
            }
        }
    }
    pairs
}

/// Frequency-weighted correlation objective over attribute-table rows,
/// with one uniformly drawn negative partner per positive pair.
pub fn attr_correlation_loss(
    pairs: &[((usize, usize), usize)],
    table: &Table,
    rng: &mut impl Rng,
) -> Result<(f64, SparseGrad)> {
    let mut grad = SparseGrad::default();
    let mut total = 0.0;
    let n = table.rows();
    for &((a, b), count) in pairs {
        let w = count as f64;
        let (v, g1, g2) = attr_nll_grad(table.row(a), table.row(b), true)?;
        total += w * v;
        grad.add(a, w, &g1);
        grad.add(b, w, &g2);
        if n > 1 {
            let neg = rng.random_range(0..n);
            if neg != a && neg != b {
                let (v, g1, g2) = attr_nll_grad(table.row(a), table.row(neg), false)?;
                total += w * v;
                grad.add(a, w, &g1);
                grad.add(neg, w, &g2);
            }
        }
    }
    Ok((total, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::testing::{central_diff, rand_vec, rel_err};
    use crate::rng;

    #[test]
    fn orthogonal_is_half() {
        assert_eq!(attr_correlation_prob(&[1.0, 0.0], &[0.0, 2.0]).unwrap(), 0.5);
    }

    #[test]
    fn ln3_gives_three_quarters() {
        let x = 3f64.ln().sqrt();
        let p = attr_correlation_prob(&[x, 0.0], &[x, 0.0]).unwrap();
        assert!((p - 0.75).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(attr_correlation_prob(&[1.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut r = rng::seeded(9);
        for positive in [true, false] {
            for _ in 0..20 {
                let (a, b) = (rand_vec(&mut r, 5), rand_vec(&mut r, 5));
                let (_, g1, g2) = attr_nll_grad(&a, &b, positive).unwrap();
                let f1 = central_diff(&a, |x| attr_nll_grad(x, &b, positive).unwrap().0);
                let f2 = central_diff(&b, |x| attr_nll_grad(&a, x, positive).unwrap().0);
                assert!(rel_err(&g1, &f1) < 1e-6);
                assert!(rel_err(&g2, &f2) < 1e-6);
            }
        }
    }

    #[test]
    fn cooccurrence_counts() {
        let kg = KnowledgeGraph::from_parts(
            ["a", "b"].map(String::from),
            Vec::<(String, String, String)>::new(),
            [("a", "x", "1"), ("a", "y", "2"), ("b", "x", "3"), ("b", "y", "4"), ("b", "z", "5")]
                .map(|(e, p, v)| (e.to_string(), p.to_string(), v.to_string())),
        );
        let pairs = attribute_cooccurrence(&kg);
        assert_eq!(pairs.len(), 3);
        assert_eq!(pairs[&(0, 1)], 2);
    }
}

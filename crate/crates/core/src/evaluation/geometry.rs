use std::fmt::Write as _;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::inference::{base_similarity, Metric};

/// Nearest-neighbour structure of source entities among targets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryReport {
    /// Mean cosine similarity of sources to their rank-r target, r = 1..=k.
    pub topk_profile: Vec<f64>,
    /// Shares of targets that are the rank-1 neighbour of 0, 1 and 2+ sources.
    pub hub_histogram: [f64; 3],
}

impl GeometryReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,key,value\n");
        for (r, v) in self.topk_profile.iter().enumerate() {
            writeln!(out, "topk,{},{v:.6}", r + 1).unwrap();
        }
        for (label, v) in ["0", "1", ">=2"].iter().zip(self.hub_histogram) {
            writeln!(out, "hub,{label},{v:.6}").unwrap();
        }
        out
    }
}

/// Cosine top-k profile and hubness histogram. Rank-1 ties go to the
/// lower target row.
pub fn geometry_report(src: &Array2<f64>, tgt: &Array2<f64>, k: usize) -> Result<GeometryReport> {
    let cos = base_similarity(src, tgt, Metric::Cosine)?;
    let (n, m) = cos.dim();
    let k = k.min(m);
    let mut profile = vec![0.0; k];
    let mut hits = vec![0usize; m];
    for row in cos.rows() {
        let mut sorted: Vec<f64> = row.to_vec();
        sorted.sort_by(|a, b| b.total_cmp(a));
        for (acc, v) in profile.iter_mut().zip(&sorted) {
            *acc += v;
        }
        if m > 0 {
            let mut best = 0;
            for j in 1..m {
                if row[j] > row[best] {
                    best = j;
                }
            }
            hits[best] += 1;
        }
    }
    if n > 0 {
        profile.iter_mut().for_each(|v| *v /= n as f64);
    }
    let mut hub = [0.0; 3];
    if m > 0 {
        for h in hits {
            hub[h.min(2)] += 1.0 / m as f64;
        }
    }
    Ok(GeometryReport {
        topk_profile: profile,
        hub_histogram: hub,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use ndarray::array;
    use rand::Rng;

    #[test]
    fn bijection_has_no_hubs() {
        let e = Array2::eye(4);
        let g = geometry_report(&e, &e, 5).unwrap();
        assert_eq!(g.hub_histogram, [0.0, 1.0, 0.0]);
        assert_eq!(g.topk_profile.len(), 4);
        assert!((g.topk_profile[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn collapsed_sources_make_one_hub() {
        let src = array![[1.0, 0.2], [1.0, 0.2], [1.0, 0.2]];
        let tgt = array![[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]];
        let g = geometry_report(&src, &tgt, 5).unwrap();
        assert!((g.hub_histogram[2] - 1.0 / 3.0).abs() < 1e-12);
        assert!((g.hub_histogram[0] - 2.0 / 3.0).abs() < 1e-12);
        let single = geometry_report(&array![[1.0, 0.2]], &tgt, 5).unwrap();
        assert!((single.hub_histogram[1] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn profile_sorted_and_histogram_sums_to_one() {
        let mut r = rng::seeded(8);
        let src = Array2::from_shape_fn((20, 6), |_| r.random_range(-1.0..1.0));
        let tgt = Array2::from_shape_fn((25, 6), |_| r.random_range(-1.0..1.0));
        let g = geometry_report(&src, &tgt, 5).unwrap();
        assert!(g.topk_profile.windows(2).all(|w| w[0] >= w[1]));
        assert!((g.hub_histogram.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(g.to_csv().lines().count(), 1 + 5 + 3);
    }
}

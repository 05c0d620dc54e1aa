use ndarray::{Array2, ArrayView1, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// CSLS neighbourhood size used when none is given.
pub const DEFAULT_CSLS_K: usize = 10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Cosine,
    Euclidean,
    Manhattan,
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(Metric::Cosine),
            "euclidean" => Ok(Metric::Euclidean),
            "manhattan" => Ok(Metric::Manhattan),
            other => Err(Error::Config(format!("unknown metric `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimilarityConfig {
    pub metric: Metric,
    /// CSLS neighbourhood size; `None` disables rescoring.
    pub csls: Option<usize>,
}

impl SimilarityConfig {
    pub fn validate(&self) -> Result<()> {
        match self.csls {
            Some(0) => Err(Error::Config("CSLS k must be at least 1".into())),
            Some(_) if self.metric != Metric::Cosine => {
                Err(Error::Config("CSLS is only defined on the cosine metric".into()))
            }
            _ => Ok(()),
        }
    }
}

fn cosine(a: ArrayView1<f64>, b: ArrayView1<f64>, na: f64, nb: f64) -> f64 {
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        a.dot(&b) / (na * nb)
    }
}

/// Similarity of every source row to every target row. Distances are
/// negated so larger is always more similar.
pub fn base_similarity(src: &Array2<f64>, tgt: &Array2<f64>, metric: Metric) -> Result<Array2<f64>> {
    if src.ncols() != tgt.ncols() {
        return Err(Error::DimensionMismatch {
            expected: src.ncols(),
            actual: tgt.ncols(),
        });
    }
    let (n, m) = (src.nrows(), tgt.nrows());
    let tgt_norms: Vec<f64> = tgt.rows().into_iter().map(|r| r.dot(&r).sqrt()).collect();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let a = src.row(i);
            let na = a.dot(&a).sqrt();
            (0..m)
                .map(|j| {
                    let b = tgt.row(j);
                    match metric {
                        Metric::Cosine => cosine(a, b, na, tgt_norms[j]),
                        Metric::Euclidean => -a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt(),
                        Metric::Manhattan => -a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>(),
                    }
                })
                .collect()
        })
        .collect();
    Ok(Array2::from_shape_vec((n, m), rows.into_iter().flatten().collect()).expect("shape"))
}

/// Mean of the `k` largest values of `v` (all of them if fewer).
fn top_k_mean(v: impl Iterator<Item = f64>, k: usize) -> f64 {
    let mut vals: Vec<f64> = v.collect();
    let k = k.min(vals.len());
    if k == 0 {
        return 0.0;
    }
    vals.select_nth_unstable_by(k - 1, |a, b| b.total_cmp(a));
    vals[..k].iter().sum::<f64>() / k as f64
}

/// `2 cos(s, t) - psi_t(s) - psi_s(t)`, where `psi_t(s)` is the mean
/// similarity of `s` to its `k` nearest targets and `psi_s(t)` the mean
/// similarity of `t` to its `k` nearest sources.
pub fn csls(cos: &Array2<f64>, k: usize) -> Array2<f64> {
    let psi_src: Vec<f64> = cos.axis_iter(Axis(0)).map(|r| top_k_mean(r.iter().copied(), k)).collect();
    let psi_tgt: Vec<f64> = cos.axis_iter(Axis(1)).map(|c| top_k_mean(c.iter().copied(), k)).collect();
    Array2::from_shape_fn(cos.raw_dim(), |(i, j)| 2.0 * cos[[i, j]] - psi_src[i] - psi_tgt[j])
}

/// Base similarity followed by optional CSLS rescoring.
pub fn similarity(src: &Array2<f64>, tgt: &Array2<f64>, cfg: &SimilarityConfig) -> Result<Array2<f64>> {
    cfg.validate()?;
    let base = base_similarity(src, tgt, cfg.metric)?;
    Ok(match cfg.csls {
        Some(k) => csls(&base, k),
        None => base,
    })
}

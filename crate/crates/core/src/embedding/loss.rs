use serde::{Deserialize, Serialize};

use super::energy::{transe_energy_grad, Norm};
use super::grad::Gradients;
use super::EmbeddingSpace;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    #[default]
    Marginal,
    Logistic,
    Limit,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Sampling {
    #[default]
    Uniform,
    Truncated { tau: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossConfig {
    pub kind: LossKind,
    pub margin: f64,
    /// Upper limit on positive energies (limit-based loss).
    pub limit_pos: f64,
    /// Lower limit on negative energies (limit-based loss).
    pub limit_neg: f64,
    pub limit_balance: f64,
    pub negatives_per_positive: usize,
    pub sampling: Sampling,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            kind: LossKind::Marginal,
            margin: 1.0,
            limit_pos: 0.2,
            limit_neg: 2.0,
            limit_balance: 1.0,
            negatives_per_positive: 1,
            sampling: Sampling::Uniform,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if self.margin <= 0.0 {
            return Err(Error::Config("margin must be positive".into()));
        }
        if self.limit_pos >= self.limit_neg {
            return Err(Error::Config("limit_pos must be below limit_neg".into()));
        }
        if self.negatives_per_positive < 1 {
            return Err(Error::Config("need at least one negative per positive".into()));
        }
        if let Sampling::Truncated { tau } = self.sampling {
            if !(tau > 0.0 && tau <= 1.0) {
                return Err(Error::Config(format!("truncation tau {tau} outside (0, 1]")));
            }
        }
        Ok(())
    }
}

/// Loss value and its derivative with respect to every input energy.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyLoss {
    pub value: f64,
    pub d_pos: Vec<f64>,
    pub d_neg: Vec<f64>,
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Loss over energies. Negatives for positive `i` are
/// `neg[i * k .. (i + 1) * k]` with `k = neg.len() / pos.len()`.
///
/// The logistic loss scores a triple by `-energy`, so it reads
/// `softplus(e_pos) + softplus(-e_neg)`.
pub fn energy_loss(cfg: &LossConfig, pos: &[f64], neg: &[f64]) -> Result<EnergyLoss> {
    let k = cfg.negatives_per_positive;
    if neg.len() != k * pos.len() {
        return Err(Error::Validation(format!(
            "expected {} negatives for {} positives, got {}",
            k * pos.len(),
            pos.len(),
            neg.len()
        )));
    }
    let mut d_pos = vec![0.0; pos.len()];
    let mut d_neg = vec![0.0; neg.len()];
    let mut value = 0.0;
    match cfg.kind {
        LossKind::Marginal => {
            for (i, &p) in pos.iter().enumerate() {
                for j in i * k..(i + 1) * k {
                    let v = cfg.margin + p - neg[j];
                    if v > 0.0 {
                        value += v;
                        d_pos[i] += 1.0;
                        d_neg[j] -= 1.0;
                    }
                }
            }
        }
        LossKind::Logistic => {
            for (i, &p) in pos.iter().enumerate() {
                value += softplus(p);
                d_pos[i] = sigmoid(p);
            }
            for (j, &n) in neg.iter().enumerate() {
                value += softplus(-n);
                d_neg[j] = -sigmoid(-n);
            }
        }
        LossKind::Limit => {
            for (i, &p) in pos.iter().enumerate() {
                if p > cfg.limit_pos {
                    value += p - cfg.limit_pos;
                    d_pos[i] = 1.0;
                }
            }
            for (j, &n) in neg.iter().enumerate() {
                if n < cfg.limit_neg {
                    value += cfg.limit_balance * (cfg.limit_neg - n);
                    d_neg[j] = -cfg.limit_balance;
                }
            }
        }
    }
    Ok(EnergyLoss { value, d_pos, d_neg })
}

/// A relation triple over embedding-table rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RowTriple {
    pub head: usize,
    pub relation: usize,
    pub tail: usize,
}

/// Translational triple loss over table rows, with gradients for the
/// entity and relation tables.
pub fn triple_loss(
    positives: &[RowTriple],
    negatives: &[RowTriple],
    cfg: &LossConfig,
    space: &EmbeddingSpace,
    norm: Norm,
) -> Result<(f64, Gradients)> {
    let energies = |ts: &[RowTriple]| -> Result<Vec<(f64, Vec<f64>)>> {
        ts.iter()
            .map(|t| {
                transe_energy_grad(
                    space.entities.row(t.head),
                    space.relations.row(t.relation),
                    space.entities.row(t.tail),
                    norm,
                )
            })
            .collect()
    };
    let pos = energies(positives)?;
    let neg = energies(negatives)?;
    let pos_e: Vec<f64> = pos.iter().map(|p| p.0).collect();
    let neg_e: Vec<f64> = neg.iter().map(|p| p.0).collect();
    let loss = energy_loss(cfg, &pos_e, &neg_e)?;

    let mut grads = Gradients::default();
    for (set, coeffs, triples) in [(&pos, &loss.d_pos, positives), (&neg, &loss.d_neg, negatives)] {
        for ((_, g), (&c, t)) in set.iter().zip(coeffs.iter().zip(triples)) {
            if c == 0.0 {
                continue;
            }
            grads.entity.add(t.head, c, g);
            grads.relation.add(t.relation, c, g);
            grads.entity.add(t.tail, -c, g);
        }
    }
    Ok((loss.value, grads))
}

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::grad::SparseGrad;
use super::EmbeddingSpace;
use crate::error::{Error, Result};

/// Row of the shared unknown-character vector.
pub const UNKNOWN_CHAR: usize = 0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CharOp {
    Sum,
    #[default]
    Mean,
}

/// Character vocabulary over `literals`, rows starting at 1.
pub fn char_vocabulary<'a>(literals: impl IntoIterator<Item = &'a str>) -> BTreeMap<char, usize> {
    let mut chars: Vec<char> = literals.into_iter().flat_map(str::chars).collect();
    chars.sort_unstable();
    chars.dedup();
    chars.into_iter().enumerate().map(|(i, c)| (c, i + 1)).collect()
}

/// Encodes literals from the space's character table.
#[derive(Clone, Debug, Default)]
pub struct LiteralEncoder {
    pub op: CharOp,
    /// Empty literals encountered; they encode to the zero vector.
    pub empty_literals: usize,
}

impl LiteralEncoder {
    pub fn new(op: CharOp) -> Self {
        Self { op, empty_literals: 0 }
    }

    fn rows(value: &str, space: &EmbeddingSpace) -> Vec<usize> {
        value
            .chars()
            .map(|c| space.char_index.get(&c).copied().unwrap_or(UNKNOWN_CHAR))
            .collect()
    }

    pub fn encode(&mut self, value: &str, space: &EmbeddingSpace) -> Result<Vec<f64>> {
        let table = space
            .chars
            .as_ref()
            .ok_or_else(|| Error::Validation("embedding space has no character table".into()))?;
        let rows = Self::rows(value, space);
        let mut v = vec![0.0; table.dim()];
        if rows.is_empty() {
            self.empty_literals += 1;
            return Ok(v);
        }
        for &r in &rows {
            for (a, x) in v.iter_mut().zip(table.row(r)) {
                *a += x;
            }
        }
        if self.op == CharOp::Mean {
            let n = rows.len() as f64;
            v.iter_mut().for_each(|a| *a /= n);
        }
        Ok(v)
    }

    /// Pushes `scale * g`, a gradient with respect to the encoded vector,
    /// back onto the character rows.
    pub fn backprop(&self, value: &str, space: &EmbeddingSpace, scale: f64, g: &[f64], out: &mut SparseGrad) {
        let rows = Self::rows(value, space);
        if rows.is_empty() {
            return;
        }
        let s = match self.op {
            CharOp::Sum => scale,
            CharOp::Mean => scale / rows.len() as f64,
        };
        for r in rows {
            out.add(r, s, g);
        }
    }
}

use std::collections::BTreeMap;

/// Gradient rows keyed by table row, accumulated in deterministic order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseGrad {
    pub rows: BTreeMap<usize, Vec<f64>>,
}

impl SparseGrad {
    pub fn add(&mut self, row: usize, scale: f64, g: &[f64]) {
        let acc = self.rows.entry(row).or_insert_with(|| vec![0.0; g.len()]);
        for (a, x) in acc.iter_mut().zip(g) {
            *a += scale * x;
        }
    }

    pub fn get(&self, row: usize) -> Option<&[f64]> {
        self.rows.get(&row).map(Vec::as_slice)
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn merge(&mut self, other: SparseGrad) {
        for (r, g) in other.rows {
            self.add(r, 1.0, &g);
        }
    }
}

/// Gradients for every parameter table of an [`super::EmbeddingSpace`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Gradients {
    pub entity: SparseGrad,
    pub relation: SparseGrad,
    pub attribute: SparseGrad,
    pub chars: SparseGrad,
    pub transform: Option<Vec<f64>>,
}

impl Gradients {
    pub fn merge(&mut self, other: Gradients) {
        self.entity.merge(other.entity);
        self.relation.merge(other.relation);
        self.attribute.merge(other.attribute);
        self.chars.merge(other.chars);
        if let Some(t) = other.transform {
            self.add_transform(1.0, &t);
        }
    }

    pub fn add_transform(&mut self, scale: f64, g: &[f64]) {
        let acc = self.transform.get_or_insert_with(|| vec![0.0; g.len()]);
        for (a, x) in acc.iter_mut().zip(g) {
            *a += scale * x;
        }
    }
}

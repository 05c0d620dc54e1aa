use super::config::OptimizerKind;
use crate::embedding::{EmbeddingSpace, Gradients, SparseGrad, Table};

const ADAGRAD_EPS: f64 = 1e-8;

/// Per-parameter step sizes for every table of a space.
#[derive(Clone, Debug)]
pub struct Optimizer {
    kind: OptimizerKind,
    rate: f64,
    entity: Vec<f64>,
    relation: Vec<f64>,
    attribute: Vec<f64>,
    chars: Vec<f64>,
    transform: Vec<f64>,
    dense: Vec<Vec<f64>>,
}

fn step(kind: OptimizerKind, rate: f64, param: &mut [f64], acc: &mut [f64], g: &[f64]) {
    match kind {
        OptimizerKind::Sgd => {
            for (p, x) in param.iter_mut().zip(g) {
                *p -= rate * x;
            }
        }
        OptimizerKind::AdaGrad => {
            for ((p, a), x) in param.iter_mut().zip(acc.iter_mut()).zip(g) {
                *a += x * x;
                *p -= rate * x / (a.sqrt() + ADAGRAD_EPS);
            }
        }
    }
}

fn apply_rows(kind: OptimizerKind, rate: f64, table: &mut Table, acc: &mut Vec<f64>, grad: &SparseGrad) {
    let dim = table.dim();
    if acc.len() != table.as_slice().len() {
        acc.resize(table.as_slice().len(), 0.0);
    }
    for (&r, g) in &grad.rows {
        step(kind, rate, table.row_mut(r), &mut acc[r * dim..(r + 1) * dim], g);
    }
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, rate: f64) -> Self {
        Self {
            kind,
            rate,
            entity: Vec::new(),
            relation: Vec::new(),
            attribute: Vec::new(),
            chars: Vec::new(),
            transform: Vec::new(),
            dense: Vec::new(),
        }
    }

    /// Applies one update. Touched entity rows are re-projected onto the
    /// unit sphere when the space is normalized.
    pub fn apply(&mut self, space: &mut EmbeddingSpace, grads: &Gradients) {
        let (kind, rate) = (self.kind, self.rate);
        apply_rows(kind, rate, &mut space.entities, &mut self.entity, &grads.entity);
        apply_rows(kind, rate, &mut space.relations, &mut self.relation, &grads.relation);
        if let Some(t) = space.attributes.as_mut() {
            apply_rows(kind, rate, t, &mut self.attribute, &grads.attribute);
        }
        if let Some(t) = space.chars.as_mut() {
            apply_rows(kind, rate, t, &mut self.chars, &grads.chars);
        }
        if let (Some(m), Some(g)) = (space.transform.as_mut(), grads.transform.as_ref()) {
            if self.transform.len() != m.len() {
                self.transform = vec![0.0; m.len()];
            }
            step(kind, rate, m, &mut self.transform, g);
        }
        if space.normalized {
            for &r in grads.entity.rows.keys() {
                space.entities.normalize_row(r);
            }
            debug_assert!(grads
                .entity
                .rows
                .keys()
                .all(|&r| (crate::embedding::l2(space.entities.row(r)) - 1.0).abs() < 1e-6));
        }
    }

    /// Updates an extra dense parameter block identified by `slot`.
    pub fn apply_dense(&mut self, slot: usize, param: &mut [f64], grad: &[f64]) {
        if self.dense.len() <= slot {
            self.dense.resize(slot + 1, Vec::new());
        }
        if self.dense[slot].len() != param.len() {
            self.dense[slot] = vec![0.0; param.len()];
        }
        step(self.kind, self.rate, param, &mut self.dense[slot], grad);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::Index;

    fn space() -> EmbeddingSpace {
        let mut s = EmbeddingSpace::new(
            2,
            Table::from_vec(2, vec![1.0, 0.0, 0.0, 1.0]).unwrap(),
            [Index::new(), Index::new()],
            Table::zeros(1, 2),
            [Index::new(), Index::new()],
        );
        s.normalized = true;
        s
    }

    #[test]
    fn sgd_step_and_projection() {
        let mut s = space();
        let mut g = Gradients::default();
        g.entity.add(0, 1.0, &[0.0, -1.0]);
        g.relation.add(0, 1.0, &[1.0, 1.0]);
        Optimizer::new(OptimizerKind::Sgd, 1.0).apply(&mut s, &g);
        let r = s.entities.row(0);
        assert!((r[0] - 0.5f64.sqrt()).abs() < 1e-12 && (r[1] - 0.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(s.entities.row(1), &[0.0, 1.0]);
        assert_eq!(s.relations.row(0), &[-1.0, -1.0]);
    }

    #[test]
    fn adagrad_first_step_has_unit_size() {
        let mut s = space();
        s.normalized = false;
        let mut g = Gradients::default();
        g.entity.add(1, 1.0, &[0.0, 4.0]);
        let mut opt = Optimizer::new(OptimizerKind::AdaGrad, 0.1);
        opt.apply(&mut s, &g);
        assert!((s.entities.row(1)[1] - 0.9).abs() < 1e-6);
        // The second identical step is smaller by sqrt(2).
        opt.apply(&mut s, &g);
        assert!((s.entities.row(1)[1] - (0.9 - 0.1 / 2f64.sqrt())).abs() < 1e-6);
    }
}

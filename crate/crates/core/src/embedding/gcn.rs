use ndarray::{Array2, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::KnowledgeGraph;

/// Number of layers used when none is configured.
pub const DEFAULT_DEPTH: usize = 2;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Identity,
    Tanh,
    Relu,
}

impl Activation {
    fn apply(self, z: &Array2<f64>) -> Array2<f64> {
        match self {
            Activation::Identity => z.clone(),
            Activation::Tanh => z.mapv(f64::tanh),
            Activation::Relu => z.mapv(|x| x.max(0.0)),
        }
    }

    fn derivative(self, z: &Array2<f64>) -> Array2<f64> {
        match self {
            Activation::Identity => Array2::ones(z.raw_dim()),
            Activation::Tanh => z.mapv(|x| 1.0 - x.tanh().powi(2)),
            Activation::Relu => z.mapv(|x| if x > 0.0 { 1.0 } else { 0.0 }),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GcnLayer {
    pub weight: Array2<f64>,
    pub activation: Activation,
}

impl GcnLayer {
    /// Glorot-uniform weights.
    pub fn glorot(d_in: usize, d_out: usize, activation: Activation, rng: &mut impl Rng) -> Self {
        let bound = (6.0 / (d_in + d_out) as f64).sqrt();
        let weight = Array2::from_shape_fn((d_in, d_out), |_| rng.random_range(-bound..bound));
        Self { weight, activation }
    }

    pub fn identity(d: usize, activation: Activation) -> Self {
        Self {
            weight: Array2::eye(d),
            activation,
        }
    }
}

/// `D^-1/2 (A + I) D^-1/2` over an undirected simple graph, stored by row.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedAdjacency {
    rows: Vec<Vec<(usize, f64)>>,
}

impl NormalizedAdjacency {
    /// `neighbors[i]` lists the neighbours of node `i`, without `i` itself.
    pub fn from_neighbors(neighbors: &[Vec<usize>]) -> Self {
        let deg: Vec<f64> = neighbors.iter().map(|n| n.len() as f64 + 1.0).collect();
        let rows = neighbors
            .iter()
            .enumerate()
            .map(|(i, ns)| {
                let mut row: Vec<(usize, f64)> = ns
                    .iter()
                    .filter(|&&j| j != i)
                    .map(|&j| (j, 1.0 / (deg[i] * deg[j]).sqrt()))
                    .collect();
                row.push((i, 1.0 / deg[i]));
                row.sort_by_key(|&(j, _)| j);
                row
            })
            .collect();
        Self { rows }
    }

    pub fn from_kg(kg: &KnowledgeGraph) -> Self {
        Self::from_neighbors(&kg.undirected_neighbors())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let n = self.rows.len();
        let mut m = Array2::zeros((n, n));
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                m[[i, j]] = w;
            }
        }
        m
    }

    /// Left-multiplies `x` by the normalized adjacency.
    pub fn apply(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros(x.raw_dim());
        for (i, row) in self.rows.iter().enumerate() {
            let mut target = out.row_mut(i);
            for &(j, w) in row {
                target.scaled_add(w, &x.row(j));
            }
        }
        out
    }
}

/// Intermediate values kept for the backward pass.
#[derive(Clone, Debug)]
pub struct GcnCache {
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
}

fn check_chain(adj: &NormalizedAdjacency, h0: &Array2<f64>, layers: &[GcnLayer]) -> Result<()> {
    if h0.nrows() != adj.len() {
        return Err(Error::DimensionMismatch {
            expected: adj.len(),
            actual: h0.nrows(),
        });
    }
    let mut width = h0.ncols();
    for l in layers {
        if l.weight.nrows() != width {
            return Err(Error::DimensionMismatch {
                expected: width,
                actual: l.weight.nrows(),
            });
        }
        width = l.weight.ncols();
    }
    Ok(())
}

pub fn gcn_forward(adj: &NormalizedAdjacency, h0: &Array2<f64>, layers: &[GcnLayer]) -> Result<Array2<f64>> {
    Ok(gcn_forward_cached(adj, h0, layers)?.0)
}

pub fn gcn_forward_cached(
    adj: &NormalizedAdjacency,
    h0: &Array2<f64>,
    layers: &[GcnLayer],
) -> Result<(Array2<f64>, GcnCache)> {
    check_chain(adj, h0, layers)?;
    let mut cache = GcnCache {
        inputs: Vec::with_capacity(layers.len()),
        pre: Vec::with_capacity(layers.len()),
    };
    let mut h = h0.clone();
    for l in layers {
        let z = adj.apply(&h.dot(&l.weight));
        let next = l.activation.apply(&z);
        cache.inputs.push(h);
        cache.pre.push(z);
        h = next;
    }
    Ok((h, cache))
}

/// Gradients of a scalar objective with respect to every weight and the
/// input features, given its gradient `d_out` with respect to the output.
pub fn gcn_backward(
    adj: &NormalizedAdjacency,
    layers: &[GcnLayer],
    cache: &GcnCache,
    d_out: &Array2<f64>,
) -> (Vec<Array2<f64>>, Array2<f64>) {
    let mut d_weights = vec![Array2::zeros((0, 0)); layers.len()];
    let mut d_h = d_out.clone();
    for (i, l) in layers.iter().enumerate().rev() {
        let mut d_z = l.activation.derivative(&cache.pre[i]);
        Zip::from(&mut d_z).and(&d_h).for_each(|a, &b| *a *= b);
        // The normalized adjacency is symmetric.
        let d_y = adj.apply(&d_z);
        d_weights[i] = cache.inputs[i].t().dot(&d_y);
        d_h = d_y.dot(&l.weight.t());
    }
    (d_weights, d_h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::testing::{central_diff, rel_err};
    use crate::rng;

    fn random_graph(n: usize, p: f64, rng: &mut impl Rng) -> Vec<Vec<usize>> {
        let mut nb = vec![Vec::new(); n];
        for i in 0..n {
            for j in i + 1..n {
                if rng.random::<f64>() < p {
                    nb[i].push(j);
                    nb[j].push(i);
                }
            }
        }
        nb
    }

    fn random_matrix(r: usize, c: usize, rng: &mut impl Rng) -> Array2<f64> {
        Array2::from_shape_fn((r, c), |_| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn no_edges_identity_weights() {
        let adj = NormalizedAdjacency::from_neighbors(&vec![Vec::new(); 3]);
        let h0 = random_matrix(3, 4, &mut rng::seeded(0));
        let out = gcn_forward(&adj, &h0, &[GcnLayer::identity(4, Activation::Identity)]).unwrap();
        assert_eq!(out, h0);
    }

    #[test]
    fn single_edge_halves() {
        let adj = NormalizedAdjacency::from_neighbors(&[vec![1], vec![0]]);
        let out = gcn_forward(&adj, &Array2::eye(2), &[GcnLayer::identity(2, Activation::Identity)]).unwrap();
        for v in out.iter() {
            assert!((v - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn dimension_errors() {
        let adj = NormalizedAdjacency::from_neighbors(&[vec![1], vec![0]]);
        let mut r = rng::seeded(1);
        assert!(gcn_forward(&adj, &random_matrix(3, 2, &mut r), &[]).is_err());
        let layers = [
            GcnLayer::glorot(2, 3, Activation::Tanh, &mut r),
            GcnLayer::glorot(4, 2, Activation::Tanh, &mut r),
        ];
        assert!(gcn_forward(&adj, &random_matrix(2, 2, &mut r), &layers).is_err());
    }

    fn dense_oracle(nb: &[Vec<usize>], h0: &Array2<f64>, layers: &[GcnLayer]) -> Array2<f64> {
        let n = nb.len();
        let mut a = Array2::<f64>::eye(n);
        for (i, ns) in nb.iter().enumerate() {
            for &j in ns {
                a[[i, j]] = 1.0;
            }
        }
        let d: Vec<f64> = (0..n).map(|i| a.row(i).sum()).collect();
        let norm = Array2::from_shape_fn((n, n), |(i, j)| a[[i, j]] / (d[i] * d[j]).sqrt());
        let mut h = h0.clone();
        for l in layers {
            h = l.activation.apply(&norm.dot(&h).dot(&l.weight));
        }
        h
    }

    #[test]
    fn matches_dense_oracle() {
        let mut r = rng::seeded(2);
        for _ in 0..10 {
            let nb = random_graph(6, 0.4, &mut r);
            let h0 = random_matrix(6, 4, &mut r);
            let layers = [
                GcnLayer::glorot(4, 5, Activation::Tanh, &mut r),
                GcnLayer::glorot(5, 3, Activation::Relu, &mut r),
            ];
            let got = gcn_forward(&NormalizedAdjacency::from_neighbors(&nb), &h0, &layers).unwrap();
            let want = dense_oracle(&nb, &h0, &layers);
            for (a, b) in got.iter().zip(want.iter()) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn permutation_equivariant() {
        let mut r = rng::seeded(3);
        let nb = random_graph(7, 0.4, &mut r);
        let perm = [3, 0, 6, 1, 5, 2, 4];
        let mut pnb = vec![Vec::new(); 7];
        for (i, ns) in nb.iter().enumerate() {
            pnb[perm[i]] = ns.iter().map(|&j| perm[j]).collect();
        }
        let h0 = random_matrix(7, 3, &mut r);
        let mut ph0 = Array2::zeros((7, 3));
        for i in 0..7 {
            ph0.row_mut(perm[i]).assign(&h0.row(i));
        }
        let layers = [GcnLayer::glorot(3, 3, Activation::Tanh, &mut r), GcnLayer::glorot(3, 2, Activation::Identity, &mut r)];
        let a = gcn_forward(&NormalizedAdjacency::from_neighbors(&nb), &h0, &layers).unwrap();
        let b = gcn_forward(&NormalizedAdjacency::from_neighbors(&pnb), &ph0, &layers).unwrap();
        for i in 0..7 {
            for k in 0..2 {
                assert!((a[[i, k]] - b[[perm[i], k]]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut r = rng::seeded(4);
        let nb = random_graph(5, 0.5, &mut r);
        let adj = NormalizedAdjacency::from_neighbors(&nb);
        let h0 = random_matrix(5, 5, &mut r);
        let layers = vec![
            GcnLayer::glorot(5, 5, Activation::Tanh, &mut r),
            GcnLayer::glorot(5, 5, Activation::Identity, &mut r),
        ];
        let probe = random_matrix(5, 5, &mut r);
        let objective = |h0: &Array2<f64>, layers: &[GcnLayer]| -> f64 {
            (gcn_forward(&adj, h0, layers).unwrap() * &probe).sum()
        };
        let (_, cache) = gcn_forward_cached(&adj, &h0, &layers).unwrap();
        let (dw, dh) = gcn_backward(&adj, &layers, &cache, &probe);

        let fd_h = central_diff(h0.as_slice().unwrap(), |x| {
            objective(&Array2::from_shape_vec((5, 5), x.to_vec()).unwrap(), &layers)
        });
        assert!(rel_err(dh.as_slice().unwrap(), &fd_h) < 1e-4);
        for i in 0..layers.len() {
            let fd_w = central_diff(layers[i].weight.as_slice().unwrap(), |x| {
                let mut ls = layers.clone();
                ls[i].weight = Array2::from_shape_vec((5, 5), x.to_vec()).unwrap();
                objective(&h0, &ls)
            });
            assert!(rel_err(dw[i].as_slice().unwrap(), &fd_w) < 1e-4);
        }
    }
}

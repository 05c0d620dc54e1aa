//! Finite-difference helpers shared by gradient tests.

use rand::Rng;

pub(crate) const STEP: f64 = 1e-5;

/// Central-difference gradient of `f` at `x`.
pub(crate) fn central_diff(x: &[f64], f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + STEP;
            let hi = f(&probe);
            probe[i] = x[i] - STEP;
            let lo = f(&probe);
            probe[i] = x[i];
            (hi - lo) / (2.0 * STEP)
        })
        .collect()
}

/// `||a - b|| / max(||a||, ||b||)`, zero when both vanish.
pub(crate) fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = super::l2(a).max(super::l2(b));
    if scale < 1e-12 {
        diff
    } else {
        diff / scale
    }
}

pub(crate) fn rand_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

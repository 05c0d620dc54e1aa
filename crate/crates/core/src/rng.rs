//! Seeded random streams and weighted sampling helpers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type KgRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> KgRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` of the generator seeded by `seed`.
pub fn stream(seed: u64, stream: u64) -> KgRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Random order of `0..weights.len()` distributed as successive weighted
/// draws without replacement (Efraimidis-Spirakis keys). Items with a
/// non-positive or non-finite weight are placed last in index order.
pub fn weighted_order<R: Rng + ?Sized>(rng: &mut R, weights: &[f64]) -> Vec<usize> {
    let mut keyed: Vec<(f64, usize)> = weights
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let u: f64 = rng.random::<f64>();
            // ln(u) / w is a monotone transform of u^(1/w) that does not underflow.
            let key = if w > 0.0 && w.is_finite() {
                u.max(f64::MIN_POSITIVE).ln() / w
            } else {
                f64::NEG_INFINITY
            };
            (key, i)
        })
        .collect();
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    keyed.into_iter().map(|(_, i)| i).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weighted_order_is_a_permutation() {
        let mut rng = seeded(3);
        let mut order = weighted_order(&mut rng, &[1.0, 0.0, 5.0, 2.0]);
        assert_eq!(order[3], 1);
        order.sort_unstable();
        assert_eq!(order, vec![0, 1, 2, 3]);
    }

    #[test]
    fn heavier_items_come_first_more_often() {
        let mut rng = seeded(11);
        let mut first_heavy = 0;
        for _ in 0..2000 {
            if weighted_order(&mut rng, &[1.0, 9.0])[0] == 1 {
                first_heavy += 1;
            }
        }
        // P(first = heavy) = 0.9
        assert!((first_heavy as f64 / 2000.0 - 0.9).abs() < 0.03, "{first_heavy}");
    }

    #[test]
    fn streams_differ() {
        let a: u64 = stream(1, 0).random();
        let b: u64 = stream(1, 1).random();
        assert_ne!(a, b);
    }
}

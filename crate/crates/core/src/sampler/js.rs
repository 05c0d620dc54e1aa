use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::kg::DegreeDistribution;

const NORMALIZATION_TOL: f64 = 1e-9;

/// Jensen-Shannon divergence between two degree distributions, base-2
/// logarithm, so the value lies in `[0, 1]`.
pub fn js_divergence(q: &DegreeDistribution, p: &DegreeDistribution) -> Result<f64> {
    for (name, d) in [("q", q), ("p", p)] {
        if !d.is_normalized(NORMALIZATION_TOL) {
            return Err(Error::Validation(format!(
                "distribution {name} is not normalised (total {})",
                d.total()
            )));
        }
    }
    let support: BTreeSet<usize> = q.iter().chain(p.iter()).map(|(x, _)| x).collect();
    let term = |a: f64, m: f64| if a > 0.0 { a * (a / m).log2() } else { 0.0 };
    let sum: f64 = support
        .into_iter()
        .map(|x| {
            let (qx, px) = (q.get(x), p.get(x));
            let m = 0.5 * (qx + px);
            term(qx, m) + term(px, m)
        })
        .sum();
    Ok((0.5 * sum).clamp(0.0, 1.0))
}

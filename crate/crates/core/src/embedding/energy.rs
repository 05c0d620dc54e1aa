use serde::{Deserialize, Serialize};

use super::space::check_dims;
use crate::error::Result;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L1,
    #[default]
    L2,
}

impl Norm {
    pub fn of(self, v: &[f64]) -> f64 {
        match self {
            Norm::L1 => v.iter().map(|x| x.abs()).sum(),
            Norm::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
        }
    }

    /// Value and (sub)gradient of the norm at `v`; zero where undefined.
    pub fn with_grad(self, v: &[f64]) -> (f64, Vec<f64>) {
        let value = self.of(v);
        let grad = match self {
            Norm::L1 => v.iter().map(|&x| if x == 0.0 { 0.0 } else { x.signum() }).collect(),
            Norm::L2 if value > 0.0 => v.iter().map(|x| x / value).collect(),
            Norm::L2 => vec![0.0; v.len()],
        };
        (value, grad)
    }
}

/// Translational energy `||h + r - t||`.
pub fn transe_energy(h: &[f64], r: &[f64], t: &[f64], norm: Norm) -> Result<f64> {
    Ok(transe_energy_grad(h, r, t, norm)?.0)
}

/// Energy and its gradient with respect to `h`. The gradient with respect
/// to `r` is identical and with respect to `t` it is negated.
pub fn transe_energy_grad(h: &[f64], r: &[f64], t: &[f64], norm: Norm) -> Result<(f64, Vec<f64>)> {
    check_dims(h, r)?;
    check_dims(h, t)?;
    let residual: Vec<f64> = h.iter().zip(r).zip(t).map(|((a, b), c)| a + b - c).collect();
    Ok(norm.with_grad(&residual))
}

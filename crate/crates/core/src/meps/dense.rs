//! Reference solver over individual levels.
//!
//! Enumerates every pair `(k, l)` of level counts with plain prefix sums and
//! explicit populations. Quadratic in the dimension; it exists to check the
//! shell-aggregated solver on expanded spectra.

use crate::error::{Error, Result};
use crate::numeric::neg_x_ln_x;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensePair {
    pub entropy: f64,
    pub k: usize,
    pub l: usize,
    pub lambda: f64,
}

/// Minimum entropy at `energy` over mixtures of flat states on sorted `levels`.
pub fn min_entropy_dense(levels: &[f64], energy: f64) -> Result<DensePair> {
    let d = levels.len();
    if d == 0 {
        return Err(Error::InvalidParameter("no levels".into()));
    }
    if levels.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("levels must be sorted".into()));
    }
    let mut flat = Vec::with_capacity(d + 1);
    flat.push(f64::NAN);
    let mut sum = 0.0;
    for (i, e) in levels.iter().enumerate() {
        sum += e;
        flat.push(sum / (i + 1) as f64);
    }
    let slack = 1e-12 * (flat[d] - levels[0]).abs().max(1.0);
    if energy < levels[0] - slack || energy > flat[d] + slack {
        return Err(Error::EnergyOutOfRange {
            energy,
            min: levels[0],
            max: flat[d],
        });
    }
    let energy = energy.clamp(levels[0], flat[d]);

    let mut best: Option<DensePair> = None;
    for k in 1..=d {
        if flat[k] > energy {
            break;
        }
        for l in k..=d {
            if flat[l] < energy {
                continue;
            }
            let lambda = if flat[l] > flat[k] {
                (flat[l] - energy) / (flat[l] - flat[k])
            } else {
                1.0
            };
            let q2 = (1.0 - lambda) / l as f64;
            let q1 = lambda / k as f64 + q2;
            let s = k as f64 * neg_x_ln_x(q1) + (l - k) as f64 * neg_x_ln_x(q2);
            if best.is_none_or(|b| s < b.entropy) {
                best = Some(DensePair {
                    entropy: s,
                    k,
                    l,
                    lambda,
                });
            }
        }
    }
    best.ok_or(Error::EnergyOutOfRange {
        energy,
        min: levels[0],
        max: flat[d],
    })
}

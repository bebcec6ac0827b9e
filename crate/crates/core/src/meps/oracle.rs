//! Brute-force minimum entropy over the passive simplex, for small spectra.
//!
//! Passive states are `sum_k q_k omega_k` with `q` on the simplex. Grid points
//! of `q` are pushed onto the energy constraint by mixing with the ground or
//! the uniform state, and the best ones are then improved by exchange moves
//! along directions that preserve normalization and energy. Nothing here
//! assumes the two-block form of the optimum.

use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, neg_x_ln_x};
use crate::spectrum::Spectrum;

pub const MAX_ORACLE_DIMENSION: usize = 6;
const MAX_GRID_POINTS: f64 = 200_000.0;
const REFINE_STARTS: usize = 32;
const MAX_MOVES: usize = 10_000;

struct Simplex {
    flat: Vec<f64>,
    energy: f64,
}

impl Simplex {
    fn entropy(&self, q: &[f64]) -> f64 {
        let d = q.len();
        let mut tail = 0.0;
        let mut s = Vec::with_capacity(d);
        for i in (0..d).rev() {
            tail += q[i] / (i + 1) as f64;
            s.push(neg_x_ln_x(tail));
        }
        compensated_sum(s)
    }

    fn energy_of(&self, q: &[f64]) -> f64 {
        compensated_sum(q.iter().zip(&self.flat).map(|(a, f)| a * f))
    }

    /// Mixes `q` with the ground or the uniform flat state onto the target.
    fn project(&self, q: &mut [f64]) {
        let d = q.len();
        let e = self.energy_of(q);
        let (target, fe) = if e < self.energy {
            (d - 1, self.flat[d - 1])
        } else if e > self.energy {
            (0, self.flat[0])
        } else {
            return;
        };
        let t = ((self.energy - e) / (fe - e)).clamp(0.0, 1.0);
        q.iter_mut().for_each(|x| *x *= 1.0 - t);
        q[target] += t;
    }

    /// Exchange moves on coordinate triples (and equal-energy pairs) until no
    /// endpoint of any move lowers the entropy.
    fn descend(&self, q: &mut [f64]) -> f64 {
        let d = q.len();
        let f = &self.flat;
        let mut current = self.entropy(q);
        let mut directions: Vec<Vec<(usize, f64)>> = Vec::new();
        for i in 0..d {
            for j in i + 1..d {
                if f[i] == f[j] {
                    directions.push(vec![(i, 1.0), (j, -1.0)]);
                }
                for k in j + 1..d {
                    let v = [(i, f[j] - f[k]), (j, f[k] - f[i]), (k, f[i] - f[j])];
                    if v.iter().any(|(_, c)| *c != 0.0) {
                        directions.push(v.to_vec());
                    }
                }
            }
        }
        for _ in 0..MAX_MOVES {
            let mut improved = false;
            for dir in &directions {
                // Step range keeping every coordinate nonnegative.
                let mut s_max = f64::INFINITY;
                let mut s_min = f64::NEG_INFINITY;
                for &(idx, c) in dir {
                    if c > 0.0 {
                        s_min = s_min.max(-q[idx] / c);
                    } else if c < 0.0 {
                        s_max = s_max.min(-q[idx] / c);
                    }
                }
                for step in [s_min, s_max] {
                    if !step.is_finite() || step == 0.0 {
                        continue;
                    }
                    let mut trial = q.to_vec();
                    for &(idx, c) in dir {
                        trial[idx] = (trial[idx] + step * c).max(0.0);
                    }
                    let s = self.entropy(&trial);
                    if s < current - 1e-15 {
                        q.copy_from_slice(&trial);
                        current = s;
                        improved = true;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        current
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn for_each_composition(total: usize, parts: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(rest: usize, idx: usize, buf: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if idx + 1 == buf.len() {
            buf[idx] = rest;
            f(buf);
            return;
        }
        for v in 0..=rest {
            buf[idx] = v;
            rec(rest - v, idx + 1, buf, f);
        }
    }
    let mut buf = vec![0; parts];
    rec(total, 0, &mut buf, f);
}

/// Minimum entropy at `energy` over all passive states of a spectrum with at
/// most six levels, on a simplex grid of step `resolution` (coarsened if the
/// grid would be too large) followed by local refinement.
pub fn brute_force_min_entropy(spec: &Spectrum, energy: f64, resolution: f64) -> Result<f64> {
    let levels = spec.levels()?;
    let d = levels.len();
    if !(2..=MAX_ORACLE_DIMENSION).contains(&d) {
        return Err(Error::NotDense(format!(
            "oracle needs 2..={MAX_ORACLE_DIMENSION} levels, got {d}"
        )));
    }
    if !(resolution > 0.0 && resolution <= 1.0) {
        return Err(Error::InvalidParameter(format!("resolution {resolution}")));
    }
    let mut flat = Vec::with_capacity(d);
    let mut sum = 0.0;
    for (i, e) in levels.iter().enumerate() {
        sum += e;
        flat.push(sum / (i + 1) as f64);
    }
    let (min, max) = (flat[0], flat[d - 1]);
    let slack = 1e-12 * (max - min).max(1.0);
    if energy < min - slack || energy > max + slack {
        return Err(Error::EnergyOutOfRange { energy, min, max });
    }
    let problem = Simplex {
        flat,
        energy: energy.clamp(min, max),
    };

    let mut steps = (1.0 / resolution).ceil() as usize;
    while steps > 1 && binomial(steps + d - 1, d - 1) > MAX_GRID_POINTS {
        steps = (steps as f64 * 0.9) as usize;
    }

    let mut starts: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut q = vec![0.0; d];
    for_each_composition(steps, d, &mut |c| {
        for (x, &n) in q.iter_mut().zip(c) {
            *x = n as f64 / steps as f64;
        }
        problem.project(&mut q);
        let s = problem.entropy(&q);
        if starts.len() < REFINE_STARTS || s < starts[starts.len() - 1].0 {
            starts.push((s, q.clone()));
            starts.sort_by(|a, b| a.0.total_cmp(&b.0));
            starts.truncate(REFINE_STARTS);
        }
    });

    Ok(starts
        .into_iter()
        .map(|(_, mut q)| problem.descend(&mut q))
        .fold(f64::INFINITY, f64::min))
}

//! Most energetic passive states.
//!
//! Passive states are convex mixtures of flat states, and entropy is concave,
//! so the minimum entropy at fixed energy sits on a vertex of the energy
//! slice: a mixture of two flat states straddling the target energy. The
//! maximum energy at fixed entropy follows by bisection, since the minimum
//! entropy is nondecreasing in energy.
//!
//! With degenerate shells any number of levels inside a shell is a valid cut,
//! so the vertex set is searched shell pair by shell pair (see `solver`).

pub mod dense;
pub mod oracle;
mod solver;

use crate::error::{Error, Result};
use crate::numeric::bisect_predicate;
use crate::spectrum::{CutPoint, Spectrum};
use crate::states::{DiagonalState, TwoBlockState};

use solver::{Candidate, Slice};

/// Relative width at which the entropy-to-energy bisection stops.
pub const BISECTION_REL_WIDTH: f64 = 1e-12;
/// Default entropy tolerance for flagging targets the solver could not meet.
pub const DEFAULT_TOL_S: f64 = 1e-9;

/// The minimum-entropy passive state at one energy.
#[derive(Clone, Debug)]
pub struct MepsSolution {
    pub state: TwoBlockState,
    pub entropy: f64,
    pub energy: f64,
    pub low: CutPoint,
    pub high: CutPoint,
    pub lambda: f64,
}

impl MepsSolution {
    fn from_candidate(spec: &Spectrum, c: Candidate) -> Result<Self> {
        let (mut low, mut high) = (c.low.normalized(), c.high.normalized());
        if c.lambda >= 1.0 {
            high = low;
        } else if c.lambda <= 0.0 {
            low = high;
        }
        let state = TwoBlockState::new(spec, low, high, c.lambda.clamp(0.0, 1.0))?;
        Ok(Self {
            entropy: state.entropy(),
            energy: state.energy(),
            low,
            high,
            lambda: state.lambda(),
            state,
        })
    }

    /// Level counts of the two flat blocks.
    pub fn counts(&self) -> (f64, f64) {
        let spec = self.state.spectrum();
        (spec.cut_count(self.low), spec.cut_count(self.high))
    }
}

fn energy_slack(spec: &Spectrum) -> f64 {
    1e-12 * (spec.mean_energy() - spec.ground_energy()).abs().max(1.0)
}

/// Clamps `energy` into the passive range, or rejects it.
fn excitation_in_range(spec: &Spectrum, energy: f64) -> Result<f64> {
    let (min, max) = (spec.ground_energy(), spec.mean_energy());
    let slack = energy_slack(spec);
    if !(energy >= min - slack && energy <= max + slack) {
        return Err(Error::EnergyOutOfRange { energy, min, max });
    }
    Ok((energy - min).clamp(0.0, max - min))
}

/// Mixing weight on `low` that puts `lambda * omega_low + (1 - lambda) *
/// omega_high` at `energy`. Zero when both flat energies coincide.
pub fn lambda_for_energy(
    spec: &Spectrum,
    low: CutPoint,
    high: CutPoint,
    energy: f64,
) -> Result<f64> {
    let fk = spec.flat_energy(low)?;
    let fl = spec.flat_energy(high)?;
    if low.order_key() > high.order_key() {
        return Err(Error::InvalidCut("low cut lies above high cut".into()));
    }
    let slack = energy_slack(spec);
    if !(energy >= fk - slack && energy <= fl + slack) {
        return Err(Error::EnergyOutOfRange {
            energy,
            min: fk,
            max: fl,
        });
    }
    if fl <= fk {
        return Ok(0.0);
    }
    Ok(((fl - energy) / (fl - fk)).clamp(0.0, 1.0))
}

/// Vertex pairs of the energy slice at shell resolution: every boundary cut
/// strictly below the target paired with every boundary cut strictly above
/// it, plus the flat state lying exactly on the slice when there is one.
///
/// For spectra without degeneracy these are all integer pairs `(k, l)` with
/// `F_k < E < F_l`, plus `(c, c)` when `F_c = E`. Degenerate shells also admit
/// cuts inside a shell; [`meps_at_energy`] searches those continuously.
pub fn feasible_pairs(spec: &Spectrum, energy: f64) -> Result<Vec<(CutPoint, CutPoint)>> {
    let eps = excitation_in_range(spec, energy)?;
    if eps <= 0.0 {
        let g = spec.ground_cut();
        return Ok(vec![(g, g)]);
    }
    if eps >= spec.mean_energy() - spec.ground_energy() {
        let f = spec.full_cut();
        return Ok(vec![(f, f)]);
    }
    let slice = Slice::new(spec, eps);
    let ends = |spans: &[solver::Span]| -> Vec<CutPoint> {
        let mut cuts: Vec<CutPoint> = spans
            .iter()
            .flat_map(|s| {
                let lo = CutPoint::new(s.shell, (s.lo / s.scale).min(1.0)).normalized();
                let hi = CutPoint::new(s.shell, (s.hi / s.scale).min(1.0)).normalized();
                [lo, hi]
            })
            .filter(|c| spec.validate_cut(*c).is_ok())
            .collect();
        cuts.sort_by(|a, b| a.order_key().partial_cmp(&b.order_key()).unwrap());
        cuts.dedup_by(|a, b| a.order_key() == b.order_key());
        cuts
    };
    let lows = ends(&slice.low_spans);
    let highs = ends(&slice.high_spans);
    let plane = slice.on_plane.map(CutPoint::normalized);
    let f = |c: &CutPoint| spec.flat_energy(*c).unwrap_or(f64::NAN);
    let target = spec.ground_energy() + eps;
    let mut pairs = Vec::new();
    for k in lows.iter().filter(|c| f(c) < target && Some(**c) != plane) {
        for l in highs.iter().filter(|c| f(c) > target && Some(**c) != plane) {
            pairs.push((*k, *l));
        }
    }
    if let Some(c) = plane {
        pairs.push((c, c));
    }
    pairs.sort_by(|a, b| {
        (a.0.order_key(), a.1.order_key())
            .partial_cmp(&(b.0.order_key(), b.1.order_key()))
            .unwrap()
    });
    Ok(pairs)
}

/// Minimum-entropy passive state at `energy`.
pub fn meps_at_energy(spec: &Spectrum, energy: f64) -> Result<MepsSolution> {
    let eps = excitation_in_range(spec, energy)?;
    let candidate = if eps <= 0.0 {
        let g = spec.ground_cut();
        Candidate {
            entropy: 0.0,
            low: g,
            high: g,
            lambda: 1.0,
        }
    } else if eps >= spec.mean_energy() - spec.ground_energy() {
        let f = spec.full_cut();
        Candidate {
            entropy: spec.ln_dimension(),
            low: f,
            high: f,
            lambda: 0.0,
        }
    } else {
        Slice::new(spec, eps).solve()
    };
    MepsSolution::from_candidate(spec, candidate)
}

/// Minimum entropy `S*(E)`.
pub fn min_entropy(spec: &Spectrum, energy: f64) -> Result<f64> {
    Ok(meps_at_energy(spec, energy)?.entropy)
}

fn check_entropy(spec: &Spectrum, entropy: f64) -> Result<f64> {
    let max = spec.ln_dimension();
    let slack = 1e-12 * max.max(1.0);
    if !(entropy >= -slack && entropy <= max + slack) {
        return Err(Error::EntropyOutOfRange { entropy, max });
    }
    Ok(entropy.clamp(0.0, max))
}

/// The most energetic passive state with entropy `entropy`: the largest `E`
/// with `S*(E) <= entropy`, found by bisection on `E`.
///
/// The bisection always runs to a relative width of
/// [`BISECTION_REL_WIDTH`]. Where `S*` jumps or is flat the returned entropy
/// can fall short of the target; callers compare the gap against a tolerance
/// such as [`DEFAULT_TOL_S`].
pub fn meps_at_entropy(spec: &Spectrum, entropy: f64) -> Result<MepsSolution> {
    let s = check_entropy(spec, entropy)?;
    let (e0, e1) = (spec.ground_energy(), spec.mean_energy());
    if s >= spec.ln_dimension() {
        return meps_at_energy(spec, e1);
    }
    if s <= 0.0 {
        return meps_at_energy(spec, e0);
    }
    let width = BISECTION_REL_WIDTH * (e1 - e0);
    let pred = |e: f64| meps_at_energy(spec, e).is_ok_and(|sol| sol.entropy <= s);
    let (lo, _) = bisect_predicate(pred, e0, e1, width);
    meps_at_energy(spec, lo)
}

/// One row of a dominance report.
#[derive(Clone, Debug)]
pub struct DominanceRow {
    pub entropy: f64,
    pub energy: f64,
    pub low: CutPoint,
    pub high: CutPoint,
    pub lambda: f64,
    /// Entropy of the ground/full-range mixture at the same energy.
    pub sigma0_entropy: f64,
    /// True when the ground/full-range mixture is itself optimal.
    pub dominant: bool,
}

/// For each entropy, whether the optimum is a mixture of the ground level and
/// the flat state over the whole spectrum.
pub fn sigma0_dominance_check(spec: &Spectrum, entropies: &[f64]) -> Result<Vec<DominanceRow>> {
    entropies
        .iter()
        .map(|&s| {
            let sol = meps_at_entropy(spec, s)?;
            let ground = spec.ground_cut();
            let full = spec.full_cut();
            let lam = lambda_for_energy(spec, ground, full, sol.energy.max(spec.ground_energy()))?;
            let sigma0 = TwoBlockState::new(spec, ground, full, lam)?.entropy();
            let tol = 1e-9 * sol.entropy.abs().max(1.0);
            Ok(DominanceRow {
                entropy: s,
                energy: sol.energy,
                low: sol.low,
                high: sol.high,
                lambda: sol.lambda,
                sigma0_entropy: sigma0,
                dominant: sigma0 <= sol.entropy + tol,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn h(d: usize) -> Spectrum {
        Spectrum::equally_spaced(d, 1.0).unwrap()
    }

    #[test]
    fn lambda_examples() {
        let s = h(4);
        let (k, l) = (CutPoint::shell_end(0), s.full_cut());
        assert_relative_eq!(
            lambda_for_energy(&s, k, l, 0.75).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        assert_eq!(lambda_for_energy(&s, k, l, 1.5).unwrap(), 0.0);
        assert_eq!(lambda_for_energy(&s, k, l, 0.0).unwrap(), 1.0);
        assert!(lambda_for_energy(&s, k, l, 1.6).is_err());
        let same = CutPoint::shell_end(1);
        assert_eq!(lambda_for_energy(&s, same, same, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn feasible_pairs_examples() {
        let s = h(3);
        let pairs = feasible_pairs(&s, 0.4).unwrap();
        let counts: Vec<(f64, f64)> = pairs
            .iter()
            .map(|(k, l)| (s.cut_count(*k).round(), s.cut_count(*l).round()))
            .collect();
        assert_eq!(counts, vec![(1.0, 2.0), (1.0, 3.0)]);

        let ground = feasible_pairs(&s, 0.0).unwrap();
        assert_eq!(
            ground,
            vec![(CutPoint::shell_end(0), CutPoint::shell_end(0))]
        );
        let top = feasible_pairs(&s, 1.0).unwrap();
        assert_eq!(top, vec![(s.full_cut(), s.full_cut())]);

        // F_2 = 0.5 lies exactly on the slice.
        let on = feasible_pairs(&s, 0.5).unwrap();
        assert!(on.contains(&(CutPoint::shell_end(1), CutPoint::shell_end(1))));
        assert!(feasible_pairs(&s, 1.5).is_err());
    }

    #[test]
    fn three_level_example() {
        let sol = meps_at_energy(&h(3), 0.4).unwrap();
        assert_eq!(sol.counts(), (1.0, 2.0));
        assert_relative_eq!(sol.lambda, 0.2, epsilon = 1e-14);
        assert_relative_eq!(sol.entropy, 0.673_011_667_009_256, epsilon = 1e-12);
        let p = sol.state.populations().unwrap();
        for (a, b) in p.probs().iter().zip([0.6, 0.4, 0.0]) {
            assert_relative_eq!(*a, b, epsilon = 1e-14);
        }
        // The (1, 3) mixture at the same energy is worse.
        let alt =
            TwoBlockState::new(&h(3), CutPoint::shell_end(0), CutPoint::shell_end(2), 0.6).unwrap();
        assert_relative_eq!(alt.entropy(), 0.764_754_419_567_419_6, epsilon = 1e-12);
        assert!(alt.entropy() > sol.entropy);
    }

    #[test]
    fn two_level_passive_states_are_unique() {
        let s = h(2);
        for i in 0..=10 {
            let e = 0.05 * i as f64;
            let sol = meps_at_energy(&s, e).unwrap();
            let p = 1.0 - e;
            let expected = crate::numeric::neg_x_ln_x(p) + crate::numeric::neg_x_ln_x(e);
            assert_relative_eq!(sol.entropy, expected, epsilon = 1e-14);
            assert_relative_eq!(sol.energy, e, epsilon = 1e-14);
        }
    }

    #[test]
    fn endpoints() {
        let s = h(5);
        let top = meps_at_energy(&s, 2.0).unwrap();
        assert_relative_eq!(top.entropy, 5f64.ln(), epsilon = 1e-15);
        let bottom = meps_at_energy(&s, 0.0).unwrap();
        assert_eq!(bottom.entropy, 0.0);
        assert!(meps_at_energy(&s, -0.1).is_err());
    }

    #[test]
    fn entropy_side_endpoints() {
        let s = h(4);
        let ground = meps_at_entropy(&s, 0.0).unwrap();
        assert_eq!(ground.energy, 0.0);
        let uniform = meps_at_entropy(&s, 4f64.ln()).unwrap();
        assert_relative_eq!(uniform.energy, 1.5, epsilon = 1e-15);
        let two = meps_at_entropy(&h(2), 2f64.ln()).unwrap();
        assert_relative_eq!(two.energy, 0.5, epsilon = 1e-15);
        assert!(meps_at_entropy(&s, 2.0).is_err());
        assert!(meps_at_entropy(&s, -0.1).is_err());
    }

    #[test]
    fn entropy_side_hits_target() {
        let s = h(6);
        for i in 1..20 {
            let target = 6f64.ln() * i as f64 / 20.0;
            let sol = meps_at_entropy(&s, target).unwrap();
            assert!(
                (sol.entropy - target).abs() <= DEFAULT_TOL_S,
                "{target} -> {}",
                sol.entropy
            );
        }
    }

    #[test]
    fn solution_fields_match_state() {
        let q = Spectrum::qubit_ensemble(30, 1.0).unwrap();
        for &e in &[0.5, 3.0, 9.0, 14.9] {
            let sol = meps_at_energy(&q, e).unwrap();
            assert_relative_eq!(sol.energy, e, epsilon = 1e-11);
            assert!((0.0..=1.0).contains(&sol.lambda));
        }
    }

    #[test]
    fn dominance_examples() {
        let rows = sigma0_dominance_check(&h(2), &[0.1, 0.3, 0.6]).unwrap();
        assert!(rows.iter().all(|r| r.dominant));

        let s = h(3);
        let s_star = min_entropy(&s, 0.4).unwrap();
        let rows = sigma0_dominance_check(&s, &[s_star]).unwrap();
        assert!(!rows[0].dominant);
        assert!(rows[0].sigma0_entropy > rows[0].entropy);
    }
}

//! Diagonal states over a spectrum: arbitrary population vectors, flat states
//! and two-block mixtures of flat states.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, neg_x_ln_x};
use crate::spectrum::{CutPoint, Spectrum};

/// Tolerance on the normalization of population vectors supplied by callers.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Anything with a well-defined energy and von Neumann entropy (in nats).
pub trait DiagonalState {
    fn spectrum(&self) -> &Spectrum;
    fn entropy(&self) -> f64;
    fn energy(&self) -> f64;
}

/// Probabilities over the individual levels of a spectrum, in ascending
/// energy order.
#[derive(Clone, Debug)]
pub struct PopulationVector {
    spec: Spectrum,
    levels: Vec<f64>,
    probs: Vec<f64>,
}

impl PopulationVector {
    /// Validates and renormalizes `probs`. The spectrum must expand into at
    /// most [`crate::spectrum::MAX_DENSE_DIMENSION`] levels.
    pub fn new(spec: &Spectrum, probs: Vec<f64>) -> Result<Self> {
        let levels = spec.levels()?;
        if probs.len() != levels.len() {
            return Err(Error::InvalidState(format!(
                "{} probabilities for {} levels",
                probs.len(),
                levels.len()
            )));
        }
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !(**p >= 0.0) || !p.is_finite())
        {
            return Err(Error::InvalidState(format!("probability {p} at level {i}")));
        }
        let total = compensated_sum(probs.iter().copied());
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidState(format!("probabilities sum to {total}")));
        }
        let probs = probs.into_iter().map(|p| p / total).collect();
        Ok(Self {
            spec: spec.clone(),
            levels,
            probs,
        })
    }

    /// Reads one probability per line (`#` comments and blank lines skipped).
    pub fn load(spec: &Spectrum, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut probs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let p: f64 = line.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("bad probability `{line}`"),
            })?;
            probs.push(p);
        }
        if probs.is_empty() {
            return Err(Error::EmptyInput(path.to_path_buf()));
        }
        Self::new(spec, probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Level energies aligned with [`Self::probs`].
    pub fn level_energies(&self) -> &[f64] {
        &self.levels
    }

    /// True when populations never increase with energy. Within a degenerate
    /// shell any order is passive.
    pub fn is_passive(&self) -> bool {
        self.probs
            .windows(2)
            .zip(self.levels.windows(2))
            .all(|(p, e)| p[1] <= p[0] || e[1] == e[0])
    }

    /// The passive rearrangement: probabilities sorted nonincreasing against
    /// ascending energies. Ties keep their original order.
    pub fn passify(&self) -> Self {
        let mut probs = self.probs.clone();
        probs.sort_by(|a, b| b.total_cmp(a));
        Self {
            spec: self.spec.clone(),
            levels: self.levels.clone(),
            probs,
        }
    }

    /// Maximal work extractable by a unitary: `E(rho) - E(passify(rho))`.
    pub fn ergotropy(&self) -> f64 {
        let passive = self.passify();
        let terms = self
            .probs
            .iter()
            .zip(&passive.probs)
            .zip(&self.levels)
            .map(|((p, q), e)| (p - q) * (e - self.levels[0]));
        compensated_sum(terms).max(0.0)
    }

    /// Mixes two population vectors over the same spectrum.
    pub fn mix(&self, other: &Self, weight: f64) -> Result<Self> {
        if self.probs.len() != other.probs.len() {
            return Err(Error::InvalidState(
                "mixing states of different dimension".into(),
            ));
        }
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::InvalidParameter(format!("mixing weight {weight}")));
        }
        let probs = self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| weight * a + (1.0 - weight) * b)
            .collect();
        Self::new(&self.spec, probs)
    }
}

impl DiagonalState for PopulationVector {
    fn spectrum(&self) -> &Spectrum {
        &self.spec
    }

    fn entropy(&self) -> f64 {
        compensated_sum(self.probs.iter().map(|&p| neg_x_ln_x(p)))
    }

    fn energy(&self) -> f64 {
        let e0 = self.levels[0];
        e0 + compensated_sum(
            self.probs
                .iter()
                .zip(&self.levels)
                .map(|(p, e)| p * (e - e0)),
        )
    }
}

/// Uniform state over the levels below a cut.
#[derive(Clone, Debug)]
pub struct FlatState {
    spec: Spectrum,
    cut: CutPoint,
}

impl FlatState {
    pub fn new(spec: &Spectrum, cut: CutPoint) -> Result<Self> {
        spec.validate_cut(cut)?;
        Ok(Self {
            spec: spec.clone(),
            cut,
        })
    }

    /// Flat state over the lowest `count` levels.
    pub fn with_count(spec: &Spectrum, count: f64) -> Result<Self> {
        Self::new(spec, spec.cut_at_count(count)?)
    }

    pub fn cut(&self) -> CutPoint {
        self.cut
    }

    pub fn count(&self) -> f64 {
        self.spec.cut_count(self.cut)
    }

    /// Expands to per-level populations; requires an integral level count.
    pub fn populations(&self) -> Result<PopulationVector> {
        let k = integral_count(self.count())?;
        let d = self.spec.levels()?.len();
        let mut probs = vec![0.0; d];
        probs[..k].iter_mut().for_each(|p| *p = 1.0 / k as f64);
        PopulationVector::new(&self.spec, probs)
    }
}

impl DiagonalState for FlatState {
    fn spectrum(&self) -> &Spectrum {
        &self.spec
    }

    fn entropy(&self) -> f64 {
        self.spec
            .ln_count_at(self.cut.shell, self.cut.frac)
            .max(0.0)
    }

    fn energy(&self) -> f64 {
        self.spec.ground_energy() + self.spec.mean_excitation_at(self.cut.shell, self.cut.frac)
    }
}

/// `lambda * omega_low + (1 - lambda) * omega_high` with `low <= high`.
#[derive(Clone, Debug)]
pub struct TwoBlockState {
    spec: Spectrum,
    low: CutPoint,
    high: CutPoint,
    lambda: f64,
}

impl TwoBlockState {
    pub fn new(spec: &Spectrum, low: CutPoint, high: CutPoint, lambda: f64) -> Result<Self> {
        spec.validate_cut(low)?;
        spec.validate_cut(high)?;
        if low.order_key() > high.order_key() {
            return Err(Error::InvalidCut(format!(
                "low cut {low:?} lies above high cut {high:?}"
            )));
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidParameter(format!(
                "weight {lambda} outside [0, 1]"
            )));
        }
        Ok(Self {
            spec: spec.clone(),
            low,
            high,
            lambda,
        })
    }

    pub fn low(&self) -> CutPoint {
        self.low
    }

    pub fn high(&self) -> CutPoint {
        self.high
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Expands to per-level populations; requires integral cut counts.
    pub fn populations(&self) -> Result<PopulationVector> {
        let k = integral_count(self.spec.cut_count(self.low))?;
        let l = integral_count(self.spec.cut_count(self.high))?;
        let d = self.spec.levels()?.len();
        let q2 = (1.0 - self.lambda) / l as f64;
        let q1 = self.lambda / k as f64 + q2;
        let mut probs = vec![0.0; d];
        probs[..k].iter_mut().for_each(|p| *p = q1);
        probs[k..l].iter_mut().for_each(|p| *p = q2);
        PopulationVector::new(&self.spec, probs)
    }
}

impl DiagonalState for TwoBlockState {
    fn spectrum(&self) -> &Spectrum {
        &self.spec
    }

    fn entropy(&self) -> f64 {
        two_block_entropy(&self.spec, self.low, self.high, self.lambda)
    }

    fn energy(&self) -> f64 {
        let s = &self.spec;
        let fk = s.mean_excitation_at(self.low.shell, self.low.frac);
        let fl = s.mean_excitation_at(self.high.shell, self.high.frac);
        s.ground_energy() + self.lambda * fk + (1.0 - self.lambda) * fl
    }
}

/// Entropy of `lambda * omega_k + (1 - lambda) * omega_l` in the form
/// `H(m1, m2) + m1 ln k + m2 ln(l - k)`, where `m1`, `m2` are the block masses.
pub(crate) fn two_block_entropy(
    spec: &Spectrum,
    low: CutPoint,
    high: CutPoint,
    lambda: f64,
) -> f64 {
    let ln_k = spec.ln_count_at(low.shell, low.frac).max(0.0);
    let ln_l = spec.ln_count_at(high.shell, high.frac).max(ln_k);
    let ln_gap = spec.ln_count_between(low, high);
    two_block_entropy_ln(ln_k, ln_l, ln_gap, 1.0 - lambda)
}

/// The same closed form from `ln k`, `ln l`, `ln(l - k)` and the high-block
/// weight `mu = 1 - lambda`.
pub(crate) fn two_block_entropy_ln(ln_k: f64, ln_l: f64, ln_gap: f64, mu: f64) -> f64 {
    let m2 = mu * (ln_gap - ln_l).exp().min(1.0);
    let m1 = 1.0 - m2;
    let mut s = neg_x_ln_x(m1) + neg_x_ln_x(m2) + m1 * ln_k;
    if m2 > 0.0 {
        s += m2 * ln_gap;
    }
    s.max(0.0)
}

fn integral_count(count: f64) -> Result<usize> {
    let k = count.round();
    if (count - k).abs() > 1e-9 * count.max(1.0) || k < 1.0 {
        return Err(Error::InvalidCut(format!(
            "count {count} is not a whole number of levels"
        )));
    }
    Ok(k as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn h4() -> Spectrum {
        Spectrum::equally_spaced(4, 1.0).unwrap()
    }

    #[test]
    fn entropy_examples() {
        let h = Spectrum::equally_spaced(3, 1.0).unwrap();
        let rho = PopulationVector::new(&h, vec![0.6, 0.4, 0.0]).unwrap();
        assert_relative_eq!(rho.entropy(), 0.673_011_667_009_256, epsilon = 1e-12);

        let uniform = FlatState::new(&h4(), h4().full_cut()).unwrap();
        assert_relative_eq!(uniform.entropy(), 4f64.ln(), epsilon = 1e-15);

        let tb =
            TwoBlockState::new(&h, CutPoint::shell_end(0), CutPoint::shell_end(1), 0.2).unwrap();
        assert_relative_eq!(tb.entropy(), rho.entropy(), epsilon = 1e-14);
        let pure =
            TwoBlockState::new(&h, CutPoint::shell_end(1), CutPoint::shell_end(2), 1.0).unwrap();
        assert_relative_eq!(pure.entropy(), 2f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn energy_examples() {
        let h = h4();
        let uniform = FlatState::new(&h, h.full_cut()).unwrap();
        assert_relative_eq!(uniform.energy(), 1.5, epsilon = 1e-15);
        let rho = PopulationVector::new(&h, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_relative_eq!(rho.energy(), 2.0, epsilon = 1e-15);
        let tb = TwoBlockState::new(&h, CutPoint::shell_end(0), h.full_cut(), 0.5).unwrap();
        assert_relative_eq!(tb.energy(), 0.75, epsilon = 1e-15);
    }

    #[test]
    fn passify_examples() {
        let h = h4();
        let rho = PopulationVector::new(&h, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(rho.passify().probs(), &[0.4, 0.3, 0.2, 0.1]);
        let sorted = rho.passify();
        assert_eq!(sorted.passify().probs(), sorted.probs());

        let h3 = Spectrum::equally_spaced(3, 1.0).unwrap();
        let tie = PopulationVector::new(&h3, vec![0.5, 0.0, 0.5]).unwrap();
        assert_eq!(tie.passify().probs(), &[0.5, 0.5, 0.0]);
    }

    #[test]
    fn ergotropy_examples() {
        let rho = PopulationVector::new(&h4(), vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_relative_eq!(rho.ergotropy(), 1.0, epsilon = 1e-15);

        let h2 = Spectrum::equally_spaced(2, 1.0).unwrap();
        let a = PopulationVector::new(&h2, vec![0.8, 0.2]).unwrap();
        assert_eq!(a.ergotropy(), 0.0);
        let b = PopulationVector::new(&h2, vec![0.2, 0.8]).unwrap();
        assert_relative_eq!(b.ergotropy(), 0.6, epsilon = 1e-15);

        let flat = FlatState::with_count(&h4(), 3.0)
            .unwrap()
            .populations()
            .unwrap();
        assert_eq!(flat.ergotropy(), 0.0);
        assert!(flat.is_passive());
    }

    #[test]
    fn two_block_expansion_matches_closed_form() {
        let q = Spectrum::qubit_ensemble(4, 1.0).unwrap();
        for &(k, l, lam) in &[
            (1.0, 16.0, 0.3),
            (3.0, 7.0, 0.9),
            (5.0, 5.0, 0.5),
            (2.0, 11.0, 0.0),
        ] {
            let tb = TwoBlockState::new(
                &q,
                q.cut_at_count(k).unwrap(),
                q.cut_at_count(l).unwrap(),
                lam,
            )
            .unwrap();
            let dense = tb.populations().unwrap();
            assert_relative_eq!(tb.entropy(), dense.entropy(), epsilon = 1e-12);
            assert_relative_eq!(tb.energy(), dense.energy(), epsilon = 1e-12);
        }
    }

    #[test]
    fn rejects_invalid_states() {
        let h = h4();
        assert!(PopulationVector::new(&h, vec![0.5, 0.5]).is_err());
        assert!(PopulationVector::new(&h, vec![0.5, 0.5, 0.5, -0.5]).is_err());
        assert!(PopulationVector::new(&h, vec![0.5, 0.5, 0.5, 0.5]).is_err());
        assert!(TwoBlockState::new(&h, h.full_cut(), CutPoint::shell_end(0), 0.5).is_err());
        assert!(TwoBlockState::new(&h, CutPoint::shell_end(0), h.full_cut(), 1.5).is_err());
    }

    #[test]
    fn load_renormalizes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rho.txt");
        std::fs::write(&path, "# populations\n0.1\n0.2\n0.3\n0.4000000001\n").unwrap();
        let rho = PopulationVector::load(&h4(), &path).unwrap();
        assert_relative_eq!(rho.probs().iter().sum::<f64>(), 1.0, epsilon = 1e-15);

        std::fs::write(&path, "0.1\nx\n").unwrap();
        assert!(matches!(
            PopulationVector::load(&h4(), &path),
            Err(Error::Parse { line: 2, .. })
        ));
        std::fs::write(&path, "").unwrap();
        assert!(matches!(
            PopulationVector::load(&h4(), &path),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn huge_two_block_entropy_is_finite() {
        let q = Spectrum::qubit_ensemble(200, 1.0).unwrap();
        let tb = TwoBlockState::new(&q, q.ground_cut(), q.full_cut(), 0.5).unwrap();
        let ln_d = 200.0 * 2f64.ln();
        // Masses: m2 = 0.5 (1 - 2^-200), m1 = 1 - m2.
        assert_relative_eq!(tb.entropy(), 2f64.ln() + 0.5 * ln_d, epsilon = 1e-12);
        assert_relative_eq!(tb.energy(), 50.0, epsilon = 1e-12);
    }
}

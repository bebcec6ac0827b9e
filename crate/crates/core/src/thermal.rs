//! Gibbs states, entropy- and energy-matched temperatures, and the work bounds
//! built from comparing a state with its matched Gibbs state and with the
//! most energetic passive state of the same entropy.

use crate::error::{Error, Result};
use crate::meps::meps_at_entropy;
use crate::numeric::{bisect_predicate, compensated_sum, log_sum_exp};
use crate::spectrum::Spectrum;
use crate::states::{DiagonalState, PopulationVector};

/// Default entropy tolerance for temperature matching.
pub const DEFAULT_TOL_ROOT: f64 = 1e-10;

/// Thermal state `exp(-beta H) / Z`. `beta = inf` is the ground-shell state.
#[derive(Clone, Debug)]
pub struct GibbsState {
    spec: Spectrum,
    beta: f64,
    log_partition: f64,
    energy: f64,
    entropy: f64,
}

impl GibbsState {
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `ln Z` with energies measured from the ground level.
    pub fn log_partition(&self) -> f64 {
        self.log_partition
    }

    /// Probability of a single level in shell `j`.
    pub fn level_probability(&self, j: usize) -> f64 {
        if self.beta.is_infinite() {
            return if j == 0 {
                (-self.spec.ln_degeneracy(0)).exp()
            } else {
                0.0
            };
        }
        (-self.beta * self.spec.excitation(j) - self.log_partition).exp()
    }

    /// Per-level populations; the spectrum must expand into levels.
    pub fn populations(&self) -> Result<PopulationVector> {
        let mut probs = Vec::new();
        for j in 0..self.spec.num_shells() {
            let g = self.spec.exact_degeneracy(j).ok_or_else(|| {
                Error::NotDense(format!("shell {j} has a non-integer degeneracy"))
            })?;
            let p = self.level_probability(j);
            probs.extend(std::iter::repeat_n(p, g as usize));
        }
        PopulationVector::new(&self.spec, probs)
    }

    /// `F_beta[tau] = E - S / beta` at an arbitrary (bath) inverse temperature.
    pub fn free_energy(&self, beta: f64) -> f64 {
        free_energy(self, beta)
    }
}

impl DiagonalState for GibbsState {
    fn spectrum(&self) -> &Spectrum {
        &self.spec
    }

    fn entropy(&self) -> f64 {
        self.entropy
    }

    fn energy(&self) -> f64 {
        self.energy
    }
}

/// Thermal state at inverse temperature `beta >= 0` (`inf` allowed).
pub fn gibbs(spec: &Spectrum, beta: f64) -> Result<GibbsState> {
    if beta.is_nan() || beta < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "need beta >= 0, got {beta}"
        )));
    }
    let m = spec.num_shells();
    if beta.is_infinite() {
        return Ok(GibbsState {
            spec: spec.clone(),
            beta,
            log_partition: spec.ln_degeneracy(0),
            energy: spec.ground_energy(),
            entropy: spec.ln_degeneracy(0).max(0.0),
        });
    }
    let log_weights: Vec<f64> = (0..m)
        .map(|j| spec.ln_degeneracy(j) - beta * spec.excitation(j))
        .collect();
    let ln_z = log_sum_exp(&log_weights);
    let mean_excitation = compensated_sum(
        log_weights
            .iter()
            .enumerate()
            .map(|(j, lw)| (lw - ln_z).exp() * spec.excitation(j)),
    );
    let entropy = (beta * mean_excitation + ln_z).clamp(0.0, spec.ln_dimension());
    Ok(GibbsState {
        spec: spec.clone(),
        beta,
        log_partition: ln_z,
        energy: spec.ground_energy() + mean_excitation,
        entropy,
    })
}

fn thermal_entropy(spec: &Spectrum, beta: f64) -> f64 {
    gibbs(spec, beta).map_or(f64::NAN, |g| g.entropy)
}

fn thermal_energy(spec: &Spectrum, beta: f64) -> f64 {
    gibbs(spec, beta).map_or(f64::NAN, |g| g.energy)
}

/// Grows `hi` until `done(hi)` holds.
fn expand_bracket(spec: &Spectrum, done: impl Fn(f64) -> bool) -> f64 {
    let scale = (1..spec.num_shells())
        .map(|j| spec.excitation(j))
        .find(|e| *e > 0.0)
        .unwrap_or(1.0);
    let mut hi = 1.0 / scale;
    while !done(hi) && hi < f64::MAX / 4.0 {
        hi *= 2.0;
    }
    hi
}

/// Inverse temperature whose Gibbs state has entropy `entropy`.
///
/// Returns `0` at the maximal entropy and `inf` when `entropy` does not
/// exceed the ground-shell entropy. `tol = 0` bisects to full precision.
pub fn beta_for_entropy(spec: &Spectrum, entropy: f64, tol: f64) -> Result<f64> {
    let max = spec.ln_dimension();
    let slack = 1e-12 * max.max(1.0);
    if !(entropy >= -slack && entropy <= max + slack) {
        return Err(Error::EntropyOutOfRange { entropy, max });
    }
    if entropy >= max {
        return Ok(0.0);
    }
    if entropy <= spec.ln_degeneracy(0).max(0.0) {
        return Ok(f64::INFINITY);
    }
    let hi = expand_bracket(spec, |b| thermal_entropy(spec, b) < entropy);
    let pred = |b: f64| {
        let s = thermal_entropy(spec, b);
        s >= entropy
    };
    if tol > 0.0 {
        let (mut lo, mut hi) = (0.0, hi);
        loop {
            let mid = lo + 0.5 * (hi - lo);
            let s = thermal_entropy(spec, mid);
            if (s - entropy).abs() <= tol || mid <= lo || mid >= hi {
                return Ok(mid);
            }
            if s >= entropy {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    let (lo, hi) = bisect_predicate(pred, 0.0, hi, 0.0);
    let closer = |b: f64| (thermal_entropy(spec, b) - entropy).abs();
    Ok(if closer(hi) < closer(lo) { hi } else { lo })
}

/// Inverse temperature whose Gibbs state has energy `energy`, to full
/// precision. `inf` at the ground energy, `0` at the spectrum mean.
pub fn beta_for_energy(spec: &Spectrum, energy: f64) -> Result<f64> {
    let (min, max) = (spec.ground_energy(), spec.mean_energy());
    let slack = 1e-12 * (max - min).abs().max(1.0);
    if !(energy >= min - slack && energy <= max + slack) {
        return Err(Error::EnergyOutOfRange { energy, min, max });
    }
    if energy >= max.min(thermal_energy(spec, 0.0)) {
        return Ok(0.0);
    }
    if energy <= min {
        return Ok(f64::INFINITY);
    }
    let hi = expand_bracket(spec, |b| thermal_energy(spec, b) < energy);
    let (lo, hi) = bisect_predicate(|b| thermal_energy(spec, b) >= energy, 0.0, hi, 0.0);
    let closer = |b: f64| (thermal_energy(spec, b) - energy).abs();
    Ok(if closer(hi) < closer(lo) { hi } else { lo })
}

/// The Gibbs state with the given entropy.
pub fn gibbs_at_entropy(spec: &Spectrum, entropy: f64) -> Result<GibbsState> {
    gibbs(spec, beta_for_entropy(spec, entropy, 0.0)?)
}

/// Maximal entropy at fixed energy, attained by the Gibbs state.
pub fn thermal_entropy_at_energy(spec: &Spectrum, energy: f64) -> Result<f64> {
    Ok(gibbs(spec, beta_for_energy(spec, energy)?)?.entropy)
}

/// `F_beta[rho] = E(rho) - S(rho) / beta`.
pub fn free_energy(state: &impl DiagonalState, beta: f64) -> f64 {
    state.energy() - state.entropy() / beta
}

fn require_passive(sigma: &PopulationVector) -> Result<()> {
    if sigma.is_passive() {
        Ok(())
    } else {
        Err(Error::NotPassive("populations increase with energy".into()))
    }
}

/// Work unlocked per copy in the many-copy limit: the energy of `sigma` above
/// the Gibbs state of equal entropy. Nonnegative because Gibbs states have
/// the least energy at given entropy; round-off below zero is clipped.
pub fn activatable_work(sigma: &impl DiagonalState) -> Result<f64> {
    let tau = gibbs_at_entropy(sigma.spectrum(), sigma.entropy())?;
    Ok((sigma.energy() - tau.energy).max(0.0))
}

/// [`activatable_work`] for population vectors, which are checked for
/// passivity first.
pub fn activatable_work_checked(sigma: &PopulationVector) -> Result<f64> {
    require_passive(sigma)?;
    activatable_work(sigma)
}

/// Energy gap between the most energetic passive state and the Gibbs state at
/// entropy `entropy`; an upper bound on the activatable work.
pub fn delta_max(spec: &Spectrum, entropy: f64) -> Result<f64> {
    let meps = meps_at_entropy(spec, entropy)?;
    let tau = gibbs_at_entropy(spec, entropy)?;
    Ok(meps.energy - tau.energy)
}

/// Bounds on the ergotropy of `rho` from its entropy alone:
/// `(E(rho) - E(meps), E(rho) - E(gibbs))`.
pub fn work_bounds(rho: &PopulationVector) -> Result<(f64, f64)> {
    let spec = rho.spectrum();
    let s = rho.entropy();
    let e = rho.energy();
    let meps = meps_at_entropy(spec, s)?;
    let tau = gibbs_at_entropy(spec, s)?;
    Ok((e - meps.energy, e - tau.energy))
}

/// Terms of the free-energy identity
/// `F[sigma] - F[tau_bath] = (E(sigma) - E(tau')) + F[tau'] - F[tau_bath]`,
/// with `tau'` the Gibbs state of the same entropy as `sigma` and every free
/// energy taken at the bath temperature.
///
/// Below the ground-shell entropy no Gibbs state matches; `tau'` is then the
/// point `(E_0, S(sigma))` on the flat extension of the thermal boundary.
#[derive(Clone, Copy, Debug)]
pub struct BathTerms {
    pub beta_bath: f64,
    /// `F[sigma] - F[tau_bath]`.
    pub free_energy_gap: f64,
    /// `E(sigma) - E(tau')`.
    pub energy_gap: f64,
    /// `F[tau'] = E(tau') - S(sigma) / beta_bath`.
    pub matched_free_energy: f64,
    /// `F[tau_bath]`.
    pub bath_free_energy: f64,
}

impl BathTerms {
    /// Left side minus right side of the identity.
    pub fn residual(&self) -> f64 {
        self.free_energy_gap - (self.energy_gap + self.matched_free_energy - self.bath_free_energy)
    }
}

pub fn bath_decomposition(sigma: &impl DiagonalState, beta_bath: f64) -> Result<BathTerms> {
    if !(beta_bath > 0.0 && beta_bath.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "need a finite bath beta > 0, got {beta_bath}"
        )));
    }
    let spec = sigma.spectrum();
    let tau_bath = gibbs(spec, beta_bath)?;
    let tau_matched = gibbs_at_entropy(spec, sigma.entropy())?;
    let bath_free_energy = free_energy(&tau_bath, beta_bath);
    Ok(BathTerms {
        beta_bath,
        free_energy_gap: free_energy(sigma, beta_bath) - bath_free_energy,
        energy_gap: sigma.energy() - tau_matched.energy,
        matched_free_energy: tau_matched.energy - sigma.entropy() / beta_bath,
        bath_free_energy,
    })
}

/// Every bound for one state.
#[derive(Clone, Debug)]
pub struct BoundReport {
    pub energy: f64,
    pub entropy: f64,
    pub ergotropy: f64,
    /// Activatable work of the passive rearrangement.
    pub w_act: f64,
    pub delta_max: f64,
    pub weight_lower: f64,
    pub weight_upper: f64,
    pub bath: Option<BathTerms>,
}

impl BoundReport {
    /// Descriptions of the inequalities that fail beyond round-off.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.weight_lower > self.ergotropy + 1e-10 {
            out.push(format!(
                "lower bound {} exceeds ergotropy {}",
                self.weight_lower, self.ergotropy
            ));
        }
        if self.ergotropy > self.weight_upper + 1e-10 {
            out.push(format!(
                "ergotropy {} exceeds upper bound {}",
                self.ergotropy, self.weight_upper
            ));
        }
        if self.w_act > self.delta_max + 1e-9 {
            out.push(format!(
                "activatable work {} exceeds delta_max {}",
                self.w_act, self.delta_max
            ));
        }
        if let Some(b) = &self.bath {
            if b.residual().abs() > 1e-10 {
                out.push(format!("free-energy identity residual {}", b.residual()));
            }
        }
        out
    }
}

pub fn bound_report(rho: &PopulationVector, beta_bath: Option<f64>) -> Result<BoundReport> {
    let spec = rho.spectrum();
    let passive = rho.passify();
    let s = rho.entropy();
    let (weight_lower, weight_upper) = work_bounds(rho)?;
    Ok(BoundReport {
        energy: rho.energy(),
        entropy: s,
        ergotropy: rho.ergotropy(),
        w_act: activatable_work(&passive)?,
        delta_max: delta_max(spec, s)?,
        weight_lower,
        weight_upper,
        bath: beta_bath
            .map(|b| bath_decomposition(&passive, b))
            .transpose()?,
    })
}

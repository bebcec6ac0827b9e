//! Leading-order entropy-energy curves for continuum densities of states.
//!
//! The family `sigma0 = (1 - lam) |0><0| + lam omega_{E_m}` mixes the ground
//! level with the flat state over the whole band `[0, E_m]`. Remainders of
//! order `1 / N(E_m)` and `exp(-b E_m)` are dropped.

use crate::error::{Error, Result};
use crate::numeric::neg_x_ln_x;
use crate::spectrum::Spectrum;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DosKind {
    /// `g_E = c E^a`.
    Polynomial { a: f64, c: f64 },
    /// `g_E = e^{b E}`.
    Exponential { b: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DosModel {
    pub kind: DosKind,
    pub e_max: f64,
}

impl DosModel {
    pub fn polynomial(a: f64, c: f64, e_max: f64) -> Result<Self> {
        if !(a.is_finite() && a >= 0.0) {
            return Err(Error::InvalidParameter(format!("need a >= 0, got {a}")));
        }
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidParameter(format!("need c > 0, got {c}")));
        }
        Self::checked(DosKind::Polynomial { a, c }, e_max)
    }

    pub fn exponential(b: f64, e_max: f64) -> Result<Self> {
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::InvalidParameter(format!("need b > 0, got {b}")));
        }
        Self::checked(DosKind::Exponential { b }, e_max)
    }

    fn checked(kind: DosKind, e_max: f64) -> Result<Self> {
        if !(e_max.is_finite() && e_max > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "need E_m > 0, got {e_max}"
            )));
        }
        Ok(Self { kind, e_max })
    }

    /// `ln N(E_m)`, the log of the number of levels in the band.
    pub fn ln_count(&self) -> f64 {
        match self.kind {
            DosKind::Polynomial { a, c } => (c / (a + 1.0)).ln() + (1.0 + a) * self.e_max.ln(),
            DosKind::Exponential { b } => {
                // ln((e^{bE} - 1) / b) without overflow
                let x = b * self.e_max;
                x + (-(-x).exp_m1()).ln() - b.ln()
            }
        }
    }

    /// Discretization of this density with `levels` shells.
    pub fn discretize(&self, levels: usize) -> Result<Spectrum> {
        match self.kind {
            DosKind::Polynomial { a, c } => Spectrum::polynomial_dos(a, c, self.e_max, levels),
            DosKind::Exponential { b } => Spectrum::exponential_dos(b, self.e_max, levels),
        }
    }
}

fn check_lambda(lam: f64) -> Result<()> {
    if (0.0..=1.0).contains(&lam) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "need lambda in [0, 1], got {lam}"
        )))
    }
}

/// `H(lam) = -lam ln lam - (1 - lam) ln(1 - lam)`.
pub fn binary_entropy(lam: f64) -> Result<f64> {
    check_lambda(lam)?;
    Ok(neg_x_ln_x(lam) + neg_x_ln_x(1.0 - lam))
}

pub fn sigma0_energy(model: &DosModel, lam: f64) -> Result<f64> {
    check_lambda(lam)?;
    Ok(match model.kind {
        DosKind::Polynomial { a, .. } => lam * (a + 1.0) / (a + 2.0) * model.e_max,
        DosKind::Exponential { b } => lam * (model.e_max - 1.0 / b),
    })
}

pub fn sigma0_entropy(model: &DosModel, lam: f64) -> Result<f64> {
    let h = binary_entropy(lam)?;
    if lam == 0.0 {
        return Ok(0.0);
    }
    Ok(h + lam * model.ln_count())
}

/// Entropy of the family member with energy `energy`.
pub fn s_of_e(model: &DosModel, energy: f64) -> Result<f64> {
    let top = sigma0_energy(model, 1.0)?;
    if !(top > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "band too narrow: E(sigma0) at lambda = 1 is {top}"
        )));
    }
    if !(0.0..=top).contains(&energy) {
        return Err(Error::EnergyOutOfRange {
            energy,
            min: 0.0,
            max: top,
        });
    }
    sigma0_entropy(model, (energy / top).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{E, LN_2};

    #[test]
    fn binary_entropy_values() {
        assert_eq!(binary_entropy(0.5).unwrap(), LN_2);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert_relative_eq!(
            binary_entropy(0.2).unwrap(),
            0.500_402_423_538_188,
            epsilon = 1e-12
        );
        assert!(binary_entropy(1.5).is_err());
        assert!(binary_entropy(-0.1).is_err());
    }

    #[test]
    fn energies() {
        let p = DosModel::polynomial(0.0, 1.0, 2.0).unwrap();
        assert_relative_eq!(sigma0_energy(&p, 1.0).unwrap(), 1.0, epsilon = 1e-15);
        let x = DosModel::exponential(1.0, 10.0).unwrap();
        assert_relative_eq!(sigma0_energy(&x, 0.5).unwrap(), 4.5, epsilon = 1e-15);
        assert_eq!(sigma0_energy(&p, 0.0).unwrap(), 0.0);
        assert_eq!(sigma0_energy(&x, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn entropies() {
        let p = DosModel::polynomial(0.0, 1.0, E).unwrap();
        assert_relative_eq!(
            sigma0_entropy(&p, 0.5).unwrap(),
            LN_2 + 0.5,
            epsilon = 1e-14
        );
        assert_eq!(sigma0_entropy(&p, 0.0).unwrap(), 0.0);
        assert_relative_eq!(sigma0_entropy(&p, 1.0).unwrap(), 1.0, epsilon = 1e-15);

        let x = DosModel::exponential(2.0, 3.0).unwrap();
        let direct = ((6f64.exp() - 1.0) / 2.0).ln();
        assert_relative_eq!(x.ln_count(), direct, epsilon = 1e-13);
        // No overflow for huge bands.
        let big = DosModel::exponential(1.0, 1e4).unwrap();
        assert_relative_eq!(big.ln_count(), 1e4, epsilon = 1e-9);
    }

    #[test]
    fn s_of_e_limits() {
        let p = DosModel::polynomial(1.0, 1.0, 100.0).unwrap();
        assert_eq!(s_of_e(&p, 0.0).unwrap(), 0.0);
        assert!(s_of_e(&p, 1e3).is_err());

        let e = 1.0;
        let mut last = f64::INFINITY;
        for e_max in [1e2, 1e3, 1e4, 1e5, 1e6] {
            let s = s_of_e(&DosModel::polynomial(1.0, 1.0, e_max).unwrap(), e).unwrap();
            assert!(s < last);
            last = s;
        }
        assert!(last < 1e-3);

        for e_max in [1e2, 1e3, 1e4] {
            let x = DosModel::exponential(1.0, e_max).unwrap();
            let ratio = s_of_e(&x, 1.0).unwrap() / 1.0;
            assert!((ratio - 1.0).abs() < 20.0 / e_max.sqrt(), "{e_max} {ratio}");
        }
    }

    #[test]
    fn narrow_exponential_band_rejected() {
        let x = DosModel::exponential(1.0, 0.5).unwrap();
        assert!(s_of_e(&x, 0.1).is_err());
    }
}

//! Most energetic passive states of finite spectra: the least-entropy passive
//! states at fixed energy, computed on degenerate shells in log space, along
//! with Gibbs matching, ergotropy and the activatable-work bounds built on them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotic;
mod error;
pub mod meps;
pub mod numeric;
pub mod spectrum;
pub mod states;
pub mod thermal;

pub use asymptotic::{binary_entropy, s_of_e, sigma0_energy, sigma0_entropy, DosKind, DosModel};
pub use error::{Error, Result};
pub use meps::{meps_at_energy, meps_at_entropy, MepsSolution};
pub use spectrum::{CountModel, CutPoint, Spectrum};
pub use states::{DiagonalState, FlatState, PopulationVector, TwoBlockState};
pub use thermal::{
    activatable_work, beta_for_entropy, delta_max, gibbs, work_bounds, BoundReport, GibbsState,
};

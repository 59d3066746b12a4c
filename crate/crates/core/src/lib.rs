//! Heterodyne photodetection spectra of a linearized cavity optomechanical
//! system under classical and quantum noise models, sideband thermometry,
//! laser-cooling limits and a Langevin Monte Carlo oracle.
//!
//! All rates are expressed in units of the mechanical damping rate.

pub mod cooling;
pub mod error;
pub mod heterodyne;
pub mod montecarlo;
pub mod params;
pub mod response;

pub use error::{Error, Result};
pub use params::{
    DerivedCoupling, DetectorModel, DetectorParams, FieldKind, FieldNoise, LaserNoise, Limits,
    SystemParams, ValidatedParams,
};
